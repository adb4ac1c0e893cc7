//! Toy model of harmonic photon statistics: a power-law response
//! `|ε|^{2p}` averaged over a Gaussian field distribution of variance σ.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, AdaptiveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyModelParams {
    /// Exponent of the intensity response `|ε|^{2p}`.
    pub p: f64,
    /// Variance of the field distribution (a.u.²).
    pub sigma: f64,
    /// Mean field ε̄ (a.u.).
    pub mean: f64,
}

impl ToyModelParams {
    fn check(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidConfig("toy variance must be positive".into()));
        }
        if !(self.p >= 0.0) || !self.p.is_finite() {
            return Err(Error::InvalidConfig("toy exponent must be non-negative".into()));
        }
        if !self.mean.is_finite() {
            return Err(Error::InvalidConfig("toy mean must be finite".into()));
        }
        Ok(())
    }
}

/// Half-width of the integration range in standard deviations.
const RANGE: f64 = 12.0;

fn quad_opts() -> AdaptiveOptions {
    AdaptiveOptions {
        rel_tol: 1e-12,
        abs_tol: 0.0,
        max_intervals: 20_000,
        initial_pieces: 24,
    }
}

/// `g² = ∫φ(u)·r(u)² du / (∫φ(u)·r(u) du)²` for the standard normal density φ
/// and a response given through `ln r(u)`. The integrals are taken in
/// log-shifted form so large exponents cannot overflow.
fn g2_from_log_response<F: Fn(f64) -> f64>(log_r: F, kink: f64) -> Result<f64> {
    let exponent = |u: f64, k: f64| -0.5 * u * u + k * log_r(u);
    // shift by the largest exponent seen on a fine scan
    let scan = |k: f64| {
        (0..=4800)
            .map(|i| exponent(-RANGE + i as f64 * (2.0 * RANGE / 4800.0), k))
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let (shift1, shift2) = (scan(1.0), scan(2.0));
    let integral = |k: f64, shift: f64| -> Result<f64> {
        let f = |u: f64| {
            let e = exponent(u, k) - shift;
            if e.is_nan() { 0.0 } else { e.exp() }
        };
        let mut total = 0.0;
        let mut edges = vec![-RANGE];
        if kink > -RANGE && kink < RANGE {
            edges.push(kink);
        }
        edges.push(RANGE);
        for pair in edges.windows(2) {
            total += integrate_adaptive(&f, pair[0], pair[1], quad_opts())?;
        }
        Ok(total)
    };
    let i1 = integral(1.0, shift1)?;
    let i2 = integral(2.0, shift2)?;
    // √(2π)·I₂/I₁² with the shifts restored
    let log_g2 = 0.5 * (2.0 * PI).ln() + i2.ln() + shift2 - 2.0 * (i1.ln() + shift1);
    Ok(log_g2.exp())
}

/// g² of the toy model by adaptive quadrature over ε̄ ± 12√σ.
pub fn g2_toy_quadrature(params: &ToyModelParams) -> Result<f64> {
    params.check()?;
    if params.p == 0.0 {
        return Ok(1.0);
    }
    // ε = ε̄ + √σ·u; σ^p cancels between numerator and denominator
    let m = params.mean / params.sigma.sqrt();
    let two_p = 2.0 * params.p;
    g2_from_log_response(|u| two_p * (m + u).abs().ln(), -m)
}

/// `√π·Γ(½ + 2p)/Γ(½ + p)²`, the toy g² at ε̄ = 0 for any σ.
pub fn g2_bsv_closed_form(p: f64) -> f64 {
    (0.5 * PI.ln() + ln_gamma(0.5 + 2.0 * p) - 2.0 * ln_gamma(0.5 + p)).exp()
}

/// The ε̄ = 0 closed form as printed with a leading factor σ. It agrees with
/// the defining integral only at σ = 1.
pub fn g2_bsv_printed(p: f64, sigma: f64) -> f64 {
    sigma * g2_bsv_closed_form(p)
}

/// Toy g² with the field response `ε^p` damped by `exp(-(|ε|/ε_crit)^s)`.
pub fn g2_toy_depleted(params: &ToyModelParams, critical_field: f64, exponent: f64) -> Result<f64> {
    params.check()?;
    if !(critical_field > 0.0) {
        return Err(Error::InvalidConfig("critical field must be positive".into()));
    }
    if !(exponent > 0.0) || !exponent.is_finite() {
        return Err(Error::InvalidConfig("suppression exponent must be positive".into()));
    }
    let root = params.sigma.sqrt();
    let m = params.mean / root;
    let two_p = 2.0 * params.p;
    g2_from_log_response(
        |u| {
            let field = root * (m + u).abs();
            let damping = -2.0 * (field / critical_field).powf(exponent);
            if two_p == 0.0 {
                damping
            } else {
                two_p * field.ln() + damping
            }
        },
        -m,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn toy(p: f64, sigma: f64, mean: f64) -> ToyModelParams {
        ToyModelParams { p, sigma, mean }
    }

    /// (4p-1)!!/((2p-1)!!)² for integer p
    fn double_factorial_ratio(p: u32) -> f64 {
        let df = |n: i64| (1..=n).rev().step_by(2).map(|k| k as f64).product::<f64>();
        df(4 * p as i64 - 1) / df(2 * p as i64 - 1).powi(2)
    }

    #[test]
    fn closed_form_exact_values() {
        assert_relative_eq!(g2_bsv_closed_form(0.0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(g2_bsv_closed_form(1.0), 3.0, max_relative = 1e-13);
        assert_relative_eq!(g2_bsv_closed_form(2.0), 105.0 / 9.0, max_relative = 1e-13);
        for p in 1..10 {
            assert_relative_eq!(g2_bsv_closed_form(p as f64), double_factorial_ratio(p), max_relative = 1e-12);
        }
        assert!(g2_bsv_closed_form(60.0) > 1e15);
        assert_eq!(g2_bsv_printed(2.0, 1.0), g2_bsv_closed_form(2.0));
    }

    #[test]
    fn oracle_equivalence() {
        for p in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
            for sigma in [0.1, 1.0, 10.0] {
                let q = g2_toy_quadrature(&toy(p, sigma, 0.0)).unwrap();
                let c = g2_bsv_closed_form(p);
                assert!((q / c - 1.0).abs() < 1e-8, "p={p} σ={sigma}: {q} vs {c}");
            }
        }
    }

    #[test]
    fn coherent_limit() {
        // p = 1: ⟨ε⁴⟩ = m⁴ + 6m²σ + 3σ², ⟨ε²⟩ = m² + σ
        let (m, s): (f64, f64) = (30.0, 1.0);
        let exact = (m.powi(4) + 6.0 * m * m * s + 3.0 * s * s) / (m * m + s).powi(2);
        assert_relative_eq!(g2_toy_quadrature(&toy(1.0, s, m)).unwrap(), exact, max_relative = 1e-10);
        assert!(g2_toy_quadrature(&toy(3.0, 1.0, 1e3)).unwrap() - 1.0 < 1e-4);
    }

    #[test]
    fn mean_reduces_g2() {
        for p in [0.5, 1.0, 2.5, 4.0] {
            let mut last = f64::INFINITY;
            for mean in [0.0, 0.3, 1.0, 2.0, 5.0] {
                let g = g2_toy_quadrature(&toy(p, 1.0, mean)).unwrap();
                assert!(g <= last * (1.0 + 1e-10), "p={p} mean={mean}");
                assert!(g >= 1.0 - 1e-12);
                last = g;
            }
        }
    }

    #[test]
    fn depletion_limits() {
        let params = toy(2.0, 1.0, 0.0);
        let free = g2_toy_quadrature(&params).unwrap();
        let huge = g2_toy_depleted(&params, 1e12, 2.0).unwrap();
        assert_relative_eq!(free, huge, max_relative = 1e-9);
        // tamed where the closed form diverges
        let at = |p: f64| g2_toy_depleted(&toy(p, 1.0, 0.0), 2.0, 8.0).unwrap();
        assert!(at(40.0) < 1e-20 * g2_bsv_closed_form(40.0));
        assert!(at(80.0) / at(40.0) < 10.0);
        assert!(g2_bsv_closed_form(80.0) / g2_bsv_closed_form(40.0) > 1e20);
        assert!(g2_toy_depleted(&params, 0.0, 2.0).is_err());
    }

    #[test]
    fn depletion_monotone_in_critical_field() {
        let params = toy(4.0, 1.0, 0.0);
        let mut last = f64::INFINITY;
        for ec in [8.0, 5.0, 3.0, 2.0, 1.5, 1.0, 0.5] {
            let g = g2_toy_depleted(&params, ec, 2.0).unwrap();
            assert!(g <= last * (1.0 + 1e-10), "ε_crit={ec}: {g} > {last}");
            last = g;
        }
    }

    #[test]
    fn invalid_params() {
        assert!(g2_toy_quadrature(&toy(-1.0, 1.0, 0.0)).is_err());
        assert!(g2_toy_quadrature(&toy(1.0, 0.0, 0.0)).is_err());
        assert!(g2_toy_quadrature(&toy(1.0, 1.0, f64::NAN)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn increasing_in_p(p in 0.05f64..6.0, dp in 0.05f64..2.0) {
            prop_assert!(g2_bsv_closed_form(p + dp) > g2_bsv_closed_form(p));
        }

        #[test]
        fn cauchy_schwarz(p in 0.0f64..6.0, sigma in 0.05f64..20.0, mean in -5.0f64..5.0) {
            let g = g2_toy_quadrature(&toy(p, sigma, mean)).unwrap();
            prop_assert!(g >= 1.0 - 1e-9);
            let d = g2_toy_depleted(&toy(p, sigma, mean), 1.0, 2.0).unwrap();
            prop_assert!(d >= 1.0 - 1e-9);
        }

        #[test]
        fn bsv_independent_of_sigma(p in 0.0f64..8.0, sigma in 0.01f64..100.0) {
            let g = g2_toy_quadrature(&toy(p, sigma, 0.0)).unwrap();
            prop_assert!((g / g2_bsv_closed_form(p) - 1.0).abs() < 1e-8);
        }
    }
}
