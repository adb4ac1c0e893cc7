//! Squeezed elliptical driver, its classical-limit phase-space distribution
//! and the weighted classical field realizations drawn from it.
//!
//! The ∥ mode is a coherent state and collapses to its mean amplitude. The ⊥
//! mode carries a displacement `±i·A·ε̄` plus Gaussian fluctuations of
//! variance `4·I_sq` along the anti-squeezed quadrature `ε̃ₓ`, rotated back to
//! the laboratory quadratures by `e^{-iφ/2}` (the squeezed quadrature `ε̃_y`
//! is collapsed to zero).

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_hermite;

/// Atomic units of time per femtosecond.
pub const AU_PER_FS: f64 = 41.341_373_335_18;

/// Temporal envelope of the driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Envelope {
    /// Flat field switched on at t = 0 and off after `n_cycles` carrier periods.
    Monochromatic { n_cycles: f64 },
    /// `sin²(πt/T)` envelope over a total duration `T` given in femtoseconds.
    Sin2 { duration_fs: f64 },
}

impl Default for Envelope {
    fn default() -> Self {
        Envelope::Monochromatic { n_cycles: 5.0 }
    }
}

/// Sense of rotation of the mean ⊥ displacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Handedness {
    /// Displacement `+i·A·ε̄`.
    #[default]
    Positive,
    /// Displacement `-i·A·ε̄`.
    Negative,
}

impl Handedness {
    fn sign(self) -> f64 {
        match self {
            Handedness::Positive => 1.0,
            Handedness::Negative => -1.0,
        }
    }
}

/// Which mode carries the squeezed fluctuations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// Coherent ∥ mode plus a displaced squeezed ⊥ mode.
    #[default]
    Elliptical,
    /// A single linearly polarized displaced squeezed mode along ∥; `ε̄ = 0`
    /// gives bright squeezed vacuum.
    Linear,
}

/// Full specification of the quantum driver, in atomic units. Missing
/// fields in serialized form take their [`Default`] values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriverConfig {
    /// Mean field strength ε̄ of the coherent component.
    pub mean_amplitude: f64,
    /// Carrier angular frequency ω_L.
    pub carrier: f64,
    /// Ellipticity A of the coherent component, 0 (linear) to 1 (circular).
    pub ellipticity: f64,
    /// Squeezing intensity I_sq.
    pub squeezing_intensity: f64,
    /// Squeezing angle φ: 0 amplitude squeezing, π phase squeezing.
    pub squeezing_angle: f64,
    pub envelope: Envelope,
    pub ionization_potential: f64,
    pub handedness: Handedness,
    pub layout: Layout,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            mean_amplitude: 0.053,
            carrier: 0.057,
            ellipticity: 0.0,
            squeezing_intensity: 1e-5,
            squeezing_angle: PI,
            envelope: Envelope::default(),
            ionization_potential: 0.5,
            handedness: Handedness::Positive,
            layout: Layout::Elliptical,
        }
    }
}

/// Reduces an angle into `(-π, π]`.
pub fn reduce_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

impl DriverConfig {
    /// Checks the invariants and returns the config with φ reduced into `(-π, π]`.
    pub fn validated(mut self) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        let finite = [
            self.mean_amplitude,
            self.carrier,
            self.ellipticity,
            self.squeezing_intensity,
            self.squeezing_angle,
            self.ionization_potential,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return bad("non-finite driver parameter");
        }
        match self.layout {
            Layout::Elliptical if self.mean_amplitude <= 0.0 => {
                return bad("mean amplitude must be positive");
            }
            Layout::Linear if self.mean_amplitude < 0.0 => {
                return bad("mean amplitude must be non-negative");
            }
            _ => {}
        }
        if self.carrier <= 0.0 {
            return bad("carrier frequency must be positive");
        }
        if !(0.0..=1.0).contains(&self.ellipticity) {
            return bad("ellipticity must lie in [0, 1]");
        }
        if self.squeezing_intensity < 0.0 {
            return bad("squeezing intensity must be non-negative");
        }
        if self.ionization_potential <= 0.0 {
            return bad("ionization potential must be positive");
        }
        match self.envelope {
            Envelope::Monochromatic { n_cycles } if !(n_cycles > 0.0) => {
                return bad("number of cycles must be positive");
            }
            Envelope::Sin2 { duration_fs } if !(duration_fs > 0.0) => {
                return bad("pulse duration must be positive");
            }
            _ => {}
        }
        self.squeezing_angle = reduce_angle(self.squeezing_angle);
        Ok(self)
    }

    pub fn period(&self) -> f64 {
        TAU / self.carrier
    }

    /// Time support `[0, end]` of the pulse in atomic units.
    pub fn support(&self) -> (f64, f64) {
        match self.envelope {
            Envelope::Monochromatic { n_cycles } => (0.0, n_cycles * self.period()),
            Envelope::Sin2 { duration_fs } => (0.0, duration_fs * AU_PER_FS),
        }
    }

    /// Ponderomotive energy of the mean ∥ field, `ε̄²/(4ω²)`.
    pub fn ponderomotive_energy(&self) -> f64 {
        self.mean_amplitude.powi(2) / (4.0 * self.carrier.powi(2))
    }

    /// Harmonic order of the three-step cutoff `(I_p + 3.17·U_p)/ω_L`.
    pub fn cutoff_order(&self) -> f64 {
        (self.ionization_potential + 3.17 * self.ponderomotive_energy()) / self.carrier
    }
}

/// Gaussian density of the anti-squeezed quadrature in the classical limit,
/// `exp(-x²/(8 I_sq)) / √(8π I_sq)`.
pub fn husimi_marginal_density(tilde_x: f64, squeezing_intensity: f64) -> Result<f64> {
    if squeezing_intensity == 0.0 {
        return Err(Error::DegenerateDistribution);
    }
    if !(squeezing_intensity > 0.0) {
        return Err(Error::Precondition(
            "squeezing intensity must be positive".into(),
        ));
    }
    let v8 = 8.0 * squeezing_intensity;
    Ok((-tilde_x * tilde_x / v8).exp() / (PI * v8).sqrt())
}

/// One node of the phase-space quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSample {
    pub tilde_x: f64,
    pub weight: f64,
}

/// Gauss–Hermite nodes rescaled to the Gaussian of variance `4·I_sq`.
///
/// `I_sq = 0` yields the single delta sample `(0, 1)`. Weights are normalized
/// to sum to one.
pub fn build_quadrature_samples(squeezing_intensity: f64, n: usize) -> Result<Vec<QuadratureSample>> {
    if n == 0 {
        return Err(Error::Precondition("sample count must be at least 1".into()));
    }
    if !(squeezing_intensity >= 0.0) || !squeezing_intensity.is_finite() {
        return Err(Error::Precondition(
            "squeezing intensity must be non-negative".into(),
        ));
    }
    if squeezing_intensity == 0.0 {
        return Ok(vec![QuadratureSample {
            tilde_x: 0.0,
            weight: 1.0,
        }]);
    }
    let (nodes, weights) = gauss_hermite(n);
    let scale = (8.0 * squeezing_intensity).sqrt();
    let total: f64 = weights.iter().sum();
    Ok(nodes
        .iter()
        .zip(&weights)
        .map(|(&h, &w)| QuadratureSample {
            tilde_x: scale * h,
            weight: w / total,
        })
        .collect())
}

/// A single classical two-mode field sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRealization {
    /// Complex amplitude of the ∥ mode: real part multiplies `cos ω_L t`,
    /// imaginary part `sin ω_L t`.
    pub eps_par: Complex64,
    pub eps_perp: Complex64,
    pub weight: f64,
    /// The `ε̃ₓ` this realization was generated from.
    pub tilde_x: f64,
}

/// Maps a quadrature sample to its field amplitudes.
pub fn realize_field(config: &DriverConfig, sample: QuadratureSample) -> FieldRealization {
    let rotation = Complex64::from_polar(1.0, -0.5 * config.squeezing_angle);
    let fluctuation = rotation * sample.tilde_x;
    let (eps_par, eps_perp) = match config.layout {
        Layout::Elliptical => (
            Complex64::new(config.mean_amplitude, 0.0),
            Complex64::new(0.0, config.handedness.sign() * config.ellipticity * config.mean_amplitude)
                + fluctuation,
        ),
        Layout::Linear => (
            Complex64::new(config.mean_amplitude, 0.0) + Complex64::i() * fluctuation,
            Complex64::new(0.0, 0.0),
        ),
    };
    FieldRealization {
        eps_par,
        eps_perp,
        weight: sample.weight,
        tilde_x: sample.tilde_x,
    }
}

/// All weighted realizations of a driver.
pub fn realizations(config: &DriverConfig, n_samples: usize) -> Result<Vec<FieldRealization>> {
    let config = config.validated()?;
    Ok(build_quadrature_samples(config.squeezing_intensity, n_samples)?
        .into_iter()
        .map(|s| realize_field(&config, s))
        .collect())
}

/// `a·cos(νt) + b·sin(νt)`
#[derive(Debug, Clone, Copy, PartialEq)]
struct Sinusoid {
    a: f64,
    b: f64,
    nu: f64,
}

impl Sinusoid {
    fn value(&self, t: f64) -> f64 {
        let (s, c) = (self.nu * t).sin_cos();
        self.a * c + self.b * s
    }

    /// `∫_0^t` of the sinusoid.
    fn primitive(&self, t: f64) -> f64 {
        if self.nu == 0.0 {
            return self.a * t;
        }
        let (s, c) = (self.nu * t).sin_cos();
        (self.a * s + self.b * (1.0 - c)) / self.nu
    }
}

/// Time-domain electric field of one realization, written as a finite sum of
/// sinusoids on its support so that the vector potential is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingField {
    components: [Vec<Sinusoid>; 2],
    start: f64,
    end: f64,
    /// Field keeps oscillating outside `[start, end]`.
    unbounded: bool,
}

impl DrivingField {
    pub fn new(realization: &FieldRealization, config: &DriverConfig) -> Self {
        let (start, end) = config.support();
        let w = config.carrier;
        let synth = |eps: Complex64| -> Vec<Sinusoid> {
            let (a, b) = (eps.re, eps.im);
            match config.envelope {
                Envelope::Monochromatic { .. } => vec![Sinusoid { a, b, nu: w }],
                Envelope::Sin2 { .. } => {
                    // sin²(πt/T) = (1 - cos Ωt)/2 with Ω = 2π/T
                    let big = TAU / (end - start);
                    vec![
                        Sinusoid { a: 0.5 * a, b: 0.5 * b, nu: w },
                        Sinusoid { a: -0.25 * a, b: -0.25 * b, nu: w + big },
                        Sinusoid { a: -0.25 * a, b: -0.25 * b, nu: w - big },
                    ]
                }
            }
        };
        DrivingField {
            components: [synth(realization.eps_par), synth(realization.eps_perp)],
            start,
            end,
            unbounded: false,
        }
    }

    /// The same sinusoids continued over all times. Only meaningful for a
    /// monochromatic envelope, where it describes a continuous wave.
    pub fn continued(mut self) -> Self {
        self.unbounded = true;
        self
    }

    pub fn support(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    /// Field `(E_∥, E_⊥)` at time `t`; zero outside the support unless continued.
    pub fn value(&self, t: f64) -> [f64; 2] {
        if !self.unbounded && (t < self.start || t > self.end) {
            return [0.0; 2];
        }
        let tau = t - self.start;
        [0, 1].map(|m| self.components[m].iter().map(|s| s.value(tau)).sum())
    }

    /// Vector potential `A(t) = -∫ E dt'` accumulated from the pulse start.
    pub fn vector_potential(&self, t: f64) -> [f64; 2] {
        let tau = if self.unbounded {
            t - self.start
        } else {
            (t.min(self.end) - self.start).max(0.0)
        };
        [0, 1].map(|m| -self.components[m].iter().map(|s| s.primitive(tau)).sum::<f64>())
    }
}

/// Field value `(E_∥, E_⊥)` of a realization at time `t`.
pub fn evaluate_field(realization: &FieldRealization, config: &DriverConfig, t: f64) -> [f64; 2] {
    DrivingField::new(realization, config).value(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_adaptive, AdaptiveOptions};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn linear_config() -> DriverConfig {
        DriverConfig {
            ellipticity: 0.0,
            ..DriverConfig::default()
        }
    }

    #[test]
    fn density_at_origin() {
        let d = husimi_marginal_density(0.0, 1e-5).unwrap();
        assert_relative_eq!(d, 1.0 / (8.0 * PI * 1e-5).sqrt(), max_relative = 1e-14);
        assert!((d - 63.078).abs() < 1e-3);
    }

    #[test]
    fn density_is_even_and_normalized() {
        let isq = 1e-5;
        for x in [1e-4, 3e-3, 0.02] {
            assert_eq!(
                husimi_marginal_density(x, isq).unwrap(),
                husimi_marginal_density(-x, isq).unwrap()
            );
        }
        let sigma = (4.0 * isq).sqrt();
        let total = integrate_adaptive(
            |x| husimi_marginal_density(x, isq).unwrap(),
            -20.0 * sigma,
            20.0 * sigma,
            AdaptiveOptions::default(),
        )
        .unwrap();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_squeezing_is_degenerate() {
        assert_eq!(
            husimi_marginal_density(0.0, 0.0),
            Err(Error::DegenerateDistribution)
        );
        let s = build_quadrature_samples(0.0, 140).unwrap();
        assert_eq!(s, vec![QuadratureSample { tilde_x: 0.0, weight: 1.0 }]);
    }

    #[test]
    fn moments_of_140_nodes() {
        let isq = 1e-5;
        let s = build_quadrature_samples(isq, 140).unwrap();
        let m = |k: i32| s.iter().map(|q| q.weight * q.tilde_x.powi(k)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-12);
        assert!(m(1).abs() < 1e-10);
        assert_relative_eq!(m(2), 4e-5, max_relative = 1e-8);
        assert_relative_eq!(m(4), 3.0 * 4e-5 * 4e-5, max_relative = 1e-6);
    }

    #[test]
    fn samples_are_bit_reproducible() {
        let a = build_quadrature_samples(2e-5, 97).unwrap();
        let b = build_quadrature_samples(2e-5, 97).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mean_field_polarization_limits() {
        let zero = QuadratureSample { tilde_x: 0.0, weight: 1.0 };
        let lin = realize_field(&linear_config(), zero);
        assert_eq!(lin.eps_perp, Complex64::new(0.0, 0.0));
        assert_eq!(lin.eps_par, Complex64::new(0.053, 0.0));

        let circ = DriverConfig { ellipticity: 1.0, ..DriverConfig::default() };
        let r = realize_field(&circ, zero);
        assert_relative_eq!(r.eps_perp.norm(), 0.053);
        assert_relative_eq!(r.eps_perp.arg(), PI / 2.0);

        let neg = DriverConfig { handedness: Handedness::Negative, ..circ };
        assert_relative_eq!(realize_field(&neg, zero).eps_perp.arg(), -PI / 2.0);
    }

    /// Independent route: draw the fluctuation as a 2D laboratory-frame vector
    /// from the inverse of the tilde coordinate transform with `ε̃_y = 0`.
    fn lab_frame_oracle(config: &DriverConfig, tilde_x: f64) -> Complex64 {
        let (tx, ty) = (tilde_x, 0.0);
        let (s, c) = (0.5 * config.squeezing_angle).sin_cos();
        // ε̃ₓ = Δx c − Δy s, ε̃_y = Δy c + Δx s  ⇒  Δx = ε̃ₓ c + ε̃_y s, Δy = ε̃_y c − ε̃ₓ s
        let dx = tx * c + ty * s;
        let dy = ty * c - tx * s;
        Complex64::new(dx, config.ellipticity * config.mean_amplitude + dy)
    }

    #[test]
    fn amplitude_squeezing_fluctuates_real_quadrature() {
        let cfg = DriverConfig { ellipticity: 0.7, squeezing_angle: 0.0, ..DriverConfig::default() };
        let r = realize_field(&cfg, QuadratureSample { tilde_x: 0.004, weight: 1.0 });
        assert_relative_eq!(r.eps_perp.re, 0.004);
        assert_relative_eq!(r.eps_perp.im, 0.7 * 0.053);
        let o = lab_frame_oracle(&cfg, 0.004);
        assert!((r.eps_perp - o).norm() < 1e-15);
    }

    #[test]
    fn field_convention() {
        let cfg = DriverConfig { ellipticity: 1.0, ..DriverConfig::default() };
        let r = realize_field(&cfg, QuadratureSample { tilde_x: 0.0, weight: 1.0 });
        let e0 = evaluate_field(&r, &cfg, 0.0);
        assert_relative_eq!(e0[0], 0.053);
        assert!(e0[1].abs() < 1e-15);
        let quarter = cfg.period() / 4.0;
        let e1 = evaluate_field(&r, &cfg, quarter);
        assert!(e1[0].abs() < 1e-12);
        assert_relative_eq!(e1[1], 0.053, max_relative = 1e-12);
        assert_eq!(evaluate_field(&r, &cfg, -1.0), [0.0, 0.0]);
        assert_eq!(evaluate_field(&r, &cfg, cfg.support().1 + 1.0), [0.0, 0.0]);
    }

    #[test]
    fn sin2_envelope_endpoints_and_peak() {
        let cfg = DriverConfig {
            envelope: Envelope::Sin2 { duration_fs: 13.0 },
            ..linear_config()
        };
        let r = realize_field(&cfg, QuadratureSample { tilde_x: 0.0, weight: 1.0 });
        let end = cfg.support().1;
        assert_relative_eq!(end, 13.0 * AU_PER_FS);
        assert!(evaluate_field(&r, &cfg, 0.0)[0].abs() < 1e-15);
        assert!(evaluate_field(&r, &cfg, end)[0].abs() < 1e-14);
        // envelope equals one at mid-pulse
        let mid = 0.5 * end;
        let e = evaluate_field(&r, &cfg, mid)[0];
        assert_relative_eq!(e, 0.053 * (cfg.carrier * mid).cos(), max_relative = 1e-12);
    }

    #[test]
    fn vector_potential_matches_quadrature_of_field() {
        let cfg = DriverConfig {
            envelope: Envelope::Sin2 { duration_fs: 13.0 },
            ellipticity: 0.6,
            ..DriverConfig::default()
        };
        let r = realize_field(&cfg, QuadratureSample { tilde_x: 0.003, weight: 1.0 });
        let f = DrivingField::new(&r, &cfg);
        for t in [10.0, 200.0, 530.0, 900.0] {
            let a = f.vector_potential(t);
            for m in 0..2 {
                let oracle = -integrate_adaptive(
                    |s| f.value(s)[m],
                    0.0,
                    t.min(f.support().1),
                    AdaptiveOptions::default(),
                )
                .unwrap();
                assert!((a[m] - oracle).abs() < 1e-12, "t={t} m={m}");
            }
        }
    }

    #[test]
    fn angle_reduction() {
        assert_eq!(reduce_angle(PI), PI);
        assert_eq!(reduce_angle(-PI), PI);
        assert_relative_eq!(reduce_angle(3.0 * PI / 2.0), -PI / 2.0);
        let cfg = DriverConfig { squeezing_angle: 7.0, ..DriverConfig::default() };
        assert_relative_eq!(cfg.validated().unwrap().squeezing_angle, 7.0 - TAU);
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = DriverConfig::default();
        for bad in [
            DriverConfig { ellipticity: 1.2, ..base },
            DriverConfig { mean_amplitude: 0.0, ..base },
            DriverConfig { carrier: -1.0, ..base },
            DriverConfig { squeezing_intensity: -1e-6, ..base },
            DriverConfig { ionization_potential: 0.0, ..base },
            DriverConfig { envelope: Envelope::Sin2 { duration_fs: 0.0 }, ..base },
        ] {
            assert!(matches!(bad.validated(), Err(Error::InvalidConfig(_))));
        }
        let bsv = DriverConfig { mean_amplitude: 0.0, layout: Layout::Linear, ..base };
        assert!(bsv.validated().is_ok());
    }

    proptest! {
        #[test]
        fn gaussian_moments_hold(isq in 1e-7f64..1e-3, n in 32usize..200) {
            let s = build_quadrature_samples(isq, n).unwrap();
            let m = |k: i32| s.iter().map(|q| q.weight * q.tilde_x.powi(k)).sum::<f64>();
            let v = 4.0 * isq;
            prop_assert!((m(0) - 1.0).abs() < 1e-12);
            prop_assert!((m(2) / v - 1.0).abs() < 1e-6);
            prop_assert!((m(4) / (3.0 * v * v) - 1.0).abs() < 1e-6);
        }

        #[test]
        fn rotation_closure(phi in -PI..PI, x in -0.02f64..0.02, a in 0.0f64..1.0) {
            let c1 = DriverConfig { ellipticity: a, squeezing_angle: phi, ..DriverConfig::default() }
                .validated().unwrap();
            let c2 = DriverConfig { squeezing_angle: phi + TAU, ..c1 }.validated().unwrap();
            let s = QuadratureSample { tilde_x: x, weight: 1.0 };
            prop_assert!((realize_field(&c1, s).eps_perp - realize_field(&c2, s).eps_perp).norm() < 1e-14);
        }

        #[test]
        fn mean_field_and_reflection(phi in -PI..PI, a in 0.0f64..1.0, n in 2usize..64) {
            let cfg = DriverConfig { ellipticity: a, squeezing_angle: phi, ..DriverConfig::default() };
            let rs = realizations(&cfg, n).unwrap();
            let mean: Complex64 = rs.iter().map(|r| r.eps_perp * r.weight).sum();
            let target = Complex64::new(0.0, a * 0.053);
            prop_assert!((mean - target).norm() < 1e-10);
            for (lo, hi) in rs.iter().zip(rs.iter().rev()) {
                // mirror about the mean displacement
                prop_assert!((lo.eps_perp - target + (hi.eps_perp - target)).norm() < 1e-15);
                prop_assert_eq!(lo.eps_par, hi.eps_par);
            }
        }

        #[test]
        fn realization_matches_lab_frame_oracle(phi in -PI..PI, x in -0.02f64..0.02, a in 0.0f64..1.0) {
            let cfg = DriverConfig { ellipticity: a, squeezing_angle: phi, ..DriverConfig::default() };
            let r = realize_field(&cfg, QuadratureSample { tilde_x: x, weight: 1.0 });
            prop_assert!((r.eps_perp - lab_frame_oracle(&cfg, x)).norm() < 1e-15);
        }
    }
}
