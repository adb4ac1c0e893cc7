//! Semiclassical strong-field-approximation dipole for one field realization.
//!
//! The momentum integral is reduced by stationary phase to the return momentum
//! `p_st`, leaving a single sum over ionization times `t₁` for each output
//! time `t`. Cumulative integrals of `A` and `A²` are tabulated once per
//! realization so the action of every `(t, t₁)` pair costs O(1).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_space::{DriverConfig, DrivingField, Envelope, FieldRealization};
use crate::quadrature::gauss_legendre_5;
use crate::trig;

type Vec2 = [f64; 2];

#[inline]
fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Uniform time discretization. Samples sit at `t_start + k·dt`,
/// `k = 0..n_t`, with `dt = (t_end - t_start)/n_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfaGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_t: usize,
    /// Longest ionization-to-recombination delay kept in the `t₁` sum.
    pub max_excursion: f64,
}

/// Minimum time points per five optical cycles in [`SfaGrid::for_driver`].
pub const POINTS_PER_FIVE_CYCLES: usize = 4096;

/// Points per optical cycle used by [`SfaGrid::for_driver`]: the smallest
/// whole number that meets [`POINTS_PER_FIVE_CYCLES`].
const POINTS_PER_CYCLE: usize = POINTS_PER_FIVE_CYCLES.div_ceil(5);

/// Carrier harmonics that the Nyquist frequency must reach.
pub const MIN_RESOLVED_ORDER: f64 = 60.0;

impl SfaGrid {
    /// Grid covering the pulse support with a whole number of points per
    /// cycle (at least 4096 per five cycles) and an excursion cap of 1.5 periods.
    pub fn for_driver(config: &DriverConfig) -> Self {
        let (t_start, t_end) = config.support();
        let cycles = (t_end - t_start) / config.period();
        let n_t = ((POINTS_PER_CYCLE as f64 * cycles - 1e-9).ceil() as usize)
            .max(POINTS_PER_FIVE_CYCLES);
        SfaGrid {
            t_start,
            t_end,
            n_t,
            max_excursion: 1.5 * config.period(),
        }
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_t as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt()
    }

    /// Angular frequency of FFT bin `k`, negative for the upper half.
    pub fn angular_frequency(&self, k: usize) -> f64 {
        let n = self.n_t as i64;
        let k = k as i64;
        let signed = if k <= n / 2 { k } else { k - n };
        2.0 * PI * signed as f64 / (self.t_end - self.t_start)
    }

    /// Checks the grid against a driver before any computation.
    pub fn validate(&self, config: &DriverConfig) -> Result<()> {
        if !(self.t_end > self.t_start) || self.n_t < 2 {
            return Err(Error::InvalidConfig("empty time grid".into()));
        }
        if self.max_excursion < config.period() {
            return Err(Error::InvalidConfig(
                "excursion cap shorter than one laser period".into(),
            ));
        }
        let resolved = PI / self.dt();
        let required = MIN_RESOLVED_ORDER * config.carrier;
        if resolved < required {
            return Err(Error::InsufficientResolution { resolved, required });
        }
        Ok(())
    }
}

/// Engine switches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfaOptions {
    /// Ground-state depletion through the ADK rate.
    #[serde(default)]
    pub depletion: bool,
    /// Hann window on the dipole before the Fourier transform.
    #[serde(default)]
    pub hann_window: bool,
    /// Regularization ε of the `(π/(ε + iτ/2))^{3/2}` spreading factor.
    #[serde(default = "default_regularization")]
    pub regularization: f64,
    /// Width, in laser periods, of the cos² roll-off that ends the excursion
    /// window at `max_excursion`. Zero gives a hard truncation.
    #[serde(default = "default_gate_periods")]
    pub gate_periods: f64,
    /// With a monochromatic envelope, the carrier also runs before the
    /// observation window, so every output time has a full excursion history
    /// and the dipole is in its periodic steady state. Off: the field is
    /// switched on abruptly at the window start.
    #[serde(default = "default_true")]
    pub continuous_wave: bool,
}

fn default_true() -> bool {
    true
}

fn default_gate_periods() -> f64 {
    0.5
}

fn default_regularization() -> f64 {
    1e-4
}

impl Default for SfaOptions {
    fn default() -> Self {
        SfaOptions {
            depletion: false,
            hann_window: false,
            regularization: default_regularization(),
            gate_periods: default_gate_periods(),
            continuous_wave: true,
        }
    }
}

/// Hydrogenic bound–continuum dipole `d(v) = i·(2^{7/2}(2I_p)^{5/4}/π)·v/(v²+2I_p)³`.
///
/// Returns the imaginary parts; the real parts vanish.
pub fn bound_continuum_dipole(v: Vec2, ip: f64) -> Vec2 {
    let c = matrix_element_constant(ip);
    let den = (dot(v, v) + 2.0 * ip).powi(3);
    [c * v[0] / den, c * v[1] / den]
}

fn matrix_element_constant(ip: f64) -> f64 {
    2f64.powf(3.5) * (2.0 * ip).powf(1.25) / PI
}

/// Quasi-static ADK tunneling rate of a hydrogenic ground state (Z = 1, n* = 1),
/// `4(2I_p)^{5/2}/E · exp(-2(2I_p)^{3/2}/(3E))`. Zero field gives zero rate.
pub fn adk_rate(field: f64, ip: f64) -> f64 {
    let e = field.abs();
    if e == 0.0 {
        return 0.0;
    }
    let kappa2 = 2.0 * ip;
    4.0 * kappa2.powf(2.5) / e * (-2.0 * kappa2.powf(1.5) / (3.0 * e)).exp()
}

/// A realization's field tabulated on the grid together with the running
/// integrals the action needs.
pub struct FieldContext {
    field: DrivingField,
    grid: SfaGrid,
    ip: f64,
    /// Table points before the grid start (continued carrier history).
    pad: usize,
    /// Samples per carrier period when the continued dipole is periodic on the grid.
    period_samples: Option<usize>,
    e: Vec<Vec2>,
    a: Vec<Vec2>,
    /// `∫ A` from the grid start.
    int_a: Vec<Vec2>,
    /// `∫ A²` from the grid start.
    int_a2: Vec<f64>,
    /// Ground-state amplitude `exp(-½∫Γ)`; `None` without depletion.
    depletion: Option<Vec<f64>>,
}

impl FieldContext {
    pub fn new(
        realization: &FieldRealization,
        config: &DriverConfig,
        grid: SfaGrid,
        options: &SfaOptions,
    ) -> Self {
        let mut field = DrivingField::new(realization, config);
        let dt = grid.dt();
        let continued =
            options.continuous_wave && matches!(config.envelope, Envelope::Monochromatic { .. });
        let pad = if continued {
            field = field.continued();
            (grid.max_excursion / dt).ceil() as usize
        } else {
            0
        };
        let n = grid.n_t + pad;
        let times: Vec<f64> = (0..n).map(|k| grid.t_start + (k as f64 - pad as f64) * dt).collect();
        let e: Vec<Vec2> = times.iter().map(|&t| field.value(t)).collect();
        let a: Vec<Vec2> = times.iter().map(|&t| field.vector_potential(t)).collect();
        let mut int_a = vec![[0.0; 2]; n];
        let mut int_a2 = vec![0.0; n];
        for k in 1..n {
            let (lo, hi) = (times[k - 1], times[k]);
            let (ia, ia2) = segment_integrals(&field, lo, hi);
            int_a[k] = [int_a[k - 1][0] + ia[0], int_a[k - 1][1] + ia[1]];
            int_a2[k] = int_a2[k - 1] + ia2;
        }
        let depletion = options.depletion.then(|| {
            let mut amp = vec![1.0; n];
            let mut acc = 0.0;
            for k in 1..n {
                acc += gauss_legendre_5(
                    |t| {
                        let f = field.value(t);
                        adk_rate(dot(f, f).sqrt(), config.ionization_potential)
                    },
                    times[k - 1],
                    times[k],
                );
                amp[k] = (-0.5 * acc).exp();
            }
            amp
        });
        let period_samples = (continued && !options.depletion)
            .then(|| grid.n_t as f64 * config.period() / (grid.t_end - grid.t_start))
            .filter(|p| (p - p.round()).abs() < 1e-9 && *p >= 1.0)
            .map(|p| p.round() as usize)
            .filter(|&p| grid.n_t % p == 0);
        FieldContext {
            field,
            grid,
            ip: config.ionization_potential,
            pad,
            period_samples,
            e,
            a,
            int_a,
            int_a2,
            depletion,
        }
    }

    pub fn grid(&self) -> &SfaGrid {
        &self.grid
    }

    /// `(∫A, ∫A²)` from the grid start to an arbitrary time `t`.
    fn integrals_at(&self, t: f64) -> (Vec2, f64) {
        let dt = self.grid.dt();
        let origin = self.grid.t_start - self.pad as f64 * dt;
        let last = self.int_a.len() - 1;
        let k = (((t - origin) / dt).floor().max(0.0) as usize).min(last);
        let t_k = origin + k as f64 * dt;
        let (ia, ia2) = if t > t_k {
            segment_integrals(&self.field, t_k, t)
        } else {
            let (ia, ia2) = segment_integrals(&self.field, t, t_k);
            ([-ia[0], -ia[1]], -ia2)
        };
        (
            [self.int_a[k][0] + ia[0], self.int_a[k][1] + ia[1]],
            self.int_a2[k] + ia2,
        )
    }

    /// Semiclassical action `S = ∫_{t₁}^{t} [(p + A)²/2 + I_p] dτ`.
    pub fn action(&self, p: Vec2, t: f64, t1: f64) -> Result<f64> {
        if t1 > t {
            return Err(Error::Precondition("ionization time after recombination".into()));
        }
        let (b, c) = self.integrals_at(t);
        let (b1, c1) = self.integrals_at(t1);
        let tau = t - t1;
        let db = [b[0] - b1[0], b[1] - b1[1]];
        Ok(self.ip * tau + 0.5 * dot(p, p) * tau + dot(p, db) + 0.5 * (c - c1))
    }

    /// Momentum that returns the electron to the ion: `p_st = -(1/τ)∫_{t₁}^{t} A`.
    pub fn stationary_momentum(&self, t: f64, t1: f64) -> Result<Vec2> {
        if !(t > t1) {
            return Err(Error::Precondition("excursion time must be positive".into()));
        }
        let (b, _) = self.integrals_at(t);
        let (b1, _) = self.integrals_at(t1);
        let tau = t - t1;
        Ok([-(b[0] - b1[0]) / tau, -(b[1] - b1[1]) / tau])
    }

    pub fn field_at(&self, t: f64) -> Vec2 {
        self.field.value(t)
    }

    pub fn vector_potential_at(&self, t: f64) -> Vec2 {
        self.field.vector_potential(t)
    }
}

/// `(∫A, ∫A²)` over `[lo, hi]` by a two-panel five-point Gauss–Legendre rule.
fn segment_integrals(field: &DrivingField, lo: f64, hi: f64) -> (Vec2, f64) {
    let mid = 0.5 * (lo + hi);
    let mut ia = [0.0; 2];
    for (m, slot) in ia.iter_mut().enumerate() {
        *slot = gauss_legendre_5(|t| field.vector_potential(t)[m], lo, mid)
            + gauss_legendre_5(|t| field.vector_potential(t)[m], mid, hi);
    }
    let sq = |t: f64| {
        let a = field.vector_potential(t);
        dot(a, a)
    };
    let ia2 = gauss_legendre_5(sq, lo, mid) + gauss_legendre_5(sq, mid, hi);
    (ia, ia2)
}

/// Time-domain dipole of one realization and its spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleRecord {
    pub d_par: Vec<f64>,
    pub d_perp: Vec<f64>,
    /// Full FFT (all `n_t` bins, negative frequencies in the upper half).
    pub spectrum_par: Vec<Complex64>,
    pub spectrum_perp: Vec<Complex64>,
    pub weight: f64,
    pub grid: SfaGrid,
    pub config: DriverConfig,
}

/// Computes the SFA dipole `(d_∥(t), d_⊥(t))` of one realization and its spectrum.
pub fn compute_dipole(
    realization: &FieldRealization,
    config: &DriverConfig,
    grid: &SfaGrid,
    options: &SfaOptions,
) -> Result<DipoleRecord> {
    let config = config.validated()?;
    grid.validate(&config)?;
    let ctx = FieldContext::new(realization, &config, *grid, options);
    if !(options.gate_periods >= 0.0) || options.gate_periods * config.period() > grid.max_excursion {
        return Err(Error::InvalidConfig(format!(
            "excursion gate of {} periods does not fit the excursion window",
            options.gate_periods
        )));
    }
    let gate_width = options.gate_periods * config.period();
    let (d_par, d_perp) = dipole_time_series(&ctx, options.regularization, gate_width, true);
    let (spectrum_par, spectrum_perp) = spectra_of(&d_par, &d_perp, grid, options.hann_window);
    Ok(DipoleRecord {
        d_par,
        d_perp,
        spectrum_par,
        spectrum_perp,
        weight: realization.weight,
        grid: *grid,
        config,
    })
}

/// With `tile` set and a periodic continued field, only one period is
/// computed and repeated.
fn dipole_time_series(
    ctx: &FieldContext,
    regularization: f64,
    gate_width: f64,
    tile: bool,
) -> (Vec<f64>, Vec<f64>) {
    let grid = ctx.grid;
    let n = grid.n_t;
    let n_eval = match ctx.period_samples {
        Some(p) if tile => p,
        _ => n,
    };
    let dt = grid.dt();
    let ip = ctx.ip;
    let two_ip = 2.0 * ip;
    let k_cap = ((grid.max_excursion / dt).floor() as usize).min(n - 1);
    let c = matrix_element_constant(ip);
    // d*(v_t)·[E·d(v_t1)] = c²·v_t (E·v_t1) / (...)³(...)³, times the
    // spreading factor and the t₁ step
    let spread: Vec<Complex64> = (0..=k_cap)
        .map(|k| {
            let tau = k as f64 * dt;
            let z = Complex64::new(regularization, 0.5 * tau);
            (Complex64::new(PI, 0.0) / z).powf(1.5) * dt * c * c * excursion_gate(tau, grid.max_excursion, gate_width)
        })
        .collect();

    let inv_tau: Vec<f64> = (0..=k_cap).map(|k| if k == 0 { 0.0 } else { 1.0 / (k as f64 * dt) }).collect();
    let ones;
    let dep: &[f64] = match &ctx.depletion {
        Some(d) => d,
        None => {
            ones = vec![1.0; ctx.e.len()];
            &ones
        }
    };

    let series: Vec<Vec2> = (0..n_eval)
        .into_par_iter()
        .map(|i| {
            let i = i + ctx.pad;
            let a_t = ctx.a[i];
            let b_t = ctx.int_a[i];
            let c_t = ctx.int_a2[i];
            let (mut re0, mut im0, mut re1, mut im1) = (0.0, 0.0, 0.0, 0.0);
            for k in 1..=k_cap.min(i) {
                let j = i - k;
                let it = inv_tau[k];
                let db = [b_t[0] - ctx.int_a[j][0], b_t[1] - ctx.int_a[j][1]];
                let p = [-db[0] * it, -db[1] * it];
                let v1 = [p[0] + ctx.a[j][0], p[1] + ctx.a[j][1]];
                let proj = dot(ctx.e[j], v1) * dep[j];
                if proj == 0.0 {
                    continue;
                }
                let vt = [p[0] + a_t[0], p[1] + a_t[1]];
                let den = (dot(v1, v1) + two_ip) * (dot(vt, vt) + two_ip);
                let amp = proj / (den * den * den);
                let action = ip * k as f64 * dt - 0.5 * dot(db, db) * it + 0.5 * (c_t - ctx.int_a2[j]);
                let (sn, cs) = trig::sin_cos(action);
                // spread·e^{-iS}·amp
                let sp = spread[k];
                let zr = (sp.re * cs + sp.im * sn) * amp;
                let zi = (sp.im * cs - sp.re * sn) * amp;
                re0 += zr * vt[0];
                im0 += zi * vt[0];
                re1 += zr * vt[1];
                im1 += zi * vt[1];
            }
            let _ = (re0, re1);
            // i·X + c.c. = -2·Im X
            [-2.0 * dep[i] * im0, -2.0 * dep[i] * im1]
        })
        .collect();
    (0..n).map(|i| (series[i % n_eval][0], series[i % n_eval][1])).unzip()
}

/// 1 up to `cap - width`, then a cos² fall to 0 at `cap`.
fn excursion_gate(tau: f64, cap: f64, width: f64) -> f64 {
    let start = cap - width;
    if tau <= start {
        1.0
    } else if tau >= cap {
        0.0
    } else {
        let c = (0.5 * PI * (tau - start) / width).cos();
        c * c
    }
}

/// `d̃(ω_k) = dt·Σ_n d(t_n) e^{-iω_k (t_n - t_start)}` for both components.
fn spectra_of(
    d_par: &[f64],
    d_perp: &[f64],
    grid: &SfaGrid,
    hann: bool,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = grid.n_t;
    let dt = grid.dt();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let window = |k: usize| {
        if hann {
            let s = (PI * k as f64 / n as f64).sin();
            s * s
        } else {
            1.0
        }
    };
    let transform = |d: &[f64]| {
        let mut buf: Vec<Complex64> = d
            .iter()
            .enumerate()
            .map(|(k, &x)| Complex64::new(x * window(k) * dt, 0.0))
            .collect();
        fft.process(&mut buf);
        buf
    };
    (transform(d_par), transform(d_perp))
}
