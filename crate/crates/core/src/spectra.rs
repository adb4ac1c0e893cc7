//! Ensemble spectra: weighted moments of the per-realization dipole spectra,
//! harmonic-order intensities and the squeezing-angle witness ΔS.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_space::{reduce_angle, DriverConfig};
use crate::sfa::{DipoleRecord, SfaGrid};

/// Default half-width of the harmonic window, in units of ω_L.
pub const DEFAULT_HALF_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarization {
    Parallel,
    Perpendicular,
    Total,
}

/// Window-integrated moments of one harmonic order.
///
/// Per realization `I_μ = Σ_window |d̃_μ|²·Δω` and `X = Σ_window d̃_∥*·d̃_⊥·Δω`;
/// the fields hold their weighted sums over realizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicMoments {
    pub q: u32,
    pub i_par: f64,
    pub i_perp: f64,
    /// Σ w·I_∥²
    pub i2_par: f64,
    /// Σ w·I_⊥²
    pub i2_perp: f64,
    pub cross: Complex64,
}

impl HarmonicMoments {
    fn empty(q: u32) -> Self {
        HarmonicMoments {
            q,
            i_par: 0.0,
            i_perp: 0.0,
            i2_par: 0.0,
            i2_perp: 0.0,
            cross: Complex64::new(0.0, 0.0),
        }
    }

    pub fn intensity(&self, pol: Polarization) -> f64 {
        match pol {
            Polarization::Parallel => self.i_par,
            Polarization::Perpendicular => self.i_perp,
            Polarization::Total => self.i_par + self.i_perp,
        }
    }
}

/// Weighted spectral moments of an ensemble of realizations on the
/// non-negative half of the FFT grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSet {
    pub omega: Vec<f64>,
    pub s_par: Vec<f64>,
    pub s_perp: Vec<f64>,
    pub m4_par: Vec<f64>,
    pub m4_perp: Vec<f64>,
    pub cross: Vec<Complex64>,
    pub config: DriverConfig,
    pub grid: SfaGrid,
    pub n_samples: usize,
    pub total_weight: f64,
    /// Window half-width (units of ω_L) used for [`Self::harmonics`].
    pub half_width: f64,
    /// Orders `q = 1, 2, …` whose window lies on the grid.
    pub harmonics: Vec<HarmonicMoments>,
}

/// Bins whose frequency lies within `half_width·ω_L` of `q·ω_L`.
fn window_bins(grid: &SfaGrid, carrier: f64, q: f64, half_width: f64) -> Result<std::ops::RangeInclusive<usize>> {
    let d_omega = TAU / (grid.t_end - grid.t_start);
    let n_half = grid.n_t / 2;
    let max = n_half as f64 * d_omega;
    let lo = (q - half_width) * carrier;
    let hi = (q + half_width) * carrier;
    if !(half_width > 0.0) || lo < 0.0 || hi > max {
        return Err(Error::WindowOutOfRange { lo, hi, max });
    }
    // a relative slack keeps bins that sit exactly on a window edge
    let slack = 1e-9;
    let first = ((lo / d_omega) - slack).ceil().max(0.0) as usize;
    let last = (((hi / d_omega) + slack).floor() as usize).min(n_half);
    Ok(first..=last)
}

/// Largest order whose window fits below the Nyquist frequency.
fn max_order(grid: &SfaGrid, carrier: f64, half_width: f64) -> u32 {
    let d_omega = TAU / (grid.t_end - grid.t_start);
    let max = (grid.n_t / 2) as f64 * d_omega;
    (max / carrier - half_width).floor().max(0.0) as u32
}

/// Streaming weighted reduction of dipole records. Records must be added in
/// a fixed order for reproducible sums.
#[derive(Debug, Clone)]
pub struct SpectrumAccumulator {
    set: SpectrumSet,
    windows: Vec<std::ops::RangeInclusive<usize>>,
}

impl SpectrumAccumulator {
    pub fn new(config: &DriverConfig, grid: &SfaGrid, half_width: f64) -> Result<Self> {
        let n_half = grid.n_t / 2;
        let q_max = max_order(grid, config.carrier, half_width);
        let windows = (1..=q_max)
            .map(|q| window_bins(grid, config.carrier, q as f64, half_width))
            .collect::<Result<Vec<_>>>()?;
        Ok(SpectrumAccumulator {
            set: SpectrumSet {
                omega: (0..=n_half).map(|k| grid.angular_frequency(k)).collect(),
                s_par: vec![0.0; n_half + 1],
                s_perp: vec![0.0; n_half + 1],
                m4_par: vec![0.0; n_half + 1],
                m4_perp: vec![0.0; n_half + 1],
                cross: vec![Complex64::new(0.0, 0.0); n_half + 1],
                config: *config,
                grid: *grid,
                n_samples: 0,
                total_weight: 0.0,
                half_width,
                harmonics: (1..=q_max).map(HarmonicMoments::empty).collect(),
            },
            windows,
        })
    }

    pub fn add(&mut self, record: &DipoleRecord) -> Result<()> {
        let set = &mut self.set;
        if record.grid != set.grid || record.config != set.config {
            return Err(Error::MixedGrids);
        }
        let w = record.weight;
        for k in 0..set.omega.len() {
            let dp = record.spectrum_par[k];
            let dq = record.spectrum_perp[k];
            let (ip, iq) = (dp.norm_sqr(), dq.norm_sqr());
            set.s_par[k] += w * ip;
            set.s_perp[k] += w * iq;
            set.m4_par[k] += w * ip * ip;
            set.m4_perp[k] += w * iq * iq;
            set.cross[k] += w * dp.conj() * dq;
        }
        let d_omega = TAU / (set.grid.t_end - set.grid.t_start);
        for (h, bins) in set.harmonics.iter_mut().zip(&self.windows) {
            let (mut ip, mut iq, mut x) = (0.0, 0.0, Complex64::new(0.0, 0.0));
            for k in bins.clone() {
                let dp = record.spectrum_par[k];
                let dq = record.spectrum_perp[k];
                ip += dp.norm_sqr();
                iq += dq.norm_sqr();
                x += dp.conj() * dq;
            }
            let (ip, iq, x) = (ip * d_omega, iq * d_omega, x * d_omega);
            h.i_par += w * ip;
            h.i_perp += w * iq;
            h.i2_par += w * ip * ip;
            h.i2_perp += w * iq * iq;
            h.cross += w * x;
        }
        set.n_samples += 1;
        set.total_weight += w;
        Ok(())
    }

    pub fn finish(self) -> SpectrumSet {
        self.set
    }
}

/// Weighted moments of `records`, which must share one grid and driver.
pub fn accumulate(records: &[DipoleRecord], half_width: f64) -> Result<SpectrumSet> {
    let first = records
        .first()
        .ok_or_else(|| Error::Precondition("no dipole records to accumulate".into()))?;
    let mut acc = SpectrumAccumulator::new(&first.config, &first.grid, half_width)?;
    for r in records {
        acc.add(r)?;
    }
    Ok(acc.finish())
}

impl SpectrumSet {
    pub fn carrier(&self) -> f64 {
        self.config.carrier
    }

    fn d_omega(&self) -> f64 {
        TAU / (self.grid.t_end - self.grid.t_start)
    }

    /// Stored moments of order `q`, if its window fits the grid.
    pub fn harmonic(&self, q: u32) -> Option<&HarmonicMoments> {
        self.harmonics.get((q as usize).checked_sub(1)?)
    }

    /// Writes the spectrum table with columns
    /// `omega, order, S_par, S_perp, M4_par, M4_perp, re_X, im_X`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["omega", "order", "S_par", "S_perp", "M4_par", "M4_perp", "re_X", "im_X"])?;
        for k in 0..self.omega.len() {
            let row = [
                self.omega[k],
                self.omega[k] / self.carrier(),
                self.s_par[k],
                self.s_perp[k],
                self.m4_par[k],
                self.m4_perp[k],
                self.cross[k].re,
                self.cross[k].im,
            ];
            w.write_record(row.iter().map(|&x| format_float(x)))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Integral of the selected ensemble spectrum over
/// `[(q - h)ω_L, (q + h)ω_L]`, `h = half_width`.
pub fn harmonic_intensity(spectrum: &SpectrumSet, q: f64, pol: Polarization, half_width: f64) -> Result<f64> {
    let bins = window_bins(&spectrum.grid, spectrum.carrier(), q, half_width)?;
    let sum: f64 = bins
        .map(|k| match pol {
            Polarization::Parallel => spectrum.s_par[k],
            Polarization::Perpendicular => spectrum.s_perp[k],
            Polarization::Total => spectrum.s_par[k] + spectrum.s_perp[k],
        })
        .sum();
    Ok(sum * spectrum.d_omega())
}

/// Highest order `q ≥ min_order` whose intensity is at
/// least `fraction` of the largest intensity among those orders.
pub fn cutoff_order(intensities: &[(u32, f64)], min_order: u32, fraction: f64) -> Option<u32> {
    let candidates: Vec<&(u32, f64)> = intensities.iter().filter(|(q, _)| *q >= min_order).collect();
    let reference = candidates.iter().map(|(_, i)| *i).fold(0.0, f64::max);
    if !(reference > 0.0) {
        return None;
    }
    candidates
        .iter()
        .filter(|(_, i)| *i >= fraction * reference)
        .map(|(q, _)| *q)
        .max()
}

/// Shortest round-trip text of `x`, in exponent form outside `[1e-4, 1e6)`.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e6).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

/// Tolerance for matching squeezing angles between runs.
const ANGLE_TOL: f64 = 1e-9;

fn same_angle(a: f64, b: f64) -> bool {
    reduce_angle(a - b).abs() < ANGLE_TOL
}

/// `ΔS_q(φ) = |1 - S_φ(ω_q)/S_π(ω_q)|` with total window intensities.
///
/// `runs` holds ensemble spectra at one `(A, I_sq, ε̄)`, keyed by their
/// squeezing angle; both `φ` and `π` must be present.
pub fn delta_s(q: u32, phi: f64, runs: &[SpectrumSet]) -> Result<f64> {
    let find = |angle: f64| {
        runs.iter()
            .find(|r| same_angle(r.config.squeezing_angle, angle))
            .ok_or(Error::MissingRun(angle))
    };
    let target = find(phi)?;
    let reference = find(PI)?;
    let (a, b) = (&target.config, &reference.config);
    if a.ellipticity != b.ellipticity
        || a.squeezing_intensity != b.squeezing_intensity
        || a.mean_amplitude != b.mean_amplitude
        || target.grid != reference.grid
        || target.half_width != reference.half_width
    {
        return Err(Error::MixedGrids);
    }
    let total = |s: &SpectrumSet| {
        s.harmonic(q)
            .map(|h| h.intensity(Polarization::Total))
            .ok_or(Error::WindowOutOfRange {
                lo: (q as f64 - s.half_width) * s.carrier(),
                hi: (q as f64 + s.half_width) * s.carrier(),
                max: s.omega.last().copied().unwrap_or(0.0),
            })
    };
    let s_ref = total(reference)?;
    if !(s_ref > 0.0) {
        return Err(Error::UndefinedReference(q));
    }
    Ok((1.0 - total(target)? / s_ref).abs())
}

/// One coefficient `c_m = (1/N)·Σ_j ΔS(φ_j)·e^{-imφ_j}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficient {
    pub m: i64,
    pub value: Complex64,
}

/// Discrete Fourier coefficients of a 2π-periodic signal sampled on a
/// uniform ascending grid `φ_j = φ_0 + 2πj/N`. Orders run from `-⌊N/2⌋`
/// to `⌈N/2⌉ - 1`.
pub fn fourier_of_delta_s(phis: &[f64], values: &[f64]) -> Result<Vec<FourierCoefficient>> {
    let n = phis.len();
    if n == 0 || values.len() != n {
        return Err(Error::NonUniformGrid);
    }
    let step = TAU / n as f64;
    for (j, &p) in phis.iter().enumerate() {
        if ((p - phis[0]) - step * j as f64).abs() > 1e-9 {
            return Err(Error::NonUniformGrid);
        }
    }
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = (n / 2) as i64;
    let upper = n as i64 - half;
    Ok((-half..upper)
        .map(|m| {
            let k = m.rem_euclid(n as i64) as usize;
            // shift from j-indexing to the actual angles φ_j
            let phase = Complex64::from_polar(1.0, -(m as f64) * phis[0]);
            FourierCoefficient {
                m,
                value: buf[k] * phase / n as f64,
            }
        })
        .collect())
}

/// Uniform grid of `n` angles over `[-π, π)`.
pub fn uniform_angle_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| -PI + TAU * j as f64 / n as f64).collect()
}
