//! Per-harmonic polarization and photon-statistics observables built from the
//! window-integrated ensemble moments of a [`SpectrumSet`].

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{format_float, HarmonicMoments, Polarization, SpectrumSet};

/// Denominators below this fraction of the spectral maximum mark a dark harmonic.
pub const DARK_FRACTION: f64 = 1e-300;

/// How the fourth moment entering g² is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum G2Mode {
    /// Per-realization intensities integrated over the harmonic window.
    #[default]
    Windowed,
    /// Spectral density at the single bin nearest `q·ω_L`.
    Pointwise,
}

fn moments(spectrum: &SpectrumSet, q: u32) -> Result<&HarmonicMoments> {
    spectrum.harmonic(q).ok_or_else(|| {
        let c = spectrum.carrier();
        Error::WindowOutOfRange {
            lo: (q as f64 - spectrum.half_width) * c,
            hi: (q as f64 + spectrum.half_width) * c,
            max: spectrum.omega.last().copied().unwrap_or(0.0),
        }
    })
}

/// Largest windowed intensity over all stored orders, the scale for darkness.
fn brightest(spectrum: &SpectrumSet) -> f64 {
    spectrum
        .harmonics
        .iter()
        .map(|h| h.i_par.max(h.i_perp))
        .fold(0.0, f64::max)
}

fn check_lit(spectrum: &SpectrumSet, q: u32, value: f64) -> Result<()> {
    if !(value > DARK_FRACTION * brightest(spectrum)) || value <= 0.0 {
        return Err(Error::DarkHarmonic(q));
    }
    Ok(())
}

/// `E_q = |2·Im X_q| / (I_∥ + I_⊥)`.
pub fn ellipticity(spectrum: &SpectrumSet, q: u32) -> Result<f64> {
    let h = moments(spectrum, q)?;
    let total = h.i_par + h.i_perp;
    check_lit(spectrum, q, total)?;
    Ok((2.0 * h.cross.im).abs() / total)
}

/// `V = (I_∥ - I_⊥) / (I_∥ + I_⊥)`.
pub fn visibility(spectrum: &SpectrumSet, q: u32) -> Result<f64> {
    let h = moments(spectrum, q)?;
    let total = h.i_par + h.i_perp;
    check_lit(spectrum, q, total)?;
    Ok((h.i_par - h.i_perp) / total)
}

/// Relative phase `arg X_q` between the polarization components.
pub fn relative_phase(spectrum: &SpectrumSet, q: u32) -> Result<f64> {
    let h = moments(spectrum, q)?;
    check_lit(spectrum, q, h.i_par + h.i_perp)?;
    Ok(h.cross.arg())
}

/// `g² = Σw·I² / (Σw·I)²` for one polarization, normalized by the total
/// weight so that unnormalized weights give the same result.
pub fn g2(spectrum: &SpectrumSet, q: u32, pol: Polarization, mode: G2Mode) -> Result<f64> {
    let w = spectrum.total_weight;
    let (second, fourth) = match mode {
        G2Mode::Windowed => {
            let h = moments(spectrum, q)?;
            match pol {
                Polarization::Parallel => (h.i_par, h.i2_par),
                Polarization::Perpendicular => (h.i_perp, h.i2_perp),
                Polarization::Total => {
                    return Err(Error::Precondition("g2 is defined per polarization".into()))
                }
            }
        }
        G2Mode::Pointwise => {
            moments(spectrum, q)?;
            let d_omega = spectrum.omega.get(1).copied().unwrap_or(0.0);
            let k = ((q as f64 * spectrum.carrier()) / d_omega).round() as usize;
            match pol {
                Polarization::Parallel => (spectrum.s_par[k], spectrum.m4_par[k]),
                Polarization::Perpendicular => (spectrum.s_perp[k], spectrum.m4_perp[k]),
                Polarization::Total => {
                    return Err(Error::Precondition("g2 is defined per polarization".into()))
                }
            }
        }
    };
    let scale = match mode {
        G2Mode::Windowed => brightest(spectrum),
        G2Mode::Pointwise => spectrum
            .s_par
            .iter()
            .chain(&spectrum.s_perp)
            .fold(0.0, |m: f64, &x| m.max(x)),
    };
    if !(second > DARK_FRACTION * scale) || second <= 0.0 {
        return Err(Error::DarkHarmonic(q));
    }
    Ok(w * fourth / (second * second))
}

/// Observables of one harmonic order. Entries of a dark harmonic are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicReport {
    pub q: u32,
    pub i_par: f64,
    pub i_perp: f64,
    pub ellipticity: Option<f64>,
    pub visibility: Option<f64>,
    pub g2_par: Option<f64>,
    pub g2_perp: Option<f64>,
    pub phase: Option<f64>,
}

impl HarmonicReport {
    pub fn new(spectrum: &SpectrumSet, q: u32, mode: G2Mode) -> Result<Self> {
        let h = moments(spectrum, q)?;
        let lit = |r: Result<f64>| match r {
            Ok(v) => Ok(Some(v)),
            Err(Error::DarkHarmonic(_)) => Ok(None),
            Err(e) => Err(e),
        };
        Ok(HarmonicReport {
            q,
            i_par: h.i_par,
            i_perp: h.i_perp,
            ellipticity: lit(ellipticity(spectrum, q))?,
            visibility: lit(visibility(spectrum, q))?,
            g2_par: lit(g2(spectrum, q, Polarization::Parallel, mode))?,
            g2_perp: lit(g2(spectrum, q, Polarization::Perpendicular, mode))?,
            phase: lit(relative_phase(spectrum, q))?,
        })
    }
}

/// Reports for every listed order, in the given order.
pub fn harmonic_reports(spectrum: &SpectrumSet, orders: &[u32], mode: G2Mode) -> Result<Vec<HarmonicReport>> {
    orders.iter().map(|&q| HarmonicReport::new(spectrum, q, mode)).collect()
}

/// CSV with columns `q, I_par, I_perp, E_q, V, g2_par, g2_perp, phase`;
/// absent values are empty cells.
pub fn write_reports_csv<W: Write>(reports: &[HarmonicReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["q", "I_par", "I_perp", "E_q", "V", "g2_par", "g2_perp", "phase"])?;
    let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
    for r in reports {
        w.write_record([
            r.q.to_string(),
            format_float(r.i_par),
            format_float(r.i_perp),
            opt(r.ellipticity),
            opt(r.visibility),
            opt(r.g2_par),
            opt(r.g2_perp),
            opt(r.phase),
        ])?;
    }
    w.flush()?;
    Ok(())
}
