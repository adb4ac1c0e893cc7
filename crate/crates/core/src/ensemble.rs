//! Full pipeline for one driver: quadrature samples, dipoles, ensemble spectrum.

use rayon::prelude::*;

use crate::error::Result;
use crate::phase_space::{realizations, DriverConfig};
use crate::sfa::{compute_dipole, SfaGrid, SfaOptions};
use crate::spectra::{SpectrumAccumulator, SpectrumSet};

/// Records held in memory at once; bounds peak use for long grids.
const BATCH: usize = 32;

/// Weighted ensemble spectrum of `n_samples` field realizations.
///
/// Dipoles are computed in parallel and reduced in sample order, so the
/// result does not depend on the thread count.
pub fn ensemble_spectrum(
    config: &DriverConfig,
    grid: &SfaGrid,
    options: &SfaOptions,
    n_samples: usize,
    half_width: f64,
) -> Result<SpectrumSet> {
    let config = config.validated()?;
    grid.validate(&config)?;
    let samples = realizations(&config, n_samples)?;
    let mut acc = SpectrumAccumulator::new(&config, grid, half_width)?;
    for batch in samples.chunks(BATCH) {
        let records = batch
            .par_iter()
            .map(|r| compute_dipole(r, &config, grid, options))
            .collect::<Result<Vec<_>>>()?;
        for r in &records {
            acc.add(r)?;
        }
    }
    Ok(acc.finish())
}
