//! Run configuration: a TOML file with `[driver]`, `[grid]`, `[sfa]`,
//! `[sampling]`, `[experiment]` and `[output]` sections. Every section and
//! every field is optional; missing values take the defaults below.
//!
//! Squeezing angles inside `[experiment]` are given in units of π
//! (`angles_pi = [0.0, 1.0]`); the driver's own `squeezing_angle` is in radians.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sqhhg_core::observables::G2Mode;
use sqhhg_core::phase_space::DriverConfig;
use sqhhg_core::sfa::{SfaGrid, SfaOptions};
use sqhhg_core::spectra::DEFAULT_HALF_WIDTH;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub driver: DriverConfig,
    /// Explicit time grid; derived from the driver when absent.
    pub grid: Option<SfaGrid>,
    pub sfa: SfaOptions,
    pub sampling: Sampling,
    pub experiment: Option<Experiment>,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            driver: DriverConfig::default(),
            grid: None,
            sfa: SfaOptions::default(),
            sampling: Sampling::default(),
            experiment: None,
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    /// Gauss–Hermite nodes along the squeezed quadrature.
    pub n_samples: usize,
    /// Half-width of each harmonic window in units of ω_L.
    pub half_width: f64,
    pub g2_mode: G2Mode,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            n_samples: 140,
            half_width: DEFAULT_HALF_WIDTH,
            g2_mode: G2Mode::Windowed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub csv: bool,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
            csv: true,
            svg: false,
        }
    }
}

/// Experiment block, selected by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum(SpectrumExperiment),
    PhiSweep(PhiSweep),
    EllipticitySweep(EllipticitySweep),
    G2Report(G2Report),
    ToyG2(ToyG2),
    DepletionSweep(DepletionSweep),
}

/// Experiment kinds, one per subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Spectrum,
    PhiSweep,
    EllipticitySweep,
    G2Report,
    ToyG2,
    DepletionSweep,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Spectrum => "spectrum",
            Kind::PhiSweep => "phi-sweep",
            Kind::EllipticitySweep => "ellipticity-sweep",
            Kind::G2Report => "g2-report",
            Kind::ToyG2 => "toy-g2",
            Kind::DepletionSweep => "depletion-sweep",
        }
    }

    pub fn default_experiment(self) -> Experiment {
        match self {
            Kind::Spectrum => Experiment::Spectrum(Default::default()),
            Kind::PhiSweep => Experiment::PhiSweep(Default::default()),
            Kind::EllipticitySweep => Experiment::EllipticitySweep(Default::default()),
            Kind::G2Report => Experiment::G2Report(Default::default()),
            Kind::ToyG2 => Experiment::ToyG2(Default::default()),
            Kind::DepletionSweep => Experiment::DepletionSweep(Default::default()),
        }
    }
}

impl Experiment {
    pub fn kind(&self) -> Kind {
        match self {
            Experiment::Spectrum(_) => Kind::Spectrum,
            Experiment::PhiSweep(_) => Kind::PhiSweep,
            Experiment::EllipticitySweep(_) => Kind::EllipticitySweep,
            Experiment::G2Report(_) => Kind::G2Report,
            Experiment::ToyG2(_) => Kind::ToyG2,
            Experiment::DepletionSweep(_) => Kind::DepletionSweep,
        }
    }
}

fn odd_orders(lo: u32, hi: u32) -> Vec<u32> {
    (lo..=hi).filter(|q| q % 2 == 1).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumExperiment {
    /// Orders listed in the harmonic table.
    pub orders: Vec<u32>,
}

impl Default for SpectrumExperiment {
    fn default() -> Self {
        SpectrumExperiment { orders: odd_orders(1, 35) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhiSweep {
    /// Points of the uniform grid over [-π, π) used when `angles_pi` is absent.
    pub n_angles: usize,
    /// Explicit angles in units of π.
    pub angles_pi: Option<Vec<f64>>,
    pub orders: Vec<u32>,
}

impl Default for PhiSweep {
    fn default() -> Self {
        PhiSweep {
            n_angles: 24,
            angles_pi: None,
            orders: vec![17, 19, 21],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EllipticitySweep {
    pub ellipticities: Vec<f64>,
    /// Squeezing angles in units of π; 0 amplitude, 1 phase squeezing.
    pub angles_pi: Vec<f64>,
    pub orders: Vec<u32>,
}

impl Default for EllipticitySweep {
    fn default() -> Self {
        EllipticitySweep {
            ellipticities: vec![0.1, 0.5, 0.9],
            angles_pi: vec![0.0, 1.0],
            orders: odd_orders(3, 29),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct G2Report {
    pub orders: Vec<u32>,
}

impl Default for G2Report {
    fn default() -> Self {
        G2Report { orders: odd_orders(3, 29) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyG2 {
    /// Response exponents p.
    pub exponents: Vec<f64>,
    /// Field variances σ.
    pub variances: Vec<f64>,
    /// Mean fields ε̄.
    pub means: Vec<f64>,
    /// Adds a depleted column when set.
    pub critical_field: Option<f64>,
    pub suppression_exponent: f64,
}

impl Default for ToyG2 {
    fn default() -> Self {
        ToyG2 {
            exponents: vec![0.0, 0.5, 1.0, 2.0, 4.0, 8.0],
            variances: vec![0.1, 1.0, 10.0],
            means: vec![0.0],
            critical_field: None,
            suppression_exponent: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepletionSweep {
    pub means: Vec<f64>,
    pub squeezing_intensities: Vec<f64>,
    pub order: u32,
    /// Total length of the sin² envelope in femtoseconds.
    pub duration_fs: f64,
}

impl Default for DepletionSweep {
    fn default() -> Self {
        DepletionSweep {
            means: vec![0.0, 0.03, 0.053],
            squeezing_intensities: vec![1e-5, 5e-5, 1e-4, 4e-4],
            order: 13,
            duration_fs: 13.0,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub samples: Option<usize>,
    pub svg: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|source| CliError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    /// Applies overrides and fixes the experiment to `kind`. A file whose
    /// experiment block names another kind is rejected.
    pub fn resolve(mut self, kind: Kind, overrides: &Overrides) -> Result<Self> {
        match &self.experiment {
            Some(e) if e.kind() != kind => {
                return Err(CliError::Config(format!(
                    "config describes a {} experiment, not {}",
                    e.kind().name(),
                    kind.name()
                )))
            }
            Some(_) => {}
            None => self.experiment = Some(kind.default_experiment()),
        }
        if let Some(out) = &overrides.out {
            self.output.directory = out.clone();
        }
        if let Some(n) = overrides.samples {
            self.sampling.n_samples = n;
        }
        if overrides.svg {
            self.output.svg = true;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn experiment(&self) -> &Experiment {
        self.experiment
            .as_ref()
            .expect("experiment is fixed by resolve")
    }

    /// Structural checks; physics checks happen in the core on first use.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        if self.sampling.n_samples == 0 {
            return bad("sampling.n_samples must be at least 1");
        }
        if !(self.sampling.half_width > 0.0 && self.sampling.half_width <= 0.5) {
            return bad("sampling.half_width must lie in (0, 0.5]");
        }
        let Some(exp) = &self.experiment else {
            return Ok(());
        };
        match exp {
            Experiment::Spectrum(e) if e.orders.is_empty() => bad("spectrum.orders is empty"),
            Experiment::G2Report(e) if e.orders.is_empty() => bad("g2-report.orders is empty"),
            Experiment::PhiSweep(e) => {
                if e.orders.is_empty() {
                    return bad("phi-sweep.orders is empty");
                }
                match &e.angles_pi {
                    Some(a) if a.is_empty() => bad("phi-sweep.angles_pi is empty"),
                    None if e.n_angles == 0 => bad("phi-sweep.n_angles must be at least 1"),
                    _ => Ok(()),
                }
            }
            Experiment::EllipticitySweep(e) => {
                if e.ellipticities.is_empty() {
                    bad("ellipticity-sweep.ellipticities is empty")
                } else if e.angles_pi.is_empty() {
                    bad("ellipticity-sweep.angles_pi is empty")
                } else if e.orders.is_empty() {
                    bad("ellipticity-sweep.orders is empty")
                } else {
                    Ok(())
                }
            }
            Experiment::ToyG2(e) => {
                if e.exponents.is_empty() || e.variances.is_empty() || e.means.is_empty() {
                    bad("toy-g2 grids must be non-empty")
                } else {
                    Ok(())
                }
            }
            Experiment::DepletionSweep(e) => {
                if e.means.is_empty() || e.squeezing_intensities.is_empty() {
                    bad("depletion-sweep grids must be non-empty")
                } else if !(e.duration_fs > 0.0) {
                    bad("depletion-sweep.duration_fs must be positive")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// SHA-256 of the canonical TOML form of everything except `[output]`.
    pub fn physics_hash(&self) -> String {
        let mut stripped = self.clone();
        stripped.output = OutputConfig::default();
        let text = toml::to_string(&stripped).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn grid_for(&self, driver: &DriverConfig) -> SfaGrid {
        self.grid.unwrap_or_else(|| SfaGrid::for_driver(driver))
    }
}
