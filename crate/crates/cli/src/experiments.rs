//! Experiment orchestration: parameter points, cached ensemble spectra,
//! result tables and their CSV/SVG files.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sqhhg_core::ensemble::ensemble_spectrum;
use sqhhg_core::observables::{harmonic_reports, write_reports_csv, HarmonicReport};
use sqhhg_core::phase_space::{DriverConfig, Envelope, Layout};
use sqhhg_core::sfa::{SfaGrid, SfaOptions};
use sqhhg_core::spectra::{
    delta_s, fourier_of_delta_s, format_float, uniform_angle_grid, FourierCoefficient, SpectrumSet,
};
use sqhhg_core::toy::{g2_bsv_closed_form, g2_toy_depleted, g2_toy_quadrature, ToyModelParams};

use crate::config::{
    DepletionSweep, EllipticitySweep, Experiment, G2Report, PhiSweep, RunConfig, SpectrumExperiment, ToyG2,
};
use crate::error::{CliError, Context, Result};
use crate::svg::{self, Axes, Series};

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Reuse stored parameter points whose inputs match.
    pub resume: bool,
    /// Worker threads; rayon's default when absent.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    /// Files written, relative to the output directory.
    pub files: Vec<PathBuf>,
    pub computed: usize,
    pub resumed: usize,
}

/// Everything an ensemble spectrum depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct PointKey {
    driver: DriverConfig,
    grid: SfaGrid,
    sfa: SfaOptions,
    n_samples: usize,
    half_width: f64,
}

impl PointKey {
    fn id(&self) -> String {
        let json = serde_json::to_string(self).expect("point key serializes");
        Sha256::digest(json.as_bytes())[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn describe(&self) -> String {
        let d = &self.driver;
        format!(
            "eps={} A={} I_sq={} phi/pi={} layout={:?} depletion={} n={}",
            d.mean_amplitude,
            d.ellipticity,
            d.squeezing_intensity,
            d.squeezing_angle / PI,
            d.layout,
            self.sfa.depletion,
            self.n_samples
        )
    }
}

#[derive(Serialize, Deserialize)]
struct StoredPoint {
    key: PointKey,
    spectrum: SpectrumSet,
}

struct PointLog {
    id: String,
    description: String,
    seconds: f64,
    resumed: bool,
}

/// Ensemble spectra stored as one JSON file per parameter point under
/// `points/`, named by a hash of the point's inputs.
struct PointStore<'a> {
    dir: PathBuf,
    config: &'a RunConfig,
    resume: bool,
    log: Mutex<Vec<PointLog>>,
}

impl<'a> PointStore<'a> {
    fn new(out: &Path, config: &'a RunConfig, resume: bool) -> Result<Self> {
        let dir = out.join("points");
        fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
        Ok(PointStore {
            dir,
            config,
            resume,
            log: Mutex::new(Vec::new()),
        })
    }

    fn key(&self, driver: DriverConfig, sfa: SfaOptions) -> PointKey {
        PointKey {
            driver,
            grid: self.config.grid_for(&driver),
            sfa,
            n_samples: self.config.sampling.n_samples,
            half_width: self.config.sampling.half_width,
        }
    }

    fn spectrum(&self, driver: DriverConfig, sfa: SfaOptions) -> Result<SpectrumSet> {
        let key = self.key(driver, sfa);
        let id = key.id();
        let path = self.dir.join(format!("{id}.json"));
        let start = Instant::now();
        if self.resume && path.exists() {
            let text = fs::read_to_string(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            let stored: StoredPoint =
                serde_json::from_str(&text).map_err(|source| CliError::Point { path: path.clone(), source })?;
            if stored.key == key {
                self.record(id, &key, start, true);
                return Ok(stored.spectrum);
            }
        }
        let spectrum = ensemble_spectrum(&key.driver, &key.grid, &key.sfa, key.n_samples, key.half_width)
            .context(|| format!("point {}", key.describe()))?;
        let stored = StoredPoint { key, spectrum };
        let text = serde_json::to_string(&stored).expect("spectrum serializes");
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, text).map_err(|source| CliError::Io { path: tmp.clone(), source })?;
        fs::rename(&tmp, &path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        self.record(id, &key, start, false);
        Ok(stored.spectrum)
    }

    /// Spectra for all points, in the order given.
    fn spectra(&self, points: &[(DriverConfig, SfaOptions)]) -> Result<Vec<SpectrumSet>> {
        points.par_iter().map(|&(d, s)| self.spectrum(d, s)).collect()
    }

    fn record(&self, id: String, key: &PointKey, start: Instant, resumed: bool) {
        self.log.lock().expect("log lock").push(PointLog {
            id,
            description: key.describe(),
            seconds: start.elapsed().as_secs_f64(),
            resumed,
        });
    }
}

/// Output files collected during a run.
struct Outputs<'a> {
    dir: &'a Path,
    csv: bool,
    svg: bool,
    written: Vec<PathBuf>,
}

impl Outputs<'_> {
    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| CliError::Io { path: parent.into(), source })?;
        }
        fs::write(&path, bytes).map_err(|source| CliError::Io { path: path.clone(), source })?;
        self.written.push(PathBuf::from(name));
        Ok(())
    }

    fn csv<F>(&mut self, name: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> csv::Result<()>,
    {
        if !self.csv {
            return Ok(());
        }
        let mut buf = Vec::new();
        fill(&mut buf).map_err(|source| CliError::Csv { path: self.dir.join(name), source })?;
        self.write_bytes(name, &buf)
    }

    fn table(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        self.csv(name, |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
            Ok(())
        })
    }

    fn svg<F: FnOnce() -> String>(&mut self, name: &str, render: F) -> Result<()> {
        if !self.svg {
            return Ok(());
        }
        let text = render();
        self.write_bytes(name, text.as_bytes())
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn with_angle(driver: &DriverConfig, phi: f64) -> DriverConfig {
    DriverConfig {
        squeezing_angle: phi,
        ..*driver
    }
}

fn same_angle(a: f64, b: f64) -> bool {
    sqhhg_core::phase_space::reduce_angle(a - b).abs() < 1e-9
}

/// Runs the configured experiment and writes its outputs and manifest.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunSummary> {
    config.validate()?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = opts.threads {
            b = b.num_threads(n);
        }
        b.build()?
    };
    let out = config.output.directory.as_path();
    fs::create_dir_all(out).map_err(|source| CliError::Io { path: out.into(), source })?;
    let started = Instant::now();
    let store = PointStore::new(out, config, opts.resume)?;
    let mut outputs = Outputs {
        dir: out,
        csv: config.output.csv,
        svg: config.output.svg,
        written: Vec::new(),
    };
    let experiment = config
        .experiment
        .as_ref()
        .ok_or_else(|| CliError::Config("no experiment selected".into()))?;
    pool.install(|| match experiment {
        Experiment::Spectrum(e) => run_spectrum(config, e, &store, &mut outputs),
        Experiment::PhiSweep(e) => run_phi_sweep(config, e, &store, &mut outputs),
        Experiment::EllipticitySweep(e) => run_ellipticity_sweep(config, e, &store, &mut outputs),
        Experiment::G2Report(e) => run_g2_report(config, e, &store, &mut outputs),
        Experiment::ToyG2(e) => run_toy_g2(e, &mut outputs),
        Experiment::DepletionSweep(e) => run_depletion_sweep(config, e, &store, &mut outputs),
    })?;

    let effective = toml::to_string(config).expect("config serializes");
    outputs.write_bytes("config.toml", effective.as_bytes())?;
    let mut log = store.log.into_inner().expect("log lock");
    log.sort_by(|a, b| a.id.cmp(&b.id));
    let summary = RunSummary {
        files: outputs.written.clone(),
        computed: log.iter().filter(|p| !p.resumed).count(),
        resumed: log.iter().filter(|p| p.resumed).count(),
    };
    let mut manifest = format!(
        "program = sqhhg {}\nexperiment = {}\nconfig_sha256 = {}\nthreads = {}\npoints_computed = {}\npoints_resumed = {}\n",
        env!("CARGO_PKG_VERSION"),
        experiment.kind().name(),
        config.physics_hash(),
        pool.current_num_threads(),
        summary.computed,
        summary.resumed,
    );
    for p in &log {
        manifest.push_str(&format!(
            "point {} {} {:.3}s {}\n",
            p.id,
            if p.resumed { "resumed" } else { "computed" },
            p.seconds,
            p.description
        ));
    }
    for f in &summary.files {
        manifest.push_str(&format!("file {}\n", f.display()));
    }
    manifest.push_str(&format!("wall_seconds = {:.3}\n", started.elapsed().as_secs_f64()));
    outputs.write_bytes("manifest", manifest.as_bytes())?;
    let mut summary = summary;
    summary.files.push(PathBuf::from("manifest"));
    Ok(summary)
}

fn reports(config: &RunConfig, spectrum: &SpectrumSet, orders: &[u32]) -> Result<Vec<HarmonicReport>> {
    harmonic_reports(spectrum, orders, config.sampling.g2_mode).context(|| "harmonic observables".into())
}

fn write_reports(out: &mut Outputs, name: &str, reports: &[HarmonicReport]) -> Result<()> {
    out.csv(name, |buf| write_reports_csv(reports, buf))
}

fn run_spectrum(config: &RunConfig, e: &SpectrumExperiment, store: &PointStore, out: &mut Outputs) -> Result<()> {
    let spectrum = store.spectrum(config.driver, config.sfa)?;
    out.csv("spectrum.csv", |buf| spectrum.write_csv(buf))?;
    let table = reports(config, &spectrum, &e.orders)?;
    write_reports(out, "harmonics.csv", &table)?;
    out.svg("spectrum.svg", || {
        let series = |label: &str, s: &[f64]| Series {
            label: label.into(),
            points: spectrum.omega.iter().zip(s).map(|(w, v)| (w / spectrum.carrier(), *v)).collect(),
        };
        svg::line_plot(
            &Axes {
                title: "Ensemble spectrum",
                x_label: "harmonic order",
                y_label: "S(ω)",
                log_y: true,
            },
            &[series("parallel", &spectrum.s_par), series("perpendicular", &spectrum.s_perp)],
        )
    })
}

/// ΔS table of a φ sweep: `values[i][j]` belongs to `angles[i]`, `orders[j]`.
#[derive(Debug, Clone, PartialEq)]
struct PhiSweepTable {
    pub angles: Vec<f64>,
    pub orders: Vec<u32>,
    pub values: Vec<Vec<f64>>,
    /// Per order, present when the angles form a uniform grid.
    pub fourier: Option<Vec<Vec<FourierCoefficient>>>,
}

fn sweep_angles(e: &PhiSweep) -> Vec<f64> {
    match &e.angles_pi {
        Some(a) => a.iter().map(|x| x * PI).collect(),
        None => uniform_angle_grid(e.n_angles),
    }
}

fn phi_sweep_table(config: &RunConfig, e: &PhiSweep, store: &PointStore) -> Result<PhiSweepTable> {
    let angles = sweep_angles(e);
    let mut runs_at: Vec<f64> = angles.clone();
    if !angles.iter().any(|&a| same_angle(a, PI)) {
        runs_at.push(PI);
    }
    let points: Vec<_> = runs_at.iter().map(|&a| (with_angle(&config.driver, a), config.sfa)).collect();
    let runs = store.spectra(&points)?;
    let values = angles
        .iter()
        .map(|&phi| {
            e.orders
                .iter()
                .map(|&q| delta_s(q, phi, &runs).context(|| format!("ΔS at q={q}, φ={phi}")))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let fourier = e
        .orders
        .iter()
        .enumerate()
        .map(|(j, _)| {
            let column: Vec<f64> = values.iter().map(|row| row[j]).collect();
            fourier_of_delta_s(&angles, &column).ok()
        })
        .collect::<Option<Vec<_>>>();
    Ok(PhiSweepTable {
        angles,
        orders: e.orders.clone(),
        values,
        fourier,
    })
}

fn run_phi_sweep(config: &RunConfig, e: &PhiSweep, store: &PointStore, out: &mut Outputs) -> Result<()> {
    let t = phi_sweep_table(config, e, store)?;
    let mut header = vec!["phi".to_string(), "phi_over_pi".to_string()];
    header.extend(t.orders.iter().map(|q| format!("dS_q{q}")));
    let rows: Vec<Vec<String>> = t
        .angles
        .iter()
        .zip(&t.values)
        .map(|(phi, row)| {
            let mut r = vec![format_float(*phi), format_float(phi / PI)];
            r.extend(row.iter().map(|&v| format_float(v)));
            r
        })
        .collect();
    out.table("delta_s.csv", &header, &rows)?;
    if let Some(fourier) = &t.fourier {
        let header: Vec<String> = ["q", "m", "re", "im", "abs"].iter().map(|s| s.to_string()).collect();
        let rows: Vec<Vec<String>> = t
            .orders
            .iter()
            .zip(fourier)
            .flat_map(|(q, coeffs)| {
                coeffs.iter().map(move |c| {
                    vec![
                        q.to_string(),
                        c.m.to_string(),
                        format_float(c.value.re),
                        format_float(c.value.im),
                        format_float(c.value.norm()),
                    ]
                })
            })
            .collect();
        out.table("delta_s_fourier.csv", &header, &rows)?;
    }
    out.svg("delta_s.svg", || {
        let series: Vec<Series> = t
            .orders
            .iter()
            .enumerate()
            .map(|(j, q)| Series {
                label: format!("q = {q}"),
                points: t.angles.iter().zip(&t.values).map(|(a, row)| (a / PI, row[j])).collect(),
            })
            .collect();
        svg::line_plot(
            &Axes {
                title: "ΔS against squeezing angle",
                x_label: "φ/π",
                y_label: "ΔS",
                log_y: false,
            },
            &series,
        )
    })
}

fn run_ellipticity_sweep(config: &RunConfig, e: &EllipticitySweep, store: &PointStore, out: &mut Outputs) -> Result<()> {
    let mut angles: Vec<f64> = e.angles_pi.iter().map(|a| a * PI).collect();
    let listed = angles.len();
    for extra in [0.0, PI] {
        if !angles.iter().any(|&a| same_angle(a, extra)) {
            angles.push(extra);
        }
    }
    let points: Vec<_> = e
        .ellipticities
        .iter()
        .flat_map(|&a| {
            angles.iter().map(move |&phi| {
                let d = DriverConfig {
                    ellipticity: a,
                    squeezing_angle: phi,
                    ..config.driver
                };
                (d, config.sfa)
            })
        })
        .collect();
    let spectra = store.spectra(&points)?;
    let per_a = angles.len();

    let mut long_rows = Vec::new();
    let mut ds_rows = Vec::new();
    let mut heat: Vec<Vec<Vec<Option<f64>>>> = vec![Vec::new(); listed];
    for (ia, &a) in e.ellipticities.iter().enumerate() {
        let runs = &spectra[ia * per_a..(ia + 1) * per_a];
        for (ip, &phi) in angles.iter().take(listed).enumerate() {
            let table = reports(config, &runs[ip], &e.orders)
                .map_err(|err| annotate(err, &format!("A={a}, φ/π={}", phi / PI)))?;
            write_reports(out, &format!("reports/A{a}_phi{}pi.csv", phi / PI), &table)?;
            heat[ip].push(table.iter().map(|r| r.ellipticity).collect());
            for r in &table {
                long_rows.push(vec![
                    format_float(a),
                    format_float(phi / PI),
                    r.q.to_string(),
                    format_float(r.i_par),
                    format_float(r.i_perp),
                    opt(r.ellipticity),
                    opt(r.visibility),
                    opt(r.g2_par),
                    opt(r.g2_perp),
                    opt(r.phase),
                ]);
            }
        }
        for &q in &e.orders {
            let v = delta_s(q, 0.0, runs).context(|| format!("ΔS(0) at A={a}, q={q}"))?;
            ds_rows.push(vec![format_float(a), q.to_string(), format_float(v)]);
        }
    }
    let header: Vec<String> = ["A", "phi_over_pi", "q", "I_par", "I_perp", "E_q", "V", "g2_par", "g2_perp", "phase"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    out.table("ellipticity_sweep.csv", &header, &long_rows)?;
    let header: Vec<String> = ["A", "q", "dS_phi0"].iter().map(|s| s.to_string()).collect();
    out.table("delta_s_phi0.csv", &header, &ds_rows)?;
    for (ip, grid) in heat.iter().enumerate() {
        let phi_pi = angles[ip] / PI;
        out.svg(&format!("ellipticity_phi{phi_pi}pi.svg"), || {
            svg::heat_map(
                &format!("E_q at φ = {phi_pi}π"),
                "harmonic order",
                "A",
                &e.orders.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
                &e.ellipticities.iter().map(|&a| format_float(a)).collect::<Vec<_>>(),
                grid,
            )
        })?;
    }
    Ok(())
}

fn annotate(err: CliError, what: &str) -> CliError {
    match err {
        CliError::Run { context, source } => CliError::Run {
            context: format!("{context} ({what})"),
            source,
        },
        other => other,
    }
}

fn run_g2_report(config: &RunConfig, e: &G2Report, store: &PointStore, out: &mut Outputs) -> Result<()> {
    let spectrum = store.spectrum(config.driver, config.sfa)?;
    let table = reports(config, &spectrum, &e.orders)?;
    write_reports(out, "g2_report.csv", &table)?;
    out.svg("g2_report.svg", || {
        let series = |label: &str, f: fn(&HarmonicReport) -> Option<f64>| Series {
            label: label.into(),
            points: table.iter().filter_map(|r| f(r).map(|g| (r.q as f64, g))).collect(),
        };
        svg::line_plot(
            &Axes {
                title: "g² against harmonic order",
                x_label: "harmonic order",
                y_label: "g²",
                log_y: true,
            },
            &[series("parallel", |r| r.g2_par), series("perpendicular", |r| r.g2_perp)],
        )
    })
}

fn run_toy_g2(e: &ToyG2, out: &mut Outputs) -> Result<()> {
    let cells: Vec<(f64, f64, f64)> = e
        .exponents
        .iter()
        .flat_map(|&p| {
            e.variances
                .iter()
                .flat_map(move |&sigma| e.means.iter().map(move |&mean| (p, sigma, mean)))
        })
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(p, sigma, mean)| {
            let params = ToyModelParams { p, sigma, mean };
            let what = || format!("toy model p={p}, σ={sigma}, ε̄={mean}");
            let quad = g2_toy_quadrature(&params).context(what)?;
            let closed = (mean == 0.0).then(|| g2_bsv_closed_form(p));
            let depleted = match e.critical_field {
                Some(ec) => Some(g2_toy_depleted(&params, ec, e.suppression_exponent).context(what)?),
                None => None,
            };
            Ok(vec![
                format_float(p),
                format_float(sigma),
                format_float(mean),
                format_float(quad),
                opt(closed),
                opt(depleted),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let header: Vec<String> = ["p", "sigma", "mean", "g2_quadrature", "g2_closed_form", "g2_depleted"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    out.table("toy_g2.csv", &header, &rows)?;
    out.svg("toy_g2.svg", || {
        let series: Vec<Series> = e
            .means
            .iter()
            .enumerate()
            .map(|(k, mean)| Series {
                label: format!("ε̄ = {mean}"),
                points: cells
                    .iter()
                    .zip(&rows)
                    .filter(|((_, s, m), _)| *s == e.variances[0] && *m == e.means[k])
                    .map(|((p, _, _), r)| (*p, r[3].parse().unwrap_or(f64::NAN)))
                    .collect(),
            })
            .collect();
        svg::line_plot(
            &Axes {
                title: "Toy-model g²",
                x_label: "p",
                y_label: "g²",
                log_y: true,
            },
            &series,
        )
    })
}

/// Driver and engine settings of one depletion-sweep point: linear
/// polarization, sin² envelope and ADK depletion.
pub fn depletion_point(config: &RunConfig, e: &DepletionSweep, mean: f64, squeezing_intensity: f64) -> (DriverConfig, SfaOptions) {
    let driver = DriverConfig {
        mean_amplitude: mean,
        squeezing_intensity,
        layout: Layout::Linear,
        envelope: Envelope::Sin2 {
            duration_fs: e.duration_fs,
        },
        ..config.driver
    };
    let sfa = SfaOptions {
        depletion: true,
        ..config.sfa
    };
    (driver, sfa)
}

fn run_depletion_sweep(config: &RunConfig, e: &DepletionSweep, store: &PointStore, out: &mut Outputs) -> Result<()> {
    let cells: Vec<(f64, f64)> = e
        .squeezing_intensities
        .iter()
        .flat_map(|&isq| e.means.iter().map(move |&m| (m, isq)))
        .collect();
    let points: Vec<_> = cells.iter().map(|&(m, isq)| depletion_point(config, e, m, isq)).collect();
    let spectra = store.spectra(&points)?;
    let mut rows = Vec::new();
    let mut g2s = Vec::new();
    for (&(m, isq), s) in cells.iter().zip(&spectra) {
        let r = reports(config, s, &[e.order]).map_err(|err| annotate(err, &format!("ε̄={m}, I_sq={isq}")))?;
        g2s.push(r[0].g2_par);
        rows.push(vec![
            format_float(m),
            format_float(isq),
            e.order.to_string(),
            format_float(r[0].i_par),
            opt(r[0].g2_par),
        ]);
    }
    let header: Vec<String> = ["mean", "I_sq", "q", "I_par", "g2_par"].iter().map(|s| s.to_string()).collect();
    out.table("depletion.csv", &header, &rows)?;
    out.svg("depletion.svg", || {
        let series: Vec<Series> = e
            .means
            .iter()
            .map(|&m| Series {
                label: format!("ε̄ = {m}"),
                points: cells
                    .iter()
                    .zip(&g2s)
                    .filter(|((cm, _), _)| *cm == m)
                    .filter_map(|((_, isq), g)| g.map(|g| (isq.log10(), g)))
                    .collect(),
            })
            .collect();
        svg::line_plot(
            &Axes {
                title: &format!("g² of harmonic {} with depletion", e.order),
                x_label: "log10 I_sq",
                y_label: "g²",
                log_y: true,
            },
            &series,
        )
    })
}
