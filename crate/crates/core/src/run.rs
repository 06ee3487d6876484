//! Executes a [`RunConfig`] and writes its data files plus `manifest.json`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;

use crate::adiabatic::{adia_intra_position, decompose, frames, min_overlap, AdiabaticFrame};
use crate::config::{preset, Mode, RunConfig};
use crate::error::Result;
use crate::laser::Pulse;
use crate::model::{transition_dipole, Dimer, TransitionDipole, SITES};
use crate::propagator::{acceleration_from_position, propagate_dimer};
use crate::scans::{
    classify, coupling_sweep, equal_spacing_check, polar_scan, scaling_exponent, Class, CouplingSweep, Engine,
    PerpCurve, PolarScan, SpacingCheck, Threshold, INTERPRETABLE_T1,
};
use crate::spectrum::{power_spectrum_with, Spectrum, PAD_FACTOR};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Derived {
    pub gap: f64,
    pub closed_form_gap: f64,
    pub omega0: f64,
    pub duration: f64,
    pub steps: usize,
    pub energies: [f64; SITES],
    pub closed_form_energies: [f64; SITES],
    pub sites: [[f64; 2]; SITES],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub version: String,
    pub config: RunConfig,
    pub derived: Derived,
    pub files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub dimer: Dimer,
    pub pulse: Pulse,
    pub derived: Derived,
}

/// Validates a configuration and computes everything derived from it.
pub fn resolve(config: &RunConfig) -> Result<Resolved> {
    config.validate()?;
    let dimer = Dimer::new(config.model)?;
    let pulse = config.pulse.resolve(dimer.eigen.gap)?;
    let derived = Derived {
        gap: dimer.eigen.gap,
        closed_form_gap: config.model.closed_form_gap(),
        omega0: pulse.omega0,
        duration: pulse.duration,
        steps: pulse.steps,
        energies: dimer.eigen.energies,
        closed_form_energies: config.model.closed_form_energies(),
        sites: dimer.geometry.sites,
    };
    Ok(Resolved {
        config: config.clone(),
        dimer,
        pulse,
        derived,
    })
}

#[derive(Debug, Clone)]
pub struct SpectrumRun {
    pub spectrum: Spectrum,
    pub times: Vec<f64>,
    pub position: Vec<[f64; 2]>,
    pub acceleration: Vec<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct AdiabaticComparison {
    pub exact: Spectrum,
    pub intra: Spectrum,
    pub inter: Spectrum,
    pub times: Vec<f64>,
    pub exact_position: Vec<[f64; 2]>,
    pub intra_position: Vec<[f64; 2]>,
    pub inter_position: Vec<[f64; 2]>,
    pub reconstructed_position: Vec<[f64; 2]>,
    pub frames: Vec<AdiabaticFrame>,
    pub stats: AdiabaticStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdiabaticStats {
    /// max_k |Σ C r − ⟨r⟩| over both components.
    pub reconstruction_error: f64,
    pub min_frame_overlap: f64,
    pub min_level_spacing: f64,
    pub completeness_error: f64,
    pub ratios_intra: BTreeMap<u32, f64>,
    pub ratios_inter: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakSummary {
    pub order: u32,
    pub peak_angle: f64,
    pub lobe_fwhm: f64,
    pub class: Class,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exponents {
    pub perp_mol: Option<f64>,
    pub perp_inter: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub fit_range: [f64; 2],
    pub exponents: BTreeMap<u32, Exponents>,
    pub flip_thresholds: BTreeMap<u32, Option<Threshold>>,
    pub crossings: BTreeMap<u32, Option<Threshold>>,
    pub thresholds_monotone: bool,
    pub crossings_ordered: bool,
    pub spacing: Option<SpacingCheck>,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Spectrum(SpectrumRun),
    PolarScan {
        scan: PolarScan,
        peaks: Vec<PeakSummary>,
    },
    CouplingSweep {
        sweep: CouplingSweep,
        summary: SweepSummary,
    },
    AdiabaticCompare(AdiabaticComparison),
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest: Manifest,
    pub outcome: Outcome,
    pub dir: PathBuf,
}

/// Band integrals are tabulated up to one past the highest requested order
/// so every odd order has both even neighbours.
fn max_order(config: &RunConfig) -> u32 {
    config.grids.harmonics.iter().copied().max().unwrap_or(15).max(15) + 1
}

fn spectrum_of(position: &[[f64; 2]], pulse: &Pulse, max_order: u32) -> Result<(Vec<[f64; 2]>, Spectrum)> {
    let accel = acceleration_from_position(position, pulse.dt)?;
    let spectrum = power_spectrum_with(&accel, pulse.dt, pulse.omega0, PAD_FACTOR, 1..=max_order)?;
    Ok((accel, spectrum))
}

fn run_spectrum(r: &Resolved) -> Result<SpectrumRun> {
    let top = max_order(&r.config);
    let position = match r.config.engine {
        Engine::Exact => propagate_dimer(&r.dimer, &r.pulse)?.position,
        Engine::AdiaIntra => adia_intra_position(&r.dimer, &frames(&r.dimer, &r.pulse)),
        Engine::AdiaInter => {
            let rec = propagate_dimer(&r.dimer, &r.pulse)?;
            decompose(&r.dimer, &rec, &frames(&r.dimer, &r.pulse))?.adia_inter_position()
        }
    };
    let (acceleration, spectrum) = spectrum_of(&position, &r.pulse, top)?;
    Ok(SpectrumRun {
        spectrum,
        times: r.pulse.time_grid(),
        position,
        acceleration,
    })
}

fn run_adiabatic(r: &Resolved) -> Result<AdiabaticComparison> {
    let top = max_order(&r.config);
    let rec = propagate_dimer(&r.dimer, &r.pulse)?;
    let fr = frames(&r.dimer, &r.pulse);
    let dec = decompose(&r.dimer, &rec, &fr)?;
    let intra_position = adia_intra_position(&r.dimer, &fr);
    let inter_position = dec.adia_inter_position();
    let reconstructed_position = dec.reconstruct_position();

    let exact = power_spectrum_with(&rec.acceleration, r.pulse.dt, r.pulse.omega0, PAD_FACTOR, 1..=top)?;
    let intra = spectrum_of(&intra_position, &r.pulse, top)?.1;
    let inter = spectrum_of(&inter_position, &r.pulse, top)?.1;

    let reconstruction_error = reconstructed_position
        .iter()
        .zip(&rec.position)
        .flat_map(|(a, b)| [(a[0] - b[0]).abs(), (a[1] - b[1]).abs()])
        .fold(0.0, f64::max);
    let ratio = |s: &Spectrum| {
        r.config
            .grids
            .harmonics
            .iter()
            .filter_map(|n| Some((*n, s.harmonics.get(n)? / exact.harmonics.get(n)?)))
            .collect::<BTreeMap<_, _>>()
    };
    let stats = AdiabaticStats {
        reconstruction_error,
        min_frame_overlap: min_overlap(&fr),
        min_level_spacing: fr.iter().map(|f| f.min_spacing).fold(f64::INFINITY, f64::min),
        completeness_error: dec.completeness_error(),
        ratios_intra: ratio(&intra),
        ratios_inter: ratio(&inter),
    };
    Ok(AdiabaticComparison {
        exact,
        intra,
        inter,
        times: rec.times.clone(),
        exact_position: rec.position,
        intra_position,
        inter_position,
        reconstructed_position,
        frames: fr,
        stats,
    })
}

fn run_polar(r: &Resolved) -> Result<(PolarScan, Vec<PeakSummary>)> {
    let phis = r.config.grids.phi.values();
    let scan = polar_scan(&r.dimer, &r.pulse, &phis, &r.config.grids.harmonics, r.config.engine)?;
    let peaks = scan
        .profiles
        .iter()
        .map(|p| PeakSummary {
            order: p.order,
            peak_angle: p.peak_angle,
            lobe_fwhm: crate::scans::lobe_width(&scan.phis, &p.normalized),
            class: classify(p.peak_angle, &r.config.model, r.config.sweep.window),
        })
        .collect();
    Ok((scan, peaks))
}

fn run_sweep(r: &Resolved) -> Result<(CouplingSweep, SweepSummary)> {
    let config = &r.config;
    let sweep = coupling_sweep(&config.model, &config.pulse, &config.sweep_settings())?;
    let range = (config.sweep.fit_range[0], config.sweep.fit_range[1]);
    let exponents = config
        .grids
        .harmonics
        .iter()
        .map(|&n| {
            let e = Exponents {
                perp_mol: scaling_exponent(&sweep, n, range, PerpCurve::Molecular).ok(),
                perp_inter: scaling_exponent(&sweep, n, range, PerpCurve::Intermolecular).ok(),
            };
            (n, e)
        })
        .collect();
    let summary = SweepSummary {
        fit_range: config.sweep.fit_range,
        exponents,
        flip_thresholds: sweep.flip_thresholds.clone(),
        crossings: sweep.crossings.clone(),
        thresholds_monotone: sweep.thresholds_monotone(INTERPRETABLE_T1),
        crossings_ordered: sweep.crossings_ordered(),
        spacing: equal_spacing_check(&sweep, config.sweep.reference_t1).ok(),
    };
    Ok((sweep, summary))
}

/// Computes a run without touching the filesystem.
pub fn execute(resolved: &Resolved) -> Result<Outcome> {
    let c = &resolved.config;
    info!(
        "mode={} engine={} phi={} t1={} omega0={:.6}",
        c.mode.name(),
        c.engine.name(),
        c.pulse.phi,
        c.model.t1,
        resolved.pulse.omega0
    );
    Ok(match c.mode {
        Mode::Spectrum => Outcome::Spectrum(run_spectrum(resolved)?),
        Mode::PolarScan => {
            let (scan, peaks) = run_polar(resolved)?;
            Outcome::PolarScan { scan, peaks }
        }
        Mode::CouplingSweep => {
            let (sweep, summary) = run_sweep(resolved)?;
            Outcome::CouplingSweep { sweep, summary }
        }
        Mode::AdiabaticCompare => Outcome::AdiabaticCompare(run_adiabatic(resolved)?),
    })
}

/// Float formatting with a fixed number of significant digits.
struct Csv {
    digits: usize,
    text: String,
}

impl Csv {
    fn new(digits: usize, header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { digits, text }
    }

    fn float(&self, v: f64) -> String {
        format!("{:.*e}", self.digits.saturating_sub(1), v)
    }

    fn row(&mut self, cells: &[Cell]) {
        let line: Vec<String> = cells
            .iter()
            .map(|c| match c {
                Cell::F(v) => self.float(*v),
                Cell::I(v) => v.to_string(),
                Cell::S(s) => (*s).to_string(),
            })
            .collect();
        let _ = writeln!(self.text, "{}", line.join(","));
    }
}

enum Cell<'a> {
    F(f64),
    I(u64),
    S(&'a str),
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn csv(&mut self, name: &str, csv: Csv) -> Result<()> {
        self.put(name, &csv.text)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.put(name, &text)
    }
}

fn spectrum_csv(s: &Spectrum, digits: usize) -> Csv {
    let mut csv = Csv::new(digits, &["harmonic_order", "omega", "intensity"]);
    for (bin, (h, v)) in s.harmonic_order.iter().zip(&s.intensity).enumerate() {
        csv.row(&[Cell::F(*h), Cell::F(s.omega(bin)), Cell::F(*v)]);
    }
    csv
}

fn write_spectrum(w: &mut Writer, digits: usize, r: &SpectrumRun, dump_series: bool) -> Result<()> {
    w.csv("spectrum.csv", spectrum_csv(&r.spectrum, digits))?;
    let mut h = Csv::new(digits, &["n", "intensity"]);
    for (n, v) in &r.spectrum.harmonics {
        h.row(&[Cell::I(u64::from(*n)), Cell::F(*v)]);
    }
    w.csv("harmonics.csv", h)?;
    if dump_series {
        let mut csv = Csv::new(digits, &["t", "x", "y", "ax", "ay"]);
        for ((t, p), a) in r.times.iter().zip(&r.position).zip(&r.acceleration) {
            csv.row(&[Cell::F(*t), Cell::F(p[0]), Cell::F(p[1]), Cell::F(a[0]), Cell::F(a[1])]);
        }
        w.csv("series.csv", csv)?;
    }
    Ok(())
}

fn write_polar(w: &mut Writer, digits: usize, scan: &PolarScan, peaks: &[PeakSummary]) -> Result<()> {
    let mut csv = Csv::new(digits, &["phi", "n", "intensity", "normalized"]);
    for (i, phi) in scan.phis.iter().enumerate() {
        for p in &scan.profiles {
            csv.row(&[
                Cell::F(*phi),
                Cell::I(u64::from(p.order)),
                Cell::F(p.intensity[i]),
                Cell::F(p.normalized[i]),
            ]);
        }
    }
    w.csv("polar_scan.csv", csv)?;
    let mut csv = Csv::new(digits, &["n", "phi_peak", "lobe_fwhm", "class"]);
    for p in peaks {
        csv.row(&[
            Cell::I(u64::from(p.order)),
            Cell::F(p.peak_angle),
            Cell::F(p.lobe_fwhm),
            Cell::S(p.class.name()),
        ]);
    }
    w.csv("peak_angles.csv", csv)?;
    w.json("summary.json", &peaks)
}

fn write_sweep(w: &mut Writer, digits: usize, sweep: &CouplingSweep, summary: &SweepSummary) -> Result<()> {
    if sweep.settings.flip_map {
        let mut csv = Csv::new(digits, &["t1", "n", "phi_peak", "class"]);
        for p in &sweep.points {
            for (n, a) in &p.peak_angles {
                let class = p.classes.get(n).map_or("unclassified", |c| c.name());
                csv.row(&[Cell::F(p.t1), Cell::I(u64::from(*n)), Cell::F(*a), Cell::S(class)]);
            }
        }
        w.csv("flip_map.csv", csv)?;
    }
    let mut csv = Csv::new(digits, &["t1", "n", "I_perp_inter", "I_perp_mol"]);
    for p in &sweep.points {
        for (n, inter) in &p.perp_inter {
            let mol = p.perp_mol.get(n).copied().unwrap_or(f64::NAN);
            csv.row(&[Cell::F(p.t1), Cell::I(u64::from(*n)), Cell::F(*inter), Cell::F(mol)]);
        }
    }
    w.csv("perp_curves.csv", csv)?;
    let mut csv = Csv::new(digits, &["n", "t1_cross"]);
    for (n, c) in &summary.crossings {
        csv.row(&[Cell::I(u64::from(*n)), Cell::F(c.map_or(f64::NAN, |t| t.t1))]);
    }
    w.csv("crossings.csv", csv)?;
    w.json("summary.json", summary)
}

fn write_adiabatic(w: &mut Writer, digits: usize, a: &AdiabaticComparison, orders: &[u32], dump_series: bool) -> Result<()> {
    w.csv("exact_spectrum.csv", spectrum_csv(&a.exact, digits))?;
    w.csv("adia_intra_spectrum.csv", spectrum_csv(&a.intra, digits))?;
    w.csv("adia_inter_spectrum.csv", spectrum_csv(&a.inter, digits))?;
    let mut csv = Csv::new(digits, &["n", "exact", "adia_intra", "adia_inter"]);
    for n in orders {
        let get = |s: &Spectrum| s.harmonics.get(n).copied().unwrap_or(f64::NAN);
        csv.row(&[Cell::I(u64::from(*n)), Cell::F(get(&a.exact)), Cell::F(get(&a.intra)), Cell::F(get(&a.inter))]);
    }
    w.csv("harmonics.csv", csv)?;
    let mut csv = Csv::new(digits, &["t", "eps0", "eps1", "eps2", "eps3"]);
    for (t, f) in a.times.iter().zip(&a.frames) {
        let e = f.energies;
        csv.row(&[Cell::F(*t), Cell::F(e[0]), Cell::F(e[1]), Cell::F(e[2]), Cell::F(e[3])]);
    }
    w.csv("eps_n.csv", csv)?;
    if dump_series {
        let mut csv = Csv::new(
            digits,
            &["t", "exact_x", "exact_y", "intra_x", "intra_y", "inter_x", "inter_y", "reconstructed_x", "reconstructed_y"],
        );
        for k in 0..a.times.len() {
            let (e, i, x, r) = (a.exact_position[k], a.intra_position[k], a.inter_position[k], a.reconstructed_position[k]);
            csv.row(&[
                Cell::F(a.times[k]),
                Cell::F(e[0]),
                Cell::F(e[1]),
                Cell::F(i[0]),
                Cell::F(i[1]),
                Cell::F(x[0]),
                Cell::F(x[1]),
                Cell::F(r[0]),
                Cell::F(r[1]),
            ]);
        }
        w.csv("series.csv", csv)?;
    }
    w.json("summary.json", &a.stats)
}

#[derive(Serialize)]
struct ModelDump<'a> {
    spec: &'a crate::model::ModelSpec,
    sites: [[f64; 2]; SITES],
    h0: [[f64; SITES]; SITES],
    energies: [f64; SITES],
    states: [[f64; SITES]; SITES],
    gap: f64,
    dipoles: Vec<DipoleDump>,
}

#[derive(Serialize)]
struct DipoleDump {
    from: usize,
    to: usize,
    #[serde(flatten)]
    dipole: TransitionDipole,
}

fn model_dump(dimer: &Dimer) -> Result<ModelDump<'_>> {
    let mut dipoles = Vec::new();
    for i in 0..SITES {
        for j in i + 1..SITES {
            dipoles.push(DipoleDump {
                from: i,
                to: j,
                dipole: transition_dipole(&dimer.eigen, &dimer.geometry, i, j)?,
            });
        }
    }
    Ok(ModelDump {
        spec: &dimer.spec,
        sites: dimer.geometry.sites,
        h0: dimer.h0,
        energies: dimer.eigen.energies,
        states: dimer.eigen.states,
        gap: dimer.eigen.gap,
        dipoles,
    })
}

/// Writes an outcome into `dir` and returns the manifest.
pub fn write_outputs(resolved: &Resolved, outcome: &Outcome, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let c = &resolved.config;
    let digits = c.output.precision;
    let mut w = Writer { dir, files: Vec::new() };
    match outcome {
        Outcome::Spectrum(r) => write_spectrum(&mut w, digits, r, c.output.dump_series)?,
        Outcome::PolarScan { scan, peaks } => write_polar(&mut w, digits, scan, peaks)?,
        Outcome::CouplingSweep { sweep, summary } => write_sweep(&mut w, digits, sweep, summary)?,
        Outcome::AdiabaticCompare(a) => write_adiabatic(&mut w, digits, a, &c.grids.harmonics, c.output.dump_series)?,
    }
    if c.output.dump_model {
        w.json("model.json", &model_dump(&resolved.dimer)?)?;
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: c.clone(),
        derived: resolved.derived.clone(),
        files: w.files.clone(),
    };
    w.json(MANIFEST, &manifest)?;
    Ok(manifest)
}

/// Validates, executes and writes one run.
pub fn run(config: &RunConfig, dir: &Path) -> Result<RunReport> {
    let resolved = resolve(config)?;
    let outcome = execute(&resolved)?;
    let manifest = write_outputs(&resolved, &outcome, dir)?;
    Ok(RunReport {
        manifest,
        outcome,
        dir: dir.to_path_buf(),
    })
}

/// Runs every configuration of a figure preset under `root/<name>/`.
pub fn reproduce<S: AsRef<str>>(name: &str, root: &Path, overrides: &[S]) -> Result<Vec<RunReport>> {
    let p = preset(name)?;
    p.runs
        .into_iter()
        .map(|(sub, config)| {
            let config = config.with_overrides(overrides)?;
            let dir = if sub.is_empty() {
                root.join(p.name)
            } else {
                root.join(p.name).join(sub)
            };
            run(&config, &dir)
        })
        .collect()
}
