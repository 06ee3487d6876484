//! Polarization-angle scans, coupling sweeps and the derived observables:
//! peak angles, lobe widths, flip thresholds, crossings and power-law fits.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adiabatic::{adia_intra_position, decompose, frames};
use crate::error::{Error, Result};
use crate::fit::log_log_slope;
use crate::laser::{Pulse, PulseSpec};
use crate::model::{axis_distance, mod_180, Dimer, ModelSpec};
use crate::propagator::{acceleration_from_position, propagate_dimer};
use crate::spectrum::{power_spectrum_with, Spectrum, PAD_FACTOR};

pub const DEFAULT_WINDOW: f64 = 15.0;
pub const FWHM_SENTINEL: f64 = 180.0;
/// Upper end of the coupling range where the ordering assertions apply.
pub const INTERPRETABLE_T1: f64 = 0.1;

type Intensities = BTreeMap<u32, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    #[default]
    Exact,
    AdiaIntra,
    AdiaInter,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Exact => "exact",
            Engine::AdiaIntra => "adia-intra",
            Engine::AdiaInter => "adia-inter",
        }
    }
}

/// Acceleration series of one run under the chosen engine.
pub fn engine_acceleration(dimer: &Dimer, pulse: &Pulse, engine: Engine) -> Result<Vec<[f64; 2]>> {
    let position = match engine {
        Engine::Exact => return Ok(propagate_dimer(dimer, pulse)?.acceleration),
        Engine::AdiaIntra => adia_intra_position(dimer, &frames(dimer, pulse)),
        Engine::AdiaInter => {
            let rec = propagate_dimer(dimer, pulse)?;
            let fr = frames(dimer, pulse);
            decompose(dimer, &rec, &fr)?.adia_inter_position()
        }
    };
    acceleration_from_position(&position, pulse.dt)
}

/// Spectrum of one run with band integrals for orders `1..=max_order`.
pub fn engine_spectrum(dimer: &Dimer, pulse: &Pulse, engine: Engine, max_order: u32) -> Result<Spectrum> {
    let accel = engine_acceleration(dimer, pulse, engine)?;
    power_spectrum_with(&accel, pulse.dt, pulse.omega0, PAD_FACTOR, 1..=max_order)
}

/// Angle grid `start, start+step, …` strictly below `stop`.
pub fn angle_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop <= start {
        return Vec::new();
    }
    let count = ((stop - start) / step - 1e-9).ceil() as usize;
    (0..count).map(|k| start + k as f64 * step).collect()
}

/// Whether a uniform grid wraps around a 180° period.
fn is_periodic(phis: &[f64]) -> bool {
    if phis.len() < 3 {
        return false;
    }
    let step = phis[1] - phis[0];
    let uniform = phis
        .windows(2)
        .all(|w| ((w[1] - w[0]) - step).abs() < 1e-9 * step.abs().max(1.0));
    uniform && ((step * phis.len() as f64) - 180.0).abs() < 1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicProfile {
    pub order: u32,
    pub intensity: Vec<f64>,
    pub normalized: Vec<f64>,
    pub grid_peak: usize,
    /// Refined peak angle in [0, 180).
    pub peak_angle: f64,
}

impl HarmonicProfile {
    pub fn new(order: u32, phis: &[f64], intensity: Vec<f64>) -> Self {
        let (grid_peak, max) = intensity
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
        let normalized = intensity
            .iter()
            .map(|v| if max > 0.0 { v / max } else { 0.0 })
            .collect();
        let peak_angle = refine_peak(phis, &intensity, grid_peak);
        Self {
            order,
            intensity,
            normalized,
            grid_peak,
            peak_angle,
        }
    }
}

/// Vertex of the parabola through the grid maximum and its neighbours,
/// clamped to one grid step.
pub fn refine_peak(phis: &[f64], values: &[f64], peak: usize) -> f64 {
    let n = phis.len();
    if n == 0 {
        return f64::NAN;
    }
    let periodic = is_periodic(phis);
    let (left, right) = if periodic {
        ((peak + n - 1) % n, (peak + 1) % n)
    } else if peak == 0 || peak + 1 == n {
        return mod_180(phis[peak]);
    } else {
        (peak - 1, peak + 1)
    };
    let step = if periodic {
        phis[1] - phis[0]
    } else {
        0.5 * (phis[right] - phis[left])
    };
    let (a, b, c) = (values[left], values[peak], values[right]);
    let curvature = a - 2.0 * b + c;
    let offset = if curvature < 0.0 {
        (0.5 * (a - c) / curvature * step).clamp(-step, step)
    } else {
        0.0
    };
    mod_180(phis[peak] + offset)
}

/// Full width at half maximum of the dominant lobe of a normalized profile.
pub fn lobe_width(phis: &[f64], normalized: &[f64]) -> f64 {
    let n = phis.len();
    if n < 2 {
        return FWHM_SENTINEL;
    }
    let peak = normalized
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > normalized[best] { i } else { best });
    let top = normalized[peak];
    if !(top > 0.0) {
        return FWHM_SENTINEL;
    }
    let half = 0.5 * top;
    let periodic = is_periodic(phis);
    let step = phis[1] - phis[0];

    // walk outward until the profile drops below half, interpolating the crossing
    let walk = |dir: isize| -> Option<f64> {
        let mut prev = peak;
        for k in 1..n {
            let idx = peak as isize + dir * k as isize;
            let i = if periodic {
                idx.rem_euclid(n as isize) as usize
            } else if idx < 0 || idx >= n as isize {
                return None;
            } else {
                idx as usize
            };
            if normalized[i] < half {
                let (hi, lo) = (normalized[prev], normalized[i]);
                let frac = (hi - half) / (hi - lo);
                let distance = if periodic {
                    (k - 1) as f64 * step + frac * step
                } else {
                    (phis[prev] - phis[peak]).abs() + frac * (phis[i] - phis[prev]).abs()
                };
                return Some(distance);
            }
            prev = i;
        }
        None
    };
    match (walk(-1), walk(1)) {
        (Some(l), Some(r)) => (l + r).min(FWHM_SENTINEL),
        _ => FWHM_SENTINEL,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarScan {
    pub phis: Vec<f64>,
    pub engine: Engine,
    pub profiles: Vec<HarmonicProfile>,
}

impl PolarScan {
    pub fn from_table(phis: Vec<f64>, engine: Engine, orders: &[u32], table: &[BTreeMap<u32, f64>]) -> Result<Self> {
        let profiles = orders
            .iter()
            .map(|&n| {
                let intensity = table
                    .iter()
                    .map(|h| h.get(&n).copied().ok_or(Error::MissingHarmonic(n)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(HarmonicProfile::new(n, &phis, intensity))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            phis,
            engine,
            profiles,
        })
    }

    pub fn profile(&self, n: u32) -> Result<&HarmonicProfile> {
        self.profiles
            .iter()
            .find(|p| p.order == n)
            .ok_or(Error::MissingHarmonic(n))
    }

    pub fn peak_angle(&self, n: u32) -> Result<f64> {
        Ok(self.profile(n)?.peak_angle)
    }

    pub fn lobe_width(&self, n: u32) -> Result<f64> {
        Ok(lobe_width(&self.phis, &self.profile(n)?.normalized))
    }
}

/// Harmonic intensities for every angle, computed in parallel.
pub fn scan_harmonics(
    dimer: &Dimer,
    pulse: &Pulse,
    phis: &[f64],
    orders: &[u32],
    engine: Engine,
) -> Result<Vec<BTreeMap<u32, f64>>> {
    let max_order = orders.iter().copied().max().unwrap_or(1);
    phis.par_iter()
        .map(|&phi| {
            engine_spectrum(dimer, &pulse.with_phi(phi), engine, max_order)
                .map(|s| {
                    orders
                        .iter()
                        .filter_map(|n| s.harmonics.get(n).map(|v| (*n, *v)))
                        .collect()
                })
                .map_err(|e| Error::ScanPoint {
                    phi,
                    t1: dimer.spec.t1,
                    source: Box::new(e),
                })
        })
        .collect()
}

pub fn polar_scan(
    dimer: &Dimer,
    pulse: &Pulse,
    phis: &[f64],
    orders: &[u32],
    engine: Engine,
) -> Result<PolarScan> {
    let table = scan_harmonics(dimer, pulse, phis, orders, engine)?;
    PolarScan::from_table(phis.to_vec(), engine, orders, &table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Class {
    Molecular,
    Intermolecular,
    Unclassified,
}

impl Class {
    pub fn name(self) -> &'static str {
        match self {
            Class::Molecular => "molecular",
            Class::Intermolecular => "intermolecular",
            Class::Unclassified => "unclassified",
        }
    }
}

pub fn classify(angle: f64, spec: &ModelSpec, window: f64) -> Class {
    let dm = axis_distance(angle, spec.alpha_mol);
    let di = axis_distance(angle, spec.alpha_inter);
    match (dm <= window, di <= window) {
        (true, true) if di < dm => Class::Intermolecular,
        (true, _) => Class::Molecular,
        (false, true) => Class::Intermolecular,
        (false, false) => Class::Unclassified,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaPolicy {
    /// Carrier fixed at its value for the template model.
    Frozen,
    /// Carrier recomputed from each point's gap.
    #[default]
    PerCoupling,
}

/// Log-spaced magnitudes in units of |t0| from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, per_decade: u32) -> Vec<f64> {
    if !(min > 0.0) || max < min || per_decade == 0 {
        return Vec::new();
    }
    let lo = min.log10();
    let span = (max.log10() - lo) * f64::from(per_decade);
    let count = (span + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=count)
        .map(|k| 10f64.powf(lo + k as f64 / f64::from(per_decade)))
        .collect();
    if *out.last().unwrap() < max * (1.0 - 1e-9) {
        out.push(max);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSettings {
    /// Coupling magnitudes in units of |t0|.
    pub t1_grid: Vec<f64>,
    pub orders: Vec<u32>,
    pub phis: Vec<f64>,
    pub engine: Engine,
    pub omega0_policy: OmegaPolicy,
    /// Whether to run the polar scan at every point.
    pub flip_map: bool,
    pub refine_steps: u32,
    pub window: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            t1_grid: log_grid(1e-5, 0.5, 10),
            orders: (1..=15).step_by(2).collect(),
            phis: angle_grid(0.0, 180.0, 1.0),
            engine: Engine::Exact,
            omega0_policy: OmegaPolicy::PerCoupling,
            flip_map: true,
            refine_steps: 8,
            window: DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    /// |t1| in units of |t0|.
    pub t1: f64,
    pub omega0: f64,
    pub peak_angles: BTreeMap<u32, f64>,
    pub classes: BTreeMap<u32, Class>,
    /// I_n at φ ⊥ α_inter.
    pub perp_inter: BTreeMap<u32, f64>,
    /// I_n at φ ⊥ α_mol.
    pub perp_mol: BTreeMap<u32, f64>,
}

/// Bracketed location of a transition on the coupling axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    /// Geometric midpoint of the final bracket.
    pub t1: f64,
    pub lower: f64,
    pub upper: f64,
    /// True when the condition already held at the first grid point.
    pub below_grid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingSweep {
    pub settings: SweepSettings,
    pub points: Vec<SweepPoint>,
    pub flip_thresholds: BTreeMap<u32, Option<Threshold>>,
    pub crossings: BTreeMap<u32, Option<Threshold>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerpCurve {
    /// φ ⊥ α_mol.
    Molecular,
    /// φ ⊥ α_inter.
    Intermolecular,
}

struct SweepContext<'a> {
    model: &'a ModelSpec,
    pulse: &'a PulseSpec,
    frozen_omega: f64,
    settings: &'a SweepSettings,
}

impl SweepContext<'_> {
    fn dimer_and_pulse(&self, magnitude: f64) -> Result<(Dimer, Pulse)> {
        let spec = self.model.with_t1(magnitude * self.model.t0);
        let dimer = Dimer::new(spec)?;
        let omega0 = match self.settings.omega0_policy {
            OmegaPolicy::Frozen => self.frozen_omega,
            OmegaPolicy::PerCoupling => self.pulse.omega0_for_gap(dimer.eigen.gap),
        };
        let pulse = Pulse::new(self.pulse.e0, omega0, self.pulse.n_cyc, self.pulse.phi, self.pulse.dt)?;
        Ok((dimer, pulse))
    }

    /// Intensities at phi perpendicular to the intermolecular and molecular axes, plus omega0.
    fn perpendicular(&self, magnitude: f64) -> Result<(Intensities, Intensities, f64)> {
        let (dimer, pulse) = self.dimer_and_pulse(magnitude)?;
        let phis = [self.model.alpha_inter + 90.0, self.model.alpha_mol + 90.0];
        let mut table = scan_harmonics(&dimer, &pulse, &phis, &self.settings.orders, self.settings.engine)?;
        let mol = table.pop().unwrap_or_default();
        let inter = table.pop().unwrap_or_default();
        Ok((inter, mol, pulse.omega0))
    }

    fn peaks(&self, magnitude: f64) -> Result<(BTreeMap<u32, f64>, BTreeMap<u32, Class>)> {
        let (dimer, pulse) = self.dimer_and_pulse(magnitude)?;
        let scan = polar_scan(&dimer, &pulse, &self.settings.phis, &self.settings.orders, self.settings.engine)?;
        let angles: BTreeMap<u32, f64> = scan.profiles.iter().map(|p| (p.order, p.peak_angle)).collect();
        let classes = angles
            .iter()
            .map(|(&n, &a)| (n, classify(a, self.model, self.settings.window)))
            .collect();
        Ok((angles, classes))
    }

    fn point(&self, magnitude: f64) -> Result<SweepPoint> {
        let (perp_inter, perp_mol, omega0) = self.perpendicular(magnitude)?;
        let (peak_angles, classes) = if self.settings.flip_map {
            self.peaks(magnitude)?
        } else {
            Default::default()
        };
        Ok(SweepPoint {
            t1: magnitude,
            omega0,
            peak_angles,
            classes,
            perp_inter,
            perp_mol,
        })
    }

    /// Bisects in log t1 between a point where `holds` is false and one
    /// where it is true.
    fn bisect(&self, lower: f64, upper: f64, holds: impl Fn(f64) -> Result<bool>) -> Result<Threshold> {
        let (mut lo, mut hi) = (lower, upper);
        for _ in 0..self.settings.refine_steps {
            let mid = (lo * hi).sqrt();
            if holds(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Threshold {
            t1: (lo * hi).sqrt(),
            lower: lo,
            upper: hi,
            below_grid: false,
        })
    }

    fn first_transition(
        &self,
        points: &[SweepPoint],
        on_grid: impl Fn(&SweepPoint) -> bool,
        off_grid: impl Fn(f64) -> Result<bool>,
    ) -> Result<Option<Threshold>> {
        let Some(j) = points.iter().position(on_grid) else {
            return Ok(None);
        };
        if j == 0 {
            let t = points[0].t1;
            return Ok(Some(Threshold {
                t1: t,
                lower: 0.0,
                upper: t,
                below_grid: true,
            }));
        }
        self.bisect(points[j - 1].t1, points[j].t1, off_grid).map(Some)
    }
}

pub fn coupling_sweep(model: &ModelSpec, pulse: &PulseSpec, settings: &SweepSettings) -> Result<CouplingSweep> {
    if let Some(bad) = settings.t1_grid.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidModel(format!(
            "coupling grid values must be positive, got {bad}"
        )));
    }
    let template = Dimer::new(*model)?;
    let ctx = SweepContext {
        model,
        pulse,
        frozen_omega: pulse.omega0_for_gap(template.eigen.gap),
        settings,
    };
    let mut grid = settings.t1_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let points = grid
        .par_iter()
        .map(|&g| ctx.point(g))
        .collect::<Result<Vec<_>>>()?;

    let mut flip_thresholds = BTreeMap::new();
    let mut crossings = BTreeMap::new();
    for &n in &settings.orders {
        if settings.flip_map {
            let is_inter = |p: &SweepPoint| p.classes.get(&n) == Some(&Class::Intermolecular);
            let threshold = ctx.first_transition(&points, is_inter, |g| {
                Ok(ctx.peaks(g)?.1.get(&n) == Some(&Class::Intermolecular))
            })?;
            flip_thresholds.insert(n, threshold);
        }
        let exceeds = |p: &SweepPoint| p.perp_mol.get(&n) > p.perp_inter.get(&n);
        let crossing = ctx.first_transition(&points, exceeds, |g| {
            let (inter, mol, _) = ctx.perpendicular(g)?;
            Ok(mol.get(&n) > inter.get(&n))
        })?;
        crossings.insert(n, crossing);
    }

    Ok(CouplingSweep {
        settings: settings.clone(),
        points,
        flip_thresholds,
        crossings,
    })
}

/// Threshold values with "never flips" mapped to +∞, in order.
fn threshold_ladder(thresholds: &BTreeMap<u32, Option<Threshold>>, cap: f64) -> Vec<(u32, f64)> {
    thresholds
        .iter()
        .map(|(&n, t)| {
            let v = t.map(|t| t.t1).filter(|v| *v <= cap).unwrap_or(f64::INFINITY);
            (n, v)
        })
        .collect()
}

impl CouplingSweep {
    /// Whether flip thresholds are non-increasing in order, counting orders
    /// that never flip below `cap` as +∞.
    pub fn thresholds_monotone(&self, cap: f64) -> bool {
        threshold_ladder(&self.flip_thresholds, cap)
            .windows(2)
            .all(|w| w[1].1 <= w[0].1)
    }

    /// Whether crossings move to smaller coupling with increasing order.
    pub fn crossings_ordered(&self) -> bool {
        threshold_ladder(&self.crossings, f64::INFINITY)
            .windows(2)
            .all(|w| w[1].1 < w[0].1 || (w[0].1.is_infinite() && w[1].1.is_infinite()))
    }

    pub fn curve(&self, n: u32, which: PerpCurve) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| {
                let map = match which {
                    PerpCurve::Molecular => &p.perp_mol,
                    PerpCurve::Intermolecular => &p.perp_inter,
                };
                map.get(&n).map(|v| (p.t1, *v))
            })
            .collect()
    }
}

/// Log-log slope of I_n against |t1| on the grid points inside `range`.
pub fn scaling_exponent(sweep: &CouplingSweep, n: u32, range: (f64, f64), which: PerpCurve) -> Result<f64> {
    let tol = 1e-9;
    let (x, y): (Vec<f64>, Vec<f64>) = sweep
        .curve(n, which)
        .into_iter()
        .filter(|(t, _)| *t >= range.0 * (1.0 - tol) && *t <= range.1 * (1.0 + tol))
        .unzip();
    if x.len() < 4 {
        return Err(Error::TooFewFitPoints {
            needed: 4,
            got: x.len(),
        });
    }
    log_log_slope(&x, &y)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacingStats {
    pub gaps: Vec<f64>,
    pub mean: f64,
    pub spread: f64,
}

impl SpacingStats {
    pub fn from_gaps(gaps: Vec<f64>) -> Self {
        let n = gaps.len().max(1) as f64;
        let mean = gaps.iter().sum::<f64>() / n;
        let spread = (gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n).sqrt();
        Self { gaps, mean, spread }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacingCheck {
    /// Grid point nearest the requested reference coupling.
    pub reference_t1: f64,
    /// ln I_n − ln I_{n+2} along φ ⊥ α_inter.
    pub intensity: SpacingStats,
    pub intensity_decreasing: bool,
    /// log10 gaps between consecutive crossings (lower order minus higher).
    pub crossings: SpacingStats,
    pub crossings_ordered: bool,
}

/// Ladder of log-intensity gaps at the grid point nearest `reference_t1`
/// and of log-coupling gaps between crossings.
pub fn equal_spacing_check(sweep: &CouplingSweep, reference_t1: f64) -> Result<SpacingCheck> {
    let point = sweep
        .points
        .iter()
        .min_by(|a, b| {
            let da = (a.t1.ln() - reference_t1.ln()).abs();
            let db = (b.t1.ln() - reference_t1.ln()).abs();
            da.total_cmp(&db)
        })
        .ok_or(Error::TooFewFitPoints { needed: 1, got: 0 })?;
    let ladder: Vec<f64> = point.perp_inter.values().copied().collect();
    Ok(spacing_from_ladders(point.t1, &ladder, &sweep.crossings))
}

fn spacing_from_ladders(reference: f64, ladder: &[f64], crossings: &BTreeMap<u32, Option<Threshold>>) -> SpacingCheck {
    let gaps: Vec<f64> = ladder.windows(2).map(|w| w[0].ln() - w[1].ln()).collect();
    let intensity_decreasing = ladder.windows(2).all(|w| w[1] < w[0]);
    let cross: Vec<f64> = crossings.values().filter_map(|c| c.map(|t| t.t1)).collect();
    let cross_gaps: Vec<f64> = cross.windows(2).map(|w| w[0].log10() - w[1].log10()).collect();
    let crossings_ordered = cross.windows(2).all(|w| w[1] < w[0]);
    SpacingCheck {
        reference_t1: reference,
        intensity: SpacingStats::from_gaps(gaps),
        intensity_decreasing,
        crossings: SpacingStats::from_gaps(cross_gaps),
        crossings_ordered,
    }
}
