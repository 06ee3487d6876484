//! Run configuration: strict JSON schema, dotted-path overrides, aggregated
//! validation and the figure presets.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{ConfigIssue, Error, Result};
use crate::laser::PulseSpec;
use crate::model::ModelSpec;
use crate::scans::{angle_grid, log_grid, Engine, OmegaPolicy, SweepSettings};
use crate::spectrum::HALF_BAND;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Spectrum,
    PolarScan,
    CouplingSweep,
    AdiabaticCompare,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Spectrum => "spectrum",
            Mode::PolarScan => "polar-scan",
            Mode::CouplingSweep => "coupling-sweep",
            Mode::AdiabaticCompare => "adiabatic-compare",
        }
    }
}

/// Angles `start, start+step, …` below `stop`, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhiGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for PhiGrid {
    fn default() -> Self {
        Self {
            start: 0.0,
            stop: 180.0,
            step: 1.0,
        }
    }
}

impl PhiGrid {
    pub fn values(&self) -> Vec<f64> {
        angle_grid(self.start, self.stop, self.step)
    }
}

/// Coupling magnitudes in units of |t0|, log spaced unless `values` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct T1Grid {
    pub min: f64,
    pub max: f64,
    pub per_decade: u32,
    pub values: Option<Vec<f64>>,
}

impl Default for T1Grid {
    fn default() -> Self {
        Self {
            min: 1e-5,
            max: 0.5,
            per_decade: 10,
            values: None,
        }
    }
}

impl T1Grid {
    pub fn values(&self) -> Vec<f64> {
        match &self.values {
            Some(v) => v.clone(),
            None => log_grid(self.min, self.max, self.per_decade),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grids {
    pub phi: PhiGrid,
    pub t1: T1Grid,
    pub harmonics: Vec<u32>,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            phi: PhiGrid::default(),
            t1: T1Grid::default(),
            harmonics: (1..=15).step_by(2).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepOptions {
    pub omega0_policy: OmegaPolicy,
    pub flip_map: bool,
    pub refine_steps: u32,
    /// Half width of the classification windows, degrees.
    pub window: f64,
    /// |t1| range of the power-law fits, units of |t0|.
    pub fit_range: [f64; 2],
    /// Coupling at which the intensity ladder is inspected.
    pub reference_t1: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            omega0_policy: OmegaPolicy::PerCoupling,
            flip_map: true,
            refine_steps: 8,
            window: 15.0,
            fit_range: [1e-3, 1e-2],
            reference_t1: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputOptions {
    /// Significant digits of every float written.
    pub precision: usize,
    pub dump_model: bool,
    pub dump_series: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self {
            precision: 17,
            dump_model: false,
            dump_series: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub pulse: PulseSpec,
    pub mode: Mode,
    pub engine: Engine,
    pub grids: Grids,
    pub sweep: SweepOptions,
    pub output: OutputOptions,
}

impl RunConfig {
    pub fn sweep_settings(&self) -> SweepSettings {
        SweepSettings {
            t1_grid: self.grids.t1.values(),
            orders: self.grids.harmonics.clone(),
            phis: self.grids.phi.values(),
            engine: self.engine,
            omega0_policy: self.sweep.omega0_policy,
            flip_map: self.sweep.flip_map,
            refine_steps: self.sweep.refine_steps,
            window: self.sweep.window,
        }
    }

    /// Parses a config or a manifest (whose `config` key holds the config),
    /// reporting unknown keys and per-section type errors together.
    pub fn from_value(value: Value) -> Result<Self> {
        let value = match value {
            Value::Object(mut map) if map.contains_key("config") && map.contains_key("derived") => {
                map.remove("config").unwrap_or(Value::Null)
            }
            v => v,
        };
        let Value::Object(mut map) = value else {
            return Err(Error::Config(vec![ConfigIssue::new("", "config must be a JSON object")]));
        };
        let template = serde_json::to_value(RunConfig::default())?;
        let mut issues = Vec::new();
        strip_unknown_keys(&mut map, &template, "", &mut issues);

        let mut config = RunConfig::default();
        for (key, section) in map {
            let result = match key.as_str() {
                "model" => serde_json::from_value(section).map(|v| config.model = v),
                "pulse" => serde_json::from_value(section).map(|v| config.pulse = v),
                "mode" => serde_json::from_value(section).map(|v| config.mode = v),
                "engine" => serde_json::from_value(section).map(|v| config.engine = v),
                "grids" => serde_json::from_value(section).map(|v| config.grids = v),
                "sweep" => serde_json::from_value(section).map(|v| config.sweep = v),
                "output" => serde_json::from_value(section).map(|v| config.output = v),
                _ => Ok(()),
            };
            if let Err(e) = result {
                issues.push(ConfigIssue::new(key, e.to_string()));
            }
        }
        if issues.is_empty() {
            Ok(config)
        } else {
            // report semantic problems of the parts that did parse as well
            issues.extend(config.issues());
            Err(Error::Config(issues))
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::Config(vec![ConfigIssue::new("", format!("malformed JSON: {e}"))]))?;
        Self::from_value(value)
    }

    /// Applies `key=value` overrides on top of this configuration.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut value = serde_json::to_value(self)?;
        for o in overrides {
            apply_override(&mut value, o.as_ref())?;
        }
        Self::from_value(value)
    }

    /// Every invalid field, with its dotted path.
    pub fn issues(&self) -> Vec<ConfigIssue> {
        let mut out = Vec::new();
        let mut check = |ok: bool, path: &str, reason: &str| {
            if !ok {
                out.push(ConfigIssue::new(path, reason));
            }
        };
        let m = &self.model;
        for (name, v) in [
            ("t0", m.t0),
            ("t1", m.t1),
            ("d", m.d),
            ("l", m.l),
            ("alpha_mol", m.alpha_mol),
            ("alpha_inter", m.alpha_inter),
        ] {
            check(v.is_finite(), &format!("model.{name}"), "must be finite");
        }
        check(m.t0 != 0.0, "model.t0", "must be nonzero");
        check(m.d > 0.0, "model.d", "must be positive");
        check(m.l > 0.0, "model.l", "must be positive");

        let p = &self.pulse;
        check(p.dt > 0.0 && p.dt.is_finite(), "pulse.dt", "pulse.dt must be positive");
        check(p.e0.is_finite(), "pulse.E0", "must be finite");
        check(p.phi.is_finite(), "pulse.phi", "must be finite");
        check(p.n_cyc >= 1, "pulse.n_cyc", "must be at least 1");
        match p.omega0 {
            Some(w) => check(w > 0.0 && w.is_finite(), "pulse.omega0", "must be positive"),
            None => check(
                p.photon_fraction > 0.0 && p.photon_fraction.is_finite(),
                "pulse.photon_fraction",
                "must be positive",
            ),
        }

        let g = &self.grids;
        check(!g.harmonics.is_empty(), "grids.harmonics", "must not be empty");
        check(!g.harmonics.contains(&0), "grids.harmonics", "orders start at 1");
        if let (Some(&top), true) = (g.harmonics.iter().max(), p.dt > 0.0) {
            // worst-case carrier over the sweep is bounded by the template one
            // when frozen; per-coupling carriers shrink with the gap
            let omega = p.omega0_for_gap(self.model.closed_form_gap());
            let nyquist = std::f64::consts::PI / p.dt;
            check(
                (f64::from(top) + HALF_BAND) * omega <= nyquist,
                "grids.harmonics",
                "highest band exceeds the Nyquist frequency of pulse.dt",
            );
        }

        if matches!(self.mode, Mode::PolarScan | Mode::CouplingSweep) {
            let phi = &g.phi;
            check(phi.step > 0.0, "grids.phi.step", "must be positive");
            check(phi.stop > phi.start, "grids.phi.stop", "must exceed grids.phi.start");
        }

        if self.mode == Mode::CouplingSweep {
            let t = &g.t1;
            match &t.values {
                Some(values) => {
                    check(!values.is_empty(), "grids.t1.values", "must not be empty");
                    check(
                        !values.contains(&0.0),
                        "grids.t1.values",
                        "log-spaced coupling grid cannot contain 0",
                    );
                    check(
                        values.iter().all(|v| *v >= 0.0 && *v < 1.0),
                        "grids.t1.values",
                        "coupling magnitudes must lie in (0, 1) units of |t0|",
                    );
                }
                None => {
                    check(t.min > 0.0, "grids.t1.min", "log-spaced coupling grid cannot contain 0");
                    check(t.max >= t.min, "grids.t1.max", "must be at least grids.t1.min");
                    check(t.max < 1.0, "grids.t1.max", "must be below 1 (units of |t0|)");
                    check(t.per_decade >= 1, "grids.t1.per_decade", "must be at least 1");
                }
            }
            let s = &self.sweep;
            check(s.window > 0.0 && s.window < 90.0, "sweep.window", "must lie in (0, 90)");
            check(
                s.fit_range[0] > 0.0 && s.fit_range[1] > s.fit_range[0],
                "sweep.fit_range",
                "must be an increasing positive pair",
            );
            check(s.reference_t1 > 0.0, "sweep.reference_t1", "must be positive");
        }

        check(
            (1..=17).contains(&self.output.precision),
            "output.precision",
            "must lie in 1..=17",
        );
        out
    }

    pub fn validate(&self) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }
}

fn strip_unknown_keys(map: &mut Map<String, Value>, template: &Value, path: &str, issues: &mut Vec<ConfigIssue>) {
    let Value::Object(tmpl) = template else {
        return;
    };
    map.retain(|key, v| {
        let child = if path.is_empty() {
            key.clone()
        } else {
            format!("{path}.{key}")
        };
        match tmpl.get(key) {
            None => {
                issues.push(ConfigIssue::new(child, "unknown key"));
                false
            }
            Some(t) => {
                if let Value::Object(inner) = v {
                    strip_unknown_keys(inner, t, &child, issues);
                }
                true
            }
        }
    });
}

/// Applies `a.b.c=value`; the value is parsed as JSON and falls back to a
/// plain string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| {
        Error::Config(vec![ConfigIssue::new(assignment, "override must look like key=value")])
    })?;
    let path = path.trim();
    if path.is_empty() {
        return Err(Error::Config(vec![ConfigIssue::new(assignment, "empty key")]));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    if !root.is_object() {
        *root = Value::Object(Map::new());
    }
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map = match node {
            Value::Object(map) => map,
            other => {
                *other = Value::Object(Map::new());
                other.as_object_mut().unwrap()
            }
        };
        if i + 1 == parts.len() {
            map.insert((*part).to_string(), value);
            return Ok(());
        }
        node = map.entry((*part).to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

/// A named figure reproduction: one or more runs written to subdirectories.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub runs: Vec<(String, RunConfig)>,
}

pub const PRESETS: [&str; 7] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"];

pub fn preset(name: &str) -> Result<Preset> {
    let base = RunConfig::default;
    let with = |f: &dyn Fn(&mut RunConfig)| {
        let mut c = base();
        f(&mut c);
        c
    };
    let runs: Vec<(String, RunConfig)> = match name {
        "fig2" => vec![(String::new(), with(&|c| c.mode = Mode::PolarScan))],
        "fig3" => vec![
            ("phi110".into(), with(&|c| c.pulse.phi = 110.0)),
            ("phi0".into(), with(&|c| c.pulse.phi = 0.0)),
        ],
        "fig4" => vec![
            (
                "scan".into(),
                with(&|c| {
                    c.mode = Mode::PolarScan;
                    c.model.t1 = 0.002 * c.model.t0;
                }),
            ),
            ("sweep".into(), with(&|c| c.mode = Mode::CouplingSweep)),
        ],
        "fig5" => vec![(
            String::new(),
            with(&|c| {
                c.mode = Mode::CouplingSweep;
                c.sweep.flip_map = false;
            }),
        )],
        "fig6" => vec![(
            String::new(),
            with(&|c| {
                c.mode = Mode::AdiabaticCompare;
                c.pulse.phi = 55.0;
                c.pulse.photon_fraction = 12.6;
                c.grids.harmonics = (1..=21).step_by(2).collect();
            }),
        )],
        "fig7" => vec![(
            String::new(),
            with(&|c| {
                c.mode = Mode::PolarScan;
                c.engine = Engine::AdiaIntra;
            }),
        )],
        "fig8" => vec![(
            String::new(),
            with(&|c| {
                c.mode = Mode::CouplingSweep;
                c.engine = Engine::AdiaIntra;
            }),
        )],
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    let name = PRESETS.iter().find(|p| **p == name).copied().unwrap_or("");
    Ok(Preset { name, runs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn issues_of(text: &str) -> Vec<ConfigIssue> {
        match RunConfig::from_json_str(text) {
            Ok(c) => c.issues(),
            Err(Error::Config(i)) => i,
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn empty_config_is_default() {
        assert_eq!(RunConfig::from_json_str("{}").unwrap(), RunConfig::default());
        let explicit = serde_json::to_string(&RunConfig::default()).unwrap();
        assert_eq!(RunConfig::from_json_str(&explicit).unwrap(), RunConfig::default());
    }

    #[test]
    fn nonpositive_dt_rejected() {
        let issues = issues_of(r#"{"pulse": {"dt": 0.0}}"#);
        assert!(issues.iter().any(|i| i.path == "pulse.dt" && i.reason == "pulse.dt must be positive"));
        let issues = issues_of(r#"{"pulse": {"dt": -0.1}}"#);
        assert!(issues.iter().any(|i| i.path == "pulse.dt"));
    }

    #[test]
    fn zero_in_coupling_grid_rejected() {
        let issues = issues_of(r#"{"mode": "coupling-sweep", "grids": {"t1": {"values": [0.0, 0.01]}}}"#);
        assert!(issues.iter().any(|i| i.path == "grids.t1.values"), "{issues:?}");
        let issues = issues_of(r#"{"mode": "coupling-sweep", "grids": {"t1": {"min": 0.0}}}"#);
        assert!(issues.iter().any(|i| i.path == "grids.t1.min"));
    }

    #[test]
    fn unknown_keys_reported_together() {
        let issues = issues_of(r#"{"model": {"t2": 1}, "pulse": {"dt": 0.1, "foo": 2}, "bar": 3}"#);
        let paths: Vec<&str> = issues.iter().map(|i| i.path.as_str()).collect();
        assert!(paths.contains(&"model.t2"));
        assert!(paths.contains(&"pulse.foo"));
        assert!(paths.contains(&"bar"));
    }

    #[test]
    fn unknown_and_invalid_reported_together() {
        let issues = issues_of(r#"{"model": {"foo": 1}, "pulse": {"dt": 0.0}}"#);
        let paths: Vec<&str> = issues.iter().map(|i| i.path.as_str()).collect();
        assert!(paths.contains(&"model.foo") && paths.contains(&"pulse.dt"), "{issues:?}");
    }

    #[test]
    fn errors_are_aggregated() {
        let issues = issues_of(r#"{"pulse": {"dt": 0.0, "n_cyc": 0}, "model": {"l": -1}}"#);
        assert!(issues.len() >= 3, "{issues:?}");
    }

    #[test]
    fn type_errors_name_the_section() {
        let issues = issues_of(r#"{"pulse": {"dt": "fast"}, "mode": "nope"}"#);
        let paths: Vec<&str> = issues.iter().map(|i| i.path.as_str()).collect();
        assert!(paths.contains(&"pulse") && paths.contains(&"mode"), "{issues:?}");
    }

    #[test]
    fn overrides() {
        let mut v = serde_json::json!({});
        apply_override(&mut v, "pulse.phi=55").unwrap();
        apply_override(&mut v, "mode=polar-scan").unwrap();
        apply_override(&mut v, "grids.harmonics=[1,3]").unwrap();
        let c = RunConfig::from_value(v).unwrap();
        assert_eq!(c.pulse.phi, 55.0);
        assert_eq!(c.mode, Mode::PolarScan);
        assert_eq!(c.grids.harmonics, vec![1, 3]);
        assert!(apply_override(&mut serde_json::json!({}), "novalue").is_err());
    }

    #[test]
    fn manifest_shape_is_accepted() {
        let mut c = RunConfig::default();
        c.pulse.phi = 12.0;
        let manifest = serde_json::json!({"config": c, "derived": {"gap": 1.98}});
        assert_eq!(RunConfig::from_value(manifest).unwrap(), c);
    }

    #[test]
    fn presets_are_valid() {
        for name in PRESETS {
            let p = preset(name).unwrap();
            assert_eq!(p.name, name);
            for (_, c) in &p.runs {
                assert!(c.issues().is_empty(), "{name}: {:?}", c.issues());
            }
        }
        assert!(matches!(preset("fig9"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn half_frequency_preset() {
        let p = preset("fig6").unwrap();
        let c = &p.runs[0].1;
        let pulse = c.pulse.resolve(c.model.closed_form_gap()).unwrap();
        assert!((pulse.omega0 - c.model.closed_form_gap() / 12.6).abs() < 1e-15);
    }
}
