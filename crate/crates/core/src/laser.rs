//! Linearly polarized sin²-envelope pulse and its time grid.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pulse parameters as written in a run configuration.
///
/// `omega0` is normally left unset and derived from the model's HOMO-LUMO gap
/// as `gap / photon_fraction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseSpec {
    #[serde(rename = "E0")]
    pub e0: f64,
    pub omega0: Option<f64>,
    pub photon_fraction: f64,
    pub n_cyc: u32,
    /// Polarization angle against +x, degrees.
    pub phi: f64,
    pub dt: f64,
}

impl Default for PulseSpec {
    fn default() -> Self {
        Self {
            e0: 0.15,
            omega0: None,
            photon_fraction: 6.3,
            n_cyc: 15,
            phi: 0.0,
            dt: 0.1,
        }
    }
}

impl PulseSpec {
    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    /// Carrier frequency for a model with the given gap.
    pub fn omega0_for_gap(&self, gap: f64) -> f64 {
        self.omega0.unwrap_or(gap / self.photon_fraction)
    }

    pub fn resolve(&self, gap: f64) -> Result<Pulse> {
        if self.omega0.is_none() && !(self.photon_fraction > 0.0) {
            return Err(Error::InvalidPulse("photon_fraction must be positive".into()));
        }
        Pulse::new(self.e0, self.omega0_for_gap(gap), self.n_cyc, self.phi, self.dt)
    }
}

/// A fully resolved pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pulse {
    pub e0: f64,
    pub omega0: f64,
    pub n_cyc: u32,
    pub phi: f64,
    pub dt: f64,
    /// Pulse length T = 2π n_cyc / ω0.
    pub duration: f64,
    /// Number of steps N; the grid holds N + 1 points.
    pub steps: usize,
    /// Unit polarization vector (cos φ, sin φ).
    pub polarization: [f64; 2],
}

/// Unit vector at `phi` degrees; `phi + 180` yields the exact negation.
fn polarization(phi: f64) -> [f64; 2] {
    let r = phi.rem_euclid(360.0);
    let (base, sign) = if r >= 180.0 { (r - 180.0, -1.0) } else { (r, 1.0) };
    let a = base.to_radians();
    [sign * a.cos(), sign * a.sin()]
}

impl Pulse {
    pub fn new(e0: f64, omega0: f64, n_cyc: u32, phi: f64, dt: f64) -> Result<Self> {
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::InvalidPulse("omega0 must be positive".into()));
        }
        if n_cyc < 1 {
            return Err(Error::InvalidPulse("n_cyc must be at least 1".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidPulse("dt must be positive".into()));
        }
        if !e0.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidPulse("E0 and phi must be finite".into()));
        }
        let duration = 2.0 * PI * f64::from(n_cyc) / omega0;
        // the slack keeps T/dt = 10.000000000000002 from adding a spurious step
        let steps = (duration / dt - 1e-9).ceil() as usize;
        if steps < 2 {
            return Err(Error::InvalidPulse(format!(
                "pulse of length {duration} needs at least 2 steps of dt = {dt}"
            )));
        }
        Ok(Self {
            e0,
            omega0,
            n_cyc,
            phi,
            dt,
            duration,
            steps,
            polarization: polarization(phi),
        })
    }

    pub fn with_phi(&self, phi: f64) -> Self {
        Self {
            phi,
            polarization: polarization(phi),
            ..*self
        }
    }

    fn inside(&self, t: f64) -> bool {
        // the envelope vanishes at both ends, so the open interval is exact
        t > 0.0 && t < self.duration
    }

    /// Scalar A(t) along the polarization axis.
    pub fn vector_potential_amplitude(&self, t: f64) -> f64 {
        if !self.inside(t) {
            return 0.0;
        }
        let env = (self.omega0 * t / (2.0 * f64::from(self.n_cyc))).sin();
        self.e0 / self.omega0 * env * env * (self.omega0 * t).cos()
    }

    /// Scalar E(t) = −∂A/∂t along the polarization axis, in closed form.
    pub fn field_amplitude(&self, t: f64) -> f64 {
        if !self.inside(t) {
            return 0.0;
        }
        let n = f64::from(self.n_cyc);
        let phase = self.omega0 * t;
        let env = (phase / (2.0 * n)).sin();
        // d/dt sin²(ω t / 2n) = sin(ω t / n) ω / 2n
        self.e0 * (env * env * phase.sin() - (phase / n).sin() * phase.cos() / (2.0 * n))
    }

    pub fn vector_potential(&self, t: f64) -> [f64; 2] {
        let a = self.vector_potential_amplitude(t);
        [a * self.polarization[0], a * self.polarization[1]]
    }

    pub fn electric_field(&self, t: f64) -> [f64; 2] {
        let e = self.field_amplitude(t);
        [e * self.polarization[0], e * self.polarization[1]]
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Uniform grid t_k = k·dt, k = 0..=N, with N·dt ≥ T.
    pub fn time_grid(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }
}
