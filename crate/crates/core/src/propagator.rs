//! Strang-split propagation of the two occupied orbitals in length gauge.
//!
//! One step is `exp(−iH₀dt/2) · exp(−iH_laser(t+dt/2)dt) · exp(−iH₀dt/2)`.
//! The H₀ half step is built once from the static eigendecomposition; the
//! laser factor is a diagonal phase because `E·r` is diagonal in the site basis.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::laser::Pulse;
use crate::model::{Dimer, Geometry, ModelSpec, SITES};

pub type State = [Complex64; SITES];
pub type ComplexMatrix = [[Complex64; SITES]; SITES];

/// Orbitals occupied in the ground state (two electrons each).
pub const OCCUPIED: usize = 2;
pub const OCCUPATION: f64 = 2.0;

const DRIFT_LIMIT: f64 = 1e-8;

/// Diagonal of `E_x X + E_y Y`.
pub fn laser_hamiltonian(geometry: &Geometry, field: [f64; 2]) -> [f64; SITES] {
    geometry.sites.map(|s| field[0] * s[0] + field[1] * s[1])
}

pub fn norm_sqr(state: &State) -> f64 {
    state.iter().map(|c| c.norm_sqr()).sum()
}

pub fn inner(a: &State, b: &State) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn apply(m: &ComplexMatrix, v: &State) -> State {
    let mut out = [Complex64::new(0.0, 0.0); SITES];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    out
}

/// exp(−i H₀ τ) from the static eigendecomposition, U e^{−iΛτ} Uᵀ.
pub fn static_exponential(dimer: &Dimer, tau: f64) -> ComplexMatrix {
    let eig = &dimer.eigen;
    let mut out = [[Complex64::new(0.0, 0.0); SITES]; SITES];
    for k in 0..SITES {
        let phase = Complex64::from_polar(1.0, -eig.energies[k] * tau);
        let u = &eig.states[k];
        for i in 0..SITES {
            for j in 0..SITES {
                out[i][j] += phase * (u[i] * u[j]);
            }
        }
    }
    out
}

/// Single-step propagator for a fixed model, pulse and step size.
#[derive(Debug, Clone)]
pub struct Propagator {
    half_step: ComplexMatrix,
    projection: [f64; SITES],
    pulse: Pulse,
    dt: f64,
}

impl Propagator {
    pub fn new(dimer: &Dimer, pulse: &Pulse) -> Self {
        Self::with_step(dimer, pulse, pulse.dt)
    }

    /// Propagator with an explicit (possibly negative) step.
    pub fn with_step(dimer: &Dimer, pulse: &Pulse, dt: f64) -> Self {
        Self {
            half_step: static_exponential(dimer, 0.5 * dt),
            projection: dimer.geometry.projection(pulse.polarization),
            pulse: *pulse,
            dt,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn laser_phases(&self, t: f64) -> [Complex64; SITES] {
        let e = self.pulse.field_amplitude(t + 0.5 * self.dt);
        self.projection
            .map(|p| Complex64::from_polar(1.0, -e * p * self.dt))
    }

    /// Advances `state` from `t` to `t + dt`, with the field taken at the midpoint.
    pub fn step(&self, state: &State, t: f64) -> State {
        let phases = self.laser_phases(t);
        self.step_with_phases(state, &phases)
    }

    fn step_with_phases(&self, state: &State, phases: &[Complex64; SITES]) -> State {
        let mut v = apply(&self.half_step, state);
        for (c, p) in v.iter_mut().zip(phases) {
            *c *= p;
        }
        apply(&self.half_step, &v)
    }

    /// Advances several orbitals with one shared laser factor.
    pub fn step_all<const K: usize>(&self, states: &[State; K], t: f64) -> [State; K] {
        let phases = self.laser_phases(t);
        states.map(|s| self.step_with_phases(&s, &phases))
    }
}

/// Total position ⟨r⟩ = 2 Σ_i ⟨uⁱ|r|uⁱ⟩ over the occupied orbitals.
pub fn total_position(states: &[State], geometry: &Geometry) -> [f64; 2] {
    let mut out = [0.0; 2];
    for s in states {
        for (c, site) in s.iter().zip(&geometry.sites) {
            let w = c.norm_sqr();
            out[0] += w * site[0];
            out[1] += w * site[1];
        }
    }
    [OCCUPATION * out[0], OCCUPATION * out[1]]
}

/// Second central difference of a 2-vector series; the two endpoints are zero.
pub fn acceleration_from_position(position: &[[f64; 2]], dt: f64) -> Result<Vec<[f64; 2]>> {
    if position.len() < 3 {
        return Err(Error::SeriesTooShort {
            needed: 3,
            got: position.len(),
        });
    }
    let inv = 1.0 / (dt * dt);
    let mut out = vec![[0.0; 2]; position.len()];
    for k in 1..position.len() - 1 {
        for c in 0..2 {
            out[k][c] = (position[k + 1][c] - 2.0 * position[k][c] + position[k - 1][c]) * inv;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    /// `states[i][k]`: orbital `i` at grid point `k`.
    pub states: [Vec<State>; OCCUPIED],
    pub position: Vec<[f64; 2]>,
    pub acceleration: Vec<[f64; 2]>,
    pub dt: f64,
    /// Largest |‖u‖ − 1| seen over the run.
    pub max_norm_drift: f64,
}

impl EvolutionRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Runs both occupied orbitals through the pulse starting from the ground state.
pub fn propagate_dimer(dimer: &Dimer, pulse: &Pulse) -> Result<EvolutionRecord> {
    let prop = Propagator::new(dimer, pulse);
    let n = pulse.steps + 1;
    let mut current: [State; OCCUPIED] =
        std::array::from_fn(|i| dimer.eigen.states[i].map(|c| Complex64::new(c, 0.0)));
    let mut states: [Vec<State>; OCCUPIED] = std::array::from_fn(|_| Vec::with_capacity(n));
    let mut position = Vec::with_capacity(n);
    let mut max_drift: f64 = 0.0;

    for k in 0..n {
        if k > 0 {
            current = prop.step_all(&current, pulse.time(k - 1));
            for (orbital, s) in current.iter().enumerate() {
                let drift = (norm_sqr(s).sqrt() - 1.0).abs();
                max_drift = max_drift.max(drift);
                if drift > DRIFT_LIMIT {
                    return Err(Error::NormDrift {
                        orbital,
                        step: k,
                        drift,
                    });
                }
            }
        }
        for (store, s) in states.iter_mut().zip(&current) {
            store.push(*s);
        }
        position.push(total_position(&current, &dimer.geometry));
    }

    let acceleration = acceleration_from_position(&position, pulse.dt)?;
    Ok(EvolutionRecord {
        times: pulse.time_grid(),
        states,
        position,
        acceleration,
        dt: pulse.dt,
        max_norm_drift: max_drift,
    })
}

pub fn propagate(model: &ModelSpec, pulse: &Pulse) -> Result<EvolutionRecord> {
    propagate_dimer(&Dimer::new(*model)?, pulse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laser::PulseSpec;

    fn setup(phi: f64) -> (Dimer, Pulse) {
        let dimer = Dimer::new(ModelSpec::default()).unwrap();
        let pulse = PulseSpec::default()
            .with_phi(phi)
            .resolve(dimer.eigen.gap)
            .unwrap();
        (dimer, pulse)
    }

    #[test]
    fn laser_hamiltonian_diagonal() {
        let (dimer, _) = setup(0.0);
        assert_eq!(laser_hamiltonian(&dimer.geometry, [0.0, 0.0]), [0.0; 4]);
        assert_eq!(laser_hamiltonian(&dimer.geometry, [1.0, 0.0]), dimer.geometry.x());
        let d = laser_hamiltonian(&dimer.geometry, [0.3, -0.7]);
        assert_eq!(d[0], -d[3]);
        assert_eq!(d[1], -d[2]);
    }

    #[test]
    fn half_steps_compose_to_full_step() {
        let (dimer, _) = setup(0.0);
        let half = static_exponential(&dimer, 0.05);
        let full = static_exponential(&dimer, 0.1);
        let v: State = std::array::from_fn(|i| Complex64::new(i as f64 + 1.0, 0.5));
        let a = apply(&half, &apply(&half, &v));
        let b = apply(&full, &v);
        for i in 0..4 {
            assert!((a[i] - b[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn field_free_run_keeps_eigenstates() {
        let (dimer, pulse) = setup(0.0);
        let pulse = Pulse { e0: 0.0, ..pulse };
        let rec = propagate_dimer(&dimer, &pulse).unwrap();
        let total_time = pulse.steps as f64 * pulse.dt;
        for i in 0..OCCUPIED {
            let u = dimer.eigen.states[i].map(|c| Complex64::new(c, 0.0));
            let last = rec.states[i].last().unwrap();
            let ov = inner(&u, last);
            assert!((ov.norm() - 1.0).abs() < 1e-9);
            let want = Complex64::from_polar(1.0, -dimer.eigen.energies[i] * total_time);
            assert!((ov - want).norm() < 1e-9);
        }
        let p0 = rec.position[0];
        for (p, a) in rec.position.iter().zip(&rec.acceleration) {
            assert!((p[0] - p0[0]).abs() < 1e-12 && (p[1] - p0[1]).abs() < 1e-12);
            assert!(a[0].abs() < 1e-10 && a[1].abs() < 1e-10);
        }
    }

    #[test]
    fn tiny_step_barely_moves_state() {
        let (dimer, pulse) = setup(30.0);
        let prop = Propagator::with_step(&dimer, &pulse, 1e-7);
        let u = dimer.eigen.states[0].map(|c| Complex64::new(c, 0.3 * c));
        let next = prop.step(&u, 100.0);
        let diff: f64 = u.iter().zip(&next).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff < 1e-6);
    }

    #[test]
    fn ground_state_position_is_zero() {
        let (dimer, pulse) = setup(0.0);
        let rec = propagate_dimer(&dimer, &pulse).unwrap();
        assert!(rec.position[0][0].abs() < 1e-12 && rec.position[0][1].abs() < 1e-12);
        assert_eq!(rec.len(), pulse.steps + 1);
        assert_eq!(rec.acceleration.len(), rec.len());
        assert_eq!(rec.states[0].len(), rec.len());
    }

    #[test]
    fn per_step_unitarity_and_orthogonality() {
        let (dimer, pulse) = setup(55.0);
        let rec = propagate_dimer(&dimer, &pulse).unwrap();
        assert!(rec.max_norm_drift < 1e-10);
        for k in 1..rec.len() {
            for i in 0..OCCUPIED {
                let before = norm_sqr(&rec.states[i][k - 1]).sqrt();
                let after = norm_sqr(&rec.states[i][k]).sqrt();
                assert!((after - before).abs() < 1e-12);
            }
            assert!(inner(&rec.states[0][k], &rec.states[1][k]).norm() < 1e-9);
        }
    }

    #[test]
    fn molecular_polarization_drives_y() {
        let (dimer, pulse) = setup(90.0);
        let rec = propagate_dimer(&dimer, &pulse).unwrap();
        let rms = |c: usize| {
            (rec.acceleration.iter().map(|a| a[c] * a[c]).sum::<f64>() / rec.len() as f64).sqrt()
        };
        assert!(rms(1) > 10.0 * rms(0));
        assert!(rms(0) > 0.0);
    }

    #[test]
    fn flipped_polarization_flips_acceleration() {
        let (dimer, pulse) = setup(37.0);
        let a = propagate_dimer(&dimer, &pulse).unwrap();
        let b = propagate_dimer(&dimer, &pulse.with_phi(217.0)).unwrap();
        for (x, y) in a.acceleration.iter().zip(&b.acceleration) {
            assert!((x[0] + y[0]).abs() < 1e-9 && (x[1] + y[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn forward_then_backward_returns_home() {
        let (dimer, pulse) = setup(20.0);
        let fwd = Propagator::new(&dimer, &pulse);
        let back = Propagator::with_step(&dimer, &pulse, -pulse.dt);
        let start = dimer.eigen.states[0].map(|c| Complex64::new(c, 0.0));
        let mut s = start;
        for k in 0..pulse.steps {
            s = fwd.step(&s, pulse.time(k));
        }
        for k in (1..=pulse.steps).rev() {
            s = back.step(&s, pulse.time(k));
        }
        let err: f64 = s.iter().zip(&start).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn acceleration_stencil() {
        let dt = 0.1;
        let series: Vec<[f64; 2]> = (0..10)
            .map(|k| {
                let t = k as f64 * dt;
                [0.5 * 3.0 * t * t, 2.0 * t * t * t]
            })
            .collect();
        let a = acceleration_from_position(&series, dt).unwrap();
        assert_eq!(a[0], [0.0, 0.0]);
        assert_eq!(a[9], [0.0, 0.0]);
        for (k, ak) in a.iter().enumerate().take(9).skip(1) {
            let t = k as f64 * dt;
            assert!((ak[0] - 3.0).abs() < 1e-9);
            assert!((ak[1] - 12.0 * t).abs() < 1e-9);
        }
        let flat = acceleration_from_position(&[[1.0, 2.0]; 5], dt).unwrap();
        assert!(flat.iter().all(|a| *a == [0.0, 0.0]));
        assert!(matches!(
            acceleration_from_position(&[[0.0; 2]; 2], dt),
            Err(Error::SeriesTooShort { .. })
        ));
    }
}
