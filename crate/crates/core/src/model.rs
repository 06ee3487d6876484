//! Dimer geometry, static tight-binding Hamiltonian and its eigensystem.
//!
//! Four sites, two per molecule. Sites 0 and 1 form molecule A, sites 2 and 3
//! molecule B; the intramolecular hopping `t0` links 0-1 and 2-3 and the
//! intermolecular hopping `t1` links the closest cross-molecule pair 1-2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

pub const SITES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSpec {
    /// Intramolecular hopping (defines the energy unit).
    pub t0: f64,
    /// Intermolecular hopping between sites 1 and 2.
    pub t1: f64,
    /// Center-to-center distance of the molecules.
    pub d: f64,
    /// Site-to-site length within a molecule.
    pub l: f64,
    /// Molecular axis angle against +x, degrees.
    pub alpha_mol: f64,
    /// Intermolecular axis angle against +x, degrees.
    pub alpha_inter: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            t0: -1.0,
            t1: -0.02,
            d: 9.2,
            l: 5.5,
            alpha_mol: 90.0,
            alpha_inter: 20.0,
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.t0, self.t1, self.d, self.l, self.alpha_mol, self.alpha_inter]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidModel("all parameters must be finite".into()));
        }
        if self.l <= 0.0 {
            return Err(Error::InvalidModel("l must be positive".into()));
        }
        if self.d <= 0.0 {
            return Err(Error::InvalidModel("d must be positive".into()));
        }
        Ok(())
    }

    pub fn with_t1(mut self, t1: f64) -> Self {
        self.t1 = t1;
        self
    }

    /// Closed-form spectrum of the 4-site chain: ±(√(t1²+4t0²) ± |t1|)/2, ascending.
    pub fn closed_form_energies(&self) -> [f64; 4] {
        let root = (self.t1 * self.t1 + 4.0 * self.t0 * self.t0).sqrt();
        let outer = 0.5 * (root + self.t1.abs());
        let inner = 0.5 * (root - self.t1.abs());
        [-outer, -inner, inner, outer]
    }

    /// HOMO-LUMO gap from the closed form.
    pub fn closed_form_gap(&self) -> f64 {
        let e = self.closed_form_energies();
        e[2] - e[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Geometry {
    pub sites: [[f64; 2]; SITES],
}

impl Geometry {
    pub fn x(&self) -> [f64; SITES] {
        self.sites.map(|s| s[0])
    }

    pub fn y(&self) -> [f64; SITES] {
        self.sites.map(|s| s[1])
    }

    pub fn center_a(&self) -> [f64; 2] {
        midpoint(self.sites[0], self.sites[1])
    }

    pub fn center_b(&self) -> [f64; 2] {
        midpoint(self.sites[2], self.sites[3])
    }

    /// Site coordinates projected on a field direction, i.e. the diagonal of
    /// `E·r` for a unit field along `direction`.
    pub fn projection(&self, direction: [f64; 2]) -> [f64; SITES] {
        self.sites
            .map(|s| direction[0] * s[0] + direction[1] * s[1])
    }
}

fn midpoint(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

fn unit(angle_deg: f64) -> [f64; 2] {
    let a = angle_deg.to_radians();
    [a.cos(), a.sin()]
}

pub fn build_geometry(spec: &ModelSpec) -> Geometry {
    let inter = unit(spec.alpha_inter);
    let mol = unit(spec.alpha_mol);
    let center_b = [0.5 * spec.d * inter[0], 0.5 * spec.d * inter[1]];
    let center_a = [-center_b[0], -center_b[1]];
    // orient the molecular offset so that site 1 (A) and site 2 (B) face each other
    let sign = if inter[0] * mol[0] + inter[1] * mol[1] >= 0.0 {
        1.0
    } else {
        -1.0
    };
    let half = 0.5 * spec.l * sign;
    let offset = [half * mol[0], half * mol[1]];
    let s0 = [center_a[0] - offset[0], center_a[1] - offset[1]];
    let s1 = [center_a[0] + offset[0], center_a[1] + offset[1]];
    // B is the point reflection of A, which makes inversion symmetry exact
    Geometry {
        sites: [s0, s1, [-s1[0], -s1[1]], [-s0[0], -s0[1]]],
    }
}

pub fn build_h0(spec: &ModelSpec) -> Matrix<SITES> {
    let mut h = [[0.0; SITES]; SITES];
    h[0][1] = spec.t0;
    h[1][0] = spec.t0;
    h[1][2] = spec.t1;
    h[2][1] = spec.t1;
    h[2][3] = spec.t0;
    h[3][2] = spec.t0;
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StaticEigensystem {
    pub energies: [f64; SITES],
    /// `states[i]` is the eigenvector for `energies[i]`.
    pub states: [[f64; SITES]; SITES],
    pub gap: f64,
}

impl StaticEigensystem {
    /// Eigenvectors as matrix columns.
    pub fn vector_matrix(&self) -> Matrix<SITES> {
        linalg::transpose(&self.states)
    }
}

/// Diagonalizes a static Hamiltonian; eigenvectors carry the
/// largest-component-positive sign convention.
///
/// Inside a degenerate subspace (t1 = 0) the basis is whatever the rotations
/// produce, so dipoles between degenerate partners are basis dependent.
pub fn solve_static(h0: &Matrix<SITES>) -> StaticEigensystem {
    let mut eig = linalg::eigh(h0);
    eig.fix_signs_largest_positive();
    let states = linalg::transpose(&eig.vectors);
    StaticEigensystem {
        energies: eig.values,
        states,
        gap: eig.values[2] - eig.values[1],
    }
}

/// Model parameters bundled with everything derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dimer {
    pub spec: ModelSpec,
    pub geometry: Geometry,
    pub h0: Matrix<SITES>,
    pub eigen: StaticEigensystem,
}

impl Dimer {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        let h0 = build_h0(&spec);
        Ok(Self {
            spec,
            geometry: build_geometry(&spec),
            h0,
            eigen: solve_static(&h0),
        })
    }
}

/// Transition dipole between two real states.
pub fn dipole_between(a: &[f64; SITES], b: &[f64; SITES], geometry: &Geometry) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (site, pos) in geometry.sites.iter().enumerate() {
        let w = a[site] * b[site];
        out[0] += w * pos[0];
        out[1] += w * pos[1];
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionDipole {
    pub vector: [f64; 2],
    /// Direction in degrees, `atan2(y, x)`.
    pub direction_deg: f64,
}

impl TransitionDipole {
    pub fn magnitude(&self) -> f64 {
        self.vector[0].hypot(self.vector[1])
    }
}

pub fn transition_dipole(
    eigen: &StaticEigensystem,
    geometry: &Geometry,
    i: usize,
    j: usize,
) -> Result<TransitionDipole> {
    if i >= SITES || j >= SITES || i == j {
        return Err(Error::InvalidModel(format!(
            "transition dipole needs two distinct levels in 0..4, got ({i}, {j})"
        )));
    }
    let vector = dipole_between(&eigen.states[i], &eigen.states[j], geometry);
    Ok(TransitionDipole {
        vector,
        direction_deg: vector[1].atan2(vector[0]).to_degrees(),
    })
}

/// Reduces an angle to [0, 180).
pub fn mod_180(angle_deg: f64) -> f64 {
    let r = angle_deg.rem_euclid(180.0);
    if r >= 180.0 {
        0.0
    } else {
        r
    }
}

/// Smallest distance between two axis directions (angles mod 180).
pub fn axis_distance(a_deg: f64, b_deg: f64) -> f64 {
    let d = mod_180(a_deg - b_deg);
    d.min(180.0 - d)
}

/// Result of probing how a transition dipole leaves its t1 → 0⁺ value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionCheck {
    /// Dipole of the decoupled-limit combinations on the smooth branch.
    pub baseline: [f64; 2],
    /// `(δ, |μ(δ) − μ(0⁺)|)` for δ, δ/2, δ/4.
    pub probes: Vec<(f64, f64)>,
    /// Fitted log-log slope; `None` for δ = 0.
    pub exponent: Option<f64>,
}

/// Zeroth-order eigenvectors at t1 = 0 on the branch that continues smoothly
/// to `t1 → 0⁺` with the sign of `direction`: inside each degenerate pair the
/// coupling operator `∂H/∂t1` is diagonalized.
fn smooth_branch_states(spec: &ModelSpec, direction: f64) -> [[f64; SITES]; SITES] {
    let base = solve_static(&build_h0(&spec.with_t1(0.0)));
    let mut perturbation = [[0.0; SITES]; SITES];
    perturbation[1][2] = direction;
    perturbation[2][1] = direction;

    let mut out = base.states;
    for pair in [[0usize, 1usize], [2, 3]] {
        let mut block = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let v = linalg::matvec(&perturbation, &base.states[pair[b]]);
                block[a][b] = linalg::dot(&base.states[pair[a]], &v);
            }
        }
        let mix = linalg::eigh(&block);
        for k in 0..2 {
            let mut v = [0.0; SITES];
            for (a, &level) in pair.iter().enumerate() {
                for (s, vs) in v.iter_mut().enumerate() {
                    *vs += mix.vectors[a][k] * base.states[level][s];
                }
            }
            out[pair[k]] = v;
        }
    }
    out
}

/// Estimates the order of the leading t1-dependent term of the dipole
/// `μ_ij(t1)` by evaluating it at t1 = δ, δ/2, δ/4 (with the sign of the
/// model's t1) and fitting the log-log slope of `|μ(t1) − μ(0⁺)|`.
pub fn dipole_t1_expansion_check(
    spec: &ModelSpec,
    i: usize,
    j: usize,
    delta: f64,
) -> Result<ExpansionCheck> {
    if !matches!((i, j), (0, 1) | (1, 0) | (2, 3) | (3, 2)) {
        return Err(Error::InvalidModel(format!(
            "expansion check is defined for the (0,1) and (2,3) transitions, got ({i}, {j})"
        )));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidModel("probe step must be finite and non-negative".into()));
    }
    let direction = if spec.t1 < 0.0 { -1.0 } else { 1.0 };
    let branch = smooth_branch_states(spec, direction);
    let geometry = build_geometry(spec);
    let baseline = dipole_between(&branch[i], &branch[j], &geometry);
    if delta == 0.0 {
        return Ok(ExpansionCheck {
            baseline,
            probes: Vec::new(),
            exponent: None,
        });
    }

    let mut probes = Vec::with_capacity(3);
    for step in [delta, delta / 2.0, delta / 4.0] {
        let eig = solve_static(&build_h0(&spec.with_t1(direction * step)));
        // align signs with the branch so the dipole sign is comparable
        let align = |k: usize| {
            let s = linalg::dot(&eig.states[k], &branch[k]).signum();
            eig.states[k].map(|c| c * s)
        };
        let mu = dipole_between(&align(i), &align(j), &geometry);
        let diff = (mu[0] - baseline[0]).hypot(mu[1] - baseline[1]);
        probes.push((step, diff));
    }
    let xs: Vec<f64> = probes.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = probes.iter().map(|p| p.1).collect();
    let exponent = crate::fit::log_log_slope(&xs, &ys)?;
    Ok(ExpansionCheck {
        baseline,
        probes,
        exponent: Some(exponent),
    })
}
