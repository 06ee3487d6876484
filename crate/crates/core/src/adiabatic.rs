//! Instantaneous eigenbases along the pulse and the adiabatic decomposition
//! of the exact position expectation value.
//!
//! With `c_mⁱ = μ_mᵀuⁱ` and `C_mn = 2 Σ_i c_mⁱ* c_nⁱ`, the identity
//! `⟨r⟩ = Σ_mn C_mn r_mn` holds exactly. Keeping only `2(r₀₀ + r₁₁)` gives the
//! adia-intra series, keeping only the cross-gap block plus its conjugate
//! gives adia-inter.

use log::warn;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laser::Pulse;
use crate::linalg::{self, Matrix};
use crate::model::{Dimer, SITES};
use crate::propagator::{acceleration_from_position, laser_hamiltonian, EvolutionRecord, OCCUPATION, OCCUPIED};
use crate::spectrum::{power_spectrum, Spectrum};

/// Spacing below which the energy-ordered gauge chain is unreliable.
pub const DEGENERACY_WARNING: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdiabaticFrame {
    pub energies: [f64; SITES],
    /// Eigenvectors as columns, `states[i][n]` is site `i` of μ_n.
    pub states: Matrix<SITES>,
    pub min_spacing: f64,
}

impl AdiabaticFrame {
    pub fn vector(&self, n: usize) -> [f64; SITES] {
        std::array::from_fn(|i| self.states[i][n])
    }

    /// `r_mn = (μ_mᵀXμ_n, μ_mᵀYμ_n)`.
    pub fn position_elements(&self, dimer: &Dimer) -> [Matrix<SITES>; 2] {
        let x = dimer.geometry.x();
        let y = dimer.geometry.y();
        let mut xi = [[0.0; SITES]; SITES];
        let mut eta = [[0.0; SITES]; SITES];
        for m in 0..SITES {
            for n in m..SITES {
                let (mut a, mut b) = (0.0, 0.0);
                for i in 0..SITES {
                    let w = self.states[i][m] * self.states[i][n];
                    a += w * x[i];
                    b += w * y[i];
                }
                xi[m][n] = a;
                xi[n][m] = a;
                eta[m][n] = b;
                eta[n][m] = b;
            }
        }
        [xi, eta]
    }

    /// Largest `‖Hμ_n − ϵ_nμ_n‖` for the Hamiltonian this frame came from.
    pub fn residual(&self, h: &Matrix<SITES>) -> f64 {
        (0..SITES)
            .map(|n| {
                let v = self.vector(n);
                let hv = linalg::matvec(h, &v);
                hv.iter()
                    .zip(&v)
                    .map(|(a, b)| (a - self.energies[n] * b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

pub fn instantaneous_hamiltonian(dimer: &Dimer, field: [f64; 2]) -> Matrix<SITES> {
    let mut h = dimer.h0;
    for (i, d) in laser_hamiltonian(&dimer.geometry, field).iter().enumerate() {
        h[i][i] += d;
    }
    h
}

/// Diagonalizes `H₀ + E·r`. Without a previous frame the largest component of
/// each eigenvector is made positive; otherwise each vector's overlap with its
/// predecessor is made positive.
pub fn instantaneous_frame(
    dimer: &Dimer,
    field: [f64; 2],
    previous: Option<&AdiabaticFrame>,
) -> AdiabaticFrame {
    let h = instantaneous_hamiltonian(dimer, field);
    let mut eig = match previous {
        Some(p) => linalg::eigh_warm(&h, &p.states),
        None => linalg::eigh(&h),
    };
    match previous {
        None => eig.fix_signs_largest_positive(),
        Some(p) => {
            for n in 0..SITES {
                if linalg::dot(&eig.vector(n), &p.vector(n)) < 0.0 {
                    eig.flip_sign(n);
                }
            }
        }
    }
    let min_spacing = eig
        .values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if min_spacing < DEGENERACY_WARNING {
        warn!("instantaneous levels nearly degenerate (spacing {min_spacing:e}); gauge chain may jump");
    }
    AdiabaticFrame {
        energies: eig.values,
        states: eig.vectors,
        min_spacing,
    }
}

/// Gauge-fixed frames on every point of the pulse grid.
pub fn frames(dimer: &Dimer, pulse: &Pulse) -> Vec<AdiabaticFrame> {
    let mut out: Vec<AdiabaticFrame> = Vec::with_capacity(pulse.steps + 1);
    for k in 0..=pulse.steps {
        let frame = instantaneous_frame(dimer, pulse.electric_field(pulse.time(k)), out.last());
        out.push(frame);
    }
    out
}

/// Smallest `⟨μ_n(t_k)|μ_n(t_{k+1})⟩` over all levels and steps.
pub fn min_overlap(frames: &[AdiabaticFrame]) -> f64 {
    frames
        .windows(2)
        .flat_map(|w| (0..SITES).map(move |n| linalg::dot(&w[0].vector(n), &w[1].vector(n))))
        .fold(f64::INFINITY, f64::min)
}

pub type CoefficientMatrix = [[Complex64; SITES]; SITES];

#[derive(Debug, Clone)]
pub struct AdiabaticDecomposition {
    /// `coefficients[k][i][m] = c_mⁱ(t_k)`.
    pub coefficients: Vec<[[Complex64; SITES]; OCCUPIED]>,
    /// `occupations[k][m][n] = C_mn(t_k)`.
    pub occupations: Vec<CoefficientMatrix>,
    /// `position_elements[k] = (ξ, η)` at t_k.
    pub position_elements: Vec<[Matrix<SITES>; 2]>,
}

impl AdiabaticDecomposition {
    pub fn len(&self) -> usize {
        self.occupations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupations.is_empty()
    }

    /// Largest `|Σ_m |c_mⁱ|² − 1|`.
    pub fn completeness_error(&self) -> f64 {
        self.coefficients
            .iter()
            .flat_map(|c| c.iter().map(|orb| (orb.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs()))
            .fold(0.0, f64::max)
    }

    /// Σ_{m,n} C_mn r_mn per step.
    pub fn reconstruct_position(&self) -> Vec<[f64; 2]> {
        self.weighted_sum(|_, _| true)
    }

    /// Cross-gap block plus its Hermitian conjugate.
    pub fn adia_inter_position(&self) -> Vec<[f64; 2]> {
        self.occupations
            .iter()
            .zip(&self.position_elements)
            .map(|(c, r)| {
                let s = cross_gap_sum(c, r);
                [2.0 * s[0].re, 2.0 * s[1].re]
            })
            .collect()
    }

    /// Diagonal blocks (occupied/occupied and empty/empty) minus the adia-intra
    /// terms, so that intra + inter + remainder is the exact series.
    pub fn diagonal_block_remainder(&self, intra: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let blocks = self.weighted_sum(|m, n| (m < OCCUPIED) == (n < OCCUPIED));
        blocks
            .iter()
            .zip(intra)
            .map(|(b, a)| [b[0] - a[0], b[1] - a[1]])
            .collect()
    }

    fn weighted_sum(&self, keep: impl Fn(usize, usize) -> bool) -> Vec<[f64; 2]> {
        self.occupations
            .iter()
            .zip(&self.position_elements)
            .map(|(c, [xi, eta])| {
                let mut out = [0.0; 2];
                for m in 0..SITES {
                    for n in 0..SITES {
                        if keep(m, n) {
                            out[0] += (c[m][n] * xi[m][n]).re;
                            out[1] += (c[m][n] * eta[m][n]).re;
                        }
                    }
                }
                out
            })
            .collect()
    }
}

/// `Σ_{m∈occ} Σ_{n∈empty} C_mn r_mn` as complex numbers (x and y).
pub fn cross_gap_sum(c: &CoefficientMatrix, r: &[Matrix<SITES>; 2]) -> [Complex64; 2] {
    let mut s = [Complex64::new(0.0, 0.0); 2];
    for m in 0..OCCUPIED {
        for n in OCCUPIED..SITES {
            s[0] += c[m][n] * r[0][m][n];
            s[1] += c[m][n] * r[1][m][n];
        }
    }
    s
}

/// Projects the exact orbitals onto the frames.
pub fn decompose(
    dimer: &Dimer,
    record: &EvolutionRecord,
    frames: &[AdiabaticFrame],
) -> Result<AdiabaticDecomposition> {
    if frames.len() != record.len() {
        return Err(Error::GridMismatch {
            expected: record.len(),
            got: frames.len(),
        });
    }
    let mut coefficients = Vec::with_capacity(frames.len());
    let mut occupations = Vec::with_capacity(frames.len());
    let mut position_elements = Vec::with_capacity(frames.len());
    for (k, frame) in frames.iter().enumerate() {
        let c: [[Complex64; SITES]; OCCUPIED] = std::array::from_fn(|orb| {
            let u = &record.states[orb][k];
            std::array::from_fn(|m| (0..SITES).map(|i| u[i] * frame.states[i][m]).sum())
        });
        let mut big = [[Complex64::new(0.0, 0.0); SITES]; SITES];
        for (m, row) in big.iter_mut().enumerate() {
            for (n, entry) in row.iter_mut().enumerate() {
                *entry = OCCUPATION * c.iter().map(|orb| orb[m].conj() * orb[n]).sum::<Complex64>();
            }
        }
        coefficients.push(c);
        occupations.push(big);
        position_elements.push(frame.position_elements(dimer));
    }
    Ok(AdiabaticDecomposition {
        coefficients,
        occupations,
        position_elements,
    })
}

/// `2(r₀₀ + r₁₁)` per frame.
pub fn adia_intra_position(dimer: &Dimer, frames: &[AdiabaticFrame]) -> Vec<[f64; 2]> {
    let x = dimer.geometry.x();
    let y = dimer.geometry.y();
    frames
        .iter()
        .map(|f| {
            let mut out = [0.0; 2];
            for n in 0..OCCUPIED {
                for i in 0..SITES {
                    let w = f.states[i][n] * f.states[i][n];
                    out[0] += w * x[i];
                    out[1] += w * y[i];
                }
            }
            [OCCUPATION * out[0], OCCUPATION * out[1]]
        })
        .collect()
}

/// Same second difference and spectral pipeline as the exact run.
pub fn adiabatic_spectrum(position: &[[f64; 2]], pulse: &Pulse) -> Result<Spectrum> {
    let accel = acceleration_from_position(position, pulse.dt)?;
    power_spectrum(&accel, pulse.dt, pulse.omega0)
}
