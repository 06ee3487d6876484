//! High-harmonic generation from a four-site tight-binding dimer.
//!
//! [`model`] builds the static Hamiltonian and geometry, [`laser`] the pulse,
//! [`propagator`] runs the two occupied orbitals through it, [`spectrum`]
//! turns the dipole acceleration into harmonic intensities, [`adiabatic`]
//! decomposes the dynamics in the instantaneous eigenbasis and [`scans`]
//! sweeps polarization and coupling. [`config`] and [`run`] drive batch runs
//! and write their data files.
//!
//! ```
//! use hhg_core::{Dimer, ModelSpec, PulseSpec};
//!
//! let dimer = Dimer::new(ModelSpec::default()).unwrap();
//! let pulse = PulseSpec { n_cyc: 2, ..PulseSpec::default() }
//!     .resolve(dimer.eigen.gap)
//!     .unwrap();
//! let record = hhg_core::propagator::propagate_dimer(&dimer, &pulse).unwrap();
//! let spectrum = hhg_core::spectrum::power_spectrum(&record.acceleration, pulse.dt, pulse.omega0).unwrap();
//! assert!(spectrum.harmonic(1).unwrap() > spectrum.harmonic(2).unwrap());
//! ```

pub mod adiabatic;
pub mod config;
pub mod error;
pub mod fit;
pub mod laser;
pub mod linalg;
pub mod model;
pub mod propagator;
pub mod run;
pub mod scans;
pub mod spectrum;

pub use config::{Mode, RunConfig};
pub use error::{Error, Result};
pub use laser::{Pulse, PulseSpec};
pub use model::{Dimer, ModelSpec};
pub use scans::Engine;
pub use spectrum::Spectrum;
