//! Numerical laboratory for the mean-field Fröhlich polaron model.
//!
//! The crate couples three levels of description of N bosons interacting with a
//! quantized phonon field on a periodic lattice:
//!
//! * [`landau_pekar`]: the effective condensate/classical-field equations,
//! * [`froehlich_exact`]: the many-body Hamiltonian on a truncated Fock space,
//! * [`bogoliubov`] and [`excitation`]: quadratic fluctuation dynamics on the
//!   particle/phonon double Fock space and the unitary map that relates it to
//!   the many-body state.
//!
//! [`lattice`] and [`fock`] provide the shared discretization and the bosonic
//! machinery; [`harness`] drives sweeps, checks and report emission.

pub mod bogoliubov;
pub mod error;
pub mod excitation;
pub mod fock;
pub mod froehlich_exact;
pub mod harness;
pub mod landau_pekar;
pub mod lattice;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
