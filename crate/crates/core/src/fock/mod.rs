//! Truncated bosonic Fock spaces: occupation bases, ladder operators, Weyl
//! displacements and a Lanczos propagator.

mod basis;
pub mod dense;
mod krylov;
mod ops;
mod sparse;

pub use basis::{Constraint, OccupationBasis};
pub use krylov::{krylov_expm, propagate, KrylovOptions};
pub use ops::{
    apply_annihilate, apply_create, coherent_state, coherent_tail, displacement_generator, ladder_operator,
    number_operator, weyl_displace, FockVector, WeylOperator, TAIL_WARNING,
};
pub use sparse::{distance, dot, norm, BlockDiagonal, LinearOperator, SparseOperator};
