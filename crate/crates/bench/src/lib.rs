//! Shared fixtures for the propagator benchmarks.

use std::sync::Arc;

use polaron::bogoliubov::{DoubleFockBasis, FluctuationKernels, KernelContext};
use polaron::fock::SparseOperator;
use polaron::froehlich_exact::{assemble_froehlich, FroehlichParams, ManyBodyBasis, ManyBodyState};
use polaron::landau_pekar::{LPState, LpSystem, PhiPreset, PsiPreset};
use polaron::lattice::Lattice;

/// Landau–Pekar system on `points` sites with a Gaussian condensate.
pub fn lp_fixture(points: usize) -> (LpSystem, LPState) {
    let lat = Lattice::new(1, 1.0, points, None).unwrap();
    let system = LpSystem::new(&lat, 1.0).unwrap();
    let psi = PsiPreset::Gaussian { center: [0.5, 0.0, 0.0], width: 0.25, momentum: [1, 0, 0] }.build(&lat.grid).unwrap();
    let phi = PhiPreset::Gaussian { amplitude: 0.2, width: 3.0 }.build(&lat.modes).unwrap();
    let state = system.state(psi, phi).unwrap();
    (system, state)
}

/// Four-site Fröhlich Hamiltonian and a random state on it.
pub fn froehlich_fixture(particles: usize, n_max: usize) -> (Arc<ManyBodyBasis>, SparseOperator, ManyBodyState) {
    let lat = Lattice::new(1, 1.0, 4, Some(1.0)).unwrap();
    let (basis, h) = assemble_froehlich(&FroehlichParams::new(lat, particles, 1.0, n_max).unwrap()).unwrap();
    let state = ManyBodyState::random(basis.clone(), 1);
    (basis, h, state)
}

/// Fluctuation kernels for a cosine condensate and the double Fock basis with total cutoff `m`.
pub fn kernel_fixture(m: usize) -> (Arc<DoubleFockBasis>, Lattice, FluctuationKernels) {
    let lat = Lattice::new(1, 1.0, 4, Some(1.0)).unwrap();
    let psi = PsiPreset::Cosine { amplitude: 0.3, momentum: [1, 0, 0] }.build(&lat.grid).unwrap();
    let phi = PhiPreset::Gaussian { amplitude: 0.1, width: 2.0 }.build(&lat.modes).unwrap();
    let kernels = KernelContext::new(&lat, 1.0).unwrap().build(&psi, &phi).unwrap();
    let basis = Arc::new(DoubleFockBasis::total(lat.grid.site_count(), lat.modes.len(), m));
    (basis, lat, kernels)
}
