//! Many-body Fröhlich Hamiltonian for `N` bosons on the lattice coupled to a
//! truncated phonon field, its exact propagation and the one-particle
//! observables that measure condensation.
//!
//! The particle side is second quantized over lattice sites: a configuration is
//! a tuple of site occupations summing to `N`, and site amplitudes are
//! `ℓ²`-normalized (`h^{d/2} ψ(x)`). States are stored with the phonon index
//! fastest: `index = particle · dim_phonon + phonon`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::fock::{
    dense, distance, dot, number_operator, propagate, KrylovOptions, LinearOperator, OccupationBasis,
    SparseOperator, WeylOperator,
};
use crate::lattice::{Lattice, TorusGrid};
use crate::{Error, Result, C64};

/// Default bound on the number of stored Hamiltonian entries.
pub const DEFAULT_NNZ_LIMIT: usize = 5_000_000;

/// Bytes per stored entry (value plus column index).
const BYTES_PER_NONZERO: usize = 24;

#[derive(Clone, Debug)]
pub struct FroehlichParams {
    pub particles: usize,
    pub alpha: f64,
    pub lattice: Lattice,
    /// Total phonon number cutoff.
    pub n_max: usize,
    pub nnz_limit: usize,
}

impl FroehlichParams {
    pub fn new(lattice: Lattice, particles: usize, alpha: f64, n_max: usize) -> Result<Self> {
        if particles == 0 {
            return Err(Error::InvalidArgument("particle number must be at least 1".into()));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("coupling alpha must be >= 0, got {alpha}")));
        }
        Ok(FroehlichParams { particles, alpha, lattice, n_max, nnz_limit: DEFAULT_NNZ_LIMIT })
    }
}

/// `c*_to c_from` maps a configuration to `amp · |target⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hop {
    pub from: usize,
    pub to: usize,
    pub target: usize,
    pub amp: f64,
}

/// Symmetric `N`-particle configurations times phonon occupations.
#[derive(Debug)]
pub struct ManyBodyBasis {
    pub particles: OccupationBasis,
    pub phonons: Arc<OccupationBasis>,
    hops: Vec<Vec<Hop>>,
}

impl PartialEq for ManyBodyBasis {
    fn eq(&self, other: &Self) -> bool {
        self.particles == other.particles && self.phonons == other.phonons
    }
}

impl ManyBodyBasis {
    pub fn new(sites: usize, particles: usize, phonon_modes: usize, n_max: usize) -> Self {
        let pb = OccupationBasis::exactly(sites, particles);
        let hops = (0..pb.dim())
            .into_par_iter()
            .map(|p| {
                let occ = pb.state(p);
                let mut out = Vec::new();
                let mut work = occ.to_vec();
                for from in 0..sites {
                    if occ[from] == 0 {
                        continue;
                    }
                    for to in 0..sites {
                        if to == from {
                            continue;
                        }
                        work[from] -= 1;
                        work[to] += 1;
                        let target = pb.index_of(&work).expect("hop stays in the N-particle basis");
                        let amp = ((occ[from] as f64) * (occ[to] as f64 + 1.0)).sqrt();
                        out.push(Hop { from, to, target, amp });
                        work[from] += 1;
                        work[to] -= 1;
                    }
                }
                out
            })
            .collect();
        ManyBodyBasis { particles: pb, phonons: Arc::new(OccupationBasis::at_most(phonon_modes, n_max)), hops }
    }

    pub fn particle_count(&self) -> usize {
        self.particles.cutoff()
    }

    pub fn sites(&self) -> usize {
        self.particles.mode_count()
    }

    pub fn dim(&self) -> usize {
        self.particles.dim() * self.phonons.dim()
    }

    pub fn phonon_dim(&self) -> usize {
        self.phonons.dim()
    }

    /// Off-diagonal one-body moves out of particle configuration `p`.
    pub fn hops(&self, p: usize) -> &[Hop] {
        &self.hops[p]
    }

    pub fn index(&self, particle: usize, phonon: usize) -> usize {
        particle * self.phonons.dim() + phonon
    }
}

/// Coefficients over a [`ManyBodyBasis`]; not necessarily normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct ManyBodyState {
    pub basis: Arc<ManyBodyBasis>,
    pub coeffs: Vec<C64>,
}

impl ManyBodyState {
    pub fn new(basis: Arc<ManyBodyBasis>, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != basis.dim() {
            return Err(Error::SizeMismatch { expected: basis.dim(), got: coeffs.len() });
        }
        Ok(ManyBodyState { basis, coeffs })
    }

    pub fn zeros(basis: Arc<ManyBodyBasis>) -> Self {
        let coeffs = vec![C64::new(0.0, 0.0); basis.dim()];
        ManyBodyState { basis, coeffs }
    }

    /// Normalized state with i.i.d. Gaussian-like coefficients.
    pub fn random(basis: Arc<ManyBodyBasis>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs: Vec<C64> =
            (0..basis.dim()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let n = crate::fock::norm(&coeffs);
        coeffs.iter_mut().for_each(|c| *c /= n);
        ManyBodyState { basis, coeffs }
    }

    /// `(c*(ψ))^N/√N! Ω ⊗ W(f) Ω` for site amplitudes `ψ` and phonon Fock amplitudes `f`.
    pub fn product(basis: Arc<ManyBodyBasis>, psi_site: &[C64], phonon_amplitudes: &[C64]) -> Result<Self> {
        let w = WeylOperator::new(&basis.phonons, phonon_amplitudes)?;
        let mut vac = vec![C64::new(0.0, 0.0); basis.phonon_dim()];
        vac[0] = C64::new(1.0, 0.0);
        let phonon = w.apply(&vac)?;
        Self::product_with_phonons(basis, psi_site, &phonon)
    }

    /// `(c*(ψ))^N/√N! Ω ⊗ ξ` for an arbitrary phonon vector `ξ`.
    pub fn product_with_phonons(basis: Arc<ManyBodyBasis>, psi_site: &[C64], phonon: &[C64]) -> Result<Self> {
        if psi_site.len() != basis.sites() {
            return Err(Error::SizeMismatch { expected: basis.sites(), got: psi_site.len() });
        }
        if phonon.len() != basis.phonon_dim() {
            return Err(Error::SizeMismatch { expected: basis.phonon_dim(), got: phonon.len() });
        }
        let particle = condensate_coefficients(&basis.particles, psi_site);
        let mut coeffs = Vec::with_capacity(basis.dim());
        for c in &particle {
            coeffs.extend(phonon.iter().map(|a| a * c));
        }
        Ok(ManyBodyState { basis, coeffs })
    }

    pub fn norm(&self) -> f64 {
        crate::fock::norm(&self.coeffs)
    }

    pub fn inner(&self, other: &ManyBodyState) -> C64 {
        dot(&self.coeffs, &other.coeffs)
    }
}

/// Coefficients of `(c*(ψ))^N/√N! Ω` over an exact-`N` occupation basis.
pub fn condensate_coefficients(particles: &OccupationBasis, psi_site: &[C64]) -> Vec<C64> {
    let n = particles.cutoff();
    let log_fact = |k: usize| (1..=k).map(|j| (j as f64).ln()).sum::<f64>();
    particles
        .iter()
        .map(|occ| {
            let mut c = C64::new((0.5 * (log_fact(n) - occ.iter().map(|&k| log_fact(k as usize)).sum::<f64>())).exp(), 0.0);
            for (x, &k) in occ.iter().enumerate() {
                c *= psi_site[x].powu(k as u32);
            }
            c
        })
        .collect()
}

/// Per-configuration coupling `√(α/N) g_m Σ_x n_x e^{2πik_m·x}` multiplying `a_m`.
fn coupling_table(params: &FroehlichParams, basis: &ManyBodyBasis) -> Vec<Vec<C64>> {
    let grid = &params.lattice.grid;
    let modes = &params.lattice.modes;
    let scale = (params.alpha / params.particles as f64).sqrt();
    let waves: Vec<Vec<C64>> = modes
        .iter()
        .map(|m| {
            (0..grid.site_count())
                .map(|x| {
                    let pos = grid.position(x);
                    let arg: f64 = (0..grid.dim()).map(|a| 2.0 * PI * m.k[a] * pos[a]).sum();
                    C64::from_polar(1.0, arg)
                })
                .collect()
        })
        .collect();
    (0..basis.particles.dim())
        .map(|p| {
            let occ = basis.particles.state(p);
            waves
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let s: C64 = occ.iter().zip(w).map(|(&n, e)| e * n as f64).sum();
                    s * (scale * modes.coupling(i))
                })
                .collect()
        })
        .collect()
}

/// Phonon transitions `a_m |a⟩ = √n_m |a − e_m⟩` as `(source, target, mode, amplitude)`.
fn phonon_lowering(phonons: &OccupationBasis) -> Vec<(usize, usize, usize, f64)> {
    let mut out = Vec::new();
    let mut occ = vec![0u16; phonons.mode_count()];
    for a in 0..phonons.dim() {
        occ.copy_from_slice(phonons.state(a));
        for m in 0..occ.len() {
            let n = occ[m];
            if n == 0 {
                continue;
            }
            occ[m] = n - 1;
            let target = phonons.index_of(&occ).expect("lowering stays in the basis");
            out.push((a, target, m, (n as f64).sqrt()));
            occ[m] = n;
        }
    }
    out
}

/// `H = Σ_j −Δ_j + √(α/N) Σ_j Σ_m g_m (e^{2πik_m x_j} a_m + h.c.) + 𝒩_a` on the truncated space.
pub fn assemble_froehlich(params: &FroehlichParams) -> Result<(Arc<ManyBodyBasis>, SparseOperator)> {
    let grid = &params.lattice.grid;
    let modes = &params.lattice.modes;
    let sites = grid.site_count();

    // estimate storage before building anything large
    let pb = OccupationBasis::exactly(sites, params.particles);
    let phon = OccupationBasis::at_most(modes.len(), params.n_max);
    let lowering_per_block = {
        let mut count = 0usize;
        for a in 0..phon.dim() {
            count += phon.state(a).iter().filter(|&&n| n > 0).count();
        }
        count
    };
    let hops_total: usize = pb
        .iter()
        .map(|occ| {
            let occupied = occ.iter().filter(|&&n| n > 0).count();
            occupied * (sites - 1)
        })
        .sum();
    let nonzeros = (hops_total + pb.dim()) * phon.dim() + 2 * lowering_per_block * pb.dim();
    if nonzeros > params.nnz_limit {
        return Err(Error::DimensionOverflow {
            nonzeros,
            bytes: nonzeros * BYTES_PER_NONZERO,
            limit: params.nnz_limit,
        });
    }

    let basis = Arc::new(ManyBodyBasis::new(sites, params.particles, modes.len(), params.n_max));
    let kinetic = grid.spectral_multiplier(|l| l);
    let couplings = coupling_table(params, &basis);
    let lowering = phonon_lowering(&basis.phonons);
    let phonon_number: Vec<f64> = basis.phonons.iter().map(|o| o.iter().map(|&n| n as f64).sum()).collect();
    let da = basis.phonon_dim();

    let triplets: Vec<(usize, usize, C64)> = (0..basis.particles.dim())
        .into_par_iter()
        .flat_map_iter(|p| {
            let occ = basis.particles.state(p);
            let diag_kin: f64 = occ.iter().enumerate().map(|(x, &n)| n as f64 * kinetic[(x, x)].re).sum();
            let mut out = Vec::new();
            for a in 0..da {
                let i = basis.index(p, a);
                out.push((i, i, C64::new(diag_kin + phonon_number[a], 0.0)));
            }
            for hop in basis.hops(p) {
                let t = kinetic[(hop.to, hop.from)] * hop.amp;
                if t.norm() == 0.0 {
                    continue;
                }
                for a in 0..da {
                    out.push((basis.index(hop.target, a), basis.index(p, a), t));
                }
            }
            for &(src, dst, m, amp) in &lowering {
                let c = couplings[p][m] * amp;
                out.push((basis.index(p, dst), basis.index(p, src), c));
                out.push((basis.index(p, src), basis.index(p, dst), c.conj()));
            }
            out
        })
        .collect();
    Ok((basis.clone(), SparseOperator::from_triplets(basis.dim(), triplets, true)))
}

/// Sample of an exact trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactSample {
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
}

/// Propagates `e^{−iHt}Ψ` to `horizon` in steps of `dt`, calling `observer` at
/// `t = 0` and after every step.
pub fn evolve_exact(
    h: &SparseOperator,
    initial: &ManyBodyState,
    horizon: f64,
    dt: f64,
    tol: f64,
    mut observer: impl FnMut(f64, &ManyBodyState) -> Result<()>,
) -> Result<ManyBodyState> {
    let steps = crate::landau_pekar::step_count(horizon, dt)?;
    let opts = KrylovOptions::with_tol(tol);
    let mut state = initial.clone();
    observer(0.0, &state)?;
    for i in 1..=steps {
        state.coeffs = propagate(h, &state.coeffs, dt, &opts)?;
        observer(i as f64 * dt, &state)?;
    }
    Ok(state)
}

/// Norm and energy along an exact trajectory.
pub fn exact_conservation(
    h: &SparseOperator,
    initial: &ManyBodyState,
    horizon: f64,
    dt: f64,
    tol: f64,
) -> Result<Vec<ExactSample>> {
    let mut out = Vec::new();
    evolve_exact(h, initial, horizon, dt, tol, |t, s| {
        out.push(ExactSample { t, norm: s.norm(), energy: h.expectation(&s.coeffs).re });
        Ok(())
    })?;
    Ok(out)
}

/// One-particle reduced density matrix `γ_xy = ⟨c*_y c_x⟩ / (N ‖Ψ‖²)` in the site basis.
pub fn reduced_density_particle(state: &ManyBodyState) -> Result<DMatrix<C64>> {
    let basis = &state.basis;
    let norm2 = state.norm().powi(2);
    if norm2 == 0.0 {
        return Err(Error::ZeroState);
    }
    let s = basis.sites();
    let da = basis.phonon_dim();
    let mut gamma = DMatrix::<C64>::zeros(s, s);
    for p in 0..basis.particles.dim() {
        let block = &state.coeffs[p * da..(p + 1) * da];
        let weight: f64 = block.iter().map(|c| c.norm_sqr()).sum();
        for (x, &n) in basis.particles.state(p).iter().enumerate() {
            gamma[(x, x)] += C64::new(n as f64 * weight, 0.0);
        }
        for hop in basis.hops(p) {
            // ⟨target| c*_to c_from |p⟩ contributes to ⟨c*_to c_from⟩ = N γ(from, to)
            let other = &state.coeffs[hop.target * da..(hop.target + 1) * da];
            gamma[(hop.from, hop.to)] += dot(other, block) * hop.amp;
        }
    }
    Ok(gamma / C64::new(basis.particle_count() as f64 * norm2, 0.0))
}

fn projector_complement(psi_site: &[C64]) -> DMatrix<C64> {
    let n = psi_site.len();
    DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        C64::new(id, 0.0) - psi_site[i] * psi_site[j].conj()
    })
}

fn rank_one(psi_site: &[C64]) -> DMatrix<C64> {
    let n = psi_site.len();
    DMatrix::from_fn(n, n, |i, j| psi_site[i] * psi_site[j].conj())
}

/// `Tr|√(1−Δ) q γ q √(1−Δ)|` with `q = 1 − |ψ⟩⟨ψ|`.
pub fn functional_a(grid: &TorusGrid, gamma: &DMatrix<C64>, psi_site: &[C64]) -> f64 {
    let sqrt = grid.spectral_multiplier(|l| (1.0 + l).sqrt());
    let q = projector_complement(psi_site);
    dense::trace_norm_hermitian(&(&sqrt * &q * gamma * &q * &sqrt))
}

/// `Tr|√(1−Δ)(γ − |ψ⟩⟨ψ|)√(1−Δ)|`.
pub fn sobolev_trace_distance(grid: &TorusGrid, gamma: &DMatrix<C64>, psi_site: &[C64]) -> f64 {
    let sqrt = grid.spectral_multiplier(|l| (1.0 + l).sqrt());
    dense::trace_norm_hermitian(&(&sqrt * (gamma - rank_one(psi_site)) * &sqrt))
}

/// `Tr|γ − |ψ⟩⟨ψ||`.
pub fn trace_distance(gamma: &DMatrix<C64>, psi_site: &[C64]) -> f64 {
    dense::trace_norm_hermitian(&(gamma - rank_one(psi_site)))
}

/// `N^{-1} ⟨W(−√N f)Ψ, 𝒩_a W(−√N f)Ψ⟩` for phonon Fock amplitudes `f`.
pub fn functional_b(state: &ManyBodyState, phonon_amplitudes: &[C64]) -> Result<f64> {
    let basis = &state.basis;
    let n = basis.particle_count() as f64;
    let shift: Vec<C64> = phonon_amplitudes.iter().map(|f| -f * n.sqrt()).collect();
    let w = WeylOperator::new(&basis.phonons, &shift)?;
    let displaced = w.apply_blocks(&state.coeffs)?;
    let number = number_operator(&basis.phonons, None)?;
    let da = basis.phonon_dim();
    let total: f64 = displaced.chunks(da).map(|block| number.expectation(block).re).sum();
    Ok(total / n)
}

/// `‖Ψ₁ − Ψ₂‖`.
pub fn norm_distance(a: &ManyBodyState, b: &ManyBodyState) -> Result<f64> {
    if a.basis != b.basis {
        return Err(Error::BasisMismatch("states live on different many-body bases".into()));
    }
    Ok(distance(&a.coeffs, &b.coeffs))
}

/// Largest `|⟨v, Hv⟩ − conj⟨v, Hv⟩|`-type defect over random probes; zero for Hermitian `H`.
pub fn hermiticity_probe(h: &dyn LinearOperator, probes: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let v: Vec<C64> = (0..h.dim()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let e = h.expectation(&v);
        worst = worst.max(e.im.abs() / (1.0 + e.re.abs()));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::dense::eigenvalues_hermitian;

    fn params(n_sites: usize, particles: usize, alpha: f64, uv: Option<f64>, n_max: usize) -> FroehlichParams {
        FroehlichParams::new(Lattice::new(1, 1.0, n_sites, uv).unwrap(), particles, alpha, n_max).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn decoupled_eigenstates() {
        let p = params(4, 2, 0.0, Some(1.0), 2);
        let (basis, h) = assemble_froehlich(&p).unwrap();
        let grid = &p.lattice.grid;
        let r = grid.plane_wave_matrix();
        let lap = grid.laplacian_spectrum();
        // both particles in plane wave 1, phonon occupation (1, 0)
        let pw: Vec<C64> = (0..4).map(|x| r[(1, x)].conj()).collect();
        let mut phon = vec![c(0.0, 0.0); basis.phonon_dim()];
        phon[basis.phonons.index_of(&[1, 0]).unwrap()] = c(1.0, 0.0);
        let st = ManyBodyState::product_with_phonons(basis.clone(), &pw, &phon).unwrap();
        let hv = h.matvec(&st.coeffs);
        let e = 2.0 * lap[1] + 1.0;
        for (a, b) in hv.iter().zip(&st.coeffs) {
            assert!((a - b * e).norm() < 1e-10);
        }
    }

    #[test]
    fn small_instance_matches_dense_oracle() {
        // N = 1, 2 sites, 1 mode (the Nyquist momentum), n_max = 1
        let p = params(2, 1, 0.7, None, 1);
        let (basis, h) = assemble_froehlich(&p).unwrap();
        assert_eq!(basis.dim(), 4);
        let k = p.lattice.modes.get(0).k[0];
        assert_eq!(k, -1.0);
        let g = p.lattice.modes.coupling(0);
        let sa = 0.7f64.sqrt();
        // one-body Laplacian on 2 sites: eigenvalues 0 and (2π)² with vectors (1,1)/√2, (1,-1)/√2
        let lam = 4.0 * PI * PI;
        let t = [[lam / 2.0, -lam / 2.0], [-lam / 2.0, lam / 2.0]];
        let e = [1.0, -1.0]; // e^{2πi k x} at x = 0, 1/2
        // lexicographic order puts the particle on site 1 first
        let px = |x: usize| 1 - x;
        let mut oracle = DMatrix::<C64>::zeros(4, 4);
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    oracle[(px(x) * 2 + a, px(y) * 2 + a)] += c(t[x][y], 0.0);
                }
            }
            let i = px(x) * 2;
            oracle[(i + 1, i + 1)] += c(1.0, 0.0);
            // a_m |1⟩ = |0⟩ with factor √α g e^{2πikx}
            oracle[(i, i + 1)] += c(sa * g * e[x], 0.0);
            oracle[(i + 1, i)] += c(sa * g * e[x], 0.0);
        }
        let dense = h.to_dense();
        for i in 0..4 {
            for j in 0..4 {
                assert!((dense[(i, j)] - oracle[(i, j)]).norm() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let p = params(4, 3, 1.3, None, 3);
        let (_, h) = assemble_froehlich(&p).unwrap();
        assert!(h.hermiticity_defect(Some(500), 3) < 1e-12);
        assert!(hermiticity_probe(&h, 5, 1) < 1e-12);
    }

    #[test]
    fn dimension_guard() {
        let mut p = params(8, 4, 1.0, None, 4);
        p.nnz_limit = 1000;
        assert!(matches!(assemble_froehlich(&p), Err(Error::DimensionOverflow { .. })));
    }

    #[test]
    fn product_state_density() {
        let p = params(4, 3, 1.0, Some(1.0), 3);
        let (basis, _) = assemble_froehlich(&p).unwrap();
        let psi: Vec<C64> = [c(0.5, 0.1), c(0.3, -0.4), c(-0.2, 0.3), c(0.4, 0.2)].to_vec();
        let n = crate::fock::norm(&psi);
        let psi: Vec<C64> = psi.iter().map(|z| z / n).collect();
        let st = ManyBodyState::product(basis, &psi, &[c(0.1, 0.0), c(0.0, -0.1)]).unwrap();
        assert!((st.norm() - 1.0).abs() < 1e-12);
        let gamma = reduced_density_particle(&st).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((gamma[(i, j)] - psi[i] * psi[j].conj()).norm() < 1e-12);
            }
        }
        assert!(functional_a(&p.lattice.grid, &gamma, &psi) < 1e-12);
        assert!(sobolev_trace_distance(&p.lattice.grid, &gamma, &psi) < 1e-11);
    }

    #[test]
    fn two_particle_density_matches_tensor_oracle() {
        let p = params(4, 2, 1.0, Some(1.0), 1);
        let basis = Arc::new(ManyBodyBasis::new(4, 2, p.lattice.modes.len(), 1));
        let st = ManyBodyState::random(basis.clone(), 17);
        let da = basis.phonon_dim();
        // first-quantized symmetric wave function Ψ(x1, x2, a)
        let mut full = vec![vec![vec![c(0.0, 0.0); da]; 4]; 4];
        for pi in 0..basis.particles.dim() {
            let occ = basis.particles.state(pi);
            let mut xs = Vec::new();
            for (x, &n) in occ.iter().enumerate() {
                for _ in 0..n {
                    xs.push(x);
                }
            }
            let norm = if xs[0] == xs[1] { 1.0 } else { 1.0 / 2f64.sqrt() };
            for a in 0..da {
                let v = st.coeffs[basis.index(pi, a)] * norm;
                full[xs[0]][xs[1]][a] = v;
                full[xs[1]][xs[0]][a] = v;
            }
        }
        let gamma = reduced_density_particle(&st).unwrap();
        for x in 0..4 {
            for y in 0..4 {
                let mut acc = c(0.0, 0.0);
                for z in 0..4 {
                    for a in 0..da {
                        acc += full[x][z][a] * full[y][z][a].conj();
                    }
                }
                assert!((gamma[(x, y)] - acc).norm() < 1e-12);
            }
        }
        let trace: C64 = (0..4).map(|i| gamma[(i, i)]).sum();
        assert!((trace - c(1.0, 0.0)).norm() < 1e-12);
        assert!(eigenvalues_hermitian(&gamma)[0] > -1e-12);
    }

    #[test]
    fn functional_a_matches_singular_values() {
        let p = params(4, 2, 1.0, Some(1.0), 1);
        let basis = Arc::new(ManyBodyBasis::new(4, 2, p.lattice.modes.len(), 1));
        let st = ManyBodyState::random(basis, 5);
        let gamma = reduced_density_particle(&st).unwrap();
        let psi = vec![c(0.5, 0.0); 4];
        let sqrt = p.lattice.grid.spectral_multiplier(|l| (1.0 + l).sqrt());
        let q = projector_complement(&psi);
        let m = &sqrt * &q * &gamma * &q * &sqrt;
        let svd: f64 = m.svd(false, false).singular_values.iter().sum();
        assert!((functional_a(&p.lattice.grid, &gamma, &psi) - svd).abs() < 1e-10 * (1.0 + svd));
        assert!(functional_a(&p.lattice.grid, &gamma, &psi) >= 0.0);
    }

    #[test]
    fn sobolev_distance_of_orthogonal_pair() {
        let grid = TorusGrid::new(1, 1.0, 2).unwrap();
        let psi = [c(1.0 / 2f64.sqrt(), 0.0), c(1.0 / 2f64.sqrt(), 0.0)];
        let other = [c(1.0 / 2f64.sqrt(), 0.0), c(-1.0 / 2f64.sqrt(), 0.0)];
        let gamma = rank_one(&other);
        let lam = 4.0 * PI * PI;
        // ‖√(1−Δ)ψ‖² + ‖√(1−Δ)ψ'‖² for the constant and the alternating vector
        let expected = 1.0 + (1.0 + lam);
        assert!((sobolev_trace_distance(&grid, &gamma, &psi) - expected).abs() < 1e-10);
        assert!(sobolev_trace_distance(&grid, &rank_one(&psi), &psi) < 1e-12);
    }

    #[test]
    fn functional_b_examples() {
        let p = params(4, 2, 1.0, Some(1.0), 12);
        let basis = Arc::new(ManyBodyBasis::new(4, 2, p.lattice.modes.len(), 12));
        let psi = vec![c(0.5, 0.0); 4];
        let f = [c(0.2, 0.1), c(-0.1, 0.05)];
        let scaled: Vec<C64> = f.iter().map(|z| z * 2f64.sqrt()).collect();
        let st = ManyBodyState::product(basis.clone(), &psi, &scaled).unwrap();
        assert!(functional_b(&st, &f).unwrap() < 1e-12);
        // φ = 0: N^{-1}⟨𝒩_a⟩ directly
        let b0 = functional_b(&st, &[c(0.0, 0.0); 2]).unwrap();
        let mean: f64 = scaled.iter().map(|z| z.norm_sqr()).sum();
        assert!((b0 - mean / 2.0).abs() < 1e-10);
        // displaced single-mode number state |1⟩
        let w = WeylOperator::new(&basis.phonons, &scaled).unwrap();
        let mut one = vec![c(0.0, 0.0); basis.phonon_dim()];
        one[basis.phonons.index_of(&[1, 0]).unwrap()] = c(1.0, 0.0);
        let displaced = w.apply(&one).unwrap();
        let st1 = ManyBodyState::product_with_phonons(basis, &psi, &displaced).unwrap();
        assert!((functional_b(&st1, &f).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn decoupled_eigenstate_evolves_by_phase() {
        let p = params(4, 2, 0.0, Some(1.0), 2);
        let (basis, h) = assemble_froehlich(&p).unwrap();
        let r = p.lattice.grid.plane_wave_matrix();
        let pw: Vec<C64> = (0..4).map(|x| r[(3, x)].conj()).collect();
        let mut phon = vec![c(0.0, 0.0); basis.phonon_dim()];
        phon[0] = c(1.0, 0.0);
        let st = ManyBodyState::product_with_phonons(basis, &pw, &phon).unwrap();
        let out = evolve_exact(&h, &st, 1.0, 0.25, 1e-12, |_, _| Ok(())).unwrap();
        assert!((out.inner(&st).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exact_flow_conserves_norm_and_energy() {
        let p = params(4, 2, 1.0, Some(1.0), 4);
        let (basis, h) = assemble_froehlich(&p).unwrap();
        let st = ManyBodyState::random(basis, 2);
        let samples = exact_conservation(&h, &st, 2.0, 0.1, 1e-12).unwrap();
        let e0 = samples[0].energy;
        for s in &samples {
            assert!((s.norm - 1.0).abs() < 1e-10);
            assert!((s.energy - e0).abs() < 1e-8 * h.norm_bound());
        }
    }
}
