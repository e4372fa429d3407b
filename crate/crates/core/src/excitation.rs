//! The excitation map `U_N` between many-body states and fluctuation vectors.
//!
//! A unitary frame `Q` of the one-particle space with `Q e_{p₀} = ψ` turns the
//! condensate into an ordinary occupation mode. In that frame the sector with
//! `k` excitations is the set of configurations with `N − k` particles in mode
//! `p₀`; removing them and rotating back to plane waves gives `χ^{(k)}`, which
//! is automatically orthogonal to `ψ` in every particle slot. The phonon factor
//! is first displaced by `W(−√N f)`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::bogoliubov::{orthogonality_defect_pw, plane_wave_coefficients, DoubleFockBasis, DoubleFockState};
use crate::fock::{OccupationBasis, WeylOperator};
use crate::froehlich_exact::{ManyBodyBasis, ManyBodyState};
use crate::lattice::{GridField, Lattice, ModeAmplitudes};
use crate::{Error, Result, C64};

pub use crate::froehlich_exact::norm_distance;

/// Fluctuation vectors live in the double Fock layout with `𝒩_b ≤ N`.
pub type ExcitationVector = DoubleFockState;

/// Default bound on the coherent weight lost to the phonon cutoff.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-6;

/// Default bound on the orthogonality defect accepted by [`build_psi_b`].
pub const DEFAULT_DEFECT_TOLERANCE: f64 = 1e-6;

/// Unitary `Q` with `Q e_{p₀} = ψ` built from one Householder reflection, and `p₀`.
pub fn condensate_frame(psi: &[C64]) -> Result<(DMatrix<C64>, usize)> {
    let s = psi.len();
    let nrm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (nrm - 1.0).abs() > 1e-8 {
        return Err(Error::Normalization { norm: nrm });
    }
    let p0 = (0..s).fold(0, |best, p| if psi[p].norm() > psi[best].norm() { p } else { best });
    let phase = C64::from_polar(1.0, psi[p0].arg());
    let mut w: Vec<C64> = psi.iter().map(|z| -z).collect();
    w[p0] += phase;
    let w2: f64 = w.iter().map(|z| z.norm_sqr()).sum();
    let mut q = DMatrix::<C64>::identity(s, s);
    if w2 > 1e-300 {
        let scale = 2.0 / w2;
        for r in 0..s {
            for c in 0..s {
                q[(r, c)] -= w[r] * w[c].conj() * scale;
            }
        }
    }
    for r in 0..s {
        q[(r, p0)] *= phase;
    }
    Ok((q, p0))
}

/// `Γ(V)` restricted to the `k`-particle sector: the action of a one-particle
/// map `V` on occupation states, `Γ(V) c*_j Γ(V)* = Σ_i V_ij c*_i`.
pub fn second_quantized_transform(v: &DMatrix<C64>, k: usize) -> DMatrix<C64> {
    let s = v.nrows();
    let levels: Vec<OccupationBasis> = (0..=k).map(|t| OccupationBasis::exactly(s, t)).collect();
    // creation tables: raise[t][u * s + i] = (index in level t + 1, amplitude)
    let raise: Vec<Vec<(usize, f64)>> = (0..k)
        .map(|t| {
            let mut table = Vec::with_capacity(levels[t].dim() * s);
            for occ in levels[t].iter() {
                let mut up = occ.to_vec();
                for i in 0..s {
                    up[i] += 1;
                    table.push((levels[t + 1].index_of(&up).expect("raised state exists"), (up[i] as f64).sqrt()));
                    up[i] -= 1;
                }
            }
            table
        })
        .collect();
    let top = &levels[k];
    let columns: Vec<Vec<C64>> = (0..top.dim())
        .into_par_iter()
        .map(|col| {
            let occ = top.state(col);
            let mut amp = vec![C64::new(1.0, 0.0)];
            let mut t = 0;
            let mut norm = 1.0;
            for (j, &n) in occ.iter().enumerate() {
                for r in 0..n {
                    norm *= (r + 1) as f64;
                    let mut next = vec![C64::new(0.0, 0.0); levels[t + 1].dim()];
                    for (u, a) in amp.iter().enumerate() {
                        if *a == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for i in 0..s {
                            let (target, f) = raise[t][u * s + i];
                            next[target] += a * v[(i, j)] * f;
                        }
                    }
                    amp = next;
                    t += 1;
                }
            }
            let inv = 1.0 / norm.sqrt();
            amp.iter().map(|a| a * inv).collect()
        })
        .collect();
    DMatrix::from_fn(top.dim(), top.dim(), |r, c| columns[c][r])
}

/// Everything needed to apply `U_N` and its inverse for one `(ψ, φ)`.
#[derive(Clone, Debug)]
pub struct ExcitationFrame {
    many_body: Arc<ManyBodyBasis>,
    target: Arc<DoubleFockBasis>,
    psi_pw: Vec<C64>,
    p0: usize,
    /// `Γ_N(Q† R)`: site occupations to frame occupations.
    to_frame: DMatrix<C64>,
    /// `Γ_k(Q)` for `k = 0..=N`: frame occupations to plane-wave occupations.
    sectors: Vec<DMatrix<C64>>,
    levels: Vec<OccupationBasis>,
    displace: WeylOperator,
    restore: WeylOperator,
}

impl ExcitationFrame {
    pub fn new(lattice: &Lattice, many_body: Arc<ManyBodyBasis>, psi: &GridField, phi: &ModeAmplitudes) -> Result<Self> {
        Self::with_tail_tolerance(lattice, many_body, psi, phi, DEFAULT_TAIL_TOLERANCE)
    }

    pub fn with_tail_tolerance(
        lattice: &Lattice,
        many_body: Arc<ManyBodyBasis>,
        psi: &GridField,
        phi: &ModeAmplitudes,
        tail_tolerance: f64,
    ) -> Result<Self> {
        let grid = &lattice.grid;
        let s = grid.site_count();
        if many_body.sites() != s {
            return Err(Error::SizeMismatch { expected: s, got: many_body.sites() });
        }
        if many_body.phonons.mode_count() != lattice.modes.len() {
            return Err(Error::SizeMismatch { expected: lattice.modes.len(), got: many_body.phonons.mode_count() });
        }
        let n = many_body.particle_count();
        let psi_pw = plane_wave_coefficients(grid, psi);
        let (q, p0) = condensate_frame(&psi_pw)?;
        let r = grid.plane_wave_matrix();
        let to_frame = second_quantized_transform(&(q.adjoint() * r), n);
        let sectors = (0..=n).map(|k| second_quantized_transform(&q, k)).collect();
        let levels = (0..=n).map(|k| OccupationBasis::exactly(s, k)).collect();

        let shift: Vec<C64> = lattice.modes.to_fock_amplitudes(phi).iter().map(|f| f * (n as f64).sqrt()).collect();
        let restore = WeylOperator::new(&many_body.phonons, &shift)?;
        if restore.tail() > tail_tolerance {
            return Err(Error::TruncationTail { tail: restore.tail(), tol: tail_tolerance });
        }
        let minus: Vec<C64> = shift.iter().map(|z| -z).collect();
        let displace = WeylOperator::new(&many_body.phonons, &minus)?;
        let n_max = many_body.phonons.cutoff();
        let target = Arc::new(DoubleFockBasis::rectangular(s, lattice.modes.len(), n, n_max));
        Ok(ExcitationFrame { many_body, target, psi_pw, p0, to_frame, sectors, levels, displace, restore })
    }

    /// Basis of the fluctuation vectors produced by [`Self::forward`].
    pub fn target_basis(&self) -> &Arc<DoubleFockBasis> {
        &self.target
    }

    pub fn many_body_basis(&self) -> &Arc<ManyBodyBasis> {
        &self.many_body
    }

    /// Plane-wave coefficients of the condensate.
    pub fn condensate(&self) -> &[C64] {
        &self.psi_pw
    }

    /// Coherent weight beyond the phonon cutoff.
    pub fn tail(&self) -> f64 {
        self.restore.tail()
    }

    fn particles(&self) -> usize {
        self.many_body.particle_count()
    }

    /// `χ = U_N Ψ`.
    pub fn forward(&self, state: &ManyBodyState) -> Result<ExcitationVector> {
        if *state.basis != *self.many_body {
            return Err(Error::BasisMismatch("state and frame use different many-body bases".into()));
        }
        let n = self.particles();
        let da = self.many_body.phonon_dim();
        let displaced = self.displace.apply_blocks(&state.coeffs)?;
        let c = DMatrix::from_row_slice(self.levels[n].dim(), da, &displaced);
        let framed = &self.to_frame * c;

        let mut out = DoubleFockState::zeros(self.target.clone());
        let mut split: Vec<DMatrix<C64>> = (0..=n).map(|k| DMatrix::zeros(self.levels[k].dim(), da)).collect();
        for (u, occ) in self.levels[n].iter().enumerate() {
            let k = n - occ[self.p0] as usize;
            let mut rest = occ.to_vec();
            rest[self.p0] = 0;
            let row = self.levels[k].index_of(&rest).expect("excitation configuration exists");
            split[k].row_mut(row).copy_from(&framed.row(u));
        }
        for k in 0..=n {
            let pw = &self.sectors[k] * &split[k];
            for (row, nb) in self.levels[k].iter().enumerate() {
                for a in 0..da {
                    let i = self.target.index_of(nb, self.many_body.phonons.state(a)).expect("target holds N_b <= N");
                    out.coeffs[i] = pw[(row, a)];
                }
            }
        }
        Ok(out)
    }

    /// `Ψ = W(√N f) Σ_k ψ^{⊗(N−k)} ⊗_s χ^{(k)}`, realized as `(c*(ψ))^{N−k}/√(N−k)! χ^{(k)}`.
    ///
    /// For `χ ⊥ ψ` this is the inverse of [`Self::forward`].
    pub fn inverse(&self, chi: &ExcitationVector) -> Result<ManyBodyState> {
        let n = self.particles();
        let s = self.many_body.sites();
        let b_modes = chi.basis.b_basis().mode_count();
        let a_modes = chi.basis.a_basis().mode_count();
        if b_modes != s || a_modes != self.many_body.phonons.mode_count() {
            return Err(Error::BasisMismatch("excitation vector has different mode counts".into()));
        }
        let above = chi.b_leakage(n);
        if above > 0.0 {
            return Err(Error::SectorSupport(format!("weight {above:e} in sectors above N = {n}")));
        }
        let da = self.many_body.phonon_dim();
        let mut split: Vec<DMatrix<C64>> = (0..=n).map(|k| DMatrix::zeros(self.levels[k].dim(), da)).collect();
        for (i, c) in chi.coeffs.iter().enumerate() {
            if *c == C64::new(0.0, 0.0) {
                continue;
            }
            let k = chi.basis.sector(i);
            let row = self.levels[k].index_of(chi.basis.b_state(i)).expect("sector configuration exists");
            let a = self.many_body.phonons.index_of(chi.basis.a_state(i)).ok_or_else(|| {
                Error::SectorSupport("phonon occupation beyond the many-body cutoff".into())
            })?;
            split[k][(row, a)] = *c;
        }

        let mut framed = DMatrix::<C64>::zeros(self.levels[n].dim(), da);
        for k in 0..=n {
            let in_frame = self.sectors[k].adjoint() * &split[k];
            let fill = n - k;
            for (row, occ) in self.levels[k].iter().enumerate() {
                let mut full = occ.to_vec();
                let m = full[self.p0] as usize;
                full[self.p0] += fill as u16;
                let u = self.levels[n].index_of(&full).expect("condensate filling exists");
                // (c*)^{fill}/√fill! |m⟩ = √((m+fill)!/(m! fill!)) |m+fill⟩
                let factor = binomial(m + fill, fill).sqrt();
                for a in 0..da {
                    framed[(u, a)] += in_frame[(row, a)] * factor;
                }
            }
        }
        let sites_coeffs = self.to_frame.adjoint() * framed;
        let mut flat = Vec::with_capacity(self.many_body.dim());
        for u in 0..sites_coeffs.nrows() {
            flat.extend(sites_coeffs.row(u).iter().copied());
        }
        let coeffs = self.restore.apply_blocks(&flat)?;
        ManyBodyState::new(self.many_body.clone(), coeffs)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `U_N Ψ` for `(ψ, φ)`.
pub fn excitation_map(lattice: &Lattice, state: &ManyBodyState, psi: &GridField, phi: &ModeAmplitudes) -> Result<ExcitationVector> {
    ExcitationFrame::new(lattice, state.basis.clone(), psi, phi)?.forward(state)
}

/// `U_N^* χ` on `many_body`.
pub fn inverse_excitation(
    lattice: &Lattice,
    chi: &ExcitationVector,
    psi: &GridField,
    phi: &ModeAmplitudes,
    many_body: Arc<ManyBodyBasis>,
) -> Result<ManyBodyState> {
    ExcitationFrame::new(lattice, many_body, psi, phi)?.inverse(chi)
}

/// Bogoliubov-corrected many-body state and what was dropped to build it.
#[derive(Clone, Debug)]
pub struct CorrectedState {
    pub state: ManyBodyState,
    pub norm: f64,
    /// `‖1_{𝒩_b>N} χ_B‖`.
    pub sector_tail: f64,
    /// Weight of `χ_B` on phonon occupations the many-body basis cannot hold.
    pub phonon_tail: f64,
    pub defect: f64,
}

/// `Ψ^B = W(√N f) Σ_{k≤N} ψ^{⊗(N−k)} ⊗_s χ_B^{(k)}`, not renormalized.
pub fn build_psi_b(frame: &ExcitationFrame, chi: &DoubleFockState, defect_tolerance: f64) -> Result<CorrectedState> {
    let defect = orthogonality_defect_pw(chi, frame.condensate())?;
    if defect > defect_tolerance {
        return Err(Error::OrthogonalityDefect { defect, tol: defect_tolerance });
    }
    let n = frame.particles();
    let phonons = &frame.many_body_basis().phonons;
    let mut kept = DoubleFockState::zeros(frame.target_basis().clone());
    let mut sector_tail = 0.0;
    let mut phonon_tail = 0.0;
    for (i, c) in chi.coeffs.iter().enumerate() {
        if chi.basis.sector(i) > n {
            sector_tail += c.norm_sqr();
            continue;
        }
        match phonons.index_of(chi.basis.a_state(i)) {
            Some(_) => {
                let j = kept.basis.index_of(chi.basis.b_state(i), chi.basis.a_state(i)).expect("target holds the state");
                kept.coeffs[j] = *c;
            }
            None => phonon_tail += c.norm_sqr(),
        }
    }
    let state = frame.inverse(&kept)?;
    Ok(CorrectedState {
        norm: state.norm(),
        state,
        sector_tail: sector_tail.sqrt(),
        phonon_tail: phonon_tail.sqrt(),
        defect,
    })
}
