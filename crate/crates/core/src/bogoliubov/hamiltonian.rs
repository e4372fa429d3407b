use std::sync::Arc;

use rayon::prelude::*;

use super::kernels::FluctuationKernels;
use super::space::DoubleFockBasis;
use crate::fock::SparseOperator;
use crate::lattice::ModeSet;
use crate::{Error, Result, C64};

/// Default bound on stored operator contributions.
pub const DEFAULT_TERM_LIMIT: usize = 40_000_000;

/// Bytes per stored contribution (row, column and term).
const BYTES_PER_TERM: usize = 24;

/// Which fluctuation generator a template represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    /// `H^B(t)`: one-body part, `𝒩_a` and the pair term.
    Bogoliubov,
    /// `H(t)` for `N` particles: dressed pair term plus the cubic term.
    Full { particles: usize },
}

#[derive(Clone, Copy, Debug)]
struct Term {
    coef: u32,
    factor: f64,
    conj: bool,
}

/// Sparsity pattern of a fluctuation generator together with the recipe that
/// turns one-body kernels into matrix entries.
///
/// Each stored entry is `Σ factor · c` over coefficients `c` of the kernels
/// (conjugated for Hermitian-conjugate contributions), so refilling for a new
/// time only touches the value array.
#[derive(Clone, Debug)]
pub struct HamiltonianTemplate {
    basis: Arc<DoubleFockBasis>,
    generator: Generator,
    cutoff: Option<usize>,
    b_modes: usize,
    a_modes: usize,
    slot_ptr: Vec<usize>,
    terms: Vec<Term>,
    op: SparseOperator,
}

struct Layout {
    s: usize,
    modes: usize,
}

impl Layout {
    const ONE: usize = 0;

    fn h(&self, p: usize, q: usize) -> usize {
        1 + p * self.s + q
    }

    fn k(&self, m: usize, p: usize) -> usize {
        1 + self.s * self.s + m * self.s + p
    }

    fn cubic(&self, m: usize, p: usize, q: usize) -> usize {
        1 + self.s * self.s + self.modes * self.s + m * self.s * self.s + p * self.s + q
    }

    fn len(&self, cubic: bool) -> usize {
        1 + self.s * self.s + self.modes * self.s + if cubic { self.modes * self.s * self.s } else { 0 }
    }
}

impl HamiltonianTemplate {
    /// Builds the pattern on `basis`. With `cutoff = Some(M)` every contribution
    /// touching a state with `𝒩 > M` is dropped, which realizes
    /// `1_{𝒩≤M} H 1_{𝒩≤M}` on a basis that may be larger than the cutoff.
    pub fn new(basis: Arc<DoubleFockBasis>, modes: &ModeSet, generator: Generator, cutoff: Option<usize>) -> Result<Self> {
        Self::with_limit(basis, modes, generator, cutoff, DEFAULT_TERM_LIMIT)
    }

    pub fn with_limit(
        basis: Arc<DoubleFockBasis>,
        modes: &ModeSet,
        generator: Generator,
        cutoff: Option<usize>,
        limit: usize,
    ) -> Result<Self> {
        let s = basis.b_basis().mode_count();
        let na_modes = basis.a_basis().mode_count();
        if na_modes != modes.len() {
            return Err(Error::SizeMismatch { expected: modes.len(), got: na_modes });
        }
        if let Generator::Full { particles: 0 } = generator {
            return Err(Error::InvalidArgument("particle number must be at least 1".into()));
        }
        let full = matches!(generator, Generator::Full { .. });
        let per_state = s * s + 4 * na_modes * s + if full { 2 * na_modes * s * s } else { 0 } + 1;
        let estimate = per_state * basis.dim();
        if estimate > limit {
            return Err(Error::DimensionOverflow { nonzeros: estimate, bytes: estimate * BYTES_PER_TERM, limit });
        }

        let layout = Layout { s, modes: na_modes };
        let partners: Vec<usize> = modes.iter().map(|m| m.partner).collect();
        let keep = |i: usize| cutoff.map_or(true, |m| basis.total_number(i) <= m);
        let dressing = |nb: usize| match generator {
            Generator::Bogoliubov => 1.0,
            Generator::Full { particles } => (1.0 - nb as f64 / particles as f64).max(0.0).sqrt(),
        };
        let cubic_scale = match generator {
            Generator::Bogoliubov => 0.0,
            Generator::Full { particles } => 1.0 / (particles as f64).sqrt(),
        };

        let mut entries: Vec<(u32, u32, Term)> = (0..basis.dim())
            .into_par_iter()
            .filter(|&i| keep(i))
            .flat_map_iter(|i| {
                let mut out: Vec<(u32, u32, Term)> = Vec::new();
                let mut push = |row: usize, col: usize, coef: usize, factor: f64, conj: bool| {
                    out.push((row as u32, col as u32, Term { coef: coef as u32, factor, conj }));
                };
                let mut nb = basis.b_state(i).to_vec();
                let mut na = basis.a_state(i).to_vec();
                let nb_total: usize = nb.iter().map(|&n| n as usize).sum();
                let target = |nb: &[u16], na: &[u16]| basis.index_of(nb, na).filter(|&j| keep(j));

                let phonons: usize = na.iter().map(|&n| n as usize).sum();
                if phonons > 0 {
                    push(i, i, Layout::ONE, phonons as f64, false);
                }

                // Σ_pq h_pq b*_p b_q, and the cubic Σ_m C_m,pq b*_p b_q a_m with its adjoint
                for q in 0..s {
                    if nb[q] == 0 {
                        continue;
                    }
                    let nq = nb[q] as f64;
                    nb[q] -= 1;
                    for p in 0..s {
                        let factor = (nq * (nb[p] as f64 + 1.0)).sqrt();
                        nb[p] += 1;
                        if let Some(j) = target(&nb, &na) {
                            push(j, i, layout.h(p, q), factor, false);
                        }
                        if full {
                            for m in 0..na_modes {
                                if na[m] == 0 {
                                    continue;
                                }
                                let f = factor * (na[m] as f64).sqrt() * cubic_scale;
                                na[m] -= 1;
                                if let Some(j) = target(&nb, &na) {
                                    push(j, i, layout.cubic(m, p, q), f, false);
                                    push(i, j, layout.cubic(m, p, q), f, true);
                                }
                                na[m] += 1;
                            }
                        }
                        nb[p] -= 1;
                    }
                    nb[q] += 1;
                }

                // Σ_{m,p} K_mp (a*_m + a_{-m}) b*_p D(𝒩_b) with its adjoint
                let d = dressing(nb_total);
                if d > 0.0 {
                    for p in 0..s {
                        let bf = (nb[p] as f64 + 1.0).sqrt() * d;
                        nb[p] += 1;
                        for m in 0..na_modes {
                            let f = bf * (na[m] as f64 + 1.0).sqrt();
                            na[m] += 1;
                            if let Some(j) = target(&nb, &na) {
                                push(j, i, layout.k(m, p), f, false);
                                push(i, j, layout.k(m, p), f, true);
                            }
                            na[m] -= 1;
                            let partner = partners[m];
                            if na[partner] > 0 {
                                let f = bf * (na[partner] as f64).sqrt();
                                na[partner] -= 1;
                                if let Some(j) = target(&nb, &na) {
                                    push(j, i, layout.k(m, p), f, false);
                                    push(i, j, layout.k(m, p), f, true);
                                }
                                na[partner] += 1;
                            }
                        }
                        nb[p] -= 1;
                    }
                }
                out
            })
            .collect();

        entries.par_sort_by_key(|e| (e.0, e.1));
        let dim = basis.dim();
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::new();
        let mut slot_ptr = vec![0usize];
        let mut terms = Vec::with_capacity(entries.len());
        let mut last: Option<(u32, u32)> = None;
        for (r, c, t) in entries {
            if last != Some((r, c)) {
                if last.is_some() {
                    slot_ptr.push(terms.len());
                }
                cols.push(c as usize);
                row_ptr[r as usize + 1] += 1;
                last = Some((r, c));
            }
            terms.push(t);
        }
        if last.is_some() {
            slot_ptr.push(terms.len());
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let vals = vec![C64::new(0.0, 0.0); cols.len()];
        let op = SparseOperator::from_parts(dim, row_ptr, cols, vals, true);
        Ok(HamiltonianTemplate { basis, generator, cutoff, b_modes: s, a_modes: na_modes, slot_ptr, terms, op })
    }

    pub fn basis(&self) -> &Arc<DoubleFockBasis> {
        &self.basis
    }

    pub fn generator(&self) -> Generator {
        self.generator
    }

    pub fn cutoff(&self) -> Option<usize> {
        self.cutoff
    }

    /// Number of stored matrix entries.
    pub fn nnz(&self) -> usize {
        self.op.nnz()
    }

    fn coefficients(&self, k: &FluctuationKernels) -> Result<Vec<C64>> {
        let layout = Layout { s: self.b_modes, modes: self.a_modes };
        if k.h_pw.nrows() != layout.s || k.k_pw.nrows() != layout.modes {
            return Err(Error::SizeMismatch { expected: layout.s, got: k.h_pw.nrows() });
        }
        let full = matches!(self.generator, Generator::Full { .. });
        let mut c = vec![C64::new(0.0, 0.0); layout.len(full)];
        c[Layout::ONE] = C64::new(1.0, 0.0);
        for p in 0..layout.s {
            for q in 0..layout.s {
                c[layout.h(p, q)] = k.h_pw[(p, q)];
            }
        }
        for m in 0..layout.modes {
            for p in 0..layout.s {
                c[layout.k(m, p)] = k.k_pw[(m, p)];
            }
        }
        if full {
            for m in 0..layout.modes {
                for p in 0..layout.s {
                    for q in 0..layout.s {
                        c[layout.cubic(m, p, q)] = k.cubic_pw[m][(p, q)];
                    }
                }
            }
        }
        Ok(c)
    }

    /// Writes the entries for `kernels` into the stored operator.
    pub fn refill(&mut self, kernels: &FluctuationKernels) -> Result<&SparseOperator> {
        let c = self.coefficients(kernels)?;
        let slot_ptr = &self.slot_ptr;
        let terms = &self.terms;
        self.op.vals_mut().par_iter_mut().enumerate().with_min_len(4096).for_each(|(slot, v)| {
            let mut acc = C64::new(0.0, 0.0);
            for t in &terms[slot_ptr[slot]..slot_ptr[slot + 1]] {
                let z = c[t.coef as usize];
                acc += if t.conj { z.conj() } else { z } * t.factor;
            }
            *v = acc;
        });
        Ok(&self.op)
    }

    /// A fresh operator for `kernels`.
    pub fn assemble(&self, kernels: &FluctuationKernels) -> Result<SparseOperator> {
        let mut t = self.clone();
        t.refill(kernels)?;
        Ok(t.op)
    }

    pub fn operator(&self) -> &SparseOperator {
        &self.op
    }
}

/// `H^B(t)` on `basis`.
pub fn assemble_hb(kernels: &FluctuationKernels, modes: &ModeSet, basis: Arc<DoubleFockBasis>) -> Result<SparseOperator> {
    HamiltonianTemplate::new(basis, modes, Generator::Bogoliubov, None)?.assemble(kernels)
}

/// `H(t)` for `particles` bosons on `basis`.
pub fn assemble_h_full(
    kernels: &FluctuationKernels,
    modes: &ModeSet,
    basis: Arc<DoubleFockBasis>,
    particles: usize,
) -> Result<SparseOperator> {
    HamiltonianTemplate::new(basis, modes, Generator::Full { particles }, None)?.assemble(kernels)
}

/// `Σ_pq A_pq b*_p b_q` for a one-body matrix in the plane-wave basis.
pub fn second_quantize_b(basis: &DoubleFockBasis, a: &nalgebra::DMatrix<C64>) -> SparseOperator {
    let s = basis.b_basis().mode_count();
    let triplets: Vec<(usize, usize, C64)> = (0..basis.dim())
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut out = Vec::new();
            let mut nb = basis.b_state(i).to_vec();
            let na = basis.a_state(i);
            for q in 0..s {
                if nb[q] == 0 {
                    continue;
                }
                let nq = nb[q] as f64;
                nb[q] -= 1;
                for p in 0..s {
                    let z = a[(p, q)];
                    if z == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let factor = (nq * (nb[p] as f64 + 1.0)).sqrt();
                    nb[p] += 1;
                    if let Some(j) = basis.index_of(&nb, na) {
                        out.push((j, i, z * factor));
                    }
                    nb[p] -= 1;
                }
                nb[q] += 1;
            }
            out
        })
        .collect();
    SparseOperator::from_triplets(basis.dim(), triplets, false)
}
