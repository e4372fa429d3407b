use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fock::{dot, norm, OccupationBasis};
use crate::{Error, Result, C64};

/// Product basis of particle-excitation (`b`) and phonon (`a`) occupations with
/// separate cutoffs and a joint cutoff on `𝒩 = 𝒩_b + 𝒩_a`.
///
/// `b` modes are the plane waves of the grid in FFT order. Elements are grouped
/// in contiguous blocks sharing one `b` occupation.
#[derive(Debug)]
pub struct DoubleFockBasis {
    b: OccupationBasis,
    a: OccupationBasis,
    max_total: usize,
    offsets: Vec<usize>,
    /// `(b index, a index)` for every element.
    entries: Vec<(u32, u32)>,
}

impl PartialEq for DoubleFockBasis {
    fn eq(&self, other: &Self) -> bool {
        self.b == other.b && self.a == other.a && self.max_total == other.max_total
    }
}

impl DoubleFockBasis {
    pub fn new(b_modes: usize, a_modes: usize, max_b: usize, max_a: usize, max_total: usize) -> Self {
        let b = OccupationBasis::at_most(b_modes, max_b.min(max_total));
        let a = OccupationBasis::at_most(a_modes, max_a.min(max_total));
        let mut offsets = Vec::with_capacity(b.dim() + 1);
        let mut entries = Vec::new();
        offsets.push(0);
        for bi in 0..b.dim() {
            let budget = a.cutoff().min(max_total - b.total(bi));
            let count = a.count_at_most(budget);
            // lexicographic order of the a basis lists budget-restricted tuples in rank order
            let mut found = 0;
            for ai in 0..a.dim() {
                if a.total(ai) <= budget {
                    entries.push((bi as u32, ai as u32));
                    found += 1;
                }
            }
            debug_assert_eq!(found, count);
            offsets.push(offsets[bi] + count);
        }
        DoubleFockBasis { b, a, max_total, offsets, entries }
    }

    /// `𝒩_b ≤ max_b`, `𝒩_a ≤ max_a` without a joint constraint.
    pub fn rectangular(b_modes: usize, a_modes: usize, max_b: usize, max_a: usize) -> Self {
        Self::new(b_modes, a_modes, max_b, max_a, max_b + max_a)
    }

    /// All states with `𝒩 ≤ m`.
    pub fn total(b_modes: usize, a_modes: usize, m: usize) -> Self {
        Self::new(b_modes, a_modes, m, m, m)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn b_basis(&self) -> &OccupationBasis {
        &self.b
    }

    pub fn a_basis(&self) -> &OccupationBasis {
        &self.a
    }

    pub fn max_total(&self) -> usize {
        self.max_total
    }

    pub fn b_index(&self, i: usize) -> usize {
        self.entries[i].0 as usize
    }

    pub fn a_index(&self, i: usize) -> usize {
        self.entries[i].1 as usize
    }

    pub fn b_state(&self, i: usize) -> &[u16] {
        self.b.state(self.b_index(i))
    }

    pub fn a_state(&self, i: usize) -> &[u16] {
        self.a.state(self.a_index(i))
    }

    /// Particle-excitation number `𝒩_b` of element `i`.
    pub fn sector(&self, i: usize) -> usize {
        self.b.total(self.b_index(i))
    }

    pub fn total_number(&self, i: usize) -> usize {
        self.sector(i) + self.a.total(self.a_index(i))
    }

    /// Range of elements sharing the `b` occupation with index `bi`.
    pub fn block(&self, bi: usize) -> std::ops::Range<usize> {
        self.offsets[bi]..self.offsets[bi + 1]
    }

    pub fn index_of(&self, nb: &[u16], na: &[u16]) -> Option<usize> {
        let bi = self.b.index_of(nb)?;
        let nb_total: usize = nb.iter().map(|&n| n as usize).sum();
        let budget = self.a.cutoff().min(self.max_total - nb_total);
        let na_total: usize = na.iter().map(|&n| n as usize).sum();
        if na.len() != self.a.mode_count() || na_total > budget {
            return None;
        }
        Some(self.offsets[bi] + self.a.rank_at_most(na, budget))
    }

    /// Index of `(b index, a index)` pair, if admissible.
    pub fn index_of_pair(&self, bi: usize, ai: usize) -> Option<usize> {
        self.index_of(self.b.state(bi), self.a.state(ai))
    }
}

/// Coefficients over a [`DoubleFockBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct DoubleFockState {
    pub basis: Arc<DoubleFockBasis>,
    pub coeffs: Vec<C64>,
}

impl DoubleFockState {
    pub fn new(basis: Arc<DoubleFockBasis>, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != basis.dim() {
            return Err(Error::SizeMismatch { expected: basis.dim(), got: coeffs.len() });
        }
        Ok(DoubleFockState { basis, coeffs })
    }

    pub fn zeros(basis: Arc<DoubleFockBasis>) -> Self {
        let coeffs = vec![C64::new(0.0, 0.0); basis.dim()];
        DoubleFockState { basis, coeffs }
    }

    pub fn vacuum(basis: Arc<DoubleFockBasis>) -> Self {
        let mut s = Self::zeros(basis);
        s.coeffs[0] = C64::new(1.0, 0.0);
        s
    }

    /// Normalized state with uniformly random coefficient parts in `[-1, 1)`.
    pub fn random(basis: Arc<DoubleFockBasis>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Self::zeros(basis);
        for c in s.coeffs.iter_mut() {
            *c = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let n = s.norm();
        s.coeffs.iter_mut().for_each(|c| *c /= n);
        s
    }

    /// `b*(ξ) Ω ⊗ Ω_a` for plane-wave coefficients `ξ`.
    pub fn single_excitation(basis: Arc<DoubleFockBasis>, xi: &[C64]) -> Result<Self> {
        let modes = basis.b_basis().mode_count();
        if xi.len() != modes {
            return Err(Error::SizeMismatch { expected: modes, got: xi.len() });
        }
        let mut s = Self::zeros(basis.clone());
        let zero_a = vec![0u16; basis.a_basis().mode_count()];
        let mut nb = vec![0u16; modes];
        for (p, c) in xi.iter().enumerate() {
            nb[p] = 1;
            let i = basis
                .index_of(&nb, &zero_a)
                .ok_or_else(|| Error::SectorSupport("basis does not contain one-excitation states".into()))?;
            s.coeffs[i] = *c;
            nb[p] = 0;
        }
        Ok(s)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coeffs)
    }

    pub fn inner(&self, other: &DoubleFockState) -> C64 {
        dot(&self.coeffs, &other.coeffs)
    }

    /// `‖χ^{(k)}‖` for `k = 0..=max_b`.
    pub fn sector_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.basis.b_basis().cutoff() + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[self.basis.sector(i)] += c.norm_sqr();
        }
        out.iter().map(|x| x.sqrt()).collect()
    }

    /// `‖1_{𝒩 > m} χ‖`.
    pub fn leakage(&self, m: usize) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| self.basis.total_number(*i) > m)
            .map(|(_, c)| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `‖1_{𝒩_b > k} χ‖`.
    pub fn b_leakage(&self, k: usize) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| self.basis.sector(*i) > k)
            .map(|(_, c)| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `1_{𝒩 ≤ m} χ`.
    pub fn project_total(&self, m: usize) -> DoubleFockState {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| if self.basis.total_number(i) <= m { *c } else { C64::new(0.0, 0.0) })
            .collect();
        DoubleFockState { basis: self.basis.clone(), coeffs }
    }

    /// Re-expresses the state on another basis; components outside it must vanish.
    pub fn embed(&self, target: Arc<DoubleFockBasis>) -> Result<DoubleFockState> {
        if self.basis.b_basis().mode_count() != target.b_basis().mode_count()
            || self.basis.a_basis().mode_count() != target.a_basis().mode_count()
        {
            return Err(Error::BasisMismatch("different mode counts".into()));
        }
        let mut out = DoubleFockState::zeros(target.clone());
        for (i, c) in self.coeffs.iter().enumerate() {
            match target.index_of(self.basis.b_state(i), self.basis.a_state(i)) {
                Some(j) => out.coeffs[j] = *c,
                None if *c != C64::new(0.0, 0.0) => {
                    return Err(Error::SectorSupport(format!(
                        "component with N_b = {}, N = {} outside target basis",
                        self.basis.sector(i),
                        self.basis.total_number(i)
                    )))
                }
                None => {}
            }
        }
        Ok(out)
    }

    /// `⟨𝒩_a⟩`, `⟨𝒩_b⟩` and `⟨Σ_p w_p n_p⟩` for weights on the `b` modes.
    pub fn number_moments(&self, b_weights: &[f64]) -> (f64, f64, f64) {
        let mut na = 0.0;
        let mut nb = 0.0;
        let mut tb = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let w = c.norm_sqr();
            if w == 0.0 {
                continue;
            }
            na += w * self.basis.a_state(i).iter().map(|&n| n as f64).sum::<f64>();
            let b = self.basis.b_state(i);
            nb += w * b.iter().map(|&n| n as f64).sum::<f64>();
            tb += w * b.iter().zip(b_weights).map(|(&n, l)| n as f64 * l).sum::<f64>();
        }
        (na, nb, tb)
    }
}
