use std::sync::Arc;

use super::basis::OccupationBasis;
use super::krylov::{propagate, KrylovOptions};
use super::sparse::{BlockDiagonal, LinearOperator, SparseOperator};
use crate::{Error, Result, C64};

/// Coherent weight beyond the cutoff above which a warning is logged.
pub const TAIL_WARNING: f64 = 1e-8;

/// Coefficients over an [`OccupationBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    pub basis: Arc<OccupationBasis>,
    pub coeffs: Vec<C64>,
}

impl FockVector {
    pub fn new(basis: Arc<OccupationBasis>, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != basis.dim() {
            return Err(Error::SizeMismatch { expected: basis.dim(), got: coeffs.len() });
        }
        Ok(FockVector { basis, coeffs })
    }

    pub fn zeros(basis: Arc<OccupationBasis>) -> Self {
        let coeffs = vec![C64::new(0.0, 0.0); basis.dim()];
        FockVector { basis, coeffs }
    }

    pub fn vacuum(basis: Arc<OccupationBasis>) -> Self {
        let mut v = Self::zeros(basis);
        v.coeffs[0] = C64::new(1.0, 0.0);
        v
    }

    /// Normalized occupation-number state; `None` if outside the basis.
    pub fn number_state(basis: Arc<OccupationBasis>, occ: &[u16]) -> Option<Self> {
        let i = basis.index_of(occ)?;
        let mut v = Self::zeros(basis);
        v.coeffs[i] = C64::new(1.0, 0.0);
        Some(v)
    }

    pub fn norm(&self) -> f64 {
        super::sparse::norm(&self.coeffs)
    }

    pub fn inner(&self, other: &FockVector) -> C64 {
        super::sparse::dot(&self.coeffs, &other.coeffs)
    }

    /// Norm of the components with total occupation equal to the cutoff.
    pub fn top_sector_norm(&self) -> f64 {
        let top = self.basis.cutoff();
        (0..self.basis.dim())
            .filter(|&i| self.basis.total(i) == top)
            .map(|i| self.coeffs[i].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Matrix of `a_m` (or `a*_m` when `create`) on the truncated basis.
///
/// Creation out of the top sector is dropped.
pub fn ladder_operator(basis: &OccupationBasis, mode: usize, create: bool) -> Result<SparseOperator> {
    if mode >= basis.mode_count() {
        return Err(Error::InvalidArgument(format!("mode {mode} out of range 0..{}", basis.mode_count())));
    }
    let mut trip = Vec::new();
    let mut occ = vec![0u16; basis.mode_count()];
    for i in 0..basis.dim() {
        occ.copy_from_slice(basis.state(i));
        let n = occ[mode];
        if create {
            occ[mode] = n + 1;
            if let Some(j) = basis.index_of(&occ) {
                trip.push((j, i, C64::new(((n + 1) as f64).sqrt(), 0.0)));
            }
        } else if n > 0 {
            occ[mode] = n - 1;
            if let Some(j) = basis.index_of(&occ) {
                trip.push((j, i, C64::new((n as f64).sqrt(), 0.0)));
            }
        }
    }
    Ok(SparseOperator::from_triplets(basis.dim(), trip, false))
}

fn apply_ladder(mode: usize, v: &FockVector, create: bool) -> Result<FockVector> {
    let op = ladder_operator(&v.basis, mode, create)?;
    Ok(FockVector { basis: v.basis.clone(), coeffs: op.matvec(&v.coeffs) })
}

pub fn apply_annihilate(mode: usize, v: &FockVector) -> Result<FockVector> {
    apply_ladder(mode, v, false)
}

pub fn apply_create(mode: usize, v: &FockVector) -> Result<FockVector> {
    apply_ladder(mode, v, true)
}

/// Diagonal `Σ_m w_m n_m`, unit weights by default.
pub fn number_operator(basis: &OccupationBasis, weights: Option<&[f64]>) -> Result<SparseOperator> {
    if let Some(w) = weights {
        if w.len() != basis.mode_count() {
            return Err(Error::SizeMismatch { expected: basis.mode_count(), got: w.len() });
        }
    }
    let diag: Vec<f64> = basis
        .iter()
        .map(|occ| match weights {
            Some(w) => occ.iter().zip(w).map(|(&n, &wm)| n as f64 * wm).sum(),
            None => occ.iter().map(|&n| n as f64).sum(),
        })
        .collect();
    Ok(SparseOperator::diagonal(&diag))
}

/// Hermitian `H = i(a*(f) − a(f))`, so that `W(f) = e^{−iH}`.
pub fn displacement_generator(basis: &OccupationBasis, f: &[C64]) -> Result<SparseOperator> {
    if f.len() != basis.mode_count() {
        return Err(Error::SizeMismatch { expected: basis.mode_count(), got: f.len() });
    }
    let i = C64::new(0.0, 1.0);
    let mut trip = Vec::new();
    let mut occ = vec![0u16; basis.mode_count()];
    for col in 0..basis.dim() {
        for (m, &fm) in f.iter().enumerate() {
            if fm == C64::new(0.0, 0.0) {
                continue;
            }
            occ.copy_from_slice(basis.state(col));
            let n = occ[m];
            occ[m] = n + 1;
            if let Some(row) = basis.index_of(&occ) {
                let amp = ((n + 1) as f64).sqrt();
                // i f_m a*_m and its adjoint -i conj(f_m) a_m
                trip.push((row, col, i * fm * amp));
                trip.push((col, row, -i * fm.conj() * amp));
            }
        }
    }
    Ok(SparseOperator::from_triplets(basis.dim(), trip, true))
}

/// Probability that a coherent state with amplitudes `f` has more than `n_max` quanta.
pub fn coherent_tail(f: &[C64], n_max: usize) -> f64 {
    let mean: f64 = f.iter().map(|c| c.norm_sqr()).sum();
    if mean == 0.0 {
        return 0.0;
    }
    let mut term = (-mean).exp();
    for n in 1..=n_max {
        term *= mean / n as f64;
    }
    // summing the upper tail directly avoids cancellation when it is tiny
    let mut upper = 0.0;
    let mut t = term;
    let mut n = n_max;
    loop {
        n += 1;
        t *= mean / n as f64;
        upper += t;
        if t < 1e-300 || (n > n_max + 10 && t < upper * 1e-17) {
            break;
        }
    }
    upper
}

/// Truncated Weyl operator `W(f)`, realized as the exact exponential of the
/// truncated generator and therefore unitary on the truncated space.
#[derive(Clone, Debug)]
pub struct WeylOperator {
    generator: SparseOperator,
    tail: f64,
    options: KrylovOptions,
}

impl WeylOperator {
    pub fn new(basis: &OccupationBasis, f: &[C64]) -> Result<Self> {
        let generator = displacement_generator(basis, f)?;
        let tail = coherent_tail(f, basis.cutoff());
        if tail > TAIL_WARNING {
            log::warn!(
                "coherent weight {tail:.3e} beyond phonon cutoff {} exceeds {TAIL_WARNING:e}",
                basis.cutoff()
            );
        }
        Ok(WeylOperator { generator, tail, options: KrylovOptions::with_tol(1e-14) })
    }

    /// Poisson mass of the displacement beyond the cutoff.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        propagate(&self.generator, v, 1.0, &self.options)
    }

    /// Applies `1 ⊗ W` to a vector made of contiguous phonon blocks.
    pub fn apply_blocks(&self, v: &[C64]) -> Result<Vec<C64>> {
        let d = self.dim();
        if d == 0 || v.len() % d != 0 {
            return Err(Error::SizeMismatch { expected: d, got: v.len() });
        }
        let op = BlockDiagonal { inner: &self.generator, blocks: v.len() / d };
        propagate(&op, v, 1.0, &self.options)
    }
}

/// `W(f) v` on the truncated space.
pub fn weyl_displace(f: &[C64], v: &FockVector) -> Result<FockVector> {
    let w = WeylOperator::new(&v.basis, f)?;
    Ok(FockVector { basis: v.basis.clone(), coeffs: w.apply(&v.coeffs)? })
}

/// `W(f) Ω`.
pub fn coherent_state(basis: Arc<OccupationBasis>, f: &[C64]) -> Result<FockVector> {
    weyl_displace(f, &FockVector::vacuum(basis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::sparse::distance;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn annihilate_vacuum_is_zero() {
        let b = Arc::new(OccupationBasis::at_most(2, 3));
        let out = apply_annihilate(1, &FockVector::vacuum(b)).unwrap();
        assert_eq!(out.norm(), 0.0);
    }

    #[test]
    fn number_expectation_on_number_state() {
        let b = Arc::new(OccupationBasis::at_most(2, 3));
        let v = FockVector::number_state(b.clone(), &[0, 2]).unwrap();
        let av = apply_annihilate(1, &v).unwrap();
        let n = v.inner(&apply_create(1, &av).unwrap());
        assert!((n - c(2.0, 0.0)).norm() < 1e-15);
        let num = number_operator(&b, None).unwrap();
        let occ12 = FockVector::number_state(b.clone(), &[1, 2]).unwrap();
        assert!((num.expectation(&occ12.coeffs) - c(3.0, 0.0)).norm() < 1e-15);
        assert_eq!(num.expectation(&FockVector::vacuum(b.clone()).coeffs), c(0.0, 0.0));
        let weighted = number_operator(&b, Some(&[2.0, 0.5])).unwrap();
        assert!((weighted.expectation(&occ12.coeffs) - c(3.0, 0.0)).norm() < 1e-15);
        assert!(matches!(number_operator(&b, Some(&[1.0])), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn commutator_below_top_sector() {
        let b = Arc::new(OccupationBasis::at_most(3, 4));
        let coeffs: Vec<C64> = (0..b.dim())
            .map(|i| if b.total(i) < 4 { c((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()) } else { c(0.0, 0.0) })
            .collect();
        let v = FockVector::new(b.clone(), coeffs).unwrap();
        for m in 0..3 {
            let ac = apply_annihilate(m, &apply_create(m, &v).unwrap()).unwrap();
            let ca = apply_create(m, &apply_annihilate(m, &v).unwrap()).unwrap();
            let diff: Vec<C64> = (0..b.dim()).map(|i| ac.coeffs[i] - ca.coeffs[i] - v.coeffs[i]).collect();
            assert!(super::super::sparse::norm(&diff) < 1e-14);
        }
    }

    #[test]
    fn zero_displacement_is_identity() {
        let b = Arc::new(OccupationBasis::at_most(2, 4));
        let v = FockVector::number_state(b, &[1, 1]).unwrap();
        assert!(distance(&weyl_displace(&[c(0.0, 0.0); 2], &v).unwrap().coeffs, &v.coeffs) < 1e-15);
    }

    #[test]
    fn single_mode_coherent_expansion() {
        let n_max = 30;
        let b = Arc::new(OccupationBasis::at_most(1, n_max));
        let alpha = c(0.8, -0.5);
        let st = coherent_state(b, &[alpha]).unwrap();
        for n in 0..=12 {
            let exact = (-alpha.norm_sqr() / 2.0).exp() * alpha.powu(n as u32) / factorial(n).sqrt();
            assert!((st.coeffs[n] - exact).norm() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn weyl_identities() {
        let b = Arc::new(OccupationBasis::at_most(2, 24));
        let f = [c(0.6, 0.2), c(-0.3, 0.5)];
        let g = [c(-0.1, 0.4), c(0.2, 0.1)];
        assert!(coherent_tail(&f, 24) < 1e-14);
        let vac = FockVector::vacuum(b.clone());
        let coh = coherent_state(b.clone(), &f).unwrap();
        let mean: f64 = f.iter().map(|x| x.norm_sqr()).sum();
        let num = number_operator(&b, None).unwrap();
        assert!((num.expectation(&coh.coeffs).re - mean).abs() < 1e-10);

        let minus: Vec<C64> = f.iter().map(|x| -x).collect();
        let back = weyl_displace(&minus, &coh).unwrap();
        assert!(distance(&back.coeffs, &vac.coeffs) < 1e-12);

        for m in 0..2 {
            let a = apply_annihilate(m, &coh).unwrap();
            let shifted: Vec<C64> = a.coeffs.iter().zip(&coh.coeffs).map(|(x, y)| x - f[m] * y).collect();
            assert!(super::super::sparse::norm(&shifted) < 1e-10);
        }

        let fg = weyl_displace(&f, &weyl_displace(&g, &vac).unwrap()).unwrap();
        let sum: Vec<C64> = f.iter().zip(&g).map(|(x, y)| x + y).collect();
        let direct = weyl_displace(&sum, &vac).unwrap();
        let im: f64 = f.iter().zip(&g).map(|(x, y)| (x.conj() * y).im).sum();
        let phase = C64::from_polar(1.0, -im);
        let expected: Vec<C64> = direct.coeffs.iter().map(|x| x * phase).collect();
        assert!(distance(&fg.coeffs, &expected) < 1e-10);
    }

    #[test]
    fn tail_matches_poisson_complement() {
        let f = [c(1.0, 0.0)];
        let below: f64 = (0..=3).map(|n| (-1.0f64).exp() / factorial(n)).sum();
        assert!((coherent_tail(&f, 3) - (1.0 - below)).abs() < 1e-14);
        assert_eq!(coherent_tail(&[c(0.0, 0.0)], 2), 0.0);
    }

    #[test]
    fn block_application_matches_per_block() {
        let b = OccupationBasis::at_most(2, 5);
        let w = WeylOperator::new(&b, &[c(0.3, 0.1), c(0.0, -0.2)]).unwrap();
        let v: Vec<C64> = (0..3 * b.dim()).map(|i| c((i as f64).sin(), 0.1 * i as f64)).collect();
        let all = w.apply_blocks(&v).unwrap();
        for k in 0..3 {
            let part = w.apply(&v[k * b.dim()..(k + 1) * b.dim()]).unwrap();
            assert!(distance(&part, &all[k * b.dim()..(k + 1) * b.dim()]) < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn weyl_is_unitary(re in -0.7f64..0.7, im in -0.7f64..0.7, seed in 0u64..1000) {
            let b = Arc::new(OccupationBasis::at_most(2, 6));
            let coeffs: Vec<C64> = (0..b.dim()).map(|i| c(((i as u64 + seed) as f64).sin(), ((i as u64 * 3 + seed) as f64).cos())).collect();
            let v = FockVector::new(b, coeffs).unwrap();
            let out = weyl_displace(&[c(re, im), c(im, -re)], &v).unwrap();
            prop_assert!((out.norm() - v.norm()).abs() < 1e-11 * v.norm());
        }
    }
}
