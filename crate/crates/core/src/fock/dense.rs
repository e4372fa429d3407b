//! Small dense Hermitian helpers built on nalgebra's eigensolver.

use nalgebra::DMatrix;

use crate::C64;

/// `e^{-i A t}` for a Hermitian matrix `A`.
pub fn hermitian_expm(a: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let eig = a.clone().symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, -l * t)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// `f(A)` for a Hermitian matrix and a real function of its spectrum.
pub fn hermitian_apply(a: &DMatrix<C64>, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
    let eig = a.clone().symmetric_eigen();
    let vals = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(f(l), 0.0)));
    &eig.eigenvectors * vals * eig.eigenvectors.adjoint()
}

/// Trace norm `Tr|A|` of a Hermitian matrix.
pub fn trace_norm_hermitian(a: &DMatrix<C64>) -> f64 {
    let sym = (a + a.adjoint()) * C64::new(0.5, 0.0);
    sym.symmetric_eigen().eigenvalues.iter().map(|l| l.abs()).sum()
}

pub fn eigenvalues_hermitian(a: &DMatrix<C64>) -> Vec<f64> {
    let mut v: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(-2.0, 0.0)]));
        let u = hermitian_expm(&a, 0.3);
        assert!((u[(0, 0)] - C64::from_polar(1.0, -0.3)).norm() < 1e-14);
        assert!((u[(1, 1)] - C64::from_polar(1.0, 0.6)).norm() < 1e-14);
    }

    #[test]
    fn trace_norm_counts_negative_eigenvalues() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(1.5, 0.0), C64::new(-2.0, 0.0)]));
        assert!((trace_norm_hermitian(&a) - 3.5).abs() < 1e-14);
    }
}
