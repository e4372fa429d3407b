use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::landau_pekar::{gauge_phase, phonon_potential};
use crate::lattice::{GridField, Lattice, ModeAmplitudes};
use crate::{Error, Result, C64};

/// Allowed deviation of `‖ψ‖` from one.
pub const NORMALIZATION_TOL: f64 = 1e-8;

/// One-body data entering the fluctuation Hamiltonian at one instant.
///
/// Site quantities act on `ℓ²`-normalized site amplitudes; the `_pw` fields are
/// the same objects in the plane-wave basis `R` of the `b` modes.
#[derive(Clone, Debug)]
pub struct FluctuationKernels {
    pub alpha: f64,
    pub psi_site: Vec<C64>,
    pub psi_pw: Vec<C64>,
    /// `q = 1 − |ψ⟩⟨ψ|` on sites.
    pub q_kernel: DMatrix<C64>,
    /// `K(m, x) = √α g_m (q e^{−2πik_m·} ψ)(x)`, one row per phonon mode.
    pub k_matrix: DMatrix<C64>,
    /// `h = −Δ + √α Φ_φ − μ` on sites.
    pub h_matrix: DMatrix<C64>,
    /// `ρ̂_m = ⟨ψ, e^{−2πik_m·} ψ⟩`.
    pub rho: Vec<C64>,
    pub mu: f64,
    pub h_pw: DMatrix<C64>,
    /// `K_pw(m, p)`: coefficient of `(a*_m + a_{−m}) b*_p`.
    pub k_pw: DMatrix<C64>,
    /// `√α g_m R (q E_m q − ⟨ψ, E_m ψ⟩) R†` with `E_m = diag(e^{2πik_m·x})`.
    pub cubic_pw: Vec<DMatrix<C64>>,
}

/// Lattice-dependent pieces reused across time steps.
#[derive(Clone, Debug)]
pub struct KernelContext {
    pub lattice: Lattice,
    pub alpha: f64,
    r: DMatrix<C64>,
    kinetic: DMatrix<C64>,
    /// `e^{2πik_m·x}` per mode and site.
    waves: Vec<Vec<C64>>,
}

impl KernelContext {
    pub fn new(lattice: &Lattice, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("coupling alpha must be >= 0, got {alpha}")));
        }
        let grid = &lattice.grid;
        let waves = lattice
            .modes
            .iter()
            .map(|m| {
                (0..grid.site_count())
                    .map(|x| {
                        let pos = grid.position(x);
                        C64::from_polar(1.0, (0..grid.dim()).map(|a| 2.0 * PI * m.k[a] * pos[a]).sum())
                    })
                    .collect()
            })
            .collect();
        Ok(KernelContext {
            lattice: lattice.clone(),
            alpha,
            r: grid.plane_wave_matrix(),
            kinetic: grid.spectral_multiplier(|l| l),
            waves,
        })
    }

    /// Plane-wave transform `R[p][x] = e^{−2πik_p·x}/√s`.
    pub fn plane_waves(&self) -> &DMatrix<C64> {
        &self.r
    }

    pub fn sites(&self) -> usize {
        self.r.nrows()
    }

    pub fn build(&self, psi: &GridField, phi: &ModeAmplitudes) -> Result<FluctuationKernels> {
        let grid = &self.lattice.grid;
        let modes = &self.lattice.modes;
        let s = grid.site_count();
        if psi.len() != s {
            return Err(Error::SizeMismatch { expected: s, got: psi.len() });
        }
        let norm = grid.l2_norm_sqr(psi).sqrt();
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Normalization { norm });
        }
        let sqrt_alpha = self.alpha.sqrt();
        let psi_site = grid.site_amplitudes(psi);
        let density = GridField(psi.0.iter().map(|z| C64::new(z.norm_sqr(), 0.0)).collect());
        let rho: Vec<C64> = modes.restrict(&grid.transform(&density)?).0;

        let psi_vec = DMatrix::from_column_slice(s, 1, &psi_site);
        let q_kernel = DMatrix::identity(s, s) - &psi_vec * psi_vec.adjoint();

        let mut k_matrix = DMatrix::zeros(modes.len(), s);
        for m in 0..modes.len() {
            let g = sqrt_alpha * modes.coupling(m);
            for x in 0..s {
                k_matrix[(m, x)] = (self.waves[m][x].conj() - rho[m]) * psi_site[x] * g;
            }
        }

        let pot = phonon_potential(grid, modes, phi)?;
        let mu = gauge_phase(grid, modes, psi, phi, self.alpha)?;
        let mut h_matrix = self.kinetic.clone();
        for x in 0..s {
            h_matrix[(x, x)] += C64::new(sqrt_alpha * pot[x] - mu, 0.0);
        }

        let r = &self.r;
        let rt = r.adjoint();
        let h_pw = r * &h_matrix * &rt;
        let k_pw = (r * k_matrix.transpose()).transpose();
        let psi_pw = (r * &psi_vec).column(0).iter().copied().collect();
        let cubic_pw = (0..modes.len())
            .map(|m| {
                let e = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.waves[m].clone()));
                let mut a = &q_kernel * e * &q_kernel;
                let shift = rho[m].conj();
                for x in 0..s {
                    a[(x, x)] -= shift;
                }
                (r * a * &rt) * C64::new(sqrt_alpha * modes.coupling(m), 0.0)
            })
            .collect();

        Ok(FluctuationKernels {
            alpha: self.alpha,
            psi_site,
            psi_pw,
            q_kernel,
            k_matrix,
            h_matrix,
            rho,
            mu,
            h_pw,
            k_pw,
            cubic_pw,
        })
    }
}

/// Kernels of the fluctuation Hamiltonian for `(ψ, φ)`.
pub fn build_kernels(lattice: &Lattice, psi: &GridField, phi: &ModeAmplitudes, alpha: f64) -> Result<FluctuationKernels> {
    KernelContext::new(lattice, alpha)?.build(psi, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landau_pekar::{PhiPreset, PsiPreset};

    fn lattice() -> Lattice {
        Lattice::new(1, 1.0, 8, Some(2.0)).unwrap()
    }

    fn sample(lat: &Lattice) -> (GridField, ModeAmplitudes) {
        let psi = PsiPreset::Gaussian { center: [0.4, 0.0, 0.0], width: 0.2, momentum: [1, 0, 0] }
            .build(&lat.grid)
            .unwrap();
        let phi = PhiPreset::Gaussian { amplitude: 0.3, width: 1.5 }.build(&lat.modes).unwrap();
        (psi, phi)
    }

    #[test]
    fn projector_and_kernel_orthogonality() {
        let lat = lattice();
        let (psi, phi) = sample(&lat);
        let k = build_kernels(&lat, &psi, &phi, 1.3).unwrap();
        let q = &k.q_kernel;
        assert!((q * q - q).norm() < 1e-12);
        assert!((q - q.adjoint()).norm() < 1e-14);
        let psi_vec = DMatrix::from_column_slice(psi.len(), 1, &k.psi_site);
        assert!((q * &psi_vec).norm() < 1e-12);
        for m in 0..lat.modes.len() {
            let overlap: C64 = k.psi_site.iter().zip(k.k_matrix.row(m).iter()).map(|(a, b)| a.conj() * b).sum();
            assert!(overlap.norm() < 1e-12);
        }
        // columnwise K = q (G ψ)
        for m in 0..lat.modes.len() {
            let g = 1.3f64.sqrt() * lat.modes.coupling(m);
            let raw: Vec<C64> = (0..psi.len())
                .map(|x| {
                    let arg = -2.0 * PI * lat.modes.get(m).k[0] * lat.grid.position(x)[0];
                    C64::from_polar(g, arg) * k.psi_site[x]
                })
                .collect();
            let projected = q * DMatrix::from_column_slice(psi.len(), 1, &raw);
            let diff: f64 = projected.iter().zip(k.k_matrix.row(m).iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
            assert!(diff.sqrt() < 1e-13);
        }
    }

    #[test]
    fn uniform_state_kernel_is_a_plane_wave() {
        let lat = lattice();
        let psi = PsiPreset::Uniform.build(&lat.grid).unwrap();
        let phi = ModeAmplitudes::zeros(lat.modes.len());
        let k = build_kernels(&lat, &psi, &phi, 1.0).unwrap();
        let s = lat.grid.site_count() as f64;
        for m in 0..lat.modes.len() {
            assert!(k.rho[m].norm() < 1e-14);
            // momentum conservation: only b*_{-m} is paired with a*_m
            let row = k.k_pw.row(m);
            let target = lat.grid.flat_index({
                let i = lat.modes.get(m).index;
                [-i[0], -i[1], -i[2]]
            });
            for p in 0..row.len() {
                let expected = if p == target { lat.modes.coupling(m) } else { 0.0 };
                assert!((row[p] - C64::new(expected, 0.0)).norm() < 1e-13, "mode {m} p {p}");
            }
            for x in 0..lat.grid.site_count() {
                let arg = -2.0 * PI * lat.modes.get(m).k[0] * lat.grid.position(x)[0];
                let expected = C64::from_polar(lat.modes.coupling(m) / s.sqrt(), arg);
                assert!((k.k_matrix[(m, x)] - expected).norm() < 1e-13);
            }
        }
        // uniform state with φ = 0: h is the bare Laplacian and μ = 0
        assert_eq!(k.mu, 0.0);
        assert!(k.h_pw[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn plane_wave_objects_are_consistent() {
        let lat = lattice();
        let (psi, phi) = sample(&lat);
        let k = build_kernels(&lat, &psi, &phi, 0.7).unwrap();
        assert!((&k.h_pw - k.h_pw.adjoint()).norm() < 1e-12);
        let norm: f64 = k.psi_pw.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        // cubic kernels annihilate ψ up to the scalar shift
        for (m, c) in k.cubic_pw.iter().enumerate() {
            let psi = DMatrix::from_column_slice(k.psi_pw.len(), 1, &k.psi_pw);
            let expected = -k.rho[m].conj() * C64::new(0.7f64.sqrt() * lat.modes.coupling(m), 0.0);
            assert!((c * &psi - &psi * expected).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_unnormalized_input() {
        let lat = lattice();
        let (mut psi, phi) = sample(&lat);
        psi.0[0] += C64::new(0.1, 0.0);
        assert!(matches!(build_kernels(&lat, &psi, &phi, 1.0), Err(Error::Normalization { .. })));
    }
}
