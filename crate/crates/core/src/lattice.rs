//! Periodic spatial grid, discrete phonon momenta and the spectral transform pair.
//!
//! Conventions: plane waves are `e^{2πi k·x}` with `k = m / L`, so `-Δ` acts on
//! them with eigenvalue `(2π|k|)²`. A continuum `∫dx` becomes `h^d Σ_x` and a
//! continuum `∫dk` becomes `L^{-d} Σ_m`. Delta-normalized phonon operators `a_k`
//! correspond to `L^{d/2} a_m` with Kronecker-normalized `a_m`, so the discrete
//! coupling is `g_m = L^{-d/2} |k_m|^{-1}` and a classical field amplitude
//! `φ(k_m)` becomes `L^{-d/2} φ(k_m)` in Fock space.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftDirection, FftPlanner};

use crate::{Error, Result, C64};

/// Complex field sampled on every grid site, row-major over dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField(pub Vec<C64>);

/// Complex amplitudes indexed by the modes of a [`ModeSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModeAmplitudes(pub Vec<C64>);

/// Coefficients of all `n^d` lattice momenta, in FFT ordering (zero mode first).
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum(pub Vec<C64>);

impl GridField {
    pub fn zeros(len: usize) -> Self {
        GridField(vec![C64::new(0.0, 0.0); len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl ModeAmplitudes {
    pub fn zeros(len: usize) -> Self {
        ModeAmplitudes(vec![C64::new(0.0, 0.0); len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Plain `ℓ²` norm of the amplitude vector (no momentum measure).
    pub fn l2_sum(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Sobolev / weighted-norm order, restricted to `0..=3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct NormOrder(u8);

impl NormOrder {
    pub fn new(m: u8) -> Result<Self> {
        if m > 3 {
            return Err(Error::UnsupportedNormOrder(m));
        }
        Ok(NormOrder(m))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for NormOrder {
    type Error = Error;

    fn try_from(m: u8) -> Result<Self> {
        NormOrder::new(m)
    }
}

/// Uniform periodic grid on the torus `[0, L)^d`.
#[derive(Clone)]
pub struct TorusGrid {
    dim: usize,
    length: f64,
    points: usize,
    spacing: f64,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("length", &self.length)
            .field("points", &self.points)
            .field("spacing", &self.spacing)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.length == other.length && self.points == other.points
    }
}

impl TorusGrid {
    pub fn new(dim: usize, length: f64, points: usize) -> Result<Self> {
        if dim != 1 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not supported (1 or 3)")));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("side length must be positive, got {length}")));
        }
        if points < 2 || points % 2 != 0 {
            return Err(Error::InvalidGrid(format!("points per dimension must be even and >= 2, got {points}")));
        }
        let mut planner = FftPlanner::new();
        Ok(TorusGrid {
            dim,
            length,
            points,
            spacing: length / points as f64,
            forward: planner.plan_fft(points, FftDirection::Forward),
            backward: planner.plan_fft(points, FftDirection::Inverse),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of sites `n^d`.
    pub fn site_count(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    /// Quadrature weight `h^d` of `∫dx`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Quadrature weight `L^{-d}` of `∫dk`.
    pub fn mode_weight(&self) -> f64 {
        self.length.powi(-(self.dim as i32))
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Integer coordinates of a site (row-major, last axis fastest).
    pub fn site_indices(&self, site: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        let mut rem = site;
        for axis in (0..self.dim).rev() {
            out[axis] = rem % self.points;
            rem /= self.points;
        }
        out
    }

    pub fn position(&self, site: usize) -> [f64; 3] {
        let idx = self.site_indices(site);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = idx[a] as f64 * self.spacing;
        }
        x
    }

    /// Signed integer momentum `m` of a flat FFT index.
    pub fn momentum_index(&self, flat: usize) -> [i64; 3] {
        let idx = self.site_indices(flat);
        let half = (self.points / 2) as i64;
        let mut m = [0i64; 3];
        for a in 0..self.dim {
            let i = idx[a] as i64;
            m[a] = if i < half { i } else { i - self.points as i64 };
        }
        m
    }

    /// Flat FFT index of a signed momentum, wrapped modulo `n`.
    pub fn flat_index(&self, m: [i64; 3]) -> usize {
        let n = self.points as i64;
        let mut flat = 0usize;
        for a in 0..self.dim {
            flat = flat * self.points + m[a].rem_euclid(n) as usize;
        }
        flat
    }

    pub fn momentum(&self, flat: usize) -> [f64; 3] {
        let m = self.momentum_index(flat);
        let mut k = [0.0; 3];
        for a in 0..self.dim {
            k[a] = m[a] as f64 / self.length;
        }
        k
    }

    /// `(2π|k|)²` for every lattice momentum in FFT ordering.
    pub fn laplacian_spectrum(&self) -> Vec<f64> {
        (0..self.site_count())
            .map(|i| {
                let k = self.momentum(i);
                4.0 * PI * PI * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2])
            })
            .collect()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.site_count() {
            return Err(Error::SizeMismatch { expected: self.site_count(), got: len });
        }
        Ok(())
    }

    fn fft_in_place(&self, data: &mut [C64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.points;
        let total = data.len();
        let mut line = vec![C64::new(0.0, 0.0); n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            for start in 0..total {
                // first element of each line along `axis`
                if (start / stride) % n != 0 {
                    continue;
                }
                for j in 0..n {
                    line[j] = data[start + j * stride];
                }
                plan.process(&mut line);
                for j in 0..n {
                    data[start + j * stride] = line[j];
                }
            }
        }
    }

    /// `f̂(k_m) = h^d Σ_x e^{-2πi k_m·x} f(x)` for all lattice momenta.
    pub fn transform(&self, f: &GridField) -> Result<Spectrum> {
        self.check_len(f.len())?;
        let mut data = f.0.clone();
        self.fft_in_place(&mut data, &self.forward);
        let h = self.cell_volume();
        data.iter_mut().for_each(|c| *c *= h);
        Ok(Spectrum(data))
    }

    /// `f(x) = L^{-d} Σ_m e^{2πi k_m·x} f̂(k_m)`.
    pub fn inverse_transform(&self, c: &Spectrum) -> Result<GridField> {
        self.check_len(c.0.len())?;
        let mut data = c.0.clone();
        self.fft_in_place(&mut data, &self.backward);
        let w = self.mode_weight();
        data.iter_mut().for_each(|c| *c *= w);
        Ok(GridField(data))
    }

    /// `∫ |f|² dx` by the grid quadrature.
    pub fn l2_norm_sqr(&self, f: &GridField) -> f64 {
        self.cell_volume() * f.0.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// `⟨f, g⟩ = h^d Σ conj(f) g`.
    pub fn inner(&self, f: &GridField, g: &GridField) -> C64 {
        let s: C64 = f.0.iter().zip(&g.0).map(|(a, b)| a.conj() * b).sum();
        s * self.cell_volume()
    }

    /// `ℓ²`-normalized site amplitudes `h^{d/2} f(x)` used by the many-body bases.
    pub fn site_amplitudes(&self, f: &GridField) -> Vec<C64> {
        let s = self.cell_volume().sqrt();
        f.0.iter().map(|c| c * s).collect()
    }

    /// Inverse of [`TorusGrid::site_amplitudes`].
    pub fn from_site_amplitudes(&self, v: &[C64]) -> GridField {
        let s = self.cell_volume().sqrt();
        GridField(v.iter().map(|c| c / s).collect())
    }

    /// Unitary `R` with `R[p][x] = e^{-2πi k_p·x} / √(n^d)`, momenta in FFT order.
    ///
    /// Maps site amplitudes to plane-wave amplitudes.
    pub fn plane_wave_matrix(&self) -> nalgebra::DMatrix<C64> {
        let s = self.site_count();
        let norm = (s as f64).sqrt();
        nalgebra::DMatrix::from_fn(s, s, |p, x| {
            let k = self.momentum(p);
            let pos = self.position(x);
            let arg: f64 = (0..self.dim).map(|a| -2.0 * PI * k[a] * pos[a]).sum();
            C64::from_polar(1.0 / norm, arg)
        })
    }

    /// Dense site-basis matrix of the spectral multiplier `f(−Δ)`.
    pub fn spectral_multiplier(&self, f: impl Fn(f64) -> f64) -> nalgebra::DMatrix<C64> {
        let r = self.plane_wave_matrix();
        let diag = nalgebra::DVector::from_iterator(
            self.site_count(),
            self.laplacian_spectrum().into_iter().map(|l| C64::new(f(l), 0.0)),
        );
        r.adjoint() * nalgebra::DMatrix::from_diagonal(&diag) * r
    }

    /// `‖(1 - Δ)^{m/2} f‖`, evaluated in momentum space over all lattice momenta.
    pub fn sobolev_norm(&self, f: &GridField, order: NormOrder) -> Result<f64> {
        let spec = self.transform(f)?;
        let lap = self.laplacian_spectrum();
        let m = order.get() as i32;
        let s: f64 = spec.0.iter().zip(&lap).map(|(c, l)| (1.0 + l).powi(m) * c.norm_sqr()).sum();
        Ok((self.mode_weight() * s).sqrt())
    }
}

/// One retained phonon momentum.
#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    /// Signed integer momentum `m`.
    pub index: [i64; 3],
    /// Flat index into a [`Spectrum`].
    pub flat: usize,
    pub k: [f64; 3],
    /// `|k|`
    pub magnitude: f64,
    /// `|k|^{-1}`
    pub form_factor: f64,
    /// `(2π|k|)²`
    pub laplacian: f64,
    /// Position of the mode `-m` (modulo `n`) inside the same set.
    pub partner: usize,
}

/// Nonzero lattice momenta, optionally restricted to `|k| ≤ Λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSet {
    modes: Vec<Mode>,
    weight: f64,
    length: f64,
    dim: usize,
    uv_cutoff: Option<f64>,
}

impl ModeSet {
    /// Builds the phonon mode set of `grid`. The zero mode is never included.
    pub fn new(grid: &TorusGrid, uv_cutoff: Option<f64>) -> Self {
        let mut modes = Vec::new();
        for flat in 1..grid.site_count() {
            let k = grid.momentum(flat);
            let magnitude = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
            if let Some(cut) = uv_cutoff {
                if magnitude > cut * (1.0 + 1e-12) {
                    continue;
                }
            }
            modes.push(Mode {
                index: grid.momentum_index(flat),
                flat,
                k,
                magnitude,
                form_factor: 1.0 / magnitude,
                laplacian: 4.0 * PI * PI * magnitude * magnitude,
                partner: usize::MAX,
            });
        }
        for i in 0..modes.len() {
            let m = modes[i].index;
            let neg = grid.flat_index([-m[0], -m[1], -m[2]]);
            let j = modes
                .iter()
                .position(|md| md.flat == neg)
                .expect("mode set is closed under m -> -m");
            modes[i].partner = j;
        }
        ModeSet {
            modes,
            weight: grid.mode_weight(),
            length: grid.length(),
            dim: grid.dim(),
            uv_cutoff,
        }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn get(&self, i: usize) -> &Mode {
        &self.modes[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Mode> {
        self.modes.iter()
    }

    /// Measure `L^{-d}` of `∫dk`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn uv_cutoff(&self) -> Option<f64> {
        self.uv_cutoff
    }

    /// Fock-space coupling `g_m = L^{-d/2} |k_m|^{-1}`.
    pub fn coupling(&self, i: usize) -> f64 {
        self.length.powf(-(self.dim as f64) / 2.0) * self.modes[i].form_factor
    }

    /// Converts a classical field `φ(k_m)` to Fock-space amplitudes `L^{-d/2} φ(k_m)`.
    pub fn to_fock_amplitudes(&self, phi: &ModeAmplitudes) -> Vec<C64> {
        let s = self.length.powf(-(self.dim as f64) / 2.0);
        phi.0.iter().map(|c| c * s).collect()
    }

    /// Restricts a full spectrum to the retained modes.
    pub fn restrict(&self, spectrum: &Spectrum) -> ModeAmplitudes {
        ModeAmplitudes(self.modes.iter().map(|m| spectrum.0[m.flat]).collect())
    }

    /// `‖c‖²_{L²} = L^{-d} Σ |c_m|²`.
    pub fn l2_norm_sqr(&self, c: &ModeAmplitudes) -> f64 {
        self.weight * c.0.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// `‖(1 + |k|²)^{m/2} c‖` with the `∫dk` measure.
    pub fn weighted_norm(&self, c: &ModeAmplitudes, order: NormOrder) -> Result<f64> {
        if c.len() != self.len() {
            return Err(Error::SizeMismatch { expected: self.len(), got: c.len() });
        }
        let m = order.get() as i32;
        let s: f64 = self
            .modes
            .iter()
            .zip(&c.0)
            .map(|(md, z)| (1.0 + md.magnitude * md.magnitude).powi(m) * z.norm_sqr())
            .sum();
        Ok((self.weight * s).sqrt())
    }
}

/// Convenience bundle of a grid and its phonon modes.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub grid: TorusGrid,
    pub modes: ModeSet,
}

impl Lattice {
    pub fn new(dim: usize, length: f64, points: usize, uv_cutoff: Option<f64>) -> Result<Self> {
        let grid = TorusGrid::new(dim, length, points)?;
        let modes = ModeSet::new(&grid, uv_cutoff);
        Ok(Lattice { grid, modes })
    }
}
