//! Landau–Pekar equations on the torus.
//!
//! ```text
//! i∂ψ = (−Δ + √α Φ_φ − μ) ψ
//! i∂φ_m = φ_m + √α v_m ρ̂_m,   ρ̂ = transform(|ψ|²)
//! ```
//!
//! Time stepping is Strang splitting: a kinetic half step in momentum space,
//! the coupled local flow, and another kinetic half step. During the local flow
//! `|ψ|²` is frozen, so the `φ` equation is linear with a constant source and
//! is integrated in closed form; `ψ` picks up the phase generated by the time
//! integral of `Φ_φ`. Every substep is exactly norm preserving.

use std::f64::consts::PI;

use crate::lattice::{GridField, Lattice, ModeAmplitudes, ModeSet, NormOrder, Spectrum, TorusGrid};
use crate::{Error, Result, C64};

/// `Φ_φ(x) = L^{-d} Σ_m v_m (e^{2πik_m·x} φ_m + c.c.)` on every grid site.
pub fn phonon_potential(grid: &TorusGrid, modes: &ModeSet, phi: &ModeAmplitudes) -> Result<Vec<f64>> {
    if phi.len() != modes.len() {
        return Err(Error::SizeMismatch { expected: modes.len(), got: phi.len() });
    }
    let mut spec = Spectrum(vec![C64::new(0.0, 0.0); grid.site_count()]);
    for (mode, c) in modes.iter().zip(&phi.0) {
        spec.0[mode.flat] += c * mode.form_factor;
    }
    let field = grid.inverse_transform(&spec)?;
    Ok(field.0.iter().map(|z| 2.0 * z.re).collect())
}

/// `μ = ½√α ∫ Φ_φ |ψ|²`.
pub fn gauge_phase(grid: &TorusGrid, modes: &ModeSet, psi: &GridField, phi: &ModeAmplitudes, alpha: f64) -> Result<f64> {
    let pot = phonon_potential(grid, modes, phi)?;
    Ok(0.5 * alpha.sqrt() * potential_expectation(grid, &pot, psi)?)
}

fn potential_expectation(grid: &TorusGrid, pot: &[f64], psi: &GridField) -> Result<f64> {
    if psi.len() != pot.len() {
        return Err(Error::SizeMismatch { expected: pot.len(), got: psi.len() });
    }
    Ok(grid.cell_volume() * pot.iter().zip(&psi.0).map(|(p, z)| p * z.norm_sqr()).sum::<f64>())
}

fn kinetic_energy(grid: &TorusGrid, psi: &GridField) -> Result<f64> {
    let spec = grid.transform(psi)?;
    let lap = grid.laplacian_spectrum();
    Ok(grid.mode_weight() * spec.0.iter().zip(&lap).map(|(c, l)| l * c.norm_sqr()).sum::<f64>())
}

/// `ℰ[ψ, φ] = ⟨ψ, (−Δ + √α Φ_φ) ψ⟩ + ‖φ‖²`.
pub fn lp_energy(grid: &TorusGrid, modes: &ModeSet, psi: &GridField, phi: &ModeAmplitudes, alpha: f64) -> Result<f64> {
    let pot = phonon_potential(grid, modes, phi)?;
    Ok(kinetic_energy(grid, psi)? + alpha.sqrt() * potential_expectation(grid, &pot, psi)? + modes.l2_norm_sqr(phi))
}

/// Default shift for [`energy3`]: `max(1, 1 − min √αΦ) + 1`.
pub fn default_energy3_shift(potential: &[f64]) -> f64 {
    let min = potential.iter().copied().fold(f64::INFINITY, f64::min);
    (1.0f64).max(1.0 - min) + 1.0
}

/// `ℰ⁽³⁾ = ‖(−Δ + √αΦ_φ + M)^{3/2} ψ‖² = ⟨Aψ, A(Aψ)⟩`.
///
/// `shift = None` uses [`default_energy3_shift`].
pub fn energy3(
    grid: &TorusGrid,
    modes: &ModeSet,
    psi: &GridField,
    phi: &ModeAmplitudes,
    alpha: f64,
    shift: Option<f64>,
) -> Result<f64> {
    let pot: Vec<f64> = phonon_potential(grid, modes, phi)?.iter().map(|p| alpha.sqrt() * p).collect();
    let m = shift.unwrap_or_else(|| default_energy3_shift(&pot));
    let min = pot.iter().copied().fold(f64::INFINITY, f64::min);
    // −Δ ≥ 0, so M + min Φ bounds the spectrum from below
    if m + min <= 0.0 {
        return Err(Error::NotPositive { bound: m + min });
    }
    let lap = grid.laplacian_spectrum();
    let apply = |f: &GridField| -> Result<GridField> {
        let mut spec = grid.transform(f)?;
        spec.0.iter_mut().zip(&lap).for_each(|(c, l)| *c *= l);
        let mut out = grid.inverse_transform(&spec)?;
        for ((o, z), p) in out.0.iter_mut().zip(&f.0).zip(&pot) {
            *o += z * (p + m);
        }
        Ok(out)
    };
    let a1 = apply(psi)?;
    let a2 = apply(&a1)?;
    Ok(grid.inner(&a1, &a2).re)
}

/// Condensate wave function and classical field at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct LPState {
    pub psi: GridField,
    pub phi: ModeAmplitudes,
    pub t: f64,
    pub alpha: f64,
}

/// Conservation and growth monitors at one sample time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LPDiagnostics {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub h1: f64,
    pub h3: f64,
    pub l2_1: f64,
    pub l2_2: f64,
    /// `∫₀ᵗ (‖ψ_s‖²_{H³} + ‖φ_s‖²_{L²_2}) ds`, trapezoidal at the sampling cadence.
    pub ftime: f64,
    pub energy3: f64,
}

impl LPDiagnostics {
    pub const CSV_HEADER: &'static str = "t,mass,energy,H1,H3,L2_1,L2_2,f,energy3";

    pub fn csv_row(&self) -> String {
        [self.t, self.mass, self.energy, self.h1, self.h3, self.l2_1, self.l2_2, self.ftime, self.energy3]
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Result of [`LpSystem::evolve`].
#[derive(Clone, Debug)]
pub struct LpRun {
    pub samples: Vec<LPDiagnostics>,
    pub final_state: LPState,
}

impl LpRun {
    /// Largest `|mass(t) − mass(0)|`.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.samples[0].mass;
        self.samples.iter().map(|d| (d.mass - m0).abs()).fold(0.0, f64::max)
    }

    /// Largest `|ℰ(t) − ℰ(0)| / |ℰ(0)|` (absolute if `ℰ(0) = 0`).
    pub fn relative_energy_drift(&self) -> f64 {
        let e0 = self.samples[0].energy;
        let scale = if e0 == 0.0 { 1.0 } else { e0.abs() };
        self.samples.iter().map(|d| (d.energy - e0).abs() / scale).fold(0.0, f64::max)
    }
}

/// Landau–Pekar dynamics on a fixed lattice.
#[derive(Clone, Debug)]
pub struct LpSystem {
    pub grid: TorusGrid,
    pub modes: ModeSet,
    pub alpha: f64,
    /// Include the phase `μ(t)` in the generator. Disabling it changes `ψ_t` by a global phase only.
    pub gauge: bool,
    laplacian: Vec<f64>,
}

impl LpSystem {
    pub fn new(lattice: &Lattice, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("coupling alpha must be >= 0, got {alpha}")));
        }
        Ok(LpSystem {
            grid: lattice.grid.clone(),
            modes: lattice.modes.clone(),
            alpha,
            gauge: true,
            laplacian: lattice.grid.laplacian_spectrum(),
        })
    }

    pub fn without_gauge_phase(mut self) -> Self {
        self.gauge = false;
        self
    }

    pub fn state(&self, psi: GridField, phi: ModeAmplitudes) -> Result<LPState> {
        if psi.len() != self.grid.site_count() {
            return Err(Error::SizeMismatch { expected: self.grid.site_count(), got: psi.len() });
        }
        if phi.len() != self.modes.len() {
            return Err(Error::SizeMismatch { expected: self.modes.len(), got: phi.len() });
        }
        Ok(LPState { psi, phi, t: 0.0, alpha: self.alpha })
    }

    pub fn potential(&self, phi: &ModeAmplitudes) -> Result<Vec<f64>> {
        phonon_potential(&self.grid, &self.modes, phi)
    }

    pub fn energy(&self, s: &LPState) -> Result<f64> {
        lp_energy(&self.grid, &self.modes, &s.psi, &s.phi, self.alpha)
    }

    pub fn gauge_phase(&self, s: &LPState) -> Result<f64> {
        gauge_phase(&self.grid, &self.modes, &s.psi, &s.phi, self.alpha)
    }

    fn kinetic(&self, psi: &mut GridField, dt: f64) -> Result<()> {
        let mut spec = self.grid.transform(psi)?;
        spec.0.iter_mut().zip(&self.laplacian).for_each(|(c, l)| *c *= C64::from_polar(1.0, -l * dt));
        *psi = self.grid.inverse_transform(&spec)?;
        Ok(())
    }

    fn local(&self, psi: &mut GridField, phi: &mut ModeAmplitudes, dt: f64) -> Result<()> {
        let sa = self.alpha.sqrt();
        let density = GridField(psi.0.iter().map(|z| C64::new(z.norm_sqr(), 0.0)).collect());
        let rho = self.modes.restrict(&self.grid.transform(&density)?);
        let rot = C64::from_polar(1.0, -dt);
        // (1 − e^{−i dt}) / i, computed without cancellation for small dt
        let weight = C64::new((dt).sin(), -2.0 * (0.5 * dt).sin().powi(2));
        let mut integral = ModeAmplitudes(Vec::with_capacity(phi.len()));
        for ((p, r), mode) in phi.0.iter_mut().zip(&rho.0).zip(self.modes.iter()) {
            let s = r * (sa * mode.form_factor);
            integral.0.push((*p + s) * weight - s * dt);
            *p = rot * (*p + s) - s;
        }
        let pot = self.potential(&integral)?;
        let mu_int = if self.gauge { 0.5 * sa * potential_expectation(&self.grid, &pot, psi)? } else { 0.0 };
        for (z, v) in psi.0.iter_mut().zip(&pot) {
            *z *= C64::from_polar(1.0, -(sa * v - mu_int));
        }
        Ok(())
    }

    /// One Strang step of length `dt`.
    pub fn step(&self, state: &LPState, dt: f64) -> Result<LPState> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let mut psi = state.psi.clone();
        let mut phi = state.phi.clone();
        self.kinetic(&mut psi, 0.5 * dt)?;
        self.local(&mut psi, &mut phi, dt)?;
        self.kinetic(&mut psi, 0.5 * dt)?;
        let t = state.t + dt;
        let finite = psi.0.iter().chain(&phi.0).all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(Error::BlowUp { time: t });
        }
        Ok(LPState { psi, phi, t, alpha: state.alpha })
    }

    /// Diagnostics with `ftime` left at zero.
    pub fn diagnostics(&self, s: &LPState) -> Result<LPDiagnostics> {
        let g = &self.grid;
        let order = |m| NormOrder::new(m).expect("orders 1..3 are valid");
        Ok(LPDiagnostics {
            t: s.t,
            mass: g.l2_norm_sqr(&s.psi),
            energy: self.energy(s)?,
            h1: g.sobolev_norm(&s.psi, order(1))?,
            h3: g.sobolev_norm(&s.psi, order(3))?,
            l2_1: self.modes.weighted_norm(&s.phi, order(1))?,
            l2_2: self.modes.weighted_norm(&s.phi, order(2))?,
            ftime: 0.0,
            energy3: energy3(g, &self.modes, &s.psi, &s.phi, self.alpha, None)?,
        })
    }

    /// Integrates to `horizon` with steps `dt`, sampling every `sample_every` steps.
    pub fn evolve(&self, initial: &LPState, horizon: f64, dt: f64, sample_every: usize) -> Result<LpRun> {
        let steps = step_count(horizon, dt)?;
        if sample_every == 0 {
            return Err(Error::InvalidArgument("sampling cadence must be at least one step".into()));
        }
        let mut state = initial.clone();
        let mut samples = vec![self.diagnostics(&state)?];
        for i in 1..=steps {
            state = self.step(&state, dt)?;
            if i % sample_every == 0 || i == steps {
                let mut d = self.diagnostics(&state)?;
                let prev = samples.last().expect("nonempty");
                let rate = |x: &LPDiagnostics| x.h3 * x.h3 + x.l2_2 * x.l2_2;
                d.ftime = prev.ftime + 0.5 * (d.t - prev.t) * (rate(prev) + rate(&d));
                samples.push(d);
            }
        }
        Ok(LpRun { samples, final_state: state })
    }

    /// Distance `(‖Δψ‖² + ‖Δφ‖²)^{1/2}` between two states.
    pub fn state_distance(&self, a: &LPState, b: &LPState) -> f64 {
        let dpsi = GridField(a.psi.0.iter().zip(&b.psi.0).map(|(x, y)| x - y).collect());
        let dphi = ModeAmplitudes(a.phi.0.iter().zip(&b.phi.0).map(|(x, y)| x - y).collect());
        (self.grid.l2_norm_sqr(&dpsi) + self.modes.l2_norm_sqr(&dphi)).sqrt()
    }
}

/// Number of steps of size `dt` that make up `horizon`; rejects non-divisible pairs.
pub fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(horizon >= 0.0) {
        return Err(Error::InvalidArgument(format!("need dt > 0 and T >= 0, got dt = {dt}, T = {horizon}")));
    }
    let steps = (horizon / dt).round();
    if (steps * dt - horizon).abs() > 1e-9 * dt.max(horizon) {
        return Err(Error::InvalidArgument(format!("T = {horizon} is not a multiple of dt = {dt}")));
    }
    Ok(steps as usize)
}

/// States stored on a uniform time grid, for driving fluctuation dynamics.
#[derive(Clone, Debug)]
pub struct LpTrajectory {
    pub spacing: f64,
    pub states: Vec<LPState>,
}

impl LpTrajectory {
    /// Stores the state every `spacing` up to `horizon`, each interval split into `substeps` Strang steps.
    pub fn compute(system: &LpSystem, initial: &LPState, horizon: f64, spacing: f64, substeps: usize) -> Result<Self> {
        let n = step_count(horizon, spacing)?;
        let substeps = substeps.max(1);
        let dt = spacing / substeps as f64;
        let mut states = Vec::with_capacity(n + 1);
        let mut s = initial.clone();
        states.push(s.clone());
        for i in 1..=n {
            for _ in 0..substeps {
                s = system.step(&s, dt)?;
            }
            s.t = initial.t + i as f64 * spacing;
            states.push(s.clone());
        }
        Ok(LpTrajectory { spacing, states })
    }

    pub fn start(&self) -> f64 {
        self.states[0].t
    }

    pub fn end(&self) -> f64 {
        self.states.last().expect("nonempty").t
    }

    /// The stored state at time `t`; `t` must lie on the sampling grid.
    pub fn at(&self, t: f64) -> Result<&LPState> {
        let x = (t - self.start()) / self.spacing;
        let i = x.round();
        if (x - i).abs() > 1e-6 || i < 0.0 || i as usize >= self.states.len() {
            return Err(Error::SamplingMismatch { time: t });
        }
        Ok(&self.states[i as usize])
    }
}

/// Named initial condensate wave functions. All are normalized on the grid.
#[derive(Clone, Debug, PartialEq)]
pub enum PsiPreset {
    /// `Σ_j exp(−|x − c − jL|²/(2σ²)) e^{2πi m·x/L}`, periodized over neighbouring cells.
    Gaussian { center: [f64; 3], width: f64, momentum: [i64; 3] },
    Uniform,
    PlaneWave { momentum: [i64; 3] },
    /// `1 + ε cos(2π m·x/L)`.
    Cosine { amplitude: f64, momentum: [i64; 3] },
    Samples(Vec<C64>),
}

/// Periodic images summed on each side of the Gaussian preset.
const IMAGES: i32 = 3;

impl PsiPreset {
    pub fn build(&self, grid: &TorusGrid) -> Result<GridField> {
        let l = grid.length();
        let d = grid.dim();
        let phase = |m: &[i64; 3], x: &[f64; 3]| -> f64 { (0..d).map(|a| 2.0 * PI * m[a] as f64 * x[a] / l).sum() };
        let raw: Vec<C64> = match self {
            PsiPreset::Samples(v) => {
                if v.len() != grid.site_count() {
                    return Err(Error::SizeMismatch { expected: grid.site_count(), got: v.len() });
                }
                v.clone()
            }
            _ => (0..grid.site_count())
                .map(|s| {
                    let x = grid.position(s);
                    match self {
                        PsiPreset::Gaussian { center, width, momentum } => {
                            let envelope: f64 = (0..d)
                                .map(|a| {
                                    (-IMAGES..=IMAGES)
                                        .map(|j| {
                                            let dx = x[a] - center[a] - j as f64 * l;
                                            (-dx * dx / (2.0 * width * width)).exp()
                                        })
                                        .sum::<f64>()
                                })
                                .product();
                            C64::from_polar(envelope, phase(momentum, &x))
                        }
                        PsiPreset::Uniform => C64::new(1.0, 0.0),
                        PsiPreset::PlaneWave { momentum } => C64::from_polar(1.0, phase(momentum, &x)),
                        PsiPreset::Cosine { amplitude, momentum } => C64::new(1.0 + amplitude * phase(momentum, &x).cos(), 0.0),
                        PsiPreset::Samples(_) => unreachable!(),
                    }
                })
                .collect(),
        };
        let f = GridField(raw);
        let norm = grid.l2_norm_sqr(&f).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroState);
        }
        Ok(GridField(f.0.iter().map(|z| z / norm).collect()))
    }
}

/// Named initial classical fields.
#[derive(Clone, Debug, PartialEq)]
pub enum PhiPreset {
    Zero,
    Constant(C64),
    /// `amplitude · exp(−|k|²/(2 width²))`.
    Gaussian { amplitude: f64, width: f64 },
    Samples(Vec<C64>),
}

impl PhiPreset {
    pub fn build(&self, modes: &ModeSet) -> Result<ModeAmplitudes> {
        let n = modes.len();
        Ok(ModeAmplitudes(match self {
            PhiPreset::Zero => vec![C64::new(0.0, 0.0); n],
            PhiPreset::Constant(c) => vec![*c; n],
            PhiPreset::Gaussian { amplitude, width } => modes
                .iter()
                .map(|m| C64::new(amplitude * (-m.magnitude * m.magnitude / (2.0 * width * width)).exp(), 0.0))
                .collect(),
            PhiPreset::Samples(v) => {
                if v.len() != n {
                    return Err(Error::SizeMismatch { expected: n, got: v.len() });
                }
                v.clone()
            }
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn lat(n: usize) -> Lattice {
        Lattice::new(1, 1.0, n, None).unwrap()
    }

    fn gaussian(grid: &TorusGrid) -> GridField {
        PsiPreset::Gaussian { center: [0.5, 0.0, 0.0], width: 0.1, momentum: [1, 0, 0] }.build(grid).unwrap()
    }

    /// Direct sum over modes and sites, no FFT.
    fn potential_oracle(grid: &TorusGrid, modes: &ModeSet, phi: &ModeAmplitudes) -> Vec<f64> {
        (0..grid.site_count())
            .map(|s| {
                let x = grid.position(s);
                let z: C64 = modes
                    .iter()
                    .zip(&phi.0)
                    .map(|(m, p)| C64::from_polar(m.form_factor, 2.0 * PI * m.k[0] * x[0]) * p)
                    .sum();
                2.0 * modes.weight() * z.re
            })
            .collect()
    }

    #[test]
    fn potential_of_zero_field() {
        let l = lat(8);
        let pot = phonon_potential(&l.grid, &l.modes, &ModeAmplitudes::zeros(l.modes.len())).unwrap();
        assert!(pot.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn potential_of_single_pair() {
        let l = lat(8);
        let mut phi = ModeAmplitudes::zeros(l.modes.len());
        for (i, m) in l.modes.iter().enumerate() {
            if m.index[0].abs() == 1 {
                phi.0[i] = C64::new(1.0, 0.0);
            }
        }
        let pot = phonon_potential(&l.grid, &l.modes, &phi).unwrap();
        for s in 0..8 {
            let x = l.grid.position(s)[0];
            assert!((pot[s] - 4.0 * (2.0 * PI * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn potential_matches_direct_sum() {
        let l = Lattice::new(1, 2.0, 16, Some(3.0)).unwrap();
        let phi = ModeAmplitudes((0..l.modes.len()).map(|i| C64::new((i as f64).sin(), (2.0 * i as f64).cos())).collect());
        let pot = phonon_potential(&l.grid, &l.modes, &phi).unwrap();
        for (a, b) in pot.iter().zip(potential_oracle(&l.grid, &l.modes, &phi)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gauge_phase_examples() {
        let l = lat(8);
        let psi = PsiPreset::Uniform.build(&l.grid).unwrap();
        let zero = ModeAmplitudes::zeros(l.modes.len());
        assert_eq!(gauge_phase(&l.grid, &l.modes, &psi, &zero, 1.0).unwrap(), 0.0);
        let mut phi = zero.clone();
        for (i, m) in l.modes.iter().enumerate() {
            if m.index[0].abs() == 1 {
                phi.0[i] = C64::new(1.0, 0.0);
            }
        }
        assert!(gauge_phase(&l.grid, &l.modes, &psi, &phi, 1.0).unwrap().abs() < 1e-14);
        assert_eq!(gauge_phase(&l.grid, &l.modes, &gaussian(&l.grid), &phi, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn energy_examples() {
        let l = lat(16);
        let zero = ModeAmplitudes::zeros(l.modes.len());
        let uni = PsiPreset::Uniform.build(&l.grid).unwrap();
        assert!(lp_energy(&l.grid, &l.modes, &uni, &zero, 1.0).unwrap().abs() < 1e-12);
        let pw = PsiPreset::PlaneWave { momentum: [1, 0, 0] }.build(&l.grid).unwrap();
        assert_relative_eq!(lp_energy(&l.grid, &l.modes, &pw, &zero, 1.0).unwrap(), 4.0 * PI * PI, epsilon = 1e-10);
        let phi = PhiPreset::Gaussian { amplitude: 0.5, width: 2.0 }.build(&l.modes).unwrap();
        let g = gaussian(&l.grid);
        let e0 = lp_energy(&l.grid, &l.modes, &g, &phi, 0.0).unwrap();
        let split = lp_energy(&l.grid, &l.modes, &g, &zero, 0.0).unwrap() + l.modes.l2_norm_sqr(&phi);
        assert_relative_eq!(e0, split, epsilon = 1e-12);
    }

    #[test]
    fn energy3_plane_wave() {
        let l = lat(16);
        let zero = ModeAmplitudes::zeros(l.modes.len());
        let pw = PsiPreset::PlaneWave { momentum: [1, 0, 0] }.build(&l.grid).unwrap();
        let lam = 4.0 * PI * PI;
        assert_relative_eq!(
            energy3(&l.grid, &l.modes, &pw, &zero, 1.0, Some(1.0)).unwrap(),
            (lam + 1.0).powi(3),
            max_relative = 1e-12
        );
        assert!(matches!(energy3(&l.grid, &l.modes, &pw, &zero, 1.0, Some(-1.0)), Err(Error::NotPositive { .. })));
    }

    #[test]
    fn decoupled_step_is_exact() {
        let l = lat(16);
        let sys = LpSystem::new(&l, 0.0).unwrap();
        let psi = PsiPreset::PlaneWave { momentum: [2, 0, 0] }.build(&l.grid).unwrap();
        let phi = PhiPreset::Constant(C64::new(0.3, -0.1)).build(&l.modes).unwrap();
        let s0 = sys.state(psi.clone(), phi.clone()).unwrap();
        let dt = 0.01;
        let s1 = sys.step(&s0, dt).unwrap();
        let lam = 4.0 * PI * PI * 4.0;
        for (a, b) in s1.psi.0.iter().zip(&psi.0) {
            assert!((a - b * C64::from_polar(1.0, -lam * dt)).norm() < 1e-12);
        }
        for (a, b) in s1.phi.0.iter().zip(&phi.0) {
            assert!((a - b * C64::from_polar(1.0, -dt)).norm() < 1e-12);
        }
    }

    #[test]
    fn decoupled_energy_is_constant() {
        let l = lat(32);
        let sys = LpSystem::new(&l, 0.0).unwrap();
        let phi = PhiPreset::Gaussian { amplitude: 1.0, width: 3.0 }.build(&l.modes).unwrap();
        let s0 = sys.state(gaussian(&l.grid), phi).unwrap();
        let run = sys.evolve(&s0, 10.0, 0.01, 100).unwrap();
        assert!(run.relative_energy_drift() < 1e-10);
    }

    #[test]
    fn step_matches_fine_reference() {
        // two independent refinements agree to second order
        let l = lat(32);
        let sys = LpSystem::new(&l, 2.0).unwrap();
        let phi = PhiPreset::Gaussian { amplitude: 0.5, width: 3.0 }.build(&l.modes).unwrap();
        let s0 = sys.state(gaussian(&l.grid), phi).unwrap();
        let run = |dt: f64| sys.evolve(&s0, 0.1, dt, usize::MAX).unwrap().final_state;
        let a = run(1e-3);
        let b = run(5e-4);
        let c = run(2.5e-4);
        let ratio = sys.state_distance(&a, &b) / sys.state_distance(&b, &c);
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
    }

    #[test]
    fn gauge_covariance() {
        let l = lat(32);
        let with = LpSystem::new(&l, 1.0).unwrap();
        let without = with.clone().without_gauge_phase();
        let phi = PhiPreset::Gaussian { amplitude: 1.0, width: 2.0 }.build(&l.modes).unwrap();
        let s0 = with.state(gaussian(&l.grid), phi).unwrap();
        let a = with.evolve(&s0, 1.0, 1e-3, 1000).unwrap().final_state;
        let b = without.evolve(&s0, 1.0, 1e-3, 1000).unwrap().final_state;
        for (x, y) in a.psi.0.iter().zip(&b.psi.0) {
            assert!((x.norm() - y.norm()).abs() < 1e-9);
        }
        assert!((l.grid.inner(&a.psi, &b.psi).norm() - 1.0).abs() < 1e-9);
        let dphi = ModeAmplitudes(a.phi.0.iter().zip(&b.phi.0).map(|(x, y)| x - y).collect());
        assert!(l.modes.l2_norm_sqr(&dphi).sqrt() < 1e-9);
    }

    #[test]
    fn trajectory_sampling() {
        let l = lat(8);
        let sys = LpSystem::new(&l, 1.0).unwrap();
        let s0 = sys.state(gaussian(&l.grid), ModeAmplitudes::zeros(l.modes.len())).unwrap();
        let traj = LpTrajectory::compute(&sys, &s0, 0.1, 0.01, 2).unwrap();
        assert_eq!(traj.states.len(), 11);
        assert!((traj.at(0.05).unwrap().t - 0.05).abs() < 1e-15);
        assert!(matches!(traj.at(0.055), Err(Error::SamplingMismatch { .. })));
        assert!(matches!(traj.at(0.2), Err(Error::SamplingMismatch { .. })));
        assert!(matches!(LpTrajectory::compute(&sys, &s0, 0.1, 0.03, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn presets_are_normalized() {
        let l = Lattice::new(3, 1.0, 4, None).unwrap();
        for p in [
            PsiPreset::Uniform,
            PsiPreset::PlaneWave { momentum: [1, -1, 0] },
            PsiPreset::Cosine { amplitude: 0.2, momentum: [0, 1, 0] },
            PsiPreset::Gaussian { center: [0.5; 3], width: 0.3, momentum: [0; 3] },
        ] {
            assert!((l.grid.l2_norm_sqr(&p.build(&l.grid).unwrap()) - 1.0).abs() < 1e-14);
        }
        assert!(matches!(PsiPreset::Samples(vec![C64::new(0.0, 0.0); 64]).build(&l.grid), Err(Error::ZeroState)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn step_preserves_norm(alpha in 0.0f64..4.0, amp in -1.0f64..1.0, dt in 1e-4f64..0.05) {
            let l = lat(16);
            let sys = LpSystem::new(&l, alpha).unwrap();
            let phi = PhiPreset::Gaussian { amplitude: amp, width: 4.0 }.build(&l.modes).unwrap();
            let s0 = sys.state(gaussian(&l.grid), phi).unwrap();
            let s1 = sys.step(&s0, dt).unwrap();
            prop_assert!((l.grid.l2_norm_sqr(&s1.psi) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn potential_is_real_and_linear(a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let l = lat(8);
            let p1 = ModeAmplitudes((0..l.modes.len()).map(|i| C64::new(a * i as f64, b)).collect());
            let p2 = ModeAmplitudes((0..l.modes.len()).map(|i| C64::new(b, -a * (i as f64).cos())).collect());
            let sum = ModeAmplitudes(p1.0.iter().zip(&p2.0).map(|(x, y)| x + y).collect());
            let v1 = phonon_potential(&l.grid, &l.modes, &p1).unwrap();
            let v2 = phonon_potential(&l.grid, &l.modes, &p2).unwrap();
            let vs = phonon_potential(&l.grid, &l.modes, &sum).unwrap();
            for i in 0..8 {
                prop_assert!((v1[i] + v2[i] - vs[i]).abs() < 1e-12);
            }
        }
    }
}
