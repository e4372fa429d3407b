//! Fluctuation dynamics around the Landau–Pekar solution on the double Fock
//! space of particle excitations (`b`, plane-wave modes) and phonons (`a`).
//!
//! Both the Bogoliubov generator `H^B(t)` and the full generator `H(t)` are
//! time dependent through `(ψ_t, φ_t)`. They are propagated by freezing the
//! generator at the midpoint of each step and applying one Krylov exponential.

mod hamiltonian;
mod kernels;
mod space;

use nalgebra::DMatrix;

pub use hamiltonian::{
    assemble_h_full, assemble_hb, second_quantize_b, Generator, HamiltonianTemplate, DEFAULT_TERM_LIMIT,
};
pub use kernels::{build_kernels, FluctuationKernels, KernelContext, NORMALIZATION_TOL};
pub use space::{DoubleFockBasis, DoubleFockState};

use crate::fock::{propagate, KrylovOptions, LinearOperator};
use crate::landau_pekar::{step_count, LpTrajectory};
use crate::lattice::{GridField, TorusGrid};
use crate::{Error, Result, C64};

/// Number of sector norms reported per sample.
pub const REPORTED_SECTORS: usize = 5;

/// `Π_{j=1}^{k} (1 − n/j) χ`: the projection onto `n = 0` when the spectrum of `n` lies in `0..=k`.
fn lagrange_null_projection(n_psi: &dyn LinearOperator, chi: &[C64], kmax: usize) -> Vec<C64> {
    let mut w = chi.to_vec();
    let mut nw = vec![C64::new(0.0, 0.0); w.len()];
    for j in 1..=kmax {
        n_psi.apply(&w, &mut nw);
        let inv = 1.0 / j as f64;
        for (a, b) in w.iter_mut().zip(&nw) {
            *a -= b * inv;
        }
    }
    w
}

/// `Γχ`: the part of `χ` whose particle excitations are all orthogonal to `ψ`.
pub fn orthogonal_projection(chi: &DoubleFockState, psi_pw: &[C64]) -> Result<DoubleFockState> {
    let s = chi.basis.b_basis().mode_count();
    if psi_pw.len() != s {
        return Err(Error::SizeMismatch { expected: s, got: psi_pw.len() });
    }
    let v = DMatrix::from_column_slice(s, 1, psi_pw);
    let n_psi = second_quantize_b(&chi.basis, &(&v * v.adjoint()));
    let kept = lagrange_null_projection(&n_psi, &chi.coeffs, chi.basis.b_basis().cutoff());
    DoubleFockState::new(chi.basis.clone(), kept)
}

/// `‖(1 − Γ)χ‖` with `Γ = q^{⊗k} ⊗ 1` on sector `k`, for plane-wave coefficients of `ψ`.
pub fn orthogonality_defect_pw(chi: &DoubleFockState, psi_pw: &[C64]) -> Result<f64> {
    let kept = orthogonal_projection(chi, psi_pw)?;
    Ok(crate::fock::distance(&chi.coeffs, &kept.coeffs))
}

/// `‖(1 − Γ_t)χ‖` for a condensate wave function on `grid`.
pub fn orthogonality_defect(chi: &DoubleFockState, grid: &TorusGrid, psi: &GridField) -> Result<f64> {
    orthogonality_defect_pw(chi, &plane_wave_coefficients(grid, psi))
}

/// Plane-wave coefficients `R ψ_site` of a grid function.
pub fn plane_wave_coefficients(grid: &TorusGrid, psi: &GridField) -> Vec<C64> {
    let r = grid.plane_wave_matrix();
    let site = grid.site_amplitudes(psi);
    (0..r.nrows()).map(|p| (0..r.ncols()).map(|x| r[(p, x)] * site[x]).sum()).collect()
}

/// `‖(𝒩_a³ + 𝒩_b³ + T_b)^{1/2} χ‖` with kinetic weights `λ_p` on the `b` modes.
pub fn moment_bound(chi: &DoubleFockState, b_weights: &[f64]) -> f64 {
    chi.coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let na: f64 = chi.basis.a_state(i).iter().map(|&n| n as f64).sum();
            let b = chi.basis.b_state(i);
            let nb: f64 = b.iter().map(|&n| n as f64).sum();
            let tb: f64 = b.iter().zip(b_weights).map(|(&n, l)| n as f64 * l).sum();
            c.norm_sqr() * (na.powi(3) + nb.powi(3) + tb)
        })
        .sum::<f64>()
        .sqrt()
}

/// One row of a fluctuation trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct FluctuationSample {
    pub t: f64,
    pub norm: f64,
    pub n_a: f64,
    pub n_b: f64,
    pub t_b: f64,
    pub orthogonality_defect: f64,
    pub sector_norms: [f64; REPORTED_SECTORS],
    /// `‖1_{𝒩>M}χ‖` for truncated runs, zero otherwise.
    pub leakage: f64,
}

impl FluctuationSample {
    pub const CSV_HEADER: &'static str = "t,norm,N_a,N_b,T_b,orthogonality_defect,sector_0,sector_1,sector_2,sector_3,sector_4";

    pub fn csv_row(&self) -> String {
        let mut fields = vec![self.t, self.norm, self.n_a, self.n_b, self.t_b, self.orthogonality_defect];
        fields.extend_from_slice(&self.sector_norms);
        fields.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(",")
    }
}

/// Step size, horizon and output cadence of a fluctuation run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluctuationOptions {
    pub horizon: f64,
    pub dt: f64,
    /// Record a sample every this many steps (and always at the end).
    pub sample_every: usize,
    pub krylov: KrylovOptions,
    /// Keep the state at every sample.
    pub keep_states: bool,
}

impl FluctuationOptions {
    pub fn new(horizon: f64, dt: f64) -> Self {
        FluctuationOptions { horizon, dt, sample_every: 1, krylov: KrylovOptions::default(), keep_states: false }
    }

    pub fn sample_every(mut self, n: usize) -> Self {
        self.sample_every = n.max(1);
        self
    }

    pub fn keep_states(mut self) -> Self {
        self.keep_states = true;
        self
    }
}

#[derive(Clone, Debug)]
pub struct FluctuationRun {
    pub samples: Vec<FluctuationSample>,
    /// States at the sample times when requested.
    pub states: Vec<DoubleFockState>,
    pub final_state: DoubleFockState,
}

impl FluctuationRun {
    pub fn max_leakage(&self) -> f64 {
        self.samples.iter().map(|s| s.leakage).fold(0.0, f64::max)
    }

    pub fn max_orthogonality_defect(&self) -> f64 {
        self.samples.iter().map(|s| s.orthogonality_defect).fold(0.0, f64::max)
    }

    pub fn norm_drift(&self) -> f64 {
        let n0 = self.samples[0].norm;
        self.samples.iter().map(|s| (s.norm - n0).abs()).fold(0.0, f64::max)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from(FluctuationSample::CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            out.push_str(&s.csv_row());
            out.push('\n');
        }
        out
    }
}

fn sample(
    chi: &DoubleFockState,
    t: f64,
    ctx: &KernelContext,
    psi: &GridField,
    b_weights: &[f64],
    cutoff: Option<usize>,
) -> Result<FluctuationSample> {
    let (n_a, n_b, t_b) = chi.number_moments(b_weights);
    let all = chi.sector_norms();
    let mut sector_norms = [0.0; REPORTED_SECTORS];
    for (k, v) in all.iter().take(REPORTED_SECTORS).enumerate() {
        sector_norms[k] = *v;
    }
    Ok(FluctuationSample {
        t,
        norm: chi.norm(),
        n_a,
        n_b,
        t_b,
        orthogonality_defect: orthogonality_defect(chi, &ctx.lattice.grid, psi)?,
        sector_norms,
        leakage: cutoff.map_or(0.0, |m| chi.leakage(m)),
    })
}

fn evolve(
    template: &mut HamiltonianTemplate,
    initial: DoubleFockState,
    trajectory: &LpTrajectory,
    ctx: &KernelContext,
    opts: &FluctuationOptions,
) -> Result<FluctuationRun> {
    let steps = step_count(opts.horizon, opts.dt)?;
    let t0 = trajectory.start();
    let b_weights = ctx.lattice.grid.laplacian_spectrum();
    let cutoff = template.cutoff();
    let mut chi = initial;
    let mut samples = vec![sample(&chi, t0, ctx, &trajectory.at(t0)?.psi, &b_weights, cutoff)?];
    let mut states = Vec::new();
    if opts.keep_states {
        states.push(chi.clone());
    }
    for n in 0..steps {
        let mid = trajectory.at(t0 + (n as f64 + 0.5) * opts.dt)?;
        let kernels = ctx.build(&mid.psi, &mid.phi)?;
        let op = template.refill(&kernels)?;
        chi.coeffs = propagate(op, &chi.coeffs, opts.dt, &opts.krylov)?;
        if (n + 1) % opts.sample_every == 0 || n + 1 == steps {
            let t = t0 + (n + 1) as f64 * opts.dt;
            samples.push(sample(&chi, t, ctx, &trajectory.at(t)?.psi, &b_weights, cutoff)?);
            if opts.keep_states {
                states.push(chi.clone());
            }
        }
    }
    Ok(FluctuationRun { samples, states, final_state: chi })
}

/// Truncated Bogoliubov dynamics `i∂χ = 1_{𝒩≤M} H^B(t) 1_{𝒩≤M} χ` from `1_{𝒩≤M} χ`.
///
/// The run lives on the basis of `initial`, which may be larger than `M`; the
/// reported leakage is then a genuine measurement. The trajectory must be
/// sampled at half steps and start at the initial time.
pub fn evolve_bogoliubov(
    initial: &DoubleFockState,
    trajectory: &LpTrajectory,
    ctx: &KernelContext,
    cutoff: usize,
    opts: &FluctuationOptions,
) -> Result<FluctuationRun> {
    let mut template =
        HamiltonianTemplate::new(initial.basis.clone(), &ctx.lattice.modes, Generator::Bogoliubov, Some(cutoff))?;
    evolve(&mut template, initial.project_total(cutoff), trajectory, ctx, opts)
}

/// Full fluctuation dynamics `i∂χ = H(t) χ` for `particles` bosons.
pub fn evolve_fluctuation(
    initial: &DoubleFockState,
    trajectory: &LpTrajectory,
    ctx: &KernelContext,
    particles: usize,
    opts: &FluctuationOptions,
) -> Result<FluctuationRun> {
    let excess = initial.b_leakage(particles);
    if excess > 0.0 {
        return Err(Error::SectorSupport(format!("initial state has weight {excess:e} above N_b = {particles}")));
    }
    let mut template =
        HamiltonianTemplate::new(initial.basis.clone(), &ctx.lattice.modes, Generator::Full { particles }, None)?;
    evolve(&mut template, initial.clone(), trajectory, ctx, opts)
}
