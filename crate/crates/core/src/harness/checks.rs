//! Invariant batteries at pinned small sizes.
//!
//! Each measurement is exposed on its own so that longer runs can reuse it with
//! other parameters; [`check`] bundles them into named suites.

use std::sync::Arc;

use serde::Serialize;

use crate::bogoliubov::{
    evolve_bogoliubov, evolve_fluctuation, orthogonal_projection, plane_wave_coefficients, DoubleFockBasis,
    DoubleFockState, FluctuationOptions, FluctuationRun, KernelContext,
};
use crate::excitation::{condensate_frame, ExcitationFrame};
use crate::fock::{
    coherent_tail, distance, ladder_operator, norm, number_operator, propagate, KrylovOptions,
    LinearOperator, OccupationBasis, WeylOperator,
};
use crate::froehlich_exact::{assemble_froehlich, FroehlichParams, ManyBodyState};
use crate::landau_pekar::{LPState, LpSystem, LpTrajectory, PhiPreset, PsiPreset};
use crate::lattice::{GridField, Lattice, ModeAmplitudes};
use crate::{Error, Result, C64};

/// Names accepted by [`check`].
pub const SUITES: [&str; 7] =
    ["weyl", "ccr", "lp-conservation", "excitation-roundtrip", "sector-invariance", "orthogonality", "cross-propagator"];

/// One measured defect and the tolerance it was tested at.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckItem {
    /// Passes when `measured < tolerance`.
    pub fn below(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        CheckItem { name: name.into(), measured, tolerance, pass: measured < tolerance }
    }

    /// Passes when `measured` is exactly zero.
    pub fn zero(name: impl Into<String>, measured: f64) -> Self {
        CheckItem { name: name.into(), measured, tolerance: 0.0, pass: measured == 0.0 }
    }

    /// Passes when `|measured − target| ≤ tolerance`.
    pub fn near(name: impl Into<String>, measured: f64, target: f64, tolerance: f64) -> Self {
        CheckItem { name: name.into(), measured, tolerance, pass: (measured - target).abs() <= tolerance }
    }

    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        format!("{verdict} {}: measured {:.3e}, tolerance {:.1e}", self.name, self.measured, self.tolerance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub suite: String,
    pub checks: Vec<CheckItem>,
    pub pass: bool,
}

impl CheckReport {
    fn new(suite: &str, checks: Vec<CheckItem>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        CheckReport { suite: suite.to_string(), checks, pass }
    }

    pub fn lines(&self) -> String {
        let mut out = format!("[{}] {}\n", self.suite, if self.pass { "pass" } else { "FAIL" });
        for c in &self.checks {
            out.push_str("  ");
            out.push_str(&c.line());
            out.push('\n');
        }
        out
    }
}

/// Runs one named suite.
pub fn check(suite: &str) -> Result<CheckReport> {
    let checks = match suite {
        "weyl" => weyl_suite()?,
        "ccr" => ccr_suite()?,
        "lp-conservation" => lp_suite()?,
        "excitation-roundtrip" => roundtrip_suite()?,
        "sector-invariance" => sector_suite()?,
        "orthogonality" => orthogonality_suite()?,
        "cross-propagator" => cross_suite()?,
        other => return Err(Error::UnknownSuite(other.to_string())),
    };
    Ok(CheckReport::new(suite, checks))
}

/// Smallest cutoff whose coherent tail for `f` is below `tail`.
pub fn cutoff_for_tail(f: &[C64], tail: f64) -> usize {
    (0..).find(|&n| coherent_tail(f, n) < tail).expect("Poisson tails vanish")
}

/// Weyl identities on a single mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeylDefects {
    pub n_max: usize,
    pub tail: f64,
    /// `max_v ‖W(f)* a W(f) v − (a + f) v‖` over low-lying probes `v`.
    pub shift: f64,
    /// `‖W(f) W(−f) v − v‖` for a generic `v`.
    pub inverse: f64,
    /// `|⟨W(f)Ω, 𝒩 W(f)Ω⟩ − |f|²|`.
    pub number: f64,
}

pub fn weyl_defects(f: C64, n_max: usize) -> Result<WeylDefects> {
    let basis = Arc::new(OccupationBasis::at_most(1, n_max));
    let w = WeylOperator::new(&basis, &[f])?;
    let w_inv = WeylOperator::new(&basis, &[-f])?;
    let a = ladder_operator(&basis, 0, false)?;
    let dim = basis.dim();
    let apply_a = |v: &[C64]| {
        let mut out = vec![C64::new(0.0, 0.0); dim];
        a.apply(v, &mut out);
        out
    };

    let mut probes = Vec::new();
    for k in 0..3.min(dim) {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[k] = C64::new(1.0, 0.0);
        probes.push(v);
    }
    probes.push(WeylOperator::new(&basis, &[C64::new(0.2, -0.3)])?.apply(&probes[0])?);
    let mut shift: f64 = 0.0;
    for v in &probes {
        let lhs = w_inv.apply(&apply_a(&w.apply(v)?))?;
        let rhs: Vec<C64> = apply_a(v).iter().zip(v).map(|(x, y)| x + f * y).collect();
        shift = shift.max(distance(&lhs, &rhs));
    }

    let generic: Vec<C64> =
        (0..dim).map(|i| C64::new((0.7 * i as f64).sin(), (1.3 * i as f64).cos()) / (1.0 + i as f64)).collect();
    let scale = norm(&generic);
    let back = w.apply(&w_inv.apply(&generic)?)?;
    let inverse = distance(&back, &generic) / scale;

    let coherent = w.apply(&probes[0])?;
    let n_op = number_operator(&basis, None)?;
    let number = (n_op.expectation(&coherent).re - f.norm_sqr()).abs();
    Ok(WeylDefects { n_max, tail: w.tail(), shift, inverse, number })
}

/// Displacement used by the Weyl suite.
pub const WEYL_AMPLITUDE: C64 = C64::new(0.9, -0.6);
/// Coherent tail targeted by the Weyl suite cutoff. Displaced number states need the margin.
pub const WEYL_TAIL: f64 = 1e-24;

fn weyl_suite() -> Result<Vec<CheckItem>> {
    let n_max = cutoff_for_tail(&[WEYL_AMPLITUDE], WEYL_TAIL);
    let d = weyl_defects(WEYL_AMPLITUDE, n_max)?;
    Ok(vec![
        CheckItem::below("coherent tail", d.tail, 1e-8),
        CheckItem::below("shift property", d.shift, 1e-7),
        CheckItem::below("W(f)W(-f) = 1", d.inverse, 1e-8),
        CheckItem::below("coherent mean number", d.number, 1e-7),
    ])
}

/// Canonical commutation relations and the Weyl product rule on a multi-mode truncated space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CcrDefects {
    /// `max ‖([a_m, a*_n] − δ_mn) v‖` over `v` below the top sector.
    pub mixed: f64,
    /// `max ‖[a_m, a_n] v‖`.
    pub annihilators: f64,
    /// `‖W(f)W(g)Ω − e^{−i Im⟨f,g⟩} W(f+g)Ω‖`.
    pub product_rule: f64,
}

pub fn ccr_defects(modes: usize, n_max: usize) -> Result<CcrDefects> {
    let basis = OccupationBasis::at_most(modes, n_max);
    let dim = basis.dim();
    let v: Vec<C64> = (0..dim)
        .map(|i| if basis.total(i) < n_max { C64::new((i as f64).sin(), (2.0 * i as f64).cos()) } else { C64::new(0.0, 0.0) })
        .collect();
    let lower: Vec<_> = (0..modes).map(|m| ladder_operator(&basis, m, false)).collect::<Result<_>>()?;
    let raise: Vec<_> = (0..modes).map(|m| ladder_operator(&basis, m, true)).collect::<Result<_>>()?;
    let apply = |op: &dyn LinearOperator, x: &[C64]| {
        let mut y = vec![C64::new(0.0, 0.0); dim];
        op.apply(x, &mut y);
        y
    };
    let mut mixed: f64 = 0.0;
    let mut annihilators: f64 = 0.0;
    for m in 0..modes {
        for n in 0..modes {
            let ac = apply(&lower[m], &apply(&raise[n], &v));
            let ca = apply(&raise[n], &apply(&lower[m], &v));
            let delta = if m == n { 1.0 } else { 0.0 };
            let diff: Vec<C64> = (0..dim).map(|i| ac[i] - ca[i] - v[i] * delta).collect();
            mixed = mixed.max(norm(&diff));
            let aa = apply(&lower[m], &apply(&lower[n], &v));
            let bb = apply(&lower[n], &apply(&lower[m], &v));
            annihilators = annihilators.max(distance(&aa, &bb));
        }
    }

    let f: Vec<C64> = (0..modes).map(|m| C64::new(0.3 / (1.0 + m as f64), 0.1 * m as f64)).collect();
    let g: Vec<C64> = (0..modes).map(|m| C64::new(-0.1 * m as f64, 0.25)).collect();
    let mut vac = vec![C64::new(0.0, 0.0); dim];
    vac[0] = C64::new(1.0, 0.0);
    let fg = WeylOperator::new(&basis, &f)?.apply(&WeylOperator::new(&basis, &g)?.apply(&vac)?)?;
    let sum: Vec<C64> = f.iter().zip(&g).map(|(x, y)| x + y).collect();
    let phase = C64::from_polar(1.0, -f.iter().zip(&g).map(|(x, y)| (x.conj() * y).im).sum::<f64>());
    let direct: Vec<C64> = WeylOperator::new(&basis, &sum)?.apply(&vac)?.iter().map(|z| z * phase).collect();
    Ok(CcrDefects { mixed, annihilators, product_rule: distance(&fg, &direct) })
}

fn ccr_suite() -> Result<Vec<CheckItem>> {
    let d = ccr_defects(3, 16)?;
    Ok(vec![
        CheckItem::below("[a_m, a*_n] = delta below the cutoff", d.mixed, 1e-12),
        CheckItem::below("[a_m, a_n] = 0", d.annihilators, 1e-12),
        CheckItem::below("Weyl product rule", d.product_rule, 1e-8),
    ])
}

/// Conservation drifts of one Landau–Pekar run.
#[derive(Clone, Debug, PartialEq)]
pub struct LpConservation {
    pub mass_drift: f64,
    pub relative_energy_drift: f64,
    pub final_state: LPState,
}

/// Gaussian condensate at rest and `φ = 0` on the one-dimensional unit torus with `points` sites.
pub fn lp_gaussian_instance(points: usize, alpha: f64, width: f64) -> Result<(LpSystem, LPState)> {
    let lat = Lattice::new(1, 1.0, points, None)?;
    let system = LpSystem::new(&lat, alpha)?;
    let psi = PsiPreset::Gaussian { center: [0.5, 0.0, 0.0], width, momentum: [0; 3] }.build(&lat.grid)?;
    let phi = PhiPreset::Zero.build(&lat.modes)?;
    let init = system.state(psi, phi)?;
    Ok((system, init))
}

pub fn lp_conservation(system: &LpSystem, init: &LPState, horizon: f64, dt: f64) -> Result<LpConservation> {
    let sample_every = ((0.01 / dt).round() as usize).max(1);
    let run = system.evolve(init, horizon, dt, sample_every)?;
    Ok(LpConservation {
        mass_drift: run.mass_drift(),
        relative_energy_drift: run.relative_energy_drift(),
        final_state: run.final_state,
    })
}

/// `‖u_dt − u_{dt/2}‖ / ‖u_{dt/2} − u_{dt/4}‖` for final states.
pub fn richardson_ratio(system: &LpSystem, init: &LPState, horizon: f64, dt: f64) -> Result<f64> {
    let finals: Vec<LPState> = [dt, dt / 2.0, dt / 4.0]
        .iter()
        .map(|&h| Ok(system.evolve(init, horizon, h, usize::MAX)?.final_state))
        .collect::<Result<_>>()?;
    Ok(system.state_distance(&finals[0], &finals[1]) / system.state_distance(&finals[1], &finals[2]))
}

fn lp_suite() -> Result<Vec<CheckItem>> {
    let (system, init) = lp_gaussian_instance(64, 1.0, 0.25)?;
    let c = lp_conservation(&system, &init, 1.0, 1e-3)?;
    let ratio = richardson_ratio(&system, &init, 0.5, 4e-3)?;
    Ok(vec![
        CheckItem::below("mass drift", c.mass_drift, 1e-10),
        CheckItem::below("relative energy drift", c.relative_energy_drift, 1e-6),
        CheckItem::near("Richardson ratio", ratio, 4.0, 0.8),
    ])
}

/// Worst round-trip and isometry defects of the excitation map over random states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RoundTrip {
    pub states: usize,
    pub round_trip: f64,
    pub isometry: f64,
}

/// Four sites, two phonon modes and a Gaussian condensate with a weak coherent field.
pub fn small_instance() -> Result<(Lattice, GridField, ModeAmplitudes)> {
    let lat = Lattice::new(1, 1.0, 4, Some(1.0))?;
    let psi = PsiPreset::Gaussian { center: [0.35, 0.0, 0.0], width: 0.3, momentum: [1, 0, 0] }.build(&lat.grid)?;
    let phi = PhiPreset::Gaussian { amplitude: 0.15, width: 2.0 }.build(&lat.modes)?;
    Ok((lat, psi, phi))
}

pub fn excitation_round_trip(particles: usize, n_max: usize, states: usize, seed: u64) -> Result<RoundTrip> {
    let (lat, psi, phi) = small_instance()?;
    let params = FroehlichParams::new(lat.clone(), particles, 1.0, n_max)?;
    let (basis, _) = assemble_froehlich(&params)?;
    let frame = ExcitationFrame::new(&lat, basis.clone(), &psi, &phi)?;
    let mut worst = RoundTrip { states, round_trip: 0.0, isometry: 0.0 };
    for k in 0..states {
        let state = ManyBodyState::random(basis.clone(), seed + k as u64);
        let chi = frame.forward(&state)?;
        let back = frame.inverse(&chi)?;
        worst.round_trip = worst.round_trip.max(distance(&back.coeffs, &state.coeffs));
        worst.isometry = worst.isometry.max((chi.norm() - state.norm()).abs());
    }
    Ok(worst)
}

fn roundtrip_suite() -> Result<Vec<CheckItem>> {
    let r = excitation_round_trip(3, 4, 5, 11)?;
    Ok(vec![
        CheckItem::below("inverse(map(state)) = state", r.round_trip, 1e-8),
        CheckItem::below("map is isometric", r.isometry, 1e-8),
    ])
}

/// Landau–Pekar data and trajectory for fluctuation runs on the four-site lattice.
#[derive(Clone, Debug)]
pub struct FluctuationInstance {
    pub lattice: Lattice,
    pub alpha: f64,
    pub initial: LPState,
    pub trajectory: LpTrajectory,
    pub context: KernelContext,
}

impl FluctuationInstance {
    /// `ψ ∝ 1 + ε cos(2πx)`, `φ` from `phi`, trajectory sampled at `dt / 2` with `substeps` Strang steps each.
    pub fn cosine(epsilon: f64, phi: &PhiPreset, alpha: f64, horizon: f64, dt: f64, substeps: usize) -> Result<Self> {
        let lattice = Lattice::new(1, 1.0, 4, Some(1.0))?;
        let psi = PsiPreset::Cosine { amplitude: epsilon, momentum: [1, 0, 0] }.build(&lattice.grid)?;
        let phi = phi.build(&lattice.modes)?;
        Self::with_fields(lattice, psi, phi, alpha, horizon, dt, substeps)
    }

    pub fn with_fields(
        lattice: Lattice,
        psi: GridField,
        phi: ModeAmplitudes,
        alpha: f64,
        horizon: f64,
        dt: f64,
        substeps: usize,
    ) -> Result<Self> {
        let system = LpSystem::new(&lattice, alpha)?;
        let initial = system.state(psi, phi)?;
        let trajectory = LpTrajectory::compute(&system, &initial, horizon, dt / 2.0, substeps)?;
        let context = KernelContext::new(&lattice, alpha)?;
        Ok(FluctuationInstance { lattice, alpha, initial, trajectory, context })
    }

    pub fn psi_pw(&self) -> Vec<C64> {
        plane_wave_coefficients(&self.lattice.grid, &self.initial.psi)
    }

    /// Random state on `basis` projected onto excitations orthogonal to the initial condensate.
    pub fn orthogonal_random(&self, basis: Arc<DoubleFockBasis>, seed: u64) -> Result<DoubleFockState> {
        let mut chi = orthogonal_projection(&DoubleFockState::random(basis, seed), &self.psi_pw())?;
        let n = chi.norm();
        chi.coeffs.iter_mut().for_each(|c| *c /= n);
        Ok(chi)
    }
}

/// Truncated Bogoliubov run on a basis larger than the cutoff, so leakage is measured.
pub fn sector_invariance(
    inst: &FluctuationInstance,
    cutoff: usize,
    basis_total: usize,
    dt: f64,
    horizon: f64,
    seed: u64,
) -> Result<FluctuationRun> {
    let basis = Arc::new(DoubleFockBasis::total(inst.lattice.grid.site_count(), inst.lattice.modes.len(), basis_total));
    let chi0 = inst.orthogonal_random(basis, seed)?.project_total(cutoff);
    let mut chi0 = chi0;
    let n = chi0.norm();
    chi0.coeffs.iter_mut().for_each(|c| *c /= n);
    evolve_bogoliubov(&chi0, &inst.trajectory, &inst.context, cutoff, &FluctuationOptions::new(horizon, dt).sample_every(10))
}

fn sector_suite() -> Result<Vec<CheckItem>> {
    let inst = FluctuationInstance::cosine(0.3, &PhiPreset::Zero, 1.0, 0.5, 1e-3, 2)?;
    let run = sector_invariance(&inst, 4, 6, 1e-3, 0.5, 3)?;
    Ok(vec![
        CheckItem::zero("leakage above M", run.max_leakage()),
        CheckItem::below("norm drift", run.norm_drift(), 1e-8),
    ])
}

/// Largest orthogonality defects along a truncated Bogoliubov flow and a full fluctuation flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrthogonalityDefects {
    pub bogoliubov: f64,
    pub fluctuation: f64,
    pub initial: f64,
}

pub fn orthogonality_defects(
    inst: &FluctuationInstance,
    cutoff: usize,
    particles: usize,
    n_max: usize,
    dt: f64,
    horizon: f64,
    sample_every: usize,
) -> Result<OrthogonalityDefects> {
    let s = inst.lattice.grid.site_count();
    let a = inst.lattice.modes.len();
    let opts = FluctuationOptions::new(horizon, dt).sample_every(sample_every);
    let chi_b = inst.orthogonal_random(Arc::new(DoubleFockBasis::total(s, a, cutoff)), 5)?;
    let bog = evolve_bogoliubov(&chi_b, &inst.trajectory, &inst.context, cutoff, &opts)?;
    let chi_f = inst.orthogonal_random(Arc::new(DoubleFockBasis::rectangular(s, a, particles, n_max)), 6)?;
    let fl = evolve_fluctuation(&chi_f, &inst.trajectory, &inst.context, particles, &opts)?;
    Ok(OrthogonalityDefects {
        bogoliubov: bog.max_orthogonality_defect(),
        fluctuation: fl.max_orthogonality_defect(),
        initial: bog.samples[0].orthogonality_defect.max(fl.samples[0].orthogonality_defect),
    })
}

fn orthogonality_suite() -> Result<Vec<CheckItem>> {
    let inst = FluctuationInstance::cosine(0.1, &PhiPreset::Zero, 1.0, 0.5, 2.5e-4, 1)?;
    let d = orthogonality_defects(&inst, 4, 2, 3, 2.5e-4, 0.5, 100)?;
    Ok(vec![
        CheckItem::below("initial defect", d.initial, 1e-12),
        CheckItem::below("Bogoliubov flow defect", d.bogoliubov, 1e-7),
        CheckItem::below("fluctuation flow defect", d.fluctuation, 1e-7),
    ])
}

/// Initial fluctuation vector of a cross-propagator comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CrossStart {
    /// `χ = Ω`, i.e. the Pekar product state.
    Vacuum,
    /// Random vector with no excitation in the condensate mode.
    Random { seed: u64 },
}

/// `‖U_N(T) e^{−iH^F T} U_N(0)* χ₀ − χ(T)‖` with `χ(T)` from the fluctuation generator.
pub fn cross_propagator_distance(
    inst: &FluctuationInstance,
    particles: usize,
    n_max: usize,
    start: CrossStart,
    dt: f64,
    horizon: f64,
) -> Result<f64> {
    let lat = &inst.lattice;
    let params = FroehlichParams::new(lat.clone(), particles, inst.alpha, n_max)?;
    let (basis, h) = assemble_froehlich(&params)?;
    let frame0 = ExcitationFrame::with_tail_tolerance(lat, basis.clone(), &inst.initial.psi, &inst.initial.phi, 1.0)?;
    let target = frame0.target_basis().clone();
    let chi0 = match start {
        CrossStart::Vacuum => DoubleFockState::vacuum(target),
        CrossStart::Random { seed } => {
            let (_, p0) = condensate_frame(frame0.condensate())?;
            let mut chi = DoubleFockState::random(target, seed);
            for i in 0..chi.coeffs.len() {
                if chi.basis.b_state(i)[p0] > 0 {
                    chi.coeffs[i] = C64::new(0.0, 0.0);
                }
            }
            let n = chi.norm();
            chi.coeffs.iter_mut().for_each(|c| *c /= n);
            chi
        }
    };
    let psi0 = frame0.inverse(&chi0)?;
    let psi_t = propagate(&h, &psi0.coeffs, horizon, &KrylovOptions::with_tol(1e-13))?;
    let end = inst.trajectory.at(inst.trajectory.start() + horizon)?;
    let frame_t = ExcitationFrame::with_tail_tolerance(lat, basis.clone(), &end.psi, &end.phi, 1.0)?;
    let via_exact = frame_t.forward(&ManyBodyState::new(basis, psi_t)?)?;
    let opts = FluctuationOptions::new(horizon, dt).sample_every(usize::MAX);
    let run = evolve_fluctuation(&chi0, &inst.trajectory, &inst.context, particles, &opts)?;
    Ok(distance(&via_exact.coeffs, &run.final_state.coeffs))
}

fn cross_suite() -> Result<Vec<CheckItem>> {
    let inst = FluctuationInstance::cosine(0.1, &PhiPreset::Zero, 1.0, 1.0, 1e-3, 4)?;
    let d = cross_propagator_distance(&inst, 3, 4, CrossStart::Vacuum, 1e-3, 1.0)?;
    Ok(vec![CheckItem::below("exact route = fluctuation route", d, 1e-6)])
}
