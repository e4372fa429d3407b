//! Sweep orchestration: Landau–Pekar, exact and Bogoliubov runs per cell, the
//! corrected states built from them, and the report bundle.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::bogoliubov::{
    evolve_bogoliubov, plane_wave_coefficients, DoubleFockBasis, DoubleFockState, FluctuationOptions, FluctuationRun,
    KernelContext,
};
use crate::excitation::{build_psi_b, ExcitationFrame};
use crate::fock::{distance, LinearOperator};
use crate::froehlich_exact::{
    assemble_froehlich, evolve_exact, functional_a, functional_b, reduced_density_particle, sobolev_trace_distance,
    trace_distance, FroehlichParams, ManyBodyBasis, ManyBodyState,
};
use crate::landau_pekar::{step_count, LPState, LpSystem, LpTrajectory};
use crate::lattice::Lattice;
use crate::{Error, Result, C64};

use super::config::{ChiSpec, ExperimentConfig, OutputFormat};
use super::fit::{fit_rate, strictly_decreasing, RateFit};

/// Which parts of the pipeline to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    LpEvolve,
    ExactEvolve,
    BogEvolve,
    /// Everything, plus corrected states and distances per `(N, M)` cell.
    Compare,
}

impl RunMode {
    fn exact(self) -> bool {
        matches!(self, RunMode::ExactEvolve | RunMode::Compare)
    }

    fn bogoliubov(self) -> bool {
        matches!(self, RunMode::BogEvolve | RunMode::Compare)
    }
}

/// Tolerance on consecutive differences when a sequence must strictly decrease.
pub const TREND_TOLERANCE: f64 = 1e-10;
/// Every coupling observable of a decoupled run must stay below this.
pub const DECOUPLED_TOLERANCE: f64 = 1e-8;
pub const MASS_TOLERANCE: f64 = 1e-10;
pub const ENERGY_TOLERANCE: f64 = 1e-6;
pub const NORM_TOLERANCE: f64 = 1e-8;

/// A quantitative statement of the report with the tolerance it was tested at.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Claim {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Informational claims do not affect the overall verdict.
    pub gating: bool,
}

impl Claim {
    fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Claim { name: name.into(), value, tolerance, pass: value < tolerance, gating: true }
    }

    fn exact_zero(name: &str, value: f64) -> Self {
        Claim { name: name.into(), value, tolerance: 0.0, pass: value == 0.0, gating: true }
    }

    /// `value` is the largest consecutive increment of `y`.
    fn decreasing(name: &str, y: &[f64]) -> Self {
        let value = y.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        Claim { name: name.into(), value, tolerance: TREND_TOLERANCE, pass: strictly_decreasing(y, TREND_TOLERANCE), gating: true }
    }

    fn informational(mut self) -> Self {
        self.gating = false;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpSummary {
    pub mass_drift: f64,
    pub relative_energy_drift: f64,
    pub final_h3: f64,
    pub final_l2_2: f64,
    pub final_f: f64,
}

/// Last-sample values of the exact trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactSummary {
    pub particles: usize,
    pub dim: usize,
    pub norm_drift: f64,
    pub relative_energy_drift: f64,
    pub a: f64,
    pub b: f64,
    pub sobolev_trace_distance: f64,
    pub trace_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BogoliubovSummary {
    pub cutoff: usize,
    pub dim: usize,
    pub norm_drift: f64,
    pub max_leakage: f64,
    pub max_orthogonality_defect: f64,
    pub n_a: f64,
    pub n_b: f64,
}

/// Last-sample values of the corrected-state comparison for one `(N, M)` cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub particles: usize,
    pub cutoff: usize,
    pub distance_bogoliubov: f64,
    pub distance_pekar: f64,
    pub max_distance_bogoliubov: f64,
    pub sector_tail: f64,
    pub phonon_tail: f64,
}

/// Outcome of one unit of work; failures carry the error text.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome<T> {
    pub name: String,
    pub status: &'static str,
    pub error: Option<String>,
    pub result: Option<T>,
}

impl<T> Outcome<T> {
    fn from_result(name: String, r: Result<T>) -> Self {
        match r {
            Ok(v) => Outcome { name, status: "ok", error: None, result: Some(v) },
            Err(e) => Outcome { name, status: "failed", error: Some(e.to_string()), result: None },
        }
    }

    fn ok(&self) -> Option<&T> {
        self.result.as_ref()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedFit {
    pub name: String,
    pub fit: RateFit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub mode: RunMode,
    pub lp: LpSummary,
    pub exact: Vec<Outcome<ExactSummary>>,
    pub bogoliubov: Vec<Outcome<BogoliubovSummary>>,
    pub cells: Vec<Outcome<CellSummary>>,
    /// `‖χ_M(T) − χ_{M_ref}(T)‖` for every `M` below the largest.
    pub refinement: Vec<(usize, f64)>,
    pub fits: Vec<NamedFit>,
    pub claims: Vec<Claim>,
    pub failed: Vec<String>,
    pub pass: bool,
}

/// A finished run: the summary plus every output file, keyed by relative path.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub summary: Summary,
    pub files: BTreeMap<PathBuf, String>,
}

impl Bundle {
    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary)? + "\n")
    }

    /// Writes the bundle to `dir` in one atomic step.
    pub fn write(&self, dir: &std::path::Path) -> Result<()> {
        let files: Vec<(PathBuf, String)> = self.files.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        super::io::write_tree_atomic(dir, &files)
    }

    /// One line per claim and failure.
    pub fn report_lines(&self) -> String {
        let mut out = String::new();
        for c in &self.summary.claims {
            let verdict = match (c.pass, c.gating) {
                (true, _) => "PASS",
                (false, true) => "FAIL",
                (false, false) => "INFO",
            };
            out.push_str(&format!("{verdict} {}: {:.6e} (tolerance {:.1e})\n", c.name, c.value, c.tolerance));
        }
        for f in &self.summary.failed {
            out.push_str(&format!("FAILED {f}\n"));
        }
        out
    }
}

/// Worker count from `POLARON_WORKERS`, defaulting to the available parallelism.
pub fn workers() -> usize {
    std::env::var("POLARON_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let v = (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128);
    usize::try_from(v).unwrap_or(usize::MAX)
}

/// Dimension of the many-body space for `particles` bosons on `sites` and `modes` phonons with total cutoff `n_max`.
pub fn many_body_dim(sites: usize, particles: usize, modes: usize, n_max: usize) -> usize {
    binomial(sites + particles - 1, particles).saturating_mul(binomial(modes + n_max, n_max))
}

fn memory_guard(cfg: &ExperimentConfig, lat: &Lattice, mode: RunMode) -> Result<()> {
    let s = lat.grid.site_count();
    let a = lat.modes.len();
    let limit = cfg.model.max_dim;
    if mode.exact() {
        for &n in &cfg.model.particles {
            let dim = many_body_dim(s, n, a, cfg.model.n_max);
            if dim > limit {
                return Err(Error::MemoryGuard { cell: format!("N={n}"), dim, limit });
            }
        }
    }
    if mode.bogoliubov() {
        for &m in &cfg.model.cutoffs {
            let dim = binomial(s + a + m, m);
            if dim > limit {
                return Err(Error::MemoryGuard { cell: format!("M={m}"), dim, limit });
            }
        }
    }
    Ok(())
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

struct ExactRun {
    basis: Arc<ManyBodyBasis>,
    times: Vec<f64>,
    states: Vec<ManyBodyState>,
    rows: Vec<Vec<f64>>,
    summary: ExactSummary,
}

const EXACT_HEADER: &str = "t,norm,energy,a,b,sobolev_trace_distance,trace_distance";

struct Shared<'a> {
    cfg: &'a ExperimentConfig,
    lattice: &'a Lattice,
    trajectory: &'a LpTrajectory,
    chi0: Option<&'a DoubleFockState>,
    keep_states: bool,
}

impl Shared<'_> {
    fn sample_steps(&self) -> Result<Vec<usize>> {
        let it = &self.cfg.integrator;
        let steps = step_count(it.horizon, it.dt)?;
        Ok((0..=steps).filter(|i| i % it.sample_every == 0 || *i == steps).collect())
    }

    fn lp_at(&self, t: f64) -> Result<&LPState> {
        self.trajectory.at(self.trajectory.start() + t)
    }

    fn frame(&self, basis: &Arc<ManyBodyBasis>, s: &LPState) -> Result<ExcitationFrame> {
        ExcitationFrame::with_tail_tolerance(self.lattice, basis.clone(), &s.psi, &s.phi, self.cfg.integrator.tail_tolerance)
    }

    fn exact(&self, particles: usize) -> Result<ExactRun> {
        let it = &self.cfg.integrator;
        let params = FroehlichParams::new(self.lattice.clone(), particles, self.cfg.model.alpha, self.cfg.model.n_max)?;
        let (basis, h) = assemble_froehlich(&params)?;
        let s0 = self.lp_at(0.0)?;
        let frame0 = self.frame(&basis, s0)?;
        let initial = match self.chi0 {
            Some(chi) => build_psi_b(&frame0, chi, it.defect_tolerance)?.state,
            None => frame0.inverse(&DoubleFockState::vacuum(frame0.target_basis().clone()))?,
        };
        let sample_steps = self.sample_steps()?;
        let grid = &self.lattice.grid;
        let mut times = Vec::new();
        let mut states = Vec::new();
        let mut rows = Vec::new();
        let mut next = 0;
        evolve_exact(&h, &initial, it.horizon, it.dt, it.krylov_tol, |t, state| {
            let step = (t / it.dt).round() as usize;
            if next < sample_steps.len() && sample_steps[next] == step {
                next += 1;
                let lp = self.lp_at(t)?;
                let gamma = reduced_density_particle(state)?;
                let psi_site = grid.site_amplitudes(&lp.psi);
                let f = self.lattice.modes.to_fock_amplitudes(&lp.phi);
                rows.push(vec![
                    t,
                    state.norm(),
                    h.expectation(&state.coeffs).re,
                    functional_a(grid, &gamma, &psi_site),
                    functional_b(state, &f)?,
                    sobolev_trace_distance(grid, &gamma, &psi_site),
                    trace_distance(&gamma, &psi_site),
                ]);
                times.push(t);
                if self.keep_states {
                    states.push(state.clone());
                }
            }
            Ok(())
        })?;
        let first = &rows[0];
        let last = rows.last().expect("at least one sample");
        let e0 = first[2];
        let escale = if e0 == 0.0 { 1.0 } else { e0.abs() };
        let summary = ExactSummary {
            particles,
            dim: basis.dim(),
            norm_drift: rows.iter().map(|r| (r[1] - first[1]).abs()).fold(0.0, f64::max),
            relative_energy_drift: rows.iter().map(|r| (r[2] - e0).abs() / escale).fold(0.0, f64::max),
            a: last[3],
            b: last[4],
            sobolev_trace_distance: last[5],
            trace_distance: last[6],
        };
        Ok(ExactRun { basis, times, states, rows, summary })
    }

    fn bogoliubov(&self, cutoff: usize) -> Result<FluctuationRun> {
        let it = &self.cfg.integrator;
        let s = self.lattice.grid.site_count();
        let a = self.lattice.modes.len();
        let basis = Arc::new(DoubleFockBasis::total(s, a, cutoff));
        let chi0 = match self.chi0 {
            Some(chi) => chi.project_total(cutoff).embed(basis)?,
            None => DoubleFockState::vacuum(basis),
        };
        let ctx = KernelContext::new(self.lattice, self.cfg.model.alpha)?;
        let mut opts = FluctuationOptions::new(it.horizon, it.dt).sample_every(it.sample_every);
        opts.krylov = crate::fock::KrylovOptions::with_tol(it.krylov_tol);
        if self.keep_states {
            opts = opts.keep_states();
        }
        evolve_bogoliubov(&chi0, self.trajectory, &ctx, cutoff, &opts)
    }

    fn compare(&self, exact: &ExactRun, bog: &FluctuationRun, cutoff: usize) -> Result<(CellSummary, Vec<Vec<f64>>)> {
        let mut rows = Vec::new();
        for (k, &t) in exact.times.iter().enumerate() {
            let lp = self.lp_at(t)?;
            let frame = self.frame(&exact.basis, lp)?;
            let corrected = build_psi_b(&frame, &bog.states[k], self.cfg.integrator.defect_tolerance)?;
            let pekar = frame.inverse(&DoubleFockState::vacuum(frame.target_basis().clone()))?;
            rows.push(vec![
                t,
                distance(&exact.states[k].coeffs, &corrected.state.coeffs),
                distance(&exact.states[k].coeffs, &pekar.coeffs),
                corrected.norm,
                corrected.sector_tail,
                corrected.phonon_tail,
                corrected.defect,
            ]);
        }
        let last = rows.last().expect("at least one sample");
        let summary = CellSummary {
            particles: exact.summary.particles,
            cutoff,
            distance_bogoliubov: last[1],
            distance_pekar: last[2],
            max_distance_bogoliubov: rows.iter().map(|r| r[1]).fold(0.0, f64::max),
            sector_tail: last[4],
            phonon_tail: last[5],
        };
        Ok((summary, rows))
    }
}

const CELL_HEADER: &str = "t,distance_bogoliubov,distance_pekar,norm_bogoliubov,sector_tail,phonon_tail,orthogonality_defect";

/// Initial fluctuation vector on the basis with the largest cutoff, or `None` for the vacuum.
fn initial_chi(cfg: &ExperimentConfig, lat: &Lattice, lp0: &LPState) -> Result<Option<DoubleFockState>> {
    let s = lat.grid.site_count();
    let a = lat.modes.len();
    let m_max = *cfg.model.cutoffs.iter().max().expect("validated nonempty");
    let basis = Arc::new(DoubleFockBasis::total(s, a, m_max));
    Ok(match &cfg.initial.chi {
        ChiSpec::Vacuum => None,
        ChiSpec::SingleExcitation { mode } => {
            if *mode >= s {
                return Err(Error::InvalidArgument(format!("chi.mode {mode} exceeds the {s} plane-wave modes")));
            }
            let psi = plane_wave_coefficients(&lat.grid, &lp0.psi);
            let overlap = psi[*mode].conj();
            let mut xi: Vec<C64> = psi.iter().map(|p| -p * overlap).collect();
            xi[*mode] += C64::new(1.0, 0.0);
            let n = crate::fock::norm(&xi);
            if n < 1e-12 {
                return Err(Error::InvalidArgument(format!("plane-wave mode {mode} is parallel to the condensate")));
            }
            xi.iter_mut().for_each(|z| *z /= n);
            Some(DoubleFockState::single_excitation(basis, &xi)?)
        }
        ChiSpec::File(_) => {
            let coeffs = cfg.chi_coefficients()?.expect("file preset");
            Some(DoubleFockState::new(basis, coeffs)?)
        }
    })
}

/// Runs `mode` for every cell of `cfg`.
///
/// Configuration, memory-guard and Landau–Pekar failures abort the run. Failures
/// of individual exact, Bogoliubov or comparison cells are recorded in the
/// summary and mark the run as failed. The result does not depend on the number
/// of workers.
pub fn run(cfg: &ExperimentConfig, mode: RunMode) -> Result<Bundle> {
    let lat = cfg.lattice()?;
    memory_guard(cfg, &lat, mode)?;
    let it = &cfg.integrator;
    let psi0 = cfg.psi_preset()?.build(&lat.grid)?;
    let phi0 = cfg.phi_preset()?.build(&lat.modes)?;
    let system = LpSystem::new(&lat, cfg.model.alpha)?;
    let init = system.state(psi0, phi0)?;

    let mut files = BTreeMap::new();
    let lp_run = system.evolve(&init, it.horizon, it.dt, it.sample_every)?;
    let last = lp_run.samples.last().expect("nonempty");
    let lp = LpSummary {
        mass_drift: lp_run.mass_drift(),
        relative_energy_drift: lp_run.relative_energy_drift(),
        final_h3: last.h3,
        final_l2_2: last.l2_2,
        final_f: last.ftime,
    };
    let mut lp_csv = String::from(crate::landau_pekar::LPDiagnostics::CSV_HEADER);
    lp_csv.push('\n');
    for d in &lp_run.samples {
        lp_csv.push_str(&d.csv_row());
        lp_csv.push('\n');
    }
    files.insert(PathBuf::from("lp/diagnostics.csv"), lp_csv);
    let mut claims = vec![
        Claim::below("LP mass drift", lp.mass_drift, MASS_TOLERANCE),
        Claim::below("LP relative energy drift", lp.relative_energy_drift, ENERGY_TOLERANCE),
    ];

    let mut summary = Summary {
        mode,
        lp,
        exact: Vec::new(),
        bogoliubov: Vec::new(),
        cells: Vec::new(),
        refinement: Vec::new(),
        fits: Vec::new(),
        claims: Vec::new(),
        failed: Vec::new(),
        pass: true,
    };

    if mode != RunMode::LpEvolve {
        let trajectory = LpTrajectory::compute(&system, &init, it.horizon, it.dt / 2.0, it.lp_substeps)?;
        let chi0 = initial_chi(cfg, &lat, &init)?;
        let shared = Shared { cfg, lattice: &lat, trajectory: &trajectory, chi0: chi0.as_ref(), keep_states: mode == RunMode::Compare };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers())
            .build()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;

        enum Unit {
            Exact(usize),
            Bog(usize),
        }
        enum Done {
            Exact(Result<ExactRun>),
            Bog(Result<FluctuationRun>),
        }
        let mut units = Vec::new();
        if mode.exact() {
            units.extend(cfg.model.particles.iter().map(|&n| Unit::Exact(n)));
        }
        if mode.bogoliubov() {
            units.extend(cfg.model.cutoffs.iter().map(|&m| Unit::Bog(m)));
        }
        let done: Vec<Done> = pool.install(|| {
            units
                .par_iter()
                .map(|u| match u {
                    Unit::Exact(n) => Done::Exact(shared.exact(*n)),
                    Unit::Bog(m) => Done::Bog(shared.bogoliubov(*m)),
                })
                .collect()
        });
        let mut exact_runs: Vec<(usize, Option<ExactRun>)> = Vec::new();
        let mut bog_runs: Vec<(usize, Option<FluctuationRun>)> = Vec::new();
        for (u, d) in units.iter().zip(done) {
            match (u, d) {
                (Unit::Exact(n), Done::Exact(r)) => {
                    let name = format!("exact N={n}");
                    let r = r.map(|run| {
                        files.insert(PathBuf::from(format!("exact/N{n}/observables.csv")), csv(EXACT_HEADER, run.rows.clone()));
                        run
                    });
                    let outcome = Outcome::from_result(name, r.as_ref().map(|x| x.summary.clone()).map_err(clone_err));
                    summary.exact.push(outcome);
                    exact_runs.push((*n, r.ok()));
                }
                (Unit::Bog(m), Done::Bog(r)) => {
                    let name = format!("bogoliubov M={m}");
                    let r = r.map(|run| {
                        files.insert(PathBuf::from(format!("bogoliubov/M{m}/observables.csv")), run.csv());
                        run
                    });
                    let outcome = Outcome::from_result(
                        name,
                        r.as_ref()
                            .map(|run| {
                                let last = run.samples.last().expect("nonempty");
                                BogoliubovSummary {
                                    cutoff: *m,
                                    dim: run.final_state.basis.dim(),
                                    norm_drift: run.norm_drift(),
                                    max_leakage: run.max_leakage(),
                                    max_orthogonality_defect: run.max_orthogonality_defect(),
                                    n_a: last.n_a,
                                    n_b: last.n_b,
                                }
                            })
                            .map_err(clone_err),
                    );
                    summary.bogoliubov.push(outcome);
                    bog_runs.push((*m, r.ok()));
                }
                _ => unreachable!("units and results are zipped in order"),
            }
        }

        for o in &summary.exact {
            if let Some(e) = o.ok() {
                claims.push(Claim::below(&format!("exact N={} norm drift", e.particles), e.norm_drift, NORM_TOLERANCE));
            }
        }
        for o in &summary.bogoliubov {
            if let Some(b) = o.ok() {
                claims.push(Claim::exact_zero(&format!("Bogoliubov M={} leakage", b.cutoff), b.max_leakage));
                claims.push(Claim::below(&format!("Bogoliubov M={} norm drift", b.cutoff), b.norm_drift, NORM_TOLERANCE));
                claims.push(Claim::below(
                    &format!("Bogoliubov M={} orthogonality defect", b.cutoff),
                    b.max_orthogonality_defect,
                    it.defect_tolerance,
                ));
            }
        }

        refinement_claims(&bog_runs, &mut summary, &mut claims)?;

        if mode == RunMode::Compare {
            let pairs: Vec<(usize, usize)> =
                exact_runs.iter().flat_map(|(n, _)| bog_runs.iter().map(move |(m, _)| (*n, *m))).collect();
            let cells: Vec<Result<(CellSummary, Vec<Vec<f64>>)>> = pool.install(|| {
                pairs
                    .par_iter()
                    .map(|(n, m)| {
                        let e = exact_runs.iter().find(|(k, _)| k == n).and_then(|(_, r)| r.as_ref());
                        let b = bog_runs.iter().find(|(k, _)| k == m).and_then(|(_, r)| r.as_ref());
                        match (e, b) {
                            (Some(e), Some(b)) => shared.compare(e, b, *m),
                            (None, _) => Err(Error::InvalidArgument(format!("exact run for N={n} failed"))),
                            (_, None) => Err(Error::InvalidArgument(format!("Bogoliubov run for M={m} failed"))),
                        }
                    })
                    .collect()
            });
            for ((n, m), r) in pairs.iter().zip(cells) {
                let r = r.map(|(s, rows)| {
                    files.insert(PathBuf::from(format!("cells/N{n}_M{m}/distance.csv")), csv(CELL_HEADER, rows));
                    s
                });
                summary.cells.push(Outcome::from_result(format!("cell N={n} M={m}"), r));
            }
            comparison_claims(cfg, &exact_runs, &mut summary, &mut claims)?;
        }
    }

    summary.failed = summary
        .exact
        .iter()
        .filter(|o| o.result.is_none())
        .map(|o| format!("{}: {}", o.name, o.error.clone().unwrap_or_default()))
        .chain(summary.bogoliubov.iter().filter(|o| o.result.is_none()).map(|o| format!("{}: {}", o.name, o.error.clone().unwrap_or_default())))
        .chain(summary.cells.iter().filter(|o| o.result.is_none()).map(|o| format!("{}: {}", o.name, o.error.clone().unwrap_or_default())))
        .collect();
    summary.pass = summary.failed.is_empty() && claims.iter().all(|c| c.pass || !c.gating);
    summary.claims = claims;

    if !cfg.output.formats.contains(&OutputFormat::Csv) {
        files.clear();
    }
    files.insert(PathBuf::from("config.txt"), cfg.to_text());
    let mut bundle = Bundle { summary, files };
    if cfg.output.formats.contains(&OutputFormat::Json) {
        let json = bundle.summary_json()?;
        bundle.files.insert(PathBuf::from("summary.json"), json);
    }
    Ok(bundle)
}

fn clone_err(e: &Error) -> Error {
    Error::InvalidArgument(e.to_string())
}

fn refinement_claims(
    bog_runs: &[(usize, Option<FluctuationRun>)],
    summary: &mut Summary,
    claims: &mut Vec<Claim>,
) -> Result<()> {
    let mut ok: Vec<(usize, &FluctuationRun)> = bog_runs.iter().filter_map(|(m, r)| r.as_ref().map(|r| (*m, r))).collect();
    ok.sort_by_key(|(m, _)| *m);
    if ok.len() < 2 || ok.len() != bog_runs.len() {
        return Ok(());
    }
    let (m_ref, reference) = *ok.last().expect("nonempty");
    let target = reference.final_state.basis.clone();
    for (m, run) in &ok[..ok.len() - 1] {
        let lifted = run.final_state.embed(target.clone())?;
        summary.refinement.push((*m, distance(&lifted.coeffs, &reference.final_state.coeffs)));
    }
    let ys: Vec<f64> = summary.refinement.iter().map(|r| r.1).collect();
    claims.push(Claim::decreasing(&format!("M-refinement distance to M={m_ref} decreasing in M"), &ys));
    if ys.len() >= 3 {
        let xs: Vec<f64> = summary.refinement.iter().map(|r| r.0 as f64).collect();
        if let Ok(fit) = fit_rate(&xs, &ys) {
            claims.push(Claim { name: "M-refinement log-log slope negative".into(), value: fit.slope, tolerance: 0.0, pass: fit.slope < 0.0, gating: true });
            summary.fits.push(NamedFit { name: "refinement distance vs M".into(), fit });
        }
    }
    Ok(())
}

fn comparison_claims(
    cfg: &ExperimentConfig,
    exact_runs: &[(usize, Option<ExactRun>)],
    summary: &mut Summary,
    claims: &mut Vec<Claim>,
) -> Result<()> {
    let decoupled = cfg.model.alpha == 0.0;
    let gate = |c: Claim| if decoupled { c.informational() } else { c };
    if decoupled {
        let mut worst: f64 = 0.0;
        for (_, r) in exact_runs {
            if let Some(r) = r {
                for row in &r.rows {
                    worst = worst.max(row[3]).max(row[4]);
                }
            }
        }
        for c in summary.cells.iter().filter_map(|c| c.ok()) {
            worst = worst.max(c.max_distance_bogoliubov);
        }
        claims.push(Claim::below("decoupled baseline: a, b and corrected-state distance", worst, DECOUPLED_TOLERANCE));
    }

    let mut ns: Vec<&ExactSummary> = summary.exact.iter().filter_map(|o| o.ok()).collect();
    ns.sort_by_key(|e| e.particles);
    if ns.len() < 2 || ns.len() != cfg.model.particles.len() {
        return Ok(());
    }
    let xs: Vec<f64> = ns.iter().map(|e| e.particles as f64).collect();
    let series: [(&str, Vec<f64>); 4] = [
        ("a", ns.iter().map(|e| e.a).collect()),
        ("b", ns.iter().map(|e| e.b).collect()),
        ("Sobolev trace distance", ns.iter().map(|e| e.sobolev_trace_distance).collect()),
        ("trace distance", ns.iter().map(|e| e.trace_distance).collect()),
    ];
    for (name, ys) in &series {
        if matches!(*name, "b" | "Sobolev trace distance") {
            claims.push(gate(Claim::decreasing(&format!("{name} at T decreasing in N"), ys)));
        }
        if xs.len() >= 3 {
            if let Ok(fit) = fit_rate(&xs, ys) {
                if matches!(*name, "b" | "Sobolev trace distance") {
                    claims.push(gate(Claim {
                        name: format!("{name} log-log slope in N negative"),
                        value: fit.slope,
                        tolerance: 0.0,
                        pass: fit.slope < 0.0,
                        gating: true,
                    }));
                }
                if *name == "trace distance" {
                    claims.push(
                        Claim {
                            name: "trace distance slope within 0.4 of -1/2".into(),
                            value: fit.slope,
                            tolerance: 0.4,
                            pass: (fit.slope + 0.5).abs() <= 0.4,
                            gating: true,
                        }
                        .informational(),
                    );
                }
                summary.fits.push(NamedFit { name: format!("{name} vs N"), fit });
            }
        }
    }

    let m_max = *cfg.model.cutoffs.iter().max().expect("nonempty");
    let mut cells: Vec<&CellSummary> = summary.cells.iter().filter_map(|c| c.ok()).filter(|c| c.cutoff == m_max).collect();
    cells.sort_by_key(|c| c.particles);
    if cells.len() == ns.len() {
        let ys: Vec<f64> = cells.iter().map(|c| c.distance_bogoliubov).collect();
        claims.push(gate(Claim::decreasing(&format!("corrected-state distance at T decreasing in N (M={m_max})"), &ys)));
        let top = cells.last().expect("nonempty");
        claims.push(gate(Claim {
            name: format!("corrected state beats Pekar product at N={}", top.particles),
            value: top.distance_bogoliubov - top.distance_pekar,
            tolerance: 0.0,
            pass: top.distance_bogoliubov < top.distance_pekar,
            gating: true,
        }));
        if xs.len() >= 3 {
            if let Ok(fit) = fit_rate(&xs, &ys) {
                summary.fits.push(NamedFit { name: format!("corrected-state distance vs N (M={m_max})"), fit });
            }
        }
    }
    Ok(())
}
