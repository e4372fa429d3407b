//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its criterion
//! straight to stdout, so the verdicts are visible without `--nocapture`.

use std::io::Write;
use std::time::Instant;

use polaron::harness::checks::{
    cross_propagator_distance, cutoff_for_tail, excitation_round_trip, lp_conservation, lp_gaussian_instance,
    orthogonality_defects, richardson_ratio, sector_invariance, weyl_defects, CrossStart, FluctuationInstance,
    WEYL_AMPLITUDE, WEYL_TAIL,
};
use polaron::harness::{fit_rate, run, strictly_decreasing, ExperimentConfig, RunMode, TREND_TOLERANCE};
use polaron::landau_pekar::{PhiPreset, PsiPreset};
use polaron::lattice::Lattice;

fn verdict(criterion: u32, title: &str, pass: bool, detail: String, started: Instant) {
    let line = format!(
        "criterion {criterion:>2} {} {title}: {detail} [{:.1}s]\n",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "{line}");
}

#[test]
fn c01_lp_conservation() {
    let t0 = Instant::now();
    let (system, init) = lp_gaussian_instance(256, 1.0, 0.25).unwrap();
    let c = lp_conservation(&system, &init, 5.0, 1e-3).unwrap();
    let ratio = richardson_ratio(&system, &init, 5.0, 1e-3).unwrap();
    let pass = (c.final_state.t - 5.0).abs() < 1e-9
        && c.mass_drift < 1e-10
        && c.relative_energy_drift < 1e-6
        && (ratio - 4.0).abs() <= 0.8;
    verdict(
        1,
        "LP conservation",
        pass,
        format!(
            "mass drift {:.2e} (<1e-10), relative energy drift {:.2e} (<1e-6), Richardson ratio {ratio:.3} (4 +- 0.8)",
            c.mass_drift, c.relative_energy_drift
        ),
        t0,
    );
}

#[test]
fn c02_growth_monitors() {
    let t0 = Instant::now();
    let (system, init) = lp_gaussian_instance(256, 1.0, 0.25).unwrap();
    let run = system.evolve(&init, 10.0, 1e-3, 10).unwrap();
    let early = |f: &dyn Fn(&polaron::landau_pekar::LPDiagnostics) -> f64| {
        run.samples.iter().filter(|d| d.t <= 1.0 + 1e-9).map(f).fold(0.0, f64::max)
    };
    let late = |f: &dyn Fn(&polaron::landau_pekar::LPDiagnostics) -> f64| run.samples.iter().map(f).fold(0.0, f64::max);
    let phi = |d: &polaron::landau_pekar::LPDiagnostics| d.l2_2 / (1.0 + d.t.powi(3));
    let psi = |d: &polaron::landau_pekar::LPDiagnostics| d.h3 / (1.0 + d.t.powi(4));
    let (phi_early, phi_all) = (early(&phi), late(&phi));
    let (psi_early, psi_all) = (early(&psi), late(&psi));
    let finite = run.samples.iter().all(|d| d.h3.is_finite() && d.l2_2.is_finite());
    let pass = finite && phi_early > 0.0 && phi_all <= 10.0 * phi_early && psi_all <= 10.0 * psi_early;
    verdict(
        2,
        "growth monitors",
        pass,
        format!(
            "max phi L2_2/(1+t^3) {phi_all:.3e} vs 10 x {phi_early:.3e}; max psi H3/(1+t^4) {psi_all:.3e} vs 10 x {psi_early:.3e}"
        ),
        t0,
    );
}

#[test]
fn c03_weyl_ccr() {
    let t0 = Instant::now();
    let n_max = cutoff_for_tail(&[WEYL_AMPLITUDE], WEYL_TAIL);
    let d = weyl_defects(WEYL_AMPLITUDE, n_max).unwrap();
    let pass = d.tail < 1e-8 && d.shift < 1e-7 && d.inverse < 1e-8 && d.number < 1e-7;
    verdict(
        3,
        "Weyl/CCR",
        pass,
        format!(
            "n_max {n_max}, tail {:.1e} (<1e-8); shift {:.2e} (<1e-7), W(f)W(-f)-1 {:.2e} (<1e-8), mean number {:.2e} (<1e-7)",
            d.tail, d.shift, d.inverse, d.number
        ),
        t0,
    );
}

#[test]
fn c04_excitation_round_trip() {
    let t0 = Instant::now();
    let r = excitation_round_trip(3, 4, 20, 2024).unwrap();
    let pass = r.round_trip < 1e-8 && r.isometry < 1e-8;
    verdict(
        4,
        "excitation-map round trip and isometry",
        pass,
        format!("{} random states: round trip {:.2e} (<1e-8), isometry {:.2e} (<1e-8)", r.states, r.round_trip, r.isometry),
        t0,
    );
}

#[test]
fn c05_cross_propagator() {
    let t0 = Instant::now();
    let pekar = FluctuationInstance::cosine(0.3, &PhiPreset::Zero, 1.0, 1.0, 1e-3, 4).unwrap();
    let d_pekar = cross_propagator_distance(&pekar, 3, 4, CrossStart::Vacuum, 1e-3, 1.0).unwrap();
    let lat = Lattice::new(1, 1.0, 4, Some(1.0)).unwrap();
    let psi = PsiPreset::Uniform.build(&lat.grid).unwrap();
    let phi = PhiPreset::Zero.build(&lat.modes).unwrap();
    let uniform = FluctuationInstance::with_fields(lat, psi, phi, 1.0, 1.0, 1e-3, 4).unwrap();
    let d_random = cross_propagator_distance(&uniform, 3, 4, CrossStart::Random { seed: 9 }, 1e-3, 1.0).unwrap();
    let pass = d_pekar < 1e-5 && d_random < 1e-5;
    verdict(
        5,
        "cross-propagator equality",
        pass,
        format!("Pekar start {d_pekar:.2e} (<1e-5), random start on uniform condensate {d_random:.2e} (<1e-5)"),
        t0,
    );
}

#[test]
fn c06_sector_invariance() {
    let t0 = Instant::now();
    let inst = FluctuationInstance::cosine(0.3, &PhiPreset::Gaussian { amplitude: 0.2, width: 2.0 }, 1.0, 2.0, 1e-3, 2).unwrap();
    let run = sector_invariance(&inst, 6, 8, 1e-3, 2.0, 17).unwrap();
    let pass = run.max_leakage() == 0.0 && run.norm_drift() < 1e-8;
    verdict(
        6,
        "sector invariance",
        pass,
        format!(
            "M = 6 on a basis up to 8: leakage {:e} (= 0), norm drift {:.2e} (<1e-8)",
            run.max_leakage(),
            run.norm_drift()
        ),
        t0,
    );
}

#[test]
fn c07_orthogonality() {
    let t0 = Instant::now();
    let dt = 2.5e-4;
    let inst = FluctuationInstance::cosine(0.1, &PhiPreset::Zero, 1.0, 2.0, dt, 1).unwrap();
    let d = orthogonality_defects(&inst, 6, 3, 4, dt, 2.0, 40).unwrap();
    let pass = d.bogoliubov < 1e-7 && d.fluctuation < 1e-7;
    verdict(
        7,
        "orthogonality preservation",
        pass,
        format!(
            "dt {dt:e}, T 2: Bogoliubov {:.2e}, fluctuation {:.2e} (<1e-7 at every sample)",
            d.bogoliubov, d.fluctuation
        ),
        t0,
    );
}

const SWEEP: &str = "\
[model]
d = 1
L = 1
n = 4
uv_cutoff = 1
alpha = ALPHA
N = PARTICLES
n_max = NMAX
M = CUTOFFS

[initial]
psi = cosine
psi.amplitude = 0.3
phi = PHI

[integrator]
dt = 0.001
T = HORIZON
sample_every = EVERY
";

fn sweep(alpha: &str, particles: &str, n_max: &str, cutoffs: &str, phi: &str, horizon: &str, every: &str) -> ExperimentConfig {
    let text = SWEEP
        .replace("ALPHA", alpha)
        .replace("PARTICLES", particles)
        .replace("NMAX", n_max)
        .replace("CUTOFFS", cutoffs)
        .replace("PHI", phi)
        .replace("HORIZON", horizon)
        .replace("EVERY", every);
    ExperimentConfig::parse(&text).unwrap()
}

#[test]
fn c08_m_refinement() {
    let t0 = Instant::now();
    let cfg = sweep("10", "2", "4", "4, 6, 8, 10, 12", "zero", "1", "1000");
    let bundle = run(&cfg, RunMode::BogEvolve).unwrap();
    let s = &bundle.summary;
    let ms: Vec<f64> = s.refinement.iter().map(|r| r.0 as f64).collect();
    let ds: Vec<f64> = s.refinement.iter().map(|r| r.1).collect();
    let fit = fit_rate(&ms, &ds).unwrap();
    let pass = s.failed.is_empty() && ms == [4.0, 6.0, 8.0, 10.0] && strictly_decreasing(&ds, TREND_TOLERANCE) && fit.slope < 0.0;
    verdict(
        8,
        "M-refinement trend",
        pass,
        format!(
            "distances to M = 12 at t = 1: {}; log-log slope {:.3} (<0)",
            ds.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(", "),
            fit.slope
        ),
        t0,
    );
}

fn n_sweep() -> polaron::harness::Bundle {
    let cfg = sweep("1", "2, 3, 4, 5, 6", "8", "8", "zero", "1", "250");
    run(&cfg, RunMode::Compare).unwrap()
}

#[test]
fn c09_mean_field_trend() {
    let t0 = Instant::now();
    let bundle = n_sweep();
    let s = &bundle.summary;
    let exact: Vec<_> = s.exact.iter().map(|o| o.result.clone().unwrap()).collect();
    let ns: Vec<f64> = exact.iter().map(|e| e.particles as f64).collect();
    let b: Vec<f64> = exact.iter().map(|e| e.b).collect();
    let sob: Vec<f64> = exact.iter().map(|e| e.sobolev_trace_distance).collect();
    let tr: Vec<f64> = exact.iter().map(|e| e.trace_distance).collect();
    let fb = fit_rate(&ns, &b).unwrap();
    let fs = fit_rate(&ns, &sob).unwrap();
    let ft = fit_rate(&ns, &tr).unwrap();
    let pass = strictly_decreasing(&b, TREND_TOLERANCE)
        && strictly_decreasing(&sob, TREND_TOLERANCE)
        && fb.slope < 0.0
        && fs.slope < 0.0;
    let band = if (ft.slope + 0.5).abs() <= 0.4 { "inside" } else { "outside" };
    verdict(
        9,
        "mean-field trend in N",
        pass,
        format!(
            "b at t = 1: {} (slope {:.3}); Sobolev trace distance: {} (slope {:.3}); trace-distance slope {:.3} {band} -0.5 +- 0.4 (informational)",
            b.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", "),
            fb.slope,
            sob.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", "),
            fs.slope,
            ft.slope
        ),
        t0,
    );
}

#[test]
fn c10_bogoliubov_correction_trend() {
    let t0 = Instant::now();
    let bundle = n_sweep();
    let s = &bundle.summary;
    let cells: Vec<_> = s.cells.iter().map(|o| o.result.clone().unwrap()).collect();
    let dist: Vec<f64> = cells.iter().map(|c| c.distance_bogoliubov).collect();
    let top = cells.last().unwrap();
    let ns: Vec<f64> = cells.iter().map(|c| c.particles as f64).collect();
    let fit = fit_rate(&ns, &dist).unwrap();
    let pass = strictly_decreasing(&dist, TREND_TOLERANCE) && top.distance_bogoliubov < top.distance_pekar;
    verdict(
        10,
        "Bogoliubov-corrected trend in N",
        pass,
        format!(
            "|Psi - Psi^B| at t = 1: {} (slope {:.3}); at N = {}: {:.3e} < Pekar {:.3e}",
            dist.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", "),
            fit.slope,
            top.particles,
            top.distance_bogoliubov,
            top.distance_pekar
        ),
        t0,
    );
}

#[test]
fn c11_decoupled_baseline() {
    let t0 = Instant::now();
    let cfg = sweep("0", "2, 3", "8", "4", "gaussian\nphi.amplitude = 0.3\nphi.width = 2", "2", "100");
    let bundle = run(&cfg, RunMode::Compare).unwrap();
    let s = &bundle.summary;
    let mut worst: f64 = 0.0;
    for (path, csv) in &bundle.files {
        let p = path.to_string_lossy();
        let columns: &[usize] = if p.starts_with("exact/") {
            &[3, 4]
        } else if p.starts_with("cells/") {
            &[1]
        } else {
            continue;
        };
        for row in csv.lines().skip(1) {
            let v: Vec<f64> = row.split(',').map(|x| x.parse().unwrap()).collect();
            assert!(v[0] <= 2.0 + 1e-12);
            for &c in columns {
                worst = worst.max(v[c]);
            }
        }
    }
    let pass = s.failed.is_empty() && s.pass && worst < 1e-8;
    verdict(
        11,
        "decoupled baseline",
        pass,
        format!("largest of a, b and |Psi - Psi^B| over t <= 2: {worst:.2e} (<1e-8); report verdict {}", s.pass),
        t0,
    );
}
