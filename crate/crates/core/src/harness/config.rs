//! Experiment configuration in a flat `key = value` format with `[section]` headers.
//!
//! ```text
//! [model]
//! d = 1
//! L = 1
//! n = 4
//! uv_cutoff = 1        # or `none`
//! alpha = 1
//! N = 2, 3, 4
//! n_max = 8
//! M = 8
//!
//! [initial]
//! psi = cosine
//! psi.amplitude = 0.3
//! psi.momentum = 1
//! phi = zero
//! chi = vacuum
//!
//! [integrator]
//! dt = 0.001
//! T = 1
//!
//! [output]
//! dir = out
//! formats = csv, json
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::landau_pekar::{step_count, PhiPreset, PsiPreset};
use crate::lattice::Lattice;
use crate::{Error, Result, C64};

use super::io::read_complex_pairs;

/// Initial condensate wave function.
#[derive(Clone, Debug, PartialEq)]
pub enum PsiSpec {
    Gaussian { center: [f64; 3], width: f64, momentum: [i64; 3] },
    Uniform,
    PlaneWave { momentum: [i64; 3] },
    Cosine { amplitude: f64, momentum: [i64; 3] },
    /// Grid samples read from a complex-pair file.
    File(PathBuf),
}

/// Initial classical field.
#[derive(Clone, Debug, PartialEq)]
pub enum PhiSpec {
    Zero,
    Constant(C64),
    Gaussian { amplitude: f64, width: f64 },
    /// One amplitude per retained mode, read from a complex-pair file.
    File(PathBuf),
}

/// Initial fluctuation vector of the Bogoliubov flow.
#[derive(Clone, Debug, PartialEq)]
pub enum ChiSpec {
    Vacuum,
    /// One particle excitation in plane-wave mode `mode`, projected orthogonal to `ψ`.
    SingleExcitation { mode: usize },
    /// Coefficients on the double Fock basis with total cutoff `M`, read from a complex-pair file.
    File(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelBlock {
    pub d: usize,
    pub length: f64,
    pub points: usize,
    pub uv_cutoff: Option<f64>,
    pub alpha: f64,
    pub particles: Vec<usize>,
    pub n_max: usize,
    pub cutoffs: Vec<usize>,
    /// Largest state dimension any cell may allocate.
    pub max_dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialBlock {
    pub psi: PsiSpec,
    pub phi: PhiSpec,
    pub chi: ChiSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorBlock {
    pub dt: f64,
    pub horizon: f64,
    pub krylov_tol: f64,
    pub sample_every: usize,
    /// Strang substeps per half step of the stored trajectory.
    pub lp_substeps: usize,
    pub tail_tolerance: f64,
    pub defect_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputBlock {
    pub dir: PathBuf,
    pub formats: Vec<OutputFormat>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelBlock,
    pub initial: InitialBlock,
    pub integrator: IntegratorBlock,
    pub output: OutputBlock,
    /// Directory against which relative file paths are resolved.
    pub base_dir: PathBuf,
}

pub const DEFAULT_MAX_DIM: usize = 4_000_000;
/// Largest orthogonality defect of `χ_B` accepted when building corrected states.
pub const DEFAULT_DEFECT_TOLERANCE: f64 = 1e-4;

const SECTIONS: [&str; 4] = ["model", "initial", "integrator", "output"];

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

/// Values of one config file keyed by `(section, key)`, with their line numbers.
struct Entries {
    map: BTreeMap<(String, String), (String, usize)>,
    used: BTreeMap<(String, String), ()>,
    last_line: usize,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut section: Option<String> = None;
        let mut last_line = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            last_line = line;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| err(line, "unterminated section header"))?.trim();
                if !SECTIONS.contains(&name) {
                    return Err(err(line, format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| err(line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(err(line, "empty key"));
            }
            let sec = section.clone().ok_or_else(|| err(line, "key outside of any section"))?;
            if let Some((_, first)) = map.insert((sec.clone(), key.to_string()), (value.to_string(), line)) {
                return Err(err(line, format!("duplicate key {sec}.{key} (first set on line {first})")));
            }
        }
        Ok(Entries { map, used: BTreeMap::new(), last_line })
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        let k = (section.to_string(), key.to_string());
        let v = self.map.get(&k).cloned();
        if v.is_some() {
            self.used.insert(k, ());
        }
        v
    }

    fn require(&mut self, section: &str, key: &str) -> Result<(String, usize)> {
        self.take(section, key).ok_or_else(|| err(self.last_line, format!("missing key {section}.{key}")))
    }

    fn finish(self) -> Result<()> {
        for ((sec, key), (_, line)) in &self.map {
            if !self.used.contains_key(&(sec.clone(), key.clone())) {
                return Err(err(*line, format!("unknown key {sec}.{key}")));
            }
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, line: usize, what: &str) -> Result<T> {
    value.parse().map_err(|_| err(line, format!("cannot parse {what} from '{value}'")))
}

fn parse_list<T: std::str::FromStr>(value: &str, line: usize, what: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| parse_num(v.trim(), line, what)).collect()
}

fn parse_vec3<T: std::str::FromStr + Copy + Default>(value: &str, line: usize, what: &str) -> Result<[T; 3]> {
    let v: Vec<T> = parse_list(value, line, what)?;
    if v.is_empty() || v.len() > 3 {
        return Err(err(line, format!("{what} needs 1 to 3 components")));
    }
    let mut out = [T::default(); 3];
    out[..v.len()].copy_from_slice(&v);
    Ok(out)
}

fn num<T: std::str::FromStr>(e: &mut Entries, section: &str, key: &str) -> Result<(T, usize)> {
    let (v, line) = e.require(section, key)?;
    Ok((parse_num(&v, line, key)?, line))
}

fn num_or<T: std::str::FromStr>(e: &mut Entries, section: &str, key: &str, default: T) -> Result<T> {
    match e.take(section, key) {
        Some((v, line)) => parse_num(&v, line, key),
        None => Ok(default),
    }
}

fn vec3_or<T: std::str::FromStr + Copy + Default>(e: &mut Entries, key: &str, default: [T; 3]) -> Result<[T; 3]> {
    match e.take("initial", key) {
        Some((v, line)) => parse_vec3(&v, line, key),
        None => Ok(default),
    }
}

fn path_key(e: &mut Entries, key: &str) -> Result<PathBuf> {
    Ok(PathBuf::from(e.require("initial", key)?.0))
}

fn fmt_vec3<T: std::fmt::Display>(v: &[T; 3]) -> String {
    format!("{}, {}, {}", v[0], v[1], v[2])
}

fn fmt_list<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    /// Parses and validates config text; relative paths resolve against the working directory.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_base(text, Path::new("."))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        Self::parse_with_base(&text, base)
    }

    pub fn parse_with_base(text: &str, base: &Path) -> Result<Self> {
        let mut e = Entries::parse(text)?;

        let (d, _) = num(&mut e, "model", "d")?;
        let (length, _) = num(&mut e, "model", "L")?;
        let (points, _) = num(&mut e, "model", "n")?;
        let uv_cutoff = match e.take("model", "uv_cutoff") {
            Some((v, _)) if v == "none" => None,
            Some((v, line)) => Some(parse_num(&v, line, "uv_cutoff")?),
            None => None,
        };
        let (alpha, _) = num(&mut e, "model", "alpha")?;
        let (pv, pl) = e.require("model", "N")?;
        let particles = parse_list(&pv, pl, "N")?;
        let (n_max, _) = num(&mut e, "model", "n_max")?;
        let (mv, ml) = e.require("model", "M")?;
        let cutoffs = parse_list(&mv, ml, "M")?;
        let max_dim = num_or(&mut e, "model", "max_dim", DEFAULT_MAX_DIM)?;
        let model = ModelBlock { d, length, points, uv_cutoff, alpha, particles, n_max, cutoffs, max_dim };

        let (psi_name, psi_line) = e.require("initial", "psi")?;
        let psi = match psi_name.as_str() {
            "gaussian" => PsiSpec::Gaussian {
                center: vec3_or(&mut e, "psi.center", [0.0; 3])?,
                width: num(&mut e, "initial", "psi.width")?.0,
                momentum: vec3_or(&mut e, "psi.momentum", [0; 3])?,
            },
            "uniform" => PsiSpec::Uniform,
            "plane-wave" => PsiSpec::PlaneWave { momentum: vec3_or(&mut e, "psi.momentum", [0; 3])? },
            "cosine" => PsiSpec::Cosine {
                amplitude: num(&mut e, "initial", "psi.amplitude")?.0,
                momentum: vec3_or(&mut e, "psi.momentum", [1, 0, 0])?,
            },
            "file" => PsiSpec::File(path_key(&mut e, "psi.file")?),
            other => {
                return Err(err(psi_line, format!("unknown psi preset '{other}' (gaussian, uniform, plane-wave, cosine, file)")))
            }
        };
        let (phi_name, phi_line) = e.take("initial", "phi").unwrap_or(("zero".into(), 0));
        let phi = match phi_name.as_str() {
            "zero" => PhiSpec::Zero,
            "constant" => PhiSpec::Constant(C64::new(
                num_or(&mut e, "initial", "phi.re", 0.0)?,
                num_or(&mut e, "initial", "phi.im", 0.0)?,
            )),
            "gaussian" => PhiSpec::Gaussian {
                amplitude: num(&mut e, "initial", "phi.amplitude")?.0,
                width: num(&mut e, "initial", "phi.width")?.0,
            },
            "file" => PhiSpec::File(path_key(&mut e, "phi.file")?),
            other => return Err(err(phi_line, format!("unknown phi preset '{other}' (zero, constant, gaussian, file)"))),
        };
        let (chi_name, chi_line) = e.take("initial", "chi").unwrap_or(("vacuum".into(), 0));
        let chi = match chi_name.as_str() {
            "vacuum" => ChiSpec::Vacuum,
            "single-excitation" => ChiSpec::SingleExcitation { mode: num(&mut e, "initial", "chi.mode")?.0 },
            "file" => ChiSpec::File(path_key(&mut e, "chi.file")?),
            other => {
                return Err(err(chi_line, format!("unknown chi preset '{other}' (vacuum, single-excitation, file)")))
            }
        };
        let initial = InitialBlock { psi, phi, chi };

        let (dt, dt_line) = num(&mut e, "integrator", "dt")?;
        let (horizon, _) = num(&mut e, "integrator", "T")?;
        let integrator = IntegratorBlock {
            dt,
            horizon,
            krylov_tol: num_or(&mut e, "integrator", "krylov_tol", 1e-12)?,
            sample_every: num_or(&mut e, "integrator", "sample_every", 100)?,
            lp_substeps: num_or(&mut e, "integrator", "lp_substeps", 2)?,
            tail_tolerance: num_or(&mut e, "integrator", "tail_tolerance", crate::excitation::DEFAULT_TAIL_TOLERANCE)?,
            defect_tolerance: num_or(&mut e, "integrator", "defect_tolerance", DEFAULT_DEFECT_TOLERANCE)?,
        };

        let dir = e.take("output", "dir").map_or(PathBuf::from("out"), |(v, _)| PathBuf::from(v));
        let formats = match e.take("output", "formats") {
            None => vec![OutputFormat::Csv, OutputFormat::Json],
            Some((v, line)) => {
                let mut f = v
                    .split(',')
                    .map(|s| match s.trim() {
                        "csv" => Ok(OutputFormat::Csv),
                        "json" => Ok(OutputFormat::Json),
                        other => Err(err(line, format!("unknown output format '{other}' (csv, json)"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                f.sort();
                f.dedup();
                f
            }
        };
        let output = OutputBlock { dir, formats };
        e.finish()?;

        let cfg = ExperimentConfig { model, initial, integrator, output, base_dir: base.to_path_buf() };
        cfg.validate().map_err(|m| err(if m.starts_with("dt") { dt_line } else { 0 }, m))?;
        Ok(cfg)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let m = &self.model;
        if !(1..=3).contains(&m.d) {
            return Err(format!("d must be 1, 2 or 3, got {}", m.d));
        }
        if m.particles.is_empty() || m.cutoffs.is_empty() {
            return Err("sweep lists N and M must be nonempty".into());
        }
        if m.particles.contains(&0) {
            return Err("particle numbers must be at least 1".into());
        }
        if !(m.alpha >= 0.0) || !m.alpha.is_finite() {
            return Err(format!("alpha must be finite and >= 0, got {}", m.alpha));
        }
        let it = &self.integrator;
        if !(it.dt > 0.0) || !(it.dt < it.horizon) {
            return Err(format!("dt must satisfy 0 < dt < T, got dt = {}, T = {}", it.dt, it.horizon));
        }
        step_count(it.horizon, it.dt).map_err(|e| format!("dt: {e}"))?;
        if it.sample_every == 0 || it.lp_substeps == 0 {
            return Err("sample_every and lp_substeps must be at least 1".into());
        }
        if self.output.formats.is_empty() {
            return Err("at least one output format is required".into());
        }
        Ok(())
    }

    /// Canonical text form; parsing it yields an identical config.
    pub fn to_text(&self) -> String {
        let m = &self.model;
        let mut s = String::new();
        let _ = writeln!(s, "[model]");
        let _ = writeln!(s, "d = {}", m.d);
        let _ = writeln!(s, "L = {}", m.length);
        let _ = writeln!(s, "n = {}", m.points);
        let _ = writeln!(s, "uv_cutoff = {}", m.uv_cutoff.map_or("none".to_string(), |c| c.to_string()));
        let _ = writeln!(s, "alpha = {}", m.alpha);
        let _ = writeln!(s, "N = {}", fmt_list(&m.particles));
        let _ = writeln!(s, "n_max = {}", m.n_max);
        let _ = writeln!(s, "M = {}", fmt_list(&m.cutoffs));
        let _ = writeln!(s, "max_dim = {}", m.max_dim);
        let _ = writeln!(s, "\n[initial]");
        match &self.initial.psi {
            PsiSpec::Gaussian { center, width, momentum } => {
                let _ = writeln!(s, "psi = gaussian");
                let _ = writeln!(s, "psi.center = {}", fmt_vec3(center));
                let _ = writeln!(s, "psi.width = {width}");
                let _ = writeln!(s, "psi.momentum = {}", fmt_vec3(momentum));
            }
            PsiSpec::Uniform => {
                let _ = writeln!(s, "psi = uniform");
            }
            PsiSpec::PlaneWave { momentum } => {
                let _ = writeln!(s, "psi = plane-wave");
                let _ = writeln!(s, "psi.momentum = {}", fmt_vec3(momentum));
            }
            PsiSpec::Cosine { amplitude, momentum } => {
                let _ = writeln!(s, "psi = cosine");
                let _ = writeln!(s, "psi.amplitude = {amplitude}");
                let _ = writeln!(s, "psi.momentum = {}", fmt_vec3(momentum));
            }
            PsiSpec::File(p) => {
                let _ = writeln!(s, "psi = file");
                let _ = writeln!(s, "psi.file = {}", p.display());
            }
        }
        match &self.initial.phi {
            PhiSpec::Zero => {
                let _ = writeln!(s, "phi = zero");
            }
            PhiSpec::Constant(c) => {
                let _ = writeln!(s, "phi = constant");
                let _ = writeln!(s, "phi.re = {}", c.re);
                let _ = writeln!(s, "phi.im = {}", c.im);
            }
            PhiSpec::Gaussian { amplitude, width } => {
                let _ = writeln!(s, "phi = gaussian");
                let _ = writeln!(s, "phi.amplitude = {amplitude}");
                let _ = writeln!(s, "phi.width = {width}");
            }
            PhiSpec::File(p) => {
                let _ = writeln!(s, "phi = file");
                let _ = writeln!(s, "phi.file = {}", p.display());
            }
        }
        match &self.initial.chi {
            ChiSpec::Vacuum => {
                let _ = writeln!(s, "chi = vacuum");
            }
            ChiSpec::SingleExcitation { mode } => {
                let _ = writeln!(s, "chi = single-excitation");
                let _ = writeln!(s, "chi.mode = {mode}");
            }
            ChiSpec::File(p) => {
                let _ = writeln!(s, "chi = file");
                let _ = writeln!(s, "chi.file = {}", p.display());
            }
        }
        let it = &self.integrator;
        let _ = writeln!(s, "\n[integrator]");
        let _ = writeln!(s, "dt = {}", it.dt);
        let _ = writeln!(s, "T = {}", it.horizon);
        let _ = writeln!(s, "krylov_tol = {}", it.krylov_tol);
        let _ = writeln!(s, "sample_every = {}", it.sample_every);
        let _ = writeln!(s, "lp_substeps = {}", it.lp_substeps);
        let _ = writeln!(s, "tail_tolerance = {}", it.tail_tolerance);
        let _ = writeln!(s, "defect_tolerance = {}", it.defect_tolerance);
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "dir = {}", self.output.dir.display());
        let formats: Vec<&str> = self
            .output
            .formats
            .iter()
            .map(|f| match f {
                OutputFormat::Csv => "csv",
                OutputFormat::Json => "json",
            })
            .collect();
        let _ = writeln!(s, "formats = {}", formats.join(", "));
        s
    }

    pub fn lattice(&self) -> Result<Lattice> {
        let m = &self.model;
        Lattice::new(m.d, m.length, m.points, m.uv_cutoff)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn psi_preset(&self) -> Result<PsiPreset> {
        Ok(match &self.initial.psi {
            PsiSpec::Gaussian { center, width, momentum } => {
                PsiPreset::Gaussian { center: *center, width: *width, momentum: *momentum }
            }
            PsiSpec::Uniform => PsiPreset::Uniform,
            PsiSpec::PlaneWave { momentum } => PsiPreset::PlaneWave { momentum: *momentum },
            PsiSpec::Cosine { amplitude, momentum } => PsiPreset::Cosine { amplitude: *amplitude, momentum: *momentum },
            PsiSpec::File(p) => PsiPreset::Samples(read_complex_pairs(&self.resolve(p))?),
        })
    }

    pub fn phi_preset(&self) -> Result<PhiPreset> {
        Ok(match &self.initial.phi {
            PhiSpec::Zero => PhiPreset::Zero,
            PhiSpec::Constant(c) => PhiPreset::Constant(*c),
            PhiSpec::Gaussian { amplitude, width } => PhiPreset::Gaussian { amplitude: *amplitude, width: *width },
            PhiSpec::File(p) => PhiPreset::Samples(read_complex_pairs(&self.resolve(p))?),
        })
    }

    /// Coefficients of a `chi = file` preset.
    pub fn chi_coefficients(&self) -> Result<Option<Vec<C64>>> {
        match &self.initial.chi {
            ChiSpec::File(p) => Ok(Some(read_complex_pairs(&self.resolve(p))?)),
            _ => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE: &str = "\
# sweep
[model]
d = 1
L = 1
n = 4
uv_cutoff = 1
alpha = 2.5
N = 2, 3, 4
n_max = 6
M = 4, 6

[initial]
psi = cosine
psi.amplitude = 0.3
phi = gaussian
phi.amplitude = 0.1
phi.width = 2
chi = single-excitation
chi.mode = 1

[integrator]
dt = 0.001
T = 1
sample_every = 50

[output]
dir = results
formats = json
";

    #[test]
    fn parses_sample() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(c.model.particles, vec![2, 3, 4]);
        assert_eq!(c.model.cutoffs, vec![4, 6]);
        assert_eq!(c.model.uv_cutoff, Some(1.0));
        assert_eq!(c.initial.psi, PsiSpec::Cosine { amplitude: 0.3, momentum: [1, 0, 0] });
        assert_eq!(c.initial.chi, ChiSpec::SingleExcitation { mode: 1 });
        assert_eq!(c.integrator.sample_every, 50);
        assert_eq!(c.integrator.lp_substeps, 2);
        assert_eq!(c.output.formats, vec![OutputFormat::Json]);
    }

    #[test]
    fn canonical_text_round_trips() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        let again = ExperimentConfig::parse(&c.to_text()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.to_text(), again.to_text());
    }

    fn error_line(text: &str) -> (usize, String) {
        match ExperimentConfig::parse(text) {
            Err(Error::Config { line, message }) => (line, message),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_carry_positions() {
        let bad = SAMPLE.replace("alpha = 2.5", "alpha = two");
        assert_eq!(error_line(&bad).0, 7);
        let bad = SAMPLE.replace("psi = cosine", "psi = sombrero");
        let (line, msg) = error_line(&bad);
        assert_eq!(line, 13);
        assert!(msg.contains("sombrero"));
        let bad = SAMPLE.replace("[output]", "[outputs]");
        assert!(error_line(&bad).1.contains("unknown section"));
        let bad = SAMPLE.replace("sample_every = 50", "sample_every = 50\nspeed = 3");
        let (line, msg) = error_line(&bad);
        assert_eq!(line, bad.lines().position(|l| l.starts_with("speed")).unwrap() + 1);
        assert!(msg.contains("integrator.speed"));
        let bad = SAMPLE.replace("n_max = 6", "n_max = 6\nn_max = 7");
        assert!(error_line(&bad).1.contains("duplicate"));
        let bad = SAMPLE.replace("M = 4, 6", "");
        assert!(error_line(&bad).1.contains("missing key model.M"));
    }

    #[test]
    fn validation_rules() {
        assert!(error_line(&SAMPLE.replace("N = 2, 3, 4", "N = ")).1.contains("cannot parse"));
        assert!(error_line(&SAMPLE.replace("dt = 0.001", "dt = 2")).1.contains("dt"));
        assert!(error_line(&SAMPLE.replace("dt = 0.001", "dt = 0.3")).1.contains("multiple"));
        assert!(error_line(&SAMPLE.replace("N = 2, 3, 4", "N = 0, 2")).1.contains("at least 1"));
        assert!(error_line(&SAMPLE.replace("d = 1", "d = 4")).1.contains("d must"));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_stable(
            alpha in 0.0f64..50.0,
            length in 0.1f64..10.0,
            amp in -0.9f64..0.9,
            re in -1.0f64..1.0,
            steps in 2usize..5000,
            ns in proptest::collection::vec(1usize..9, 1..5),
        ) {
            let mut c = ExperimentConfig::parse(SAMPLE).unwrap();
            c.model.alpha = alpha;
            c.model.length = length;
            c.model.particles = ns;
            c.initial.psi = PsiSpec::Gaussian { center: [amp, 0.0, 0.0], width: length / 7.0, momentum: [-2, 0, 0] };
            c.initial.phi = PhiSpec::Constant(C64::new(re, -re / 3.0));
            c.integrator.dt = 1.0 / steps as f64;
            c.integrator.horizon = 1.0;
            let again = ExperimentConfig::parse(&c.to_text()).unwrap();
            prop_assert_eq!(&c, &again);
        }
    }
}
