//! Configuration, sweeps, rate fits, invariant checks and report emission.
//!
//! A run is described by an [`ExperimentConfig`] and produces a [`Bundle`]:
//! CSV files with 17 significant digits, a JSON summary mirroring their final
//! values, and a list of [`Claim`]s, each carrying the tolerance it was tested
//! at. Bundles are byte-identical across reruns of the same config.

pub mod checks;
pub mod config;
pub mod fit;
pub mod io;
mod run;

pub use checks::{check, CheckItem, CheckReport, SUITES};
pub use config::{ChiSpec, ExperimentConfig, OutputFormat, PhiSpec, PsiSpec};
pub use fit::{fit_rate, strictly_decreasing, RateFit};
pub use io::{read_complex_pairs, write_complex_pairs};
pub use run::{
    many_body_dim, run, workers, BogoliubovSummary, Bundle, CellSummary, Claim, ExactSummary, LpSummary, NamedFit,
    Outcome, RunMode, Summary, DECOUPLED_TOLERANCE, TREND_TOLERANCE,
};
