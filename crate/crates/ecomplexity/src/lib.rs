//! Economic-complexity metrics from country-product export matrices.
//!
//! The crate computes the fitness-complexity scores of countries and
//! products from a binarized (RCA > 1) export matrix, and the ECI+/PCI+
//! scores from the raw extensive matrix, using one shared iterative map.
//! The two formulations are algebraically the same iteration up to
//! relabeling and per-step rescaling, and [`analysis::equivalence_check`]
//! verifies that numerically on any input: the even fitness iterate on the
//! extensive matrix is proportional to the ECI+ country iterate.
//!
//! Pipeline: ingest flows ([`matrix::ExportMatrix::ingest_flows`] or
//! [`io::read_flows_csv`]) -> prune -> RCA -> binarize -> run an engine
//! ([`fitness::run`] / [`eciplus::run_eciplus`]) -> compare rankings
//! ([`analysis::rank_correlations`]).
//!
//! All operations are pure functions over immutable data and are
//! deterministic: identical inputs produce bit-identical results,
//! including the iteration traces.

pub mod analysis;
pub mod eciplus;
pub mod error;
pub mod fitness;
pub mod io;
pub mod matrix;
pub mod synth;

pub use analysis::{
    diversity_correlation, equivalence_check, offset_correlation, one_iteration_anomaly,
    rank_correlations, scatter_preset, scatter_table, EquivalenceReport, RankReport, ScatterPreset,
};
pub use eciplus::{eci_iterate, eci_plus_scores, pci_plus_scores, run_eciplus, EciPlusResult};
pub use error::{Error, Result};
pub use fitness::{
    diversification, log_scores, run, standardize, step, ubiquity, AlgoConfig, Init,
    IterationTrace, Normalization, Stop,
};
pub use matrix::{BinaryMatrix, BipartiteWeights, ExportMatrix, RcaMatrix};
