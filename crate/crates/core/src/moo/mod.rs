//! Multi-objective search: archive bookkeeping, Latin hypercube sampling,
//! mesh-adaptive direct search and the bi-objective driver on top of it.

pub mod archive;
pub mod bimads;
pub mod lhs;
pub mod mads;
pub mod scalarize;

pub use archive::{dominates, hypervolume_2d, pareto_filter, ArchiveEntry, Dominance, ParetoArchive};
pub use bimads::{bimads_optimize, lhs_optimize, SearchOptions};
pub use lhs::{latin_hypercube, LhsSample};
pub use mads::{mads_minimize, MadsOptions, MadsOutcome, Trial};
pub use scalarize::{scalarize_phi_r, ReferenceSelector};
