//! Batch driver for the lagcons solver: configured runs with a conservation
//! ledger, self-convergence studies and offline audits of snapshot pairs.

pub mod audit;
pub mod config;
pub mod convergence;
pub mod run;

pub use audit::{audit_command, parse_snapshot_arg, AuditOutcome};
pub use config::{RunConfig, TauSpec};
pub use convergence::{convergence_study, StudyKind, StudyReport};
pub use run::{run, RunOutcome, RunSummary, EXIT_BUDGET_VIOLATION, EXIT_OK, EXIT_SOLVER_FAILURE};
