//! Completely conservative implicit difference schemes for one-dimensional
//! polytropic gas flow (plane, cylindrical, spherical) in mass-Lagrangian
//! coordinates, with auditors for every discrete conservation law the
//! schemes carry.

pub mod banded;
pub mod claws;
pub mod mesh;
pub mod scheme;
pub mod setup;
pub mod snapshot;
pub mod state;

pub use claws::{AuditTolerances, ConservationBudget, LawId, LedgerRecord};
pub use mesh::{MassMesh, MeshSpec, TimeLayer};
pub use scheme::{step, BoundaryCondition, EosMode, SchemeParams, StepError, StepReport};
pub use state::{Alpha, CellField, Geometry, GridLayer, NodeField, TwoLayerView};
