//! Manipulation-proof auditing of binary classifiers over a finite input
//! space: audit sets, version-space diameters, capacity estimates and the
//! derived model-selection metrics.

pub mod audit;
pub mod capacity;
pub mod dataspace;
pub mod diameter;
pub mod error;
pub mod hypothesis;
pub mod metrics;
pub mod par;
pub mod seed;
pub mod stats;

pub use error::{AuditError, ErrorKind, Result};
