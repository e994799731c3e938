//! Secure state estimation for linear systems under sparse sensor attacks.
//!
//! The estimator couples a pseudo-Boolean search over which sensors are
//! attacked with a least-squares consistency check over the sensors assumed
//! honest. Failed checks return certificates that prune the search.

pub mod attacksim;
pub mod bench;
pub mod combinatorics;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod linmodel;
pub mod oracle;
pub mod sat;
pub mod theory;

pub use error::{Error, Result};
pub use estimator::{estimate, minimal_support_estimate, Estimate, EstimatorConfig, Outcome};
pub use linmodel::{ObservabilityStack, RobustnessConstants, StackedWindow, SystemModel};
pub use sat::{PbConstraint, SatAssignment, SatInstance, SatOutcome};
pub use theory::{Certificate, CertificateKind, CheckResult, CheckStatus, Strategy, TheorySolver};
