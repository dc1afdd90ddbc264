//! Two-qubit Bell-CHSH analysis toolkit.
//!
//! Builds Bell operators from measurement settings, evaluates the CHSH
//! parameter and the linear / von Neumann entropies of two-qubit density
//! matrices, and exposes the exact compatibility regions between the two,
//! together with a Monte Carlo verification harness for every bound.

pub mod bell;
pub mod entropy;
pub mod extremal;
pub mod numkit;
pub mod regions;
pub mod states;
pub mod verify;

pub use bell::{BellOperator, BlochVector};
pub use entropy::EntropyReport;
pub use numkit::{Complex, ComplexMatrix, EigenDecomposition};
pub use regions::{RegionId, RegionVerdict};
pub use states::{DensityMatrix, ReducedDensity};
pub use verify::VerificationReport;
