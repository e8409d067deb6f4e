//! Set-based bounds on analog neural networks whose weights vary with
//! manufacturing process parameters.

pub mod baseline;
pub mod error;
pub mod fixtures;
pub mod interval;
pub mod io;
pub mod montecarlo;
pub mod network;
pub mod polyzono;
pub mod relu;
pub mod rng;
pub mod variation;
pub mod verifier;

pub use error::{Error, Result};
pub use interval::IntervalBox;
pub use polyzono::{ExponentMatrix, FactorId, MatPolyZonotope, PolyZonotope};
pub use network::{LayerSpec, NetworkSpec};
pub use variation::{Variant, VariationModel};
pub use verifier::{Domain, PropagationOptions, VerificationReport, VerificationTask, Verifier};
