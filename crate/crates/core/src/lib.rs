//! Inner and outer bounds for Gaussian remote (CEO) and multiterminal
//! rate-distortion regions.

pub mod achievability;
pub mod cyclic;
pub mod duality;
pub mod error;
pub mod gauss_model;
pub mod linalg;
pub mod matching;
pub mod model_file;
pub mod optim;
pub mod rate_region;
pub mod subset;
pub mod two_terminal;
pub mod waterfill;

pub use error::{Error, Result};
pub use gauss_model::{DistortionSpec, RateAllocation, SourceModel};
pub use linalg::Matrix;
pub use model_file::{load_model, parse_model, ModelFile};
pub use rate_region::{RateVector, Variant};
pub use subset::Subset;
