//! Explicit ReLU and ReLU/ReLU² network constructions that approximate smooth
//! functions in Sobolev norms, with a numerical certification harness.

pub mod budget;
pub mod builder;
pub mod error;
pub mod eval;
pub mod metrics;
pub mod multi_index;
pub mod network;
pub mod primitives;
pub mod scalar;
pub mod targets;
pub mod taylor;

pub use error::{Error, Result};
pub use eval::{JetSpace, SparseNet};
pub use multi_index::MultiIndex;
pub use network::{Activation, Family, InputMode, Layer, Metadata, Network, SizeBudget};
pub use primitives::{BoundCertificate, BuildMode, Built, NormKind};
pub use scalar::{Dd, Scalar};
