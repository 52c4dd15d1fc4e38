//! Adaptive randomization tests.
//!
//! Sequential adaptive sampling policies, the natural adaptive resampling
//! procedure, randomization p-values for arbitrary test statistics, power
//! harnesses, and Monte Carlo evaluators of local asymptotic power for the
//! normal-means model and forced-choice conjoint designs.
//!
//! Numeric kernels are generic over [`scalar::Real`] (`f64` and `f32`); the
//! simulation pipeline runs in `f64` through the aliases below.

pub mod asymptotics;
pub mod conjoint;
pub mod engine;
pub mod error;
pub mod narp;
pub mod policies;
pub mod record;
pub mod report;
pub mod scalar;
pub mod seed;
pub mod stats;
pub mod weights;

pub use error::{Error, Result};
pub use record::{ExperimentRecord, PolicyKind};
pub use seed::{derive_stream, SeedPlan, Stream, StreamRole};
pub use weights::{normalize, WeightVector, WEIGHT_FLOOR};

/// Weight vector in the default precision.
pub type Weights = WeightVector<f64>;
