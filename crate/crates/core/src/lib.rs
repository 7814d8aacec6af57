//! General type-2 fuzzy logic systems with alpha-plane inference,
//! Karnik-Mendel type reduction, and dual-focused training: the point
//! output is supervised by a log-cosh risk and the floor-plane
//! type-reduced set by pinball terms, so one model learns accurate
//! predictions and calibrated prediction intervals together.
//!
//! The crate covers four antecedent families behind one interface: a
//! two-sided-Gaussian-secondary general type-2 model, a
//! delta-parameterized general type-2 baseline, and two interval
//! type-2 baselines (height-only and split-sigma footprints). All of
//! them train with plain Adam through parameterization tricks that map
//! unconstrained optimizer variables onto valid fuzzy-set parameters.

pub mod data;
pub mod error;
pub mod experiment;
pub mod grad;
pub mod inference;
mod kmeans;
pub mod membership;
pub mod metrics;
pub mod model_io;
pub mod params;
pub mod seed;
pub mod tape;
pub mod train;

pub use error::{Error, Result};
pub use inference::{km_type_reduce, predict, FiringInterval, PredictionWithInterval};
pub use membership::{AlphaPlaneGrid, ALPHA_FLOOR};
pub use params::{
    constrain, count_params, init_params, ConstrainedParams, Layout, ModelConfig, ModelSpec,
    RawParams, Variant,
};
pub use train::{train, TrainConfig, TrainTrace};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
