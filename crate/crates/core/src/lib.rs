//! Greedy and stochastic greedy design of Cartesian line masks for dynamic
//! (2-D + time) MRI, with the transforms, decoders, metrics and baselines
//! the design loop needs.

pub mod accounting;
pub mod baselines;
pub mod check;
pub mod cli;
pub mod config;
pub mod decoders;
pub mod experiments;
pub mod error;
pub mod io;
pub mod maskdesign;
pub mod metrics;
pub mod phantom;
pub mod rng;
pub mod transform;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    lines_for_rate, normalize, sampling_rate, DesignConfig, DynamicImage, Line, Mask, MetricReport,
    SamplingDistribution, TrainingMode, Variant,
};
