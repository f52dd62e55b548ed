//! Adaptive Tree-structured Parzen Estimator toolkit.

pub mod atpe;
pub mod benchmarks;
pub mod blocking;
pub mod filtering;
pub mod harness;
pub mod history;
pub mod kmeans;
pub mod predictor;
pub mod rng;
pub mod space;
pub mod statistics;
pub mod surrogate;
pub mod tpe;
