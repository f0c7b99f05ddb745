//! ECA*: an evolutionary clustering algorithm built from percentile-rank
//! initialisation, quartile centroids, Levy-flight mutation, a mutation /
//! crossover switch ("mut-over") and density-driven cluster merging.
//!
//! The crate also ships Lloyd K-means and K-means++ baselines, the internal
//! (SSE, nMSE, ε-ratio, intra/inter cluster distance) and external (CI, CSI,
//! NMI) validity measures, and a harness that repeats seeded runs, aggregates
//! best/worst/average statistics and ranks algorithms by dataset feature.
//!
//! ```
//! use ecastar_core::data_io::generate_blobs;
//! use ecastar_core::eca::{run_eca, EcaConfig};
//!
//! let (data, _truth) = generate_blobs(2, 50, 2, 0.5, 10.0, 7).unwrap();
//! let result = run_eca(&data, &EcaConfig::default(), 1).unwrap();
//! assert!(result.cluster_count() >= 1);
//! ```

pub mod baselines;
pub mod data_io;
pub mod eca;
mod error;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod stats;

pub use error::{Error, Result};
