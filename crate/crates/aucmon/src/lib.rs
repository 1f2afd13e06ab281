//! Streaming AUCROC monitoring for binary classifiers.
//!
//! The crate estimates windowed AUCROC with DeLong variance (falling back
//! to the `1/m + 1/n` bound on skewed windows), denoises the resulting
//! time series with a one-dimensional Kalman filter whose variance is
//! extrapolated per window from the class counts, and ships a synthetic
//! drift simulator for end-to-end evaluation against known ground truth.

pub mod ingest;
pub mod kalman;
pub mod monitor;
pub mod roc_metrics;
pub mod sim;

pub use kalman::{FilterState, MonitorRecord, Observation, UpdateStrategy};
pub use monitor::{monitor_windows, MonitorConfig};
pub use roc_metrics::{DelongEstimate, ScoredBatch};
pub use sim::ScenarioSpec;
