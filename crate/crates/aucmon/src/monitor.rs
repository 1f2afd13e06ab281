//! Windowed monitoring pipeline: estimate each window, feed the filter,
//! and carry state unchanged across windows that cannot be scored.

use thiserror::Error;

use crate::ingest::WindowedBatch;
use crate::kalman::{
    self, confidence_interval, FilterError, FilterState, MonitorRecord, Observation,
    UpdateStrategy,
};
use crate::roc_metrics::{DelongEstimate, MetricsError};

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("no usable windows: every window is empty or single-class")]
    NoUsableWindows,
}

#[derive(Debug, Clone)]
pub struct MonitorConfig {
    pub min_positives: usize,
    pub strategy: UpdateStrategy,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            min_positives: 20,
            strategy: UpdateStrategy::default(),
        }
    }
}

/// Runs the full monitor over ordered windows.
///
/// Windows with a missing class (or gap months) produce a record flagged
/// `skipped`, reporting the carried filter state; the state itself is not
/// advanced. With no baseline, the first scorable window initializes the
/// filter and reports filtered = raw.
pub fn monitor_windows(
    windows: &[WindowedBatch],
    baseline: Option<&DelongEstimate>,
    config: &MonitorConfig,
) -> Result<Vec<MonitorRecord>, MonitorError> {
    if !windows.iter().any(|w| !w.missing_class()) {
        return Err(MonitorError::NoUsableWindows);
    }
    for pair in windows.windows(2) {
        if !kalman::window_id_lt(&pair[0].window_id, &pair[1].window_id) {
            return Err(FilterError::NonMonotonicWindows {
                prev: pair[0].window_id.clone(),
                next: pair[1].window_id.clone(),
            }
            .into());
        }
    }

    let mut state: Option<FilterState> = baseline.map(kalman::init_state);
    let mut records = Vec::with_capacity(windows.len());
    for window in windows {
        if window.missing_class() {
            // Carry state forward unchanged; report it if we have one.
            let (filtered, p) = match &state {
                Some(s) => (s.theta, s.p),
                None => (f64::NAN, 0.0),
            };
            let (lo, hi) = if filtered.is_finite() {
                confidence_interval(filtered, p)?
            } else {
                (f64::NAN, f64::NAN)
            };
            records.push(MonitorRecord {
                window_id: window.window_id.clone(),
                raw: None,
                raw_ci_low: None,
                raw_ci_high: None,
                filtered,
                filtered_ci_low: lo,
                filtered_ci_high: hi,
                m: window.m,
                n: window.n,
                gain: None,
                used_upper_bound: false,
                skipped: true,
            });
            continue;
        }
        let est = window.batch.delong(config.min_positives)?;
        let obs = Observation::from_estimate(&window.window_id, &est);
        let (posterior, gain) = match &state {
            None => (
                FilterState {
                    theta: obs.z,
                    s10: obs.s10,
                    s01: obs.s01,
                    p: obs.r,
                    step_count: 0,
                },
                None,
            ),
            Some(s) => {
                let step = kalman::step(s, &obs, config.strategy)?;
                (step.posterior, Some(step.gain))
            }
        };
        let (raw_lo, raw_hi) = confidence_interval(obs.z, obs.r)?;
        let (f_lo, f_hi) = confidence_interval(posterior.theta, posterior.p)?;
        records.push(MonitorRecord {
            window_id: window.window_id.clone(),
            raw: Some(obs.z),
            raw_ci_low: Some(raw_lo),
            raw_ci_high: Some(raw_hi),
            filtered: posterior.theta,
            filtered_ci_low: f_lo,
            filtered_ci_high: f_hi,
            m: window.m,
            n: window.n,
            gain,
            used_upper_bound: obs.used_upper_bound,
            skipped: false,
        });
        state = Some(posterior);
    }
    Ok(records)
}
