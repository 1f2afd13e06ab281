//! One-dimensional Kalman filter over windowed AUC observations.
//!
//! The state is the filtered AUC mean together with the placement-variance
//! components `s10`/`s01`. Each step re-extrapolates the prior variance for
//! the incoming window's class counts (`p_pred = s10/m + s01/n`), blends the
//! window's sample AUC in with gain `K = p_pred / (p_pred + r)`, and shrinks
//! the state components by `(1 - K)`. No process noise is added; the class
//! counts are the only inflation mechanism.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::roc_metrics::DelongEstimate;

#[derive(Debug, Error, PartialEq)]
pub enum FilterError {
    #[error("invalid filter input: {0}")]
    InvalidInput(String),
    #[error("non-monotonic window sequence: {prev:?} followed by {next:?}")]
    NonMonotonicWindows { prev: String, next: String },
    #[error("empty observation sequence")]
    EmptyObservations,
    #[error("negative variance: {0}")]
    NegativeVariance(f64),
    #[error("malformed state snapshot: {0}")]
    MalformedSnapshot(String),
}

/// One window's measurement: sample AUC `z`, its variance `r`, and the
/// class counts the prior must be extrapolated for.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub window_id: String,
    pub z: f64,
    pub r: f64,
    pub m: usize,
    pub n: usize,
    /// Placement-variance components of this window's own estimate. Only
    /// consulted under [`UpdateStrategy::WindowSample`].
    pub s10: f64,
    pub s01: f64,
    pub used_upper_bound: bool,
}

impl Observation {
    pub fn from_estimate(window_id: impl Into<String>, est: &DelongEstimate) -> Self {
        Self {
            window_id: window_id.into(),
            z: est.theta,
            r: est.variance,
            m: est.m,
            n: est.n,
            s10: est.s10,
            s01: est.s01,
            used_upper_bound: est.used_upper_bound,
        }
    }

    fn validate(&self) -> Result<(), FilterError> {
        if !self.z.is_finite() || !self.r.is_finite() || self.r < 0.0 {
            return Err(FilterError::InvalidInput(format!(
                "window {}: z={}, r={}",
                self.window_id, self.z, self.r
            )));
        }
        if self.m == 0 || self.n == 0 {
            return Err(FilterError::InvalidInput(format!(
                "window {}: m={}, n={}",
                self.window_id, self.m, self.n
            )));
        }
        Ok(())
    }
}

/// Carried filter state after some number of updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterState {
    pub theta: f64,
    pub s10: f64,
    pub s01: f64,
    pub p: f64,
    pub step_count: usize,
}

/// Which `S10`/`S01` the `(1 - K)` shrinkage applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateStrategy {
    /// Shrink the carried state components. Makes the components
    /// monotonically non-increasing, so gains decay toward zero and the
    /// filter eventually stops adapting.
    CarriedState,
    /// Shrink the current window's own sample components (default). The
    /// state dispersion refreshes from each window, keeping gains bounded
    /// away from zero so genuine performance drift is tracked.
    #[default]
    WindowSample,
}

/// Full record of one update: the extrapolated prior, the gain, and the
/// posterior state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterStep {
    pub predicted_variance: f64,
    pub gain: f64,
    pub posterior: FilterState,
}

/// Seeds the filter from a baseline estimate (identity initialization).
pub fn init_state(baseline: &DelongEstimate) -> FilterState {
    FilterState {
        theta: baseline.theta,
        s10: baseline.s10,
        s01: baseline.s01,
        p: baseline.variance,
        step_count: 0,
    }
}

/// Advances the filter by one observation.
///
/// When both the extrapolated prior variance and the measurement variance
/// are zero the gain is defined as 0 and the prior is kept.
pub fn step(
    state: &FilterState,
    obs: &Observation,
    strategy: UpdateStrategy,
) -> Result<FilterStep, FilterError> {
    obs.validate()?;
    if !state.theta.is_finite() || !state.s10.is_finite() || !state.s01.is_finite() {
        return Err(FilterError::InvalidInput("non-finite state".into()));
    }
    let p_pred = state.s10 / obs.m as f64 + state.s01 / obs.n as f64;
    let denom = p_pred + obs.r;
    let gain = if denom == 0.0 { 0.0 } else { p_pred / denom };
    let shrink = 1.0 - gain;
    let (s10, s01) = match strategy {
        UpdateStrategy::CarriedState => (shrink * state.s10, shrink * state.s01),
        UpdateStrategy::WindowSample => (shrink * obs.s10, shrink * obs.s01),
    };
    Ok(FilterStep {
        predicted_variance: p_pred,
        gain,
        posterior: FilterState {
            theta: state.theta + gain * (obs.z - state.theta),
            s10,
            s01,
            p: shrink * p_pred,
            step_count: state.step_count + 1,
        },
    })
}

/// 95% confidence interval around `mean`, clipped to [0,1].
pub fn confidence_interval(mean: f64, variance: f64) -> Result<(f64, f64), FilterError> {
    if variance < 0.0 || !variance.is_finite() {
        return Err(FilterError::NegativeVariance(variance));
    }
    let half = 1.96 * variance.sqrt();
    Ok(((mean - half).max(0.0), (mean + half).min(1.0)))
}

/// One output row of the monitor: the raw windowed estimate next to the
/// filtered one. `raw` and `gain` are absent on skipped windows.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorRecord {
    pub window_id: String,
    pub raw: Option<f64>,
    pub raw_ci_low: Option<f64>,
    pub raw_ci_high: Option<f64>,
    pub filtered: f64,
    pub filtered_ci_low: f64,
    pub filtered_ci_high: f64,
    pub m: usize,
    pub n: usize,
    pub gain: Option<f64>,
    pub used_upper_bound: bool,
    pub skipped: bool,
}

// Window ids that are all integers sort numerically, otherwise lexically.
// Keeps "10" after "9" for step-indexed windows while month strings keep
// their natural order.
pub(crate) fn window_id_lt(a: &str, b: &str) -> bool {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x < y,
        _ => a < b,
    }
}

/// Runs the filter over a sequence of observations.
///
/// With no baseline the first observation self-initializes the state and
/// its record reports filtered = raw; filtering proper starts at the
/// second window. Window ids must be strictly increasing.
pub fn run_filter(
    baseline: Option<&DelongEstimate>,
    observations: &[Observation],
    strategy: UpdateStrategy,
) -> Result<Vec<MonitorRecord>, FilterError> {
    if observations.is_empty() {
        return Err(FilterError::EmptyObservations);
    }
    for pair in observations.windows(2) {
        if !window_id_lt(&pair[0].window_id, &pair[1].window_id) {
            return Err(FilterError::NonMonotonicWindows {
                prev: pair[0].window_id.clone(),
                next: pair[1].window_id.clone(),
            });
        }
    }
    let mut records = Vec::with_capacity(observations.len());
    let mut state = baseline.map(init_state);
    for obs in observations {
        obs.validate()?;
        let (posterior, gain) = match &state {
            None => {
                let init = FilterState {
                    theta: obs.z,
                    s10: obs.s10,
                    s01: obs.s01,
                    p: obs.r,
                    step_count: 0,
                };
                (init, None)
            }
            Some(s) => {
                let step = step(s, obs, strategy)?;
                (step.posterior, Some(step.gain))
            }
        };
        let (raw_lo, raw_hi) = confidence_interval(obs.z, obs.r)?;
        let (f_lo, f_hi) = confidence_interval(posterior.theta, posterior.p)?;
        records.push(MonitorRecord {
            window_id: obs.window_id.clone(),
            raw: Some(obs.z),
            raw_ci_low: Some(raw_lo),
            raw_ci_high: Some(raw_hi),
            filtered: posterior.theta,
            filtered_ci_low: f_lo,
            filtered_ci_high: f_hi,
            m: obs.m,
            n: obs.n,
            gain,
            used_upper_bound: obs.used_upper_bound,
            skipped: false,
        });
        state = Some(posterior);
    }
    Ok(records)
}

impl FilterState {
    /// Plain-text snapshot, one `key=value` per line, for resumable
    /// monitoring. Floats round-trip exactly.
    pub fn to_snapshot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "theta={}", self.theta);
        let _ = writeln!(out, "s10={}", self.s10);
        let _ = writeln!(out, "s01={}", self.s01);
        let _ = writeln!(out, "p={}", self.p);
        let _ = writeln!(out, "step_count={}", self.step_count);
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self, FilterError> {
        let mut fields = HashMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| FilterError::MalformedSnapshot(format!("no '=' in {line:?}")))?;
            fields.insert(key.to_string(), value.to_string());
        }
        let get = |key: &str| {
            fields
                .get(key)
                .ok_or_else(|| FilterError::MalformedSnapshot(format!("missing key {key:?}")))
        };
        let float = |key: &str| -> Result<f64, FilterError> {
            get(key)?
                .parse()
                .map_err(|e| FilterError::MalformedSnapshot(format!("{key}: {e}")))
        };
        Ok(Self {
            theta: float("theta")?,
            s10: float("s10")?,
            s01: float("s01")?,
            p: float("p")?,
            step_count: get("step_count")?
                .parse()
                .map_err(|e| FilterError::MalformedSnapshot(format!("step_count: {e}")))?,
        })
    }
}
