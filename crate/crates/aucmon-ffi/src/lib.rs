//! C ABI for the aucmon estimators and filter.
//!
//! Handles (`AucmonBatch`, `AucmonFilter`) are opaque; every function
//! returns an [`AucmonStatus`] and writes results through out-pointers.
//! The generated header lands in `include/aucmon.h`.
//!
//! Safety contract: pointers must be valid for the stated lengths, handles
//! must come from this library's constructors, and each handle must be
//! freed exactly once.

use std::ffi::{c_char, CStr, CString};
use std::slice;

use aucmon::kalman::{self, FilterState, Observation, UpdateStrategy};
use aucmon::roc_metrics::{variance_upper_bound, MetricsError, ScoredBatch};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AucmonStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A score was NaN or infinite.
    InvalidScore = 2,
    /// The batch has no positives or no negatives; AUC is undefined.
    DegenerateBatch = 3,
    /// A filter input was out of domain (bad variance, zero counts, ...).
    InvalidInput = 4,
    /// A snapshot string was not valid UTF-8 or not parseable.
    MalformedSnapshot = 5,
}

impl From<MetricsError> for AucmonStatus {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::InvalidScore(_) => AucmonStatus::InvalidScore,
            MetricsError::DegenerateBatch { .. } => AucmonStatus::DegenerateBatch,
            _ => AucmonStatus::InvalidInput,
        }
    }
}

/// Opaque set of scored positives and negatives.
pub struct AucmonBatch(ScoredBatch);

/// Opaque carried filter state.
pub struct AucmonFilter(FilterState);

/// AUC estimate with its DeLong variance decomposition.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AucmonEstimate {
    pub theta: f64,
    pub s10: f64,
    pub s01: f64,
    pub variance: f64,
    pub m: usize,
    pub n: usize,
    /// Nonzero when the imbalance-aware bound replaced the sample variance.
    pub used_upper_bound: bool,
}

/// Which dispersion components the `(1 - gain)` shrinkage applies to.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AucmonStrategy {
    /// Shrink the carried state components; gains decay toward zero.
    CarriedState = 0,
    /// Shrink the incoming window's own components (library default).
    WindowSample = 1,
}

impl From<AucmonStrategy> for UpdateStrategy {
    fn from(s: AucmonStrategy) -> Self {
        match s {
            AucmonStrategy::CarriedState => UpdateStrategy::CarriedState,
            AucmonStrategy::WindowSample => UpdateStrategy::WindowSample,
        }
    }
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if len == 0 {
        Some(&[])
    } else if ptr.is_null() {
        None
    } else {
        Some(slice::from_raw_parts(ptr, len))
    }
}

/// Builds a batch from score arrays. On success `*out` owns the handle;
/// release it with `aucmon_batch_free`.
///
/// # Safety
/// `positives`/`negatives` must point to `m`/`n` readable doubles (null is
/// allowed only with length 0) and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aucmon_batch_new(
    positives: *const f64,
    m: usize,
    negatives: *const f64,
    n: usize,
    out: *mut *mut AucmonBatch,
) -> AucmonStatus {
    if out.is_null() {
        return AucmonStatus::NullPointer;
    }
    let (Some(pos), Some(neg)) = (slice_arg(positives, m), slice_arg(negatives, n)) else {
        return AucmonStatus::NullPointer;
    };
    match ScoredBatch::new(pos.to_vec(), neg.to_vec()) {
        Ok(batch) => {
            *out = Box::into_raw(Box::new(AucmonBatch(batch)));
            AucmonStatus::Ok
        }
        Err(e) => e.into(),
    }
}

/// Releases a batch handle. Null is a no-op.
///
/// # Safety
/// `batch` must be a handle from `aucmon_batch_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aucmon_batch_free(batch: *mut AucmonBatch) {
    if !batch.is_null() {
        drop(Box::from_raw(batch));
    }
}

/// Mann-Whitney AUCROC of the batch, ties counting one half.
///
/// # Safety
/// `batch` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aucmon_batch_auc(
    batch: *const AucmonBatch,
    out: *mut f64,
) -> AucmonStatus {
    if batch.is_null() || out.is_null() {
        return AucmonStatus::NullPointer;
    }
    match (*batch).0.auc() {
        Ok(theta) => {
            *out = theta;
            AucmonStatus::Ok
        }
        Err(e) => e.into(),
    }
}

/// DeLong estimate; batches with `m <= min_positives` (or fewer than two
/// samples in either class) report the `1/m + 1/n` bound instead of the
/// sample variance.
///
/// # Safety
/// `batch` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aucmon_batch_delong(
    batch: *const AucmonBatch,
    min_positives: usize,
    out: *mut AucmonEstimate,
) -> AucmonStatus {
    if batch.is_null() || out.is_null() {
        return AucmonStatus::NullPointer;
    }
    match (*batch).0.delong(min_positives) {
        Ok(est) => {
            *out = AucmonEstimate {
                theta: est.theta,
                s10: est.s10,
                s01: est.s01,
                variance: est.variance,
                m: est.m,
                n: est.n,
                used_upper_bound: est.used_upper_bound,
            };
            AucmonStatus::Ok
        }
        Err(e) => e.into(),
    }
}

/// The distribution-free variance bound `1/m + 1/n`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aucmon_variance_upper_bound(
    m: usize,
    n: usize,
    out: *mut f64,
) -> AucmonStatus {
    if out.is_null() {
        return AucmonStatus::NullPointer;
    }
    match variance_upper_bound(m, n) {
        Ok(bound) => {
            *out = bound;
            AucmonStatus::Ok
        }
        Err(e) => e.into(),
    }
}

/// 95% confidence interval around `mean`, clipped to [0, 1].
///
/// # Safety
/// `low` and `high` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn aucmon_confidence_interval(
    mean: f64,
    variance: f64,
    low: *mut f64,
    high: *mut f64,
) -> AucmonStatus {
    if low.is_null() || high.is_null() {
        return AucmonStatus::NullPointer;
    }
    match kalman::confidence_interval(mean, variance) {
        Ok((lo, hi)) => {
            *low = lo;
            *high = hi;
            AucmonStatus::Ok
        }
        Err(_) => AucmonStatus::InvalidInput,
    }
}

/// Seeds a filter from a baseline estimate (identity initialization). On
/// success `*out` owns the handle; release it with `aucmon_filter_free`.
///
/// # Safety
/// `baseline` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn aucmon_filter_new(
    baseline: *const AucmonEstimate,
    out: *mut *mut AucmonFilter,
) -> AucmonStatus {
    if baseline.is_null() || out.is_null() {
        return AucmonStatus::NullPointer;
    }
    let b = &*baseline;
    if !b.theta.is_finite() || !b.variance.is_finite() || b.variance < 0.0 {
        return AucmonStatus::InvalidInput;
    }
    let state = FilterState {
        theta: b.theta,
        s10: b.s10,
        s01: b.s01,
        p: b.variance,
        step_count: 0,
    };
    *out = Box::into_raw(Box::new(AucmonFilter(state)));
    AucmonStatus::Ok
}

/// Releases a filter handle. Null is a no-op.
///
/// # Safety
/// `filter` must be a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aucmon_filter_free(filter: *mut AucmonFilter) {
    if !filter.is_null() {
        drop(Box::from_raw(filter));
    }
}

/// Advances the filter by one windowed observation, updating the handle in
/// place. `gain` may be null if the gain is not wanted.
///
/// # Safety
/// `filter` must be a live handle and `observation` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aucmon_filter_step(
    filter: *mut AucmonFilter,
    observation: *const AucmonEstimate,
    strategy: AucmonStrategy,
    gain: *mut f64,
) -> AucmonStatus {
    if filter.is_null() || observation.is_null() {
        return AucmonStatus::NullPointer;
    }
    let o = &*observation;
    let obs = Observation {
        window_id: String::new(),
        z: o.theta,
        r: o.variance,
        m: o.m,
        n: o.n,
        s10: o.s10,
        s01: o.s01,
        used_upper_bound: o.used_upper_bound,
    };
    match kalman::step(&(*filter).0, &obs, strategy.into()) {
        Ok(step) => {
            (*filter).0 = step.posterior;
            if !gain.is_null() {
                *gain = step.gain;
            }
            AucmonStatus::Ok
        }
        Err(_) => AucmonStatus::InvalidInput,
    }
}

/// Reads the filtered mean and posterior variance without advancing.
///
/// # Safety
/// `filter` must be a live handle; `theta` and `variance` must be valid.
#[no_mangle]
pub unsafe extern "C" fn aucmon_filter_state(
    filter: *const AucmonFilter,
    theta: *mut f64,
    variance: *mut f64,
) -> AucmonStatus {
    if filter.is_null() || theta.is_null() || variance.is_null() {
        return AucmonStatus::NullPointer;
    }
    *theta = (*filter).0.theta;
    *variance = (*filter).0.p;
    AucmonStatus::Ok
}

/// Serializes the filter as a `key=value` snapshot. The returned string
/// must be released with `aucmon_string_free`.
///
/// # Safety
/// `filter` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aucmon_filter_snapshot(
    filter: *const AucmonFilter,
    out: *mut *mut c_char,
) -> AucmonStatus {
    if filter.is_null() || out.is_null() {
        return AucmonStatus::NullPointer;
    }
    // Snapshot text is ASCII; CString only fails on interior NULs.
    let text = (*filter).0.to_snapshot();
    match CString::new(text) {
        Ok(s) => {
            *out = s.into_raw();
            AucmonStatus::Ok
        }
        Err(_) => AucmonStatus::InvalidInput,
    }
}

/// Restores a filter from a snapshot produced by `aucmon_filter_snapshot`.
///
/// # Safety
/// `snapshot` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aucmon_filter_from_snapshot(
    snapshot: *const c_char,
    out: *mut *mut AucmonFilter,
) -> AucmonStatus {
    if snapshot.is_null() || out.is_null() {
        return AucmonStatus::NullPointer;
    }
    let Ok(text) = CStr::from_ptr(snapshot).to_str() else {
        return AucmonStatus::MalformedSnapshot;
    };
    match FilterState::from_snapshot(text) {
        Ok(state) => {
            *out = Box::into_raw(Box::new(AucmonFilter(state)));
            AucmonStatus::Ok
        }
        Err(_) => AucmonStatus::MalformedSnapshot,
    }
}

/// Frees a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must come from `aucmon_filter_snapshot` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn aucmon_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
