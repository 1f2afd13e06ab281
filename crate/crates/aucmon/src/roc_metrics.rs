//! Mann-Whitney AUCROC and DeLong variance estimation.
//!
//! The estimator works from per-sample placement values: for a positive
//! score, the fraction of negatives it outranks (`V10`), and symmetrically
//! `V01` for negatives. The sample variances of the placement values give
//! the DeLong variance `S10/m + S01/n`. Because every placement value lies
//! in [0,1], the variance is bounded by `1/m + 1/n`; that bound replaces the
//! sample variance when a window has too few positives to estimate it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("degenerate batch: AUC undefined (m={m}, n={n})")]
    DegenerateBatch { m: usize, n: usize },
    #[error("invalid score: {0}")]
    InvalidScore(f64),
    #[error("unbounded variance: m and n must both be positive")]
    UnboundedVariance,
    #[error("bootstrap requires m >= 2, n >= 2 and at least 100 resamples")]
    BootstrapUnderpowered,
}

/// One window's predictions, split by ground-truth class.
///
/// Order of scores within either class is irrelevant; every estimate on a
/// batch is permutation-invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredBatch {
    positives: Vec<f64>,
    negatives: Vec<f64>,
}

impl ScoredBatch {
    /// Builds a batch, rejecting non-finite scores. Empty classes are
    /// allowed here; estimation operations reject them.
    pub fn new(positives: Vec<f64>, negatives: Vec<f64>) -> Result<Self, MetricsError> {
        for &s in positives.iter().chain(negatives.iter()) {
            if !s.is_finite() {
                return Err(MetricsError::InvalidScore(s));
            }
        }
        Ok(Self {
            positives,
            negatives,
        })
    }

    pub fn m(&self) -> usize {
        self.positives.len()
    }

    pub fn n(&self) -> usize {
        self.negatives.len()
    }

    pub fn positives(&self) -> &[f64] {
        &self.positives
    }

    pub fn negatives(&self) -> &[f64] {
        &self.negatives
    }

    fn check_nondegenerate(&self) -> Result<(), MetricsError> {
        if self.positives.is_empty() || self.negatives.is_empty() {
            return Err(MetricsError::DegenerateBatch {
                m: self.m(),
                n: self.n(),
            });
        }
        Ok(())
    }

    /// Mann-Whitney AUCROC: the fraction of positive/negative pairs ranked
    /// correctly, ties counting one half.
    pub fn auc(&self) -> Result<f64, MetricsError> {
        let (v10, _) = self.placement_values()?;
        Ok(mean(&v10))
    }

    /// Placement values `(V10, V01)`.
    ///
    /// `V10[i]` is the fraction of negatives scored below positive `i`;
    /// `V01[j]` is the fraction of positives scored above negative `j`.
    /// Ties count 0.5 on both sides, so `mean(V10) == mean(V01) == auc`.
    /// Computed by sorting each class once, O((m+n) log(m+n)).
    pub fn placement_values(&self) -> Result<(Vec<f64>, Vec<f64>), MetricsError> {
        self.check_nondegenerate()?;
        let mut pos_sorted = self.positives.clone();
        let mut neg_sorted = self.negatives.clone();
        pos_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        neg_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = pos_sorted.len() as f64;
        let n = neg_sorted.len() as f64;

        let v10 = self
            .positives
            .iter()
            .map(|&x| {
                let below = neg_sorted.partition_point(|&y| y < x);
                let ties = neg_sorted.partition_point(|&y| y <= x) - below;
                (below as f64 + 0.5 * ties as f64) / n
            })
            .collect();
        let v01 = self
            .negatives
            .iter()
            .map(|&y| {
                let not_above = pos_sorted.partition_point(|&x| x <= y);
                let ties = not_above - pos_sorted.partition_point(|&x| x < y);
                let above = pos_sorted.len() - not_above;
                (above as f64 + 0.5 * ties as f64) / m
            })
            .collect();
        Ok((v10, v01))
    }

    /// DeLong point and variance estimate.
    ///
    /// When `m > min_positives` and both classes have at least two samples,
    /// the variance is `S10/m + S01/n` with `S10`/`S01` the sample variances
    /// of the placement values. Otherwise the conservative upper bound
    /// `1/m + 1/n` is used, with `s10 = s01 = 1` so downstream extrapolation
    /// stays consistent with the bound.
    pub fn delong(&self, min_positives: usize) -> Result<DelongEstimate, MetricsError> {
        let (v10, v01) = self.placement_values()?;
        let m = self.m();
        let n = self.n();
        let theta = mean(&v10);
        if m > min_positives && m >= 2 && n >= 2 {
            let s10 = sample_variance_about(&v10, theta);
            let s01 = sample_variance_about(&v01, theta);
            Ok(DelongEstimate {
                theta,
                s10,
                s01,
                variance: s10 / m as f64 + s01 / n as f64,
                used_upper_bound: false,
                m,
                n,
            })
        } else {
            Ok(DelongEstimate {
                theta,
                s10: 1.0,
                s01: 1.0,
                variance: variance_upper_bound(m, n)?,
                used_upper_bound: true,
                m,
                n,
            })
        }
    }

    /// Stratified bootstrap variance of the AUC, as an empirical
    /// cross-check on the DeLong estimate. Positives and negatives are
    /// resampled independently with replacement; deterministic given `seed`.
    pub fn bootstrap_variance(&self, resamples: usize, seed: u64) -> Result<f64, MetricsError> {
        if self.m() < 2 || self.n() < 2 || resamples < 100 {
            return Err(MetricsError::BootstrapUnderpowered);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut aucs = Vec::with_capacity(resamples);
        let mut pos = vec![0.0; self.m()];
        let mut neg = vec![0.0; self.n()];
        for _ in 0..resamples {
            for slot in pos.iter_mut() {
                *slot = self.positives[rng.gen_range(0..self.positives.len())];
            }
            for slot in neg.iter_mut() {
                *slot = self.negatives[rng.gen_range(0..self.negatives.len())];
            }
            let batch = ScoredBatch {
                positives: pos.clone(),
                negatives: neg.clone(),
            };
            aucs.push(batch.auc()?);
        }
        let mean_auc = mean(&aucs);
        Ok(sample_variance_about(&aucs, mean_auc))
    }
}

/// DeLong estimate of AUCROC mean and variance for one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelongEstimate {
    pub theta: f64,
    pub s10: f64,
    pub s01: f64,
    pub variance: f64,
    pub used_upper_bound: bool,
    pub m: usize,
    pub n: usize,
}

/// The variance bound `1/m + 1/n`, valid for every batch with the given
/// class counts.
pub fn variance_upper_bound(m: usize, n: usize) -> Result<f64, MetricsError> {
    if m == 0 || n == 0 {
        return Err(MetricsError::UnboundedVariance);
    }
    Ok(1.0 / m as f64 + 1.0 / n as f64)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

// Unbiased (k-1 divisor) variance of xs around a fixed center.
fn sample_variance_about(xs: &[f64], center: f64) -> f64 {
    let k = xs.len();
    debug_assert!(k >= 2);
    xs.iter().map(|x| (x - center).powi(2)).sum::<f64>() / (k - 1) as f64
}
