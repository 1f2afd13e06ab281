//! Synthetic drift scenarios: per-step score batches drawn from a binormal
//! model with scheduled sample size, positive ratio, and ground-truth AUC.
//!
//! Negative scores are Normal(0, 1) and positive scores Normal(delta, 1)
//! with `delta = sqrt(2) * inv_phi(auc)`, so the scheduled AUC is exact in
//! expectation. Generation uses a fixed ChaCha8 stream, so runs are
//! byte-stable across platforms for a given seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::roc_metrics::ScoredBatch;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("target AUC must lie strictly inside (0, 1), got {0}")]
    AucOutOfRange(f64),
    #[error("empty class in schedule at step {step}: total={total}, m={m}, n={n}")]
    EmptyClass {
        step: usize,
        total: i64,
        m: i64,
        n: i64,
    },
    #[error("scenario has no phases")]
    NoPhases,
    #[error("phase {0} has zero steps")]
    EmptyPhase(usize),
    #[error("scenario parse error: {0}")]
    Parse(String),
}

/// A scheduled quantity: either constant for the whole phase or a linear
/// ramp between inclusive endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedule {
    Constant(f64),
    Ramp { start: f64, end: f64 },
}

impl Schedule {
    /// Value at `step` (0-based) of a phase with `steps` steps.
    pub fn at(&self, step: usize, steps: usize) -> f64 {
        match *self {
            Schedule::Constant(v) => v,
            Schedule::Ramp { start, end } => {
                if steps <= 1 {
                    start
                } else {
                    start + (end - start) * step as f64 / (steps - 1) as f64
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub steps: usize,
    pub total_samples: Schedule,
    pub positive_ratio: Schedule,
    pub true_auc: Schedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub phases: Vec<PhaseSpec>,
}

/// One generated step: the batch plus the scheduled ground truth.
#[derive(Debug, Clone)]
pub struct SimStep {
    pub step: usize,
    pub batch: ScoredBatch,
    pub true_auc: f64,
    pub m: usize,
    pub n: usize,
}

/// Mean separation of the binormal model with unit variances that yields
/// the given AUC: `delta = sqrt(2) * inv_phi(auc)`.
pub fn delta_for_auc(target_auc: f64) -> Result<f64, SimError> {
    if !(target_auc > 0.0 && target_auc < 1.0) {
        return Err(SimError::AucOutOfRange(target_auc));
    }
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    Ok(std::f64::consts::SQRT_2 * std_normal.inverse_cdf(target_auc))
}

/// Inverse of [`delta_for_auc`]: AUC of Normal(delta, 1) vs Normal(0, 1).
pub fn auc_for_delta(delta: f64) -> f64 {
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    std_normal.cdf(delta / std::f64::consts::SQRT_2)
}

/// The 3-phase benchmark: shrinking volume, then growing skew, then a
/// performance decline under recovering volume. True AUC levels are
/// configurable; 0.95 declining to 0.85 by default.
pub fn paper_scenario(seed: u64, stable_auc: f64, declined_auc: f64) -> ScenarioSpec {
    ScenarioSpec {
        seed,
        phases: vec![
            PhaseSpec {
                steps: 20,
                total_samples: Schedule::Ramp {
                    start: 5000.0,
                    end: 50.0,
                },
                positive_ratio: Schedule::Constant(0.05),
                true_auc: Schedule::Constant(stable_auc),
            },
            PhaseSpec {
                steps: 20,
                total_samples: Schedule::Constant(400.0),
                positive_ratio: Schedule::Ramp {
                    start: 0.05,
                    end: 0.02,
                },
                true_auc: Schedule::Constant(stable_auc),
            },
            PhaseSpec {
                steps: 20,
                total_samples: Schedule::Ramp {
                    start: 400.0,
                    end: 5000.0,
                },
                positive_ratio: Schedule::Constant(0.02),
                true_auc: Schedule::Ramp {
                    start: stable_auc,
                    end: declined_auc,
                },
            },
        ],
    }
}

pub fn default_paper_scenario() -> ScenarioSpec {
    paper_scenario(0, 0.95, 0.85)
}

fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// Resolved per-step schedule values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPlan {
    pub step: usize,
    pub m: usize,
    pub n: usize,
    pub true_auc: f64,
}

impl ScenarioSpec {
    /// Expands the phase schedules into one plan entry per step, applying
    /// half-up rounding with a floor of one positive per step.
    pub fn plan(&self) -> Result<Vec<StepPlan>, SimError> {
        if self.phases.is_empty() {
            return Err(SimError::NoPhases);
        }
        let mut plans = Vec::new();
        let mut step = 0;
        for (phase_idx, phase) in self.phases.iter().enumerate() {
            if phase.steps == 0 {
                return Err(SimError::EmptyPhase(phase_idx));
            }
            for i in 0..phase.steps {
                let total = round_half_up(phase.total_samples.at(i, phase.steps));
                let ratio = phase.positive_ratio.at(i, phase.steps);
                let m = round_half_up(total as f64 * ratio).max(1);
                let n = total - m;
                if total < 2 || n < 1 {
                    return Err(SimError::EmptyClass { step, total, m, n });
                }
                plans.push(StepPlan {
                    step,
                    m: m as usize,
                    n: n as usize,
                    true_auc: phase.true_auc.at(i, phase.steps),
                });
                step += 1;
            }
        }
        Ok(plans)
    }

    /// Draws every step's batch. Deterministic given the scenario seed.
    pub fn generate(&self) -> Result<Vec<SimStep>, SimError> {
        let plans = self.plan()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut steps = Vec::with_capacity(plans.len());
        for plan in plans {
            let delta = delta_for_auc(plan.true_auc)?;
            let positives = draw_normal(&mut rng, plan.m, delta);
            let negatives = draw_normal(&mut rng, plan.n, 0.0);
            let batch = ScoredBatch::new(positives, negatives)
                .expect("normal draws are finite");
            steps.push(SimStep {
                step: plan.step,
                batch,
                true_auc: plan.true_auc,
                m: plan.m,
                n: plan.n,
            });
        }
        Ok(steps)
    }

    pub fn total_steps(&self) -> usize {
        self.phases.iter().map(|p| p.steps).sum()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        toml::from_str(text).map_err(|e| SimError::Parse(e.to_string()))
    }
}

fn draw_normal(rng: &mut ChaCha8Rng, count: usize, mean: f64) -> Vec<f64> {
    use rand::distributions::Distribution;
    let dist = Normal::new(mean, 1.0).unwrap();
    (0..count).map(|_| dist.sample(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn delta_for_half_is_zero() {
        assert_eq!(delta_for_auc(0.5).unwrap(), 0.0);
    }

    #[test]
    fn delta_known_values() {
        // phi(1/sqrt(2)) ~= 0.76025, so auc 0.76025 maps back to delta ~= 1.
        assert!((delta_for_auc(0.7602499389).unwrap() - 1.0).abs() < 1e-6);
        assert!((delta_for_auc(0.95).unwrap() - 2.3262).abs() < 1e-4);
        assert!(delta_for_auc(0.0).is_err());
        assert!(delta_for_auc(1.0).is_err());
    }

    #[test]
    fn delta_auc_round_trip() {
        for auc in [0.501, 0.6, 0.7602, 0.85, 0.95, 0.999] {
            let delta = delta_for_auc(auc).unwrap();
            assert!((auc_for_delta(delta) - auc).abs() < 1e-9);
        }
    }

    #[test]
    fn monte_carlo_auc_of_unit_delta() {
        // Empirical AUC over many pairs should approach phi(1/sqrt(2)).
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pos = draw_normal(&mut rng, 2000, 1.0);
        let neg = draw_normal(&mut rng, 2000, 0.0);
        let auc = ScoredBatch::new(pos, neg).unwrap().auc().unwrap();
        assert!((auc - 0.7602).abs() < 0.02);
    }

    #[test]
    fn default_scenario_shape() {
        let scenario = default_paper_scenario();
        assert_eq!(scenario.total_steps(), 60);
        let plans = scenario.plan().unwrap();
        assert_eq!(plans.len(), 60);
        // Phase 1 starts at 5000 total, 5% positives.
        assert_eq!(plans[0].m, 250);
        assert_eq!(plans[0].n, 4750);
        // Phase 1 ends at 50 total.
        assert_eq!(plans[19].m + plans[19].n, 50);
        // Phase 2 holds 400 total throughout, ending at 2% positives.
        for plan in &plans[20..40] {
            assert_eq!(plan.m + plan.n, 400);
        }
        assert_eq!(plans[39].m, 8);
        assert_eq!(plans[39].n, 392);
        // Phase 3 ramps back to 5000 with declining truth.
        assert_eq!(plans[59].m + plans[59].n, 5000);
        assert!((plans[40].true_auc - 0.95).abs() < 1e-12);
        assert!((plans[59].true_auc - 0.85).abs() < 1e-12);
    }

    #[test]
    fn generation_is_deterministic() {
        let scenario = paper_scenario(123, 0.95, 0.85);
        let a = scenario.generate().unwrap();
        let b = scenario.generate().unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.batch, y.batch);
        }
    }

    #[test]
    fn generated_sizes_match_plan() {
        let scenario = paper_scenario(5, 0.9, 0.8);
        let plans = scenario.plan().unwrap();
        for (step, plan) in scenario.generate().unwrap().iter().zip(&plans) {
            assert_eq!(step.batch.m(), plan.m);
            assert_eq!(step.batch.n(), plan.n);
        }
    }

    #[test]
    fn large_step_auc_is_statistically_consistent() {
        let scenario = paper_scenario(7, 0.95, 0.85);
        let first = &scenario.generate().unwrap()[0];
        let est = first.batch.delong(10).unwrap();
        let se = est.variance.sqrt();
        assert!((est.theta - first.true_auc).abs() < 3.0 * se.max(1e-3));
    }

    #[test]
    fn regenerated_step_mean_auc_matches_truth() {
        // Fix the phase-2-end geometry (m=8, n=392) and average sample AUC
        // over 200 regenerations.
        let mut total = 0.0;
        for seed in 0..200u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let delta = delta_for_auc(0.95).unwrap();
            let pos = draw_normal(&mut rng, 8, delta);
            let neg = draw_normal(&mut rng, 392, 0.0);
            total += ScoredBatch::new(pos, neg).unwrap().auc().unwrap();
        }
        assert!((total / 200.0 - 0.95).abs() < 0.005);
    }

    #[test]
    fn degenerate_schedule_rejected() {
        let scenario = ScenarioSpec {
            seed: 0,
            phases: vec![PhaseSpec {
                steps: 3,
                total_samples: Schedule::Ramp {
                    start: 10.0,
                    end: 1.0,
                },
                positive_ratio: Schedule::Constant(0.5),
                true_auc: Schedule::Constant(0.9),
            }],
        };
        let err = scenario.plan().unwrap_err();
        assert!(err.to_string().contains("empty class in schedule"));
    }

    #[test]
    fn toml_round_trip_default() {
        let scenario = default_paper_scenario();
        assert_eq!(
            ScenarioSpec::from_toml(&scenario.to_toml()).unwrap(),
            scenario
        );
        assert!(ScenarioSpec::from_toml("phases = 3").is_err());
    }

    proptest! {
        #[test]
        fn toml_round_trip_arbitrary(
            seed in 0u64..=i64::MAX as u64,
            steps in 1usize..30,
            start in 100.0f64..2000.0,
            end in 100.0f64..2000.0,
            ratio in 0.05f64..0.5,
            auc in 0.55f64..0.99,
        ) {
            let scenario = ScenarioSpec {
                seed,
                phases: vec![PhaseSpec {
                    steps,
                    total_samples: Schedule::Ramp { start: start.round(), end: end.round() },
                    positive_ratio: Schedule::Constant(ratio),
                    true_auc: Schedule::Constant(auc),
                }],
            };
            prop_assert_eq!(ScenarioSpec::from_toml(&scenario.to_toml()).unwrap(), scenario);
        }
    }
}
