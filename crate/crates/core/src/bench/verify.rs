//! Backend equivalence check for a single model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::likelihood::{brute_force_oracle, BackendKind, ModelView, ORACLE_STATE_LIMIT};
use crate::model::{validate_model, BeliefState, ModelSpec, Observation, Violation};
use crate::tensor::relative_deviation;

pub const VERIFY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureCase {
    pub trial: usize,
    pub backend: BackendKind,
    /// `"expected"` or `"per-modality"`.
    pub op: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modality: Option<usize>,
    pub observation: Observation,
    pub beliefs: BeliefState,
    /// Serialized as a string so that infinities survive JSON.
    pub reference: String,
    pub actual: String,
    pub relative_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub violations: Vec<Violation>,
    pub trials: usize,
    /// `"brute-force-oracle"` when the joint state space is small enough,
    /// otherwise `"baseline-ragged"`.
    pub reference: String,
    pub max_relative_deviation: f64,
    pub tolerance: f64,
    pub first_failure: Option<FailureCase>,
    pub passed: bool,
}

/// Validates `spec`, then compares every backend against the reference on
/// `trials` seeded (observation, beliefs) pairs. Half of the observations are
/// uniform, half are sampled from the model so that most are possible.
pub fn verify_model(spec: &ModelSpec, trials: usize, seed: u64) -> Result<VerifyReport> {
    let violations = validate_model(spec);
    let use_oracle = spec.joint_state_count() <= ORACLE_STATE_LIMIT;
    let mut report = VerifyReport {
        violations,
        trials: 0,
        reference: if use_oracle {
            "brute-force-oracle"
        } else {
            "baseline-ragged"
        }
        .into(),
        max_relative_deviation: 0.0,
        tolerance: VERIFY_TOLERANCE,
        first_failure: None,
        passed: false,
    };
    if !report.violations.is_empty() {
        return Ok(report);
    }

    let view = ModelView::<f64>::new(spec)?;
    let cards = spec.factor_cardinalities();
    let dep_shapes: Vec<Vec<usize>> = spec
        .modalities
        .iter()
        .map(|m| m.deps.iter().map(|&d| cards[d]).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for trial in 0..trials {
        let obs = if trial % 2 == 0 {
            Observation::random(spec, &mut rng)
        } else {
            let state: Vec<usize> = cards.iter().map(|&k| rng.random_range(0..k)).collect();
            Observation::sample(spec, &state, &mut rng)
        };
        let beliefs = BeliefState::random(&cards, 0.3, &mut rng);

        let reference = if use_oracle {
            brute_force_oracle(spec, &obs, &beliefs)?
        } else {
            view.expected_loglik(&obs, &beliefs, BackendKind::BaselineRagged)?
        };
        let direct = direct_loglik(spec, &obs);

        for kind in BackendKind::ALL {
            let mut record = |op: &str, modality: Option<usize>, r: f64, a: f64| {
                let dev = relative_deviation(r, a);
                report.max_relative_deviation = report.max_relative_deviation.max(dev);
                if dev >= VERIFY_TOLERANCE && report.first_failure.is_none() {
                    report.first_failure = Some(FailureCase {
                        trial,
                        backend: kind,
                        op: op.into(),
                        modality,
                        observation: obs.clone(),
                        beliefs: beliefs.clone(),
                        reference: r.to_string(),
                        actual: a.to_string(),
                        relative_deviation: dev,
                    });
                }
            };

            let value = view.expected_loglik(&obs, &beliefs, kind)?;
            record("expected", None, reference, value);

            let per = view.per_modality_loglik(&obs, kind)?.to_ragged(&dep_shapes);
            for (m, (got, want)) in per.iter().zip(&direct).enumerate() {
                for (&a, &r) in got.data().iter().zip(want) {
                    record("per-modality", Some(m), r, a);
                }
            }
        }
        report.trials += 1;
    }
    report.passed = report.first_failure.is_none();
    Ok(report)
}

/// `ln A^m[o^m, :]` straight from the spec's value arrays.
fn direct_loglik(spec: &ModelSpec, obs: &Observation) -> Vec<Vec<f64>> {
    spec.likelihoods
        .iter()
        .zip(&obs.outcomes)
        .map(|(a, &o)| a.outcome_slice(o).iter().map(|v| v.ln()).collect())
        .collect()
}
