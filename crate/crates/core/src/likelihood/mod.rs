//! Log-likelihood of an observation under the observation model.
//!
//! Two quantities are computed:
//!
//! * per-modality log-likelihood: for each modality `m`, the array
//!   `log p(o^m | s_deps)` over the modality's dependent states;
//! * expected log-likelihood under factorized beliefs `q`:
//!   `sum_m sum_{s_deps} (prod_{n in deps} q_n(s_n)) * log p(o^m | s_deps)`.
//!
//! Zero likelihoods map to `-inf`. In the expectation a state combination
//! with zero belief weight is skipped before any logarithm is taken, so
//! `0 * log 0` contributes nothing; a zero likelihood under a supported
//! combination makes the result `-inf`.

mod dense;
mod oracle;
mod ragged;
mod sparse;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BeliefState, ModelSpec, Observation};
use crate::tensor::{DenseTensor, Real};

pub use dense::UnifiedDenseBackend;
pub use oracle::{
    brute_force_oracle, contract_joint, joint_loglik_tensor, JOINT_STATE_LIMIT, ORACLE_STATE_LIMIT,
};
pub use ragged::RaggedBackend;
pub use sparse::UnifiedSparseBackend;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    BaselineRagged,
    UnifiedDense,
    UnifiedSparse,
}

impl BackendKind {
    pub const ALL: [BackendKind; 3] = [
        Self::BaselineRagged,
        Self::UnifiedDense,
        Self::UnifiedSparse,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::BaselineRagged => "baseline-ragged",
            Self::UnifiedDense => "unified-dense",
            Self::UnifiedSparse => "unified-sparse",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "baseline-ragged" | "ragged" | "baseline" => Ok(Self::BaselineRagged),
            "unified-dense" | "dense" => Ok(Self::UnifiedDense),
            "unified-sparse" | "sparse" => Ok(Self::UnifiedSparse),
            other => Err(format!(
                "unknown backend `{other}` (expected baseline-ragged, unified-dense or unified-sparse)"
            )),
        }
    }
}

/// Per-modality log-likelihood arrays, in the layout of the producing backend.
#[derive(Debug, Clone, PartialEq)]
pub enum PerModalityLogLik<T> {
    /// One array per modality over its own dependent states.
    Ragged(Vec<DenseTensor<T>>),
    /// `M` consecutive blocks of `K_max^D_max` padded states; entries outside
    /// a modality's extents are `-inf` and carry no meaning.
    Padded {
        k_max: usize,
        d_max: usize,
        values: Vec<T>,
    },
    /// Stored entries only; modality `m` owns `offsets[m]..offsets[m + 1]`,
    /// `states` holds the padded flat state index. Absent states are `-inf`.
    Sparse {
        k_max: usize,
        d_max: usize,
        offsets: Vec<usize>,
        states: Vec<u32>,
        values: Vec<T>,
    },
}

impl<T: Real> PerModalityLogLik<T> {
    pub fn num_modalities(&self) -> usize {
        match self {
            Self::Ragged(v) => v.len(),
            Self::Padded {
                k_max,
                d_max,
                values,
            } => values.len() / k_max.pow(*d_max as u32).max(1),
            Self::Sparse { offsets, .. } => offsets.len().saturating_sub(1),
        }
    }

    /// `log p(o^m | states)` with `states` indexed like the modality's deps.
    pub fn get(&self, modality: usize, states: &[usize]) -> f64 {
        match self {
            Self::Ragged(v) => v[modality]
                .get(states)
                .map(Into::into)
                .unwrap_or(f64::NEG_INFINITY),
            Self::Padded {
                k_max,
                d_max,
                values,
            } => {
                let per = k_max.pow(*d_max as u32);
                values[modality * per + padded_flat(states, *k_max, *d_max)].into()
            }
            Self::Sparse {
                k_max,
                d_max,
                offsets,
                states: idx,
                values,
            } => {
                let flat = padded_flat(states, *k_max, *d_max) as u32;
                let range = offsets[modality]..offsets[modality + 1];
                match idx[range.clone()].binary_search(&flat) {
                    Ok(i) => values[range.start + i].into(),
                    Err(_) => f64::NEG_INFINITY,
                }
            }
        }
    }

    /// Re-expresses the output as one `f64` array per modality.
    ///
    /// `dep_shapes[m]` lists the extents of modality `m`'s deps.
    pub fn to_ragged(&self, dep_shapes: &[Vec<usize>]) -> Vec<DenseTensor<f64>> {
        dep_shapes
            .iter()
            .enumerate()
            .map(|(m, shape)| {
                let mut out = DenseTensor::zeros(shape.clone());
                let mut index = vec![0usize; shape.len()];
                for v in out.data_mut() {
                    *v = self.get(m, &index);
                    crate::tensor::next_index(&mut index, shape);
                }
                out
            })
            .collect()
    }
}

fn padded_flat(states: &[usize], k_max: usize, d_max: usize) -> usize {
    let mut flat = 0;
    for j in 0..d_max {
        flat = flat * k_max + states.get(j).copied().unwrap_or(0);
    }
    flat
}

/// One way of evaluating the log-likelihood of a fixed model.
pub trait LikelihoodBackend<T: Real>: Send + Sync {
    fn kind(&self) -> BackendKind;

    fn per_modality_loglik(&self, obs: &Observation) -> Result<PerModalityLogLik<T>>;

    fn expected_loglik(&self, obs: &Observation, beliefs: &BeliefState) -> Result<f64>;

    /// Bytes held by the likelihood representation this backend reads.
    fn representation_bytes(&self) -> usize;
}

pub fn build_backend<T: Real>(
    spec: &ModelSpec,
    kind: BackendKind,
) -> Result<Box<dyn LikelihoodBackend<T>>> {
    Ok(match kind {
        BackendKind::BaselineRagged => Box::new(RaggedBackend::<T>::new(spec)?),
        BackendKind::UnifiedDense => Box::new(UnifiedDenseBackend::<T>::new(spec)?),
        BackendKind::UnifiedSparse => Box::new(UnifiedSparseBackend::<T>::new(spec)?),
    })
}

/// All three backends built over one model.
pub struct ModelView<T: Real = f64> {
    ragged: RaggedBackend<T>,
    dense: UnifiedDenseBackend<T>,
    sparse: UnifiedSparseBackend<T>,
}

impl<T: Real> ModelView<T> {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        Ok(Self {
            ragged: RaggedBackend::new(spec)?,
            dense: UnifiedDenseBackend::new(spec)?,
            sparse: UnifiedSparseBackend::new(spec)?,
        })
    }

    pub fn backend(&self, kind: BackendKind) -> &dyn LikelihoodBackend<T> {
        match kind {
            BackendKind::BaselineRagged => &self.ragged,
            BackendKind::UnifiedDense => &self.dense,
            BackendKind::UnifiedSparse => &self.sparse,
        }
    }

    pub fn per_modality_loglik(
        &self,
        obs: &Observation,
        kind: BackendKind,
    ) -> Result<PerModalityLogLik<T>> {
        self.backend(kind).per_modality_loglik(obs)
    }

    pub fn expected_loglik(
        &self,
        obs: &Observation,
        beliefs: &BeliefState,
        kind: BackendKind,
    ) -> Result<f64> {
        self.backend(kind).expected_loglik(obs, beliefs)
    }
}

pub(crate) fn check_obs(obs: &Observation, outcome_counts: &[usize]) -> Result<()> {
    crate::model::check_outcomes(&obs.outcomes, outcome_counts.iter().copied())
}

pub(crate) fn check_beliefs(beliefs: &BeliefState, cardinalities: &[usize]) -> Result<()> {
    crate::model::check_belief_shape(beliefs.marginals(), cardinalities.iter().copied())
}

/// Factor marginals padded to `K_max`, plus a trailing point-mass row used by
/// BROADCAST slots. Row `r` starts at `r * k_max`.
pub(crate) fn padded_belief_rows(beliefs: &BeliefState, k_max: usize) -> Result<Vec<f64>> {
    if k_max == 0 {
        return Err(Error::ShapeMismatch("K_max is 0".into()));
    }
    let q = beliefs.marginals();
    let mut rows = vec![0.0; (q.len() + 1) * k_max];
    for (n, qn) in q.iter().enumerate() {
        if qn.len() > k_max {
            // factor never used as a dep; its row is never read
            continue;
        }
        rows[n * k_max..n * k_max + qn.len()].copy_from_slice(qn);
    }
    rows[q.len() * k_max] = 1.0;
    Ok(rows)
}
