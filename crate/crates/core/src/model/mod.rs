//! Factored categorical observation models: types, validation and accounting.
//!
//! A model has `N` hidden-state factors with `K_n` states each and `M`
//! observation modalities with `L_m` outcomes each. Modality `m` conditions on
//! an ordered subset `deps(m)` of the factors; its likelihood tensor has shape
//! `[L_m, K_{d1}, ..., K_{dD}]` and every column (fixed dependent states) is a
//! categorical distribution over outcomes.

mod generate;
mod io;
mod preset;

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::{generate_model, GeneratorConfig};
pub use io::{load_model, read_model, save_model, write_model};
pub use preset::{preset, ModelPreset, PresetName};

/// Tolerance on column and belief normalization.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub id: usize,
    pub cardinality: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModalitySpec {
    pub id: usize,
    pub cardinality: usize,
    pub deps: Vec<usize>,
}

/// Likelihood table of one modality, stored row-major with the outcome axis first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodTensor {
    pub modality: usize,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl LikelihoodTensor {
    /// Number of dependent-state combinations (columns).
    pub fn num_columns(&self) -> usize {
        self.shape.iter().skip(1).product()
    }

    /// Values of the slice selected by outcome `o`, in row-major dep order.
    pub fn outcome_slice(&self, o: usize) -> &[f64] {
        let cols = self.num_columns();
        &self.values[o * cols..(o + 1) * cols]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub factors: Vec<FactorSpec>,
    pub modalities: Vec<ModalitySpec>,
    pub likelihoods: Vec<LikelihoodTensor>,
}

impl ModelSpec {
    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn num_modalities(&self) -> usize {
        self.modalities.len()
    }

    pub fn factor_cardinalities(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.cardinality).collect()
    }

    /// Sum of `K_n` over all factors.
    pub fn total_hidden_states(&self) -> usize {
        self.factors.iter().map(|f| f.cardinality).sum()
    }

    pub fn max_outcomes(&self) -> usize {
        self.modalities
            .iter()
            .map(|m| m.cardinality)
            .max()
            .unwrap_or(0)
    }

    /// Largest cardinality among factors that some modality depends on.
    pub fn max_dep_cardinality(&self) -> usize {
        self.modalities
            .iter()
            .flat_map(|m| m.deps.iter())
            .filter_map(|&d| self.factors.get(d))
            .map(|f| f.cardinality)
            .max()
            .unwrap_or(0)
    }

    pub fn max_deps(&self) -> usize {
        self.modalities
            .iter()
            .map(|m| m.deps.len())
            .max()
            .unwrap_or(0)
    }

    /// Size of the full joint state space, `prod_n K_n`.
    pub fn joint_state_count(&self) -> u128 {
        self.factors
            .iter()
            .map(|f| f.cardinality as u128)
            .fold(1u128, |acc, k| acc.saturating_mul(k))
    }

    /// Expected likelihood shape `[L_m, K_deps...]`, if every dep is in range.
    pub fn expected_shape(&self, modality: usize) -> Option<Vec<usize>> {
        let m = self.modalities.get(modality)?;
        let mut shape = Vec::with_capacity(m.deps.len() + 1);
        shape.push(m.cardinality);
        for &d in &m.deps {
            shape.push(self.factors.get(d)?.cardinality);
        }
        Some(shape)
    }

    /// Returns `Err(InvalidModel)` with the structural violations, if any.
    ///
    /// Normalization and value-range violations are not structural: backends
    /// can still evaluate such a model.
    pub fn check_structure(&self) -> Result<()> {
        let structural: Vec<_> = validate_model(self)
            .into_iter()
            .filter(|v| v.code.is_structural())
            .collect();
        if structural.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidModel(structural))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationCode {
    EmptyModel,
    CountMismatch,
    IdMismatch,
    ZeroCardinality,
    EmptyDeps,
    DuplicateDep,
    DepOutOfRange,
    ShapeMismatch,
    ValueOutOfRange,
    NonNormalizedColumn,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::EmptyModel => "empty-model",
            Self::CountMismatch => "count-mismatch",
            Self::IdMismatch => "id-mismatch",
            Self::ZeroCardinality => "zero-cardinality",
            Self::EmptyDeps => "empty-deps",
            Self::DuplicateDep => "duplicate-dep",
            Self::DepOutOfRange => "dep-out-of-range",
            Self::ShapeMismatch => "shape-mismatch",
            Self::ValueOutOfRange => "value-out-of-range",
            Self::NonNormalizedColumn => "non-normalized-column",
        }
    }

    pub fn is_structural(self) -> bool {
        !matches!(self, Self::ValueOutOfRange | Self::NonNormalizedColumn)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modality: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factor: Option<usize>,
    pub detail: String,
}

impl Violation {
    fn modality(code: ViolationCode, m: usize, detail: String) -> Self {
        Self {
            code,
            modality: Some(m),
            factor: None,
            detail,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code.as_str())?;
        if let Some(m) = self.modality {
            write!(f, " @ modality {m}")?;
        }
        if let Some(n) = self.factor {
            write!(f, " @ factor {n}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// Every invariant violation in `spec`; empty iff the model is valid.
pub fn validate_model(spec: &ModelSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = spec.factors.len();
    let m_count = spec.modalities.len();

    if n == 0 || m_count == 0 {
        out.push(Violation {
            code: ViolationCode::EmptyModel,
            modality: None,
            factor: None,
            detail: format!("need at least one factor and one modality (N={n}, M={m_count})"),
        });
    }

    for (i, f) in spec.factors.iter().enumerate() {
        if f.id != i {
            out.push(Violation {
                code: ViolationCode::IdMismatch,
                modality: None,
                factor: Some(i),
                detail: format!("factor at position {i} has id {}", f.id),
            });
        }
        if f.cardinality == 0 {
            out.push(Violation {
                code: ViolationCode::ZeroCardinality,
                modality: None,
                factor: Some(i),
                detail: "factor cardinality is 0".into(),
            });
        }
    }

    for (i, m) in spec.modalities.iter().enumerate() {
        if m.id != i {
            out.push(Violation::modality(
                ViolationCode::IdMismatch,
                i,
                format!("modality at position {i} has id {}", m.id),
            ));
        }
        if m.cardinality == 0 {
            out.push(Violation::modality(
                ViolationCode::ZeroCardinality,
                i,
                "outcome cardinality is 0".into(),
            ));
        }
        if m.deps.is_empty() {
            out.push(Violation::modality(
                ViolationCode::EmptyDeps,
                i,
                "modality depends on no factor".into(),
            ));
        }
        for (j, &d) in m.deps.iter().enumerate() {
            if d >= n {
                out.push(Violation::modality(
                    ViolationCode::DepOutOfRange,
                    i,
                    format!("dep {d} but the model has {n} factors"),
                ));
            }
            if m.deps[..j].contains(&d) {
                out.push(Violation::modality(
                    ViolationCode::DuplicateDep,
                    i,
                    format!("factor {d} listed twice"),
                ));
            }
        }
    }

    if spec.likelihoods.len() != m_count {
        out.push(Violation {
            code: ViolationCode::CountMismatch,
            modality: None,
            factor: None,
            detail: format!(
                "{} likelihood tensors for {m_count} modalities",
                spec.likelihoods.len()
            ),
        });
    }

    for (i, a) in spec.likelihoods.iter().enumerate().take(m_count) {
        if a.modality != i {
            out.push(Violation::modality(
                ViolationCode::IdMismatch,
                i,
                format!(
                    "likelihood at position {i} is tagged modality {}",
                    a.modality
                ),
            ));
        }
        let expected = spec.expected_shape(i);
        if expected.as_deref() != Some(a.shape.as_slice()) {
            out.push(Violation::modality(
                ViolationCode::ShapeMismatch,
                i,
                format!("shape {:?}, expected {:?}", a.shape, expected),
            ));
            continue;
        }
        let len: usize = a.shape.iter().product();
        if a.values.len() != len {
            out.push(Violation::modality(
                ViolationCode::ShapeMismatch,
                i,
                format!(
                    "{} values for shape {:?} ({len} entries)",
                    a.values.len(),
                    a.shape
                ),
            ));
            continue;
        }
        if let Some(bad) = a.values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            out.push(Violation::modality(
                ViolationCode::ValueOutOfRange,
                i,
                format!("value {bad} outside [0, 1]"),
            ));
        }
        let cols = a.num_columns();
        let bad_col = (0..cols).find_map(|c| {
            let sum: f64 = (0..a.shape[0]).map(|o| a.values[o * cols + c]).sum();
            ((sum - 1.0).abs() > NORMALIZATION_TOL).then_some((c, sum))
        });
        if let Some((c, sum)) = bad_col {
            out.push(Violation::modality(
                ViolationCode::NonNormalizedColumn,
                i,
                format!("column {c} sums to {sum}"),
            ));
        }
    }
    out
}

/// Number of stored values in the per-modality ragged representation,
/// `sum_m L_m * prod_{n in deps(m)} K_n`.
pub fn original_param_count(spec: &ModelSpec) -> usize {
    spec.modalities
        .iter()
        .map(|m| {
            m.cardinality
                * m.deps
                    .iter()
                    .map(|&d| spec.factors[d].cardinality)
                    .product::<usize>()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityStats {
    pub total: usize,
    pub nonzero: usize,
    pub sparsity_percent: f64,
}

impl SparsityStats {
    pub fn from_counts(total: usize, nonzero: usize) -> Self {
        let sparsity_percent = if total == 0 {
            0.0
        } else {
            100.0 * (1.0 - nonzero as f64 / total as f64)
        };
        Self {
            total,
            nonzero,
            sparsity_percent,
        }
    }
}

/// Counts entries with `|v| > threshold` across all likelihood tensors.
pub fn sparsity_stats(spec: &ModelSpec, threshold: f64) -> SparsityStats {
    let (total, nonzero) = spec.likelihoods.iter().fold((0, 0), |(t, nz), a| {
        (
            t + a.values.len(),
            nz + a.values.iter().filter(|v| v.abs() > threshold).count(),
        )
    });
    SparsityStats::from_counts(total, nonzero)
}

/// One realized outcome per modality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub outcomes: Vec<usize>,
}

impl Observation {
    pub fn new(outcomes: Vec<usize>) -> Self {
        Self { outcomes }
    }

    pub fn check(&self, spec: &ModelSpec) -> Result<()> {
        check_outcomes(
            &self.outcomes,
            spec.modalities.iter().map(|m| m.cardinality),
        )
    }

    /// Outcomes drawn uniformly per modality.
    pub fn random<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Self {
        Self {
            outcomes: spec
                .modalities
                .iter()
                .map(|m| rng.random_range(0..m.cardinality))
                .collect(),
        }
    }

    /// Outcomes sampled from the model at a fixed joint hidden state.
    pub fn sample<R: Rng + ?Sized>(spec: &ModelSpec, joint_state: &[usize], rng: &mut R) -> Self {
        let outcomes = spec
            .modalities
            .iter()
            .zip(&spec.likelihoods)
            .map(|(m, a)| {
                let mut col = 0;
                for &d in &m.deps {
                    col = col * spec.factors[d].cardinality + joint_state[d];
                }
                let cols = a.num_columns();
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut last_nonzero = 0;
                for o in 0..m.cardinality {
                    let p = a.values[o * cols + col];
                    if p > 0.0 {
                        last_nonzero = o;
                    }
                    acc += p;
                    if u < acc && p > 0.0 {
                        return o;
                    }
                }
                last_nonzero
            })
            .collect();
        Self { outcomes }
    }
}

pub(crate) fn check_outcomes(
    outcomes: &[usize],
    cardinalities: impl ExactSizeIterator<Item = usize>,
) -> Result<()> {
    if outcomes.len() != cardinalities.len() {
        return Err(Error::InvalidObservation(format!(
            "{} outcomes for {} modalities",
            outcomes.len(),
            cardinalities.len()
        )));
    }
    for (m, (&o, l)) in outcomes.iter().zip(cardinalities).enumerate() {
        if o >= l {
            return Err(Error::InvalidObservation(format!(
                "outcome {o} for modality {m} with {l} outcomes"
            )));
        }
    }
    Ok(())
}

/// Factorized posterior: one categorical distribution per hidden-state factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    marginals: Vec<Vec<f64>>,
}

impl BeliefState {
    pub fn new(marginals: Vec<Vec<f64>>) -> Result<Self> {
        for (n, q) in marginals.iter().enumerate() {
            if q.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidBeliefs(format!(
                    "factor {n} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = q.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidBeliefs(format!("factor {n} sums to {sum}")));
            }
        }
        Ok(Self { marginals })
    }

    pub fn marginals(&self) -> &[Vec<f64>] {
        &self.marginals
    }

    pub fn uniform(cardinalities: &[usize]) -> Self {
        Self {
            marginals: cardinalities
                .iter()
                .map(|&k| vec![1.0 / k as f64; k])
                .collect(),
        }
    }

    pub fn point_mass(cardinalities: &[usize], states: &[usize]) -> Result<Self> {
        if states.len() != cardinalities.len() {
            return Err(Error::BeliefShapeMismatch(format!(
                "{} states for {} factors",
                states.len(),
                cardinalities.len()
            )));
        }
        let marginals = cardinalities
            .iter()
            .zip(states)
            .map(|(&k, &s)| {
                if s >= k {
                    return Err(Error::IndexOutOfRange {
                        index: s,
                        extent: k,
                    });
                }
                let mut q = vec![0.0; k];
                q[s] = 1.0;
                Ok(q)
            })
            .collect::<Result<_>>()?;
        Ok(Self { marginals })
    }

    /// Random marginals; each state is independently dropped from the support
    /// with probability `zero_prob` (one state per factor is always kept).
    pub fn random<R: Rng + ?Sized>(cardinalities: &[usize], zero_prob: f64, rng: &mut R) -> Self {
        let marginals = cardinalities
            .iter()
            .map(|&k| {
                let keep = rng.random_range(0..k);
                let mut q: Vec<f64> = (0..k)
                    .map(|s| {
                        if s != keep && rng.random::<f64>() < zero_prob {
                            0.0
                        } else {
                            Exp1.sample(rng)
                        }
                    })
                    .collect();
                if q[keep] == 0.0 {
                    q[keep] = 1.0;
                }
                normalize(&mut q);
                q
            })
            .collect();
        Self { marginals }
    }

    pub fn check(&self, spec: &ModelSpec) -> Result<()> {
        check_belief_shape(&self.marginals, spec.factors.iter().map(|f| f.cardinality))
    }
}

pub(crate) fn check_belief_shape(
    marginals: &[Vec<f64>],
    cardinalities: impl ExactSizeIterator<Item = usize>,
) -> Result<()> {
    if marginals.len() != cardinalities.len() {
        return Err(Error::BeliefShapeMismatch(format!(
            "{} marginals for {} factors",
            marginals.len(),
            cardinalities.len()
        )));
    }
    for (n, (q, k)) in marginals.iter().zip(cardinalities).enumerate() {
        if q.len() != k {
            return Err(Error::BeliefShapeMismatch(format!(
                "factor {n} has {k} states but its marginal has length {}",
                q.len()
            )));
        }
    }
    Ok(())
}

pub(crate) fn normalize(v: &mut [f64]) {
    let sum: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= sum;
    }
}
