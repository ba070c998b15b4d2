use super::{check_beliefs, check_obs, BackendKind, LikelihoodBackend, PerModalityLogLik};
use crate::error::Result;
use crate::model::{BeliefState, ModelSpec, Observation};
use crate::tensor::{DenseTensor, Real};

struct Table<T> {
    deps: Vec<usize>,
    dep_extents: Vec<usize>,
    columns: usize,
    values: Vec<T>,
}

/// One tensor per modality, evaluated modality by modality.
pub struct RaggedBackend<T: Real = f64> {
    tables: Vec<Table<T>>,
    outcome_counts: Vec<usize>,
    cardinalities: Vec<usize>,
}

impl<T: Real> RaggedBackend<T> {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        spec.check_structure()?;
        let tables = spec
            .modalities
            .iter()
            .zip(&spec.likelihoods)
            .map(|(m, a)| Table {
                deps: m.deps.clone(),
                dep_extents: a.shape[1..].to_vec(),
                columns: a.num_columns(),
                values: a.values.iter().map(|&v| T::from_f64(v)).collect(),
            })
            .collect();
        Ok(Self {
            tables,
            outcome_counts: spec.modalities.iter().map(|m| m.cardinality).collect(),
            cardinalities: spec.factor_cardinalities(),
        })
    }
}

impl<T: Real> LikelihoodBackend<T> for RaggedBackend<T> {
    fn kind(&self) -> BackendKind {
        BackendKind::BaselineRagged
    }

    fn per_modality_loglik(&self, obs: &Observation) -> Result<PerModalityLogLik<T>> {
        check_obs(obs, &self.outcome_counts)?;
        let mut out = Vec::with_capacity(self.tables.len());
        for (t, &o) in self.tables.iter().zip(&obs.outcomes) {
            let slice = &t.values[o * t.columns..(o + 1) * t.columns];
            let logs: Vec<T> = slice.iter().map(|v| v.ln()).collect();
            out.push(DenseTensor::from_vec(t.dep_extents.clone(), logs)?);
        }
        Ok(PerModalityLogLik::Ragged(out))
    }

    fn expected_loglik(&self, obs: &Observation, beliefs: &BeliefState) -> Result<f64> {
        check_obs(obs, &self.outcome_counts)?;
        check_beliefs(beliefs, &self.cardinalities)?;
        let q = beliefs.marginals();
        let mut total = 0.0;
        let mut index = Vec::new();
        for (t, &o) in self.tables.iter().zip(&obs.outcomes) {
            let slice = &t.values[o * t.columns..(o + 1) * t.columns];
            index.clear();
            index.resize(t.deps.len(), 0);
            let mut partial = 0.0;
            for &v in slice {
                let mut w = 1.0;
                let mut supported = true;
                for (&d, &s) in t.deps.iter().zip(&index) {
                    let p = q[d][s];
                    if p == 0.0 {
                        supported = false;
                        break;
                    }
                    w *= p;
                }
                if supported {
                    if v == T::zero() {
                        return Ok(f64::NEG_INFINITY);
                    }
                    partial += w * Into::<f64>::into(v.ln());
                }
                crate::tensor::next_index(&mut index, &t.dep_extents);
            }
            total += partial;
        }
        Ok(total)
    }

    fn representation_bytes(&self) -> usize {
        self.tables.iter().map(|t| t.values.len()).sum::<usize>() * T::BYTES
    }
}
