use super::{
    check_beliefs, check_obs, padded_belief_rows, BackendKind, LikelihoodBackend, PerModalityLogLik,
};
use crate::error::Result;
use crate::layout::{padded_param_count, unify, Slot, UnifiedLikelihood};
use crate::model::{BeliefState, ModelSpec, Observation};
use crate::tensor::Real;

/// Evaluates over the padded unified array, one `K_max^D_max` block per modality.
pub struct UnifiedDenseBackend<T: Real = f64> {
    unified: UnifiedLikelihood<T>,
    // per modality, per slot: row into the padded belief table
    belief_rows: Vec<Vec<usize>>,
    cardinalities: Vec<usize>,
}

impl<T: Real> UnifiedDenseBackend<T> {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let unified = unify(spec)?.cast::<T>();
        Ok(Self::from_unified(unified, spec.factor_cardinalities()))
    }

    pub fn from_unified(unified: UnifiedLikelihood<T>, cardinalities: Vec<usize>) -> Self {
        let broadcast_row = cardinalities.len();
        let belief_rows = (0..unified.num_modalities())
            .map(|m| {
                unified
                    .slot_map()
                    .slots(m)
                    .iter()
                    .map(|s| match *s {
                        Slot::Factor(n) => n,
                        Slot::Broadcast => broadcast_row,
                    })
                    .collect()
            })
            .collect();
        Self {
            unified,
            belief_rows,
            cardinalities,
        }
    }

    pub fn unified(&self) -> &UnifiedLikelihood<T> {
        &self.unified
    }

    fn block(&self, m: usize, o: usize) -> &[T] {
        let per = self.unified.states_per_slice();
        let start = (m * self.unified.l_max() + o) * per;
        &self.unified.array().data()[start..start + per]
    }
}

impl<T: Real> LikelihoodBackend<T> for UnifiedDenseBackend<T> {
    fn kind(&self) -> BackendKind {
        BackendKind::UnifiedDense
    }

    fn per_modality_loglik(&self, obs: &Observation) -> Result<PerModalityLogLik<T>> {
        check_obs(obs, self.unified.outcome_counts())?;
        let per = self.unified.states_per_slice();
        let mut values = Vec::with_capacity(self.unified.num_modalities() * per);
        for (m, &o) in obs.outcomes.iter().enumerate() {
            values.extend(self.block(m, o).iter().map(|v| v.ln()));
        }
        Ok(PerModalityLogLik::Padded {
            k_max: self.unified.k_max(),
            d_max: self.unified.d_max(),
            values,
        })
    }

    fn expected_loglik(&self, obs: &Observation, beliefs: &BeliefState) -> Result<f64> {
        check_obs(obs, self.unified.outcome_counts())?;
        check_beliefs(beliefs, &self.cardinalities)?;
        let k = self.unified.k_max();
        let d = self.unified.d_max();
        let rows = padded_belief_rows(beliefs, k)?;
        let mut index = vec![0usize; d];
        let extents = vec![k; d];
        let mut total = 0.0;
        for (m, &o) in obs.outcomes.iter().enumerate() {
            let slots = &self.belief_rows[m];
            index.fill(0);
            let mut partial = 0.0;
            for &v in self.block(m, o) {
                let mut w = 1.0;
                let mut supported = true;
                for (&r, &s) in slots.iter().zip(&index) {
                    let p = rows[r * k + s];
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
                crate::tensor::next_index(&mut index, &extents);
            }
            total += partial;
        }
        Ok(total)
    }

    fn representation_bytes(&self) -> usize {
        padded_param_count(&self.unified) * T::BYTES
    }
}
