use super::{
    check_beliefs, check_obs, padded_belief_rows, BackendKind, LikelihoodBackend, PerModalityLogLik,
};
use std::ops::Range;

use crate::coo::{coo_bytes, CooTensor};
use crate::error::Result;
use crate::layout::{unify, Slot};
use crate::model::{BeliefState, ModelSpec, Observation};
use crate::tensor::Real;

/// Evaluates over the packed unified array in coordinate format.
///
/// The `(modality, outcome)` slices are located once at construction with
/// two `gather_axis0` steps; entries are sorted, so each slice is a
/// contiguous entry range. Only stored entries are visited; zeros are
/// absent, so no logarithm of zero is ever taken.
pub struct UnifiedSparseBackend<T: Real = f64> {
    packed: CooTensor<T>,
    // padded flat state index of every stored entry
    flat_state: Vec<u32>,
    k_max: usize,
    d_max: usize,
    l_max: usize,
    // entry range of slice (m, o) is slice_start[m * l_max + o]..slice_start[m * l_max + o + 1]
    slice_start: Vec<usize>,
    // belief row per factor slot; BROADCAST slots are dropped since their
    // only stored coordinate meets the point mass
    belief_rows: Vec<Vec<usize>>,
    outcome_counts: Vec<usize>,
    cardinalities: Vec<usize>,
}

impl<T: Real> UnifiedSparseBackend<T> {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let unified = unify(spec)?;
        let packed = unified.to_coo(0.0).cast::<T>();
        let k_max = unified.k_max();
        let d_max = unified.d_max();

        let mut flat_state = vec![0u32; packed.nnz()];
        for axis in 0..d_max {
            for (f, &c) in flat_state.iter_mut().zip(packed.column(2 + axis)) {
                *f = *f * k_max as u32 + c;
            }
        }

        let l_max = unified.l_max();
        let all = packed.view();
        let mut slice_start = Vec::with_capacity(unified.num_modalities() * l_max + 1);
        for m in 0..unified.num_modalities() {
            let block = all.gather_axis0(m)?;
            for o in 0..l_max {
                slice_start.push(block.gather_axis0(o)?.entry_range().start);
            }
        }
        slice_start.push(packed.nnz());

        let belief_rows = (0..unified.num_modalities())
            .map(|m| {
                unified
                    .slot_map()
                    .slots(m)
                    .iter()
                    .filter_map(|s| match *s {
                        Slot::Factor(n) => Some(n),
                        Slot::Broadcast => None,
                    })
                    .collect()
            })
            .collect();

        Ok(Self {
            packed,
            flat_state,
            k_max,
            d_max,
            l_max,
            slice_start,
            belief_rows,
            outcome_counts: unified.outcome_counts().to_vec(),
            cardinalities: spec.factor_cardinalities(),
        })
    }

    pub fn packed(&self) -> &CooTensor<T> {
        &self.packed
    }

    fn slice(&self, m: usize, o: usize) -> Range<usize> {
        let i = m * self.l_max + o;
        self.slice_start[i]..self.slice_start[i + 1]
    }
}

impl<T: Real> LikelihoodBackend<T> for UnifiedSparseBackend<T> {
    fn kind(&self) -> BackendKind {
        BackendKind::UnifiedSparse
    }

    fn per_modality_loglik(&self, obs: &Observation) -> Result<PerModalityLogLik<T>> {
        check_obs(obs, &self.outcome_counts)?;
        let mut offsets = Vec::with_capacity(obs.outcomes.len() + 1);
        let len: usize = obs
            .outcomes
            .iter()
            .enumerate()
            .map(|(m, &o)| self.slice(m, o).len())
            .sum();
        let mut states = Vec::with_capacity(len);
        let mut values = Vec::with_capacity(len);
        let stored = self.packed.values();
        offsets.push(0);
        for (m, &o) in obs.outcomes.iter().enumerate() {
            let r = self.slice(m, o);
            states.extend_from_slice(&self.flat_state[r.clone()]);
            values.extend(stored[r].iter().map(|v| v.ln()));
            offsets.push(values.len());
        }
        Ok(PerModalityLogLik::Sparse {
            k_max: self.k_max,
            d_max: self.d_max,
            offsets,
            states,
            values,
        })
    }

    fn expected_loglik(&self, obs: &Observation, beliefs: &BeliefState) -> Result<f64> {
        check_obs(obs, &self.outcome_counts)?;
        check_beliefs(beliefs, &self.cardinalities)?;
        let k = self.k_max;
        let rows = padded_belief_rows(beliefs, k)?;
        // number of nonzero entries per belief row
        let support: Vec<usize> = rows
            .chunks_exact(k)
            .map(|r| r.iter().filter(|p| **p != 0.0).count())
            .collect();

        let stored = self.packed.values();
        let mut total = 0.0;
        for (m, &o) in obs.outcomes.iter().enumerate() {
            let slots = &self.belief_rows[m];
            let r = self.slice(m, o);
            let supported_states: usize = slots.iter().map(|&n| support[n]).product();
            let mut covered = 0usize;
            let mut partial = 0.0;
            for e in r.clone() {
                let mut w = 1.0;
                let mut supported = true;
                for (a, &n) in slots.iter().enumerate() {
                    let p = rows[n * k + self.packed.column(2 + a)[e] as usize];
                    if p == 0.0 {
                        supported = false;
                        break;
                    }
                    w *= p;
                }
                if supported {
                    covered += 1;
                    partial += w * Into::<f64>::into(stored[e].ln());
                }
            }
            // a supported state with no stored entry has likelihood 0
            if covered < supported_states {
                return Ok(f64::NEG_INFINITY);
            }
            total += partial;
        }
        Ok(total)
    }

    fn representation_bytes(&self) -> usize {
        coo_bytes(&self.packed, T::BYTES)
    }
}
