//! Shape-aligned packing of every modality tensor into one padded array.
//!
//! The unified array has shape `[M, L_max, K_max, ..., K_max]` with `D_max`
//! state axes ("slots"). Modality `m` fills its first `|deps(m)|` slots with
//! its deps in order; remaining slots are BROADCAST and only index 0 is used.
//! Everything outside a modality's own extents is exactly zero.
//!
//! Contracting a slot with a *virtual belief* (the factor marginal padded with
//! zeros, or the point mass `[1, 0, ...]` for a BROADCAST slot) gives the same
//! value as contracting the original ragged tensor.

use serde::{Deserialize, Serialize};

use crate::coo::{to_coo, CooTensor};
use crate::error::{Error, Result};
use crate::model::{check_belief_shape, BeliefState, LikelihoodTensor, ModelSpec};
use crate::tensor::{next_index, DenseTensor, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Factor(usize),
    Broadcast,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotMap {
    d_max: usize,
    slots: Vec<Vec<Slot>>,
}

impl SlotMap {
    pub fn from_spec(spec: &ModelSpec) -> Self {
        let d_max = spec.max_deps();
        let slots = spec
            .modalities
            .iter()
            .map(|m| {
                let mut s: Vec<Slot> = m.deps.iter().map(|&d| Slot::Factor(d)).collect();
                s.resize(d_max, Slot::Broadcast);
                s
            })
            .collect();
        Self { d_max, slots }
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    pub fn num_modalities(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self, modality: usize) -> &[Slot] {
        &self.slots[modality]
    }

    /// Number of leading factor slots of a modality.
    pub fn num_deps(&self, modality: usize) -> usize {
        self.slots[modality]
            .iter()
            .take_while(|s| matches!(s, Slot::Factor(_)))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnifiedLikelihood<T = f64> {
    array: DenseTensor<T>,
    slot_map: SlotMap,
    l_max: usize,
    k_max: usize,
    outcome_counts: Vec<usize>,
    // per modality, per slot: valid extent (1 for BROADCAST)
    slot_extents: Vec<Vec<usize>>,
}

/// Packs a model's likelihood tensors into the padded unified layout.
pub fn unify(spec: &ModelSpec) -> Result<UnifiedLikelihood<f64>> {
    spec.check_structure()?;
    let slot_map = SlotMap::from_spec(spec);
    let d_max = slot_map.d_max();
    let l_max = spec.max_outcomes();
    let k_max = spec.max_dep_cardinality();
    let m_count = spec.num_modalities();

    let mut shape = vec![m_count, l_max];
    shape.extend(std::iter::repeat_n(k_max, d_max));
    let mut array = DenseTensor::zeros(shape);
    let strides = array.strides();

    let mut slot_extents = Vec::with_capacity(m_count);
    for (m, a) in spec.likelihoods.iter().enumerate() {
        let mut ext = a.shape[1..].to_vec();
        ext.resize(d_max, 1);
        slot_extents.push(ext);

        let data = array.data_mut();
        let mut index = vec![0usize; a.shape.len()];
        for &v in &a.values {
            let off = m * strides[0]
                + index
                    .iter()
                    .zip(&strides[1..])
                    .map(|(i, s)| i * s)
                    .sum::<usize>();
            data[off] = v;
            next_index(&mut index, &a.shape);
        }
    }

    Ok(UnifiedLikelihood {
        array,
        slot_map,
        l_max,
        k_max,
        outcome_counts: spec.modalities.iter().map(|m| m.cardinality).collect(),
        slot_extents,
    })
}

/// Recovers the per-modality tensors given their original shapes `[L_m, K_deps...]`.
pub fn deunify<T: Real>(
    u: &UnifiedLikelihood<T>,
    spec_shapes: &[Vec<usize>],
) -> Result<Vec<LikelihoodTensor>> {
    let m_count = u.num_modalities();
    if spec_shapes.len() != m_count {
        return Err(Error::ShapeMismatch(format!(
            "{} shapes for {m_count} packed modalities",
            spec_shapes.len()
        )));
    }
    let strides = u.array.strides();
    spec_shapes
        .iter()
        .enumerate()
        .map(|(m, shape)| {
            let deps = u.slot_map.num_deps(m);
            let fits = shape.len() == deps + 1
                && !shape.is_empty()
                && shape[0] <= u.l_max
                && shape[1..].iter().all(|&k| k <= u.k_max);
            if !fits {
                return Err(Error::ShapeMismatch(format!(
                    "shape {shape:?} does not fit modality {m} with {deps} deps in [{}, {}^{}]",
                    u.l_max, u.k_max, u.slot_map.d_max
                )));
            }
            let len: usize = shape.iter().product();
            let mut values = Vec::with_capacity(len);
            let mut index = vec![0usize; shape.len()];
            for _ in 0..len {
                let off = m * strides[0]
                    + index
                        .iter()
                        .zip(&strides[1..])
                        .map(|(i, s)| i * s)
                        .sum::<usize>();
                values.push(u.array.data()[off].into());
                next_index(&mut index, shape);
            }
            Ok(LikelihoodTensor {
                modality: m,
                shape: shape.clone(),
                values,
            })
        })
        .collect()
}

/// `M * L_max * K_max^D_max`.
pub fn padded_param_count<T>(u: &UnifiedLikelihood<T>) -> usize {
    u.outcome_counts.len() * u.l_max * u.k_max.pow(u.slot_map.d_max as u32)
}

/// Per-slot belief vectors of length `K_max` for one modality.
pub fn virtual_beliefs(
    slot_map: &SlotMap,
    k_max: usize,
    beliefs: &BeliefState,
    modality: usize,
) -> Result<Vec<Vec<f64>>> {
    if modality >= slot_map.num_modalities() {
        return Err(Error::IndexOutOfRange {
            index: modality,
            extent: slot_map.num_modalities(),
        });
    }
    let q = beliefs.marginals();
    slot_map
        .slots(modality)
        .iter()
        .map(|slot| {
            let mut v = vec![0.0; k_max];
            match *slot {
                Slot::Broadcast => v[0] = 1.0,
                Slot::Factor(n) => {
                    let qn = q.get(n).ok_or_else(|| {
                        Error::BeliefShapeMismatch(format!("no marginal for factor {n}"))
                    })?;
                    if qn.len() > k_max {
                        return Err(Error::BeliefShapeMismatch(format!(
                            "factor {n} marginal has {} entries, K_max is {k_max}",
                            qn.len()
                        )));
                    }
                    v[..qn.len()].copy_from_slice(qn);
                }
            }
            Ok(v)
        })
        .collect()
}

impl<T: Real> UnifiedLikelihood<T> {
    pub fn array(&self) -> &DenseTensor<T> {
        &self.array
    }

    pub fn slot_map(&self) -> &SlotMap {
        &self.slot_map
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn d_max(&self) -> usize {
        self.slot_map.d_max
    }

    pub fn num_modalities(&self) -> usize {
        self.outcome_counts.len()
    }

    pub fn outcome_counts(&self) -> &[usize] {
        &self.outcome_counts
    }

    /// Valid extent of every slot of a modality (1 for BROADCAST slots).
    pub fn slot_extents(&self, modality: usize) -> &[usize] {
        &self.slot_extents[modality]
    }

    /// Number of padded states per `(modality, outcome)` slice, `K_max^D_max`.
    pub fn states_per_slice(&self) -> usize {
        self.k_max.pow(self.slot_map.d_max as u32)
    }

    /// Whether `[m, o, slots...]` lies inside modality `m`'s own extents.
    pub fn is_valid_index(&self, modality: usize, outcome: usize, slots: &[usize]) -> bool {
        modality < self.num_modalities()
            && outcome < self.outcome_counts[modality]
            && slots.len() == self.d_max()
            && slots
                .iter()
                .zip(&self.slot_extents[modality])
                .all(|(s, e)| s < e)
    }

    pub fn check_beliefs(&self, beliefs: &BeliefState, cardinalities: &[usize]) -> Result<()> {
        check_belief_shape(beliefs.marginals(), cardinalities.iter().copied())
    }

    pub fn virtual_beliefs(&self, beliefs: &BeliefState, modality: usize) -> Result<Vec<Vec<f64>>> {
        virtual_beliefs(&self.slot_map, self.k_max, beliefs, modality)
    }

    /// The packed array in coordinate format; modality is coordinate axis 0.
    pub fn to_coo(&self, threshold: f64) -> CooTensor<T> {
        to_coo(&self.array, threshold)
    }

    pub fn cast<U: Real>(&self) -> UnifiedLikelihood<U> {
        UnifiedLikelihood {
            array: self.array.map(|v| U::from_f64(v.into())),
            slot_map: self.slot_map.clone(),
            l_max: self.l_max,
            k_max: self.k_max,
            outcome_counts: self.outcome_counts.clone(),
            slot_extents: self.slot_extents.clone(),
        }
    }
}
