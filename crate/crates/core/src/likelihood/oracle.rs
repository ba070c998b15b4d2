//! Reference computations that read the raw [`ModelSpec`] directly.
//!
//! Nothing here touches the packed, padded or sparse code paths.

use crate::error::{Error, Result};
use crate::model::{BeliefState, ModelSpec, Observation};
use crate::tensor::DenseTensor;

/// Largest joint state space the brute-force oracle will accept.
pub const ORACLE_STATE_LIMIT: u128 = 1_000_000;

/// Largest joint state space [`joint_loglik_tensor`] will materialize.
pub const JOINT_STATE_LIMIT: u128 = 100_000;

fn guard(spec: &ModelSpec, limit: u128) -> Result<()> {
    let size = spec.joint_state_count();
    if size > limit {
        return Err(Error::StateSpaceTooLarge { size, limit });
    }
    Ok(())
}

/// Expected log-likelihood by recursive enumeration of each modality's deps.
pub fn brute_force_oracle(
    spec: &ModelSpec,
    obs: &Observation,
    beliefs: &BeliefState,
) -> Result<f64> {
    guard(spec, ORACLE_STATE_LIMIT)?;
    spec.check_structure()?;
    obs.check(spec)?;
    beliefs.check(spec)?;

    let mut total = 0.0;
    for (m, modality) in spec.modalities.iter().enumerate() {
        let table = &spec.likelihoods[m];
        let mut states = Vec::with_capacity(modality.deps.len());
        let mut partial = 0.0;
        let mut impossible = false;
        enumerate(
            spec,
            &modality.deps,
            &mut states,
            &mut |states: &[usize]| {
                let mut weight = 1.0;
                for (&d, &s) in modality.deps.iter().zip(states) {
                    let p = beliefs.marginals()[d][s];
                    if p == 0.0 {
                        return;
                    }
                    weight *= p;
                }
                let mut offset = obs.outcomes[m];
                for (&d, &s) in modality.deps.iter().zip(states) {
                    offset = offset * spec.factors[d].cardinality + s;
                }
                let lik = table.values[offset];
                if lik == 0.0 {
                    impossible = true;
                } else {
                    partial += weight * lik.ln();
                }
            },
        );
        if impossible {
            return Ok(f64::NEG_INFINITY);
        }
        total += partial;
    }
    Ok(total)
}

fn enumerate(
    spec: &ModelSpec,
    deps: &[usize],
    states: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if states.len() == deps.len() {
        visit(states);
        return;
    }
    let k = spec.factors[deps[states.len()]].cardinality;
    for s in 0..k {
        states.push(s);
        enumerate(spec, deps, states, visit);
        states.pop();
    }
}

/// `J[s_1, ..., s_N] = sum_m log p(o^m | s_deps(m))` over the full joint space.
pub fn joint_loglik_tensor(spec: &ModelSpec, obs: &Observation) -> Result<DenseTensor<f64>> {
    guard(spec, JOINT_STATE_LIMIT)?;
    spec.check_structure()?;
    obs.check(spec)?;

    let shape = spec.factor_cardinalities();
    let mut joint = DenseTensor::zeros(shape.clone());
    let mut states = Vec::with_capacity(shape.len());
    let all: Vec<usize> = (0..shape.len()).collect();
    let mut values = Vec::with_capacity(joint.len());
    enumerate(spec, &all, &mut states, &mut |s: &[usize]| {
        let mut acc = 0.0;
        for (m, modality) in spec.modalities.iter().enumerate() {
            let mut offset = obs.outcomes[m];
            for &d in &modality.deps {
                offset = offset * spec.factors[d].cardinality + s[d];
            }
            acc += spec.likelihoods[m].values[offset].ln();
        }
        values.push(acc);
    });
    joint.data_mut().copy_from_slice(&values);
    Ok(joint)
}

/// `sum_s (prod_n q_n(s_n)) * J[s]`, skipping states with zero belief weight.
pub fn contract_joint(joint: &DenseTensor<f64>, beliefs: &BeliefState) -> Result<f64> {
    let q = beliefs.marginals();
    crate::model::check_belief_shape(q, joint.shape().iter().copied())?;
    let mut index = vec![0usize; joint.ndim()];
    let mut acc = 0.0;
    for &j in joint.data() {
        let mut w = 1.0;
        let mut supported = true;
        for (qn, &s) in q.iter().zip(&index) {
            if qn[s] == 0.0 {
                supported = false;
                break;
            }
            w *= qn[s];
        }
        if supported {
            if j == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            acc += w * j;
        }
        crate::tensor::next_index(&mut index, joint.shape());
    }
    Ok(acc)
}
