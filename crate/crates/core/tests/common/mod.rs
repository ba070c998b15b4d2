#![allow(dead_code)]

use aif_unified::model::{
    generate_model, FactorSpec, GeneratorConfig, LikelihoodTensor, ModalitySpec, ModelSpec,
};
use aif_unified::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small random model: N <= max_factors, K_n <= max_card, M <= max_modalities,
/// sparsity target in [0, 0.6]. An infeasible target is retried at the
/// reachable maximum.
pub fn small_model(
    seed: u64,
    max_factors: usize,
    max_card: usize,
    max_modalities: usize,
) -> ModelSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_0000);
    let n = rng.random_range(1..=max_factors);
    let k_lo = rng.random_range(1..=max_card.min(3));
    let l_lo = rng.random_range(1..=3);
    let mut config = GeneratorConfig {
        seed,
        num_factors: n,
        factor_cardinality_range: (k_lo, rng.random_range(k_lo..=max_card)),
        num_modalities: rng.random_range(1..=max_modalities),
        outcome_cardinality_range: (l_lo, rng.random_range(l_lo.max(2)..=6)),
        deps_per_modality_range: (1, rng.random_range(1..=n.min(3))),
        functional_sparsity_target: rng.random_range(0.0..0.6),
        total_hidden_states: None,
    };
    match generate_model(&config) {
        Ok(spec) => spec,
        Err(Error::InfeasibleSparsity { achievable, .. }) => {
            config.functional_sparsity_target = achievable;
            generate_model(&config).expect("reachable sparsity")
        }
        Err(e) => panic!("generator failed for seed {seed}: {e}"),
    }
}

/// Model whose every column is uniform over the outcomes.
pub fn uniform_model(cards: &[usize], outcomes: &[usize], deps: &[Vec<usize>]) -> ModelSpec {
    let factors = cards
        .iter()
        .enumerate()
        .map(|(id, &cardinality)| FactorSpec { id, cardinality })
        .collect();
    let modalities: Vec<ModalitySpec> = outcomes
        .iter()
        .zip(deps)
        .enumerate()
        .map(|(id, (&cardinality, d))| ModalitySpec {
            id,
            cardinality,
            deps: d.clone(),
        })
        .collect();
    let likelihoods = modalities
        .iter()
        .map(|m| {
            let mut shape = vec![m.cardinality];
            shape.extend(m.deps.iter().map(|&d| cards[d]));
            let len: usize = shape.iter().product();
            LikelihoodTensor {
                modality: m.id,
                shape,
                values: vec![1.0 / m.cardinality as f64; len],
            }
        })
        .collect();
    ModelSpec {
        factors,
        modalities,
        likelihoods,
    }
}

pub fn dep_shapes(spec: &ModelSpec) -> Vec<Vec<usize>> {
    spec.modalities
        .iter()
        .map(|m| {
            m.deps
                .iter()
                .map(|&d| spec.factors[d].cardinality)
                .collect()
        })
        .collect()
}

/// Decodes column `col` of a modality into one state per dep.
pub fn column_states(spec: &ModelSpec, m: usize, mut col: usize) -> Vec<usize> {
    let deps = &spec.modalities[m].deps;
    let mut states = vec![0; deps.len()];
    for (i, &d) in deps.iter().enumerate().rev() {
        let k = spec.factors[d].cardinality;
        states[i] = col % k;
        col /= k;
    }
    states
}
