mod common;

use aif_unified::bench::{inspect, memory_report};
use aif_unified::likelihood::{BackendKind, ModelView};
use aif_unified::model::{BeliefState, ModelSpec, Observation};
use aif_unified::tensor::relative_deviation;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{column_states, dep_shapes, small_model};

fn permute_modalities(spec: &ModelSpec, order: &[usize]) -> ModelSpec {
    let mut out = spec.clone();
    out.modalities = order.iter().map(|&m| spec.modalities[m].clone()).collect();
    out.likelihoods = order.iter().map(|&m| spec.likelihoods[m].clone()).collect();
    for (i, (m, a)) in out
        .modalities
        .iter_mut()
        .zip(&mut out.likelihoods)
        .enumerate()
    {
        m.id = i;
        a.modality = i;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn modality_permutation_permutes_outputs(seed in 0u64..1_000_000) {
        let spec = small_model(seed, 4, 6, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..spec.num_modalities()).collect();
        order.shuffle(&mut rng);
        let permuted = permute_modalities(&spec, &order);

        let cards = spec.factor_cardinalities();
        let obs = Observation::sample(&spec, &cards.iter().map(|&k| rng.random_range(0..k)).collect::<Vec<_>>(), &mut rng);
        let obs_p = Observation::new(order.iter().map(|&m| obs.outcomes[m]).collect());
        let q = BeliefState::random(&cards, 0.5, &mut rng);

        let a = ModelView::<f64>::new(&spec).unwrap();
        let b = ModelView::<f64>::new(&permuted).unwrap();
        for kind in BackendKind::ALL {
            let va = a.expected_loglik(&obs, &q, kind).unwrap();
            let vb = b.expected_loglik(&obs_p, &q, kind).unwrap();
            prop_assert!(relative_deviation(va, vb) <= 1e-12, "{kind}: {va} vs {vb}");

            let pa = a.per_modality_loglik(&obs, kind).unwrap().to_ragged(&dep_shapes(&spec));
            let pb = b.per_modality_loglik(&obs_p, kind).unwrap().to_ragged(&dep_shapes(&permuted));
            for (i, &m) in order.iter().enumerate() {
                prop_assert_eq!(&pa[m], &pb[i]);
            }
        }
    }

    #[test]
    fn zeroing_a_weightless_entry_is_exact(seed in 0u64..1_000_000) {
        let spec = small_model(seed, 4, 6, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cards = spec.factor_cardinalities();
        let q = BeliefState::random(&cards, 0.5, &mut rng);
        let obs = Observation::random(&spec, &mut rng);
        let base = ModelView::<f64>::new(&spec).unwrap();

        // every (modality, entry) with zero belief weight, zeroed one at a time
        let mut candidates = Vec::new();
        for (m, a) in spec.likelihoods.iter().enumerate() {
            let cols = a.num_columns();
            for col in 0..cols {
                let states = column_states(&spec, m, col);
                let weightless = spec.modalities[m].deps.iter().zip(&states)
                    .any(|(&d, &s)| q.marginals()[d][s] == 0.0);
                if weightless {
                    candidates.extend((0..a.shape[0]).map(|o| (m, o * cols + col)));
                }
            }
        }
        candidates.shuffle(&mut rng);
        for &(m, e) in candidates.iter().take(5) {
            let mut z = spec.clone();
            z.likelihoods[m].values[e] = 0.0;
            let zv = ModelView::<f64>::new(&z).unwrap();
            for kind in BackendKind::ALL {
                let before = base.expected_loglik(&obs, &q, kind).unwrap();
                let after = zv.expected_loglik(&obs, &q, kind).unwrap();
                prop_assert_eq!(before.to_bits(), after.to_bits());
            }
        }
    }

    #[test]
    fn expected_loglik_is_never_positive(seed in 0u64..1_000_000) {
        let spec = small_model(seed, 4, 6, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cards = spec.factor_cardinalities();
        let view = ModelView::<f64>::new(&spec).unwrap();
        let view32 = ModelView::<f32>::new(&spec).unwrap();
        for _ in 0..4 {
            let obs = Observation::random(&spec, &mut rng);
            let q = BeliefState::random(&cards, 0.2, &mut rng);
            for kind in BackendKind::ALL {
                prop_assert!(view.expected_loglik(&obs, &q, kind).unwrap() <= 0.0);
                prop_assert!(view32.expected_loglik(&obs, &q, kind).unwrap() <= 0.0);
            }
        }
    }

    #[test]
    fn accounting_invariants(seed in 0u64..1_000_000) {
        let spec = small_model(seed, 5, 6, 6);
        let a = inspect(&spec).unwrap();
        prop_assert!(a.padded_param_count >= a.original_param_count);
        prop_assert!(a.unified_sparsity_percent >= a.original_sparsity_percent);
        let nonzero: usize = spec.likelihoods.iter()
            .map(|t| t.values.iter().filter(|v| **v != 0.0).count())
            .sum();
        prop_assert_eq!(a.nnz, nonzero);

        // with K_max = 1 a missing dep slot costs nothing, so D need not match
        let uniform = spec.modalities.iter().all(|m| m.cardinality == a.l_max && (m.deps.len() == a.d_max || a.k_max == 1))
            && spec.modalities.iter().flat_map(|m| &m.deps).all(|&d| spec.factors[d].cardinality == a.k_max);
        prop_assert_eq!(a.padded_param_count == a.original_param_count, uniform);

        for vb in [4usize, 8] {
            let m = memory_report(&spec, vb).unwrap();
            prop_assert_eq!(m.ragged_bytes, a.original_param_count * vb);
            prop_assert_eq!(m.dense_padded_bytes, a.padded_param_count * vb);
            prop_assert_eq!(m.sparse_bytes, a.nnz * (vb + 4 * (2 + a.d_max)));
        }
    }
}

#[test]
fn backends_are_shareable_across_threads() {
    let spec = small_model(5, 4, 6, 5);
    let view = ModelView::<f64>::new(&spec).unwrap();
    let cards = spec.factor_cardinalities();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cases: Vec<(Observation, BeliefState)> = (0..64)
        .map(|_| {
            (
                Observation::random(&spec, &mut rng),
                BeliefState::random(&cards, 0.3, &mut rng),
            )
        })
        .collect();
    let serial: Vec<f64> = cases
        .iter()
        .map(|(o, q)| {
            view.expected_loglik(o, q, BackendKind::UnifiedSparse)
                .unwrap()
        })
        .collect();
    let parallel: Vec<f64> = std::thread::scope(|s| {
        let handles: Vec<_> = cases
            .chunks(16)
            .map(|chunk| {
                let view = &view;
                s.spawn(move || {
                    chunk
                        .iter()
                        .map(|(o, q)| {
                            view.expected_loglik(o, q, BackendKind::UnifiedSparse)
                                .unwrap()
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().unwrap())
            .collect()
    });
    assert_eq!(
        serial.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        parallel.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
}
