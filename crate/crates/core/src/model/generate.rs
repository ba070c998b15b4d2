use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::{FactorSpec, LikelihoodTensor, ModalitySpec, ModelSpec};
use crate::error::{Error, Result};

/// How far the achieved zero fraction may fall short of the target before
/// generation is refused.
const SPARSITY_SLACK: f64 = 0.03;

/// Parameters of the seeded random model generator.
///
/// Ranges are inclusive `[min, max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub num_factors: usize,
    pub factor_cardinality_range: (usize, usize),
    pub num_modalities: usize,
    pub outcome_cardinality_range: (usize, usize),
    pub deps_per_modality_range: (usize, usize),
    /// Target fraction of exact zeros across all likelihood entries.
    pub functional_sparsity_target: f64,
    /// When set, factor cardinalities are adjusted to sum exactly to this.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_hidden_states: Option<usize>,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let (k_min, k_max) = self.factor_cardinality_range;
        let (l_min, l_max) = self.outcome_cardinality_range;
        let (d_min, d_cap) = self.deps_per_modality_range;
        if self.num_factors == 0 || self.num_modalities == 0 {
            return bad("need at least one factor and one modality".into());
        }
        if k_min == 0 || k_min > k_max {
            return bad(format!("factor cardinality range [{k_min}, {k_max}]"));
        }
        if l_min == 0 || l_min > l_max {
            return bad(format!("outcome cardinality range [{l_min}, {l_max}]"));
        }
        if d_min == 0 || d_min > d_cap || d_cap > self.num_factors {
            return bad(format!(
                "deps range [{d_min}, {d_cap}] with {} factors",
                self.num_factors
            ));
        }
        let rho = self.functional_sparsity_target;
        if !(0.0..1.0).contains(&rho) {
            return bad(format!("sparsity target {rho} outside [0, 1)"));
        }
        if let Some(total) = self.total_hidden_states {
            let (lo, hi) = (self.num_factors * k_min, self.num_factors * k_max);
            if total < lo || total > hi {
                return bad(format!(
                    "{total} hidden states unreachable with {} factors in [{k_min}, {k_max}] (range {lo}..={hi})",
                    self.num_factors
                ));
            }
        }
        Ok(())
    }
}

/// Deterministic seeded model generator.
///
/// Columns start as normalized exponential draws. The smallest entries of each
/// column are then zeroed until the global zero count reaches
/// `round(rho * total)`, each column keeping at least its largest entry, and
/// the surviving entries are renormalized.
pub fn generate_model(config: &GeneratorConfig) -> Result<ModelSpec> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let cards = factor_cardinalities(config, &mut rng);
    let factors: Vec<FactorSpec> = cards
        .iter()
        .enumerate()
        .map(|(id, &cardinality)| FactorSpec { id, cardinality })
        .collect();

    let (l_min, l_max) = config.outcome_cardinality_range;
    let (d_min, d_cap) = config.deps_per_modality_range;
    let modalities: Vec<ModalitySpec> = (0..config.num_modalities)
        .map(|id| {
            let cardinality = rng.random_range(l_min..=l_max);
            let count = rng.random_range(d_min..=d_cap);
            let mut deps = index::sample(&mut rng, config.num_factors, count).into_vec();
            deps.sort_unstable();
            ModalitySpec {
                id,
                cardinality,
                deps,
            }
        })
        .collect();

    let mut likelihoods: Vec<LikelihoodTensor> = modalities
        .iter()
        .map(|m| {
            let mut shape = vec![m.cardinality];
            shape.extend(m.deps.iter().map(|&d| cards[d]));
            let cols: usize = shape[1..].iter().product();
            let mut values = vec![0.0; m.cardinality * cols];
            for c in 0..cols {
                for o in 0..m.cardinality {
                    values[o * cols + c] = Exp1.sample(&mut rng);
                }
            }
            LikelihoodTensor {
                modality: m.id,
                shape,
                values,
            }
        })
        .collect();

    let zeros = allocate_zeros(&likelihoods, config.functional_sparsity_target, &mut rng)?;
    for (a, per_col) in likelihoods.iter_mut().zip(zeros) {
        sparsify_and_normalize(a, &per_col);
    }

    Ok(ModelSpec {
        factors,
        modalities,
        likelihoods,
    })
}

fn factor_cardinalities(config: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let (k_min, k_max) = config.factor_cardinality_range;
    let mut cards: Vec<usize> = (0..config.num_factors)
        .map(|_| rng.random_range(k_min..=k_max))
        .collect();
    if let Some(total) = config.total_hidden_states {
        let mut sum: usize = cards.iter().sum();
        while sum != total {
            let i = rng.random_range(0..cards.len());
            if sum < total && cards[i] < k_max {
                cards[i] += 1;
                sum += 1;
            } else if sum > total && cards[i] > k_min {
                cards[i] -= 1;
                sum -= 1;
            }
        }
    }
    cards
}

/// Number of entries to zero in every column of every tensor.
fn allocate_zeros(
    likelihoods: &[LikelihoodTensor],
    rho: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<usize>>> {
    let total: usize = likelihoods.iter().map(|a| a.values.len()).sum();
    let capacity: usize = likelihoods
        .iter()
        .map(|a| (a.shape[0] - 1) * a.num_columns())
        .sum();
    let mut target = (rho * total as f64).round() as usize;
    if target > capacity {
        let achievable = capacity as f64 / total as f64;
        if rho - achievable > SPARSITY_SLACK {
            return Err(Error::InfeasibleSparsity {
                target: rho,
                achievable,
            });
        }
        target = capacity;
    }

    let mut per_col: Vec<Vec<usize>> = likelihoods
        .iter()
        .map(|a| {
            let l = a.shape[0];
            let base = ((rho * l as f64).floor() as usize).min(l - 1);
            vec![base; a.num_columns()]
        })
        .collect();
    let assigned: usize = per_col.iter().flatten().sum();
    let mut remaining = target.saturating_sub(assigned);

    let mut order: Vec<(usize, usize)> = per_col
        .iter()
        .enumerate()
        .flat_map(|(m, cols)| (0..cols.len()).map(move |c| (m, c)))
        .collect();
    order.shuffle(rng);
    while remaining > 0 {
        let mut progressed = false;
        for &(m, c) in &order {
            if remaining == 0 {
                break;
            }
            if per_col[m][c] + 1 < likelihoods[m].shape[0] {
                per_col[m][c] += 1;
                remaining -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    Ok(per_col)
}

fn sparsify_and_normalize(a: &mut LikelihoodTensor, zeros_per_col: &[usize]) {
    let l = a.shape[0];
    let cols = a.num_columns();
    let mut rows: Vec<usize> = Vec::with_capacity(l);
    for (c, &z) in zeros_per_col.iter().enumerate() {
        rows.clear();
        rows.extend(0..l);
        // stable: ties keep the lower outcome first, so the last row is a largest entry
        rows.sort_by(|&x, &y| a.values[x * cols + c].total_cmp(&a.values[y * cols + c]));
        for &o in &rows[..z] {
            a.values[o * cols + c] = 0.0;
        }
        let sum: f64 = (0..l).map(|o| a.values[o * cols + c]).sum();
        for o in 0..l {
            a.values[o * cols + c] /= sum;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{original_param_count, sparsity_stats, validate_model};

    fn small(seed: u64, rho: f64) -> GeneratorConfig {
        GeneratorConfig {
            seed,
            num_factors: 2,
            factor_cardinality_range: (2, 3),
            num_modalities: 2,
            outcome_cardinality_range: (2, 4),
            deps_per_modality_range: (1, 2),
            functional_sparsity_target: rho,
            total_hidden_states: None,
        }
    }

    fn medium(seed: u64, rho: f64) -> GeneratorConfig {
        GeneratorConfig {
            seed,
            num_factors: 6,
            factor_cardinality_range: (2, 6),
            num_modalities: 12,
            outcome_cardinality_range: (3, 10),
            deps_per_modality_range: (1, 3),
            functional_sparsity_target: rho,
            total_hidden_states: None,
        }
    }

    #[test]
    fn same_seed_same_model() {
        let a = generate_model(&medium(7, 0.5)).unwrap();
        let b = generate_model(&medium(7, 0.5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_vec(&a).unwrap(),
            serde_json::to_vec(&b).unwrap()
        );
        assert_ne!(a, generate_model(&medium(8, 0.5)).unwrap());
    }

    #[test]
    fn generated_models_validate_at_any_rho() {
        for (seed, rho) in [(1, 0.0), (2, 0.3), (3, 0.6), (4, 0.8), (42, 0.5)] {
            let spec = generate_model(&medium(seed, rho)).unwrap();
            assert_eq!(validate_model(&spec), vec![], "seed {seed} rho {rho}");
            assert!(spec
                .modalities
                .iter()
                .all(|m| m.deps.windows(2).all(|w| w[0] < w[1])));
        }
        let spec = generate_model(&small(42, 0.5)).unwrap();
        assert!(validate_model(&spec).is_empty());
    }

    #[test]
    fn achieved_sparsity_tracks_target() {
        for rho in [0.1, 0.35, 0.5, 0.61, 0.75] {
            let spec = generate_model(&medium(11, rho)).unwrap();
            let s = sparsity_stats(&spec, 0.0);
            assert!(
                (s.sparsity_percent - 100.0 * rho).abs() <= 3.0,
                "rho {rho}: got {}",
                s.sparsity_percent
            );
        }
    }

    #[test]
    fn zero_rho_leaves_only_incidental_zeros() {
        let spec = generate_model(&medium(5, 0.0)).unwrap();
        assert!(sparsity_stats(&spec, 0.0).sparsity_percent <= 1.0);
    }

    #[test]
    fn every_column_keeps_a_nonzero() {
        let spec = generate_model(&medium(13, 0.85)).unwrap();
        for a in &spec.likelihoods {
            let cols = a.num_columns();
            for c in 0..cols {
                assert!((0..a.shape[0]).any(|o| a.values[o * cols + c] > 0.0));
            }
        }
    }

    #[test]
    fn infeasible_sparsity_is_refused() {
        let mut cfg = small(1, 0.9);
        cfg.outcome_cardinality_range = (2, 2);
        // at most half the entries can be zero with two outcomes
        assert!(matches!(
            generate_model(&cfg),
            Err(Error::InfeasibleSparsity { .. })
        ));
        cfg.functional_sparsity_target = 0.52;
        let spec = generate_model(&cfg).unwrap();
        assert_eq!(sparsity_stats(&spec, 0.0).sparsity_percent, 50.0);
    }

    #[test]
    fn exact_hidden_state_total() {
        let mut cfg = medium(3, 0.4);
        cfg.total_hidden_states = Some(30);
        let spec = generate_model(&cfg).unwrap();
        assert_eq!(spec.total_hidden_states(), 30);
        cfg.total_hidden_states = Some(37);
        assert!(matches!(generate_model(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn config_validation() {
        let mut cfg = small(0, 0.2);
        cfg.deps_per_modality_range = (1, 3);
        assert!(cfg.validate().is_err());
        let mut cfg = small(0, 1.0);
        assert!(cfg.validate().is_err());
        cfg.functional_sparsity_target = 0.2;
        cfg.factor_cardinality_range = (3, 2);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn param_count_matches_resummed_array_sizes() {
        let spec = generate_model(&medium(21, 0.5)).unwrap();
        let resummed: usize = spec.likelihoods.iter().map(|a| a.values.len()).sum();
        assert_eq!(original_param_count(&spec), resummed);
    }
}
