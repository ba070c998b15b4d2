//! Benchmark harness, model inspection and backend verification.
//!
//! The benchmark builds each requested backend once (setup, timed
//! separately), runs `warmup_runs` untimed evaluations, then `timed_runs`
//! evaluations timed individually with a monotonic clock. Every backend sees
//! the same seeded stream of observations (and beliefs, for the expected
//! log-likelihood op). Memory is reported analytically from representation
//! sizes.

mod report;
mod verify;

use std::fmt;
use std::hint::black_box;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coo::{coo_bytes, INDEX_BYTES};
use crate::error::Result;
use crate::layout::{padded_param_count, unify};
use crate::likelihood::{build_backend, BackendKind, LikelihoodBackend};
use crate::model::{
    load_model, original_param_count, sparsity_stats, BeliefState, ModelPreset, ModelSpec,
    Observation, PresetName, SparsityStats,
};
use crate::tensor::Real;

pub use report::{
    BackendResult, BenchReport, Comparison, Environment, LatencyStats, MemoryReport,
    ModelAccounting, CSV_HEADER, TARGET_MEMORY_REDUCTION, TARGET_SPEEDUP,
};
pub use verify::{verify_model, FailureCase, VerifyReport, VERIFY_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchOp {
    PerModality,
    Expected,
}

impl fmt::Display for BenchOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PerModality => "per-modality",
            Self::Expected => "expected",
        })
    }
}

impl FromStr for BenchOp {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "per-modality" | "per_modality" => Ok(Self::PerModality),
            "expected" => Ok(Self::Expected),
            other => Err(format!(
                "unknown op `{other}` (expected per-modality or expected)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn value_bytes(self) -> usize {
        match self {
            Self::F32 => 4,
            Self::F64 => 8,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::F32 => "f32",
            Self::F64 => "f64",
        })
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "f32" => Ok(Self::F32),
            "f64" => Ok(Self::F64),
            other => Err(format!("unknown precision `{other}` (expected f32 or f64)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Preset(PresetName),
    File(PathBuf),
}

impl ModelSource {
    /// Display name and model.
    pub fn load(&self) -> Result<(String, ModelSpec)> {
        match self {
            Self::Preset(p) => Ok((p.to_string(), ModelPreset::get(*p).generate()?)),
            Self::File(path) => Ok((
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string()),
                load_model(path)?,
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub source: ModelSource,
    pub backends: Vec<BackendKind>,
    pub warmup_runs: usize,
    pub timed_runs: usize,
    pub precision: Precision,
    pub op: BenchOp,
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(source: ModelSource) -> Self {
        Self {
            source,
            backends: BackendKind::ALL.to_vec(),
            warmup_runs: 1,
            timed_runs: 100,
            precision: Precision::F32,
            op: BenchOp::PerModality,
            seed: 0,
        }
    }
}

/// Size and sparsity accounting for a model and its unified packing.
pub fn inspect(spec: &ModelSpec) -> Result<ModelAccounting> {
    let unified = unify(spec)?;
    let original = sparsity_stats(spec, 0.0);
    let padded = padded_param_count(&unified);
    let unified_stats = SparsityStats::from_counts(padded, original.nonzero);
    Ok(ModelAccounting {
        num_modalities: spec.num_modalities(),
        num_factors: spec.num_factors(),
        total_hidden_states: spec.total_hidden_states(),
        l_max: unified.l_max(),
        k_max: unified.k_max(),
        d_max: unified.d_max(),
        original_param_count: original_param_count(spec),
        padded_param_count: padded,
        nnz: unified.to_coo(0.0).nnz(),
        original_sparsity_percent: original.sparsity_percent,
        unified_sparsity_percent: unified_stats.sparsity_percent,
    })
}

/// Analytic representation sizes at the given value width.
pub fn memory_report(spec: &ModelSpec, value_bytes: usize) -> Result<MemoryReport> {
    let unified = unify(spec)?;
    let packed = unified.to_coo(0.0);
    let ragged_bytes = original_param_count(spec) * value_bytes;
    let sparse_bytes = coo_bytes(&packed, value_bytes);
    Ok(MemoryReport {
        value_bytes,
        index_bytes: INDEX_BYTES,
        ragged_bytes,
        dense_padded_bytes: padded_param_count(&unified) * value_bytes,
        sparse_bytes,
        sparse_to_ragged_ratio: sparse_bytes as f64 / ragged_bytes as f64,
    })
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    let (name, spec) = config.source.load()?;
    run_bench_on(&name, &spec, config)
}

pub fn run_bench_on(name: &str, spec: &ModelSpec, config: &BenchConfig) -> Result<BenchReport> {
    spec.check_structure()?;
    match config.precision {
        Precision::F32 => run_typed::<f32>(name, spec, config),
        Precision::F64 => run_typed::<f64>(name, spec, config),
    }
}

struct Workload {
    observations: Vec<Observation>,
    beliefs: Vec<BeliefState>,
}

impl Workload {
    fn new(spec: &ModelSpec, count: usize, op: BenchOp, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cards = spec.factor_cardinalities();
        let mut observations = Vec::with_capacity(count);
        let mut beliefs = Vec::new();
        for _ in 0..count {
            match op {
                BenchOp::PerModality => observations.push(Observation::random(spec, &mut rng)),
                BenchOp::Expected => {
                    // At the preset sparsities almost any belief support wider
                    // than one state meets a zero likelihood, and every
                    // backend returns -inf after a partial pass. Point-mass
                    // beliefs keep the result finite so each run does the
                    // full scan.
                    let q = BeliefState::random(&cards, 1.0, &mut rng);
                    observations.push(supported_observation(spec, &q, &mut rng));
                    beliefs.push(q);
                }
            }
        }
        Self {
            observations,
            beliefs,
        }
    }

    fn run<T: Real>(
        &self,
        backend: &dyn LikelihoodBackend<T>,
        op: BenchOp,
        i: usize,
    ) -> Result<()> {
        match op {
            BenchOp::PerModality => {
                black_box(backend.per_modality_loglik(black_box(&self.observations[i]))?);
            }
            BenchOp::Expected => {
                black_box(backend.expected_loglik(
                    black_box(&self.observations[i]),
                    black_box(&self.beliefs[i]),
                )?);
            }
        }
        Ok(())
    }
}

/// An observation that keeps the expected log-likelihood finite where the
/// model allows it: per modality, an outcome with nonzero likelihood under
/// every state combination in the beliefs' support is picked uniformly; if
/// none exists the outcome is sampled at a state drawn from the beliefs.
fn supported_observation<R: Rng + ?Sized>(
    spec: &ModelSpec,
    beliefs: &BeliefState,
    rng: &mut R,
) -> Observation {
    let q = beliefs.marginals();
    let state: Vec<usize> = q
        .iter()
        .map(|qn| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            qn.iter()
                .position(|&p| {
                    acc += p;
                    p > 0.0 && u < acc
                })
                .unwrap_or_else(|| qn.iter().rposition(|&p| p > 0.0).unwrap_or(0))
        })
        .collect();
    let fallback = Observation::sample(spec, &state, rng);

    let outcomes = spec
        .modalities
        .iter()
        .zip(&spec.likelihoods)
        .enumerate()
        .map(|(m, (modality, a))| {
            let extents = &a.shape[1..];
            let cols = a.num_columns();
            let mut index = vec![0usize; extents.len()];
            let mut ok = vec![true; modality.cardinality];
            for col in 0..cols {
                let supported = modality
                    .deps
                    .iter()
                    .zip(&index)
                    .all(|(&d, &s)| q[d][s] > 0.0);
                if supported {
                    for (o, flag) in ok.iter_mut().enumerate() {
                        *flag &= a.values[o * cols + col] > 0.0;
                    }
                }
                crate::tensor::next_index(&mut index, extents);
            }
            let candidates: Vec<usize> = (0..ok.len()).filter(|&o| ok[o]).collect();
            if candidates.is_empty() {
                fallback.outcomes[m]
            } else {
                candidates[rng.random_range(0..candidates.len())]
            }
        })
        .collect();
    Observation::new(outcomes)
}

fn run_typed<T: Real>(name: &str, spec: &ModelSpec, config: &BenchConfig) -> Result<BenchReport> {
    let runs = config.timed_runs.max(1);
    let workload = Workload::new(spec, config.warmup_runs + runs, config.op, config.seed);

    let mut results = Vec::with_capacity(config.backends.len());
    for &kind in &config.backends {
        let t0 = Instant::now();
        let backend = build_backend::<T>(spec, kind)?;
        let setup_ms = t0.elapsed().as_secs_f64() * 1e3;

        for i in 0..config.warmup_runs {
            workload.run(backend.as_ref(), config.op, i)?;
        }
        let mut samples_ms = Vec::with_capacity(runs);
        for i in config.warmup_runs..config.warmup_runs + runs {
            let start = Instant::now();
            workload.run(backend.as_ref(), config.op, i)?;
            samples_ms.push(start.elapsed().as_secs_f64() * 1e3);
        }
        results.push(BackendResult {
            backend: kind,
            setup_ms,
            samples: samples_ms.len(),
            latency_ms: LatencyStats::from_samples(&samples_ms).expect("at least one timed run"),
            bytes: backend.representation_bytes(),
            samples_ms,
        });
    }

    let memory = memory_report(spec, T::BYTES)?;
    let median = |k: BackendKind| {
        results
            .iter()
            .find(|r| r.backend == k)
            .map(|r| r.latency_ms.median)
    };
    let ragged = median(BackendKind::BaselineRagged);
    let speedup = |k| Some(ragged? / median(k)?);
    let comparison = Comparison {
        sparse_speedup_vs_ragged: speedup(BackendKind::UnifiedSparse),
        dense_speedup_vs_ragged: speedup(BackendKind::UnifiedDense),
        target_speedup: TARGET_SPEEDUP,
        sparse_memory_reduction: 1.0 - memory.sparse_to_ragged_ratio,
        target_memory_reduction: TARGET_MEMORY_REDUCTION,
    };

    Ok(BenchReport {
        model: name.to_string(),
        op: config.op,
        precision: config.precision,
        warmup_runs: config.warmup_runs,
        timed_runs: runs,
        seed: config.seed,
        accounting: inspect(spec)?,
        memory,
        backends: results,
        comparison,
        environment: Environment::current(),
    })
}
