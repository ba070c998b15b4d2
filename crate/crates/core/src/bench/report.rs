use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{BenchOp, Precision};
use crate::error::Result;
use crate::likelihood::BackendKind;

/// Speed-up of the sparse backend over the ragged baseline that the
/// benchmark is compared against.
pub const TARGET_SPEEDUP: f64 = 2.0;

/// Fraction of the ragged representation's memory the sparse representation
/// is compared against.
pub const TARGET_MEMORY_REDUCTION: f64 = 0.35;

pub const CSV_HEADER: [&str; 10] = [
    "model",
    "backend",
    "op",
    "runs",
    "min_ms",
    "median_ms",
    "mean_ms",
    "p95_ms",
    "max_ms",
    "bytes",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyStats {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub p95: f64,
    pub max: f64,
}

impl LatencyStats {
    /// Order statistics of a non-empty sample; p95 is nearest-rank.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
        Some(Self {
            min: sorted[0],
            median,
            mean: sorted.iter().sum::<f64>() / n as f64,
            p95: sorted[rank - 1],
            max: sorted[n - 1],
        })
    }

    pub fn is_ordered(&self) -> bool {
        self.min <= self.median && self.median <= self.p95 && self.p95 <= self.max && self.min > 0.0
    }
}

/// Table-style summary of a model's size and sparsity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelAccounting {
    pub num_modalities: usize,
    pub num_factors: usize,
    pub total_hidden_states: usize,
    pub l_max: usize,
    pub k_max: usize,
    pub d_max: usize,
    pub original_param_count: usize,
    pub padded_param_count: usize,
    pub nnz: usize,
    pub original_sparsity_percent: f64,
    pub unified_sparsity_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryReport {
    pub value_bytes: usize,
    pub index_bytes: usize,
    pub ragged_bytes: usize,
    pub dense_padded_bytes: usize,
    pub sparse_bytes: usize,
    /// `sparse_bytes / ragged_bytes`.
    pub sparse_to_ragged_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendResult {
    pub backend: BackendKind,
    pub setup_ms: f64,
    pub samples: usize,
    pub latency_ms: LatencyStats,
    pub bytes: usize,
    pub samples_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Comparison {
    /// Median ragged latency over median sparse latency.
    pub sparse_speedup_vs_ragged: Option<f64>,
    pub dense_speedup_vs_ragged: Option<f64>,
    pub target_speedup: f64,
    /// `1 - sparse_bytes / ragged_bytes`.
    pub sparse_memory_reduction: f64,
    pub target_memory_reduction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Environment {
    pub clock_source: String,
    pub build_mode: String,
    pub os: String,
    pub arch: String,
    pub available_parallelism: usize,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            clock_source: "std::time::Instant (monotonic)".into(),
            build_mode: if cfg!(debug_assertions) {
                "debug".into()
            } else {
                "release".into()
            },
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            available_parallelism: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchReport {
    pub model: String,
    pub op: BenchOp,
    pub precision: Precision,
    pub warmup_runs: usize,
    pub timed_runs: usize,
    pub seed: u64,
    pub accounting: ModelAccounting,
    pub memory: MemoryReport,
    pub backends: Vec<BackendResult>,
    pub comparison: Comparison,
    pub environment: Environment,
}

impl BenchReport {
    pub fn backend(&self, kind: BackendKind) -> Option<&BackendResult> {
        self.backends.iter().find(|b| b.backend == kind)
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for b in &self.backends {
            let l = &b.latency_ms;
            out.write_record([
                self.model.clone(),
                b.backend.to_string(),
                self.op.to_string(),
                b.samples.to_string(),
                l.min.to_string(),
                l.median.to_string(),
                l.mean.to_string(),
                l.p95.to_string(),
                l.max.to_string(),
                b.bytes.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "model {} | op {} | {} | {} warm-up + {} timed runs | {} build\n",
            self.model,
            self.op,
            self.precision,
            self.warmup_runs,
            self.timed_runs,
            self.environment.build_mode
        );
        s.push_str(&format!(
            "{:<16} {:>10} {:>10} {:>10} {:>10} {:>10} {:>12} {:>10}\n",
            "backend", "min ms", "median ms", "mean ms", "p95 ms", "max ms", "bytes", "setup ms"
        ));
        for b in &self.backends {
            let l = &b.latency_ms;
            s.push_str(&format!(
                "{:<16} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>12} {:>10.3}\n",
                b.backend.as_str(),
                l.min,
                l.median,
                l.mean,
                l.p95,
                l.max,
                b.bytes,
                b.setup_ms
            ));
        }
        let c = &self.comparison;
        if let Some(x) = c.sparse_speedup_vs_ragged {
            s.push_str(&format!(
                "sparse vs ragged median speed-up: {x:.2}x (reference {:.1}x)\n",
                c.target_speedup
            ));
        }
        s.push_str(&format!(
            "sparse vs ragged memory: {:.1}% reduction (reference {:.0}%), ratio {:.3}\n",
            100.0 * c.sparse_memory_reduction,
            100.0 * c.target_memory_reduction,
            self.memory.sparse_to_ragged_ratio
        ));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_of_known_sample() {
        let s: Vec<f64> = (1..=100).map(f64::from).collect();
        let l = LatencyStats::from_samples(&s).unwrap();
        assert_eq!(l.min, 1.0);
        assert_eq!(l.max, 100.0);
        assert_eq!(l.median, 50.5);
        assert_eq!(l.mean, 50.5);
        assert_eq!(l.p95, 95.0);
        assert!(l.is_ordered());
        assert!(LatencyStats::from_samples(&[]).is_none());
    }

    #[test]
    fn single_sample() {
        let l = LatencyStats::from_samples(&[0.25]).unwrap();
        assert_eq!((l.min, l.median, l.p95, l.max), (0.25, 0.25, 0.25, 0.25));
    }

    #[test]
    fn odd_sample_median() {
        let l = LatencyStats::from_samples(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(l.median, 2.0);
        assert_eq!(l.p95, 3.0);
    }
}
