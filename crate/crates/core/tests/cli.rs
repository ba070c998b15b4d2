use std::path::Path;
use std::process::{Command, Output};

use aif_unified::bench::{BenchReport, ModelAccounting, VerifyReport, CSV_HEADER};
use aif_unified::model::{
    load_model, save_model, validate_model, FactorSpec, LikelihoodTensor, ModalitySpec, ModelSpec,
};
use tempfile::TempDir;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aif-unified"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn demo_file(dir: &TempDir) -> std::path::PathBuf {
    let spec = ModelSpec {
        factors: vec![
            FactorSpec {
                id: 0,
                cardinality: 2,
            },
            FactorSpec {
                id: 1,
                cardinality: 3,
            },
        ],
        modalities: vec![
            ModalitySpec {
                id: 0,
                cardinality: 2,
                deps: vec![0],
            },
            ModalitySpec {
                id: 1,
                cardinality: 2,
                deps: vec![0, 1],
            },
        ],
        likelihoods: vec![
            LikelihoodTensor {
                modality: 0,
                shape: vec![2, 2],
                values: vec![0.9, 0.2, 0.1, 0.8],
            },
            LikelihoodTensor {
                modality: 1,
                shape: vec![2, 2, 3],
                values: vec![
                    1.0, 0.5, 0.0, 0.25, 0.75, 0.6, 0.0, 0.5, 1.0, 0.75, 0.25, 0.4,
                ],
            },
        ],
    };
    assert!(validate_model(&spec).is_empty());
    let path = dir.path().join("demo.json");
    save_model(&spec, &path).unwrap();
    path
}

#[test]
fn gen_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = cli(&[
            "gen",
            "--seed",
            "1",
            "--factors",
            "2",
            "--modalities",
            "3",
            "--sparsity",
            "0.3",
            "--out",
            path_str(p),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let spec = load_model(&a).unwrap();
    assert!(validate_model(&spec).is_empty());
    assert_eq!((spec.num_factors(), spec.num_modalities()), (2, 3));
}

#[test]
fn gen_presets_have_fixed_counts() {
    let dir = TempDir::new().unwrap();
    for (preset, modalities, hidden) in [("XXS", 16, 60), ("XL", 326, 1300)] {
        let path = dir.path().join(format!("{preset}.json"));
        let out = cli(&["gen", "--preset", preset, "--out", path_str(&path)]);
        assert_eq!(code(&out), 0);
        let spec = load_model(&path).unwrap();
        assert!(validate_model(&spec).is_empty());
        assert_eq!(spec.num_modalities(), modalities);
        assert_eq!(spec.total_hidden_states(), hidden);
    }
}

#[test]
fn gen_infeasible_sparsity_is_usage_error() {
    let out = cli(&[
        "gen",
        "--factors",
        "2",
        "--modalities",
        "2",
        "--l-min",
        "2",
        "--l-max",
        "2",
        "--sparsity",
        "0.9",
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible sparsity"));
}

#[test]
fn verify_demo_and_generated_models_pass() {
    let dir = TempDir::new().unwrap();
    let demo = demo_file(&dir);
    let out = cli(&["verify", "--model", path_str(&demo)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));

    let gen = dir.path().join("seed42.json");
    assert_eq!(
        code(&cli(&[
            "gen",
            "--seed",
            "42",
            "--factors",
            "3",
            "--modalities",
            "4",
            "--k-max",
            "5",
            "--d-max",
            "3",
            "--sparsity",
            "0.4",
            "--out",
            path_str(&gen),
        ])),
        0
    );
    let report_path = dir.path().join("verify.json");
    let out = cli(&[
        "verify",
        "--model",
        path_str(&gen),
        "--out",
        path_str(&report_path),
    ]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("max relative deviation"));
    let report: VerifyReport =
        serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    assert!(report.passed);
    assert_eq!(report.reference, "brute-force-oracle");
    assert!(report.trials >= 50);
}

#[test]
fn verify_rejects_corrupted_column() {
    let dir = TempDir::new().unwrap();
    let path = demo_file(&dir);
    let mut spec = load_model(&path).unwrap();
    spec.likelihoods[1].values[0] = 0.7;
    save_model(&spec, &path).unwrap();
    let out = cli(&["verify", "--model", path_str(&path)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("non-normalized-column"));
}

#[test]
fn verify_needs_at_least_50_trials() {
    assert_eq!(
        code(&cli(&["verify", "--preset", "XXS", "--trials", "10"])),
        2
    );
}

#[test]
fn inspect_demo_counts() {
    let dir = TempDir::new().unwrap();
    let path = demo_file(&dir);
    let out = cli(&["inspect", "--model", path_str(&path), "--format", "json"]);
    assert_eq!(code(&out), 0);
    let acc: ModelAccounting = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(acc.original_param_count, 16);
    assert_eq!(acc.padded_param_count, 36);
    assert_eq!(acc.nnz, 14);

    let text = cli(&["inspect", "--model", path_str(&path)]);
    let stdout = String::from_utf8_lossy(&text.stdout);
    assert!(stdout.contains("original params            16"), "{stdout}");
    assert!(stdout.contains("padded params              36"), "{stdout}");
}

#[test]
fn inspect_preset_xs() {
    let out = cli(&["inspect", "--preset", "xs", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let acc: ModelAccounting = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!((acc.num_modalities, acc.total_hidden_states), (46, 180));
    assert!(acc.unified_sparsity_percent >= acc.original_sparsity_percent);
}

#[test]
fn usage_and_io_errors() {
    assert_eq!(code(&cli(&[])), 2);
    assert_eq!(code(&cli(&["inspect"])), 2);
    assert_eq!(code(&cli(&["inspect", "--preset", "XXL"])), 2);
    assert_eq!(
        code(&cli(&["inspect", "--preset", "XS", "--model", "x.json"])),
        2
    );
    assert_eq!(code(&cli(&["bench", "--preset", "XXS", "--runs", "0"])), 2);
    assert_eq!(
        code(&cli(&["bench", "--preset", "XXS", "--precision", "f16"])),
        2
    );
    assert_eq!(
        code(&cli(&["bench", "--preset", "XXS", "--backends", "gpu"])),
        2
    );
    assert_eq!(
        code(&cli(&["inspect", "--model", "/nonexistent/model.json"])),
        3
    );

    let dir = TempDir::new().unwrap();
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, b"{not json").unwrap();
    assert_eq!(code(&cli(&["verify", "--model", path_str(&garbage)])), 3);
    assert_eq!(
        code(&cli(&[
            "gen",
            "--preset",
            "XXS",
            "--out",
            "/nonexistent/dir/out.json"
        ])),
        3
    );
}

#[test]
fn bench_json_report_round_trips_through_schema() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("report.json");
    for op in ["per-modality", "expected"] {
        let out = cli(&[
            "bench",
            "--preset",
            "XXS",
            "--runs",
            "100",
            "--warmup",
            "1",
            "--op",
            op,
            "--precision",
            "f64",
            "--seed",
            "3",
            "--out",
            path_str(&path),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let text = std::fs::read_to_string(&path).unwrap();
        // unknown or missing fields fail here
        let report: BenchReport = serde_json::from_str(&text).unwrap();
        assert_eq!(report.op.to_string(), op);
        assert_eq!(report.backends.len(), 3);
        for b in &report.backends {
            assert_eq!(b.samples, 100);
            assert!(b.latency_ms.is_ordered());
        }
        assert_eq!(report.memory.value_bytes, 8);
        assert_eq!(
            report.memory.ragged_bytes,
            report.accounting.original_param_count * 8
        );
        assert_eq!(
            report.memory.dense_padded_bytes,
            report.accounting.padded_param_count * 8
        );
        assert_eq!(
            report.memory.sparse_bytes,
            report.accounting.nnz * (8 + 4 * (2 + report.accounting.d_max))
        );
        let reparsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_value(&report).unwrap(), reparsed);
    }
}

#[test]
fn bench_csv_has_fixed_columns() {
    let out = cli(&[
        "bench",
        "--preset",
        "XXS",
        "--runs",
        "5",
        "--format",
        "csv",
        "--backends",
        "ragged,sparse",
    ]);
    assert_eq!(code(&out), 0);
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, CSV_HEADER);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][1], "baseline-ragged");
    assert_eq!(&rows[1][1], "unified-sparse");
    for r in &rows {
        assert_eq!(&r[0], "XXS");
        assert_eq!(&r[2], "per-modality");
        assert_eq!(&r[3], "5");
        let v: Vec<f64> = (4..9).map(|i| r[i].parse().unwrap()).collect();
        // min <= median <= mean-or-p95 ordering on the order statistics
        assert!(v[0] <= v[1] && v[1] <= v[3] && v[3] <= v[4], "{v:?}");
        assert!(r[9].parse::<usize>().unwrap() > 0);
    }
}
