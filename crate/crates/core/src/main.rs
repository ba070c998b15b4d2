use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use aif_unified::bench::{
    inspect, memory_report, run_bench, verify_model, BenchConfig, BenchOp, ModelSource, Precision,
};
use aif_unified::likelihood::BackendKind;
use aif_unified::model::{generate_model, write_model, GeneratorConfig, ModelPreset, PresetName};
use aif_unified::Error;

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "aif-unified",
    version,
    about = "Generate, verify, inspect and benchmark factored observation models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a model JSON file from a preset or explicit generator settings.
    Gen(GenArgs),
    /// Check a model and compare every backend against the reference.
    Verify(VerifyArgs),
    /// Time the backends on a model.
    Bench(BenchArgs),
    /// Print size and sparsity accounting for a model.
    Inspect(InspectArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ModelArg {
    /// Preset name: XXS, XS, S, M, L or XL.
    #[arg(long)]
    preset: Option<PresetName>,
    /// Model JSON file.
    #[arg(long)]
    model: Option<PathBuf>,
}

impl ModelArg {
    fn source(&self) -> ModelSource {
        match (&self.preset, &self.model) {
            (Some(p), _) => ModelSource::Preset(*p),
            (None, Some(path)) => ModelSource::File(path.clone()),
            (None, None) => unreachable!("clap enforces one of --preset/--model"),
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, conflicts_with_all = ["factors", "modalities"])]
    preset: Option<PresetName>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, required_unless_present = "preset")]
    factors: Option<usize>,
    #[arg(long, required_unless_present = "preset")]
    modalities: Option<usize>,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 4)]
    k_max: usize,
    #[arg(long, default_value_t = 2)]
    l_min: usize,
    #[arg(long, default_value_t = 6)]
    l_max: usize,
    #[arg(long, default_value_t = 1)]
    d_min: usize,
    #[arg(long, default_value_t = 2)]
    d_max: usize,
    /// Target fraction of exact zeros in the likelihood tables.
    #[arg(long, default_value_t = 0.0)]
    sparsity: f64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(50..))]
    trials: u64,
    /// Write the JSON report here as well.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Comma-separated backends.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "baseline-ragged,unified-dense,unified-sparse"
    )]
    backends: Vec<BackendKind>,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    #[arg(long, default_value = "f32")]
    precision: Precision,
    #[arg(long, default_value = "per-modality")]
    op: BenchOp,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    format: ReportFormat,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long, value_enum, default_value_t = InspectFormat::Text)]
    format: InspectFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum InspectFormat {
    Text,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Inspect(a) => cmd_inspect(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io(_) | Error::Json(_) | Error::Csv(_) => EXIT_IO,
                Error::InvalidModel(_) => EXIT_VERIFY,
                _ => EXIT_USAGE,
            })
        }
    }
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_gen(a: GenArgs) -> aif_unified::Result<ExitCode> {
    let spec = match a.preset {
        Some(p) => ModelPreset::get(p).generate()?,
        None => generate_model(&GeneratorConfig {
            seed: a.seed,
            num_factors: a.factors.unwrap_or_default(),
            factor_cardinality_range: (a.k_min, a.k_max),
            num_modalities: a.modalities.unwrap_or_default(),
            outcome_cardinality_range: (a.l_min, a.l_max),
            deps_per_modality_range: (a.d_min, a.d_max),
            functional_sparsity_target: a.sparsity,
            total_hidden_states: None,
        })?,
    };
    let mut w = output(a.out.as_deref())?;
    write_model(&spec, &mut w)?;
    writeln!(w)?;
    w.flush()?;
    if let Some(path) = &a.out {
        eprintln!(
            "wrote {} ({} modalities, {} factors, {} hidden states)",
            path.display(),
            spec.num_modalities(),
            spec.num_factors(),
            spec.total_hidden_states()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(a: VerifyArgs) -> aif_unified::Result<ExitCode> {
    let (name, spec) = a.model.source().load()?;
    let report = verify_model(&spec, a.trials as usize, a.seed)?;
    if let Some(path) = &a.out {
        let mut w = output(Some(path))?;
        serde_json::to_writer_pretty(&mut w, &report)?;
        writeln!(w)?;
        w.flush()?;
    }
    if !report.violations.is_empty() {
        println!("{name}: INVALID ({} violation(s))", report.violations.len());
        for v in &report.violations {
            println!("  {v}");
        }
        return Ok(ExitCode::from(EXIT_VERIFY));
    }
    println!(
        "{name}: {} trials against {}, max relative deviation {:e} (tolerance {:e})",
        report.trials, report.reference, report.max_relative_deviation, report.tolerance
    );
    if let Some(f) = &report.first_failure {
        println!("FAIL, first failing case:");
        println!("{}", serde_json::to_string_pretty(f)?);
        return Ok(ExitCode::from(EXIT_VERIFY));
    }
    println!("OK");
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(a: BenchArgs) -> aif_unified::Result<ExitCode> {
    let config = BenchConfig {
        source: a.model.source(),
        backends: a.backends,
        warmup_runs: a.warmup,
        timed_runs: a.runs as usize,
        precision: a.precision,
        op: a.op,
        seed: a.seed,
    };
    let report = run_bench(&config)?;
    let mut w = output(a.out.as_deref())?;
    match a.format {
        ReportFormat::Json => {
            report.write_json(&mut w)?;
            writeln!(w)?;
        }
        ReportFormat::Csv => report.write_csv(&mut w)?,
    }
    w.flush()?;
    eprint!("{}", report.summary());
    Ok(ExitCode::SUCCESS)
}

fn cmd_inspect(a: InspectArgs) -> aif_unified::Result<ExitCode> {
    let (name, spec) = a.model.source().load()?;
    spec.check_structure()?;
    let acc = inspect(&spec)?;
    let mut w = output(a.out.as_deref())?;
    match a.format {
        InspectFormat::Json => {
            serde_json::to_writer_pretty(&mut w, &acc)?;
            writeln!(w)?;
        }
        InspectFormat::Text => {
            writeln!(w, "model                      {name}")?;
            writeln!(w, "modalities (M)             {}", acc.num_modalities)?;
            writeln!(w, "factors (N)                {}", acc.num_factors)?;
            writeln!(w, "hidden states (sum K)      {}", acc.total_hidden_states)?;
            writeln!(
                w,
                "L_max / K_max / D_max      {} / {} / {}",
                acc.l_max, acc.k_max, acc.d_max
            )?;
            writeln!(w, "original params            {}", acc.original_param_count)?;
            writeln!(w, "padded params              {}", acc.padded_param_count)?;
            writeln!(w, "nonzeros                   {}", acc.nnz)?;
            writeln!(
                w,
                "original sparsity          {:.1}%",
                acc.original_sparsity_percent
            )?;
            writeln!(
                w,
                "unified sparsity           {:.1}%",
                acc.unified_sparsity_percent
            )?;
            for vb in [4, 8] {
                let m = memory_report(&spec, vb)?;
                writeln!(
                    w,
                    "bytes @{vb}B values          ragged {} | dense {} | sparse {} (ratio {:.3})",
                    m.ragged_bytes, m.dense_padded_bytes, m.sparse_bytes, m.sparse_to_ragged_ratio
                )?;
            }
        }
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}
