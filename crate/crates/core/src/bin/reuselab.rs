use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use reuselab::datasets::write_csv;
use reuselab::experiments::{
    aggregate, curve_rows, read_reps_csv, reusability_report, run_to_dir, write_curve_csv, write_report_csv,
    DatasetSpec, ExperimentConfig, RunManifest, TraceSource, CURVE_COLUMNS, CURVE_FILE, MANIFEST_FILE, REPORT_FILE,
};
use reuselab::selection::{compare_traces, read_trace, replay_selection};
use reuselab::Error;

#[derive(Parser)]
#[command(name = "reuselab", version, about = "Active-learning sample reusability experiments")]
struct Cli {
    /// Suppress progress output on standard error.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    UniformLine,
    FourClusterLine,
    Circle,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset, or export the dataset of a config, as CSV.
    Gen {
        #[arg(value_enum, required_unless_present = "config")]
        kind: Option<Generator>,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0.001)]
        circle_prob: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Take the dataset from an experiment config instead.
        #[arg(long, conflicts_with = "kind")]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment config (TOML, or a manifest.json from a previous run).
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "REUSELAB_OUT_DIR", default_value = "out")]
        out_dir: PathBuf,
        /// Overrides base_seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Recompute selection traces and compare them row by row. Accepts trace
    /// files or run directories.
    Replay {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Aggregate one or more reps.csv files into curve and report CSVs.
    ReportMerge {
        #[arg(required = true)]
        reps: Vec<PathBuf>,
        #[arg(long, env = "REUSELAB_OUT_DIR", default_value = "out")]
        out_dir: PathBuf,
    },
}

/// Exit codes: 0 success, 1 replay divergence, 2 usage or config, 3
/// degenerate results, 4 I/O.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::MissingFile { .. } | Error::Csv(_) => 4,
        Error::DegenerateGrid | Error::EmptyCell(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = cli.quiet;
    let result = match cli.command {
        Command::Gen { kind, n, circle_prob, seed, config, out } => gen(kind, n, circle_prob, seed, config, &out),
        Command::Run { config, out_dir, seed, jobs } => run(&config, &out_dir, seed, jobs, quiet),
        Command::Replay { paths } => replay(&paths),
        Command::ReportMerge { reps, out_dir } => report_merge(&reps, &out_dir),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("reuselab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn gen(
    kind: Option<Generator>,
    n: usize,
    circle_prob: f64,
    seed: u64,
    config: Option<PathBuf>,
    out: &Path,
) -> Result<u8, Error> {
    let spec = match (kind, config) {
        (_, Some(path)) => ExperimentConfig::load(&path)?.0.dataset,
        (Some(Generator::UniformLine), None) => DatasetSpec::UniformLine { n },
        (Some(Generator::FourClusterLine), None) => DatasetSpec::FourClusterLine { n },
        (Some(Generator::Circle), None) => DatasetSpec::Circle { n, circle_prob },
        (None, None) => return Err(Error::InvalidArgument("a generator kind or --config is required".into())),
    };
    let dataset = spec.build(seed)?;
    write_csv(&dataset, out)?;
    println!("instances {}", dataset.len());
    println!("dim {}", dataset.dim());
    println!("positive_fraction {}", dataset.positive_fraction());
    Ok(0)
}

fn load_config(path: &Path) -> Result<(ExperimentConfig, Option<String>), Error> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path).map_err(|source| Error::MissingFile { path: path.to_path_buf(), source })?;
        let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        manifest.config.validate()?;
        Ok((manifest.config, manifest.config_toml))
    } else {
        let (config, text) = ExperimentConfig::load(path)?;
        Ok((config, Some(text)))
    }
}

fn run(path: &Path, out_dir: &Path, seed: Option<u64>, jobs: usize, quiet: bool) -> Result<u8, Error> {
    let (mut config, toml_text) = load_config(path)?;
    if let Some(seed) = seed {
        config.base_seed = seed;
    }
    let progress = |done: usize, total: usize| {
        if !quiet {
            eprintln!("repetition {done}/{total}");
        }
    };
    let (result, _) = run_to_dir(&config, toml_text, out_dir, jobs, Some(&progress))?;

    let stdout = std::io::stdout();
    let mut w = csv::Writer::from_writer(stdout.lock());
    w.write_record(CURVE_COLUMNS)?;
    for row in curve_rows(&result.curve) {
        w.write_record(&row)?;
    }
    w.flush()?;
    if !quiet {
        eprintln!("wrote {}", out_dir.display());
    }
    if result.curve.iter().all(|p| p.mean_err.is_none()) {
        eprintln!("reuselab: every cell lost all repetitions");
        return Ok(3);
    }
    Ok(0)
}

fn trace_files(path: &Path) -> Result<Vec<PathBuf>, Error> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let manifest_path = path.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path).map_err(|source| Error::MissingFile { path: manifest_path, source })?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    Ok(manifest.traces.iter().map(|t| path.join(t)).collect())
}

fn replay(paths: &[PathBuf]) -> Result<u8, Error> {
    let mut failures = 0;
    let mut out = std::io::stdout().lock();
    for path in paths {
        for trace in trace_files(path)? {
            let (header, stored) = read_trace(&trace)?;
            let source: TraceSource = serde_json::from_value(header.source.clone()).map_err(|e| Error::Parse {
                path: trace.clone(),
                line: 1,
                message: format!("trace source: {e}"),
            })?;
            let pool = source.training_pool()?;
            let recomputed = replay_selection(&pool, &header)?;
            match compare_traces(&stored, &recomputed.trace) {
                None => writeln!(out, "ok {}", trace.display())?,
                Some(d) => {
                    failures += 1;
                    writeln!(
                        out,
                        "divergence {} row {} field {}: stored {}, recomputed {}",
                        trace.display(),
                        d.row,
                        d.field,
                        d.expected,
                        d.actual
                    )?;
                }
            }
        }
    }
    Ok(if failures == 0 { 0 } else { 1 })
}

fn report_merge(reps: &[PathBuf], out_dir: &Path) -> Result<u8, Error> {
    let mut records = Vec::new();
    for path in reps {
        records.extend(read_reps_csv(path)?);
    }
    let curve = aggregate(&records)?;
    let report = reusability_report(&curve);
    std::fs::create_dir_all(out_dir)?;
    write_curve_csv(&out_dir.join(CURVE_FILE), &curve)?;
    write_report_csv(&out_dir.join(REPORT_FILE), &report)?;
    println!("merged {} records into {} cells", records.len(), curve.len());
    Ok(0)
}
