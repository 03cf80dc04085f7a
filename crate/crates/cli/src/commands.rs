//! Subcommands of the `dataflow` binary.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dataflow_bench::{growth_exponent, run_bench, BenchConfig, Dimension};
use dataflow_core::analysis::{analyze, load_input, AnalysisOptions, InputFormat, LoadedModel};
use dataflow_core::io::{diagram_to_dot, save_model, validate_json};
use dataflow_core::validate_model;

use crate::exit;

#[derive(Debug, Parser)]
#[command(name = "dataflow", version, about = "Data flow diagram analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConvertTarget {
    DfdJson,
    Dot,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model for well-formedness and print the findings as JSON.
    Validate { model: PathBuf },
    /// Run constraints against a model.
    Analyze {
        model: PathBuf,
        /// Constraint file; may be repeated.
        #[arg(short, long = "constraints", required = true)]
        constraints: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: ReportFormat,
        /// Write one Graphviz file per transpose flow graph into this directory.
        #[arg(long)]
        tfg_dot: Option<PathBuf>,
        /// Include per-stage wall times in the report.
        #[arg(long)]
        timings: bool,
    },
    /// Convert a `.json`, `.adl` or `.puml` model.
    Convert {
        input: PathBuf,
        #[arg(long, value_enum)]
        to: ConvertTarget,
        /// Output file; standard output when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Time the pipeline on generated models.
    Bench {
        #[arg(long)]
        dimension: Dimension,
        /// Comma separated, ascending.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        repetitions: usize,
        /// Repeat short cells until this many milliseconds were measured.
        #[arg(long, default_value_t = 200.0)]
        min_time_ms: f64,
        /// Also write every individual run here.
        #[arg(long)]
        raw: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit::USAGE
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Validate { model } => validate(&model),
        Command::Analyze {
            model,
            constraints,
            format,
            tfg_dot,
            timings,
        } => analyze_cmd(&model, &constraints, format, tfg_dot.as_deref(), timings),
        Command::Convert { input, to, out } => convert(&input, to, out.as_deref()),
        Command::Bench {
            dimension,
            sizes,
            out,
            repetitions,
            min_time_ms,
            raw,
        } => {
            let mut config = BenchConfig::new(dimension, sizes, out);
            config.repetitions = repetitions;
            config.min_measured_ms = min_time_ms;
            config.raw_output = raw;
            bench(&config)
        }
        Command::Serve { port, host } => {
            let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
            runtime.block_on(crate::service::serve(&host, port))?;
            Ok(exit::OK)
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn load(path: &Path) -> Result<LoadedModel> {
    let format = InputFormat::from_path(path)?;
    let loaded = load_input(&read(path)?, format).with_context(|| format!("loading {}", path.display()))?;
    for w in &loaded.warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(loaded)
}

fn print(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn validate(path: &Path) -> Result<i32> {
    let report = match InputFormat::from_path(path)? {
        InputFormat::Json => validate_json(&read(path)?).with_context(|| format!("loading {}", path.display()))?,
        _ => {
            let loaded = load(path)?;
            validate_model(&loaded.model.dictionary, &loaded.model.diagram)
        }
    };
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    print(&json)?;
    for f in &report.findings {
        log::info!("{f}");
    }
    Ok(if report.has_errors() { exit::USAGE } else { exit::OK })
}

fn analyze_cmd(
    path: &Path,
    constraint_files: &[PathBuf],
    format: ReportFormat,
    tfg_dot: Option<&Path>,
    timings: bool,
) -> Result<i32> {
    let mut texts = Vec::with_capacity(constraint_files.len());
    for f in constraint_files {
        let bytes = read(f)?;
        texts.push(String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", f.display()))?);
    }
    let loaded = load(path)?;
    let analysis = analyze(loaded, &texts, AnalysisOptions { timings })?;
    if let Some(dir) = tfg_dot {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (i, g) in analysis.flow_graphs.graphs.iter().enumerate() {
            let file = dir.join(format!("tfg-{i:04}.dot"));
            fs::write(&file, g.to_dot(&analysis.loaded.model, &format!("tfg {i}")))
                .with_context(|| format!("writing {}", file.display()))?;
        }
    }
    match format {
        ReportFormat::Json => print(&analysis.report.to_json())?,
        ReportFormat::Text => print(&analysis.report.to_text())?,
    }
    Ok(if analysis.report.violation_count() > 0 {
        exit::VIOLATIONS
    } else {
        exit::OK
    })
}

fn convert(input: &Path, to: ConvertTarget, out: Option<&Path>) -> Result<i32> {
    let loaded = load(input)?;
    let text = match to {
        ConvertTarget::DfdJson => save_model(&loaded.model),
        ConvertTarget::Dot => diagram_to_dot(&loaded.model),
    };
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print(&text)?,
    }
    Ok(exit::OK)
}

fn bench(config: &BenchConfig) -> Result<i32> {
    let dimension = config.dimension;
    let rows = run_bench(config)?;
    let mut failed = false;
    for r in &rows {
        match (&r.error, r.median_ms) {
            (Some(e), _) => {
                failed = true;
                eprintln!("{dimension} {}: failed: {e}", r.size);
            }
            (None, Some(m)) => println!("{dimension} {}: median {m:.3} ms", r.size),
            (None, None) => bail!("row without timings"),
        }
    }
    if let Some(k) = growth_exponent(&rows) {
        println!("growth exponent: {k:.3}");
    }
    Ok(if failed { exit::VIOLATIONS } else { exit::OK })
}
