//! `telab`: run experiment grids and analyse the datasets they produce.
//!
//! Exit status: 0 on success, 1 for bad input (arguments, config, analysis
//! or format names), 2 when running or analysing fails.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use telab_core::analysis::{
    analyze_gap, analyze_pathflow, analyze_residual_gap, AnalysisError, ExportFormat, Table,
};
use telab_core::experiment::{
    expand_instances, instance_model, parse_config, read_jsonl, run_all, write_csv, write_jsonl,
    ConfigError, RecordStatus,
};
use telab_core::formulations::ObjectiveKind;
use telab_core::lp::export_lp_text;

#[derive(Parser)]
#[command(
    name = "telab",
    version,
    about = "Path-based traffic-engineering experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct AnalysisArgs {
    /// Dataset written by `run` (dataset.jsonl).
    #[arg(long)]
    dataset: PathBuf,
    /// Objective to select: LB, AD or MCR.
    #[arg(long, default_value = "LB")]
    objective: String,
    /// Smaller path budget of the gap analysis.
    #[arg(long, default_value_t = 3)]
    k_lo: usize,
    /// Larger path budget of the gap analysis.
    #[arg(long, default_value_t = 7)]
    k_hi: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run every instance of a config and write dataset.jsonl, dataset.csv and config.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Overrides the config's master_seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print an analysis table to stdout.
    Analyze {
        /// gap, pathflow or residualgap.
        analysis: String,
        #[command(flatten)]
        args: AnalysisArgs,
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Write the routing model of one instance in LP interchange text.
    Lp {
        #[arg(long)]
        config: PathBuf,
        /// Position of the instance in expansion order, from 0.
        #[arg(long)]
        index: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write an analysis table to a file.
    Export {
        #[arg(long)]
        analysis: String,
        #[arg(long)]
        format: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        args: AnalysisArgs,
    },
}

enum Failure {
    /// Bad input: exit 1.
    Input(String),
    /// Runtime failure: exit 2.
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io(e) => Failure::Runtime(format!("cannot read config: {e}")),
            other => Failure::Input(other.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

#[derive(Clone, Copy)]
enum Analysis {
    Gap,
    PathFlow,
    ResidualGap,
}

fn parse_analysis(name: &str) -> Result<Analysis, Failure> {
    match name.to_ascii_lowercase().as_str() {
        "gap" => Ok(Analysis::Gap),
        "pathflow" => Ok(Analysis::PathFlow),
        "residualgap" => Ok(Analysis::ResidualGap),
        _ => Err(Failure::Input(format!(
            "unknown analysis '{name}' (expected gap, pathflow or residualgap)"
        ))),
    }
}

fn write_table(
    analysis: Analysis,
    args: &AnalysisArgs,
    format: ExportFormat,
    out: impl Write,
) -> Result<(), Failure> {
    let objective: ObjectiveKind = args
        .objective
        .parse()
        .map_err(|e| Failure::Input(format!("{e}")))?;
    let records = read_jsonl(&args.dataset).map_err(runtime)?;
    let result: Result<(), AnalysisError> = match analysis {
        Analysis::Gap => analyze_gap(&records, args.k_lo, args.k_hi, objective)
            .and_then(|t| t.export(format, out)),
        Analysis::PathFlow => {
            analyze_pathflow(&records, objective).and_then(|t| t.export(format, out))
        }
        Analysis::ResidualGap => analyze_residual_gap(&records).and_then(|t| t.export(format, out)),
    };
    result.map_err(runtime)
}

fn run(config: &Path, out: &Path, workers: usize, seed: Option<u64>) -> Result<(), Failure> {
    if workers == 0 {
        return Err(Failure::Input("--workers must be at least 1".into()));
    }
    let mut cfg = parse_config(config)?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    let data = run_all(&cfg, workers).map_err(runtime)?;
    fs::create_dir_all(out).map_err(runtime)?;
    write_jsonl(&data.records, out.join("dataset.jsonl")).map_err(runtime)?;
    write_csv(&data.records, out.join("dataset.csv")).map_err(runtime)?;
    let echo = File::create(out.join("config.json")).map_err(runtime)?;
    serde_json::to_writer_pretty(BufWriter::new(echo), &data.config).map_err(runtime)?;
    let count = |s: RecordStatus| data.records.iter().filter(|r| r.status == s).count();
    eprintln!(
        "wrote {} records to {} ({} optimal, {} feasible, {} infeasible, {} node limit, {} errors)",
        data.records.len(),
        out.display(),
        count(RecordStatus::Optimal),
        count(RecordStatus::Feasible),
        count(RecordStatus::Infeasible),
        count(RecordStatus::NodeLimit),
        count(RecordStatus::Error),
    );
    Ok(())
}

fn export_model(config: &Path, index: usize, out: &Path) -> Result<(), Failure> {
    let cfg = parse_config(config)?;
    let specs = expand_instances(&cfg);
    let spec = specs.get(index).ok_or_else(|| {
        Failure::Input(format!(
            "instance {index} out of range ({} instances)",
            specs.len()
        ))
    })?;
    let model = instance_model(&cfg, spec).map_err(Failure::Runtime)?;
    fs::write(out, export_lp_text(&model)).map_err(runtime)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
            seed,
        } => run(&config, &out, workers, seed),
        Command::Lp { config, index, out } => export_model(&config, index, &out),
        Command::Analyze {
            analysis,
            args,
            format,
        } => {
            let analysis = parse_analysis(&analysis)?;
            let format: ExportFormat = format.parse().map_err(Failure::Input)?;
            write_table(analysis, &args, format, io::stdout().lock())
        }
        Command::Export {
            analysis,
            format,
            out,
            args,
        } => {
            let analysis = parse_analysis(&analysis)?;
            let format: ExportFormat = format.parse().map_err(Failure::Input)?;
            let file = File::create(&out).map_err(runtime)?;
            write_table(analysis, &args, format, BufWriter::new(file))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
