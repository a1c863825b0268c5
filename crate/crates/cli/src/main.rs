use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use qkbench::circuit::FeatureMapKind;
use qkbench::kern::KernelFormat;
use qkbench_cli::campaign::{run_campaign, RunOptions};
use qkbench_cli::commands;
use qkbench_cli::report::{run_report, write_report, Format, Mode};

/// Quantum-kernel SVM benchmark engine.
#[derive(Parser)]
#[command(name = "qkbench", version)]
struct Cli {
    /// More logging (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment of a campaign config, writing JSONL results.
    Run {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Worker threads (default: config `jobs`, then all cores).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        no_cache: bool,
    },
    /// Analyse JSONL results (or two kernel files for compare-kernels).
    Report {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Kernel container files.
    Kernel {
        #[command(subcommand)]
        action: KernelAction,
    },
    /// Circuit structure.
    Circuit {
        #[command(subcommand)]
        action: CircuitAction,
    },
    /// Kernel-target alignment of θ for an ideal quantum kernel.
    Qkt {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare an externally produced kernel with simulated references.
    HwValidate {
        kernel: PathBuf,
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum KernelAction {
    /// Compute the full-data kernel of a run config and write it.
    Export {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to csv for a .csv path, container otherwise.
        #[arg(long, value_parser = parse_format)]
        format: Option<KernelFormat>,
    },
    /// Describe (and optionally convert) a kernel file.
    Import {
        path: PathBuf,
        #[arg(long)]
        to: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CircuitAction {
    Inspect {
        #[arg(long, value_parser = parse_map)]
        map: FeatureMapKind,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        reps: usize,
    },
}

fn parse_map(s: &str) -> Result<FeatureMapKind, String> {
    s.parse().map_err(|e: qkbench::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<KernelFormat, String> {
    match s {
        "container" => Ok(KernelFormat::Container),
        "csv" => Ok(KernelFormat::Csv),
        other => Err(format!("unknown kernel format '{other}' (container or csv)")),
    }
}

fn emit_json(value: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => writeln!(std::io::stdout().lock(), "{text}")?,
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Run { config, output, jobs, no_cache } => {
            let outcome = run_campaign(&config, &RunOptions { output, jobs, no_cache })?;
            eprintln!(
                "{} succeeded, {} failed; results in {}",
                outcome.succeeded,
                outcome.failed,
                outcome.output.display()
            );
            Ok(outcome.exit_code() as u8)
        }
        Command::Report { mode, format, out, inputs } => {
            let report = run_report(mode, &inputs)?;
            match out {
                Some(p) => {
                    let mut w = BufWriter::new(File::create(p)?);
                    write_report(&report, format, &mut w)?;
                    w.flush()?;
                }
                None => write_report(&report, format, &mut std::io::stdout().lock())?,
            }
            Ok(0)
        }
        Command::Kernel { action: KernelAction::Export { config, out, format } } => {
            emit_json(&commands::kernel_export(&config, &out, format)?, None)?;
            Ok(0)
        }
        Command::Kernel { action: KernelAction::Import { path, to } } => {
            emit_json(&commands::kernel_import(&path, to.as_deref())?, None)?;
            Ok(0)
        }
        Command::Circuit { action: CircuitAction::Inspect { map, k, reps } } => {
            emit_json(&commands::circuit_inspect(map, k, reps)?, None)?;
            Ok(0)
        }
        Command::Qkt { config, out } => {
            emit_json(&commands::qkt(&config)?, out.as_deref())?;
            Ok(0)
        }
        Command::HwValidate { kernel, config, out } => {
            emit_json(&commands::hw_validate(&kernel, &config)?, out.as_deref())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Output piped into `head` and closed early is not a failure.
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            || c.downcast_ref::<csv::Error>().is_some_and(|ce| matches!(ce.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe))
    })
}
