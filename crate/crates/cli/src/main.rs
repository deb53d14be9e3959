use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use weylcalc_cli::commands::*;
use weylcalc_cli::config::ExperimentConfig;
use weylcalc_cli::output::{provenance, report, write_dir, Output};
use weylcalc_cli::Invalid;

#[derive(Parser, Debug)]
#[command(name = "weylcalc", version, about = "Weyl symbol calculus toolkit")]
struct Cli {
    /// Seed for randomly generated evaluation points.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write payloads, provenance.json and metadata.json into this directory
    /// instead of printing the primary payload.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check (M.1)-(M.4) and evaluate the associated function of a weight sequence.
    CheckWeights(CheckWeightsArgs),
    /// Sharp product of two series files.
    Sharp(SharpArgs),
    /// Change the quantization parameter of a series.
    Requantize(RequantizeArgs),
    /// Formal parametrix of an elliptic symbol.
    Parametrix(ParametrixArgs),
    /// Coefficients of the complex power expansion at sample points.
    #[command(alias = "cpow")]
    ComplexPower(ComplexPowerArgs),
    /// Heat parametrix terms and their values on a time grid.
    Heat(HeatArgs),
    /// Matrix of a one-dimensional symbol in the Hermite basis.
    Quantize(QuantizeArgs),
    /// Compare the spectra of two matrix files.
    SpectralCompare(SpectralCompareArgs),
    /// Quantized complex power against the exact matrix power.
    ValidatePower(ValidatePowerArgs),
    /// Quantized heat parametrix of a^s against exp(-t A^s).
    ValidateSqrt(ValidateSqrtArgs),
    /// Run an experiment described by a TOML config file.
    Run { config: PathBuf },
}

fn execute(cli: &Cli, out: &mut Output) -> Result<Value> {
    let seed = cli.seed;
    macro_rules! with_report {
        ($name:literal, $args:expr, $body:expr) => {{
            let prov = provenance($name, $args, seed)?;
            let result = $body?;
            out.json("report.json", &report(&prov, result))?;
            prov
        }};
    }
    macro_rules! plain {
        ($name:literal, $args:expr, $body:expr) => {{
            let prov = provenance($name, $args, seed)?;
            $body?;
            prov
        }};
    }
    Ok(match &cli.command {
        Command::CheckWeights(a) => with_report!("check-weights", a, check_weights(a)),
        Command::Sharp(a) => plain!("sharp", a, sharp_cmd(a, out)),
        Command::Requantize(a) => plain!("requantize", a, requantize(a, out)),
        Command::Parametrix(a) => with_report!("parametrix", a, parametrix_cmd(a, out)),
        Command::ComplexPower(a) => with_report!("complex-power", a, complex_power(a, seed, out)),
        Command::Heat(a) => with_report!("heat", a, heat_cmd(a, seed, out)),
        Command::Quantize(a) => with_report!("quantize", a, quantize_cmd(a, out)),
        Command::SpectralCompare(a) => with_report!("spectral-compare", a, spectral_compare_cmd(a)),
        Command::ValidatePower(a) => with_report!("validate-power", a, validate_power(a)),
        Command::ValidateSqrt(a) => with_report!("validate-sqrt", a, validate_sqrt(a)),
        Command::Run { .. } => unreachable!("expanded before dispatch"),
    })
}

fn emit(cli: &Cli, argv: &[String]) -> Result<()> {
    let start = Instant::now();
    let mut out = Output::default();
    let prov = execute(cli, &mut out)?;
    match &cli.out {
        Some(dir) => write_dir(dir, &out, &prov, start.elapsed().as_secs_f64(), argv)?,
        None => {
            let first = out
                .payloads
                .first()
                .ok_or_else(|| anyhow::anyhow!("command produced no output"))?;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&first.bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn run(argv: Vec<String>) -> Result<()> {
    let cli = Cli::try_parse_from(&argv)?;
    if let Command::Run { config } = &cli.command {
        if !config.is_file() {
            return Err(Invalid(format!("config not found: {}", config.display())).into());
        }
        let cfg = ExperimentConfig::read(config).map_err(|e| Invalid(format!("{e:#}")))?;
        if cfg.command == "run" {
            return Err(Invalid("a config cannot run another config".into()).into());
        }
        let args = cfg.to_args().map_err(|e| Invalid(format!("{e:#}")))?;
        let inner = Cli::try_parse_from(&args)?;
        return emit(&inner, &args);
    }
    emit(&cli, &argv)
}

/// 2 for bad input, 1 for everything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<Invalid>() {
            return 2;
        }
        if let Some(w) = cause.downcast_ref::<weylcalc::Error>() {
            return match w {
                weylcalc::Error::InvalidParameter(_)
                | weylcalc::Error::InvalidInput(_)
                | weylcalc::Error::Parse { .. } => 2,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    match run(argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(c) = e.downcast_ref::<clap::Error>() {
                if !c.use_stderr() {
                    // --help and --version
                    let _ = c.print();
                    return ExitCode::SUCCESS;
                }
                let msg = c.render().to_string();
                eprintln!(
                    "{}",
                    json!({ "error": "validation", "message": msg.trim_end(), "exit_code": 2 })
                );
                return ExitCode::from(2);
            }
            let code = exit_code(&e);
            let kind = if code == 2 { "validation" } else { "error" };
            eprintln!(
                "{}",
                json!({ "error": kind, "message": format!("{e:#}"), "exit_code": code })
            );
            ExitCode::from(code)
        }
    }
}
