use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use ramsey_lab_cli::{run, Scenario};
use ramsey_lab_oracle as oracle;
use serde_json::Value;

#[derive(Parser)]
#[command(name = "ramsey-lab", version, about = "Ramsey extraction and monochromatic reductions on eventually periodic sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write a JSON report.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Report path; defaults to the scenario's `output`, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        fuel_override: Option<u64>,
    },
    /// Brute-force checks that share no code with the engines.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Recheck a certificate, or every certificate in a report.
    VerifyCert { file: PathBuf },
    /// Recheck the stage values of a trace, or of every trace in a report.
    VerifyStages { file: PathBuf },
    /// Look for three points whose pairs all have parity color 2.
    Clique2 {
        #[arg(long)]
        class: String,
        #[arg(long, default_value_t = 32)]
        count: u64,
    },
    /// Count the blocks of the parity color-1 relation on an orbit sample.
    Components {
        #[arg(long)]
        class: String,
        #[arg(long, default_value_t = 64)]
        sample: u64,
    },
}

fn items<'a>(doc: &'a Value, key: &str) -> Vec<&'a Value> {
    match doc.get("results").and_then(Value::as_array) {
        Some(results) => results.iter().filter_map(|r| r["detail"].get(key)).collect(),
        None => vec![doc],
    }
}

fn run_oracle(cmd: OracleCommand) -> anyhow::Result<bool> {
    match cmd {
        OracleCommand::VerifyCert { file } => {
            let doc: Value = serde_json::from_str(&std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?)?;
            let certs = items(&doc, "certificate");
            if certs.is_empty() {
                bail!("no certificates in {}", file.display());
            }
            let mut ok = true;
            for cert in certs {
                match oracle::verify_cert_json(&cert.to_string())? {
                    oracle::CertVerdict::Pass { points, hyperedges } => println!("pass: {points} points, {hyperedges} hyperedges"),
                    oracle::CertVerdict::Fail(why) => {
                        ok = false;
                        println!("fail: {why}");
                    }
                }
            }
            Ok(ok)
        }
        OracleCommand::VerifyStages { file } => {
            let doc: Value = serde_json::from_str(&std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?)?;
            let traces = items(&doc, "trace");
            if traces.is_empty() {
                bail!("no traces in {}", file.display());
            }
            let mut ok = true;
            for trace in traces {
                let r = oracle::verify_trace_json(&trace.to_string())?;
                if r.passed() {
                    println!("pass: {} stage values, {} hyperedges, {} unrecorded", r.values, r.hyperedges, r.skipped);
                } else {
                    ok = false;
                    for f in &r.failures {
                        println!("fail: {f}");
                    }
                }
            }
            Ok(ok)
        }
        OracleCommand::Clique2 { class, count } => {
            let pts = oracle::orbit(&oracle::Digits::parse(&class)?, count);
            match oracle::find_color2_triple(&pts) {
                None => {
                    println!("no color-2 triple");
                    Ok(true)
                }
                Some([a, b, c]) => {
                    println!("color-2 triple: {} {} {}", pts[a], pts[b], pts[c]);
                    Ok(false)
                }
            }
        }
        OracleCommand::Components { class, sample } => {
            let pts = oracle::orbit(&oracle::Digits::parse(&class)?, sample);
            let labels = oracle::component_labels(&pts);
            let blocks = labels.iter().max().map_or(0, |m| m + 1);
            println!("{blocks} components");
            Ok(oracle::parity_blocks_match(&pts, &labels))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, out, jobs, fuel_override } => (|| -> anyhow::Result<i32> {
            let text = std::fs::read_to_string(&scenario).with_context(|| format!("reading {}", scenario.display()))?;
            let mut s = Scenario::parse(&text).with_context(|| format!("in {}", scenario.display()))?;
            if let Some(fuel) = fuel_override {
                s.params.fuel = fuel;
            }
            if let Ok(seed) = std::env::var("LAB_SEED") {
                s.params.rng_seed = seed.trim().parse().with_context(|| format!("LAB_SEED={seed:?} is not an integer"))?;
            }
            s.validate()?;
            let report = run(&s, jobs);
            let json = serde_json::to_string_pretty(&report)?;
            match out.or_else(|| s.output.clone()) {
                Some(path) => std::fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?,
                None => println!("{json}"),
            }
            let m = &report.summary;
            eprintln!(
                "{}: {} pass, {} fail, {} fuel-exhausted, {} error",
                if s.name.is_empty() { "scenario" } else { &s.name },
                m.pass,
                m.fail,
                m.fuel_exhausted,
                m.error
            );
            Ok(report.exit_code())
        })(),
        Command::Oracle(cmd) => run_oracle(cmd).map(|ok| if ok { 0 } else { 1 }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
