use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ipq::harness::{self, Mix, PqImpl};
use ipq::trace;

#[derive(Parser)]
#[command(name = "pq", about = "Strictly implicit priority queue harness", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Replay a text trace; extract outputs go to stdout.
    Run {
        #[arg(long = "impl", value_name = "IMPL")]
        impl_name: String,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Random trace against the binary-heap oracle with invariant checks and
    /// strict-implicitness round trips (stride from PQ_CHECK_EVERY).
    Fuzz {
        #[arg(long = "impl", value_name = "IMPL")]
        impl_name: String,
        #[arg(long)]
        ops: usize,
        #[arg(long)]
        seed: u64,
        /// Key alphabet size (duplicate-capable implementations only).
        #[arg(long)]
        alphabet: Option<u64>,
    },
    /// Counter benchmark: prefill each size, then measure a segment.
    Bench {
        #[arg(long = "impl", value_name = "IMPL")]
        impl_name: String,
        /// Comma-separated sizes; `2^k` notation allowed.
        #[arg(long)]
        sizes: String,
        #[arg(long)]
        mix: String,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Measured segment length per size.
        #[arg(long, default_value_t = 100_000)]
        segment: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// n random inserts then n extracts through the amortized queue.
    Sort {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn parse_impl(s: &str) -> Result<PqImpl, ExitCode> {
    PqImpl::parse(s).ok_or_else(|| {
        eprintln!("unknown impl {s:?}; use amortized|worstcase|identical|binary");
        ExitCode::from(2)
    })
}

fn parse_sizes(s: &str) -> Result<Vec<usize>, ExitCode> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        let v = if let Some(exp) = part.strip_prefix("2^") {
            exp.parse::<u32>().ok().and_then(|e| 1usize.checked_shl(e))
        } else {
            part.parse::<usize>().ok()
        };
        match v {
            Some(v) if v > 0 => out.push(v),
            _ => {
                eprintln!("bad size {part:?}");
                return Err(ExitCode::from(2));
            }
        }
    }
    Ok(out)
}

fn write_report(path: &Option<PathBuf>, json: &str) -> Result<(), ExitCode> {
    match path {
        Some(p) => std::fs::write(p, json).map_err(|e| {
            eprintln!("cannot write report {}: {e}", p.display());
            ExitCode::from(2)
        }),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(code) => code,
    }
}

fn run(cli: Cli) -> Result<ExitCode, ExitCode> {
    match cli.cmd {
        Cmd::Run { impl_name, trace: path, report } => {
            let which = parse_impl(&impl_name)?;
            let text = std::fs::read_to_string(&path).map_err(|e| {
                eprintln!("cannot read {}: {e}", path.display());
                ExitCode::from(2)
            })?;
            let ops = trace::parse(&text).map_err(|e| {
                eprintln!("{e}");
                ExitCode::from(2)
            })?;
            match harness::replay_trace(which, &ops) {
                Ok((outputs, rep)) => {
                    let mut buf = String::new();
                    for o in outputs {
                        buf.push_str(&format!("{o}\n"));
                    }
                    print!("{buf}");
                    if report.is_some() {
                        write_report(&report, &rep.to_json())?;
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(ipq::PqError::Trace { line, msg }) => {
                    eprintln!("trace error at line {line}: {msg}");
                    Err(ExitCode::from(2))
                }
                Err(e) => {
                    eprintln!("replay failed: {e}");
                    Err(ExitCode::from(1))
                }
            }
        }
        Cmd::Fuzz { impl_name, ops, seed, alphabet } => {
            let which = parse_impl(&impl_name)?;
            match harness::fuzz_oracle(which, ops, seed, alphabet) {
                Ok(out) => {
                    println!(
                        "fuzz pass: impl={} ops={} checkpoints={} moves={} comparisons={}",
                        which.name(),
                        out.ops,
                        out.checkpoints,
                        out.report.moves,
                        out.report.comparisons
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(fail) => {
                    eprintln!("fuzz FAIL: seed={} step={}: {}", fail.seed, fail.step, fail.message);
                    eprintln!("minimized trace ({} ops):", fail.minimized.len());
                    eprint!("{}", trace::render(&fail.minimized));
                    Err(ExitCode::from(1))
                }
            }
        }
        Cmd::Bench { impl_name, sizes, mix, report, segment, seed } => {
            let which = parse_impl(&impl_name)?;
            let sizes = parse_sizes(&sizes)?;
            let mix = Mix::parse(&mix).ok_or_else(|| {
                eprintln!("unknown mix {mix:?}; use insert-heavy|balanced|extract-heavy");
                ExitCode::from(2)
            })?;
            match harness::bench_counters(which, &sizes, mix, seed, segment) {
                Ok(reports) => {
                    let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
                    write_report(&report, &json)?;
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("bench failed: {e}");
                    Err(ExitCode::from(1))
                }
            }
        }
        Cmd::Sort { n, seed, report } => match harness::sort_demo(n, seed) {
            Ok(rep) => {
                write_report(&report, &rep.to_json())?;
                Ok(ExitCode::SUCCESS)
            }
            Err(e) => {
                eprintln!("sort demo failed: {e}");
                Err(ExitCode::from(1))
            }
        },
    }
}
