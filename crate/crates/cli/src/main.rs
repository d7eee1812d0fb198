mod outcome;
mod verify;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use liouville_core::means::{find_sign_crossing, main_term_root, s_minus, s_plus, CROSSING_WIDTH};
use liouville_core::moebius::{mobius_lambert_classic, mobius_plus_series};
use liouville_core::multiplicative::{SegmentSieve, SieveConfig};
use liouville_core::precision::{zeta_real, BoundedValue, PrecisionContext, Real};
use liouville_core::scan::{
    log_density_negative_with, read_checkpoint_file, scan_summatory_with, write_checkpoint_file,
    ScanEvent, ScanOptions,
};
use liouville_core::theta::{phi, theta};
use liouville_core::{Error, Result};

use outcome::{CommandOutcome, Status};
use verify::Suite;

const PROGRESS_STEP: u64 = 10_000_000;

#[derive(Parser)]
#[command(
    name = "liouville",
    version,
    about = "Liouville and Moebius function computations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write λ(n) and μ(n) for lo <= n <= hi as CSV.
    Sieve {
        #[arg(long)]
        lo: u64,
        #[arg(long)]
        hi: u64,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan L(n) and M(n) up to --to, recording every n >= 2 with L(n) >= 0.
    Scan {
        #[arg(long)]
        to: u64,
        /// Resume from this file if it exists and keep it updated.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000_000)]
        checkpoint_every: u64,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        events_csv: Option<PathBuf>,
        #[command(flatten)]
        workers: Workers,
    },
    /// Logarithmic density of {n : L(n) < 0} up to --to.
    Density {
        #[arg(long)]
        to: u64,
        #[command(flatten)]
        workers: Workers,
    },
    /// Evaluate one series at x.
    Eval {
        #[arg(long, value_enum)]
        series: Series,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, default_value_t = PrecisionContext::DEFAULT_BITS)]
        prec: usize,
    },
    /// Bracket the sign change of s_plus on [lo, hi].
    Crossing {
        #[arg(long, default_value_t = 0.1)]
        lo: f64,
        #[arg(long, default_value_t = 0.3)]
        hi: f64,
        #[arg(long, default_value_t = PrecisionContext::DEFAULT_BITS)]
        prec: usize,
    },
    /// Run verification suites.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = PrecisionContext::DEFAULT_BITS)]
        prec: usize,
        /// Print the outcome as JSON instead of a table.
        #[arg(long)]
        json: bool,
        /// Override the combined-bound tolerance (default 1e-30 at 128 bits).
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Riemann zeta at real s > 1.
    Zeta {
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = PrecisionContext::DEFAULT_BITS)]
        prec: usize,
    },
}

#[derive(clap::Args)]
struct Workers {
    /// Sieving workers; falls back to NT_THREADS, then to all cores.
    #[arg(long, env = "NT_THREADS")]
    threads: Option<usize>,
}

impl Workers {
    fn options(&self) -> ScanOptions {
        ScanOptions {
            threads: self.threads.unwrap_or(0),
            ..ScanOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Series {
    Splus,
    Sminus,
    Phi,
    Theta,
    Lambert,
    LambertPlus,
}

fn bounded_json(v: &BoundedValue, ctx: &PrecisionContext) -> serde_json::Value {
    json!({
        "rendered": v.render(ctx),
        "value": v.render_value(ctx),
        "error_bound": v.render_bound(),
    })
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run(cmd: Command, out: &mut CommandOutcome) -> Result<()> {
    match cmd {
        Command::Sieve { lo, hi, out: path } => {
            let seg = SegmentSieve::new(SieveConfig::default(), hi).sieve(lo, hi)?;
            match &path {
                Some(p) => {
                    let mut w = create(p)?;
                    seg.write_csv(&mut w)?;
                    w.flush()?;
                }
                None => seg.write_csv(io::stdout().lock())?,
            }
            out.payload = json!({ "rows": seg.len() });
        }
        Command::Scan {
            to,
            checkpoint,
            checkpoint_every,
            report,
            events_csv,
            workers,
        } => {
            let resume = match &checkpoint {
                Some(p) if p.exists() => Some(read_checkpoint_file(p)?),
                _ => None,
            };
            let resumed_from = resume.as_ref().map(|c| c.next_n);
            let mut opts = workers.options();
            opts.checkpoint_every = checkpoint.as_ref().map(|_| checkpoint_every);
            let mut next_report = PROGRESS_STEP;
            let rep = scan_summatory_with(to, resume, &opts, &mut |ev| {
                match ev {
                    ScanEvent::Progress { scanned_to, n_max } => {
                        if scanned_to >= next_report {
                            eprintln!("scanned {scanned_to} / {n_max}");
                            next_report = (scanned_to / PROGRESS_STEP + 1) * PROGRESS_STEP;
                        }
                    }
                    ScanEvent::Checkpoint(cp) => {
                        if let Some(p) = &checkpoint {
                            write_checkpoint_file(p, cp)?;
                        }
                    }
                }
                Ok(())
            })?;
            if let Some(p) = &checkpoint {
                write_checkpoint_file(p, &rep.to_checkpoint())?;
            }
            if let Some(p) = &report {
                std::fs::write(p, rep.to_json()? + "\n")?;
            }
            if let Some(p) = &events_csv {
                let mut w = create(p)?;
                rep.write_events_csv(&mut w)?;
                w.flush()?;
            }
            out.payload = json!({
                "n_max": rep.n_max,
                "final_L": rep.final_l,
                "final_M": rep.final_m,
                "min_L": rep.min_l,
                "max_L_on_range": rep.max_l_on_range,
                "nonneg_event_count": rep.nonneg_events.len(),
                "first_positive_n": rep.first_positive_n,
                "resumed_from": resumed_from,
            });
        }
        Command::Density { to, workers } => {
            let d = log_density_negative_with(to, &workers.options())?;
            out.payload = json!({ "value": format!("{d}") });
        }
        Command::Eval { series, x, prec } => {
            let ctx = PrecisionContext::with_bits(prec)?;
            let xv = Real::parse(&x, prec)?;
            let v = match series {
                Series::Splus => s_plus(&xv, &ctx)?,
                Series::Sminus => s_minus(&xv, &ctx)?,
                Series::Phi => phi(&xv, &ctx)?,
                Series::Theta => theta(&xv, &ctx)?,
                Series::Lambert => mobius_lambert_classic(&xv, &ctx)?,
                Series::LambertPlus => mobius_plus_series(&xv, &ctx)?,
            };
            out.payload = bounded_json(&v, &ctx);
        }
        Command::Crossing { lo, hi, prec } => {
            let ctx = PrecisionContext::with_bits(prec)?;
            let iv = find_sign_crossing(lo, hi, &ctx)?;
            let root = main_term_root(&ctx);
            let r = root.value_f64();
            let distance = if iv.contains(r) {
                0.0
            } else {
                (r - iv.lo).abs().min((r - iv.hi).abs())
            };
            out.payload = json!({
                "lo": format!("{}", iv.lo),
                "hi": format!("{}", iv.hi),
                "width": format!("{:e}", iv.width()),
                "max_width": format!("{:e}", CROSSING_WIDTH),
                "main_term_root": bounded_json(&root, &ctx),
                "contains_main_term_root": iv.contains(r),
                "distance_to_main_term_root": format!("{distance:e}"),
            });
            if iv.width() > CROSSING_WIDTH {
                out.status = Status::Fail;
            }
        }
        Command::Verify {
            suite,
            prec,
            tolerance,
            ..
        } => {
            let ctx = PrecisionContext::with_bits(prec)?;
            let tau = match tolerance {
                Some(t) if !(t.is_finite() && t > 0.0) => {
                    return Err(Error::Domain(format!(
                        "tolerance must be positive, got {t}"
                    )))
                }
                Some(t) => t,
                None => verify::tolerance(prec),
            };
            let checks = verify::run(suite, tau, &ctx)?;
            if checks.iter().any(|c| !c.pass) {
                out.status = Status::Fail;
            }
            let passed = checks.iter().filter(|c| c.pass).count();
            out.payload = json!({
                "passed": passed,
                "total": checks.len(),
                "checks": checks,
            });
        }
        Command::Zeta { s, prec } => {
            let ctx = PrecisionContext::with_bits(prec)?;
            out.payload = bounded_json(&zeta_real(s, &ctx)?, &ctx);
        }
    }
    Ok(())
}

fn describe(cmd: &Command) -> (&'static str, std::collections::BTreeMap<String, String>) {
    let opt = |p: &Option<PathBuf>| {
        p.as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default()
    };
    match cmd {
        Command::Sieve { lo, hi, out } => (
            "sieve",
            params! { "lo" => lo, "hi" => hi, "out" => opt(out) },
        ),
        Command::Scan {
            to,
            checkpoint,
            report,
            events_csv,
            workers,
            ..
        } => (
            "scan",
            params! {
                "to" => to,
                "checkpoint" => opt(checkpoint),
                "report" => opt(report),
                "events_csv" => opt(events_csv),
                "threads" => workers.threads.unwrap_or(0),
            },
        ),
        Command::Density { to, workers } => (
            "density",
            params! { "to" => to, "threads" => workers.threads.unwrap_or(0) },
        ),
        Command::Eval { series, x, prec } => (
            "eval",
            params! { "series" => series.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default(), "x" => x, "prec" => prec },
        ),
        Command::Crossing { lo, hi, prec } => (
            "crossing",
            params! { "lo" => lo, "hi" => hi, "prec" => prec },
        ),
        Command::Verify {
            suite,
            prec,
            tolerance,
            ..
        } => (
            "verify",
            params! {
                "suite" => suite.name(),
                "prec" => prec,
                "tolerance" => format!("{:e}", tolerance.unwrap_or_else(|| verify::tolerance(*prec))),
            },
        ),
        Command::Zeta { s, prec } => ("zeta", params! { "s" => s, "prec" => prec }),
    }
}

fn print_table(o: &CommandOutcome) {
    if let Some(checks) = o.payload.get("checks").and_then(|c| c.as_array()) {
        for c in checks {
            let mark = if c["pass"].as_bool() == Some(true) {
                "PASS"
            } else {
                "FAIL"
            };
            println!(
                "{mark} [{}] {}: {} ± {} ({})",
                c["suite"].as_str().unwrap_or(""),
                c["name"].as_str().unwrap_or(""),
                c["value"].as_str().unwrap_or(""),
                c["error_bound"].as_str().unwrap_or(""),
                c["limit"].as_str().unwrap_or(""),
            );
        }
        println!(
            "{}: {}/{} checks passed",
            format!("{:?}", o.status).to_lowercase(),
            o.payload["passed"],
            o.payload["total"]
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, params) = describe(&cli.command);
    let table = matches!(cli.command, Command::Verify { json: false, .. });
    let csv_to_stdout = matches!(cli.command, Command::Sieve { out: None, .. });
    let mut outcome = CommandOutcome::new(name, params);
    let start = Instant::now();
    let result = run(cli.command, &mut outcome);
    outcome.elapsed_ms = start.elapsed().as_millis() as u64;
    if let Err(e) = &result {
        eprintln!("error: {e}");
        outcome.status = Status::Error;
        outcome.payload = json!({ "error": e.to_string(), "kind": error_kind(e) });
    }
    if table && result.is_ok() {
        print_table(&outcome);
    } else if csv_to_stdout && result.is_ok() {
        // Standard output carries the CSV.
    } else if let Err(e) = print_json(&outcome) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(outcome.status.exit_code() as u8)
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::ZeroArgument(_) | Error::InvalidRange { .. } | Error::Domain(_) => "domain",
        Error::SegmentTooLong { .. } => "segment_too_long",
        Error::TermBudget { .. } => "term_budget",
        Error::Precision(_) => "precision",
        Error::CheckpointVersion { .. } => "checkpoint_version",
        Error::CheckpointCorrupt(_) => "checkpoint_corrupt",
        Error::NoSignChange { .. } => "no_sign_change",
        Error::UncertainSign { .. } => "uncertain_sign",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}
