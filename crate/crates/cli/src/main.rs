mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use commands::Outcome;

#[derive(Parser)]
#[command(name = "sofa", version, about = "Polygon caps, balancing and upper-bound checks for the moving sofa problem")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print a human-readable table after the JSON line.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximize the polygon area functional on n uniform hallway angles.
    Optimize(commands::OptimizeArgs),
    /// Optimize (or load) a cap and run the balanced-maximum certificate.
    VerifyGerver(commands::VerifyArgs),
    /// Evaluate the quadratic upper bound and its probes at a cap.
    Qbound(commands::QboundArgs),
    /// Run the arm-length lower-bound iteration.
    Armbounds(commands::ArmArgs),
    /// Check the numeric ingredients of the rotation-angle bound.
    Anglebounds(commands::AngleArgs),
    /// Draw a cap, its niche and optional tails as SVG.
    Render(commands::RenderArgs),
}

/// Options shared by every subcommand.
#[derive(Clone, Copy)]
pub struct Common {
    pub seed: u64,
    pub pretty: bool,
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(s) = std::env::var("SOFA_THREADS") else { return Ok(()) };
    let n: usize = s.trim().parse().map_err(|_| anyhow::anyhow!("SOFA_THREADS must be a positive integer, got {s:?}"))?;
    anyhow::ensure!(n > 0, "SOFA_THREADS must be a positive integer, got {s:?}");
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn print_table(v: &Value) {
    let Value::Object(m) = v else { return };
    let width = m.keys().map(|k| k.chars().count()).max().unwrap_or(0);
    for (k, x) in m {
        let shown = match x {
            Value::Object(o) if o.len() > 12 => format!("{{{} entries}}", o.len()),
            Value::Array(a) if a.len() > 12 => format!("[{} entries]", a.len()),
            _ => x.to_string(),
        };
        println!("{k:<width$}  {shown}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    let common = Common { seed: cli.seed, pretty: cli.pretty };
    let result = match cli.command {
        Command::Optimize(a) => commands::optimize(a, common),
        Command::VerifyGerver(a) => commands::verify_gerver(a, common),
        Command::Qbound(a) => commands::qbound(a, common),
        Command::Armbounds(a) => commands::armbounds(a, common),
        Command::Anglebounds(a) => commands::anglebounds(a, common),
        Command::Render(a) => commands::render(a, common),
    };
    match result {
        Ok(Outcome { report, passed }) => {
            println!("{report}");
            if common.pretty {
                print_table(&report);
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
