use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bundle_flow::io::{analyze_dir, execute, load_config, render_plots};
use bundle_flow::{Error, SingularityReport};

#[derive(Parser)]
#[command(name = "bundle-flow", version, about = "Ricci flow of cohomogeneity-one bundle metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a flow from a JSON config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the singularity report of a run directory.
    Analyze { dir: PathBuf },
    /// Render SVG plots of a run directory.
    Plot {
        dir: PathBuf,
        /// `profiles`, `typei`, `boundary` or any trace column.
        #[arg(long)]
        field: Option<String>,
    },
}

fn print_report(r: &SingularityReport) {
    match r.t_hat {
        Some(t) => println!("singular time estimate: {t:.6}"),
        None => println!("no singular time detected"),
    }
    println!("verdict: {:?}", r.verdict);
    if let Some(s) = r.typei_sup {
        println!("sup (T - t) kappa: {s:.4}");
    }
    if let Some(c) = r.schwarz_c {
        println!("Schwarz constant: {c:.4}");
    }
    println!("degeneration: {:?}", r.case);
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_validation() { 2 } else { 3 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
            match execute(&cfg, &dir) {
                Ok(summary) => {
                    println!(
                        "{} after {} steps at t = {:.6}; outputs in {}",
                        summary.status.halt,
                        summary.status.steps,
                        summary.status.t_final,
                        dir.display()
                    );
                    print_report(&summary.report);
                    for s in &summary.plots.skipped {
                        println!("plot skipped: {s}");
                    }
                    if summary.status.failed {
                        ExitCode::from(3)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Analyze { dir } => match analyze_dir(&dir) {
            Ok(report) => {
                print_report(&report);
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Plot { dir, field } => match render_plots(&dir, field.as_deref()) {
            Ok(outcome) => {
                for p in &outcome.written {
                    println!("wrote {}", p.display());
                }
                for s in &outcome.skipped {
                    println!("skipped {s}");
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
