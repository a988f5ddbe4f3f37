use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use descartes_dyn::catalog::{catalog, ParamKind};
use descartes_dyn::run::{self, fmt_num, Scenario};
use descartes_dyn::CliError;

// Writes to stdout, ignoring a closed pipe (e.g. when piped into `head`).
macro_rules! out {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(name = "descartes-dyn", version, about = "Integrate, certify and cross-validate Cartesian fields of constrained systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenario files; each writes into <out>/<scenario id>/
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write gnuplot-ready two-column blocks (plot.dat)
        #[arg(long)]
        plot_data: bool,
    },
    /// List registered systems with their parameters
    Catalog,
    /// Check a system's field against the Cartesian condition on a sample cloud
    Verify {
        system: String,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Compare the Cartesian flow of a scenario with its classical equations
    CrossValidate { config: PathBuf },
}

fn print_catalog() {
    for s in catalog() {
        out!("{}\n  {}", s.name, s.summary);
        out!("  initial: {}", s.state);
        let extras: Vec<&str> = [("cross-validate", s.classical), ("oracle", s.oracle)]
            .iter()
            .filter(|(_, on)| *on)
            .map(|(n, _)| *n)
            .collect();
        out!("  outputs: trajectory, invariants, certificate{}", extras.iter().map(|e| format!(", {e}")).collect::<String>());
        for p in s.params {
            let kind = match p.kind {
                ParamKind::Scalar => "number".to_string(),
                ParamKind::Vector(n) => format!("[{n}]"),
            };
            let ex: Vec<String> = p.example.iter().map(|v| fmt_num(*v)).collect();
            let tag = if p.required { format!("required, e.g. {}", ex.join(", ")) } else { format!("default {}", ex.join(", ")) };
            out!("    params.{:<10} {:<7} {} ({tag})", p.name, kind, p.help);
        }
        out!();
    }
}

fn execute(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Run { configs, out, plot_data } => {
            let scenarios = configs.iter().map(|p| Scenario::load(p)).collect::<Result<Vec<_>, _>>()?;
            let reports = run::run_batch(&scenarios, &out, plot_data, run::thread_cap())?;
            for r in &reports {
                out!("{} ({}) {:.3}s", r.scenario, r.system, r.wall_time);
                for o in &r.outputs {
                    out!("  {:<15} {:<5} {}", o.kind, o.status.as_str(), o.message);
                }
            }
            Ok(run::exit_code(&reports))
        }
        Command::Catalog => {
            print_catalog();
            Ok(0)
        }
        Command::Verify { system, points, seed, tol } => {
            let o = run::verify(&system, points, seed, tol)?;
            out!("{system}: {} on {}/{} points (seed {seed})", o.check, o.checked, o.requested);
            for (n, v) in &o.maxima {
                out!("  max {n:<20} {}", fmt_num(*v));
            }
            for f in o.failures.iter().take(5) {
                out!("  failed at {f}");
            }
            out!("  {}", if o.pass { "pass" } else { "fail" });
            Ok(if o.pass { 0 } else { 1 })
        }
        Command::CrossValidate { config } => {
            let scn = Scenario::load(&config)?;
            let r = run::cross_validation(&scn)?;
            out!("{}", serde_json::to_string_pretty(&run::cross_validation_json(&r)).expect("serializable"));
            Ok(if r.pass { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("descartes-dyn: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
