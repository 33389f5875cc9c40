use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nmrb::commands::{self, GenerateOptions, LearnOptions, DEFAULT_DIAGNOSIS_TOL};
use nmrb::selfcheck::{run_selfcheck, Fault};
use nmrb::{CliError, ExitStatus};

#[derive(Parser)]
#[command(name = "nmrb", version, about = "Randomized benchmarking under non-Markovian noise")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an RB experiment and write its ASF table.
    Generate {
        config: PathBuf,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Learn a system-environment noise unitary from an ASF table.
    Learn {
        data: PathBuf,
        config: PathBuf,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Off-block tolerance for the diagnosis stored with the result.
        #[arg(long, default_value_t = DEFAULT_DIAGNOSIS_TOL)]
        tol: f64,
        /// Exit with status 3 if the threshold is not reached.
        #[arg(long)]
        require_convergence: bool,
    },
    /// Report whether a learned unitary is Markovian.
    Diagnose {
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DIAGNOSIS_TOL)]
        tol: f64,
    },
    /// Fit A·p^m + B to an ASF table.
    Fit { data: PathBuf },
    /// Run the built-in consistency checks.
    Selfcheck {
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    DollarSign,
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("report serializes"));
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { config, out, seed } => {
            let o = commands::generate(&config, &out, &GenerateOptions { seed })?;
            if cli.json {
                print_json(&serde_json::json!({ "outputs": o.outputs, "manifest": o.manifest, "rows": o.curve.len() }));
            } else {
                for p in o.outputs.iter().chain([&o.manifest]) {
                    println!("wrote {}", p.display());
                }
            }
        }
        Command::Learn { data, config, out, seed, max_iters, tol, require_convergence } => {
            let opts = LearnOptions { seed, max_iterations: max_iters, tol, require_convergence };
            let o = commands::learn(&data, &config, &out, &opts)?;
            let r = &o.record;
            if cli.json {
                print_json(&serde_json::json!({
                    "converged": r.converged,
                    "iterations": r.iterations,
                    "best_iteration": r.best_iteration,
                    "cost": r.cost,
                    "l1_residual": r.l1_residual,
                    "threshold": r.threshold,
                    "markovian": r.diagnosis.markovian,
                    "off_block_norm": r.diagnosis.off_block_norm,
                    "outputs": o.outputs,
                }));
            } else {
                println!(
                    "{} after {} iterations (best iterate {}): l1 residual {:.4e}, threshold {:.4e}",
                    if r.converged { "converged" } else { "not converged" },
                    r.iterations,
                    r.best_iteration,
                    r.l1_residual,
                    r.threshold
                );
                println!("diagnosis: {} (off_block_norm {:.4e})", if r.diagnosis.markovian { "markovian" } else { "non-markovian" }, r.diagnosis.off_block_norm);
                for p in o.outputs.iter().chain([&o.manifest]) {
                    println!("wrote {}", p.display());
                }
            }
        }
        Command::Diagnose { model, tol } => {
            let report = commands::diagnose(&model, tol)?;
            if cli.json {
                print_json(&report);
            } else {
                print!("{report}");
            }
        }
        Command::Fit { data } => {
            let f = commands::fit(&data)?;
            if cli.json {
                print_json(&f);
            } else {
                println!("A = {:.6}, p = {:.6}, B = {:.6}", f.a, f.p, f.b);
                println!("max residual {:.3e}, median stderr {:.3e}", f.max_residual, f.median_stderr);
            }
        }
        Command::Selfcheck { inject_fault } => {
            let fault = match inject_fault {
                Some(FaultArg::DollarSign) => Fault::DollarSign,
                None => Fault::None,
            };
            let report = run_selfcheck(fault);
            if cli.json {
                print_json(&report);
            } else {
                for s in &report.suites {
                    println!("{} {}: {}", if s.passed { "PASS" } else { "FAIL" }, s.name, s.detail);
                }
            }
            if !report.passed() {
                return Err(CliError::SelfCheck(report.failing().join(", ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(ExitStatus::InputError as u8) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let status = e.exit_status();
            debug_assert_ne!(status, ExitStatus::Success);
            ExitCode::from(status as u8)
        }
    }
}
