use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use penalty_splitting::{HypothesisModuli, SolverKind};
use penalty_splitting_cli::commands::{self, EXIT_OK, EXIT_REJECTED};

#[derive(Parser)]
#[command(name = "psplit", version, about = "Penalty-based splitting for monotone inclusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a solver from a TOML configuration and write its trace and summary.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Run even when the schedule fails a hypothesis check.
        #[arg(long)]
        override_admissibility: bool,
        /// Trace CSV path; the summary goes to `<stem>.summary.json`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Classify a schedule λ_n = λ₀n^(−p), β_n = β₀n^q and check it for a solver.
    CheckSchedule {
        #[arg(long)]
        lambda0: f64,
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
        #[arg(long)]
        beta0: f64,
        #[arg(long, allow_negative_numbers = true)]
        q: f64,
        #[arg(long, value_parser = parse_solver)]
        solver: SolverKind,
        /// Cocoercivity (fb) or inverse Lipschitz constant (fbf) of B.
        #[arg(long)]
        mu: Option<f64>,
        /// Inverse Lipschitz constant of D.
        #[arg(long)]
        eta: Option<f64>,
        /// Operator norm of K.
        #[arg(long)]
        knorm: Option<f64>,
    },
    /// List the problem constructors a config can name.
    ListProblems,
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    SolverKind::parse(s).ok_or_else(|| {
        let names: Vec<&str> = SolverKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown solver \"{s}\" (expected one of {})", names.join(", "))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve { config, override_admissibility, output } => {
            match commands::solve(&config, override_admissibility, output) {
                Ok(solved) => {
                    let s = &solved.summary;
                    if s.selection_hypothesis_unverified {
                        eprintln!("warning: (λ_nβ_n‖w_n‖) kept growing; the ℓ² selection hypothesis looks violated");
                    }
                    for w in &s.admissibility.warnings {
                        eprintln!("warning: {w}");
                    }
                    match &s.termination {
                        penalty_splitting::Termination::NumericalAbort { n } => {
                            eprintln!("numerical abort at step {n}; partial trace kept")
                        }
                        penalty_splitting::Termination::Halted { n, message } => {
                            eprintln!("halted at step {n}: {message}; partial trace kept")
                        }
                        _ => {}
                    }
                    println!("trace: {}", solved.trace_path.display());
                    println!("summary: {}", solved.summary_path.display());
                    solved.exit_code()
                }
                Err(failure) => {
                    eprintln!("{failure}");
                    failure.exit_code()
                }
            }
        }
        Command::CheckSchedule { lambda0, p, beta0, q, solver, mu, eta, knorm } => {
            let moduli = HypothesisModuli { mu, eta, k_norm: knorm };
            match commands::check_schedule((lambda0, p, beta0, q), solver, moduli) {
                Ok(check) => {
                    println!("{}", serde_json::to_string_pretty(&check).expect("report serializes"));
                    if check.admissibility.admissible {
                        EXIT_OK
                    } else {
                        for r in &check.admissibility.reasons {
                            eprintln!("violated: {r}");
                        }
                        EXIT_REJECTED
                    }
                }
                Err(failure) => {
                    eprintln!("{failure}");
                    failure.exit_code()
                }
            }
        }
        Command::ListProblems => {
            print!("{}", commands::list_problems());
            EXIT_OK
        }
    };
    ExitCode::from(code)
}
