use std::fmt;
use std::path::{Path, PathBuf};

use penalty_splitting::{
    admissible_for, classify, run, Admissibility, Error, ExtReal, HypothesisModuli, PolynomialSchedule, RunOptions,
    ScheduleReport, SolverKind, StoppingPolicy, Termination, Vector,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{parse_config, RunConfig, PROBLEM_HELP};
use crate::trace::{write_atomic, write_trace};

pub const EXIT_OK: u8 = 0;
pub const EXIT_REJECTED: u8 = 2;
pub const EXIT_ABORTED: u8 = 3;
pub const EXIT_IO: u8 = 4;

/// Random operator pairs drawn when auditing a problem before a run.
const AUDIT_PAIRS: usize = 200;
const ORACLE_TOL: f64 = 1e-6;

/// A command that ended before producing a trace.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Bad config, bad problem parameters or a failed audit.
    Usage(String),
    /// The schedule violates at least one hypothesis.
    Rejected(Vec<String>),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Rejected(_) => EXIT_REJECTED,
            Failure::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "error: {m}"),
            Failure::Rejected(reasons) => {
                write!(f, "schedule rejected:")?;
                for r in reasons {
                    write!(f, "\n  - {r}")?;
                }
                Ok(())
            }
            Failure::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Rejected(reasons) => Failure::Rejected(reasons),
            other => Failure::Usage(other.to_string()),
        }
    }
}

pub fn termination_exit_code(t: &Termination) -> u8 {
    match t {
        Termination::MaxIter | Termination::Converged { .. } => EXIT_OK,
        Termination::NumericalAbort { .. } | Termination::Halted { .. } => EXIT_ABORTED,
    }
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub problem: String,
    pub solver: SolverKind,
    pub seed: u64,
    pub stopping: StoppingPolicy,
    pub override_admissibility: bool,
    pub schedule_report: ScheduleReport,
    pub admissibility: Admissibility,
    pub moduli: ModuliSummary,
    pub termination: Termination,
    /// Index of the final iterate.
    pub iterations: u64,
    pub records: usize,
    pub final_x: Vec<f64>,
    pub final_v: Option<Vec<f64>>,
    pub ergodic_z: Option<Vec<f64>>,
    pub oracle: Option<Vec<f64>>,
    pub oracle_error_x: Option<f64>,
    pub oracle_error_z: Option<f64>,
    pub selection_hypothesis_unverified: bool,
}

/// Moduli with `+∞` spelled out, since JSON has no infinite numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModuliSummary {
    pub mu: Option<ExtReal>,
    pub eta: Option<ExtReal>,
    pub k_norm: Option<ExtReal>,
}

impl From<HypothesisModuli> for ModuliSummary {
    fn from(m: HypothesisModuli) -> Self {
        let ext = |v: Option<f64>| v.map(|v| if v == f64::INFINITY { ExtReal::PosInf } else { ExtReal::Finite(v) });
        Self { mu: ext(m.mu), eta: ext(m.eta), k_norm: ext(m.k_norm) }
    }
}

#[derive(Debug)]
pub struct Solved {
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
    pub summary: Summary,
}

impl Solved {
    pub fn exit_code(&self) -> u8 {
        termination_exit_code(&self.summary.termination)
    }
}

/// `trace.csv` gets `trace.summary.json` beside it.
pub fn summary_path(trace: &Path) -> PathBuf {
    trace.with_extension("summary.json")
}

fn to_vec(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

fn check_output_dir(path: &Path) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if dir.is_dir() {
        Ok(())
    } else {
        Err(Failure::Io(format!("cannot write {}: {} is not a directory", path.display(), dir.display())))
    }
}

/// Builds, audits and runs a parsed configuration, then writes the trace and
/// the summary. The trace is written whatever the termination.
pub fn solve_config(mut cfg: RunConfig, override_admissibility: bool, output: Option<PathBuf>) -> Result<Solved, Failure> {
    cfg.override_admissibility |= override_admissibility;
    let trace_path = output
        .or_else(|| cfg.output_path.as_ref().map(PathBuf::from))
        .ok_or_else(|| Failure::Usage("no output path: set `output` in the config or pass --output".into()))?;
    check_output_dir(&trace_path)?;

    let problem = cfg.problem.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    problem.audit(AUDIT_PAIRS, &mut rng).map_err(|e| Failure::Usage(format!("problem audit failed: {e}")))?;
    if let Some(x_star) = &problem.oracle {
        if !penalty_splitting::problems::verify_oracle(&problem, x_star, ORACLE_TOL, &mut rng)? {
            return Err(Failure::Usage(format!("oracle for {} failed certification", problem.name)));
        }
    }

    let options = RunOptions {
        stop: cfg.stopping,
        override_admissibility: cfg.override_admissibility,
        x0: cfg.x0.clone(),
        v0: cfg.v0.clone(),
    };
    let outcome = run(&problem, &cfg.schedule, cfg.solver, &options)?;

    let z = outcome.state.z();
    let oracle_err = |v: &Vector| problem.oracle.as_ref().map(|o| (v - o).norm());
    let summary = Summary {
        problem: problem.name.clone(),
        solver: cfg.solver,
        seed: cfg.seed,
        stopping: cfg.stopping,
        override_admissibility: cfg.override_admissibility,
        schedule_report: outcome.report,
        admissibility: outcome.admissibility.clone(),
        moduli: ModuliSummary::from(problem.hypothesis_moduli(cfg.solver)),
        termination: outcome.termination.clone(),
        iterations: outcome.state.n,
        records: outcome.records.len(),
        final_x: to_vec(&outcome.state.x),
        final_v: outcome.state.v.as_ref().map(to_vec),
        ergodic_z: z.as_ref().map(to_vec),
        oracle: problem.oracle.as_ref().map(to_vec),
        oracle_error_x: oracle_err(&outcome.state.x),
        oracle_error_z: z.as_ref().and_then(oracle_err),
        selection_hypothesis_unverified: outcome.selection_hypothesis_unverified,
    };

    let io = |e: std::io::Error, p: &Path| Failure::Io(format!("cannot write {}: {e}", p.display()));
    write_trace(&outcome.records, &trace_path).map_err(|e| io(e, &trace_path))?;
    let summary_path = summary_path(&trace_path);
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    write_atomic(&summary_path, json.as_bytes()).map_err(|e| io(e, &summary_path))?;
    Ok(Solved { trace_path, summary_path, summary })
}

pub fn solve(config: &Path, override_admissibility: bool, output: Option<PathBuf>) -> Result<Solved, Failure> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", config.display())))?;
    let cfg = parse_config(&text).map_err(|e| Failure::Usage(format!("{}: {e}", config.display())))?;
    solve_config(cfg, override_admissibility, output)
}

#[derive(Debug, Serialize)]
pub struct ScheduleCheck {
    pub solver: SolverKind,
    pub moduli: ModuliSummary,
    pub report: ScheduleReport,
    pub admissibility: Admissibility,
}

pub fn check_schedule(
    schedule: (f64, f64, f64, f64),
    solver: SolverKind,
    moduli: HypothesisModuli,
) -> Result<ScheduleCheck, Failure> {
    let (lambda0, p, beta0, q) = schedule;
    let s = PolynomialSchedule::new(lambda0, p, beta0, q)?;
    let admissibility = admissible_for(&s, solver, &moduli)?;
    Ok(ScheduleCheck { solver, moduli: moduli.into(), report: classify(&s), admissibility })
}

pub fn list_problems() -> String {
    let width = PROBLEM_HELP.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
    PROBLEM_HELP.iter().map(|(name, keys)| format!("{name:width$}  {keys}\n")).collect()
}
