//! Stepping kernels, ergodic averaging and the run loop.

mod kernels;

use serde::{Deserialize, Serialize};

pub use kernels::{fb_setvalued_step, fb_step, fbf_composite_step, fbf_step, CompositeStep};

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{is_finite, Vector};
use crate::problems::ProblemInstance;
use crate::schedules::{admissible_for, classify, Admissibility, PolynomialSchedule, ScheduleReport, SolverKind};

/// Running `Σ λ_k x_k` and `τ_n = Σ λ_k` with Neumaier compensation.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicAccumulator {
    sum: Vector,
    sum_comp: Vector,
    tau: f64,
    tau_comp: f64,
}

fn neumaier(sum: &mut f64, comp: &mut f64, term: f64) {
    let t = *sum + term;
    if sum.abs() >= term.abs() {
        *comp += (*sum - t) + term;
    } else {
        *comp += (term - t) + *sum;
    }
    *sum = t;
}

impl ErgodicAccumulator {
    pub fn new(dim: usize) -> Self {
        Self { sum: Vector::zeros(dim), sum_comp: Vector::zeros(dim), tau: 0.0, tau_comp: 0.0 }
    }

    pub fn add(&mut self, weight: f64, x: &Vector) {
        for i in 0..x.len() {
            neumaier(&mut self.sum[i], &mut self.sum_comp[i], weight * x[i]);
        }
        neumaier(&mut self.tau, &mut self.tau_comp, weight);
    }

    pub fn tau(&self) -> f64 {
        self.tau + self.tau_comp
    }

    /// `z_n = Σ λ_k x_k / τ_n`, or `None` before the first term.
    pub fn mean(&self) -> Option<Vector> {
        let tau = self.tau();
        (tau > 0.0).then(|| (&self.sum + &self.sum_comp) / tau)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    /// Index of the current iterate `x_n`.
    pub n: u64,
    pub x: Vector,
    pub v: Option<Vector>,
    pub ergodic: ErgodicAccumulator,
    pub last_p: Option<Vector>,
    pub last_w: Option<Vector>,
}

impl SolverState {
    pub fn new(x: Vector, v: Option<Vector>) -> Self {
        let dim = x.len();
        Self { n: 1, x, v, ergodic: ErgodicAccumulator::new(dim), last_p: None, last_w: None }
    }

    pub fn z(&self) -> Option<Vector> {
        self.ergodic.mean()
    }

    pub fn tau(&self) -> f64 {
        self.ergodic.tau()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub n: u64,
    pub lambda: f64,
    pub beta: f64,
    /// `‖x_{n+1} − x_n‖`.
    pub step_displacement: f64,
    /// `‖Bx_n‖` (`‖w_n‖` for a set-valued penalty).
    pub penalty_residual: f64,
    /// `‖x_n − p_n‖`, forward-backward-forward kernels only.
    pub fbf_gap: Option<f64>,
    pub oracle_error_x: Option<f64>,
    pub oracle_error_z: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingPolicy {
    pub max_iter: u64,
    pub tol: f64,
    pub record_every: u64,
}

impl Default for StoppingPolicy {
    fn default() -> Self {
        Self { max_iter: 100_000, tol: 1e-8, record_every: 100 }
    }
}

/// Number of consecutive records below `tol` that ends a run early.
pub const CONSECUTIVE_RECORDS: u32 = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    MaxIter,
    /// Both stopping diagnostics stayed below `tol`.
    Converged { n: u64 },
    /// A non-finite iterate appeared at step `n`; the state is the last finite one.
    NumericalAbort { n: u64 },
    /// An operator evaluation failed at step `n` (for example `x_n ∉ dom B`).
    Halted { n: u64, message: String },
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub stop: StoppingPolicy,
    pub override_admissibility: bool,
    /// `x₁`; the zero vector when absent.
    pub x0: Option<Vector>,
    /// `v₁` for the primal-dual kernel; the zero vector when absent.
    pub v0: Option<Vector>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: SolverState,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    pub report: ScheduleReport,
    pub admissibility: Admissibility,
    /// Set-valued kernel only: `Σ (λ_nβ_n‖w_n‖)²` kept growing across doublings of `n`.
    pub selection_hypothesis_unverified: bool,
}

/// Watches `S_n = Σ (λ_kβ_k‖w_k‖)²` at `n = 2^j`. Summability makes the
/// increments per doubling vanish and growth linear in `log n` makes them
/// settle; superlinear growth in `log n` keeps them increasing by a
/// non-vanishing amount.
#[derive(Debug, Default)]
struct SelectionMonitor {
    sum: f64,
    at_doublings: Vec<f64>,
}

impl SelectionMonitor {
    fn push(&mut self, n: u64, term: f64) {
        self.sum += term * term;
        if n.is_power_of_two() {
            self.at_doublings.push(self.sum);
        }
    }

    fn unverified(&self) -> bool {
        if !self.sum.is_finite() {
            return true;
        }
        let increments: Vec<f64> = self.at_doublings.windows(2).map(|w| w[1] - w[0]).collect();
        if increments.len() < 4 {
            return false;
        }
        let tail = &increments[increments.len() - 3..];
        let floor = 1e-12 * (1.0 + self.sum);
        let rise = 1e-3 * tail[2];
        tail[0] > floor && tail[1] - tail[0] > rise && tail[2] - tail[1] > rise
    }
}

fn admissibility(problem: &ProblemInstance, schedule: &PolynomialSchedule, kind: SolverKind, force: bool) -> Result<Admissibility> {
    let verdict = match admissible_for(schedule, kind, &problem.hypothesis_moduli(kind)) {
        Ok(v) => v,
        Err(e) if force => Admissibility { admissible: false, reasons: vec![e.to_string()], warnings: Vec::new() },
        Err(e) => return Err(e),
    };
    if !verdict.admissible && !force {
        return Err(Error::Rejected(verdict.reasons));
    }
    Ok(verdict)
}

fn check_structure(problem: &ProblemInstance, kind: SolverKind) -> Result<()> {
    match (kind, &problem.composite) {
        (SolverKind::FbfComposite, None) => {
            return Err(Error::Usage("fbf_composite needs a problem with a composed term K*A₂K".into()))
        }
        (SolverKind::FbfComposite, Some(_)) => {}
        (_, Some(_)) => {
            return Err(Error::Usage(format!("problem {} has a composed term; use fbf_composite", problem.name)))
        }
        (_, None) => {}
    }
    if !problem.d.is_single_valued() {
        return Err(Error::Usage("D must be single-valued".into()));
    }
    if kind != SolverKind::FbSetvalued && !problem.b.is_single_valued() {
        return Err(Error::Usage(format!("solver {} needs a single-valued penalty B", kind.name())));
    }
    Ok(())
}

struct StepOutput {
    x: Vector,
    v: Option<Vector>,
    p: Option<Vector>,
    w: Option<Vector>,
    penalty: Vector,
}

fn step(problem: &ProblemInstance, kind: SolverKind, lambda: f64, beta: f64, state: &SolverState) -> Result<StepOutput> {
    let (a, d, b, x) = (&problem.a, &problem.d, &problem.b, &state.x);
    Ok(match kind {
        SolverKind::FbSetvalued => {
            let (next, w) = fb_setvalued_step(a, d, b, lambda, beta, x)?;
            StepOutput { x: next, v: None, p: None, penalty: w.clone(), w: Some(w) }
        }
        SolverKind::Fb => StepOutput { x: fb_step(a, d, b, lambda, beta, x)?, v: None, p: None, w: None, penalty: b.eval(x)? },
        SolverKind::Fbf => {
            let (p, next) = fbf_step(a, d, b, lambda, beta, x)?;
            StepOutput { x: next, v: None, p: Some(p), w: None, penalty: b.eval(x)? }
        }
        SolverKind::FbfComposite => {
            let comp = problem.composite.as_ref().expect("checked before the loop");
            let v = state.v.as_ref().expect("dual iterate initialised");
            let out = fbf_composite_step(a, &comp.a2, &comp.k, d, b, lambda, beta, x, v)?;
            StepOutput { x: out.x, v: Some(out.v), p: Some(out.p), w: None, penalty: b.eval(x)? }
        }
    })
}

/// Iterates `kind` on `problem` from `x₁` until `max_iter` or the stopping
/// rule fires. Deterministic: the same inputs give bitwise-identical traces.
///
/// Rejected schedules fail before the first iteration unless
/// `override_admissibility` is set.
pub fn run(
    problem: &ProblemInstance,
    schedule: &PolynomialSchedule,
    kind: SolverKind,
    options: &RunOptions,
) -> Result<RunOutcome> {
    let stop = options.stop;
    if stop.tol.is_nan() || stop.tol <= 0.0 || stop.record_every == 0 {
        return Err(Error::Usage("stopping policy needs tol > 0 and record_every ≥ 1".into()));
    }
    check_structure(problem, kind)?;
    let report = classify(schedule);
    let admissibility = admissibility(problem, schedule, kind, options.override_admissibility)?;

    let dim = problem.dim();
    let x0 = options.x0.clone().unwrap_or_else(|| Vector::zeros(dim));
    check_dim(dim, x0.len())?;
    let v0 = match kind {
        SolverKind::FbfComposite => {
            let v = options.v0.clone().unwrap_or_else(|| Vector::zeros(problem.dual_dim()));
            check_dim(problem.dual_dim(), v.len())?;
            Some(v)
        }
        _ => None,
    };
    if !is_finite(&x0) || v0.as_ref().is_some_and(|v| !is_finite(v)) {
        return Err(Error::Usage("initial point must be finite".into()));
    }

    let mut state = SolverState::new(x0, v0);
    let mut records = Vec::new();
    let mut monitor = SelectionMonitor::default();
    let mut quiet_records = 0u32;
    let mut termination = Termination::MaxIter;

    for n in 1..=stop.max_iter {
        let lambda = schedule.lambda(n);
        let beta = schedule.beta(n);
        let out = match step(problem, kind, lambda, beta, &state) {
            Ok(out) => out,
            Err(e) => {
                termination = Termination::Halted { n, message: e.to_string() };
                break;
            }
        };
        let step_displacement = (&out.x - &state.x).norm();
        let penalty_residual = out.penalty.norm();
        let finite = is_finite(&out.x)
            && out.v.as_ref().is_none_or(is_finite)
            && step_displacement.is_finite()
            && penalty_residual.is_finite();
        if !finite {
            termination = Termination::NumericalAbort { n };
            break;
        }
        state.ergodic.add(lambda, &state.x);
        if kind == SolverKind::FbSetvalued {
            monitor.push(n, lambda * beta * penalty_residual);
        }
        if n % stop.record_every == 0 {
            let oracle = problem.oracle.as_ref();
            records.push(IterationRecord {
                n,
                lambda,
                beta,
                step_displacement,
                penalty_residual,
                fbf_gap: out.p.as_ref().map(|p| (&state.x - p).norm()),
                oracle_error_x: oracle.map(|o| (&state.x - o).norm()),
                oracle_error_z: oracle.zip(state.z()).map(|(o, z)| (z - o).norm()),
            });
            if step_displacement / lambda < stop.tol && penalty_residual < stop.tol {
                quiet_records += 1;
            } else {
                quiet_records = 0;
            }
        }

        state.x = out.x;
        state.v = out.v;
        state.last_p = out.p;
        state.last_w = out.w;
        state.n = n + 1;
        if quiet_records >= CONSECUTIVE_RECORDS {
            termination = Termination::Converged { n };
            break;
        }
    }

    Ok(RunOutcome {
        state,
        records,
        termination,
        report,
        admissibility,
        selection_hypothesis_unverified: kind == SolverKind::FbSetvalued && monitor.unverified(),
    })
}
