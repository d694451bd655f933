//! Run configuration documents.
//!
//! ```toml
//! solver = "fb"
//! seed = 7
//! output = "trace.csv"
//!
//! [problem]
//! name = "quadratic_over_nullspace"
//! d = [2.0, 3.0]
//! l = [[1.0, 0.0]]
//!
//! [schedule]
//! lambda0 = 1.0
//! p = 0.9
//! beta0 = 1.0
//! q = 0.5
//!
//! [stopping]
//! max_iter = 100000
//! ```
//!
//! Unknown keys anywhere are errors.

use std::fmt;
use std::ops::Range;

use penalty_splitting::problems::{make_quadratic_over_nullspace, make_saddle_composite, make_strongly_monotone};
use penalty_splitting::{
    matrix_from_rows, vector, ConvexSet, LinearMap, MonotoneOperator, PolynomialSchedule, ProblemInstance,
    SolverKind, StoppingPolicy, Vector,
};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use toml::Spanned;

/// A configuration error, with the 1-based line it refers to when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "config line {line}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn at(text: &str, span: Range<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError { line: Some(line_of(text, span.start)), message: message.into() }
}

fn from_toml(text: &str, err: toml::de::Error) -> ConfigError {
    let line = err.span().map(|s| line_of(text, s.start));
    ConfigError { line, message: err.message().trim_end().to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    /// `x ↦ x − P_C(x)`.
    #[default]
    DistanceGradient,
    /// `N_C`, for the set-valued kernel.
    NormalCone,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Nonnegative { dim: usize },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    NullSpace { rows: Vec<Vec<f64>> },
    WholeSpace { dim: usize },
}

impl SetSpec {
    fn build(&self) -> penalty_splitting::Result<ConvexSet> {
        Ok(match self {
            SetSpec::Nonnegative { dim } => ConvexSet::nonnegative(*dim),
            SetSpec::Box { lo, hi } => ConvexSet::boxed(vector(lo), vector(hi))?,
            SetSpec::Ball { center, radius } => ConvexSet::ball(vector(center), *radius)?,
            SetSpec::NullSpace { rows } => ConvexSet::null_space(LinearMap::from_rows(rows)?),
            SetSpec::WholeSpace { dim } => ConvexSet::WholeSpace(*dim),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// `min ‖x − d‖²` over `null L` (optionally intersected with a box).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticParams {
    pub name: String,
    pub d: Vec<f64>,
    pub l: Vec<Vec<f64>>,
    #[serde(default)]
    pub bounds: Option<BoundsSpec>,
}

/// `0 ∈ γ(x − target) + N_C(x)` with penalty `B` vanishing exactly on `C`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StronglyMonotoneParams {
    pub name: String,
    pub gamma: f64,
    pub target: Vec<f64>,
    pub set: SetSpec,
    #[serde(default)]
    pub penalty: PenaltyKind,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaddleParams {
    pub name: String,
    pub q1: Vec<Vec<f64>>,
    pub d1: Vec<f64>,
    pub q2: Vec<Vec<f64>>,
    pub k: Vec<Vec<f64>>,
    pub l: Vec<Vec<f64>>,
    #[serde(default)]
    pub skew: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    QuadraticOverNullspace(QuadraticParams),
    StronglyMonotone(StronglyMonotoneParams),
    SaddleComposite(SaddleParams),
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::QuadraticOverNullspace(_) => "quadratic_over_nullspace",
            ProblemSpec::StronglyMonotone(_) => "strongly_monotone",
            ProblemSpec::SaddleComposite(_) => "saddle_composite",
        }
    }

    pub fn build(&self) -> penalty_splitting::Result<ProblemInstance> {
        match self {
            ProblemSpec::QuadraticOverNullspace(p) => {
                let bounds = match &p.bounds {
                    Some(b) => Some(ConvexSet::boxed(vector(&b.lo), vector(&b.hi))?),
                    None => None,
                };
                make_quadratic_over_nullspace(vector(&p.d), LinearMap::from_rows(&p.l)?, bounds)
            }
            ProblemSpec::StronglyMonotone(p) => {
                let set = p.set.build()?;
                let penalty = match p.penalty {
                    PenaltyKind::DistanceGradient => MonotoneOperator::distance_gradient(set.clone()),
                    PenaltyKind::NormalCone => MonotoneOperator::normal_cone(set.clone()),
                };
                make_strongly_monotone(p.gamma, vector(&p.target), penalty, set)
            }
            ProblemSpec::SaddleComposite(p) => make_saddle_composite(
                matrix_from_rows(&p.q1)?,
                vector(&p.d1),
                matrix_from_rows(&p.q2)?,
                LinearMap::from_rows(&p.k)?,
                LinearMap::from_rows(&p.l)?,
                p.skew.as_deref().map(LinearMap::from_rows).transpose()?,
            ),
        }
    }
}

/// Shipped problem constructors and their parameter keys.
pub const PROBLEM_HELP: [(&str, &str); 3] = [
    ("quadratic_over_nullspace", "d = [..], l = [[..], ..], optional bounds = { lo = [..], hi = [..] }"),
    (
        "strongly_monotone",
        "gamma, target = [..], set = { kind = nonnegative|box|ball|null_space|whole_space, .. }, optional penalty = distance_gradient|normal_cone",
    ),
    ("saddle_composite", "q1 = [[..]], d1 = [..], q2 = [[..]], k = [[..]], l = [[..]], optional skew = [[..]]"),
];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleDoc {
    lambda0: Spanned<f64>,
    p: Spanned<f64>,
    beta0: Spanned<f64>,
    q: Spanned<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct StoppingDoc {
    max_iter: Option<Spanned<u64>>,
    tol: Option<Spanned<f64>>,
    record_every: Option<Spanned<u64>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct InitialDoc {
    x0: Option<Vec<f64>>,
    v0: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document<P> {
    solver: Spanned<String>,
    #[serde(default)]
    seed: u64,
    output: Option<String>,
    #[serde(default)]
    override_admissibility: bool,
    problem: P,
    schedule: ScheduleDoc,
    #[serde(default)]
    stopping: StoppingDoc,
    #[serde(default)]
    initial: InitialDoc,
}

#[derive(Debug, Deserialize)]
struct ProbeProblem {
    name: Spanned<String>,
}

#[derive(Debug, Deserialize)]
struct Probe {
    problem: Option<ProbeProblem>,
}

/// A fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub solver: SolverKind,
    pub schedule: PolynomialSchedule,
    pub stopping: StoppingPolicy,
    pub seed: u64,
    pub output_path: Option<String>,
    pub override_admissibility: bool,
    pub x0: Option<Vector>,
    pub v0: Option<Vector>,
}

fn parse_document<P: DeserializeOwned>(text: &str) -> Result<Document<P>, ConfigError> {
    toml::from_str(text).map_err(|e| from_toml(text, e))
}

fn positive(text: &str, value: &Spanned<f64>, what: &str, key: &str) -> Result<f64, ConfigError> {
    let v = *value.get_ref();
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(at(text, value.span(), format!("{what} must be positive, got {v} (key `{key}`)")))
    }
}

fn finite(text: &str, value: &Spanned<f64>, what: &str) -> Result<f64, ConfigError> {
    let v = *value.get_ref();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(at(text, value.span(), format!("{what} must be finite")))
    }
}

fn finish<P>(text: &str, doc: Document<P>, problem: ProblemSpec) -> Result<RunConfig, ConfigError> {
    let solver = SolverKind::parse(doc.solver.get_ref()).ok_or_else(|| {
        let names: Vec<&str> = SolverKind::ALL.iter().map(|k| k.name()).collect();
        at(
            text,
            doc.solver.span(),
            format!("key `solver`: unknown solver \"{}\" (expected one of {})", doc.solver.get_ref(), names.join(", ")),
        )
    })?;
    let s = &doc.schedule;
    let schedule = PolynomialSchedule::new(
        positive(text, &s.lambda0, "λ₀", "schedule.lambda0")?,
        finite(text, &s.p, "`schedule.p`")?,
        positive(text, &s.beta0, "β₀", "schedule.beta0")?,
        finite(text, &s.q, "`schedule.q`")?,
    )
    .map_err(|e| ConfigError { line: None, message: e.to_string() })?;

    let defaults = StoppingPolicy::default();
    let st = &doc.stopping;
    let tol = match &st.tol {
        Some(t) => positive(text, t, "tolerance", "stopping.tol")?,
        None => defaults.tol,
    };
    let record_every = match &st.record_every {
        Some(r) if *r.get_ref() == 0 => return Err(at(text, r.span(), "`stopping.record_every` must be at least 1")),
        Some(r) => *r.get_ref(),
        None => defaults.record_every,
    };
    let stopping = StoppingPolicy {
        max_iter: st.max_iter.as_ref().map_or(defaults.max_iter, |m| *m.get_ref()),
        tol,
        record_every,
    };
    Ok(RunConfig {
        problem,
        solver,
        schedule,
        stopping,
        seed: doc.seed,
        output_path: doc.output,
        override_admissibility: doc.override_admissibility,
        x0: doc.initial.x0.as_deref().map(vector),
        v0: doc.initial.v0.as_deref().map(vector),
    })
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let probe: Probe = toml::from_str(text).map_err(|e| from_toml(text, e))?;
    let name = probe
        .problem
        .ok_or_else(|| ConfigError { line: None, message: "missing required section `[problem]`".into() })?
        .name;
    match name.get_ref().as_str() {
        "quadratic_over_nullspace" => {
            let doc = parse_document::<QuadraticParams>(text)?;
            let spec = ProblemSpec::QuadraticOverNullspace(doc.problem.clone());
            finish(text, doc, spec)
        }
        "strongly_monotone" => {
            let doc = parse_document::<StronglyMonotoneParams>(text)?;
            let spec = ProblemSpec::StronglyMonotone(doc.problem.clone());
            finish(text, doc, spec)
        }
        "saddle_composite" => {
            let doc = parse_document::<SaddleParams>(text)?;
            let spec = ProblemSpec::SaddleComposite(doc.problem.clone());
            finish(text, doc, spec)
        }
        other => {
            let names: Vec<&str> = PROBLEM_HELP.iter().map(|(n, _)| *n).collect();
            Err(at(
                text,
                name.span(),
                format!("key `problem.name`: unknown problem \"{other}\" (expected one of {})", names.join(", ")),
            ))
        }
    }
}
