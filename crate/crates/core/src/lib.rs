//! Penalty-based splitting methods for monotone inclusions
//! `0 ∈ Ax + Dx + N_C(x)` with `C = zer B`.
//!
//! The crate provides forward-backward kernels (set-valued and cocoercive
//! penalty), a forward-backward-forward (Tseng-type) kernel for Lipschitz
//! operators, and its primal-dual product-space variant for problems with a
//! composed term `K*A₂K`. Schedules `(λ_n, β_n)` are checked analytically
//! against the convergence hypotheses before a run starts.

pub mod error;
pub mod hilbert;
pub mod operators;
pub mod problems;
pub mod schedules;
pub mod solvers;

pub use error::{Error, Result};
pub use hilbert::{inner, matrix_from_rows, vector, LinearMap, Matrix, Vector};
pub use operators::{ConvexFunction, ConvexSet, ExtReal, Moduli, MonotoneOperator, OperatorKind};
pub use problems::{CompositePart, ProblemInstance};
pub use schedules::{admissible_for, classify, Admissibility, HypothesisModuli, PolynomialSchedule, ScheduleReport, SolverKind};
pub use solvers::{run, IterationRecord, RunOptions, RunOutcome, StoppingPolicy, Termination};
