use crate::error::{Error, Result};
use crate::hilbert::{LinearMap, Vector};
use crate::operators::{MonotoneOperator, OperatorKind};

fn check_positive(lambda: f64, beta: f64) -> Result<()> {
    if lambda > 0.0 && beta > 0.0 && lambda.is_finite() && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::Usage(format!("λ_n and β_n must be positive and finite, got {lambda} and {beta}")))
    }
}

/// `w_n ∈ Bx_n`, `x_{n+1} = J_{λA}(x_n − λDx_n − λβw_n)`.
///
/// `w_n` is the minimal-norm selection; fails with a domain error outside `dom B`.
pub fn fb_setvalued_step(
    a: &MonotoneOperator,
    d: &MonotoneOperator,
    b: &MonotoneOperator,
    lambda: f64,
    beta: f64,
    x: &Vector,
) -> Result<(Vector, Vector)> {
    check_positive(lambda, beta)?;
    let w = b.selection(x)?;
    let next = a.resolvent(lambda, &(x - d.eval(x)? * lambda - &w * (lambda * beta)))?;
    Ok((next, w))
}

/// `x_{n+1} = J_{λA}(x_n − λDx_n − λβBx_n)`.
pub fn fb_step(
    a: &MonotoneOperator,
    d: &MonotoneOperator,
    b: &MonotoneOperator,
    lambda: f64,
    beta: f64,
    x: &Vector,
) -> Result<Vector> {
    check_positive(lambda, beta)?;
    let bx = b.eval(x)?;
    a.resolvent(lambda, &(x - d.eval(x)? * lambda - bx * (lambda * beta)))
}

/// Tseng-type step. Returns `(p_n, x_{n+1})` with
/// `p_n = J_{λA}(x_n − λDx_n − λβBx_n)` and
/// `x_{n+1} = λβ(Bx_n − Bp_n) + λ(Dx_n − Dp_n) + p_n`.
pub fn fbf_step(
    a: &MonotoneOperator,
    d: &MonotoneOperator,
    b: &MonotoneOperator,
    lambda: f64,
    beta: f64,
    x: &Vector,
) -> Result<(Vector, Vector)> {
    check_positive(lambda, beta)?;
    let bx = b.eval(x)?;
    let dx = d.eval(x)?;
    let p = a.resolvent(lambda, &(x - &dx * lambda - &bx * (lambda * beta)))?;
    let bp = b.eval(&p)?;
    let dp = d.eval(&p)?;
    let next = (bx - bp) * (lambda * beta) + (dx - dp) * lambda + &p;
    Ok((p, next))
}

/// Output of one primal-dual step.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeStep {
    pub p: Vector,
    pub q: Vector,
    pub x: Vector,
    pub v: Vector,
}

/// Primal-dual Tseng step for `0 ∈ A₁x + K*A₂Kx + Dx + N_C(x)`.
///
/// `J_{λA₂⁻¹}` always goes through the Moreau identity, so only the
/// resolvent of `A₂` is needed.
#[allow(clippy::too_many_arguments)]
pub fn fbf_composite_step(
    a1: &MonotoneOperator,
    a2: &MonotoneOperator,
    k: &LinearMap,
    d: &MonotoneOperator,
    b: &MonotoneOperator,
    lambda: f64,
    beta: f64,
    x: &Vector,
    v: &Vector,
) -> Result<CompositeStep> {
    check_positive(lambda, beta)?;
    if matches!(a2.kind(), OperatorKind::Zero) {
        return Err(Error::Unsupported(
            "A₂ = 0 in the composed term: the inverse of the zero map has no catalog resolvent".into(),
        ));
    }
    if x.len() != k.cols() {
        return Err(Error::DimensionMismatch { expected: k.cols(), found: x.len() });
    }
    if v.len() != k.rows() {
        return Err(Error::DimensionMismatch { expected: k.rows(), found: v.len() });
    }
    let bx = b.eval(x)?;
    let dx = d.eval(x)?;
    let kx = k.apply(x)?;
    let ktv = k.apply_adjoint(v)?;
    let p = a1.resolvent(lambda, &(x - (&dx + ktv) * lambda - &bx * (lambda * beta)))?;
    let q = a2.inverse_resolvent(lambda, &(v + kx * lambda))?;
    let bp = b.eval(&p)?;
    let dp = d.eval(&p)?;
    let next_x = (bx - bp) * (lambda * beta) + (dx - dp) * lambda + k.apply_adjoint(&(v - &q))? * lambda + &p;
    let next_v = k.apply(&(&p - x))? * lambda + &q;
    Ok(CompositeStep { p, q, x: next_x, v: next_v })
}
