use nalgebra::DMatrix;

use super::extended::ExtReal;
use super::sets::ConvexSet;
use crate::error::{check_dim, Result};
use crate::hilbert::{LinearMap, SymmetricSpectrum, Vector};

/// Convex functions whose Fenchel conjugate has a closed form.
///
/// Used to bound Fitzpatrick functions of subdifferentials through
/// `φ_{∂f}(x, u) ≤ f(x) + f*(u)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexFunction {
    /// `‖Lx‖²`, conjugate `¼⟨u, (LᵀL)†u⟩` on `ran Lᵀ`.
    SquaredNormComposed { map: LinearMap, gram: SymmetricSpectrum },
    /// `½‖x‖²`, self-conjugate.
    HalfSquaredNorm,
    /// `‖x‖₁`, conjugate is the indicator of the unit `ℓ∞` ball.
    L1Norm,
    /// `½⟨x, Qx⟩ + ⟨b, x⟩`, conjugate `½⟨u−b, Q†(u−b)⟩` on `b + ran Q`.
    Quadratic { q: SymmetricSpectrum, b: Vector },
    /// `½ d_C(x)²`, conjugate `½‖u‖² + σ_C(u)`.
    HalfSquaredDistance(ConvexSet),
    /// `δ_C`, conjugate `σ_C`.
    Indicator(ConvexSet),
}

impl ConvexFunction {
    pub fn squared_norm_composed(map: LinearMap) -> Self {
        let m: &DMatrix<f64> = map.matrix();
        let gram = SymmetricSpectrum::psd(&m.tr_mul(m)).expect("LᵀL is symmetric positive semidefinite");
        ConvexFunction::SquaredNormComposed { map, gram }
    }

    pub fn quadratic(q: &DMatrix<f64>, b: Vector) -> Result<Self> {
        let q = SymmetricSpectrum::psd(q)?;
        check_dim(q.dim(), b.len())?;
        Ok(ConvexFunction::Quadratic { q, b })
    }

    fn fixed_dim(&self) -> Option<usize> {
        match self {
            ConvexFunction::SquaredNormComposed { map, .. } => Some(map.cols()),
            ConvexFunction::Quadratic { b, .. } => Some(b.len()),
            ConvexFunction::HalfSquaredDistance(c) | ConvexFunction::Indicator(c) => Some(c.dim()),
            ConvexFunction::HalfSquaredNorm | ConvexFunction::L1Norm => None,
        }
    }

    fn check(&self, x: &Vector) -> Result<()> {
        match self.fixed_dim() {
            Some(d) => check_dim(d, x.len()),
            None => Ok(()),
        }
    }

    pub fn value(&self, x: &Vector) -> Result<ExtReal> {
        self.check(x)?;
        Ok(match self {
            ConvexFunction::SquaredNormComposed { map, .. } => ExtReal::Finite(map.apply(x)?.norm_squared()),
            ConvexFunction::HalfSquaredNorm => ExtReal::Finite(0.5 * x.norm_squared()),
            ConvexFunction::L1Norm => ExtReal::Finite(x.lp_norm(1)),
            ConvexFunction::Quadratic { q, b } => ExtReal::Finite(0.5 * x.dot(&q.apply(x)) + b.dot(x)),
            ConvexFunction::HalfSquaredDistance(c) => ExtReal::Finite(0.5 * (c.project(x)? - x).norm_squared()),
            ConvexFunction::Indicator(c) => {
                if c.contains(x) {
                    ExtReal::Finite(0.0)
                } else {
                    ExtReal::PosInf
                }
            }
        })
    }

    /// Fenchel conjugate `f*(u) = sup_x ⟨u, x⟩ − f(x)`.
    pub fn conjugate(&self, u: &Vector) -> Result<ExtReal> {
        self.check(u)?;
        Ok(match self {
            ConvexFunction::SquaredNormComposed { gram, .. } => {
                if gram.in_range(u) {
                    ExtReal::Finite(0.25 * u.dot(&gram.pinv_apply(u)))
                } else {
                    ExtReal::PosInf
                }
            }
            ConvexFunction::HalfSquaredNorm => ExtReal::Finite(0.5 * u.norm_squared()),
            ConvexFunction::L1Norm => {
                if u.amax() <= 1.0 {
                    ExtReal::Finite(0.0)
                } else {
                    ExtReal::PosInf
                }
            }
            ConvexFunction::Quadratic { q, b } => {
                let shifted = u - b;
                if q.in_range(&shifted) {
                    ExtReal::Finite(0.5 * shifted.dot(&q.pinv_apply(&shifted)))
                } else {
                    ExtReal::PosInf
                }
            }
            ConvexFunction::HalfSquaredDistance(c) => c.support(u)?.add_finite(0.5 * u.norm_squared()),
            ConvexFunction::Indicator(c) => c.support(u)?,
        })
    }
}

/// Certified upper bound `f(x) + f*(u)` for the Fitzpatrick function of `∂f`.
pub fn fitzpatrick_upper_bound(f: &ConvexFunction, x: &Vector, u: &Vector) -> Result<ExtReal> {
    check_dim(x.len(), u.len())?;
    Ok(f.value(x)? + f.conjugate(u)?)
}
