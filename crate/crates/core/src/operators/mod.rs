//! Catalog of maximal monotone operators.
//!
//! Every operator is exposed through its resolvent `J_{λM} = (Id + λM)⁻¹`;
//! single-valued kinds additionally support direct evaluation, set-valued ones
//! a deterministic minimal-norm selection. Fitzpatrick functions are evaluated
//! in closed form where the supremum is explicit, and bounded through
//! `f + f*` for subdifferentials.

mod extended;
mod functions;
mod sets;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

pub use extended::ExtReal;
pub use functions::{fitzpatrick_upper_bound, ConvexFunction};
pub use sets::{project_intersection, ConvexSet, NullSpace, MEMBERSHIP_TOL};

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{LinearMap, SymmetricSpectrum, Vector};

/// Resolvent callback `(λ, x) ↦ J_{λM}(x)` for user-supplied operators.
///
/// Callbacks must be reentrant: the library may call them from several threads.
pub type ResolventFn = Arc<dyn Fn(f64, &Vector) -> Vector + Send + Sync>;

/// Declared constants of an operator. `None` means "not known / not claimed".
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moduli {
    /// `η` with `⟨x−y, Mx−My⟩ ≥ η‖Mx−My‖²`. May be `+∞` (zero map).
    pub cocoercivity: Option<f64>,
    pub lipschitz: Option<f64>,
    pub strong_monotonicity: Option<f64>,
}

impl Moduli {
    /// Declared Lipschitz constant, or `1/η` from a cocoercivity declaration.
    pub fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz.or(self.cocoercivity.map(|eta| 1.0 / eta))
    }
}

#[derive(Clone)]
pub enum OperatorKind {
    Zero,
    Identity,
    ScaledIdentity(f64),
    /// `∂‖·‖₁` (componentwise `∂|·|`).
    SubdifferentialAbsValue,
    /// `∂(½⟨x, Qx⟩ + ⟨b, x⟩) = Qx + b`.
    SubdifferentialQuadratic { q: SymmetricSpectrum, q_matrix: DMatrix<f64>, b: Vector },
    NormalCone(ConvexSet),
    SkewLinear(LinearMap),
    /// `x ↦ P(x − d)`.
    AffineGradient { p: SymmetricSpectrum, p_matrix: DMatrix<f64>, d: Vector },
    /// `x ↦ x − P_C(x)`, the gradient of `½ d_C²`.
    DistanceGradient(ConvexSet),
    /// `(x, v) ↦ A₁x × A₂⁻¹v` on `ℋ × 𝒢`, `split = dim ℋ`.
    Product { primal: Box<MonotoneOperator>, dual: Box<MonotoneOperator>, split: usize },
    /// `(x, v) ↦ (Dx + K*v, −Kx)`.
    PrimalDualCoupling { d: Box<MonotoneOperator>, k: LinearMap },
    /// `(x, v) ↦ (Bx, 0)`.
    PrimalLift { b: Box<MonotoneOperator>, dual_dim: usize },
    UserResolvent { dim: usize, resolvent: ResolventFn },
}

impl fmt::Debug for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorKind::Zero => f.write_str("Zero"),
            OperatorKind::Identity => f.write_str("Identity"),
            OperatorKind::ScaledIdentity(g) => write!(f, "ScaledIdentity({g})"),
            OperatorKind::SubdifferentialAbsValue => f.write_str("SubdifferentialAbsValue"),
            OperatorKind::SubdifferentialQuadratic { q_matrix, b, .. } => {
                write!(f, "SubdifferentialQuadratic(Q={q_matrix:?}, b={b:?})")
            }
            OperatorKind::NormalCone(c) => write!(f, "NormalCone({c:?})"),
            OperatorKind::SkewLinear(s) => write!(f, "SkewLinear({:?})", s.matrix()),
            OperatorKind::AffineGradient { p_matrix, d, .. } => write!(f, "AffineGradient(P={p_matrix:?}, d={d:?})"),
            OperatorKind::DistanceGradient(c) => write!(f, "DistanceGradient({c:?})"),
            OperatorKind::Product { primal, dual, .. } => write!(f, "Product({primal:?}, inverse of {dual:?})"),
            OperatorKind::PrimalDualCoupling { d, k } => write!(f, "PrimalDualCoupling({d:?}, K={:?})", k.matrix()),
            OperatorKind::PrimalLift { b, dual_dim } => write!(f, "PrimalLift({b:?}, {dual_dim})"),
            OperatorKind::UserResolvent { dim, .. } => write!(f, "UserResolvent(dim={dim})"),
        }
    }
}

/// A maximal monotone operator together with its declared moduli.
#[derive(Debug, Clone)]
pub struct MonotoneOperator {
    kind: OperatorKind,
    moduli: Moduli,
}

fn check_step(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Usage(format!("step size must be positive and finite, got {lambda}")))
    }
}

fn ones_like(n: usize, v: f64) -> Vector {
    Vector::from_element(n, v)
}

impl MonotoneOperator {
    fn with(kind: OperatorKind, moduli: Moduli) -> Self {
        Self { kind, moduli }
    }

    pub fn zero() -> Self {
        Self::with(
            OperatorKind::Zero,
            Moduli { cocoercivity: Some(f64::INFINITY), lipschitz: Some(0.0), strong_monotonicity: None },
        )
    }

    pub fn identity() -> Self {
        Self::with(
            OperatorKind::Identity,
            Moduli { cocoercivity: Some(1.0), lipschitz: Some(1.0), strong_monotonicity: Some(1.0) },
        )
    }

    pub fn scaled_identity(gamma: f64) -> Result<Self> {
        check_step(gamma)?;
        Ok(Self::with(
            OperatorKind::ScaledIdentity(gamma),
            Moduli { cocoercivity: Some(1.0 / gamma), lipschitz: Some(gamma), strong_monotonicity: Some(gamma) },
        ))
    }

    pub fn abs_value() -> Self {
        Self::with(OperatorKind::SubdifferentialAbsValue, Moduli::default())
    }

    /// `∂(½⟨x, Qx⟩ + ⟨b, x⟩)` for symmetric positive semidefinite `Q`.
    pub fn quadratic(q: DMatrix<f64>, b: Vector) -> Result<Self> {
        let spectrum = SymmetricSpectrum::psd(&q)?;
        check_dim(q.nrows(), b.len())?;
        let moduli = spectral_moduli(&spectrum);
        Ok(Self::with(OperatorKind::SubdifferentialQuadratic { q: spectrum, q_matrix: q, b }, moduli))
    }

    pub fn normal_cone(set: ConvexSet) -> Self {
        Self::with(OperatorKind::NormalCone(set), Moduli::default())
    }

    /// Linear `S` with `Sᵀ = −S`.
    pub fn skew(s: LinearMap) -> Result<Self> {
        let m = s.matrix();
        if !m.is_square() {
            return Err(Error::Usage("skew operator must be square".into()));
        }
        if (m + m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
            return Err(Error::Usage("skew operator must satisfy Sᵀ = −S".into()));
        }
        let lip = s.operator_norm();
        let coco = if lip == 0.0 { Some(f64::INFINITY) } else { None };
        Ok(Self::with(
            OperatorKind::SkewLinear(s),
            Moduli { cocoercivity: coco, lipschitz: Some(lip), strong_monotonicity: None },
        ))
    }

    /// `x ↦ P(x − d)` for symmetric positive semidefinite `P`.
    pub fn affine_gradient(p: DMatrix<f64>, d: Vector) -> Result<Self> {
        let spectrum = SymmetricSpectrum::psd(&p)?;
        check_dim(p.nrows(), d.len())?;
        let moduli = spectral_moduli(&spectrum);
        Ok(Self::with(OperatorKind::AffineGradient { p: spectrum, p_matrix: p, d }, moduli))
    }

    /// `x ↦ x − P_C(x)`; 1-cocoercive with zeros exactly `C`.
    pub fn distance_gradient(set: ConvexSet) -> Self {
        Self::with(
            OperatorKind::DistanceGradient(set),
            Moduli { cocoercivity: Some(1.0), lipschitz: Some(1.0), strong_monotonicity: None },
        )
    }

    /// `Ã(x, v) = A₁x × A₂⁻¹v`; `dual` is `A₂` itself (not its inverse).
    pub fn product(primal: MonotoneOperator, dual: MonotoneOperator, split: usize) -> Self {
        Self::with(
            OperatorKind::Product { primal: Box::new(primal), dual: Box::new(dual), split },
            Moduli::default(),
        )
    }

    /// `D̃(x, v) = (Dx + K*v, −Kx)`, Lipschitz with `√(2(1/η² + ‖K‖²))`
    /// where `1/η` is the Lipschitz constant of `D`.
    pub fn primal_dual_coupling(d: MonotoneOperator, k: LinearMap) -> Result<Self> {
        let d_lip = d
            .moduli
            .lipschitz_bound()
            .ok_or_else(|| Error::Usage("coupling requires a Lipschitz constant for D".into()))?;
        let k_norm = k.operator_norm();
        let lip = (2.0 * (d_lip * d_lip + k_norm * k_norm)).sqrt();
        Ok(Self::with(
            OperatorKind::PrimalDualCoupling { d: Box::new(d), k },
            Moduli { cocoercivity: None, lipschitz: Some(lip), strong_monotonicity: None },
        ))
    }

    /// `B̃(x, v) = (Bx, 0)`, inheriting the moduli of `B` (minus strong monotonicity).
    pub fn primal_lift(b: MonotoneOperator, dual_dim: usize) -> Self {
        let moduli = Moduli { strong_monotonicity: None, ..b.moduli };
        Self::with(OperatorKind::PrimalLift { b: Box::new(b), dual_dim }, moduli)
    }

    pub fn user_resolvent(dim: usize, resolvent: ResolventFn) -> Self {
        Self::with(OperatorKind::UserResolvent { dim, resolvent }, Moduli::default())
    }

    pub fn with_cocoercivity(mut self, eta: f64) -> Self {
        self.moduli.cocoercivity = Some(eta);
        self
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.moduli.lipschitz = Some(l);
        self
    }

    pub fn with_strong_monotonicity(mut self, gamma: f64) -> Self {
        self.moduli.strong_monotonicity = Some(gamma);
        self
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn moduli(&self) -> &Moduli {
        &self.moduli
    }

    /// Short stable name of the operator kind.
    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            OperatorKind::Zero => "zero",
            OperatorKind::Identity => "identity",
            OperatorKind::ScaledIdentity(_) => "scaled_identity",
            OperatorKind::SubdifferentialAbsValue => "subdifferential_abs_value",
            OperatorKind::SubdifferentialQuadratic { .. } => "subdifferential_quadratic",
            OperatorKind::NormalCone(_) => "normal_cone",
            OperatorKind::SkewLinear(_) => "skew_linear",
            OperatorKind::AffineGradient { .. } => "affine_gradient",
            OperatorKind::DistanceGradient(_) => "distance_gradient",
            OperatorKind::Product { .. } => "product",
            OperatorKind::PrimalDualCoupling { .. } => "primal_dual_coupling",
            OperatorKind::PrimalLift { .. } => "primal_lift",
            OperatorKind::UserResolvent { .. } => "user_resolvent",
        }
    }

    /// Dimension of the underlying space, or `None` for kinds that act on any ℝ^d.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            OperatorKind::Zero
            | OperatorKind::Identity
            | OperatorKind::ScaledIdentity(_)
            | OperatorKind::SubdifferentialAbsValue => None,
            OperatorKind::SubdifferentialQuadratic { b, .. } => Some(b.len()),
            OperatorKind::NormalCone(c) | OperatorKind::DistanceGradient(c) => Some(c.dim()),
            OperatorKind::SkewLinear(s) => Some(s.cols()),
            OperatorKind::AffineGradient { d, .. } => Some(d.len()),
            OperatorKind::Product { primal, dual, split } => {
                let dual_dim = dual.dim()?;
                if let Some(p) = primal.dim() {
                    debug_assert_eq!(p, *split);
                }
                Some(split + dual_dim)
            }
            OperatorKind::PrimalDualCoupling { k, .. } => Some(k.cols() + k.rows()),
            OperatorKind::PrimalLift { b, dual_dim } => b.dim().map(|d| d + dual_dim),
            OperatorKind::UserResolvent { dim, .. } => Some(*dim),
        }
    }

    fn check_input(&self, x: &Vector) -> Result<()> {
        match self.dim() {
            Some(d) => check_dim(d, x.len()),
            None => Ok(()),
        }
    }

    /// `true` for kinds where `Mx` is a single point everywhere.
    pub fn is_single_valued(&self) -> bool {
        matches!(
            self.kind,
            OperatorKind::Zero
                | OperatorKind::Identity
                | OperatorKind::ScaledIdentity(_)
                | OperatorKind::SubdifferentialQuadratic { .. }
                | OperatorKind::SkewLinear(_)
                | OperatorKind::AffineGradient { .. }
                | OperatorKind::DistanceGradient(_)
                | OperatorKind::PrimalDualCoupling { .. }
                | OperatorKind::PrimalLift { .. }
        )
    }

    /// The closed convex set `dom M`, or `None` when `dom M = ℋ`.
    pub fn domain(&self) -> Option<&ConvexSet> {
        match &self.kind {
            OperatorKind::NormalCone(c) => Some(c),
            _ => None,
        }
    }

    /// `J_{λM}(x)`: the unique `y` with `x ∈ y + λMy`.
    pub fn resolvent(&self, lambda: f64, x: &Vector) -> Result<Vector> {
        check_step(lambda)?;
        self.check_input(x)?;
        Ok(match &self.kind {
            OperatorKind::Zero => x.clone(),
            OperatorKind::Identity => x / (1.0 + lambda),
            OperatorKind::ScaledIdentity(g) => x / (1.0 + lambda * g),
            OperatorKind::SubdifferentialAbsValue => x.map(|v| soft_threshold(v, lambda)),
            OperatorKind::SubdifferentialQuadratic { q, b, .. } => q.shifted_inverse(lambda, &(x - b * lambda)),
            OperatorKind::NormalCone(c) => c.project(x)?,
            OperatorKind::SkewLinear(s) => {
                let n = s.cols();
                let system = DMatrix::identity(n, n) + s.matrix() * lambda;
                system
                    .lu()
                    .solve(x)
                    .ok_or_else(|| Error::Singular("I + λS is singular".into()))?
            }
            OperatorKind::AffineGradient { p, d, .. } => p.shifted_inverse(lambda, &(x + p.apply(d) * lambda)),
            OperatorKind::DistanceGradient(c) => {
                let proj = c.project(x)?;
                x + (proj - x) * (lambda / (1.0 + lambda))
            }
            OperatorKind::Product { primal, dual, split } => {
                if x.len() <= *split {
                    return Err(Error::DimensionMismatch { expected: split + 1, found: x.len() });
                }
                let (head, tail) = split_vector(x, *split);
                let first = primal.resolvent(lambda, &head)?;
                let second = dual.inverse_resolvent(lambda, &tail)?;
                join_vectors(&first, &second)
            }
            OperatorKind::PrimalLift { b, dual_dim } => {
                let split = x.len() - dual_dim;
                let (head, tail) = split_vector(x, split);
                join_vectors(&b.resolvent(lambda, &head)?, &tail)
            }
            OperatorKind::PrimalDualCoupling { .. } => {
                return Err(Error::Unsupported("resolvent of the primal-dual coupling operator".into()))
            }
            OperatorKind::UserResolvent { dim, resolvent } => {
                let y = resolvent(lambda, x);
                if y.len() != *dim {
                    return Err(Error::Contract(format!(
                        "user resolvent returned dimension {} instead of {dim}",
                        y.len()
                    )));
                }
                y
            }
        })
    }

    /// `J_{γM⁻¹}(x)`, evaluated through the resolvent of `M` alone:
    /// `J_{γM⁻¹}(x) = x − γ J_{γ⁻¹M}(x/γ)`.
    pub fn inverse_resolvent(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        check_step(gamma)?;
        Ok(x - self.resolvent(1.0 / gamma, &(x / gamma))? * gamma)
    }

    /// `Mx` for single-valued kinds.
    pub fn eval(&self, x: &Vector) -> Result<Vector> {
        self.check_input(x)?;
        Ok(match &self.kind {
            OperatorKind::Zero => Vector::zeros(x.len()),
            OperatorKind::Identity => x.clone(),
            OperatorKind::ScaledIdentity(g) => x * *g,
            OperatorKind::SubdifferentialQuadratic { q, b, .. } => q.apply(x) + b,
            OperatorKind::SkewLinear(s) => s.apply(x)?,
            OperatorKind::AffineGradient { p, d, .. } => p.apply(&(x - d)),
            OperatorKind::DistanceGradient(c) => x - c.project(x)?,
            OperatorKind::PrimalDualCoupling { d, k } => {
                let (head, tail) = split_vector(x, k.cols());
                let first = d.eval(&head)? + k.apply_adjoint(&tail)?;
                let second = -k.apply(&head)?;
                join_vectors(&first, &second)
            }
            OperatorKind::PrimalLift { b, dual_dim } => {
                let split = x.len() - dual_dim;
                let (head, _) = split_vector(x, split);
                join_vectors(&b.eval(&head)?, &Vector::zeros(*dual_dim))
            }
            _ => {
                return Err(Error::Usage(format!(
                    "{} is set-valued; use `selection` to pick an element",
                    self.kind_name()
                )))
            }
        })
    }

    /// Deterministic minimal-norm element of `Mx`.
    pub fn selection(&self, x: &Vector) -> Result<Vector> {
        if self.is_single_valued() {
            return self.eval(x);
        }
        self.check_input(x)?;
        match &self.kind {
            OperatorKind::SubdifferentialAbsValue => Ok(x.map(|v| {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            })),
            OperatorKind::NormalCone(c) => {
                if c.contains(x) {
                    Ok(Vector::zeros(x.len()))
                } else {
                    Err(Error::Domain("point lies outside the set, normal cone is empty".into()))
                }
            }
            OperatorKind::Product { primal, dual, split } => {
                let (head, tail) = split_vector(x, *split);
                let dual_dim = tail.len();
                let first = primal.selection(&head)?;
                let second = dual.inverse(dual_dim)?.selection(&tail)?;
                Ok(join_vectors(&first, &second))
            }
            _ => Err(Error::Unsupported(format!("selection for {}", self.kind_name()))),
        }
    }

    /// A random element of `Mx` (used to sample graph points in audits).
    /// For single-valued kinds this is `Mx` itself.
    pub fn sample_element<R: Rng + ?Sized>(&self, x: &Vector, magnitude: f64, rng: &mut R) -> Result<Vector> {
        match &self.kind {
            OperatorKind::SubdifferentialAbsValue => {
                self.check_input(x)?;
                Ok(x.map(|v| {
                    if v > 0.0 {
                        1.0
                    } else if v < 0.0 {
                        -1.0
                    } else {
                        rng.random_range(-1.0..=1.0)
                    }
                }))
            }
            OperatorKind::NormalCone(c) => c.sample_normal(x, magnitude, rng),
            _ => self.selection(x),
        }
    }

    /// The inverse operator `M⁻¹` when it belongs to the catalog.
    pub fn inverse(&self, dim: usize) -> Result<MonotoneOperator> {
        if let Some(d) = self.dim() {
            check_dim(d, dim)?;
        }
        let unsupported = || Error::Unsupported(format!("closed-form inverse of {}", self.kind_name()));
        match &self.kind {
            OperatorKind::Zero => Ok(Self::normal_cone(ConvexSet::Singleton(Vector::zeros(dim)))),
            OperatorKind::Identity => Ok(Self::identity()),
            OperatorKind::ScaledIdentity(g) => Self::scaled_identity(1.0 / g),
            OperatorKind::SubdifferentialAbsValue => Ok(Self::normal_cone(ConvexSet::Box {
                lo: ones_like(dim, -1.0),
                hi: ones_like(dim, 1.0),
            })),
            OperatorKind::NormalCone(c) => match c {
                ConvexSet::Singleton(p) if p.amax() == 0.0 => Ok(Self::zero()),
                ConvexSet::WholeSpace(d) => Ok(Self::normal_cone(ConvexSet::Singleton(Vector::zeros(*d)))),
                ConvexSet::Subspace(ns) => Ok(Self::normal_cone(ConvexSet::Subspace(ns.complement()))),
                ConvexSet::Box { lo, hi }
                    if lo.iter().all(|&l| l == -1.0) && hi.iter().all(|&h| h == 1.0) =>
                {
                    Ok(Self::abs_value())
                }
                _ => Err(unsupported()),
            },
            OperatorKind::SubdifferentialQuadratic { q, q_matrix, b } => {
                if !q.is_invertible() {
                    return Err(unsupported());
                }
                let inv = q_matrix.clone().try_inverse().ok_or_else(unsupported)?;
                let inv = (&inv + inv.transpose()) * 0.5;
                let shift = -(&inv * b);
                Self::quadratic(inv, shift)
            }
            OperatorKind::AffineGradient { p, p_matrix, d } => {
                if !p.is_invertible() {
                    return Err(unsupported());
                }
                let inv = p_matrix.clone().try_inverse().ok_or_else(unsupported)?;
                let inv = (&inv + inv.transpose()) * 0.5;
                let shift = -(p_matrix * d);
                Self::affine_gradient(inv, shift)
            }
            OperatorKind::SkewLinear(s) => {
                let sv = s.matrix().singular_values();
                if sv.min() <= crate::hilbert::RANK_TOLERANCE * sv.max() {
                    return Err(unsupported());
                }
                let inv = s.matrix().clone().try_inverse().ok_or_else(unsupported)?;
                let inv = (&inv - inv.transpose()) * 0.5;
                Self::skew(LinearMap::new(inv)?)
            }
            _ => Err(unsupported()),
        }
    }

    /// The convex function `f` with `M = ∂f`, for subdifferential kinds.
    pub fn potential(&self, dim: usize) -> Option<ConvexFunction> {
        match &self.kind {
            OperatorKind::Identity => Some(ConvexFunction::HalfSquaredNorm),
            OperatorKind::Zero => ConvexFunction::quadratic(&DMatrix::zeros(dim, dim), Vector::zeros(dim)).ok(),
            OperatorKind::ScaledIdentity(g) => {
                ConvexFunction::quadratic(&(DMatrix::identity(dim, dim) * *g), Vector::zeros(dim)).ok()
            }
            OperatorKind::SubdifferentialAbsValue => Some(ConvexFunction::L1Norm),
            OperatorKind::SubdifferentialQuadratic { q_matrix, b, .. } => {
                ConvexFunction::quadratic(q_matrix, b.clone()).ok()
            }
            OperatorKind::AffineGradient { p_matrix, d, .. } => {
                ConvexFunction::quadratic(p_matrix, -(p_matrix * d)).ok()
            }
            OperatorKind::NormalCone(c) => Some(ConvexFunction::Indicator(c.clone())),
            OperatorKind::DistanceGradient(c) => Some(ConvexFunction::HalfSquaredDistance(c.clone())),
            _ => None,
        }
    }

    /// Closed-form Fitzpatrick function
    /// `φ_M(x, u) = sup_{(y,v) ∈ gr M} ⟨x, v⟩ + ⟨y, u⟩ − ⟨y, v⟩`.
    ///
    /// Supported for the zero map, (scaled) identities, affine gradients,
    /// skew maps and normal cones of singletons. Other kinds return
    /// [`Error::Unsupported`]; use [`fitzpatrick_upper_bound`] with
    /// [`MonotoneOperator::potential`] instead.
    pub fn fitzpatrick(&self, x: &Vector, u: &Vector) -> Result<ExtReal> {
        check_dim(x.len(), u.len())?;
        self.check_input(x)?;
        let tol = |v: &Vector| MEMBERSHIP_TOL * v.amax().max(1.0);
        Ok(match &self.kind {
            OperatorKind::Zero => {
                if u.norm() <= tol(u) {
                    ExtReal::Finite(0.0)
                } else {
                    ExtReal::PosInf
                }
            }
            OperatorKind::Identity => ExtReal::Finite(0.25 * (x + u).norm_squared()),
            OperatorKind::ScaledIdentity(g) => ExtReal::Finite((x * *g + u).norm_squared() / (4.0 * g)),
            OperatorKind::AffineGradient { p, d, .. } => {
                // sup_y ⟨P(x+d) + u, y⟩ − ⟨y, Py⟩ − ⟨x, Pd⟩
                if !p.in_range(u) {
                    return Ok(ExtReal::PosInf);
                }
                let c = p.apply(&(x + d)) + u;
                ExtReal::Finite(0.25 * c.dot(&p.pinv_apply(&c)) - x.dot(&p.apply(d)))
            }
            OperatorKind::SkewLinear(s) => {
                let sx = s.apply(x)?;
                if (u - &sx).norm() <= tol(u) {
                    ExtReal::Finite(x.dot(&sx))
                } else {
                    ExtReal::PosInf
                }
            }
            OperatorKind::NormalCone(ConvexSet::Singleton(c)) => {
                if (x - c).norm() <= tol(x) {
                    ExtReal::Finite(c.dot(u))
                } else {
                    ExtReal::PosInf
                }
            }
            _ => {
                return Err(Error::Unsupported(format!(
                    "closed-form Fitzpatrick function of {}",
                    self.kind_name()
                )))
            }
        })
    }

    /// Randomized audit of monotonicity and every declared modulus on
    /// `pairs` random pairs drawn from `[-scale, scale]^dim` (projected onto
    /// the domain for set-valued kinds).
    pub fn audit_moduli<R: Rng + ?Sized>(&self, dim: usize, pairs: usize, scale: f64, rng: &mut R) -> Result<()> {
        let draw = |rng: &mut R| -> Result<Vector> {
            let raw = Vector::from_fn(dim, |_, _| rng.random_range(-scale..=scale));
            match self.domain() {
                Some(c) => c.project(&raw),
                None => Ok(raw),
            }
        };
        for _ in 0..pairs {
            let x = draw(rng)?;
            let y = draw(rng)?;
            let mx = self.sample_element(&x, scale, rng)?;
            let my = self.sample_element(&y, scale, rng)?;
            let dx = &x - &y;
            let dm = &mx - &my;
            let pairing = dx.dot(&dm);
            let slack = 1e-10 * (1.0 + dx.norm_squared() + dm.norm_squared());
            if pairing < -slack {
                return Err(Error::Contract(format!("{} fails monotonicity: ⟨x−y, Mx−My⟩ = {pairing}", self.kind_name())));
            }
            if self.is_single_valued() {
                if let Some(eta) = self.moduli.cocoercivity {
                    let rhs = if eta.is_infinite() {
                        if dm.norm() > slack {
                            return Err(Error::Contract(format!("{} declared zero map but moved", self.kind_name())));
                        }
                        0.0
                    } else {
                        eta * dm.norm_squared()
                    };
                    if pairing < rhs - slack {
                        return Err(Error::Contract(format!("{} fails {eta}-cocoercivity", self.kind_name())));
                    }
                }
                if let Some(l) = self.moduli.lipschitz_bound() {
                    if dm.norm() > l * dx.norm() * (1.0 + 1e-10) + slack {
                        return Err(Error::Contract(format!("{} fails {l}-Lipschitz continuity", self.kind_name())));
                    }
                }
            }
            if let Some(gamma) = self.moduli.strong_monotonicity {
                if pairing < gamma * dx.norm_squared() - slack {
                    return Err(Error::Contract(format!("{} fails {gamma}-strong monotonicity", self.kind_name())));
                }
            }
        }
        Ok(())
    }
}

fn spectral_moduli(spectrum: &SymmetricSpectrum) -> Moduli {
    let largest = spectrum.largest();
    let smallest = spectrum.smallest();
    Moduli {
        cocoercivity: Some(if largest == 0.0 { f64::INFINITY } else { 1.0 / largest }),
        lipschitz: Some(largest),
        strong_monotonicity: (smallest > 0.0).then_some(smallest),
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

pub(crate) fn split_vector(x: &Vector, at: usize) -> (Vector, Vector) {
    let at = at.min(x.len());
    (x.rows(0, at).into_owned(), x.rows(at, x.len() - at).into_owned())
}

pub(crate) fn join_vectors(a: &Vector, b: &Vector) -> Vector {
    Vector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// One representative instance of every catalog kind in ℝ^dim, with random
/// (but well-conditioned) data drawn from `rng`. Used by audits and tests.
pub fn representative_catalog<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<MonotoneOperator> {
    let random_matrix = |rows: usize, cols: usize, rng: &mut R| {
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..=1.0))
    };
    let random_vector = |rng: &mut R| Vector::from_fn(dim, |_, _| rng.random_range(-2.0..=2.0));

    let a = random_matrix(dim, dim, rng);
    let spd = a.tr_mul(&a) + DMatrix::identity(dim, dim) * 0.5;
    let low_rank = {
        let r = random_matrix(1, dim, rng);
        r.tr_mul(&r)
    };
    let s = random_matrix(dim, dim, rng);
    let skew = (&s - s.transpose()) * 0.5;
    let lo = Vector::from_fn(dim, |_, _| rng.random_range(-2.0..=0.0));
    let hi = &lo + Vector::from_fn(dim, |_, _| rng.random_range(0.0..=3.0));
    let unit_box = ConvexSet::Box { lo, hi };
    let l = LinearMap::new(random_matrix(dim.div_ceil(2), dim, rng)).expect("finite matrix");
    let center = random_vector(rng);

    let mut catalog = vec![
        MonotoneOperator::zero(),
        MonotoneOperator::identity(),
        MonotoneOperator::scaled_identity(2.5).expect("positive"),
        MonotoneOperator::abs_value(),
        MonotoneOperator::quadratic(spd.clone(), random_vector(rng)).expect("psd"),
        MonotoneOperator::quadratic(low_rank.clone(), Vector::zeros(dim)).expect("psd"),
        MonotoneOperator::normal_cone(unit_box.clone()),
        MonotoneOperator::normal_cone(ConvexSet::null_space(l)),
        MonotoneOperator::normal_cone(ConvexSet::Singleton(Vector::zeros(dim))),
        MonotoneOperator::normal_cone(ConvexSet::Ball { center, radius: 1.5 }),
        MonotoneOperator::normal_cone(ConvexSet::WholeSpace(dim)),
        MonotoneOperator::skew(LinearMap::new(skew).expect("finite")).expect("skew"),
        MonotoneOperator::affine_gradient(spd.clone(), random_vector(rng)).expect("psd"),
        MonotoneOperator::affine_gradient(low_rank, random_vector(rng)).expect("psd"),
        MonotoneOperator::distance_gradient(unit_box),
    ];
    catalog.push(MonotoneOperator::product(
        MonotoneOperator::abs_value(),
        MonotoneOperator::quadratic(spd, Vector::zeros(dim)).expect("psd"),
        dim,
    ));
    catalog
}

/// Result of a penalty-gap evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyGap {
    pub value: ExtReal,
    /// `false` when the value is the `f + f*` upper bound rather than the
    /// exact Fitzpatrick supremum.
    pub exact: bool,
}

/// `sup_{u∈C} φ_B(u, p/β) − σ_C(p/β)` for `p ∈ ran N_C`, with `C = zer B`.
///
/// For every catalog kind the Fitzpatrick term is constant on `zer B`, so the
/// supremum is attained at any point of `C`; the projection of the origin is
/// used. Subdifferential kinds without a closed-form `φ_B` fall back to the
/// certified bound `f(u) + f*(p/β)`.
pub fn penalty_gap(b: &MonotoneOperator, c: &ConvexSet, p: &Vector, beta: f64) -> Result<PenaltyGap> {
    check_step(beta)?;
    let dim = c.dim();
    check_dim(dim, p.len())?;
    if !c.normal_range_contains(p)? {
        return Err(Error::Domain("p is not in the range of the normal cone of C".into()));
    }
    let u = c.project(&Vector::zeros(dim))?;
    if b.is_single_valued() {
        let bu = b.eval(&u)?;
        if bu.norm() > 1e-8 * u.amax().max(1.0) {
            return Err(Error::Usage("C must be the zero set of B".into()));
        }
    }
    let s = p / beta;
    let sigma = c
        .support(&s)?
        .finite()
        .ok_or_else(|| Error::Domain("support function infinite on ran N_C".into()))?;
    match b.fitzpatrick(&u, &s) {
        Ok(phi) => Ok(PenaltyGap { value: phi.add_finite(-sigma), exact: true }),
        Err(Error::Unsupported(_)) => {
            let f = b
                .potential(dim)
                .ok_or_else(|| Error::Unsupported(format!("penalty gap for {}", b.kind_name())))?;
            penalty_gap_bound(&f, c, p, beta)
        }
        Err(e) => Err(e),
    }
}

/// The bound `sup_{u∈C} f(u) + f*(p/β) − σ_C(p/β)` for a penalty `B = ∂f`
/// with `C = argmin f`.
pub fn penalty_gap_bound(f: &ConvexFunction, c: &ConvexSet, p: &Vector, beta: f64) -> Result<PenaltyGap> {
    check_step(beta)?;
    let dim = c.dim();
    check_dim(dim, p.len())?;
    if !c.normal_range_contains(p)? {
        return Err(Error::Domain("p is not in the range of the normal cone of C".into()));
    }
    let u = c.project(&Vector::zeros(dim))?;
    let s = p / beta;
    let sigma = c
        .support(&s)?
        .finite()
        .ok_or_else(|| Error::Domain("support function infinite on ran N_C".into()))?;
    let value = fitzpatrick_upper_bound(f, &u, &s)?.add_finite(-sigma);
    Ok(PenaltyGap { value, exact: false })
}

#[cfg(test)]
mod tests;
