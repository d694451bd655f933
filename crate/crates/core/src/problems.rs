//! Benchmark inclusions with independently computed solutions.
//!
//! Oracles come from dense linear algebra, alternating projections or
//! contraction fixed points, never from the splitting kernels.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{row_space_basis, LinearMap, Vector, RANK_TOLERANCE};
use crate::operators::{project_intersection, ConvexSet, MonotoneOperator};
use crate::schedules::{HypothesisModuli, SolverKind};

/// `K` and `A₂` of the composed term `K*A₂K`.
#[derive(Debug, Clone)]
pub struct CompositePart {
    pub k: LinearMap,
    pub a2: MonotoneOperator,
}

/// How the oracle solution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    PseudoinverseProjection,
    AlternatingProjection,
    ContractionFixedPoint,
    KktSolve,
}

/// `0 ∈ Ax + (K*A₂K)x + Dx + N_C(x)` with `C = zer B`.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub name: String,
    pub a: MonotoneOperator,
    pub d: MonotoneOperator,
    pub b: MonotoneOperator,
    pub c: ConvexSet,
    pub composite: Option<CompositePart>,
    pub oracle: Option<Vector>,
    pub certificate: Option<CertificateKind>,
}

fn reciprocal(v: f64) -> f64 {
    if v == 0.0 {
        f64::INFINITY
    } else {
        1.0 / v
    }
}

impl ProblemInstance {
    pub fn dim(&self) -> usize {
        self.c.dim()
    }

    /// Dimension of the dual space 𝒢 (0 without a composite part).
    pub fn dual_dim(&self) -> usize {
        self.composite.as_ref().map_or(0, |c| c.k.rows())
    }

    /// Constants entering the step-size conditions of `kind`.
    ///
    /// Forward-backward uses cocoercivity moduli; forward-backward-forward
    /// uses inverse Lipschitz constants.
    pub fn hypothesis_moduli(&self, kind: SolverKind) -> HypothesisModuli {
        let (mu, eta) = match kind {
            SolverKind::FbSetvalued | SolverKind::Fb => (self.b.moduli().cocoercivity, self.d.moduli().cocoercivity),
            SolverKind::Fbf | SolverKind::FbfComposite => (
                self.b.moduli().lipschitz_bound().map(reciprocal),
                self.d.moduli().lipschitz_bound().map(reciprocal),
            ),
        };
        HypothesisModuli { mu, eta, k_norm: self.composite.as_ref().map(|c| c.k.operator_norm()) }
    }

    /// Samples points of `C` and checks `Bc = 0` there.
    pub fn check_penalty_consistency<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> Result<()> {
        if !self.b.is_single_valued() {
            return Ok(());
        }
        let dim = self.dim();
        for _ in 0..samples {
            let raw = Vector::from_fn(dim, |_, _| rng.random_range(-10.0..=10.0));
            let c = self.c.project(&raw)?;
            let bc = self.b.eval(&c)?;
            if bc.norm() > 1e-9 * (1.0 + c.norm()) {
                return Err(Error::Contract(format!("‖Bc‖ = {} on a point of C", bc.norm())));
            }
        }
        Ok(())
    }

    /// Randomized audit of the declared moduli of every operator.
    pub fn audit<R: Rng + ?Sized>(&self, pairs: usize, rng: &mut R) -> Result<()> {
        let dim = self.dim();
        self.a.audit_moduli(dim, pairs, 5.0, rng)?;
        self.d.audit_moduli(dim, pairs, 5.0, rng)?;
        self.b.audit_moduli(dim, pairs, 5.0, rng)?;
        if let Some(comp) = &self.composite {
            comp.a2.audit_moduli(comp.k.rows(), pairs, 5.0, rng)?;
        }
        self.check_penalty_consistency(pairs, rng)
    }
}

fn check_shipped_dim(d: usize) -> Result<()> {
    if d == 0 || d > 64 {
        return Err(Error::Usage(format!("problem dimension must be in 1..=64, got {d}")));
    }
    Ok(())
}

/// `B = ∇‖L·‖² = 2L*L`, cocoercive with `1/(2‖L‖²)` (Baillon–Haddad).
fn gram_penalty(l: &LinearMap) -> Result<MonotoneOperator> {
    let m = l.matrix();
    let gram = m.tr_mul(m) * 2.0;
    let gram = (&gram + gram.transpose()) * 0.5;
    MonotoneOperator::affine_gradient(gram, Vector::zeros(l.cols()))
}

/// Projection onto `null L` through the Moore–Penrose pseudoinverse.
fn pinv_nullspace_projection(l: &LinearMap, x: &Vector) -> Result<Vector> {
    let m = l.matrix();
    if m.amax() == 0.0 {
        return Ok(x.clone());
    }
    let pinv = m
        .clone()
        .pseudo_inverse(RANK_TOLERANCE * m.amax())
        .map_err(|e| Error::Singular(e.to_string()))?;
    Ok(x - pinv * (m * x))
}

/// `min ‖x − d‖²` over `x ∈ null L ∩ box`, as the inclusion
/// `0 ∈ N_box(x) + 2(x − d) + N_C(x)` with penalty `B = 2L*L`.
pub fn make_quadratic_over_nullspace(d: Vector, l: LinearMap, bounds: Option<ConvexSet>) -> Result<ProblemInstance> {
    let dim = d.len();
    check_shipped_dim(dim)?;
    check_dim(dim, l.cols())?;
    if let Some(bx) = &bounds {
        check_dim(dim, bx.dim())?;
    }
    let grad = MonotoneOperator::affine_gradient(DMatrix::identity(dim, dim) * 2.0, d.clone())?;
    let b = gram_penalty(&l)?;
    let c = ConvexSet::null_space(l.clone());
    let (a, oracle, certificate) = match bounds {
        None => (
            MonotoneOperator::zero(),
            pinv_nullspace_projection(&l, &d)?,
            CertificateKind::PseudoinverseProjection,
        ),
        Some(bx) => {
            let x = project_intersection(&bx, &c, &d, 1e-12)?;
            (MonotoneOperator::normal_cone(bx), x, CertificateKind::AlternatingProjection)
        }
    };
    Ok(ProblemInstance {
        name: "quadratic_over_nullspace".into(),
        a,
        d: grad,
        b,
        c,
        composite: None,
        oracle: Some(oracle),
        certificate: Some(certificate),
    })
}

/// `0 ∈ γ(x − target) + N_C(x)` with `C = zer B` and `D = 0`.
///
/// The oracle iterates the contraction `x ↦ P_C(x − (x − target)/2)` to its
/// fixed point.
pub fn make_strongly_monotone(gamma: f64, target: Vector, b: MonotoneOperator, c: ConvexSet) -> Result<ProblemInstance> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Usage("γ must be positive".into()));
    }
    let dim = target.len();
    check_shipped_dim(dim)?;
    check_dim(dim, c.dim())?;
    if let Some(bd) = b.dim() {
        check_dim(dim, bd)?;
    }
    let a = MonotoneOperator::affine_gradient(DMatrix::identity(dim, dim) * gamma, target.clone())?;

    let step = 0.5 / gamma;
    let mut x = c.project(&Vector::zeros(dim))?;
    for _ in 0..10_000 {
        let next = c.project(&(&x - (&x - &target) * (gamma * step)))?;
        let moved = (&next - &x).norm();
        x = next;
        if moved <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
    }
    Ok(ProblemInstance {
        name: "strongly_monotone".into(),
        a,
        d: MonotoneOperator::zero(),
        b,
        c,
        composite: None,
        oracle: Some(x),
        certificate: Some(CertificateKind::ContractionFixedPoint),
    })
}

/// `0 ∈ Q₁(x − d₁) + K*Q₂Kx + Sx + N_C(x)`, `C = null L`, penalty `B = 2L*L`.
///
/// `S` is an optional skew matrix (the monotone Lipschitz part `D`). The
/// oracle solves `[M Rᵀ; R 0][x; ν] = [Q₁d₁; 0]` with `M = Q₁ + K*Q₂K + S` and
/// `R` an orthonormal basis of the row space of `L`.
pub fn make_saddle_composite(
    q1: DMatrix<f64>,
    d1: Vector,
    q2: DMatrix<f64>,
    k: LinearMap,
    l: LinearMap,
    skew: Option<LinearMap>,
) -> Result<ProblemInstance> {
    let dim = d1.len();
    check_shipped_dim(dim)?;
    check_dim(dim, q1.nrows())?;
    check_dim(dim, k.cols())?;
    check_dim(dim, l.cols())?;
    check_dim(k.rows(), q2.nrows())?;
    let shift = -(&q1 * &d1);
    let a1 = MonotoneOperator::quadratic(q1.clone(), shift)?;
    let a2 = MonotoneOperator::quadratic(q2.clone(), Vector::zeros(k.rows()))?;
    let d = match &skew {
        Some(s) => {
            check_dim(dim, s.cols())?;
            MonotoneOperator::skew(s.clone())?
        }
        None => MonotoneOperator::zero(),
    };

    let km = k.matrix();
    let mut m = &q1 + km.transpose() * &q2 * km;
    if let Some(s) = &skew {
        m += s.matrix();
    }
    let r = row_space_basis(l.matrix());
    let rank = r.nrows();
    let size = dim + rank;
    let mut kkt = DMatrix::zeros(size, size);
    kkt.view_mut((0, 0), (dim, dim)).copy_from(&m);
    kkt.view_mut((0, dim), (dim, rank)).copy_from(&r.transpose());
    kkt.view_mut((dim, 0), (rank, dim)).copy_from(&r);
    let mut rhs = Vector::zeros(size);
    rhs.rows_mut(0, dim).copy_from(&(&q1 * &d1));

    let singular = kkt.clone().svd(false, false).singular_values;
    let cutoff = RANK_TOLERANCE * singular.max().max(1.0);
    let kkt_rank = singular.iter().filter(|&&s| s > cutoff).count();
    if kkt_rank < size {
        return Err(Error::Singular(format!(
            "KKT system is singular: rank {kkt_rank} of {size} (defect {})",
            size - kkt_rank
        )));
    }
    let solution = kkt.lu().solve(&rhs).ok_or_else(|| Error::Singular("KKT factorization failed".into()))?;
    let oracle = solution.rows(0, dim).into_owned();

    Ok(ProblemInstance {
        name: "saddle_composite".into(),
        a: a1,
        d,
        b: gram_penalty(&l)?,
        c: ConvexSet::null_space(l),
        composite: Some(CompositePart { k, a2 }),
        oracle: Some(oracle),
        certificate: Some(CertificateKind::KktSolve),
    })
}

/// A point of `C ∩ dom A`.
fn feasible_point(pr: &ProblemInstance, x: &Vector) -> Result<Vector> {
    match pr.a.domain() {
        Some(dom) => project_intersection(dom, &pr.c, x, 1e-13),
        None => pr.c.project(x),
    }
}

/// Samples `(u, w) ∈ gra(A + K*A₂K + D + N_C)` around `center`.
pub fn sample_graph_point<R: Rng + ?Sized>(pr: &ProblemInstance, center: &Vector, rng: &mut R) -> Result<(Vector, Vector)> {
    let dim = pr.dim();
    let scale = [1e-3, 1e-1, 1.0, 10.0][rng.random_range(0..4)];
    let raw = center + Vector::from_fn(dim, |_, _| rng.random_range(-scale..=scale));
    let u = feasible_point(pr, &raw)?;
    let magnitude = rng.random_range(0.0..=10.0);
    let mut w = pr.a.sample_element(&u, magnitude, rng)? + pr.d.eval(&u)?;
    let cone = MonotoneOperator::normal_cone(pr.c.clone());
    w += cone.sample_element(&u, magnitude, rng)?;
    if let Some(comp) = &pr.composite {
        let ku = comp.k.apply(&u)?;
        w += comp.k.apply_adjoint(&comp.a2.sample_element(&ku, magnitude, rng)?)?;
    }
    Ok((u, w))
}

/// `⟨w, u − x*⟩ ≥ −tol` on 500 sampled graph points, i.e. the variational
/// characterization of `x* ∈ zer(A + K*A₂K + D + N_C)`.
pub fn verify_oracle<R: Rng + ?Sized>(pr: &ProblemInstance, x_star: &Vector, tol: f64, rng: &mut R) -> Result<bool> {
    check_dim(pr.dim(), x_star.len())?;
    for _ in 0..500 {
        let (u, w) = sample_graph_point(pr, x_star, rng)?;
        if w.dot(&(&u - x_star)) < -tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Names of the shipped constructors.
pub const PROBLEM_NAMES: [&str; 3] = ["quadratic_over_nullspace", "strongly_monotone", "saddle_composite"];
