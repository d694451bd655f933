use nalgebra::DMatrix;
use rand::Rng;

use super::extended::ExtReal;
use crate::error::{check_dim, Error, Result};
use crate::hilbert::{row_space_basis, LinearMap, Vector};

/// Relative tolerance for membership tests (`x ∈ C`, `u ⟂ C`).
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// The null space of a linear map, with a cached orthonormal basis of the
/// orthogonal complement (the row space).
#[derive(Debug, Clone, PartialEq)]
pub struct NullSpace {
    map: LinearMap,
    row_basis: DMatrix<f64>,
}

impl NullSpace {
    pub fn of(map: LinearMap) -> Self {
        let row_basis = row_space_basis(map.matrix());
        Self { map, row_basis }
    }

    pub fn map(&self) -> &LinearMap {
        &self.map
    }

    pub fn dim(&self) -> usize {
        self.map.cols()
    }

    /// Rank of the defining map.
    pub fn codimension(&self) -> usize {
        self.row_basis.nrows()
    }

    /// Component of `x` orthogonal to the subspace (in the row space).
    fn normal_component(&self, x: &Vector) -> Vector {
        if self.row_basis.nrows() == 0 {
            return Vector::zeros(x.len());
        }
        self.row_basis.tr_mul(&(&self.row_basis * x))
    }

    /// The orthogonal complement `ran Lᵀ`, expressed again as a null space.
    pub fn complement(&self) -> NullSpace {
        let n = self.dim();
        let projector = DMatrix::identity(n, n) - self.row_basis.tr_mul(&self.row_basis);
        let basis = row_space_basis(&projector);
        let map = if basis.nrows() == 0 {
            LinearMap::zeros(1, n)
        } else {
            LinearMap::new(basis).expect("orthonormal basis is finite and nonempty")
        };
        NullSpace::of(map)
    }
}

/// Nonempty closed convex subsets of ℝ^d with closed-form projections.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    /// `{x : lo ≤ x ≤ hi}`; bounds may be infinite.
    Box { lo: Vector, hi: Vector },
    /// `{x : Lx = 0}`.
    Subspace(NullSpace),
    Singleton(Vector),
    Ball { center: Vector, radius: f64 },
    WholeSpace(usize),
}

fn scale(x: &Vector) -> f64 {
    x.amax().max(1.0)
}

impl ConvexSet {
    pub fn boxed(lo: Vector, hi: Vector) -> Result<Self> {
        check_dim(lo.len(), hi.len())?;
        if lo.is_empty() {
            return Err(Error::Usage("box must have dimension at least 1".into()));
        }
        if lo.iter().zip(hi.iter()).any(|(l, h)| l.is_nan() || h.is_nan() || l > h || *l == f64::INFINITY || *h == f64::NEG_INFINITY) {
            return Err(Error::Usage("box bounds must satisfy lo ≤ hi".into()));
        }
        Ok(ConvexSet::Box { lo, hi })
    }

    /// The nonnegative orthant `[0, ∞)^d`.
    pub fn nonnegative(dim: usize) -> Self {
        ConvexSet::Box { lo: Vector::zeros(dim), hi: Vector::from_element(dim, f64::INFINITY) }
    }

    pub fn null_space(map: LinearMap) -> Self {
        ConvexSet::Subspace(NullSpace::of(map))
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::Usage("ball radius must be finite and nonnegative".into()));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lo, .. } => lo.len(),
            ConvexSet::Subspace(ns) => ns.dim(),
            ConvexSet::Singleton(c) => c.len(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::WholeSpace(d) => *d,
        }
    }

    /// Metric projection `argmin_{y∈C} ‖y − x‖`.
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            ConvexSet::Box { lo, hi } => Vector::from_iterator(
                x.len(),
                x.iter().zip(lo.iter().zip(hi.iter())).map(|(v, (l, h))| v.clamp(*l, *h)),
            ),
            ConvexSet::Subspace(ns) => x - ns.normal_component(x),
            ConvexSet::Singleton(c) => c.clone(),
            ConvexSet::Ball { center, radius } => {
                let offset = x - center;
                let dist = offset.norm();
                if dist <= *radius {
                    x.clone()
                } else {
                    center + offset * (*radius / dist)
                }
            }
            ConvexSet::WholeSpace(_) => x.clone(),
        })
    }

    /// Membership up to a relative tolerance.
    pub fn contains(&self, x: &Vector) -> bool {
        match self.project(x) {
            Ok(p) => (p - x).norm() <= MEMBERSHIP_TOL * scale(x),
            Err(_) => false,
        }
    }

    /// Support function `σ_C(u) = sup_{y∈C} ⟨y, u⟩`.
    pub fn support(&self, u: &Vector) -> Result<ExtReal> {
        check_dim(self.dim(), u.len())?;
        Ok(match self {
            ConvexSet::Box { lo, hi } => {
                let mut total = 0.0;
                for ((ui, l), h) in u.iter().zip(lo.iter()).zip(hi.iter()) {
                    if *ui > 0.0 {
                        if h.is_infinite() {
                            return Ok(ExtReal::PosInf);
                        }
                        total += ui * h;
                    } else if *ui < 0.0 {
                        if l.is_infinite() {
                            return Ok(ExtReal::PosInf);
                        }
                        total += ui * l;
                    }
                }
                ExtReal::Finite(total)
            }
            ConvexSet::Subspace(ns) => {
                if (u - ns.normal_component(u)).norm() <= MEMBERSHIP_TOL * scale(u) {
                    ExtReal::Finite(0.0)
                } else {
                    ExtReal::PosInf
                }
            }
            ConvexSet::Singleton(c) => ExtReal::Finite(c.dot(u)),
            ConvexSet::Ball { center, radius } => ExtReal::Finite(center.dot(u) + radius * u.norm()),
            ConvexSet::WholeSpace(_) => {
                if u.amax() == 0.0 {
                    ExtReal::Finite(0.0)
                } else {
                    ExtReal::PosInf
                }
            }
        })
    }

    /// Whether `p ∈ ran N_C`.
    pub fn normal_range_contains(&self, p: &Vector) -> Result<bool> {
        check_dim(self.dim(), p.len())?;
        Ok(match self {
            ConvexSet::Box { lo, hi } => p.iter().zip(lo.iter().zip(hi.iter())).all(|(pi, (l, h))| {
                (*pi <= 0.0 || h.is_finite()) && (*pi >= 0.0 || l.is_finite())
            }),
            ConvexSet::Subspace(ns) => (p - ns.normal_component(p)).norm() <= MEMBERSHIP_TOL * scale(p),
            ConvexSet::Singleton(_) | ConvexSet::Ball { .. } => true,
            ConvexSet::WholeSpace(_) => p.amax() == 0.0,
        })
    }

    /// A random element of `N_C(x)` for `x ∈ C`, drawn with magnitude up to
    /// `magnitude`. Returns a domain error when `x ∉ C`.
    pub fn sample_normal<R: Rng + ?Sized>(&self, x: &Vector, magnitude: f64, rng: &mut R) -> Result<Vector> {
        if !self.contains(x) {
            return Err(Error::Domain("normal cone is empty outside the set".into()));
        }
        let tol = MEMBERSHIP_TOL * scale(x);
        Ok(match self {
            ConvexSet::Box { lo, hi } => Vector::from_iterator(
                x.len(),
                x.iter().zip(lo.iter().zip(hi.iter())).map(|(v, (l, h))| {
                    let at_lo = (v - l).abs() <= tol;
                    let at_hi = (h - v).abs() <= tol;
                    match (at_lo, at_hi) {
                        (true, true) => rng.random_range(-magnitude..=magnitude),
                        (true, false) => -rng.random_range(0.0..=magnitude),
                        (false, true) => rng.random_range(0.0..=magnitude),
                        (false, false) => 0.0,
                    }
                }),
            ),
            ConvexSet::Subspace(ns) => {
                let r = Vector::from_fn(x.len(), |_, _| rng.random_range(-magnitude..=magnitude));
                ns.normal_component(&r)
            }
            ConvexSet::Singleton(_) => Vector::from_fn(x.len(), |_, _| rng.random_range(-magnitude..=magnitude)),
            ConvexSet::Ball { center, radius } => {
                let offset = x - center;
                if *radius == 0.0 {
                    Vector::from_fn(x.len(), |_, _| rng.random_range(-magnitude..=magnitude))
                } else if (offset.norm() - radius).abs() <= tol {
                    offset * (rng.random_range(0.0..=magnitude) / radius)
                } else {
                    Vector::zeros(x.len())
                }
            }
            ConvexSet::WholeSpace(d) => Vector::zeros(*d),
        })
    }
}

/// Projection onto `first ∩ second` by Dykstra's alternating projections.
///
/// Stops when the iterate moves less than `tol` over a full sweep; returns a
/// domain error if the sweep budget runs out (empty or nearly tangent sets).
pub fn project_intersection(first: &ConvexSet, second: &ConvexSet, x: &Vector, tol: f64) -> Result<Vector> {
    check_dim(first.dim(), x.len())?;
    check_dim(second.dim(), x.len())?;
    let mut y = x.clone();
    let mut p = Vector::zeros(x.len());
    let mut q = Vector::zeros(x.len());
    for _ in 0..200_000 {
        let a = first.project(&(&y + &p))?;
        p = &y + &p - &a;
        let b = second.project(&(&a + &q))?;
        q = &a + &q - &b;
        let moved = (&b - &y).norm();
        y = b;
        if moved <= tol * scale(&y) && first.contains(&y) {
            return Ok(y);
        }
    }
    Err(Error::Domain("alternating projections did not converge".into()))
}
