//! Dense finite-dimensional Hilbert space primitives.
//!
//! Vectors are `nalgebra` column vectors; linear maps carry their adjoint so
//! that primal-dual kernels never transpose inside the hot loop.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, Error, Result};

/// Element of ℝ^d.
pub type Vector = DVector<f64>;

/// Dense real matrix.
pub type Matrix = DMatrix<f64>;

/// Singular values (or eigenvalues) below this fraction of the largest one are
/// treated as zero by every rank-revealing computation in the crate.
pub const RANK_TOLERANCE: f64 = 1e-10;

const POWER_MAX_ITER: usize = 500;
const POWER_TOL: f64 = 1e-12;
const EXACT_NORM_MAX_DIM: usize = 64;

/// Builds a vector from a slice.
pub fn vector(entries: &[f64]) -> Vector {
    Vector::from_column_slice(entries)
}

/// Euclidean inner product. Fails on a dimension mismatch.
pub fn inner(x: &Vector, y: &Vector) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    Ok(x.dot(y))
}

pub fn norm(x: &Vector) -> f64 {
    x.norm()
}

/// Dense matrix from row vectors. Rows must be nonempty and equally long.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(Error::Usage("matrix must have at least one row and one column".into()));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch { expected: cols, found: bad.len() });
    }
    Ok(Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// `true` when every entry is finite.
pub fn is_finite(x: &Vector) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// A bounded linear map `K : ℝ^n → ℝ^m` stored densely, together with its
/// adjoint (the transpose).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
    adjoint: DMatrix<f64>,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::Usage("linear map must have at least one row and one column".into()));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Usage("linear map entries must be finite".into()));
        }
        let adjoint = matrix.transpose();
        Ok(Self { matrix, adjoint })
    }

    /// Builds a map from row slices; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn identity(dim: usize) -> Self {
        let matrix = DMatrix::identity(dim, dim);
        Self { adjoint: matrix.clone(), matrix }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { matrix: DMatrix::zeros(rows, cols), adjoint: DMatrix::zeros(cols, rows) }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn adjoint_matrix(&self) -> &DMatrix<f64> {
        &self.adjoint
    }

    /// Dimension of the codomain.
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    /// Dimension of the domain.
    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.cols(), x.len())?;
        Ok(&self.matrix * x)
    }

    pub fn apply_adjoint(&self, y: &Vector) -> Result<Vector> {
        check_dim(self.rows(), y.len())?;
        Ok(&self.adjoint * y)
    }

    /// The adjoint as a map in its own right.
    pub fn adjoint(&self) -> LinearMap {
        Self { matrix: self.adjoint.clone(), adjoint: self.matrix.clone() }
    }

    /// Spectral norm `sup{‖Kx‖ : ‖x‖ ≤ 1}`.
    ///
    /// Uses an exact singular value decomposition for maps with both
    /// dimensions at most 64 and falls back to [`LinearMap::power_iteration_norm`]
    /// beyond that.
    pub fn operator_norm(&self) -> f64 {
        if self.rows() <= EXACT_NORM_MAX_DIM && self.cols() <= EXACT_NORM_MAX_DIM {
            self.matrix.singular_values().max().max(0.0)
        } else {
            self.power_iteration_norm()
        }
    }

    /// Power iteration on `K*K` with a deterministic start vector.
    pub fn power_iteration_norm(&self) -> f64 {
        let n = self.cols();
        let gram = |v: &Vector| &self.adjoint * (&self.matrix * v);
        let mut v = Vector::from_element(n, 1.0 / (n as f64).sqrt());
        let mut w = gram(&v);
        if w.norm() == 0.0 {
            v[0] += 1e-3;
            v /= v.norm();
            w = gram(&v);
            if w.norm() == 0.0 {
                // Either the zero map or a start vector stuck in the kernel;
                // fall back to scanning the coordinate axes.
                let best = (0..n)
                    .map(|j| self.matrix.column(j).norm())
                    .fold(0.0_f64, f64::max);
                if best == 0.0 {
                    return 0.0;
                }
                let j = (0..n)
                    .max_by(|&a, &b| {
                        self.matrix.column(a).norm().total_cmp(&self.matrix.column(b).norm())
                    })
                    .unwrap_or(0);
                v = Vector::zeros(n);
                v[j] = 1.0;
                w = gram(&v);
            }
        }
        let mut rayleigh = v.dot(&w);
        for _ in 0..POWER_MAX_ITER {
            let wn = w.norm();
            if wn == 0.0 {
                break;
            }
            v = &w / wn;
            w = gram(&v);
            let next = v.dot(&w);
            let done = (next - rayleigh).abs() < POWER_TOL * next.abs().max(1.0);
            rayleigh = next;
            if done {
                break;
            }
        }
        rayleigh.max(0.0).sqrt()
    }
}

/// Eigendecomposition of a symmetric positive semidefinite matrix, used for
/// resolvents `(I + λQ)⁻¹`, pseudoinverses and range tests.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSpectrum {
    vectors: DMatrix<f64>,
    values: DVector<f64>,
}

impl SymmetricSpectrum {
    /// Decomposes `q`, rejecting non-square, asymmetric or indefinite input.
    pub fn psd(q: &DMatrix<f64>) -> Result<Self> {
        if !q.is_square() || q.nrows() == 0 {
            return Err(Error::Usage("expected a nonempty square matrix".into()));
        }
        let scale = q.amax().max(1.0);
        if (q - q.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Usage("matrix must be symmetric".into()));
        }
        let sym = (q + q.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let largest = eig.eigenvalues.amax();
        let cutoff = RANK_TOLERANCE * largest;
        if eig.eigenvalues.iter().any(|&l| l < -cutoff.max(1e-14)) {
            return Err(Error::Usage("matrix must be positive semidefinite".into()));
        }
        let values = eig.eigenvalues.map(|l| if l.abs() <= cutoff { 0.0 } else { l });
        Ok(Self { vectors: eig.eigenvectors, values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn largest(&self) -> f64 {
        self.values.max().max(0.0)
    }

    /// Smallest eigenvalue (zero for singular matrices).
    pub fn smallest(&self) -> f64 {
        self.values.min().max(0.0)
    }

    /// Applies `g(λᵢ)` in the eigenbasis: `V diag(g(λ)) Vᵀ x`.
    pub fn apply_fn(&self, x: &Vector, g: impl Fn(f64) -> f64) -> Vector {
        let coords = self.vectors.tr_mul(x);
        let scaled = DVector::from_iterator(
            coords.len(),
            coords.iter().zip(self.values.iter()).map(|(c, &l)| c * g(l)),
        );
        &self.vectors * scaled
    }

    /// `(I + t·Q)⁻¹ x`.
    pub fn shifted_inverse(&self, t: f64, x: &Vector) -> Vector {
        self.apply_fn(x, |l| 1.0 / (1.0 + t * l))
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        self.apply_fn(x, |l| l)
    }

    /// Moore–Penrose pseudoinverse applied to `x`.
    pub fn pinv_apply(&self, x: &Vector) -> Vector {
        self.apply_fn(x, |l| if l == 0.0 { 0.0 } else { 1.0 / l })
    }

    /// Component of `x` in the null space of `Q`.
    pub fn null_component(&self, x: &Vector) -> Vector {
        self.apply_fn(x, |l| if l == 0.0 { 1.0 } else { 0.0 })
    }

    /// Range membership up to the rank tolerance, relative to `‖x‖`.
    pub fn in_range(&self, x: &Vector) -> bool {
        self.null_component(x).norm() <= 1e-9 * x.norm().max(1e-300)
    }

    pub fn is_invertible(&self) -> bool {
        self.values.iter().all(|&l| l > 0.0)
    }
}

/// Orthonormal basis (as rows) of the row space of a matrix, so that the
/// orthogonal projection onto `null(L)` is `x − Rᵀ(Rx)`.
pub(crate) fn row_space_basis(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.ncols();
    if l.nrows() == 0 || l.amax() == 0.0 {
        return DMatrix::zeros(0, n);
    }
    let svd = l.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let largest = svd.singular_values.max();
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > RANK_TOLERANCE * largest)
        .map(|(i, _)| i)
        .collect();
    DMatrix::from_fn(keep.len(), n, |i, j| v_t[(keep[i], j)])
}
