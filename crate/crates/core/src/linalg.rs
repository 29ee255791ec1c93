//! Small dense kernels for symmetric positive definite matrices.
//!
//! Storage and plain arithmetic come from `nalgebra`; factorizations and the
//! symmetric eigensolver (cyclic Jacobi) are implemented here so that every
//! tolerance is under our control. Dimensions are expected to be small
//! (d up to a few dozen).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative asymmetry above which an input is rejected rather than symmetrized.
pub const SYMMETRY_TOL: f64 = 1e-8;
/// Cholesky pivots at or below this fraction of the original diagonal entry
/// are treated as non-positive.
pub const PIVOT_TOL: f64 = 1e-14;
/// Off-diagonal threshold (relative to the Frobenius norm) ending a Jacobi sweep.
pub const JACOBI_TOL: f64 = 1e-15;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// A symmetric positive definite matrix with its Cholesky factor cached.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    matrix: Matrix,
    lower: Matrix,
}

impl SpdMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        Self::with_tolerance(m, SYMMETRY_TOL)
    }

    /// Like [`SpdMatrix::new`] with a caller-chosen symmetry tolerance.
    pub fn with_tolerance(m: Matrix, symmetry_tol: f64) -> Result<Self> {
        let matrix = symmetrized(m, symmetry_tol)?;
        let lower = cholesky_unchecked(&matrix)?;
        Ok(Self { matrix, lower })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            matrix: Matrix::identity(d, d),
            lower: Matrix::identity(d, d),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(&Vector::from_row_slice(diag)))
    }

    /// Builds from row-major entries.
    pub fn from_rows(d: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: entries.len(),
            });
        }
        Self::new(Matrix::from_row_slice(d, d, entries))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    /// Lower-triangular `L` with `M = L Lᵀ`.
    pub fn cholesky_factor(&self) -> &Matrix {
        &self.lower
    }

    pub fn det(&self) -> f64 {
        let p: f64 = self.lower.diagonal().iter().product();
        p * p
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|v| v.ln()).sum::<f64>()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// `yᵀ M y`, computed as `‖Lᵀ y‖²` so it is never negative.
    pub fn quad_form(&self, y: &Vector) -> f64 {
        self.lower.tr_mul(y).norm_squared()
    }

    pub fn inverse(&self) -> Self {
        let d = self.dim();
        let linv = lower_triangular_inverse(&self.lower);
        let inv = linv.tr_mul(&linv);
        // L⁻ᵀ L⁻¹ is SPD by construction; refactor for the cached factor.
        Self::new(inv).unwrap_or_else(|_| Self::identity(d))
    }

    /// Principal square root via the symmetric eigendecomposition.
    pub fn sqrt(&self) -> Self {
        let (values, vectors) = symmetric_eigen(&self.matrix);
        let roots = Matrix::from_diagonal(&values.map(|v| v.max(0.0).sqrt()));
        let root = &vectors * roots * vectors.transpose();
        Self::new(root).expect("square root of an SPD matrix is SPD")
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(&self.matrix * c)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        ensure_dim(self.dim(), other.dim())?;
        Self::new(&self.matrix + &other.matrix)
    }

    /// Combination `a·self + b·other` for positive weights.
    pub fn weighted_sum(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        ensure_dim(self.dim(), other.dim())?;
        Self::new(&self.matrix * a + &other.matrix * b)
    }

    /// The congruence image `A M Aᵀ`; `A` may be rectangular.
    pub fn congruence(&self, a: &Matrix) -> Result<Self> {
        ensure_dim(self.dim(), a.ncols())?;
        Self::new(a * &self.matrix * a.transpose())
    }
}

pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn ensure_square(m: &Matrix) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

fn symmetrized(m: Matrix, tol: f64) -> Result<Matrix> {
    ensure_square(&m)?;
    let scale = m.amax();
    let asym = (&m - m.transpose()).amax();
    if scale > 0.0 && asym > tol * scale {
        return Err(Error::NotSymmetric {
            asymmetry: asym / scale,
        });
    }
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::NotPositiveDefinite {
            index: 0,
            pivot: f64::NAN,
        });
    }
    Ok((&m + m.transpose()) * 0.5)
}

fn cholesky_unchecked(m: &Matrix) -> Result<Matrix> {
    let d = m.nrows();
    let mut l = Matrix::zeros(d, d);
    for j in 0..d {
        let mut pivot = m[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > 0.0 && pivot > PIVOT_TOL * m[(j, j)]) {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..d {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

fn lower_triangular_inverse(l: &Matrix) -> Matrix {
    let d = l.nrows();
    let mut inv = Matrix::zeros(d, d);
    for col in 0..d {
        inv[(col, col)] = 1.0 / l[(col, col)];
        for i in (col + 1)..d {
            let mut s = 0.0;
            for k in col..i {
                s -= l[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = s / l[(i, i)];
        }
    }
    inv
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(m: &Matrix) -> Result<Matrix> {
    let sym = symmetrized(m.clone(), SYMMETRY_TOL)?;
    cholesky_unchecked(&sym)
}

pub fn spd_det(m: &Matrix) -> Result<f64> {
    Ok(SpdMatrix::new(m.clone())?.det())
}

pub fn spd_inverse(m: &Matrix) -> Result<SpdMatrix> {
    Ok(SpdMatrix::new(m.clone())?.inverse())
}

pub fn spd_sqrt(m: &Matrix) -> Result<SpdMatrix> {
    Ok(SpdMatrix::new(m.clone())?.sqrt())
}

/// Eigenvalues of `Q1⁻¹ Q2`, ascending.
///
/// Computed as the spectrum of the symmetric matrix `L⁻¹ Q2 L⁻ᵀ` where
/// `Q1 = L Lᵀ`, which shares the eigenvalues of `Q1⁻¹ Q2`.
pub fn gen_eigenvalues(q1: &SpdMatrix, q2: &SpdMatrix) -> Result<Vec<f64>> {
    ensure_dim(q1.dim(), q2.dim())?;
    let linv = lower_triangular_inverse(q1.cholesky_factor());
    let mut c = &linv * q2.matrix() * linv.transpose();
    c = (&c + c.transpose()) * 0.5;
    let (values, _) = symmetric_eigen(&c);
    let mut out: Vec<f64> = values.iter().copied().collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    ensure_square(m)?;
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let sym = (m + m.transpose()) * 0.5;
    let (values, _) = symmetric_eigen(&sym);
    Ok(values.amax())
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns `(values, vectors)` with `m = V diag(values) Vᵀ`; eigenvectors are
/// the columns of `V`. Values are not sorted.
pub fn symmetric_eigen(m: &Matrix) -> (Vector, Matrix) {
    let d = m.nrows();
    let mut a = m.clone();
    let mut v = Matrix::identity(d, d);
    let frob = a.norm();
    if frob == 0.0 {
        return (Vector::zeros(d), v);
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= JACOBI_TOL * frob {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    (a.diagonal(), v)
}
