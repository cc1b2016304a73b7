//! Dense symmetric positive-definite solves used by every closed-form fit.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Result, UpliftError};

/// Systems whose condition estimate exceeds this are reported as near-singular.
pub const ILL_CONDITIONED: f64 = 1e12;

/// Ratio of the extreme eigenvalues of a symmetric matrix.
///
/// Returns `f64::INFINITY` when the smallest eigenvalue is not positive.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let eig = SymmetricEigen::new(m.clone());
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !(lo > 0.0) || !hi.is_finite() {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Cholesky factor of a symmetric positive-definite matrix.
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
}

impl SpdFactor {
    /// Factors `m`. Only the lower triangle is read.
    pub fn new(m: DMatrix<f64>, context: &'static str) -> Result<Self> {
        if !m.is_square() {
            return Err(UpliftError::DimensionMismatch {
                context,
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(UpliftError::Numerical {
                context,
                detail: "matrix has non-finite entries".into(),
                condition: f64::NAN,
            });
        }
        let sym = symmetrize(m);
        match Cholesky::new(sym.clone()) {
            Some(chol) => Ok(Self { chol }),
            None => Err(UpliftError::Numerical {
                context,
                detail: "matrix is not positive definite".into(),
                condition: condition_number(&sym),
            }),
        }
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }

    pub fn solve_matrix(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(rhs)
    }

    /// Cheap lower bound on the condition number from the factor's diagonal.
    pub fn diagonal_condition(&self) -> f64 {
        let l = self.chol.l_dirty();
        let (lo, hi) = (0..l.nrows()).fold((f64::INFINITY, 0.0f64), |(lo, hi), i| {
            let d = l[(i, i)].abs();
            (lo.min(d), hi.max(d))
        });
        (hi / lo).powi(2)
    }
}

/// Averages `m` with its transpose.
pub fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Returns `m + shift * I`.
pub fn add_ridge(mut m: DMatrix<f64>, shift: f64) -> DMatrix<f64> {
    for i in 0..m.nrows().min(m.ncols()) {
        m[(i, i)] += shift;
    }
    m
}
