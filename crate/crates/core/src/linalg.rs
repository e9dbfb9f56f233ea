//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition estimate above which results carry a warning.
pub const CONDITION_WARNING: f64 = 1e10;

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// `½(M + Mᵀ)`, exactly symmetric.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = m.clone();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// `½(M − Mᵀ)`, exactly antisymmetric.
pub fn antisymmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] - m[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = -v;
        }
    }
    out
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Result of a dense solve together with its 1-norm condition number.
#[derive(Debug, Clone)]
pub struct DenseSolve {
    pub solution: DVector<f64>,
    pub condition: f64,
}

/// Solves `a · x = b` by LU with partial pivoting.
pub fn lu_solve(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DenseSolve> {
    let norm = one_norm(&a);
    let lu = a.lu();
    let inv = lu
        .try_inverse()
        .ok_or_else(|| Error::Internal("singular linear system".into()))?;
    let solution = &inv * b;
    let condition = norm * one_norm(&inv);
    if !solution.iter().all(|x| x.is_finite()) {
        return Err(Error::Internal(
            "non-finite solution of linear system".into(),
        ));
    }
    Ok(DenseSolve {
        solution,
        condition,
    })
}

/// Ratio of extreme eigenvalues of a symmetric positive-definite matrix.
///
/// Returns `Err(Signature)` when the smallest eigenvalue is not positive.
pub fn spd_condition(m: &DMatrix<f64>) -> Result<f64> {
    let eig = m.clone().symmetric_eigen();
    let lo = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let hi = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(lo > 0.0) {
        return Err(Error::Signature(format!("smallest eigenvalue {lo:e}")));
    }
    Ok(hi / lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solve_reports_condition() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let b = DVector::from_vec(vec![2.0, 1.0]);
        let s = lu_solve(a, &b).unwrap();
        assert_eq!(s.solution.as_slice(), &[1.0, 2.0]);
        assert!((s.condition - 4.0).abs() < 1e-14);
    }

    #[test]
    fn singular_system_is_an_error() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(lu_solve(a, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn spd_condition_detects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(spd_condition(&m), Err(Error::Signature(_))));
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        assert!((spd_condition(&m).unwrap() - 4.0).abs() < 1e-14);
    }
}
