//! Ridge solve `(R^T R + lambda I) z = 1`.
//!
//! The normal matrix is never formed. A Householder QR of the stacked matrix
//! `[R; sqrt(lambda) I]` yields an upper-triangular `T` with
//! `T^T T = R^T R + lambda I`, after which `z` follows from two triangular
//! solves. Cost is `O(K^2 d)` for the factorization and `O(K^2)` for the solves.

use crate::error::{Result, RnaError};

use super::ResidualMatrix;

/// Solves the ridge system for the raw (unnormalized) weights `z`.
pub fn solve_regularized(residuals: &ResidualMatrix, lambda: f64) -> Result<Vec<f64>> {
    solve_with_retry(residuals, lambda).map(|(z, _)| z)
}

/// Like [`solve_regularized`], also returning the ridge actually applied.
///
/// A numerically rank-deficient factorization at `lambda > 0` is retried once
/// with `lambda + 10 eps trace(R^T R)`. At `lambda == 0` rank deficiency is an
/// error.
pub(crate) fn solve_with_retry(residuals: &ResidualMatrix, lambda: f64) -> Result<(Vec<f64>, f64)> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(RnaError::InvalidConfig(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if residuals.data.iter().any(|v| !v.is_finite()) {
        return Err(RnaError::NumericalFailure(
            "residual matrix has non-finite entries".into(),
        ));
    }
    match factor_and_solve(residuals, lambda) {
        Some(z) => Ok((z, lambda)),
        None if lambda > 0.0 => {
            let bumped = lambda + 10.0 * f64::EPSILON * residuals.gram_trace();
            factor_and_solve(residuals, bumped)
                .map(|z| (z, bumped))
                .ok_or(RnaError::SingularSystem { lambda })
        }
        None => Err(RnaError::SingularSystem { lambda }),
    }
    .and_then(|(z, l)| {
        if z.iter().all(|v| v.is_finite()) {
            Ok((z, l))
        } else {
            Err(RnaError::NumericalFailure(
                "ridge solve produced non-finite weights".into(),
            ))
        }
    })
}

/// Returns `None` when the triangular factor has a pivot at rounding level.
fn factor_and_solve(residuals: &ResidualMatrix, lambda: f64) -> Option<Vec<f64>> {
    let d = residuals.dim;
    let k = residuals.cols;
    let rows = d + k;

    // Column-major stacked matrix [R; sqrt(lambda) I].
    let sqrt_lambda = lambda.sqrt();
    let mut a = vec![0.0; rows * k];
    for j in 0..k {
        let col = &mut a[j * rows..(j + 1) * rows];
        col[..d].copy_from_slice(residuals.column(j));
        col[d + j] = sqrt_lambda;
    }
    let frobenius = (residuals.gram_trace() + k as f64 * lambda).sqrt();
    let tol = rows as f64 * f64::EPSILON * frobenius;

    let mut v = vec![0.0; rows];
    let mut diag = vec![0.0; k];
    for j in 0..k {
        let len = rows - j;
        let x = &a[j * rows + j..(j + 1) * rows];
        let norm = scaled_norm(x);
        if norm == 0.0 {
            diag[j] = 0.0;
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        v[..len].copy_from_slice(x);
        v[0] -= alpha;
        let vtv = norm * (norm + x[0].abs()) * 2.0;
        diag[j] = alpha;
        for c in (j + 1)..k {
            let col = &mut a[c * rows + j..(c + 1) * rows];
            let s: f64 = v[..len].iter().zip(col.iter()).map(|(p, q)| p * q).sum();
            let f = 2.0 * s / vtv;
            for (ci, vi) in col.iter_mut().zip(&v[..len]) {
                *ci -= f * vi;
            }
        }
    }
    if diag.iter().any(|t| t.abs() <= tol) {
        return None;
    }

    // Upper-triangular factor: T[i][j] = a[j * rows + i] for i < j, diag on the side.
    let t = |i: usize, j: usize| if i == j { diag[i] } else { a[j * rows + i] };

    // T^T y = 1
    let mut y = vec![0.0; k];
    for i in 0..k {
        let mut s = 1.0;
        for p in 0..i {
            s -= t(p, i) * y[p];
        }
        y[i] = s / diag[i];
    }
    // T z = y
    let mut z = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = y[i];
        for p in (i + 1)..k {
            s -= t(i, p) * z[p];
        }
        z[i] = s / diag[i];
    }
    Some(z)
}

fn scaled_norm(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let ss: f64 = x.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * ss.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual_norm(r: &ResidualMatrix, lambda: f64, z: &[f64]) -> f64 {
        let g = r.gram();
        let k = r.cols();
        (0..k)
            .map(|i| {
                let row: f64 = (0..k).map(|j| g[i * k + j] * z[j]).sum::<f64>() + lambda * z[i];
                (row - 1.0).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn scalar_system() {
        let r = ResidualMatrix::from_columns(&[vec![2.0, 0.0, 0.0]]).unwrap();
        let z = solve_regularized(&r, 1.0).unwrap();
        assert!((z[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_columns_give_diagonal_system() {
        let r = ResidualMatrix::from_columns(&[vec![1.0, 0.0], vec![0.0, 3f64.sqrt()]]).unwrap();
        let z = solve_regularized(&r, 1.0).unwrap();
        assert!((z[0] - 0.5).abs() < 1e-15);
        assert!((z[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn duplicated_iterates_are_singular_without_ridge() {
        let r = ResidualMatrix::from_columns(&[vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let err = solve_regularized(&r, 0.0).unwrap_err();
        assert!(matches!(err, RnaError::SingularSystem { .. }));
        assert!(err.to_string().contains("lambda > 0"));
        // Zero columns are kept; a positive ridge handles them.
        let z = solve_regularized(&r, 1e-3).unwrap();
        assert_eq!(z.len(), 2);
        assert!(residual_norm(&r, 1e-3, &z) < 1e-8 * 2f64.sqrt());
    }

    #[test]
    fn all_zero_residuals_with_ridge() {
        let r = ResidualMatrix::from_columns(&[vec![0.0; 3], vec![0.0; 3]]).unwrap();
        let z = solve_regularized(&r, 0.5).unwrap();
        for v in z {
            assert!((v - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn tiny_ridge_is_bumped_once() {
        let r = ResidualMatrix::from_columns(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let (z, used) = solve_with_retry(&r, 1e-300).unwrap();
        assert!(used > 1e-300);
        assert!((used - (1e-300 + 20.0 * f64::EPSILON)).abs() < 1e-30);
        assert!((z[0] - z[1]).abs() <= 1e-6 * z[0].abs());
    }

    #[test]
    fn invalid_inputs() {
        let r = ResidualMatrix::from_columns(&[vec![1.0]]).unwrap();
        assert!(matches!(solve_regularized(&r, -1.0), Err(RnaError::InvalidConfig(_))));
        assert!(matches!(solve_regularized(&r, f64::NAN), Err(RnaError::InvalidConfig(_))));
        let r = ResidualMatrix::from_columns(&[vec![f64::INFINITY]]).unwrap();
        assert!(matches!(solve_regularized(&r, 1.0), Err(RnaError::NumericalFailure(_))));
    }

    #[test]
    fn well_conditioned_residual_bound() {
        let cols: Vec<Vec<f64>> = (0..6)
            .map(|j| (0..40).map(|i| ((i * 7 + j * 13) as f64).cos()).collect())
            .collect();
        let r = ResidualMatrix::from_columns(&cols).unwrap();
        for lambda in [1e-6, 1e-2, 1.0] {
            let z = solve_regularized(&r, lambda).unwrap();
            assert!(residual_norm(&r, lambda, &z) <= 1e-8 * 6f64.sqrt());
        }
    }
}
