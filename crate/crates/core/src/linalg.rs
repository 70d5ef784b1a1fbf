use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Least-squares solution of `rows · c ≈ y` with column equilibration.
/// Returns the coefficients and the largest absolute residual.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = rows.len();
    let n = rows.first().map_or(0, |r| r.len());
    if n == 0 || m < n || y.len() != m {
        return Err(Error::Insufficient(format!("{m} samples for {n} unknowns")));
    }
    let mut a = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    let mut scale = vec![1.0; n];
    for (j, s) in scale.iter_mut().enumerate() {
        let norm = a.column(j).norm();
        if norm > 0.0 {
            *s = norm;
            a.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-13 * smax) {
        return Err(Error::IllConditioned(format!(
            "singular values {smin:e} / {smax:e}"
        )));
    }
    let b = DVector::from_column_slice(y);
    let c = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::IllConditioned(e.to_string()))?;
    let resid = (&a * &c - &b).amax();
    let coeffs = c.iter().zip(&scale).map(|(ci, s)| ci / s).collect();
    Ok((coeffs, resid))
}

/// Ordinary linear fit `y ≈ a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let rows: Vec<Vec<f64>> = x.iter().map(|&xi| vec![1.0, xi]).collect();
    let (c, _) = least_squares(&rows, y)?;
    Ok((c[0], c[1]))
}
