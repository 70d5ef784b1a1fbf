//! Radial functions: the accessor trait shared by every module and a sampled
//! profile with cubic Hermite interpolation.

use crate::error::{Error, Result};
use crate::odecore::RadialSolution;

/// A radial function `rho -> w(rho)` with its first derivative.
pub trait RadialFn {
    fn value(&self, rho: f64) -> f64;
    fn derivative(&self, rho: f64) -> f64;
}

impl<T: RadialFn + ?Sized> RadialFn for &T {
    fn value(&self, rho: f64) -> f64 {
        (**self).value(rho)
    }
    fn derivative(&self, rho: f64) -> f64 {
        (**self).derivative(rho)
    }
}

impl RadialFn for RadialSolution {
    fn value(&self, rho: f64) -> f64 {
        RadialSolution::value(self, rho)
    }
    fn derivative(&self, rho: f64) -> f64 {
        RadialSolution::derivative(self, rho)
    }
}

/// Adapter turning a pair of closures into a [`RadialFn`].
#[derive(Clone, Copy)]
pub struct FnProfile<F, G> {
    pub f: F,
    pub df: G,
}

impl<F: Fn(f64) -> f64, G: Fn(f64) -> f64> RadialFn for FnProfile<F, G> {
    fn value(&self, rho: f64) -> f64 {
        (self.f)(rho)
    }
    fn derivative(&self, rho: f64) -> f64 {
        (self.df)(rho)
    }
}

/// Constant radial function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl RadialFn for Constant {
    fn value(&self, _rho: f64) -> f64 {
        self.0
    }
    fn derivative(&self, _rho: f64) -> f64 {
        0.0
    }
}

/// Sampled radial function on an increasing grid. Interpolation is cubic
/// Hermite; outside the grid the end values are held.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    grid: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl RadialProfile {
    /// Builds a profile; derivatives are estimated by second-order finite
    /// differences when not supplied.
    pub fn new(grid: Vec<f64>, values: Vec<f64>, derivs: Option<Vec<f64>>) -> Result<Self> {
        let n = grid.len();
        if n < 2 || values.len() != n {
            return Err(Error::Domain(format!(
                "profile needs >= 2 matching samples (grid {n}, values {})",
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain(
                "profile grid must be strictly increasing".into(),
            ));
        }
        let derivs = match derivs {
            Some(d) if d.len() == n => d,
            Some(d) => {
                return Err(Error::Domain(format!(
                    "derivative count {} does not match grid {n}",
                    d.len()
                )))
            }
            None => fd_derivative(&grid, &values),
        };
        Ok(Self {
            grid,
            values,
            derivs,
        })
    }

    /// Samples any radial function on `grid`.
    pub fn sample<F: RadialFn>(f: &F, grid: Vec<f64>) -> Result<Self> {
        let values = grid.iter().map(|&r| f.value(r)).collect();
        let derivs = grid.iter().map(|&r| f.derivative(r)).collect();
        Self::new(grid, values, Some(derivs))
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }

    pub fn min_radius(&self) -> f64 {
        self.grid[0]
    }

    pub fn max_radius(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value with a range check.
    pub fn try_value(&self, rho: f64) -> Result<f64> {
        if rho < self.min_radius() || rho > self.max_radius() {
            return Err(Error::OutOfRange {
                value: rho,
                max: self.max_radius(),
            });
        }
        Ok(self.value(rho))
    }

    fn segment(&self, rho: f64) -> (usize, f64, f64) {
        let n = self.grid.len();
        let i = self.grid.partition_point(|&g| g <= rho).clamp(1, n - 1) - 1;
        let h = self.grid[i + 1] - self.grid[i];
        (i, h, (rho - self.grid[i]) / h)
    }
}

impl RadialFn for RadialProfile {
    fn value(&self, rho: f64) -> f64 {
        if rho <= self.min_radius() {
            return self.values[0];
        }
        if rho >= self.max_radius() {
            return self.values[self.values.len() - 1];
        }
        let (i, h, t) = self.segment(rho);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.derivs[i] * h, self.derivs[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    fn derivative(&self, rho: f64) -> f64 {
        if rho <= self.min_radius() {
            return self.derivs[0];
        }
        if rho >= self.max_radius() {
            return self.derivs[self.derivs.len() - 1];
        }
        let (i, h, t) = self.segment(rho);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.derivs[i] * h, self.derivs[i + 1] * h);
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h
    }
}

/// Second-order derivative estimate on a possibly nonuniform grid.
fn fd_derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 2 {
        let d = (y[1] - y[0]) / (x[1] - x[0]);
        return vec![d, d];
    }
    let three_point = |i0: usize, at: usize| {
        let (x0, x1, x2) = (x[i0], x[i0 + 1], x[i0 + 2]);
        let xa = x[at];
        let l0 = (2.0 * xa - x1 - x2) / ((x0 - x1) * (x0 - x2));
        let l1 = (2.0 * xa - x0 - x2) / ((x1 - x0) * (x1 - x2));
        let l2 = (2.0 * xa - x0 - x1) / ((x2 - x0) * (x2 - x1));
        l0 * y[i0] + l1 * y[i0 + 1] + l2 * y[i0 + 2]
    };
    (0..n)
        .map(|i| three_point(i.saturating_sub(1).min(n - 3), i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_cubics() {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.3).collect();
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let df = |x: f64| -2.0 + 1.5 * x * x;
        let p = RadialProfile::sample(&FnProfile { f, df }, grid).unwrap();
        for i in 0..100 {
            let x = i as f64 * 0.059;
            assert!((p.value(x) - f(x)).abs() < 1e-12);
            assert!((p.derivative(x) - df(x)).abs() < 1e-11);
        }
    }

    #[test]
    fn fd_derivative_exact_for_quadratics() {
        let grid = vec![0.0, 0.1, 0.35, 0.4, 1.0];
        let vals: Vec<f64> = grid.iter().map(|x| 3.0 * x * x - x).collect();
        let p = RadialProfile::new(grid.clone(), vals, None).unwrap();
        for (x, d) in grid.iter().zip(p.derivs()) {
            assert!((d - (6.0 * x - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(RadialProfile::new(vec![0.0], vec![1.0], None).is_err());
        assert!(RadialProfile::new(vec![0.0, 0.0], vec![1.0, 1.0], None).is_err());
        assert!(RadialProfile::new(vec![0.0, 1.0], vec![1.0], None).is_err());
        let p = RadialProfile::new(vec![0.0, 1.0], vec![1.0, 2.0], None).unwrap();
        assert!(matches!(p.try_value(2.0), Err(Error::OutOfRange { .. })));
    }
}
