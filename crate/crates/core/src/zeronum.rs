//! Sturm zero number: sign changes of a radial function, or of the difference
//! of two, on an interval.
//!
//! Zeros of steady-state differences are simple, so sign-change counting is
//! faithful there. Points where `|f|` touches the noise floor without a sign
//! change are reported through `tangency` and never counted.

use crate::error::{Error, Result};

/// Noise floor relative to `max |f|` on the interval.
pub const TOL_ZERO: f64 = 1e-12;
/// Bisection width for crossing locations.
const CROSSING_TOL: f64 = 1e-12;
/// Near-zero factor above the noise floor that triggers an 8x rescan.
const SUSPICIOUS: f64 = 1e3;
const RESCAN: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroCount {
    pub interval: (f64, f64),
    pub count: usize,
    /// Strictly increasing, inside the open interval.
    pub crossings: Vec<f64>,
    /// Set when `f` grazes zero without changing sign.
    pub tangency: bool,
}

/// Counts sign changes of `f` on `(a, b)` from `n_coarse` cells with
/// bisection refinement.
pub fn zero_number<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n_coarse: usize) -> Result<ZeroCount> {
    if !(b > a) || n_coarse == 0 {
        return Err(Error::Domain(format!(
            "invalid interval ({a}, {b}) or cell count {n_coarse}"
        )));
    }
    let xs: Vec<f64> = (0..=n_coarse)
        .map(|i| a + (b - a) * i as f64 / n_coarse as f64)
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let scale = ys.iter().fold(0.0_f64, |m, y| m.max(y.abs()));
    let tol = TOL_ZERO * scale;
    if !(ys[0].abs() > tol) {
        return Err(Error::EndpointZero(a));
    }
    if !(ys[n_coarse].abs() > tol) {
        return Err(Error::EndpointZero(b));
    }
    count_on_samples(&f, &xs, &ys, tol, true)
}

/// Zero number of `f - g`; rejects numerically identical functions.
pub fn intersection_number<F, G>(f: F, g: G, a: f64, b: f64, n_coarse: usize) -> Result<ZeroCount>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if !(b > a) || n_coarse == 0 {
        return Err(Error::Domain(format!(
            "invalid interval ({a}, {b}) or cell count {n_coarse}"
        )));
    }
    let mut scale = 0.0_f64;
    let mut diff = 0.0_f64;
    for i in 0..=n_coarse {
        let x = a + (b - a) * i as f64 / n_coarse as f64;
        let (fx, gx) = (f(x), g(x));
        scale = scale.max(fx.abs()).max(gx.abs());
        diff = diff.max((fx - gx).abs());
    }
    if diff <= TOL_ZERO * scale {
        return Err(Error::IdenticalProfiles);
    }
    zero_number(|x| f(x) - g(x), a, b, n_coarse)
}

fn count_on_samples<F: Fn(f64) -> f64>(
    f: &F,
    xs: &[f64],
    ys: &[f64],
    tol: f64,
    rescan: bool,
) -> Result<ZeroCount> {
    let interval = (xs[0], xs[xs.len() - 1]);
    let mut crossings = Vec::new();
    let mut tangency = false;
    // last sample with |f| above the noise floor
    let mut last = 0usize;
    let mut touched = false;
    for i in 1..xs.len() {
        if ys[i].abs() <= tol {
            touched = true;
            continue;
        }
        if (ys[i] > 0.0) != (ys[last] > 0.0) {
            crossings.push(bisect_sign(f, xs[last], xs[i], ys[last] > 0.0));
        } else if touched {
            tangency = true;
        } else if rescan && i == last + 1 && ys[last].abs().min(ys[i].abs()) < SUSPICIOUS * tol {
            let sub_x: Vec<f64> = (0..=RESCAN)
                .map(|k| xs[last] + (xs[i] - xs[last]) * k as f64 / RESCAN as f64)
                .collect();
            let sub_y: Vec<f64> = sub_x.iter().map(|&x| f(x)).collect();
            let sub = count_on_samples(f, &sub_x, &sub_y, tol, false)?;
            crossings.extend(sub.crossings);
            tangency |= sub.tangency;
        }
        touched = false;
        last = i;
    }
    Ok(ZeroCount {
        interval,
        count: crossings.len(),
        crossings,
        tangency,
    })
}

fn bisect_sign<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, lo_positive: bool) -> f64 {
    while hi - lo > CROSSING_TOL * lo.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sign changes of a sampled sequence, skipping entries with `|v| <= tol`.
pub fn grid_sign_changes(values: &[f64], tol: f64) -> usize {
    let mut count = 0;
    let mut prev: Option<bool> = None;
    for &v in values {
        if v.abs() <= tol || !v.is_finite() {
            continue;
        }
        let s = v > 0.0;
        if let Some(p) = prev {
            if p != s {
                count += 1;
            }
        }
        prev = Some(s);
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cosine_on_0_10() {
        let z = zero_number(f64::cos, 0.0, 10.0, 200).unwrap();
        assert_eq!(z.count, 3);
        for (c, e) in z.crossings.iter().zip([0.5 * PI, 1.5 * PI, 2.5 * PI]) {
            assert!((c - e).abs() < 1e-11);
        }
        assert!(!z.tangency);
    }

    #[test]
    fn endpoint_zero_rejected() {
        assert_eq!(
            zero_number(f64::sin, 0.0, 1.0, 10).unwrap_err(),
            Error::EndpointZero(0.0)
        );
    }

    #[test]
    fn identical_rejected() {
        assert_eq!(
            intersection_number(f64::exp, f64::exp, 0.0, 1.0, 10).unwrap_err(),
            Error::IdenticalProfiles
        );
    }

    #[test]
    fn double_root_inside_one_cell_found_by_rescan() {
        // two crossings 1e-3 apart; one coarse cell sees equal signs but a tiny value
        let f = |x: f64| (x - 0.5) * (x - 0.5 - 1e-9) + 1e-20;
        let z = zero_number(f, 0.0, 1.0, 4).unwrap();
        assert!(z.count == 2 || z.tangency, "{z:?}");
    }

    #[test]
    fn tangency_flagged_not_counted() {
        let f = |x: f64| (x - 0.5).powi(2);
        let z = zero_number(f, 0.0, 1.0, 10).unwrap();
        assert_eq!(z.count, 0);
        assert!(z.tangency);
    }

    #[test]
    fn grid_counter() {
        assert_eq!(grid_sign_changes(&[1.0, -1.0, 0.0, -2.0, 3.0], 0.0), 2);
        assert_eq!(grid_sign_changes(&[1.0, 1e-20, -1e-20, 1.0], 1e-15), 0);
    }
}
