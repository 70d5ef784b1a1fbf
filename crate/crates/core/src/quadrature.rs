//! Quadrature rules: Gauss–Legendre panels, adaptive Gauss–Kronrod (7/15),
//! and generalized Gauss–Laguerre rules for `t^alpha e^{-t}`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::specfun::ln_gamma;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WEIGHTS_G: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WEIGHTS_K[7] * fc;
    let mut g = GK_WEIGHTS_G[3] * fc;
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let s = f(c - dx) + f(c + dx);
        k += GK_WEIGHTS_K[i] * s;
        if i % 2 == 1 {
            g += GK_WEIGHTS_G[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Panel evaluations allowed per adaptive integral.
const MAX_PANELS: usize = 200_000;

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rtol: f64, atol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut stack = vec![(a, b, 0u32)];
    let (whole, _) = gk15(&f, a, b);
    let mut total = 0.0;
    let mut comp = 0.0;
    let scale_guess = whole.abs();
    let mut budget = MAX_PANELS;
    while let Some((lo, hi, depth)) = stack.pop() {
        budget -= 1;
        if budget == 0 {
            return Err(Error::Divergence { a, b });
        }
        let (val, err) = gk15(&f, lo, hi);
        if !val.is_finite() {
            return Err(Error::Divergence { a, b });
        }
        let local_tol = (rtol * scale_guess).max(atol) * ((hi - lo) / (b - a)).abs().sqrt();
        if err <= local_tol || depth >= 48 || (hi - lo).abs() < 1e-15 * lo.abs().max(1.0) {
            if depth >= 48 && err > 1e3 * local_tol {
                return Err(Error::Divergence { a: lo, b: hi });
            }
            // Kahan summation keeps the many panels from drifting
            let y = val - comp;
            let t = total + y;
            comp = (t - total) - y;
            total = t;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(total)
}

/// Integrate over consecutive panels `[edges[i], edges[i+1]]`.
pub fn integrate_panels<F: Fn(f64) -> f64>(
    f: F,
    edges: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<f64> {
    edges
        .windows(2)
        .map(|w| integrate(&f, w[0], w[1], rtol, atol))
        .sum()
}

/// Generalized Gauss–Laguerre rule for `\int_0^\infty g(t) t^alpha e^{-t} dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLaguerre {
    pub alpha: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLaguerre {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if !(alpha > -1.0) || n == 0 {
            return Err(Error::Domain(format!(
                "Gauss-Laguerre needs n >= 1 and alpha > -1 (n = {n}, alpha = {alpha})"
            )));
        }
        // Golub–Welsch for starting values, then Newton on the three-term recurrence.
        let jac = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0 * i as f64 + alpha + 1.0
            } else if i + 1 == j || j + 1 == i {
                let k = i.max(j) as f64;
                (k * (k + alpha)).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jac)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let ln_norm = ln_gamma(n as f64 + alpha + 1.0)? - ln_gamma(n as f64 + 1.0)?;
        let mut weights = Vec::with_capacity(n);
        for x in nodes.iter_mut() {
            for _ in 0..8 {
                let (ln_n, ln_nm1, sign_ratio) = laguerre_pair(n, alpha, *x);
                // L_n' = (n L_n - (n+alpha) L_{n-1}) / x ; Newton step L_n / L_n'
                let ratio = sign_ratio * (ln_nm1 - ln_n).exp(); // L_{n-1}/L_n
                let denom = n as f64 - (n as f64 + alpha) * ratio;
                if denom == 0.0 || !denom.is_finite() {
                    break;
                }
                let dx = *x / denom;
                *x -= dx;
                if dx.abs() <= 1e-15 * x.abs() {
                    break;
                }
            }
            let (_, ln_nm1, _) = laguerre_pair(n, alpha, *x);
            // w = Gamma(n+alpha+1)/(n!) * x / ((n+alpha)^2 L_{n-1}(x)^2)
            let ln_w = ln_norm + x.ln() - 2.0 * ((n as f64 + alpha).ln() + ln_nm1);
            weights.push(ln_w.exp());
        }
        Ok(Self {
            alpha,
            nodes,
            weights,
        })
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| if w == 0.0 { 0.0 } else { w * g(t) })
            .sum()
    }
}

/// Returns `(ln|L_n|, ln|L_{n-1}|, sign(L_{n-1}/L_n))` at `x`, with running
/// rescaling so large `x` does not overflow.
fn laguerre_pair(n: usize, alpha: f64, x: f64) -> (f64, f64, f64) {
    let mut p0 = 1.0f64;
    let mut p1 = 1.0 + alpha - x;
    let mut ln_scale = 0.0;
    if n == 1 {
        return (p1.abs().ln(), 0.0, (p0 / p1).signum());
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0 + alpha - x) * p1 - (kf + alpha) * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
        let m = p1.abs().max(p0.abs());
        if m > 1e100 {
            p0 /= m;
            p1 /= m;
            ln_scale += m.ln();
        }
    }
    (
        p1.abs().ln() + ln_scale,
        p0.abs().ln() + ln_scale,
        (p0 / p1).signum(),
    )
}

/// Radial weighted rule for `\int_0^\infty h(rho) rho^{N-1} e^{-rho^2/4} drho`
/// built from the substitution `t = rho^2/4`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedQuadrature {
    pub dim: u32,
    pub order: usize,
    pub rho: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedQuadrature {
    /// `n_nodes` Gauss–Laguerre nodes; exact for `rho^{2m}` with `m <= 2 n_nodes - 1`.
    pub fn new(dim: u32, n_nodes: usize) -> Result<Self> {
        let gl = GaussLaguerre::new(n_nodes, dim as f64 / 2.0 - 1.0)?;
        let scale = 2f64.powi(dim as i32 - 1);
        Ok(Self {
            dim,
            order: 2 * (2 * n_nodes - 1),
            rho: gl.nodes.iter().map(|t| 2.0 * t.sqrt()).collect(),
            weights: gl.weights.iter().map(|w| w * scale).collect(),
        })
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, h: F) -> f64 {
        self.rho
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| if w == 0.0 { 0.0 } else { w * h(r) })
            .sum()
    }

    /// Closed form `\int rho^{2m} rho^{N-1} e^{-rho^2/4} = 2^{N+2m-1} Gamma(N/2+m)`.
    pub fn moment(dim: u32, two_m: u32) -> Result<f64> {
        let m = two_m as f64 / 2.0;
        let nf = dim as f64;
        Ok(((nf + 2.0 * m - 1.0) * std::f64::consts::LN_2 + ln_gamma(nf / 2.0 + m)?).exp())
    }
}

/// Largest radius worth integrating against the Gaussian weight: beyond it
/// `rho^{N-1+extra} e^{-rho^2/4}` is below `1e-40` of its peak.
pub fn gaussian_cutoff(power: f64) -> f64 {
    let pw = power.max(0.0);
    let mut r = 2.0 * (pw.max(1.0)).sqrt() + 2.0;
    let peak_ln = if pw > 0.0 {
        pw * (2.0 * pw).sqrt().ln() - pw / 2.0
    } else {
        0.0
    };
    while pw * r.ln() - r * r / 4.0 > peak_ln - 92.0 {
        r += 0.5;
    }
    r
}
