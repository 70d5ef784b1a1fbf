//! Gamma, log-gamma, digamma and the terminating Kummer functions
//! `M(-j, b, z)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

// Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients).
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(z: f64) -> f64 {
    LANCZOS_COEFFS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS_COEFFS[0], |acc, (i, c)| {
            acc + c / (z + (i + 1) as f64)
        })
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// Gamma function with reflection for `x < 1/2`.
pub fn gamma(x: f64) -> Result<f64> {
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x));
    }
    if x < 0.5 {
        return Ok(PI / ((PI * x).sin() * gamma(1.0 - x)?));
    }
    // exact factorials for small integers keep the table values clean
    if x == x.floor() && x <= 23.0 {
        return Ok((1..x as u64).fold(1.0, |acc, k| acc * k as f64));
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok((2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * lanczos_sum(z))
}

/// `ln |Gamma(x)|`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x));
    }
    if x < 0.5 {
        return Ok((PI / (PI * x).sin().abs()).ln() - ln_gamma(1.0 - x)?);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln())
}

/// Digamma `psi(z) = Gamma'(z)/Gamma(z)` for `z > 0`.
pub fn digamma(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("digamma needs z > 0, got {z}")));
    }
    let mut x = z;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    // asymptotic series with Bernoulli numbers B2..B12
    let inv2 = 1.0 / (x * x);
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))));
    Ok(acc + x.ln() - 0.5 / x - series)
}

/// Terminating confluent hypergeometric function `M(-j, b, z)` stored by its
/// coefficients in `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct KummerPoly {
    j: u32,
    b: f64,
    coeffs: Vec<f64>,
}

impl KummerPoly {
    pub fn new(j: u32, b: f64) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::Domain(format!(
                "Kummer parameter b = {b} must be > 0"
            )));
        }
        // c_k = (-j)_k / ((b)_k k!)
        let mut coeffs = Vec::with_capacity(j as usize + 1);
        let mut c = 1.0;
        coeffs.push(c);
        for k in 0..j {
            let kf = k as f64;
            c *= (kf - j as f64) / ((b + kf) * (kf + 1.0));
            coeffs.push(c);
        }
        Ok(Self { j, b, coeffs })
    }

    pub fn degree(&self) -> u32 {
        self.j
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    pub fn eval_deriv(&self, z: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * z + k as f64 * c)
    }

    pub fn eval_deriv2(&self, z: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(2)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * z + (k * (k - 1)) as f64 * c)
    }

    /// Real positive zeros, located by a sign scan and bisection.
    pub fn positive_roots(&self) -> Vec<f64> {
        if self.j == 0 {
            return Vec::new();
        }
        // the zeros are Laguerre zeros with alpha = b - 1; all lie below this bound
        let jf = self.j as f64;
        let upper = 4.0 * jf + 2.0 * self.b + 10.0;
        let samples = 4000 * self.j as usize;
        let dz = upper / samples as f64;
        let mut roots = Vec::new();
        let mut z0 = 0.0;
        let mut f0 = self.eval(z0);
        for i in 1..=samples {
            let z1 = i as f64 * dz;
            let f1 = self.eval(z1);
            if f0 == 0.0 && z0 > 0.0 {
                roots.push(z0);
            } else if f0 * f1 < 0.0 {
                roots.push(bisect(|z| self.eval(z), z0, z1, 1e-14));
            }
            z0 = z1;
            f0 = f1;
        }
        roots
    }
}

pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a) <= tol * m.abs().max(1.0) {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
