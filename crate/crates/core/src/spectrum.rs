//! Linearization at the singular steady state:
//! `A f = f'' + ((N-1)/ρ - ρ/2) f' + (p L^{p-1}/ρ² - 1/(p-1)) f`
//! on `L²(ρ^{N-1} e^{-ρ²/4} dρ)`, its eigenpairs
//! `μ_j`, `ϑ_j = ĉ_j ρ^β M_j(ρ²/4)`, and the projections of rescaled
//! steady-state deficits onto the two leading modes.

use crate::error::{Error, Result};
use crate::output::{csv_text, fmt_f64};
use crate::params::ProblemParams;
use crate::quadrature::{gaussian_cutoff, integrate, integrate_panels, GaussLaguerre};
use crate::specfun::{ln_gamma, KummerPoly};
use crate::steady::{physical_family, PhysicalFamily};

/// Largest supported eigenfunction index.
pub const JMAX_CAP: u32 = 12;
/// Radius of the analytic power-law head in inner products.
pub const HEAD_EPS: f64 = 1e-3;

/// Analytic eigenpairs of `A` with the weighted inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrame {
    params: ProblemParams,
    beta: f64,
    /// Kummer parameter `b = β + N/2`.
    b: f64,
    mu: Vec<f64>,
    kummer: Vec<KummerPoly>,
    c_hat: Vec<f64>,
}

impl SpectralFrame {
    /// Eigenpairs `0..=jmax`, with `ĉ_j` obtained by Gauss–Laguerre
    /// quadrature of `ϑ_j²`.
    pub fn new(params: &ProblemParams, jmax: u32) -> Result<Self> {
        if jmax > JMAX_CAP {
            return Err(Error::Domain(format!("jmax = {jmax} exceeds {JMAX_CAP}")));
        }
        if !(params.discriminant() > 0.0) {
            return Err(Error::Domain(format!(
                "the spectral frame needs p > pJL (p = {})",
                params.p()
            )));
        }
        let beta = params.beta()?;
        let nf = params.dim_f64();
        let b = beta + nf / 2.0;
        if !(b > 0.0) {
            return Err(Error::Domain(format!(
                "integrability guard beta + N/2 = {b} <= 0"
            )));
        }
        let gl = GaussLaguerre::new(2 * JMAX_CAP as usize + 4, b - 1.0)?;
        let ln_pref = (2.0 * beta + nf - 1.0) * std::f64::consts::LN_2;
        let mut mu = Vec::new();
        let mut kummer = Vec::new();
        let mut c_hat = Vec::new();
        for j in 0..=jmax {
            let k = KummerPoly::new(j, b)?;
            let norm2 = ln_pref.exp() * gl.integrate(|t| k.eval(t).powi(2));
            mu.push(params.mu(j)?);
            c_hat.push(norm2.sqrt().recip());
            kummer.push(k);
        }
        Ok(Self {
            params: *params,
            beta,
            b,
            mu,
            kummer,
            c_hat,
        })
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn jmax(&self) -> u32 {
        self.mu.len() as u32 - 1
    }

    pub fn mu(&self, j: u32) -> f64 {
        self.mu[j as usize]
    }

    pub fn c_hat(&self, j: u32) -> f64 {
        self.c_hat[j as usize]
    }

    /// Closed form `ĉ_j = (2^{2β+N-1} j! Γ(b)² / Γ(b+j))^{-1/2}`.
    pub fn c_hat_closed(&self, j: u32) -> Result<f64> {
        let nf = self.params.dim_f64();
        let ln = (2.0 * self.beta + nf - 1.0) * std::f64::consts::LN_2
            + ln_gamma(j as f64 + 1.0)?
            + 2.0 * ln_gamma(self.b)?
            - ln_gamma(self.b + j as f64)?;
        Ok((-0.5 * ln).exp())
    }

    pub fn theta(&self, j: u32, rho: f64) -> f64 {
        let k = &self.kummer[j as usize];
        self.c_hat[j as usize] * rho.powf(self.beta) * k.eval(rho * rho / 4.0)
    }

    pub fn theta_deriv(&self, j: u32, rho: f64) -> f64 {
        let k = &self.kummer[j as usize];
        let z = rho * rho / 4.0;
        let be = self.beta;
        self.c_hat[j as usize]
            * (be * rho.powf(be - 1.0) * k.eval(z) + 0.5 * rho.powf(be + 1.0) * k.eval_deriv(z))
    }

    pub fn theta_deriv2(&self, j: u32, rho: f64) -> f64 {
        let k = &self.kummer[j as usize];
        let z = rho * rho / 4.0;
        let be = self.beta;
        let rb = rho.powf(be);
        self.c_hat[j as usize]
            * (be * (be - 1.0) * rb / (rho * rho) * k.eval(z)
                + (be + 0.5) * rb * k.eval_deriv(z)
                + 0.25 * rb * rho * rho * k.eval_deriv2(z))
    }

    /// Positive zeros of `ϑ_j`.
    pub fn zeros(&self, j: u32) -> Vec<f64> {
        self.kummer[j as usize]
            .positive_roots()
            .into_iter()
            .map(|z| 2.0 * z.sqrt())
            .collect()
    }

    /// Potential `p L^{p-1}/ρ² - 1/(p-1)`.
    pub fn potential(&self, rho: f64) -> f64 {
        let p = self.params.p();
        p * self.params.l_pow() / (rho * rho) - 1.0 / (p - 1.0)
    }

    /// `(A f)(ρ)` from `f, f', f''` at `ρ > 0`.
    pub fn apply_a(&self, rho: f64, f: f64, df: f64, d2f: f64) -> f64 {
        let nf = self.params.dim_f64();
        d2f + ((nf - 1.0) / rho - rho / 2.0) * df + self.potential(rho) * f
    }

    /// `⟨f, g⟩ = ∫ f g ρ^{N-1} e^{-ρ²/4} dρ` with an analytic power-law head
    /// on `[0, ε]`.
    pub fn inner<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(&self, f: F, g: G) -> Result<f64> {
        let n1 = self.params.dim() as i32 - 1;
        let h = |r: f64| f(r) * g(r) * r.powi(n1) * (-r * r / 4.0).exp();
        weighted_head_and_body(h, self.params.dim_f64(), 0.0)
    }

    /// `ξ_0 = ⟨w, ϑ_0⟩`, `ξ_1 = ⟨w, ϑ_1⟩` and `‖w - ξ_0 ϑ_0 - ξ_1 ϑ_1‖`.
    pub fn project_coeffs<F: Fn(f64) -> f64>(&self, w: F) -> Result<(f64, f64, f64)> {
        if self.jmax() < 1 {
            return Err(Error::Domain("projection needs jmax >= 1".into()));
        }
        let xi0 = self.inner(&w, |r| self.theta(0, r))?;
        let xi1 = self.inner(&w, |r| self.theta(1, r))?;
        let norm2 = self.inner(&w, &w)?;
        let rem = |r: f64| w(r) - xi0 * self.theta(0, r) - xi1 * self.theta(1, r);
        let n1 = self.params.dim() as i32 - 1;
        // the remainder may be pure rounding noise, so its floor comes from ‖w‖²
        let tail2 = weighted_head_and_body(
            |r| rem(r).powi(2) * r.powi(n1) * (-r * r / 4.0).exp(),
            self.params.dim_f64(),
            1e-15 * norm2,
        )?;
        Ok((xi0, xi1, tail2.max(0.0).sqrt()))
    }
}

/// `∫_0^∞ h` for an integrand behaving like a power `ρ^q` at the origin.
fn weighted_head_and_body<H: Fn(f64) -> f64>(h: H, nf: f64, atol_floor: f64) -> Result<f64> {
    let (h1, h2) = (h(HEAD_EPS), h(0.5 * HEAD_EPS));
    let head = if h1 == 0.0 && h2 == 0.0 {
        0.0
    } else if h1 * h2 > 0.0 {
        let q = (h1 / h2).log2();
        if !(q > -1.0) {
            return Err(Error::OriginDivergence(q));
        }
        h1 * HEAD_EPS / (q + 1.0)
    } else {
        integrate(&h, 0.0, HEAD_EPS, 1e-10, 1e-300)?
    };
    let cutoff = gaussian_cutoff(nf + 20.0);
    let mut edges = vec![HEAD_EPS, 1e-2, 0.1, 0.5, 1.0];
    let mut r = 2.0;
    while r < cutoff {
        edges.push(r);
        r += 1.0;
    }
    edges.push(cutoff);
    // absolute floor tied to the size of |h| so cancelling integrands terminate
    let scale = head.abs() + rough_abs_integral(&h, &edges);
    let atol = (1e-15 * scale).max(atol_floor) / edges.len() as f64;
    Ok(head + integrate_panels(h, &edges, 1e-12, atol)?)
}

/// Midpoint estimate of `∫|h|` with 32 samples per panel.
fn rough_abs_integral<H: Fn(f64) -> f64>(h: &H, edges: &[f64]) -> f64 {
    edges
        .windows(2)
        .map(|w| {
            let dx = (w[1] - w[0]) / 32.0;
            (0..32)
                .map(|i| h(w[0] + (i as f64 + 0.5) * dx).abs())
                .sum::<f64>()
                * dx
        })
        .sum()
}

/// Boundary treatment of [`discretize_a`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Dirichlet,
}

/// Symmetric tridiagonal discretization of `A` in the weighted inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    /// Eigenvalues strictly below `x`, by the Sturm sequence of `T - x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.diag.len() {
            let o2 = if i == 0 {
                0.0
            } else {
                self.off[i - 1] * self.off[i - 1]
            };
            d = self.diag[i] - x - if i == 0 { 0.0 } else { o2 / d };
            if d == 0.0 {
                d = -f64::EPSILON * (self.diag[i].abs() + x.abs()).max(1e-300);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `count` largest eigenvalues in decreasing order.
    pub fn leading_eigenvalues(&self, count: usize) -> Vec<f64> {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (1..=count.min(n))
            .map(|k| {
                // k-th largest: smallest x with at most k-1 eigenvalues above it
                let (mut a, mut b) = (lo, hi);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if b - a <= 1e-14 * m.abs().max(1.0) {
                        break;
                    }
                    if n - self.count_below(m) >= k {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                0.5 * (a + b)
            })
            .collect()
    }
}

/// Finite-difference matrix of `A` on `n_points` interior nodes of
/// `[rho_min, rho_max]`, symmetrized by `√a`.
pub fn discretize_a(
    frame: &SpectralFrame,
    rho_min: f64,
    rho_max: f64,
    n_points: usize,
    _bc: Boundary,
) -> Result<Tridiagonal> {
    if !(rho_min > 0.0 && rho_max > rho_min) || n_points < 3 {
        return Err(Error::Domain(format!(
            "need 0 < rho_min < rho_max and >= 3 points (got [{rho_min}, {rho_max}], {n_points})"
        )));
    }
    let nf = frame.params.dim_f64();
    let h = (rho_max - rho_min) / (n_points + 1) as f64;
    let ln_a = |r: f64| (nf - 1.0) * r.ln() - r * r / 4.0;
    let node = |i: usize| rho_min + i as f64 * h;
    let h2 = h * h;
    let mut diag = Vec::with_capacity(n_points);
    let mut off = Vec::with_capacity(n_points - 1);
    for i in 1..=n_points {
        let r = node(i);
        let la = ln_a(r);
        let lm = ln_a(r - 0.5 * h);
        let lp = ln_a(r + 0.5 * h);
        diag.push(-((lp - la).exp() + (lm - la).exp()) / h2 + frame.potential(r));
        if i < n_points {
            off.push((lp - 0.5 * (la + ln_a(node(i + 1)))).exp() / h2);
        }
    }
    Ok(Tridiagonal { diag, off })
}

/// `ψ_α(ρ, s) = e^{-s/(p-1)} φ_α(e^{-s/2} ρ)`.
pub fn rescaled_steady(params: &ProblemParams, alpha: f64, rho: f64, s: f64) -> Result<f64> {
    let fam = physical_family(params)?;
    rescaled_with(&fam, alpha, rho, s)
}

pub(crate) fn rescaled_with(fam: &PhysicalFamily, alpha: f64, rho: f64, s: f64) -> Result<f64> {
    let p = fam.params().p();
    Ok((-s / (p - 1.0)).exp() * fam.phi(alpha, (-s / 2.0).exp() * rho)?)
}

/// `φ∞(ρ) - ψ_α(ρ, s)` without cancellation.
pub fn rescaled_deficit(fam: &PhysicalFamily, alpha: f64, rho: f64, s: f64) -> Result<f64> {
    let p = fam.params().p();
    Ok((-s / (p - 1.0)).exp() * fam.deficit(alpha, (-s / 2.0).exp() * rho)?)
}

/// One row of the rate diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub s: f64,
    pub xi0: f64,
    pub xi1: f64,
    pub tail_norm: f64,
    /// `ln(b(α)/ĉ_0) + μ_0 s`.
    pub predicted_log_xi0: f64,
}

impl RateRow {
    pub fn log_xi0(&self) -> f64 {
        self.xi0.ln()
    }
}

/// Projections of `φ∞ - ψ_α(·, s)` onto `ϑ_0, ϑ_1` for each `s`.
pub fn rate_series(frame: &SpectralFrame, alpha: f64, s_values: &[f64]) -> Result<Vec<RateRow>> {
    let fam = physical_family(frame.params())?;
    let b = fam.fit_b(alpha, 1000.0 / alpha.powf((frame.params.p() - 1.0) / 2.0))?;
    let pred0 = (b / frame.c_hat(0)).ln();
    let mu0 = frame.mu(0);
    s_values
        .iter()
        .map(|&s| {
            // past the family's domain the deficit is below any double-precision weight
            let w = |r: f64| rescaled_deficit(&fam, alpha, r, s).unwrap_or(0.0);
            let (xi0, xi1, tail_norm) = frame.project_coeffs(w)?;
            Ok(RateRow {
                s,
                xi0,
                xi1,
                tail_norm,
                predicted_log_xi0: pred0 + mu0 * s,
            })
        })
        .collect()
}

/// Rate CSV with columns `s,xi0,xi1,tail_norm,log_xi0,predicted_log_xi0`.
pub fn rate_csv(rows: &[RateRow]) -> String {
    csv_text(
        &[
            "s",
            "xi0",
            "xi1",
            "tail_norm",
            "log_xi0",
            "predicted_log_xi0",
        ],
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.s),
                fmt_f64(r.xi0),
                fmt_f64(r.xi1),
                fmt_f64(r.tail_norm),
                fmt_f64(r.log_xi0()),
                fmt_f64(r.predicted_log_xi0),
            ]
        }),
    )
}
