//! Gaussian-weighted energy
//! `E(w) = ∫ (|w'|²/2 + w²/(2(p-1)) - |w|^{p+1}/(p+1)) ρ^{N-1} e^{-ρ²/4} dρ`.
//!
//! All energies use the radial normalization: the surface measure of the
//! unit sphere is dropped everywhere, so ratios and comparisons are exact
//! while absolute values differ from the N-dimensional integral by that
//! constant factor.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::output::{csv_text, fmt_f64};
use crate::params::ProblemParams;
use crate::profile::RadialFn;
use crate::quadrature::{gaussian_cutoff, integrate_panels, WeightedQuadrature};
use crate::specfun::ln_gamma;
use crate::steady::{SteadyKind, SteadyState};

/// Gauss–Laguerre nodes of the default energy rule.
pub const ENERGY_NODES: usize = 200;
/// Radius below which singular integrands are integrated analytically.
pub const HEAD_EPS: f64 = 1e-3;

fn rule_cache() -> &'static Mutex<HashMap<u32, Arc<WeightedQuadrature>>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<WeightedQuadrature>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared 200-node rule for dimension `n`.
pub fn weighted_rule(n: u32) -> Result<Arc<WeightedQuadrature>> {
    if let Some(r) = rule_cache().lock().expect("rule lock").get(&n) {
        return Ok(Arc::clone(r));
    }
    let rule = Arc::new(WeightedQuadrature::new(n, ENERGY_NODES)?);
    rule_cache()
        .lock()
        .expect("rule lock")
        .entry(n)
        .or_insert_with(|| Arc::clone(&rule));
    Ok(rule)
}

/// Pointwise energy density without the weight.
pub fn energy_density(params: &ProblemParams, w: f64, dw: f64) -> f64 {
    let p = params.p();
    0.5 * dw * dw + w * w / (2.0 * (p - 1.0)) - w.abs().powf(p + 1.0) / (p + 1.0)
}

/// `E(w)` by adaptive quadrature; see [`energy_adaptive`].
pub fn energy<F: RadialFn>(w: &F, params: &ProblemParams) -> Result<f64> {
    energy_adaptive(w, params)
}

/// `E(w)` by the 200-node weighted Gauss–Laguerre rule. Spectrally accurate
/// only for profiles analytic in `ρ²` with fast decay; slowly decaying shot
/// profiles converge algebraically and should use [`energy`].
pub fn energy_gauss_laguerre<F: RadialFn>(w: &F, params: &ProblemParams) -> Result<f64> {
    let rule = weighted_rule(params.dim())?;
    let e = rule.integrate(|r| energy_density(params, w.value(r), w.derivative(r)));
    if !e.is_finite() {
        return Err(Error::Divergence {
            a: 0.0,
            b: f64::INFINITY,
        });
    }
    Ok(e)
}

fn weight(params: &ProblemParams, r: f64) -> f64 {
    r.powi(params.dim() as i32 - 1) * (-r * r / 4.0).exp()
}

fn panel_edges(params: &ProblemParams) -> Vec<f64> {
    let cutoff = gaussian_cutoff(params.dim_f64() - 1.0 + 4.0);
    let mut edges = vec![0.0, 0.5];
    let mut r = 1.0;
    while r < cutoff {
        edges.push(r);
        r += 1.0;
    }
    edges.push(cutoff);
    edges
}

/// `E(w)` by adaptive Gauss–Kronrod on unit panels.
pub fn energy_adaptive<F: RadialFn>(w: &F, params: &ProblemParams) -> Result<f64> {
    integrate_panels(
        |r| energy_density(params, w.value(r), w.derivative(r)) * weight(params, r),
        &panel_edges(params),
        1e-12,
        1e-300,
    )
}

/// `(1/2 - 1/(p+1)) ∫ |w|^{p+1} a dρ`, the value of `E` on steady states.
pub fn potential_form<F: RadialFn>(w: &F, params: &ProblemParams) -> Result<f64> {
    let p = params.p();
    let integral = integrate_panels(
        |r| w.value(r).abs().powf(p + 1.0) * weight(params, r),
        &panel_edges(params),
        1e-12,
        1e-300,
    )?;
    Ok((0.5 - 1.0 / (p + 1.0)) * integral)
}

/// Closed form `E(κ) = (p-1)/(2(p+1)) κ^{p+1} 2^{N-1} Γ(N/2)`.
pub fn energy_kappa(params: &ProblemParams) -> Result<f64> {
    let p = params.p();
    let nf = params.dim_f64();
    let ln_mass = (nf - 1.0) * std::f64::consts::LN_2 + ln_gamma(nf / 2.0)?;
    Ok((p - 1.0) / (2.0 * (p + 1.0)) * params.kappa().powf(p + 1.0) * ln_mass.exp())
}

fn require_supercritical(params: &ProblemParams) -> Result<()> {
    let nf = params.dim_f64();
    if !(params.xi() < nf / 2.0) {
        return Err(Error::Domain(format!(
            "E(phi_inf) diverges for p = {} <= pS (xi = {} >= N/2)",
            params.p(),
            params.xi()
        )));
    }
    Ok(())
}

/// Closed form `E(φ∞) = (1/2 - 1/(p+1)) L^{p+1} 2^{N-2ξ-1} Γ(N/2-ξ)`.
pub fn energy_singular(params: &ProblemParams) -> Result<f64> {
    require_supercritical(params)?;
    let p = params.p();
    let nf = params.dim_f64();
    let xi = params.xi();
    let l = params.l()?;
    let ln_rest = (nf - 2.0 * xi - 1.0) * std::f64::consts::LN_2 + ln_gamma(nf / 2.0 - xi)?;
    Ok((0.5 - 1.0 / (p + 1.0)) * l.powf(p + 1.0) * ln_rest.exp())
}

/// `∫_0^ε ρ^q e^{-ρ²/4} dρ` for `q > -1`, by the exponential series.
pub fn power_head(q: f64, eps: f64) -> Result<f64> {
    if !(q > -1.0) {
        return Err(Error::OriginDivergence(q));
    }
    let mut sum = 0.0;
    let mut term = eps.powf(q + 1.0);
    let x = -eps * eps / 4.0;
    for k in 0..60 {
        let c = term / (q + 2.0 * k as f64 + 1.0);
        sum += c;
        if c.abs() < 1e-18 * sum.abs() {
            break;
        }
        term *= x / (k as f64 + 1.0);
    }
    Ok(sum)
}

/// `E(φ∞)` from the full energy density: analytic head on `[0, ε]` plus
/// adaptive quadrature on `[ε, ∞)`.
pub fn energy_singular_quadrature(params: &ProblemParams) -> Result<f64> {
    require_supercritical(params)?;
    let p = params.p();
    let nf = params.dim_f64();
    let m = params.decay_exponent();
    let l = params.l()?;
    // density = A ρ^{-2m-2} + B ρ^{-2m}
    let a = 0.5 * m * m * l * l - l.powf(p + 1.0) / (p + 1.0);
    let b = l * l / (2.0 * (p - 1.0));
    let head = a * power_head(nf - 3.0 - 2.0 * m, HEAD_EPS)?
        + b * power_head(nf - 1.0 - 2.0 * m, HEAD_EPS)?;
    let mut edges = vec![HEAD_EPS, 1e-2, 0.1];
    edges.extend(panel_edges(params).into_iter().skip(2));
    let body = integrate_panels(
        |r| {
            let w = l * r.powf(-m);
            let dw = -m * w / r;
            energy_density(params, w, dw) * weight(params, r)
        },
        &edges,
        1e-13,
        1e-300,
    )?;
    Ok(head + body)
}

/// `f(ξ) = Γ(N/2-ξ)/Γ(N/2) ((N-1-ξ)/2)^ξ` on `1 < ξ < N/2`.
pub fn f_xi(n: u32, xi: f64) -> Result<f64> {
    let nf = n as f64;
    if !(xi > 0.0 && xi < nf / 2.0) {
        return Err(Error::Domain(format!("xi = {xi} outside (0, N/2)")));
    }
    let ln = ln_gamma(nf / 2.0 - xi)? - ln_gamma(nf / 2.0)? + xi * ((nf - 1.0 - xi) / 2.0).ln();
    Ok(ln.exp())
}

/// `F(p) = E(φ∞)/E(κ) = f(ξ)`.
pub fn energy_ratio_f(params: &ProblemParams) -> Result<f64> {
    require_supercritical(params)?;
    f_xi(params.dim(), params.xi())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeVerdict {
    /// `E(κ) < E(w_a) < E(φ∞)`.
    Between,
    BelowKappa,
    AboveSingular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeEntry {
    pub alpha: f64,
    pub k: Option<usize>,
    pub energy: f64,
    pub verdict: ProbeVerdict,
}

/// Computed instances of the comparison `E(w_a) < E(φ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProbe {
    pub e_kappa: f64,
    pub e_singular: f64,
    pub entries: Vec<ProbeEntry>,
}

/// Energies of the bounded atlas members against `E(κ)` and `E(φ∞)`.
pub fn energy_condition_probe(
    params: &ProblemParams,
    atlas: &[SteadyState],
) -> Result<EnergyProbe> {
    let e_kappa = energy_kappa(params)?;
    let e_singular = energy_singular(params)?;
    let mut entries = Vec::new();
    for s in atlas
        .iter()
        .filter(|s| s.kind == SteadyKind::BoundedPositive)
    {
        let e = energy(s, params)?;
        let verdict = if e <= e_kappa {
            ProbeVerdict::BelowKappa
        } else if e >= e_singular {
            ProbeVerdict::AboveSingular
        } else {
            ProbeVerdict::Between
        };
        entries.push(ProbeEntry {
            alpha: s.alpha,
            k: s.k,
            energy: e,
            verdict,
        });
    }
    Ok(EnergyProbe {
        e_kappa,
        e_singular,
        entries,
    })
}

/// One row of the ratio curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRow {
    pub n: u32,
    pub p: f64,
    pub xi: f64,
    pub f_gamma: f64,
    pub f_quadrature: f64,
}

impl RatioRow {
    pub fn abs_rel_diff(&self) -> f64 {
        ((self.f_quadrature - self.f_gamma) / self.f_gamma).abs()
    }
}

/// `F(p)` by the Gamma formula and by quadrature.
pub fn ratio_row(params: &ProblemParams) -> Result<RatioRow> {
    Ok(RatioRow {
        n: params.dim(),
        p: params.p(),
        xi: params.xi(),
        f_gamma: energy_ratio_f(params)?,
        f_quadrature: energy_singular_quadrature(params)? / energy_kappa(params)?,
    })
}

/// Ratio CSV with columns `N,p,xi,F_gamma,F_quadrature,abs_rel_diff`.
pub fn ratio_csv(rows: &[RatioRow]) -> String {
    csv_text(
        &["N", "p", "xi", "F_gamma", "F_quadrature", "abs_rel_diff"],
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                fmt_f64(r.p),
                fmt_f64(r.xi),
                fmt_f64(r.f_gamma),
                fmt_f64(r.f_quadrature),
                fmt_f64(r.abs_rel_diff()),
            ]
        }),
    )
}
