//! Steady-state atlas: shooting in either frame, the search for bounded
//! self-similar profiles with a prescribed intersection number against the
//! singular steady state, and the physical family `phi_alpha`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::odecore::{
    integrate, DenseSolution, Frame, RadialIvp, RadialSolution, StepControl, Stop, Termination,
    DEFAULT_ATOL, DEFAULT_RTOL,
};
use crate::output::{csv_text, fmt_f64, fmt_opt};
use crate::params::{ExtReal, ProblemParams};
use crate::profile::RadialFn;
use crate::zeronum::{zero_number, ZeroCount};

/// Lower end of every intersection count against the singular steady state.
pub const SINGULAR_CUTOFF: f64 = 1e-2;
/// Default shooting radius in the self-similar frame.
pub const DEFAULT_RMAX_SELFSIMILAR: f64 = 40.0;
/// Default shooting radius in the physical frame.
pub const DEFAULT_RMAX_PHYSICAL: f64 = 200.0;
/// Coarse cells used for intersection counts.
pub const COUNT_CELLS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SteadyKind {
    BoundedPositive,
    HitsZero,
    SingularReference,
}

impl SteadyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SteadyKind::BoundedPositive => "bounded_positive",
            SteadyKind::HitsZero => "hits_zero",
            SteadyKind::SingularReference => "singular_reference",
        }
    }
}

/// Far-field expansion `rho^{-m} (c0 + c1 rho^{-2} + c2 rho^{-4})` of a
/// bounded self-similar profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticTail {
    pub m: f64,
    pub coeffs: [f64; 3],
}

impl AsymptoticTail {
    pub fn value(&self, rho: f64) -> f64 {
        let [c0, c1, c2] = self.coeffs;
        let r2 = rho.powi(-2);
        rho.powf(-self.m) * (c0 + r2 * (c1 + r2 * c2))
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        let [c0, c1, c2] = self.coeffs;
        let m = self.m;
        -(m * c0 * rho.powf(-m - 1.0)
            + (m + 2.0) * c1 * rho.powf(-m - 3.0)
            + (m + 4.0) * c2 * rho.powf(-m - 5.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SteadyProfile {
    Shot(RadialSolution),
    Constant(f64),
    Singular,
}

/// Result of a shot. For bounded states the profile is trusted up to
/// `trusted_radius` and continued by the fitted tail beyond it.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub params: ProblemParams,
    pub alpha: f64,
    pub frame: Frame,
    pub profile: SteadyProfile,
    pub kind: SteadyKind,
    /// Intersection number with the singular steady state.
    pub k: Option<usize>,
    pub rho_alpha: Option<f64>,
    pub c_a: Option<f64>,
    pub trusted_radius: f64,
    pub tail: Option<AsymptoticTail>,
    pub tangency: bool,
}

impl SteadyState {
    /// The singular steady state as an atlas entry.
    pub fn singular(params: ProblemParams, frame: Frame) -> Result<Self> {
        let l = params.l()?;
        Ok(Self {
            params,
            alpha: f64::INFINITY,
            frame,
            profile: SteadyProfile::Singular,
            kind: SteadyKind::SingularReference,
            k: Some(0),
            rho_alpha: None,
            c_a: Some(l),
            trusted_radius: f64::INFINITY,
            tail: None,
            tangency: false,
        })
    }

    pub fn is_constant(&self) -> bool {
        self.frame == Frame::SelfSimilar && self.alpha == self.params.kappa()
    }
}

impl RadialFn for SteadyState {
    fn value(&self, rho: f64) -> f64 {
        match &self.profile {
            SteadyProfile::Singular => self.params.phi_inf(rho).unwrap_or(f64::NAN),
            SteadyProfile::Constant(c) => *c,
            SteadyProfile::Shot(sol) => match &self.tail {
                Some(t) if rho > self.trusted_radius => t.value(rho),
                _ => sol.value(rho),
            },
        }
    }

    fn derivative(&self, rho: f64) -> f64 {
        match &self.profile {
            SteadyProfile::Singular => self.params.phi_inf_deriv(rho).unwrap_or(f64::NAN),
            SteadyProfile::Constant(_) => 0.0,
            SteadyProfile::Shot(sol) => match &self.tail {
                Some(t) if rho > self.trusted_radius => t.derivative(rho),
                _ => sol.derivative(rho),
            },
        }
    }
}

/// Zero number of `w - phi_inf` on `(a, b)`.
pub fn count_vs_singular<F: RadialFn>(
    params: &ProblemParams,
    w: &F,
    a: f64,
    b: f64,
    n_coarse: usize,
) -> Result<ZeroCount> {
    let l = params.l()?;
    let m = params.decay_exponent();
    zero_number(|r| w.value(r) - l * r.powf(-m), a, b, n_coarse)
}

fn shot_solution(
    params: &ProblemParams,
    alpha: f64,
    frame: Frame,
    rmax: f64,
) -> Result<RadialSolution> {
    let sol = RadialIvp::new(*params, frame, alpha).integrate(rmax, DEFAULT_RTOL, DEFAULT_ATOL)?;
    match sol.termination {
        Termination::BlewUp => Err(Error::Inconclusive {
            alpha,
            reason: format!(
                "|w| exceeded the blowup level near rho = {}",
                sol.max_radius()
            ),
        }),
        Termination::StiffFailure => Err(Error::StepUnderflow {
            t: sol.max_radius(),
            h: 0.0,
        }),
        _ => Ok(sol),
    }
}

/// Integrates from the origin, classifies the outcome, counts intersections
/// with the singular steady state and extracts `c_a` for decaying profiles.
pub fn shoot(params: &ProblemParams, alpha: f64, frame: Frame, rmax: f64) -> Result<SteadyState> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "center value {alpha} must be positive"
        )));
    }
    if !(rmax > 2.0 * SINGULAR_CUTOFF) {
        return Err(Error::Domain(format!("rmax = {rmax} too small")));
    }
    let has_l = params.l().is_ok();
    if frame == Frame::SelfSimilar && alpha == params.kappa() {
        // constant steady state, exact; never shot
        let mut st = SteadyState {
            params: *params,
            alpha,
            frame,
            profile: SteadyProfile::Constant(alpha),
            kind: SteadyKind::BoundedPositive,
            k: None,
            rho_alpha: None,
            c_a: None,
            trusted_radius: f64::INFINITY,
            tail: None,
            tangency: false,
        };
        if has_l {
            let z = count_vs_singular(params, &st, SINGULAR_CUTOFF, rmax, COUNT_CELLS)?;
            st.k = Some(z.count);
        }
        return Ok(st);
    }
    let sol = shot_solution(params, alpha, frame, rmax)?;
    let mut st = SteadyState {
        params: *params,
        alpha,
        frame,
        profile: SteadyProfile::Shot(sol.clone()),
        kind: SteadyKind::HitsZero,
        k: None,
        rho_alpha: None,
        c_a: None,
        trusted_radius: sol.max_radius(),
        tail: None,
        tangency: !sol.tangencies.is_empty(),
    };

    if let Some(rz) = sol.zero_radius() {
        st.rho_alpha = Some(rz);
        if has_l {
            let a = SINGULAR_CUTOFF.min(0.5 * rz);
            let z = count_vs_singular(params, &sol, a, rz, COUNT_CELLS)?;
            st.tangency |= z.tangency;
            st.k = Some(z.count);
        }
        return Ok(st);
    }

    // reached rmax: require a clean positive power-law decay
    let m = params.decay_exponent();
    let (lo, hi) = (0.6 * rmax, rmax);
    let n_fit = 64;
    let radii: Vec<f64> = (0..n_fit)
        .map(|i| lo + (hi - lo) * i as f64 / (n_fit - 1) as f64)
        .collect();
    let decaying = radii
        .iter()
        .all(|&r| sol.value(r) > 0.0 && sol.derivative(r) < 0.0);
    if !decaying {
        return Err(Error::Inconclusive {
            alpha,
            reason: "profile neither crosses zero nor decays monotonically by rmax".into(),
        });
    }
    let c = match frame {
        Frame::SelfSimilar => {
            let tail = fit_tail(&sol, m, lo, hi)?;
            st.tail = Some(tail);
            tail.coeffs[0]
        }
        Frame::Physical => fit_physical_amplitude(params, &sol, lo, hi)?,
    };
    if !(c > 0.0) {
        return Err(Error::Inconclusive {
            alpha,
            reason: format!("fitted amplitude {c} is not positive"),
        });
    }
    st.kind = SteadyKind::BoundedPositive;
    st.c_a = Some(c);
    if has_l {
        let z = count_vs_singular(params, &sol, SINGULAR_CUTOFF, rmax, COUNT_CELLS)?;
        st.tangency |= z.tangency;
        st.k = Some(z.count);
    }
    Ok(st)
}

/// Least-squares fit of `w rho^m ≈ c0 + c1 rho^{-2} + c2 rho^{-4}` on `[lo, hi]`.
pub fn fit_tail<F: RadialFn>(w: &F, m: f64, lo: f64, hi: f64) -> Result<AsymptoticTail> {
    let n = 64;
    let mut rows = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let r = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        rows.push(vec![1.0, r.powi(-2), r.powi(-4)]);
        ys.push(w.value(r) * r.powf(m));
    }
    let (c, resid) = least_squares(&rows, &ys)?;
    if !(resid <= 1e-5 * c[0].abs()) {
        return Err(Error::IllConditioned(format!(
            "tail fit residual {resid:e} relative to amplitude {}",
            c[0]
        )));
    }
    Ok(AsymptoticTail {
        m,
        coeffs: [c[0], c[1], c[2]],
    })
}

/// Amplitude of `r^m w(r)` for a physical-frame profile, removing the leading
/// linearized correction.
fn fit_physical_amplitude<F: RadialFn>(
    params: &ProblemParams,
    w: &F,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let m = params.decay_exponent();
    let nf = params.dim_f64();
    let disc = params.discriminant();
    let basis: Box<dyn Fn(f64) -> Vec<f64>> = if disc > 1e-12 {
        let beta = params.beta()?;
        let g = beta + m;
        Box::new(move |r: f64| vec![1.0, r.powf(g), r.powf(2.0 * g)])
    } else if disc >= -1e-12 {
        let g = -(nf - 2.0) / 2.0 + m;
        Box::new(move |r: f64| vec![1.0, r.powf(g), r.powf(g) * r.ln()])
    } else {
        let g = -(nf - 2.0) / 2.0 + m;
        let om = (-disc).sqrt() / 2.0;
        Box::new(move |r: f64| {
            let a = r.powf(g);
            vec![1.0, a * (om * r.ln()).cos(), a * (om * r.ln()).sin()]
        })
    };
    let n = 64;
    let mut rows = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let r = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        rows.push(basis(r));
        ys.push(w.value(r) * r.powf(m));
    }
    let (c, _) = least_squares(&rows, &ys)?;
    Ok(c[0])
}

/// Outcome of [`find_ak`].
#[derive(Debug, Clone, PartialEq)]
pub enum AkSearch {
    Found(Box<SteadyState>),
    NotFound { bracket: (f64, f64), reason: String },
}

/// Self-similar shot classified by the shooting discriminator: `true` when
/// the profile intersects the singular steady state more than `k` times
/// before its first zero.
fn overshoots(
    params: &ProblemParams,
    alpha: f64,
    k: usize,
    rmax: f64,
) -> Result<(bool, RadialSolution)> {
    let sol = shot_solution(params, alpha, Frame::SelfSimilar, rmax)?;
    let end = sol.zero_radius().unwrap_or(sol.max_radius());
    let z = count_vs_singular(params, &sol, SINGULAR_CUTOFF, end, COUNT_CELLS)?;
    Ok((z.count > k, sol))
}

/// Locates a bounded positive self-similar steady state with exactly `k`
/// intersections with the singular steady state, by bisection on the center
/// value inside `bracket`.
pub fn find_ak(params: &ProblemParams, k: usize, bracket: (f64, f64)) -> Result<AkSearch> {
    if k < 2 {
        return Err(Error::Domain(format!(
            "k = {k}: the classes k = 0 and k = 1 are {{0}} and {{kappa}}, handled analytically"
        )));
    }
    let p_s = params.p_s().finite().unwrap_or(f64::INFINITY);
    if params.p() <= p_s {
        return Err(Error::Domain(format!(
            "p = {} must exceed pS = {p_s}",
            params.p()
        )));
    }
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidBracket {
            lo,
            hi,
            reason: "need 0 < lo < hi".into(),
        });
    }
    let rmax = DEFAULT_RMAX_SELFSIMILAR;
    let (over_lo, _) = overshoots(params, lo, k, rmax)?;
    let (over_hi, _) = overshoots(params, hi, k, rmax)?;
    if over_lo == over_hi {
        let beyond_lepin = match params.p_l() {
            ExtReal::Finite(pl) => params.p() >= pl,
            ExtReal::Infinite => false,
        };
        if beyond_lepin {
            return Ok(AkSearch::NotFound {
                bracket: (lo, hi),
                reason: "no shooting transition in the bracket (p >= pL)".into(),
            });
        }
        return Err(Error::InvalidBracket {
            lo,
            hi,
            reason: format!(
                "both endpoints {} k intersections",
                if over_lo { "exceed" } else { "stay within" }
            ),
        });
    }
    let lo_over = over_lo;
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (o, _) = overshoots(params, mid, k, rmax)?;
        if o == lo_over {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let not_found = |reason: String| {
        Ok(AkSearch::NotFound {
            bracket: (lo, hi),
            reason,
        })
    };

    let (_, sol_lo) = overshoots(params, lo, k, rmax)?;
    let (_, sol_hi) = overshoots(params, hi, k, rmax)?;
    let rho_t = agreement_radius(&sol_lo, &sol_hi, 1e-8);
    if rho_t < 3.0 {
        return not_found(format!(
            "bracket profiles separate already at rho = {rho_t}"
        ));
    }
    let alpha = 0.5 * (lo + hi);
    let sol = shot_solution(params, alpha, Frame::SelfSimilar, rho_t)?;
    if sol.termination != Termination::ReachedRmax {
        return not_found("midpoint profile hits zero inside the trusted radius".into());
    }
    let m = params.decay_exponent();
    let tail = match fit_tail(&sol, m, 0.6 * rho_t, rho_t) {
        Ok(t) => t,
        Err(e) => return not_found(format!("no power-law tail: {e}")),
    };
    let mut st = SteadyState {
        params: *params,
        alpha,
        frame: Frame::SelfSimilar,
        profile: SteadyProfile::Shot(sol),
        kind: SteadyKind::BoundedPositive,
        k: None,
        rho_alpha: None,
        c_a: Some(tail.coeffs[0]),
        trusted_radius: rho_t,
        tail: Some(tail),
        tangency: false,
    };
    let z = count_vs_singular(params, &st, SINGULAR_CUTOFF, 3.0 * rho_t, COUNT_CELLS)?;
    st.tangency = z.tangency;
    st.k = Some(z.count);
    if z.count != k {
        return not_found(format!(
            "transition profile has {} intersections, not {k}",
            z.count
        ));
    }
    if !(alpha > params.kappa()) || !(tail.coeffs[0] > 0.0) {
        return not_found("transition profile is not a bounded positive state above kappa".into());
    }
    let decreasing = (1..=2000).all(|i| st.derivative(3.0 * rho_t * i as f64 / 2000.0) < 0.0);
    if !decreasing {
        return not_found("transition profile is not strictly decreasing".into());
    }
    Ok(AkSearch::Found(Box::new(st)))
}

/// Largest radius up to which two profiles agree to `rel` relative accuracy.
fn agreement_radius(a: &RadialSolution, b: &RadialSolution, rel: f64) -> f64 {
    let end = a.max_radius().min(b.max_radius());
    let step = 0.005;
    let mut r = step;
    let mut last = 0.0;
    while r <= end {
        let (wa, wb) = (a.value(r), b.value(r));
        if (wa - wb).abs() > rel * wa.abs().max(wb.abs()) {
            break;
        }
        last = r;
        r += step;
    }
    last
}

/// Shoots every center value in parallel.
pub fn sweep(
    params: &ProblemParams,
    alphas: &[f64],
    frame: Frame,
    rmax: f64,
) -> Vec<Result<SteadyState>> {
    alphas
        .par_iter()
        .map(|&a| shoot(params, a, frame, rmax))
        .collect()
}

/// Atlas CSV with columns `N,p,alpha,kind,k,rho_alpha,c_a,E`.
pub fn atlas_csv(states: &[(SteadyState, Option<f64>)]) -> String {
    csv_text(
        &["N", "p", "alpha", "kind", "k", "rho_alpha", "c_a", "E"],
        states.iter().map(|(s, e)| {
            vec![
                s.params.dim().to_string(),
                fmt_f64(s.params.p()),
                fmt_f64(s.alpha),
                s.kind.as_str().to_string(),
                s.k.map(|k| k.to_string()).unwrap_or_default(),
                fmt_opt(s.rho_alpha),
                fmt_opt(s.c_a),
                fmt_opt(*e),
            ]
        }),
    )
}

const FAMILY_SWITCH: f64 = 1.0;
const FAMILY_FAR: f64 = 1e6;

/// The physical steady states `phi_alpha`, built from one shot at `alpha = 1`.
///
/// On `[0, 1]` the shot is used directly. Beyond it the deficit
/// `phi_inf - phi_1 = r^{-m} D(ln r)` is integrated from its own autonomous
/// equation, so far-field values carry full relative accuracy.
#[derive(Debug, Clone)]
pub struct PhysicalFamily {
    params: ProblemParams,
    l: f64,
    m: f64,
    core: RadialSolution,
    deficit: DenseSolution<2>,
}

impl PhysicalFamily {
    pub fn new(params: &ProblemParams) -> Result<Self> {
        let p_s = params.p_s().finite().unwrap_or(f64::INFINITY);
        if params.p() < p_s {
            return Err(Error::Domain(format!(
                "p = {} below pS = {p_s}",
                params.p()
            )));
        }
        let l = params.l()?;
        let m = params.decay_exponent();
        let p = params.p();
        let nf = params.dim_f64();
        let core =
            RadialIvp::new(*params, Frame::Physical, 1.0).integrate(FAMILY_SWITCH, 1e-12, 1e-14)?;
        if core.termination != Termination::ReachedRmax {
            return Err(Error::Inconclusive {
                alpha: 1.0,
                reason: "physical shot did not reach the switch radius".into(),
            });
        }
        let (w, dw) = (core.value(FAMILY_SWITCH), core.derivative(FAMILY_SWITCH));
        // r = 1: D = L - w, dD/dt = -m w - w'
        let y0 = [l - w, -m * w - dw];
        let lp = l.powf(p);
        let c1 = nf - 2.0 - 2.0 * m;
        let c0 = m * (m - (nf - 2.0));
        let rhs = move |_t: f64, y: &[f64; 2]| {
            let d = y[0];
            let nl = if d < l {
                lp * (p * (-d / l).ln_1p()).exp_m1()
            } else {
                crate::odecore::spow(l - d, p) - lp
            };
            [y[1], -c1 * y[1] - c0 * d + nl]
        };
        let ctl = StepControl {
            rtol: 1e-12,
            atol: 1e-30,
            ..StepControl::default()
        };
        let deficit = integrate(rhs, 0.0, y0, FAMILY_FAR.ln(), &ctl, &[]);
        if deficit.stop != Stop::ReachedEnd {
            return Err(Error::StepUnderflow {
                t: deficit.t_end().exp(),
                h: 0.0,
            });
        }
        Ok(Self {
            params: *params,
            l,
            m,
            core,
            deficit,
        })
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    fn scale(&self, alpha: f64) -> f64 {
        alpha.powf((self.params.p() - 1.0) / 2.0)
    }

    /// Largest radius at which `phi_alpha` is available.
    pub fn max_radius(&self, alpha: f64) -> f64 {
        FAMILY_FAR / self.scale(alpha)
    }

    fn check(&self, alpha: f64, r: f64) -> Result<f64> {
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("alpha = {alpha} must be positive")));
        }
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("radius {r} must be >= 0")));
        }
        let rs = self.scale(alpha) * r;
        if rs > FAMILY_FAR {
            return Err(Error::OutOfRange {
                value: r,
                max: self.max_radius(alpha),
            });
        }
        Ok(rs)
    }

    fn phi1(&self, r: f64) -> f64 {
        if r <= FAMILY_SWITCH {
            self.core.value(r)
        } else {
            r.powf(-self.m) * (self.l - self.deficit.eval(r.ln())[0])
        }
    }

    fn phi1_deriv(&self, r: f64) -> f64 {
        if r <= FAMILY_SWITCH {
            self.core.derivative(r)
        } else {
            let y = self.deficit.eval(r.ln());
            r.powf(-self.m - 1.0) * (-self.m * (self.l - y[0]) - y[1])
        }
    }

    fn deficit1(&self, r: f64) -> f64 {
        if r <= FAMILY_SWITCH {
            self.l * r.powf(-self.m) - self.core.value(r)
        } else {
            r.powf(-self.m) * self.deficit.eval(r.ln())[0]
        }
    }

    /// `phi_alpha(r) = alpha phi_1(alpha^{(p-1)/2} r)`.
    pub fn phi(&self, alpha: f64, r: f64) -> Result<f64> {
        let rs = self.check(alpha, r)?;
        Ok(alpha * self.phi1(rs))
    }

    pub fn phi_deriv(&self, alpha: f64, r: f64) -> Result<f64> {
        let rs = self.check(alpha, r)?;
        Ok(alpha * self.scale(alpha) * self.phi1_deriv(rs))
    }

    /// `phi_inf(r) - phi_alpha(r)` without cancellation.
    pub fn deficit(&self, alpha: f64, r: f64) -> Result<f64> {
        let rs = self.check(alpha, r)?;
        if rs == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(alpha * self.deficit1(rs))
    }

    /// `b(alpha)` in `phi_alpha ≈ L r^{-m} - b r^beta`, fitted on
    /// `[rmax/2, rmax]` against the two leading remainders.
    pub fn fit_b(&self, alpha: f64, rmax: f64) -> Result<f64> {
        let params = &self.params;
        let disc = params.discriminant();
        if !(disc > 0.0) {
            return Err(Error::Domain(format!(
                "b(alpha) needs p > pJL (p = {})",
                params.p()
            )));
        }
        let beta = params.beta()?;
        let beta_minus = -(params.dim_f64() - 2.0) - beta;
        let g1 = beta_minus - beta;
        let g2 = beta + self.m;
        if (g1 - g2).abs() < 1e-3 || g1.abs() < 1e-3 {
            return Err(Error::IllConditioned("remainder exponents coincide".into()));
        }
        self.check(alpha, rmax)?;
        let n = 48;
        let lo = 0.5 * rmax;
        let mut rows = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for i in 0..n {
            let r = lo * (rmax / lo).powf(i as f64 / (n - 1) as f64);
            rows.push(vec![1.0, r.powf(g1), r.powf(g2)]);
            ys.push(self.deficit(alpha, r)? * r.powf(-beta));
        }
        let (c, _) = least_squares(&rows, &ys)?;
        // the leading term must dominate both remainders on the window
        let rem = c[1].abs() * lo.powf(g1) + c[2].abs() * lo.powf(g2);
        if !(c[0].is_finite() && rem < 0.1 * c[0].abs()) {
            return Err(Error::IllConditioned(format!(
                "remainder {rem:e} not separated from b = {} at rmax = {rmax}",
                c[0]
            )));
        }
        Ok(c[0])
    }
}

type FamilyCache = Mutex<HashMap<(u32, u64), Arc<PhysicalFamily>>>;

fn family_cache() -> &'static FamilyCache {
    static CACHE: OnceLock<FamilyCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared cached family for `(N, p)`.
pub fn physical_family(params: &ProblemParams) -> Result<Arc<PhysicalFamily>> {
    let key = (params.dim(), params.p().to_bits());
    if let Some(f) = family_cache().lock().expect("cache lock").get(&key) {
        return Ok(Arc::clone(f));
    }
    let fam = Arc::new(PhysicalFamily::new(params)?);
    family_cache()
        .lock()
        .expect("cache lock")
        .entry(key)
        .or_insert_with(|| Arc::clone(&fam));
    Ok(fam)
}

/// Physical steady state with center `alpha` at radius `r`.
pub fn phi_alpha(params: &ProblemParams, alpha: f64, r: f64) -> Result<f64> {
    physical_family(params)?.phi(alpha, r)
}

/// `b(alpha)` with the default fit radius `1000`.
pub fn fit_b(params: &ProblemParams, alpha: f64) -> Result<f64> {
    physical_family(params)?.fit_b(alpha, 1000.0)
}
