//! Adaptive Dormand–Prince 5(4) integration with a 4th-order continuous
//! extension, event location on the dense output, and the radial
//! initial-value problems for steady states.

use crate::error::{Error, Result};
use crate::params::ProblemParams;

/// Default relative tolerance for steady-state shooting.
pub const DEFAULT_RTOL: f64 = 1e-10;
/// Default absolute tolerance for steady-state shooting.
pub const DEFAULT_ATOL: f64 = 1e-12;
/// Radius where the origin series hands over to the integrator.
pub const DEFAULT_START_RADIUS: f64 = 1e-4;
/// `|w|` above this value is reported as blowup.
pub const BLOWUP_LEVEL: f64 = 1e8;

// Dormand–Prince tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense output (Hairer & Wanner, DOPRI5)
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
            h_init: 0.0,
            max_steps: 2_000_000,
        }
    }
}

pub type EventFn<'a, const D: usize> = Box<dyn Fn(f64, &[f64; D]) -> f64 + 'a>;

/// Sign-change event `g(t, y) = 0`.
pub struct Event<'a, const D: usize> {
    pub g: EventFn<'a, D>,
    pub terminal: bool,
}

/// How the integration ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stop {
    ReachedEnd,
    Event { index: usize, t: f64 },
    StepUnderflow { t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
struct DenseStep<const D: usize> {
    t0: f64,
    h: f64,
    r: [[f64; D]; 5],
}

impl<const D: usize> DenseStep<D> {
    fn eval(&self, t: f64) -> [f64; D] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let mut out = [0.0; D];
        for i in 0..D {
            let r = &self.r;
            out[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        out
    }

    fn eval_deriv(&self, t: f64) -> [f64; D] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let mut out = [0.0; D];
        for i in 0..D {
            let r = &self.r;
            let q = r[2][i] + th * (r[3][i] + th1 * r[4][i]);
            let dq = r[3][i] + (1.0 - 2.0 * th) * r[4][i];
            let rr = r[1][i] + th1 * q;
            let drr = -q + th1 * dq;
            out[i] = (rr + th * drr) / self.h;
        }
        out
    }
}

/// Piecewise-polynomial solution returned by [`integrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution<const D: usize> {
    steps: Vec<DenseStep<D>>,
    t_start: f64,
    t_end: f64,
    y_start: [f64; D],
    pub stop: Stop,
}

impl<const D: usize> DenseSolution<D> {
    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    /// Last time covered by the interpolant.
    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    /// Start times of the accepted steps followed by `t_end`.
    pub fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.steps.iter().map(|s| s.t0).collect();
        k.push(self.t_end);
        k
    }

    fn locate(&self, t: f64) -> Option<&DenseStep<D>> {
        if self.steps.is_empty() {
            return None;
        }
        let idx = self.steps.partition_point(|s| s.t0 <= t);
        Some(&self.steps[idx.saturating_sub(1)])
    }

    /// State at `t`; clamps to the covered interval.
    pub fn eval(&self, t: f64) -> [f64; D] {
        let t = t.clamp(self.t_start, self.t_end);
        match self.locate(t) {
            Some(s) => s.eval(t),
            None => self.y_start,
        }
    }

    /// Time derivative of the interpolant at `t`.
    pub fn eval_deriv(&self, t: f64) -> [f64; D] {
        let t = t.clamp(self.t_start, self.t_end);
        match self.locate(t) {
            Some(s) => s.eval_deriv(t),
            None => [0.0; D],
        }
    }

    pub fn final_state(&self) -> [f64; D] {
        self.eval(self.t_end)
    }
}

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for i in 0..D {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// Integrate `y' = f(t, y)` from `t0` to `t_end` (`t_end > t0`).
pub fn integrate<const D: usize, F>(
    mut f: F,
    t0: f64,
    y0: [f64; D],
    t_end: f64,
    ctl: &StepControl,
    events: &[Event<'_, D>],
) -> DenseSolution<D>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
{
    let span = t_end - t0;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = if ctl.h_init > 0.0 {
        ctl.h_init
    } else {
        initial_step(&y, &k1, ctl, span)
    };
    let mut steps: Vec<DenseStep<D>> = Vec::new();
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(t, &y)).collect();
    let mut stop = Stop::ReachedEnd;
    let mut t_last = t0;

    for _ in 0..ctl.max_steps {
        if t >= t_end {
            break;
        }
        if t + h > t_end {
            h = t_end - t;
        }
        if h <= 1e-14 * t.abs().max(1e-300) || h < 1e-300 {
            stop = Stop::StepUnderflow { t };
            break;
        }
        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y1 = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = f(t + h, &y1);

        let mut err = 0.0;
        let mut finite = true;
        for i in 0..D {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = ctl.atol + ctl.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sc).powi(2);
            finite &= y1[i].is_finite();
        }
        let err = (err / D as f64).sqrt();
        if !finite || !err.is_finite() {
            h *= 0.25;
            continue;
        }
        if err > 1.0 {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            continue;
        }

        let mut r = [[0.0; D]; 5];
        for i in 0..D {
            let ydiff = y1[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            r[0][i] = y[i];
            r[1][i] = ydiff;
            r[2][i] = bspl;
            r[3][i] = ydiff - h * k7[i] - bspl;
            r[4][i] =
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        let step = DenseStep { t0: t, h, r };
        let t1 = t + h;

        // events
        let mut first: Option<(usize, f64)> = None;
        let g_new: Vec<f64> = events.iter().map(|e| (e.g)(t1, &y1)).collect();
        for (idx, ev) in events.iter().enumerate() {
            let (ga, gb) = (g_prev[idx], g_new[idx]);
            if ga != 0.0 && (ga < 0.0) != (gb < 0.0) && ev.terminal {
                let te = locate_root(|s| (ev.g)(s, &step.eval(s)), t, t1, ga);
                if first.map_or(true, |(_, tf)| te < tf) {
                    first = Some((idx, te));
                }
            }
        }
        steps.push(step);
        if let Some((index, te)) = first {
            t_last = te;
            stop = Stop::Event { index, t: te };
            return DenseSolution {
                steps,
                t_start: t0,
                t_end: t_last,
                y_start: y0,
                stop,
            };
        }
        g_prev = g_new;
        t = t1;
        t_last = t1;
        y = y1;
        k1 = k7;
        h *= (0.9 * err.max(1e-10).powf(-0.2)).min(5.0);
    }
    DenseSolution {
        steps,
        t_start: t0,
        t_end: t_last,
        y_start: y0,
        stop,
    }
}

fn initial_step<const D: usize>(y: &[f64; D], f0: &[f64; D], ctl: &StepControl, span: f64) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..D {
        let sc = ctl.atol + ctl.rtol * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (f0[i] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / D as f64).sqrt(), (d1 / D as f64).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.min(0.01 * span.abs()).max(1e-12 * span.abs())
}

/// Bisection on a bracketing interval; `ga` is the value at `a`.
fn locate_root<G: Fn(f64) -> f64>(g: G, mut a: f64, mut b: f64, ga: f64) -> f64 {
    let neg_a = ga < 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= 1e-13 * m.abs().max(1.0) {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == neg_a {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Which steady equation is being integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    /// `w'' + (N-1)/r w' + w^p = 0`
    Physical,
    /// `w'' + ((N-1)/rho - rho/2) w' - w/(p-1) + w^p = 0`
    SelfSimilar,
}

impl Frame {
    pub fn as_str(&self) -> &'static str {
        match self {
            Frame::Physical => "physical",
            Frame::SelfSimilar => "selfsimilar",
        }
    }

    fn drift(&self) -> f64 {
        match self {
            Frame::Physical => 0.0,
            Frame::SelfSimilar => 1.0,
        }
    }
}

impl std::str::FromStr for Frame {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "physical" => Ok(Frame::Physical),
            "selfsimilar" | "self-similar" => Ok(Frame::SelfSimilar),
            other => Err(Error::Domain(format!("unknown frame '{other}'"))),
        }
    }
}

/// Signed power `w |w|^{p-1}`.
pub(crate) fn spow(w: f64, p: f64) -> f64 {
    w.signum() * w.abs().powf(p)
}

/// Taylor expansion at the origin in powers of `rho^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct OriginSeries {
    /// Coefficients of `rho^0, rho^2, rho^4, ...`.
    pub coeffs: Vec<f64>,
}

impl OriginSeries {
    pub fn value(&self, rho: f64) -> f64 {
        let r2 = rho * rho;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r2 + c)
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        let r2 = rho * rho;
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * r2 + 2.0 * k as f64 * c)
            * rho
    }
}

/// Series solution with `w(0) = a`, `w'(0) = 0`, through `rho^2` (`order = 2`)
/// or `rho^4` (`order = 4`).
pub fn origin_series(
    a: f64,
    params: &ProblemParams,
    frame: Frame,
    order: u32,
) -> Result<OriginSeries> {
    if a < 0.0 {
        return Err(Error::Domain(format!("origin value {a} must be >= 0")));
    }
    if order != 2 && order != 4 {
        return Err(Error::Domain(format!(
            "series order {order} must be 2 or 4"
        )));
    }
    let p = params.p();
    let nf = params.dim_f64();
    let c = frame.drift();
    let ap = a.powf(p);
    let q = c * a / (p - 1.0) - ap;
    let c2 = q / (2.0 * nf);
    let mut coeffs = vec![a, c2];
    if order == 4 {
        let apm1 = if a == 0.0 { 0.0 } else { a.powf(p - 1.0) };
        coeffs.push(c2 * (c * p / (p - 1.0) - p * apm1) / (4.0 * (nf + 2.0)));
    }
    Ok(OriginSeries { coeffs })
}

/// Why a radial integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ReachedRmax,
    HitZero,
    BlewUp,
    StiffFailure,
}

/// Radial initial-value problem `w(0) = a, w'(0) = 0` for one of the steady
/// equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialIvp {
    pub params: ProblemParams,
    pub frame: Frame,
    pub origin_value: f64,
    pub start_radius: f64,
}

impl RadialIvp {
    pub fn new(params: ProblemParams, frame: Frame, origin_value: f64) -> Self {
        Self {
            params,
            frame,
            origin_value,
            start_radius: DEFAULT_START_RADIUS,
        }
    }

    /// First-order right-hand side in `(w, w')`.
    pub fn rhs(&self, rho: f64, y: &[f64; 2]) -> [f64; 2] {
        radial_rhs(&self.params, self.frame, rho, y)
    }

    pub fn integrate(&self, rmax: f64, rtol: f64, atol: f64) -> Result<RadialSolution> {
        if !(self.start_radius > 0.0 && self.start_radius < rmax) {
            return Err(Error::Domain(format!(
                "start radius {} must lie in (0, {rmax})",
                self.start_radius
            )));
        }
        if !(rtol > 0.0 && atol > 0.0) {
            return Err(Error::Domain("tolerances must be positive".into()));
        }
        let series = origin_series(self.origin_value, &self.params, self.frame, 4)?;
        let r0 = self.start_radius;
        let y0 = [series.value(r0), series.derivative(r0)];
        let mut sol = integrate_radial_state(&self.params, self.frame, r0, y0, rmax, rtol, atol)?;
        sol.series = Some(series);
        Ok(sol)
    }
}

pub(crate) fn radial_rhs(params: &ProblemParams, frame: Frame, rho: f64, y: &[f64; 2]) -> [f64; 2] {
    let p = params.p();
    let nf = params.dim_f64();
    let c = frame.drift();
    let (w, dw) = (y[0], y[1]);
    [
        dw,
        -((nf - 1.0) / rho - c * rho / 2.0) * dw + c * w / (p - 1.0) - spow(w, p),
    ]
}

/// Integrate the steady equation from an arbitrary state `(w, w')` at `rho0`.
pub fn integrate_radial_state(
    params: &ProblemParams,
    frame: Frame,
    rho0: f64,
    y0: [f64; 2],
    rmax: f64,
    rtol: f64,
    atol: f64,
) -> Result<RadialSolution> {
    let ctl = StepControl {
        rtol,
        atol,
        ..StepControl::default()
    };
    let start_positive = y0[0] > 0.0;
    let events = [
        Event {
            g: Box::new(|_t, y: &[f64; 2]| y[0]),
            terminal: start_positive,
        },
        Event {
            g: Box::new(|_t, y: &[f64; 2]| y[0].abs() - BLOWUP_LEVEL),
            terminal: true,
        },
    ];
    let dense = integrate(
        |t, y| radial_rhs(params, frame, t, y),
        rho0,
        y0,
        rmax,
        &ctl,
        &events,
    );
    let termination = match dense.stop {
        Stop::ReachedEnd => Termination::ReachedRmax,
        Stop::Event { index: 0, .. } => Termination::HitZero,
        Stop::Event { .. } => Termination::BlewUp,
        Stop::StepUnderflow { .. } => Termination::StiffFailure,
    };
    let tangencies = find_tangencies(&dense);
    Ok(RadialSolution {
        dense,
        termination,
        tangencies,
        series: None,
    })
}

/// Local minima of `w` that touch zero without a sign change.
fn find_tangencies(dense: &DenseSolution<2>) -> Vec<f64> {
    let knots = dense.knots();
    let scale = knots
        .iter()
        .map(|&t| dense.eval(t)[0].abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut out = Vec::new();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ya, yb) = (dense.eval(a), dense.eval(b));
        if ya[0] > 0.0 && yb[0] > 0.0 && ya[1] < 0.0 && yb[1] > 0.0 {
            let tm = locate_root(|s| dense.eval(s)[1], a, b, ya[1]);
            if dense.eval(tm)[0].abs() < 1e-10 * scale {
                out.push(tm);
            }
        }
    }
    out
}

/// Result of a radial integration; defined on `[0, max_radius]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSolution {
    pub dense: DenseSolution<2>,
    pub termination: Termination,
    /// Radii where `w` grazes zero (`w = w' = 0` within tolerance).
    pub tangencies: Vec<f64>,
    series: Option<OriginSeries>,
}

impl RadialSolution {
    pub fn max_radius(&self) -> f64 {
        self.dense.t_end()
    }

    pub fn value(&self, rho: f64) -> f64 {
        match &self.series {
            Some(s) if rho < self.dense.t_start() => s.value(rho),
            _ => self.dense.eval(rho)[0],
        }
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        match &self.series {
            Some(s) if rho < self.dense.t_start() => s.derivative(rho),
            _ => self.dense.eval(rho)[1],
        }
    }

    /// Radius of the terminal zero, if the solution hit zero.
    pub fn zero_radius(&self) -> Option<f64> {
        (self.termination == Termination::HitZero).then(|| self.dense.t_end())
    }
}
