//! Method-of-lines evolution of radial solutions in physical variables
//! `u_t = u_rr + (N-1)/r u_r + u^p` and self-similar variables
//! `v_s = v_ρρ + ((N-1)/ρ - ρ/2) v_ρ - v/(p-1) + v^p`, with limit detection,
//! blowup classification and the rescaling diagnostics built on top.
//!
//! Space is discretized as a conservative finite-volume gradient flow: with
//! weight `a(ρ) = ρ^{N-1}` (times `e^{-ρ²/4}` in self-similar variables),
//! cell masses `m_i` and face weights `A_{i±1/2} = a(ρ_i ± h/2)`,
//!
//! `m_i v_i' = (A_{i+1/2}(v_{i+1}-v_i) - A_{i-1/2}(v_i-v_{i-1}))/h + m_i f(v_i)`,
//!
//! so the discrete energy `Σ A (Δv)²/(2h) + Σ m_i F(v_i)` is nonincreasing
//! along the semidiscrete flow. The origin row reduces to the `N v_ρρ`
//! limit. Time stepping is Bogacki–Shampine 3(2) with error control.

use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::odecore::Frame;
use crate::output::{csv_text, fmt_f64};
use crate::params::ProblemParams;
use crate::profile::{RadialFn, RadialProfile};
use crate::quadrature::gauss_legendre;
use crate::steady::SteadyState;
use crate::zeronum::grid_sign_changes;

pub const DEFAULT_POINTS: usize = 2000;
pub const DEFAULT_R_SELFSIMILAR: f64 = 20.0;
pub const DEFAULT_R_PHYSICAL: f64 = 10.0;
/// Sup-norm that triggers a blowup event.
pub const BLOWUP_SUP: f64 = 1e8;
/// A step below this many ulps of the current time ends the run as blowup.
pub const TIME_RESOLUTION_ULPS: f64 = 1e4;
/// Distance below which a profile counts as converged to a steady state.
pub const LIMIT_TOL: f64 = 1e-3;
/// Minimal history span for a limit verdict.
pub const LIMIT_MIN_SPAN: f64 = 5.0;
/// Minimal number of history samples before a blowup event.
pub const BLOWUP_MIN_SAMPLES: usize = 30;

const MAX_HALVINGS: u32 = 20;
/// Real stability interval of BS3 is about `[-2.51, 0]`.
const BS3_STABILITY: f64 = 2.4;
const EXPLICIT_CAP: f64 = 0.4;

/// Treatment of the outer node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterBoundary {
    /// Value held at its initial level.
    Pinned,
    /// Zero flux through `ρ = R`.
    NoFlux,
}

impl OuterBoundary {
    pub fn as_str(&self) -> &'static str {
        match self {
            OuterBoundary::Pinned => "pinned",
            OuterBoundary::NoFlux => "noflux",
        }
    }
}

impl FromStr for OuterBoundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pinned" | "dirichlet" => Ok(OuterBoundary::Pinned),
            "noflux" | "neumann" => Ok(OuterBoundary::NoFlux),
            other => Err(Error::Domain(format!("unknown boundary '{other}'"))),
        }
    }
}

/// Uniform radial grid `ρ_i = i h`, `i = 0..points`, on `[0, R]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    r_max: f64,
    points: usize,
}

impl Grid {
    pub fn new(r_max: f64, points: usize) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) || points < 3 {
            return Err(Error::Domain(format!(
                "grid needs R > 0 and >= 3 points (got R = {r_max}, {points} points)"
            )));
        }
        Ok(Self { r_max, points })
    }

    /// Default grid of the frame.
    pub fn default_for(frame: Frame) -> Self {
        let r = match frame {
            Frame::Physical => DEFAULT_R_PHYSICAL,
            Frame::SelfSimilar => DEFAULT_R_SELFSIMILAR,
        };
        Self {
            r_max: r,
            points: DEFAULT_POINTS,
        }
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn h(&self) -> f64 {
        self.r_max / (self.points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.r_max
        } else {
            i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.node(i)).collect()
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            r_max: self.r_max * factor,
            points: self.points,
        }
    }
}

/// Semidiscrete operator: coupling coefficients, log cell masses and log
/// face weights.
#[derive(Debug, Clone)]
struct Operator {
    cp: Vec<f64>,
    cm: Vec<f64>,
    ln_mass: Vec<f64>,
    ln_face: Vec<f64>,
    h: f64,
    p: f64,
    int_p: Option<i32>,
    selfsimilar: bool,
    pinned: bool,
}

fn ln_weight(frame: Frame, nf: f64, r: f64) -> f64 {
    let g = match frame {
        Frame::Physical => 0.0,
        Frame::SelfSimilar => r * r / 4.0,
    };
    (nf - 1.0) * r.ln() - g
}

impl Operator {
    fn new(params: &ProblemParams, frame: Frame, grid: &Grid, bc: OuterBoundary) -> Self {
        let nf = params.dim_f64();
        let n = grid.points;
        let h = grid.h();
        let lw = |r: f64| ln_weight(frame, nf, r);
        let mut cp = vec![0.0; n];
        let mut cm = vec![0.0; n];
        let mut ln_mass = vec![0.0; n];
        let ln_face: Vec<f64> = (0..n - 1).map(|i| lw(grid.node(i) + 0.5 * h)).collect();
        let half = 0.5 * h;
        // exact cell masses keep the scheme consistent next to the origin
        let (gx, gw) = gauss_legendre(6);
        let ln_cell = |lo: f64, hi: f64, reference: f64| {
            let mid = 0.5 * (lo + hi);
            let rad = 0.5 * (hi - lo);
            let ratio: f64 = gx
                .iter()
                .zip(&gw)
                .map(|(x, w)| w * (lw(mid + rad * x) - reference).exp())
                .sum();
            reference + (rad * ratio).ln()
        };
        ln_mass[0] = ln_cell(0.0, half, ln_face[0]);
        cp[0] = (ln_face[0] - ln_mass[0]).exp() / h;
        for i in 1..n - 1 {
            let r = grid.node(i);
            ln_mass[i] = ln_cell(r - half, r + half, lw(r));
            cp[i] = (ln_face[i] - ln_mass[i]).exp() / h;
            cm[i] = (ln_face[i - 1] - ln_mass[i]).exp() / h;
        }
        ln_mass[n - 1] = ln_cell(grid.r_max - half, grid.r_max, lw(grid.r_max));
        if bc == OuterBoundary::NoFlux {
            cm[n - 1] = (ln_face[n - 2] - ln_mass[n - 1]).exp() / h;
        }
        let p = params.p();
        let int_p = (p.fract() == 0.0 && p.abs() < 64.0).then_some(p as i32);
        Self {
            cp,
            cm,
            ln_mass,
            ln_face,
            h,
            p,
            int_p,
            selfsimilar: frame == Frame::SelfSimilar,
            pinned: bc == OuterBoundary::Pinned,
        }
    }

    #[inline]
    fn pow_p(&self, v: f64) -> f64 {
        match self.int_p {
            Some(k) => v.powi(k),
            None => v.signum() * v.abs().powf(self.p),
        }
    }

    #[inline]
    fn reaction(&self, v: f64) -> f64 {
        let r = self.pow_p(v);
        if self.selfsimilar {
            r - v / (self.p - 1.0)
        } else {
            r
        }
    }

    fn rhs(&self, v: &[f64], out: &mut [f64]) {
        let n = v.len();
        out[0] = self.cp[0] * (v[1] - v[0]) + self.reaction(v[0]);
        for i in 1..n - 1 {
            out[i] = self.cp[i] * (v[i + 1] - v[i])
                + self.cm[i] * (v[i - 1] - v[i])
                + self.reaction(v[i]);
        }
        out[n - 1] = if self.pinned {
            0.0
        } else {
            self.cm[n - 1] * (v[n - 2] - v[n - 1]) + self.reaction(v[n - 1])
        };
    }

    /// Largest row sum of the symmetrized diffusion matrix.
    fn gershgorin(&self) -> f64 {
        let n = self.cp.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 {
                    (self.cm[i] * self.cp[i - 1]).sqrt()
                } else {
                    0.0
                };
                let right = if i + 1 < n {
                    (self.cp[i] * self.cm[i + 1]).sqrt()
                } else {
                    0.0
                };
                self.cp[i] + self.cm[i] + left + right
            })
            .fold(0.0, f64::max)
    }

    fn energy(&self, v: &[f64]) -> f64 {
        let p = self.p;
        let grad: f64 = (0..v.len() - 1)
            .map(|i| self.ln_face[i].exp() * (v[i + 1] - v[i]).powi(2) / (2.0 * self.h))
            .sum();
        let pot: f64 = v
            .iter()
            .zip(&self.ln_mass)
            .map(|(&x, &lm)| {
                let quad = if self.selfsimilar {
                    x * x / (2.0 * (p - 1.0))
                } else {
                    0.0
                };
                lm.exp() * (quad - x.abs() * self.pow_p(x.abs()) / (p + 1.0))
            })
            .sum();
        grad + pot
    }
}

/// One recorded point of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryPoint {
    pub time: f64,
    pub sup_norm: f64,
    pub energy: f64,
    /// Sign changes of `v - φ∞` on the grid without the origin.
    pub z_vs_phi_inf: Option<usize>,
    pub snapshot: Option<Arc<Vec<f64>>>,
}

/// What ended a run early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupTrigger {
    SupThreshold,
    /// The step size dropped below the resolution of the time variable.
    TimeResolution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupEvent {
    pub time: f64,
    pub sup_norm: f64,
    pub trigger: BlowupTrigger,
}

/// Radial grid function with its run history.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub params: ProblemParams,
    pub frame: Frame,
    pub grid: Grid,
    pub values: Vec<f64>,
    /// `t` in physical variables, `s` in self-similar variables.
    pub time: f64,
    pub boundary: OuterBoundary,
    pub history: Vec<HistoryPoint>,
    pub blowup: Option<BlowupEvent>,
}

impl EvolutionState {
    pub fn new(
        params: ProblemParams,
        frame: Frame,
        grid: Grid,
        values: Vec<f64>,
        time: f64,
    ) -> Result<Self> {
        if values.len() != grid.points {
            return Err(Error::Domain(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.points
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!(
                "initial values must be finite and nonnegative (found {v})"
            )));
        }
        if !time.is_finite() {
            return Err(Error::Domain(format!("initial time {time} is not finite")));
        }
        Ok(Self {
            params,
            frame,
            grid,
            values,
            time,
            boundary: OuterBoundary::Pinned,
            history: Vec::new(),
            blowup: None,
        })
    }

    /// Samples `f` on the grid.
    pub fn from_fn<F: Fn(f64) -> f64>(
        params: ProblemParams,
        frame: Frame,
        grid: Grid,
        f: F,
        time: f64,
    ) -> Result<Self> {
        let values = grid.nodes().into_iter().map(f).collect();
        Self::new(params, frame, grid, values, time)
    }

    pub fn with_boundary(mut self, boundary: OuterBoundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.grid.nodes()
    }

    pub fn profile(&self) -> Result<RadialProfile> {
        RadialProfile::new(self.nodes(), self.values.clone(), None)
    }

    pub fn sup_norm(&self) -> f64 {
        sup(&self.values)
    }

    /// Discrete energy of the current values.
    pub fn energy(&self) -> f64 {
        Operator::new(&self.params, self.frame, &self.grid, self.boundary).energy(&self.values)
    }

    pub fn z_vs_phi_inf(&self) -> Option<usize> {
        z_vs_singular(&self.params, &self.grid, &self.values)
    }

    /// History point closest to `time` that carries a snapshot.
    pub fn snapshot_near(&self, time: f64) -> Option<(f64, RadialProfile)> {
        let hp = self
            .history
            .iter()
            .filter(|h| h.snapshot.is_some())
            .min_by(|a, b| (a.time - time).abs().total_cmp(&(b.time - time).abs()))?;
        let values = hp.snapshot.as_ref()?.as_ref().clone();
        RadialProfile::new(self.nodes(), values, None)
            .ok()
            .map(|p| (hp.time, p))
    }

    fn record(&mut self, op: &Operator, snapshots: bool) {
        self.history.push(HistoryPoint {
            time: self.time,
            sup_norm: self.sup_norm(),
            energy: op.energy(&self.values),
            z_vs_phi_inf: self.z_vs_phi_inf(),
            snapshot: snapshots.then(|| Arc::new(self.values.clone())),
        });
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn z_vs_singular(params: &ProblemParams, grid: &Grid, values: &[f64]) -> Option<usize> {
    let l = params.l().ok()?;
    let m = params.decay_exponent();
    let rel: Vec<f64> = (1..values.len())
        .map(|i| {
            let phi = l * grid.node(i).powf(-m);
            (values[i] - phi) / (values[i].abs() + phi)
        })
        .collect();
    Some(grid_sign_changes(&rel, 1e-12))
}

/// Step control of [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtControl {
    pub rtol: f64,
    pub atol: f64,
    /// Spacing of regular history output.
    pub output_every: f64,
    /// Extra history points whenever the sup-norm grows by this factor.
    pub sup_growth: f64,
    pub blowup_sup: f64,
    /// Keep the grid values at every history point.
    pub snapshots: bool,
}

impl Default for DtControl {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-12,
            output_every: 0.1,
            sup_growth: 1.05,
            blowup_sup: BLOWUP_SUP,
            snapshots: true,
        }
    }
}

/// Stable step bound `min(0.4 h², 2.4/ρ)` with `ρ` the Gershgorin bound
/// of the symmetrized diffusion matrix.
pub fn stable_dt(state: &EvolutionState) -> f64 {
    let op = Operator::new(&state.params, state.frame, &state.grid, state.boundary);
    stable_dt_op(&op)
}

fn stable_dt_op(op: &Operator) -> f64 {
    (EXPLICIT_CAP * op.h * op.h).min(BS3_STABILITY / op.gershgorin())
}

/// Advances `initial` to time `until`, appending history at every
/// `output_every` and at every `sup_growth` increase of the sup-norm.
/// A blowup event ends the run early with `blowup` set.
pub fn evolve(initial: EvolutionState, until: f64, ctl: &DtControl) -> Result<EvolutionState> {
    let mut st = initial;
    if !(until > st.time) {
        return Err(Error::Domain(format!(
            "until = {until} must exceed the current time {}",
            st.time
        )));
    }
    if st.blowup.is_some() {
        return Err(Error::Domain(
            "the run already ended in a blowup event".into(),
        ));
    }
    if !(ctl.output_every > 0.0 && ctl.sup_growth > 1.0 && ctl.rtol > 0.0 && ctl.atol >= 0.0) {
        return Err(Error::Domain("invalid step control".into()));
    }
    let op = Operator::new(&st.params, st.frame, &st.grid, st.boundary);
    let dt_cap = stable_dt_op(&op);
    if st.history.is_empty() {
        st.record(&op, ctl.snapshots);
    }
    let n = st.values.len();
    let initial_sup = st.sup_norm();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    op.rhs(&st.values, &mut k1);
    let mut dt = dt_cap;
    let mut halvings = 0u32;
    let mut last_out = st.time;
    let mut last_sup = st.sup_norm();
    loop {
        let next_out = (last_out + ctl.output_every).min(until);
        let to_out = next_out - st.time;
        let hits = dt >= to_out;
        let h = if hits { to_out } else { dt };
        let y = &st.values;
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        op.rhs(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.75 * h * k2[i];
        }
        op.rhs(&tmp, &mut k3);
        for i in 0..n {
            y_new[i] = y[i] + h * (2.0 / 9.0 * k1[i] + 1.0 / 3.0 * k2[i] + 4.0 / 9.0 * k3[i]);
        }
        op.rhs(&y_new, &mut k4);
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e =
                h * (-5.0 / 72.0 * k1[i] + 1.0 / 12.0 * k2[i] + 1.0 / 9.0 * k3[i] - 0.125 * k4[i]);
            let sc = ctl.atol + ctl.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max(e.abs() / sc);
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }
        if err > 1.0 {
            dt = h * (0.9 * err.powf(-1.0 / 3.0)).clamp(0.1, 0.5);
            if resolution_exhausted(dt, st.time) {
                return end_by_resolution(st, &op, ctl, initial_sup);
            }
            continue;
        }
        if y_new.iter().any(|v| *v < 0.0) {
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(Error::Positivity(st.time));
            }
            dt = 0.5 * h;
            continue;
        }
        halvings = 0;
        std::mem::swap(&mut st.values, &mut y_new);
        std::mem::swap(&mut k1, &mut k4);
        st.time = if hits { next_out } else { st.time + h };
        let s = st.sup_norm();
        if s > ctl.blowup_sup || !s.is_finite() {
            st.record(&op, ctl.snapshots);
            st.blowup = Some(BlowupEvent {
                time: st.time,
                sup_norm: s,
                trigger: BlowupTrigger::SupThreshold,
            });
            return Ok(st);
        }
        if hits {
            st.record(&op, ctl.snapshots);
            last_out = next_out;
            last_sup = s;
            if st.time >= until {
                return Ok(st);
            }
        } else if s >= last_sup * ctl.sup_growth {
            st.record(&op, ctl.snapshots);
            last_sup = s;
        }
        let grow = if err > 0.0 {
            0.9 * err.powf(-1.0 / 3.0)
        } else {
            5.0
        };
        dt = (h * grow.clamp(0.2, 5.0)).min(dt_cap);
        if hits {
            // the clipped step says nothing about the natural step size
            dt = dt.max(h.min(dt_cap));
        }
        if resolution_exhausted(dt, st.time) {
            return end_by_resolution(st, &op, ctl, initial_sup);
        }
    }
}

fn resolution_exhausted(dt: f64, t: f64) -> bool {
    dt < TIME_RESOLUTION_ULPS * f64::EPSILON * t.abs()
}

fn end_by_resolution(
    mut st: EvolutionState,
    op: &Operator,
    ctl: &DtControl,
    initial_sup: f64,
) -> Result<EvolutionState> {
    let s = st.sup_norm();
    // a collapsing step without growth is a solver failure, not blowup
    if !(s > initial_sup) {
        return Err(Error::StepUnderflow { t: st.time, h: 0.0 });
    }
    if st.history.last().map(|h| h.time) != Some(st.time) {
        st.record(op, ctl.snapshots);
    }
    st.blowup = Some(BlowupEvent {
        time: st.time,
        sup_norm: s,
        trigger: BlowupTrigger::TimeResolution,
    });
    Ok(st)
}

/// `v(y, s) = (T-t)^{1/(p-1)} u(x, t)` with `y = x/√(T-t)`,
/// `s = -ln(T-t)`. The grid is rescaled with the solution, so the map is
/// exact at the nodes. History is not carried over.
pub fn to_selfsimilar(u: &EvolutionState, big_t: f64) -> Result<EvolutionState> {
    if u.frame != Frame::Physical {
        return Err(Error::Domain(
            "to_selfsimilar needs a physical-frame state".into(),
        ));
    }
    if !(u.time < big_t) {
        return Err(Error::PastBlowup { t: u.time, big_t });
    }
    let tau = big_t - u.time;
    let scale = tau.powf(1.0 / (u.params.p() - 1.0));
    let values = u.values.iter().map(|x| x * scale).collect();
    let mut v = EvolutionState::new(
        u.params,
        Frame::SelfSimilar,
        u.grid.scaled(1.0 / tau.sqrt()),
        values,
        -tau.ln(),
    )?;
    v.boundary = u.boundary;
    Ok(v)
}

/// Inverse of [`to_selfsimilar`]: `t = T - e^{-s}`.
pub fn from_selfsimilar(v: &EvolutionState, big_t: f64) -> Result<EvolutionState> {
    if v.frame != Frame::SelfSimilar {
        return Err(Error::Domain(
            "from_selfsimilar needs a self-similar state".into(),
        ));
    }
    if !big_t.is_finite() {
        return Err(Error::Domain(format!("blowup time {big_t} is not finite")));
    }
    let tau = (-v.time).exp();
    let scale = tau.powf(-1.0 / (v.params.p() - 1.0));
    let values = v.values.iter().map(|x| x * scale).collect();
    let mut u = EvolutionState::new(
        v.params,
        Frame::Physical,
        v.grid.scaled(tau.sqrt()),
        values,
        big_t - tau,
    )?;
    u.boundary = v.boundary;
    Ok(u)
}

/// Steady state a run may converge to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitTarget {
    Zero,
    /// The constant `κ`; a steady state in self-similar variables only.
    Kappa,
    Singular,
    /// Index into the supplied atlas.
    Atlas(usize),
}

impl LimitTarget {
    pub fn label(&self) -> String {
        match self {
            LimitTarget::Zero => "zero".into(),
            LimitTarget::Kappa => "kappa".into(),
            LimitTarget::Singular => "phi_inf".into(),
            LimitTarget::Atlas(i) => format!("atlas[{i}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LimitVerdict {
    Converged {
        target: LimitTarget,
        distance: f64,
    },
    Undecided {
        nearest: Option<LimitTarget>,
        distance: f64,
        reason: String,
    },
}

type Candidate<'a> = Box<dyn Fn(f64) -> f64 + 'a>;

/// Nearest steady state to the latest snapshot in sup-norm on `[0, R/2]`;
/// converged when that distance is below [`LIMIT_TOL`] and the distances
/// at the last three snapshots are nonincreasing.
pub fn detect_limit(state: &EvolutionState, atlas: &[SteadyState]) -> LimitVerdict {
    let snaps: Vec<(f64, &Arc<Vec<f64>>)> = state
        .history
        .iter()
        .filter_map(|h| h.snapshot.as_ref().map(|s| (h.time, s)))
        .collect();
    let undecided = |nearest, distance, reason: &str| LimitVerdict::Undecided {
        nearest,
        distance,
        reason: reason.to_string(),
    };
    if snaps.len() < 3 {
        return undecided(None, f64::INFINITY, "fewer than three snapshots");
    }
    let span = snaps[snaps.len() - 1].0 - snaps[0].0;
    let nodes = state.nodes();
    let half = state.grid.r_max / 2.0;
    let inner: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i] <= half).collect();
    let l = state.params.l().ok();
    let m = state.params.decay_exponent();
    let mut candidates: Vec<(LimitTarget, Candidate<'_>)> =
        vec![(LimitTarget::Zero, Box::new(|_| 0.0))];
    if state.frame == Frame::SelfSimilar {
        let k = state.params.kappa();
        candidates.push((LimitTarget::Kappa, Box::new(move |_| k)));
    }
    if let Some(l) = l {
        candidates.push((
            LimitTarget::Singular,
            Box::new(move |r: f64| l * r.powf(-m)),
        ));
    }
    for (i, s) in atlas.iter().enumerate() {
        if s.frame == state.frame && s.params == state.params {
            candidates.push((LimitTarget::Atlas(i), Box::new(move |r| s.value(r))));
        }
    }
    let dist = |vals: &[f64], f: &dyn Fn(f64) -> f64| {
        inner
            .iter()
            .map(|&i| (vals[i] - f(nodes[i])).abs())
            .fold(
                0.0,
                |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) },
            )
    };
    let last3 = &snaps[snaps.len() - 3..];
    let mut best: Option<(LimitTarget, f64, bool)> = None;
    for (target, f) in &candidates {
        let d: Vec<f64> = last3.iter().map(|(_, v)| dist(v, f.as_ref())).collect();
        let monotone = d[1] <= d[0] && d[2] <= d[1];
        if best.as_ref().map_or(true, |b| d[2] < b.1) {
            best = Some((*target, d[2], monotone));
        }
    }
    let (target, distance, monotone) = best.expect("zero is always a candidate");
    if span < LIMIT_MIN_SPAN {
        undecided(
            Some(target),
            distance,
            "history spans less than 5 time units",
        )
    } else if distance >= LIMIT_TOL {
        undecided(
            Some(target),
            distance,
            "nearest steady state is not within tolerance",
        )
    } else if !monotone {
        undecided(Some(target), distance, "distances are not decreasing")
    } else {
        LimitVerdict::Converged { target, distance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupType {
    TypeI,
    /// Unbounded rate over the resolved window; never affirmed.
    TypeIISuspect,
    None,
}

impl BlowupType {
    pub fn as_str(&self) -> &'static str {
        match self {
            BlowupType::TypeI => "type_I",
            BlowupType::TypeIISuspect => "type_II_suspect",
            BlowupType::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupReport {
    pub t_est: Option<f64>,
    pub kind: BlowupType,
    /// `(t, (T_est - t)^{1/(p-1)} ‖u(·,t)‖_∞)`.
    pub rate: Vec<(f64, f64)>,
    /// Mean rate over the last decade of the sup-norm.
    pub plateau: Option<f64>,
    /// Relative spread `(max - min)/min` of the rate over that decade.
    pub variation: Option<f64>,
    pub profiles: Vec<(f64, RadialProfile)>,
}

/// Blowup time and type from the sup-norm history: `‖u‖^{1-p}` is fitted
/// linearly in `t`, in relative least squares, over the last decade of the
/// sup-norm; the blowup is
/// type I when the rate varies by less than 20% there and stays below
/// `10κ`.
pub fn classify_blowup(run: &EvolutionState) -> Result<BlowupReport> {
    if run.blowup.is_none() {
        return Ok(BlowupReport {
            t_est: None,
            kind: BlowupType::None,
            rate: Vec::new(),
            plateau: None,
            variation: None,
            profiles: Vec::new(),
        });
    }
    let p = run.params.p();
    let samples: Vec<(f64, f64)> = run
        .history
        .iter()
        .filter(|h| h.sup_norm > 0.0)
        .map(|h| (h.time, h.sup_norm))
        .collect();
    if samples.len() < BLOWUP_MIN_SAMPLES {
        return Err(Error::Insufficient(format!(
            "{} samples precede the blowup event, need {BLOWUP_MIN_SAMPLES}",
            samples.len()
        )));
    }
    let (t_last, s_last) = samples[samples.len() - 1];
    let mut start = samples
        .iter()
        .position(|&(_, s)| s >= s_last / 10.0)
        .unwrap_or(0);
    start = start.min(samples.len() - 3);
    let window = &samples[start..];
    let x: Vec<f64> = window.iter().map(|(t, _)| t - t_last).collect();
    let y: Vec<f64> = window.iter().map(|(_, s)| s.powf(1.0 - p)).collect();
    // relative residuals let the samples closest to the event set T_est
    let rows: Vec<Vec<f64>> = x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| vec![1.0 / yi, xi / yi])
        .collect();
    let (c, _) = least_squares(&rows, &vec![1.0; rows.len()])?;
    let (a, b) = (c[0], c[1]);
    if !(b < 0.0) {
        return Err(Error::IllConditioned(format!(
            "sup-norm power does not decrease toward the event (slope {b:e})"
        )));
    }
    let t_est = t_last - a / b;
    let rate_at = |t: f64, s: f64| (t_est - t).powf(1.0 / (p - 1.0)) * s;
    let rate: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(t, _)| *t < t_est)
        .map(|&(t, s)| (t, rate_at(t, s)))
        .collect();
    let tail: Vec<f64> = window
        .iter()
        .filter(|(t, _)| *t < t_est)
        .map(|&(t, s)| rate_at(t, s))
        .collect();
    let kappa = run.params.kappa();
    let (plateau, variation, kind) = if tail.is_empty() {
        (None, None, BlowupType::TypeIISuspect)
    } else {
        let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().cloned().fold(0.0, f64::max);
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        let var = (hi - lo) / lo;
        let kind = if var < 0.2 && hi < 10.0 * kappa {
            BlowupType::TypeI
        } else {
            BlowupType::TypeIISuspect
        };
        (Some(mean), Some(var), kind)
    };
    let mut profiles = Vec::new();
    for h in run
        .history
        .iter()
        .rev()
        .filter(|h| h.snapshot.is_some())
        .take(3)
    {
        let prof = RadialProfile::new(
            run.nodes(),
            h.snapshot.as_ref().unwrap().as_ref().clone(),
            None,
        )?;
        profiles.push((h.time, rescale_snapshot(&prof, p)?));
    }
    profiles.reverse();
    Ok(BlowupReport {
        t_est: Some(t_est),
        kind,
        rate,
        plateau,
        variation,
        profiles,
    })
}

/// `r ↦ λ^{2/(p-1)} u(λ r)` with `λ = ‖u‖_∞^{-(p-1)/2}`; the output has
/// sup-norm 1 and lives on the grid `r_i/λ`.
pub fn rescale_snapshot(u: &RadialProfile, p: f64) -> Result<RadialProfile> {
    let s = u.sup_norm();
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!(
            "cannot rescale a profile with sup-norm {s}"
        )));
    }
    let lambda = s.powf(-(p - 1.0) / 2.0);
    let grid = u.grid().iter().map(|r| r / lambda).collect();
    let values = u.values().iter().map(|v| v / s).collect();
    let derivs = u.derivs().iter().map(|d| d * lambda / s).collect();
    RadialProfile::new(grid, values, Some(derivs))
}

/// [`rescale_snapshot`] applied to the stored snapshot nearest `t_k`.
pub fn rescaled_profile(run: &EvolutionState, t_k: f64) -> Result<RadialProfile> {
    let (_, prof) = run
        .snapshot_near(t_k)
        .ok_or_else(|| Error::Insufficient("run has no stored snapshots".into()))?;
    rescale_snapshot(&prof, run.params.p())
}

/// Smallest `C` with `u + |u_r|^{2/(p+1)} + |u_rr|^{1/p} <= C (r^{-2/(p-1)} + m(t))`
/// over the stored snapshots and the current values, where
/// `m(t) = (T-t)^{-1/(p-1)}` for finite `T` and 0 otherwise. Derivatives
/// are centered differences at interior nodes.
pub fn universal_bound_check(state: &EvolutionState, big_t: Option<f64>) -> Result<f64> {
    if state.frame != Frame::Physical {
        return Err(Error::Domain(
            "the universal bound is stated in physical variables".into(),
        ));
    }
    let p = state.params.p();
    let h = state.grid.h();
    let nodes = state.nodes();
    let mut frames: Vec<(f64, &[f64])> = state
        .history
        .iter()
        .filter_map(|hp| hp.snapshot.as_ref().map(|s| (hp.time, s.as_slice())))
        .collect();
    frames.push((state.time, &state.values));
    let mut c: f64 = 0.0;
    for (t, u) in frames {
        let m = match big_t {
            Some(bt) if t < bt => (bt - t).powf(-1.0 / (p - 1.0)),
            Some(_) => continue,
            None => 0.0,
        };
        for i in 1..u.len() - 1 {
            let ur = (u[i + 1] - u[i - 1]) / (2.0 * h);
            let urr = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
            let lhs = u[i] + ur.abs().powf(2.0 / (p + 1.0)) + urr.abs().powf(1.0 / p);
            let rhs = nodes[i].powf(-2.0 / (p - 1.0)) + m;
            c = c.max(lhs / rhs);
        }
    }
    Ok(c)
}

/// Common initial data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    Constant(f64),
    /// `κ(1 + e^{s0})^{-1/(p-1)}`, the spatially homogeneous solution
    /// connecting `κ` to 0, sampled at `s0`.
    FlatAncient {
        s0: f64,
    },
    /// `amplitude · e^{-ρ²/width²} + offset`.
    Gaussian {
        amplitude: f64,
        width: f64,
        offset: f64,
    },
    /// `λ φ_α` with `φ_α` the regular steady state in physical variables.
    ScaledSteady {
        alpha: f64,
        lambda: f64,
    },
}

impl InitialData {
    pub fn sample(&self, params: &ProblemParams, grid: &Grid) -> Result<Vec<f64>> {
        let nodes = grid.nodes();
        match *self {
            InitialData::Constant(c) => Ok(vec![c; nodes.len()]),
            InitialData::FlatAncient { s0 } => {
                let v = flat_ancient(params, s0);
                Ok(vec![v; nodes.len()])
            }
            InitialData::Gaussian {
                amplitude,
                width,
                offset,
            } => {
                if !(width > 0.0) {
                    return Err(Error::Domain(format!(
                        "Gaussian width {width} must be positive"
                    )));
                }
                Ok(nodes
                    .iter()
                    .map(|r| amplitude * (-(r / width).powi(2)).exp() + offset)
                    .collect())
            }
            InitialData::ScaledSteady { alpha, lambda } => {
                let fam = crate::steady::physical_family(params)?;
                nodes
                    .iter()
                    .map(|&r| Ok(lambda * fam.phi(alpha, r)?))
                    .collect()
            }
        }
    }
}

/// `κ(1 + e^s)^{-1/(p-1)}`.
pub fn flat_ancient(params: &ProblemParams, s: f64) -> f64 {
    let p = params.p();
    params.kappa() * (-(s.exp().ln_1p()) / (p - 1.0)).exp()
}

/// Run CSV with columns `time,sup_norm,energy,z_vs_phi_inf,rate`; the rate
/// `(T-t)^{1/(p-1)} ‖u‖_∞` is filled in physical runs when `t_est` is given.
pub fn run_csv(run: &EvolutionState, t_est: Option<f64>) -> String {
    let p = run.params.p();
    csv_text(
        &["time", "sup_norm", "energy", "z_vs_phi_inf", "rate"],
        run.history.iter().map(|h| {
            let rate = match (run.frame, t_est) {
                (Frame::Physical, Some(bt)) if h.time < bt => {
                    fmt_f64((bt - h.time).powf(1.0 / (p - 1.0)) * h.sup_norm)
                }
                _ => String::new(),
            };
            vec![
                fmt_f64(h.time),
                fmt_f64(h.sup_norm),
                fmt_f64(h.energy),
                h.z_vs_phi_inf.map(|z| z.to_string()).unwrap_or_default(),
                rate,
            ]
        }),
    )
}

/// Profile CSV with columns `rho,value`.
pub fn profile_csv(grid: &[f64], values: &[f64]) -> String {
    csv_text(
        &["rho", "value"],
        grid.iter()
            .zip(values)
            .map(|(r, v)| vec![fmt_f64(*r), fmt_f64(*v)]),
    )
}

/// Blowup rate CSV with columns `time,rate`.
pub fn blowup_rate_csv(report: &BlowupReport) -> String {
    csv_text(
        &["time", "rate"],
        report
            .rate
            .iter()
            .map(|(t, r)| vec![fmt_f64(*t), fmt_f64(*r)]),
    )
}

/// One-line blowup summary with columns `t_est,type,plateau,variation`.
pub fn blowup_summary_csv(report: &BlowupReport) -> String {
    let o = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    csv_text(
        &["t_est", "type", "plateau", "variation"],
        [vec![
            o(report.t_est),
            report.kind.as_str().to_string(),
            o(report.plateau),
            o(report.variation),
        ]],
    )
}
