//! Acceptance suite: one PASS/FAIL line per criterion on stdout.
//!
//! Runs without the libtest harness so the report is never captured. The
//! process fails when the set of failing criteria differs from
//! [`KNOWN_FAILURES`], so an unexpected pass is reported as loudly as an
//! unexpected failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use fujita_core::dynamics::{
    classify_blowup, evolve, flat_ancient, rescale_snapshot, BlowupEvent, BlowupTrigger,
    BlowupType, DtControl, EvolutionState, Grid, HistoryPoint, InitialData, OuterBoundary,
};
use fujita_core::energy::{energy, energy_kappa, energy_singular, ratio_row};
use fujita_core::linalg::{least_squares, linear_fit};
use fujita_core::odecore::RadialIvp;
use fujita_core::profile::RadialProfile;
use fujita_core::spectrum::{discretize_a, rate_series, Boundary, SpectralFrame};
use fujita_core::steady::{
    count_vs_singular, find_ak, fit_b, phi_alpha, physical_family, sweep, AkSearch, SteadyKind,
    COUNT_CELLS, SINGULAR_CUTOFF,
};
use fujita_core::zeronum::grid_sign_changes;
use fujita_core::{Frame, ProblemParams, RadialFn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria whose failure is expected and explained in the README.
/// 1: `pL < pH` is false for every `N >= 16` (equality at 16).
const KNOWN_FAILURES: &[u32] = &[1];

/// Failed sub-checks of one criterion, plus informational notes.
#[derive(Default)]
struct Findings {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Findings {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }
}

fn pp(n: u32, p: f64) -> ProblemParams {
    ProblemParams::new(n, p).expect("valid parameters")
}

// ---------------------------------------------------------------- oracle
// Fixed-point arithmetic with 18 decimals in i128, independent of the
// floating-point formulas in the library.

const SCALE: i128 = 1_000_000_000_000_000_000;

fn isqrt(n: i128) -> i128 {
    assert!(n >= 0);
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as i128;
    // Newton polish: x = floor(sqrt(n))
    loop {
        let y = (x + n / x) / 2;
        if (y - x).abs() <= 1 {
            x = y.min(x);
            break;
        }
        x = y;
    }
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// `sqrt(k)` scaled by `SCALE`.
fn sqrt_fixed(k: i128) -> i128 {
    isqrt(k * SCALE * SCALE)
}

fn fixed_to_f64(x: i128) -> f64 {
    (x / SCALE) as f64 + (x % SCALE) as f64 / SCALE as f64
}

/// Exponents `(pS, pJL, pL, pH)` of dimension `n > 10`, each scaled by `SCALE`.
/// pJL uses the reciprocal form `1 + 4/(N - 4 - 2 sqrt(N-1))`.
fn oracle_exponents(n: i128) -> (i128, i128, i128, i128) {
    let p_s = SCALE * (n + 2) / (n - 2);
    let p_jl = SCALE + 4 * SCALE * SCALE / ((n - 4) * SCALE - 2 * sqrt_fixed(n - 1));
    let p_l = SCALE + 6 * SCALE / (n - 10);
    let p_h = SCALE + 4 * ((n - 4) * SCALE + 2 * sqrt_fixed(n)) / (n * n - 12 * n + 16);
    (p_s, p_jl, p_l, p_h)
}

// ---------------------------------------------------------------- criteria

fn criterion_exponents(f: &mut Findings) {
    let t = fujita_core::params::exponent_table(12).unwrap();
    let (os, ojl, ol, oh) = oracle_exponents(12);
    for (name, got, want) in [
        ("pS", t.p_s, os),
        ("pJL", t.p_jl, ojl),
        ("pL", t.p_l, ol),
        ("pH", t.p_h, oh),
    ] {
        let got = got.finite().unwrap_or(f64::NAN);
        let want = fixed_to_f64(want);
        f.check(
            (got - want).abs() < 1e-9,
            format!("{name}(12) = {got}, oracle {want}"),
        );
    }
    f.check(
        (t.p_s.finite().unwrap() - 1.4).abs() < 1e-9,
        "pS(12) != 1.4",
    );
    f.check((t.p_l.finite().unwrap() - 4.0).abs() < 1e-9, "pL(12) != 4");
    f.note(format!("pJL(12) = {:.14}", t.p_jl.finite().unwrap()));

    let mut broken = Vec::new();
    for n in 11..=60u32 {
        let t = fujita_core::params::exponent_table(n).unwrap();
        let v = [t.p_s, t.p_jl, t.p_l, t.p_h].map(|x| x.finite().unwrap_or(f64::NAN));
        let (os, ojl, ol, oh) = oracle_exponents(n as i128);
        let exact = os < ojl && ojl < ol && ol < oh;
        let lib = v[0] < v[1] && v[1] < v[2] && v[2] < v[3];
        f.check(
            exact == lib,
            format!("N = {n}: library ordering disagrees with the oracle"),
        );
        if !exact {
            broken.push(n);
        }
    }
    if !broken.is_empty() {
        f.check(
            false,
            format!(
                "ordering pS < pJL < pL < pH fails for N in {}..={} ({} dimensions; pL = pH at N = 16, pH < pL beyond)",
                broken[0],
                broken[broken.len() - 1],
                broken.len()
            ),
        );
    }
}

fn criterion_energy_ratio(f: &mut Findings) {
    let row = ratio_row(&pp(12, 5.0)).unwrap();
    f.check(
        (row.f_gamma - 1.00347).abs() < 1e-4,
        format!("F(12, 5) = {}", row.f_gamma),
    );
    let rel = (row.f_gamma - row.f_quadrature).abs() / row.f_gamma;
    f.check(
        rel < 1e-8,
        format!("Gamma and quadrature paths differ by {rel:e}"),
    );
    let ps = [3.8, 4.0, 5.0, 6.0, 8.0, 12.0];
    let mut values = Vec::new();
    for p in ps {
        let r = ratio_row(&pp(12, p)).unwrap();
        let rel = (r.f_gamma - r.f_quadrature).abs() / r.f_gamma;
        f.check(rel < 1e-8, format!("p = {p}: paths differ by {rel:e}"));
        f.check(r.f_gamma > 1.0, format!("F(12, {p}) = {} <= 1", r.f_gamma));
        values.push(r.f_gamma);
    }
    f.check(
        values.windows(2).all(|w| w[1] < w[0]),
        format!("F not strictly decreasing: {values:?}"),
    );
    let far = ratio_row(&pp(12, 50.0)).unwrap().f_gamma;
    f.check((far - 1.0).abs() < 0.02, format!("F(12, 50) = {far}"));
    let near = ratio_row(&pp(12, 1.401)).unwrap().f_gamma;
    f.check(
        near > 100.0,
        format!("F(12, 1.401) = {near}, expected blowup near pS"),
    );
    f.note(format!(
        "F(12,5) = {:.6}, F(12,50) = {far:.6}, F(12,1.401) = {near:.1}",
        row.f_gamma
    ));
}

fn criterion_spectrum(f: &mut Findings) {
    let params = pp(12, 5.0);
    let frame = SpectralFrame::new(&params, 6).unwrap();
    // β from the quadratic β² + (N-2)β + p L^{p-1} = 0
    let (n, p) = (12.0_f64, 5.0_f64);
    let lp = 2.0 * ((n - 2.0) * p - n) / ((p - 1.0) * (p - 1.0));
    let beta = 0.5 * (-(n - 2.0) + ((n - 2.0) * (n - 2.0) - 4.0 * p * lp).sqrt());
    for (j, want) in [(0u32, 1.690983), (1, 0.690983), (2, -0.309017)] {
        let oracle = -(beta / 2.0 + 1.0 / (p - 1.0) + j as f64);
        f.check(
            (frame.mu(j) - oracle).abs() < 1e-12,
            format!("mu{j} vs oracle {oracle}"),
        );
        f.check(
            (frame.mu(j) - want).abs() < 1e-6,
            format!("mu{j} = {}", frame.mu(j)),
        );
    }
    let ev = |pts| {
        discretize_a(&frame, 0.05, 25.0, pts, Boundary::Dirichlet)
            .unwrap()
            .leading_eigenvalues(1)[0]
    };
    let (e2, e4, e8) = (ev(2000), ev(4000), ev(8000));
    f.check(
        (e4 - frame.mu(0)).abs() < 1e-3,
        format!("discrete mu0 = {e4}"),
    );
    let ratio = (e2 - e4) / (e4 - e8);
    f.check(
        (ratio - 4.0).abs() < 0.5,
        format!("successive-difference ratio {ratio}, expected 4"),
    );
    f.note(format!("discrete mu0 {e4:.7}, h-halving ratio {ratio:.3}"));
    let mut worst: f64 = 0.0;
    for i in 0..=5 {
        for j in i..=5 {
            let ip = frame
                .inner(|r| frame.theta(i, r), |r| frame.theta(j, r))
                .unwrap();
            worst = worst.max((ip - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    f.check(worst < 1e-8, format!("orthonormality defect {worst:e}"));
    for j in 0..=5u32 {
        let zeros = frame.zeros(j).len();
        let mut changes = 0;
        let mut prev = frame.theta(j, 1e-3);
        for i in 1..=20_000 {
            let v = frame.theta(j, 1e-3 + i as f64 * 1e-3);
            if v * prev < 0.0 {
                changes += 1;
            }
            prev = v;
        }
        f.check(
            zeros == j as usize && changes == j as usize,
            format!("theta_{j}: {zeros} roots, {changes} sign changes"),
        );
    }
    let at_l = SpectralFrame::new(&pp(12, 4.0), 2).unwrap().mu(2);
    f.check(at_l.abs() < 1e-10, format!("mu2(12, 4) = {at_l:e}"));
}

fn criterion_rate(f: &mut Findings) {
    let frame = SpectralFrame::new(&pp(12, 5.0), 2).unwrap();
    let s: Vec<f64> = (0..=8).map(|i| -4.0 - 0.5 * i as f64).collect();
    let rows = rate_series(&frame, 1.0, &s).unwrap();
    let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r.s, r.log_xi0())).unzip();
    let (_, slope) = linear_fit(&x, &y).unwrap();
    let mu0 = frame.mu(0);
    f.check(
        (slope / mu0 - 1.0).abs() < 0.02,
        format!("slope {slope} vs mu0 {mu0}"),
    );
    let ratios: Vec<f64> = rows
        .iter()
        .map(|r| r.xi1.abs().max(r.tail_norm) / r.xi0)
        .collect();
    f.check(
        ratios.windows(2).all(|w| w[1] < w[0]),
        format!("ratios not decreasing: {ratios:?}"),
    );
    let last = *ratios.last().unwrap();
    f.check(last < 0.05, format!("final ratio {last}"));
    f.note(format!(
        "slope {slope:.5} (mu0 {mu0:.5}), final ratio {last:.2e}"
    ));
}

fn criterion_atlas(f: &mut Findings) {
    let p12 = pp(12, 5.0);
    let k = p12.kappa();
    let alphas: Vec<f64> = (1..=64)
        .map(|i| k * (1.0 + 9.0 * i as f64 / 64.0))
        .collect();
    for (a, r) in alphas
        .iter()
        .zip(sweep(&p12, &alphas, Frame::SelfSimilar, 40.0))
    {
        match r {
            Ok(s) => {
                let finite = s.rho_alpha.is_some_and(f64::is_finite);
                f.check(
                    s.kind == SteadyKind::HitsZero && finite && s.k.is_some_and(|k| k <= 2),
                    format!("(12,5) alpha = {a}: {:?}, k = {:?}", s.kind, s.k),
                );
            }
            Err(e) => f.check(false, format!("(12,5) alpha = {a}: {e}")),
        }
    }

    let p6 = pp(6, 5.0);
    let k6 = p6.kappa();
    let wa = match find_ak(&p6, 2, (1.1 * k6, 50.0 * k6)).unwrap() {
        AkSearch::Found(s) => *s,
        AkSearch::NotFound { reason, .. } => {
            f.check(false, format!("no member with k = 2 at (6,5): {reason}"));
            return;
        }
    };
    f.check(
        wa.kind == SteadyKind::BoundedPositive,
        format!("member kind {:?}", wa.kind),
    );
    f.check(
        wa.value(0.0) > k6,
        format!("w(0) = {} <= kappa", wa.value(0.0)),
    );
    let decreasing = (1..=400).all(|i| wa.derivative(i as f64 * 0.1) < 0.0);
    f.check(decreasing, "w' >= 0 somewhere on (0, 40]");
    f.check(wa.k == Some(2), format!("k = {:?}", wa.k));
    f.check(wa.c_a.is_some_and(f64::is_finite), "c_a not finite");
    let (ek, ew, es) = (
        energy_kappa(&p6).unwrap(),
        energy(&wa, &p6).unwrap(),
        energy_singular(&p6).unwrap(),
    );
    f.check(
        ek < ew && ew < es,
        format!("E(kappa) = {ek}, E(w_a) = {ew}, E(phi_inf) = {es}"),
    );
    let hi = 3.0 * wa.trusted_radius;
    let z1 = count_vs_singular(&p6, &wa, SINGULAR_CUTOFF, hi, COUNT_CELLS)
        .unwrap()
        .count;
    let z2 = count_vs_singular(&p6, &wa, SINGULAR_CUTOFF, hi, 2 * COUNT_CELLS)
        .unwrap()
        .count;
    f.check(
        z1 == 2 && z2 == 2,
        format!("counts {z1} / {z2} under grid doubling"),
    );
    f.note(format!(
        "alpha_2 = {:.10} ({:.4} kappa), E: {ek:.6} < {ew:.6} < {es:.6}",
        wa.alpha,
        wa.alpha / k6
    ));
}

fn criterion_exact_evolution(f: &mut Findings) {
    let params = pp(12, 5.0);
    let ctl = DtControl {
        output_every: 0.25,
        ..DtControl::default()
    };
    let grid = Grid::new(20.0, 501).unwrap();
    let st = EvolutionState::from_fn(
        params,
        Frame::SelfSimilar,
        grid,
        |_| flat_ancient(&params, -2.0),
        -2.0,
    )
    .unwrap()
    .with_boundary(OuterBoundary::NoFlux);
    let out = evolve(st, 3.0, &ctl).unwrap();
    let mut worst: f64 = 0.0;
    for h in &out.history {
        let exact = flat_ancient(&params, h.time);
        for v in h.snapshot.as_ref().unwrap().iter() {
            worst = worst.max((v - exact).abs());
        }
    }
    f.check(
        (out.time - 3.0).abs() < 1e-12,
        format!("run stopped at s = {}", out.time),
    );
    f.check(worst < 1e-6, format!("flat data sup-error {worst:e}"));
    let mut still: f64 = 0.0;
    for (n, p) in [(6, 5.0), (12, 5.0)] {
        let params = pp(n, p);
        let k = params.kappa();
        let st = EvolutionState::from_fn(
            params,
            Frame::SelfSimilar,
            Grid::new(20.0, 401).unwrap(),
            |_| k,
            0.0,
        )
        .unwrap();
        let out = evolve(st, 5.0, &ctl).unwrap();
        still = still.max(out.values.iter().map(|v| (v - k).abs()).fold(0.0, f64::max));
    }
    f.check(still < 1e-10, format!("kappa drifts by {still:e}"));
    f.note(format!("flat error {worst:.1e}, kappa drift {still:.1e}"));
}

/// Two Gaussian bumps on a constant, kept below `cap` so the run is global.
fn random_data(rng: &mut ChaCha8Rng, cap: f64) -> impl Fn(f64) -> f64 {
    let a1 = rng.gen_range(0.05..0.3) * cap;
    let a2 = rng.gen_range(0.05..0.3) * cap;
    let c2 = rng.gen_range(0.5..4.0);
    let w1 = rng.gen_range(0.5..3.0);
    let w2 = rng.gen_range(0.3..1.5);
    let off = rng.gen_range(0.0..0.3) * cap;
    move |r: f64| a1 * (-(r / w1).powi(2)).exp() + a2 * (-((r - c2) / w2).powi(2)).exp() + off
}

fn z_diff(a: &[f64], b: &[f64]) -> usize {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = d.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    grid_sign_changes(&d, 1e-12 * scale)
}

/// Both zero-number criteria and the dissipation criterion come from the
/// same 20 pairs, so the runs are shared.
fn random_suite(zero: &mut Findings, dissipation: &mut Findings) {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_607);
    let cases = [(6, 5.0), (12, 5.0)];
    let (mut selfsimilar_runs, mut energy_points) = (0, 0);
    for i in 0..20 {
        let (n, p) = cases[i % 2];
        let frame = if (i / 2) % 2 == 0 {
            Frame::SelfSimilar
        } else {
            Frame::Physical
        };
        let params = pp(n, p);
        let (grid, span) = match frame {
            Frame::SelfSimilar => (Grid::new(20.0, 401).unwrap(), 5.0),
            Frame::Physical => (Grid::new(10.0, 401).unwrap(), 1.0),
        };
        let cap = 0.8 * params.kappa();
        let ctl = DtControl {
            output_every: span / 25.0,
            ..DtControl::default()
        };
        let runs: Vec<EvolutionState> = (0..2)
            .map(|_| {
                let data = random_data(&mut rng, cap);
                let st = EvolutionState::from_fn(params, frame, grid, data, 0.0).unwrap();
                evolve(st, span, &ctl).unwrap()
            })
            .collect();
        let (a, b) = (&runs[0], &runs[1]);
        zero.check(
            a.blowup.is_none() && b.blowup.is_none(),
            format!("pair {i}: unexpected blowup"),
        );
        let z: Vec<usize> = a
            .history
            .iter()
            .zip(&b.history)
            .map(|(x, y)| z_diff(x.snapshot.as_ref().unwrap(), y.snapshot.as_ref().unwrap()))
            .collect();
        zero.check(
            a.history.len() == b.history.len() && z.windows(2).all(|w| w[1] <= w[0]),
            format!("pair {i} ({n},{p}) {}: z = {z:?}", frame.as_str()),
        );
        if frame != Frame::SelfSimilar {
            continue;
        }
        for run in &runs {
            selfsimilar_runs += 1;
            let zs: Vec<usize> = run
                .history
                .iter()
                .map(|h| h.z_vs_phi_inf.unwrap_or(usize::MAX))
                .collect();
            zero.check(
                zs.windows(2).all(|w| w[1] <= w[0]),
                format!("pair {i}: z(v - phi_inf) = {zs:?}"),
            );
            let e: Vec<f64> = run.history.iter().map(|h| h.energy).collect();
            energy_points += e.len();
            for w in e.windows(2) {
                dissipation.check(
                    w[1] <= w[0] + 1e-6 * w[0].abs(),
                    format!("pair {i}: energy rises {w:?}"),
                );
            }
            dissipation.check(
                e.iter().all(|x| *x >= 0.0),
                format!("pair {i}: negative energy"),
            );
        }
    }
    zero.note(format!("20 pairs, {selfsimilar_runs} self-similar runs"));
    dissipation.note(format!(
        "{selfsimilar_runs} runs, {energy_points} energy samples"
    ));
}

fn synthetic_homogeneous(params: ProblemParams) -> EvolutionState {
    let k = params.kappa();
    let p = params.p();
    let grid = Grid::new(1.0, 3).unwrap();
    let mut st = EvolutionState::new(params, Frame::Physical, grid, vec![k; 3], 0.0).unwrap();
    // u = κ (T - t)^{-1/(p-1)} with T = 1, sampled geometrically down to T - t = 1e-8
    for i in 0..=160 {
        let tau = 10f64.powf(-(i as f64) / 20.0);
        let u = k * tau.powf(-1.0 / (p - 1.0));
        st.history.push(HistoryPoint {
            time: 1.0 - tau,
            sup_norm: u,
            energy: 0.0,
            z_vs_phi_inf: None,
            snapshot: Some(std::sync::Arc::new(vec![u; 3])),
        });
        st.time = 1.0 - tau;
        st.values = vec![u; 3];
    }
    st.blowup = Some(BlowupEvent {
        time: st.time,
        sup_norm: st.values[0],
        trigger: BlowupTrigger::SupThreshold,
    });
    st
}

fn criterion_blowup(f: &mut Findings) {
    let params = pp(6, 5.0);
    let k = params.kappa();
    let rep = classify_blowup(&synthetic_homogeneous(params)).unwrap();
    f.check(
        rep.kind == BlowupType::TypeI,
        format!("homogeneous: {:?}", rep.kind),
    );
    let t_err = (rep.t_est.unwrap_or(f64::NAN) - 1.0).abs();
    f.check(t_err < 1e-4, format!("homogeneous T_est error {t_err:e}"));
    let rate_err = rep
        .rate
        .iter()
        .map(|(_, r)| (r - k).abs())
        .fold(0.0, f64::max);
    f.check(
        rate_err < 1e-6,
        format!("homogeneous rate error {rate_err:e}"),
    );

    let grid = Grid::new(10.0, 501).unwrap();
    let values = InitialData::ScaledSteady {
        alpha: 1.0,
        lambda: 1.5,
    }
    .sample(&params, &grid)
    .unwrap();
    let st = EvolutionState::new(params, Frame::Physical, grid, values, 0.0).unwrap();
    let ctl = DtControl {
        output_every: 0.01,
        ..DtControl::default()
    };
    let out = evolve(st, 10.0, &ctl).unwrap();
    f.check(out.blowup.is_some(), "super-threshold run did not blow up");
    match classify_blowup(&out) {
        Ok(rep) => {
            f.check(
                rep.kind == BlowupType::TypeI,
                format!("generic run: {:?}", rep.kind),
            );
            let plateau = rep.plateau.unwrap_or(f64::NAN);
            f.check(plateau.is_finite() && plateau > 0.0, "no rate plateau");
            f.note(format!(
                "generic T_est {:.6}, plateau {plateau:.5} (kappa {k:.5}), variation {:.2}%",
                rep.t_est.unwrap_or(f64::NAN),
                100.0 * rep.variation.unwrap_or(f64::NAN)
            ));
        }
        Err(e) => f.check(false, format!("generic run: {e}")),
    }

    let fam = physical_family(&params).unwrap();
    let lambda: f64 = 0.01;
    let m = 2.0 / (params.p() - 1.0);
    let rho: Vec<f64> = (0..400).map(|i| i as f64 * 0.05).collect();
    let grid: Vec<f64> = rho.iter().map(|r| lambda * r).collect();
    let vals: Vec<f64> = rho
        .iter()
        .map(|&r| lambda.powf(-m) * fam.phi(1.0, r).unwrap())
        .collect();
    let out = rescale_snapshot(&RadialProfile::new(grid, vals, None).unwrap(), params.p()).unwrap();
    let worst = out
        .grid()
        .iter()
        .zip(out.values())
        .map(|(r, v)| (v - fam.phi(1.0, *r).unwrap()).abs())
        .fold(0.0, f64::max);
    f.check(worst < 1e-12, format!("phi_1 round trip error {worst:e}"));
}

/// `b(alpha)` in `phi_alpha ≈ L r^{-m} - b r^beta`, fitted on a direct shot
/// with center `alpha` over `[R/2, R]`, `R = 100 alpha^{-(p-1)/2}`, against
/// the two leading remainder powers. No scaling identity is used.
fn direct_b(params: &ProblemParams, alpha: f64) -> f64 {
    let (n, p) = (params.dim_f64(), params.p());
    let m = 2.0 / (p - 1.0);
    let l = (2.0 * ((n - 2.0) * p - n) / ((p - 1.0) * (p - 1.0))).powf(1.0 / (p - 1.0));
    let lp = l.powf(p - 1.0);
    let disc = ((n - 2.0) * (n - 2.0) - 4.0 * p * lp).sqrt();
    let (beta, beta_minus) = (0.5 * (-(n - 2.0) + disc), 0.5 * (-(n - 2.0) - disc));
    let r_max = 100.0 * alpha.powf(-(p - 1.0) / 2.0);
    let sol = RadialIvp::new(*params, Frame::Physical, alpha)
        .integrate(r_max, 1e-13, 1e-300)
        .unwrap();
    let (mut rows, mut ys) = (Vec::new(), Vec::new());
    for i in 0..48 {
        let r = 0.5 * r_max * 2f64.powf(i as f64 / 47.0);
        rows.push(vec![1.0, r.powf(beta_minus - beta), r.powf(beta + m)]);
        ys.push((l * r.powf(-m) - sol.value(r)) * r.powf(-beta));
    }
    least_squares(&rows, &ys).unwrap().0[0]
}

fn criterion_scaling(f: &mut Findings) {
    let mut worst: f64 = 0.0;
    for (n, p) in [(12, 5.0), (6, 5.0)] {
        let params = pp(n, p);
        for &alpha in &[0.5, 2.0, 4.0, 7.3] {
            let direct = RadialIvp::new(params, Frame::Physical, alpha)
                .integrate(5.0, 1e-13, 1e-15)
                .unwrap();
            for i in 0..=20 {
                let r = i as f64 * 0.25;
                let a = phi_alpha(&params, alpha, r).unwrap();
                worst = worst.max((a - direct.value(r)).abs() / a.max(1e-3));
            }
        }
    }
    f.check(worst < 1e-10, format!("scaling identity error {worst:e}"));

    let params = pp(12, 5.0);
    let beta = params.beta().unwrap();
    let b1 = direct_b(&params, 1.0);
    let mut b_worst: f64 = 0.0;
    let mut lib_worst: f64 = 0.0;
    for &alpha in &[2.0_f64, 4.0, 8.0] {
        let expect = alpha.powf(1.0 + beta * (params.p() - 1.0) / 2.0);
        let ratio = direct_b(&params, alpha) / b1;
        b_worst = b_worst.max((ratio / expect - 1.0).abs());
        let lib = fit_b(&params, alpha).unwrap() / fit_b(&params, 1.0).unwrap();
        lib_worst = lib_worst.max((lib / expect - 1.0).abs());
    }
    f.check(
        b_worst < 1e-3,
        format!("b(alpha)/b(1) from direct shots, relative error {b_worst:e}"),
    );
    f.check(
        lib_worst < 1e-3,
        format!("b(alpha)/b(1) from the library fit, relative error {lib_worst:e}"),
    );

    let fam = physical_family(&params).unwrap();
    let l = params.l().unwrap();
    let m = params.decay_exponent();
    let g = beta + m;
    let c = |r: f64| r.powf(m) * fam.phi(1.0, r).unwrap();
    let extrap = (c(40.0) - c(20.0) * 2f64.powf(g)) / (1.0 - 2f64.powf(g));
    f.check(
        (extrap - l).abs() < 1e-4,
        format!("extrapolated amplitude {extrap} vs L = {l}"),
    );
    f.note(format!(
        "scaling {worst:.1e}, b ratio {b_worst:.1e} (library fit {lib_worst:.1e}), amplitude error {:.1e}",
        (extrap - l).abs()
    ));
}

// ---------------------------------------------------------------- determinism

const EVOLVE_CFG: &str = "# flat ancient data\nN = 12\np = 5\ninitial = flat\nt0 = -2\nt_end = 1\n\
points = 300\nboundary = noflux\nout = flat.csv\nsnapshots = -1, 0, 1\n";
const RANDOM_CFG: &str =
    "N = 6\np = 5\ninitial = random\nseed = 7\nt_end = 2\npoints = 300\nout = random.csv\n";
const BLOWUP_CFG: &str = "N = 6\np = 5\ninitial = steady\nalpha = 1\nlambda = 1.5\npoints = 300\n\
output_every = 0.01\nout = blowup.csv\nprofile_out = blowup_profile.csv\n";

fn run_all_commands(dir: &Path, threads: Option<&str>) -> Result<(), String> {
    std::fs::write(dir.join("flat.cfg"), EVOLVE_CFG).unwrap();
    std::fs::write(dir.join("random.cfg"), RANDOM_CFG).unwrap();
    std::fs::write(dir.join("blowup.cfg"), BLOWUP_CFG).unwrap();
    let commands: [&[&str]; 7] = [
        &[
            "exponents",
            "--N",
            "11",
            "--n-max",
            "60",
            "--csv",
            "exponents.csv",
        ],
        &[
            "energy-ratio",
            "--N",
            "12",
            "--p-min",
            "3.8",
            "--p-max",
            "12",
            "--steps",
            "50",
            "--out",
            "ratio.csv",
        ],
        &[
            "steady",
            "--N",
            "6",
            "--p",
            "5",
            "--steps",
            "16",
            "--alpha-min",
            "1",
            "--alpha-max",
            "20",
            "--find-k",
            "2",
        ],
        &[
            "spectrum",
            "--N",
            "12",
            "--p",
            "5",
            "--rate-out",
            "rate.csv",
        ],
        &["evolve", "--config", "flat.cfg"],
        &["evolve", "--config", "random.cfg"],
        &["blowup", "--config", "blowup.cfg"],
    ];
    for args in commands {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_fujita-lab"));
        cmd.args(args).current_dir(dir);
        if let Some(t) = threads {
            cmd.env("FUJITA_LAB_THREADS", t);
        }
        let out = cmd.output().map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!(
                "{args:?}: {}",
                String::from_utf8_lossy(&out.stderr)
            ));
        }
    }
    Ok(())
}

fn csv_files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                PathBuf::from(p.file_name().unwrap()),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn criterion_determinism(f: &mut Findings) {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    // one serial and one default-parallel run, so worker count is covered too
    for (dir, threads) in [(a.path(), Some("1")), (b.path(), None)] {
        if let Err(e) = run_all_commands(dir, threads) {
            f.check(false, e);
            return;
        }
    }
    let (fa, fb) = (csv_files(a.path()), csv_files(b.path()));
    f.check(
        fa.len() >= 10,
        format!("only {} CSV files produced", fa.len()),
    );
    f.check(
        fa.keys().eq(fb.keys()),
        format!("file sets differ: {:?} vs {:?}", fa.keys(), fb.keys()),
    );
    for (name, bytes) in &fa {
        f.check(
            fb.get(name) == Some(bytes),
            format!("{} differs between runs", name.display()),
        );
    }
    f.note(format!("{} CSV files byte-identical", fa.len()));
}

// ---------------------------------------------------------------- driver

struct Outcome {
    id: u32,
    title: &'static str,
    findings: Findings,
    elapsed: Duration,
    limit: Option<Duration>,
}

impl Outcome {
    fn passed(&self) -> bool {
        self.findings.failures.is_empty() && self.limit.map_or(true, |l| self.elapsed <= l)
    }

    fn report(&self) {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let limit = self
            .limit
            .map(|l| format!(" / {}s", l.as_secs()))
            .unwrap_or_default();
        println!(
            "{status} [{:>2}] {} ({:.2}s{limit})",
            self.id,
            self.title,
            self.elapsed.as_secs_f64()
        );
        if let Some(l) = self.limit.filter(|l| self.elapsed > *l) {
            println!(
                "       runtime {:.2}s exceeds {}s",
                self.elapsed.as_secs_f64(),
                l.as_secs()
            );
        }
        for m in &self.findings.failures {
            println!("       fail: {m}");
        }
        for m in &self.findings.notes {
            println!("       note: {m}");
        }
    }
}

fn run(
    id: u32,
    title: &'static str,
    limit: Option<u64>,
    body: impl FnOnce(&mut Findings),
) -> Outcome {
    let mut findings = Findings::default();
    let start = Instant::now();
    body(&mut findings);
    Outcome {
        id,
        title,
        findings,
        elapsed: start.elapsed(),
        limit: limit.map(Duration::from_secs),
    }
}

fn main() {
    // `cargo test -- --list` and filters from the harness are not meaningful here
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut outcomes = vec![
        run(
            1,
            "exponent table and ordering",
            Some(1),
            criterion_exponents,
        ),
        run(2, "energy ratio F", Some(5), criterion_energy_ratio),
        run(
            3,
            "spectrum of the linearization",
            Some(30),
            criterion_spectrum,
        ),
        run(4, "spectral rate law", Some(60), criterion_rate),
        run(5, "steady-state atlas", Some(60), criterion_atlas),
        run(
            6,
            "exact-solution evolution",
            Some(30),
            criterion_exact_evolution,
        ),
    ];
    let mut dissipation = Findings::default();
    let start = Instant::now();
    let mut zero = run(7, "zero-number monotonicity", Some(300), |f| {
        random_suite(f, &mut dissipation)
    });
    let suite_time = start.elapsed();
    zero.elapsed = suite_time;
    outcomes.push(zero);
    outcomes.push(Outcome {
        id: 8,
        title: "energy dissipation (shares the runs of 7)",
        findings: dissipation,
        elapsed: suite_time,
        limit: None,
    });
    outcomes.push(run(9, "blowup classification", None, criterion_blowup));
    outcomes.push(run(10, "scaling laws", None, criterion_scaling));
    outcomes.push(run(
        11,
        "determinism of CSV output",
        None,
        criterion_determinism,
    ));

    println!();
    for o in &outcomes {
        o.report();
    }
    let failed: Vec<u32> = outcomes
        .iter()
        .filter(|o| !o.passed())
        .map(|o| o.id)
        .collect();
    println!(
        "\n{} of {} criteria pass; failing: {failed:?}; expected failures: {KNOWN_FAILURES:?}",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    if failed != KNOWN_FAILURES {
        eprintln!(
            "acceptance: failing set {failed:?} differs from the expected {KNOWN_FAILURES:?}"
        );
        std::process::exit(1);
    }
}
