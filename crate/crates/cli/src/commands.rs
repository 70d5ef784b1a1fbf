use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fujita_core::dynamics::{
    blowup_rate_csv, blowup_summary_csv, classify_blowup, detect_limit, evolve, profile_csv,
    run_csv, DtControl, EvolutionState, Grid, InitialData, LimitVerdict, OuterBoundary,
};
use fujita_core::energy::{energy, energy_kappa, ratio_csv, ratio_row};
use fujita_core::output::{csv_text, fmt_f64, fmt_opt, write_atomic};
use fujita_core::params::{exponent_table, ExponentTable};
use fujita_core::spectrum::{
    discretize_a, rate_csv, rate_series, Boundary, SpectralFrame, JMAX_CAP,
};
use fujita_core::steady::{
    find_ak, sweep, AkSearch, SteadyKind, DEFAULT_RMAX_PHYSICAL, DEFAULT_RMAX_SELFSIMILAR,
};
use fujita_core::{ExtReal, Frame, ProblemParams, RadialFn, SteadyState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::svg::{line_plot, Series};
use crate::Invalid;

fn params(n: u32, p: f64) -> Result<ProblemParams, Invalid> {
    ProblemParams::new(n, p).map_err(|e| Invalid(e.to_string()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn ext(x: ExtReal) -> String {
    match x.finite() {
        Some(v) => format!("{v}"),
        None => "inf".to_string(),
    }
}

pub fn exponents(n: u32, n_max: Option<u32>, csv: Option<&Path>) -> Result<()> {
    let hi = n_max.unwrap_or(n);
    if n < 3 || hi < n {
        return Err(Invalid(format!("need 3 <= N <= N-max (got N = {n}, N-max = {hi})")).into());
    }
    let tables: Vec<ExponentTable> = (n..=hi)
        .map(exponent_table)
        .collect::<std::result::Result<_, _>>()?;
    for t in &tables {
        println!("N = {}", t.n);
        println!("  pS  = {}", ext(t.p_s));
        println!("  p*  = {}", ext(t.p_star));
        println!("  pJL = {}", ext(t.p_jl));
        println!("  pL  = {}", ext(t.p_l));
        println!("  pH  = {}", ext(t.p_h));
    }
    if let Some(path) = csv {
        let e = |x: ExtReal| x.finite().map(fmt_f64).unwrap_or_else(|| "inf".into());
        let text = csv_text(
            &["N", "pS", "p_star", "pJL", "pL", "pH"],
            tables.iter().map(|t| {
                vec![
                    t.n.to_string(),
                    e(t.p_s),
                    e(t.p_star),
                    e(t.p_jl),
                    e(t.p_l),
                    e(t.p_h),
                ]
            }),
        );
        write(path, &text)?;
    }
    Ok(())
}

pub struct SteadyArgs {
    pub n: u32,
    pub p: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub steps: usize,
    pub frame: Frame,
    pub rmax: Option<f64>,
    pub find_k: Option<usize>,
    pub out: PathBuf,
}

fn state_energy(s: &SteadyState) -> Option<f64> {
    if s.frame != Frame::SelfSimilar {
        return None;
    }
    if s.is_constant() {
        return energy_kappa(&s.params).ok();
    }
    (s.kind == SteadyKind::BoundedPositive)
        .then(|| energy(s, &s.params).ok())
        .flatten()
}

fn atlas_row(s: &SteadyState) -> Vec<String> {
    vec![
        s.params.dim().to_string(),
        fmt_f64(s.params.p()),
        fmt_f64(s.alpha),
        s.kind.as_str().to_string(),
        s.k.map(|k| k.to_string()).unwrap_or_default(),
        fmt_opt(s.rho_alpha),
        fmt_opt(s.c_a),
        fmt_opt(state_energy(s)),
    ]
}

pub fn steady(a: &SteadyArgs) -> Result<()> {
    let pr = params(a.n, a.p)?;
    if !(a.alpha_min > 0.0 && a.alpha_max > a.alpha_min && a.alpha_max.is_finite()) || a.steps == 0
    {
        return Err(Invalid("need 0 < alpha-min < alpha-max and steps >= 1".into()).into());
    }
    let rmax = a.rmax.unwrap_or(match a.frame {
        Frame::SelfSimilar => DEFAULT_RMAX_SELFSIMILAR,
        Frame::Physical => DEFAULT_RMAX_PHYSICAL,
    });
    if !(rmax > 0.1) {
        return Err(Invalid(format!("rmax = {rmax} too small")).into());
    }
    let alphas: Vec<f64> = (1..=a.steps)
        .map(|i| a.alpha_min + (a.alpha_max - a.alpha_min) * i as f64 / a.steps as f64)
        .collect();
    let results = sweep(&pr, &alphas, a.frame, rmax);
    let mut rows = Vec::new();
    let mut failed = 0;
    for (alpha, r) in alphas.iter().zip(results) {
        match r {
            Ok(s) => rows.push(atlas_row(&s)),
            Err(e) => {
                failed += 1;
                eprintln!("alpha = {alpha}: {e}");
                let mut row = vec![
                    a.n.to_string(),
                    fmt_f64(a.p),
                    fmt_f64(*alpha),
                    "inconclusive".into(),
                ];
                row.extend(vec![String::new(); 4]);
                rows.push(row);
            }
        }
    }
    if let Some(k) = a.find_k {
        if a.frame != Frame::SelfSimilar {
            return Err(Invalid("find-k searches self-similar steady states".into()).into());
        }
        match find_ak(&pr, k, (a.alpha_min, a.alpha_max)).map_err(|e| match e {
            fujita_core::Error::Domain(m) => anyhow::Error::new(Invalid(m)),
            other => other.into(),
        })? {
            AkSearch::Found(s) => {
                println!("found k = {k} member at alpha = {}", s.alpha);
                rows.push(atlas_row(&s));
            }
            AkSearch::NotFound { bracket, reason } => {
                println!(
                    "no k = {k} member in [{}, {}]: {reason}",
                    bracket.0, bracket.1
                );
            }
        }
    }
    let text = csv_text(
        &["N", "p", "alpha", "kind", "k", "rho_alpha", "c_a", "E"],
        rows,
    );
    write(&a.out, &text)?;
    println!(
        "{} shots ({failed} inconclusive) written to {}",
        alphas.len(),
        a.out.display()
    );
    Ok(())
}

pub fn energy_ratio(
    n: u32,
    p_min: f64,
    p_max: f64,
    steps: usize,
    out: &Path,
    svg: Option<&Path>,
) -> Result<()> {
    if steps < 2 || !(p_max > p_min) || !p_max.is_finite() {
        return Err(Invalid("need p-min < p-max and steps >= 2".into()).into());
    }
    let first = params(n, p_min)?;
    let p_s = first.p_s().finite().unwrap_or(f64::INFINITY);
    if !(p_min > p_s) {
        return Err(Invalid(format!("p-min = {p_min} must exceed pS = {p_s}")).into());
    }
    let ps: Vec<f64> = (0..steps)
        .map(|i| p_min + (p_max - p_min) * i as f64 / (steps - 1) as f64)
        .collect();
    let rows = ps
        .par_iter()
        .map(|&p| ratio_row(&ProblemParams::new(n, p)?))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    write(out, &ratio_csv(&rows))?;
    if let Some(svg) = svg {
        let plot = line_plot(
            &format!("energy ratio F, N = {n}"),
            "p",
            "F",
            &[Series {
                name: "F (Gamma form)",
                points: rows.iter().map(|r| (r.p, r.f_gamma)).collect(),
            }],
        );
        write(svg, &plot)?;
    }
    println!("{} rows written to {}", rows.len(), out.display());
    Ok(())
}

pub struct SpectrumArgs {
    pub n: u32,
    pub p: f64,
    pub jmax: u32,
    pub points: usize,
    pub rho_min: f64,
    pub rho_max: f64,
    pub out: PathBuf,
    pub alpha: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub s_steps: usize,
    pub rate_out: Option<PathBuf>,
}

pub fn spectrum(a: &SpectrumArgs) -> Result<()> {
    let pr = params(a.n, a.p)?;
    if a.jmax > JMAX_CAP {
        return Err(Invalid(format!("jmax = {} exceeds {JMAX_CAP}", a.jmax)).into());
    }
    if !(pr.discriminant() > 0.0) {
        return Err(Invalid(format!("the spectral frame needs p > pJL (p = {})", a.p)).into());
    }
    if !(a.rho_min > 0.0 && a.rho_max > a.rho_min) || a.points < 3 {
        return Err(Invalid("need 0 < rho-min < rho-max and points >= 3".into()).into());
    }
    let frame = SpectralFrame::new(&pr, a.jmax)?;
    let tri = discretize_a(&frame, a.rho_min, a.rho_max, a.points, Boundary::Dirichlet)?;
    let discrete = tri.leading_eigenvalues(a.jmax as usize + 1);
    let rows = (0..=a.jmax).map(|j| {
        vec![
            j.to_string(),
            fmt_f64(frame.mu(j)),
            discrete
                .get(j as usize)
                .copied()
                .map(fmt_f64)
                .unwrap_or_default(),
            fmt_f64(frame.c_hat(j)),
            frame.c_hat_closed(j).map(fmt_f64).unwrap_or_default(),
            frame.zeros(j).len().to_string(),
        ]
    });
    write(
        &a.out,
        &csv_text(
            &["j", "mu", "mu_discrete", "c_hat", "c_hat_closed", "zeros"],
            rows,
        ),
    )?;
    for j in 0..=a.jmax.min(2) {
        println!(
            "mu_{j} = {} (discrete {})",
            frame.mu(j),
            discrete[j as usize]
        );
    }
    if let Some(rate_out) = &a.rate_out {
        if a.jmax < 1 {
            return Err(Invalid("the rate diagnostic needs jmax >= 1".into()).into());
        }
        if a.s_steps < 2 || !(a.s_max > a.s_min) || !(a.alpha > 0.0) {
            return Err(Invalid("need s-min < s-max, s-steps >= 2 and alpha > 0".into()).into());
        }
        let s: Vec<f64> = (0..a.s_steps)
            .map(|i| a.s_max - (a.s_max - a.s_min) * i as f64 / (a.s_steps - 1) as f64)
            .collect();
        let series = rate_series(&frame, a.alpha, &s)?;
        write(rate_out, &rate_csv(&series))?;
    }
    Ok(())
}

pub const RUN_KEYS: &[&str] = &[
    "N",
    "p",
    "frame",
    "R",
    "points",
    "t0",
    "t_end",
    "output_every",
    "rtol",
    "atol",
    "boundary",
    "initial",
    "value",
    "s0",
    "amplitude",
    "width",
    "offset",
    "alpha",
    "lambda",
    "k",
    "eps",
    "seed",
    "blowup_sup",
    "out",
    "snapshots",
    "summary",
    "profile_out",
    "svg",
];

struct RunSetup {
    state: EvolutionState,
    until: f64,
    ctl: DtControl,
}

fn positive(c: &RunConfig, key: &str, default: f64) -> Result<f64, Invalid> {
    let v: f64 = c.get_or(key, default)?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Invalid(format!(
            "'{key}' must be positive and finite (got {v})"
        )));
    }
    Ok(v)
}

fn setup_run(c: &RunConfig, forced: Option<Frame>) -> Result<RunSetup> {
    let pr = params(c.require("N")?, c.require("p")?)?;
    let frame = match (forced, c.get::<Frame>("frame")?) {
        (Some(f), None) => f,
        (Some(f), Some(g)) if f == g => f,
        (Some(_), Some(g)) => {
            return Err(Invalid(format!(
                "this command runs in physical variables, not {}",
                g.as_str()
            ))
            .into())
        }
        (None, Some(g)) => g,
        (None, None) => Frame::SelfSimilar,
    };
    let default_grid = Grid::default_for(frame);
    let r = positive(c, "R", default_grid.r_max())?;
    let points: usize = c.get_or("points", default_grid.points())?;
    let grid = Grid::new(r, points).map_err(|e| Invalid(e.to_string()))?;
    let t0: f64 = c.get_or("t0", 0.0)?;
    let span_default = if forced.is_some() { 10.0 } else { 5.0 };
    let until: f64 = c.get_or("t_end", t0 + span_default)?;
    if !(until > t0) || !t0.is_finite() || !until.is_finite() {
        return Err(Invalid(format!("need t0 < t_end (got {t0}, {until})")).into());
    }
    let boundary: OuterBoundary = c.get_or("boundary", OuterBoundary::Pinned)?;
    let kappa = pr.kappa();
    let initial = c.raw("initial").unwrap_or("gaussian");
    let values = match initial {
        "constant" => InitialData::Constant(c.get_or("value", kappa)?).sample(&pr, &grid)?,
        "flat" => InitialData::FlatAncient {
            s0: c.get_or("s0", t0)?,
        }
        .sample(&pr, &grid)?,
        "gaussian" => InitialData::Gaussian {
            amplitude: c.get_or("amplitude", 0.5)?,
            width: positive(c, "width", 2.0)?,
            offset: c.get_or("offset", 0.0)?,
        }
        .sample(&pr, &grid)?,
        "steady" => InitialData::ScaledSteady {
            alpha: positive(c, "alpha", 1.0)?,
            lambda: c.get_or("lambda", 1.0)?,
        }
        .sample(&pr, &grid)?,
        "ak" => {
            let k: usize = c.get_or("k", 2)?;
            let eps: f64 = c.get_or("eps", 0.05)?;
            let wa = match find_ak(&pr, k, (1.1 * kappa, 50.0 * kappa))
                .map_err(|e| Invalid(e.to_string()))?
            {
                AkSearch::Found(s) => s,
                AkSearch::NotFound { reason, .. } => {
                    return Err(
                        Invalid(format!("no k = {k} steady state to start from: {reason}")).into(),
                    )
                }
            };
            grid.nodes()
                .iter()
                .map(|&r| wa.value(r) + eps * (kappa - wa.value(r)))
                .collect()
        }
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(c.get_or("seed", 0u64)?);
            let cap = 0.8 * kappa;
            let (a1, a2) = (
                rng.gen_range(0.05..0.3) * cap,
                rng.gen_range(0.05..0.3) * cap,
            );
            let (c2, w1, w2) = (
                rng.gen_range(0.5..4.0),
                rng.gen_range(0.5..3.0),
                rng.gen_range(0.3..1.5),
            );
            let off = rng.gen_range(0.0..0.3) * cap;
            grid.nodes()
                .iter()
                .map(|&r: &f64| {
                    a1 * (-(r / w1).powi(2)).exp() + a2 * (-((r - c2) / w2).powi(2)).exp() + off
                })
                .collect()
        }
        other => return Err(Invalid(format!("unknown initial data '{other}'")).into()),
    };
    let state = EvolutionState::new(pr, frame, grid, values, t0)
        .map_err(|e| Invalid(e.to_string()))?
        .with_boundary(boundary);
    let defaults = DtControl::default();
    let ctl = DtControl {
        rtol: positive(c, "rtol", defaults.rtol)?,
        atol: c.get_or("atol", defaults.atol)?,
        output_every: positive(c, "output_every", (until - t0) / 50.0)?,
        blowup_sup: positive(c, "blowup_sup", defaults.blowup_sup)?,
        ..defaults
    };
    Ok(RunSetup { state, until, ctl })
}

fn out_path(c: &RunConfig, key: &str, fallback: &str) -> PathBuf {
    c.path(key).unwrap_or_else(|| PathBuf::from(fallback))
}

fn snapshot_path(out: &Path, i: usize) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.snap{i}.csv"))
}

fn series_plot(run: &EvolutionState, title: &str) -> String {
    let time = if run.frame == Frame::Physical {
        "t"
    } else {
        "s"
    };
    line_plot(
        title,
        time,
        "sup norm",
        &[Series {
            name: "sup norm",
            points: run.history.iter().map(|h| (h.time, h.sup_norm)).collect(),
        }],
    )
}

pub fn evolve_cmd(config: &Path) -> Result<()> {
    let c = RunConfig::load(config, RUN_KEYS)?;
    let setup = setup_run(&c, None)?;
    let snaps = c.list_f64("snapshots")?;
    let out = out_path(&c, "out", "run.csv");
    let run = evolve(setup.state, setup.until, &setup.ctl)?;
    write(&out, &run_csv(&run, None))?;
    for (i, t) in snaps.iter().enumerate() {
        if let Some((_, prof)) = run.snapshot_near(*t) {
            write(
                &snapshot_path(&out, i),
                &profile_csv(prof.grid(), prof.values()),
            )?;
        }
    }
    if let Some(svg) = c.path("svg") {
        write(&svg, &series_plot(&run, "evolution"))?;
    }
    println!(
        "final time {} sup {}",
        fmt_f64(run.time),
        fmt_f64(run.sup_norm())
    );
    if let Some(ev) = run.blowup {
        println!(
            "blowup event at {} (sup {})",
            fmt_f64(ev.time),
            fmt_f64(ev.sup_norm)
        );
    }
    if run.frame == Frame::SelfSimilar {
        match detect_limit(&run, &[]) {
            LimitVerdict::Converged { target, distance } => {
                println!("limit: {} (distance {})", target.label(), fmt_f64(distance))
            }
            LimitVerdict::Undecided {
                nearest,
                distance,
                reason,
            } => println!(
                "limit undecided: {reason} (nearest {}, distance {})",
                nearest.map(|t| t.label()).unwrap_or_else(|| "none".into()),
                fmt_f64(distance)
            ),
        }
    }
    Ok(())
}

pub fn blowup_cmd(config: &Path) -> Result<()> {
    let c = RunConfig::load(config, RUN_KEYS)?;
    let setup = setup_run(&c, Some(Frame::Physical))?;
    let out = out_path(&c, "out", "blowup.csv");
    let run = evolve(setup.state, setup.until, &setup.ctl)?;
    let report = classify_blowup(&run)?;
    write(&out, &run_csv(&run, report.t_est))?;
    let summary = c
        .path("summary")
        .unwrap_or_else(|| out.with_extension("summary.csv"));
    write(&summary, &blowup_summary_csv(&report))?;
    if let Some(path) = c.path("profile_out") {
        if let Some((_, prof)) = report.profiles.last() {
            write(&path, &profile_csv(prof.grid(), prof.values()))?;
        }
    }
    if let Some(svg) = c.path("svg") {
        let plot = line_plot(
            "blowup rate",
            "t",
            "rate",
            &[Series {
                name: "(T - t)^(1/(p-1)) sup u",
                points: report.rate.clone(),
            }],
        );
        write(&svg, &plot)?;
        let rate_csv_path = svg.with_extension("rate.csv");
        write(&rate_csv_path, &blowup_rate_csv(&report))?;
    }
    println!(
        "type {} T_est {} plateau {}",
        report.kind.as_str(),
        fmt_opt(report.t_est),
        fmt_opt(report.plateau)
    );
    Ok(())
}
