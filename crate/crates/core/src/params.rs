//! Critical exponents and the constants derived from the dimension `N` and
//! the exponent `p`.
//!
//! Every other module takes a [`ProblemParams`]; nothing downstream recomputes
//! these formulas.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Relative tolerance used when comparing `p` against a critical exponent.
pub const CRITICAL_RTOL: f64 = 1e-12;

/// A real number or `+∞`. Critical exponents are infinite in low dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
            (ExtReal::Finite(_), ExtReal::Infinite) => Some(Ordering::Less),
            (ExtReal::Infinite, ExtReal::Finite(_)) => Some(Ordering::Greater),
            (ExtReal::Infinite, ExtReal::Infinite) => Some(Ordering::Equal),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::Infinite => write!(f, "inf"),
        }
    }
}

/// Position of `p` relative to a critical exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Sub,
    Critical,
    Super,
}

/// Classify `p` against `threshold` with relative tolerance [`CRITICAL_RTOL`].
pub fn regime(p: f64, threshold: ExtReal) -> Regime {
    match threshold {
        ExtReal::Infinite => Regime::Sub,
        ExtReal::Finite(t) => {
            if (p - t).abs() <= CRITICAL_RTOL * t.abs().max(1.0) {
                Regime::Critical
            } else if p < t {
                Regime::Sub
            } else {
                Regime::Super
            }
        }
    }
}

/// Sobolev exponent `(N+2)/(N-2)`.
pub fn sobolev_exponent(n: u32) -> ExtReal {
    if n > 2 {
        let n = n as f64;
        ExtReal::Finite((n + 2.0) / (n - 2.0))
    } else {
        ExtReal::Infinite
    }
}

/// Joseph–Lundgren exponent; finite only for `N > 10`.
pub fn joseph_lundgren_exponent(n: u32) -> ExtReal {
    if n > 10 {
        let nf = n as f64;
        ExtReal::Finite(
            1.0 + 4.0 * (nf - 4.0 + 2.0 * (nf - 1.0).sqrt()) / ((nf - 2.0) * (nf - 10.0)),
        )
    } else {
        ExtReal::Infinite
    }
}

/// Lepin exponent `1 + 6/(N-10)`; finite only for `N > 10`.
pub fn lepin_exponent(n: u32) -> ExtReal {
    if n > 10 {
        ExtReal::Finite(1.0 + 6.0 / (n as f64 - 10.0))
    } else {
        ExtReal::Infinite
    }
}

/// `N(N+2)/(N-1)^2`, the threshold of the Liouville theorem for entire solutions.
pub fn entire_liouville_exponent(n: u32) -> ExtReal {
    if n > 2 {
        let n = n as f64;
        ExtReal::Finite(n * (n + 2.0) / ((n - 1.0) * (n - 1.0)))
    } else {
        ExtReal::Infinite
    }
}

/// Exponent above which the spectral gap argument can use the unshifted
/// fractional scale. `N^2 - 12N + 16 > 0` exactly for `N >= 11`.
pub fn spectral_gap_exponent(n: u32) -> ExtReal {
    let nf = n as f64;
    let denom = nf * nf - 12.0 * nf + 16.0;
    if n > 10 && denom > 0.0 {
        ExtReal::Finite(1.0 + 4.0 * (nf + 2.0 * nf.sqrt() - 4.0) / denom)
    } else {
        ExtReal::Infinite
    }
}

/// All critical exponents of one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentTable {
    pub n: u32,
    pub p_s: ExtReal,
    pub p_star: ExtReal,
    pub p_jl: ExtReal,
    pub p_l: ExtReal,
    pub p_h: ExtReal,
}

pub fn exponent_table(n: u32) -> Result<ExponentTable> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension N = {n} must be >= 3")));
    }
    Ok(ExponentTable {
        n,
        p_s: sobolev_exponent(n),
        p_star: entire_liouville_exponent(n),
        p_jl: joseph_lundgren_exponent(n),
        p_l: lepin_exponent(n),
        p_h: spectral_gap_exponent(n),
    })
}

/// Dimension, exponent and every derived constant. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    n: u32,
    p: f64,
    exponents: ExponentTable,
    kappa: f64,
    l: Option<f64>,
    beta: Option<f64>,
    c_comp: f64,
    delta_comp: f64,
    xi: f64,
}

impl ProblemParams {
    pub fn new(n: u32, p: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Domain(format!("dimension N = {n} must be >= 3")));
        }
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::Domain(format!("exponent p = {p} must be > 1")));
        }
        let exponents = exponent_table(n)?;
        let nf = n as f64;
        let kappa = (p - 1.0).powf(-1.0 / (p - 1.0));

        let l_pow = 2.0 * ((nf - 2.0) * p - nf) / ((p - 1.0) * (p - 1.0));
        let l = (p * (nf - 2.0) > nf).then(|| l_pow.powf(1.0 / (p - 1.0)));

        let beta = match (l, regime(p, exponents.p_jl)) {
            (Some(_), Regime::Super | Regime::Critical) => {
                let disc = (nf - 2.0).powi(2) - 4.0 * p * l_pow;
                // at p = pJL the discriminant is zero up to rounding
                Some(0.5 * (-(nf - 2.0) + disc.max(0.0).sqrt()))
            }
            _ => None,
        };

        Ok(Self {
            n,
            p,
            exponents,
            kappa,
            l,
            beta,
            c_comp: (1.0 / (2.0 * p * (p - 1.0))).powf(1.0 / (p - 1.0)),
            delta_comp: 1.0 / (2.0 * (p - 1.0)),
            xi: (p + 1.0) / (p - 1.0),
        })
    }

    pub fn dim(&self) -> u32 {
        self.n
    }

    pub fn dim_f64(&self) -> f64 {
        self.n as f64
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn exponents(&self) -> &ExponentTable {
        &self.exponents
    }

    pub fn p_s(&self) -> ExtReal {
        self.exponents.p_s
    }

    pub fn p_jl(&self) -> ExtReal {
        self.exponents.p_jl
    }

    pub fn p_l(&self) -> ExtReal {
        self.exponents.p_l
    }

    pub fn p_star(&self) -> ExtReal {
        self.exponents.p_star
    }

    pub fn p_h(&self) -> ExtReal {
        self.exponents.p_h
    }

    /// The constant steady state `(p-1)^{-1/(p-1)}` of the rescaled equation.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Amplitude of the singular steady state, when `p(N-2) > N`.
    pub fn l(&self) -> Result<f64> {
        self.l.ok_or(self.undefined("L"))
    }

    /// `L^{p-1} = 2((N-2)p - N)/(p-1)^2`, computed without the root.
    pub fn l_pow(&self) -> f64 {
        let nf = self.dim_f64();
        2.0 * ((nf - 2.0) * self.p - nf) / ((self.p - 1.0) * (self.p - 1.0))
    }

    /// Indicial root of the linearization at the singular steady state;
    /// defined when `p >= pJL`.
    pub fn beta(&self) -> Result<f64> {
        self.beta.ok_or(self.undefined("beta"))
    }

    /// `(N-2)^2 - 4 p L^{p-1}`.
    pub fn discriminant(&self) -> f64 {
        let nf = self.dim_f64();
        (nf - 2.0).powi(2) - 4.0 * self.p * self.l_pow()
    }

    /// Comparison constant `c0 = (1/(2p(p-1)))^{1/(p-1)}`.
    pub fn c_comp(&self) -> f64 {
        self.c_comp
    }

    /// Comparison constant `delta0 = 1/(2(p-1))`.
    pub fn delta_comp(&self) -> f64 {
        self.delta_comp
    }

    /// `(p+1)/(p-1)`.
    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Decay exponent `2/(p-1)` of the singular steady state.
    pub fn decay_exponent(&self) -> f64 {
        2.0 / (self.p - 1.0)
    }

    /// Eigenvalue `mu_j = -(beta/2 + 1/(p-1) + j)` of the linearization at
    /// the singular steady state.
    pub fn mu(&self, j: u32) -> Result<f64> {
        let beta = self.beta()?;
        Ok(-(beta / 2.0 + 1.0 / (self.p - 1.0) + j as f64))
    }

    pub fn regime_vs_sobolev(&self) -> Regime {
        regime(self.p, self.p_s())
    }

    pub fn regime_vs_jl(&self) -> Regime {
        regime(self.p, self.p_jl())
    }

    pub fn regime_vs_lepin(&self) -> Regime {
        regime(self.p, self.p_l())
    }

    /// `phi_inf(r) = L r^{-2/(p-1)}`.
    pub fn phi_inf(&self, r: f64) -> Result<f64> {
        Ok(self.l()? * r.powf(-self.decay_exponent()))
    }

    pub fn phi_inf_deriv(&self, r: f64) -> Result<f64> {
        let m = self.decay_exponent();
        Ok(-m * self.l()? * r.powf(-m - 1.0))
    }

    pub fn phi_inf_deriv2(&self, r: f64) -> Result<f64> {
        let m = self.decay_exponent();
        Ok(m * (m + 1.0) * self.l()? * r.powf(-m - 2.0))
    }

    fn undefined(&self, what: &'static str) -> Error {
        Error::Undefined {
            what,
            n: self.n,
            p: self.p,
        }
    }
}

/// Convenience wrapper matching `ProblemParams::mu`.
pub fn mu(params: &ProblemParams, j: u32) -> Result<f64> {
    params.mu(j)
}
