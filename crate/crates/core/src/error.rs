use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("parameter domain error: {0}")]
    Domain(String),

    /// A derived constant is not defined for the given (N, p).
    #[error("{what} is not defined for N = {n}, p = {p}")]
    Undefined { what: &'static str, n: u32, p: f64 },

    #[error("gamma function pole at x = {0}")]
    Pole(f64),

    #[error("ODE step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("inconclusive shooting outcome for alpha = {alpha}: {reason}")]
    Inconclusive { alpha: f64, reason: String },

    #[error("bracket [{lo}, {hi}] does not straddle a transition: {reason}")]
    InvalidBracket { lo: f64, hi: f64, reason: String },

    #[error("profile vanishes at interval endpoint {0}")]
    EndpointZero(f64),

    #[error("profiles coincide on the interval; intersection number undefined")]
    IdenticalProfiles,

    #[error("quadrature did not converge on [{a}, {b}]")]
    Divergence { a: f64, b: f64 },

    #[error("integrand not integrable at the origin (power {0} <= -1)")]
    OriginDivergence(f64),

    #[error("ill-conditioned asymptotic fit: {0}")]
    IllConditioned(String),

    #[error("argument {value} outside computed domain [0, {max}]")]
    OutOfRange { value: f64, max: f64 },

    #[error("positivity lost at t = {0} after repeated step halving")]
    Positivity(f64),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("time {t} is not before the blowup time {big_t}")]
    PastBlowup { t: f64, big_t: f64 },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
