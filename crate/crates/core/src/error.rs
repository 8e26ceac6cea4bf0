use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("zero denominator")]
    ZeroDenominator,

    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("prime {0} is too large (must fit in 32 bits)")]
    PrimeTooLarge(u64),

    #[error("balls live over different primes ({left} and {right})")]
    PrimeMismatch { left: u64, right: u64 },

    #[error("{inner} is not contained in {outer}")]
    NotNested { inner: String, outer: String },

    #[error("v_{p}({value}) < 0: the progression count needs a p-integral multiplier")]
    NotIntegral { p: u64, value: String },

    #[error("the progression envelope needs a modulus t > 1, got {0}")]
    ModulusTooSmall(u64),

    #[error("sieve limit {limit} exceeds the configured cap {cap}")]
    SieveCap { limit: u64, cap: u64 },

    #[error("height bound {requested} exceeds the compute budget {cap}")]
    BudgetExceeded { requested: u64, cap: u64 },

    #[error("{what} must be positive")]
    NonPositive { what: &'static str },

    #[error("cannot parse {what} from {input:?}: {reason}")]
    Parse {
        what: &'static str,
        input: String,
        reason: String,
    },

    #[error("value out of range: {0}")]
    Overflow(String),
}

impl Error {
    pub(crate) fn parse(what: &'static str, input: &str, reason: impl Into<String>) -> Self {
        Error::Parse {
            what,
            input: input.to_owned(),
            reason: reason.into(),
        }
    }
}
