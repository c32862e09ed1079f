//! Arithmetic in `F_s`, `F_s[X]` and truncated `F_s((X^{-1}))`.

mod field;
mod laurent;
mod poly;
pub mod text;

pub use field::{is_prime, Fe, FieldSpec, MAX_FIELD_SIZE};
pub use laurent::{LaurentSeries, Norm, Valuation};
pub use poly::{content, Poly};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("extension degree must be at least 1, got {0}")]
    BadDegree(u32),
    #[error("field of size {p}^{e} exceeds the 2^16 cap")]
    TooLarge { p: u32, e: u32 },
    #[error("no primitive modulus found for {p}^{e}")]
    NoModulus { p: u32, e: u32 },
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("inversion of a series that is zero throughout its window")]
    ZeroInversion,
    #[error("inverting a non-monomial exact series needs a precision cap")]
    PrecisionRequired,
    #[error("result window would be empty")]
    EmptyWindow,
    #[error("series is zero through index {known_through}; valuation unknown")]
    Indeterminate { known_through: i64 },
    #[error("precision exhausted: known only through index {known_through}")]
    PrecisionExhausted { known_through: i64 },
    #[error("parse error: {0}")]
    Parse(String),
}
