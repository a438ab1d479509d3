//! Crate-wide error type.

use std::fmt;

#[derive(Debug)]
pub enum Error {
    /// A matrix dimension was zero.
    ZeroDimension,
    /// Vector/matrix sizes do not line up.
    DimensionMismatch { expected: usize, got: usize },
    /// The two census inputs must differ.
    EqualInputs,
    /// n*k too large for exhaustive matrix enumeration.
    CensusRegime { bits: u64, cap: u64 },
    /// Prime index out of the sieve's range (l = 0 or above the table bound).
    PrimeIndexRange(u64),
    /// Argument was expected to be prime.
    NotPrime(u64),
    /// Number too large to factor with the configured sieve.
    FactorRange(u64),
    /// Enumeration bound above the hard cap.
    BoundTooLarge { bound: u32, cap: u32 },
    /// Query longer than the exact-oracle regime permits.
    QueryTooLong { len: usize, max: usize },
    /// Case-3 inversion width above the cap.
    InversionCap { width: u32, cap: u32 },
    /// Complexity value not determined within the table bound.
    AboveBound { bound: u32 },
    /// Cache file was built under a different configuration.
    StaleCache { expected: String, found: String },
    /// Cache file does not parse.
    MalformedCache(String),
    /// Bad hex digit or malformed HEX:LEN literal.
    MalformedHex(String),
    /// HEX:LEN length inconsistent with the digit count.
    HexLengthMismatch { digits: usize, len: usize },
    /// Bit-string literal over the hard length cap.
    LengthCap { len: usize, cap: usize },
    /// Configuration rejected (invalid value, even pad/slack, zero budget...).
    InvalidConfig(String),
    /// Operation precondition violated.
    Precondition(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ZeroDimension => write!(f, "matrix dimensions must be at least 1"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::EqualInputs => write!(f, "census inputs must be two distinct strings"),
            Error::CensusRegime { bits, cap } => {
                write!(f, "census regime exceeded: {bits} matrix bits > cap {cap}")
            }
            Error::PrimeIndexRange(l) => write!(f, "prime index {l} out of range"),
            Error::NotPrime(p) => write!(f, "{p} is not prime"),
            Error::FactorRange(m) => write!(f, "{m} too large to factor with the sieve"),
            Error::BoundTooLarge { bound, cap } => {
                write!(f, "enumeration bound {bound} above cap {cap}")
            }
            Error::QueryTooLong { len, max } => {
                write!(f, "query of length {len} above exact regime (max {max})")
            }
            Error::InversionCap { width, cap } => {
                write!(f, "inversion width {width} above cap {cap}")
            }
            Error::AboveBound { bound } => write!(f, "> {bound}"),
            Error::StaleCache { expected, found } => {
                write!(f, "stale cache: built for params {found}, current {expected}")
            }
            Error::MalformedCache(msg) => write!(f, "malformed cache: {msg}"),
            Error::MalformedHex(msg) => write!(f, "malformed hex literal: {msg}"),
            Error::HexLengthMismatch { digits, len } => {
                write!(f, "hex literal with {digits} digits cannot carry {len} bits")
            }
            Error::LengthCap { len, cap } => {
                write!(f, "bit string of length {len} above cap {cap}")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
