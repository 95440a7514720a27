use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates its documented invariant.
    InvalidParam { field: &'static str, reason: String },
    /// An index or argument is outside the range an operation accepts.
    OutOfRange { what: &'static str, value: i64 },
    /// The candidate graph does not connect every node to the gateway.
    Disconnected { unreachable: Vec<usize> },
    DuplicateLink { a: usize, b: usize },
    AsymmetricRange { from: usize, to: usize },
    UnknownLink(usize),
    /// Too many links for an exponential-cost oracle.
    SetTooLarge { len: usize, max: usize },
    /// A stochastic matrix row does not sum to one.
    RowSum { row: usize, sum: f64 },
    /// A retransmission-chain entry fell outside `[0, 1]` beyond round-off.
    ModelInconsistency { from: &'static str, to: &'static str, value: f64 },
    /// The dense solver hit a zero pivot.
    Singular,
    /// A NaN or infinity appeared during solving.
    NonFinite { link: usize, variable: &'static str },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParam { field, reason } => write!(f, "invalid parameter `{field}`: {reason}"),
            Error::OutOfRange { what, value } => write!(f, "{what} out of range: {value}"),
            Error::Disconnected { unreachable } => {
                write!(f, "nodes unreachable from the gateway: {unreachable:?}")
            }
            Error::DuplicateLink { a, b } => write!(f, "duplicate link between nodes {a} and {b}"),
            Error::AsymmetricRange { from, to } => write!(
                f,
                "interference relation is not symmetric: {from} -> {to} given without {to} -> {from}"
            ),
            Error::UnknownLink(id) => write!(f, "unknown link id {id}"),
            Error::SetTooLarge { len, max } => write!(f, "link set of size {len} exceeds {max}"),
            Error::RowSum { row, sum } => write!(f, "transition row {row} sums to {sum}"),
            Error::ModelInconsistency { from, to, value } => {
                write!(f, "retransmission transition {from} -> {to} is {value}, outside [0, 1]")
            }
            Error::Singular => f.write_str("singular linear system"),
            Error::NonFinite { link, variable } => {
                write!(f, "non-finite value of `{variable}` on link {link}")
            }
        }
    }
}

impl core::error::Error for Error {}
