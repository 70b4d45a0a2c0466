use thiserror::Error;

use crate::Elem;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("algebra must have at least one element")]
    EmptyUniverse,

    #[error("operation `{symbol}`: table has {found} entries, expected {expected}")]
    TableLength {
        symbol: String,
        expected: usize,
        found: usize,
    },

    #[error("operation `{symbol}`: entry {index} is {value}, universe has size {size}")]
    EntryOutOfRange {
        symbol: String,
        index: usize,
        value: u64,
        size: usize,
    },

    #[error("duplicate operation symbol `{0}`")]
    DuplicateSymbol(String),

    #[error("unknown operation symbol `{0}`")]
    UnknownSymbol(String),

    #[error("operation `{symbol}` has arity {arity} but was applied to {given} arguments")]
    ArityMismatch {
        symbol: String,
        arity: usize,
        given: usize,
    },

    #[error("no binding for variable x{0}")]
    MissingVariable(usize),

    #[error("element {element} out of range for universe of size {size}")]
    ElementOutOfRange { element: Elem, size: usize },

    #[error("partition is not compatible with `{symbol}`: arguments {left:?} and {right:?} are related but their values {left_value} and {right_value} are not")]
    IncompatiblePartition {
        symbol: String,
        left: Vec<Elem>,
        right: Vec<Elem>,
        left_value: Elem,
        right_value: Elem,
    },

    #[error("{what} would need {requested} cells, cap is {cap}")]
    CapExceeded {
        what: String,
        requested: u128,
        cap: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed document: {0}")]
    Document(String),

    #[error("unknown builtin `{name}`; available: {available}")]
    UnknownBuiltin { name: String, available: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
