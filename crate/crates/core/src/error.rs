use thiserror::Error;

/// Everything that can go wrong while validating inputs or running a check.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid signature: {0}")]
    Signature(String),
    #[error("empty universe")]
    EmptyUniverse,
    #[error("duplicate element name `{0}`")]
    DuplicateElement(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("tuple out of range: {0}")]
    TupleOutOfRange(String),
    #[error("arity mismatch for `{symbol}`: expected {expected}, found {found}")]
    Arity {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("partial function `{function}`: no value at ({args})")]
    PartialFunction { function: String, args: String },
    #[error("missing interpretation for constant `{0}`")]
    MissingConstant(String),
    #[error("structure too large: {0}")]
    TooLarge(String),
    #[error("signature mismatch")]
    SignatureMismatch,
    #[error("not a homomorphism: {0}")]
    NotHomomorphism(String),
    #[error("map is not total: {0}")]
    PartialMap(String),

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("formula is not positive: {0}")]
    NotPositive(String),
    #[error("formula is not an h-inductive sentence: {0}")]
    NotHInductive(String),

    #[error("invalid poset: {0}")]
    Poset(String),
    #[error("not an upset: {0}")]
    NotUpset(String),
    #[error("not a filter: {0}")]
    NotFilter(String),
    #[error("filter not prime: {0}")]
    NotPrime(String),
    #[error("not a chain: {0}")]
    NotChain(String),

    #[error("invalid ordered system: {0}")]
    System(String),
    #[error("index not a wellfounded forest: {0}")]
    NotForest(String),
    #[error("restriction domain not contained in section domain: {0}")]
    Restriction(String),

    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("empty model class")]
    EmptyClass,
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
