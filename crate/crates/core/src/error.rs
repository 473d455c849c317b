use thiserror::Error;

/// Errors raised by the algebraic engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("trace weight {index} is not positive")]
    NonPositiveWeight { index: usize },
    #[error("trace weights sum to {sum}, expected 1")]
    WeightSumMismatch { sum: f64 },
    #[error("algebra has no blocks")]
    EmptyAlgebra,
    #[error("malformed algebra description: {0}")]
    MalformedAlgebra(String),
    #[error("operands live in different coefficient algebras")]
    AlgebraMismatch,
    #[error("matrix entry ({row}, {col}) lies outside the algebra structure")]
    StructureViolation { row: usize, col: usize },
    #[error("completely positive map needs at least one Kraus operator")]
    EmptyKraus,
    #[error("variable count mismatch: {left} vs {right}")]
    VariableCountMismatch { left: usize, right: usize },
    #[error("letter {letter} out of range for {d} variables")]
    LetterOutOfRange { letter: usize, d: usize },
    #[error("degree {needed} exceeds Fock truncation depth {depth}")]
    DepthExceeded { needed: usize, depth: usize },
    #[error("vectors belong to different Fock spaces")]
    SpaceMismatch,
    #[error("malformed pair partition: {0}")]
    MalformedPartition(String),
    #[error("Chebyshev specification has no coefficient pairs")]
    EmptyPairs,
    #[error("polynomial uses letters other than {letter}")]
    MixedLetters { letter: usize },
    #[error("consecutive Chebyshev factors share letter {letter}")]
    NotAlternating { letter: usize },
    #[error("signature (k={k}, l={l}, n={n:?}, i={i:?}) appears more than once")]
    DuplicateSignature { k: usize, l: usize, n: Vec<usize>, i: Vec<usize> },
    #[error("variance map for letter {letter} is not trace symmetric")]
    TraceSymmetryRequired { letter: usize },
    #[error("{blocks} blocks do not fit into amplification order {order}")]
    BlockOverflow { blocks: usize, order: usize },
    #[error("block arguments disagree in shape: {0}")]
    ShapeMismatch(String),
    #[error("decomposition failed: {0}")]
    DecompositionFailure(String),
    #[error("index {n} exceeds truncation size {m}")]
    TruncationExceeded { n: usize, m: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
