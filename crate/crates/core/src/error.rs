use thiserror::Error;

/// Errors raised by the quantization core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two vectors (or a vector set and a codebook) disagree on dimension.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch {
        /// Dimension required by the receiving side.
        expected: usize,
        /// Dimension that was supplied.
        found: usize,
    },
    /// A collection that must be non-empty was empty.
    #[error("{0} must not be empty")]
    Empty(&'static str),
    /// Vector dimension of zero.
    #[error("vector dimension must be at least 1")]
    ZeroDimension,
    /// Flat buffer length is not a multiple of the dimension.
    #[error("buffer of {len} values is not a whole number of {dim}-dimensional rows")]
    RaggedBuffer {
        /// Buffer length.
        len: usize,
        /// Declared dimension.
        dim: usize,
    },
    /// A NaN or infinite component.
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite {
        /// Zero-based row.
        row: usize,
        /// Zero-based column.
        col: usize,
    },
    /// Codebook sizes must be powers of two.
    #[error("codebook size {0} must be a power of two")]
    NotPowerOfTwo(usize),
    /// Other invalid configuration values.
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    /// Distortion values must be non-negative.
    #[error("distortion values must be non-negative")]
    NegativeDistortion,
    /// A cell table or encoded stream refers to a codevector that does not exist.
    #[error("index {index} at position {position} is out of range for codebook size {size}")]
    IndexOutOfRange {
        /// Position in the table or stream.
        position: usize,
        /// Offending index.
        index: u32,
        /// Codebook size.
        size: usize,
    },
    /// Encoded stream and codebook disagree on size.
    #[error("stream expects a codebook of {stream} codevectors, got {codebook}")]
    CodebookSizeMismatch {
        /// Size recorded in the stream.
        stream: usize,
        /// Size of the supplied codebook.
        codebook: usize,
    },
    /// Paired sequences of different lengths.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch {
        /// Length of the first operand.
        left: usize,
        /// Length of the second operand.
        right: usize,
    },
    /// Partial results do not tile the training set.
    #[error("partial results violate the chunk plan: {0}")]
    PlanViolation(&'static str),
}

/// Result alias for this crate.
pub type Result<T> = core::result::Result<T, Error>;
