use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("literal {value} out of range for `{variable}` (domain size {size})")]
    LiteralOutOfRange {
        variable: String,
        value: i64,
        size: u32,
    },

    #[error("enumeration of {size} assignments exceeds the cap of {cap}")]
    EnumerationCap { size: u128, cap: u64 },

    #[error("invalid instance: {0}")]
    Instance(String),

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("variable order conflict: {0}")]
    OrderConflict(String),

    #[error("decision diagram too large: {0}")]
    MddCap(String),

    #[error("malformed mdd: {0}")]
    MddFormat(String),

    #[error("edge table has {rows} rows, cannot pad to {pad_to}")]
    PadTooSmall { rows: usize, pad_to: usize },

    #[error("input contains NaN")]
    NotANumber,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("instance generation failed: {0}")]
    Generation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
