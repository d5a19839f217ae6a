use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{value} has no rational {n}-th root")]
    NoRationalRoot { value: String, n: u32 },
    #[error("even root ({n}) of negative number {value}")]
    EvenRootOfNegative { value: String, n: u32 },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        message: String,
        line: usize,
        column: usize,
    },
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("no alpha sign stored for pair ({i}, {j})")]
    MissingSignChoice { i: usize, j: usize },
    #[error("omega_{i} has a negative power of x; use omega_fraction")]
    NegativeXPower { i: usize },
    #[error("declared group kind is refuted: {0}")]
    DeclarationInconsistent(String),
    #[error("descriptor depth limit {limit} exceeded")]
    DepthExceeded { limit: usize },
    #[error("element has nonzero value {value}")]
    NonzeroValue { value: String },
    #[error("element must be nonzero")]
    NonzeroRequired,
    #[error("series precision exhausted: {0}")]
    TruncationLoss(String),
    #[error("residue data are inconsistent: {0}")]
    ResidueInconsistent(String),
    #[error("not extendable: {0}")]
    NotExtendable(String),
    #[error("a sign choice is required at index {index}")]
    SignChoiceRequired { index: usize },
    #[error("no free sign exists for this descriptor")]
    SignChoiceForbidden,
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("internal invariant failed: {0}")]
    Internal(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NoRationalRoot { .. } => "NoRationalRoot",
            Error::EvenRootOfNegative { .. } => "EvenRootOfNegative",
            Error::Parse { .. } => "Parse",
            Error::InvalidDescriptor(_) => "InvalidDescriptor",
            Error::MissingSignChoice { .. } => "MissingSignChoice",
            Error::NegativeXPower { .. } => "NegativeXPower",
            Error::DeclarationInconsistent(_) => "DeclarationInconsistent",
            Error::DepthExceeded { .. } => "DepthExceeded",
            Error::NonzeroValue { .. } => "NonzeroValue",
            Error::NonzeroRequired => "NonzeroRequired",
            Error::TruncationLoss(_) => "TruncationLoss",
            Error::ResidueInconsistent(_) => "ResidueInconsistent",
            Error::NotExtendable(_) => "NotExtendable",
            Error::SignChoiceRequired { .. } => "SignChoiceRequired",
            Error::SignChoiceForbidden => "SignChoiceForbidden",
            Error::Unsupported(_) => "Unsupported",
            Error::Internal(_) => "Internal",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
