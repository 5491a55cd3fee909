use thiserror::Error;

/// Errors produced anywhere in the encrypted-control toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no primitive 2p-th root of unity modulo {modulus} for p = {degree}")]
    NoRoot { modulus: u128, degree: usize },

    #[error("operands live in different rings")]
    ModulusMismatch,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("ciphertext scales differ")]
    ScaleMismatch,

    #[error("linear combination of {terms} terms exceeds the supported maximum {max}")]
    TooManyTerms { terms: usize, max: usize },

    #[error("ciphertext has already been multiplied (depth {depth}); only fresh ciphertexts may enter a product")]
    NotFresh { depth: u8 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("the pair (F, H) is not observable")]
    NotObservable,

    #[error("the pair (F, G) is not controllable")]
    NotControllable,

    #[error("value {value} does not fit the plaintext space (|x| + 1/2 must stay below {half_modulus})")]
    RangeExceeded { value: f64, half_modulus: f64 },

    #[error("gain resolution too coarse: 1/s = {inv_s} must exceed eps0 = {eps0}")]
    SInvalid { inv_s: f64, eps0: f64 },

    #[error("closed loop is not Schur stable (spectral radius {0})")]
    Unstable(f64),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("malformed wire data: {0}")]
    Wire(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("step {step}: {source}")]
    AtStep { step: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep { step, source: Box::new(self) }
    }

    /// Strips any step annotation.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root_cause(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
