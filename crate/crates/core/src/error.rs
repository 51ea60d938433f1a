use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("division by zero in Q(γ)")]
    DivisionByZero,

    #[error("Fibonacci index {0} is below -2")]
    FibonacciDomain(i64),

    #[error("Fibonacci index {0} overflows u64")]
    FibonacciOverflow(i64),

    #[error("word {word:?} has no decomposition into blocks 0 and 01: {reason}")]
    Decomposition { word: String, reason: &'static str },

    #[error("invalid symbol {0:?}; words are over {{0,1}}")]
    InvalidSymbol(char),

    #[error("scan exhausted its cap of {cap} symbols without leaving the language")]
    CapExhausted { cap: usize },

    #[error("counter is undefined for points of K")]
    UndefinedOnK,

    #[error("streams agree on the first {cap} symbols")]
    IdenticalStreams { cap: usize },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid return word {word}: {reason}")]
    InvalidReturnWord { word: String, reason: &'static str },

    #[error("transfer-operator sum is not finite at Z={z}, beta={beta}")]
    Divergence { z: f64, beta: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
