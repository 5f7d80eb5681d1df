use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid seed path `{0}` (expected master[/label:index]*)")]
pub struct SeedParseError(pub String);

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("gamma = {0} exceeds 1/2; swap the roles of L and R and use 1 - gamma instead")]
    GammaAboveHalf(f64),

    #[error("no stage-two target r >= 1 is balanced with t1 = {t1} at gamma = {gamma}")]
    NoBalancedPartner { t1: u64, gamma: f64 },

    #[error("{product} = {value} is not an integer; choose alpha so both side sizes are whole")]
    NonIntegerSplit { product: &'static str, value: f64 },

    #[error("side size {size} exceeds n = {n}")]
    SplitExceedsN { size: u64, n: u64 },

    #[error("overlap ({i1}, {i2}) outside [0, {max1}] x [0, {max2}]")]
    OverlapOutOfRange { i1: u64, i2: u64, max1: u64, max2: u64 },

    #[error("size guard: {what} = {value} exceeds the limit {limit}")]
    Guard { what: &'static str, value: usize, limit: usize },

    #[error("contract violation: algorithm read unrevealed pair (l{u}, r{v})")]
    ContractViolation { u: usize, v: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("step {step} out of range [0, {max}]")]
    StepOutOfRange { step: usize, max: usize },

    #[error("graph file line {line}: {msg}")]
    GraphFormat { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by a problem-size guard rather than a bad configuration.
    pub fn is_guard(&self) -> bool {
        matches!(self, Error::Guard { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
