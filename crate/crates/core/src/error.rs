use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("negative pure dephasing: t2 = {t2} ps exceeds 2*t1 = {two_t1} ps")]
    NegativeDephasing { t2: f64, two_t1: f64 },

    #[error("grid spacing {spacing} ps exceeds the allowed maximum {max} ps ({what})")]
    GridTooCoarse { spacing: f64, max: f64, what: &'static str },

    #[error("grid half-span {half_span} ps does not cover the required {required} ps")]
    GridTooShort { half_span: f64, required: f64 },

    #[error("curves are sampled on different grids")]
    GridMismatch,

    #[error("histograms have mismatched binning")]
    BinningMismatch,

    #[error("time tags are not sorted (index {index})")]
    Unsorted { index: usize },

    #[error("{0} is zero; ratio undefined")]
    ZeroDenominator(&'static str),

    #[error("integration window {window} ps is invalid: {reason}")]
    InvalidWindow { window: f64, reason: &'static str },

    #[error("histogram does not contain {needed} complete side peaks per side")]
    NotEnoughSidePeaks { needed: usize },

    #[error("timestamp range overflows u64 picoseconds")]
    TimestampOverflow,

    #[error("fit did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("degenerate fit input: {0}")]
    Degenerate(&'static str),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }
}
