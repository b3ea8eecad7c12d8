use thiserror::Error;

use crate::costexpr::ParseError;
use crate::measures::OrderVerdict;

#[derive(Debug, Error)]
pub enum Error {
    #[error("measure has no atom with positive weight")]
    EmptySupport,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("simplex iteration limit reached after {pivots} pivots")]
    IterationLimit { pivots: usize },

    #[error("marginals are not in convex order: {verdict}")]
    NotInConvexOrder { verdict: OrderVerdict<f64> },

    #[error("coupling is not a martingale coupling of the given pair (residual {residual:e})")]
    NotInMartingaleSet { residual: f64 },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("payoff evaluation failed: {0}")]
    Eval(String),

    #[error("perturbation scheme produced an unordered pair: {0}")]
    SchemeViolation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
