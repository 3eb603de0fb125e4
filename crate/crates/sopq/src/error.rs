use thiserror::Error;

use crate::chain::ChainError;
use crate::grading::GradingError;
use crate::hitchin::HitchinError;
use crate::matrix::MatrixError;
use crate::minima::MinimaError;
use crate::stability::StabilityError;
use crate::topology::TopologyError;

/// Any error raised by the library, tagged by the module it came from.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Grading(#[from] GradingError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Hitchin(#[from] HitchinError),
    #[error(transparent)]
    Minima(#[from] MinimaError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

impl Error {
    /// Name of the underlying error variant, e.g. `OutOfRange`.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Chain(e) => e.name(),
            Error::Stability(e) => stability_kind(e),
            Error::Grading(GradingError::NonSquare { .. }) => "NonSquare",
            Error::Grading(GradingError::ShapeMismatch(_)) => "ShapeMismatch",
            Error::Matrix(MatrixError::DimensionMismatch(_)) => "DimensionMismatch",
            Error::Hitchin(e) => hitchin_kind(e),
            Error::Minima(e) => match e {
                MinimaError::NotAFixedPoint(_) => "NotAFixedPoint",
                MinimaError::OutOfRange(_) => "OutOfRange",
                MinimaError::NeedsIntegralPresentation => "NeedsIntegralPresentation",
                MinimaError::Stability(s) => stability_kind(s),
                MinimaError::Chain(c) => c.name(),
                MinimaError::Hitchin(h) => hitchin_kind(h),
            },
            Error::Topology(e) => match e {
                TopologyError::OutOfRange(_) => "OutOfRange",
                TopologyError::Unclassified(_) => "Unclassified",
                TopologyError::Minima(m) => Error::Minima(m.clone()).kind(),
            },
        }
    }

    /// The module that raised the error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Chain(_) => "chain_core",
            Error::Stability(_) => "stability",
            Error::Grading(_) => "grading",
            Error::Matrix(_) | Error::Hitchin(_) => "hitchin_symbolic",
            Error::Minima(_) => "minima",
            Error::Topology(_) => "topology_counting",
        }
    }
}

fn stability_kind(e: &StabilityError) -> &'static str {
    match e {
        StabilityError::UnspecifiedSlotStability(_) => "UnspecifiedSlotStability",
        StabilityError::NotApplicable(_) => "NotApplicable",
        StabilityError::NotStrictlyPolystable(_) => "NotStrictlyPolystable",
        StabilityError::Chain(c) => c.name(),
    }
}

fn hitchin_kind(e: &HitchinError) -> &'static str {
    match e {
        HitchinError::BadArity { .. } => "BadArity",
        HitchinError::Matrix(_) => "DimensionMismatch",
        HitchinError::ShapeMismatch(_) => "ShapeMismatch",
        HitchinError::Chain(c) => c.name(),
    }
}
