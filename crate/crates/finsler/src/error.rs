use thiserror::Error;

use crate::frontend::expr::ExprError;
use crate::frontend::zoo::MetricError;
use crate::geometry::GeomError;
use crate::jets::JetError;

/// Crate-wide error type; module errors convert into it.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

pub type Result<T> = std::result::Result<T, Error>;
