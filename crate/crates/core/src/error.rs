use thiserror::Error;

use crate::triangle::Vertex;

/// Errors raised by the billiard toolkit.
///
/// The variants split into input problems ([`Error::Domain`],
/// [`Error::VertexPoint`], [`Error::ParallelToHypotenuse`]) and failed
/// structural checks ([`Error::StructureViolation`], [`Error::NestingViolation`]),
/// which the command line maps onto distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("orbit reached the singular vertex {vertex:?} at hit {hit_index}")]
    SingularVertex { vertex: Vertex, hit_index: usize },

    #[error("direction is parallel to the hypotenuse at level {level}; the surface splits")]
    ParallelToHypotenuse { level: i64 },

    #[error("point lies on the vertex {0:?}")]
    VertexPoint(Vertex),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("structure violation: {0}")]
    StructureViolation(String),

    #[error("escape intervals fail to nest at N = {n}: excess {excess:e}")]
    NestingViolation { n: u32, excess: f64 },

    #[error("record parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by the caller's input rather than by a failed
    /// structural check.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::VertexPoint(_)
                | Error::ParallelToHypotenuse { .. }
                | Error::Unsupported(_)
                | Error::Parse { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
