//! Billiards in irrational right triangles.
//!
//! Orbits are traced in the canonical triangle with the right angle at the
//! origin while every direction carries an exact label (σ, n, m) for the
//! angle σθ₀ + 2nα + mπ. The label's level σn says which rhombus of the
//! unfolded chain surface the orbit is in, so level codes, strips and escape
//! orbits never depend on floating-point angle comparisons.

pub mod direction;
pub mod error;
pub mod flow;
pub mod periodicity;
pub mod precision;
pub mod records;
pub mod strips;
pub mod surface;
pub mod torus;
pub mod triangle;

pub use direction::{DirectionFrame, SymbolicDirection};
pub use error::{Error, Result};
pub use flow::{
    detect_period, reverse, step, trace, trace_with_bound, Hit, OrbitSegment, PeriodCertificate, PeriodOutcome,
    PhasePoint, Position, Termination,
};
pub use precision::PrecisionContext;
pub use triangle::{make_triangle, make_triangle_f64, masses_to_alpha, IrrationalityHint, RightTriangle, SideId, Vertex};
