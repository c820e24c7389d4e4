//! Command-line front end: argument handling, angle expressions and SVG output.

pub mod app;
pub mod expr;
pub mod svg;

pub use app::run;
