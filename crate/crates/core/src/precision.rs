use rug::Float;

use crate::error::{Error, Result};

pub const DEFAULT_MANTISSA_BITS: u32 = 256;
pub const DEFAULT_CORNER_EPSILON: f64 = 1e-40;
pub const DEFAULT_POSITION_TOLERANCE: f64 = 1e-30;

/// Working precision and the two numeric tolerances used by the tracer.
///
/// `corner_epsilon` is relative to the side length and decides when a hit is
/// snapped onto a vertex; `position_tolerance` is the only slack allowed when
/// matching positions for periodicity.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionContext {
    mantissa_bits: u32,
    corner_epsilon: f64,
    position_tolerance: f64,
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self {
            mantissa_bits: DEFAULT_MANTISSA_BITS,
            corner_epsilon: DEFAULT_CORNER_EPSILON,
            position_tolerance: DEFAULT_POSITION_TOLERANCE,
        }
    }
}

impl PrecisionContext {
    pub fn new(mantissa_bits: u32, corner_epsilon: f64, position_tolerance: f64) -> Result<Self> {
        if mantissa_bits < 64 {
            return Err(Error::domain(format!(
                "mantissa_bits must be at least 64, got {mantissa_bits}"
            )));
        }
        if !(corner_epsilon >= 0.0 && corner_epsilon < position_tolerance && position_tolerance < 1.0) {
            return Err(Error::domain(format!(
                "need 0 <= corner_epsilon < position_tolerance < 1, got {corner_epsilon:e} and {position_tolerance:e}"
            )));
        }
        Ok(Self { mantissa_bits, corner_epsilon, position_tolerance })
    }

    /// Default tolerances at the given precision.
    pub fn with_bits(mantissa_bits: u32) -> Result<Self> {
        Self::new(mantissa_bits, DEFAULT_CORNER_EPSILON, DEFAULT_POSITION_TOLERANCE)
    }

    pub fn mantissa_bits(&self) -> u32 {
        self.mantissa_bits
    }

    pub fn corner_epsilon(&self) -> f64 {
        self.corner_epsilon
    }

    pub fn position_tolerance(&self) -> f64 {
        self.position_tolerance
    }

    pub fn float(&self, v: f64) -> Float {
        Float::with_val(self.mantissa_bits, v)
    }

    pub fn zero(&self) -> Float {
        Float::new(self.mantissa_bits)
    }

    /// 2^-(bits - 16): tolerance for comparing angles and directions.
    pub fn angle_tolerance(&self) -> Float {
        Float::with_val(self.mantissa_bits, 1) >> (self.mantissa_bits as i32 - 16)
    }

    /// 2^-(bits - 20): tolerance for incidence of hit points on sides.
    pub fn incidence_tolerance(&self) -> Float {
        Float::with_val(self.mantissa_bits, 1) >> (self.mantissa_bits as i32 - 20)
    }

    /// Number of decimal digits that round-trip a value at this precision.
    pub fn decimal_digits(&self) -> usize {
        (self.mantissa_bits as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2
    }
}
