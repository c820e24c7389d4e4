use std::fmt;

use rug::float::Constant;
use rug::Float;

use crate::direction::SymbolicDirection;
use crate::error::{Error, Result};
use crate::precision::PrecisionContext;

/// Largest denominator tried when looking for α = pπ/q.
pub const RATIONAL_SCAN_MAX_DENOMINATOR: u64 = 1_000_000;
/// Relative distance below which α/π is taken to be the convergent p/q.
const RATIONAL_MATCH_TOLERANCE: f64 = 1e-15;
/// Relative distance below which a convergent makes the hint ambiguous.
const RATIONAL_AMBIGUOUS_TOLERANCE: f64 = 1e-13;

/// The three sides of the canonical triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SideId {
    /// Longer leg, on the x-axis from O to A.
    LegH,
    /// Shorter leg, on the y-axis from O to B.
    LegV,
    /// Segment AB.
    Hyp,
}

impl SideId {
    pub const ALL: [SideId; 3] = [SideId::LegH, SideId::LegV, SideId::Hyp];

    pub fn name(self) -> &'static str {
        match self {
            SideId::LegH => "legH",
            SideId::LegV => "legV",
            SideId::Hyp => "hyp",
        }
    }

    pub fn parse(token: &str) -> Option<SideId> {
        match token.to_ascii_lowercase().as_str() {
            "legh" => Some(SideId::LegH),
            "legv" => Some(SideId::LegV),
            "hyp" => Some(SideId::Hyp),
            _ => None,
        }
    }

    /// Arc-length coordinates grow away from this vertex.
    pub fn origin(self) -> Vertex {
        match self {
            SideId::LegH | SideId::LegV => Vertex::O,
            SideId::Hyp => Vertex::A,
        }
    }

    /// The vertex at the far end (s = side length).
    pub fn terminus(self) -> Vertex {
        match self {
            SideId::LegH => Vertex::A,
            SideId::LegV | SideId::Hyp => Vertex::B,
        }
    }
}

impl fmt::Display for SideId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Corners of the canonical triangle. `O` carries the right angle and is
/// regularisable; `A` (angle α) and `B` (angle π/2 − α) are singular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vertex {
    O,
    A,
    B,
}

impl Vertex {
    pub fn name(self) -> &'static str {
        match self {
            Vertex::O => "O",
            Vertex::A => "A",
            Vertex::B => "B",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrrationalityHint {
    AssumedIrrational,
    /// α = pπ/q with gcd(p, q) = 1.
    RationalMultipleDetected { p: u64, q: u64 },
    /// α/π sits unusually close to a small-denominator rational without matching it.
    Unknown,
}

/// Right triangle with the right angle at O = (0, 0), the longer leg along
/// the x-axis to A = (1, 0) and the shorter leg up to B = (0, tan α).
#[derive(Debug, Clone)]
pub struct RightTriangle {
    alpha: Float,
    tan_alpha: Float,
    sin_alpha: Float,
    cos_alpha: Float,
    hyp_len: Float,
    pi: Float,
    hint: IrrationalityHint,
}

impl RightTriangle {
    pub fn alpha(&self) -> &Float {
        &self.alpha
    }

    pub fn tan_alpha(&self) -> &Float {
        &self.tan_alpha
    }

    pub fn sin_alpha(&self) -> &Float {
        &self.sin_alpha
    }

    pub fn cos_alpha(&self) -> &Float {
        &self.cos_alpha
    }

    pub fn pi(&self) -> &Float {
        &self.pi
    }

    pub fn hint(&self) -> IrrationalityHint {
        self.hint
    }

    pub fn prec(&self) -> u32 {
        self.alpha.prec()
    }

    pub fn side_length(&self, side: SideId) -> Float {
        match side {
            SideId::LegH => Float::with_val(self.prec(), 1),
            SideId::LegV => self.tan_alpha.clone(),
            SideId::Hyp => self.hyp_len.clone(),
        }
    }

    pub fn vertex(&self, v: Vertex) -> (Float, Float) {
        let p = self.prec();
        match v {
            Vertex::O => (Float::new(p), Float::new(p)),
            Vertex::A => (Float::with_val(p, 1), Float::new(p)),
            Vertex::B => (Float::new(p), self.tan_alpha.clone()),
        }
    }

    /// Cartesian point at arc length `s` along `side`.
    pub fn point_on(&self, side: SideId, s: &Float) -> (Float, Float) {
        let p = self.prec();
        match side {
            SideId::LegH => (s.clone(), Float::new(p)),
            SideId::LegV => (Float::new(p), s.clone()),
            SideId::Hyp => {
                let x = Float::with_val(p, 1) - Float::with_val(p, s * &self.cos_alpha);
                let y = Float::with_val(p, s * &self.sin_alpha);
                (x, y)
            }
        }
    }

    /// Arc-length coordinate of the orthogonal projection of (x, y) onto the line of `side`.
    pub fn arc_coordinate(&self, side: SideId, x: &Float, y: &Float) -> Float {
        let p = self.prec();
        match side {
            SideId::LegH => x.clone(),
            SideId::LegV => y.clone(),
            SideId::Hyp => {
                let dx = Float::with_val(p, 1) - x;
                Float::with_val(p, &dx * &self.cos_alpha) + Float::with_val(p, y * &self.sin_alpha)
            }
        }
    }

    /// Angle of the line carrying `side`: 0, π/2 and −α.
    pub fn line_angle(&self, side: SideId) -> Float {
        let p = self.prec();
        match side {
            SideId::LegH => Float::new(p),
            SideId::LegV => Float::with_val(p, &self.pi / 2u32),
            SideId::Hyp => Float::with_val(p, -&self.alpha),
        }
    }

    /// Outward unit normal of the hypotenuse, (sin α, cos α).
    pub fn hyp_normal(&self) -> (Float, Float) {
        (self.sin_alpha.clone(), self.cos_alpha.clone())
    }

    /// Whether two symbolic directions denote the same angle for every base
    /// direction. Exact for irrational α; for detected α = pπ/q the relation
    /// 2qα ≡ 0 (mod 2π) is also used.
    pub fn labels_equivalent(&self, a: &SymbolicDirection, b: &SymbolicDirection) -> bool {
        if a == b {
            return true;
        }
        if a.sigma() != b.sigma() {
            return false;
        }
        match self.hint {
            IrrationalityHint::RationalMultipleDetected { p, q } => {
                // (2(n - n')p + (m - m')q) / q must be an even integer.
                let (p, q) = (p as i128, q as i128);
                let dn = (a.n() - b.n()) as i128;
                let dm = a.m() as i128 - b.m() as i128;
                (2 * dn * p + dm * q).rem_euclid(2 * q) == 0
            }
            _ => false,
        }
    }

    /// Angle at the vertex and the interval of outgoing directions that enter
    /// the triangle from it, as (start, width).
    pub fn vertex_wedge(&self, v: Vertex) -> (Float, Float) {
        let p = self.prec();
        match v {
            Vertex::O => (Float::new(p), Float::with_val(p, &self.pi / 2u32)),
            Vertex::A => (Float::with_val(p, &self.pi - &self.alpha), self.alpha.clone()),
            Vertex::B => {
                let start = -Float::with_val(p, &self.pi / 2u32);
                let width = Float::with_val(p, &self.pi / 2u32) - &self.alpha;
                (start, width)
            }
        }
    }

    /// The two sides meeting at `v`.
    pub fn sides_at(v: Vertex) -> [SideId; 2] {
        match v {
            Vertex::O => [SideId::LegH, SideId::LegV],
            Vertex::A => [SideId::LegH, SideId::Hyp],
            Vertex::B => [SideId::LegV, SideId::Hyp],
        }
    }
}

/// Build the canonical triangle for the smaller acute angle `alpha`.
///
/// α/π is scanned by continued fractions up to denominator 10^6. A match
/// sets the hint and snaps α onto pπ/q at full precision.
pub fn make_triangle(alpha: &Float, ctx: &PrecisionContext) -> Result<RightTriangle> {
    let prec = ctx.mantissa_bits();
    let pi = Float::with_val(prec, Constant::Pi);
    let alpha = Float::with_val(prec, alpha);
    let quarter = Float::with_val(prec, &pi / 4u32);
    let slack = ctx.angle_tolerance();
    if !alpha.is_finite() || alpha <= 0 || alpha > Float::with_val(prec, &quarter + &slack) {
        return Err(Error::domain(format!(
            "alpha must lie in (0, pi/4], got {}",
            alpha.to_f64()
        )));
    }
    let hint = rational_hint(&Float::with_val(prec, &alpha / &pi));
    let alpha = match hint {
        IrrationalityHint::RationalMultipleDetected { p, q } => Float::with_val(prec, &pi * p) / q,
        _ if alpha > quarter => quarter,
        _ => alpha,
    };
    let (sin_alpha, cos_alpha) = alpha.clone().sin_cos(Float::new(prec));
    let tan_alpha = Float::with_val(prec, &sin_alpha / &cos_alpha);
    let hyp_len = Float::with_val(prec, 1) / &cos_alpha;
    Ok(RightTriangle { alpha, tan_alpha, sin_alpha, cos_alpha, hyp_len, pi, hint })
}

/// Convenience wrapper for `f64` input.
pub fn make_triangle_f64(alpha: f64, ctx: &PrecisionContext) -> Result<RightTriangle> {
    make_triangle(&ctx.float(alpha), ctx)
}

fn rational_hint(x: &Float) -> IrrationalityHint {
    let prec = x.prec();
    let mut y = x.clone();
    let (mut h1, mut h2) = (1u64, 0u64);
    let (mut k1, mut k2) = (0u64, 1u64);
    let mut ambiguous = false;
    for _ in 0..64 {
        let a = Float::with_val(prec, y.floor_ref());
        let Some(ai) = a.to_integer().and_then(|i| i.to_u64()) else { break };
        let (Some(h), Some(k)) = (
            ai.checked_mul(h1).and_then(|v| v.checked_add(h2)),
            ai.checked_mul(k1).and_then(|v| v.checked_add(k2)),
        ) else {
            break;
        };
        if k > RATIONAL_SCAN_MAX_DENOMINATOR {
            break;
        }
        let approx = Float::with_val(prec, h) / k;
        let err = Float::with_val(prec, x - &approx).abs() / x;
        if err <= RATIONAL_MATCH_TOLERANCE && h > 0 {
            return IrrationalityHint::RationalMultipleDetected { p: h, q: k };
        }
        if err <= RATIONAL_AMBIGUOUS_TOLERANCE {
            ambiguous = true;
        }
        (h2, h1, k2, k1) = (h1, h, k1, k);
        let frac = Float::with_val(prec, &y - &a);
        if frac.is_zero() {
            break;
        }
        y = Float::with_val(prec, 1) / frac;
    }
    if ambiguous {
        IrrationalityHint::Unknown
    } else {
        IrrationalityHint::AssumedIrrational
    }
}

/// Angle of the right triangle equivalent to two elastic point masses on a
/// segment: tan α = √(m_light / m_heavy).
pub fn masses_to_alpha(m1: f64, m2: f64, ctx: &PrecisionContext) -> Result<Float> {
    if !(m1 > 0.0 && m2 > 0.0 && m1.is_finite() && m2.is_finite()) {
        return Err(Error::domain(format!("masses must be positive, got {m1} and {m2}")));
    }
    let (light, heavy) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
    let ratio = ctx.float(light) / ctx.float(heavy);
    Ok(ratio.sqrt().atan())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    fn pi(ctx: &PrecisionContext) -> Float {
        Float::with_val(ctx.mantissa_bits(), Constant::Pi)
    }

    #[test]
    fn pi_over_six_is_detected() {
        let ctx = ctx();
        let tri = make_triangle(&(pi(&ctx) / 6u32), &ctx).unwrap();
        assert_eq!(tri.hint(), IrrationalityHint::RationalMultipleDetected { p: 1, q: 6 });
        // The f64 rounding of π/6 is snapped onto the exact value.
        let tri = make_triangle_f64(std::f64::consts::FRAC_PI_6, &ctx).unwrap();
        assert_eq!(tri.hint(), IrrationalityHint::RationalMultipleDetected { p: 1, q: 6 });
        let err = Float::with_val(256, tri.alpha() - pi(&ctx) / 6u32).abs();
        assert!(err < Float::with_val(256, 1) >> 250);
    }

    #[test]
    fn generic_alpha_is_assumed_irrational() {
        let ctx = ctx();
        let tri = make_triangle_f64(0.7, &ctx).unwrap();
        assert_eq!(tri.hint(), IrrationalityHint::AssumedIrrational);
        let tri = make_triangle(&ctx.float(0.5).atan(), &ctx).unwrap();
        assert_eq!(tri.hint(), IrrationalityHint::AssumedIrrational);
    }

    #[test]
    fn arctan_half_gives_exact_vertices() {
        let ctx = ctx();
        let tri = make_triangle(&ctx.float(0.5).atan(), &ctx).unwrap();
        let (bx, by) = tri.vertex(Vertex::B);
        assert!(bx.is_zero());
        let err = Float::with_val(256, &by - 0.5).abs();
        assert!(err < Float::with_val(256, 1) >> 250);
        assert_eq!(tri.vertex(Vertex::A).0, 1);
    }

    #[test]
    fn tan_of_point_seven_matches_reference() {
        // 62 digits of tan(0.7), computed independently with mpmath at 300 digits.
        let reference = "0.84228838046307944812813500221293771718722125080419899879692251";
        let ctx = ctx();
        let tri = make_triangle_f64(0.7, &ctx).unwrap();
        // 0.7 as an f64 is not 7/10; rebuild from the decimal to compare like for like.
        let exact = make_triangle(&Float::with_val(256, Float::parse("0.7").unwrap()), &ctx).unwrap();
        let want = Float::with_val(256, Float::parse(reference).unwrap());
        let err = Float::with_val(256, exact.tan_alpha() - &want).abs();
        assert!(err < Float::with_val(256, 1) >> 196, "err = {err}");
        assert!(Float::with_val(256, tri.tan_alpha() - &want).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_alpha_is_rejected() {
        let ctx = ctx();
        assert!(make_triangle_f64(0.0, &ctx).is_err());
        assert!(make_triangle_f64(-0.1, &ctx).is_err());
        assert!(make_triangle_f64(0.8, &ctx).is_err());
        assert!(make_triangle(&(pi(&ctx) / 4u32), &ctx).is_ok());
    }

    #[test]
    fn canonical_geometry_holds() {
        let ctx = ctx();
        let tri = make_triangle_f64(0.3, &ctx).unwrap();
        let tol = ctx.angle_tolerance();
        // Angle at A between AO and AB equals alpha.
        let (bx, by) = tri.vertex(Vertex::B);
        let ab = Float::with_val(256, by.clone()).atan2(&Float::with_val(256, &bx - 1u32));
        let at_a = Float::with_val(256, tri.pi() - &ab);
        assert!(Float::with_val(256, &at_a - tri.alpha()).abs() < tol);
        // Hypotenuse length from the endpoints.
        let len = Float::with_val(256, by.clone().square() + 1u32).sqrt();
        assert!(Float::with_val(256, &len - tri.side_length(SideId::Hyp)).abs() < tol);
        assert!(*tri.tan_alpha() > 0 && *tri.tan_alpha() <= 1);
    }

    #[test]
    fn masses_reduce_to_the_expected_angles() {
        let ctx = ctx();
        let tol = ctx.angle_tolerance();
        let eq = masses_to_alpha(2.0, 2.0, &ctx).unwrap();
        assert!(Float::with_val(256, &eq - pi(&ctx) / 4u32).abs() < tol);
        let a = masses_to_alpha(1.0, 3.0, &ctx).unwrap();
        assert!(Float::with_val(256, &a - pi(&ctx) / 6u32).abs() < tol);
        assert_eq!(a, masses_to_alpha(3.0, 1.0, &ctx).unwrap());
        assert!(masses_to_alpha(0.0, 1.0, &ctx).is_err());
        assert!(masses_to_alpha(1.0, -2.0, &ctx).is_err());
    }

    #[test]
    fn rational_labels_are_reduced() {
        let ctx = ctx();
        let tri = make_triangle(&(pi(&ctx) / 4u32), &ctx).unwrap();
        // 2·2·(π/4) + π = 2π.
        let a = SymbolicDirection::new(1, 2, 1).unwrap();
        let b = SymbolicDirection::new(1, 0, 0).unwrap();
        assert!(tri.labels_equivalent(&a, &b));
        let irr = make_triangle_f64(0.7, &ctx).unwrap();
        assert!(!irr.labels_equivalent(&a, &b));
    }
}
