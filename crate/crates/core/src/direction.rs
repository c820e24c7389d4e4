use std::collections::HashMap;
use std::fmt;

use rug::Float;

use crate::error::{Error, Result};
use crate::triangle::{RightTriangle, SideId};

/// Direction σθ₀ + 2nα + mπ in terms of a base direction θ₀.
///
/// Reflection in the legs and the hypotenuse acts on the triple only, so
/// orbits carry an exact label alongside their floating-point position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolicDirection {
    sigma: i8,
    n: i64,
    m: u8,
}

impl SymbolicDirection {
    pub fn new(sigma: i8, n: i64, m: u8) -> Result<Self> {
        if sigma != 1 && sigma != -1 {
            return Err(Error::domain(format!("sigma must be +1 or -1, got {sigma}")));
        }
        if m > 1 {
            return Err(Error::domain(format!("m must be 0 or 1, got {m}")));
        }
        Ok(SymbolicDirection { sigma, n, m })
    }

    /// The base direction itself, (+1, 0, 0).
    pub fn base() -> Self {
        SymbolicDirection { sigma: 1, n: 0, m: 0 }
    }

    pub fn sigma(&self) -> i8 {
        self.sigma
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn m(&self) -> u8 {
        self.m
    }

    /// Copy of the unfolded triangle this direction lives in. The legs keep
    /// it fixed and the hypotenuse moves it by ±1.
    pub fn level(&self) -> i64 {
        self.sigma as i64 * self.n
    }

    /// Direction after an elastic reflection in `side`.
    pub fn reflect(&self, side: SideId) -> Self {
        let (sigma, n) = (-self.sigma, -self.n);
        match side {
            SideId::LegH => SymbolicDirection { sigma, n, m: self.m },
            SideId::LegV => SymbolicDirection { sigma, n, m: 1 - self.m },
            SideId::Hyp => SymbolicDirection { sigma, n: n - 1, m: self.m },
        }
    }

    /// The opposite direction.
    pub fn reversed(&self) -> Self {
        SymbolicDirection { m: 1 - self.m, ..*self }
    }

    /// Numerical angle in [0, 2π).
    pub fn angle(&self, theta0: &Float, tri: &RightTriangle) -> Float {
        let prec = tri.prec();
        let mut a = Float::with_val(prec, theta0 * self.sigma as i32);
        a += Float::with_val(prec, tri.alpha() * (2 * self.n));
        if self.m == 1 {
            a += tri.pi();
        }
        reduce_angle(a, tri)
    }
}

impl fmt::Display for SymbolicDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sigma > 0 { '+' } else { '-' };
        write!(f, "({s},{},{})", self.n, self.m)
    }
}

/// Reduce an angle into [0, 2π).
pub fn reduce_angle(a: Float, tri: &RightTriangle) -> Float {
    let prec = tri.prec();
    let two_pi = Float::with_val(prec, tri.pi() * 2u32);
    let turns = Float::with_val(prec, &a / &two_pi).floor();
    let mut r = a - two_pi.clone() * turns;
    if r < 0 {
        r += &two_pi;
    }
    if r >= two_pi {
        r -= &two_pi;
    }
    r
}

/// Unit vectors of symbolic directions for one base angle, with the
/// rotations by 2nα cached.
#[derive(Debug, Clone)]
pub struct DirectionFrame {
    theta0: Float,
    cos0: Float,
    sin0: Float,
    alpha: Float,
    rotations: HashMap<i64, (Float, Float)>,
}

impl DirectionFrame {
    pub fn new(theta0: &Float, tri: &RightTriangle) -> Self {
        let prec = tri.prec();
        let theta0 = Float::with_val(prec, theta0);
        let (sin0, cos0) = theta0.clone().sin_cos(Float::new(prec));
        DirectionFrame { theta0, cos0, sin0, alpha: tri.alpha().clone(), rotations: HashMap::new() }
    }

    pub fn theta0(&self) -> &Float {
        &self.theta0
    }

    fn rotation(&mut self, n: i64) -> &(Float, Float) {
        let alpha = &self.alpha;
        self.rotations.entry(n).or_insert_with(|| {
            let prec = alpha.prec();
            let angle = Float::with_val(prec, alpha * (2 * n));
            let (s, c) = angle.sin_cos(Float::new(prec));
            (c, s)
        })
    }

    /// Unit vector (cos, sin) of the direction.
    pub fn vector(&mut self, d: &SymbolicDirection) -> (Float, Float) {
        let prec = self.alpha.prec();
        let cos0 = self.cos0.clone();
        let sin0 = Float::with_val(prec, &self.sin0 * d.sigma() as i32);
        let (c, s) = self.rotation(d.n()).clone();
        let mut x = Float::with_val(prec, &cos0 * &c) - Float::with_val(prec, &sin0 * &s);
        let mut y = Float::with_val(prec, &sin0 * &c) + Float::with_val(prec, &cos0 * &s);
        if d.m() == 1 {
            x = -x;
            y = -y;
        }
        (x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::PrecisionContext;
    use crate::triangle::make_triangle_f64;
    use proptest::prelude::*;

    fn label() -> impl Strategy<Value = SymbolicDirection> {
        (prop_oneof![Just(1i8), Just(-1i8)], -50i64..50, 0u8..2)
            .prop_map(|(s, n, m)| SymbolicDirection::new(s, n, m).unwrap())
    }

    fn side() -> impl Strategy<Value = SideId> {
        prop_oneof![Just(SideId::LegH), Just(SideId::LegV), Just(SideId::Hyp)]
    }

    #[test]
    fn rejects_bad_components() {
        assert!(SymbolicDirection::new(0, 0, 0).is_err());
        assert!(SymbolicDirection::new(1, 0, 2).is_err());
    }

    #[test]
    fn reflection_matches_mirror_formula() {
        // The mirror image of φ in a line at angle λ is 2λ − φ.
        let ctx = PrecisionContext::default();
        let tri = make_triangle_f64(0.7, &ctx).unwrap();
        let theta0 = ctx.float(0.4);
        let d = SymbolicDirection::new(-1, 3, 1).unwrap();
        for side in SideId::ALL {
            let phi = d.angle(&theta0, &tri);
            let mirror = Float::with_val(256, tri.line_angle(side) * 2u32) - &phi;
            let want = reduce_angle(mirror, &tri);
            let got = d.reflect(side).angle(&theta0, &tri);
            let diff = Float::with_val(256, &got - &want).abs();
            assert!(diff < ctx.angle_tolerance(), "{side}: {got} vs {want}");
        }
    }

    #[test]
    fn hyp_reflection_of_base_has_frozen_angle() {
        // −0.4 − 1.4 mod 2π, evaluated with mpmath at 80 digits.
        let ctx = PrecisionContext::default();
        let tri = make_triangle(&Float::with_val(256, Float::parse("0.7").unwrap()), &ctx);
        let tri = tri.unwrap();
        let theta0 = Float::with_val(256, Float::parse("0.4").unwrap());
        let got = SymbolicDirection::base().reflect(SideId::Hyp).angle(&theta0, &tri);
        let want = Float::with_val(
            256,
            Float::parse("4.4831853071795864769252867665590057683943387987502116419498891846156328125724").unwrap(),
        );
        assert!(Float::with_val(256, &got - &want).abs() < Float::with_val(256, 1) >> 240);
    }

    use crate::triangle::make_triangle;

    #[test]
    fn frame_vector_agrees_with_angle() {
        let ctx = PrecisionContext::default();
        let tri = make_triangle_f64(0.3, &ctx).unwrap();
        let theta0 = ctx.float(1.1);
        let mut frame = DirectionFrame::new(&theta0, &tri);
        let d = SymbolicDirection::new(-1, -4, 1).unwrap();
        let (x, y) = frame.vector(&d);
        let (s, c) = d.angle(&theta0, &tri).sin_cos(Float::new(256));
        assert!(Float::with_val(256, &x - &c).abs() < ctx.angle_tolerance());
        assert!(Float::with_val(256, &y - &s).abs() < ctx.angle_tolerance());
    }

    proptest! {
        #[test]
        fn reflections_are_involutions(d in label(), s in side()) {
            prop_assert_eq!(d.reflect(s).reflect(s), d);
        }

        #[test]
        fn reversal_commutes_with_reflection(d in label(), s in side()) {
            prop_assert_eq!(d.reflect(s).reversed(), d.reversed().reflect(s));
        }

        #[test]
        fn level_changes_only_at_hypotenuse(d in label(), s in side()) {
            let step = d.reflect(s).level() - d.level();
            match s {
                SideId::Hyp => prop_assert_eq!(step.abs(), 1),
                _ => prop_assert_eq!(step, 0),
            }
        }

        #[test]
        fn angle_is_reduced(d in label(), t in 0.0f64..6.28) {
            let ctx = PrecisionContext::default();
            let tri = make_triangle_f64(0.61, &ctx).unwrap();
            let a = d.angle(&ctx.float(t), &tri);
            prop_assert!(a >= 0);
            prop_assert!(a < Float::with_val(256, tri.pi() * 2u32));
        }
    }
}
