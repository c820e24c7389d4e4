use rug::Float;

use crate::direction::{reduce_angle, SymbolicDirection};
use crate::error::{Error, Result};
use crate::flow::{trace_with_bound, OrbitSegment, PhasePoint, Termination};
use crate::precision::PrecisionContext;
use crate::triangle::{RightTriangle, SideId, Vertex};

/// Level of each chord of the segment.
pub fn level_code(seg: &OrbitSegment) -> Vec<i64> {
    seg.level_code()
}

/// A point of the unfolded surface: the rhombus `level`, one of its four
/// triangle copies, and the point of the triangle it projects to.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceLocus {
    pub level: i64,
    /// (σ, m) of the direction label; picks the copy inside the rhombus.
    pub copy: (i8, u8),
    pub point: (Float, Float),
}

impl SurfaceLocus {
    pub fn lift(phase: &PhasePoint, tri: &RightTriangle) -> Self {
        SurfaceLocus {
            level: phase.dir.level(),
            copy: (phase.dir.sigma(), phase.dir.m()),
            point: phase.point(tri),
        }
    }

    /// Forget the level and copy.
    pub fn project(&self) -> &(Float, Float) {
        &self.point
    }
}

/// A direction of the fibre over a triangle point, with its numeric angle.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledAngle {
    pub label: SymbolicDirection,
    pub angle: Float,
}

/// All angles σθ₀ + 2nα + mπ with |n| ≤ K, sorted in [0, 2π) and
/// deduplicated within the angle tolerance. The set does not depend on the
/// base point, so none is taken.
pub fn enumerate_directions(k: u32, theta0: &Float, tri: &RightTriangle, ctx: &PrecisionContext) -> Vec<LabeledAngle> {
    let k = k as i64;
    let mut out = Vec::with_capacity(4 * (2 * k as usize + 1));
    for n in -k..=k {
        for sigma in [1i8, -1] {
            for m in 0u8..2 {
                let label = SymbolicDirection::new(sigma, n, m).expect("valid label");
                let angle = label.angle(theta0, tri);
                out.push(LabeledAngle { label, angle });
            }
        }
    }
    out.sort_by(|a, b| a.angle.partial_cmp(&b.angle).expect("finite angles").then(a.label.cmp(&b.label)));
    let tol = ctx.angle_tolerance();
    let two_pi = Float::with_val(tri.prec(), tri.pi() * 2u32);
    let mut deduped: Vec<LabeledAngle> = Vec::with_capacity(out.len());
    for d in out {
        if let Some(last) = deduped.last() {
            if Float::with_val(tri.prec(), &d.angle - &last.angle) < tol {
                continue;
            }
        }
        deduped.push(d);
    }
    // Wrap-around duplicate of the first entry near 2π.
    if deduped.len() > 1 {
        let first = deduped[0].angle.clone();
        let last = &deduped[deduped.len() - 1].angle;
        if Float::with_val(tri.prec(), &two_pi - last) + &first < tol {
            deduped.pop();
        }
    }
    deduped
}

/// Largest gap between cyclically consecutive sorted angles in [0, 2π).
pub fn max_angular_gap(sorted: &[Float], tri: &RightTriangle) -> Float {
    let prec = tri.prec();
    let two_pi = Float::with_val(prec, tri.pi() * 2u32);
    if sorted.is_empty() {
        return two_pi;
    }
    let mut gap = Float::with_val(prec, &two_pi - &sorted[sorted.len() - 1]) + &sorted[0];
    for w in sorted.windows(2) {
        let g = Float::with_val(prec, &w[1] - &w[0]);
        if g > gap {
            gap = g;
        }
    }
    gap
}

/// Label of the direction θ₀ + 2nα at level n as seen from the corner O,
/// that is the representative whose angle lies in [0, π/2]. When that angle
/// is 0 or π/2 the orbit runs along a leg into A or B, which is returned too.
pub fn center_label(
    n: i64,
    theta0: &Float,
    tri: &RightTriangle,
    ctx: &PrecisionContext,
) -> Result<(SymbolicDirection, Option<Vertex>)> {
    let prec = tri.prec();
    let tol = ctx.angle_tolerance();
    let half_pi = Float::with_val(prec, tri.pi() / 2u32);
    let two_pi = Float::with_val(prec, tri.pi() * 2u32);
    for (sigma, k) in [(1i8, n), (-1i8, -n)] {
        for m in 0u8..2 {
            let d = SymbolicDirection::new(sigma, k, m)?;
            let a = d.angle(theta0, tri);
            if a < tol || Float::with_val(prec, &two_pi - &a) < tol {
                return Ok((d, Some(Vertex::A)));
            }
            let to_half = Float::with_val(prec, &half_pi - &a);
            if to_half.clone().abs() < tol {
                return Ok((d, Some(Vertex::B)));
            }
            if to_half > 0 {
                return Ok((d, None));
            }
        }
    }
    unreachable!("one of the four copies of a direction lies in the first quadrant")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterOrbit {
    pub n: i64,
    pub label: SymbolicDirection,
    pub forward: Vec<i64>,
    pub backward: Vec<i64>,
    /// Set when a branch died at A or B inside the window.
    pub singular: Option<Vertex>,
}

/// Trace from the rhombus center of level n, which projects to O, in the
/// direction θₙ and in the opposite direction, for `window` reflections each.
///
/// The opposite direction leaves O after the corner regularisation (both
/// legs reflect it), so the two branches run along the same chords and
/// the joint code is a palindrome about the center.
pub fn center_orbit(
    n: i64,
    theta0: &Float,
    window: usize,
    tri: &RightTriangle,
    ctx: &PrecisionContext,
) -> Result<CenterOrbit> {
    if window == 0 {
        return Err(Error::domain("window must be at least 1"));
    }
    let (label, along_leg) = center_label(n, theta0, tri, ctx)?;
    if let Some(vertex) = along_leg {
        return Ok(CenterOrbit { n, label, forward: vec![n], backward: vec![n], singular: Some(vertex) });
    }
    let start = PhasePoint::at_corner(tri.prec(), label, theta0.clone());
    let fwd = trace_with_bound(&start, window, None, tri, ctx)?;
    let back_label = label.reversed().reflect(SideId::LegH).reflect(SideId::LegV);
    let back_start = PhasePoint::at_corner(tri.prec(), back_label, theta0.clone());
    let bwd = trace_with_bound(&back_start, window, None, tri, ctx)?;
    let singular = [&fwd, &bwd].iter().find_map(|s| match s.termination {
        Termination::SingularVertex { vertex, .. } => Some(vertex),
        _ => None,
    });
    Ok(CenterOrbit { n, label, forward: fwd.level_code(), backward: bwd.level_code(), singular })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EscapeKind {
    ForwardEscapeCandidate,
    BackwardEscapeCandidate,
    BoundedWindow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeVerdict {
    pub kind: EscapeKind,
    pub window: usize,
    /// Share of level changes that go in the verdict's direction; 0 when the
    /// level never changes.
    pub monotone_fraction: f64,
}

/// Windowed escape heuristic over the level code.
///
/// Forward candidate: the last tenth of the window sets a new maximum while
/// not setting a new minimum. Backward is the mirror image. Anything else,
/// including a window that does both, is bounded.
pub fn classify_escape(seg: &OrbitSegment) -> Result<EscapeVerdict> {
    classify_code(&seg.level_code())
}

pub fn classify_code(code: &[i64]) -> Result<EscapeVerdict> {
    let window = code.len();
    if window < 10 {
        return Err(Error::domain(format!("escape classification needs at least 10 hits, got {window}")));
    }
    let split = window - window / 10;
    let (head, tail) = code.split_at(split);
    let head_max = *head.iter().max().expect("nonempty");
    let head_min = *head.iter().min().expect("nonempty");
    let tail_max = *tail.iter().max().expect("nonempty");
    let tail_min = *tail.iter().min().expect("nonempty");
    let new_max = tail_max > head_max;
    let new_min = tail_min < head_min;
    let (mut up, mut down) = (0usize, 0usize);
    for w in code.windows(2) {
        match w[1].cmp(&w[0]) {
            std::cmp::Ordering::Greater => up += 1,
            std::cmp::Ordering::Less => down += 1,
            std::cmp::Ordering::Equal => {}
        }
    }
    let changes = up + down;
    let share = |k: usize| if changes == 0 { 0.0 } else { k as f64 / changes as f64 };
    let (kind, monotone_fraction) = match (new_max, new_min) {
        (true, false) => (EscapeKind::ForwardEscapeCandidate, share(up)),
        (false, true) => (EscapeKind::BackwardEscapeCandidate, share(down)),
        _ => (EscapeKind::BoundedWindow, share(up.max(down))),
    };
    Ok(EscapeVerdict { kind, window, monotone_fraction })
}

/// Reduce and compare two angles modulo 2π.
pub fn angles_close(a: &Float, b: &Float, tri: &RightTriangle, ctx: &PrecisionContext) -> bool {
    let d = reduce_angle(Float::with_val(tri.prec(), a - b), tri);
    let two_pi = Float::with_val(tri.prec(), tri.pi() * 2u32);
    let tol = ctx.angle_tolerance();
    d < tol || Float::with_val(tri.prec(), &two_pi - &d) < tol
}
