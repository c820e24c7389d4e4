use rug::Float;

use crate::direction::{DirectionFrame, SymbolicDirection};
use crate::error::{Error, Result};
use crate::precision::PrecisionContext;
use crate::triangle::{RightTriangle, SideId, Vertex};

/// Default |level| above which a trace stops with `Escaped`.
pub const DEFAULT_ESCAPE_BOUND: u64 = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum Position {
    /// Arc length `s` along `side`. A point at s = 0 on a leg is the corner O.
    OnSide { side: SideId, s: Float },
    Interior { x: Float, y: Float },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub position: Position,
    pub dir: SymbolicDirection,
    pub theta0: Float,
}

impl PhasePoint {
    pub fn on_side(side: SideId, s: Float, dir: SymbolicDirection, theta0: Float) -> Self {
        PhasePoint { position: Position::OnSide { side, s }, dir, theta0 }
    }

    pub fn interior(x: Float, y: Float, dir: SymbolicDirection, theta0: Float) -> Self {
        PhasePoint { position: Position::Interior { x, y }, dir, theta0 }
    }

    /// The corner O, leaving along `dir`.
    pub fn at_corner(prec: u32, dir: SymbolicDirection, theta0: Float) -> Self {
        Self::on_side(SideId::LegH, Float::new(prec), dir, theta0)
    }

    pub fn side(&self) -> Option<SideId> {
        match &self.position {
            Position::OnSide { side, .. } => Some(*side),
            Position::Interior { .. } => None,
        }
    }

    pub fn point(&self, tri: &RightTriangle) -> (Float, Float) {
        match &self.position {
            Position::OnSide { side, s } => tri.point_on(*side, s),
            Position::Interior { x, y } => (x.clone(), y.clone()),
        }
    }

    fn is_corner_o(&self) -> bool {
        matches!(&self.position, Position::OnSide { side: SideId::LegH | SideId::LegV, s } if s.is_zero())
    }
}

/// One reflection: where it happened and the direction leaving it.
#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub side: SideId,
    pub s: Float,
    pub dir_out: SymbolicDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    MaxSteps,
    SingularVertex { vertex: Vertex, hit_index: usize },
    PeriodicDetected { period: usize },
    Escaped { level_bound: u64 },
}

/// A traced orbit. `dirs[i]` is the direction of the chord arriving at
/// `hits[i]`, so `dirs[0]` is the start direction and
/// `dirs[i + 1] = dirs[i].reflect(hits[i].side)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSegment {
    pub start: PhasePoint,
    pub hits: Vec<Hit>,
    pub dirs: Vec<SymbolicDirection>,
    pub termination: Termination,
}

impl OrbitSegment {
    /// Level of each chord, one entry per hit.
    pub fn level_code(&self) -> Vec<i64> {
        self.dirs.iter().map(SymbolicDirection::level).collect()
    }

    /// Phase point just after the last hit.
    pub fn final_point(&self) -> PhasePoint {
        match self.hits.last() {
            Some(h) => PhasePoint::on_side(h.side, h.s.clone(), h.dir_out, self.start.theta0.clone()),
            None => self.start.clone(),
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self.termination, Termination::SingularVertex { .. })
    }
}

/// Stateful stepper over one orbit. Cheap to clone.
#[derive(Debug, Clone)]
pub struct Tracer<'a> {
    tri: &'a RightTriangle,
    ctx: &'a PrecisionContext,
    frame: DirectionFrame,
    x: Float,
    y: Float,
    dir: SymbolicDirection,
    exclude: [Option<SideId>; 2],
}

/// Outcome of a single advance.
#[derive(Debug, Clone, PartialEq)]
pub enum Advance {
    /// One reflection, or two when passing through the corner O.
    Hits(Vec<Hit>),
    Singular(Vertex, Hit),
}

impl<'a> Tracer<'a> {
    pub fn new(start: &PhasePoint, tri: &'a RightTriangle, ctx: &'a PrecisionContext) -> Result<Self> {
        let prec = tri.prec();
        let mut frame = DirectionFrame::new(&start.theta0, tri);
        let (dx, dy) = frame.vector(&start.dir);
        let (x, y, exclude) = match &start.position {
            Position::OnSide { side, s } => {
                let len = tri.side_length(*side);
                if *s < 0 || *s > len || !s.is_finite() {
                    return Err(Error::domain(format!("s = {} lies outside {side}", s.to_f64())));
                }
                let eps = Float::with_val(prec, &len * ctx.corner_epsilon());
                let near_origin = *s <= eps;
                let near_end = Float::with_val(prec, &len - s) <= eps;
                let corner_o = start.is_corner_o();
                if near_end || (near_origin && !corner_o && *side == SideId::Hyp) {
                    let v = if near_end { side.terminus() } else { side.origin() };
                    return Err(Error::VertexPoint(v));
                }
                let (x, y) = tri.point_on(*side, s);
                if corner_o {
                    if dx <= 0 || dy <= 0 {
                        return Err(Error::domain("direction does not leave the corner O inward"));
                    }
                    (x, y, [Some(SideId::LegH), Some(SideId::LegV)])
                } else {
                    if !points_inward(tri, *side, &dx, &dy) {
                        return Err(Error::domain(format!(
                            "direction {} does not point into the triangle from {side}",
                            start.dir
                        )));
                    }
                    (x, y, [Some(*side), None])
                }
            }
            Position::Interior { x, y } => {
                let x = Float::with_val(prec, x);
                let y = Float::with_val(prec, y);
                let hyp = Float::with_val(prec, tri.sin_alpha() * &x) + Float::with_val(prec, tri.cos_alpha() * &y);
                if x <= 0 || y <= 0 || hyp >= *tri.sin_alpha() {
                    return Err(Error::domain("interior point is not inside the open triangle"));
                }
                (x, y, [None, None])
            }
        };
        Ok(Tracer { tri, ctx, frame, x, y, dir: start.dir, exclude })
    }

    pub fn dir(&self) -> SymbolicDirection {
        self.dir
    }

    pub fn point(&self) -> (&Float, &Float) {
        (&self.x, &self.y)
    }

    /// Unit vector of the current direction.
    pub fn vector(&mut self) -> (Float, Float) {
        self.frame.vector(&self.dir)
    }

    fn excluded(&self, side: SideId) -> bool {
        self.exclude.iter().any(|e| *e == Some(side))
    }

    /// Move to the next boundary hit and reflect.
    pub fn advance(&mut self) -> Advance {
        let tri = self.tri;
        let prec = tri.prec();
        let (dx, dy) = self.frame.vector(&self.dir);
        let mut best: Option<(SideId, Float)> = None;
        let mut consider = |side: SideId, t: Float| {
            if t.is_finite() && best.as_ref().map_or(true, |(_, b)| t < *b) {
                best = Some((side, t));
            }
        };
        if !self.excluded(SideId::LegH) && dy < 0 {
            consider(SideId::LegH, -Float::with_val(prec, &self.y / &dy));
        }
        if !self.excluded(SideId::LegV) && dx < 0 {
            consider(SideId::LegV, -Float::with_val(prec, &self.x / &dx));
        }
        if !self.excluded(SideId::Hyp) {
            let den = Float::with_val(prec, tri.sin_alpha() * &dx) + Float::with_val(prec, tri.cos_alpha() * &dy);
            if den > 0 {
                let one_minus_x = Float::with_val(prec, 1) - &self.x;
                let num = Float::with_val(prec, tri.sin_alpha() * &one_minus_x)
                    - Float::with_val(prec, tri.cos_alpha() * &self.y);
                consider(SideId::Hyp, num / den);
            }
        }
        let (side, t) = best.expect("a ray inside a triangle always meets a side");
        let t = if t < 0 { Float::new(prec) } else { t };
        let len = tri.side_length(side);
        let mut s = match side {
            SideId::LegH => Float::with_val(prec, &self.x + Float::with_val(prec, &t * &dx)),
            SideId::LegV => Float::with_val(prec, &self.y + Float::with_val(prec, &t * &dy)),
            SideId::Hyp => {
                let hx = Float::with_val(prec, &self.x + Float::with_val(prec, &t * &dx));
                let hy = Float::with_val(prec, &self.y + Float::with_val(prec, &t * &dy));
                tri.arc_coordinate(side, &hx, &hy)
            }
        };
        if s < 0 {
            s = Float::new(prec);
        }
        if s > len {
            s = len.clone();
        }
        let eps = Float::with_val(prec, &len * self.ctx.corner_epsilon());
        let near_origin = s <= eps;
        let near_end = Float::with_val(prec, &len - &s) <= eps;
        if near_end || (near_origin && side == SideId::Hyp) {
            let vertex = if near_end { side.terminus() } else { side.origin() };
            let s = if near_end { len } else { Float::new(prec) };
            return Advance::Singular(vertex, Hit { side, s, dir_out: self.dir.reflect(side) });
        }
        if near_origin {
            // Through the right-angle corner: both legs reflect and the
            // orbit leaves O reversed.
            let other = if side == SideId::LegH { SideId::LegV } else { SideId::LegH };
            let d1 = self.dir.reflect(side);
            let d2 = d1.reflect(other);
            self.x = Float::new(prec);
            self.y = Float::new(prec);
            self.dir = d2;
            self.exclude = [Some(SideId::LegH), Some(SideId::LegV)];
            return Advance::Hits(vec![
                Hit { side, s: Float::new(prec), dir_out: d1 },
                Hit { side: other, s: Float::new(prec), dir_out: d2 },
            ]);
        }
        let (x, y) = tri.point_on(side, &s);
        self.x = x;
        self.y = y;
        self.dir = self.dir.reflect(side);
        self.exclude = [Some(side), None];
        Advance::Hits(vec![Hit { side, s, dir_out: self.dir }])
    }
}

fn points_inward(tri: &RightTriangle, side: SideId, dx: &Float, dy: &Float) -> bool {
    match side {
        SideId::LegH => *dy > 0,
        SideId::LegV => *dx > 0,
        SideId::Hyp => {
            let prec = tri.prec();
            let dot = Float::with_val(prec, tri.sin_alpha() * dx) + Float::with_val(prec, tri.cos_alpha() * dy);
            dot < 0
        }
    }
}

/// Next boundary hit from `state`, with the reflected direction.
pub fn step(state: &PhasePoint, tri: &RightTriangle, ctx: &PrecisionContext) -> Result<PhasePoint> {
    let mut tracer = Tracer::new(state, tri, ctx)?;
    match tracer.advance() {
        Advance::Hits(hits) => {
            let h = hits.last().expect("advance yields at least one hit");
            Ok(PhasePoint::on_side(h.side, h.s.clone(), h.dir_out, state.theta0.clone()))
        }
        Advance::Singular(vertex, _) => Err(Error::SingularVertex { vertex, hit_index: 0 }),
    }
}

/// Trace with the default escape bound.
pub fn trace(start: &PhasePoint, max_steps: usize, tri: &RightTriangle, ctx: &PrecisionContext) -> Result<OrbitSegment> {
    trace_with_bound(start, max_steps, Some(DEFAULT_ESCAPE_BOUND), tri, ctx)
}

/// Trace up to `max_steps` reflections. A passage through O counts as two.
pub fn trace_with_bound(
    start: &PhasePoint,
    max_steps: usize,
    escape_bound: Option<u64>,
    tri: &RightTriangle,
    ctx: &PrecisionContext,
) -> Result<OrbitSegment> {
    if max_steps == 0 {
        return Err(Error::domain("max_steps must be at least 1"));
    }
    let mut tracer = Tracer::new(start, tri, ctx)?;
    let mut hits = Vec::with_capacity(max_steps.min(1 << 16));
    let mut dirs = Vec::with_capacity(max_steps.min(1 << 16));
    let mut termination = Termination::MaxSteps;
    'outer: while hits.len() < max_steps {
        let incoming = tracer.dir();
        match tracer.advance() {
            Advance::Hits(batch) => {
                let mut d = incoming;
                for h in batch {
                    if hits.len() == max_steps {
                        break 'outer;
                    }
                    dirs.push(d);
                    d = h.dir_out;
                    hits.push(h);
                }
                if let Some(bound) = escape_bound {
                    if tracer.dir().level().unsigned_abs() > bound {
                        termination = Termination::Escaped { level_bound: bound };
                        break;
                    }
                }
            }
            Advance::Singular(vertex, h) => {
                dirs.push(incoming);
                termination = Termination::SingularVertex { vertex, hit_index: hits.len() };
                hits.push(h);
                break;
            }
        }
    }
    Ok(OrbitSegment { start: start.clone(), hits, dirs, termination })
}

/// Time-reversed segment: starts at the last hit and revisits the earlier
/// hits in reverse order, ending with the original start point.
pub fn reverse(seg: &OrbitSegment) -> Result<OrbitSegment> {
    if seg.is_singular() {
        return Err(Error::Unsupported("cannot reverse an orbit that ends at a singular vertex".into()));
    }
    let (start_side, start_s) = match &seg.start.position {
        Position::OnSide { side, s } => (*side, s.clone()),
        Position::Interior { .. } => {
            return Err(Error::Unsupported("reversal needs a start point on a side".into()));
        }
    };
    let Some(last) = seg.hits.last() else {
        return Ok(seg.clone());
    };
    let theta0 = seg.start.theta0.clone();
    let count = seg.hits.len();
    let new_start = PhasePoint::on_side(last.side, last.s.clone(), seg.dirs[count - 1].reversed(), theta0);
    let mut hits = Vec::with_capacity(count);
    let mut dirs = Vec::with_capacity(count);
    for i in (0..count - 1).rev() {
        let d_in = seg.dirs[i + 1].reversed();
        let h = &seg.hits[i];
        dirs.push(d_in);
        hits.push(Hit { side: h.side, s: h.s.clone(), dir_out: seg.dirs[i].reversed() });
    }
    let d_in = seg.dirs[0].reversed();
    dirs.push(d_in);
    hits.push(Hit { side: start_side, s: start_s, dir_out: d_in.reflect(start_side) });
    Ok(OrbitSegment { start: new_start, hits, dirs, termination: seg.termination })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodCertificate {
    pub period_reflections: usize,
    pub geometric_length: Float,
    pub start: PhasePoint,
    pub max_position_defect: Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NotFoundReason {
    MaxSteps,
    Singular,
    /// A matching return was found but a ±δ neighbour did not follow the same code.
    StripCheckFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PeriodOutcome {
    Periodic(PeriodCertificate),
    NotFound(NotFoundReason),
}

impl PeriodOutcome {
    pub fn certificate(&self) -> Option<&PeriodCertificate> {
        match self {
            PeriodOutcome::Periodic(c) => Some(c),
            PeriodOutcome::NotFound(_) => None,
        }
    }
}

/// Moves an interior start to its first boundary hit so that returns can be
/// matched on a side. Returns `None` if that hit is singular.
fn boundary_start(start: &PhasePoint, tri: &RightTriangle, ctx: &PrecisionContext) -> Result<Option<PhasePoint>> {
    match start.position {
        Position::OnSide { .. } => Ok(Some(start.clone())),
        Position::Interior { .. } => match step(start, tri, ctx) {
            Ok(p) => Ok(Some(p)),
            Err(Error::SingularVertex { .. }) => Ok(None),
            Err(e) => Err(e),
        },
    }
}

fn chord_length(a: &(Float, Float), b: &(Float, Float)) -> Float {
    let dx = Float::with_val(a.0.prec(), &a.0 - &b.0);
    let dy = Float::with_val(a.0.prec(), &a.1 - &b.1);
    dx.hypot(&dy)
}

/// Search for the smallest period k ≤ `max_steps`: a return to the start
/// side with an equivalent symbolic direction and |s − s₀| below the
/// position tolerance, confirmed over 2k reflections and at s₀ ± δ.
pub fn detect_period(
    start: &PhasePoint,
    max_steps: usize,
    tri: &RightTriangle,
    ctx: &PrecisionContext,
) -> Result<PeriodOutcome> {
    if max_steps < 2 {
        return Err(Error::domain("max_steps must be at least 2"));
    }
    let Some(start) = boundary_start(start, tri, ctx)? else {
        return Ok(PeriodOutcome::NotFound(NotFoundReason::Singular));
    };
    let Position::OnSide { side: side0, s: s0 } = &start.position else { unreachable!() };
    let prec = tri.prec();
    let tol = ctx.position_tolerance();
    let mut tracer = Tracer::new(&start, tri, ctx)?;
    let mut seq: Vec<(SideId, SymbolicDirection)> = Vec::new();
    let mut length = Float::new(prec);
    let mut prev = start.point(tri);
    while seq.len() < max_steps {
        let batch = match tracer.advance() {
            Advance::Hits(b) => b,
            Advance::Singular(..) => return Ok(PeriodOutcome::NotFound(NotFoundReason::Singular)),
        };
        let here = (tracer.point().0.clone(), tracer.point().1.clone());
        length += chord_length(&prev, &here);
        prev = here;
        for h in batch {
            seq.push((h.side, h.dir_out));
            if h.side != *side0 || !tri.labels_equivalent(&h.dir_out, &start.dir) {
                continue;
            }
            let defect = Float::with_val(prec, &h.s - s0).abs();
            if defect >= tol {
                continue;
            }
            let k = seq.len();
            if !confirm_repeat(&mut tracer.clone(), &seq, tri)? {
                continue;
            }
            if !strip_check(&start, &seq, tri, ctx)? {
                return Ok(PeriodOutcome::NotFound(NotFoundReason::StripCheckFailed));
            }
            return Ok(PeriodOutcome::Periodic(PeriodCertificate {
                period_reflections: k,
                geometric_length: length,
                start: start.clone(),
                max_position_defect: defect,
            }));
        }
    }
    Ok(PeriodOutcome::NotFound(NotFoundReason::MaxSteps))
}

/// Continue a further k reflections and require the same (side, label) word.
fn confirm_repeat(tracer: &mut Tracer<'_>, seq: &[(SideId, SymbolicDirection)], tri: &RightTriangle) -> Result<bool> {
    let mut i = 0;
    while i < seq.len() {
        let batch = match tracer.advance() {
            Advance::Hits(b) => b,
            Advance::Singular(..) => return Ok(false),
        };
        for h in batch {
            if i >= seq.len() {
                break;
            }
            let (side, dir) = seq[i];
            if h.side != side || !tri.labels_equivalent(&h.dir_out, &dir) {
                return Ok(false);
            }
            i += 1;
        }
    }
    Ok(true)
}

/// The orbits at s₀ ± δ must follow the same word for one period.
fn strip_check(
    start: &PhasePoint,
    seq: &[(SideId, SymbolicDirection)],
    tri: &RightTriangle,
    ctx: &PrecisionContext,
) -> Result<bool> {
    let Position::OnSide { side, s } = &start.position else { return Ok(true) };
    let prec = tri.prec();
    let delta = ctx.float(1000.0 * ctx.position_tolerance());
    let len = tri.side_length(*side);
    for sign in [-1i32, 1] {
        let shifted = Float::with_val(prec, s + Float::with_val(prec, &delta * sign));
        if shifted <= 0 || shifted >= len {
            continue;
        }
        let probe = PhasePoint::on_side(*side, shifted, start.dir, start.theta0.clone());
        let mut tracer = match Tracer::new(&probe, tri, ctx) {
            Ok(t) => t,
            Err(Error::VertexPoint(_)) => continue,
            Err(e) => return Err(e),
        };
        if !confirm_repeat(&mut tracer, seq, tri)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Re-trace k further reflections from the certificate's start and check
/// that the word repeats. Used to re-verify scan results independently.
pub fn verify_certificate(cert: &PeriodCertificate, tri: &RightTriangle, ctx: &PrecisionContext) -> Result<bool> {
    let k = cert.period_reflections;
    let seg = trace_with_bound(&cert.start, 2 * k, None, tri, ctx)?;
    if seg.hits.len() != 2 * k || seg.is_singular() {
        return Ok(false);
    }
    let back = &seg.hits[k - 1];
    let Position::OnSide { side, s } = &cert.start.position else { return Ok(false) };
    if back.side != *side || !tri.labels_equivalent(&back.dir_out, &cert.start.dir) {
        return Ok(false);
    }
    let prec = tri.prec();
    if Float::with_val(prec, &back.s - s).abs() >= ctx.position_tolerance() {
        return Ok(false);
    }
    Ok((0..k).all(|i| {
        let (a, b) = (&seg.hits[i], &seg.hits[i + k]);
        a.side == b.side
            && tri.labels_equivalent(&a.dir_out, &b.dir_out)
            && Float::with_val(prec, &a.s - &b.s).abs() < ctx.position_tolerance()
    }))
}
