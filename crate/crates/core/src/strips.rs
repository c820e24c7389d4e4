use rayon::prelude::*;
use rug::Float;

use crate::direction::{reduce_angle, DirectionFrame, SymbolicDirection};
use crate::error::{Error, Result};
use crate::flow::{Advance, PhasePoint, Tracer};
use crate::precision::PrecisionContext;
use crate::surface::center_label;
use crate::triangle::{RightTriangle, SideId, Vertex};

pub const DEFAULT_BISECT_DEPTH: u32 = 96;
/// Uniform seeds per transversal component before bisection.
pub const DEFAULT_SEEDS: usize = 512;
/// Reflections after which an unabsorbed orbit is reported as a failure.
const ABSORPTION_STEP_LIMIT: usize = 1_000_000;

/// The two halves of the cross-section of K_N. Both live on the hypotenuse
/// and are parameterised by u = s / |AB| measured from A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    /// Crossings from level 0 into level 1.
    Up,
    /// Crossings from level N into level N − 1.
    Down,
}

impl Component {
    pub fn name(self) -> &'static str {
        match self {
            Component::Up => "up",
            Component::Down => "down",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transversal {
    pub component: Component,
    pub n_levels: u32,
    /// Label arriving at the hypotenuse.
    pub label_in: SymbolicDirection,
    /// Label leaving it, one level further inside K_N.
    pub label_out: SymbolicDirection,
    pub theta0: Float,
}

impl Transversal {
    pub fn new(component: Component, n_levels: u32, theta0: &Float, tri: &RightTriangle) -> Result<Self> {
        let (sigma, n) = match component {
            Component::Up => (1i8, 0i64),
            Component::Down => (-1i8, -(n_levels as i64)),
        };
        let mut frame = DirectionFrame::new(theta0, tri);
        let (nx, ny) = tri.hyp_normal();
        let prec = tri.prec();
        for m in 0u8..2 {
            let d = SymbolicDirection::new(sigma, n, m)?;
            let (dx, dy) = frame.vector(&d);
            let dot = Float::with_val(prec, &nx * &dx) + Float::with_val(prec, &ny * &dy);
            if dot > 0 {
                return Ok(Transversal {
                    component,
                    n_levels,
                    label_in: d,
                    label_out: d.reflect(SideId::Hyp),
                    theta0: theta0.clone(),
                });
            }
        }
        Err(Error::ParallelToHypotenuse { level: sigma as i64 * n })
    }

    pub fn start_level(&self) -> i64 {
        self.label_in.level()
    }

    pub fn phase_point(&self, u: &Float, tri: &RightTriangle) -> PhasePoint {
        let s = Float::with_val(tri.prec(), u * tri.side_length(SideId::Hyp));
        PhasePoint::on_side(SideId::Hyp, s, self.label_out, self.theta0.clone())
    }
}

/// Levels visited from a transversal point until absorption at 0 or N.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AbsorptionCode {
    Absorbed(Vec<i64>),
    Singular(Vertex),
}

pub fn absorption_code(tr: &Transversal, u: &Float, tri: &RightTriangle, ctx: &PrecisionContext) -> Result<AbsorptionCode> {
    let top = tr.n_levels as i64;
    let mut code = vec![tr.start_level(), tr.label_out.level()];
    let absorbed = |l: i64| l <= 0 || l >= top;
    if absorbed(tr.label_out.level()) {
        return Ok(AbsorptionCode::Absorbed(code));
    }
    let start = tr.phase_point(u, tri);
    let mut tracer = match Tracer::new(&start, tri, ctx) {
        Ok(t) => t,
        Err(Error::VertexPoint(v)) => return Ok(AbsorptionCode::Singular(v)),
        Err(e) => return Err(e),
    };
    let mut level = tr.label_out.level();
    let mut steps = 0usize;
    while steps < ABSORPTION_STEP_LIMIT {
        match tracer.advance() {
            Advance::Hits(hits) => steps += hits.len(),
            Advance::Singular(v, _) => return Ok(AbsorptionCode::Singular(v)),
        }
        let now = tracer.dir().level();
        if now != level {
            level = now;
            code.push(level);
            if absorbed(level) {
                return Ok(AbsorptionCode::Absorbed(code));
            }
        }
    }
    Err(Error::StructureViolation(format!(
        "orbit from u = {} on the {} transversal not absorbed within {ABSORPTION_STEP_LIMIT} reflections",
        u.to_f64(),
        tr.component.name()
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Strip {
    pub component: Component,
    pub u_lo: Float,
    pub u_hi: Float,
    pub code: Vec<i64>,
    pub start_level: i64,
    pub end_level: i64,
    pub contains_center: bool,
    pub exceptional: bool,
    pub symmetric: bool,
}

impl Strip {
    pub fn width(&self) -> Float {
        Float::with_val(self.u_lo.prec(), &self.u_hi - &self.u_lo)
    }

    pub fn contains(&self, component: Component, u: &Float) -> bool {
        self.component == component && *u > self.u_lo && *u < self.u_hi
    }

    pub fn midpoint(&self) -> Float {
        Float::with_val(self.u_lo.prec(), &self.u_lo + &self.u_hi) / 2u32
    }
}

/// Where the center orbit of level n meets the cross-section.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterCrossing {
    pub level: i64,
    pub component: Component,
    pub u: Float,
}

/// A bisection sample whose orbit ran into A or B: a generalized diagonal
/// sits next to it and the direction is not simple.
#[derive(Debug, Clone, PartialEq)]
pub struct NonsimpleWarning {
    pub component: Component,
    pub u: Float,
    pub vertex: Vertex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub n_levels: u32,
    pub strips: Vec<Strip>,
    pub centers: Vec<CenterCrossing>,
    pub warnings: Vec<NonsimpleWarning>,
    /// Levels whose center orbit is closed inside K_N and meets no strip.
    pub closed_centers: Vec<i64>,
}

impl Decomposition {
    pub fn exceptional_count(&self) -> usize {
        self.strips.iter().filter(|s| s.exceptional).count()
    }

    /// Center crossings strictly inside `strip`.
    pub fn centers_in(&self, strip: &Strip) -> usize {
        self.centers.iter().filter(|c| strip.contains(c.component, &c.u)).count()
    }
}

/// Fails if some level in −1..=N+1 carries the hypotenuse direction.
pub fn check_not_parallel(theta0: &Float, n_levels: u32, tri: &RightTriangle, ctx: &PrecisionContext) -> Result<()> {
    let prec = tri.prec();
    let tol = ctx.angle_tolerance();
    for level in -1..=(n_levels as i64 + 1) {
        for (sigma, n) in [(1i8, level), (-1i8, -level)] {
            let d = SymbolicDirection::new(sigma, n, 0)?;
            // Compare modulo π: the line direction −α and its reverse.
            let a = Float::with_val(prec, d.angle(theta0, tri) + tri.alpha()) * 2u32;
            let r = reduce_angle(a, tri);
            let two_pi = Float::with_val(prec, tri.pi() * 2u32);
            if r < tol || Float::with_val(prec, &two_pi - &r) < tol {
                return Err(Error::ParallelToHypotenuse { level });
            }
        }
    }
    Ok(())
}

enum CenterOutcome {
    Crossing(CenterCrossing),
    Singular(NonsimpleWarning),
    /// Came back to O without leaving the middle levels: a closed orbit.
    Closed(i64),
}

/// Center orbits of levels 1..N−1 followed from O until absorption; the
/// last hypotenuse crossing is where the strip through the center meets the
/// cross-section. Returns the crossings, warnings for center orbits that
/// die at A or B, and the levels whose center orbit closes up inside K_N.
pub fn center_crossings(
    theta0: &Float,
    n_levels: u32,
    tri: &RightTriangle,
    ctx: &PrecisionContext,
) -> Result<(Vec<CenterCrossing>, Vec<NonsimpleWarning>, Vec<i64>)> {
    let top = n_levels as i64;
    let hyp_len = tri.side_length(SideId::Hyp);
    let results: Vec<Result<CenterOutcome>> = (1..top)
        .into_par_iter()
        .map(|n| {
            let (label, along_leg) = center_label(n, theta0, tri, ctx)?;
            if let Some(vertex) = along_leg {
                let u = Float::new(tri.prec());
                return Ok(CenterOutcome::Singular(NonsimpleWarning { component: Component::Up, u, vertex }));
            }
            let start = PhasePoint::at_corner(tri.prec(), label, theta0.clone());
            let mut tracer = Tracer::new(&start, tri, ctx)?;
            let mut level = n;
            let mut steps = 0usize;
            while steps < ABSORPTION_STEP_LIMIT {
                let hits = match tracer.advance() {
                    Advance::Hits(h) => h,
                    Advance::Singular(vertex, h) => {
                        let u = Float::with_val(tri.prec(), &h.s / &hyp_len);
                        return Ok(CenterOutcome::Singular(NonsimpleWarning { component: Component::Up, u, vertex }));
                    }
                };
                if hits.len() == 2 {
                    // Back through O: the orbit retraces itself and is periodic.
                    return Ok(CenterOutcome::Closed(n));
                }
                steps += 1;
                let now = tracer.dir().level();
                if now != level {
                    level = now;
                    if level <= 0 || level >= top {
                        let component = if level <= 0 { Component::Up } else { Component::Down };
                        let u = Float::with_val(tri.prec(), &hits[0].s / &hyp_len);
                        return Ok(CenterOutcome::Crossing(CenterCrossing { level: n, component, u }));
                    }
                }
            }
            Ok(CenterOutcome::Closed(n))
        })
        .collect();
    let mut centers = Vec::new();
    let mut warnings = Vec::new();
    let mut closed = Vec::new();
    for r in results {
        match r? {
            CenterOutcome::Crossing(c) => centers.push(c),
            CenterOutcome::Singular(w) => warnings.push(w),
            CenterOutcome::Closed(n) => closed.push(n),
        }
    }
    Ok((centers, warnings, closed))
}

type Sample = (Float, AbsorptionCode);

fn refine(
    tr: &Transversal,
    left: &Sample,
    right: &Sample,
    width: &Float,
    tri: &RightTriangle,
    ctx: &PrecisionContext,
    out: &mut Vec<Sample>,
) -> Result<()> {
    if left.1 == right.1 {
        return Ok(());
    }
    let gap = Float::with_val(tri.prec(), &right.0 - &left.0);
    if gap <= *width {
        return Ok(());
    }
    let mid = Float::with_val(tri.prec(), &left.0 + &right.0) / 2u32;
    let code = absorption_code(tr, &mid, tri, ctx)?;
    let mid = (mid, code);
    refine(tr, left, &mid, width, tri, ctx, out)?;
    out.push(mid.clone());
    refine(tr, &mid, right, width, tri, ctx, out)
}

fn seeds(count: usize, extra: &[Float], lo: &Float, hi: &Float) -> Vec<Float> {
    let prec = lo.prec();
    let span = Float::with_val(prec, hi - lo);
    let mut u: Vec<Float> = (0..count)
        .map(|i| Float::with_val(prec, &span * (2 * i + 1) as u32) / (2 * count) as u32 + lo)
        .collect();
    u.extend(extra.iter().filter(|e| *e > lo && *e < hi).cloned());
    u.sort_by(|a, b| a.partial_cmp(b).expect("finite seeds"));
    u.dedup();
    u
}

fn decompose_component(
    tr: &Transversal,
    range: (&Float, &Float),
    extra_seeds: &[Float],
    n_seeds: usize,
    bisect_depth: u32,
    tri: &RightTriangle,
    ctx: &PrecisionContext,
) -> Result<(Vec<Strip>, Vec<NonsimpleWarning>)> {
    let prec = tri.prec();
    let width = Float::with_val(prec, 1) >> bisect_depth as i32;
    let seeds = seeds(n_seeds, extra_seeds, range.0, range.1);
    let coarse: Vec<Sample> = seeds
        .into_par_iter()
        .map(|u| absorption_code(tr, &u, tri, ctx).map(|c| (u, c)))
        .collect::<Result<_>>()?;
    let refined: Vec<Vec<Sample>> = coarse
        .par_windows(2)
        .map(|w| {
            let mut out = Vec::new();
            refine(tr, &w[0], &w[1], &width, tri, ctx, &mut out)?;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut samples = Vec::with_capacity(coarse.len());
    for (i, s) in coarse.iter().enumerate() {
        samples.push(s.clone());
        if let Some(r) = refined.get(i) {
            samples.extend(r.iter().cloned());
        }
    }
    let mut warnings = Vec::new();
    let mut runs: Vec<(Float, Float, Vec<i64>)> = Vec::new();
    for (u, code) in samples {
        match code {
            AbsorptionCode::Singular(vertex) => warnings.push(NonsimpleWarning { component: tr.component, u, vertex }),
            AbsorptionCode::Absorbed(code) => match runs.last_mut() {
                Some(last) if last.2 == code => last.1 = u,
                _ => runs.push((u.clone(), u, code)),
            },
        }
    }
    let mut strips = Vec::with_capacity(runs.len());
    for (i, (_, _, code)) in runs.iter().enumerate() {
        let lo = if i == 0 {
            range.0.clone()
        } else {
            Float::with_val(prec, &runs[i - 1].1 + &runs[i].0) / 2u32
        };
        let hi = if i + 1 == runs.len() {
            range.1.clone()
        } else {
            Float::with_val(prec, &runs[i].1 + &runs[i + 1].0) / 2u32
        };
        let start_level = code[0];
        let end_level = *code.last().expect("codes hold at least two levels");
        let symmetric = code.iter().eq(code.iter().rev());
        strips.push(Strip {
            component: tr.component,
            u_lo: lo,
            u_hi: hi,
            code: code.clone(),
            start_level,
            end_level,
            contains_center: false,
            exceptional: start_level != end_level,
            symmetric,
        });
    }
    Ok((strips, warnings))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecompositionOptions {
    pub bisect_depth: u32,
    pub seeds_per_component: usize,
}

impl Default for DecompositionOptions {
    fn default() -> Self {
        DecompositionOptions { bisect_depth: DEFAULT_BISECT_DEPTH, seeds_per_component: DEFAULT_SEEDS }
    }
}

/// Partition both cross-section components of K_N into maximal intervals
/// of constant absorption code.
///
/// Seeds are a uniform grid plus the center crossings, so a strip narrower
/// than the grid spacing is still found when it carries a center.
pub fn strip_decomposition(
    theta0: &Float,
    n_levels: u32,
    tri: &RightTriangle,
    ctx: &PrecisionContext,
    opts: DecompositionOptions,
) -> Result<Decomposition> {
    if n_levels == 0 {
        return Err(Error::domain("N must be at least 1"));
    }
    if opts.bisect_depth + 8 > tri.prec() {
        return Err(Error::domain(format!(
            "bisect depth {} needs more than {} bits of precision",
            opts.bisect_depth,
            tri.prec()
        )));
    }
    check_not_parallel(theta0, n_levels, tri, ctx)?;
    let (centers, mut warnings, closed_centers) = center_crossings(theta0, n_levels, tri, ctx)?;
    let mut strips = Vec::new();
    for component in [Component::Up, Component::Down] {
        let tr = Transversal::new(component, n_levels, theta0, tri)?;
        let extra: Vec<Float> = centers.iter().filter(|c| c.component == component).map(|c| c.u.clone()).collect();
        let (lo, hi) = (Float::new(tri.prec()), Float::with_val(tri.prec(), 1));
        let (s, w) = decompose_component(&tr, (&lo, &hi), &extra, opts.seeds_per_component, opts.bisect_depth, tri, ctx)?;
        strips.extend(s);
        warnings.extend(w);
    }
    let mut dec = Decomposition { n_levels, strips, centers, warnings, closed_centers };
    let flags: Vec<bool> = dec.strips.iter().map(|s| dec.centers_in(s) > 0).collect();
    for (s, f) in dec.strips.iter_mut().zip(flags) {
        s.contains_center = f;
    }
    Ok(dec)
}

/// The exceptional pair: the strip from level 0 to N and the one from N to 0.
pub fn exceptional_strips(strips: &[Strip], n_levels: u32) -> Result<(Strip, Strip)> {
    let top = n_levels as i64;
    let exceptional: Vec<&Strip> = strips.iter().filter(|s| s.exceptional).collect();
    if exceptional.len() != 2 {
        return Err(Error::StructureViolation(format!(
            "expected 2 exceptional strips, found {}",
            exceptional.len()
        )));
    }
    let up = exceptional.iter().find(|s| s.start_level == 0 && s.end_level == top);
    let down = exceptional.iter().find(|s| s.start_level == top && s.end_level == 0);
    match (up, down) {
        (Some(u), Some(d)) => Ok(((*u).clone(), (*d).clone())),
        _ => Err(Error::StructureViolation("exceptional strips do not join levels 0 and N".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EscapeDirection {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BracketStep {
    pub n: u32,
    pub u_lo: Float,
    pub u_hi: Float,
}

impl BracketStep {
    pub fn width(&self) -> Float {
        Float::with_val(self.u_lo.prec(), &self.u_hi - &self.u_lo)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EscapeBracket {
    pub direction: EscapeDirection,
    pub steps: Vec<BracketStep>,
    /// Midpoint of the last interval.
    pub estimate: Float,
}

impl EscapeBracket {
    /// Phase point on the cross-section at the escape estimate.
    pub fn estimate_point(&self, theta0: &Float, tri: &RightTriangle) -> Result<PhasePoint> {
        let n = self.steps.last().expect("bracket has at least one step").n;
        let component = match self.direction {
            EscapeDirection::Forward => Component::Up,
            EscapeDirection::Backward => Component::Down,
        };
        Ok(Transversal::new(component, n, theta0, tri)?.phase_point(&self.estimate, tri))
    }
}

/// Intervals of the exceptional strips for N = 1..=N_max, checked to nest.
///
/// Forward uses the 0 → N strips on the up component; backward uses the
/// N → 0 strips on the down component, whose incoming label depends on N,
/// so only the forward chain lives on a single axis.
pub fn escape_bracket(
    theta0: &Float,
    n_max: u32,
    direction: EscapeDirection,
    tri: &RightTriangle,
    ctx: &PrecisionContext,
    opts: DecompositionOptions,
) -> Result<EscapeBracket> {
    if n_max == 0 {
        return Err(Error::domain("N_max must be at least 1"));
    }
    let prec = tri.prec();
    let slack = Float::with_val(prec, 1) >> (opts.bisect_depth as i32 - 2);
    let mut steps: Vec<BracketStep> = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let dec = strip_decomposition(theta0, n, tri, ctx, opts)?;
        let (up, down) = exceptional_strips(&dec.strips, n)?;
        let strip = match direction {
            EscapeDirection::Forward => up,
            EscapeDirection::Backward => down,
        };
        let step = BracketStep { n, u_lo: strip.u_lo, u_hi: strip.u_hi };
        if direction == EscapeDirection::Forward {
            if let Some(prev) = steps.last() {
                let below = Float::with_val(prec, &prev.u_lo - &step.u_lo);
                let above = Float::with_val(prec, &step.u_hi - &prev.u_hi);
                let excess = if below > above { below } else { above };
                if excess > slack {
                    return Err(Error::NestingViolation { n, excess: excess.to_f64() });
                }
            }
        }
        steps.push(step);
    }
    let last = steps.last().expect("n_max ≥ 1");
    let estimate = Float::with_val(prec, &last.u_lo + &last.u_hi) / 2u32;
    Ok(EscapeBracket { direction, steps, estimate })
}

/// Forward escape chain computed by nesting alone: I_N is located inside
/// I_{N−1} on the up component, without decomposing the rest of K_N. Much
/// cheaper than [`escape_bracket`] for large N; centers are not tracked, so
/// a 0 → N strip narrower than the seed spacing inside I_{N−1} is reported
/// as a structure violation rather than silently skipped.
pub fn escape_chain_nested(
    theta0: &Float,
    n_max: u32,
    tri: &RightTriangle,
    ctx: &PrecisionContext,
    opts: DecompositionOptions,
) -> Result<EscapeBracket> {
    if n_max == 0 {
        return Err(Error::domain("N_max must be at least 1"));
    }
    check_not_parallel(theta0, n_max, tri, ctx)?;
    let prec = tri.prec();
    let mut steps = vec![BracketStep { n: 1, u_lo: Float::new(prec), u_hi: Float::with_val(prec, 1) }];
    for n in 2..=n_max {
        let prev = steps.last().expect("chain starts at N = 1");
        let tr = Transversal::new(Component::Up, n, theta0, tri)?;
        let range = (&prev.u_lo, &prev.u_hi);
        let (strips, _) = decompose_component(&tr, range, &[], opts.seeds_per_component, opts.bisect_depth, tri, ctx)?;
        let mut hits = strips.into_iter().filter(|s| s.start_level == 0 && s.end_level == n as i64);
        let strip = match (hits.next(), hits.next()) {
            (Some(s), None) => s,
            (None, _) => {
                return Err(Error::StructureViolation(format!("no 0 → {n} strip found inside the previous interval")))
            }
            (Some(_), Some(_)) => {
                return Err(Error::StructureViolation(format!("0 → {n} orbits split into several intervals")))
            }
        };
        steps.push(BracketStep { n, u_lo: strip.u_lo, u_hi: strip.u_hi });
    }
    let last = steps.last().expect("n_max ≥ 1");
    let estimate = Float::with_val(prec, &last.u_lo + &last.u_hi) / 2u32;
    Ok(EscapeBracket { direction: EscapeDirection::Forward, steps, estimate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triangle::make_triangle_f64;
    use rug::float::Constant;

    fn half_pi() -> Float {
        Float::with_val(256, Constant::Pi) / 2u32
    }

    fn quick() -> DecompositionOptions {
        DecompositionOptions { bisect_depth: 48, seeds_per_component: 128 }
    }

    #[test]
    fn one_level_gives_the_exceptional_pair() {
        let ctx = PrecisionContext::default();
        let tri = make_triangle_f64(0.7, &ctx).unwrap();
        let dec = strip_decomposition(&half_pi(), 1, &tri, &ctx, quick()).unwrap();
        assert_eq!(dec.strips.len(), 2);
        let (up, down) = exceptional_strips(&dec.strips, 1).unwrap();
        assert_eq!(up.code, vec![0, 1]);
        assert_eq!(down.code, vec![1, 0]);
        assert_eq!(up.u_lo, 0);
        assert_eq!(up.u_hi, 1);
    }

    #[test]
    fn four_levels_at_point_seven() {
        let ctx = PrecisionContext::default();
        let tri = make_triangle_f64(0.7, &ctx).unwrap();
        let dec = strip_decomposition(&half_pi(), 4, &tri, &ctx, quick()).unwrap();
        assert_eq!(dec.strips.len(), 5);
        assert_eq!(dec.exceptional_count(), 2);
        assert_eq!(dec.strips.iter().filter(|s| s.contains_center).count(), 3);
        for s in dec.strips.iter().filter(|s| !s.exceptional) {
            assert_eq!(s.start_level, s.end_level);
            assert_eq!(dec.centers_in(s), 1);
            assert!(s.symmetric);
        }
        assert!(dec.warnings.is_empty());
    }

    #[test]
    fn strips_tile_each_component() {
        let ctx = PrecisionContext::default();
        let tri = make_triangle_f64(0.3, &ctx).unwrap();
        let theta = Float::with_val(256, half_pi() - tri.alpha());
        let dec = strip_decomposition(&theta, 5, &tri, &ctx, quick()).unwrap();
        for c in [Component::Up, Component::Down] {
            let mut part: Vec<&Strip> = dec.strips.iter().filter(|s| s.component == c).collect();
            part.sort_by(|a, b| a.u_lo.partial_cmp(&b.u_lo).unwrap());
            assert_eq!(part[0].u_lo, 0);
            assert_eq!(part[part.len() - 1].u_hi, 1);
            for w in part.windows(2) {
                assert_eq!(w[0].u_hi, w[1].u_lo);
                assert!(w[0].u_lo < w[0].u_hi);
            }
        }
    }

    #[test]
    fn exceptional_pair_ignores_order() {
        let ctx = PrecisionContext::default();
        let tri = make_triangle_f64(0.7, &ctx).unwrap();
        let dec = strip_decomposition(&half_pi(), 3, &tri, &ctx, quick()).unwrap();
        let a = exceptional_strips(&dec.strips, 3).unwrap();
        let mut rev = dec.strips.clone();
        rev.reverse();
        assert_eq!(exceptional_strips(&rev, 3).unwrap(), a);
        assert!(matches!(exceptional_strips(&dec.strips[..1], 3), Err(Error::StructureViolation(_))));
    }

    #[test]
    fn hypotenuse_direction_is_rejected() {
        let ctx = PrecisionContext::default();
        let tri = make_triangle_f64(0.7, &ctx).unwrap();
        let theta = Float::with_val(256, -tri.alpha());
        assert!(matches!(
            strip_decomposition(&theta, 2, &tri, &ctx, quick()),
            Err(Error::ParallelToHypotenuse { .. })
        ));
    }

    #[test]
    fn single_step_bracket_is_trivially_nested() {
        let ctx = PrecisionContext::default();
        let tri = make_triangle_f64(0.7, &ctx).unwrap();
        let b = escape_bracket(&half_pi(), 1, EscapeDirection::Forward, &tri, &ctx, quick()).unwrap();
        assert_eq!(b.steps.len(), 1);
        assert_eq!(b.estimate, 0.5);
    }

    #[test]
    fn doubled_precision_reproduces_endpoints() {
        let coarse_ctx = PrecisionContext::default();
        let fine_ctx = PrecisionContext::with_bits(512).unwrap();
        let theta = |ctx: &PrecisionContext| Float::with_val(ctx.mantissa_bits(), Constant::Pi) / 2u32;
        let run = |ctx: &PrecisionContext, depth| {
            let tri = make_triangle_f64(0.7, ctx).unwrap();
            let opts = DecompositionOptions { bisect_depth: depth, seeds_per_component: 128 };
            strip_decomposition(&theta(ctx), 4, &tri, ctx, opts).unwrap()
        };
        let a = run(&coarse_ctx, 48);
        let b = run(&fine_ctx, 96);
        assert_eq!(a.strips.len(), b.strips.len());
        let tol = Float::with_val(512, 1) >> 46;
        for (x, y) in a.strips.iter().zip(&b.strips) {
            assert_eq!(x.code, y.code);
            assert!(Float::with_val(512, &x.u_lo - &y.u_lo).abs() < tol);
            assert!(Float::with_val(512, &x.u_hi - &y.u_hi).abs() < tol);
        }
    }
}
