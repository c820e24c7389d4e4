use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::{Float, Rational};

use crate::direction::{reduce_angle, DirectionFrame, SymbolicDirection};
use crate::error::{Error, Result};
use crate::flow::{detect_period, verify_certificate, Advance, NotFoundReason, PeriodOutcome, PhasePoint, Tracer};
use crate::precision::PrecisionContext;
use crate::surface::{enumerate_directions, max_angular_gap};
use crate::triangle::{IrrationalityHint, RightTriangle, SideId, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedFormVerdict {
    Good,
    NotGood,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClosedForm {
    pub verdict: ClosedFormVerdict,
    /// Index n of the interval containing α when the verdict is Good.
    pub n_witness: Option<u64>,
}

/// Interval test for end-point-good perpendiculars, with x = π/(2α):
/// the leg is good for x ∈ (2n, 2n + 1), n ≥ 1, and the hypotenuse for
/// x ∈ (2n − 1, 2n), n ≥ 2. Integer x means α = π/(2k), an endpoint.
pub fn endpoint_good_closed_form(side: SideId, tri: &RightTriangle, ctx: &PrecisionContext) -> Result<ClosedForm> {
    if side == SideId::LegV {
        return Err(Error::Unsupported("closed form covers the longer leg and the hypotenuse only".into()));
    }
    let prec = tri.prec();
    let x = Float::with_val(prec, tri.pi() / tri.alpha()) / 2u32;
    let k = x.clone().round().to_integer().expect("finite ratio");
    let endpoint = Float::with_val(prec, tri.pi() / &k) / 2u32;
    if Float::with_val(prec, &endpoint - tri.alpha()).abs() < ctx.angle_tolerance() {
        return Ok(ClosedForm { verdict: ClosedFormVerdict::Boundary, n_witness: None });
    }
    let floor = x.floor().to_integer().expect("finite ratio").to_u64().expect("x ≥ 2");
    let (good, n) = match side {
        SideId::LegH => (floor % 2 == 0, floor / 2),
        _ => (floor % 2 == 1 && floor >= 3, (floor + 1) / 2),
    };
    Ok(if good {
        ClosedForm { verdict: ClosedFormVerdict::Good, n_witness: Some(n) }
    } else {
        ClosedForm { verdict: ClosedFormVerdict::NotGood, n_witness: None }
    })
}

/// The two interval families as exact rational multiples of π:
/// leg (1/(4n+2), 1/(4n)) for n ≥ 1, hypotenuse (1/(4n), 1/(4n−2)) for n ≥ 2.
pub fn good_intervals(max_n: u64) -> Vec<(SideId, u64, Rational, Rational)> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        out.push((SideId::LegH, n, Rational::from((1, 4 * n + 2)), Rational::from((1, 4 * n))));
        if n >= 2 {
            out.push((SideId::Hyp, n, Rational::from((1, 4 * n)), Rational::from((1, 4 * n - 2))));
        }
    }
    out
}

/// Checks with exact rationals that the intervals up to `max_n` are disjoint
/// and that together with the points 1/(2k) they fill (1/(4·max_n+2), 1/4].
pub fn verify_interval_cover(max_n: u64) -> Result<()> {
    let mut iv = good_intervals(max_n);
    iv.sort_by(|a, b| a.2.cmp(&b.2));
    let floor = Rational::from((1, 4 * max_n + 2));
    if iv[0].2 != floor {
        return Err(Error::StructureViolation("lowest interval does not start at 1/(4n+2)".into()));
    }
    for w in iv.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        if lo.3 > hi.2 {
            return Err(Error::StructureViolation(format!("intervals {lo:?} and {hi:?} overlap")));
        }
        if lo.3 != hi.2 {
            return Err(Error::StructureViolation(format!("gap between {lo:?} and {hi:?}")));
        }
        // The shared endpoint must be of the form 1/(2k).
        let shared = &lo.3;
        let two_k = Rational::from(shared.recip_ref());
        if *two_k.denom() != 1 || two_k.numer().is_odd() {
            return Err(Error::StructureViolation(format!("shared endpoint {shared} is not 1/(2k)")));
        }
    }
    if iv.last().expect("nonempty").3 != Rational::from((1, 4)) {
        return Err(Error::StructureViolation("top interval does not end at 1/4".into()));
    }
    Ok(())
}

/// Direction perpendicular to `side`, pointing into the triangle.
pub fn perpendicular_angle(side: SideId, tri: &RightTriangle) -> Float {
    let prec = tri.prec();
    let half_pi = Float::with_val(prec, tri.pi() / 2u32);
    match side {
        SideId::LegH => half_pi,
        SideId::LegV => Float::new(prec),
        SideId::Hyp => Float::with_val(prec, &half_pi - tri.alpha()) + tri.pi(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulatedVerdict {
    Good,
    NotGood,
    Singular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPerp {
    pub verdict: SimulatedVerdict,
    /// Reflections up to the perpendicular return, if any.
    pub return_hits: Option<usize>,
    /// True when the return happens on the first pass back through the fan
    /// of triangles around the endpoint: the level distance to the
    /// perpendicular's own levels never grows on the way.
    pub direct: bool,
}

/// Label of the perpendicular orbit at `vertex` once folded into the
/// triangle: the perpendicular is reflected alternately in the other side
/// and in `side` until it points into the corner's wedge.
fn folded_label(side: SideId, vertex: Vertex, tri: &RightTriangle, frame: &mut DirectionFrame) -> Result<SymbolicDirection> {
    let sides = RightTriangle::sides_at(vertex);
    if !sides.contains(&side) {
        return Err(Error::domain(format!("{side} does not end at {}", vertex.name())));
    }
    let other = if sides[0] == side { sides[1] } else { sides[0] };
    let (start, width) = tri.vertex_wedge(vertex);
    let prec = tri.prec();
    let mut d = SymbolicDirection::base();
    for i in 0..4096 {
        let (dx, dy) = frame.vector(&d);
        let a = reduce_angle(Float::with_val(prec, dy.atan2(&dx)) - &start, tri);
        if a > 0 && a < width {
            return Ok(d);
        }
        d = d.reflect(if i % 2 == 0 { other } else { side });
    }
    Err(Error::Unsupported("perpendicular did not fold into the corner".into()))
}

fn simulate_once(
    side: SideId,
    vertex: Vertex,
    offset: f64,
    tri: &RightTriangle,
    ctx: &PrecisionContext,
    max_steps: usize,
) -> Result<SimulatedPerp> {
    let prec = tri.prec();
    let theta0 = perpendicular_angle(side, tri);
    let mut frame = DirectionFrame::new(&theta0, tri);
    let label = folded_label(side, vertex, tri, &mut frame)?;
    let len = tri.side_length(side);
    let shift = Float::with_val(prec, &len * offset);
    let s = if vertex == side.origin() { shift } else { Float::with_val(prec, &len - shift) };
    let start = PhasePoint::on_side(side, s, label, theta0.clone());
    let mut tracer = Tracer::new(&start, tri, ctx)?;
    let tol = ctx.incidence_tolerance();
    let half_turn = tri.pi();
    let target = perpendicular_levels(side);
    let mut distance = level_distance(label.level(), target);
    let mut direct = true;
    let mut hits = 0usize;
    while hits < max_steps {
        let incoming = tracer.dir();
        let batch = match tracer.advance() {
            Advance::Hits(b) => b,
            Advance::Singular(..) => {
                return Ok(SimulatedPerp { verdict: SimulatedVerdict::Singular, return_hits: None, direct: false })
            }
        };
        let mut d_in = incoming;
        for h in batch {
            hits += 1;
            let dist = level_distance(d_in.level(), target);
            if dist > distance {
                direct = false;
            }
            distance = dist;
            if h.side == side && !h.s.is_zero() && h.s < len {
                // Perpendicular when the incoming angle is θ₀ mod π.
                let a = Float::with_val(prec, d_in.angle(&theta0, tri) - &theta0);
                let r = reduce_angle(a * 2u32, tri);
                let two_pi = Float::with_val(prec, half_turn * 2u32);
                if r < tol || Float::with_val(prec, &two_pi - &r) < tol {
                    return Ok(SimulatedPerp { verdict: SimulatedVerdict::Good, return_hits: Some(hits), direct });
                }
            }
            d_in = h.dir_out;
        }
    }
    Ok(SimulatedPerp { verdict: SimulatedVerdict::NotGood, return_hits: None, direct: false })
}

/// Levels whose labels are perpendicular to `side` for θ₀ its perpendicular.
fn perpendicular_levels(side: SideId) -> (i64, i64) {
    match side {
        SideId::Hyp => (0, 1),
        _ => (0, 0),
    }
}

fn level_distance(level: i64, target: (i64, i64)) -> i64 {
    if level < target.0 {
        target.0 - level
    } else if level > target.1 {
        level - target.1
    } else {
        0
    }
}

/// Relative offset, in units of `corner_epsilon`, of the launch point from the endpoint.
pub const ENDPOINT_OFFSET_FACTOR: f64 = 8.0;

/// Trace the perpendicular orbit of an endpoint of `side`. Good when the
/// orbit later meets `side` perpendicularly at an interior point within
/// `max_steps` reflections. The launch sits 8·corner_epsilon inside the
/// side; a different verdict at half that offset is reported as Singular.
pub fn endpoint_good_simulated(
    side: SideId,
    endpoint: Vertex,
    tri: &RightTriangle,
    ctx: &PrecisionContext,
    max_steps: usize,
) -> Result<SimulatedPerp> {
    let offset = ENDPOINT_OFFSET_FACTOR * ctx.corner_epsilon().max(f64::MIN_POSITIVE);
    let first = simulate_once(side, endpoint, offset, tri, ctx, max_steps)?;
    let second = simulate_once(side, endpoint, offset / 2.0, tri, ctx, max_steps)?;
    if first.verdict != second.verdict {
        return Ok(SimulatedPerp { verdict: SimulatedVerdict::Singular, return_hits: None, direct: false });
    }
    Ok(first)
}

/// Endpoints whose perpendicular orbits the interval test describes: the
/// α-corner A for the leg, both ends for the hypotenuse.
pub fn tested_endpoints(side: SideId) -> Result<&'static [Vertex]> {
    match side {
        SideId::LegH => Ok(&[Vertex::A]),
        SideId::Hyp => Ok(&[Vertex::A, Vertex::B]),
        SideId::LegV => Err(Error::Unsupported("no tested endpoint for the shorter leg".into())),
    }
}

/// Simulated verdict for a side: Good when every tested endpoint is good,
/// Singular when any of them is.
pub fn side_good_simulated(side: SideId, tri: &RightTriangle, ctx: &PrecisionContext, max_steps: usize) -> Result<SimulatedPerp> {
    let mut runs = Vec::new();
    for &v in tested_endpoints(side)? {
        runs.push(endpoint_good_simulated(side, v, tri, ctx, max_steps)?);
    }
    let verdict = if runs.iter().any(|r| r.verdict == SimulatedVerdict::Singular) {
        SimulatedVerdict::Singular
    } else if runs.iter().all(|r| r.verdict == SimulatedVerdict::Good) {
        SimulatedVerdict::Good
    } else {
        SimulatedVerdict::NotGood
    };
    Ok(SimulatedPerp {
        verdict,
        return_hits: runs.iter().filter_map(|r| r.return_hits).max(),
        direct: runs.iter().all(|r| r.direct),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerpVerdict {
    pub side: SideId,
    pub closed_form: ClosedFormVerdict,
    pub simulated: SimulatedVerdict,
    pub n_witness: Option<u64>,
    pub direct: bool,
}

pub fn perp_verdict(side: SideId, tri: &RightTriangle, ctx: &PrecisionContext, max_steps: usize) -> Result<PerpVerdict> {
    let cf = endpoint_good_closed_form(side, tri, ctx)?;
    let sim = side_good_simulated(side, tri, ctx, max_steps)?;
    Ok(PerpVerdict {
        side,
        closed_form: cf.verdict,
        simulated: sim.verdict,
        n_witness: cf.n_witness,
        direct: sim.direct,
    })
}

/// Side with an end-point-good perpendicular and that perpendicular's angle.
pub fn choose_good_direction(tri: &RightTriangle, ctx: &PrecisionContext) -> Result<(SideId, Float)> {
    if let IrrationalityHint::RationalMultipleDetected { p, q } = tri.hint() {
        return Err(Error::domain(format!("alpha = {p}π/{q} is a rational multiple of π")));
    }
    for side in [SideId::LegH, SideId::Hyp] {
        let cf = endpoint_good_closed_form(side, tri, ctx)?;
        match cf.verdict {
            ClosedFormVerdict::Good => {
                let prec = tri.prec();
                let theta = match side {
                    SideId::LegH => Float::with_val(prec, tri.pi() / 2u32),
                    _ => Float::with_val(prec, tri.pi() / 2u32) - tri.alpha(),
                };
                return Ok((side, theta));
            }
            ClosedFormVerdict::Boundary => {
                return Err(Error::domain("alpha is π/(2k); perturb it to get a good perpendicular"));
            }
            ClosedFormVerdict::NotGood => {}
        }
    }
    Err(Error::StructureViolation("neither the leg nor the hypotenuse is end point good".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleClass {
    Periodic { period: usize },
    /// Died at A or B.
    Singular,
    /// Returned but a ±δ neighbour disagreed: the sample is next to a separatrix.
    NearSingular,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub side: SideId,
    pub s: Float,
    pub label: SymbolicDirection,
    pub class: SampleClass,
    /// Re-verification of the certificate, for periodic samples.
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScanReport {
    pub samples: usize,
    pub periodic: usize,
    /// Singular and near-singular samples.
    pub singular: usize,
    pub unresolved: usize,
    pub max_period_seen: usize,
    pub records: Vec<SampleRecord>,
}

impl ScanReport {
    fn from_records(records: Vec<SampleRecord>) -> Self {
        let mut r = ScanReport { samples: records.len(), ..Default::default() };
        for rec in &records {
            match rec.class {
                SampleClass::Periodic { period } => {
                    r.periodic += 1;
                    r.max_period_seen = r.max_period_seen.max(period);
                }
                SampleClass::Singular | SampleClass::NearSingular => r.singular += 1,
                SampleClass::Unresolved => r.unresolved += 1,
            }
        }
        r.records = records;
        r
    }

    pub fn all_verified(&self) -> bool {
        self.records.iter().all(|r| !matches!(r.class, SampleClass::Periodic { .. }) || r.verified)
    }
}

fn classify(start: &PhasePoint, max_steps: usize, tri: &RightTriangle, ctx: &PrecisionContext) -> Result<(SampleClass, bool)> {
    Ok(match detect_period(start, max_steps, tri, ctx)? {
        PeriodOutcome::Periodic(cert) => {
            let ok = verify_certificate(&cert, tri, ctx)?;
            (SampleClass::Periodic { period: cert.period_reflections }, ok)
        }
        PeriodOutcome::NotFound(NotFoundReason::Singular) => (SampleClass::Singular, false),
        PeriodOutcome::NotFound(NotFoundReason::StripCheckFailed) => (SampleClass::NearSingular, false),
        PeriodOutcome::NotFound(NotFoundReason::MaxSteps) => (SampleClass::Unresolved, false),
    })
}

/// Base-class label (σ = +1, n = 0) pointing into the triangle from `side`,
/// or None when θ runs parallel to the side.
pub fn inward_label(side: SideId, theta: &Float, tri: &RightTriangle) -> Option<SymbolicDirection> {
    let mut frame = DirectionFrame::new(theta, tri);
    let prec = tri.prec();
    (0u8..2).map(|m| SymbolicDirection::new(1, 0, m).expect("valid label")).find(|d| {
        let (dx, dy) = frame.vector(d);
        let inward = match side {
            SideId::LegH => dy,
            SideId::LegV => dx,
            SideId::Hyp => -(Float::with_val(prec, tri.sin_alpha() * &dx) + Float::with_val(prec, tri.cos_alpha() * &dy)),
        };
        inward > Float::with_val(prec, 1) >> (prec as i32 / 2)
    })
}

/// Sample points uniformly by arc length on the sides crossed by θ, skip
/// corner neighbourhoods of A and B, and look for a period at each.
/// Deterministic for a given seed regardless of thread count.
pub fn foliation_scan(
    theta: &Float,
    samples: usize,
    max_steps: usize,
    tri: &RightTriangle,
    ctx: &PrecisionContext,
    seed: u64,
) -> Result<ScanReport> {
    let prec = tri.prec();
    let sides: Vec<(SideId, SymbolicDirection, f64)> = SideId::ALL
        .iter()
        .filter_map(|&s| inward_label(s, theta, tri).map(|d| (s, d, tri.side_length(s).to_f64())))
        .collect();
    let total: f64 = sides.iter().map(|s| s.2).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = ctx.corner_epsilon();
    let mut starts = Vec::with_capacity(samples);
    while starts.len() < samples {
        let mut pick = rng.gen::<f64>() * total;
        let mut chosen = sides[sides.len() - 1];
        for s in &sides {
            if pick < s.2 {
                chosen = *s;
                break;
            }
            pick -= s.2;
        }
        let frac: f64 = rng.gen();
        if frac <= eps || frac >= 1.0 - eps {
            continue;
        }
        let s = Float::with_val(prec, tri.side_length(chosen.0) * frac);
        starts.push((chosen.0, s, chosen.1));
    }
    let records: Vec<SampleRecord> = starts
        .into_par_iter()
        .map(|(side, s, label)| {
            let start = PhasePoint::on_side(side, s.clone(), label, theta.clone());
            let (class, verified) = classify(&start, max_steps, tri, ctx)?;
            Ok(SampleRecord { side, s, label, class, verified })
        })
        .collect::<Result<_>>()?;
    Ok(ScanReport::from_records(records))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionRecord {
    pub label: SymbolicDirection,
    pub angle: Float,
    pub class: SampleClass,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionScan {
    pub base: Float,
    pub report: ScanReport,
    pub directions: Vec<DirectionRecord>,
    /// Largest cyclic gap between periodic directions.
    pub max_gap_periodic: Float,
    /// Largest cyclic gap of the whole enumerated set.
    pub max_gap_all: Float,
}

/// Try every direction of the fibre over p (|n| ≤ K, built on the good
/// perpendicular) for a periodic orbit through p.
pub fn periodic_direction_scan(
    p: (&Float, &Float),
    k: u32,
    max_steps: usize,
    tri: &RightTriangle,
    ctx: &PrecisionContext,
) -> Result<DirectionScan> {
    let prec = tri.prec();
    for v in [Vertex::O, Vertex::A, Vertex::B] {
        let (vx, vy) = tri.vertex(v);
        let dx = Float::with_val(prec, p.0 - &vx);
        let dy = Float::with_val(prec, p.1 - &vy);
        if dx.hypot(&dy) <= ctx.corner_epsilon() {
            return Err(Error::VertexPoint(v));
        }
    }
    let (_, base) = choose_good_direction(tri, ctx)?;
    let dirs = enumerate_directions(k, &base, tri, ctx);
    let records: Vec<DirectionRecord> = dirs
        .par_iter()
        .map(|d| {
            let start = PhasePoint::interior(p.0.clone(), p.1.clone(), d.label, base.clone());
            let (class, verified) = classify(&start, max_steps, tri, ctx)?;
            Ok(DirectionRecord { label: d.label, angle: d.angle.clone(), class, verified })
        })
        .collect::<Result<_>>()?;
    let all: Vec<Float> = records.iter().map(|r| r.angle.clone()).collect();
    let periodic: Vec<Float> = records
        .iter()
        .filter(|r| matches!(r.class, SampleClass::Periodic { .. }))
        .map(|r| r.angle.clone())
        .collect();
    let sample_records = records
        .iter()
        .map(|r| SampleRecord { side: SideId::LegH, s: Float::new(prec), label: r.label, class: r.class, verified: r.verified })
        .collect();
    Ok(DirectionScan {
        base,
        report: ScanReport::from_records(sample_records),
        max_gap_periodic: max_angular_gap(&periodic, tri),
        max_gap_all: max_angular_gap(&all, tri),
        directions: records,
    })
}

/// Number of k ≥ 2 with π/(2k) inside [lo, hi]; used to skip endpoints when sampling.
pub fn endpoints_between(lo: f64, hi: f64) -> u64 {
    let kmin = (std::f64::consts::PI / (2.0 * hi)).ceil() as u64;
    let kmax = (std::f64::consts::PI / (2.0 * lo)).floor() as u64;
    kmax.saturating_sub(kmin.max(2)) + u64::from(kmax >= kmin.max(2))
}
