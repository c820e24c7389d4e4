//! Static SVG plots. Coordinates are printed with a fixed number of decimals
//! so the same artifact always gives the same bytes.

use std::fmt::Write;

use billiards_core::flow::OrbitSegment;
use billiards_core::strips::{Component, Decomposition, EscapeBracket};
use billiards_core::torus::{brute_force_gd, default_step_bound, is_generalized_diagonal, TorusQuery};
use billiards_core::triangle::{RightTriangle, Vertex};
use rug::Float;

const SIZE: f64 = 1000.0;
const MARGIN: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stroke {
    /// Periodic orbits.
    Solid,
    /// Generalized diagonals and orbits that die in a corner.
    Dashed,
}

impl Stroke {
    fn attr(self) -> &'static str {
        match self {
            Stroke::Solid => "",
            Stroke::Dashed => " stroke-dasharray=\"8 6\"",
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("nothing to draw: {0}")]
pub struct EmptyArtifact(pub &'static str);

fn document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.3} {:.3} {:.3} {:.3}\">\n{body}</svg>\n",
        -MARGIN,
        -MARGIN,
        width + 2.0 * MARGIN,
        height + 2.0 * MARGIN
    )
}

struct Frame {
    height: f64,
}

impl Frame {
    fn new(tri: &RightTriangle) -> Self {
        Frame { height: tri.tan_alpha().to_f64() * SIZE }
    }

    fn map(&self, x: &Float, y: &Float) -> (f64, f64) {
        (x.to_f64() * SIZE, self.height - y.to_f64() * SIZE)
    }

    fn outline(&self) -> String {
        format!(
            "<polygon points=\"0.000,{h:.3} {s:.3},{h:.3} 0.000,0.000\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n",
            h = self.height,
            s = SIZE
        )
    }
}

fn points(pts: &[(f64, f64)]) -> String {
    pts.iter().map(|(x, y)| format!("{x:.3},{y:.3}")).collect::<Vec<_>>().join(" ")
}

/// Triangle outline and the orbit as one polyline through the start and every hit.
pub fn render_orbit(tri: &RightTriangle, seg: &OrbitSegment, stroke: Stroke) -> Result<String, EmptyArtifact> {
    if seg.hits.is_empty() {
        return Err(EmptyArtifact("orbit has no hits"));
    }
    let frame = Frame::new(tri);
    let mut pts = Vec::with_capacity(seg.hits.len() + 1);
    let (x0, y0) = seg.start.point(tri);
    pts.push(frame.map(&x0, &y0));
    for h in &seg.hits {
        let (x, y) = tri.point_on(h.side, &h.s);
        pts.push(frame.map(&x, &y));
    }
    let mut body = frame.outline();
    writeln!(
        body,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\"{}/>",
        points(&pts),
        stroke.attr()
    )
    .unwrap();
    Ok(document(SIZE, frame.height, &body))
}

/// Strips as coloured bands along the hypotenuse, the up component on the
/// inside and the down component just outside. Exceptional strips are red.
pub fn render_strips(tri: &RightTriangle, dec: &Decomposition) -> Result<String, EmptyArtifact> {
    if dec.strips.is_empty() {
        return Err(EmptyArtifact("no strips"));
    }
    let frame = Frame::new(tri);
    let (ax, ay) = tri.vertex(Vertex::A);
    let (bx, by) = tri.vertex(Vertex::B);
    let (a, b) = (frame.map(&ax, &ay), frame.map(&bx, &by));
    let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    // Unit normal pointing into the triangle in screen coordinates.
    let (nx, ny) = (-(b.1 - a.1) / len, (b.0 - a.0) / len);
    let (nx, ny) = if nx < 0.0 { (nx, ny) } else { (-nx, -ny) };
    let palette = ["#4c78a8", "#72b7b2", "#54a24b", "#eeca3b", "#b279a2", "#9d755d"];
    let mut body = frame.outline();
    for (i, s) in dec.strips.iter().enumerate() {
        let off = match s.component {
            Component::Up => 6.0,
            Component::Down => -6.0,
        };
        let at = |u: &Float| {
            let u = u.to_f64();
            (a.0 + u * (b.0 - a.0) + off * nx, a.1 + u * (b.1 - a.1) + off * ny)
        };
        let (p, q) = (at(&s.u_lo), at(&s.u_hi));
        let colour = if s.exceptional { "#e45756" } else { palette[i % palette.len()] };
        writeln!(
            body,
            "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"{colour}\" stroke-width=\"8\"/>",
            p.0, p.1, q.0, q.1
        )
        .unwrap();
    }
    Ok(document(SIZE, frame.height, &body))
}

/// Bracket chain as a ladder: row N shows I_N rescaled to the first interval.
pub fn render_bracket(bracket: &EscapeBracket) -> Result<String, EmptyArtifact> {
    let first = bracket.steps.first().ok_or(EmptyArtifact("empty bracket chain"))?;
    let lo = first.u_lo.to_f64();
    let span = (first.u_hi.to_f64() - lo).max(f64::MIN_POSITIVE);
    let row = 24.0;
    let height = row * bracket.steps.len() as f64;
    let mut body = String::new();
    for (i, s) in bracket.steps.iter().enumerate() {
        let x1 = (s.u_lo.to_f64() - lo) / span * SIZE;
        let x2 = (s.u_hi.to_f64() - lo) / span * SIZE;
        let y = row * i as f64 + row / 2.0;
        writeln!(
            body,
            "<line x1=\"{x1:.3}\" y1=\"{y:.3}\" x2=\"{x2:.3}\" y2=\"{y:.3}\" stroke=\"#4c78a8\" stroke-width=\"10\"/>"
        )
        .unwrap();
        writeln!(body, "<text x=\"{:.3}\" y=\"{:.3}\" font-size=\"12\">N={}</text>", -MARGIN + 2.0, y + 4.0, s.n).unwrap();
    }
    Ok(document(SIZE, height, &body))
}

/// The line from (p₁/q, p₂/q) in direction (a, b) folded into the unit
/// square, dashed when it is a generalized diagonal.
pub fn render_torus_line(qr: &TorusQuery) -> String {
    let diagonal = is_generalized_diagonal(qr);
    debug_assert_eq!(diagonal, brute_force_gd(qr, default_step_bound(qr)));
    let stroke = if diagonal { Stroke::Dashed } else { Stroke::Solid };
    let q = qr.q as f64;
    let (a, b) = (qr.a as f64, qr.b as f64);
    let (mut x, mut y) = (qr.p1 as f64 / q, qr.p2 as f64 / q);
    let mut body = format!(
        "<rect x=\"0.000\" y=\"0.000\" width=\"{SIZE:.3}\" height=\"{SIZE:.3}\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n"
    );
    // Follow the segment from wall to wall until it returns to the start.
    let segments = 2 * (qr.a.unsigned_abs() + qr.b.unsigned_abs()).max(1) as usize * qr.q as usize;
    let (x0, y0) = (x, y);
    for _ in 0..segments {
        let tx = if a > 0.0 { (1.0 - x) / a } else if a < 0.0 { -x / a } else { f64::INFINITY };
        let ty = if b > 0.0 { (1.0 - y) / b } else if b < 0.0 { -y / b } else { f64::INFINITY };
        let t = tx.min(ty);
        let (x1, y1) = (x + t * a, y + t * b);
        writeln!(
            body,
            "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"steelblue\" stroke-width=\"1.5\"{}/>",
            x * SIZE,
            SIZE - y * SIZE,
            x1 * SIZE,
            SIZE - y1 * SIZE,
            stroke.attr()
        )
        .unwrap();
        x = if (tx - t).abs() < 1e-12 { if a > 0.0 { 0.0 } else { 1.0 } } else { x1 };
        y = if (ty - t).abs() < 1e-12 { if b > 0.0 { 0.0 } else { 1.0 } } else { y1 };
        if (x - x0).abs() < 1e-9 && (y - y0).abs() < 1e-9 {
            break;
        }
        // A diagonal stops at the corner it reaches.
        let at_corner = |v: f64| v.abs() < 1e-9 || (v - 1.0).abs() < 1e-9;
        if at_corner(x1) && at_corner(y1) {
            break;
        }
    }
    document(SIZE, SIZE, &body)
}
