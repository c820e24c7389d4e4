//! Generalized diagonals on the square torus.
//!
//! A point (p₁/q, p₂/q) and a direction vector (a, b) define the line
//! (p₁, p₂) + t(a, b) in the plane tiled by squares of side q, where lattice
//! vertices are the points with both coordinates divisible by q.

use rayon::prelude::*;
use rug::Float;

use crate::error::{Error, Result};

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorusQuery {
    pub p1: i64,
    pub p2: i64,
    pub q: i64,
    pub a: i64,
    pub b: i64,
}

impl TorusQuery {
    pub fn new(p1: i64, p2: i64, q: i64, a: i64, b: i64) -> Result<Self> {
        if q <= 0 {
            return Err(Error::domain(format!("q must be positive, got {q}")));
        }
        if !(0..=q).contains(&p1) || !(0..=q).contains(&p2) {
            return Err(Error::domain(format!("({p1}, {p2}) is outside 0..={q}")));
        }
        if gcd(gcd(p1, p2), q) != 1 {
            return Err(Error::domain(format!("gcd({p1}, {p2}, {q}) ≠ 1")));
        }
        if gcd(a, b) != 1 {
            return Err(Error::domain(format!("slope {a}/{b} is not in lowest terms")));
        }
        Ok(TorusQuery { p1, p2, q, a, b })
    }
}

/// Smallest i ≥ 0 with q | p₁ + ia and q | p₂ + ib, if any.
pub fn diagonal_witness(qr: &TorusQuery) -> Option<i64> {
    let q = qr.q;
    let (a, b) = (qr.a.rem_euclid(q), qr.b.rem_euclid(q));
    (0..q * q).find(|i| (qr.p1 + i * a) % q == 0 && (qr.p2 + i * b) % q == 0)
}

pub fn is_generalized_diagonal(qr: &TorusQuery) -> bool {
    diagonal_witness(qr).is_some()
}

/// Independent check: march along the line crossing by crossing until it
/// meets a vertex or its residue state on the q-torus repeats.
///
/// Time is counted in units of 1/(|a||b|) (a zero component counts as 1),
/// so both coordinates, scaled by that factor, advance by integers.
pub fn brute_force_gd(qr: &TorusQuery, step_bound: u64) -> bool {
    let (ua, ub) = (qr.a.abs().max(1), qr.b.abs().max(1));
    let scale = ua * ub;
    let modulus = qr.q * scale;
    let x0 = (qr.p1 * scale).rem_euclid(modulus);
    let y0 = (qr.p2 * scale).rem_euclid(modulus);
    let (mut x, mut y) = (x0, y0);
    if x == 0 && y == 0 {
        return true;
    }
    // Units of time between consecutive crossings of vertical / horizontal grid lines.
    let next_cross = |pos: i64, vel: i64| -> Option<i64> {
        if vel == 0 {
            return None;
        }
        let r = if vel > 0 { (scale - pos.rem_euclid(scale)) % scale } else { pos.rem_euclid(scale) };
        let r = if r == 0 { scale } else { r };
        Some(r / vel.abs())
    };
    for _ in 0..step_bound {
        let dt = match (next_cross(x, qr.a), next_cross(y, qr.b)) {
            (Some(u), Some(v)) => u.min(v),
            (Some(u), None) => u,
            (None, Some(v)) => v,
            (None, None) => return false,
        };
        x = (x + dt * qr.a).rem_euclid(modulus);
        y = (y + dt * qr.b).rem_euclid(modulus);
        if x == 0 && y == 0 {
            return true;
        }
        if x == x0 && y == y0 {
            return false;
        }
    }
    false
}

/// Minimum step bound that guarantees a full residue period is walked.
pub fn default_step_bound(qr: &TorusQuery) -> u64 {
    (qr.q * qr.q * (qr.a.abs() + qr.b.abs())).max(1) as u64
}

/// Normalise a direction vector to represent its line: b > 0, or b = 0 and a > 0.
fn normalise(a: i64, b: i64) -> (i64, i64) {
    if b < 0 || (b == 0 && a < 0) {
        (-a, -b)
    } else {
        (a, b)
    }
}

/// Slopes through (p₁/q, p₂/q) that can never reach a vertex: (qa', b) with
/// gcd(qa', b) = 1 when p₁ is off the lattice lines, and (a, qb') with
/// gcd(a, qb') = 1 when p₂ is. Entries are bounded by `bound` in absolute value.
pub fn dense_periodic_family(p1: i64, p2: i64, q: i64, bound: i64) -> Result<Vec<(i64, i64)>> {
    if q <= 0 {
        return Err(Error::domain(format!("q must be positive, got {q}")));
    }
    let interior = |p: i64| p.rem_euclid(q) != 0;
    if !interior(p1) && !interior(p2) {
        return Err(Error::domain(format!("({p1}/{q}, {p2}/{q}) is a lattice vertex")));
    }
    let mut out = Vec::new();
    for u in -bound..=bound {
        for v in -bound..=bound {
            if gcd(u, v) != 1 {
                continue;
            }
            if interior(p1) && u % q == 0 {
                out.push(normalise(u, v));
            }
            if interior(p2) && v % q == 0 {
                out.push(normalise(u, v));
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Largest gap between the line directions of `slopes`, measured on the circle of lines [0, π).
pub fn max_slope_gap(slopes: &[(i64, i64)]) -> f64 {
    let mut angles: Vec<f64> = slopes
        .iter()
        .map(|&(a, b)| (b as f64).atan2(a as f64).rem_euclid(std::f64::consts::PI))
        .collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup();
    match angles.len() {
        0 => std::f64::consts::PI,
        n => {
            let wrap = angles[0] + std::f64::consts::PI - angles[n - 1];
            angles.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchRow {
    pub query: TorusQuery,
    pub criterion: bool,
    pub oracle: bool,
}

impl BatchRow {
    pub fn agree(&self) -> bool {
        self.criterion == self.oracle
    }
}

/// All valid queries with q ≤ `q_max` and coprime (a, b) with |a|, |b| ≤ `slope_bound`.
pub fn batch_queries(q_max: i64, slope_bound: i64) -> Vec<TorusQuery> {
    let mut out = Vec::new();
    for q in 1..=q_max {
        for p1 in 0..=q {
            for p2 in 0..=q {
                if gcd(gcd(p1, p2), q) != 1 {
                    continue;
                }
                for a in -slope_bound..=slope_bound {
                    for b in -slope_bound..=slope_bound {
                        if gcd(a, b) == 1 {
                            out.push(TorusQuery { p1, p2, q, a, b });
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn run_batch(queries: &[TorusQuery]) -> Vec<BatchRow> {
    queries
        .par_iter()
        .map(|qr| BatchRow {
            query: *qr,
            criterion: is_generalized_diagonal(qr),
            oracle: brute_force_gd(qr, default_step_bound(qr)),
        })
        .collect()
}

/// Slopes among `slopes` whose line from (x, y) meets an integer lattice
/// point within `steps` vertical-line crossings in either time direction,
/// up to `tol`.
pub fn vertex_hitting_slopes(x: &Float, y: &Float, slopes: &[(i64, i64)], steps: i64, tol: &Float) -> Vec<(i64, i64)> {
    let prec = x.prec();
    let near_integer = |v: &Float| {
        let r = Float::with_val(prec, v.round_ref());
        Float::with_val(prec, v - &r).abs() <= *tol
    };
    slopes
        .iter()
        .copied()
        .filter(|&(a, b)| {
            if a == 0 {
                // Vertical line: only x matters.
                return near_integer(x);
            }
            let x_floor = Float::with_val(prec, x.floor_ref());
            (-steps..=steps).any(|k| {
                // Time at which x + ta reaches the integer ⌊x⌋ + k.
                let t = Float::with_val(prec, Float::with_val(prec, &x_floor + k) - x) / a;
                let yt = Float::with_val(prec, y + Float::with_val(prec, &t * b));
                near_integer(&yt)
            })
        })
        .collect()
}
