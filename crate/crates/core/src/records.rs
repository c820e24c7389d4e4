//! Line-delimited, tab-separated record streams.
//!
//! A stream opens with a metadata line `#kind=…\tprecision_bits=…\t…` and a
//! column line; every further line is one record. Floats are written with
//! enough decimal digits to parse back to the same value at the stream's
//! precision.

use std::collections::BTreeMap;

use rug::Float;
use sha2::{Digest, Sha256};

use crate::direction::SymbolicDirection;
use crate::error::{Error, Result};
use crate::flow::{Hit, OrbitSegment};
use crate::periodicity::{ClosedFormVerdict, DirectionRecord, SampleClass, SampleRecord, SimulatedVerdict};
use crate::precision::PrecisionContext;
use crate::strips::{BracketStep, Component, Strip};
use crate::torus::{BatchRow, TorusQuery};
use crate::triangle::SideId;

pub trait Record: Sized {
    const KIND: &'static str;
    const COLUMNS: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
    fn from_fields(fields: &[&str], prec: u32) -> std::result::Result<Self, String>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub kind: String,
    pub precision_bits: u32,
    pub meta: BTreeMap<String, String>,
}

impl Header {
    pub fn new(kind: &str, ctx: &PrecisionContext) -> Self {
        let mut meta = BTreeMap::new();
        meta.insert("corner_epsilon".to_string(), format!("{:e}", ctx.corner_epsilon()));
        meta.insert("position_tolerance".to_string(), format!("{:e}", ctx.position_tolerance()));
        Header { kind: kind.to_string(), precision_bits: ctx.mantissa_bits(), meta }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }
}

pub fn emit<R: Record>(header: &Header, rows: &[R]) -> String {
    let mut out = format!("#kind={}\tprecision_bits={}", R::KIND, header.precision_bits);
    for (k, v) in &header.meta {
        out.push_str(&format!("\t{k}={v}"));
    }
    out.push('\n');
    out.push_str(&R::COLUMNS.join("\t"));
    out.push('\n');
    for r in rows {
        out.push_str(&r.fields().join("\t"));
        out.push('\n');
    }
    out
}

pub fn parse<R: Record>(text: &str) -> Result<(Header, Vec<R>)> {
    let err = |line: usize, msg: String| Error::Parse { line, msg };
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| err(1, "empty stream".into()))?;
    let first = first.strip_prefix('#').ok_or_else(|| err(1, "missing metadata line".into()))?;
    let mut meta = BTreeMap::new();
    for kv in first.split('\t') {
        let (k, v) = kv.split_once('=').ok_or_else(|| err(1, format!("bad metadata entry {kv:?}")))?;
        meta.insert(k.to_string(), v.to_string());
    }
    let kind = meta.remove("kind").ok_or_else(|| err(1, "no kind".into()))?;
    if kind != R::KIND {
        return Err(err(1, format!("expected kind {}, found {kind}", R::KIND)));
    }
    let precision_bits = meta
        .remove("precision_bits")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| err(1, "no precision_bits".into()))?;
    let (_, cols) = lines.next().ok_or_else(|| err(2, "missing column line".into()))?;
    if cols.split('\t').collect::<Vec<_>>() != R::COLUMNS {
        return Err(err(2, format!("columns {cols:?} do not match {}", R::KIND)));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != R::COLUMNS.len() {
            return Err(err(i + 1, format!("expected {} fields, found {}", R::COLUMNS.len(), fields.len())));
        }
        rows.push(R::from_fields(&fields, precision_bits).map_err(|m| err(i + 1, m))?);
    }
    Ok((Header { kind, precision_bits, meta }, rows))
}

pub fn float_field(f: &Float) -> String {
    f.to_string_radix(10, None)
}

fn parse_float(s: &str, prec: u32) -> std::result::Result<Float, String> {
    Float::parse(s).map(|p| Float::with_val(prec, p)).map_err(|e| format!("bad number {s:?}: {e}"))
}

fn parse_num<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("bad integer {s:?}"))
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("bad flag {s:?}")),
    }
}

fn parse_side(s: &str) -> std::result::Result<SideId, String> {
    SideId::parse(s).ok_or_else(|| format!("bad side {s:?}"))
}

/// Parse the `(+,n,m)` form written by `Display`.
pub fn parse_label(s: &str) -> std::result::Result<SymbolicDirection, String> {
    let inner = s.strip_prefix('(').and_then(|t| t.strip_suffix(')')).ok_or_else(|| format!("bad label {s:?}"))?;
    let parts: Vec<&str> = inner.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("bad label {s:?}"));
    }
    let sigma = match parts[0] {
        "+" => 1,
        "-" => -1,
        _ => return Err(format!("bad sign in {s:?}")),
    };
    SymbolicDirection::new(sigma, parse_num(parts[1])?, parse_num(parts[2])?).map_err(|e| e.to_string())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

fn parse_opt<T: std::str::FromStr>(s: &str) -> std::result::Result<Option<T>, String> {
    if s == "-" {
        Ok(None)
    } else {
        parse_num(s).map(Some)
    }
}

/// SHA-256 of a level code, as lowercase hex of the comma-joined levels.
pub fn code_hash(code: &[i64]) -> String {
    let joined = code.iter().map(i64::to_string).collect::<Vec<_>>().join(",");
    Sha256::digest(joined.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitRecord {
    pub index: usize,
    pub side: SideId,
    pub s: Float,
    pub label_in: SymbolicDirection,
    pub label_out: SymbolicDirection,
    pub level: i64,
}

impl HitRecord {
    pub fn from_segment(seg: &OrbitSegment) -> Vec<HitRecord> {
        seg.hits
            .iter()
            .zip(&seg.dirs)
            .enumerate()
            .map(|(index, (h, d)): (usize, (&Hit, &SymbolicDirection))| HitRecord {
                index,
                side: h.side,
                s: h.s.clone(),
                label_in: *d,
                label_out: h.dir_out,
                level: d.level(),
            })
            .collect()
    }
}

impl Record for HitRecord {
    const KIND: &'static str = "hit";
    const COLUMNS: &'static [&'static str] = &["index", "side", "s", "label_in", "label_out", "level"];
    fn fields(&self) -> Vec<String> {
        vec![
            self.index.to_string(),
            self.side.name().to_string(),
            float_field(&self.s),
            self.label_in.to_string(),
            self.label_out.to_string(),
            self.level.to_string(),
        ]
    }
    fn from_fields(f: &[&str], prec: u32) -> std::result::Result<Self, String> {
        Ok(HitRecord {
            index: parse_num(f[0])?,
            side: parse_side(f[1])?,
            s: parse_float(f[2], prec)?,
            label_in: parse_label(f[3])?,
            label_out: parse_label(f[4])?,
            level: parse_num(f[5])?,
        })
    }
}

fn parse_component(s: &str) -> std::result::Result<Component, String> {
    match s {
        "up" => Ok(Component::Up),
        "down" => Ok(Component::Down),
        _ => Err(format!("bad component {s:?}")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StripRecord {
    pub n_levels: u32,
    pub component: Component,
    pub u_lo: Float,
    pub u_hi: Float,
    pub start_level: i64,
    pub end_level: i64,
    pub exceptional: bool,
    pub contains_center: bool,
    pub code_len: usize,
    pub code_hash: String,
}

impl StripRecord {
    pub fn new(n_levels: u32, s: &Strip) -> Self {
        StripRecord {
            n_levels,
            component: s.component,
            u_lo: s.u_lo.clone(),
            u_hi: s.u_hi.clone(),
            start_level: s.start_level,
            end_level: s.end_level,
            exceptional: s.exceptional,
            contains_center: s.contains_center,
            code_len: s.code.len(),
            code_hash: code_hash(&s.code),
        }
    }
}

impl Record for StripRecord {
    const KIND: &'static str = "strip";
    const COLUMNS: &'static [&'static str] = &[
        "N", "component", "u_lo", "u_hi", "start_level", "end_level", "exceptional", "contains_center", "code_len", "code_hash",
    ];
    fn fields(&self) -> Vec<String> {
        vec![
            self.n_levels.to_string(),
            self.component.name().to_string(),
            float_field(&self.u_lo),
            float_field(&self.u_hi),
            self.start_level.to_string(),
            self.end_level.to_string(),
            self.exceptional.to_string(),
            self.contains_center.to_string(),
            self.code_len.to_string(),
            self.code_hash.clone(),
        ]
    }
    fn from_fields(f: &[&str], prec: u32) -> std::result::Result<Self, String> {
        Ok(StripRecord {
            n_levels: parse_num(f[0])?,
            component: parse_component(f[1])?,
            u_lo: parse_float(f[2], prec)?,
            u_hi: parse_float(f[3], prec)?,
            start_level: parse_num(f[4])?,
            end_level: parse_num(f[5])?,
            exceptional: parse_bool(f[6])?,
            contains_center: parse_bool(f[7])?,
            code_len: parse_num(f[8])?,
            code_hash: f[9].to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BracketRecord {
    pub n: u32,
    pub u_lo: Float,
    pub u_hi: Float,
}

impl From<&BracketStep> for BracketRecord {
    fn from(s: &BracketStep) -> Self {
        BracketRecord { n: s.n, u_lo: s.u_lo.clone(), u_hi: s.u_hi.clone() }
    }
}

impl Record for BracketRecord {
    const KIND: &'static str = "bracket";
    const COLUMNS: &'static [&'static str] = &["N", "u_lo", "u_hi"];
    fn fields(&self) -> Vec<String> {
        vec![self.n.to_string(), float_field(&self.u_lo), float_field(&self.u_hi)]
    }
    fn from_fields(f: &[&str], prec: u32) -> std::result::Result<Self, String> {
        Ok(BracketRecord { n: parse_num(f[0])?, u_lo: parse_float(f[1], prec)?, u_hi: parse_float(f[2], prec)? })
    }
}

fn class_fields(c: SampleClass) -> (String, String) {
    match c {
        SampleClass::Periodic { period } => ("periodic".into(), period.to_string()),
        SampleClass::Singular => ("singular".into(), "-".into()),
        SampleClass::NearSingular => ("near-singular".into(), "-".into()),
        SampleClass::Unresolved => ("unresolved".into(), "-".into()),
    }
}

fn parse_class(c: &str, p: &str) -> std::result::Result<SampleClass, String> {
    Ok(match c {
        "periodic" => SampleClass::Periodic { period: parse_num(p)? },
        "singular" => SampleClass::Singular,
        "near-singular" => SampleClass::NearSingular,
        "unresolved" => SampleClass::Unresolved,
        _ => return Err(format!("bad class {c:?}")),
    })
}

impl Record for SampleRecord {
    const KIND: &'static str = "sample";
    const COLUMNS: &'static [&'static str] = &["side", "s", "label", "class", "period", "verified"];
    fn fields(&self) -> Vec<String> {
        let (c, p) = class_fields(self.class);
        vec![self.side.name().into(), float_field(&self.s), self.label.to_string(), c, p, self.verified.to_string()]
    }
    fn from_fields(f: &[&str], prec: u32) -> std::result::Result<Self, String> {
        Ok(SampleRecord {
            side: parse_side(f[0])?,
            s: parse_float(f[1], prec)?,
            label: parse_label(f[2])?,
            class: parse_class(f[3], f[4])?,
            verified: parse_bool(f[5])?,
        })
    }
}

impl Record for DirectionRecord {
    const KIND: &'static str = "direction";
    const COLUMNS: &'static [&'static str] = &["label", "angle", "class", "period", "verified"];
    fn fields(&self) -> Vec<String> {
        let (c, p) = class_fields(self.class);
        vec![self.label.to_string(), float_field(&self.angle), c, p, self.verified.to_string()]
    }
    fn from_fields(f: &[&str], prec: u32) -> std::result::Result<Self, String> {
        Ok(DirectionRecord {
            label: parse_label(f[0])?,
            angle: parse_float(f[1], prec)?,
            class: parse_class(f[2], f[3])?,
            verified: parse_bool(f[4])?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerpRecord {
    pub alpha: Float,
    pub side: SideId,
    pub closed_form: ClosedFormVerdict,
    pub simulated: SimulatedVerdict,
    pub n_witness: Option<u64>,
    pub direct: bool,
}

fn closed_name(v: ClosedFormVerdict) -> &'static str {
    match v {
        ClosedFormVerdict::Good => "good",
        ClosedFormVerdict::NotGood => "not-good",
        ClosedFormVerdict::Boundary => "boundary",
    }
}

fn simulated_name(v: SimulatedVerdict) -> &'static str {
    match v {
        SimulatedVerdict::Good => "good",
        SimulatedVerdict::NotGood => "not-good",
        SimulatedVerdict::Singular => "singular",
    }
}

impl Record for PerpRecord {
    const KIND: &'static str = "perp";
    const COLUMNS: &'static [&'static str] = &["alpha", "side", "closed_form", "simulated", "n", "direct"];
    fn fields(&self) -> Vec<String> {
        vec![
            float_field(&self.alpha),
            self.side.name().into(),
            closed_name(self.closed_form).into(),
            simulated_name(self.simulated).into(),
            opt(self.n_witness),
            self.direct.to_string(),
        ]
    }
    fn from_fields(f: &[&str], prec: u32) -> std::result::Result<Self, String> {
        let closed_form = match f[2] {
            "good" => ClosedFormVerdict::Good,
            "not-good" => ClosedFormVerdict::NotGood,
            "boundary" => ClosedFormVerdict::Boundary,
            x => return Err(format!("bad verdict {x:?}")),
        };
        let simulated = match f[3] {
            "good" => SimulatedVerdict::Good,
            "not-good" => SimulatedVerdict::NotGood,
            "singular" => SimulatedVerdict::Singular,
            x => return Err(format!("bad verdict {x:?}")),
        };
        Ok(PerpRecord {
            alpha: parse_float(f[0], prec)?,
            side: parse_side(f[1])?,
            closed_form,
            simulated,
            n_witness: parse_opt(f[4])?,
            direct: parse_bool(f[5])?,
        })
    }
}

impl Record for BatchRow {
    const KIND: &'static str = "torus";
    const COLUMNS: &'static [&'static str] = &["p1", "p2", "q", "a", "b", "criterion", "oracle", "agree"];
    fn fields(&self) -> Vec<String> {
        let q = &self.query;
        vec![
            q.p1.to_string(),
            q.p2.to_string(),
            q.q.to_string(),
            q.a.to_string(),
            q.b.to_string(),
            self.criterion.to_string(),
            self.oracle.to_string(),
            self.agree().to_string(),
        ]
    }
    fn from_fields(f: &[&str], _prec: u32) -> std::result::Result<Self, String> {
        let query = TorusQuery::new(parse_num(f[0])?, parse_num(f[1])?, parse_num(f[2])?, parse_num(f[3])?, parse_num(f[4])?)
            .map_err(|e| e.to_string())?;
        let row = BatchRow { query, criterion: parse_bool(f[5])?, oracle: parse_bool(f[6])? };
        if row.agree() != parse_bool(f[7])? {
            return Err("agree column is inconsistent".into());
        }
        Ok(row)
    }
}
