use std::process::Command;

use billiards_cli::run;
use billiards_cli::svg::{render_orbit, Stroke};
use billiards_core::flow::{OrbitSegment, PhasePoint, Termination};
use billiards_core::records::{parse, HitRecord, StripRecord};
use billiards_core::torus::BatchRow;
use billiards_core::{make_triangle_f64, PrecisionContext, SideId, SymbolicDirection};

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("billiards").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn box_orbit_trace_repeats_every_four_hits() {
    let (code, out, _) = call(&["trace", "--alpha", "0.785398163397448309615660845819875721", "--from", "legH:0.5", "--theta", "1.5707963", "--steps", "8"]);
    assert_eq!(code, 0);
    let (_, rows) = parse::<HitRecord>(&out).unwrap();
    assert_eq!(rows.len(), 8);
    for i in 0..4 {
        assert_eq!(rows[i].side, rows[i + 4].side);
        let ds = (rows[i].s.to_f64() - rows[i + 4].s.to_f64()).abs();
        assert!(ds < 1e-6, "hit {i} drifts by {ds}");
    }
    let sides: Vec<SideId> = rows[..4].iter().map(|r| r.side).collect();
    assert_eq!(sides, [SideId::Hyp, SideId::LegV, SideId::Hyp, SideId::LegH]);
}

#[test]
fn strips_example() {
    let (code, out, _) = call(&["strips", "--alpha", "0.7", "--theta", "perp-leg", "--N", "4"]);
    assert_eq!(code, 0);
    let (header, rows) = parse::<StripRecord>(&out).unwrap();
    assert_eq!(header.precision_bits, 256);
    assert_eq!(rows.len(), 5);
    assert_eq!(rows.iter().filter(|r| r.exceptional).count(), 2);
}

#[test]
fn torus_batch_has_no_disagreements() {
    let (code, out, err) = call(&["torus", "--batch", "q<=12"]);
    assert_eq!(code, 0, "{err}");
    let (_, rows) = parse::<BatchRow>(&out).unwrap();
    assert!(rows.len() > 100_000);
    assert!(rows.iter().all(|r| r.agree()));
}

#[test]
fn exit_codes() {
    assert_eq!(call(&["bogus"]).0, 64);
    assert_eq!(call(&[]).0, 64);
    assert_eq!(call(&["trace", "--alpha", "0.9", "--from", "legH:0.5"]).0, 2);
    assert_eq!(call(&["trace", "--alpha", "0.7", "--from", "side:0.5"]).0, 2);
    assert_eq!(call(&["torus", "--at", "2,2,4", "--slope", "1/1"]).0, 2);
    assert_eq!(call(&["--help"]).0, 0);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("run{i}.tsv"))).collect();
    for p in &paths {
        let (code, out, _) = call(&["foliation", "--alpha", "0.7", "--theta", "perp-leg", "--samples", "12", "--steps", "20000", "--seed", "5", "--out", p.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(out.is_empty());
    }
    let a = std::fs::read(&paths[0]).unwrap();
    assert_eq!(a, std::fs::read(&paths[1]).unwrap());
    assert!(!a.is_empty());
}

#[test]
fn both_formats_write_two_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("box.tsv");
    let (code, _, _) = call(&["trace", "--alpha", "pi/4", "--theta", "pi/2", "--from", "legH:0.5", "--steps", "4", "--format", "both", "--out", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    let records = std::fs::read_to_string(&p).unwrap();
    let svg = std::fs::read_to_string(p.with_extension("svg")).unwrap();
    let (_, rows) = parse::<HitRecord>(&records).unwrap();
    assert_eq!(rows.len(), 4);
    // Closed 4-segment polyline drawn solid.
    let poly = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
    let pts = poly.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    assert_eq!(pts.split(' ').count(), rows.len() + 1);
    assert_eq!(pts.split(' ').next(), pts.split(' ').last());
    assert!(!poly.contains("dasharray"));
}

#[test]
fn torus_diagonal_is_dashed() {
    let (code, out, _) = call(&["torus", "--at", "1,1,3", "--slope", "1/1", "--format", "svg"]);
    assert_eq!(code, 0);
    assert!(out.contains("stroke-dasharray"));
    let (_, out, _) = call(&["torus", "--at", "1,1,3", "--slope", "3/1", "--format", "svg"]);
    assert!(!out.contains("stroke-dasharray"));
}

#[test]
fn empty_orbit_cannot_be_drawn() {
    let ctx = PrecisionContext::default();
    let tri = make_triangle_f64(0.7, &ctx).unwrap();
    let seg = OrbitSegment {
        start: PhasePoint::on_side(SideId::LegH, ctx.float(0.5), SymbolicDirection::base(), ctx.float(1.0)),
        hits: vec![],
        dirs: vec![],
        termination: Termination::MaxSteps,
    };
    assert!(render_orbit(&tri, &seg, Stroke::Solid).is_err());
}

#[test]
fn svg_is_deterministic() {
    let args = ["trace", "--alpha", "0.7", "--theta", "1.1", "--from", "legH:0.3", "--steps", "50", "--format", "svg"];
    let a = call(&args).1;
    assert_eq!(a, call(&args).1);
    assert!(a.starts_with("<svg"));
}

#[test]
fn precision_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_billiards"))
        .args(["trace", "--alpha", "0.7", "--theta", "1.1", "--from", "legH:0.3", "--steps", "3"])
        .env("BILLIARD_PRECISION_BITS", "128")
        .output()
        .unwrap();
    assert!(out.status.success());
    let (header, _) = parse::<HitRecord>(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(header.precision_bits, 128);
}

#[test]
fn masses_give_the_triangle_angle() {
    let (code, out, _) = call(&["masses", "--m1", "1", "--m2", "3"]);
    assert_eq!(code, 0);
    let a: f64 = out.trim().parse().unwrap();
    assert!((a - std::f64::consts::FRAC_PI_6).abs() < 1e-15);
}
