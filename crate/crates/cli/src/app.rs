use std::path::{Path, PathBuf};

use billiards_core::flow::{detect_period, trace, PeriodOutcome, PhasePoint, Termination};
use billiards_core::periodicity::{
    choose_good_direction, foliation_scan, inward_label, periodic_direction_scan, perp_verdict,
};
use billiards_core::precision::PrecisionContext;
use billiards_core::records::{emit, BracketRecord, Header, HitRecord, PerpRecord, Record, StripRecord};
use billiards_core::strips::{escape_bracket, exceptional_strips, strip_decomposition, DecompositionOptions, EscapeDirection};
use billiards_core::torus::{batch_queries, run_batch, TorusQuery};
use billiards_core::triangle::{make_triangle, masses_to_alpha, RightTriangle, SideId};
use billiards_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::Float;

use crate::expr::parse_angle;
use crate::svg::{render_bracket, render_orbit, render_strips, render_torus_line, Stroke};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_STRUCTURE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "billiards", about = "Billiards in irrational right triangles", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Mantissa bits for all arithmetic.
    #[arg(long, global = true, env = "BILLIARD_PRECISION_BITS", default_value_t = 256)]
    precision_bits: u32,
    #[arg(long = "corner-eps", global = true, default_value_t = 1e-40)]
    corner_eps: f64,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output file; standard output when absent. With `--format both` the SVG goes next to it with an .svg extension.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Records)]
    format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Records,
    Svg,
    Both,
}

#[derive(Args, Debug)]
struct Geometry {
    /// Angle at A: a decimal or an expression such as atan(1/2) or pi*0.2.
    #[arg(long)]
    alpha: String,
    /// Direction: radians, an expression, or one of perp-leg, perp-hyp, good.
    #[arg(long, default_value = "good")]
    theta: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Trace an orbit from a boundary point.
    Trace {
        #[command(flatten)]
        geo: Geometry,
        /// Start as SIDE:s, with SIDE one of legH, legV, hyp.
        #[arg(long)]
        from: String,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Search for a period from a boundary point.
    Period {
        #[command(flatten)]
        geo: Geometry,
        #[arg(long)]
        from: String,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
    },
    /// Strip decomposition of the compact part with N levels.
    Strips {
        #[command(flatten)]
        geo: Geometry,
        #[arg(long = "N")]
        n: u32,
    },
    /// Nested escape intervals up to N_max.
    Escape {
        #[command(flatten)]
        geo: Geometry,
        #[arg(long = "Nmax")]
        n_max: u32,
    },
    /// End-point-good verdicts for the leg and the hypotenuse.
    Perp {
        #[arg(long)]
        alpha: String,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
    },
    /// Periodicity scan of boundary points in one direction.
    Foliation {
        #[command(flatten)]
        geo: Geometry,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
    },
    /// Periodicity scan of the directions through one point.
    Dirscan {
        #[arg(long)]
        alpha: String,
        /// Point as x,y.
        #[arg(long)]
        point: String,
        #[arg(long = "K")]
        k: u32,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
    },
    /// Generalized diagonals on the square torus.
    Torus {
        /// Exhaustive batch, written as q<=Q.
        #[arg(long)]
        batch: Option<String>,
        #[arg(long, default_value_t = 12)]
        slope_bound: i64,
        /// Single query as p1,p2,q.
        #[arg(long, conflicts_with = "batch")]
        at: Option<String>,
        /// Direction a/b for a single query.
        #[arg(long, requires = "at")]
        slope: Option<String>,
    },
    /// Triangle angle for two elastic point masses on a segment.
    Masses {
        #[arg(long)]
        m1: f64,
        #[arg(long)]
        m2: f64,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Input(String),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::StructureViolation(_) | Error::NestingViolation { .. }) => EXIT_STRUCTURE,
            _ => EXIT_DOMAIN,
        }
    }
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

struct Output {
    records: Option<String>,
    svg: Option<String>,
    summary: String,
}

/// Parse `argv` (program name first), run one subcommand and return the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => match write_output(&cli.common, &out, stdout) {
            Ok(()) => {
                let _ = writeln!(stderr, "{}", out.summary);
                EXIT_OK
            }
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                e.exit_code()
            }
        },
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn write_output(common: &Common, out: &Output, stdout: &mut dyn std::io::Write) -> Result<(), CliError> {
    let want_records = common.format != Format::Svg;
    let want_svg = common.format != Format::Records;
    let mut parts: Vec<(Option<PathBuf>, &str)> = Vec::new();
    if want_records {
        if let Some(r) = &out.records {
            parts.push((common.out.clone(), r));
        }
    }
    if want_svg {
        if let Some(s) = &out.svg {
            let path = match (&common.out, common.format) {
                (Some(p), Format::Both) => Some(p.with_extension("svg")),
                (p, _) => p.clone(),
            };
            parts.push((path, s));
        }
    }
    for (path, text) in parts {
        match path {
            Some(p) => write_file(&p, text)?,
            None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io { path: "stdout".into(), source: e })?,
        }
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })
}

fn context(common: &Common) -> Result<PrecisionContext, CliError> {
    let default = PrecisionContext::default();
    Ok(PrecisionContext::new(common.precision_bits, common.corner_eps, default.position_tolerance())?)
}

fn triangle(alpha: &str, ctx: &PrecisionContext) -> Result<RightTriangle, CliError> {
    let a = parse_angle(alpha, ctx.mantissa_bits()).map_err(input)?;
    Ok(make_triangle(&a, ctx)?)
}

fn theta(token: &str, tri: &RightTriangle, ctx: &PrecisionContext) -> Result<Float, CliError> {
    let prec = ctx.mantissa_bits();
    let half_pi = Float::with_val(prec, tri.pi() / 2u32);
    Ok(match token {
        "perp-leg" => half_pi,
        "perp-hyp" => half_pi - tri.alpha(),
        "good" => choose_good_direction(tri, ctx)?.1,
        t => parse_angle(t, prec).map_err(input)?,
    })
}

fn start_point(from: &str, theta: &Float, tri: &RightTriangle, ctx: &PrecisionContext) -> Result<PhasePoint, CliError> {
    let (side, s) = from.split_once(':').ok_or_else(|| input(format!("--from expects SIDE:s, got {from:?}")))?;
    let side = SideId::parse(side).ok_or_else(|| input(format!("unknown side {side:?}")))?;
    let s = parse_angle(s, ctx.mantissa_bits()).map_err(input)?;
    let len = tri.side_length(side);
    if s <= 0 || s >= len {
        return Err(input(format!("s must lie strictly inside {side}")));
    }
    let label = inward_label(side, theta, tri).ok_or_else(|| input(format!("direction does not enter the triangle from {side}")))?;
    Ok(PhasePoint::on_side(side, s, label, theta.clone()))
}

fn options() -> DecompositionOptions {
    DecompositionOptions::default()
}

fn execute(cli: &Cli) -> Result<Output, CliError> {
    let ctx = context(&cli.common)?;
    match &cli.cmd {
        Command::Trace { geo, from, steps } => {
            let tri = triangle(&geo.alpha, &ctx)?;
            let th = theta(&geo.theta, &tri, &ctx)?;
            let start = start_point(from, &th, &tri, &ctx)?;
            let seg = trace(&start, *steps, &tri, &ctx)?;
            let periodic = matches!(detect_period(&start, (*steps).max(2), &tri, &ctx)?, PeriodOutcome::Periodic(_));
            let stroke = if seg.is_singular() || !periodic { Stroke::Dashed } else { Stroke::Solid };
            let rows = HitRecord::from_segment(&seg);
            let header = Header::new(HitRecord::KIND, &ctx).with("alpha", &geo.alpha).with("theta", &geo.theta);
            Ok(Output {
                records: Some(emit(&header, &rows)),
                svg: render_orbit(&tri, &seg, stroke).ok(),
                summary: format!("{} hits, termination {:?}", rows.len(), seg.termination),
            })
        }
        Command::Period { geo, from, steps } => {
            let tri = triangle(&geo.alpha, &ctx)?;
            let th = theta(&geo.theta, &tri, &ctx)?;
            let start = start_point(from, &th, &tri, &ctx)?;
            match detect_period(&start, *steps, &tri, &ctx)? {
                PeriodOutcome::Periodic(cert) => {
                    let seg = trace(&cert.start, cert.period_reflections, &tri, &ctx)?;
                    let header = Header::new(HitRecord::KIND, &ctx)
                        .with("alpha", &geo.alpha)
                        .with("period", cert.period_reflections)
                        .with("length", cert.geometric_length.to_string_radix(10, Some(30)));
                    Ok(Output {
                        records: Some(emit(&header, &HitRecord::from_segment(&seg))),
                        svg: render_orbit(&tri, &seg, Stroke::Solid).ok(),
                        summary: format!("periodic with {} reflections", cert.period_reflections),
                    })
                }
                PeriodOutcome::NotFound(reason) => {
                    let seg = trace(&start, *steps, &tri, &ctx)?;
                    let stroke = if matches!(seg.termination, Termination::SingularVertex { .. }) { Stroke::Dashed } else { Stroke::Solid };
                    Ok(Output { records: None, svg: render_orbit(&tri, &seg, stroke).ok(), summary: format!("no period found: {reason:?}") })
                }
            }
        }
        Command::Strips { geo, n } => {
            let tri = triangle(&geo.alpha, &ctx)?;
            let th = theta(&geo.theta, &tri, &ctx)?;
            let dec = strip_decomposition(&th, *n, &tri, &ctx, options())?;
            let rows: Vec<StripRecord> = dec.strips.iter().map(|s| StripRecord::new(*n, s)).collect();
            let header = Header::new(StripRecord::KIND, &ctx).with("alpha", &geo.alpha).with("theta", &geo.theta);
            let text = emit(&header, &rows);
            let svg = render_strips(&tri, &dec).ok();
            exceptional_strips(&dec.strips, *n)?;
            if dec.strips.len() != *n as usize + 1 {
                return Err(Error::StructureViolation(format!("{} strips for N = {n}", dec.strips.len())).into());
            }
            Ok(Output {
                records: Some(text),
                svg,
                summary: format!("{} strips, {} exceptional, {} warnings", rows.len(), dec.exceptional_count(), dec.warnings.len()),
            })
        }
        Command::Escape { geo, n_max } => {
            let tri = triangle(&geo.alpha, &ctx)?;
            let th = theta(&geo.theta, &tri, &ctx)?;
            let br = escape_bracket(&th, *n_max, EscapeDirection::Forward, &tri, &ctx, options())?;
            let rows: Vec<BracketRecord> = br.steps.iter().map(BracketRecord::from).collect();
            let header = Header::new(BracketRecord::KIND, &ctx)
                .with("alpha", &geo.alpha)
                .with("estimate", br.estimate.to_string_radix(10, None));
            Ok(Output {
                records: Some(emit(&header, &rows)),
                svg: render_bracket(&br).ok(),
                summary: format!("escape estimate u = {}", br.estimate.to_string_radix(10, Some(20))),
            })
        }
        Command::Perp { alpha, steps } => {
            let tri = triangle(alpha, &ctx)?;
            let mut rows = Vec::new();
            for side in [SideId::LegH, SideId::Hyp] {
                let v = perp_verdict(side, &tri, &ctx, *steps)?;
                rows.push(PerpRecord {
                    alpha: tri.alpha().clone(),
                    side,
                    closed_form: v.closed_form,
                    simulated: v.simulated,
                    n_witness: v.n_witness,
                    direct: v.direct,
                });
            }
            Ok(Output {
                records: Some(emit(&Header::new(PerpRecord::KIND, &ctx), &rows)),
                svg: None,
                summary: format!("{} verdicts", rows.len()),
            })
        }
        Command::Foliation { geo, samples, steps } => {
            let tri = triangle(&geo.alpha, &ctx)?;
            let th = theta(&geo.theta, &tri, &ctx)?;
            let rep = foliation_scan(&th, *samples, *steps, &tri, &ctx, cli.common.seed)?;
            let header = Header::new("sample", &ctx).with("alpha", &geo.alpha).with("seed", cli.common.seed);
            Ok(Output {
                records: Some(emit(&header, &rep.records)),
                svg: None,
                summary: format!(
                    "{} samples: {} periodic, {} singular, {} unresolved, longest period {}",
                    rep.samples, rep.periodic, rep.singular, rep.unresolved, rep.max_period_seen
                ),
            })
        }
        Command::Dirscan { alpha, point, k, steps } => {
            let tri = triangle(alpha, &ctx)?;
            let (x, y) = point.split_once(',').ok_or_else(|| input("--point expects x,y"))?;
            let prec = ctx.mantissa_bits();
            let x = parse_angle(x, prec).map_err(input)?;
            let y = parse_angle(y, prec).map_err(input)?;
            let scan = periodic_direction_scan((&x, &y), *k, *steps, &tri, &ctx)?;
            let header = Header::new("direction", &ctx).with("alpha", alpha).with("K", k);
            Ok(Output {
                records: Some(emit(&header, &scan.directions)),
                svg: None,
                summary: format!(
                    "{} directions, {} periodic, max periodic gap {:.6}, max gap {:.6}",
                    scan.report.samples,
                    scan.report.periodic,
                    scan.max_gap_periodic.to_f64(),
                    scan.max_gap_all.to_f64()
                ),
            })
        }
        Command::Torus { batch, slope_bound, at, slope } => torus(&ctx, batch.as_deref(), *slope_bound, at.as_deref(), slope.as_deref()),
        Command::Masses { m1, m2 } => {
            let a = masses_to_alpha(*m1, *m2, &ctx)?;
            let text = a.to_string_radix(10, Some(ctx.decimal_digits()));
            Ok(Output { records: Some(format!("{text}\n")), svg: None, summary: "alpha in radians".into() })
        }
    }
}

fn torus(ctx: &PrecisionContext, batch: Option<&str>, slope_bound: i64, at: Option<&str>, slope: Option<&str>) -> Result<Output, CliError> {
    let ints = |s: &str, sep: char| -> Result<Vec<i64>, CliError> {
        s.split(sep).map(|t| t.trim().parse().map_err(|_| input(format!("bad integer {t:?}")))).collect()
    };
    if let Some(b) = batch {
        let q_max: i64 = b
            .strip_prefix("q<=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| input(format!("--batch expects q<=Q, got {b:?}")))?;
        let rows = run_batch(&batch_queries(q_max, slope_bound));
        let bad = rows.iter().filter(|r| !r.agree()).count();
        let header = Header::new("torus", ctx).with("q_max", q_max).with("slope_bound", slope_bound);
        let text = emit(&header, &rows);
        if bad > 0 {
            return Err(Error::StructureViolation(format!("{bad} disagreements between criterion and oracle")).into());
        }
        return Ok(Output { records: Some(text), svg: None, summary: format!("{} queries, 0 disagreements", rows.len()) });
    }
    let at = at.ok_or_else(|| input("torus needs --batch or --at"))?;
    let p = ints(at, ',')?;
    let s = ints(slope.unwrap_or("1/1"), '/')?;
    if p.len() != 3 || s.len() != 2 {
        return Err(input("--at expects p1,p2,q and --slope a/b"));
    }
    let qr = TorusQuery::new(p[0], p[1], p[2], s[0], s[1])?;
    let rows = run_batch(&[qr]);
    Ok(Output {
        records: Some(emit(&Header::new("torus", ctx), &rows)),
        svg: Some(render_torus_line(&qr)),
        summary: format!("generalized diagonal: {}", rows[0].criterion),
    })
}
