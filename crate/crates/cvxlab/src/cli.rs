//! Argument parsing and dispatch. Exit codes: 0 success or pass, 1 a check
//! failed, 2 usage or input error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use clap::{Parser, Subcommand};
use cvxlab_core::domains::{self, DomainSpec, RhoKind};
use cvxlab_core::pshlab::{self, BoxRegion, GridFn, ScanOptions, PHI_NEGATIVE};
use cvxlab_core::verify::{self, SuiteParams, VerdictReport};
use cvxlab_core::{moduli, CVec, Error, EstimatorOptions, FnField, Smoothness, Space};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::exec::{thread_count, Pool};
use crate::fields::{self, BoxedField};
use crate::gridio::{self, DataFormat, GridHeader};
use crate::output;
use crate::params::{Format, Params};
use crate::regions;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cvxlab", version, about = "Complex convexity moduli, plurisubharmonicity and Levi-form checks")]
pub struct Cli {
    /// Worker threads (0 = all cores); overrides CVXLAB_THREADS
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Record wall-clock time in verdict reports (runtime_ms)
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a convexity modulus on an ε grid
    Moduli(Params),
    /// Plurisubharmonicity of a test function
    Psh {
        #[command(subcommand)]
        op: PshOp,
    },
    /// Levi form, exhaustion and disc checks on a ball domain
    Domain {
        #[command(subcommand)]
        op: DomainOp,
    },
    /// Run a verification suite, or replay a saved report
    Verify(Params),
}

#[derive(Debug, Subcommand)]
pub enum PshOp {
    /// Search circles in a region for a sub-mean violation
    Check(Params),
    /// Normalized circle gap at --point, or its infimum over --region
    Phi(Params),
    /// Mollify a grid function and write the result to --out
    Mollify(Params),
}

#[derive(Debug, Subcommand)]
pub enum DomainOp {
    /// Tangential Levi form at a boundary point
    Levi(Params),
    /// Smallest tangential Levi eigenvalue over seeded boundary points
    Scan(Params),
    /// Levi form of −log|ρ| against an exhaustion rate φ
    Exhaustion(Params),
    /// Uniform PL-convexity check of the unit ball (verdict report)
    Uniform(Params),
    /// Largest disc a + r𝔻·dir inside the domain
    Radius(Params),
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub msg: String,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, msg: msg.into() }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotPlurisubharmonic { .. } | Error::ReplayMismatch { .. } => EXIT_FAIL,
            _ => EXIT_USAGE,
        };
        Failure { code, msg: e.to_string() }
    }
}

impl From<String> for Failure {
    fn from(msg: String) -> Self {
        usage(msg)
    }
}

type Outcome = Result<bool, Failure>;

/// Non-verdict outputs: the command, its seed and resolved parameters, and
/// the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope<T> {
    pub command: String,
    pub seed: u64,
    pub params: Params,
    pub result: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuliResult {
    pub space: String,
    pub curve: cvxlab_core::ModulusCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusResult {
    pub point: CVec,
    pub dir: CVec,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollifyResult {
    pub input_shape: Vec<usize>,
    pub delta: f64,
    pub kernel_half_width: Vec<usize>,
    pub kernel_mass: f64,
    pub output: GridHeader,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayResult {
    pub suite: String,
    pub worst_margin: Option<f64>,
    pub check_margins: Vec<f64>,
}

struct Ctx {
    pool: Pool,
    timing: bool,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAIL,
        Err(f) => {
            eprintln!("cvxlab: {}", f.msg);
            if f.code == EXIT_USAGE {
                eprintln!("usage: cvxlab <moduli|psh|domain|verify> [OPTIONS]  (see cvxlab --help)");
            }
            f.code
        }
    }
}

fn dispatch(cli: Cli) -> Outcome {
    let threads = thread_count(cli.threads)?;
    let pool = Pool::new(threads).map_err(|e| usage(e.to_string()))?;
    let ctx = Ctx { pool, timing: cli.timing };
    match cli.command {
        Command::Moduli(p) => run_moduli(&ctx, p.resolve("moduli")?),
        Command::Verify(p) => run_verify(&ctx, p.resolve("verify")?),
        Command::Psh { op } => match op {
            PshOp::Check(p) => psh_check(&ctx, p.resolve("psh check")?),
            PshOp::Phi(p) => psh_phi(&ctx, p.resolve("psh phi")?),
            PshOp::Mollify(p) => psh_mollify(&ctx, p.resolve("psh mollify")?),
        },
        Command::Domain { op } => match op {
            DomainOp::Levi(p) => domain_levi(p.resolve("domain levi")?),
            DomainOp::Scan(p) => domain_scan(&ctx, p.resolve("domain scan")?),
            DomainOp::Exhaustion(p) => domain_exhaustion(&ctx, p.resolve("domain exhaustion")?),
            DomainOp::Uniform(p) => domain_uniform(&ctx, p.resolve("domain uniform")?),
            DomainOp::Radius(p) => domain_radius(p.resolve("domain radius")?),
        },
    }
}

fn need<T: Clone>(v: &Option<T>, flag: &str) -> Result<T, Failure> {
    v.clone().ok_or_else(|| usage(format!("missing --{flag}")))
}

fn json_only(p: &Params, command: &str) -> Result<(), Failure> {
    if p.format == Some(Format::Csv) {
        return Err(usage(format!("`{command}` writes JSON only")));
    }
    Ok(())
}

fn emit<T: Serialize>(p: &Params, command: &str, result: T) -> Result<(), Failure> {
    let env = Envelope { command: command.to_string(), seed: p.seed(), params: p.clone(), result };
    write_out(p.out.as_deref(), &output::json(&env)?)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(path) => fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| usage(e.to_string()))
        }
    }
}

fn space(p: &Params) -> Result<Space, Failure> {
    Ok(Space::new(need(&p.space, "space")?.0)?)
}

fn run_moduli(ctx: &Ctx, p: Params) -> Outcome {
    let space = space(&p)?;
    let kind = need(&p.modulus, "modulus")?.0;
    let eps = need(&p.eps, "eps")?.0;
    let budget = p.budget.unwrap_or(verify::DEFAULT_BUDGET);
    let mut opts = EstimatorOptions::new(budget, p.seed());
    if let Some(q) = p.quad() {
        opts = opts.with_quad(q);
    }
    let curve = moduli::modulus_curve_in(&ctx.pool, &space, kind, p.exp, &eps, &opts)?;
    match p.format.unwrap_or(Format::Csv) {
        Format::Csv => write_out(p.out.as_deref(), &output::curve_csv(&curve)?)?,
        Format::Json => emit(&p, "moduli", ModuliResult { space: space.spec().to_string(), curve })?,
    }
    Ok(true)
}

fn suite_params(p: &Params) -> SuiteParams {
    SuiteParams {
        space: p.space.clone().map(|s| s.0),
        p: p.p,
        q: p.q,
        r: p.r,
        samples: p.samples,
        budget: p.budget,
        grid_points: p.grid_points,
        slack: p.slack,
        quad: p.quad(),
    }
}

fn emit_verdict(ctx: &Ctx, p: &Params, mut rep: VerdictReport, start: Instant) -> Outcome {
    if ctx.timing {
        rep.runtime_ms = Some(start.elapsed().as_millis() as u64);
    }
    write_out(p.out.as_deref(), &output::json(&rep)?)?;
    Ok(rep.pass)
}

fn run_verify(ctx: &Ctx, p: Params) -> Outcome {
    json_only(&p, "verify")?;
    if let Some(path) = &p.replay {
        let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let rep: VerdictReport = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let check_margins = verify::replay_checks(&rep)?;
        let worst_margin = match rep.witness {
            Some(_) => Some(verify::replay(&rep)?),
            None => None,
        };
        emit(&p, "verify replay", ReplayResult { suite: rep.suite.clone(), worst_margin, check_margins })?;
        return Ok(true);
    }
    let suite = need(&p.suite, "suite")?;
    let start = Instant::now();
    let rep = verify::run_suite(suite, &suite_params(&p), p.seed(), &ctx.pool)?;
    emit_verdict(ctx, &p, rep, start)
}

/// The test function: `--grid` file or `--fn` name.
fn field(p: &Params) -> Result<BoxedField, Failure> {
    match (&p.grid, &p.func) {
        (Some(_), Some(_)) => Err(usage("give either --grid or --fn, not both")),
        (Some(path), None) => Ok(Box::new(gridio::read_grid(path)?)),
        (None, Some(name)) => Ok(fields::named(name, p.dim.unwrap_or(1))?),
        (None, None) => Err(usage("missing --fn (or --grid)")),
    }
}

fn region(p: &Params, f: &BoxedField) -> Result<regions::BoxedRegion, Failure> {
    let radius = p.radius.unwrap_or(1.0);
    match (&p.region, &p.grid) {
        (Some(text), _) => Ok(regions::parse(text, f.dim(), radius)?),
        (None, Some(path)) => {
            let g = gridio::read_grid(path)?;
            Ok(Box::new(BoxRegion::new(g.lo, g.hi)?))
        }
        (None, None) => Err(usage("missing --region")),
    }
}

fn psh_check(ctx: &Ctx, p: Params) -> Outcome {
    json_only(&p, "psh check")?;
    let f = field(&p)?;
    let region = region(&p, &f)?;
    let d = ScanOptions::default();
    let opts = ScanOptions {
        samples: p.samples.unwrap_or(d.samples),
        seed: p.seed(),
        r_max: p.r_max.unwrap_or(d.r_max),
        tol: p.tol.unwrap_or(d.tol),
        quad: p.quad().unwrap_or(d.quad),
    };
    let rep = pshlab::psh_scan_in(&ctx.pool, &*f, &*region, &opts)?;
    let pass = rep.pass;
    emit(&p, "psh check", rep)?;
    Ok(pass)
}

fn psh_phi(ctx: &Ctx, p: Params) -> Outcome {
    json_only(&p, "psh phi")?;
    let f = field(&p)?;
    let r_max = p.r_max.unwrap_or(0.1);
    let dirs = p.dirs.unwrap_or(16);
    if let Some(point) = &p.point {
        let est = pshlab::strict_avg_phi(&*f, &point.0, r_max, dirs, p.seed())?;
        emit(&p, "psh phi", est)?;
        return Ok(true);
    }
    let region = region(&p, &f)?;
    let u = pshlab::uniform_lambda_in(&ctx.pool, &*f, &*region, p.samples.unwrap_or(100), p.seed(), r_max, dirs)?;
    let ok = u.value >= PHI_NEGATIVE;
    emit(&p, "psh phi", u)?;
    Ok(ok)
}

/// `lo:hi` applied to every real axis.
fn parse_box(text: &str, axes: usize) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let bad = || usage(format!("cannot parse --box `{text}` (expected lo:hi)"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    Ok((vec![lo; axes], vec![hi; axes]))
}

fn psh_mollify(ctx: &Ctx, p: Params) -> Outcome {
    json_only(&p, "psh mollify")?;
    let delta = need(&p.delta, "delta")?;
    let out = need(&p.out, "out")?;
    let input = match (&p.grid, &p.func) {
        (Some(path), None) => gridio::read_grid(path)?,
        (None, Some(name)) => {
            let f = fields::named(name, p.dim.unwrap_or(1))?;
            let axes = 2 * f.dim();
            let (lo, hi) = parse_box(&need(&p.bounds, "box")?, axes)?;
            let n = need(&p.shape, "shape")?;
            GridFn::sample(&*f, lo, hi, vec![n; axes])?
        }
        (Some(_), Some(_)) => return Err(usage("give either --grid or --fn, not both")),
        (None, None) => return Err(usage("missing --grid (or --fn with --box and --shape)")),
    };
    let spacing: Vec<f64> = (0..input.real_dim()).map(|a| input.spacing(a)).collect();
    let k = pshlab::kernel(delta, &spacing)?;
    let g = pshlab::mollify_in(&ctx.pool, &input, delta)?;
    let format = if p.binary.unwrap_or(false) { DataFormat::F64le } else { DataFormat::Csv };
    let header = gridio::write_grid(&out, &g, format)?;
    let res = MollifyResult {
        input_shape: input.shape.clone(),
        delta,
        kernel_half_width: k.half.clone(),
        kernel_mass: k.mass(),
        output: header,
    };
    let env = Envelope { command: "psh mollify".to_string(), seed: p.seed(), params: p.clone(), result: res };
    write_out(None, &output::json(&env)?)?;
    Ok(true)
}

fn domain(p: &Params) -> Result<DomainSpec, Failure> {
    if let Some(cfg) = &p.domain {
        if p.space.is_some() {
            return Err(usage("give either --space or a config `domain`, not both"));
        }
        return Ok(DomainSpec::from_config(cfg)?);
    }
    let s = space(p)?;
    Ok(DomainSpec::ball(&s, p.radius.unwrap_or(1.0), p.rho)?)
}

fn domain_levi(p: Params) -> Outcome {
    json_only(&p, "domain levi")?;
    let d = domain(&p)?;
    let point = need(&p.point, "point")?.0;
    let rep = domains::levi_report(&d, &point)?;
    emit(&p, "domain levi", rep)?;
    Ok(true)
}

fn domain_scan(ctx: &Ctx, p: Params) -> Outcome {
    let d = domain(&p)?;
    let rep = domains::strict_levi_scan_in(&ctx.pool, &d, p.samples.unwrap_or(200), p.seed())?;
    match p.format.unwrap_or(Format::Json) {
        Format::Csv => write_out(p.out.as_deref(), &output::scan_csv(&rep)?)?,
        Format::Json => emit(&p, "domain scan", rep)?,
    }
    Ok(true)
}

/// `inv_rho[:C]` is `C/|ρ|`; anything else is a named function.
fn exhaustion_phi(p: &Params, d: &DomainSpec) -> Result<BoxedField, Failure> {
    let name = p.func.clone().unwrap_or_else(|| "inv_rho".into());
    if let Some(rest) = name.strip_prefix("inv_rho") {
        let c = match rest.strip_prefix(':') {
            Some(c) => c.parse::<f64>().map_err(|_| usage(format!("cannot parse `{name}`")))?,
            None if rest.is_empty() => 1.0,
            None => return Err(usage(format!("unknown function `{name}`"))),
        };
        let d = d.clone();
        let f = FnField::new(d.dim(), move |z: &[Complex64]| c / d.rho(z).abs()).with_hint(Smoothness::C2);
        return Ok(Box::new(f));
    }
    Ok(fields::named(&name, d.dim())?)
}

fn domain_exhaustion(ctx: &Ctx, p: Params) -> Outcome {
    json_only(&p, "domain exhaustion")?;
    let d = domain(&p)?;
    let phi = exhaustion_phi(&p, &d)?;
    let threshold = p.threshold.unwrap_or(0.5);
    let rep = domains::exhaustion_check_in(&ctx.pool, &d, &*phi, p.samples.unwrap_or(200), p.seed(), threshold)?;
    let pass = rep.pass;
    emit(&p, "domain exhaustion", rep)?;
    Ok(pass)
}

fn domain_uniform(ctx: &Ctx, p: Params) -> Outcome {
    json_only(&p, "domain uniform")?;
    if p.rho.is_some() && p.rho != Some(RhoKind::NormMinusOne) {
        return Err(usage("the uniform check uses the norm itself; --rho does not apply"));
    }
    let spec = need(&p.space, "space")?.0;
    let start = Instant::now();
    let rep = verify::unit_ball_uniform_check(&spec, p.samples.unwrap_or(10_000), p.seed(), &ctx.pool)?;
    emit_verdict(ctx, &p, rep, start)
}

fn domain_radius(p: Params) -> Outcome {
    json_only(&p, "domain radius")?;
    let d = domain(&p)?;
    let point = need(&p.point, "point")?.0;
    let dir = need(&p.dir, "dir")?.0;
    let radius = domains::disc_radius(&d, &point, &dir)?;
    emit(&p, "domain radius", RadiusResult { point, dir, radius })?;
    Ok(true)
}
