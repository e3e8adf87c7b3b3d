//! The `gmorrey` command line: spaces, norms, operators, certifications and report indexes.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::certify::{certify_boundedness, generate_family, CertParams, CertReport, FamilySpec, TheoremId};
use crate::error::{Error, Result};
use crate::norms::{GridFunction, NormSpec};
use crate::operators::{KernelSpec, ModulusSpec, Operator, OperatorSpec, DEFAULT_FILTER_CONSTANT};
use crate::scales::{FreeConstants, MorreyVariant, ScaleSpec};
use crate::space::{
    presets, AhlforsFit, AhlforsWindow, BallChainReport, DoublingReport, NestedBallReport, QuasimetricConstants,
    QuasimetricSpace, RadiusRange, SpaceFile,
};

/// Exit status of a successful command.
pub const EXIT_OK: i32 = 0;
/// Exit status of an I/O, parse or validation failure.
pub const EXIT_INVALID: i32 = 1;
/// Exit status of a certification that completed and failed.
pub const EXIT_CERTIFICATION_FAILED: i32 = 2;
/// Environment variable holding the default output directory.
pub const OUT_ENV: &str = "GRAND_MORREY_OUT";

#[derive(Debug, Parser)]
#[command(name = "gmorrey", version, about = "Grand Morrey norms and operator bounds on finite quasimetric measure spaces")]
pub struct Cli {
    /// Directory receiving every artifact.
    #[arg(long, global = true, env = OUT_ENV, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or inspect a space.
    #[command(subcommand)]
    Space(SpaceCommand),
    /// Evaluate a norm.
    #[command(subcommand)]
    Norm(NormCommand),
    /// Apply an operator.
    #[command(subcommand)]
    Op(OpCommand),
    /// Certify operator bounds.
    #[command(subcommand)]
    Certify(CertifyCommand),
    /// Summarize written reports.
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Debug, Subcommand)]
pub enum SpaceCommand {
    /// Write a space file from a preset name or validate an existing one.
    Build {
        /// `grid<N>`, `snowflake<N>[:s]`, `two-atoms[:w0:w1]`, `squared3`, `calibrated-pair` or a space file.
        source: String,
        #[arg(long)]
        name: Option<String>,
    },
    /// Quasimetric, doubling, Ahlfors and growth constants of a space.
    Analyze { space: String },
}

#[derive(Debug, Subcommand)]
pub enum NormCommand {
    Eval(NormArgs),
}

#[derive(Debug, Args)]
pub struct NormArgs {
    /// `lebesgue`, `grand-lebesgue`, `morrey` or `grand-morrey`.
    #[arg(long)]
    pub norm: String,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub phi: Option<ScaleSpec>,
    #[arg(long = "A", alias = "a")]
    pub a: Option<ScaleSpec>,
    /// `measure`, `radius:<gamma>` or `modified:<dilation>`.
    #[arg(long, default_value = "measure")]
    pub variant: String,
    /// `open`, `closed` or `unbounded`.
    #[arg(long)]
    pub range: Option<String>,
    /// Function file.
    pub function: PathBuf,
    pub space: String,
}

#[derive(Debug, Subcommand)]
pub enum OpCommand {
    Apply(OpArgs),
}

#[derive(Debug, Args)]
pub struct OpArgs {
    /// `identity`, `maximal`, `modified-maximal`, `riesz-gamma`, `riesz-measure`, `kalpha` or `cz`.
    #[arg(long)]
    pub op: String,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub n0: Option<f64>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    pub function: PathBuf,
    pub space: String,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// `hilbert`, `riesz-gamma:<alpha>:<gamma>`, `riesz-measure:<alpha>` or `kalpha:<alpha>`.
    #[arg(long)]
    pub kernel: Option<String>,
    /// `pow:<exponent>` or `invlog:<exponent>`.
    #[arg(long)]
    pub modulus: Option<String>,
    /// Separation constant `C` of the smoothness condition.
    #[arg(long)]
    pub filter_constant: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum CertifyCommand {
    Run(CertifyArgs),
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Inequality ids, comma separated, or `all`.
    #[arg(long, required = true, value_delimiter = ',')]
    pub theorem: Vec<String>,
    pub space: String,
    #[arg(long, default_value = "mixed")]
    pub family: String,
    /// Seed of randomized families.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Parameter bundle (JSON); flags win.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Free constants (JSON); supplying them activates calibration.
    #[arg(long)]
    pub constants: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub phi: Option<ScaleSpec>,
    #[arg(long)]
    pub psi: Option<ScaleSpec>,
    #[arg(long = "A", alias = "a")]
    pub a: Option<ScaleSpec>,
    #[arg(long)]
    pub theta1: Option<f64>,
    #[arg(long)]
    pub theta2: Option<f64>,
    #[arg(long)]
    pub a_slope: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub n0: Option<f64>,
    #[arg(long)]
    pub grid_nodes: Option<usize>,
    #[arg(long)]
    pub refinements: Option<usize>,
    /// Skip coordinate-ascent sharpening of the worst member.
    #[arg(long)]
    pub no_sharpen: bool,
    #[command(flatten)]
    pub kernel: KernelArgs,
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// Write `index.json` and `index.csv` over every report in a directory.
    Index {
        /// Defaults to the output directory.
        dir: Option<PathBuf>,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

pub fn dispatch(cli: &Cli) -> Result<i32> {
    let out = cli.out.as_path();
    match &cli.command {
        Command::Space(SpaceCommand::Build { source, name }) => space_build(out, source, name.as_deref()),
        Command::Space(SpaceCommand::Analyze { space }) => space_analyze(out, space),
        Command::Norm(NormCommand::Eval(args)) => norm_eval(out, args),
        Command::Op(OpCommand::Apply(args)) => op_apply(out, args),
        Command::Certify(CertifyCommand::Run(args)) => certify_run(out, args),
        Command::Report(ReportCommand::Index { dir }) => report_index(dir.as_deref().unwrap_or(out)),
    }
}

/// A space file path, or a preset name when no such file exists.
pub fn load_space(source: &str) -> Result<QuasimetricSpace> {
    let path = Path::new(source);
    if path.is_file() {
        let space = QuasimetricSpace::load(path)?;
        if space.file().name.is_none() {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("space").to_string();
            return Ok(space.with_name(stem));
        }
        return Ok(space);
    }
    let preset = source.strip_suffix(".space").unwrap_or(source);
    presets::by_name(preset).ok_or_else(|| {
        Error::InvalidSpace(format!(
            "`{source}` is neither a space file nor a preset (grid<N>, snowflake<N>[:s], two-atoms[:w0:w1], squared3, \
             calibrated-pair)"
        ))
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    fs::write(path, body)?;
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(std::io::Error::from)?;
    for row in rows {
        w.serialize(row).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn file_stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("input").to_string()
}

fn space_build(out: &Path, source: &str, name: Option<&str>) -> Result<i32> {
    let mut space = load_space(source)?;
    if let Some(name) = name {
        space = space.with_name(name);
    }
    fs::create_dir_all(out)?;
    let path = out.join(format!("{}.space", space.name()));
    let file: &SpaceFile = space.file();
    write_json(&path, file)?;
    println!(
        "space {}: {} points, d_X = {}, mu(X) = {} -> {}",
        space.name(),
        space.len(),
        space.diameter(),
        space.total_measure(),
        path.display()
    );
    Ok(EXIT_OK)
}

/// Everything `space analyze` measures.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometryReport {
    pub space: String,
    pub points: usize,
    pub diameter: f64,
    pub total_measure: f64,
    pub min_distance: f64,
    pub constants: QuasimetricConstants,
    pub doubling: DoublingReport,
    pub nested_balls: NestedBallReport,
    pub ball_chain: BallChainReport,
    pub ahlfors: AhlforsFit,
    /// `b` of `mu B(x, r) <= b r` for `r >= d_min` and its extremal ball.
    pub growth: (f64, (usize, f64, f64)),
}

pub fn analyze(space: &QuasimetricSpace) -> Result<GeometryReport> {
    let constants = space.quasimetric_constants();
    let doubling = space.doubling_constant();
    let nested_balls = space.nested_ball_bound_check(doubling.c_d);
    let ball_chain = space.ball_chain_check(&constants);
    let window = AhlforsWindow::new(space.min_positive_distance(), Some(space.diameter()))?;
    let ahlfors = space.ahlfors_fit(window, None)?;
    Ok(GeometryReport {
        space: space.name().to_string(),
        points: space.len(),
        diameter: space.diameter(),
        total_measure: space.total_measure(),
        min_distance: space.min_positive_distance(),
        constants,
        doubling,
        nested_balls,
        ball_chain,
        ahlfors,
        growth: space.growth_constant(),
    })
}

fn space_analyze(out: &Path, source: &str) -> Result<i32> {
    let space = load_space(source)?;
    let report = analyze(&space)?;
    let path = out.join(format!("{}.geometry.json", space.name()));
    write_json(&path, &report)?;
    println!(
        "{}: C_t={} C_s={} C_d={} d_X={} N0={} a_bar={} b={} ball-chain failures={} -> {}",
        space.name(),
        report.constants.c_t,
        report.constants.c_s,
        report.doubling.c_d,
        report.diameter,
        report.constants.n0,
        report.constants.a_bar,
        report.growth.0,
        report.ball_chain.failures,
        path.display()
    );
    Ok(EXIT_OK)
}

fn parse_variant(s: &str) -> Result<MorreyVariant> {
    let bad = || Error::InvalidParameter(format!("variant `{s}`: expected measure, radius:<gamma> or modified:<dilation>"));
    let (kind, arg) = s.split_once(':').map_or((s, None), |(k, a)| (k, Some(a)));
    let num = || arg.and_then(|a| a.parse::<f64>().ok()).ok_or_else(bad);
    let v = match kind {
        "measure" if arg.is_none() => MorreyVariant::MeasurePower,
        "radius" => MorreyVariant::RadiusPower { gamma: num()? },
        "modified" => MorreyVariant::Modified { dilation: num()? },
        _ => return Err(bad()),
    };
    v.validate()?;
    Ok(v)
}

fn parse_range(s: &str) -> Result<RadiusRange> {
    match s {
        "open" => Ok(RadiusRange::Open),
        "closed" => Ok(RadiusRange::Closed),
        "unbounded" => Ok(RadiusRange::Unbounded),
        _ => Err(Error::InvalidParameter(format!("radius range `{s}`: expected open, closed or unbounded"))),
    }
}

fn required<T>(name: &str, v: Option<T>, norm: &str) -> Result<T> {
    v.ok_or_else(|| Error::InvalidParameter(format!("--{name} is required for the {norm} norm")))
}

pub fn norm_spec(args: &NormArgs) -> Result<NormSpec> {
    let n = args.norm.as_str();
    Ok(match n {
        "lebesgue" => NormSpec::Lebesgue { p: args.p },
        "grand-lebesgue" => NormSpec::GrandLebesgue { p: args.p, theta: required("theta", args.theta, n)? },
        "morrey" => NormSpec::Morrey {
            p: args.p,
            lambda: required("lambda", args.lambda, n)?,
            variant: parse_variant(&args.variant)?,
            range: args.range.as_deref().map(parse_range).transpose()?,
        },
        "grand-morrey" => NormSpec::GrandMorrey {
            p: args.p,
            lambda: required("lambda", args.lambda, n)?,
            phi: required("phi", args.phi.clone(), n)?,
            a: required("A", args.a.clone(), n)?,
            variant: parse_variant(&args.variant)?,
        },
        other => {
            return Err(Error::InvalidParameter(format!(
                "norm `{other}`: expected lebesgue, grand-lebesgue, morrey or grand-morrey"
            )))
        }
    })
}

#[derive(Serialize)]
struct NormOutput<'a> {
    space: &'a str,
    function: String,
    spec: &'a NormSpec,
    report: crate::norms::NormReport,
}

fn norm_eval(out: &Path, args: &NormArgs) -> Result<i32> {
    let space = load_space(&args.space)?;
    let f = GridFunction::load(&args.function)?;
    let spec = norm_spec(args)?;
    let report = spec.prepare(&space)?.evaluate(&f)?;
    let stem = file_stem(&args.function);
    let path = out.join(format!("{}--{stem}--{}.norm.json", args.norm, space.name()));
    let mut line = format!("{} norm of {stem} on {}: {}", args.norm, space.name(), report.value);
    if let Some(e) = report.argmax_eps {
        line.push_str(&format!(" at eps = {e}"));
    }
    if let Some(b) = &report.argmax_ball {
        line.push_str(&format!(" on B(x{}, {})", b.center, b.radius));
    }
    write_json(&path, &NormOutput { space: space.name(), function: stem, spec: &spec, report })?;
    println!("{line} -> {}", path.display());
    Ok(EXIT_OK)
}

fn parse_kernel(s: &str) -> Result<KernelSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: Option<Vec<f64>> = parts[1..].iter().map(|a| a.parse().ok()).collect();
    let bad = || {
        Error::InvalidParameter(format!(
            "kernel `{s}`: expected hilbert, riesz-gamma:<alpha>:<gamma>, riesz-measure:<alpha> or kalpha:<alpha>"
        ))
    };
    let nums = nums.ok_or_else(bad)?;
    match (parts[0], nums.as_slice()) {
        ("hilbert", []) => Ok(KernelSpec::Hilbert),
        ("riesz-gamma", &[alpha, gamma]) => Ok(KernelSpec::RieszGamma { alpha, gamma }),
        ("riesz-measure", &[alpha]) => Ok(KernelSpec::RieszMeasure { alpha }),
        ("kalpha", &[alpha]) => Ok(KernelSpec::KAlpha { alpha }),
        _ => Err(bad()),
    }
}

fn parse_modulus(s: &str) -> Result<ModulusSpec> {
    let bad = || Error::InvalidParameter(format!("modulus `{s}`: expected pow:<exponent> or invlog:<exponent>"));
    let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
    let exponent: f64 = arg.parse().map_err(|_| bad())?;
    match kind {
        "pow" => Ok(ModulusSpec::Power { exponent }),
        "invlog" => Ok(ModulusSpec::InverseLog { exponent }),
        _ => Err(bad()),
    }
}

fn require(name: &str, v: Option<f64>, op: &str) -> Result<f64> {
    v.ok_or_else(|| Error::InvalidParameter(format!("--{name} is required for the {op} operator")))
}

pub fn operator_spec(args: &OpArgs) -> Result<OperatorSpec> {
    let op = args.op.as_str();
    Ok(match op {
        "identity" => OperatorSpec::Identity,
        "maximal" => OperatorSpec::Maximal,
        "modified-maximal" => OperatorSpec::ModifiedMaximal { n0: args.n0 },
        "riesz-gamma" => {
            OperatorSpec::RieszGamma { alpha: require("alpha", args.alpha, op)?, gamma: require("gamma", args.gamma, op)? }
        }
        "riesz-measure" => OperatorSpec::RieszMeasure { alpha: require("alpha", args.alpha, op)? },
        "kalpha" => OperatorSpec::KAlpha { alpha: require("alpha", args.alpha, op)? },
        "cz" => OperatorSpec::CalderonZygmund {
            kernel: args.kernel.kernel.as_deref().map_or(Ok(KernelSpec::Hilbert), parse_kernel)?,
            modulus: args.kernel.modulus.as_deref().map_or(Ok(ModulusSpec::default()), parse_modulus)?,
            filter_constant: args.kernel.filter_constant.unwrap_or(DEFAULT_FILTER_CONSTANT),
        },
        other => {
            return Err(Error::InvalidParameter(format!(
                "operator `{other}`: expected identity, maximal, modified-maximal, riesz-gamma, riesz-measure, kalpha or cz"
            )))
        }
    })
}

fn op_apply(out: &Path, args: &OpArgs) -> Result<i32> {
    let space = load_space(&args.space)?;
    let f = GridFunction::load(&args.function)?;
    let op = Operator::new(operator_spec(args)?, &space)?;
    let u = op.apply(&f)?;
    let stem = file_stem(&args.function);
    fs::create_dir_all(out)?;
    let path = out.join(format!("{}--{stem}--{}.fn", args.op, space.name()));
    u.save(&path)?;
    if let Some(k) = op.kernel_report() {
        write_json(&path.with_extension("kernel.json"), k)?;
    }
    let max = u.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = u.values().iter().copied().fold(f64::INFINITY, f64::min);
    println!("{} applied to {stem} on {}: values in [{min}, {max}] -> {}", args.op, space.name(), path.display());
    Ok(EXIT_OK)
}

/// Numbered aliases accepted by `--theorem`, matched after lowercasing and
/// dropping `-`, `_`, spaces and dots.
const THEOREM_ALIASES: &[(&str, TheoremId)] = &[
    ("prop35", TheoremId::MaximalMorrey),
    ("thm36", TheoremId::MaximalGrand),
    ("prop39", TheoremId::CzMorrey),
    ("thm310", TheoremId::CzGrand),
    ("prop42", TheoremId::RieszMorrey),
    ("thm44", TheoremId::RieszGammaGrand),
    ("cor44", TheoremId::RieszGammaGrand),
    ("thm45", TheoremId::RieszGammaGrandTilde),
    ("prop46", TheoremId::RieszMeasureMorrey),
    ("thm47", TheoremId::RieszMeasureGrand),
    ("lemma51", TheoremId::ModifiedMaximalLp),
    ("lemma52", TheoremId::ModifiedMaximalMorrey),
    ("lemma53", TheoremId::KAlphaMorreyModified),
    ("hedberg", TheoremId::HedbergPointwise),
    ("thm54", TheoremId::KAlphaGrandModified),
];

fn normalize(s: &str) -> String {
    let s = s.to_lowercase();
    let s = s
        .replace("theorem", "thm")
        .replace("proposition", "prop")
        .replace("corollary", "cor");
    s.chars().filter(|c| !matches!(c, '-' | '_' | ' ' | '.')).collect()
}

/// Resolves an inequality id or one of its numbered aliases.
pub fn parse_theorem(s: &str) -> Result<TheoremId> {
    let key = normalize(s);
    let key = key.strip_prefix("lem").filter(|k| !k.starts_with("ma")).map_or(key.clone(), |k| format!("lemma{k}"));
    TheoremId::ALL
        .into_iter()
        .find(|t| normalize(t.name()) == key)
        .or_else(|| THEOREM_ALIASES.iter().find(|(a, _)| *a == key).map(|(_, t)| *t))
        .map_or_else(|| s.parse::<TheoremId>(), Ok)
}

fn parse_theorems(list: &[String]) -> Result<Vec<TheoremId>> {
    if list.iter().any(|s| s == "all") {
        return Ok(TheoremId::ALL.to_vec());
    }
    let mut out: Vec<TheoremId> = Vec::new();
    for s in list {
        let t = parse_theorem(s)?;
        if !out.contains(&t) {
            out.push(t);
        }
    }
    Ok(out)
}

impl CertifyArgs {
    fn flag_params(&self) -> Result<CertParams> {
        Ok(CertParams {
            p: self.p,
            q: self.q,
            lambda: self.lambda,
            alpha: self.alpha,
            gamma: self.gamma,
            phi: self.phi.clone(),
            psi: self.psi.clone(),
            a: self.a.clone(),
            theta1: self.theta1,
            theta2: self.theta2,
            a_slope: self.a_slope,
            delta: self.delta,
            sigma: self.sigma,
            n0: self.n0,
            grid_nodes: self.grid_nodes,
            refinements: self.refinements,
            sharpen: self.no_sharpen.then_some(false),
            kernel: self.kernel.kernel.as_deref().map(parse_kernel).transpose()?,
            modulus: self.kernel.modulus.as_deref().map(parse_modulus).transpose()?,
            filter_constant: self.kernel.filter_constant,
        })
    }
}

#[derive(Serialize)]
struct Timing<'a> {
    inequality: &'a str,
    space: &'a str,
    runtime_seconds: f64,
}

#[derive(Serialize)]
struct PerEpsRow<'a> {
    eps: f64,
    eta: f64,
    ratio: f64,
    theoretical: Option<f64>,
    witness: &'a str,
}

#[derive(Serialize)]
struct RefinementRow {
    level: usize,
    out_nodes: usize,
    in_nodes: usize,
    ratio: f64,
    delta: Option<f64>,
}

/// Writes the report body, its timing sidecar and the CSV tables; returns the report path.
pub fn write_report(out: &Path, report: &CertReport) -> Result<PathBuf> {
    let base = format!("{}--{}", report.inequality, report.space.name);
    let path = out.join(format!("{base}.report.json"));
    write_json(&path, report)?;
    write_json(
        &out.join(format!("{base}.timing.json")),
        &Timing { inequality: &report.inequality, space: &report.space.name, runtime_seconds: report.runtime_seconds },
    )?;
    if let Some(red) = &report.reduction {
        let rows: Vec<PerEpsRow> = red
            .per_eps
            .iter()
            .map(|c| PerEpsRow { eps: c.eps, eta: c.eta, ratio: c.ratio, theoretical: c.theoretical, witness: &c.witness })
            .collect();
        write_csv(&out.join(format!("{base}.per-eps.csv")), &rows)?;
        let rows: Vec<RefinementRow> = red
            .refinement
            .iter()
            .enumerate()
            .map(|(level, s)| RefinementRow {
                level,
                out_nodes: s.out_nodes,
                in_nodes: s.in_nodes,
                ratio: s.ratio,
                delta: s.delta,
            })
            .collect();
        write_csv(&out.join(format!("{base}.refinement.csv")), &rows)?;
    }
    Ok(path)
}

fn certify_run(out: &Path, args: &CertifyArgs) -> Result<i32> {
    let theorems = parse_theorems(&args.theorem)?;
    let space = load_space(&args.space)?;
    let family = generate_family(&space, &FamilySpec::parse(&args.family, args.seed)?)?;
    let file_params = match &args.params {
        Some(path) => serde_json::from_str::<CertParams>(&fs::read_to_string(path)?)?,
        None => CertParams::default(),
    };
    let params = file_params.overlay(&args.flag_params()?);
    let free = match &args.constants {
        Some(path) => FreeConstants { calibrated: true, ..serde_json::from_str(&fs::read_to_string(path)?)? },
        None => FreeConstants::default(),
    };
    fs::create_dir_all(out)?;

    let start = Instant::now();
    let results: Vec<Result<CertReport>> = std::thread::scope(|scope| {
        let handles: Vec<_> = theorems
            .iter()
            .map(|&t| {
                let (space, family, params) = (&space, &family, &params);
                scope.spawn(move || certify_boundedness(t, space, family, params, &free))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("certification thread panicked")).collect()
    });

    let mut code = EXIT_OK;
    for (t, result) in theorems.iter().zip(results) {
        match result {
            Ok(report) => {
                let path = write_report(out, &report)?;
                let constant = report.constant.as_ref().map_or("-".to_string(), |c| format!("{} = {}", c.expression, c.value));
                println!(
                    "{} on {}: {} ratio = {} (witness {}), constant {constant}, calibration {} -> {}",
                    report.inequality,
                    report.space.name,
                    if report.pass { "PASS" } else { "FAIL" },
                    report.ratio.ratio,
                    report.ratio.witness,
                    if report.calibration.active { "active" } else { "symbolic" },
                    path.display()
                );
                if !report.pass {
                    code = code.max(EXIT_CERTIFICATION_FAILED);
                }
            }
            Err(e) => {
                eprintln!("error: {t}: {e}");
                code = code.max(EXIT_INVALID);
            }
        }
    }
    if theorems.len() > 1 {
        println!("{} certifications in {:.1}s", theorems.len(), start.elapsed().as_secs_f64());
    }
    Ok(code)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexEntry {
    pub file: String,
    pub inequality: String,
    pub space: String,
    pub family: String,
    pub pass: bool,
    pub ratio: f64,
    pub constant: Option<f64>,
    pub calibration_active: bool,
    pub refinement_delta: f64,
}

fn index_entry(file: &str, v: &serde_json::Value) -> Option<IndexEntry> {
    let s = |ptr: &str| v.pointer(ptr).and_then(|x| x.as_str()).map(str::to_string);
    Some(IndexEntry {
        file: file.to_string(),
        inequality: s("/inequality")?,
        space: s("/space/name")?,
        family: s("/family/spec/kind").unwrap_or_default(),
        pass: v.pointer("/pass")?.as_bool()?,
        ratio: v.pointer("/ratio/ratio")?.as_f64()?,
        constant: v.pointer("/constant/value").and_then(|x| x.as_f64()),
        calibration_active: v.pointer("/calibration/active")?.as_bool()?,
        refinement_delta: v.pointer("/structural/refinement_delta")?.as_f64()?,
    })
}

fn report_index(dir: &Path) -> Result<i32> {
    let mut names: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".report.json"))
        .collect();
    names.sort();
    let mut entries = Vec::with_capacity(names.len());
    for name in &names {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join(name))?)?;
        let entry = index_entry(name, &v)
            .ok_or_else(|| Error::InvalidParameter(format!("{name} is not a certification report")))?;
        entries.push(entry);
    }
    write_json(&dir.join("index.json"), &entries)?;
    write_csv(&dir.join("index.csv"), &entries)?;
    let passed = entries.iter().filter(|e| e.pass).count();
    println!("indexed {} reports, {passed} pass -> {}", entries.len(), dir.join("index.json").display());
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbered_aliases_resolve() {
        let cases = [
            ("lemma5.2", TheoremId::ModifiedMaximalMorrey),
            ("thm-4.4", TheoremId::RieszGammaGrand),
            ("Theorem 3.6", TheoremId::MaximalGrand),
            ("prop_3.9", TheoremId::CzMorrey),
            ("THM5.4", TheoremId::KAlphaGrandModified),
            ("lem5.1", TheoremId::ModifiedMaximalLp),
            ("maximal-grand", TheoremId::MaximalGrand),
            ("kalpha_grand_modified", TheoremId::KAlphaGrandModified),
        ];
        for (s, t) in cases {
            assert_eq!(parse_theorem(s).unwrap(), t, "{s}");
        }
        assert!(parse_theorem("thm9.9").is_err());
    }

    #[test]
    fn variants_parse() {
        assert_eq!(parse_variant("measure").unwrap(), MorreyVariant::MeasurePower);
        assert_eq!(parse_variant("radius:0.5").unwrap(), MorreyVariant::RadiusPower { gamma: 0.5 });
        assert!(parse_variant("modified").is_err());
        assert!(parse_variant("modified:0.5").is_err());
    }

    #[test]
    fn kernels_parse() {
        assert_eq!(parse_kernel("riesz-gamma:0.5:1").unwrap(), KernelSpec::RieszGamma { alpha: 0.5, gamma: 1.0 });
        assert!(parse_kernel("riesz-gamma:0.5").is_err());
        assert_eq!(parse_modulus("invlog:2").unwrap(), ModulusSpec::InverseLog { exponent: 2.0 });
    }

    #[test]
    fn parse_errors_exit_one() {
        assert_eq!(run(["gmorrey", "frobnicate"]), EXIT_INVALID);
        assert_eq!(run(["gmorrey", "--help"]), EXIT_OK);
    }
}
