//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use loglimit::amoeba::{
    estimate_limit_directions, hausdorff_directions, ingest_points, sample_amoeba, sample_members, write_directions, write_points,
    DirectionTarget, Source,
};
use loglimit::dequant::{dequantize_formula, sandwich_constant};
use loglimit::exact::{assemble_exact, find_threshold, verify_exactness, ConeSpec, GridSpec};
use loglimit::formula::{normalize_polynomial, parse_formula, Formula, ParameterEnvironment};
use loglimit::nonarch::{lambda_membership_hypersurface, LambdaMembership, MembershipConfig, PuiseuxPolynomial};
use loglimit::tropical::{dual_fan, formula_cells, NewtonData, PolyhedralComplex};
use num_rational::Rational64;

use crate::config::{self, Format, Overrides, RunConfig, SEED_VAR};
use crate::{suite, svg};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or unreadable input; exit code 2.
    Usage(String),
    /// A check did not pass or a computation failed; exit code 1.
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

fn failure(e: impl ToString) -> CliError {
    CliError::Failure(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "loglimit", version, about = "Logarithmic limit sets of semi-algebraic sets")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// `t0,ratio,count`.
    #[arg(long, global = true, value_parser = config::parse_t_schedule)]
    pub t_schedule: Option<loglimit::amoeba::TSchedule>,
    /// Samples per value of t.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Sampling box `lo,hi`.
    #[arg(long = "box", global = true, value_parser = config::parse_box, allow_hyphen_values = true)]
    pub log_box: Option<(f64, f64)>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file, or directory for `paper-suite`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Parameter value `name=value`; repeatable.
    #[arg(long = "param", global = true, value_parser = config::parse_param)]
    pub params: Vec<(String, f64)>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the tropical formula and the sandwich constant of each side.
    Dequantize { file: PathBuf },
    /// Sample the deformed amoeba at one value of t.
    Amoeba {
        file: PathBuf,
        #[arg(long)]
        t: f64,
    },
    /// Estimate the limit directions of a formula or a CSV point cloud.
    LimitSet {
        input: PathBuf,
        /// Complex (JSON) to compare with.
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
    },
    /// Cells of the tropical formula, as JSON.
    Cells { file: PathBuf },
    /// Dual fan of a polynomial equation or a Puiseux polynomial file.
    DualFan { file: PathBuf },
    /// Instantiate a Puiseux polynomial; with `--lambda`, test membership.
    PuiseuxEval {
        file: PathBuf,
        #[arg(long)]
        t: f64,
        /// Comma-separated rationals.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<String>,
    },
    /// Positive roots of a univariate Puiseux polynomial along the t schedule.
    Patchwork { file: PathBuf },
    /// Add guards for a cone cover and verify the result on a grid.
    Exact {
        file: PathBuf,
        /// JSON list of cones.
        #[arg(long)]
        cones: PathBuf,
        #[arg(long)]
        target: Option<PathBuf>,
    },
    /// Run the worked examples and print a pass/fail table.
    PaperSuite {
        #[arg(long)]
        only: Option<String>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Formula text with `#` comment lines removed. Polynomial equations with
/// signed coefficients are normalized to positive form.
pub fn load_formula(path: &Path) -> Result<Formula, CliError> {
    let text: String = read(path)?.lines().filter(|l| !l.trim_start().starts_with('#')).collect::<Vec<_>>().join(" ");
    match parse_formula(&text) {
        Ok(f) => Ok(f),
        Err(e) => normalize_polynomial(&text).map_err(|_| usage(format!("{}: {e}", path.display()))),
    }
}

fn environment(cfg: &RunConfig) -> Result<ParameterEnvironment, CliError> {
    ParameterEnvironment::from_pairs(cfg.params.iter().map(|(k, v)| (k.clone(), *v))).map_err(usage)
}

struct Output {
    path: Option<PathBuf>,
    format: Format,
}

impl Output {
    fn emit(&self, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
        match &self.path {
            Some(p) => std::fs::write(p, text).map_err(|e| failure(format!("{}: {e}", p.display()))),
            None => stdout.write_all(text.as_bytes()).map_err(failure),
        }
    }
}

fn to_string(f: impl FnOnce(&mut Vec<u8>) -> loglimit::amoeba::Result<()>) -> Result<String, CliError> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(failure)?;
    Ok(String::from_utf8(buf).expect("utf8"))
}

/// Parses and runs; returns the process exit code.
pub fn main_with(args: impl IntoIterator<Item = String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let env_seed = std::env::var(SEED_VAR).ok();
    match run(cli, env_seed.as_deref(), stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, env_seed: Option<&str>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let base = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(usage)?,
        None => RunConfig::default(),
    };
    let overrides = Overrides {
        seed: cli.seed,
        format: cli.format,
        out: cli.out.clone(),
        t_schedule: cli.t_schedule,
        samples: cli.samples,
        log_box: cli.log_box,
        params: cli.params.clone(),
    };
    let cfg = base.resolve(env_seed, &overrides).map_err(usage)?;
    let out = Output { path: cfg.out.clone(), format: cfg.format() };
    match cli.command {
        Command::Dequantize { file } => dequantize(&load_formula(&file)?, &cfg, &out, stdout),
        Command::Amoeba { file, t } => {
            let f = load_formula(&file)?;
            let cloud = sample_amoeba(&f, &environment(&cfg)?, &cfg.sampler, t, 0).map_err(failure)?;
            let text = match out.format {
                Format::Svg => svg::scatter(&cloud).ok_or_else(|| usage("svg output needs two variables"))?,
                Format::Json => return Err(usage("amoeba supports csv and svg")),
                Format::Csv => to_string(|b| write_points(&cloud, b))?,
            };
            out.emit(&text, stdout)
        }
        Command::LimitSet { input, target, tol } => limit_set(&input, target.as_deref(), tol, &cfg, &out, stdout),
        Command::Cells { file } => {
            let f = load_formula(&file)?;
            let trop = dequantize_formula(&f).map_err(usage)?;
            let cells = formula_cells(&trop, f.arity()).map_err(failure)?;
            out.emit(&format!("{}\n", cells.to_json()), stdout)
        }
        Command::DualFan { file } => {
            let text = read(&file)?;
            let nd = if text.contains("omega") {
                PuiseuxPolynomial::parse(&text).and_then(|p| p.newton_data()).map_err(usage)?
            } else {
                let f = load_formula(&file)?;
                NewtonData::from_equation(&f, f.arity()).map_err(usage)?
            };
            out.emit(&format!("{}\n", dual_fan(&nd).to_json()), stdout)
        }
        Command::PuiseuxEval { file, t, lambda } => puiseux_eval(&read(&file)?, t, lambda.as_deref(), &out, stdout),
        Command::Patchwork { file } => patchwork(&read(&file)?, &cfg, &out, stdout),
        Command::Exact { file, cones, target } => exact(&load_formula(&file)?, &cones, target.as_deref(), &cfg, &out, stdout),
        Command::PaperSuite { only } => {
            let rows = suite::run(cfg.seed(), only.as_deref(), cfg.out.as_deref()).map_err(usage)?;
            stdout.write_all(suite::table(&rows).as_bytes()).map_err(failure)?;
            if rows.iter().all(|r| r.passed) {
                Ok(())
            } else {
                Err(failure("some checks failed"))
            }
        }
    }
}

fn dequantize(f: &Formula, cfg: &RunConfig, out: &Output, stdout: &mut dyn Write) -> Result<(), CliError> {
    if !f.is_positive() {
        return Err(usage("formula is not positive"));
    }
    let trop = dequantize_formula(f).map_err(usage)?;
    let env = environment(cfg)?;
    let mut text = format!("{trop}\n");
    let mut k = 0;
    let mut lines = Vec::new();
    f.visit_atoms(&mut |_, l, r| {
        k += 1;
        let c = |t| sandwich_constant(t, &env).map_or_else(|e| format!("? ({e})"), |c| c.to_string());
        lines.push(format!("atom {k}: C_lhs = {}, C_rhs = {}", c(l), c(r)));
    });
    for l in lines {
        text.push_str(&l);
        text.push('\n');
    }
    out.emit(&text, stdout)
}

fn limit_set(input: &Path, target: Option<&Path>, tol: f64, cfg: &RunConfig, out: &Output, stdout: &mut dyn Write) -> Result<(), CliError> {
    let est = if input.extension().is_some_and(|e| e == "csv") {
        let file = std::fs::File::open(input).map_err(|e| usage(format!("{}: {e}", input.display())))?;
        let cloud = ingest_points(file).map_err(usage)?;
        estimate_limit_directions(Source::Points(&cloud), &cfg.sampler).map_err(failure)?
    } else {
        let f = load_formula(input)?;
        let env = environment(cfg)?;
        estimate_limit_directions(Source::Formula { formula: &f, env: &env }, &cfg.sampler).map_err(failure)?
    };
    let d = &est.estimate;
    let text = match out.format {
        Format::Csv => to_string(|b| write_directions(d, b))?,
        Format::Svg => svg::directions(d).ok_or_else(|| usage("svg output needs two variables"))?,
        Format::Json => {
            let v = serde_json::json!({
                "dim": d.dim,
                "origin_member": d.origin_member,
                "directions": d.directions,
                "t_values": est.t_values,
                "samples_per_t": est.samples_per_t,
            });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("json"))
        }
    };
    out.emit(&text, stdout)?;
    if let Some(p) = target {
        let complex = PolyhedralComplex::from_json(&read(p)?).map_err(usage)?;
        let h = hausdorff_directions(d, DirectionTarget::Complex(&complex)).map_err(failure)?;
        if h > tol {
            return Err(failure(format!("Hausdorff distance {h:.4} exceeds {tol}")));
        }
        if out.path.is_some() {
            writeln!(stdout, "Hausdorff distance {h:.4}").map_err(failure)?;
        }
    }
    Ok(())
}

fn parse_lambda(text: &str) -> Result<Vec<Rational64>, CliError> {
    text.split(',').map(|s| Rational64::from_str(s.trim()).map_err(|_| usage(format!("lambda: not a rational: {s:?}")))).collect()
}

fn puiseux_eval(text: &str, t: f64, lambda: Option<&str>, out: &Output, stdout: &mut dyn Write) -> Result<(), CliError> {
    let f = PuiseuxPolynomial::parse(text).map_err(usage)?;
    let mut s = format!("f_t = {}\n", f.instantiate(t).map_err(usage)?);
    if let Some(l) = lambda {
        let lambda = parse_lambda(l)?;
        s.push_str(&format!("mu = {}\n", f.twisted_minimum(&lambda).map_err(usage)?));
        s.push_str(&format!("initial form = {}\n", f.initial_form(&lambda).map_err(usage)?));
        let m = match lambda_membership_hypersurface(&f, &lambda, &MembershipConfig::default()).map_err(failure)? {
            LambdaMembership::Yes(x) => format!("yes, zero at {x:?}"),
            LambdaMembership::CandidateYes => "candidate (no sign change found)".to_string(),
            LambdaMembership::No => "no".to_string(),
        };
        s.push_str(&format!("membership = {m}\n"));
    }
    out.emit(&s, stdout)
}

fn patchwork(text: &str, cfg: &RunConfig, out: &Output, stdout: &mut dyn Write) -> Result<(), CliError> {
    let f = PuiseuxPolynomial::parse(text).map_err(usage)?;
    let mut s = String::from("t,root,log_root\n");
    for t in cfg.sampler.t_schedule.values() {
        let roots = f.instantiate(t).and_then(|p| p.positive_roots()).map_err(usage)?;
        for r in roots {
            s.push_str(&format!("{t:e},{r:e},{}\n", r.ln() / (1.0 / t).ln()));
        }
    }
    out.emit(&s, stdout)
}

fn exact(f: &Formula, cones: &Path, target: Option<&Path>, cfg: &RunConfig, out: &Output, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cover: Vec<ConeSpec> = serde_json::from_str(&read(cones)?).map_err(|e| usage(format!("{}: {e}", cones.display())))?;
    let env = environment(cfg)?;
    let mut sampler = cfg.sampler.clone();
    // bisected roots only
    sampler.eta0 = f64::MIN_POSITIVE;
    let sample = sample_members(f, &env, &sampler).map_err(failure)?;
    let mut h = loglimit::exact::THRESHOLDS[0];
    for (i, c) in cover.iter().enumerate() {
        match find_threshold(&sample, c).map_err(failure)? {
            Some(hc) => h = h.min(hc),
            None => return Err(failure(format!("cone {i} still meets the sample at every threshold"))),
        }
    }
    let psi = assemble_exact(f, &cover, h, &sample).map_err(failure)?;
    let mut s = format!("{psi}\n");
    let mut bad = 0;
    if let Some(p) = target {
        let complex = PolyhedralComplex::from_json(&read(p)?).map_err(usage)?;
        let report = verify_exactness(&psi, &complex, &GridSpec::default()).map_err(failure)?;
        bad = report.disagreements.len();
        s.push_str(&format!("# checked {} grid points, {bad} disagreements\n", report.checked));
    }
    out.emit(&s, stdout)?;
    if bad > 0 {
        return Err(failure(format!("{bad} grid disagreements")));
    }
    Ok(())
}
