//! The `mixkde` command line.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on usage errors
//! (bad flags, unreadable or malformed input files).

use crate::densities::{
    build_family, chi2_affinity_quadrature, choose_parameters, family_distance, family_distance_quadrature,
    log_chi2_affinity, FamilySummary, LowerBoundFamily, ParameterRequest, Word,
};
use crate::error::Error;
use crate::kernel1d::{build_order_kernel, verify_order, OrderReport, UnivariateKernel};
use crate::product_kernel::{strict_tensor_kernel, tensor_kernel, verify_class, ClassReport, ProductKernel};
use crate::quadrature::QuadRule;
use crate::risk_harness::{
    mc_risk_with_threads, rate_exponent, verify_lower_hypotheses, ExperimentConfig, LowerHypotheses,
};
use crate::serde_sig17;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "mixkde",
    version,
    about = "Product-kernel density estimation under mixed smoothness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build an order-s kernel on [-1,1], or a tensor kernel with --s/--d.
    KernelBuild(KernelBuildArgs),
    /// Check a kernel JSON file against a claimed order.
    KernelVerify(KernelVerifyArgs),
    /// Print a rate exponent as num/den and as a decimal.
    Rate(RateArgs),
    /// Choose lower-bound family parameters and export them.
    FamilyBuild(FamilyArgs),
    /// Build the family and check its identities and hypotheses.
    FamilyVerify(FamilyArgs),
    /// Run a Monte Carlo risk experiment from a JSON config.
    RiskRun(RiskArgs),
}

#[derive(Args, Debug)]
struct KernelBuildArgs {
    /// Order of a univariate kernel.
    #[arg(long)]
    order: Option<usize>,
    /// Orders s1,s2 of a tensor kernel.
    #[arg(long, value_parser = parse_pair)]
    s: Option<(usize, usize)>,
    /// Block dimensions d1,d2 of a tensor kernel.
    #[arg(long, value_parser = parse_pair)]
    d: Option<(usize, usize)>,
    /// Make moment s vanish as well.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct KernelVerifyArgs {
    /// Kernel JSON (univariate or tensor).
    #[arg(long)]
    config: PathBuf,
    /// Claimed order of a univariate kernel.
    #[arg(long)]
    order: Option<usize>,
    /// Claimed orders s1,s2 of a tensor kernel.
    #[arg(long, value_parser = parse_pair)]
    s: Option<(usize, usize)>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RateArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    s: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    d: Vec<usize>,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// mixed-upper, classical-min, classical-sum, aniso, noncompact-lower or nu-fold.
    #[arg(long)]
    regime: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyRegime {
    Compact,
    Noncompact,
}

#[derive(Args, Debug)]
struct FamilyArgs {
    #[arg(long, value_parser = parse_pair)]
    s: (usize, usize),
    #[arg(long, value_parser = parse_pair)]
    d: (usize, usize),
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Radius of the smoothness ball.
    #[arg(long)]
    r: f64,
    /// Sample size.
    #[arg(long)]
    n: u64,
    #[arg(long, value_enum, default_value = "compact")]
    regime: FamilyRegime,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RiskArgs {
    #[arg(long)]
    config: PathBuf,
    /// CSV path; the summary goes to <stem>.summary.json.
    #[arg(long, default_value = "risk.csv")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    replicates: Option<usize>,
}

enum Failure {
    Usage(String),
    Compute(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

type Outcome = std::result::Result<bool, Failure>;

/// Run with process argv-style arguments; returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::KernelBuild(a) => kernel_build(a, out),
        Command::KernelVerify(a) => kernel_verify(a, out),
        Command::Rate(a) => rate(a, out),
        Command::FamilyBuild(a) => family_build(a, out),
        Command::FamilyVerify(a) => family_verify(a, out),
        Command::RiskRun(a) => risk_run(a, out),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Compute(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, format!("{text}\n")).map_err(|e| Failure::Compute(e.into())),
        None => writeln!(out, "{text}").map_err(|e| Failure::Compute(e.into())),
    }
}

fn read_input(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_pair(text: &str) -> std::result::Result<(usize, usize), String> {
    let parts: Vec<&str> = text.split(',').collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.trim().parse().map_err(|e| format!("{a}: {e}"))?,
            b.trim().parse().map_err(|e| format!("{b}: {e}"))?,
        )),
        _ => Err(format!("expected two comma-separated integers, got {text}")),
    }
}

fn kernel_build(a: KernelBuildArgs, out: &mut dyn Write) -> Outcome {
    let text = match (a.order, a.s, a.d) {
        (Some(order), None, None) => build_order_kernel(order, a.strict)?.to_json()?,
        (None, Some((s1, s2)), Some((d1, d2))) => {
            let k = if a.strict {
                strict_tensor_kernel(s1, s2, d1, d2)?
            } else {
                tensor_kernel(
                    build_order_kernel(s1, false)?,
                    d1,
                    build_order_kernel(s2, false)?,
                    d2,
                    s1,
                    s2,
                )?
            };
            k.to_json()?
        }
        _ => return Err(Failure::Usage("give either --order, or both --s and --d".into())),
    };
    emit(&text, a.out.as_deref(), out)?;
    Ok(true)
}

#[derive(Serialize)]
#[serde(untagged)]
enum VerifyReport {
    Univariate(OrderReport),
    Tensor(ClassReport),
}

fn kernel_verify(a: KernelVerifyArgs, out: &mut dyn Write) -> Outcome {
    let text = read_input(&a.config)?;
    let (report, pass) = if let Ok(k) = serde_json::from_str::<ProductKernel>(&text) {
        let mut k = k;
        if let Some((s1, s2)) = a.s {
            k.s1 = s1;
            k.s2 = s2;
        }
        let r = verify_class(&k, a.tol, &QuadRule::uniform(1, 16, 1)?)?;
        let pass = r.pass;
        (VerifyReport::Tensor(r), pass)
    } else {
        let k: UnivariateKernel = serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("{} is not a kernel: {e}", a.config.display())))?;
        let order = a.order.unwrap_or(k.order);
        let r = verify_order(&k, order, a.tol)?;
        let pass = r.pass;
        (VerifyReport::Univariate(r), pass)
    };
    emit(
        &serde_json::to_string_pretty(&report).map_err(Error::from)?,
        a.out.as_deref(),
        out,
    )?;
    Ok(pass)
}

fn rate(a: RateArgs, out: &mut dyn Write) -> Outcome {
    let regime = a.regime.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
    let r = rate_exponent(&a.s, &a.d, a.p, regime)?;
    writeln!(out, "{r}\n{:.15}", r.value()).map_err(Error::from)?;
    Ok(true)
}

fn family(a: &FamilyArgs) -> Result<LowerBoundFamily, Failure> {
    let req = ParameterRequest::new(
        a.n,
        a.r,
        a.p,
        a.s.0,
        a.s.1,
        a.d.0,
        a.d.1,
        matches!(a.regime, FamilyRegime::Compact),
    );
    let params = choose_parameters(&req)?;
    Ok(build_family(&params)?)
}

fn family_build(a: FamilyArgs, out: &mut dyn Write) -> Outcome {
    let fam = family(&a)?;
    let text = serde_json::to_string_pretty(&fam.summary()).map_err(Error::from)?;
    emit(&text, a.out.as_deref(), out)?;
    Ok(true)
}

/// Largest hull grid (in nodes) for the quadrature cross-checks.
const MAX_CHECK_NODES: usize = 1 << 24;
const CHECK_NODES_PER_PANEL: usize = 16;

#[derive(Serialize)]
struct Identity {
    #[serde(serialize_with = "serde_sig17::f64")]
    closed: f64,
    #[serde(serialize_with = "serde_sig17::f64")]
    quadrature: f64,
    #[serde(serialize_with = "serde_sig17::f64")]
    relative_defect: f64,
}

impl Identity {
    fn new(closed: f64, quadrature: f64) -> Self {
        Identity {
            closed,
            quadrature,
            relative_defect: (closed - quadrature).abs() / closed.abs().max(f64::MIN_POSITIVE),
        }
    }
}

#[derive(Serialize)]
struct FamilyVerification {
    #[serde(flatten)]
    summary: FamilySummary,
    hypotheses: LowerHypotheses,
    c0_within_bound: bool,
    distance_identity: Option<Identity>,
    chi2_identity: Option<Identity>,
    pass: bool,
}

fn family_verify(a: FamilyArgs, out: &mut dyn Write) -> Outcome {
    let fam = family(&a)?;
    let hypotheses = verify_lower_hypotheses(&fam, a.n)?;
    let c0_within_bound = hypotheses.c0_within_bound();
    let mut pass = hypotheses.condition_l11 && c0_within_bound;
    let per_axis = 16 * fam.params.m * CHECK_NODES_PER_PANEL;
    let small = (per_axis as f64).powi(fam.params.dim() as i32) <= MAX_CHECK_NODES as f64;
    let (distance_identity, chi2_identity) = if small && fam.code.words.len() >= 2 {
        let (w0, w1) = (&fam.code.words[0], &fam.code.words[1]);
        let d = Identity::new(
            family_distance(&fam, w0, w1)?,
            family_distance_quadrature(&fam, w0, w1, CHECK_NODES_PER_PANEL)?,
        );
        let ones = Word::ones(fam.block_count());
        let closed = log_chi2_affinity(&fam, &ones, 1)?.exp_m1();
        let c = Identity::new(closed, chi2_affinity_quadrature(&fam, &ones, CHECK_NODES_PER_PANEL)?);
        pass &= d.relative_defect <= a.tol && c.relative_defect <= a.tol;
        (Some(d), Some(c))
    } else {
        (None, None)
    };
    let report = FamilyVerification {
        summary: fam.summary(),
        hypotheses,
        c0_within_bound,
        distance_identity,
        chi2_identity,
        pass,
    };
    emit(
        &serde_json::to_string_pretty(&report).map_err(Error::from)?,
        a.out.as_deref(),
        out,
    )?;
    Ok(pass)
}

fn risk_run(a: RiskArgs, out: &mut dyn Write) -> Outcome {
    let text = read_input(&a.config)?;
    let mut cfg = ExperimentConfig::from_json(&text)
        .and_then(|c| c.validate().map(|_| c))
        .map_err(|e| Failure::Usage(format!("{}: {e}", a.config.display())))?;
    if let Some(seed) = a.seed {
        cfg.master_seed = seed;
    }
    if let Some(r) = a.replicates {
        cfg.replicates = r;
    }
    if a.threads == 0 {
        return Err(Failure::Usage("--threads must be positive".into()));
    }
    let report = mc_risk_with_threads(&cfg, a.threads)?;
    let summary_path = report.save(&a.out)?;
    let s = report.summary();
    writeln!(
        out,
        "fitted slope {:.6} (stderr {:.6}), expected {:.6}; summary in {}",
        s.fitted_slope,
        s.slope_stderr,
        -s.theoretical_exponent,
        summary_path.display()
    )
    .map_err(Error::from)?;
    Ok(s.pass)
}
