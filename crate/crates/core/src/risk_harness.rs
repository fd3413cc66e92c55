//! Monte Carlo L^p risk of the product-kernel estimator, its bias/stochastic
//! split, rate exponents as exact rationals, log-log rate fits and the
//! numerical hypotheses of the lower-bound lemma.

use crate::densities::{
    log_chi2_affinity, sample, tensor_bump, tensor_gaussian, tensor_plateau, Code, Density, LowerBoundFamily, Word,
};
use crate::error::{check_dim, Error, Result};
use crate::estimator::{bandwidth_rule, kde_mean_field, top_order_norm_sum, truth_on_grid, KdeModel};
use crate::kernel1d::build_order_kernel;
use crate::product_kernel::{q_norm, tensor_kernel, verify_class, ProductKernel};
use crate::quadrature::{self, AxisBox, QuadRule, TensorGrid};
use crate::serde_sig17;
use crate::sobolev::Integrator;
use num_rational::Ratio;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateRegime {
    MixedUpper,
    ClassicalMin,
    ClassicalSum,
    Aniso,
    NoncompactLower,
    NuFold,
}

impl FromStr for RateRegime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mixed-upper" => RateRegime::MixedUpper,
            "classical-min" => RateRegime::ClassicalMin,
            "classical-sum" => RateRegime::ClassicalSum,
            "aniso" => RateRegime::Aniso,
            "noncompact-lower" => RateRegime::NoncompactLower,
            "nu-fold" => RateRegime::NuFold,
            other => {
                return Err(Error::Parameter(format!(
                    "unknown regime {other:?}; expected one of mixed-upper, classical-min, classical-sum, aniso, noncompact-lower, nu-fold"
                )))
            }
        })
    }
}

/// A rate exponent in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rate(pub Ratio<i64>);

impl Rate {
    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn value(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

/// The exponent of n (without the factor p) in the named bound.
pub fn rate_exponent(s: &[usize], d: &[usize], p: f64, regime: RateRegime) -> Result<Rate> {
    if s.is_empty() || s.len() != d.len() {
        return Err(Error::Parameter(format!(
            "s and d need the same positive length, got {} and {}",
            s.len(),
            d.len()
        )));
    }
    if s.iter().chain(d).any(|&v| v == 0) {
        return Err(Error::Parameter("orders and dimensions must be positive".into()));
    }
    quadrature::check_exponent(p)?;
    let q = |v: usize| Ratio::from_integer(v as i64);
    let big_s: usize = s.iter().sum();
    let big_d: usize = d.iter().sum();
    let r = match regime {
        RateRegime::MixedUpper | RateRegime::ClassicalSum | RateRegime::NuFold => q(big_s) / (q(2 * big_s) + q(big_d)),
        RateRegime::ClassicalMin => {
            let m = *s.iter().min().expect("non-empty");
            q(m) / (q(2 * m) + q(big_d))
        }
        RateRegime::Aniso => {
            let denom = s.iter().zip(d).fold(q(2), |acc, (&si, &di)| acc + q(di) / q(si));
            Ratio::from_integer(1) / denom
        }
        RateRegime::NoncompactLower => {
            let pr = Ratio::<i64>::approximate_float(p)
                .ok_or_else(|| Error::Parameter(format!("p = {p} has no rational approximation")))?;
            let pm1 = pr - Ratio::from_integer(1);
            q(big_s) * pm1 / (q(big_s) * pr + q(big_d) * pm1)
        }
    };
    Ok(Rate(r))
}

/// Least-squares fit of log risk against log n.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub stderr: f64,
}

pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::Parameter(format!(
            "rate fitting needs at least 3 points, got {}",
            points.len()
        )));
    }
    for &(n, r) in points {
        if !(r > 0.0) || !(n > 0.0) {
            return Err(Error::Domain(format!(
                "log fit needs positive n and risk, got ({n}, {r})"
            )));
        }
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Domain("all sample sizes coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icept - slope * x).powi(2)).sum();
    let stderr = (ssr / (k - 2.0) / sxx).sqrt();
    Ok(RateFit { slope, stderr })
}

/// Registered truth densities for JSON experiment files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", try_from = "TruthRepr")]
pub enum TruthSpec {
    Bump { centers: Vec<f64>, half_widths: Vec<f64> },
    Gaussian { means: Vec<f64>, sds: Vec<f64> },
    Plateau { dim: usize, big_n: f64, kappa: f64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TruthRepr {
    name: String,
    centers: Option<Vec<f64>>,
    half_widths: Option<Vec<f64>>,
    means: Option<Vec<f64>>,
    sds: Option<Vec<f64>>,
    dim: Option<usize>,
    big_n: Option<f64>,
    kappa: Option<f64>,
}

impl TryFrom<TruthRepr> for TruthSpec {
    type Error = String;

    fn try_from(r: TruthRepr) -> std::result::Result<Self, String> {
        fn need<T>(v: Option<T>, field: &str, name: &str) -> std::result::Result<T, String> {
            v.ok_or_else(|| format!("truth {name} needs {field}"))
        }
        let extra = |present: bool, field: &str| {
            if present {
                Err(format!("truth {} does not take {field}", r.name))
            } else {
                Ok(())
            }
        };
        match r.name.as_str() {
            "bump" => {
                extra(r.means.is_some() || r.sds.is_some() || r.dim.is_some(), "means/sds/dim")?;
                extra(r.big_n.is_some() || r.kappa.is_some(), "big_n/kappa")?;
                Ok(TruthSpec::Bump {
                    centers: need(r.centers, "centers", "bump")?,
                    half_widths: need(r.half_widths, "half_widths", "bump")?,
                })
            }
            "gaussian" => {
                extra(
                    r.centers.is_some() || r.half_widths.is_some() || r.dim.is_some(),
                    "centers/half_widths/dim",
                )?;
                extra(r.big_n.is_some() || r.kappa.is_some(), "big_n/kappa")?;
                Ok(TruthSpec::Gaussian {
                    means: need(r.means, "means", "gaussian")?,
                    sds: need(r.sds, "sds", "gaussian")?,
                })
            }
            "plateau" => {
                extra(r.centers.is_some() || r.half_widths.is_some(), "centers/half_widths")?;
                extra(r.means.is_some() || r.sds.is_some(), "means/sds")?;
                Ok(TruthSpec::Plateau {
                    dim: need(r.dim, "dim", "plateau")?,
                    big_n: need(r.big_n, "big_n", "plateau")?,
                    kappa: need(r.kappa, "kappa", "plateau")?,
                })
            }
            other => Err(format!("unknown truth {other}")),
        }
    }
}

impl TruthSpec {
    pub fn build(&self) -> Result<Density> {
        match self {
            TruthSpec::Bump { centers, half_widths } => tensor_bump(centers, half_widths),
            TruthSpec::Gaussian { means, sds } => tensor_gaussian(means, sds),
            TruthSpec::Plateau { dim, big_n, kappa } => tensor_plateau(*dim, *big_n, *kappa),
        }
    }
}

fn yes() -> bool {
    true
}

/// A tensor of Legendre kernels of orders s1, s2 on d1 + d2 axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub s1: usize,
    pub s2: usize,
    pub d1: usize,
    pub d2: usize,
    #[serde(default = "yes")]
    pub strict: bool,
}

impl KernelSpec {
    pub fn build(&self) -> Result<ProductKernel> {
        tensor_kernel(
            build_order_kernel(self.s1, self.strict)?,
            self.d1,
            build_order_kernel(self.s2, self.strict)?,
            self.d2,
            self.s1,
            self.s2,
        )
    }
}

/// The JSON form of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub truth: TruthSpec,
    pub kernel: KernelSpec,
    pub p: f64,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    #[serde(default)]
    pub eval_box: Option<AxisBox>,
    #[serde(default)]
    pub eval_rule: Option<QuadRule>,
    pub master_seed: u64,
    #[serde(default)]
    pub slope_tolerance: Option<f64>,
}

pub const DEFAULT_SLOPE_TOLERANCE: f64 = 0.15;
pub const DEFAULT_REPLICATES: usize = 100;
const RISK_NODES_PER_PANEL: usize = 4;

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub truth: Density,
    pub kernel: ProductKernel,
    pub p: f64,
    pub sample_sizes: Vec<usize>,
    pub replicates: usize,
    pub eval_box: AxisBox,
    pub eval_rule: QuadRule,
    pub master_seed: u64,
    /// Allowed |fitted slope + p·rate| for the summary's pass flag.
    pub slope_tolerance: f64,
}

impl ExperimentConfig {
    /// A configuration with the default evaluation box (support padded by
    /// the largest h) and panels of width min(h_min, feature scale)/2.
    pub fn new(
        truth: Density,
        kernel: ProductKernel,
        p: f64,
        sample_sizes: Vec<usize>,
        replicates: usize,
        master_seed: u64,
    ) -> Result<Self> {
        check_sizes(&sample_sizes)?;
        check_dim(kernel.dim(), truth.dim())?;
        let h = |n: usize| bandwidth_rule(n, kernel.s1, kernel.s2, kernel.d1, kernel.d2);
        let h_max = h(sample_sizes[0])?;
        let h_min = h(*sample_sizes.last().expect("checked non-empty"))?;
        let eval_box = truth.support().padded(h_max)?;
        let rule = QuadRule::resolving(&eval_box, h_min.min(truth.feature_scale()), RISK_NODES_PER_PANEL)?;
        let cfg = ExperimentConfig {
            truth,
            kernel,
            p,
            sample_sizes,
            replicates,
            eval_box,
            eval_rule: rule,
            master_seed,
            slope_tolerance: DEFAULT_SLOPE_TOLERANCE,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_spec(spec: &ExperimentSpec) -> Result<Self> {
        let mut cfg = ExperimentConfig::new(
            spec.truth.build()?,
            spec.kernel.build()?,
            spec.p,
            spec.sample_sizes.clone(),
            spec.replicates,
            spec.master_seed,
        )?;
        if let Some(b) = &spec.eval_box {
            cfg.eval_box = b.clone();
        }
        if let Some(r) = &spec.eval_rule {
            cfg.eval_rule = r.clone();
        }
        if let Some(t) = spec.slope_tolerance {
            cfg.slope_tolerance = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(text)?;
        ExperimentConfig::from_spec(&spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_sizes(&self.sample_sizes)?;
        quadrature::check_exponent(self.p)?;
        if self.replicates == 0 {
            return Err(Error::Parameter("replicates must be positive".into()));
        }
        if self.p < 2.0 && !self.truth.is_compact() {
            return Err(Error::Regime(format!(
                "p = {} < 2 needs a compactly supported truth; {} is not",
                self.p,
                self.truth.name()
            )));
        }
        check_dim(self.truth.dim(), self.kernel.dim())?;
        check_dim(self.truth.dim(), self.eval_box.dim())?;
        check_dim(self.truth.dim(), self.eval_rule.dim())?;
        if !(self.slope_tolerance > 0.0) {
            return Err(Error::Parameter("slope tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn bandwidth(&self, n: usize) -> Result<f64> {
        let k = &self.kernel;
        bandwidth_rule(n, k.s1, k.s2, k.d1, k.d2)
    }

    /// p·(s1+s2)/(2(s1+s2)+d1+d2).
    pub fn theoretical_exponent(&self) -> Result<f64> {
        let k = &self.kernel;
        let r = rate_exponent(&[k.s1, k.s2], &[k.d1, k.d2], self.p, RateRegime::MixedUpper)?;
        Ok(self.p * r.value())
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 3 {
        return Err(Error::Parameter(format!(
            "need at least 3 sample sizes, got {}",
            sizes.len()
        )));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("sample sizes must be strictly increasing".into()));
    }
    if sizes[0] < 2 {
        return Err(Error::Parameter("sample sizes must be at least 2".into()));
    }
    Ok(())
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the (n, replicate) cell.
pub fn cell_seed(master: u64, n: usize, replicate: usize) -> u64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    let a = mix64(master ^ GOLDEN);
    let b = mix64(a ^ (n as u64).wrapping_mul(GOLDEN));
    mix64(b ^ (replicate as u64).wrapping_add(GOLDEN))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiskCell {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub h: f64,
    pub risk: f64,
    pub bias_p: f64,
    pub stochastic_p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanRisk {
    pub n: usize,
    pub h: f64,
    pub mean_risk: f64,
    pub bias_p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiskReport {
    pub cells: Vec<RiskCell>,
    pub means: Vec<MeanRisk>,
    pub fitted_slope: f64,
    pub slope_stderr: f64,
    pub theoretical_exponent: f64,
    pub slope_tolerance: f64,
}

/// What `risk-run` writes next to the CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiskSummary {
    #[serde(serialize_with = "serde_sig17::f64")]
    pub fitted_slope: f64,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub slope_stderr: f64,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub theoretical_exponent: f64,
    pub pass: bool,
}

impl RiskReport {
    /// Whether the fitted slope lies within tolerance of −p·rate.
    pub fn pass(&self) -> bool {
        (self.fitted_slope + self.theoretical_exponent).abs() <= self.slope_tolerance
    }

    pub fn summary(&self) -> RiskSummary {
        RiskSummary {
            fitted_slope: self.fitted_slope,
            slope_stderr: self.slope_stderr,
            theoretical_exponent: self.theoretical_exponent,
            pass: self.pass(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,replicate,seed,h,risk,bias_p,stochastic_p")?;
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.n,
                c.replicate,
                c.seed,
                serde_sig17::format(c.h),
                serde_sig17::format(c.risk),
                serde_sig17::format(c.bias_p),
                serde_sig17::format(c.stochastic_p)
            )?;
        }
        Ok(())
    }

    /// Write `path` (CSV) and `<stem>.summary.json` beside it.
    pub fn save(&self, path: &Path) -> Result<std::path::PathBuf> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        std::fs::write(path, buf)?;
        let summary_path = path.with_extension("summary.json");
        let mut text = serde_json::to_string_pretty(&self.summary())?;
        text.push('\n');
        std::fs::write(&summary_path, text)?;
        Ok(summary_path)
    }
}

/// Monte Carlo risk over every (n, replicate) cell on the global rayon pool.
pub fn mc_risk(cfg: &ExperimentConfig) -> Result<RiskReport> {
    cfg.validate()?;
    let grid = TensorGrid::new(&cfg.eval_box, &cfg.eval_rule)?;
    let weights = grid.flat_weights();
    let truth = truth_on_grid(&cfg.truth, &grid);
    let p = cfg.p;
    let lp_pow = |a: &[f64], b: &[f64]| -> f64 {
        weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * quadrature::pow_abs(x - y, p))
            .sum()
    };

    struct PerN {
        n: usize,
        h: f64,
        mean: Vec<f64>,
        bias_p: f64,
    }
    let per_n = cfg
        .sample_sizes
        .iter()
        .map(|&n| {
            let h = cfg.bandwidth(n)?;
            let mean = kde_mean_field(&cfg.kernel, h, &cfg.truth)?.eval_grid(&grid)?;
            let bias_p = lp_pow(&mean, &truth);
            Ok(PerN { n, h, mean, bias_p })
        })
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..per_n.len())
        .flat_map(|i| (0..cfg.replicates).map(move |r| (i, r)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(i, replicate)| {
            let pn = &per_n[i];
            let seed = cell_seed(cfg.master_seed, pn.n, replicate);
            let pts = sample(&cfg.truth, seed, pn.n)?;
            let model = KdeModel::new(cfg.kernel.clone(), pn.h, pts)?;
            let fhat = model.eval_grid(&grid)?;
            Ok(RiskCell {
                n: pn.n,
                replicate,
                seed,
                h: pn.h,
                risk: lp_pow(&fhat, &truth),
                bias_p: pn.bias_p,
                stochastic_p: lp_pow(&fhat, &pn.mean),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let means: Vec<MeanRisk> = per_n
        .iter()
        .enumerate()
        .map(|(i, pn)| {
            let block = &cells[i * cfg.replicates..(i + 1) * cfg.replicates];
            MeanRisk {
                n: pn.n,
                h: pn.h,
                mean_risk: block.iter().map(|c| c.risk).sum::<f64>() / cfg.replicates as f64,
                bias_p: pn.bias_p,
            }
        })
        .collect();
    let fit = fit_rate(&means.iter().map(|m| (m.n as f64, m.mean_risk)).collect::<Vec<_>>())?;
    Ok(RiskReport {
        cells,
        means,
        fitted_slope: fit.slope,
        slope_stderr: fit.stderr,
        theoretical_exponent: cfg.theoretical_exponent()?,
        slope_tolerance: cfg.slope_tolerance,
    })
}

/// [`mc_risk`] on a dedicated pool of `threads` workers.
pub fn mc_risk_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<RiskReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start {threads} workers: {e}")))?;
    pool.install(|| mc_risk(cfg))
}

/// Rosenthal constant used when none is supplied.
pub const DEFAULT_ROSENTHAL_CONSTANT: f64 = 1.0;

/// The three terms of the risk-bound constant; the total is
/// 2^{p−1}(bias + c_p·variance + c_p·spread).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundTerms {
    pub p: f64,
    pub c_p: f64,
    /// (I_{(s1,s2)} Σ ‖∂^α f‖_p)^p
    pub bias: f64,
    /// 2^{p−2} ‖K‖_∞^{p−2} ‖K‖_2²
    pub variance: f64,
    /// ‖K‖_2^p ‖f‖_{p/2}^{p/2}
    pub spread: f64,
}

impl BoundTerms {
    pub fn total(&self) -> f64 {
        2f64.powf(self.p - 1.0) * (self.bias + self.c_p * self.variance + self.c_p * self.spread)
    }
}

pub fn upper_bound_terms(kernel: &ProductKernel, truth: &Density, p: f64, c_p: f64) -> Result<BoundTerms> {
    if !(p >= 2.0) {
        return Err(Error::Regime(format!("the explicit constant needs p ≥ 2, got {p}")));
    }
    quadrature::check_exponent(p)?;
    check_dim(kernel.dim(), truth.dim())?;
    let report = verify_class(kernel, 1e-8, &QuadRule::uniform(1, 16, 1)?)?;
    let sum = top_order_norm_sum(truth, kernel.s1, kernel.s2, kernel.d1, kernel.d2, p)?;
    let bias = (report.i_s1_s2 * sum).powf(p);
    let k2 = q_norm(kernel, 2.0)?;
    let kinf = kernel.sup_norm();
    let variance = 2f64.powf(p - 2.0) * kinf.powf(p - 2.0) * k2 * k2;
    let half = p / 2.0;
    let f_half = Integrator::default().integrate(truth.field(), |x| quadrature::pow_abs(truth.eval(x), half))?;
    let spread = k2.powf(p) * f_half;
    Ok(BoundTerms {
        p,
        c_p,
        bias,
        variance,
        spread,
    })
}

/// The constant c with E‖f̂ − f‖_p^p ≤ c n^{−p(s1+s2)/(2(s1+s2)+d1+d2)},
/// up to the Rosenthal constant c_p.
pub fn upper_bound_constant(kernel: &ProductKernel, truth: &Density, p: f64, c_p: f64) -> Result<f64> {
    Ok(upper_bound_terms(kernel, truth, p, c_p)?.total())
}

/// Words averaged over by [`verify_lower_hypotheses`].
pub const C0_SUBSAMPLE: usize = 4096;

const L11_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerHypotheses {
    #[serde(serialize_with = "serde_sig17::f64")]
    pub rho_n: f64,
    /// min_{ω≠ω′} ‖f_ω − f_ω′‖_p
    #[serde(serialize_with = "serde_sig17::f64")]
    pub min_distance: f64,
    #[serde(rename = "condition_L11")]
    pub condition_l11: bool,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub c0_estimate: f64,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub log_c0_estimate: f64,
    /// C_2 n N^{2D} A², the logarithm of the bound on c_0.
    #[serde(serialize_with = "serde_sig17::f64")]
    pub log_c0_bound: f64,
    pub words_averaged: usize,
}

impl LowerHypotheses {
    pub fn c0_within_bound(&self) -> bool {
        self.log_c0_estimate <= self.log_c0_bound + (1e-9f64).ln_1p()
    }
}

pub fn verify_lower_hypotheses(fam: &LowerBoundFamily, n: u64) -> Result<LowerHypotheses> {
    let params = &fam.params;
    let words = &fam.code.words;
    if words.is_empty() {
        return Err(Error::Parameter("the family has no codewords".into()));
    }
    let rho_n = params.rho_n()?;
    let dd = params.dim() as f64;
    let min_distance = match fam.code.min_distance() {
        None => f64::INFINITY,
        Some(hamming) => {
            (params.a.powf(params.p) * hamming as f64 * params.sigma.powf(dd) * fam.g_norms.lp.powf(params.p * dd))
                .powf(1.0 / params.p)
        }
    };
    let condition_l11 = min_distance >= 2.0 * rho_n * (1.0 - L11_SLACK);

    let chosen: Vec<&Word> = if words.len() > C0_SUBSAMPLE {
        let mut rng = ChaCha8Rng::seed_from_u64(n);
        let mut idx = index::sample(&mut rng, words.len(), C0_SUBSAMPLE).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| &words[i]).collect()
    } else {
        words.iter().collect()
    };
    let logs = chosen
        .iter()
        .map(|w| log_chi2_affinity(fam, w, n))
        .collect::<Result<Vec<_>>>()?;
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_mean = top + (logs.iter().map(|l| (l - top).exp()).sum::<f64>() / logs.len() as f64).ln();
    let c = &fam.constants;
    let log_c0_bound = c.c2 * n as f64 * params.big_n.powf(2.0 * dd) * params.a * params.a;
    Ok(LowerHypotheses {
        rho_n,
        min_distance,
        condition_l11,
        c0_estimate: log_mean.exp(),
        log_c0_estimate: log_mean,
        log_c0_bound,
        words_averaged: chosen.len(),
    })
}

/// Check that |P| ≥ 2^{m/8} and min distance ≥ ⌈m/8⌉.
pub fn vg_satisfied(c: &Code) -> bool {
    c.words.len() as f64 >= c.target_size && c.min_distance().is_none_or(|d| d >= c.min_distance_required)
}
