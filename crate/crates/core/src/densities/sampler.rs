//! Tabulated inverse-CDF and rejection samplers.

use super::profile::Profile;
use crate::error::{Error, Result};
use crate::quadrature::AxisBox;
use crate::sobolev::DifferentiableField;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Knots of each tabulated marginal CDF.
pub const CDF_TABLE_KNOTS: usize = 16_385;

/// Acceptance rates below this make rejection sampling degenerate.
pub const MIN_ACCEPTANCE: f64 = 1e-3;

/// Cumulative trapezoid table of a univariate density, inverted by
/// bisection plus linear interpolation.
#[derive(Clone, Debug)]
pub struct AxisCdf {
    lo: f64,
    step: f64,
    cumulative: Vec<f64>,
}

impl AxisCdf {
    pub fn tabulate(profile: &dyn Profile) -> Result<Self> {
        let (lo, hi) = profile.support();
        let step = (hi - lo) / (CDF_TABLE_KNOTS - 1) as f64;
        let values: Vec<f64> = (0..CDF_TABLE_KNOTS)
            .map(|i| profile.value(lo + i as f64 * step).max(0.0))
            .collect();
        let mut cumulative = Vec::with_capacity(CDF_TABLE_KNOTS);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for pair in values.windows(2) {
            acc += 0.5 * (pair[0] + pair[1]) * step;
            cumulative.push(acc);
        }
        if !(acc > 0.0 && acc.is_finite()) {
            return Err(Error::Construction(format!("marginal has non-positive mass {acc}")));
        }
        for c in &mut cumulative {
            *c /= acc;
        }
        Ok(AxisCdf { lo, step, cumulative })
    }

    /// The tabulated CDF at x, linear between knots.
    pub fn cdf(&self, x: f64) -> f64 {
        let pos = (x - self.lo) / self.step;
        if pos <= 0.0 {
            return 0.0;
        }
        let last = self.cumulative.len() - 1;
        if pos >= last as f64 {
            return 1.0;
        }
        let i = pos.floor() as usize;
        let t = pos - i as f64;
        self.cumulative[i] + t * (self.cumulative[i + 1] - self.cumulative[i])
    }

    /// Inverse of [`AxisCdf::cdf`] at u ∈ [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let i = self
            .cumulative
            .partition_point(|&c| c <= u)
            .clamp(1, self.cumulative.len() - 1)
            - 1;
        let (c0, c1) = (self.cumulative[i], self.cumulative[i + 1]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.lo + (i as f64 + t.clamp(0.0, 1.0)) * self.step
    }
}

/// Points in ℝ^dim stored row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(Error::Parameter(format!(
                "{} coordinates do not form points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(PointSet { dim, coords })
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            crate::error::check_dim(dim, p.len())?;
            coords.extend_from_slice(p);
        }
        PointSet::new(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Points of `self` followed by those of `other`.
    pub fn concat(&self, other: &PointSet) -> Result<PointSet> {
        crate::error::check_dim(self.dim, other.dim)?;
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        PointSet::new(self.dim, coords)
    }

    /// Every point shifted by `v`.
    pub fn translated(&self, v: &[f64]) -> Result<PointSet> {
        crate::error::check_dim(self.dim, v.len())?;
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(v).map(|(a, b)| a + b))
            .collect();
        PointSet::new(self.dim, coords)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    PerAxisInverseCdf,
    Rejection,
}

/// Draws from f_target ≤ f_base + slack on `envelope_box`, proposing from the
/// mixture of f_base and the uniform density on the box.
#[derive(Clone)]
pub struct RejectionSampler {
    pub(crate) base_tables: Vec<AxisCdf>,
    pub(crate) base: Arc<dyn DifferentiableField>,
    pub(crate) target: Arc<dyn DifferentiableField>,
    pub(crate) slack: f64,
    pub(crate) envelope_box: AxisBox,
}

impl RejectionSampler {
    /// Expected acceptance rate 1/(1 + slack·vol).
    pub fn acceptance_rate(&self) -> f64 {
        1.0 / (1.0 + self.slack * self.envelope_box.volume())
    }

    pub(crate) fn draw(&self, rng: &mut ChaCha8Rng, count: usize) -> Result<Vec<f64>> {
        let rate = self.acceptance_rate();
        if rate < MIN_ACCEPTANCE {
            return Err(Error::SamplerDegenerate(rate));
        }
        let dim = self.base_tables.len();
        let p_base = rate;
        let mut out = Vec::with_capacity(count * dim);
        let mut x = vec![0.0; dim];
        let mut accepted = 0usize;
        let mut proposed = 0usize;
        while accepted < count {
            proposed += 1;
            if rng.random::<f64>() < p_base {
                for (xi, t) in x.iter_mut().zip(&self.base_tables) {
                    *xi = t.quantile(rng.random());
                }
            } else {
                for (i, xi) in x.iter_mut().enumerate() {
                    let (lo, hi) = (self.envelope_box.lower()[i], self.envelope_box.upper()[i]);
                    *xi = lo + (hi - lo) * rng.random::<f64>();
                }
            }
            let envelope = self.base.eval(&x) + self.slack;
            if rng.random::<f64>() * envelope < self.target.eval(&x) {
                out.extend_from_slice(&x);
                accepted += 1;
            }
            if proposed >= 1000 && (accepted as f64) < MIN_ACCEPTANCE * proposed as f64 {
                return Err(Error::SamplerDegenerate(accepted as f64 / proposed as f64));
            }
        }
        Ok(out)
    }
}

#[derive(Clone)]
pub(crate) enum Sampler {
    InverseCdf(Vec<AxisCdf>),
    Rejection(RejectionSampler),
}

impl Sampler {
    pub(crate) fn kind(&self) -> SamplerKind {
        match self {
            Sampler::InverseCdf(_) => SamplerKind::PerAxisInverseCdf,
            Sampler::Rejection(_) => SamplerKind::Rejection,
        }
    }

    pub(crate) fn draw(&self, rng: &mut ChaCha8Rng, count: usize) -> Result<Vec<f64>> {
        match self {
            Sampler::InverseCdf(tables) => {
                let mut out = Vec::with_capacity(count * tables.len());
                for _ in 0..count {
                    for t in tables {
                        out.push(t.quantile(rng.random()));
                    }
                }
                Ok(out)
            }
            Sampler::Rejection(r) => r.draw(rng, count),
        }
    }
}
