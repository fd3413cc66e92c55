//! Composite tensor Gauss–Legendre quadrature, grid L^p norms and nested
//! central finite differences.

use crate::error::{check_dim, Error, Result};
use serde::{Deserialize, Serialize};

/// Default Gauss–Legendre nodes per panel.
pub const DEFAULT_NODES_PER_PANEL: usize = 8;

/// Highest total derivative order `partial_fd` accepts.
pub const MAX_FD_ORDER: usize = 6;

/// An axis-aligned box `[lower_0, upper_0] × … × [lower_{d-1}, upper_{d-1}]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox")]
pub struct AxisBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Deserialize)]
struct RawBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawBox> for AxisBox {
    type Error = Error;
    fn try_from(raw: RawBox) -> Result<Self> {
        AxisBox::new(raw.lower, raw.upper)
    }
}

impl AxisBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::Parameter("box must have at least one axis".into()));
        }
        check_dim(lower.len(), upper.len())?;
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Parameter(format!(
                    "axis {i}: lower bound {lo} must be finite and below upper bound {hi}"
                )));
            }
        }
        Ok(AxisBox { lower, upper })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        AxisBox::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Grow every axis by `pad` on both sides.
    pub fn padded(&self, pad: f64) -> Result<Self> {
        AxisBox::new(
            self.lower.iter().map(|v| v - pad).collect(),
            self.upper.iter().map(|v| v + pad).collect(),
        )
    }

    /// Intersection, or `None` when it has empty interior.
    pub fn intersect(&self, other: &AxisBox) -> Option<AxisBox> {
        if self.dim() != other.dim() {
            return None;
        }
        let lower: Vec<f64> = self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(*b)).collect();
        let upper: Vec<f64> = self.upper.iter().zip(&other.upper).map(|(a, b)| a.min(*b)).collect();
        AxisBox::new(lower, upper).ok()
    }
}

/// Composite rule: `nodes_per_panel` Gauss–Legendre nodes on each of
/// `panels_per_axis[i]` equal panels along axis `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawRule")]
pub struct QuadRule {
    nodes_per_panel: usize,
    panels_per_axis: Vec<usize>,
}

#[derive(Deserialize)]
struct RawRule {
    nodes_per_panel: usize,
    panels_per_axis: Vec<usize>,
}

impl TryFrom<RawRule> for QuadRule {
    type Error = Error;
    fn try_from(raw: RawRule) -> Result<Self> {
        QuadRule::new(raw.nodes_per_panel, raw.panels_per_axis)
    }
}

impl QuadRule {
    pub fn new(nodes_per_panel: usize, panels_per_axis: Vec<usize>) -> Result<Self> {
        if nodes_per_panel < 2 {
            return Err(Error::Parameter(format!(
                "nodes_per_panel must be at least 2, got {nodes_per_panel}"
            )));
        }
        if panels_per_axis.is_empty() || panels_per_axis.contains(&0) {
            return Err(Error::Parameter(
                "panels_per_axis must be non-empty and positive".into(),
            ));
        }
        let rule = QuadRule {
            nodes_per_panel,
            panels_per_axis,
        };
        rule.total_nodes()?;
        Ok(rule)
    }

    pub fn uniform(dim: usize, nodes_per_panel: usize, panels: usize) -> Result<Self> {
        QuadRule::new(nodes_per_panel, vec![panels; dim])
    }

    /// Panels chosen so that every panel is at most `feature_scale / 2` wide.
    pub fn resolving(bx: &AxisBox, feature_scale: f64, nodes_per_panel: usize) -> Result<Self> {
        if !(feature_scale > 0.0) {
            return Err(Error::Parameter(format!(
                "feature scale must be positive, got {feature_scale}"
            )));
        }
        let max_width = feature_scale / 2.0;
        let panels = (0..bx.dim())
            .map(|i| ((bx.width(i) / max_width).ceil() as usize).max(1))
            .collect();
        QuadRule::new(nodes_per_panel, panels)
    }

    pub fn nodes_per_panel(&self) -> usize {
        self.nodes_per_panel
    }

    pub fn panels_per_axis(&self) -> &[usize] {
        &self.panels_per_axis
    }

    pub fn dim(&self) -> usize {
        self.panels_per_axis.len()
    }

    pub fn total_nodes(&self) -> Result<usize> {
        self.panels_per_axis.iter().try_fold(1usize, |acc, &p| {
            p.checked_mul(self.nodes_per_panel)
                .and_then(|n| acc.checked_mul(n))
                .ok_or_else(|| Error::Parameter("total quadrature node count overflows".into()))
        })
    }
}

/// Gauss–Legendre nodes and weights on [−1,1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodes and weights of a composite rule on one interval.
pub fn composite_axis(lo: f64, hi: f64, panels: usize, nodes_per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(nodes_per_panel);
    let width = (hi - lo) / panels as f64;
    let half = width / 2.0;
    let mut nodes = Vec::with_capacity(panels * nodes_per_panel);
    let mut weights = Vec::with_capacity(panels * nodes_per_panel);
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        for (x, w) in gx.iter().zip(&gw) {
            nodes.push(mid + half * x);
            weights.push(half * w);
        }
    }
    (nodes, weights)
}

/// Tensor-product node set. Flat node order is row-major: the last axis
/// varies fastest.
#[derive(Clone, Debug)]
pub struct TensorGrid {
    nodes: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
}

impl TensorGrid {
    pub fn new(bx: &AxisBox, rule: &QuadRule) -> Result<Self> {
        check_dim(bx.dim(), rule.dim())?;
        rule.total_nodes()?;
        let (nodes, weights) = (0..bx.dim())
            .map(|i| {
                composite_axis(
                    bx.lower()[i],
                    bx.upper()[i],
                    rule.panels_per_axis()[i],
                    rule.nodes_per_panel(),
                )
            })
            .unzip();
        Ok(TensorGrid { nodes, weights })
    }

    /// Grid from explicit per-axis (nodes, weights) pairs.
    pub fn from_axes(axes: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Parameter("a grid needs at least one axis".into()));
        }
        let mut total = 1usize;
        for (x, w) in &axes {
            check_dim(x.len(), w.len())?;
            total = total
                .checked_mul(x.len())
                .ok_or_else(|| Error::Parameter("total quadrature node count overflows".into()))?;
        }
        if total == 0 {
            return Err(Error::Parameter("a grid axis has no nodes".into()));
        }
        let (nodes, weights) = axes.into_iter().unzip();
        Ok(TensorGrid { nodes, weights })
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn axis_nodes(&self, axis: usize) -> &[f64] {
        &self.nodes[axis]
    }

    pub fn axis_weights(&self, axis: usize) -> &[f64] {
        &self.weights[axis]
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Visit every node with its flat index, coordinates and weight.
    pub fn for_each<F: FnMut(usize, &[f64], f64)>(&self, mut visit: F) {
        let dim = self.dim();
        let mut idx = vec![0usize; dim];
        let mut point: Vec<f64> = self.nodes.iter().map(|n| n[0]).collect();
        let total = self.len();
        for flat in 0..total {
            let w: f64 = (0..dim).map(|a| self.weights[a][idx[a]]).product();
            visit(flat, &point, w);
            // odometer, last axis fastest
            for a in (0..dim).rev() {
                idx[a] += 1;
                if idx[a] < self.nodes[a].len() {
                    point[a] = self.nodes[a][idx[a]];
                    break;
                }
                idx[a] = 0;
                point[a] = self.nodes[a][0];
            }
        }
    }

    /// Evaluate `f` at every node in flat order.
    pub fn evaluate<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each(|_, x, _| out.push(f(x)));
        out
    }

    /// Flat weights, aligned with [`TensorGrid::evaluate`].
    pub fn flat_weights(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each(|_, _, w| out.push(w));
        out
    }

    /// Σ w_i v_i for node values in flat order.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        let mut acc = 0.0;
        self.for_each(|i, _, w| acc += w * values[i]);
        acc
    }
}

/// Composite tensor Gauss–Legendre approximation of ∫_box f.
pub fn integrate<F: Fn(&[f64]) -> f64>(f: F, bx: &AxisBox, rule: &QuadRule) -> Result<f64> {
    integrate_grid(f, &TensorGrid::new(bx, rule)?)
}

/// Σ w_i f(x_i) over a prepared grid, failing on the first non-finite value.
pub fn integrate_grid<F: Fn(&[f64]) -> f64>(f: F, grid: &TensorGrid) -> Result<f64> {
    let mut acc = 0.0;
    let mut bad: Option<(Vec<f64>, f64)> = None;
    grid.for_each(|_, x, w| {
        if bad.is_some() {
            return;
        }
        let v = f(x);
        if v.is_finite() {
            acc += w * v;
        } else {
            bad = Some((x.to_vec(), v));
        }
    });
    match bad {
        Some((node, value)) => Err(Error::NonFinite { node, value }),
        None => Ok(acc),
    }
}

/// (∫_box |f|^p)^{1/p}.
pub fn lp_norm<F: Fn(&[f64]) -> f64>(f: F, bx: &AxisBox, p: f64, rule: &QuadRule) -> Result<f64> {
    check_exponent(p)?;
    let integral = integrate(|x| pow_abs(f(x), p), bx, rule)?;
    Ok(integral.max(0.0).powf(1.0 / p))
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "L^p exponent must be finite and at least 1, got {p}"
        )))
    }
}

/// |v|^p with cheap paths for the common integer exponents.
#[inline]
pub fn pow_abs(v: f64, p: f64) -> f64 {
    let a = v.abs();
    if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else if p == 3.0 {
        a * a * a
    } else {
        a.powf(p)
    }
}

/// Nested central differences: the `alpha[j]`-th central difference along
/// axis j, applied one axis at a time in increasing axis order.
pub fn partial_fd<F: Fn(&[f64]) -> f64>(f: F, point: &[f64], alpha: &[usize], step: f64) -> Result<f64> {
    check_dim(point.len(), alpha.len())?;
    let order: usize = alpha.iter().sum();
    if order > MAX_FD_ORDER {
        return Err(Error::UnsupportedOrder {
            order,
            reason: "finite differences are limited to total order 6",
        });
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Domain(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let mut x = point.to_vec();
    Ok(nested_difference(&f, &mut x, alpha, 0, &|_| step))
}

/// Like [`partial_fd`] with the default per-axis step `1e-3·max(1, |x_j|)`.
pub fn partial_fd_default<F: Fn(&[f64]) -> f64>(f: F, point: &[f64], alpha: &[usize]) -> Result<f64> {
    check_dim(point.len(), alpha.len())?;
    let order: usize = alpha.iter().sum();
    if order > MAX_FD_ORDER {
        return Err(Error::UnsupportedOrder {
            order,
            reason: "finite differences are limited to total order 6",
        });
    }
    let mut x = point.to_vec();
    let base = point.to_vec();
    Ok(nested_difference(&f, &mut x, alpha, 0, &|axis| {
        1e-3 * base[axis].abs().max(1.0)
    }))
}

fn nested_difference<F: Fn(&[f64]) -> f64>(
    f: &F,
    x: &mut Vec<f64>,
    alpha: &[usize],
    axis: usize,
    step: &dyn Fn(usize) -> f64,
) -> f64 {
    if axis == alpha.len() {
        return f(x);
    }
    let a = alpha[axis];
    if a == 0 {
        return nested_difference(f, x, alpha, axis + 1, step);
    }
    let h = step(axis);
    let centre = x[axis];
    let mut acc = 0.0;
    let mut binom = 1.0;
    for k in 0..=a {
        let offset = (a as f64 / 2.0 - k as f64) * h;
        x[axis] = centre + offset;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * nested_difference(f, x, alpha, axis + 1, step);
        binom = binom * (a - k) as f64 / (k + 1) as f64;
    }
    x[axis] = centre;
    acc / h.powi(a as i32)
}
