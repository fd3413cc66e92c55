//! The product-space kernel density estimator
//! f̂(x) = (n h^D)^{−1} Σ_i K((x_i − x)/h), its expectation K_h ∗ f and the
//! resulting deterministic bias.

use crate::densities::{Density, PointSet, TensorField};
use crate::error::{check_dim, Error, Result};
use crate::product_kernel::{multi_indices, verify_class, ProductKernel};
use crate::quadrature::{self, AxisBox, QuadRule, TensorGrid};
use crate::sobolev::{partial_lp_norm, DifferentiableField, Integrator};

/// h = n^{−1/(2(s1+s2)+d1+d2)}.
pub fn bandwidth_rule(n: usize, s1: usize, s2: usize, d1: usize, d2: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Parameter(format!("the bandwidth rule needs n ≥ 2, got {n}")));
    }
    let denom = 2 * (s1 + s2) + d1 + d2;
    let h = (n as f64).powf(-1.0 / denom as f64);
    Ok(h.min(1.0 - f64::EPSILON))
}

/// A fitted estimator. Sample indices are kept sorted by the first
/// coordinate so a query only visits the points in its h-window.
#[derive(Clone, Debug)]
pub struct KdeModel {
    kernel: ProductKernel,
    h: f64,
    sample: PointSet,
    by_first: Vec<usize>,
    first: Vec<f64>,
}

impl KdeModel {
    pub fn new(kernel: ProductKernel, h: f64, sample: PointSet) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::Parameter(format!("bandwidth must lie in (0, 1), got {h}")));
        }
        if sample.is_empty() {
            return Err(Error::Parameter("the sample is empty".into()));
        }
        check_dim(kernel.dim(), sample.dim())?;
        let mut by_first: Vec<usize> = (0..sample.len()).collect();
        by_first.sort_by(|&a, &b| sample.point(a)[0].total_cmp(&sample.point(b)[0]));
        let first = by_first.iter().map(|&i| sample.point(i)[0]).collect();
        Ok(KdeModel {
            kernel,
            h,
            sample,
            by_first,
            first,
        })
    }

    pub fn kernel(&self) -> &ProductKernel {
        &self.kernel
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.sample.len()
    }

    pub fn sample(&self) -> &PointSet {
        &self.sample
    }

    fn normaliser(&self) -> f64 {
        1.0 / (self.n() as f64 * self.h.powi(self.kernel.dim() as i32))
    }

    /// f̂ at `x`; the dimension is assumed to match.
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let h = self.h;
        let start = self.first.partition_point(|&v| v < x[0] - h);
        let mut acc = 0.0;
        for &i in &self.by_first[start..] {
            let xi = self.sample.point(i);
            if xi[0] > x[0] + h {
                break;
            }
            let mut k = 1.0;
            for (axis, (a, b)) in xi.iter().zip(x).enumerate() {
                let u = (a - b) / h;
                if u.abs() > 1.0 {
                    k = 0.0;
                    break;
                }
                k *= self.kernel.factor(axis).poly(u);
            }
            acc += k;
        }
        acc * self.normaliser()
    }

    /// f̂ at every node of `grid`, in flat order. Each sample point is
    /// scattered onto the nodes within h of it.
    pub fn eval_grid(&self, grid: &TensorGrid) -> Result<Vec<f64>> {
        let dim = self.kernel.dim();
        check_dim(dim, grid.dim())?;
        for a in 0..dim {
            if grid.axis_nodes(a).windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::Parameter(format!("grid axis {a} is not sorted")));
            }
        }
        let sizes: Vec<usize> = (0..dim).map(|a| grid.axis_nodes(a).len()).collect();
        let mut strides = vec![1usize; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * sizes[a + 1];
        }
        let mut out = vec![0.0; grid.len()];
        let h = self.h;
        let mut ranges = vec![(0usize, 0usize); dim];
        let mut factors: Vec<Vec<f64>> = vec![Vec::new(); dim];
        let mut idx = vec![0usize; dim];
        let mut partial = vec![0.0; dim + 1];
        'points: for xi in self.sample.iter() {
            for a in 0..dim {
                let nodes = grid.axis_nodes(a);
                let lo = nodes.partition_point(|&v| v < xi[a] - h);
                let hi = nodes.partition_point(|&v| v <= xi[a] + h);
                if lo >= hi {
                    continue 'points;
                }
                ranges[a] = (lo, hi);
                let kern = self.kernel.factor(a);
                factors[a].clear();
                factors[a].extend(nodes[lo..hi].iter().map(|v| {
                    let u = (xi[a] - v) / h;
                    if u.abs() > 1.0 {
                        0.0
                    } else {
                        kern.poly(u)
                    }
                }));
            }
            // odometer over the sub-box of nodes within the window
            for a in 0..dim {
                idx[a] = 0;
            }
            partial[0] = 1.0;
            for a in 0..dim {
                partial[a + 1] = partial[a] * factors[a][0];
            }
            loop {
                let mut flat = 0;
                for a in 0..dim {
                    flat += (ranges[a].0 + idx[a]) * strides[a];
                }
                out[flat] += partial[dim];
                let mut a = dim;
                loop {
                    if a == 0 {
                        continue 'points;
                    }
                    a -= 1;
                    idx[a] += 1;
                    if idx[a] < ranges[a].1 - ranges[a].0 {
                        break;
                    }
                    idx[a] = 0;
                }
                for b in a..dim {
                    partial[b + 1] = partial[b] * factors[b][idx[b]];
                }
            }
        }
        let c = self.normaliser();
        for v in &mut out {
            *v *= c;
        }
        Ok(out)
    }
}

pub fn kde_eval(model: &KdeModel, point: &[f64]) -> Result<f64> {
    check_dim(model.kernel.dim(), point.len())?;
    Ok(model.eval_unchecked(point))
}

/// E f̂(x) = ∫_{[−1,1]^D} K(u) f(x + hu) du.
#[derive(Clone, Debug)]
pub struct MeanField {
    kernel: ProductKernel,
    h: f64,
    truth: Density,
    /// Gauss–Legendre panels per axis in the kernel variable.
    panels: usize,
}

const MEAN_NODES_PER_PANEL: usize = 8;

pub fn kde_mean_field(kernel: &ProductKernel, h: f64, truth: &Density) -> Result<MeanField> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Parameter(format!("bandwidth must lie in (0, 1), got {h}")));
    }
    check_dim(kernel.dim(), truth.dim())?;
    let window = 2.0 * h;
    let panels = ((window / (truth.feature_scale() / 2.0)).ceil() as usize).max(1);
    Ok(MeanField {
        kernel: kernel.clone(),
        h,
        truth: truth.clone(),
        panels,
    })
}

impl MeanField {
    pub fn h(&self) -> f64 {
        self.h
    }

    fn u_axis(&self) -> (Vec<f64>, Vec<f64>) {
        quadrature::composite_axis(-1.0, 1.0, self.panels, MEAN_NODES_PER_PANEL)
    }

    /// ∫ κ_axis(u) φ_axis(x + hu) du for a product truth.
    fn axis_mean(&self, t: &TensorField, axis: usize, x: f64, u: &(Vec<f64>, Vec<f64>)) -> f64 {
        let kern = self.kernel.factor(axis);
        let phi = t.factor(axis);
        u.0.iter()
            .zip(&u.1)
            .map(|(&v, &w)| w * kern.poly(v) * phi.value(x + self.h * v))
            .sum()
    }

    /// Per-axis factors of E f̂ at the nodes of each axis, when the truth is
    /// a product.
    pub fn axis_factors(&self, axes: &[&[f64]]) -> Option<Vec<Vec<f64>>> {
        let t = self.truth.tensor()?;
        let u = self.u_axis();
        Some(
            axes.iter()
                .enumerate()
                .map(|(a, nodes)| nodes.iter().map(|&x| self.axis_mean(t, a, x, &u)).collect())
                .collect(),
        )
    }

    /// E f̂ at every node of `grid`, in flat order.
    pub fn eval_grid(&self, grid: &TensorGrid) -> Result<Vec<f64>> {
        check_dim(self.dim(), grid.dim())?;
        let axes: Vec<&[f64]> = (0..grid.dim()).map(|a| grid.axis_nodes(a)).collect();
        match self.axis_factors(&axes) {
            Some(f) => Ok(outer_product(&f)),
            None => Ok(grid.evaluate(|x| self.eval(x))),
        }
    }
}

/// Π_a v_a[i_a] over the tensor grid, in row-major order.
pub(crate) fn outer_product(factors: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![1.0];
    for f in factors {
        let mut next = Vec::with_capacity(out.len() * f.len());
        for &a in &out {
            next.extend(f.iter().map(|&b| a * b));
        }
        out = next;
    }
    out
}

impl DifferentiableField for MeanField {
    fn dim(&self) -> usize {
        self.kernel.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let u = self.u_axis();
        if let Some(t) = self.truth.tensor() {
            let mut acc = 1.0;
            for (a, &xa) in x.iter().enumerate() {
                acc *= self.axis_mean(t, a, xa, &u);
            }
            return acc;
        }
        let dim = self.dim();
        let grid = TensorGrid::from_axes(vec![u; dim]).expect("non-empty kernel axes");
        let mut y = vec![0.0; dim];
        let mut acc = 0.0;
        grid.for_each(|_, v, w| {
            for a in 0..dim {
                y[a] = x[a] + self.h * v[a];
            }
            acc += w * self.kernel.eval_unchecked(v) * self.truth.eval(&y);
        });
        acc
    }

    fn support(&self) -> AxisBox {
        self.truth.support().padded(self.h).expect("padding a valid box")
    }

    fn feature_scale(&self) -> f64 {
        self.truth.feature_scale().min(self.h)
    }
}

/// ‖K_h ∗ f − f‖_p over `bx`.
pub fn bias_lp(kernel: &ProductKernel, h: f64, truth: &Density, p: f64, bx: &AxisBox, rule: &QuadRule) -> Result<f64> {
    quadrature::check_exponent(p)?;
    check_dim(truth.dim(), bx.dim())?;
    let needed = truth.support().padded(h)?;
    if truth.is_compact() && bx.intersect(&needed).as_ref() != Some(&needed) {
        return Err(Error::Parameter(
            "the evaluation box must contain the truth's support padded by h".into(),
        ));
    }
    let mean = kde_mean_field(kernel, h, truth)?;
    let grid = TensorGrid::new(bx, rule)?;
    let m = mean.eval_grid(&grid)?;
    let f = truth_on_grid(truth, &grid);
    let mut acc = 0.0;
    grid.for_each(|i, _, w| acc += w * quadrature::pow_abs(m[i] - f[i], p));
    Ok(acc.powf(1.0 / p))
}

/// The truth at every node of `grid`, factorised when possible.
pub(crate) fn truth_on_grid(truth: &Density, grid: &TensorGrid) -> Vec<f64> {
    match truth.tensor() {
        Some(t) => {
            let factors: Vec<Vec<f64>> = (0..grid.dim())
                .map(|a| grid.axis_nodes(a).iter().map(|&x| t.factor(a).value(x)).collect())
                .collect();
            outer_product(&factors)
        }
        None => grid.evaluate(|x| truth.eval(x)),
    }
}

/// Multi-indices (α1, α2) with |α1| = s1 and |α2| = s2.
pub fn top_order_indices(s1: usize, s2: usize, d1: usize, d2: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for a1 in multi_indices(d1, s1)
        .into_iter()
        .filter(|a| a.iter().sum::<usize>() == s1)
    {
        for a2 in multi_indices(d2, s2)
            .into_iter()
            .filter(|a| a.iter().sum::<usize>() == s2)
        {
            out.push(a1.iter().chain(&a2).copied().collect());
        }
    }
    out
}

/// Σ_{|α1|=s1, |α2|=s2} ‖∂^α f‖_p.
pub fn top_order_norm_sum(truth: &Density, s1: usize, s2: usize, d1: usize, d2: usize, p: f64) -> Result<f64> {
    check_dim(d1 + d2, truth.dim())?;
    let integ = Integrator::default();
    top_order_indices(s1, s2, d1, d2).iter().try_fold(0.0, |acc, alpha| {
        Ok(acc + partial_lp_norm(truth.field(), alpha, p, &integ)?)
    })
}

/// I_{(s1,s2)} h^{s1+s2} Σ_{|α1|=s1, |α2|=s2} ‖∂^α f‖_p, the claimed bound on
/// the bias in L^p.
pub fn bias_bound(kernel: &ProductKernel, h: f64, truth: &Density, p: f64) -> Result<f64> {
    let rule = QuadRule::uniform(1, 16, 1)?;
    let report = verify_class(kernel, 1e-8, &rule)?;
    let sum = top_order_norm_sum(truth, kernel.s1, kernel.s2, kernel.d1, kernel.d2, p)?;
    Ok(report.i_s1_s2 * h.powi((kernel.s1 + kernel.s2) as i32) * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{sample, tensor_bump, tensor_plateau};
    use crate::kernel1d::UnivariateKernel;
    use crate::product_kernel::{strict_tensor_kernel, tensor_kernel};
    use proptest::prelude::*;

    fn uniform2() -> ProductKernel {
        tensor_kernel(UnivariateKernel::uniform(), 1, UnivariateKernel::uniform(), 1, 1, 1).unwrap()
    }

    fn model(kernel: ProductKernel, h: f64, pts: &[[f64; 2]]) -> KdeModel {
        let pts: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
        KdeModel::new(kernel, h, PointSet::from_points(2, &pts).unwrap()).unwrap()
    }

    #[test]
    fn bandwidth_examples() {
        assert_eq!(bandwidth_rule(4096, 4, 1, 1, 1).unwrap(), 0.5);
        assert!((bandwidth_rule(4096, 2, 1, 1, 1).unwrap() - 2f64.powf(-1.5)).abs() < 1e-15);
        let mut last = 1.0;
        for n in [2, 10, 100, 10_000, 1_000_000] {
            let h = bandwidth_rule(n, 1, 1, 1, 1).unwrap();
            assert!(h < last && h > 0.0);
            last = h;
        }
        assert!(bandwidth_rule(1, 1, 1, 1, 1).is_err());
    }

    #[test]
    fn single_point_value() {
        let m = model(uniform2(), 0.5, &[[0.0, 0.0]]);
        assert_eq!(kde_eval(&m, &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(kde_eval(&m, &[0.6, 0.0]).unwrap(), 0.0);
        assert_eq!(kde_eval(&m, &[0.1, -0.7]).unwrap(), 0.0);
        assert!(matches!(kde_eval(&m, &[0.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn model_invariants() {
        let pts = PointSet::from_points(2, &[vec![0.0, 0.0]]).unwrap();
        assert!(KdeModel::new(uniform2(), 1.0, pts.clone()).is_err());
        assert!(KdeModel::new(uniform2(), 0.0, pts).is_err());
        assert!(KdeModel::new(uniform2(), 0.5, PointSet::new(2, vec![]).unwrap()).is_err());
    }

    /// Panels between consecutive x_i ± h on each axis; f̂ is a polynomial
    /// on every cell so Gauss–Legendre is exact there.
    fn breakpoint_grid(pts: &PointSet, h: f64, nodes: usize) -> TensorGrid {
        let axes = (0..pts.dim())
            .map(|a| {
                let mut cuts: Vec<f64> = pts.iter().flat_map(|p| [p[a] - h, p[a] + h]).collect();
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                let (mut x, mut w) = (Vec::new(), Vec::new());
                for c in cuts.windows(2) {
                    let (px, pw) = quadrature::composite_axis(c[0], c[1], 1, nodes);
                    x.extend(px);
                    w.extend(pw);
                }
                (x, w)
            })
            .collect();
        TensorGrid::from_axes(axes).unwrap()
    }

    #[test]
    fn estimate_has_unit_mass() {
        let truth = tensor_bump(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let pts = sample(&truth, 5, 200).unwrap();
        for (s1, s2) in [(1, 1), (2, 1), (3, 2)] {
            let k = strict_tensor_kernel(s1, s2, 1, 1).unwrap();
            let m = KdeModel::new(k, 0.3, pts.clone()).unwrap();
            let grid = breakpoint_grid(&pts, 0.3, 3);
            let mass = grid.integrate_values(&m.eval_grid(&grid).unwrap());
            assert!((mass - 1.0).abs() < 1e-8, "({s1},{s2}) mass {mass}");
        }
    }

    #[test]
    fn single_point_mass_is_exact_on_aligned_panels() {
        let k = strict_tensor_kernel(2, 3, 1, 1).unwrap();
        let m = model(k, 0.25, &[[0.1, -0.2]]);
        let bx = AxisBox::new(vec![-0.15, -0.45], vec![0.35, 0.05]).unwrap();
        let grid = TensorGrid::new(&bx, &QuadRule::uniform(2, 6, 2).unwrap()).unwrap();
        let mass = grid.integrate_values(&m.eval_grid(&grid).unwrap());
        assert!((mass - 1.0).abs() < 1e-12, "{mass}");
    }

    #[test]
    fn grid_scatter_matches_pointwise() {
        let truth = tensor_bump(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let pts = sample(&truth, 8, 300).unwrap();
        let m = KdeModel::new(strict_tensor_kernel(2, 1, 1, 1).unwrap(), 0.35, pts).unwrap();
        let bx = AxisBox::cube(2, -1.4, 1.4).unwrap();
        let grid = TensorGrid::new(&bx, &QuadRule::uniform(2, 5, 9).unwrap()).unwrap();
        let fast = m.eval_grid(&grid).unwrap();
        let slow = grid.evaluate(|x| kde_eval(&m, x).unwrap());
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn mean_field_is_constant_on_the_plateau() {
        let f0 = tensor_plateau(2, 20.0, 1.0).unwrap();
        let k = strict_tensor_kernel(2, 2, 1, 1).unwrap();
        let mean = kde_mean_field(&k, 0.3, &f0).unwrap();
        for x in [[0.0, 0.0], [3.0, -5.0], [8.5, 8.5]] {
            assert!((mean.eval(&x) - 0.0025).abs() < 1e-10);
        }
    }

    #[test]
    fn mean_field_tends_to_truth() {
        let truth = tensor_bump(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let k = strict_tensor_kernel(1, 1, 1, 1).unwrap();
        let mean = kde_mean_field(&k, 1e-3, &truth).unwrap();
        for x in [[0.0, 0.0], [0.3, -0.5], [-0.8, 0.1]] {
            assert!((mean.eval(&x) - truth.eval(&x)).abs() < 1e-4);
        }
    }

    #[test]
    fn mean_field_matches_direct_quadrature() {
        let truth = tensor_bump(&[0.1, -0.2], &[0.9, 1.2]).unwrap();
        let k = strict_tensor_kernel(2, 1, 1, 1).unwrap();
        let h = 0.3;
        let mean = kde_mean_field(&k, h, &truth).unwrap();
        for x in [[0.0, 0.0], [0.6, -1.0], [-0.7, 0.4]] {
            // the data-variable form (1/h^2) ∫ K((z − x)/h) f(z) dz
            let bx = AxisBox::new(vec![x[0] - h, x[1] - h], vec![x[0] + h, x[1] + h]).unwrap();
            let direct = quadrature::integrate(
                |z| k.eval(&[(z[0] - x[0]) / h, (z[1] - x[1]) / h]).unwrap() * truth.eval(z) / (h * h),
                &bx,
                &QuadRule::uniform(2, 10, 64).unwrap(),
            )
            .unwrap();
            assert!((mean.eval(&x) - direct).abs() < 1e-8, "{x:?}");
        }
    }

    #[test]
    fn bias_vanishes_on_constant_region() {
        let f0 = tensor_plateau(2, 20.0, 1.0).unwrap();
        let k = strict_tensor_kernel(2, 1, 1, 1).unwrap();
        let mean = kde_mean_field(&k, 0.4, &f0).unwrap();
        let bx = AxisBox::cube(2, -5.0, 5.0).unwrap();
        let err = quadrature::lp_norm(
            |x| mean.eval(x) - f0.eval(x),
            &bx,
            2.0,
            &QuadRule::uniform(2, 4, 10).unwrap(),
        )
        .unwrap();
        assert!(err < 1e-10);
    }

    #[test]
    fn bias_rejects_small_box() {
        let truth = tensor_bump(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let k = strict_tensor_kernel(1, 1, 1, 1).unwrap();
        let bx = AxisBox::cube(2, -1.0, 1.0).unwrap();
        let rule = QuadRule::uniform(2, 8, 8).unwrap();
        assert!(bias_lp(&k, 0.2, &truth, 2.0, &bx, &rule).is_err());
    }

    #[test]
    fn bias_decays_with_order_one_one() {
        let truth = tensor_bump(&[0.0, 0.0], &[3.0, 3.0]).unwrap();
        let k = strict_tensor_kernel(1, 1, 1, 1).unwrap();
        let bx = AxisBox::cube(2, -3.5, 3.5).unwrap();
        let rule = QuadRule::uniform(2, 8, 100).unwrap();
        let b: Vec<f64> = [0.4, 0.2, 0.1]
            .iter()
            .map(|&h| bias_lp(&k, h, &truth, 2.0, &bx, &rule).unwrap())
            .collect();
        for w in b.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!((slope - 2.0).abs() < 0.4, "{slope}");
        }
    }

    #[test]
    fn bias_bound_scales_with_order() {
        let truth = tensor_bump(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let k = strict_tensor_kernel(2, 1, 1, 1).unwrap();
        let a = bias_bound(&k, 0.4, &truth, 2.0).unwrap();
        let b = bias_bound(&k, 0.2, &truth, 2.0).unwrap();
        assert!(a > 0.0);
        assert!((a / b - 8.0).abs() < 1e-12);
    }

    #[test]
    fn top_order_indices_examples() {
        assert_eq!(top_order_indices(1, 1, 1, 1), vec![vec![1, 1]]);
        assert_eq!(top_order_indices(2, 1, 2, 1).len(), 3);
        assert!(top_order_indices(2, 1, 2, 1)
            .iter()
            .all(|a| a[0] + a[1] == 2 && a[2] == 1));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn translation_equivariant(vx in -5.0f64..5.0, vy in -5.0f64..5.0, qx in -0.5f64..0.5, qy in -0.5f64..0.5) {
            let truth = tensor_bump(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
            let pts = sample(&truth, 3, 50).unwrap();
            let k = strict_tensor_kernel(2, 1, 1, 1).unwrap();
            let m = KdeModel::new(k.clone(), 0.4, pts.clone()).unwrap();
            let shifted = KdeModel::new(k, 0.4, pts.translated(&[vx, vy]).unwrap()).unwrap();
            let a = kde_eval(&m, &[qx, qy]).unwrap();
            let b = kde_eval(&shifted, &[qx + vx, qy + vy]).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn linear_in_the_sample(seed in 0u64..1000, n1 in 1usize..40, n2 in 1usize..40, qx in -1.0f64..1.0, qy in -1.0f64..1.0) {
            let truth = tensor_bump(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
            let a = sample(&truth, seed, n1).unwrap();
            let b = sample(&truth, seed + 1, n2).unwrap();
            let k = strict_tensor_kernel(1, 2, 1, 1).unwrap();
            let h = 0.45;
            let fa = kde_eval(&KdeModel::new(k.clone(), h, a.clone()).unwrap(), &[qx, qy]).unwrap();
            let fb = kde_eval(&KdeModel::new(k.clone(), h, b.clone()).unwrap(), &[qx, qy]).unwrap();
            let fab = kde_eval(&KdeModel::new(k, h, a.concat(&b).unwrap()).unwrap(), &[qx, qy]).unwrap();
            let avg = (n1 as f64 * fa + n2 as f64 * fb) / (n1 + n2) as f64;
            prop_assert!((fab - avg).abs() <= 1e-13 * fab.abs().max(1.0));
        }

        #[test]
        fn nonnegative_for_uniform_kernel(seed in 0u64..1000, qx in -1.5f64..1.5, qy in -1.5f64..1.5) {
            let truth = tensor_bump(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
            let pts = sample(&truth, seed, 30).unwrap();
            let m = KdeModel::new(uniform2(), 0.3, pts).unwrap();
            prop_assert!(kde_eval(&m, &[qx, qy]).unwrap() >= 0.0);
        }
    }
}
