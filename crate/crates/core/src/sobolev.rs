//! Mixed, classical and anisotropic Sobolev norms.
//!
//! The three variants differ only in the set of multi-indices α that are
//! summed over; [`index_set`] returns that set explicitly.

use crate::densities::TensorField;
use crate::error::{Error, Result};
use crate::product_kernel::multi_indices;
use crate::quadrature::{self, AxisBox, QuadRule, TensorGrid, DEFAULT_NODES_PER_PANEL, MAX_FD_ORDER};
use serde::{Deserialize, Serialize};

/// A real field on ℝ^dim, zero outside its support box.
pub trait DifferentiableField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    fn support(&self) -> AxisBox;

    /// Analytic ∂^α f(x). `None` means the field has no closed form and
    /// finite differences are used instead.
    fn partial(&self, _alpha: &[usize], _x: &[f64]) -> Option<f64> {
        None
    }

    /// Shortest length on which the field varies appreciably.
    fn feature_scale(&self) -> f64;

    /// The product structure, if f(x) = Π φ_j(x_j).
    fn as_tensor(&self) -> Option<&TensorField> {
        None
    }

    /// Per-axis partition of the support with local feature scales.
    fn segments(&self) -> Vec<Vec<Segment>> {
        let bx = self.support();
        let scale = self.feature_scale();
        (0..bx.dim())
            .map(|i| {
                vec![Segment {
                    lo: bx.lower()[i],
                    hi: bx.upper()[i],
                    scale,
                }]
            })
            .collect()
    }
}

/// An interval of one axis and the feature scale of the field on it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub scale: f64,
}

/// How integrals over a field's support are discretised.
#[derive(Clone, Debug)]
pub enum Integrator {
    /// One fixed rule over the whole support box.
    Rule(QuadRule),
    /// Panels no wider than half the local feature scale on every segment.
    Resolving { nodes_per_panel: usize },
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator::Resolving {
            nodes_per_panel: DEFAULT_NODES_PER_PANEL,
        }
    }
}

impl From<QuadRule> for Integrator {
    fn from(rule: QuadRule) -> Self {
        Integrator::Rule(rule)
    }
}

impl Integrator {
    /// Per-axis (nodes, weights) pieces; the grids are their products.
    fn axis_pieces(&self, field: &dyn DifferentiableField) -> Result<Vec<Vec<(Vec<f64>, Vec<f64>)>>> {
        match self {
            Integrator::Rule(rule) => {
                let bx = field.support();
                crate::error::check_dim(bx.dim(), rule.dim())?;
                rule.total_nodes()?;
                Ok((0..bx.dim())
                    .map(|i| {
                        vec![quadrature::composite_axis(
                            bx.lower()[i],
                            bx.upper()[i],
                            rule.panels_per_axis()[i],
                            rule.nodes_per_panel(),
                        )]
                    })
                    .collect())
            }
            Integrator::Resolving { nodes_per_panel } => {
                let npp = *nodes_per_panel;
                if npp < 2 {
                    return Err(Error::Parameter(format!(
                        "nodes_per_panel must be at least 2, got {npp}"
                    )));
                }
                Ok(field
                    .segments()
                    .iter()
                    .map(|segs| {
                        segs.iter()
                            .filter(|s| s.hi > s.lo)
                            .map(|s| {
                                let panels = (((s.hi - s.lo) / (s.scale / 2.0)).ceil() as usize).max(1);
                                quadrature::composite_axis(s.lo, s.hi, panels, npp)
                            })
                            .collect()
                    })
                    .collect())
            }
        }
    }

    /// The tensor grids covering `field`'s support.
    pub fn grids(&self, field: &dyn DifferentiableField) -> Result<Vec<TensorGrid>> {
        let axes = self.axis_pieces(field)?;
        let mut grids = Vec::new();
        let mut choice = vec![0usize; axes.len()];
        if axes.iter().any(Vec::is_empty) {
            return Ok(grids);
        }
        loop {
            let pick = choice.iter().zip(&axes).map(|(&c, a)| a[c].clone()).collect();
            grids.push(TensorGrid::from_axes(pick)?);
            let mut axis = axes.len();
            loop {
                if axis == 0 {
                    return Ok(grids);
                }
                axis -= 1;
                choice[axis] += 1;
                if choice[axis] < axes[axis].len() {
                    break;
                }
                choice[axis] = 0;
            }
        }
    }

    /// ∫ φ over the support of `field`.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, field: &dyn DifferentiableField, phi: F) -> Result<f64> {
        self.grids(field)?
            .iter()
            .try_fold(0.0, |acc, g| Ok(acc + quadrature::integrate_grid(&phi, g)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Mixed,
    Classical,
    Aniso,
}

/// Smoothness orders, block dimensions, integrability and norm variant.
/// The classical variant uses the single order `s1` on all d1+d2 axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessSpec {
    pub s1: usize,
    pub s2: usize,
    pub d1: usize,
    pub d2: usize,
    pub p: f64,
    pub variant: Variant,
}

impl SmoothnessSpec {
    pub fn new(s1: usize, s2: usize, d1: usize, d2: usize, p: f64, variant: Variant) -> Result<Self> {
        if s1 == 0 || s2 == 0 || d1 == 0 || d2 == 0 {
            return Err(Error::Parameter(format!(
                "orders and dimensions must be positive (s1={s1}, s2={s2}, d1={d1}, d2={d2})"
            )));
        }
        quadrature::check_exponent(p)?;
        Ok(SmoothnessSpec {
            s1,
            s2,
            d1,
            d2,
            p,
            variant,
        })
    }

    pub fn mixed(s1: usize, s2: usize, d1: usize, d2: usize, p: f64) -> Result<Self> {
        Self::new(s1, s2, d1, d2, p, Variant::Mixed)
    }

    /// Classical order-s norm on d1+d2 axes.
    pub fn classical(s: usize, d1: usize, d2: usize, p: f64) -> Result<Self> {
        Self::new(s, s, d1, d2, p, Variant::Classical)
    }

    pub fn aniso(s1: usize, s2: usize, d1: usize, d2: usize, p: f64) -> Result<Self> {
        Self::new(s1, s2, d1, d2, p, Variant::Aniso)
    }

    pub fn dim(&self) -> usize {
        self.d1 + self.d2
    }
}

/// Multi-indices summed over by the norm of `spec`, as vectors of length d1+d2.
pub fn index_set(spec: &SmoothnessSpec) -> Vec<Vec<usize>> {
    let (s1, s2) = (spec.s1, spec.s2);
    match spec.variant {
        Variant::Classical => multi_indices(spec.dim(), s1),
        Variant::Mixed | Variant::Aniso => {
            let mut out = Vec::new();
            for a1 in multi_indices(spec.d1, s1) {
                let n1: usize = a1.iter().sum();
                for a2 in multi_indices(spec.d2, s2) {
                    let n2: usize = a2.iter().sum();
                    // |α1|/s1 + |α2|/s2 ≤ 1 in integers
                    if spec.variant == Variant::Aniso && n1 * s2 + n2 * s1 > s1 * s2 {
                        continue;
                    }
                    out.push(a1.iter().chain(&a2).copied().collect());
                }
            }
            out
        }
    }
}

/// ‖∂^α f‖_p over the support of f.
pub fn partial_lp_norm(f: &dyn DifferentiableField, alpha: &[usize], p: f64, integ: &Integrator) -> Result<f64> {
    quadrature::check_exponent(p)?;
    crate::error::check_dim(f.dim(), alpha.len())?;
    let order: usize = alpha.iter().sum();
    if let Some(t) = f.as_tensor() {
        let pieces = integ.axis_pieces(f)?;
        let mut norm = 1.0;
        for ((axis, &a), phi) in pieces.iter().zip(alpha).zip(t.factors()) {
            let line: f64 = axis
                .iter()
                .flat_map(|(x, w)| x.iter().zip(w))
                .map(|(&u, &wt)| wt * quadrature::pow_abs(phi.derivative(a, u), p))
                .sum();
            norm *= line.max(0.0).powf(1.0 / p);
        }
        return Ok(norm);
    }
    let integral = if order == 0 {
        integ.integrate(f, |x| quadrature::pow_abs(f.eval(x), p))?
    } else {
        let probe: Vec<f64> = {
            let bx = f.support();
            (0..bx.dim()).map(|i| 0.5 * (bx.lower()[i] + bx.upper()[i])).collect()
        };
        if f.partial(alpha, &probe).is_some() {
            integ.integrate(f, |x| quadrature::pow_abs(f.partial(alpha, x).unwrap_or(f64::NAN), p))?
        } else {
            if order > MAX_FD_ORDER {
                return Err(Error::UnsupportedOrder {
                    order,
                    reason: "finite-difference partials are limited to total order 6",
                });
            }
            integ.integrate(f, |x| {
                let d = quadrature::partial_fd_default(|y| f.eval(y), x, alpha).unwrap_or(f64::NAN);
                quadrature::pow_abs(d, p)
            })?
        }
    };
    Ok(integral.max(0.0).powf(1.0 / p))
}

fn norm_over(f: &dyn DifferentiableField, spec: &SmoothnessSpec, integ: &Integrator) -> Result<f64> {
    crate::error::check_dim(spec.dim(), f.dim())?;
    index_set(spec)
        .iter()
        .try_fold(0.0, |acc, alpha| Ok(acc + partial_lp_norm(f, alpha, spec.p, integ)?))
}

fn expect_variant(spec: &SmoothnessSpec, want: Variant) -> Result<()> {
    if spec.variant == want {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "expected a {want:?} smoothness spec, got {:?}",
            spec.variant
        )))
    }
}

/// Σ_{|α1|≤s1, |α2|≤s2} ‖∂^α f‖_p.
pub fn mixed_norm(f: &dyn DifferentiableField, spec: &SmoothnessSpec, integ: &Integrator) -> Result<f64> {
    expect_variant(spec, Variant::Mixed)?;
    norm_over(f, spec, integ)
}

/// Σ_{|α|≤s} ‖∂^α f‖_p with s = spec.s1.
pub fn classical_norm(f: &dyn DifferentiableField, spec: &SmoothnessSpec, integ: &Integrator) -> Result<f64> {
    expect_variant(spec, Variant::Classical)?;
    norm_over(f, spec, integ)
}

/// Σ_{|α1|/s1 + |α2|/s2 ≤ 1} ‖∂^α f‖_p.
pub fn aniso_norm(f: &dyn DifferentiableField, spec: &SmoothnessSpec, integ: &Integrator) -> Result<f64> {
    expect_variant(spec, Variant::Aniso)?;
    norm_over(f, spec, integ)
}

/// The norm of whichever variant `spec` names.
pub fn sobolev_norm(f: &dyn DifferentiableField, spec: &SmoothnessSpec, integ: &Integrator) -> Result<f64> {
    norm_over(f, spec, integ)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallReport {
    pub member: bool,
    pub norm: f64,
}

/// Whether the norm of `f` is at most `r`.
pub fn ball_membership(
    f: &dyn DifferentiableField,
    spec: &SmoothnessSpec,
    r: f64,
    integ: &Integrator,
) -> Result<BallReport> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Parameter(format!("ball radius must be positive, got {r}")));
    }
    let norm = sobolev_norm(f, spec, integ)?;
    Ok(BallReport {
        member: norm <= r,
        norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{Profile, ScaledBump, TensorField};
    use proptest::prelude::*;
    use std::sync::Arc;

    struct Zero;

    impl DifferentiableField for Zero {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, _x: &[f64]) -> f64 {
            0.0
        }
        fn support(&self) -> AxisBox {
            AxisBox::cube(2, -1.0, 1.0).unwrap()
        }
        fn partial(&self, _alpha: &[usize], _x: &[f64]) -> Option<f64> {
            Some(0.0)
        }
        fn feature_scale(&self) -> f64 {
            2.0
        }
    }

    /// a·f + b·g over the union of supports.
    struct Combo<'a> {
        a: f64,
        f: &'a TensorField,
        b: f64,
        g: &'a TensorField,
    }

    impl DifferentiableField for Combo<'_> {
        fn dim(&self) -> usize {
            self.f.dim()
        }
        fn eval(&self, x: &[f64]) -> f64 {
            self.a * self.f.eval(x) + self.b * self.g.eval(x)
        }
        fn support(&self) -> AxisBox {
            let (fb, gb) = (self.f.support(), self.g.support());
            let lo = fb.lower().iter().zip(gb.lower()).map(|(a, b)| a.min(*b)).collect();
            let hi = fb.upper().iter().zip(gb.upper()).map(|(a, b)| a.max(*b)).collect();
            AxisBox::new(lo, hi).unwrap()
        }
        fn partial(&self, alpha: &[usize], x: &[f64]) -> Option<f64> {
            Some(self.a * self.f.partial(alpha, x)? + self.b * self.g.partial(alpha, x)?)
        }
        fn feature_scale(&self) -> f64 {
            self.f.feature_scale().min(self.g.feature_scale())
        }
    }

    fn bump2(c: [f64; 2], w: [f64; 2]) -> TensorField {
        let factors: Vec<Arc<dyn Profile>> = vec![
            Arc::new(ScaledBump::new(c[0], w[0]).unwrap()),
            Arc::new(ScaledBump::new(c[1], w[1]).unwrap()),
        ];
        TensorField::new(factors).unwrap()
    }

    #[test]
    fn aniso_index_set_for_four_one() {
        let spec = SmoothnessSpec::aniso(4, 1, 1, 1, 2.0).unwrap();
        let mut set = index_set(&spec);
        set.sort();
        assert_eq!(
            set,
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![2, 0], vec![3, 0], vec![4, 0]]
        );
    }

    #[test]
    fn equal_orders_make_aniso_classical() {
        for s in 1..4 {
            let mut a = index_set(&SmoothnessSpec::aniso(s, s, 1, 2, 2.0).unwrap());
            let mut c = index_set(&SmoothnessSpec::classical(s, 1, 2, 2.0).unwrap());
            a.sort();
            c.sort();
            assert_eq!(a, c);
        }
    }

    #[test]
    fn aniso_indices_are_mixed_indices() {
        for s1 in 1..5 {
            for s2 in 1..5 {
                let mixed = index_set(&SmoothnessSpec::mixed(s1, s2, 2, 1, 2.0).unwrap());
                for a in index_set(&SmoothnessSpec::aniso(s1, s2, 2, 1, 2.0).unwrap()) {
                    assert!(mixed.contains(&a));
                }
            }
        }
    }

    #[test]
    fn zero_field_has_zero_norms() {
        let integ = Integrator::default();
        for spec in [
            SmoothnessSpec::mixed(2, 1, 1, 1, 2.0).unwrap(),
            SmoothnessSpec::classical(2, 1, 1, 2.0).unwrap(),
            SmoothnessSpec::aniso(2, 1, 1, 1, 2.0).unwrap(),
        ] {
            assert_eq!(sobolev_norm(&Zero, &spec, &integ).unwrap(), 0.0);
            assert!(ball_membership(&Zero, &spec, 0.5, &integ).unwrap().member);
        }
    }

    #[test]
    fn wrong_variant_is_rejected() {
        let spec = SmoothnessSpec::classical(2, 1, 1, 2.0).unwrap();
        assert!(mixed_norm(&Zero, &spec, &Integrator::default()).is_err());
        assert!(ball_membership(&Zero, &spec, 0.0, &Integrator::default()).is_err());
    }

    #[test]
    fn tensor_mixed_norm_factorises() {
        let f = bump2([0.2, -0.1], [0.8, 1.3]);
        let spec = SmoothnessSpec::mixed(2, 1, 1, 1, 2.0).unwrap();
        let integ = Integrator::default();
        let norm = mixed_norm(&f, &spec, &integ).unwrap();
        let factor = |c: f64, w: f64, s: usize| -> f64 {
            let b = ScaledBump::new(c, w).unwrap();
            (0..=s)
                .map(|j| crate::densities::line_lp_pow(|u| b.derivative(j, u), c - w, c + w, 2.0, 512).sqrt())
                .sum()
        };
        let expect = factor(0.2, 0.8, 2) * factor(-0.1, 1.3, 1);
        assert!((norm - expect).abs() < 1e-9 * expect, "{norm} vs {expect}");
    }

    #[test]
    fn sine_window_classical_norm_has_two_terms() {
        // s=1 in one block: ‖f‖ + ‖∂1 f‖ + ‖∂2 f‖ on a 2-d tensor field
        let f = bump2([0.0, 0.0], [1.0, 1.0]);
        let spec = SmoothnessSpec::classical(1, 1, 1, 2.0).unwrap();
        let integ = Integrator::default();
        let total = classical_norm(&f, &spec, &integ).unwrap();
        let parts: f64 = [[0, 0], [1, 0], [0, 1]]
            .iter()
            .map(|a| partial_lp_norm(&f, a, 2.0, &integ).unwrap())
            .sum();
        assert!((total - parts).abs() < 1e-14 * total);
    }

    #[test]
    fn finite_differences_limited_to_order_six() {
        struct NoPartials(TensorField);
        impl DifferentiableField for NoPartials {
            fn dim(&self) -> usize {
                2
            }
            fn eval(&self, x: &[f64]) -> f64 {
                self.0.eval(x)
            }
            fn support(&self) -> AxisBox {
                self.0.support()
            }
            fn feature_scale(&self) -> f64 {
                self.0.feature_scale()
            }
        }
        let f = NoPartials(bump2([0.0, 0.0], [1.0, 1.0]));
        let integ = Integrator::default();
        let err = partial_lp_norm(&f, &[4, 3], 2.0, &integ).unwrap_err();
        assert!(matches!(err, Error::UnsupportedOrder { order: 7, .. }));
        let fd = partial_lp_norm(&f, &[1, 1], 2.0, &integ).unwrap();
        let exact = partial_lp_norm(&f.0, &[1, 1], 2.0, &integ).unwrap();
        assert!((fd - exact).abs() < 1e-4 * exact);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn norm_chain_and_aniso_bound(
            cx in -1.0f64..1.0, cy in -1.0f64..1.0,
            wx in 0.5f64..2.0, wy in 0.5f64..2.0,
            s1 in 1usize..=2, s2 in 1usize..=2, p in 1.0f64..3.0,
        ) {
            let f = bump2([cx, cy], [wx, wy]);
            let integ = Integrator::default();
            let mixed = mixed_norm(&f, &SmoothnessSpec::mixed(s1, s2, 1, 1, p).unwrap(), &integ).unwrap();
            let low = classical_norm(&f, &SmoothnessSpec::classical(s1.min(s2), 1, 1, p).unwrap(), &integ).unwrap();
            let high = classical_norm(&f, &SmoothnessSpec::classical(s1 + s2, 1, 1, p).unwrap(), &integ).unwrap();
            let aniso = aniso_norm(&f, &SmoothnessSpec::aniso(s1, s2, 1, 1, p).unwrap(), &integ).unwrap();
            prop_assert!(low <= mixed + 1e-9);
            prop_assert!(mixed <= high + 1e-9);
            prop_assert!(aniso <= mixed + 1e-9);
        }

        #[test]
        fn homogeneous_and_subadditive(c in -3.0f64..3.0, shift in -0.5f64..0.5) {
            let f = bump2([0.0, 0.1], [1.0, 0.7]);
            let g = bump2([shift, -0.2], [0.6, 1.1]);
            let spec = SmoothnessSpec::mixed(1, 1, 1, 1, 2.0).unwrap();
            let integ = Integrator::default();
            let nf = mixed_norm(&Combo { a: 1.0, f: &f, b: 0.0, g: &g }, &spec, &integ).unwrap();
            let ng = mixed_norm(&Combo { a: 0.0, f: &f, b: 1.0, g: &g }, &spec, &integ).unwrap();
            let scaled = mixed_norm(&Combo { a: c, f: &f, b: 0.0, g: &g }, &spec, &integ).unwrap();
            prop_assert!((scaled - c.abs() * nf).abs() <= 1e-10 * nf);
            let sum = mixed_norm(&Combo { a: 1.0, f: &f, b: 1.0, g: &g }, &spec, &integ).unwrap();
            prop_assert!(sum <= nf + ng + 1e-9);
        }
    }
}
