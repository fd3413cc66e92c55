//! Univariate profiles with closed-form derivatives, and their tensor products.

use super::bump;
use crate::error::{check_dim, Error, Result};
use crate::quadrature::AxisBox;
use crate::sobolev::{DifferentiableField, Segment};
use std::fmt::Debug;
use std::sync::Arc;

/// A smooth univariate function with analytic derivatives.
pub trait Profile: Send + Sync + Debug {
    fn value(&self, u: f64) -> f64;

    /// The `order`-th derivative; order 0 is the value.
    fn derivative(&self, order: usize, u: f64) -> f64;

    /// Interval outside of which the profile vanishes (or is negligible).
    fn support(&self) -> (f64, f64);

    /// Partition of the support with local feature scales.
    fn segments(&self) -> Vec<Segment>;

    fn feature_scale(&self) -> f64 {
        self.segments().iter().map(|s| s.scale).fold(f64::INFINITY, f64::min)
    }
}

/// Λ((u − c)/w)/w: the normalised bump centred at c with half-width w.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledBump {
    center: f64,
    half_width: f64,
}

impl ScaledBump {
    pub fn new(center: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite() && center.is_finite()) {
            return Err(Error::Parameter(format!(
                "bump needs a finite centre and positive half-width, got ({center}, {half_width})"
            )));
        }
        Ok(ScaledBump { center, half_width })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }
}

impl Profile for ScaledBump {
    fn value(&self, u: f64) -> f64 {
        bump::lambda((u - self.center) / self.half_width) / self.half_width
    }

    fn derivative(&self, order: usize, u: f64) -> f64 {
        let w = self.half_width;
        bump::lambda_derivative(order, (u - self.center) / w) / w.powi(order as i32 + 1)
    }

    fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    fn segments(&self) -> Vec<Segment> {
        let (lo, hi) = self.support();
        vec![Segment {
            lo,
            hi,
            scale: 0.05 * self.half_width,
        }]
    }
}

/// (κ/N)·Λ̃(κx) with Λ̃(v) = Λ̄(v + N/2) − Λ̄(v − N/2): a pdf equal to κ/N
/// on |x| ≤ (N−2)/(2κ) and vanishing for |x| ≥ (N+2)/(2κ).
#[derive(Clone, Debug, PartialEq)]
pub struct PlateauProfile {
    big_n: f64,
    kappa: f64,
}

impl PlateauProfile {
    pub fn new(big_n: f64, kappa: f64) -> Result<Self> {
        if !(big_n > 8.0 && big_n.is_finite()) {
            return Err(Error::Parameter(format!(
                "plateau parameter N must exceed 8, got {big_n}"
            )));
        }
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::Parameter(format!("kappa must lie in (0, 1], got {kappa}")));
        }
        Ok(PlateauProfile { big_n, kappa })
    }

    pub fn plateau_value(&self) -> f64 {
        self.kappa / self.big_n
    }

    /// Half-width of the region where the profile is exactly constant.
    pub fn plateau_half_width(&self) -> f64 {
        (self.big_n - 2.0) / (2.0 * self.kappa)
    }
}

impl Profile for PlateauProfile {
    fn value(&self, x: f64) -> f64 {
        let v = self.kappa * x;
        let half = self.big_n / 2.0;
        if v.abs() <= half - 1.0 {
            return self.plateau_value();
        }
        self.plateau_value() * (bump::lambda_bar(v + half) - bump::lambda_bar(v - half))
    }

    fn derivative(&self, order: usize, x: f64) -> f64 {
        if order == 0 {
            return self.value(x);
        }
        let v = self.kappa * x;
        let half = self.big_n / 2.0;
        let j = order - 1;
        self.plateau_value()
            * self.kappa.powi(order as i32)
            * (bump::lambda_derivative(j, v + half) - bump::lambda_derivative(j, v - half))
    }

    fn support(&self) -> (f64, f64) {
        let h = (self.big_n + 2.0) / (2.0 * self.kappa);
        (-h, h)
    }

    fn segments(&self) -> Vec<Segment> {
        let (lo, hi) = self.support();
        let inner = self.plateau_half_width();
        let edge = 0.05 / self.kappa;
        vec![
            Segment {
                lo,
                hi: -inner,
                scale: edge,
            },
            Segment {
                lo: -inner,
                hi: inner,
                scale: 2.0 * inner,
            },
            Segment {
                lo: inner,
                hi,
                scale: edge,
            },
        ]
    }
}

/// Normal density with mean μ and standard deviation s, truncated to
/// μ ± 9s for integration (the tail mass there is below 1e−18).
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianProfile {
    mean: f64,
    sd: f64,
}

const GAUSS_TRUNCATION: f64 = 9.0;

impl GaussianProfile {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0 && sd.is_finite() && mean.is_finite()) {
            return Err(Error::Parameter(format!(
                "gaussian needs a finite mean and positive sd, got ({mean}, {sd})"
            )));
        }
        Ok(GaussianProfile { mean, sd })
    }
}

impl Profile for GaussianProfile {
    fn value(&self, u: f64) -> f64 {
        let z = (u - self.mean) / self.sd;
        (-0.5 * z * z).exp() / (self.sd * (2.0 * std::f64::consts::PI).sqrt())
    }

    fn derivative(&self, order: usize, u: f64) -> f64 {
        // φ^{(k)}(z) = (−1)^k He_k(z) φ(z)
        let z = (u - self.mean) / self.sd;
        let (mut prev, mut he) = (0.0, 1.0);
        for k in 0..order {
            let next = z * he - k as f64 * prev;
            prev = he;
            he = next;
        }
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        sign * he * self.value(u) / self.sd.powi(order as i32)
    }

    fn support(&self) -> (f64, f64) {
        let h = GAUSS_TRUNCATION * self.sd;
        (self.mean - h, self.mean + h)
    }

    fn segments(&self) -> Vec<Segment> {
        let (lo, hi) = self.support();
        vec![Segment {
            lo,
            hi,
            scale: 0.5 * self.sd,
        }]
    }
}

/// f(x) = Π_j φ_j(x_j).
#[derive(Clone, Debug)]
pub struct TensorField {
    factors: Vec<Arc<dyn Profile>>,
    support: AxisBox,
}

impl TensorField {
    pub fn new(factors: Vec<Arc<dyn Profile>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Parameter("a tensor field needs at least one factor".into()));
        }
        let (lower, upper) = factors.iter().map(|f| f.support()).unzip();
        let support = AxisBox::new(lower, upper)?;
        Ok(TensorField { factors, support })
    }

    pub fn factors(&self) -> &[Arc<dyn Profile>] {
        &self.factors
    }

    pub fn factor(&self, axis: usize) -> &dyn Profile {
        self.factors[axis].as_ref()
    }
}

impl DifferentiableField for TensorField {
    fn dim(&self) -> usize {
        self.factors.len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        debug_assert!(check_dim(self.factors.len(), x.len()).is_ok());
        let mut acc = 1.0;
        for (f, &xi) in self.factors.iter().zip(x) {
            acc *= f.value(xi);
            if acc == 0.0 {
                break;
            }
        }
        acc
    }

    fn support(&self) -> AxisBox {
        self.support.clone()
    }

    fn partial(&self, alpha: &[usize], x: &[f64]) -> Option<f64> {
        let mut acc = 1.0;
        for ((f, &a), &xi) in self.factors.iter().zip(alpha).zip(x) {
            acc *= f.derivative(a, xi);
            if acc == 0.0 {
                break;
            }
        }
        Some(acc)
    }

    fn feature_scale(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| f.feature_scale())
            .fold(f64::INFINITY, f64::min)
    }

    fn segments(&self) -> Vec<Vec<Segment>> {
        self.factors.iter().map(|f| f.segments()).collect()
    }

    fn as_tensor(&self) -> Option<&TensorField> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::bump::line_lp_pow;

    fn mass(p: &dyn Profile) -> f64 {
        p.segments()
            .iter()
            .map(|s| line_lp_pow(|u| p.value(u), s.lo, s.hi, 1.0, 256))
            .sum()
    }

    #[test]
    fn profiles_are_pdfs() {
        assert!((mass(&ScaledBump::new(0.3, 0.7).unwrap()) - 1.0).abs() < 1e-12);
        assert!((mass(&PlateauProfile::new(20.0, 1.0).unwrap()) - 1.0).abs() < 1e-10);
        assert!((mass(&PlateauProfile::new(10.0, 0.4).unwrap()) - 1.0).abs() < 1e-10);
        assert!((mass(&GaussianProfile::new(-0.2, 0.5).unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plateau_values() {
        let p = PlateauProfile::new(20.0, 1.0).unwrap();
        assert_eq!(p.value(0.0), 0.05);
        assert_eq!(p.value(8.99), 0.05);
        assert_eq!(p.value(11.0), 0.0);
        assert_eq!(p.value(-11.0), 0.0);
        assert_eq!(p.support(), (-11.0, 11.0));
        assert!(p.value(10.0) > 0.0 && p.value(10.0) < 0.05);
    }

    #[test]
    fn derivatives_match_difference_quotients() {
        let profiles: Vec<Box<dyn Profile>> = vec![
            Box::new(ScaledBump::new(0.1, 0.6).unwrap()),
            Box::new(PlateauProfile::new(12.0, 0.8).unwrap()),
            Box::new(GaussianProfile::new(0.3, 0.9).unwrap()),
        ];
        let points = [-6.9, -6.5, -0.3, 0.0, 0.25, 0.6, 1.1];
        for prof in &profiles {
            for order in 0..4 {
                for &u in &points {
                    let h = 1e-6;
                    let fd = (prof.derivative(order, u + h) - prof.derivative(order, u - h)) / (2.0 * h);
                    let exact = prof.derivative(order + 1, u);
                    assert!(
                        (fd - exact).abs() <= 1e-5 * exact.abs().max(1.0),
                        "{prof:?} order {order} at {u}: {fd} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn tensor_field_partials_are_products() {
        let f = TensorField::new(vec![
            Arc::new(ScaledBump::new(0.0, 1.0).unwrap()),
            Arc::new(GaussianProfile::new(0.0, 1.0).unwrap()),
        ])
        .unwrap();
        let x = [0.2, -0.4];
        assert_eq!(f.eval(&x), f.factor(0).value(0.2) * f.factor(1).value(-0.4));
        assert_eq!(
            f.partial(&[2, 1], &x).unwrap(),
            f.factor(0).derivative(2, 0.2) * f.factor(1).derivative(1, -0.4)
        );
        assert_eq!(f.eval(&[1.0, 0.0]), 0.0);
    }
}
