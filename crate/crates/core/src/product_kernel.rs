//! Tensor kernels on ℝ^{d1}×ℝ^{d2} and numerical verification of the
//! kernel class conditions: unit mass, vanishing mixed moments, a finite
//! top-order absolute moment I_{(s1,s2)} and boundedness.
//!
//! Every integral is computed by factorising into univariate integrals of
//! the two factor kernels; nothing materialises a (d1+d2)-dimensional grid.

use crate::error::{check_dim, Error, Result};
use crate::kernel1d::{self, UnivariateKernel};
use crate::quadrature::{self, QuadRule};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// K(u) = Π_{j<d1} κ1(u_j) · Π_{j≥d1} κ2(u_j), supported in [−1,1]^{d1+d2}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductKernel {
    pub s1: usize,
    pub s2: usize,
    pub d1: usize,
    pub d2: usize,
    pub kappa1: UnivariateKernel,
    pub kappa2: UnivariateKernel,
}

/// Result of [`verify_class`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassReport {
    pub markov_defect: f64,
    pub worst_moment: f64,
    /// The multi-index attaining `worst_moment`, if any moment is required.
    pub worst_alpha: Option<Vec<usize>>,
    pub i_s1_s2: f64,
    pub sup_norm: f64,
    pub pass: bool,
}

pub fn tensor_kernel(
    kappa1: UnivariateKernel,
    d1: usize,
    kappa2: UnivariateKernel,
    d2: usize,
    s1: usize,
    s2: usize,
) -> Result<ProductKernel> {
    if d1 == 0 || d2 == 0 || s1 == 0 || s2 == 0 {
        return Err(Error::Parameter(format!(
            "d1, d2, s1, s2 must be positive (got d1={d1}, d2={d2}, s1={s1}, s2={s2})"
        )));
    }
    Ok(ProductKernel {
        s1,
        s2,
        d1,
        d2,
        kappa1,
        kappa2,
    })
}

/// Tensor kernel with strict Legendre factors of orders s1 and s2.
pub fn strict_tensor_kernel(s1: usize, s2: usize, d1: usize, d2: usize) -> Result<ProductKernel> {
    tensor_kernel(
        kernel1d::build_order_kernel(s1, true)?,
        d1,
        kernel1d::build_order_kernel(s2, true)?,
        d2,
        s1,
        s2,
    )
}

/// All α ∈ ℕ^dim with |α| ≤ max_total.
pub(crate) fn multi_indices(dim: usize, max_total: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == dim {
            out.push(prefix.clone());
            return;
        }
        for a in 0..=left {
            prefix.push(a);
            rec(dim, left - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, max_total, &mut Vec::with_capacity(dim), &mut out);
    out
}

/// Multi-indices α = (α1, α2) with 1 ≤ |α| < s1+s2, |α1| ≤ s1, |α2| ≤ s2.
pub fn required_moment_indices(s1: usize, s2: usize, d1: usize, d2: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for a1 in multi_indices(d1, s1) {
        for a2 in multi_indices(d2, s2) {
            let total: usize = a1.iter().chain(&a2).sum();
            if total >= 1 && total < s1 + s2 {
                out.push(a1.iter().chain(&a2).copied().collect());
            }
        }
    }
    out
}

impl ProductKernel {
    pub fn dim(&self) -> usize {
        self.d1 + self.d2
    }

    /// Factor kernel acting on axis `axis`.
    pub fn factor(&self, axis: usize) -> &UnivariateKernel {
        if axis < self.d1 {
            &self.kappa1
        } else {
            &self.kappa2
        }
    }

    pub fn eval(&self, u: &[f64]) -> Result<f64> {
        check_dim(self.dim(), u.len())?;
        Ok(self.eval_unchecked(u))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, u: &[f64]) -> f64 {
        let mut acc = 1.0;
        for (j, v) in u.iter().enumerate() {
            acc *= self.factor(j).eval(*v);
            if acc == 0.0 {
                break;
            }
        }
        acc
    }

    /// ∫ u^α K(u) du as a product of univariate moments.
    pub fn mixed_moment(&self, alpha: &[usize]) -> Result<f64> {
        check_dim(self.dim(), alpha.len())?;
        Ok(alpha
            .iter()
            .enumerate()
            .map(|(j, a)| kernel1d::moment(self.factor(j), *a))
            .product())
    }

    /// (∫κ1)^{d1} (∫κ2)^{d2}.
    pub fn total_mass(&self) -> f64 {
        kernel1d::moment(&self.kappa1, 0).powi(self.d1 as i32) * kernel1d::moment(&self.kappa2, 0).powi(self.d2 as i32)
    }

    pub fn sup_norm(&self) -> f64 {
        self.kappa1.sup_norm().powi(self.d1 as i32) * self.kappa2.sup_norm().powi(self.d2 as i32)
    }
}

/// ‖K‖_q through the factorisation ‖K‖_q = ‖κ1‖_q^{d1} ‖κ2‖_q^{d2};
/// `q = ∞` gives the sup norm.
pub fn q_norm(kernel: &ProductKernel, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::Domain(format!("q must be at least 1, got {q}")));
    }
    Ok(kernel.kappa1.q_norm(q)?.powi(kernel.d1 as i32) * kernel.kappa2.q_norm(q)?.powi(kernel.d2 as i32))
}

/// Check the kernel-class conditions for (s1, s2) within `tol`. The rule
/// supplies the Gauss–Legendre order used for the univariate moments.
pub fn verify_class(kernel: &ProductKernel, tol: f64, rule: &QuadRule) -> Result<ClassReport> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    let nodes = rule.nodes_per_panel();
    let panels = rule.panels_per_axis()[0];
    let bx = quadrature::AxisBox::cube(1, -1.0, 1.0)?;
    let mut cache: HashMap<(usize, usize), f64> = HashMap::new();
    let mut moment = |which: usize, nu: usize| -> Result<f64> {
        if let Some(v) = cache.get(&(which, nu)) {
            return Ok(*v);
        }
        let k = if which == 1 { &kernel.kappa1 } else { &kernel.kappa2 };
        // enough nodes for exactness on the polynomial integrand
        let npp = nodes.max((nu + k.degree()) / 2 + 1);
        let r = QuadRule::new(npp, vec![panels])?;
        let v = quadrature::integrate(|u| u[0].powi(nu as i32) * k.poly(u[0]), &bx, &r)?;
        cache.insert((which, nu), v);
        Ok(v)
    };
    let mass = moment(1, 0)?.powi(kernel.d1 as i32) * moment(2, 0)?.powi(kernel.d2 as i32);
    let markov_defect = (mass - 1.0).abs();

    let mut worst_moment = 0.0;
    let mut worst_alpha = None;
    for alpha in required_moment_indices(kernel.s1, kernel.s2, kernel.d1, kernel.d2) {
        let mut value = 1.0;
        for (j, a) in alpha.iter().enumerate() {
            value *= moment(if j < kernel.d1 { 1 } else { 2 }, *a)?;
        }
        if worst_alpha.is_none() || value.abs() > worst_moment {
            worst_moment = value.abs();
            worst_alpha = Some(alpha);
        }
    }

    let mut abs_cache: HashMap<(usize, usize), f64> = HashMap::new();
    let mut abs_moment = |which: usize, e: usize| -> f64 {
        *abs_cache.entry((which, e)).or_insert_with(|| {
            let k = if which == 1 { &kernel.kappa1 } else { &kernel.kappa2 };
            k.absolute_moment(e)
        })
    };
    let mut i_s1_s2: f64 = 0.0;
    for a1 in multi_indices(kernel.d1, kernel.s1)
        .into_iter()
        .filter(|a| a.iter().sum::<usize>() == kernel.s1)
    {
        for a2 in multi_indices(kernel.d2, kernel.s2)
            .into_iter()
            .filter(|a| a.iter().sum::<usize>() == kernel.s2)
        {
            let v: f64 = a1.iter().map(|e| abs_moment(1, *e)).product::<f64>()
                * a2.iter().map(|e| abs_moment(2, *e)).product::<f64>();
            i_s1_s2 = i_s1_s2.max(v);
        }
    }
    let sup_norm = kernel.sup_norm();
    let pass = markov_defect <= tol && worst_moment <= tol && i_s1_s2.is_finite() && sup_norm.is_finite();
    Ok(ClassReport {
        markov_defect,
        worst_moment,
        worst_alpha,
        i_s1_s2,
        sup_norm,
        pass,
    })
}

impl ProductKernel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, AxisBox};

    fn default_rule() -> QuadRule {
        QuadRule::new(8, vec![1]).unwrap()
    }

    fn uniform2(d1: usize, d2: usize, s1: usize, s2: usize) -> ProductKernel {
        tensor_kernel(UnivariateKernel::uniform(), d1, UnivariateKernel::uniform(), d2, s1, s2).unwrap()
    }

    #[test]
    fn uniform_square_values() {
        let k = uniform2(1, 1, 1, 1);
        assert_eq!(k.eval(&[0.3, -0.9]).unwrap(), 0.25);
        assert_eq!(k.eval(&[1.5, 0.0]).unwrap(), 0.0);
        assert_eq!(uniform2(2, 1, 1, 1).eval(&[0.0; 3]).unwrap(), 0.125);
        assert!(matches!(k.eval(&[0.0]), Err(Error::Dimension { expected: 2, got: 1 })));
    }

    #[test]
    fn strict_kernel_at_origin() {
        let k = strict_tensor_kernel(2, 2, 1, 1).unwrap();
        let expected = k.kappa1.eval(0.0) * k.kappa2.eval(0.0);
        assert_eq!(k.eval(&[0.0, 0.0]).unwrap(), expected);
    }

    #[test]
    fn required_indices_for_two_one() {
        let idx = required_moment_indices(2, 1, 1, 1);
        assert_eq!(idx.len(), 4);
        for a in [[1, 0], [2, 0], [0, 1], [1, 1]] {
            assert!(idx.contains(&a.to_vec()));
        }
        // d1 = d2 = 1 counts: all (a, b) with a ≤ s1, b ≤ s2, 1 ≤ a+b < s1+s2
        for s1 in 1..4 {
            for s2 in 1..4 {
                assert_eq!(required_moment_indices(s1, s2, 1, 1).len(), (s1 + 1) * (s2 + 1) - 2);
            }
        }
    }

    #[test]
    fn strict_kernels_are_in_class() {
        for s1 in 1..=3 {
            for s2 in 1..=3 {
                for (d1, d2) in [(1, 1), (2, 1), (1, 2)] {
                    let k = strict_tensor_kernel(s1, s2, d1, d2).unwrap();
                    let r = verify_class(&k, 1e-8, &default_rule()).unwrap();
                    assert!(r.pass, "({s1},{s2}) d=({d1},{d2}): {r:?}");
                }
            }
        }
    }

    #[test]
    fn uniform_tensor_is_not_order_two_two() {
        let r = verify_class(&uniform2(1, 1, 2, 2), 1e-8, &default_rule()).unwrap();
        assert!(!r.pass);
        assert!((r.worst_moment - 1.0 / 3.0).abs() < 1e-14);
        assert!(r.sup_norm.is_finite());
    }

    #[test]
    fn q_norm_examples() {
        let k = uniform2(1, 1, 1, 1);
        assert!((q_norm(&k, 2.0).unwrap() - 0.5).abs() < 1e-14);
        let s = strict_tensor_kernel(2, 3, 2, 1).unwrap();
        let l1 = s.kappa1.q_norm(1.0).unwrap().powi(2) * s.kappa2.q_norm(1.0).unwrap();
        assert!((q_norm(&s, 1.0).unwrap() - l1).abs() < 1e-14);
        assert_eq!(q_norm(&s, f64::INFINITY).unwrap(), s.sup_norm());
        assert!(q_norm(&s, 0.9).is_err());
    }

    #[test]
    fn i_s1_s2_of_uniform() {
        // ∫|u1||u2| · 1/4 over [−1,1]² = (1/2)(1/2)
        let r = verify_class(&uniform2(1, 1, 1, 1), 1e-8, &default_rule()).unwrap();
        assert!((r.i_s1_s2 - 0.25).abs() < 1e-13);
    }

    // Direct tensor quadrature over [−1,1]^D, independent of the factorised path.
    fn tensor_moment(k: &ProductKernel, alpha: &[usize]) -> f64 {
        let bx = AxisBox::cube(k.dim(), -1.0, 1.0).unwrap();
        let rule = QuadRule::uniform(k.dim(), 10, 1).unwrap();
        integrate(
            |u| u.iter().zip(alpha).map(|(x, a)| x.powi(*a as i32)).product::<f64>() * k.eval(u).unwrap(),
            &bx,
            &rule,
        )
        .unwrap()
    }

    #[test]
    fn factorised_moments_match_tensor_quadrature() {
        for (s1, s2, d1, d2) in [(2, 1, 1, 1), (3, 2, 2, 1), (1, 3, 1, 2), (2, 2, 1, 1)] {
            let k = strict_tensor_kernel(s1, s2, d1, d2).unwrap();
            assert!((k.total_mass() - tensor_moment(&k, &vec![0; d1 + d2])).abs() < 1e-10);
            for alpha in multi_indices(d1 + d2, 4) {
                let a = k.mixed_moment(&alpha).unwrap();
                let b = tensor_moment(&k, &alpha);
                assert!((a - b).abs() < 1e-10, "alpha {alpha:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let k = strict_tensor_kernel(2, 1, 1, 2).unwrap();
        let text = k.to_json().unwrap();
        for key in ["\"s1\"", "\"s2\"", "\"d1\"", "\"d2\"", "\"kappa1\"", "\"kappa2\""] {
            assert!(text.contains(key));
        }
        assert_eq!(ProductKernel::from_json(&text).unwrap(), k);
    }
}
