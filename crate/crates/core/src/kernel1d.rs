//! Univariate kernels of order s on [−1,1].
//!
//! A kernel of order s integrates to one and has vanishing moments
//! 1..s−1. The construction projects the Dirac mass at 0 onto the first t
//! orthonormal Legendre polynomials, K(u) = Σ_{m<t} φ_m(0) φ_m(u), which
//! reproduces every polynomial of degree < t. All arithmetic is exact
//! until the final conversion of the coefficients to `f64`.

use crate::error::{Error, Result};
use crate::quadrature::{self, AxisBox, QuadRule};
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub const MAX_ORDER: usize = 12;

/// Knots used for the sup-norm scan.
const SUP_GRID: usize = 10_001;

type Q = Ratio<i128>;

/// A polynomial kernel on [−1,1], zero outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnivariateKernel {
    pub order: usize,
    pub strict: bool,
    #[serde(serialize_with = "crate::serde_sig17::vec")]
    pub poly_coeffs: Vec<f64>,
}

/// Outcome of [`verify_order`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderReport {
    pub pass: bool,
    pub worst_violation: f64,
    pub absolute_moment_s: f64,
}

/// Coefficients (ascending powers) of the Legendre polynomials P_0..P_{n-1}.
fn legendre_table(n: usize) -> Vec<Vec<Q>> {
    let mut table: Vec<Vec<Q>> = Vec::with_capacity(n);
    for m in 0..n {
        let next = match m {
            0 => vec![Q::from_integer(1)],
            1 => vec![Q::zero(), Q::from_integer(1)],
            _ => {
                // m P_m = (2m−1) u P_{m−1} − (m−1) P_{m−2}
                let mut c = vec![Q::zero(); m + 1];
                let mf = Q::from_integer(m as i128);
                for (k, a) in table[m - 1].iter().enumerate() {
                    c[k + 1] += a * Q::from_integer(2 * m as i128 - 1) / mf;
                }
                for (k, a) in table[m - 2].iter().enumerate() {
                    c[k] -= a * Q::from_integer(m as i128 - 1) / mf;
                }
                c
            }
        };
        table.push(next);
    }
    table
}

/// Build the order-s Legendre kernel. With `strict`, even orders use one
/// more basis function so that moment s also vanishes; odd orders already
/// have a vanishing moment s by symmetry.
pub fn build_order_kernel(s: usize, strict: bool) -> Result<UnivariateKernel> {
    if !(1..=MAX_ORDER).contains(&s) {
        return Err(Error::UnsupportedOrder {
            order: s,
            reason: "kernel order must lie in 1..=12",
        });
    }
    let terms = if strict && s % 2 == 0 { s + 1 } else { s };
    let table = legendre_table(terms);
    let mut coeffs = vec![Q::zero(); terms];
    for (m, pm) in table.iter().enumerate() {
        // φ_m(0) φ_m(u) = (2m+1)/2 · P_m(0) · P_m(u)
        let scale = Q::new(2 * m as i128 + 1, 2) * pm[0];
        if scale.is_zero() {
            continue;
        }
        for (k, a) in pm.iter().enumerate() {
            coeffs[k] += scale * a;
        }
    }
    while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
        coeffs.pop();
    }
    Ok(UnivariateKernel {
        order: s,
        strict,
        poly_coeffs: coeffs.iter().map(|c| c.to_f64().expect("finite rational")).collect(),
    })
}

impl UnivariateKernel {
    /// The uniform kernel 1/2 on [−1,1].
    pub fn uniform() -> Self {
        UnivariateKernel {
            order: 2,
            strict: false,
            poly_coeffs: vec![0.5],
        }
    }

    pub fn degree(&self) -> usize {
        self.poly_coeffs.len().saturating_sub(1)
    }

    /// Polynomial value ignoring the support restriction.
    #[inline]
    pub fn poly(&self, u: f64) -> f64 {
        self.poly_coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if (-1.0..=1.0).contains(&u) {
            self.poly(u)
        } else {
            0.0
        }
    }

    /// `eval(-u) == eval(u)` bit for bit: only even powers are present.
    pub fn is_symmetric(&self) -> bool {
        self.poly_coeffs.iter().skip(1).step_by(2).all(|c| *c == 0.0)
    }

    /// sup |K| scanned on a 10,001-point grid of [−1,1].
    pub fn sup_norm(&self) -> f64 {
        (0..SUP_GRID)
            .map(|i| self.poly(-1.0 + 2.0 * i as f64 / (SUP_GRID - 1) as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Sign changes of the polynomial inside (−1,1), refined by bisection.
    pub fn roots(&self) -> Vec<f64> {
        let n = SUP_GRID;
        let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
        let mut roots = Vec::new();
        for w in xs.windows(2) {
            let (mut a, mut b) = (w[0], w[1]);
            let (fa, fb) = (self.poly(a), self.poly(b));
            if fa == 0.0 && a > -1.0 {
                roots.push(a);
                continue;
            }
            if fa * fb < 0.0 {
                let mut fa = fa;
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    let fm = self.poly(m);
                    if fm == 0.0 {
                        a = m;
                        b = m;
                        break;
                    }
                    if (fm < 0.0) == (fa < 0.0) {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                roots.push(0.5 * (a + b));
            }
        }
        roots
    }

    /// ∫ g(u)|K(u)|^q-type integrals over [−1,1] split at the kernel roots
    /// and at 0, so each piece has a smooth integrand.
    fn piecewise_integral<F: Fn(f64) -> f64>(&self, integrand: F) -> f64 {
        let mut cuts = vec![-1.0, 0.0, 1.0];
        cuts.extend(self.roots());
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (x, wt) = quadrature::composite_axis(w[0], w[1], 16, 16);
            total += x.iter().zip(&wt).map(|(u, w)| w * integrand(*u)).sum::<f64>();
        }
        total
    }

    /// ∫ |u|^s |K(u)| du.
    pub fn absolute_moment(&self, s: usize) -> f64 {
        self.piecewise_integral(|u| u.abs().powi(s as i32) * self.poly(u).abs())
    }

    /// ‖K‖_q for q ∈ [1, ∞]; `q = f64::INFINITY` gives the sup norm.
    pub fn q_norm(&self, q: f64) -> Result<f64> {
        if q.is_infinite() && q > 0.0 {
            return Ok(self.sup_norm());
        }
        quadrature::check_exponent(q)?;
        let integral = self.piecewise_integral(|u| quadrature::pow_abs(self.poly(u), q));
        Ok(integral.powf(1.0 / q))
    }
}

/// ∫ u^ν K(u) du by Gauss–Legendre quadrature exact for the polynomial
/// degree of the integrand.
pub fn moment(kernel: &UnivariateKernel, nu: usize) -> f64 {
    let degree = nu + kernel.degree();
    let nodes = (degree / 2 + 1).max(quadrature::DEFAULT_NODES_PER_PANEL);
    let bx = AxisBox::cube(1, -1.0, 1.0).expect("valid box");
    let rule = QuadRule::new(nodes, vec![1]).expect("valid rule");
    quadrature::integrate(|u| u[0].powi(nu as i32) * kernel.poly(u[0]), &bx, &rule)
        .expect("polynomial integrand is finite")
}

/// Check normalisation, vanishing moments 1..s−1 (and s when the kernel is
/// strict), and finiteness of the s-th absolute moment and of sup |K|.
pub fn verify_order(kernel: &UnivariateKernel, s: usize, tol: f64) -> Result<OrderReport> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    let last = if kernel.strict { s } else { s.saturating_sub(1) };
    let worst_violation = std::iter::once((moment(kernel, 0) - 1.0).abs())
        .chain((1..=last).map(|nu| moment(kernel, nu).abs()))
        .fold(0.0, f64::max);
    let absolute_moment_s = kernel.absolute_moment(s);
    let pass = worst_violation <= tol && absolute_moment_s.is_finite() && kernel.sup_norm().is_finite();
    Ok(OrderReport {
        pass,
        worst_violation,
        absolute_moment_s,
    })
}

impl UnivariateKernel {
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

    #[test]
    fn order_two_is_uniform() {
        let k = build_order_kernel(2, false).unwrap();
        assert_eq!(k.poly_coeffs, vec![0.5]);
        assert_eq!(k.eval(0.3), 0.5);
        assert_eq!(k.eval(1.5), 0.0);
    }

    #[test]
    fn order_four_closed_form() {
        let k = build_order_kernel(4, false).unwrap();
        assert_eq!(k.poly_coeffs, vec![9.0 / 8.0, 0.0, -15.0 / 8.0]);
        for u in [-0.9, -0.2, 0.0, 0.45, 1.0] {
            assert!((k.eval(u) - (9.0 - 15.0 * u * u) / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn strict_even_order_adds_a_term() {
        // strict s=2 kills moment 2, which is the order-4 kernel
        assert_eq!(
            build_order_kernel(2, true).unwrap().poly_coeffs,
            build_order_kernel(4, false).unwrap().poly_coeffs
        );
        // odd orders are unchanged, only the flag differs
        let a = build_order_kernel(3, true).unwrap();
        let b = build_order_kernel(3, false).unwrap();
        assert_eq!(a.poly_coeffs, b.poly_coeffs);
        assert!(a.strict && !b.strict);
    }

    #[test]
    fn unsupported_orders() {
        assert!(matches!(
            build_order_kernel(0, false),
            Err(Error::UnsupportedOrder { .. })
        ));
        assert!(matches!(
            build_order_kernel(13, true),
            Err(Error::UnsupportedOrder { .. })
        ));
    }

    #[test]
    fn moment_examples() {
        let k2 = build_order_kernel(2, false).unwrap();
        assert!((moment(&k2, 0) - 1.0).abs() < 1e-10);
        let k4 = build_order_kernel(4, false).unwrap();
        assert!(moment(&k4, 2).abs() < 1e-8);
        assert!((moment(&UnivariateKernel::uniform(), 2) - 1.0 / 3.0).abs() < 1e-15);
        for s in 1..=MAX_ORDER {
            let k = build_order_kernel(s, s % 3 == 0).unwrap();
            for nu in (1..15).step_by(2) {
                assert!(moment(&k, nu).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn verify_order_examples() {
        let k4 = build_order_kernel(4, false).unwrap();
        assert!(verify_order(&k4, 4, 1e-8).unwrap().pass);
        let uniform = UnivariateKernel::uniform();
        let report = verify_order(&uniform, 3, 1e-8).unwrap();
        assert!(!report.pass);
        assert!((report.worst_violation - 1.0 / 3.0).abs() < 1e-14);
        assert!(
            verify_order(&build_order_kernel(2, false).unwrap(), 2, 1e-8)
                .unwrap()
                .pass
        );
        assert!(verify_order(&k4, 4, 0.0).is_err());
    }

    #[test]
    fn every_built_kernel_verifies() {
        for s in 1..=8 {
            for strict in [false, true] {
                let k = build_order_kernel(s, strict).unwrap();
                assert!(k.is_symmetric());
                let r = verify_order(&k, s, 1e-8).unwrap();
                assert!(r.pass, "s={s} strict={strict}: {r:?}");
                assert!(r.absolute_moment_s.is_finite() && r.absolute_moment_s > 0.0);
            }
        }
    }

    #[test]
    fn rebuild_is_bitwise_identical() {
        for s in 1..=MAX_ORDER {
            let a = build_order_kernel(s, true).unwrap();
            let b = build_order_kernel(s, true).unwrap();
            let bits = |k: &UnivariateKernel| k.poly_coeffs.iter().map(|c| c.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a), bits(&b));
        }
    }

    #[test]
    fn symmetric_evaluation() {
        let k = build_order_kernel(6, true).unwrap();
        for i in 0..200 {
            let u = i as f64 / 199.0;
            assert_eq!(k.eval(u).to_bits(), k.eval(-u).to_bits());
        }
    }

    #[test]
    fn q_norms_of_order_four_kernel() {
        let k = build_order_kernel(4, false).unwrap();
        // ∫((9−15u²)/8)² du = (162 − 180 + 90)/64 on [−1,1]
        let exact = (72.0f64 / 64.0).sqrt();
        assert!((k.q_norm(2.0).unwrap() - exact).abs() < 1e-13);
        assert!((k.q_norm(f64::INFINITY).unwrap() - 1.125).abs() < 1e-12);
        assert!(k.q_norm(0.5).is_err());
        // ∫|K|: roots at ±√(3/5)
        let r = (0.6f64).sqrt();
        let anti = |u: f64| (9.0 * u - 5.0 * u.powi(3)) / 8.0;
        let l1 = 2.0 * (anti(r) - anti(0.0)) - 2.0 * (anti(1.0) - anti(r));
        assert!((k.q_norm(1.0).unwrap() - l1).abs() < 1e-13);
    }

    #[test]
    fn json_uses_seventeen_significant_digits() {
        let k = build_order_kernel(4, false).unwrap();
        let text = k.to_json().unwrap();
        assert!(text.contains("1.1250000000000000e"), "{text}");
        assert!(text.contains("-1.8750000000000000e"));
        let back = UnivariateKernel::from_json(&text).unwrap();
        assert_eq!(back, k);
    }
}
