//! The smooth bump k(u) = exp(−1/(1−u²)) on (−1,1), its normalisation Λ,
//! the antiderivative Λ̄ and the odd profile g = Λ ∗ (𝟙_{[0,1]} − 𝟙_{[−1,0]}).
//!
//! Derivatives use k^{(n)}(u) = P_n(u) (1−u²)^{−2n} k(u) with
//! P_{n+1} = P_n′ (1−u²)² + 4n u (1−u²) P_n − 2u P_n and P_0 = 1.

use crate::quadrature;
use std::sync::OnceLock;

/// Highest derivative order with a precomputed polynomial.
pub const MAX_DERIVATIVE: usize = 14;

/// Knot intervals of the tabulated antiderivative on [−1,1].
pub const CDF_KNOTS: usize = 16_384;

fn bump_polys() -> &'static [Vec<f64>] {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        // exact integer arithmetic, converted once
        let mut polys: Vec<Vec<i128>> = vec![vec![1]];
        for n in 0..MAX_DERIVATIVE {
            let p = &polys[n];
            let mut next = vec![0i128; p.len() + 3];
            // P′(1 − 2u² + u⁴)
            for k in 1..p.len() {
                let d = p[k] * k as i128;
                next[k - 1] += d;
                next[k + 1] -= 2 * d;
                next[k + 3] += d;
            }
            // 4n u (1 − u²) P − 2u P
            let four_n = 4 * n as i128;
            for (k, c) in p.iter().enumerate() {
                next[k + 1] += (four_n - 2) * c;
                next[k + 3] -= four_n * c;
            }
            while next.len() > 1 && next.last() == Some(&0) {
                next.pop();
            }
            polys.push(next);
        }
        polys
            .into_iter()
            .map(|p| p.into_iter().map(|c| c as f64).collect())
            .collect()
    })
}

/// k(u) = exp(−1/(1−u²)) for |u| < 1, else 0.
#[inline]
pub fn bump_k(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// k^{(order)}(u); zero outside (−1,1) and at ±1.
pub fn bump_derivative(order: usize, u: f64) -> f64 {
    assert!(
        order <= MAX_DERIVATIVE,
        "bump derivative order {order} exceeds {MAX_DERIVATIVE}"
    );
    if u.abs() >= 1.0 {
        return 0.0;
    }
    if order == 0 {
        return bump_k(u);
    }
    let w = 1.0 / (1.0 - u * u);
    let poly = &bump_polys()[order];
    let p = poly.iter().rev().fold(0.0, |acc, c| acc * u + c);
    // w^{2n} e^{−w} in log space keeps the edge behaviour finite
    let scale = (-w + 2.0 * order as f64 * w.ln()).exp();
    p * scale
}

struct LambdaTable {
    l1: f64,
    step: f64,
    cumulative: Vec<f64>,
}

/// Λ̄ on [−1, 0] at half of [`CDF_KNOTS`] + 1 knots; the right half
/// follows from Λ̄(u) = 1 − Λ̄(−u).
fn table() -> &'static LambdaTable {
    static TABLE: OnceLock<LambdaTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let intervals = CDF_KNOTS / 2;
        let step = 1.0 / intervals as f64;
        let (gx, gw) = quadrature::gauss_legendre(10);
        let mut cumulative = Vec::with_capacity(intervals + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for i in 0..intervals {
            let mid = -1.0 + (i as f64 + 0.5) * step;
            let piece: f64 = gx
                .iter()
                .zip(&gw)
                .map(|(x, w)| w * bump_k(mid + step / 2.0 * x))
                .sum::<f64>()
                * step
                / 2.0;
            acc += piece;
            cumulative.push(acc);
        }
        let l1 = 2.0 * acc;
        for c in &mut cumulative {
            *c /= l1;
        }
        LambdaTable { l1, step, cumulative }
    })
}

/// ‖k‖_1 ≈ 0.443994.
pub fn bump_l1() -> f64 {
    table().l1
}

/// Λ = k/‖k‖_1, a symmetric pdf on (−1,1).
#[inline]
pub fn lambda(u: f64) -> f64 {
    bump_k(u) / bump_l1()
}

pub fn lambda_derivative(order: usize, u: f64) -> f64 {
    bump_derivative(order, u) / bump_l1()
}

/// Λ̄(u) = ∫_{−1}^{u} Λ: 0 below −1, 1 above 1, cubic Hermite between
/// tabulated knots with the exact slopes Λ.
pub fn lambda_bar(u: f64) -> f64 {
    if u <= -1.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    if u > 0.0 {
        return 1.0 - lambda_bar(-u);
    }
    let t = table();
    let last = t.cumulative.len() - 1;
    let pos = (u + 1.0) / t.step;
    let i = (pos.floor() as usize).min(last - 1);
    let x0 = -1.0 + i as f64 * t.step;
    let s = (u - x0) / t.step;
    let (y0, y1) = (t.cumulative[i], if i + 1 == last { 0.5 } else { t.cumulative[i + 1] });
    let (m0, m1) = (lambda(x0) * t.step, lambda(x0 + t.step) * t.step);
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1
}

/// g(t) = 2Λ̄(t) − Λ̄(t−1) − Λ̄(t+1); odd, supported in [−2,2], |g| ≤ 1.
pub fn g_function(t: f64) -> f64 {
    if t.abs() >= 2.0 {
        return 0.0;
    }
    2.0 * lambda_bar(t) - lambda_bar(t - 1.0) - lambda_bar(t + 1.0)
}

/// g^{(order)}(t); for order ≥ 1 this is 2Λ^{(o−1)}(t) − Λ^{(o−1)}(t−1) − Λ^{(o−1)}(t+1).
pub fn g_derivative(order: usize, t: f64) -> f64 {
    if order == 0 {
        return g_function(t);
    }
    if t.abs() >= 2.0 {
        return 0.0;
    }
    let j = order - 1;
    2.0 * lambda_derivative(j, t) - lambda_derivative(j, t - 1.0) - lambda_derivative(j, t + 1.0)
}

/// ∫ |φ|^p over [lo, hi] on a fine composite rule.
pub(crate) fn line_lp_pow(phi: impl Fn(f64) -> f64, lo: f64, hi: f64, p: f64, panels: usize) -> f64 {
    let (x, w) = quadrature::composite_axis(lo, hi, panels, 8);
    x.iter()
        .zip(&w)
        .map(|(u, wt)| wt * quadrature::pow_abs(phi(*u), p))
        .sum()
}

/// ‖k^{(j)}‖_p.
pub fn bump_derivative_norm(order: usize, p: f64) -> f64 {
    line_lp_pow(|u| bump_derivative(order, u), -1.0, 1.0, p, 1024).powf(1.0 / p)
}

/// ‖g^{(j)}‖_p.
pub fn g_derivative_norm(order: usize, p: f64) -> f64 {
    line_lp_pow(|t| g_derivative(order, t), -2.0, 2.0, p, 2048).powf(1.0 / p)
}

/// ‖k‖_{W^s_p(ℝ)} = Σ_{j≤s} ‖k^{(j)}‖_p.
pub fn bump_sobolev_norm(s: usize, p: f64) -> f64 {
    (0..=s).map(|j| bump_derivative_norm(j, p)).sum()
}

/// ‖g‖_{W^s_p(ℝ)} = Σ_{j≤s} ‖g^{(j)}‖_p.
pub fn g_sobolev_norm(s: usize, p: f64) -> f64 {
    (0..=s).map(|j| g_derivative_norm(j, p)).sum()
}
