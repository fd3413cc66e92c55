//! The plateau/bump family {f_ω = f_0 + F_ω} used for minimax lower bounds.
//!
//! f_0 is a product of plateau profiles equal to (κ/N)^D on a central cube.
//! On that cube sits a grid of M^D disjoint blocks centred at
//! (ξ_{m_1}, …, ξ_{m_D}) with ξ_j = −(N−4)/(4κ) + 8jσ; block m carries
//! G_m(x) = Π g((x_i − ξ_{m_i})/σ) and F_ω = A Σ_m ω_{π(m)} G_m.

use super::bump::{self, g_derivative, g_function};
use super::code::{self, Code, Word};
use super::profile::{PlateauProfile, Profile, TensorField};
use super::sampler::{AxisCdf, RejectionSampler};
use super::Density;
use crate::error::{Error, Result};
use crate::quadrature::{self, AxisBox, TensorGrid};
use crate::serde_sig17;
use crate::sobolev::{DifferentiableField, Segment};
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use std::sync::Arc;

/// Largest block count M^D for which a family is materialised.
pub const MAX_BLOCKS: usize = 1 << 22;

/// Codewords materialised for large block counts.
pub const CODE_CAP: usize = 4096;

/// Largest D = d1 + d2 supported by the construction.
pub const MAX_DIM: usize = 16;

/// Relative slack when comparing quantities that agree by construction.
const REL_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Compact,
    Noncompact,
}

/// Every parameter of the construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub s1: usize,
    pub s2: usize,
    pub d1: usize,
    pub d2: usize,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub p: f64,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub r: f64,
    /// Sample size the parameters were chosen for (0 for explicit instances).
    pub n: u64,
    #[serde(rename = "N", serialize_with = "serde_sig17::f64")]
    pub big_n: f64,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub kappa: f64,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub sigma: f64,
    #[serde(rename = "A", serialize_with = "serde_sig17::f64")]
    pub a: f64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub epsilon: f64,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub r_star: f64,
    pub compact_regime: bool,
    /// Halvings applied to the closed-form amplitude (compact regime) or
    /// to C_6′ (non-compact regime) to reach feasibility.
    pub shrink_halvings: u32,
}

/// Constants of the parameter choice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyConstants {
    #[serde(serialize_with = "serde_sig17::f64")]
    pub c0: f64,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub c1: f64,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub c2: f64,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub c3: f64,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub c4: f64,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub c5: f64,
    /// Non-compact regime only.
    #[serde(serialize_with = "serde_sig17::f64")]
    pub c6: f64,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub c7: f64,
}

/// Norms of g entering the constants.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GNorms {
    #[serde(serialize_with = "serde_sig17::f64")]
    pub p: f64,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub lp: f64,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub l2: f64,
    pub sobolev_order: usize,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub sobolev: f64,
}

impl GNorms {
    pub fn compute(p: f64, order: usize) -> Result<Self> {
        quadrature::check_exponent(p)?;
        check_order(order + 1)?;
        Ok(GNorms {
            p,
            lp: bump::g_derivative_norm(0, p),
            l2: bump::g_derivative_norm(0, 2.0),
            sobolev_order: order,
            sobolev: bump::g_sobolev_norm(order, p),
        })
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > bump::MAX_DERIVATIVE + 1 {
        return Err(Error::UnsupportedOrder {
            order,
            reason: "bump derivatives are tabulated up to order 15",
        });
    }
    Ok(())
}

/// Inputs of [`choose_parameters`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterRequest {
    pub n: u64,
    pub r: f64,
    pub p: f64,
    pub s1: usize,
    pub s2: usize,
    pub d1: usize,
    pub d2: usize,
    pub regime: Regime,
    /// N of the compact regime.
    #[serde(rename = "N")]
    pub big_n: f64,
    pub max_shrink_halvings: u32,
}

impl ParameterRequest {
    #[allow(clippy::too_many_arguments)]
    pub fn new(n: u64, r: f64, p: f64, s1: usize, s2: usize, d1: usize, d2: usize, compact_regime: bool) -> Self {
        ParameterRequest {
            n,
            r,
            p,
            s1,
            s2,
            d1,
            d2,
            regime: if compact_regime {
                Regime::Compact
            } else {
                Regime::Noncompact
            },
            big_n: 10.0,
            max_shrink_halvings: 40,
        }
    }
}

fn epsilon_and_r_star(p: f64, r: f64) -> (f64, f64) {
    if p == 1.0 {
        ((r + 1.0) / (2.0 * r), r - 1.0)
    } else {
        (0.5, r)
    }
}

/// κ and C_0 for smoothness S, dimension D, exponent p and radius r.
fn kappa_and_c0(s: usize, d: usize, p: f64, r: f64) -> (f64, f64) {
    let (eps, _) = epsilon_and_r_star(p, r);
    let dd = d as f64;
    let c0 = (2.0 * bump::bump_sobolev_norm(s - 1, p) / bump::bump_l1()).powf(dd);
    let kappa = if p == 1.0 {
        ((eps * r - 1.0) / c0).min(1.0)
    } else {
        (eps * r / c0).powf(1.0 / (dd * (1.0 - 1.0 / p))).min(1.0)
    };
    (kappa, c0)
}

impl FamilyParams {
    /// A hand-picked instance; only the structural invariants are checked.
    #[allow(clippy::too_many_arguments)]
    pub fn explicit(
        s1: usize,
        s2: usize,
        d1: usize,
        d2: usize,
        p: f64,
        big_n: f64,
        kappa: f64,
        m: usize,
        a: f64,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::Parameter("M must be positive".into()));
        }
        let sigma = big_n / (20.0 * kappa * m as f64);
        let (epsilon, r_star) = epsilon_and_r_star(p, 2.0);
        let params = FamilyParams {
            s1,
            s2,
            d1,
            d2,
            p,
            r: 2.0,
            n: 0,
            big_n,
            kappa,
            sigma,
            a,
            m,
            epsilon,
            r_star,
            compact_regime: true,
            shrink_halvings: 0,
        };
        params.validate_structure()?;
        Ok(params)
    }

    pub fn smoothness(&self) -> usize {
        self.s1 + self.s2
    }

    pub fn dim(&self) -> usize {
        self.d1 + self.d2
    }

    /// M^D, or an error when it does not fit.
    pub fn block_count(&self) -> Result<usize> {
        (0..self.dim())
            .try_fold(1usize, |acc, _| acc.checked_mul(self.m))
            .filter(|&b| b <= MAX_BLOCKS)
            .ok_or_else(|| {
                Error::Construction(format!(
                    "M^D = {}^{} blocks exceed the limit {MAX_BLOCKS}",
                    self.m,
                    self.dim()
                ))
            })
    }

    /// ξ_j, j = 1..M.
    pub fn xi(&self, j: usize) -> f64 {
        self.xi_origin() + 8.0 * j as f64 * self.sigma
    }

    fn xi_origin(&self) -> f64 {
        -(self.big_n - 4.0) / (4.0 * self.kappa)
    }

    /// Interval [ξ_1 − 4σ, ξ_M + 4σ] holding every block with margin.
    pub fn hull(&self) -> (f64, f64) {
        (self.xi(1) - 4.0 * self.sigma, self.xi(self.m) + 4.0 * self.sigma)
    }

    /// Checks needed for f_ω to be well defined: N > 8, κ ∈ (0,1],
    /// 0 < A ≤ (κ/N)^D and blocks inside the plateau.
    pub fn validate_structure(&self) -> Result<()> {
        if self.s1 == 0 || self.s2 == 0 || self.d1 == 0 || self.d2 == 0 {
            return Err(Error::Parameter("orders and dimensions must be positive".into()));
        }
        if self.dim() > MAX_DIM {
            return Err(Error::Parameter(format!("D = {} exceeds {MAX_DIM}", self.dim())));
        }
        quadrature::check_exponent(self.p)?;
        if !(self.big_n > 8.0 && self.big_n.is_finite()) {
            return Err(Error::Parameter(format!("N must exceed 8, got {}", self.big_n)));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::Parameter(format!(
                "kappa must lie in (0, 1], got {}",
                self.kappa
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Parameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        let a_max = (self.kappa / self.big_n).powi(self.dim() as i32);
        if !(self.a > 0.0 && self.a <= a_max * (1.0 + REL_SLACK)) {
            return Err(Error::Infeasible(format!(
                "A ≤ (κ/N)^D violated: A = {:e}, (κ/N)^D = {a_max:e}",
                self.a
            )));
        }
        let inner = (self.big_n - 2.0) / (2.0 * self.kappa);
        let (lo, hi) = self.hull();
        if lo < -inner || hi > inner {
            return Err(Error::Construction(format!(
                "bump blocks [{lo}, {hi}] leave the plateau [{}, {inner}]",
                -inner
            )));
        }
        Ok(())
    }

    /// The remaining invariants of a parameter choice.
    pub fn validate(&self) -> Result<()> {
        self.validate_structure()?;
        let sigma_max = 1.0f64.min(1.0 / (20.0 * self.kappa));
        if !(self.sigma < sigma_max) {
            return Err(Error::Infeasible(format!(
                "σ < min(1, 1/(20κ)) violated: σ = {:e}, bound {sigma_max:e}",
                self.sigma
            )));
        }
        let blocks = (self.m as f64).powi(self.dim() as i32);
        if blocks < 8.0 {
            return Err(Error::Infeasible(format!("M^D ≥ 8 violated: M^D = {blocks}")));
        }
        if self.p == 1.0 && !(self.r > 1.0) {
            return Err(Error::Parameter(format!("p = 1 needs r > 1, got {}", self.r)));
        }
        let (eps, rs) = epsilon_and_r_star(self.p, self.r);
        if self.epsilon != eps || self.r_star != rs {
            return Err(Error::Parameter("epsilon or r_star inconsistent with p and r".into()));
        }
        Ok(())
    }

    pub fn constants(&self) -> Result<FamilyConstants> {
        let s = self.smoothness();
        check_order(s + 1)?;
        let dd = self.dim() as f64;
        let sf = s as f64;
        let p = self.p;
        let kappa = self.kappa;
        let (_, c0) = kappa_and_c0(s, self.dim(), p, self.r);
        let g = GNorms::compute(p, s)?;
        let c1 = 0.5 * g.lp.powf(dd) * (1.0 / (20.0 * kappa)).powf(dd / p) * 8f64.powf(-1.0 / p);
        let c2 = 20f64.powf(-dd) * kappa.powf(-2.0 * dd) * g.l2.powf(2.0 * dd);
        if self.compact_regime {
            let c3 = 2.0 * g.sobolev.powf(dd) * (self.big_n / (20.0 * kappa)).powf(dd / p);
            let c4 = c3.powf(1.0 / sf);
            let c5 = (LN_2 / (8.0 * c2 * c4.powf(dd) * self.big_n.powf(dd) * (20.0 * kappa).powf(dd)))
                .powf(sf / (2.0 * sf + dd));
            Ok(FamilyConstants {
                c0,
                c1,
                c2,
                c3,
                c4,
                c5,
                c6: f64::NAN,
                c7: f64::NAN,
            })
        } else {
            let c3 = 2.0 * (20.0 * kappa).powf(-dd / p) * g.sobolev.powf(dd);
            let c4 = c3.powf(1.0 / sf);
            let c5 = LN_2 / (8.0 * c2 * c4.powf(dd) * (20.0 * kappa).powf(dd));
            let c6 = self.a * self.big_n.powf(dd);
            let ps = p * sf;
            let c7 = (c5 * c6.powf(-(ps + dd) / ps)).powf(ps / (ps + (p - 1.0) * dd));
            Ok(FamilyConstants {
                c0,
                c1,
                c2,
                c3,
                c4,
                c5,
                c6,
                c7,
            })
        }
    }

    /// ρ_n = C_1 A N^{D/p}.
    pub fn rho_n(&self) -> Result<f64> {
        Ok(self.constants()?.c1 * self.a * self.big_n.powf(self.dim() as f64 / self.p))
    }

    /// Whether M^D ln2/8 ≥ C_2 n N^{2D} A².
    pub fn information_condition(&self) -> Result<bool> {
        let c = self.constants()?;
        let dd = self.dim() as f64;
        let lhs = (self.m as f64).powf(dd) * LN_2 / 8.0;
        let rhs = c.c2 * self.n as f64 * self.big_n.powf(2.0 * dd) * self.a * self.a;
        Ok(lhs >= rhs * (1.0 - REL_SLACK))
    }
}

fn check_request(req: &ParameterRequest) -> Result<()> {
    if req.s1 == 0 || req.s2 == 0 || req.d1 == 0 || req.d2 == 0 {
        return Err(Error::Parameter("orders and dimensions must be positive".into()));
    }
    quadrature::check_exponent(req.p)?;
    check_order(req.s1 + req.s2 + 1)?;
    if req.n == 0 {
        return Err(Error::Parameter("n must be positive".into()));
    }
    if !(req.r > 0.0 && req.r.is_finite()) {
        return Err(Error::Parameter(format!("radius must be positive, got {}", req.r)));
    }
    if req.p == 1.0 && !(req.r > 1.0) {
        return Err(Error::Parameter(format!("p = 1 needs a radius above 1, got {}", req.r)));
    }
    Ok(())
}

/// Parameters of the construction for sample size `req.n`.
///
/// The closed-form amplitude is tried first; while an invariant fails it is
/// halved (compact regime) or C_6′ is halved (non-compact regime), at most
/// `req.max_shrink_halvings` times. The error names the violation of the
/// unshrunk choice.
pub fn choose_parameters(req: &ParameterRequest) -> Result<FamilyParams> {
    check_request(req)?;
    let s = req.s1 + req.s2;
    let d = req.d1 + req.d2;
    let (sf, dd, p) = (s as f64, d as f64, req.p);
    let (eps, rs) = epsilon_and_r_star(p, req.r);
    let (kappa, _) = kappa_and_c0(s, d, p, req.r);
    let mut first_error: Option<Error> = None;
    for k in 0..=req.max_shrink_halvings {
        let shrink = 0.5f64.powi(k as i32);
        let mut params = FamilyParams {
            s1: req.s1,
            s2: req.s2,
            d1: req.d1,
            d2: req.d2,
            p,
            r: req.r,
            n: req.n,
            big_n: req.big_n,
            kappa,
            sigma: f64::NAN,
            a: f64::NAN,
            m: 0,
            epsilon: eps,
            r_star: rs,
            compact_regime: req.regime == Regime::Compact,
            shrink_halvings: k,
        };
        let sigma0 = match req.regime {
            Regime::Compact => {
                if !(req.big_n > 8.0) {
                    return Err(Error::Parameter(format!("N must exceed 8, got {}", req.big_n)));
                }
                // constants do not depend on A
                params.a = 1.0;
                let c = params.constants()?;
                let a0 = c.c5 * (rs.powf(dd / sf) / req.n as f64).powf(sf / (2.0 * sf + dd));
                params.a = a0 * shrink;
                c.c4 * params.a.powf(1.0 / sf) * rs.powf(-1.0 / sf)
            }
            Regime::Noncompact => {
                let c6 = kappa.powf(dd) / 2.0 * shrink;
                // c5, c3, c4 do not depend on A or N; evaluate with a placeholder
                params.a = c6 / 100f64.powf(dd);
                params.big_n = 100.0;
                let c = params.constants()?;
                let ps = p * sf;
                let denom = ps + (p - 1.0) * dd;
                let c7 = (c.c5 * c6.powf(-(ps + dd) / ps)).powf(ps / denom);
                params.a = c7 * (req.n as f64).powf(-ps / denom) * rs.powf(p * dd / denom) * shrink;
                params.big_n = (c6 / params.a).powf(1.0 / dd);
                c.c4 * params.a.powf(1.0 / sf) * params.big_n.powf(dd / ps) * rs.powf(-1.0 / sf)
            }
        };
        let m_real = params.big_n / (20.0 * kappa * sigma0);
        let outcome = if !(m_real.is_finite() && m_real >= 1.0) {
            Err(Error::Infeasible(format!(
                "σ < min(1, 1/(20κ)) violated: σ = {sigma0:e} leaves no block (N/(20κσ) = {m_real:e})"
            )))
        } else if m_real > MAX_BLOCKS as f64 {
            Err(Error::Infeasible(format!(
                "N/(20κσ) = {m_real:e} blocks per axis is too many"
            )))
        } else {
            params.m = m_real.floor() as usize;
            params.sigma = params.big_n / (20.0 * kappa * params.m as f64);
            params.validate().and_then(|_| {
                if params.information_condition()? {
                    Ok(())
                } else {
                    Err(Error::Infeasible("M^D ln2/8 ≥ C_2 n N^{2D} A² violated".into()))
                }
            })
        };
        match outcome {
            Ok(()) => return Ok(params),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    let e = first_error.expect("at least one attempt");
    Err(Error::Infeasible(format!(
        "n = {} is too small for these parameters ({e}); still infeasible after {} halvings",
        req.n, req.max_shrink_halvings
    )))
}

/// f_0 as a product density.
pub fn build_f0(params: &FamilyParams) -> Result<Density> {
    let f0 = f0_field(params)?;
    Density::from_tensor("f0", f0, true)
}

fn f0_field(params: &FamilyParams) -> Result<TensorField> {
    let factor: Arc<dyn Profile> = Arc::new(PlateauProfile::new(params.big_n, params.kappa)?);
    TensorField::new(vec![factor; params.dim()])
}

/// f_0 + F_ω (or F_ω alone) as a field with analytic partials.
#[derive(Clone, Debug)]
pub struct FamilyField {
    f0: Arc<TensorField>,
    include_f0: bool,
    a: f64,
    sigma: f64,
    xi_origin: f64,
    m: usize,
    dim: usize,
    plateau_half_width: f64,
    edge_scale: f64,
    omega: Word,
}

impl FamilyField {
    /// Block coordinate j ∈ 1..=M and scaled offset t for one axis, if the
    /// point lies inside that block's support.
    #[inline]
    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let pos = (x - self.xi_origin) / (8.0 * self.sigma);
        let j = pos.round();
        if j < 1.0 || j > self.m as f64 {
            return None;
        }
        let t = (pos - j) * 8.0;
        (t.abs() < 2.0).then_some((j as usize, t))
    }

    /// π(m) − 1: mixed-radix index of the block with 1-based coordinates.
    fn block_index(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &j| acc * self.m + (j - 1))
    }

    fn perturbation(&self, x: &[f64], alpha: Option<&[usize]>) -> f64 {
        let mut coords = [0usize; MAX_DIM];
        let mut offsets = [0f64; MAX_DIM];
        for (i, &xi) in x.iter().enumerate() {
            match self.locate(xi) {
                Some((j, t)) => {
                    coords[i] = j;
                    offsets[i] = t;
                }
                None => return 0.0,
            }
        }
        if !self.omega.get(self.block_index(&coords[..self.dim])) {
            return 0.0;
        }
        let mut acc = self.a;
        for i in 0..self.dim {
            acc *= match alpha {
                None => g_function(offsets[i]),
                Some(al) => g_derivative(al[i], offsets[i]) / self.sigma.powi(al[i] as i32),
            };
        }
        acc
    }

    pub fn omega(&self) -> &Word {
        &self.omega
    }
}

impl DifferentiableField for FamilyField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let base = if self.include_f0 { self.f0.eval(x) } else { 0.0 };
        base + self.perturbation(x, None)
    }

    fn support(&self) -> AxisBox {
        self.f0.support()
    }

    fn partial(&self, alpha: &[usize], x: &[f64]) -> Option<f64> {
        let base = if self.include_f0 {
            self.f0.partial(alpha, x)?
        } else {
            0.0
        };
        Some(base + self.perturbation(x, Some(alpha)))
    }

    fn feature_scale(&self) -> f64 {
        self.sigma.min(self.edge_scale)
    }

    fn segments(&self) -> Vec<Vec<Segment>> {
        let bx = self.f0.support();
        let inner = self.plateau_half_width;
        let hull_lo = self.xi_origin + 8.0 * self.sigma - 4.0 * self.sigma;
        let hull_hi = self.xi_origin + 8.0 * self.m as f64 * self.sigma + 4.0 * self.sigma;
        // slightly enlarged so panel counts come out exact and panel edges
        // fall on the block boundaries
        let block_scale = self.sigma * (1.0 + 1e-9);
        let mut axis = Vec::new();
        if self.include_f0 {
            axis.push(Segment {
                lo: bx.lower()[0],
                hi: -inner,
                scale: self.edge_scale,
            });
            axis.push(Segment {
                lo: -inner,
                hi: hull_lo,
                scale: (hull_lo + inner).max(self.sigma),
            });
        }
        axis.push(Segment {
            lo: hull_lo,
            hi: hull_hi,
            scale: block_scale,
        });
        if self.include_f0 {
            axis.push(Segment {
                lo: hull_hi,
                hi: inner,
                scale: (inner - hull_hi).max(self.sigma),
            });
            axis.push(Segment {
                lo: inner,
                hi: bx.upper()[0],
                scale: self.edge_scale,
            });
        }
        vec![axis; self.dim]
    }
}

/// The family: f_0, a code Ω and accessors for the members f_ω.
#[derive(Clone, Debug)]
pub struct LowerBoundFamily {
    pub params: FamilyParams,
    pub constants: FamilyConstants,
    pub g_norms: GNorms,
    pub f0: Density,
    f0_field: Arc<TensorField>,
    f0_tables: Vec<AxisCdf>,
    /// Materialised codewords; at most [`CODE_CAP`] when M^D ≥ 8.
    pub code: Code,
}

/// Build f_0 and the code. For M^D < 8 the code is the whole hypercube.
pub fn build_family(params: &FamilyParams) -> Result<LowerBoundFamily> {
    params.validate_structure()?;
    let blocks = params.block_count()?;
    let constants = params.constants()?;
    let g_norms = GNorms::compute(params.p, params.smoothness())?;
    let f0 = build_f0(params)?;
    let f0_field = Arc::new(f0_field(params)?);
    let f0_tables = f0.marginal_tables().expect("f0 is a product density").to_vec();
    let code = if blocks < 8 {
        let words = (0..1usize << blocks)
            .map(|v| Word::from_bools(&(0..blocks).map(|i| v >> i & 1 == 1).collect::<Vec<_>>()))
            .collect();
        Code {
            length: blocks,
            min_distance_required: 1,
            target_size: (1usize << blocks) as f64,
            words,
        }
    } else {
        code::vg_code_capped(blocks, CODE_CAP, 0)?
    };
    Ok(LowerBoundFamily {
        params: params.clone(),
        constants,
        g_norms,
        f0,
        f0_field,
        f0_tables,
        code,
    })
}

impl LowerBoundFamily {
    pub fn block_count(&self) -> usize {
        self.code.length
    }

    fn check_word(&self, omega: &Word) -> Result<()> {
        crate::error::check_dim(self.block_count(), omega.len())
    }

    fn field(&self, omega: &Word, include_f0: bool) -> FamilyField {
        let p = &self.params;
        FamilyField {
            f0: self.f0_field.clone(),
            include_f0,
            a: p.a,
            sigma: p.sigma,
            xi_origin: p.xi_origin(),
            m: p.m,
            dim: p.dim(),
            plateau_half_width: (p.big_n - 2.0) / (2.0 * p.kappa),
            edge_scale: 0.05 / p.kappa,
            omega: omega.clone(),
        }
    }

    /// f_ω as a field.
    pub fn member_field(&self, omega: &Word) -> Result<FamilyField> {
        self.check_word(omega)?;
        Ok(self.field(omega, true))
    }

    /// F_ω alone.
    pub fn perturbation_field(&self, omega: &Word) -> Result<FamilyField> {
        self.check_word(omega)?;
        Ok(self.field(omega, false))
    }

    /// f_ω as a density sampled by rejection from f_0 plus a uniform floor.
    pub fn member(&self, omega: &Word) -> Result<Density> {
        let target: Arc<dyn DifferentiableField> = Arc::new(self.member_field(omega)?);
        let base: Arc<dyn DifferentiableField> = self.f0_field.clone();
        let sampler = RejectionSampler {
            base_tables: self.f0_tables.clone(),
            base,
            target,
            slack: self.params.a,
            envelope_box: self.f0_field.support(),
        };
        Density::from_rejection("f_omega", sampler, true)
    }

    /// Tensor grid over the block hull, panels of width σ/2 aligned with
    /// the block edges.
    pub fn hull_grid(&self, nodes_per_panel: usize) -> Result<TensorGrid> {
        let (lo, hi) = self.params.hull();
        let panels = 16 * self.params.m;
        let axis = quadrature::composite_axis(lo, hi, panels, nodes_per_panel);
        TensorGrid::from_axes(vec![axis; self.params.dim()])
    }

    /// Summary for export.
    pub fn summary(&self) -> FamilySummary {
        FamilySummary {
            params: self.params.clone(),
            constants: self.constants.clone(),
            g_norms: self.g_norms.clone(),
            block_count: self.block_count(),
            code_words: self.code.len(),
            code_target_size: self.code.target_size,
            code_min_distance_required: self.code.min_distance_required,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilySummary {
    pub params: FamilyParams,
    pub constants: FamilyConstants,
    pub g_norms: GNorms,
    pub block_count: usize,
    pub code_words: usize,
    #[serde(serialize_with = "serde_sig17::f64")]
    pub code_target_size: f64,
    pub code_min_distance_required: usize,
}

/// ‖f_ω − f_ω′‖_p^p = A^p ϱ(ω, ω′) σ^D ‖g‖_p^{pD}.
pub fn family_distance(fam: &LowerBoundFamily, omega: &Word, omega_prime: &Word) -> Result<f64> {
    fam.check_word(omega)?;
    fam.check_word(omega_prime)?;
    let p = &fam.params;
    let dd = p.dim() as f64;
    Ok(p.a.powf(p.p) * omega.hamming(omega_prime) as f64 * p.sigma.powf(dd) * fam.g_norms.lp.powf(p.p * dd))
}

/// ‖f_ω − f_ω′‖_p^p by tensor quadrature over the block hull.
pub fn family_distance_quadrature(
    fam: &LowerBoundFamily,
    omega: &Word,
    omega_prime: &Word,
    nodes_per_panel: usize,
) -> Result<f64> {
    let f = fam.member_field(omega)?;
    let g = fam.member_field(omega_prime)?;
    let grid = fam.hull_grid(nodes_per_panel)?;
    quadrature::integrate_grid(|x| quadrature::pow_abs(f.eval(x) - g.eval(x), fam.params.p), &grid)
}

/// (1 + κ^{−D} N^D A² k σ^D ‖g‖_2^{2D})^n with k the weight of ω.
pub fn chi2_affinity(fam: &LowerBoundFamily, omega: &Word, n: u64) -> Result<f64> {
    Ok(log_chi2_affinity(fam, omega, n)?.exp())
}

/// Natural logarithm of [`chi2_affinity`].
pub fn log_chi2_affinity(fam: &LowerBoundFamily, omega: &Word, n: u64) -> Result<f64> {
    fam.check_word(omega)?;
    let p = &fam.params;
    let dd = p.dim() as f64;
    let per_sample = (p.big_n / p.kappa).powf(dd)
        * p.a
        * p.a
        * omega.weight() as f64
        * p.sigma.powf(dd)
        * fam.g_norms.l2.powf(2.0 * dd);
    Ok(n as f64 * per_sample.ln_1p())
}

/// ∫ F_ω²/f_0 by tensor quadrature over the block hull.
pub fn chi2_affinity_quadrature(fam: &LowerBoundFamily, omega: &Word, nodes_per_panel: usize) -> Result<f64> {
    let f = fam.member_field(omega)?;
    let f0 = fam.f0_field.clone();
    let grid = fam.hull_grid(nodes_per_panel)?;
    quadrature::integrate_grid(
        |x| {
            let base = f0.eval(x);
            let pert = f.eval(x) - base;
            pert * pert / base
        },
        &grid,
    )
}
