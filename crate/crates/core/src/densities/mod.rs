//! Test densities, the plateau/bump lower-bound family and samplers.

mod bump;
mod code;
mod family;
mod profile;
mod sampler;

#[cfg(test)]
pub(crate) use bump::line_lp_pow;
pub use bump::{
    bump_derivative, bump_derivative_norm, bump_k, bump_l1, bump_sobolev_norm, g_derivative, g_derivative_norm,
    g_function, g_sobolev_norm, lambda, lambda_bar, lambda_derivative, MAX_DERIVATIVE,
};
pub use code::{required_distance, target_size, vg_code, vg_code_capped, Code, Word, MATERIALIZE_LIMIT};
pub use family::{
    build_f0, build_family, chi2_affinity, chi2_affinity_quadrature, choose_parameters, family_distance,
    family_distance_quadrature, log_chi2_affinity, FamilyConstants, FamilyField, FamilyParams, FamilySummary, GNorms,
    LowerBoundFamily, ParameterRequest, Regime,
};
pub use profile::{GaussianProfile, PlateauProfile, Profile, ScaledBump, TensorField};
pub use sampler::{AxisCdf, PointSet, RejectionSampler, SamplerKind, CDF_TABLE_KNOTS, MIN_ACCEPTANCE};

use crate::error::{Error, Result};
use crate::quadrature::AxisBox;
use crate::sobolev::{DifferentiableField, Integrator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sampler::Sampler;
use std::fmt;
use std::sync::Arc;

/// Default tolerance on |∫f − 1|.
pub const PDF_TOL: f64 = 1e-8;

/// Values below this on the verification grid count as negative.
pub const NEGATIVITY_TOL: f64 = 1e-12;

const CHECK_GRID_PER_AXIS: usize = 256;
const CHECK_GRID_MAX_NODES: usize = 1 << 24;

/// A pdf with a sampler.
#[derive(Clone)]
pub struct Density {
    name: String,
    field: Arc<dyn DifferentiableField>,
    tensor: Option<Arc<TensorField>>,
    sampler: Sampler,
    is_pdf_tol: f64,
    compact: bool,
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density")
            .field("name", &self.name)
            .field("dim", &self.field.dim())
            .field("sampler", &self.sampler.kind())
            .field("compact", &self.compact)
            .finish()
    }
}

/// Mass and minimum found by [`Density::check`].
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct PdfCheck {
    pub mass: f64,
    pub min_value: f64,
    pub grid_per_axis: usize,
}

impl Density {
    /// A product density Π φ_j(x_j), sampled axis by axis.
    pub fn from_tensor(name: impl Into<String>, field: TensorField, compact: bool) -> Result<Self> {
        let tables = field
            .factors()
            .iter()
            .map(|f| AxisCdf::tabulate(f.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let field = Arc::new(field);
        let d = Density {
            name: name.into(),
            field: field.clone(),
            tensor: Some(field),
            sampler: Sampler::InverseCdf(tables),
            is_pdf_tol: PDF_TOL,
            compact,
        };
        d.validate()?;
        Ok(d)
    }

    pub(crate) fn from_rejection(name: impl Into<String>, sampler: RejectionSampler, compact: bool) -> Result<Self> {
        let d = Density {
            name: name.into(),
            field: sampler.target.clone(),
            tensor: None,
            sampler: Sampler::Rejection(sampler),
            is_pdf_tol: PDF_TOL,
            compact,
        };
        d.validate()?;
        Ok(d)
    }

    /// Mass by quadrature and the minimum on a uniform grid over the support.
    pub fn check(&self) -> Result<PdfCheck> {
        let mass = Integrator::default().integrate(self.field.as_ref(), |x| self.field.eval(x))?;
        let bx = self.field.support();
        let dim = bx.dim();
        let mut per_axis = CHECK_GRID_PER_AXIS;
        while per_axis > 2 && (per_axis as f64).powi(dim as i32) > CHECK_GRID_MAX_NODES as f64 {
            per_axis /= 2;
        }
        let mut min_value = f64::INFINITY;
        let mut idx = vec![0usize; dim];
        let mut x = vec![0.0; dim];
        'grid: loop {
            for a in 0..dim {
                let t = idx[a] as f64 / (per_axis - 1) as f64;
                x[a] = bx.lower()[a] + t * bx.width(a);
            }
            min_value = min_value.min(self.field.eval(&x));
            for a in (0..dim).rev() {
                idx[a] += 1;
                if idx[a] < per_axis {
                    continue 'grid;
                }
                idx[a] = 0;
            }
            break;
        }
        Ok(PdfCheck {
            mass,
            min_value,
            grid_per_axis: per_axis,
        })
    }

    fn validate(&self) -> Result<()> {
        let c = self.check()?;
        if (c.mass - 1.0).abs() > self.is_pdf_tol {
            return Err(Error::Construction(format!(
                "{} integrates to {} (tolerance {:e})",
                self.name, c.mass, self.is_pdf_tol
            )));
        }
        if c.min_value < -NEGATIVITY_TOL {
            return Err(Error::Construction(format!(
                "{} takes the negative value {} on its check grid",
                self.name, c.min_value
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.field.eval(x)
    }

    pub fn field(&self) -> &dyn DifferentiableField {
        self.field.as_ref()
    }

    /// The tensor structure, when the density is a product.
    pub fn tensor(&self) -> Option<&TensorField> {
        self.tensor.as_deref()
    }

    pub fn support(&self) -> AxisBox {
        self.field.support()
    }

    pub fn feature_scale(&self) -> f64 {
        self.field.feature_scale()
    }

    pub fn is_compact(&self) -> bool {
        self.compact
    }

    pub fn is_pdf_tol(&self) -> f64 {
        self.is_pdf_tol
    }

    pub fn sampler_kind(&self) -> SamplerKind {
        self.sampler.kind()
    }

    /// Marginal CDF tables of a product density.
    pub fn marginal_tables(&self) -> Option<&[AxisCdf]> {
        match &self.sampler {
            Sampler::InverseCdf(t) => Some(t),
            Sampler::Rejection(_) => None,
        }
    }
}

/// `count` iid draws from `d`, reproducible from `seed`.
pub fn sample(d: &Density, seed: u64, count: usize) -> Result<PointSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = d.sampler.draw(&mut rng, count)?;
    PointSet::new(d.dim(), coords)
}

/// Λ as a one-dimensional density.
pub fn lambda_pdf() -> Density {
    tensor_bump(&[0.0], &[1.0]).expect("the unit bump is a valid density")
}

/// Π_j Λ((x_j − c_j)/w_j)/w_j.
pub fn tensor_bump(centers: &[f64], half_widths: &[f64]) -> Result<Density> {
    crate::error::check_dim(centers.len(), half_widths.len())?;
    let factors = centers
        .iter()
        .zip(half_widths)
        .map(|(&c, &w)| Ok(Arc::new(ScaledBump::new(c, w)?) as Arc<dyn Profile>))
        .collect::<Result<Vec<_>>>()?;
    Density::from_tensor("bump", TensorField::new(factors)?, true)
}

/// Product of normal densities; not compactly supported.
pub fn tensor_gaussian(means: &[f64], sds: &[f64]) -> Result<Density> {
    crate::error::check_dim(means.len(), sds.len())?;
    let factors = means
        .iter()
        .zip(sds)
        .map(|(&m, &s)| Ok(Arc::new(GaussianProfile::new(m, s)?) as Arc<dyn Profile>))
        .collect::<Result<Vec<_>>>()?;
    Density::from_tensor("gaussian", TensorField::new(factors)?, false)
}

/// Product of plateau profiles with parameters N and κ on `dim` axes.
pub fn tensor_plateau(dim: usize, big_n: f64, kappa: f64) -> Result<Density> {
    if dim == 0 {
        return Err(Error::Parameter("dimension must be positive".into()));
    }
    let factor: Arc<dyn Profile> = Arc::new(PlateauProfile::new(big_n, kappa)?);
    Density::from_tensor("plateau", TensorField::new(vec![factor; dim])?, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_pdf_is_normalised_and_even() {
        let d = lambda_pdf();
        let c = d.check().unwrap();
        assert!((c.mass - 1.0).abs() < 1e-10);
        assert!(c.min_value >= 0.0);
        for u in [0.1, 0.5, 0.93] {
            assert_eq!(d.eval(&[u]), d.eval(&[-u]));
        }
        assert!((d.eval(&[0.0]) - (-1.0f64).exp() / bump_l1()).abs() < 1e-16);
        assert!((bump_l1() - 0.443_993_816_168_079_4).abs() < 1e-12);
    }

    #[test]
    fn empty_sample() {
        let d = tensor_bump(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(sample(&d, 1, 0).unwrap().is_empty());
    }

    #[test]
    fn sampling_is_reproducible() {
        let d = tensor_gaussian(&[0.0, 1.0], &[1.0, 0.5]).unwrap();
        assert_eq!(sample(&d, 9, 100).unwrap(), sample(&d, 9, 100).unwrap());
        assert_ne!(sample(&d, 9, 100).unwrap(), sample(&d, 10, 100).unwrap());
        assert!(!d.is_compact());
    }

    #[test]
    fn f0_samples_are_centred_and_match_marginals() {
        let d = tensor_plateau(2, 20.0, 1.0).unwrap();
        let count = 100_000;
        let pts = sample(&d, 2024, count).unwrap();
        let tables = d.marginal_tables().unwrap();
        for axis in 0..2 {
            let mut xs: Vec<f64> = pts.iter().map(|p| p[axis]).collect();
            let mean = xs.iter().sum::<f64>() / count as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            assert!(
                mean.abs() <= 3.0 * (var / count as f64).sqrt(),
                "axis {axis} mean {mean}"
            );
            xs.sort_by(f64::total_cmp);
            let mut ks: f64 = 0.0;
            for (i, x) in xs.iter().enumerate() {
                let f = tables[axis].cdf(*x);
                ks = ks
                    .max((f - i as f64 / count as f64).abs())
                    .max(((i + 1) as f64 / count as f64 - f).abs());
            }
            assert!(ks < 1.63 / (count as f64).sqrt(), "axis {axis} KS {ks}");
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let t = AxisCdf::tabulate(&PlateauProfile::new(10.0, 0.5).unwrap()).unwrap();
        for u in [0.001, 0.1, 0.5, 0.77, 0.999] {
            assert!((t.cdf(t.quantile(u)) - u).abs() < 1e-12);
        }
    }
}
