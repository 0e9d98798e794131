//! Uniform-plus-component mixtures `g(x) = theta + (1 - theta) f(x)` on
//! `[0, 1]`: the three benchmark designs, user supplied components, exact
//! densities, distribution functions and seeded sampling.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelId {
    F1,
    F2,
    F3,
    Custom,
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelId::F1 => "F1",
            ModelId::F2 => "F2",
            ModelId::F3 => "F3",
            ModelId::Custom => "Custom",
        })
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "F1" => Ok(ModelId::F1),
            "F2" => Ok(ModelId::F2),
            "F3" => Ok(ModelId::F3),
            _ => Err(Error::Unknown {
                kind: "model",
                name: s.to_string(),
            }),
        }
    }
}

type Func<F> = Arc<dyn Fn(F) -> F + Send + Sync>;

/// A user supplied component: density, inverse distribution function and
/// the points where the density is not smooth.
#[derive(Clone)]
pub struct CustomComponent<F> {
    pdf: Func<F>,
    inverse_cdf: Func<F>,
    breaks: Vec<F>,
}

#[derive(Clone)]
enum Component<F> {
    /// `4 (1 - x)^3`
    Cubic,
    /// `s / (1 - d) (1 - x / (1 - d))^(s - 1)` on `[0, 1 - d]`
    Beta { gap: F, shape: F },
    /// `l e^(-l x) / (1 - e^(-l b))` on `[0, b]`
    TruncExp { rate: F, end: F },
    Custom(CustomComponent<F>),
}

/// Mixture of the uniform density on `[0, 1]` with weight `theta` and a
/// component density `f` with weight `1 - theta`.
#[derive(Clone)]
pub struct MixtureModel<F> {
    id: ModelId,
    theta: F,
    component: Component<F>,
}

impl<F: fmt::Debug> fmt::Debug for MixtureModel<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MixtureModel")
            .field("id", &self.id)
            .field("theta", &self.theta)
            .finish_non_exhaustive()
    }
}

impl<F: Scalar> MixtureModel<F> {
    /// `f(x) = 4 (1 - x)^3`, `theta = 0.65`.
    pub fn f1() -> Self {
        MixtureModel {
            id: ModelId::F1,
            theta: F::lit(0.65),
            component: Component::Cubic,
        }
    }

    /// Beta-type component vanishing on `[0.7, 1]`, `theta = 0.45`.
    pub fn f2() -> Self {
        MixtureModel {
            id: ModelId::F2,
            theta: F::lit(0.45),
            component: Component::Beta {
                gap: F::lit(0.3),
                shape: F::lit(1.4),
            },
        }
    }

    /// Exponential with rate 10 truncated to `[0, 0.9]`, `theta = 0.35`.
    pub fn f3() -> Self {
        MixtureModel {
            id: ModelId::F3,
            theta: F::lit(0.35),
            component: Component::TruncExp {
                rate: F::lit(10.0),
                end: F::lit(0.9),
            },
        }
    }

    pub fn from_id(id: ModelId) -> Result<Self> {
        match id {
            ModelId::F1 => Ok(Self::f1()),
            ModelId::F2 => Ok(Self::f2()),
            ModelId::F3 => Ok(Self::f3()),
            ModelId::Custom => Err(Error::Model(
                "custom models are built with MixtureModel::custom".into(),
            )),
        }
    }

    /// Registers a user component after checking that it is a density on
    /// `[0, 1]` (nonnegative, unit mass within `1e-6`) and that the inverse
    /// distribution function maps into `[0, 1]` monotonically.
    pub fn custom(
        theta: F,
        pdf: impl Fn(F) -> F + Send + Sync + 'static,
        inverse_cdf: impl Fn(F) -> F + Send + Sync + 'static,
        breaks: Vec<F>,
    ) -> Result<Self> {
        let model = MixtureModel {
            id: ModelId::Custom,
            theta,
            component: Component::Custom(CustomComponent {
                pdf: Arc::new(pdf),
                inverse_cdf: Arc::new(inverse_cdf),
                breaks,
            }),
        };
        model.validate()?;
        Ok(model)
    }

    /// Checks the invariants; the built-in designs pass by construction.
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > F::zero() && self.theta < F::one()) {
            return Err(Error::param("theta", self.theta.as_f64(), "must lie in (0, 1)"));
        }
        let grid = quad::linspace(F::zero(), F::one(), 1001);
        if let Some(x) = grid.iter().find(|&&x| !(self.pdf_unchecked(x) >= F::zero())) {
            return Err(Error::Model(format!("component density negative or NaN at {x}")));
        }
        let mass = self.integrate(F::zero(), F::one(), &|x| self.pdf_unchecked(x));
        if (mass - F::one()).abs() > F::lit(1e-6) {
            return Err(Error::Model(format!("component integrates to {mass}, not 1")));
        }
        let mut prev = F::zero();
        for &u in &grid {
            let x = self.inverse_unchecked(u);
            if !(x >= F::zero() && x <= F::one()) || x < prev {
                return Err(Error::Model(format!(
                    "inverse cdf not monotone into [0, 1] at u = {u}"
                )));
            }
            prev = x;
        }
        Ok(())
    }

    pub fn id(&self) -> ModelId {
        self.id
    }

    pub fn theta(&self) -> F {
        self.theta
    }

    /// Default identifiability margin for the mixing-proportion estimator:
    /// the length of the interval next to 1 where the component vanishes,
    /// or 0.1 when there is none.
    pub fn default_delta(&self) -> F {
        match &self.component {
            Component::Beta { gap, .. } => *gap,
            Component::TruncExp { end, .. } => F::one() - *end,
            _ => F::lit(0.1),
        }
    }

    /// Points in `[0, 1]` where the component density has a kink or jump.
    pub fn breakpoints(&self) -> Vec<F> {
        match &self.component {
            Component::Cubic => vec![],
            Component::Beta { gap, .. } => vec![F::one() - *gap],
            Component::TruncExp { end, .. } => vec![*end],
            Component::Custom(c) => c.breaks.clone(),
        }
    }

    pub fn component_pdf(&self, x: F) -> Result<F> {
        check_unit("x", x)?;
        Ok(self.pdf_unchecked(x))
    }

    pub fn mixture_pdf(&self, x: F) -> Result<F> {
        check_unit("x", x)?;
        Ok(self.theta + (F::one() - self.theta) * self.pdf_unchecked(x))
    }

    pub fn component_cdf(&self, x: F) -> Result<F> {
        check_unit("x", x)?;
        let one = F::one();
        Ok(match &self.component {
            Component::Cubic => one - (one - x).powi(4),
            Component::Beta { gap, shape } => {
                let end = one - *gap;
                if x >= end {
                    one
                } else {
                    one - (one - x / end).powf(*shape)
                }
            }
            Component::TruncExp { rate, end } => {
                let z = one - (-*rate * *end).exp();
                (one - (-*rate * x.min(*end)).exp()) / z
            }
            Component::Custom(_) => {
                self.integrate(F::zero(), x, &|t| self.pdf_unchecked(t))
            }
        })
    }

    pub fn mixture_cdf(&self, x: F) -> Result<F> {
        Ok(self.theta * x + (F::one() - self.theta) * self.component_cdf(x)?)
    }

    /// Closed-form inverse distribution function of the component.
    pub fn component_cdf_inverse(&self, u: F) -> Result<F> {
        check_unit("u", u)?;
        Ok(self.inverse_unchecked(u))
    }

    /// `n` draws from the mixture, deterministic in `(model, n, seed)`.
    ///
    /// Each draw consumes two uniforms from a ChaCha8 stream: one picks the
    /// latent label, the other is either the uniform observation itself or
    /// is pushed through the component's inverse distribution function.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<F> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = self.theta.as_f64();
        (0..n)
            .map(|_| {
                let label: f64 = rng.random();
                let u = F::lit(rng.random::<f64>());
                if label < theta {
                    u
                } else {
                    self.inverse_unchecked(u)
                }
            })
            .collect()
    }

    /// Exact `\int_lo^hi phi(x) dx` by adaptive Simpson, split at the
    /// component's breakpoints.
    pub fn integrate(&self, lo: F, hi: F, phi: &impl Fn(F) -> F) -> F {
        let mut breaks = self.breakpoints();
        breaks.extend([F::zero(), F::one()]);
        quad::simpson_split(lo, hi, &breaks, F::lit(1e-12), phi)
    }

    fn pdf_unchecked(&self, x: F) -> F {
        let one = F::one();
        if x < F::zero() || x > one {
            return F::zero();
        }
        match &self.component {
            Component::Cubic => F::lit(4.0) * (one - x).powi(3),
            Component::Beta { gap, shape } => {
                let end = one - *gap;
                if x > end {
                    F::zero()
                } else {
                    *shape / end * (one - x / end).powf(*shape - one)
                }
            }
            Component::TruncExp { rate, end } => {
                if x > *end {
                    F::zero()
                } else {
                    *rate * (-*rate * x).exp() / (one - (-*rate * *end).exp())
                }
            }
            Component::Custom(c) => (c.pdf)(x),
        }
    }

    fn inverse_unchecked(&self, u: F) -> F {
        let one = F::one();
        match &self.component {
            Component::Cubic => one - (one - u).powf(F::lit(0.25)),
            Component::Beta { gap, shape } => (one - *gap) * (one - (one - u).powf(one / *shape)),
            Component::TruncExp { rate, end } => {
                -(one - u * (one - (-*rate * *end).exp())).ln() / *rate
            }
            Component::Custom(c) => (c.inverse_cdf)(u),
        }
    }

    /// Density of the reflected variable on `[0, 2]`: `g(x)/2` on `[0, 1]`
    /// and `g(2 - x)/2` on `[1, 2]`.
    pub fn symmetrized_pdf(&self, y: F) -> F {
        let two = F::lit(2.0);
        if y < F::zero() || y > two {
            return F::zero();
        }
        let x = if y <= F::one() { y } else { two - y };
        (self.theta + (F::one() - self.theta) * self.pdf_unchecked(x)) / two
    }
}

fn check_unit<F: Scalar>(what: &'static str, v: F) -> Result<()> {
    if v >= F::zero() && v <= F::one() {
        Ok(())
    } else {
        Err(Error::out_of_domain(what, v.as_f64(), "[0, 1]"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_values() {
        let f1 = MixtureModel::<f64>::f1();
        let f2 = MixtureModel::<f64>::f2();
        let f3 = MixtureModel::<f64>::f3();
        assert_eq!(f1.component_pdf(0.0).unwrap(), 4.0);
        assert!((f2.component_pdf(0.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(f2.component_pdf(0.8).unwrap(), 0.0);
        let want = 10.0 / (1.0 - (-9.0_f64).exp());
        assert!((f3.component_pdf(0.0).unwrap() - want).abs() < 1e-12);
        assert!(f1.component_pdf(1.5).is_err());
        assert!(f1.component_pdf(-0.1).is_err());
    }

    #[test]
    fn mixture_values() {
        let f1 = MixtureModel::<f64>::f1();
        assert!((f1.mixture_pdf(1.0).unwrap() - 0.65).abs() < 1e-15);
        assert!((f1.mixture_pdf(0.0).unwrap() - 2.05).abs() < 1e-15);
        let f2 = MixtureModel::<f64>::f2();
        assert!((f2.mixture_pdf(0.75).unwrap() - 0.45).abs() < 1e-15);
        assert!(f2.mixture_pdf(1.01).is_err());
    }

    #[test]
    fn inverse_cdf_endpoints_and_round_trip() {
        let f1 = MixtureModel::<f64>::f1();
        assert_eq!(f1.component_cdf_inverse(0.0).unwrap(), 0.0);
        assert_eq!(f1.component_cdf_inverse(1.0).unwrap(), 1.0);
        assert!(f1.component_cdf_inverse(1.2).is_err());

        // Oracle: the distribution function by quadrature of the density.
        let f2 = MixtureModel::<f64>::f2();
        let u = f2.integrate(0.0, 0.35, &|x| f2.component_pdf(x).unwrap());
        assert!((f2.component_cdf_inverse(u).unwrap() - 0.35).abs() < 1e-9);
    }

    #[test]
    fn closed_form_cdfs_match_quadrature() {
        for m in [MixtureModel::<f64>::f1(), MixtureModel::f2(), MixtureModel::f3()] {
            m.validate().unwrap();
            for &x in &[0.05, 0.3, 0.69, 0.71, 0.95] {
                let q = m.integrate(0.0, x, &|t| m.component_pdf(t).unwrap());
                assert!((m.component_cdf(x).unwrap() - q).abs() < 1e-9, "{:?} {x}", m.id());
            }
        }
    }

    #[test]
    fn sampling_is_reproducible_and_in_range() {
        let m = MixtureModel::<f64>::f1();
        let a = m.sample(5, 7);
        assert_eq!(a, m.sample(5, 7));
        assert_ne!(a, m.sample(5, 8));
        assert!(m.sample(10_000, 3).iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn custom_registration_checks() {
        let ok = MixtureModel::<f64>::custom(0.5, |x| 2.0 * (1.0 - x), |u| 1.0 - (1.0 - u).sqrt(), vec![]);
        assert!(ok.is_ok());
        let m = ok.unwrap();
        assert!((m.component_cdf(0.5).unwrap() - 0.75).abs() < 1e-9);
        let bad_mass = MixtureModel::<f64>::custom(0.5, |_| 2.0, |u| u, vec![]);
        assert!(matches!(bad_mass, Err(Error::Model(_))));
        let bad_theta = MixtureModel::<f64>::custom(1.5, |_| 1.0, |u| u, vec![]);
        assert!(bad_theta.is_err());
        assert!(MixtureModel::<f64>::from_id(ModelId::Custom).is_err());
    }

    #[test]
    fn symmetrized_density_mirrors() {
        let m = MixtureModel::<f64>::f2();
        assert!((m.symmetrized_pdf(0.2) - m.symmetrized_pdf(1.8)).abs() < 1e-15);
        assert!((m.symmetrized_pdf(1.0) - 0.225).abs() < 1e-15);
        let mass = quad::simpson_split(0.0, 2.0, &[0.7, 1.0, 1.3], 1e-12, &|y| m.symmetrized_pdf(y));
        assert!((mass - 1.0).abs() < 1e-8);
    }

    #[test]
    fn parse_ids() {
        assert_eq!("f2".parse::<ModelId>().unwrap(), ModelId::F2);
        assert!("F9".parse::<ModelId>().is_err());
    }
}
