//! Kernel estimator of the mixture density from the auxiliary half-sample,
//! with pointwise comparison-based bandwidth selection and the plug-in
//! quantities (sup-norm and local infimum) the component estimator needs.

use std::sync::Arc;

use crate::bandwidth::{self, BandwidthGrid, KernelBank, Selection};
use crate::error::{Error, Result};
use crate::quad;
use crate::smoother::Smoother;
use crate::Scalar;

/// Interval `[x0 - 2A/alpha_n, x0 + 2A/alpha_n]` clipped to `[0, 1]`, with
/// `alpha_n = log n`, and an even grid on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbourhood<F> {
    pub x0: F,
    pub radius: F,
    pub lo: F,
    pub hi: F,
    pub eval_grid: Vec<F>,
}

impl<F: Scalar> Neighbourhood<F> {
    pub fn new(x0: F, n: usize, kernel_radius: F, points: usize) -> Self {
        // alpha_n must exceed 1; log n does from n = 3 on.
        let alpha = F::from_count(n.max(3)).ln();
        let radius = F::lit(2.0) * kernel_radius / alpha;
        let lo = (x0 - radius).max(F::zero());
        let hi = (x0 + radius).min(F::one());
        Neighbourhood {
            x0,
            radius,
            lo,
            hi,
            eval_grid: quad::linspace(lo, hi, points),
        }
    }
}

/// Selected bandwidth and the resulting estimate at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct GSelection<F> {
    pub b_hat: F,
    pub value: F,
    pub selection: Selection<F>,
}

/// Local lower bound of the mixture density estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaHat<F> {
    pub value: F,
    /// The raw infimum fell below the floor and was replaced by it.
    pub floored: bool,
}

/// Mixture density estimator built on the second half-sample.
#[derive(Debug, Clone)]
pub struct GHat<F> {
    smoother: Smoother<F>,
    epsilon: F,
    gsup_hat: F,
    penalty: Vec<F>,
    sup_points: usize,
    percentile: F,
}

impl<F: Scalar> GHat<F> {
    /// Builds the estimator; the sup-norm plug-in is the `percentile`
    /// quantile over the grid of `max_{t in [0,1]} g_b(t)` on `sup_points`
    /// evaluation points.
    pub fn new(
        sample2: &[F],
        bank: Arc<KernelBank<F>>,
        epsilon: F,
        sup_points: usize,
        percentile: F,
    ) -> Result<Self> {
        if sample2.is_empty() {
            return Err(Error::EmptySample("auxiliary"));
        }
        if let Some(&x) = sample2.iter().find(|&&x| !(x >= F::zero() && x <= F::one())) {
            return Err(Error::out_of_domain("observation", x.as_f64(), "[0, 1]"));
        }
        if !(epsilon > F::zero()) {
            return Err(Error::param("epsilon", epsilon.as_f64(), "must be positive"));
        }
        if bank.grid().values().iter().any(|&b| b > F::one()) {
            return Err(Error::param("bandwidth", bank.grid().max().as_f64(), "must not exceed 1"));
        }
        let mut g = GHat {
            smoother: Smoother::new(bank, sample2),
            epsilon,
            gsup_hat: F::zero(),
            penalty: Vec::new(),
            sup_points,
            percentile,
        };
        let gsup = g.plugin_sup(F::zero(), F::one());
        if !(gsup > F::zero()) {
            return Err(Error::param("gsup_hat", gsup.as_f64(), "plug-in sup norm must be positive"));
        }
        g.set_gsup(gsup);
        Ok(g)
    }

    /// Replaces the sup-norm plug-in (e.g. by the true value in oracle runs).
    pub fn set_gsup(&mut self, gsup: F) {
        self.gsup_hat = gsup;
        let norms = self.bank().kernel().norms();
        let n = F::from_count(self.len());
        let base = self.epsilon * norms.l1 * norms.l1 * norms.l2sq * gsup * n.ln() / n;
        self.penalty = self.grid().values().iter().map(|&b| base / b).collect();
    }

    pub fn bank(&self) -> &Arc<KernelBank<F>> {
        self.smoother.bank()
    }

    pub fn grid(&self) -> &BandwidthGrid<F> {
        self.smoother.bank().grid()
    }

    pub fn len(&self) -> usize {
        self.smoother.len()
    }

    pub fn is_empty(&self) -> bool {
        self.smoother.is_empty()
    }

    pub fn sample(&self) -> &[F] {
        self.smoother.data()
    }

    pub fn epsilon(&self) -> F {
        self.epsilon
    }

    pub fn gsup_hat(&self) -> F {
        self.gsup_hat
    }

    /// Penalty `Gamma_1(b)` per grid bandwidth.
    pub fn penalty(&self) -> &[F] {
        &self.penalty
    }

    pub fn smoother(&self) -> &Smoother<F> {
        &self.smoother
    }

    /// Plain kernel estimate `n^-1 sum L_b(x - X_i)`.
    pub fn kde_g(&self, b: F, x: F) -> Result<F> {
        let i = self.grid().index_of(b)?;
        Ok(self.smoother.single(i, x))
    }

    /// `n^-1 sum (L_b * L_b')(x - X_i)`.
    pub fn kde_g_pair(&self, b: F, bp: F, x: F) -> Result<F> {
        let i = self.grid().index_of(b)?;
        let j = self.grid().index_of(bp)?;
        Ok(self.smoother.pair(i, j, x))
    }

    /// Pointwise bandwidth choice at `x0`.
    pub fn gl_select(&self, x0: F) -> GSelection<F> {
        let singles = self.smoother.singles(x0);
        let pairs = self.smoother.pairs(x0);
        let m = singles.len();
        let selection = bandwidth::select(self.grid(), &self.penalty, |i, j| {
            let d = pairs[i * m + j] - singles[j];
            d * d
        });
        GSelection {
            b_hat: self.grid().values()[selection.index],
            value: singles[selection.index],
            selection,
        }
    }

    /// Adaptive estimate `g_hat(x) = g_{b_hat(x)}(x)`.
    pub fn value(&self, x: F) -> F {
        self.gl_select(x).value
    }

    /// Percentile over grid bandwidths of `max_t g_b(t)` on `[lo, hi]`.
    pub fn plugin_sup(&self, lo: F, hi: F) -> F {
        let ts = quad::linspace(lo, hi, self.sup_points);
        let maxima: Vec<F> = (0..self.grid().len())
            .map(|i| {
                ts.iter()
                    .map(|&t| self.smoother.single(i, t))
                    .fold(F::neg_infinity(), F::max)
            })
            .collect();
        quad::percentile(&maxima, self.percentile).unwrap_or_else(F::zero)
    }

    /// `inf |g_hat|` over the neighbourhood grid, floored at `gamma_min`.
    pub fn gamma_hat(&self, nbhd: &Neighbourhood<F>, gamma_min: F) -> GammaHat<F> {
        let raw = nbhd
            .eval_grid
            .iter()
            .map(|&t| self.value(t).abs())
            .fold(F::infinity(), F::min);
        floor_gamma(raw, gamma_min)
    }
}

pub(crate) fn floor_gamma<F: Scalar>(raw: F, gamma_min: F) -> GammaHat<F> {
    if raw < gamma_min || raw.is_nan() {
        GammaHat {
            value: gamma_min,
            floored: true,
        }
    } else {
        GammaHat {
            value: raw,
            floored: false,
        }
    }
}
