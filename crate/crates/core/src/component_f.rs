//! Randomly weighted kernel estimator of the component density with
//! pointwise comparison-based bandwidth selection.
//!
//! Observations of the first half-sample get weights
//! `w(theta, g(X_i)) = (1 - theta / g(X_i)) / (1 - theta)`, which turn
//! averages under the mixture into averages under the component. `theta`
//! and `g` are estimated from the second half-sample (or taken from the
//! true model in oracle mode).

use std::sync::Arc;

use serde::Serialize;

use crate::bandwidth::{self, BandwidthGrid, KernelBank};
use crate::config::EstimatorConfig;
use crate::density_g::{floor_gamma, GHat, GammaHat, Neighbourhood};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::mixture::MixtureModel;
use crate::quad;
use crate::smoother::Smoother;
use crate::theta::{symmetrize, SymEstimator, ThetaEstimate};
use crate::Scalar;

/// `(1 - theta / g) / (1 - theta)`. Rejects `g < gamma_min`.
pub fn weight<F: Scalar>(theta: F, g: F, gamma_min: F) -> Result<F> {
    weight_general(theta, g, F::one(), gamma_min)
}

/// `(1 - theta phi(x0) / g) / (1 - theta)` for a known null density `phi`.
pub fn weight_general<F: Scalar>(theta: F, g: F, phi_x0: F, gamma_min: F) -> Result<F> {
    if !(theta >= F::zero() && theta < F::one()) {
        return Err(Error::out_of_domain("theta", theta.as_f64(), "[0, 1)"));
    }
    if !(g >= gamma_min) {
        return Err(Error::out_of_domain("g", g.as_f64(), "[gamma_min, inf)"));
    }
    if !(phi_x0 >= F::zero()) {
        return Err(Error::out_of_domain("phi", phi_x0.as_f64(), "[0, inf)"));
    }
    Ok((F::one() - theta * phi_x0 / g) / (F::one() - theta))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Flags {
    /// `gamma_hat` was raised to `gamma_min`.
    pub gamma_floor: bool,
    /// The mixing proportion estimate was clamped.
    pub theta_truncated: bool,
    /// The reported estimate was negative and replaced by zero.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointEstimate<F> {
    pub x0: F,
    pub f_hat: F,
    pub h_selected: F,
    pub theta_tilde: F,
    pub gamma_hat: F,
    pub gsup_hat: F,
    /// Mixture density estimate at `x0`.
    pub ghat_x0: F,
    pub a_values: Vec<F>,
    pub v_values: Vec<F>,
    pub flags: Flags,
}

/// Everything the selection rule at one point needs.
#[derive(Debug, Clone)]
pub struct FitState<F> {
    smoother: Arc<Smoother<F>>,
    theta_tilde: F,
    kappa: F,
    gsup_hat: F,
    gamma_hat: GammaHat<F>,
    nbhd: Neighbourhood<F>,
    variance: Vec<F>,
}

impl<F: Scalar> FitState<F> {
    /// `smoother` carries the first half-sample and its weights.
    pub fn new(
        smoother: Arc<Smoother<F>>,
        theta_tilde: F,
        kappa: F,
        gsup_hat: F,
        gamma_hat: GammaHat<F>,
        nbhd: Neighbourhood<F>,
    ) -> Result<Self> {
        if smoother.is_empty() {
            return Err(Error::EmptySample("primary"));
        }
        if !(kappa > F::zero()) {
            return Err(Error::param("kappa", kappa.as_f64(), "must be positive"));
        }
        if !(gsup_hat > F::zero()) {
            return Err(Error::param("gsup_hat", gsup_hat.as_f64(), "must be positive"));
        }
        if !(gamma_hat.value > F::zero()) {
            return Err(Error::param("gamma_hat", gamma_hat.value.as_f64(), "must be positive"));
        }
        let norms = smoother.bank().kernel().norms();
        let n = F::from_count(smoother.len());
        let base = kappa * norms.l1 * norms.l1 * norms.l2sq * gsup_hat * n.ln()
            / (gamma_hat.value * gamma_hat.value * n);
        let variance = smoother.bank().grid().values().iter().map(|&h| base / h).collect();
        Ok(FitState {
            smoother,
            theta_tilde,
            kappa,
            gsup_hat,
            gamma_hat,
            nbhd,
            variance,
        })
    }

    /// Same state with another variance constant.
    pub fn with_kappa(&self, kappa: F) -> Result<Self> {
        Self::new(
            self.smoother.clone(),
            self.theta_tilde,
            kappa,
            self.gsup_hat,
            self.gamma_hat,
            self.nbhd.clone(),
        )
    }

    pub fn grid(&self) -> &BandwidthGrid<F> {
        self.smoother.bank().grid()
    }

    pub fn smoother(&self) -> &Smoother<F> {
        &self.smoother
    }

    pub fn theta_tilde(&self) -> F {
        self.theta_tilde
    }

    pub fn kappa(&self) -> F {
        self.kappa
    }

    pub fn gsup_hat(&self) -> F {
        self.gsup_hat
    }

    pub fn gamma_hat(&self) -> GammaHat<F> {
        self.gamma_hat
    }

    pub fn nbhd(&self) -> &Neighbourhood<F> {
        &self.nbhd
    }

    /// `n^-1 sum w_i K_h(x0 - X_i)`.
    pub fn fhat_h(&self, h: F, x0: F) -> Result<F> {
        Ok(self.smoother.single(self.grid().index_of(h)?, x0))
    }

    /// `n^-1 sum w_i (K_h * K_h')(x0 - X_i)`.
    pub fn fhat_hh(&self, h: F, hp: F, x0: F) -> Result<F> {
        let i = self.grid().index_of(h)?;
        let j = self.grid().index_of(hp)?;
        Ok(self.smoother.pair(i, j, x0))
    }

    /// `V(x0, h)` per grid bandwidth.
    pub fn variance_terms(&self) -> &[F] {
        &self.variance
    }

    pub fn variance_term(&self, h: F) -> Result<F> {
        Ok(self.variance[self.grid().index_of(h)?])
    }

    /// `A(x0, h) = max_h' {(f_{h,h'}(x0) - f_h'(x0))^2 - V(x0, h')}_+`.
    pub fn bias_proxy_a(&self, h: F, x0: F) -> Result<F> {
        let i = self.grid().index_of(h)?;
        let mut worst = F::zero();
        for (j, &v) in self.variance.iter().enumerate() {
            let d = self.smoother.pair(i, j, x0) - self.smoother.single(j, x0);
            worst = worst.max(d * d - v);
        }
        Ok(worst)
    }

    /// Minimises `A + V` over the grid and reports the estimate there.
    pub fn select_h(&self, x0: F) -> PointEstimate<F> {
        let singles = self.smoother.singles(x0);
        let pairs = self.smoother.pairs(x0);
        let m = singles.len();
        let sel = bandwidth::select(self.grid(), &self.variance, |i, j| {
            let d = pairs[i * m + j] - singles[j];
            d * d
        });
        PointEstimate {
            x0,
            f_hat: singles[sel.index],
            h_selected: self.grid().values()[sel.index],
            theta_tilde: self.theta_tilde,
            gamma_hat: self.gamma_hat.value,
            gsup_hat: self.gsup_hat,
            ghat_x0: F::nan(),
            a_values: sel.bias,
            v_values: self.variance.clone(),
            flags: Flags {
                gamma_floor: self.gamma_hat.floored,
                ..Flags::default()
            },
        }
    }
}

/// Source of the mixture density and mixing proportion plugged into the weights.
#[derive(Debug, Clone)]
enum Plugin<F> {
    Estimated { ghat: GHat<F>, theta: ThetaEstimate<F> },
    Oracle(MixtureModel<F>),
}

/// Preliminary fits shared by every evaluation point of one data set.
#[derive(Debug, Clone)]
pub struct Fitted<F> {
    config: EstimatorConfig,
    plugin: Plugin<F>,
    bank: Arc<KernelBank<F>>,
    sample1: Vec<F>,
    ghat_at_data: Vec<F>,
    theta: F,
    smoother: Arc<Smoother<F>>,
}

impl<F: Scalar> Fitted<F> {
    /// Uses `{1/k : k <= sqrt(n)}` for every bandwidth grid, `n` the
    /// half-sample size. `oracle` must be given when `config.oracle_mode` is set.
    pub fn fit(
        sample1: &[F],
        sample2: &[F],
        config: &EstimatorConfig,
        seed: u64,
        oracle: Option<&MixtureModel<F>>,
    ) -> Result<Self> {
        let kernel = Kernel::new(config.kernel)?;
        let bank = KernelBank::new(kernel, BandwidthGrid::reciprocal(sample1.len().max(1))?)?;
        Self::with_bank(sample1, sample2, config, seed, oracle, bank)
    }

    /// As [`Fitted::fit`] with a prebuilt kernel bank, whose grid serves as
    /// the candidate set of all three selection rules.
    pub fn with_bank(
        sample1: &[F],
        sample2: &[F],
        config: &EstimatorConfig,
        seed: u64,
        oracle: Option<&MixtureModel<F>>,
        bank: Arc<KernelBank<F>>,
    ) -> Result<Self> {
        config.validate()?;
        if sample1.is_empty() {
            return Err(Error::EmptySample("primary"));
        }
        if let Some(&x) = sample1.iter().find(|&&x| !(x >= F::zero() && x <= F::one())) {
            return Err(Error::out_of_domain("observation", x.as_f64(), "[0, 1]"));
        }
        let gamma_min = F::lit(config.gamma_min);
        let (plugin, ghat_at_data, theta) = if config.oracle_mode {
            let model = oracle
                .ok_or_else(|| Error::Model("oracle mode needs the true model".into()))?
                .clone();
            let g = sample1
                .iter()
                .map(|&x| model.mixture_pdf(x).map(|v| v.max(gamma_min)))
                .collect::<Result<Vec<F>>>()?;
            let theta = model.theta();
            (Plugin::Oracle(model), g, theta)
        } else {
            let ghat = GHat::new(
                sample2,
                bank.clone(),
                F::lit(config.epsilon),
                config.sup_grid_points,
                F::lit(config.sup_percentile),
            )?;
            let delta = F::lit(config.delta.unwrap_or(0.1));
            let sym = symmetrize(sample2, seed)?;
            let theta = SymEstimator::new(
                &sym,
                bank.clone(),
                delta,
                F::lit(config.lambda),
                config.lepski_grid_points,
            )?
            .estimate(config.theta_nodes);
            let g = sample1.iter().map(|&x| ghat.value(x).max(gamma_min)).collect();
            (Plugin::Estimated { ghat, theta }, g, theta.theta_tilde)
        };
        let weights = ghat_at_data
            .iter()
            .map(|&g| weight(theta, g, gamma_min))
            .collect::<Result<Vec<F>>>()?;
        let smoother = Arc::new(Smoother::weighted(bank.clone(), sample1, &weights));
        Ok(Fitted {
            config: config.clone(),
            plugin,
            bank,
            sample1: sample1.to_vec(),
            ghat_at_data,
            theta,
            smoother,
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn bank(&self) -> &Arc<KernelBank<F>> {
        &self.bank
    }

    /// Mixing proportion used in the weights.
    pub fn theta(&self) -> F {
        self.theta
    }

    /// The estimated mixing proportion; `None` in oracle mode.
    pub fn theta_estimate(&self) -> Option<ThetaEstimate<F>> {
        match &self.plugin {
            Plugin::Estimated { theta, .. } => Some(*theta),
            Plugin::Oracle(_) => None,
        }
    }

    /// The mixture density estimator; `None` in oracle mode.
    pub fn ghat(&self) -> Option<&GHat<F>> {
        match &self.plugin {
            Plugin::Estimated { ghat, .. } => Some(ghat),
            Plugin::Oracle(_) => None,
        }
    }

    /// Mixture density at the first half-sample, floored at `gamma_min`.
    pub fn ghat_at_data(&self) -> &[F] {
        &self.ghat_at_data
    }

    pub fn weights(&self) -> &[F] {
        self.smoother.weights()
    }

    /// Mixture density (estimated or true) at `x`.
    pub fn g_value(&self, x: F) -> Result<F> {
        match &self.plugin {
            Plugin::Estimated { ghat, .. } => Ok(ghat.value(x)),
            Plugin::Oracle(m) => m.mixture_pdf(x),
        }
    }

    fn local_quantities(&self, nbhd: &Neighbourhood<F>) -> Result<(F, GammaHat<F>)> {
        let gamma_min = F::lit(self.config.gamma_min);
        let (lo, hi) = if self.config.local_sup {
            (nbhd.lo, nbhd.hi)
        } else {
            (F::zero(), F::one())
        };
        match &self.plugin {
            Plugin::Estimated { ghat, .. } => {
                let gsup = if self.config.local_sup {
                    ghat.plugin_sup(lo, hi)
                } else {
                    ghat.gsup_hat()
                };
                Ok((gsup, ghat.gamma_hat(nbhd, gamma_min)))
            }
            Plugin::Oracle(m) => {
                let mut gsup = F::zero();
                for t in quad::linspace(lo, hi, self.config.sup_grid_points) {
                    gsup = gsup.max(m.mixture_pdf(t)?);
                }
                let mut inf = F::infinity();
                for &t in &nbhd.eval_grid {
                    inf = inf.min(m.mixture_pdf(t)?.abs());
                }
                Ok((gsup, floor_gamma(inf, gamma_min)))
            }
        }
    }

    /// Selection state at `x0` with the uniform null density.
    pub fn state_at(&self, x0: F) -> Result<FitState<F>> {
        self.state_with_phi(x0, F::one())
    }

    /// Selection state at `x0` with weights built from `phi(x0)`.
    pub fn state_with_phi(&self, x0: F, phi_x0: F) -> Result<FitState<F>> {
        if !(x0 >= F::zero() && x0 <= F::one()) {
            return Err(Error::out_of_domain("x0", x0.as_f64(), "[0, 1]"));
        }
        let n = self.sample1.len();
        let nbhd = Neighbourhood::new(
            x0,
            n,
            self.bank.kernel().radius(),
            self.config.sup_grid_points,
        );
        let (gsup, gamma) = self.local_quantities(&nbhd)?;
        let gamma_min = F::lit(self.config.gamma_min);

        let bank = if self.config.clip_grid {
            let nf = F::from_count(n.max(3));
            let log = nf.ln();
            let upper = gamma.value * nf / (log * log * log);
            let grid = BandwidthGrid::clipped(n, log, upper).map_err(|_| Error::EmptyGrid)?;
            KernelBank::new(self.bank.kernel().clone(), grid)?
        } else {
            self.bank.clone()
        };
        let smoother = if phi_x0 == F::one() && Arc::ptr_eq(&bank, &self.bank) {
            self.smoother.clone()
        } else {
            let weights = self
                .ghat_at_data
                .iter()
                .map(|&g| weight_general(self.theta, g, phi_x0, gamma_min))
                .collect::<Result<Vec<F>>>()?;
            Arc::new(Smoother::weighted(bank, &self.sample1, &weights))
        };
        FitState::new(smoother, self.theta, F::lit(self.config.kappa), gsup, gamma, nbhd)
    }

    /// Adaptive estimate at `x0`.
    pub fn estimate_at(&self, x0: F) -> Result<PointEstimate<F>> {
        self.estimate_with(&self.state_at(x0)?)
    }

    /// Adaptive estimate from a prepared state (see [`Fitted::state_at`]).
    pub fn estimate_with(&self, state: &FitState<F>) -> Result<PointEstimate<F>> {
        let x0 = state.nbhd().x0;
        let mut est = state.select_h(x0);
        est.ghat_x0 = self.g_value(x0)?;
        est.flags.theta_truncated = self.theta_estimate().is_some_and(|t| t.truncated);
        if self.config.clamp_negative && est.f_hat < F::zero() {
            est.f_hat = F::zero();
            est.flags.clamped = true;
        }
        Ok(est)
    }
}

/// One-shot estimate at `x0`: fits the preliminary estimators on `sample2`
/// and selects the bandwidth for the weighted estimator on `sample1`.
pub fn estimate_f<F: Scalar>(
    sample1: &[F],
    sample2: &[F],
    config: &EstimatorConfig,
    x0: F,
    seed: u64,
) -> Result<PointEstimate<F>> {
    Fitted::fit(sample1, sample2, config, seed, None)?.estimate_at(x0)
}
