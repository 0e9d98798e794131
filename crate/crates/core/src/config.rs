use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelShape;

/// Tuning constants and switches for the whole estimation pipeline.
///
/// Serialises as a flat JSON object; every field has a default so a config
/// file only needs the values it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Variance penalty constant for the component estimator.
    pub kappa: f64,
    /// Penalty constant for the mixture density estimator.
    pub epsilon: f64,
    /// Penalty constant for the reflected estimator behind the mixing proportion.
    pub lambda: f64,
    /// Identifiability margin; `None` uses the model default (or 0.1).
    pub delta: Option<f64>,
    pub kernel: KernelShape,
    pub gamma_min: f64,
    /// Use the true mixing proportion and mixture density instead of estimates.
    pub oracle_mode: bool,
    /// Restrict the component grid to `k` in `[log n, gamma n / log^3 n]`.
    pub clip_grid: bool,
    /// Take the sup-norm plug-in over the neighbourhood of each point
    /// rather than over `[0, 1]`.
    pub local_sup: bool,
    /// Replace negative component estimates by zero.
    pub clamp_negative: bool,
    /// Threshold of the counting baseline for the mixing proportion.
    pub tau: f64,
    /// Evaluation points for sup/inf over an interval.
    pub sup_grid_points: usize,
    /// Evaluation points for the sup in the reflected selection rule.
    pub lepski_grid_points: usize,
    /// Trapezoid nodes for the interval average behind the mixing proportion.
    pub theta_nodes: usize,
    /// Percentile used for the sup-norm plug-in.
    pub sup_percentile: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            kappa: 0.78,
            epsilon: 0.52,
            lambda: 4.25,
            delta: None,
            kernel: KernelShape::Triangular,
            gamma_min: 1e-3,
            oracle_mode: false,
            clip_grid: false,
            local_sup: true,
            clamp_negative: false,
            tau: 0.5,
            sup_grid_points: 256,
            lepski_grid_points: 128,
            theta_nodes: 4096,
            sup_percentile: 0.95,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kappa", self.kappa),
            ("epsilon", self.epsilon),
            ("lambda", self.lambda),
            ("gamma_min", self.gamma_min),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, v, "must be positive and finite"));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::param("delta", d, "must lie in (0, 1)"));
            }
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::param("tau", self.tau, "must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.sup_percentile) {
            return Err(Error::param("sup_percentile", self.sup_percentile, "must lie in [0, 1]"));
        }
        for (name, v) in [
            ("sup_grid_points", self.sup_grid_points),
            ("lepski_grid_points", self.lepski_grid_points),
            ("theta_nodes", self.theta_nodes),
        ] {
            if v < 2 {
                return Err(Error::param(name, v as f64, "needs at least two points"));
            }
        }
        Ok(())
    }
}
