//! Monte Carlo harness: replications, MSE tables, calibration sweeps, the
//! mixing-proportion comparison and CSV / gnuplot export.
//!
//! Replication `r` of an experiment uses seed `seed_base + r`; replications
//! run on the rayon pool and are collected in index order, so every table
//! is independent of the thread count.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;

use crate::bandwidth::{BandwidthGrid, KernelBank};
use crate::component_f::{Fitted, PointEstimate};
use crate::config::EstimatorConfig;
use crate::density_g::GHat;
use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelShape};
use crate::mixture::{MixtureModel, ModelId};
use crate::theta::{storey_theta, symmetrize, SymEstimator, ThetaEstimate};

/// Keeps the reflection coins apart from the sampling stream of the same seed.
const SYM_SEED_MIX: u64 = 0x9e37_79b9_7f4a_7c15;

pub const MIN_N: usize = 50;

/// Seed of the reflection coins inside replication `seed`.
pub fn sym_seed(seed: u64) -> u64 {
    seed ^ SYM_SEED_MIX
}

/// Kernel banks for the default grids, built once per `(kernel, n)`.
#[derive(Debug, Default)]
pub struct BankCache {
    banks: Mutex<HashMap<(KernelShape, usize), Arc<KernelBank<f64>>>>,
}

impl BankCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, shape: KernelShape, n: usize) -> Result<Arc<KernelBank<f64>>> {
        if let Some(b) = self.banks.lock().expect("bank cache poisoned").get(&(shape, n)) {
            return Ok(b.clone());
        }
        let bank = KernelBank::new(Kernel::new(shape)?, BandwidthGrid::reciprocal(n)?)?;
        let mut map = self.banks.lock().expect("bank cache poisoned");
        Ok(map.entry((shape, n)).or_insert(bank).clone())
    }
}

/// Config with `delta` filled in from the model when unset.
pub fn config_for(model: &MixtureModel<f64>, config: &EstimatorConfig) -> EstimatorConfig {
    let mut c = config.clone();
    c.delta.get_or_insert(model.default_delta());
    c
}

/// Output of one Monte Carlo run.
#[derive(Debug, Clone, Serialize)]
pub struct Replication {
    pub seed: u64,
    pub points: Vec<PointEstimate<f64>>,
    pub theta: ThetaEstimate<f64>,
    pub storey: f64,
}

fn with_context<T>(rep: usize, seed: u64, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Replication {
        rep,
        seed,
        source: Box::new(e),
    })
}

fn check_n(n: usize) -> Result<()> {
    if n < MIN_N {
        return Err(Error::param("n", n as f64, "needs at least 50 observations"));
    }
    Ok(())
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < 2 {
        return Err(Error::param("reps", reps as f64, "needs at least two replications"));
    }
    Ok(())
}

/// Draws `2n` observations, fits on the halves and estimates the component
/// at every point and the mixing proportion once.
pub fn run_replication(
    model: &MixtureModel<f64>,
    n: usize,
    config: &EstimatorConfig,
    points: &[f64],
    seed: u64,
) -> Result<Replication> {
    run_replication_in(&BankCache::new(), model, n, config, points, seed)
}

pub fn run_replication_in(
    cache: &BankCache,
    model: &MixtureModel<f64>,
    n: usize,
    config: &EstimatorConfig,
    points: &[f64],
    seed: u64,
) -> Result<Replication> {
    check_n(n)?;
    let config = config_for(model, config);
    let run = || -> Result<Replication> {
        let bank = cache.get(config.kernel, n)?;
        let x = model.sample(2 * n, seed);
        let (points, theta) = fit_points(bank, model, &x, &config, points, seed)?;
        Ok(Replication {
            seed,
            points,
            theta,
            storey: storey_theta(&x[n..], config.tau)?,
        })
    };
    with_context(0, seed, run())
}

fn fit_points(
    bank: Arc<KernelBank<f64>>,
    model: &MixtureModel<f64>,
    x: &[f64],
    config: &EstimatorConfig,
    points: &[f64],
    seed: u64,
) -> Result<(Vec<PointEstimate<f64>>, ThetaEstimate<f64>)> {
    let (s1, s2) = x.split_at(x.len() / 2);
    let fit = Fitted::with_bank(s1, s2, config, sym_seed(seed), Some(model), bank.clone())?;
    let estimates = points
        .iter()
        .map(|&x0| fit.estimate_at(x0))
        .collect::<Result<Vec<_>>>()?;
    let theta = match fit.theta_estimate() {
        Some(t) => t,
        None => theta_sym_ker(bank, s2, config, sym_seed(seed))?,
    };
    Ok((estimates, theta))
}

fn theta_sym_ker(
    bank: Arc<KernelBank<f64>>,
    sample2: &[f64],
    config: &EstimatorConfig,
    seed: u64,
) -> Result<ThetaEstimate<f64>> {
    let sym = symmetrize(sample2, seed)?;
    let delta = config.delta.unwrap_or(0.1);
    let est = SymEstimator::new(&sym, bank, delta, config.lambda, config.lepski_grid_points)?;
    Ok(est.estimate(config.theta_nodes))
}

/// Estimator of the component density at a list of points from one
/// simulated data set; the seam through which the MSE experiment runs.
pub trait PointEstimator: Sync {
    fn estimate(&self, model: &MixtureModel<f64>, n: usize, points: &[f64], seed: u64) -> Result<Vec<f64>>;
}

/// The adaptive weighted kernel estimator.
#[derive(Debug)]
pub struct WeightedKernel {
    pub config: EstimatorConfig,
    cache: BankCache,
}

impl WeightedKernel {
    pub fn new(config: EstimatorConfig) -> Self {
        WeightedKernel {
            config,
            cache: BankCache::new(),
        }
    }
}

impl PointEstimator for WeightedKernel {
    fn estimate(&self, model: &MixtureModel<f64>, n: usize, points: &[f64], seed: u64) -> Result<Vec<f64>> {
        let config = config_for(model, &self.config);
        let bank = self.cache.get(config.kernel, n)?;
        let x = model.sample(2 * n, seed);
        let (est, _) = fit_points(bank, model, &x, &config, points, seed)?;
        Ok(est.into_iter().map(|e| e.f_hat).collect())
    }
}

/// Monte Carlo summary at one `(model, n, x0)`.
#[derive(Debug, Clone, Serialize)]
pub struct McResult {
    pub model: ModelId,
    pub n: usize,
    pub x0: f64,
    pub reps: usize,
    pub mse: f64,
    /// Standard error of `mse`.
    pub se: f64,
    /// `f_hat(x0) - f(x0)` per replication.
    pub per_rep_errors: Vec<f64>,
    pub seed_base: u64,
    pub config: EstimatorConfig,
}

impl McResult {
    fn from_errors(model: ModelId, n: usize, x0: f64, errors: Vec<f64>, seed_base: u64, config: &EstimatorConfig) -> Self {
        let (mse, se) = mean_se(errors.iter().map(|e| e * e));
        McResult {
            model,
            n,
            x0,
            reps: errors.len(),
            mse,
            se,
            per_rep_errors: errors,
            seed_base,
            config: config.clone(),
        }
    }
}

/// Mean and its standard error (sample standard deviation over `sqrt(len)`).
pub fn mean_se(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.into_iter().collect();
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

pub fn mse_experiment(
    models: &[MixtureModel<f64>],
    n_list: &[usize],
    points: &[f64],
    reps: usize,
    config: &EstimatorConfig,
    seed_base: u64,
) -> Result<Vec<McResult>> {
    let est = WeightedKernel::new(config.clone());
    mse_experiment_with(&est, models, n_list, points, reps, config, seed_base)
}

/// Rows are ordered by model, then `n`, then point.
pub fn mse_experiment_with(
    estimator: &dyn PointEstimator,
    models: &[MixtureModel<f64>],
    n_list: &[usize],
    points: &[f64],
    reps: usize,
    config: &EstimatorConfig,
    seed_base: u64,
) -> Result<Vec<McResult>> {
    config.validate()?;
    check_reps(reps)?;
    let mut out = Vec::new();
    for model in models {
        let truth = points
            .iter()
            .map(|&x0| model.component_pdf(x0))
            .collect::<Result<Vec<_>>>()?;
        for &n in n_list {
            check_n(n)?;
            let runs = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let seed = seed_base.wrapping_add(r as u64);
                    with_context(r, seed, estimator.estimate(model, n, points, seed))
                })
                .collect::<Result<Vec<_>>>()?;
            for (k, &x0) in points.iter().enumerate() {
                let errors = runs.iter().map(|run| run[k] - truth[k]).collect();
                out.push(McResult::from_errors(model.id(), n, x0, errors, seed_base, &config_for(model, config)));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TuningParam {
    Kappa,
    Epsilon,
    Lambda,
}

impl fmt::Display for TuningParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TuningParam::Kappa => "kappa",
            TuningParam::Epsilon => "epsilon",
            TuningParam::Lambda => "lambda",
        })
    }
}

impl FromStr for TuningParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kappa" => Ok(TuningParam::Kappa),
            "epsilon" => Ok(TuningParam::Epsilon),
            "lambda" => Ok(TuningParam::Lambda),
            _ => Err(Error::Unknown {
                kind: "tuning parameter",
                name: s.to_string(),
            }),
        }
    }
}

/// One point of a risk curve. `x0` is `None` for the mixing proportion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationRow {
    pub model: ModelId,
    pub param: TuningParam,
    pub value: f64,
    pub x0: Option<f64>,
    pub risk: f64,
}

/// Risk curves over `grid`: MSE of the component estimate (`kappa`), MSE
/// of the mixture density estimate at the points (`epsilon`) or mean
/// absolute error of the truncated mixing proportion (`lambda`).
#[allow(clippy::too_many_arguments)]
pub fn calibrate(
    models: &[MixtureModel<f64>],
    n: usize,
    points: &[f64],
    reps: usize,
    param: TuningParam,
    grid: &[f64],
    config: &EstimatorConfig,
    seed_base: u64,
) -> Result<Vec<CalibrationRow>> {
    check_n(n)?;
    check_reps(reps)?;
    if grid.is_empty() {
        return Err(Error::param("grid", 0.0, "needs at least one value"));
    }
    config.validate()?;
    let cache = BankCache::new();
    let bank = cache.get(config.kernel, n)?;
    let mut rows = Vec::new();
    for model in models {
        let config = config_for(model, config);
        // losses[r][value index][point index]
        let losses = (0..reps)
            .into_par_iter()
            .map(|r| {
                let seed = seed_base.wrapping_add(r as u64);
                with_context(r, seed, replication_losses(&bank, model, n, points, param, grid, &config, seed))
            })
            .collect::<Result<Vec<_>>>()?;
        let cols = if param == TuningParam::Lambda { 1 } else { points.len() };
        for (v, &value) in grid.iter().enumerate() {
            for k in 0..cols {
                let (risk, _) = mean_se(losses.iter().map(|l| l[v][k]));
                rows.push(CalibrationRow {
                    model: model.id(),
                    param,
                    value,
                    x0: (param != TuningParam::Lambda).then(|| points[k]),
                    risk,
                });
            }
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn replication_losses(
    bank: &Arc<KernelBank<f64>>,
    model: &MixtureModel<f64>,
    n: usize,
    points: &[f64],
    param: TuningParam,
    grid: &[f64],
    config: &EstimatorConfig,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let x = model.sample(2 * n, seed);
    let (s1, s2) = x.split_at(n);
    match param {
        TuningParam::Kappa => {
            let fit = Fitted::with_bank(s1, s2, config, sym_seed(seed), Some(model), bank.clone())?;
            let states = points.iter().map(|&x0| fit.state_at(x0)).collect::<Result<Vec<_>>>()?;
            grid.iter()
                .map(|&kappa| {
                    states
                        .iter()
                        .map(|st| {
                            let est = fit.estimate_with(&st.with_kappa(kappa)?)?;
                            Ok((est.f_hat - model.component_pdf(est.x0)?).powi(2))
                        })
                        .collect()
                })
                .collect()
        }
        TuningParam::Epsilon => grid
            .iter()
            .map(|&eps| {
                let g = GHat::new(s2, bank.clone(), eps, config.sup_grid_points, config.sup_percentile)?;
                points
                    .iter()
                    .map(|&x0| Ok((g.value(x0) - model.mixture_pdf(x0)?).powi(2)))
                    .collect()
            })
            .collect(),
        TuningParam::Lambda => {
            let sym = symmetrize(s2, sym_seed(seed))?;
            let delta = config.delta.unwrap_or(0.1);
            grid.iter()
                .map(|&lambda| {
                    let est = SymEstimator::new(&sym, bank.clone(), delta, lambda, config.lepski_grid_points)?;
                    Ok(vec![(est.estimate(config.theta_nodes).theta_tilde - model.theta()).abs()])
                })
                .collect()
        }
    }
}

/// Risk curves from an arbitrary risk function `risk(model, value, x0)`.
pub fn calibrate_with(
    models: &[MixtureModel<f64>],
    points: &[f64],
    param: TuningParam,
    grid: &[f64],
    risk: impl Fn(&MixtureModel<f64>, f64, Option<f64>) -> Result<f64>,
) -> Result<Vec<CalibrationRow>> {
    if grid.is_empty() {
        return Err(Error::param("grid", 0.0, "needs at least one value"));
    }
    let xs: Vec<Option<f64>> = if param == TuningParam::Lambda {
        vec![None]
    } else {
        points.iter().copied().map(Some).collect()
    };
    let mut rows = Vec::new();
    for model in models {
        for &value in grid {
            for &x0 in &xs {
                rows.push(CalibrationRow {
                    model: model.id(),
                    param,
                    value,
                    x0,
                    risk: risk(model, value, x0)?,
                });
            }
        }
    }
    Ok(rows)
}

/// Grid value with the smallest risk for `(model, x0)`; the first one on ties.
pub fn calibration_argmin(rows: &[CalibrationRow], model: ModelId, x0: Option<f64>) -> Option<f64> {
    rows.iter()
        .filter(|r| r.model == model && r.x0 == x0)
        .fold(None, |best: Option<&CalibrationRow>, r| match best {
            Some(b) if b.risk <= r.risk => Some(b),
            _ => Some(r),
        })
        .map(|r| r.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ThetaMethod {
    #[serde(rename = "Sym-Ker")]
    SymKer,
    Storey,
}

impl fmt::Display for ThetaMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThetaMethod::SymKer => "Sym-Ker",
            ThetaMethod::Storey => "Storey",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaRow {
    pub model: ModelId,
    pub method: ThetaMethod,
    pub rep: usize,
    pub abs_error: f64,
}

/// Mixing-proportion estimate from the auxiliary half-sample of replication `seed`.
pub trait ThetaSource: Sync {
    fn theta(&self, model: &MixtureModel<f64>, sample2: &[f64], seed: u64) -> Result<f64>;
}

/// The reflected kernel estimator with the sup-norm bandwidth rule.
#[derive(Debug)]
pub struct SymKer {
    pub config: EstimatorConfig,
    cache: BankCache,
}

impl SymKer {
    pub fn new(config: EstimatorConfig) -> Self {
        SymKer {
            config,
            cache: BankCache::new(),
        }
    }
}

impl ThetaSource for SymKer {
    fn theta(&self, model: &MixtureModel<f64>, sample2: &[f64], seed: u64) -> Result<f64> {
        let config = config_for(model, &self.config);
        let bank = self.cache.get(config.kernel, sample2.len())?;
        Ok(theta_sym_ker(bank, sample2, &config, sym_seed(seed))?.theta_tilde)
    }
}

pub fn theta_comparison(
    models: &[MixtureModel<f64>],
    n: usize,
    reps: usize,
    config: &EstimatorConfig,
    seed_base: u64,
) -> Result<Vec<ThetaRow>> {
    theta_comparison_with(&SymKer::new(config.clone()), models, n, reps, config, seed_base)
}

/// Long format: for each model and replication, one Sym-Ker row then one Storey row.
pub fn theta_comparison_with(
    sym_ker: &dyn ThetaSource,
    models: &[MixtureModel<f64>],
    n: usize,
    reps: usize,
    config: &EstimatorConfig,
    seed_base: u64,
) -> Result<Vec<ThetaRow>> {
    check_n(n)?;
    check_reps(reps)?;
    config.validate()?;
    let mut rows = Vec::new();
    for model in models {
        let pairs = (0..reps)
            .into_par_iter()
            .map(|r| {
                let seed = seed_base.wrapping_add(r as u64);
                let run = || -> Result<(f64, f64)> {
                    let x = model.sample(2 * n, seed);
                    let s2 = &x[n..];
                    Ok((sym_ker.theta(model, s2, seed)?, storey_theta(s2, config.tau)?))
                };
                with_context(r, seed, run())
            })
            .collect::<Result<Vec<_>>>()?;
        for (rep, (sym, storey)) in pairs.into_iter().enumerate() {
            for (method, est) in [(ThetaMethod::SymKer, sym), (ThetaMethod::Storey, storey)] {
                rows.push(ThetaRow {
                    model: model.id(),
                    method,
                    rep,
                    abs_error: (est - model.theta()).abs(),
                });
            }
        }
    }
    Ok(rows)
}

/// Median absolute error of `method` for `model`.
pub fn median_abs_error(rows: &[ThetaRow], model: ModelId, method: ThetaMethod) -> Option<f64> {
    let mut v: Vec<f64> = rows
        .iter()
        .filter(|r| r.model == model && r.method == method)
        .map(|r| r.abs_error)
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len();
    Some(if m % 2 == 1 { v[m / 2] } else { (v[m / 2 - 1] + v[m / 2]) / 2.0 })
}

/// A rectangular table of already formatted cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn from_mc(results: &[McResult]) -> Self {
        let mut t = Table::new(&["model", "n", "x0", "reps", "mse", "se"]);
        for r in results {
            t.rows.push(vec![
                r.model.to_string(),
                r.n.to_string(),
                num(r.x0),
                r.reps.to_string(),
                num(r.mse),
                num(r.se),
            ]);
        }
        t
    }

    pub fn from_calibration(rows: &[CalibrationRow]) -> Self {
        let mut t = Table::new(&["model", "param", "param_value", "x0", "risk"]);
        for r in rows {
            t.rows.push(vec![
                r.model.to_string(),
                r.param.to_string(),
                num(r.value),
                r.x0.map(num).unwrap_or_default(),
                num(r.risk),
            ]);
        }
        t
    }

    pub fn from_theta(rows: &[ThetaRow]) -> Self {
        let mut t = Table::new(&["model", "method", "rep", "abs_error"]);
        for r in rows {
            t.rows.push(vec![
                r.model.to_string(),
                r.method.to_string(),
                r.rep.to_string(),
                num(r.abs_error),
            ]);
        }
        t
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let wrap = |e| Error::Csv {
            path: "<memory>".into(),
            source: e,
        };
        w.write_record(&self.header).map_err(wrap)?;
        for row in &self.rows {
            w.write_record(row).map_err(wrap)?;
        }
        w.into_inner().map_err(|e| Error::Io {
            path: "<memory>".into(),
            source: e.into_error(),
        })
    }

    /// Whitespace-delimited, header as a `#` comment, empty cells as `NaN`.
    pub fn to_dat(&self) -> String {
        let mut s = format!("# {}\n", self.header.join(" "));
        for row in &self.rows {
            let cells: Vec<&str> = row
                .iter()
                .map(|c| if c.is_empty() { "NaN" } else { c.as_str() })
                .collect();
            s.push_str(&cells.join(" "));
            s.push('\n');
        }
        s
    }
}

/// Shortest representation that parses back to the same value.
fn num(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExportFormat {
    #[default]
    Csv,
    Dat,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "dat" | "gnuplot" => Ok(ExportFormat::Dat),
            _ => Err(Error::Unknown {
                kind: "export format",
                name: s.to_string(),
            }),
        }
    }
}

pub fn export(table: &Table, path: &Path, format: ExportFormat) -> Result<()> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    if path.as_os_str().is_empty() {
        return Err(Error::Io {
            path: path.into(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty output path"),
        });
    }
    let bytes = match format {
        ExportFormat::Csv => table.to_csv()?,
        ExportFormat::Dat => table.to_dat().into_bytes(),
    };
    let io = |source| Error::Io {
        path: path.into(),
        source,
    };
    let mut f = BufWriter::new(File::create(path).map_err(io)?);
    f.write_all(&bytes).map_err(io)?;
    f.flush().map_err(io)
}
