//! `wkde`: simulate the benchmark mixtures, run the estimators on sample
//! files and reproduce the Monte Carlo tables.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use wkde::harness::{self, ExportFormat, Table, TuningParam};
use wkde::theta::{storey_theta, symmetrize, SymEstimator};
use wkde::{BandwidthGrid, EstimatorConfig, Fitted, Kernel, KernelBank, MixtureModel, ModelId};

#[derive(Parser, Debug)]
#[command(name = "wkde", version, about = "Weighted kernel estimation in two-component mixtures")]
struct Cli {
    /// Seed (base seed of the replications for the table commands).
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Flat JSON object overriding fields of the estimator configuration.
    #[arg(long, global = true, value_name = "JSON")]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a sample from a benchmark mixture (CSV, header `x`).
    Simulate {
        #[arg(long)]
        model: ModelId,
        #[arg(long)]
        n: usize,
    },
    /// Adaptive component estimate at the given points (JSON array).
    EstimateF {
        /// Sample CSV; the first half feeds the weighted estimator, the second the plug-ins.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.4, 0.6, 0.9])]
        x0: Vec<f64>,
        #[command(flatten)]
        tuning: Tuning,
        /// Use the true mixing proportion and mixture density of `--model`.
        #[arg(long, requires = "model")]
        oracle: bool,
        #[arg(long)]
        model: Option<ModelId>,
    },
    /// Mixing proportion from a sample (JSON object).
    EstimateTheta {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
        /// Counting-baseline threshold.
        #[arg(long)]
        tau: Option<f64>,
        /// Supplies the default identifiability margin.
        #[arg(long)]
        model: Option<ModelId>,
    },
    /// Monte Carlo MSE of the component estimator.
    MseTable {
        #[command(flatten)]
        design: Design,
        #[arg(long, value_delimiter = ',', default_values_t = [2000])]
        n: Vec<usize>,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long, default_value = "csv")]
        format: ExportFormat,
    },
    /// Risk curve over a grid of one tuning constant.
    Calibrate {
        #[arg(long)]
        param: TuningParam,
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[command(flatten)]
        design: Design,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long, default_value = "csv")]
        format: ExportFormat,
    },
    /// Absolute errors of the reflected kernel and counting estimators of the proportion.
    ThetaCompare {
        #[arg(long, value_delimiter = ',', default_values_t = [ModelId::F1, ModelId::F2, ModelId::F3])]
        models: Vec<ModelId>,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, default_value = "csv")]
        format: ExportFormat,
    },
}

#[derive(Args, Debug)]
struct Design {
    #[arg(long, value_delimiter = ',', default_values_t = [ModelId::F1, ModelId::F2, ModelId::F3])]
    models: Vec<ModelId>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.4, 0.6, 0.9])]
    points: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
}

/// Command-line overrides of the configuration file.
#[derive(Args, Debug)]
struct Tuning {
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
}

impl Tuning {
    fn apply(&self, c: &mut EstimatorConfig) {
        if let Some(v) = self.kappa {
            c.kappa = v;
        }
        if let Some(v) = self.epsilon {
            c.epsilon = v;
        }
        if let Some(v) = self.lambda {
            c.lambda = v;
        }
        if self.delta.is_some() {
            c.delta = self.delta;
        }
    }
}

/// Bad input from the user (as opposed to I/O or numerical failure).
#[derive(Debug)]
struct Invalid(String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Invalid>().is_some() {
        return 2;
    }
    match e.downcast_ref::<wkde::Error>() {
        Some(w) if w.is_validation() => 2,
        _ => 1,
    }
}

fn load_config(path: Option<&Path>, tuning: &Tuning) -> Result<EstimatorConfig> {
    let mut c = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", p.display())))?
        }
        None => EstimatorConfig::default(),
    };
    tuning.apply(&mut c);
    c.validate()?;
    Ok(c)
}

fn read_sample(path: &Path) -> Result<Vec<f64>> {
    let mut rd = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let col = rd
        .headers()
        .with_context(|| format!("reading {}", path.display()))?
        .iter()
        .position(|h| h.trim() == "x")
        .ok_or_else(|| invalid(format!("{}: no column `x`", path.display())))?;
    let mut xs = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.with_context(|| format!("reading {}", path.display()))?;
        let cell = rec.get(col).unwrap_or("").trim();
        let x: f64 = cell
            .parse()
            .map_err(|_| invalid(format!("{}: row {}: `{cell}` is not a number", path.display(), i + 1)))?;
        if !(0.0..=1.0).contains(&x) {
            return Err(invalid(format!("{}: row {}: {x} lies outside [0, 1]", path.display(), i + 1)));
        }
        xs.push(x);
    }
    if xs.is_empty() {
        return Err(invalid(format!("{}: no observations", path.display())));
    }
    Ok(xs)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut so = io::stdout().lock();
            so.write_all(bytes)?;
            so.flush()?;
            Ok(())
        }
    }
}

fn emit_table(out: Option<&Path>, table: &Table, format: ExportFormat) -> Result<()> {
    match out {
        Some(p) => Ok(harness::export(table, p, format)?),
        None => match format {
            ExportFormat::Csv => emit(None, &table.to_csv()?),
            ExportFormat::Dat => emit(None, table.to_dat().as_bytes()),
        },
    }
}

fn emit_json(out: Option<&Path>, value: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    emit(out, s.as_bytes())
}

fn models(ids: &[ModelId]) -> Result<Vec<MixtureModel>> {
    Ok(ids.iter().map(|&id| MixtureModel::from_id(id)).collect::<wkde::Result<_>>()?)
}

#[derive(Serialize)]
struct PointOut {
    x0: f64,
    f_hat: f64,
    h_selected: f64,
    theta_tilde: f64,
    gamma_hat: f64,
    flags: wkde::Flags,
}

#[derive(Serialize)]
struct ThetaOut {
    theta_raw: f64,
    theta_tilde: f64,
    b_selected: f64,
    storey_theta: f64,
    truncated: bool,
}

fn run(cli: Cli) -> Result<()> {
    let out = cli.out.as_deref();
    let cfg = cli.config.as_deref();
    match cli.command {
        Command::Simulate { model, n } => {
            if n == 0 {
                return Err(invalid("--n must be at least 1"));
            }
            let m = MixtureModel::from_id(model)?;
            let mut s = String::from("x\n");
            for x in m.sample(n, cli.seed) {
                s.push_str(&format!("{x}\n"));
            }
            emit(out, s.as_bytes())
        }
        Command::EstimateF { input, x0, tuning, oracle, model } => {
            let mut c = load_config(cfg, &tuning)?;
            c.oracle_mode |= oracle;
            let m = model.map(MixtureModel::from_id).transpose()?;
            if c.oracle_mode && m.is_none() {
                return Err(invalid("oracle mode needs --model"));
            }
            if c.delta.is_none() {
                c.delta = m.as_ref().map(|m| m.default_delta());
            }
            let xs = read_sample(&input)?;
            if xs.len() < 2 {
                return Err(invalid("need at least two observations to split the sample"));
            }
            let (s1, s2) = xs.split_at(xs.len() / 2);
            let fit = Fitted::fit(s1, s2, &c, cli.seed, m.as_ref())?;
            let points = x0
                .iter()
                .map(|&x| {
                    let e = fit.estimate_at(x)?;
                    Ok(PointOut {
                        x0: e.x0,
                        f_hat: e.f_hat,
                        h_selected: e.h_selected,
                        theta_tilde: e.theta_tilde,
                        gamma_hat: e.gamma_hat,
                        flags: e.flags,
                    })
                })
                .collect::<wkde::Result<Vec<_>>>()?;
            emit_json(out, &points)
        }
        Command::EstimateTheta { input, tuning, tau, model } => {
            let mut c = load_config(cfg, &tuning)?;
            if let Some(t) = tau {
                c.tau = t;
            }
            if c.delta.is_none() {
                c.delta = model.map(MixtureModel::from_id).transpose()?.map(|m| m.default_delta());
            }
            c.validate()?;
            let xs = read_sample(&input)?;
            let bank = KernelBank::new(Kernel::new(c.kernel)?, BandwidthGrid::reciprocal(xs.len())?)?;
            let sym = symmetrize(&xs, cli.seed)?;
            let est = SymEstimator::new(&sym, bank, c.delta.unwrap_or(0.1), c.lambda, c.lepski_grid_points)?
                .estimate(c.theta_nodes);
            emit_json(
                out,
                &ThetaOut {
                    theta_raw: est.theta_raw,
                    theta_tilde: est.theta_tilde,
                    b_selected: est.b_selected,
                    storey_theta: storey_theta(&xs, c.tau)?,
                    truncated: est.truncated,
                },
            )
        }
        Command::MseTable { design, n, tuning, format } => {
            let c = load_config(cfg, &tuning)?;
            let ms = models(&design.models)?;
            let res = harness::mse_experiment(&ms, &n, &design.points, design.reps, &c, cli.seed)?;
            emit_table(out, &Table::from_mc(&res), format)
        }
        Command::Calibrate { param, grid, design, n, tuning, format } => {
            let c = load_config(cfg, &tuning)?;
            let ms = models(&design.models)?;
            let rows = harness::calibrate(&ms, n, &design.points, design.reps, param, &grid, &c, cli.seed)?;
            emit_table(out, &Table::from_calibration(&rows), format)
        }
        Command::ThetaCompare { models: ids, n, reps, tuning, tau, format } => {
            let mut c = load_config(cfg, &tuning)?;
            if let Some(t) = tau {
                c.tau = t;
            }
            c.validate()?;
            let rows = harness::theta_comparison(&models(&ids)?, n, reps, &c, cli.seed)?;
            emit_table(out, &Table::from_theta(&rows), format)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
