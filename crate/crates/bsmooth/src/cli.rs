//! Command-line front end.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use bsmooth_core::discrete::{DataSet, KernelOrder};
use bsmooth_core::pipeline::{Curvature, CurveEstimator, HalfwidthRule, InteriorMethod, PlanConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::catalog::TestFunction;
use crate::error::CliError;
use crate::io::{read_xy_path, write_curve, write_table};
use crate::simulation::{
    analytic_risk_curves, figures, monte_carlo_mse, parse_estimators, z_grid, CurvatureSource, Estimator, Noise,
    Scenario,
};

/// Derivative estimation with MSE-optimal boundary kernels.
#[derive(Debug, Parser)]
#[command(name = "bsmooth", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate f^(q) on a grid from an `x,y` CSV file.
    Smooth(SmoothArgs),
    /// Write the analytic risk-ratio tables figure1.csv .. figure5.csv.
    RiskCurves(RiskArgs),
    /// Monte-Carlo MSE study on a catalog function.
    Simulate(SimulateArgs),
}

/// Boundary kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Optimal,
    Asymptotic,
    Theorem7,
    Mueller,
    Bp,
    Variable,
}

impl From<Mode> for Estimator {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Optimal => Estimator::Optimal,
            Mode::Asymptotic => Estimator::Asymptotic,
            Mode::Theorem7 => Estimator::Theorem7,
            Mode::Mueller => Estimator::Mueller,
            Mode::Bp => Estimator::BartlettPriestley,
            Mode::Variable => Estimator::Variable,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    Gaussian,
    Uniform,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// Derivative order.
    #[arg(long, default_value_t = 0)]
    pub q: usize,
    /// Kernel order; defaults to q + 2.
    #[arg(long)]
    pub p: Option<usize>,
    /// Halfwidth multiplier λ applied to the optimal halfwidth.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Fixed halfwidth in x units instead of λ h0(t).
    #[arg(long)]
    pub halfwidth: Option<f64>,
}

impl KernelArgs {
    fn order(&self) -> Result<KernelOrder, CliError> {
        Ok(KernelOrder::new(self.q, self.p.unwrap_or(self.q + 2))?)
    }
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    /// Input CSV with header `x,y`.
    #[arg(long)]
    pub input: PathBuf,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Boundary kernel family.
    #[arg(long, value_enum, default_value_t = Mode::Optimal)]
    pub mode: Mode,
    /// Interior estimator: `optimal` or `bp`.
    #[arg(long, default_value = "optimal")]
    pub estimator: String,
    /// Noise variance, or `auto` for the first-difference estimate.
    #[arg(long, default_value = "auto")]
    pub sigma2: String,
    /// p-th derivative: `auto` for a pilot fit, or a constant.
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    pub fp: String,
    /// Number of equispaced estimation points over the data range.
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    /// Disable the continuity correction in the boundary regions.
    #[arg(long)]
    pub no_blend: bool,
}

#[derive(Debug, Args)]
pub struct RiskArgs {
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub output: PathBuf,
    /// Derivative order (kernels of type (q, q+2)).
    #[arg(long, default_value_t = 0)]
    pub q: usize,
    /// Number of z points on [-1, 0].
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    /// Also write risk.csv with the normalized risk of these estimators.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Normalized halfwidth β for risk.csv.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Catalog function: sine, cubic-exp, exp, logistic or poly:c0,c1,...
    #[arg(long, default_value = "sine")]
    pub function: String,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Comma-separated estimators.
    #[arg(long, default_value = "optimal")]
    pub estimator: String,
    /// Shortcut for a single estimator; overrides --estimator.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Noise variance.
    #[arg(long, default_value = "0.01")]
    pub sigma2: String,
    /// p-th derivative: `true` (exact), `auto` (pilot per replication) or a constant.
    #[arg(long, default_value = "true", allow_hyphen_values = true)]
    pub fp: String,
    /// Design points.
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Replications.
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    /// Seed of the random streams.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Number of equispaced estimation points on [0, 1].
    #[arg(long, default_value_t = 21)]
    pub grid: usize,
    /// Noise distribution.
    #[arg(long, value_enum, default_value_t = NoiseArg::Gaussian)]
    pub noise: NoiseArg,
}

/// Runs a parsed command.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Smooth(a) => cmd_smooth(&a),
        Command::RiskCurves(a) => cmd_risk_curves(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    }
}

/// `σ̂² = sum (y_{i+1} - y_i)² / (2 (N - 1))` over x-sorted data.
pub fn difference_variance(data: &DataSet) -> f64 {
    let y = data.y();
    if y.len() < 2 {
        return 0.0;
    }
    y.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / (2.0 * (y.len() - 1) as f64)
}

fn parse_number(flag: &str, raw: &str) -> Result<f64, CliError> {
    let v: f64 = raw.trim().parse().map_err(|_| CliError::Input(format!("--{flag}: `{raw}` is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::Input(format!("--{flag}: `{raw}` is not finite")));
    }
    Ok(v)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(path: Option<&Path>) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::io(path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf), e)
}

/// Estimates `f^{(q)}` on an equispaced grid over the data range.
pub fn cmd_smooth(a: &SmoothArgs) -> Result<(), CliError> {
    let order = a.kernel.order()?;
    let data = read_xy_path(&a.input)?;
    if data.len() < order.p() + 2 {
        return Err(CliError::InsufficientData(format!(
            "{} rows, a kernel of order {} needs at least {}",
            data.len(),
            order.p(),
            order.p() + 2
        )));
    }
    let noise_var = match a.sigma2.trim() {
        "auto" => difference_variance(&data),
        raw => parse_number("sigma2", raw)?,
    };
    let curvature = match a.fp.trim() {
        "auto" => Curvature::Pilot,
        raw => Curvature::Constant(parse_number("fp", raw)?),
    };
    let mut cfg = PlanConfig::new(order, noise_var, curvature);
    cfg.boundary = Estimator::from(a.mode).boundary_mode();
    cfg.interior = match a.estimator.trim() {
        "optimal" => InteriorMethod::OptimalKernel,
        "bp" | "bartlett-priestley" => InteriorMethod::BartlettPriestley,
        other => return Err(CliError::Input(format!("--estimator: unknown interior estimator `{other}`"))),
    };
    cfg.blend = !a.no_blend;
    cfg.halfwidth = match a.kernel.halfwidth {
        Some(h) => HalfwidthRule::Fixed(h),
        None => HalfwidthRule::Optimal { lambda: a.kernel.lambda },
    };
    if a.grid < 2 {
        return Err(CliError::Input("--grid must be at least 2".into()));
    }
    let est = CurveEstimator::new(&data, &cfg)?;
    let (lo, hi) = (data.x()[0], data.x()[data.len() - 1]);
    let grid: Vec<f64> = (0..a.grid).map(|i| lo + (hi - lo) * i as f64 / (a.grid - 1) as f64).collect();
    let curve = est.estimate_curve(&grid)?;
    let out = open_output(a.output.as_deref())?;
    write_curve(out, &curve).map_err(io_err(a.output.as_deref()))
}

/// Writes `figure1.csv` .. `figure5.csv`, and `risk.csv` when estimators are given.
pub fn cmd_risk_curves(a: &RiskArgs) -> Result<(), CliError> {
    if a.q > 4 {
        return Err(CliError::Input(format!("--q must be at most 4, got {}", a.q)));
    }
    let extra = a.estimator.as_deref().map(parse_estimators).transpose()?;
    fs::create_dir_all(&a.output).map_err(|e| CliError::io(&a.output, e))?;
    let write = |name: &str, columns: &[String], rows: &[Vec<f64>]| -> Result<(), CliError> {
        let path = a.output.join(format!("{name}.csv"));
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let header: Vec<&str> = columns.iter().map(String::as_str).collect();
        let rows = rows.iter().map(|r| r.iter().map(|v| v.to_string()).collect());
        write_table(BufWriter::new(file), &header, rows).map_err(|e| CliError::io(&path, e))
    };
    for fig in figures(a.q, a.grid)? {
        write(fig.name, &fig.columns, &fig.rows)?;
    }
    if let Some(est) = extra {
        let z = z_grid(a.grid);
        let curves = analytic_risk_curves(a.q, &est, a.lambda, &z)?;
        let mut columns = vec!["z".to_string()];
        columns.extend(curves.iter().map(|c| c.estimator.name().to_string()));
        let rows: Vec<Vec<f64>> = z
            .iter()
            .enumerate()
            .map(|(i, &zi)| std::iter::once(zi).chain(curves.iter().map(|c| c.values[i])).collect())
            .collect();
        write("risk", &columns, &rows)?;
    }
    Ok(())
}

/// Writes `t,estimator,empirical_mse,std_err,analytic_risk`.
pub fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let order = a.kernel.order()?;
    let function: TestFunction = a.function.parse().map_err(CliError::Input)?;
    let noise_var = parse_number("sigma2", &a.sigma2)?;
    let mut s = Scenario::new(function, order, noise_var, a.n, a.reps, a.seed);
    s.estimators = match a.mode {
        Some(m) => vec![m.into()],
        None => parse_estimators(&a.estimator)?,
    };
    s.lambda = a.kernel.lambda;
    s.halfwidth = a.kernel.halfwidth;
    s.curvature = match a.fp.trim() {
        "true" => CurvatureSource::True,
        "auto" => CurvatureSource::Pilot,
        raw => CurvatureSource::Constant(parse_number("fp", raw)?),
    };
    s.noise = match a.noise {
        NoiseArg::Gaussian => Noise::Gaussian,
        NoiseArg::Uniform => Noise::Uniform,
    };
    if a.grid < 2 {
        return Err(CliError::Input("--grid must be at least 2".into()));
    }
    s.grid = (0..a.grid).map(|i| i as f64 / (a.grid - 1) as f64).collect();
    let rows = monte_carlo_mse(&s)?;
    let failed: usize = rows.iter().map(|r| r.failures).sum();
    if failed > 0 {
        eprintln!("warning: {failed} estimator evaluations failed and were left out of the averages");
    }
    let out = open_output(a.output.as_deref())?;
    let table = rows.iter().map(|r| {
        vec![
            r.t.to_string(),
            r.estimator.name().to_string(),
            r.empirical_mse.to_string(),
            r.std_err.to_string(),
            r.analytic_risk.to_string(),
        ]
    });
    write_table(out, &["t", "estimator", "empirical_mse", "std_err", "analytic_risk"], table)
        .map_err(io_err(a.output.as_deref()))
}
