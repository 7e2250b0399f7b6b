//! Monte-Carlo MSE studies and analytic risk curves.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use bsmooth_core::continuum::ContinuumKernel;
use bsmooth_core::discrete::{DataSet, KernelOrder};
use bsmooth_core::pipeline::{BoundaryMode, Curvature, CurveEstimator, HalfwidthRule, LinearWeights, PlanConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::catalog::TestFunction;
use crate::error::CliError;

/// Boundary estimator families compared in studies and risk curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    /// Risk-optimal boundary kernel.
    Optimal,
    /// Asymptotically optimal boundary kernel.
    Asymptotic,
    /// Kernel vanishing at the right support end, fixed halfwidth.
    Theorem7,
    /// Kernel vanishing at both support ends.
    Mueller,
    /// Local fit with the Bartlett-Priestley weighting.
    BartlettPriestley,
    /// Right-vanishing kernel with a position-dependent halfwidth.
    Variable,
}

impl Estimator {
    /// All variants in a fixed order.
    pub const ALL: [Estimator; 6] = [
        Estimator::Optimal,
        Estimator::Asymptotic,
        Estimator::Theorem7,
        Estimator::Mueller,
        Estimator::BartlettPriestley,
        Estimator::Variable,
    ];

    /// Name used on the command line and in output files.
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Optimal => "optimal",
            Estimator::Asymptotic => "asymptotic",
            Estimator::Theorem7 => "theorem7",
            Estimator::Mueller => "mueller",
            Estimator::BartlettPriestley => "bp",
            Estimator::Variable => "variable",
        }
    }

    /// Boundary mode of the full-range estimator.
    pub fn boundary_mode(self) -> BoundaryMode {
        match self {
            Estimator::Optimal => BoundaryMode::Optimal,
            Estimator::Asymptotic => BoundaryMode::Asymptotic,
            Estimator::Theorem7 => BoundaryMode::VanishRight,
            Estimator::Mueller => BoundaryMode::Mueller,
            Estimator::BartlettPriestley => BoundaryMode::BartlettPriestley,
            Estimator::Variable => BoundaryMode::VariableHalfwidth,
        }
    }

    /// Continuum kernel at offset `z` and normalized halfwidth `β`, for
    /// estimators that have one.
    pub fn continuum(self, q: usize, z: f64, beta: f64) -> Result<ContinuumKernel, CliError> {
        Ok(match self {
            Estimator::Optimal => ContinuumKernel::boundary_optimal(q, z, beta)?,
            Estimator::Asymptotic => ContinuumKernel::asymptotic_optimal(q, z)?,
            Estimator::Theorem7 => ContinuumKernel::vanish_right(q, z)?,
            Estimator::Mueller => ContinuumKernel::mueller(q, z)?,
            Estimator::BartlettPriestley => ContinuumKernel::bartlett_priestley(q, z)?,
            Estimator::Variable => {
                return Err(CliError::Input("`variable` has no fixed-halfwidth continuum kernel".into()))
            }
        })
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .or(match s {
                "bartlett-priestley" => Some(Estimator::BartlettPriestley),
                "mueller-kernel" | "muller" => Some(Estimator::Mueller),
                _ => None,
            })
            .ok_or_else(|| format!("unknown estimator `{s}`"))
    }
}

/// Parses a comma-separated estimator list.
pub fn parse_estimators(list: &str) -> Result<Vec<Estimator>, CliError> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.parse().map_err(CliError::Input)).collect()
}

/// Noise distribution; both have mean zero and variance `σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Noise {
    /// Normal.
    #[default]
    Gaussian,
    /// Uniform on `[-√3 σ, √3 σ]`.
    Uniform,
}

/// Where the estimators get `f^{(p)}` from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CurvatureSource {
    /// The exact derivative of the test function.
    #[default]
    True,
    /// Pilot polynomial fit, redone for every replication.
    Pilot,
    /// A fixed value.
    Constant(f64),
}

/// A Monte-Carlo study on `N` equispaced points of `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Regression function.
    pub function: TestFunction,
    /// Kernel type.
    pub order: KernelOrder,
    /// Noise variance.
    pub noise_var: f64,
    /// Number of design points.
    pub n: usize,
    /// Replications.
    pub reps: usize,
    /// Seed of the random streams.
    pub seed: u64,
    /// Estimators to compare.
    pub estimators: Vec<Estimator>,
    /// Halfwidth multiplier `λ`.
    pub lambda: f64,
    /// Fixed halfwidth instead of `λ h_0(t)`.
    pub halfwidth: Option<f64>,
    /// Source of `f^{(p)}`.
    pub curvature: CurvatureSource,
    /// Noise distribution.
    pub noise: Noise,
    /// Estimation points.
    pub grid: Vec<f64>,
}

impl Scenario {
    /// Defaults: Gaussian noise, true curvature, `λ = 1`, optimal estimator,
    /// 21 grid points.
    pub fn new(function: TestFunction, order: KernelOrder, noise_var: f64, n: usize, reps: usize, seed: u64) -> Self {
        Self {
            function,
            order,
            noise_var,
            n,
            reps,
            seed,
            estimators: vec![Estimator::Optimal],
            lambda: 1.0,
            halfwidth: None,
            curvature: CurvatureSource::True,
            noise: Noise::Gaussian,
            grid: (0..=20).map(|i| i as f64 / 20.0).collect(),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.reps == 0 {
            return Err(CliError::Input("replication count must be at least 1".into()));
        }
        if !(self.noise_var >= 0.0) || !self.noise_var.is_finite() {
            return Err(CliError::Input("σ² must be finite and non-negative".into()));
        }
        if self.n < self.order.p() + 2 {
            return Err(CliError::InsufficientData(format!("N = {} is below p + 2 = {}", self.n, self.order.p() + 2)));
        }
        if self.estimators.is_empty() {
            return Err(CliError::Input("no estimators given".into()));
        }
        Ok(())
    }

    /// Design points `x_i = i / (N - 1)`.
    pub fn design(&self) -> Vec<f64> {
        (0..self.n).map(|i| i as f64 / (self.n - 1) as f64).collect()
    }

    fn config(&self, estimator: Estimator) -> PlanConfig {
        let p = self.order.p();
        let curvature = match self.curvature {
            CurvatureSource::True => {
                let f = self.function.clone();
                Curvature::Function(Arc::new(move |x| f.derivative(p, x)))
            }
            CurvatureSource::Pilot => Curvature::Pilot,
            CurvatureSource::Constant(c) => Curvature::Constant(c),
        };
        let mut cfg = PlanConfig::new(self.order, self.noise_var, curvature);
        cfg.boundary = estimator.boundary_mode();
        cfg.halfwidth = match self.halfwidth {
            Some(h) => HalfwidthRule::Fixed(h),
            None => HalfwidthRule::Optimal { lambda: self.lambda },
        };
        cfg
    }
}

/// Empirical and leading-order MSE of one estimator at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct MseRow {
    /// Estimation point.
    pub t: f64,
    /// Estimator.
    pub estimator: Estimator,
    /// Mean of the squared errors over successful replications.
    pub empirical_mse: f64,
    /// Standard error of `empirical_mse`.
    pub std_err: f64,
    /// Mean error.
    pub mean_error: f64,
    /// Standard error of `mean_error`.
    pub mean_error_se: f64,
    /// `(f_p B_p h^{p-q})² + σ² m_2 / (N h^{2q+1})` from the estimator's weights.
    pub analytic_risk: f64,
    /// Replications in which the estimator failed.
    pub failures: usize,
}

/// Leading-order risk of a linear estimator:
/// `(f_p(t) sum_i w_i (x_i - t)^p / p!)² + σ² sum_i w_i²`.
pub fn leading_order_risk(weights: &[f64], x: &[f64], t: f64, p: usize, curvature: f64, noise_var: f64) -> f64 {
    let fact: f64 = (1..=p).map(|v| v as f64).product();
    let bias: f64 = weights.iter().zip(x).map(|(w, xi)| w * (xi - t).powi(p as i32)).sum::<f64>() / fact * curvature;
    let var: f64 = weights.iter().map(|w| w * w).sum::<f64>() * noise_var;
    bias * bias + var
}

/// Thread pool honoring `BSMOOTH_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("BSMOOTH_THREADS") {
        let n: usize =
            v.trim().parse().map_err(|_| CliError::Input(format!("BSMOOTH_THREADS=`{v}` is not a count")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| CliError::Input(format!("thread pool: {e}")))
}

/// Replication `rep` draws from its own ChaCha8 stream, so results do not
/// depend on scheduling or thread count.
fn noise_vector(seed: u64, rep: usize, n: usize, sigma: f64, kind: Noise) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    match kind {
        Noise::Gaussian => {
            let normal = Normal::new(0.0, sigma).expect("σ is finite and non-negative");
            (0..n).map(|_| normal.sample(&mut rng)).collect()
        }
        Noise::Uniform => {
            let a = 3f64.sqrt() * sigma;
            (0..n).map(|_| rng.random_range(-1.0..=1.0) * a).collect()
        }
    }
}

/// Runs the study. Rows come estimator-major, in grid order.
///
/// Unless the curvature is re-estimated per replication, every estimator is
/// linear with fixed weights, so these are computed once per grid point.
pub fn monte_carlo_mse(scenario: &Scenario) -> Result<Vec<MseRow>, CliError> {
    scenario.validate()?;
    let x = scenario.design();
    let truth: Vec<f64> = x.iter().map(|&v| scenario.function.value(v)).collect();
    let (q, p) = (scenario.order.q(), scenario.order.p());
    let target: Vec<f64> = scenario.grid.iter().map(|&t| scenario.function.derivative(q, t)).collect();
    let sigma = scenario.noise_var.sqrt();
    let base = DataSet::new(x.clone(), truth.clone())?;
    let fixed = scenario.curvature != CurvatureSource::Pilot;

    // Weights per (estimator, grid point), when fixed.
    let mut weights: Vec<Vec<Option<LinearWeights>>> = Vec::new();
    let mut analytic = Vec::new();
    for &e in &scenario.estimators {
        let cfg = scenario.config(e);
        let est = CurveEstimator::new(&base, &cfg)?;
        let mut row_w = Vec::new();
        let mut row_a = Vec::new();
        for &t in &scenario.grid {
            let w = est.weights_at(t).ok();
            let fp = match scenario.curvature {
                CurvatureSource::Constant(c) => c,
                _ => scenario.function.derivative(p, t),
            };
            row_a.push(
                w.as_ref().map_or(f64::NAN, |w| leading_order_risk(&w.weights, &x, t, p, fp, scenario.noise_var)),
            );
            row_w.push(if fixed { w } else { None });
        }
        weights.push(row_w);
        analytic.push(row_a);
    }

    let configs: Vec<PlanConfig> = scenario.estimators.iter().map(|&e| scenario.config(e)).collect();
    let one_rep = |rep: usize| -> Vec<Option<f64>> {
        let eps = noise_vector(scenario.seed, rep, x.len(), sigma, scenario.noise);
        let y: Vec<f64> = truth.iter().zip(&eps).map(|(a, b)| a + b).collect();
        let mut errs = Vec::with_capacity(configs.len() * target.len());
        for (ei, cfg) in configs.iter().enumerate() {
            if fixed {
                for (gi, w) in weights[ei].iter().enumerate() {
                    errs.push(
                        w.as_ref().map(|w| w.weights.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() - target[gi]),
                    );
                }
            } else {
                let fitted = base.with_responses(y.clone()).and_then(|d| CurveEstimator::new(&d, cfg));
                for (gi, &t) in scenario.grid.iter().enumerate() {
                    let v = fitted.as_ref().ok().and_then(|est| est.estimate(t).ok());
                    errs.push(v.map(|v| v.estimate - target[gi]));
                }
            }
        }
        errs
    };
    let pool = thread_pool()?;
    let per_rep: Vec<Vec<Option<f64>>> = pool.install(|| (0..scenario.reps).into_par_iter().map(one_rep).collect());

    // Sequential reduction in replication order.
    let mut rows = Vec::new();
    let g = scenario.grid.len();
    for (ei, &e) in scenario.estimators.iter().enumerate() {
        for (gi, &t) in scenario.grid.iter().enumerate() {
            let idx = ei * g + gi;
            let errs: Vec<f64> = per_rep.iter().filter_map(|r| r[idx]).collect();
            let failures = scenario.reps - errs.len();
            let (mse, se, mean, mean_se) = moments(&errs);
            rows.push(MseRow {
                t,
                estimator: e,
                empirical_mse: mse,
                std_err: se,
                mean_error: mean,
                mean_error_se: mean_se,
                analytic_risk: analytic[ei][gi],
                failures,
            });
        }
    }
    Ok(rows)
}

/// Mean squared error, its standard error, mean error and its standard error.
fn moments(errs: &[f64]) -> (f64, f64, f64, f64) {
    let r = errs.len() as f64;
    if errs.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN, f64::NAN);
    }
    let sq: Vec<f64> = errs.iter().map(|e| e * e).collect();
    let mse = sq.iter().sum::<f64>() / r;
    let mean = errs.iter().sum::<f64>() / r;
    if errs.len() < 2 {
        return (mse, f64::NAN, mean, f64::NAN);
    }
    let var_sq = sq.iter().map(|s| (s - mse) * (s - mse)).sum::<f64>() / (r - 1.0);
    let var_e = errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (r - 1.0);
    (mse, (var_sq / r).sqrt(), mean, (var_e / r).sqrt())
}

/// Normalized risk of one estimator over a grid of offsets `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskCurve {
    /// Estimator.
    pub estimator: Estimator,
    /// Derivative order.
    pub q: usize,
    /// Normalized halfwidth `β = h / h_0`.
    pub beta: f64,
    /// Offsets in `[-1, 0]`.
    pub z: Vec<f64>,
    /// Normalized risk at each offset.
    pub values: Vec<f64>,
}

impl RiskCurve {
    /// Pointwise ratio to another curve on the same grid.
    pub fn ratio_to(&self, base: &RiskCurve) -> Vec<f64> {
        self.values.iter().zip(&base.values).map(|(a, b)| a / b).collect()
    }
}

/// `z_i = -1 + i / (n - 1)`, `i = 0..n`.
pub fn z_grid(n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| -1.0 + i as f64 / (n - 1) as f64).collect()
}

/// Normalized risk of each estimator's continuum kernel on `grid` at `β`.
pub fn analytic_risk_curves(
    q: usize,
    estimators: &[Estimator],
    beta: f64,
    grid: &[f64],
) -> Result<Vec<RiskCurve>, CliError> {
    if q > 4 {
        return Err(CliError::Input(format!("risk curves support q <= 4, got {q}")));
    }
    estimators
        .iter()
        .map(|&e| {
            let values = grid
                .iter()
                .map(|&z| Ok(e.continuum(q, z, beta)?.normalized_risk(beta)?))
                .collect::<Result<Vec<f64>, CliError>>()?;
            Ok(RiskCurve { estimator: e, q, beta, z: grid.to_vec(), values })
        })
        .collect()
}

/// A table ready for CSV output.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    /// File stem, e.g. `figure1`.
    pub name: &'static str,
    /// Column names; the first is `z`.
    pub columns: Vec<String>,
    /// Rows of values.
    pub rows: Vec<Vec<f64>>,
}

fn figure(name: &'static str, z: &[f64], columns: Vec<(String, Vec<f64>)>) -> Figure {
    let mut names = vec!["z".to_string()];
    names.extend(columns.iter().map(|(n, _)| n.clone()));
    let rows = z
        .iter()
        .enumerate()
        .map(|(i, &zi)| std::iter::once(zi).chain(columns.iter().map(|(_, v)| v[i])).collect())
        .collect();
    Figure { name, columns: names, rows }
}

fn ratio(q: usize, num: Estimator, den: Estimator, beta: f64, z: &[f64]) -> Result<Vec<f64>, CliError> {
    let c = analytic_risk_curves(q, &[num, den], beta, z)?;
    Ok(c[0].ratio_to(&c[1]))
}

/// The five comparison payloads:
///
/// 1. optimal kernel at `β = 1`, `R̄(z) / R̄(0)`;
/// 2. Bartlett-Priestley over optimal at `β = 1`;
/// 3. the same ratio at `β = 1` and `β = 2`;
/// 4. Bartlett-Priestley over asymptotically optimal at `β ∈ {0.5, 1, 2}`;
/// 5. Müller over optimal at `β = 1`.
pub fn figures(q: usize, n_grid: usize) -> Result<Vec<Figure>, CliError> {
    let z = z_grid(n_grid);
    let opt = &analytic_risk_curves(q, &[Estimator::Optimal], 1.0, &z)?[0];
    let at0 = Estimator::Optimal.continuum(q, 0.0, 1.0)?.normalized_risk(1.0)?;
    let fig1 = opt.values.iter().map(|v| v / at0).collect();
    let bp = Estimator::BartlettPriestley;
    Ok(vec![
        figure("figure1", &z, vec![("ratio".into(), fig1)]),
        figure("figure2", &z, vec![("ratio".into(), ratio(q, bp, Estimator::Optimal, 1.0, &z)?)]),
        figure(
            "figure3",
            &z,
            vec![
                ("ratio_lambda_1".into(), ratio(q, bp, Estimator::Optimal, 1.0, &z)?),
                ("ratio_lambda_2".into(), ratio(q, bp, Estimator::Optimal, 2.0, &z)?),
            ],
        ),
        figure(
            "figure4",
            &z,
            vec![
                ("ratio_lambda_0.5".into(), ratio(q, bp, Estimator::Asymptotic, 0.5, &z)?),
                ("ratio_lambda_1".into(), ratio(q, bp, Estimator::Asymptotic, 1.0, &z)?),
                ("ratio_lambda_2".into(), ratio(q, bp, Estimator::Asymptotic, 2.0, &z)?),
            ],
        ),
        figure("figure5", &z, vec![("ratio".into(), ratio(q, Estimator::Mueller, Estimator::Optimal, 1.0, &z)?)]),
    ])
}
