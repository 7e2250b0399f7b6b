//! Estimation over the whole data range.
//!
//! Inside the data the optimal kernel is used with the halfwidth `λ h_0(t)`.
//! As `t` approaches an end, the support eventually touches it; from that
//! touch point `t0` outward the support is pinned to `[0, 2 t0]` and only
//! the kernel shape changes with `t`. With a fixed support, the moment
//! matrix is a polynomial in `t`, so a whole boundary sweep costs
//! `O(N_T + N_E)`: one pass over the data, then constant work per point.
//!
//! The right end is handled by reflecting the data. A linear correction
//! across each boundary region makes the curve continuous at the touch
//! points. Internally the data are mapped to `[0, 1]`.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::continuum::{interior_constants, variable_halfwidth_beta, InteriorConstants};
use crate::discrete::{
    build_kernel, build_ortho_basis, complete_coefficients, optimal_halfwidth, solve_moment_coeffs, DataSet,
    KernelOrder, LastCoefficient, MomentMatrix, OrthoBasis, SupportWindow,
};
use crate::lpr::{equivalent_kernel, WeightFunction};
use crate::math::{binomial, factorial, powi};
use crate::{Error, Result};

/// Kernel family used inside the boundary regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryMode {
    /// Risk-optimal last coefficient for the local `f^{(p)}(t)`.
    Optimal,
    /// Last coefficient at the interior noise ratio, independent of `f^{(p)}`.
    Asymptotic,
    /// Kernel of order `p` vanishing at the right end of the support.
    VanishRight,
    /// Kernel of order `p + 1` vanishing at both ends of the support.
    Mueller,
    /// Local fit with a parabolic weighting centered at `t`.
    BartlettPriestley,
    /// Right-vanishing kernel with a halfwidth that varies with `t`.
    VariableHalfwidth,
}

/// Kernel used between the touch points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum InteriorMethod {
    /// Discrete optimal kernel.
    #[default]
    OptimalKernel,
    /// Local fit with weighting `1 - y²`.
    BartlettPriestley,
}

/// Source of `f^{(p)}(t)`, in the units of the input data.
#[derive(Clone)]
pub enum Curvature {
    /// Known constant.
    Constant(f64),
    /// Global least-squares polynomial of order `p + 2`, differentiated `p` times.
    Pilot,
    /// Known function.
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Curvature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Curvature::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Curvature::Pilot => f.write_str("Pilot"),
            Curvature::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// How the interior halfwidth is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HalfwidthRule {
    /// `λ h_0(t)` with the MSE-optimal `h_0`.
    Optimal {
        /// Multiplier `λ`.
        lambda: f64,
    },
    /// Constant halfwidth in data units; also the touch point.
    Fixed(f64),
}

/// Inputs of an estimation run.
#[derive(Debug, Clone)]
pub struct PlanConfig {
    /// Kernel type `(q, p)`.
    pub order: KernelOrder,
    /// Noise variance `σ²`.
    pub noise_var: f64,
    /// Source of `f^{(p)}`.
    pub curvature: Curvature,
    /// Halfwidth rule.
    pub halfwidth: HalfwidthRule,
    /// Boundary kernel family.
    pub boundary: BoundaryMode,
    /// Interior kernel.
    pub interior: InteriorMethod,
    /// Whether to apply the linear continuity correction in the boundary regions.
    pub blend: bool,
    /// `|f^{(p)}|` is kept above this fraction of its maximum over the data range.
    pub curvature_floor: f64,
}

impl PlanConfig {
    /// Optimal halfwidth (`λ = 1`), optimal boundary kernels, blending on.
    pub fn new(order: KernelOrder, noise_var: f64, curvature: Curvature) -> Self {
        Self {
            order,
            noise_var,
            curvature,
            halfwidth: HalfwidthRule::Optimal { lambda: 1.0 },
            boundary: BoundaryMode::Optimal,
            interior: InteriorMethod::OptimalKernel,
            blend: true,
            curvature_floor: 0.05,
        }
    }
}

/// Where an estimation point lies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// Between the left end and the left touch point.
    LeftBoundary,
    /// Between the touch points.
    Interior,
    /// Between the right touch point and the right end.
    RightBoundary,
    /// Outside the data range.
    Forecast,
}

impl Region {
    /// Snake-case label.
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::LeftBoundary => "left_boundary",
            Region::Interior => "interior",
            Region::RightBoundary => "right_boundary",
            Region::Forecast => "forecast",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One point of an estimated curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Estimation point.
    pub t: f64,
    /// Estimate of `f^{(q)}(t)`.
    pub estimate: f64,
    /// Kernel halfwidth used at `t`.
    pub halfwidth: f64,
    /// Region of `t`.
    pub region: Region,
}

/// Resolved plan, in coordinates where the data span `[0, 1]`.
#[derive(Clone)]
pub struct EstimationPlan {
    order: KernelOrder,
    noise_var: f64,
    n: f64,
    offset: f64,
    length: f64,
    lambda: f64,
    fixed: Option<f64>,
    boundary: BoundaryMode,
    interior: InteriorMethod,
    blend: bool,
    constants: Option<InteriorConstants>,
    curvature: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    floor: f64,
    t0_left: f64,
    t0_right: f64,
}

impl fmt::Debug for EstimationPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EstimationPlan")
            .field("order", &self.order)
            .field("noise_var", &self.noise_var)
            .field("t0_left", &self.t0_left)
            .field("t0_right", &self.t0_right)
            .field("boundary", &self.boundary)
            .finish_non_exhaustive()
    }
}

/// Solves `h(t) = t` on `(0, 0.5]` by bisection to `1e-13`.
pub fn find_touch_point(h: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
    let g = |t: f64| -> Result<f64> { Ok(h(t)? - t) };
    let (mut lo, mut hi) = (0.0, 0.5);
    if g(hi)? > 0.0 {
        return Err(Error::NoRoot { lo, hi });
    }
    if g(1e-300)? < 0.0 {
        return Err(Error::NoRoot { lo, hi });
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Least-squares polynomial of order `p + 2` on `[0, 1]`, differentiated `p`
/// times; returns monomial coefficients in `u`.
fn pilot_curvature(data: &DataSet, p: usize) -> Result<Vec<f64>> {
    let deg = p + 2;
    let w = SupportWindow::from_indices(data, 0, data.len() - 1, 0.5)?;
    let basis = build_ortho_basis(&w, data, deg)?;
    // Fit in v = (u - c) / r, with c, r the window center and halfwidth.
    let mut fit = alloc::vec![0.0; deg + 1];
    for k in 0..=deg {
        let e = basis.values(k).iter().zip(data.y()).map(|(a, b)| a * b).sum::<f64>() * basis.scale() / basis.norm(k);
        for (l, a) in basis.coeffs(k).iter().enumerate() {
            fit[l] += e * a;
        }
    }
    let (c, r) = (w.center(), w.halfwidth());
    // p-th derivative in v, then re-expanded in u: v = (u - c)/r.
    let dv: Vec<f64> = (p..=deg).map(|l| fit[l] * factorial(l) / factorial(l - p) / powi(r, p)).collect();
    let mut out = alloc::vec![0.0; dv.len()];
    for (l, a) in dv.iter().enumerate() {
        for j in 0..=l {
            out[j] += a * binomial(l, j) * powi(-c, l - j) / powi(r, l);
        }
    }
    Ok(out)
}

impl EstimationPlan {
    /// Resolves the configuration against a data set: coordinate map,
    /// curvature source, interior constants and touch points.
    pub fn new(data: &DataSet, config: &PlanConfig) -> Result<Self> {
        let (unit, offset, length) = data.normalized()?;
        let order = config.order;
        let (q, p) = (order.q(), order.p());
        if !(config.noise_var >= 0.0) || !config.noise_var.is_finite() {
            return Err(Error::invalid("noise variance must be finite and non-negative"));
        }
        let n = data.len() as f64;
        let lp = powi(length, p);
        let curvature: Arc<dyn Fn(f64) -> f64 + Send + Sync> = match &config.curvature {
            Curvature::Constant(c) => {
                let v = c * lp;
                Arc::new(move |_| v)
            }
            Curvature::Function(f) => {
                let f = f.clone();
                Arc::new(move |u| f(offset + length * u) * lp)
            }
            Curvature::Pilot => {
                let coeffs = pilot_curvature(&unit, p)?;
                Arc::new(move |u| crate::math::horner(&coeffs, u))
            }
        };
        let floor = match config.curvature {
            Curvature::Constant(_) => 0.0,
            _ => {
                let big = (0..=200).map(|i| curvature(i as f64 / 200.0).abs()).fold(0.0, f64::max);
                config.curvature_floor * big
            }
        };
        let constants = if (p - q) % 2 == 0 { Some(interior_constants(order)?) } else { None };
        let (lambda, fixed) = match config.halfwidth {
            HalfwidthRule::Optimal { lambda } => {
                if !(lambda > 0.0) || !lambda.is_finite() {
                    return Err(Error::invalid("halfwidth multiplier must be positive"));
                }
                if constants.is_none() {
                    return Err(Error::invalid("optimal halfwidth needs p - q even"));
                }
                if config.noise_var == 0.0 {
                    return Err(Error::invalid("optimal halfwidth needs σ² > 0; use a fixed halfwidth"));
                }
                (lambda, None)
            }
            HalfwidthRule::Fixed(h) => {
                let h = h / length;
                if !(h > 0.0 && h <= 0.5) {
                    return Err(Error::invalid("fixed halfwidth must lie in (0, range/2]"));
                }
                (1.0, Some(h))
            }
        };
        if matches!(config.boundary, BoundaryMode::Asymptotic | BoundaryMode::VariableHalfwidth) && constants.is_none()
        {
            return Err(Error::invalid("this boundary mode needs p - q even"));
        }
        let mut plan = Self {
            order,
            noise_var: config.noise_var,
            n,
            offset,
            length,
            lambda,
            fixed,
            boundary: config.boundary,
            interior: config.interior,
            blend: config.blend,
            constants,
            curvature,
            floor,
            t0_left: 0.0,
            t0_right: 0.0,
        };
        match fixed {
            Some(h) => {
                plan.t0_left = h;
                plan.t0_right = h;
            }
            None => {
                // Supports wider than the data everywhere: the whole range is
                // boundary region, split at the midpoint.
                let touch = |h: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
                    if h(0.5)? > 0.5 {
                        Ok(0.5)
                    } else {
                        find_touch_point(h)
                    }
                };
                plan.t0_left = touch(&|t| plan.halfwidth_norm(t))?;
                plan.t0_right = touch(&|t| plan.halfwidth_norm(1.0 - t))?;
            }
        }
        Ok(plan)
    }

    /// Kernel type.
    pub fn order(&self) -> KernelOrder {
        self.order
    }

    /// Noise variance `σ²`.
    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Left and right touch points in data units.
    pub fn touch_points(&self) -> (f64, f64) {
        (self.offset + self.length * self.t0_left, self.offset + self.length * (1.0 - self.t0_right))
    }

    /// Boundary halfwidths `(h_left, h_right)` in data units.
    pub fn boundary_halfwidths(&self) -> (f64, f64) {
        (self.t0_left * self.length, self.t0_right * self.length)
    }

    /// Region of a point given in data units.
    pub fn region(&self, t: f64) -> Region {
        let u = (t - self.offset) / self.length;
        self.region_norm(u)
    }

    fn region_norm(&self, u: f64) -> Region {
        if !(0.0..=1.0).contains(&u) {
            Region::Forecast
        } else if u < self.t0_left {
            Region::LeftBoundary
        } else if u > 1.0 - self.t0_right {
            Region::RightBoundary
        } else {
            Region::Interior
        }
    }

    /// `|f^{(p)}|` at normalized position `u`, held above the floor.
    fn curvature_norm(&self, u: f64) -> f64 {
        (self.curvature)(u.clamp(0.0, 1.0)).abs().max(self.floor)
    }

    /// `f^{(p)}(t)` in data units, before flooring.
    pub fn curvature_at(&self, t: f64) -> f64 {
        (self.curvature)((t - self.offset) / self.length) / powi(self.length, self.order.p())
    }

    /// MSE-optimal interior halfwidth `h_0` at normalized position `u`.
    fn h0_norm(&self, u: f64) -> Result<f64> {
        let k = self.constants.as_ref().ok_or(Error::invalid("optimal halfwidth needs p - q even"))?;
        let f = self.curvature_norm(u);
        if f == 0.0 {
            return Err(Error::DegenerateCurvature);
        }
        optimal_halfwidth(self.noise_var, f, self.n, k.variance_constant, k.bias_constant, self.order)
    }

    /// Interior halfwidth at normalized position `u`.
    fn halfwidth_norm(&self, u: f64) -> Result<f64> {
        match self.fixed {
            Some(h) => Ok(h),
            None => Ok(self.lambda * self.h0_norm(u)?),
        }
    }

    /// Interior halfwidth `λ h_0(t)` in data units.
    pub fn halfwidth_at(&self, t: f64) -> Result<f64> {
        Ok(self.halfwidth_norm((t - self.offset) / self.length)? * self.length)
    }

    /// `σ² / (N h^{2p+1} f_p²)` at normalized position `u`.
    fn noise_ratio_norm(&self, u: f64, h: f64) -> f64 {
        if self.noise_var == 0.0 {
            return 0.0;
        }
        let f = self.curvature_norm(u);
        if f == 0.0 {
            return f64::INFINITY;
        }
        self.noise_var / (self.n * powi(h, 2 * self.order.p() + 1) * f * f)
    }
}

/// Fixed-support boundary data: basis on `[0, 2h]`, response sums
/// `s_j = sum_i P_j(x_i/h - 1) y_i` and power moments from which `C_kj(t)`
/// follows as a polynomial in `t`.
#[derive(Debug, Clone)]
pub struct BoundaryPrecompute {
    order: KernelOrder,
    top: usize,
    h: f64,
    density: f64,
    scale: f64,
    norms: Vec<f64>,
    sums: Vec<f64>,
    moments: Vec<f64>,
    right: Vec<f64>,
    left: Vec<f64>,
    ops: u64,
}

/// Builds the boundary snapshot for support `[0, 2h]` with basis order `top`
/// (`p`, or `p + 1` for kernels vanishing at both ends). One pass over the data.
pub fn precompute_boundary(data: &DataSet, h: f64, order: KernelOrder, top: usize) -> Result<BoundaryPrecompute> {
    let window = SupportWindow::from_interval(data, 0.0, 2.0 * h, 0.0)?;
    if window.n_points() < order.p() + 2 {
        return Err(Error::RankDeficient { order: order.p() + 1, points: window.n_points() });
    }
    let basis = build_ortho_basis(&window, data, top)?;
    Ok(snapshot(&basis, data, order, top))
}

fn snapshot(basis: &OrthoBasis, data: &DataSet, order: KernelOrder, top: usize) -> BoundaryPrecompute {
    let n = top + 1;
    let w = basis.window();
    let ys = &data.y()[w.first()..=w.last()];
    let mut ops = 0u64;
    let mut sums = alloc::vec![0.0; n];
    let mut moments = alloc::vec![0.0; n * n];
    let mut pw = alloc::vec![0.0; n];
    for (i, &u) in basis.nodes().iter().enumerate() {
        pw[0] = 1.0;
        for l in 1..n {
            pw[l] = pw[l - 1] * u;
        }
        for k in 0..n {
            let pk = basis.values(k)[i];
            sums[k] += pk * ys[i];
            for l in k..n {
                moments[k * n + l] += pk * pw[l];
                ops += 1;
            }
            ops += 1;
        }
    }
    for m in moments.iter_mut() {
        *m *= basis.scale();
    }
    BoundaryPrecompute {
        order,
        top,
        h: w.halfwidth(),
        density: w.density(),
        scale: basis.scale(),
        norms: basis.norms().to_vec(),
        sums,
        moments,
        right: (0..n).map(|k| basis.eval(k, 1.0)).collect(),
        left: (0..n).map(|k| basis.eval(k, -1.0)).collect(),
        ops,
    }
}

impl BoundaryPrecompute {
    /// `s_j = sum_i P_j(u_i) y_i`.
    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    /// Fixed halfwidth `h`.
    pub fn halfwidth(&self) -> f64 {
        self.h
    }

    /// Operations spent building the snapshot.
    pub fn ops(&self) -> u64 {
        self.ops
    }

    /// `C_kj(t)` from the cached power moments.
    pub fn moment_matrix(&self, t: f64) -> Result<MomentMatrix> {
        let mut ops = 0;
        self.moment_matrix_counted(t, &mut ops)
    }

    fn moment_matrix_counted(&self, t: f64, ops: &mut u64) -> Result<MomentMatrix> {
        let p = self.order.p();
        let n = self.top + 1;
        let z = t / self.h - 1.0;
        let mut c = alloc::vec![0.0; (p + 1) * (p + 1)];
        for j in 0..=p {
            let inv = 1.0 / factorial(j);
            for k in 0..=j {
                let mut s = 0.0;
                for l in k..=j {
                    s += binomial(j, l) * powi(-z, j - l) * self.moments[k * n + l];
                    *ops += 1;
                }
                c[k * (p + 1) + j] = s * inv;
            }
        }
        MomentMatrix::from_entries(p, c)
    }

    /// Estimate of `f^{(q)}(t)` with the coefficients given by `rule`:
    /// `(1/(N h^{q+1})) sum_k b_k(t) s_k`. Work per call does not depend on
    /// the number of data points.
    pub fn estimate(&self, t: f64, rule: LastCoefficient) -> Result<f64> {
        let mut ops = 0;
        self.estimate_counted(t, rule, &mut ops)
    }

    /// [`estimate`](Self::estimate), adding the work done to `ops`.
    pub fn estimate_counted(&self, t: f64, rule: LastCoefficient, ops: &mut u64) -> Result<f64> {
        if rule.basis_order(self.order.p()) > self.top {
            return Err(Error::OrderTooLarge { order: rule.basis_order(self.order.p()), max: self.top });
        }
        let c = self.moment_matrix_counted(t, ops)?;
        let b = solve_moment_coeffs(&c, self.order)?;
        let b = complete_coefficients(&rule, &c, &self.norms, (&self.right, &self.left), b, self.density, self.h)?;
        *ops += (b.len() * b.len()) as u64;
        let dot: f64 = b.iter().zip(&self.sums).map(|(a, s)| a * s).sum();
        Ok(dot * self.scale / powi(self.h, self.order.q()))
    }
}

/// Linear weights `K(t, x_i)` over the full data set, such that the estimate
/// is `sum_i weights[i] y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearWeights {
    /// One weight per data point, in data order.
    pub weights: Vec<f64>,
    /// Halfwidth at `t`, in data units.
    pub halfwidth: f64,
    /// Region of `t`.
    pub region: Region,
}

/// Sparse weights on an index range of one side's data.
struct Local {
    first: usize,
    weights: Vec<f64>,
}

impl Local {
    fn dot(&self, y: &[f64]) -> f64 {
        self.weights.iter().zip(&y[self.first..]).map(|(a, b)| a * b).sum()
    }
}

/// Estimator of `f^{(q)}` over the whole data range.
#[derive(Clone)]
pub struct CurveEstimator {
    plan: EstimationPlan,
    data: DataSet,
    reflected: DataSet,
    fast: [Option<BoundaryPrecompute>; 2],
}

impl fmt::Debug for CurveEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CurveEstimator").field("plan", &self.plan).finish_non_exhaustive()
    }
}

impl CurveEstimator {
    /// Plans the run and precomputes both boundary regions.
    pub fn new(data: &DataSet, config: &PlanConfig) -> Result<Self> {
        let plan = EstimationPlan::new(data, config)?;
        let (unit, _, _) = data.normalized()?;
        let reflected = unit.reflected();
        let mut est = Self { plan, data: unit, reflected, fast: [None, None] };
        if let Some(top) = est.fast_top() {
            let order = est.plan.order;
            est.fast = [
                Some(precompute_boundary(&est.data, est.plan.t0_left, order, top)?),
                Some(precompute_boundary(&est.reflected, est.plan.t0_right, order, top)?),
            ];
        }
        Ok(est)
    }

    /// The resolved plan.
    pub fn plan(&self) -> &EstimationPlan {
        &self.plan
    }

    fn fast_top(&self) -> Option<usize> {
        let p = self.plan.order.p();
        match self.plan.boundary {
            BoundaryMode::Optimal | BoundaryMode::Asymptotic | BoundaryMode::VanishRight => Some(p),
            BoundaryMode::Mueller => Some(p + 1),
            BoundaryMode::BartlettPriestley | BoundaryMode::VariableHalfwidth => None,
        }
    }

    fn side(&self, right: bool) -> (&DataSet, f64) {
        if right {
            (&self.reflected, self.plan.t0_right)
        } else {
            (&self.data, self.plan.t0_left)
        }
    }

    /// Position in unreflected normalized coordinates.
    fn unside(s: f64, right: bool) -> f64 {
        if right {
            1.0 - s
        } else {
            s
        }
    }

    fn sign(&self, right: bool) -> f64 {
        if right && self.plan.order.q() % 2 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    fn rule(&self, s: f64, h: f64, right: bool) -> LastCoefficient {
        match self.plan.boundary {
            BoundaryMode::Asymptotic => {
                LastCoefficient::NoiseRatio(self.plan.constants.as_ref().map_or(0.0, |k| k.noise_ratio))
            }
            BoundaryMode::VanishRight | BoundaryMode::VariableHalfwidth => LastCoefficient::VanishRight,
            BoundaryMode::Mueller => LastCoefficient::VanishBoth,
            BoundaryMode::Optimal | BoundaryMode::BartlettPriestley => {
                LastCoefficient::NoiseRatio(self.plan.noise_ratio_norm(Self::unside(s, right), h))
            }
        }
    }

    /// Boundary halfwidth and support for side-local position `s`.
    fn boundary_h(&self, s: f64, right: bool) -> Result<f64> {
        let (_, t0) = self.side(right);
        if self.plan.boundary != BoundaryMode::VariableHalfwidth {
            return Ok(t0);
        }
        let h0 = self.plan.halfwidth_norm(Self::unside(s.max(0.0), right))?;
        let tau = (s.max(0.0) / h0).min(1.0);
        Ok(variable_halfwidth_beta(self.plan.order.q(), tau)? * h0)
    }

    /// Direct construction of the boundary weights at side-local `s`.
    fn boundary_local(&self, s: f64, right: bool) -> Result<Local> {
        let (data, _) = self.side(right);
        let order = self.plan.order;
        let h = self.boundary_h(s, right)?;
        if self.plan.boundary == BoundaryMode::BartlettPriestley {
            let half = 2.0 * h - s;
            let w = SupportWindow::from_interval(data, s - half, s + half, s)?.with_density(self.plan.n);
            let k = equivalent_kernel(data, &w, &WeightFunction::BartlettPriestley, order)?;
            return Ok(Local { first: k.first(), weights: k.weights().to_vec() });
        }
        let w = SupportWindow::from_interval(data, 0.0, 2.0 * h, s)?;
        let k = build_kernel(data, &w, order, self.rule(s, h, right))?;
        Ok(Local { first: k.first(), weights: k.weights().to_vec() })
    }

    fn boundary_value(&self, s: f64, right: bool) -> Result<f64> {
        match &self.fast[right as usize] {
            Some(pre) => pre.estimate(s, self.rule(s, pre.halfwidth(), right)),
            None => {
                let (data, _) = self.side(right);
                Ok(self.boundary_local(s, right)?.dot(data.y()))
            }
        }
    }

    /// Interior weights at normalized `u` on the unreflected data.
    fn interior_local(&self, u: f64) -> Result<Local> {
        let order = self.plan.order;
        let data = &self.data;
        let mut h = self.plan.halfwidth_norm(u)?;
        let need = match self.plan.interior {
            InteriorMethod::OptimalKernel => order.p() + 2,
            InteriorMethod::BartlettPriestley => order.p() + 2,
        };
        if data.len() < need {
            return Err(Error::RankDeficient { order: order.p() + 1, points: data.len() });
        }
        let count = |h: f64| data.index_range(u - h, u + h).map_or(0, |(a, b)| b - a + 1);
        if count(h) < need {
            // Smallest halfwidth covering `need` points.
            let mut d: Vec<f64> = data.x().iter().map(|x| (x - u).abs()).collect();
            d.sort_by(f64::total_cmp);
            h = d[need - 1] * (1.0 + 1e-12);
        }
        let w = SupportWindow::from_interval(data, u - h, u + h, u)?;
        match self.plan.interior {
            InteriorMethod::OptimalKernel => {
                let rule = LastCoefficient::NoiseRatio(self.plan.noise_ratio_norm(u, h));
                let k = build_kernel(data, &w, order, rule)?;
                Ok(Local { first: k.first(), weights: k.weights().to_vec() })
            }
            InteriorMethod::BartlettPriestley => {
                let k = equivalent_kernel(data, &w, &WeightFunction::BartlettPriestley, order)?;
                Ok(Local { first: k.first(), weights: k.weights().to_vec() })
            }
        }
    }

    /// Unblended boundary and interior values at a touch point, in side-local
    /// sign convention. Their difference is the correction that blending removes.
    fn anchors(&self, right: bool) -> Result<(f64, f64)> {
        let (_, t0) = self.side(right);
        let b = self.boundary_value(t0, right)?;
        let i = self.sign(right) * self.interior_local(Self::unside(t0, right))?.dot(self.data.y());
        Ok((b, i))
    }

    /// Estimate at `t` (data units).
    pub fn estimate(&self, t: f64) -> Result<CurvePoint> {
        let u = (t - self.plan.offset) / self.plan.length;
        let region = self.plan.region_norm(u);
        let scale = 1.0 / powi(self.plan.length, self.plan.order.q());
        let (value, h) = match region {
            Region::Interior => (self.interior_local(u)?.dot(self.data.y()), self.plan.halfwidth_norm(u)?),
            Region::Forecast | Region::LeftBoundary | Region::RightBoundary => {
                let right = u > 0.5;
                let s = Self::unside(u, right);
                let mut v = self.boundary_value(s, right)?;
                if self.plan.blend && region != Region::Forecast {
                    let (_, t0) = self.side(right);
                    let (b0, i0) = self.anchors(right)?;
                    v -= s / t0 * (b0 - i0);
                }
                (self.sign(right) * v, self.boundary_h(s, right)?)
            }
        };
        Ok(CurvePoint { t, estimate: value * scale, halfwidth: h * self.plan.length, region })
    }

    /// Estimates on a grid. Blend anchors are computed once per side, so
    /// each boundary point costs constant work on the fast path.
    pub fn estimate_curve(&self, grid: &[f64]) -> Result<Vec<CurvePoint>> {
        let mut anchors: [Option<(f64, f64)>; 2] = [None, None];
        let scale = 1.0 / powi(self.plan.length, self.plan.order.q());
        let mut out = Vec::with_capacity(grid.len());
        for &t in grid {
            let u = (t - self.plan.offset) / self.plan.length;
            let region = self.plan.region_norm(u);
            if region == Region::Interior {
                out.push(self.estimate(t)?);
                continue;
            }
            let right = u > 0.5;
            let s = Self::unside(u, right);
            let mut v = self.boundary_value(s, right)?;
            if self.plan.blend && region != Region::Forecast {
                let (_, t0) = self.side(right);
                let (b0, i0) = match anchors[right as usize] {
                    Some(a) => a,
                    None => {
                        let a = self.anchors(right)?;
                        anchors[right as usize] = Some(a);
                        a
                    }
                };
                v -= s / t0 * (b0 - i0);
            }
            let h = self.boundary_h(s, right)?;
            out.push(CurvePoint { t, estimate: self.sign(right) * v * scale, halfwidth: h * self.plan.length, region });
        }
        Ok(out)
    }

    /// Weights of the estimate at `t` over the input data, blending and
    /// reflection included.
    pub fn weights_at(&self, t: f64) -> Result<LinearWeights> {
        let n = self.data.len();
        let u = (t - self.plan.offset) / self.plan.length;
        let region = self.plan.region_norm(u);
        let scale = 1.0 / powi(self.plan.length, self.plan.order.q());
        let mut w = alloc::vec![0.0; n];
        let h;
        if region == Region::Interior {
            let loc = self.interior_local(u)?;
            for (i, v) in loc.weights.iter().enumerate() {
                w[loc.first + i] = v * scale;
            }
            h = self.plan.halfwidth_norm(u)?;
        } else {
            let right = u > 0.5;
            let s = Self::unside(u, right);
            let sign = self.sign(right) * scale;
            // Index in side-local data maps back through the reflection.
            let put = |w: &mut Vec<f64>, loc: &Local, factor: f64| {
                for (i, v) in loc.weights.iter().enumerate() {
                    let j = loc.first + i;
                    let idx = if right { n - 1 - j } else { j };
                    w[idx] += factor * v;
                }
            };
            put(&mut w, &self.boundary_local(s, right)?, sign);
            if self.plan.blend && region != Region::Forecast {
                let (_, t0) = self.side(right);
                let c = s / t0;
                put(&mut w, &self.boundary_local(t0, right)?, -c * sign);
                let interior = self.interior_local(Self::unside(t0, right))?;
                for (i, v) in interior.weights.iter().enumerate() {
                    w[interior.first + i] += c * v * scale;
                }
            }
            h = self.boundary_h(s, right)?;
        }
        Ok(LinearWeights { weights: w, halfwidth: h * self.plan.length, region })
    }

    /// Mismatch between the unblended boundary branch and the interior branch
    /// at the left and right touch points, in data units.
    pub fn branch_mismatch(&self) -> Result<(f64, f64)> {
        let scale = 1.0 / powi(self.plan.length, self.plan.order.q());
        let (bl, il) = self.anchors(false)?;
        let (br, ir) = self.anchors(true)?;
        Ok(((bl - il) * scale, self.sign(true) * (br - ir) * scale))
    }
}
