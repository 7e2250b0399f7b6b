//! Local polynomial regression and its equivalent kernels.
//!
//! A weighted least-squares fit of a polynomial of order `p - 1` around `t`
//! is a linear smoother. Its weights, the equivalent kernel, factor as
//! `K(t, x_i) = W(x_i) Q(x_i)` with `Q` a polynomial of order `p - 1`.
//! This module computes those kernels through the weighted orthogonal
//! polynomials of the window (equivalent to a QR factorization of the design
//! matrix), and goes the other way: from a kernel with few sign changes to a
//! non-negative weighting that reproduces it.

use alloc::vec::Vec;

use crate::discrete::{solve_moment_coeffs, stieltjes, DataSet, KernelOrder, MomentMatrix, SupportWindow};
use crate::math::{binomial, factorial, horner, powi};
use crate::quadrature::gauss_legendre;
use crate::{Error, Result};

/// Weight function `W(y)` of a local fit, with `y = (x - x̄) / h` the
/// window's normalized coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightFunction {
    /// `1 - y²`.
    BartlettPriestley,
    /// `1 - y`.
    LinearLeft,
    /// `1 + y`.
    LinearRight,
    /// `intercept + slope * y`.
    Linear {
        /// Value at `y = 0`.
        intercept: f64,
        /// Derivative in `y`.
        slope: f64,
    },
    /// One value per point of the window.
    Tabulated(Vec<f64>),
}

impl WeightFunction {
    /// `W(y)` for the analytic kinds; `None` for tabulated weights.
    pub fn eval(&self, y: f64) -> Option<f64> {
        match self {
            WeightFunction::BartlettPriestley => Some(1.0 - y * y),
            WeightFunction::LinearLeft => Some(1.0 - y),
            WeightFunction::LinearRight => Some(1.0 + y),
            WeightFunction::Linear { intercept, slope } => Some(intercept + slope * y),
            WeightFunction::Tabulated(_) => None,
        }
    }

    /// Weights at the normalized window points; tiny negative round-off is
    /// clipped, anything else negative is rejected.
    pub(crate) fn values(&self, nodes: &[f64]) -> Result<Vec<f64>> {
        let raw: Vec<f64> = match self {
            WeightFunction::Tabulated(w) => {
                if w.len() != nodes.len() {
                    return Err(Error::invalid("tabulated weights do not match the window"));
                }
                w.clone()
            }
            other => nodes.iter().map(|&u| other.eval(u).unwrap_or(0.0)).collect(),
        };
        let scale = raw.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        raw.into_iter()
            .map(|w| {
                if !w.is_finite() {
                    Err(Error::invalid("non-finite weight"))
                } else if w >= 0.0 {
                    Ok(w)
                } else if w >= -1e-12 * scale {
                    Ok(0.0)
                } else {
                    Err(Error::invalid("weights must be non-negative"))
                }
            })
            .collect()
    }
}

/// Polynomial `Q` in the window coordinate `u = (x - x̄) / h`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPolynomial {
    center: f64,
    halfwidth: f64,
    coeffs: Vec<f64>,
}

impl FactorPolynomial {
    /// Monomial coefficients in `u`, lowest power first.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `Q(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.coeffs, (x - self.center) / self.halfwidth)
    }

    /// Highest power whose coefficient exceeds `tol` times the largest one.
    pub fn numerical_degree(&self, tol: f64) -> usize {
        let big = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        self.coeffs.iter().rposition(|c| c.abs() > tol * big).unwrap_or(0)
    }
}

/// Equivalent kernel of a local fit on one window.
#[derive(Debug, Clone)]
pub struct EquivalentKernel {
    first: usize,
    weights: Vec<f64>,
    weight_values: Vec<f64>,
    factor: FactorPolynomial,
}

impl EquivalentKernel {
    /// `K(t, x_i)` for the window points.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `W(x_i)` for the window points.
    pub fn weight_values(&self) -> &[f64] {
        &self.weight_values
    }

    /// Index of the first window point in the data set.
    pub fn first(&self) -> usize {
        self.first
    }

    /// The factor polynomial `Q` with `K = W Q`.
    pub fn factor(&self) -> &FactorPolynomial {
        &self.factor
    }

    /// `sum_i K(t, x_i) y_i` over the full response vector.
    pub fn estimate(&self, y: &[f64]) -> f64 {
        self.weights.iter().zip(&y[self.first..]).map(|(k, v)| k * v).sum()
    }
}

/// Kernel on arbitrary nodes: `K_i = w_i Q(u_i)` with `Q` of order `p - 1`
/// and `sum_i K_i (u_i - s)^m / m! = δ_mq` for `m < p`.
/// Returns the kernel and the monomial coefficients of `Q` in `u`.
pub(crate) fn local_kernel(nodes: &[f64], w: &[f64], s: f64, order: KernelOrder) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = order.p();
    let polys = stieltjes(nodes, w, p - 1, false)?;
    let mut d = alloc::vec![0.0; p * p];
    let mut pw = alloc::vec![0.0; p];
    for (i, &u) in nodes.iter().enumerate() {
        pw[0] = w[i];
        for m in 1..p {
            pw[m] = pw[m - 1] * (u - s) / m as f64;
        }
        for k in 0..p {
            let pk = polys.values[k][i];
            for m in k..p {
                d[k * p + m] += pk * pw[m];
            }
        }
    }
    let d = MomentMatrix::from_entries(p - 1, d)?;
    let c = solve_moment_coeffs(&d, order)?;
    let kernel = (0..nodes.len())
        .map(|i| w[i] * c.iter().enumerate().map(|(k, ck)| ck * polys.values[k][i]).sum::<f64>())
        .collect();
    let mut q = alloc::vec![0.0; p];
    for (k, ck) in c.iter().enumerate() {
        for (l, a) in polys.coeffs[k].iter().enumerate() {
            q[l] += ck * a;
        }
    }
    Ok((kernel, q))
}

fn window_nodes(data: &DataSet, window: &SupportWindow) -> Vec<f64> {
    data.x()[window.first()..=window.last()].iter().map(|x| (x - window.center()) / window.halfwidth()).collect()
}

/// Equivalent kernel of the order-`(p-1)` local fit at `window.t()` that
/// estimates the `q`-th derivative.
pub fn equivalent_kernel(
    data: &DataSet,
    window: &SupportWindow,
    weights: &WeightFunction,
    order: KernelOrder,
) -> Result<EquivalentKernel> {
    let nodes = window_nodes(data, window);
    let w = weights.values(&nodes)?;
    let (k, mut q) = local_kernel(&nodes, &w, window.offset(), order)?;
    let scale = 1.0 / powi(window.halfwidth(), order.q());
    for c in q.iter_mut() {
        *c *= scale;
    }
    Ok(EquivalentKernel {
        first: window.first(),
        weights: k.into_iter().map(|v| v * scale).collect(),
        weight_values: w,
        factor: FactorPolynomial { center: window.center(), halfwidth: window.halfwidth(), coeffs: q },
    })
}

/// Result of a local polynomial fit.
#[derive(Debug, Clone)]
pub struct LprFit {
    order: KernelOrder,
    coeffs: Vec<f64>,
    scaled: Vec<f64>,
    design: Vec<f64>,
    moments: Vec<f64>,
}

impl LprFit {
    /// Polynomial coefficients `a_0, ..., a_{p-1}` in powers of `x - t`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Derivative estimate `q! a_q`.
    pub fn estimate(&self) -> f64 {
        factorial(self.order.q()) * self.coeffs[self.order.q()]
    }

    /// Design matrix `d_kj = (1/(N h)) sum_i w_i ((x_i - t)/h)^{k+j}`, row-major.
    pub fn design(&self) -> &[f64] {
        &self.design
    }

    /// Moment vector `m_k = (1/(N h)) sum_i w_i ((x_i - t)/h)^k y_i`.
    pub fn moments(&self) -> &[f64] {
        &self.moments
    }

    /// Largest residual of the normal equations `sum_j d_kj (a_j h^j) = m_k`.
    pub fn normal_residual(&self) -> f64 {
        let p = self.order.p();
        (0..p)
            .map(|k| {
                let lhs: f64 = (0..p).map(|j| self.design[k * p + j] * self.scaled[j]).sum();
                (lhs - self.moments[k]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Weighted least-squares fit of a polynomial of order `p - 1` around
/// `window.t()`, solved in the weighted orthogonal basis of the window.
pub fn lpr_fit(data: &DataSet, window: &SupportWindow, weights: &WeightFunction, order: KernelOrder) -> Result<LprFit> {
    let p = order.p();
    let nodes = window_nodes(data, window);
    let w = weights.values(&nodes)?;
    let ys = &data.y()[window.first()..=window.last()];
    let polys = stieltjes(&nodes, &w, p - 1, false)?;

    // Fitted polynomial in u, then re-expanded in v = u - s.
    let mut in_u = alloc::vec![0.0; p];
    for k in 0..p {
        let e: f64 = (0..nodes.len()).map(|i| w[i] * ys[i] * polys.values[k][i]).sum::<f64>() / polys.norms[k];
        for (l, a) in polys.coeffs[k].iter().enumerate() {
            in_u[l] += e * a;
        }
    }
    let s = window.offset();
    let scaled: Vec<f64> = (0..p).map(|j| (j..p).map(|l| in_u[l] * binomial(l, j) * powi(s, l - j)).sum()).collect();
    let h = window.halfwidth();
    let coeffs = scaled.iter().enumerate().map(|(j, a)| a / powi(h, j)).collect();

    let norm = 1.0 / (window.density() * h);
    let mut design = alloc::vec![0.0; p * p];
    let mut moments = alloc::vec![0.0; p];
    for (i, &u) in nodes.iter().enumerate() {
        let v = u - s;
        for k in 0..p {
            let vk = w[i] * powi(v, k) * norm;
            moments[k] += vk * ys[i];
            for j in 0..p {
                design[k * p + j] += vk * powi(v, j);
            }
        }
    }
    Ok(LprFit { order, coeffs, scaled, design, moments })
}

/// Sign changes of a sequence, skipping exact zeros.
pub fn sign_changes(values: &[f64]) -> usize {
    sign_change_pairs(values, 0.0).len()
}

/// Index pairs `(j, j')` of consecutive entries above `tol` in magnitude
/// with opposite signs.
fn sign_change_pairs(values: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut last: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.abs() <= tol {
            continue;
        }
        if let Some(j) = last {
            if values[j] * v < 0.0 {
                out.push((j, i));
            }
        }
        last = Some(i);
    }
    out
}

/// Writes a kernel with at most `p - 1` sign changes as a local fit: roots
/// `z_l` are placed half the minimum gap to the right of the last point
/// before each sign change, `P(x) = s prod (x - z_l)` and `W = K / P`.
///
/// Local regression with the returned weights reproduces the kernel.
pub fn kernel_to_lpr(
    kernel: &[f64],
    data: &DataSet,
    window: &SupportWindow,
    p: usize,
) -> Result<(WeightFunction, FactorPolynomial)> {
    if kernel.len() != window.n_points() {
        return Err(Error::invalid("kernel length does not match the window"));
    }
    let nodes = window_nodes(data, window);
    let big = kernel.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    if !(big > 0.0) {
        return Err(Error::invalid("kernel is identically zero"));
    }
    let zero_tol = 1e-13 * big;
    let changes = sign_change_pairs(kernel, zero_tol);
    let allowed = p.saturating_sub(1);
    if changes.len() > allowed {
        return Err(Error::TooManySignChanges { found: changes.len(), allowed });
    }
    let eps = 0.5 * nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let roots: Vec<f64> = changes.iter().map(|&(j, _)| nodes[j] + eps).collect();

    // Monomial coefficients of prod (u - z_l).
    let mut poly = alloc::vec![1.0];
    for z in &roots {
        let mut next = alloc::vec![0.0; poly.len() + 1];
        for (d, c) in poly.iter().enumerate() {
            next[d + 1] += c;
            next[d] -= z * c;
        }
        poly = next;
    }
    let pv: Vec<f64> = nodes.iter().map(|&u| horner(&poly, u)).collect();
    let first = kernel.iter().position(|k| k.abs() > zero_tol).unwrap_or(0);
    let sign = if kernel[first] / pv[first] >= 0.0 { 1.0 } else { -1.0 };
    let pscale = pv.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut w = Vec::with_capacity(kernel.len());
    for (i, (&k, &pi)) in kernel.iter().zip(&pv).enumerate() {
        if k.abs() <= zero_tol {
            w.push(0.0);
            continue;
        }
        if pi.abs() < 1e-13 * pscale {
            return Err(Error::IllConditioned { index: window.first() + i });
        }
        w.push((k / (sign * pi)).max(0.0));
    }
    for c in poly.iter_mut() {
        *c *= sign;
    }
    let factor = FactorPolynomial { center: window.center(), halfwidth: window.halfwidth(), coeffs: poly };
    Ok((WeightFunction::Tabulated(w), factor))
}

/// Equivalent kernels of the weightings `1 - y`, `1 + y` and `1 - y²` on a
/// window whose points are symmetric about `t`. For even `p - q` they agree.
pub fn theorem5_check(data: &DataSet, window: &SupportWindow, order: KernelOrder) -> Result<[Vec<f64>; 3]> {
    if (order.p() - order.q()) % 2 == 1 {
        return Err(Error::invalid("p - q must be even"));
    }
    let x = &data.x()[window.first()..=window.last()];
    let t = window.t();
    let tol = 1e-12 * window.halfwidth().max(1.0);
    if (window.center() - t).abs() > tol || (0..x.len()).any(|i| ((x[i] - t) + (x[x.len() - 1 - i] - t)).abs() > tol) {
        return Err(Error::Asymmetric);
    }
    let run = |w: WeightFunction| equivalent_kernel(data, window, &w, order).map(|k| k.weights);
    Ok([run(WeightFunction::LinearLeft)?, run(WeightFunction::LinearRight)?, run(WeightFunction::BartlettPriestley)?])
}

/// Legendre coefficients `b_0, ..., b_degree` of the continuum equivalent
/// kernel `G(y) = W(y) Q(y)` on `[-1, 1]` for estimation at `y = z`,
/// normalized by `∫ G(y) (y - z)^m / m! dy = δ_mq` for `m < p`.
pub(crate) fn continuum_equivalent_coeffs(
    weight: &dyn Fn(f64) -> f64,
    z: f64,
    order: KernelOrder,
    degree: usize,
) -> Result<Vec<f64>> {
    let (nodes, omega) = gauss_legendre(degree + order.p() + 4);
    let w: Vec<f64> = nodes.iter().zip(&omega).map(|(&y, &o)| o * weight(y).max(0.0)).collect();
    let (k, _) = local_kernel(&nodes, &w, z, order)?;
    Ok((0..=degree)
        .map(|j| {
            let s: f64 = k.iter().zip(&nodes).map(|(ki, &y)| ki * crate::legendre::eval_unchecked(j, y)).sum();
            0.5 * (2 * j + 1) as f64 * s
        })
        .collect())
}

/// Linear weighting on `[-1, 1]` (in `y = x/h - 1`) whose equivalent kernel
/// is the asymptotically optimal boundary kernel of order `q` at offset `z`.
///
/// For `q = 0` this is `(1 - z²) + (z + sqrt(1 - 3z² + 3z⁴)) y`, with the
/// degenerate edge `z = -1` mapped to `1 - y`. For `q >= 1` the weighting
/// vanishes at the root of the kernel outside `(-1, 1)`.
pub fn asymptotic_linear_weighting(q: usize, z: f64) -> Result<WeightFunction> {
    if !(-1.0..=0.0).contains(&z) {
        return Err(Error::invalid("offset z must lie in [-1, 0]"));
    }
    if q == 0 {
        let intercept = 1.0 - z * z;
        let slope = z + libm::sqrt(1.0 - 3.0 * z * z + 3.0 * z * z * z * z);
        if intercept.abs() < 1e-12 && slope.abs() < 1e-12 {
            return Ok(WeightFunction::Linear { intercept: 1.0, slope: -1.0 });
        }
        return Ok(WeightFunction::Linear { intercept, slope });
    }
    weighting_from_root(q, z)
}

/// Root route: the linear weighting vanishes at the real root of `G`
/// outside `(-1, 1)`, scaled to a maximum of 1 on `[-1, 1]`.
pub(crate) fn weighting_from_root(q: usize, z: f64) -> Result<WeightFunction> {
    let kernel = crate::continuum::ContinuumKernel::asymptotic_optimal(q, z)?;
    let g = |y: f64| kernel.eval(y);
    let scale = (0..=20).map(|i| g(-1.0 + 0.1 * i as f64).abs()).fold(0.0, f64::max);
    if kernel.tail()[0].abs() < 1e-13 {
        return Ok(WeightFunction::Linear { intercept: 1.0, slope: 0.0 });
    }
    let root = if g(1.0).abs() <= 1e-12 * scale {
        1.0
    } else if g(-1.0).abs() <= 1e-12 * scale {
        -1.0
    } else {
        outer_root(&g, 1.0).or_else(|| outer_root(&g, -1.0)).ok_or(Error::NoRoot { lo: -1e8, hi: 1e8 })?
    };
    Ok(if root >= 1.0 {
        let d = root + 1.0;
        WeightFunction::Linear { intercept: root / d, slope: -1.0 / d }
    } else {
        let d = 1.0 - root;
        WeightFunction::Linear { intercept: -root / d, slope: 1.0 / d }
    })
}

/// Sign change of `g` on the ray from `start` away from zero, refined by bisection.
fn outer_root(g: &dyn Fn(f64) -> f64, start: f64) -> Option<f64> {
    let dir = start.signum();
    let (mut a, mut ga) = (start, g(start));
    let mut step = 1e-3;
    while step < 1e8 {
        let b = start + dir * step;
        let gb = g(b);
        if ga * gb <= 0.0 {
            let (mut lo, mut hi, mut glo) = (a, b, ga);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if glo * gm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    glo = gm;
                }
                if (hi - lo).abs() < 1e-15 * hi.abs().max(1.0) {
                    break;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        a = b;
        ga = gb;
        step *= 1.25;
    }
    None
}

/// Boundary-interior blend
/// `f(t) = f_b(t) - (t/t0) (f_b(t0) - f_i(t0))`, continuous at `t0` and exact
/// at `t = 0`.
pub fn blend_boundary_interior(
    boundary_at_t: f64,
    boundary_at_t0: f64,
    interior_at_t0: f64,
    t: f64,
    t0: f64,
) -> Result<f64> {
    if t0 == 0.0 || !t0.is_finite() {
        return Err(Error::Singular { what: "touch point at zero" });
    }
    Ok(boundary_at_t - (t / t0) * (boundary_at_t0 - interior_at_t0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum::ContinuumKernel;

    fn data_from(x: Vec<f64>, f: impl Fn(f64) -> f64) -> DataSet {
        let y = x.iter().map(|&v| f(v)).collect();
        DataSet::new(x, y).unwrap()
    }

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn polynomial_reproduction() {
        let x: Vec<f64> = (0..25).map(|i| libm::pow(i as f64 / 24.0, 1.3)).collect();
        let d = data_from(x.clone(), |_| 2.5);
        let w = SupportWindow::from_interval(&d, 0.1, 0.7, 0.3).unwrap();
        let fit = lpr_fit(&d, &w, &WeightFunction::BartlettPriestley, KernelOrder::new(0, 2).unwrap()).unwrap();
        assert!((fit.estimate() - 2.5).abs() < 1e-12);

        let d = data_from(x, |v| v * v);
        let fit = lpr_fit(&d, &w, &WeightFunction::LinearLeft, KernelOrder::new(2, 3).unwrap()).unwrap();
        assert!((fit.estimate() - 2.0).abs() < 1e-9);
        let big = fit.moments().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(fit.normal_residual() < 1e-9 * big);
    }

    #[test]
    fn bias_of_next_monomial() {
        // y = x^2 with a local linear fit: bias equals B_2 f'' h^2.
        let d = data_from(grid(2001, 0.0, 1.0), |v| v * v);
        let w = SupportWindow::from_interval(&d, 0.3, 0.7, 0.5).unwrap();
        let ord = KernelOrder::new(0, 2).unwrap();
        let fit = lpr_fit(&d, &w, &WeightFunction::BartlettPriestley, ord).unwrap();
        let ek = equivalent_kernel(&d, &w, &WeightFunction::BartlettPriestley, ord).unwrap();
        let h = 0.2;
        let b2: f64 =
            ek.weights().iter().zip(&d.x()[ek.first()..]).map(|(k, x)| k * libm::pow((x - 0.5) / h, 2.0) / 2.0).sum();
        assert!((fit.estimate() - 0.25 - b2 * 2.0 * h * h).abs() < 1e-12);
        assert!((b2 - 0.1).abs() < 1e-3);
    }

    #[test]
    fn equivalent_kernel_matches_fit() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 / 29.0 + 0.01 * libm::sin(i as f64)).collect();
        let d = data_from(x, |v| libm::exp(v) * libm::cos(3.0 * v));
        let w = SupportWindow::from_interval(&d, 0.0, 0.5, 0.1).unwrap();
        for (q, p) in [(0, 2), (1, 3), (0, 3), (2, 4)] {
            let ord = KernelOrder::new(q, p).unwrap();
            let weights = WeightFunction::Linear { intercept: 1.0, slope: -0.5 };
            let ek = equivalent_kernel(&d, &w, &weights, ord).unwrap();
            let fit = lpr_fit(&d, &w, &weights, ord).unwrap();
            assert!((ek.estimate(d.y()) - fit.estimate()).abs() < 1e-8 * fit.estimate().abs().max(1.0));
            for (i, &k) in ek.weights().iter().enumerate() {
                let x = d.x()[ek.first() + i];
                assert!((k - ek.weight_values()[i] * ek.factor().eval(x)).abs() < 1e-9 * (1.0 + k.abs()));
            }
            for m in 0..p {
                let s: f64 = ek
                    .weights()
                    .iter()
                    .zip(&d.x()[ek.first()..])
                    .map(|(k, x)| k * libm::pow(x - 0.1, m as f64) / factorial(m))
                    .sum();
                assert!((s - if m == q { 1.0 } else { 0.0 }).abs() < 1e-8, "q={q} p={p} m={m} {s}");
            }
        }
    }

    #[test]
    fn bp_weights_vanish_at_ends() {
        let d = data_from(grid(21, 0.0, 1.0), |v| v);
        let w = SupportWindow::from_indices(&d, 5, 15, 0.5).unwrap();
        let ek =
            equivalent_kernel(&d, &w, &WeightFunction::BartlettPriestley, KernelOrder::new(0, 2).unwrap()).unwrap();
        assert_eq!(ek.weights()[0], 0.0);
        assert_eq!(ek.weights()[10], 0.0);
        // Symmetric equispaced window: proportional to 1 - y^2.
        let r = ek.weights()[5] / 1.0;
        for (i, k) in ek.weights().iter().enumerate() {
            let y = (i as f64 - 5.0) / 5.0;
            assert!((k - r * (1.0 - y * y)).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_error_names_order() {
        let d = data_from(grid(5, 0.0, 1.0), |v| v);
        let w = SupportWindow::from_indices(&d, 0, 2, 0.0).unwrap();
        let r = equivalent_kernel(&d, &w, &WeightFunction::BartlettPriestley, KernelOrder::new(0, 2).unwrap());
        assert!(matches!(r, Err(Error::RankDeficient { order: 1, points: 1 })));
    }

    #[test]
    fn sign_change_examples() {
        assert_eq!(sign_changes(&[1.0, 2.0, 0.5]), 0);
        assert_eq!(sign_changes(&[1.0, 0.0, -1.0]), 1);
        assert_eq!(sign_changes(&[1.0, -1.0, 1.0, -1.0]), 3);
        assert_eq!(sign_changes(&[0.0, 0.0]), 0);
    }

    #[test]
    fn sign_free_kernel_round_trip() {
        let d = data_from(grid(15, 0.0, 1.0), |v| v);
        let w = SupportWindow::from_indices(&d, 0, 14, 0.5).unwrap();
        let ord = KernelOrder::new(0, 2).unwrap();
        let ek = equivalent_kernel(&d, &w, &WeightFunction::BartlettPriestley, ord).unwrap();
        let (wf, factor) = kernel_to_lpr(ek.weights(), &d, &w, 2).unwrap();
        assert_eq!(factor.coeffs(), &[1.0]);
        let back = equivalent_kernel(&d, &w, &wf, ord).unwrap();
        for (a, b) in back.weights().iter().zip(ek.weights()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn asymptotic_kernel_round_trip() {
        // 101 points on [0, 1] = [0, 2h] with h = 1/2; z = -0.6 puts t at 0.2.
        let d = data_from(grid(101, 0.0, 1.0), |v| v);
        let w = SupportWindow::from_indices(&d, 0, 100, 0.2).unwrap();
        for q in 0..3 {
            let ord = KernelOrder::new(q, q + 2).unwrap();
            let lin = asymptotic_linear_weighting(q, -0.6).unwrap();
            let k = equivalent_kernel(&d, &w, &lin, ord).unwrap().weights().to_vec();
            // Close to the continuum shape; the gap at N = 101 grows with q.
            let g = ContinuumKernel::asymptotic_optimal(q, -0.6).unwrap();
            let norm = 101.0 * libm::pow(0.5, (q + 1) as f64);
            let big = (0..=100).map(|i| g.eval(-1.0 + 0.02 * i as f64).abs()).fold(0.0, f64::max);
            for (i, ki) in k.iter().enumerate() {
                assert!((ki * norm - g.eval(d.x()[i] * 2.0 - 1.0)).abs() < 0.1 * big);
            }

            let (wf, _) = kernel_to_lpr(&k, &d, &w, q + 2).unwrap();
            let back = equivalent_kernel(&d, &w, &wf, ord).unwrap();
            let kmax = k.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let sup = back.weights().iter().zip(&k).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(sup < 1e-9 * kmax, "q={q} sup={sup}");
        }
    }

    #[test]
    fn too_many_sign_changes() {
        let d = data_from(grid(9, 0.0, 1.0), |v| v);
        let w = SupportWindow::from_indices(&d, 0, 8, 0.5).unwrap();
        let k = [1.0, -1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        assert_eq!(kernel_to_lpr(&k, &d, &w, 2), Err(Error::TooManySignChanges { found: 2, allowed: 1 }));
    }

    #[test]
    fn symmetric_weightings_agree_on_symmetric_windows() {
        let d = data_from(grid(11, 0.0, 1.0), |v| v);
        let w = SupportWindow::from_indices(&d, 0, 10, 0.5).unwrap();
        for (q, p) in [(0, 2), (1, 3)] {
            let [a, b, c] = theorem5_check(&d, &w, KernelOrder::new(q, p).unwrap()).unwrap();
            for i in 0..a.len() {
                assert!((a[i] - c[i]).abs() < 1e-10 && (b[i] - c[i]).abs() < 1e-10);
            }
        }
        assert_eq!(theorem5_check(&d, &w, KernelOrder::new(0, 1).unwrap()), Err(Error::invalid("p - q must be even")));
    }

    #[test]
    fn asymmetric_windows_are_rejected() {
        let mut x = grid(11, 0.0, 1.0);
        x[3] += 0.001;
        let d = data_from(x, |v| v);
        let w = SupportWindow::from_indices(&d, 0, 10, 0.5).unwrap();
        assert_eq!(theorem5_check(&d, &w, KernelOrder::new(0, 2).unwrap()), Err(Error::Asymmetric));
        let ord = KernelOrder::new(0, 2).unwrap();
        let a = equivalent_kernel(&d, &w, &WeightFunction::LinearLeft, ord).unwrap();
        let c = equivalent_kernel(&d, &w, &WeightFunction::BartlettPriestley, ord).unwrap();
        let diff = a.weights().iter().zip(c.weights()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        assert!(diff > 1e-6);
    }

    #[test]
    fn q0_weighting_examples() {
        match asymptotic_linear_weighting(0, -0.5).unwrap() {
            WeightFunction::Linear { intercept, slope } => {
                assert!((intercept - 0.75).abs() < 1e-15);
                assert!((slope - 0.161_437_5).abs() < 1e-6);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            asymptotic_linear_weighting(0, -1.0).unwrap(),
            WeightFunction::Linear { intercept: 1.0, slope: -1.0 }
        );
        assert_eq!(asymptotic_linear_weighting(0, 0.0).unwrap(), WeightFunction::Linear { intercept: 1.0, slope: 1.0 });
    }

    fn linear_parts(w: &WeightFunction) -> (f64, f64) {
        match *w {
            WeightFunction::Linear { intercept, slope } => (intercept, slope),
            _ => unreachable!(),
        }
    }

    #[test]
    fn q0_formula_matches_root_route() {
        for i in 1..20 {
            let z = -(i as f64) / 20.0;
            if (z + 1.0 / libm::sqrt(3.0)).abs() < 0.02 {
                continue;
            }
            let (a, b) = linear_parts(&asymptotic_linear_weighting(0, z).unwrap());
            let (c, d) = linear_parts(&weighting_from_root(0, z).unwrap());
            // Same line up to a positive factor.
            assert!((a * d - b * c).abs() < 1e-9, "z={z}");
            assert!(a * c > 0.0);
        }
    }

    #[test]
    fn linear_weightings_reproduce_asymptotic_kernels() {
        for q in 0..4 {
            let ord = KernelOrder::new(q, q + 2).unwrap();
            for &z in &[-1.0, -0.8, -0.5, -0.3, -0.1, 0.0] {
                let w = asymptotic_linear_weighting(q, z).unwrap();
                let (a, b) = linear_parts(&w);
                assert!(a - b.abs() >= -1e-12, "negative weighting q={q} z={z}");
                let coeffs = continuum_equivalent_coeffs(&|y| a + b * y, z, ord, q + 3).unwrap();
                let g = ContinuumKernel::asymptotic_optimal(q, z).unwrap();
                let expect = g.coeffs();
                for j in 0..=q + 3 {
                    let e = expect.get(j).copied().unwrap_or(0.0);
                    assert!((coeffs[j] - e).abs() < 1e-8 * crate::legendre::gamma_q_f64(q), "q={q} z={z} j={j}");
                }
            }
        }
    }

    #[test]
    fn blending() {
        assert_eq!(blend_boundary_interior(1.5, 2.0, 1.0, 0.0, 0.3).unwrap(), 1.5);
        assert!((blend_boundary_interior(2.0, 2.0, 1.0, 0.3, 0.3).unwrap() - 1.0).abs() < 1e-15);
        assert!(blend_boundary_interior(2.0, 2.0, 1.0, 0.3, 0.0).is_err());
    }
}
