//! MSE-optimal kernels for an arbitrary placement of data points.
//!
//! The kernel on a support window is expanded in polynomials that are
//! orthogonal over the data points of the window,
//!
//! ```text
//! K(t, x) = 1 / (N h^{q+1}) * sum_k b_k P_k((x - x̄) / h)
//! ```
//!
//! The moment conditions fix `b_q, ..., b_{p-1}` through an upper-triangular
//! system, and `b_p` is the minimizer of the leading-order risk.
//!
//! Normalization: Gram products and the moment matrix both carry the factor
//! `1 / (N h)`, where `N` is the sampling density (points per unit length,
//! the point count for data on `[0, 1]`). The basis polynomials carry the
//! leading coefficients of the Legendre polynomials, so for dense equispaced
//! data every quantity tends to its Legendre counterpart.

use alloc::vec::Vec;

use crate::math::{factorial, horner, powi, sqrt};
use crate::{Error, Result};

/// Kernel type `(q, p)`: estimates the `q`-th derivative with bias `O(h^{p-q})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KernelOrder {
    q: usize,
    p: usize,
}

impl KernelOrder {
    /// Requires `q < p <= 32`.
    pub fn new(q: usize, p: usize) -> Result<Self> {
        if q >= p {
            return Err(Error::invalid("kernel order needs q < p"));
        }
        if p > 32 {
            return Err(Error::OrderTooLarge { order: p, max: 32 });
        }
        Ok(Self { q, p })
    }

    /// Derivative order.
    pub fn q(&self) -> usize {
        self.q
    }

    /// Bias order.
    pub fn p(&self) -> usize {
        self.p
    }
}

/// Sorted abscissae with their responses.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl DataSet {
    /// Requires equal lengths, at least one point, finite values and strictly
    /// increasing `x`.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::invalid("x and y lengths differ"));
        }
        if x.is_empty() {
            return Err(Error::invalid("empty data set"));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite value in data"));
        }
        for (i, w) in x.windows(2).enumerate() {
            if w[1] == w[0] {
                return Err(Error::DuplicateAbscissa { index: i + 1, value: w[1] });
            }
            if w[1] < w[0] {
                return Err(Error::invalid("abscissae must be strictly increasing"));
            }
        }
        Ok(Self { x, y })
    }

    /// Sorts the pairs by abscissa first; duplicates are still rejected.
    pub fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.iter().any(|(x, _)| x.is_nan()) {
            return Err(Error::invalid("non-finite value in data"));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (x, y) = pairs.into_iter().unzip();
        Self::new(x, y)
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.x.len()
    }

    /// Always false; a data set holds at least one point.
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Abscissae.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Responses.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Same abscissae with different responses.
    pub fn with_responses(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.x.len() {
            return Err(Error::invalid("response vector has the wrong length"));
        }
        Ok(Self { x: self.x.clone(), y })
    }

    /// Mirror image `x -> x_first + x_last - x`, responses carried along.
    pub fn reflected(&self) -> Self {
        let (lo, hi) = (self.x[0], self.x[self.x.len() - 1]);
        let x = self.x.iter().rev().map(|v| lo + hi - v).collect();
        let y = self.y.iter().rev().copied().collect();
        Self { x, y }
    }

    /// Affine image on `[0, 1]`, with the original offset and length.
    pub fn normalized(&self) -> Result<(Self, f64, f64)> {
        let lo = self.x[0];
        let len = self.x[self.x.len() - 1] - lo;
        if !(len > 0.0) {
            return Err(Error::RankDeficient { order: 1, points: 1 });
        }
        let x = self.x.iter().map(|v| (v - lo) / len).collect();
        Ok((Self { x, y: self.y.clone() }, lo, len))
    }

    /// Index range of points inside `[lo, hi]`, with a relative slack of
    /// `1e-9` on both ends.
    pub fn index_range(&self, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let tol = 1e-9 * (hi - lo).abs().max(1e-300);
        let first = self.x.partition_point(|&v| v < lo - tol);
        let end = self.x.partition_point(|&v| v <= hi + tol);
        if first < end {
            Some((first, end - 1))
        } else {
            None
        }
    }
}

/// Support of one kernel instance: an index range of the data plus the
/// estimation point and the affine map `u = (x - center) / halfwidth`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportWindow {
    first: usize,
    last: usize,
    t: f64,
    center: f64,
    halfwidth: f64,
    density: f64,
}

impl SupportWindow {
    /// Window spanning data points `first..=last`, with `x̄ = (x_L + x_R) / 2`
    /// and `h = (x_R - x_L) / 2`.
    pub fn from_indices(data: &DataSet, first: usize, last: usize, t: f64) -> Result<Self> {
        if first > last || last >= data.len() {
            return Err(Error::invalid("window indices out of range"));
        }
        let (xl, xr) = (data.x[first], data.x[last]);
        let halfwidth = 0.5 * (xr - xl);
        if !(halfwidth > 0.0) {
            return Err(Error::RankDeficient { order: 1, points: last - first + 1 });
        }
        if !t.is_finite() {
            return Err(Error::invalid("estimation point must be finite"));
        }
        Ok(Self { first, last, t, center: 0.5 * (xl + xr), halfwidth, density: data.len() as f64 })
    }

    /// Window over the points in `[lo, hi]`, with `x̄ = (lo + hi) / 2` and
    /// `h = (hi - lo) / 2` taken from the interval rather than the points.
    pub fn from_interval(data: &DataSet, lo: f64, hi: f64, t: f64) -> Result<Self> {
        if !(hi > lo) || !t.is_finite() {
            return Err(Error::invalid("support interval must satisfy lo < hi"));
        }
        let (first, last) = data.index_range(lo, hi).ok_or(Error::RankDeficient { order: 0, points: 0 })?;
        Ok(Self { first, last, t, center: 0.5 * (lo + hi), halfwidth: 0.5 * (hi - lo), density: data.len() as f64 })
    }

    /// Overrides the sampling density `N` used in the `1 / (N h)` factors.
    pub fn with_density(mut self, density: f64) -> Self {
        self.density = density;
        self
    }

    /// Index of the first point.
    pub fn first(&self) -> usize {
        self.first
    }

    /// Index of the last point (inclusive).
    pub fn last(&self) -> usize {
        self.last
    }

    /// Number of points `N_T`.
    pub fn n_points(&self) -> usize {
        self.last - self.first + 1
    }

    /// Estimation point.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Same support, different estimation point.
    pub fn at(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// Center `x̄`.
    pub fn center(&self) -> f64 {
        self.center
    }

    /// Halfwidth `h`.
    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    /// `h_L = t - x_L`.
    pub fn h_left(&self) -> f64 {
        self.t - (self.center - self.halfwidth)
    }

    /// `h_R = x_R - t`.
    pub fn h_right(&self) -> f64 {
        self.center + self.halfwidth - self.t
    }

    /// Sampling density `N`.
    pub fn density(&self) -> f64 {
        self.density
    }

    /// Normalized offset `z = (t - x̄) / h`, equal to `-1` at the left end.
    pub fn offset(&self) -> f64 {
        (self.t - self.center) / self.halfwidth
    }
}

/// Polynomials orthogonal with respect to `sum_i w_i P_j(u_i) P_k(u_i)`.
#[derive(Debug, Clone)]
pub(crate) struct WeightedPolys {
    /// `values[k][i] = P_k(u_i)`.
    pub values: Vec<Vec<f64>>,
    /// Monomial coefficients in `u`, lowest power first.
    pub coeffs: Vec<Vec<f64>>,
    /// `sum_i w_i P_k(u_i)^2`.
    pub norms: Vec<f64>,
}

/// Stieltjes three-term recurrence for monic polynomials, with a
/// reorthogonalization pass whenever the Gram residual against a lower
/// polynomial exceeds `1e-12`. Rescaled to Legendre leading coefficients when
/// `legendre_scale` is set.
pub(crate) fn stieltjes(
    nodes: &[f64],
    weights: &[f64],
    max_order: usize,
    legendre_scale: bool,
) -> Result<WeightedPolys> {
    debug_assert_eq!(nodes.len(), weights.len());
    let positive = weights.iter().filter(|&&w| w > 0.0).count();
    if positive < max_order + 1 {
        return Err(Error::RankDeficient { order: max_order, points: positive });
    }
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(weights).map(|((x, y), w)| w * x * y).sum() };

    let mut values: Vec<Vec<f64>> = alloc::vec![alloc::vec![1.0; nodes.len()]];
    let mut coeffs: Vec<Vec<f64>> = alloc::vec![alloc::vec![1.0]];
    let mut norms = alloc::vec![weights.iter().sum::<f64>()];

    for k in 0..max_order {
        let pk = &values[k];
        let alpha = pk.iter().zip(nodes).zip(weights).map(|((p, u), w)| w * u * p * p).sum::<f64>() / norms[k];
        let beta = if k > 0 { norms[k] / norms[k - 1] } else { 0.0 };

        let mut next: Vec<f64> = (0..nodes.len())
            .map(|i| {
                let prev = if k > 0 { values[k - 1][i] } else { 0.0 };
                (nodes[i] - alpha) * pk[i] - beta * prev
            })
            .collect();
        let mut next_c = alloc::vec![0.0; k + 2];
        for (d, &c) in coeffs[k].iter().enumerate() {
            next_c[d + 1] += c;
            next_c[d] -= alpha * c;
        }
        if k > 0 {
            for (d, &c) in coeffs[k - 1].iter().enumerate() {
                next_c[d] -= beta * c;
            }
        }

        for _pass in 0..2 {
            let nn = dot(&next, &next);
            let mut touched = false;
            for j in 0..=k {
                let c = dot(&next, &values[j]) / norms[j];
                if c.abs() * sqrt(norms[j]) > 1e-12 * sqrt(nn) {
                    touched = true;
                    for (v, pj) in next.iter_mut().zip(&values[j]) {
                        *v -= c * pj;
                    }
                    for (d, &cj) in coeffs[j].iter().enumerate() {
                        next_c[d] -= c * cj;
                    }
                }
            }
            if !touched {
                break;
            }
        }

        let norm = dot(&next, &next);
        if !(norm > 1e-280) || !norm.is_finite() {
            return Err(Error::RankDeficient { order: k + 1, points: positive });
        }
        values.push(next);
        coeffs.push(next_c);
        norms.push(norm);
    }

    if legendre_scale {
        let mut lc = 1.0;
        for k in 1..=max_order {
            lc *= (2 * k - 1) as f64 / k as f64;
            for v in values[k].iter_mut() {
                *v *= lc;
            }
            for c in coeffs[k].iter_mut() {
                *c *= lc;
            }
            norms[k] *= lc * lc;
        }
    }
    Ok(WeightedPolys { values, coeffs, norms })
}

/// Discrete orthogonal polynomials on the points of a support window,
/// `(1 / (N h)) sum_i P_k(u_i) P_j(u_i) = g_k δ_kj` with `u_i = (x_i - x̄) / h`.
#[derive(Debug, Clone)]
pub struct OrthoBasis {
    window: SupportWindow,
    scale: f64,
    nodes: Vec<f64>,
    polys: WeightedPolys,
}

/// Builds the orthogonal family `P_0, ..., P_max_order` for a window.
///
/// Fails with [`Error::RankDeficient`] when the window has `max_order` or
/// fewer points.
pub fn build_ortho_basis(window: &SupportWindow, data: &DataSet, max_order: usize) -> Result<OrthoBasis> {
    let n_t = window.n_points();
    if n_t < max_order + 1 {
        return Err(Error::RankDeficient { order: max_order, points: n_t });
    }
    let scale = 1.0 / (window.density * window.halfwidth);
    let nodes: Vec<f64> =
        data.x[window.first..=window.last].iter().map(|x| (x - window.center) / window.halfwidth).collect();
    let weights = alloc::vec![scale; nodes.len()];
    let polys = stieltjes(&nodes, &weights, max_order, true)?;
    Ok(OrthoBasis { window: *window, scale, nodes, polys })
}

impl OrthoBasis {
    /// Highest polynomial order in the family.
    pub fn order(&self) -> usize {
        self.polys.norms.len() - 1
    }

    /// The window the basis lives on.
    pub fn window(&self) -> &SupportWindow {
        &self.window
    }

    /// `1 / (N h)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Normalized abscissae `u_i`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Norm `g_k`.
    pub fn norm(&self, k: usize) -> f64 {
        self.polys.norms[k]
    }

    /// All norms `g_0, ..., g_order`.
    pub fn norms(&self) -> &[f64] {
        &self.polys.norms
    }

    /// Monomial coefficients of `P_k` in `u`, lowest power first.
    pub fn coeffs(&self, k: usize) -> &[f64] {
        &self.polys.coeffs[k]
    }

    /// `P_k(u_i)` for every point of the window.
    pub fn values(&self, k: usize) -> &[f64] {
        &self.polys.values[k]
    }

    /// `P_k(u)` at an arbitrary normalized position.
    pub fn eval(&self, k: usize, u: f64) -> f64 {
        horner(&self.polys.coeffs[k], u)
    }
}

/// Upper-triangular moment matrix
/// `C_kj = (1/(N h)) sum_i P_k(u_i) ((x_i - t)/h)^j / j!`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl MomentMatrix {
    pub(crate) fn from_entries(order: usize, entries: Vec<f64>) -> Result<Self> {
        let m = Self { order, entries };
        for j in 0..=order {
            let d = m.get(j, j);
            if !(d.abs() > 1e-300) || !d.is_finite() {
                return Err(Error::Singular { what: "moment matrix diagonal" });
            }
        }
        Ok(m)
    }

    /// Largest index.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Entry `C_kj`; exactly zero for `k > j`.
    pub fn get(&self, k: usize, j: usize) -> f64 {
        if k > j {
            0.0
        } else {
            self.entries[k * (self.order + 1) + j]
        }
    }
}

/// Direct summation of the moment matrix up to order `p` at estimation point `t`.
pub fn moment_matrix(basis: &OrthoBasis, t: f64, p: usize) -> Result<MomentMatrix> {
    if p > basis.order() {
        return Err(Error::OrderTooLarge { order: p, max: basis.order() });
    }
    let n = p + 1;
    let shift = (t - basis.window.center) / basis.window.halfwidth;
    let mut c = alloc::vec![0.0; n * n];
    let mut pw = alloc::vec![0.0; n];
    for (i, &u) in basis.nodes.iter().enumerate() {
        let d = u - shift;
        pw[0] = 1.0;
        for j in 1..n {
            pw[j] = pw[j - 1] * d / j as f64;
        }
        for k in 0..n {
            let pk = basis.polys.values[k][i];
            for j in k..n {
                c[k * n + j] += pk * pw[j];
            }
        }
    }
    for v in c.iter_mut() {
        *v *= basis.scale;
    }
    MomentMatrix::from_entries(p, c)
}

/// Back substitution for the coefficients fixed by the moment conditions:
/// `b_j = 0` for `j < q`, `b_q = 1 / C_qq`,
/// `b_j = -(1/C_jj) sum_{i=q}^{j-1} C_ij b_i` for `q < j < p`.
/// Returns `b_0, ..., b_{p-1}`.
pub fn solve_moment_coeffs(c: &MomentMatrix, order: KernelOrder) -> Result<Vec<f64>> {
    let (q, p) = (order.q, order.p);
    if c.order() + 1 < p {
        return Err(Error::OrderTooLarge { order: p - 1, max: c.order() });
    }
    let mut b = alloc::vec![0.0; p];
    for j in q..p {
        let diag = c.get(j, j);
        if diag == 0.0 || !diag.is_finite() {
            return Err(Error::Singular { what: "moment matrix diagonal" });
        }
        if j == q {
            b[j] = 1.0 / diag;
        } else {
            let s: f64 = (q..j).map(|i| c.get(i, j) * b[i]).sum();
            b[j] = -s / diag;
        }
    }
    Ok(b)
}

/// Risk-minimizing `b_p` for a given noise ratio
/// `ρ = σ² / (N h^{2p+1} (f^{(p)})²)`:
/// `b_p = -(sum_{k<p} C_kp b_k) / (C_pp + g_p ρ / C_pp)`.
///
/// `ρ = 0` gives the bias-annihilating value, `ρ = ∞` gives zero.
pub fn last_coefficient(c: &MomentMatrix, g_p: f64, b: &[f64], ratio: f64) -> f64 {
    let p = b.len();
    if ratio.is_infinite() {
        return 0.0;
    }
    let s: f64 = b.iter().enumerate().map(|(k, bk)| c.get(k, p) * bk).sum();
    let cpp = c.get(p, p);
    -s / (cpp + g_p * ratio / cpp)
}

/// Noise ratio `σ² / (N h^{2p+1} (f^{(p)})²)` that enters [`last_coefficient`].
pub fn noise_ratio(noise_var: f64, n: f64, h: f64, p: usize, curvature: f64) -> Result<f64> {
    if curvature == 0.0 || !curvature.is_finite() {
        return Err(Error::DegenerateCurvature);
    }
    if !(h > 0.0) || !(n > 0.0) || !(noise_var >= 0.0) {
        return Err(Error::invalid("noise ratio needs h > 0, N > 0 and σ² >= 0"));
    }
    Ok(noise_var / (n * powi(h, 2 * p + 1) * curvature * curvature))
}

/// Risk-minimizing last coefficient `b_p` for noise variance `σ²`, density `N`,
/// halfwidth `h` and `p`-th derivative `f_p`. All `b_k` with `k > p` are zero
/// at the optimum.
pub fn optimal_bp(
    c: &MomentMatrix,
    g_p: f64,
    b: &[f64],
    noise_var: f64,
    n: f64,
    h: f64,
    curvature: f64,
) -> Result<f64> {
    let ratio = noise_ratio(noise_var, n, h, b.len(), curvature)?;
    Ok(last_coefficient(c, g_p, b, ratio))
}

/// How the coefficients beyond the moment conditions are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LastCoefficient {
    /// Minimize the leading-order risk for the given noise variance and
    /// `p`-th derivative.
    Optimal {
        /// Noise variance `σ²`.
        noise_var: f64,
        /// `f^{(p)}(t)`.
        curvature: f64,
    },
    /// Minimize the leading-order risk for a given `σ² / (N h^{2p+1} f_p²)`.
    NoiseRatio(f64),
    /// Polynomial of order `p` vanishing at the right end of the support.
    VanishRight,
    /// Polynomial of order `p + 1` vanishing at both ends of the support.
    VanishBoth,
}

impl LastCoefficient {
    /// Highest basis order this rule needs for a type-`(q, p)` kernel.
    pub fn basis_order(&self, p: usize) -> usize {
        match self {
            LastCoefficient::VanishBoth => p + 1,
            _ => p,
        }
    }
}

/// Appends the free coefficients to `b_0..b_{p-1}` according to `rule`.
/// `ends` holds `P_k(1)` and `P_k(-1)` for the boundary-constrained rules.
pub(crate) fn complete_coefficients(
    rule: &LastCoefficient,
    c: &MomentMatrix,
    norms: &[f64],
    ends: (&[f64], &[f64]),
    mut b: Vec<f64>,
    n: f64,
    h: f64,
) -> Result<Vec<f64>> {
    let p = b.len();
    let (right, left) = ends;
    match *rule {
        LastCoefficient::Optimal { noise_var, curvature } => {
            let bp = optimal_bp(c, norms[p], &b, noise_var, n, h, curvature)?;
            b.push(bp);
        }
        LastCoefficient::NoiseRatio(ratio) => {
            if !(ratio >= 0.0) {
                return Err(Error::invalid("noise ratio must be non-negative"));
            }
            let bp = last_coefficient(c, norms[p], &b, ratio);
            b.push(bp);
        }
        LastCoefficient::VanishRight => {
            let s: f64 = b.iter().zip(right).map(|(bk, pk)| bk * pk).sum();
            if right[p].abs() < 1e-300 {
                return Err(Error::Singular { what: "P_p at the right end" });
            }
            b.push(-s / right[p]);
        }
        LastCoefficient::VanishBoth => {
            let sr: f64 = b.iter().zip(right).map(|(bk, pk)| bk * pk).sum();
            let sl: f64 = b.iter().zip(left).map(|(bk, pk)| bk * pk).sum();
            let (a11, a12, a21, a22) = (right[p], right[p + 1], left[p], left[p + 1]);
            let det = a11 * a22 - a12 * a21;
            if det.abs() < 1e-300 {
                return Err(Error::Singular { what: "end-point constraint system" });
            }
            b.push((-sr * a22 + sl * a12) / det);
            b.push((-sl * a11 + sr * a21) / det);
        }
    }
    Ok(b)
}

/// A kernel of type `(q, p)` evaluated at the points of its window.
#[derive(Debug, Clone)]
pub struct DiscreteKernel {
    order: KernelOrder,
    window: SupportWindow,
    coeffs: Vec<f64>,
    weights: Vec<f64>,
    bias_constant: f64,
    variance_constant: f64,
}

/// Evaluates `K(t, x_i) = 1/(N h^{q+1}) sum_k b_k P_k(u_i)` over the window and
/// computes `B_p` and `m_2(μ)` from the weights.
pub fn assemble_kernel(basis: &OrthoBasis, order: KernelOrder, b: &[f64], t: f64) -> Result<DiscreteKernel> {
    if b.len() > basis.order() + 1 {
        return Err(Error::OrderTooLarge { order: b.len() - 1, max: basis.order() });
    }
    let window = basis.window.at(t);
    let h = window.halfwidth;
    let shift = window.offset();
    let n_t = basis.nodes.len();
    let mut mu = alloc::vec![0.0; n_t];
    for (k, &bk) in b.iter().enumerate() {
        if bk != 0.0 {
            for (m, v) in mu.iter_mut().zip(&basis.polys.values[k]) {
                *m += bk * v;
            }
        }
    }
    let p = order.p;
    let inv_pf = 1.0 / factorial(p);
    let mut bias = 0.0;
    let mut m2 = 0.0;
    for (i, &m) in mu.iter().enumerate() {
        bias += powi(basis.nodes[i] - shift, p) * inv_pf * m;
        m2 += m * m;
    }
    let weight_scale = basis.scale / powi(h, order.q);
    let weights = mu.iter().map(|m| m * weight_scale).collect();
    Ok(DiscreteKernel {
        order,
        window,
        coeffs: b.to_vec(),
        weights,
        bias_constant: bias * basis.scale,
        variance_constant: m2 * basis.scale,
    })
}

/// Builds the kernel of type `order` on `window`: moment conditions via
/// [`solve_moment_coeffs`] and the remaining coefficients from `rule`.
///
/// Needs at least `p + 2` points in the window.
pub fn build_kernel(
    data: &DataSet,
    window: &SupportWindow,
    order: KernelOrder,
    rule: LastCoefficient,
) -> Result<DiscreteKernel> {
    let p = order.p;
    if window.n_points() < p + 2 {
        return Err(Error::RankDeficient { order: p + 1, points: window.n_points() });
    }
    let basis = build_ortho_basis(window, data, rule.basis_order(p))?;
    kernel_from_basis(&basis, order, rule, window.t)
}

pub(crate) fn kernel_from_basis(
    basis: &OrthoBasis,
    order: KernelOrder,
    rule: LastCoefficient,
    t: f64,
) -> Result<DiscreteKernel> {
    let p = order.p;
    let c = moment_matrix(basis, t, p)?;
    let b = solve_moment_coeffs(&c, order)?;
    let top = rule.basis_order(p);
    let right: Vec<f64> = (0..=top).map(|k| basis.eval(k, 1.0)).collect();
    let left: Vec<f64> = (0..=top).map(|k| basis.eval(k, -1.0)).collect();
    let h = basis.window.halfwidth;
    let b = complete_coefficients(&rule, &c, basis.norms(), (&right, &left), b, basis.window.density, h)?;
    assemble_kernel(basis, order, &b, t)
}

impl DiscreteKernel {
    /// Kernel type.
    pub fn order(&self) -> KernelOrder {
        self.order
    }

    /// Window, with `t` set to the estimation point.
    pub fn window(&self) -> &SupportWindow {
        &self.window
    }

    /// Expansion coefficients `b_0, b_1, ...` in the orthogonal basis.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `K(t, x_i)` for `i` in the window.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the first weight in the data set.
    pub fn first(&self) -> usize {
        self.window.first
    }

    /// Bias constant `B_p`.
    pub fn bias_constant(&self) -> f64 {
        self.bias_constant
    }

    /// Variance constant `m_2(μ) = (1/(N h)) sum μ_i²`.
    pub fn variance_constant(&self) -> f64 {
        self.variance_constant
    }

    /// `sum_i K(t, x_i) y_i` over the full response vector.
    pub fn estimate(&self, y: &[f64]) -> f64 {
        self.weights.iter().zip(&y[self.window.first..=self.window.last]).map(|(k, v)| k * v).sum()
    }

    /// Left-hand side of the `m`-th moment condition,
    /// `(1/(N h)) sum_i (1/m!) ((x_i - t)/h)^m μ_i` with `μ_i = N h^{q+1} K(t, x_i)`.
    pub fn moment(&self, data: &DataSet, m: usize) -> f64 {
        let w = &self.window;
        let h = w.halfwidth;
        let inv = 1.0 / factorial(m);
        let mu_scale = w.density * powi(h, self.order.q + 1);
        let s: f64 = self
            .weights
            .iter()
            .zip(&data.x[w.first..=w.last])
            .map(|(k, x)| powi((x - w.t) / h, m) * inv * k * mu_scale)
            .sum();
        s / (w.density * h)
    }

    /// Leading-order risk of this kernel.
    pub fn leading_risk(&self, noise_var: f64, curvature: f64) -> f64 {
        leading_risk(self, noise_var, curvature, self.window.density)
    }
}

/// Leading-order MSE
/// `R = B_p² f_p² h^{2(p-q)} + σ² m_2 / (N h^{2q+1})`.
pub fn leading_risk(kernel: &DiscreteKernel, noise_var: f64, curvature: f64, n: f64) -> f64 {
    let (q, p) = (kernel.order.q, kernel.order.p);
    let h = kernel.window.halfwidth;
    let bias = kernel.bias_constant * curvature * powi(h, p - q);
    bias * bias + noise_var * kernel.variance_constant / (n * powi(h, 2 * q + 1))
}

/// MSE-optimal halfwidth for fixed kernel constants,
/// `h_0 = ((2q+1)/(2(p-q)) σ² m_2 / (B_p² N f_p²))^{1/(2p+1)}`.
pub fn optimal_halfwidth(
    noise_var: f64,
    curvature: f64,
    n: f64,
    m2: f64,
    bias_constant: f64,
    order: KernelOrder,
) -> Result<f64> {
    let (q, p) = (order.q as f64, order.p as f64);
    if curvature == 0.0 || !curvature.is_finite() {
        return Err(Error::DegenerateCurvature);
    }
    if bias_constant == 0.0 || !(n >= 1.0) || !(noise_var >= 0.0) || !(m2 > 0.0) {
        return Err(Error::invalid("optimal halfwidth needs B_p != 0, N >= 1, σ² >= 0, m_2 > 0"));
    }
    let base = (2.0 * q + 1.0) / (2.0 * (p - q)) * noise_var * m2
        / (bias_constant * bias_constant * n * curvature * curvature);
    Ok(crate::math::powf(base, 1.0 / (2.0 * p + 1.0)))
}

/// Constant `K_{q,p}` of the risk at the optimal halfwidth.
pub fn risk_constant(order: KernelOrder) -> f64 {
    let (q, p) = (order.q as f64, order.p as f64);
    let a = (2.0 * q + 1.0) / (2.0 * (p - q));
    crate::math::powf(a, 2.0 * (p - q) / (2.0 * p + 1.0))
        + crate::math::powf(1.0 / a, (2.0 * q + 1.0) / (2.0 * p + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::{continuum_c, gamma_q_f64};

    fn equispaced(n: usize, lo: f64, hi: f64) -> DataSet {
        let x: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let y = alloc::vec![0.0; n];
        DataSet::new(x, y).unwrap()
    }

    #[test]
    fn rejects_bad_data() {
        assert!(matches!(
            DataSet::new(alloc::vec![0.0, 1.0, 1.0], alloc::vec![0.0; 3]),
            Err(Error::DuplicateAbscissa { index: 2, .. })
        ));
        assert!(DataSet::new(alloc::vec![], alloc::vec![]).is_err());
        assert!(DataSet::new(alloc::vec![1.0, 0.0], alloc::vec![0.0; 2]).is_err());
        let d = DataSet::from_pairs(alloc::vec![(1.0, 2.0), (0.0, 1.0)]).unwrap();
        assert_eq!(d.x(), &[0.0, 1.0]);
        assert_eq!(d.y(), &[1.0, 2.0]);
    }

    #[test]
    fn three_point_basis() {
        let d = DataSet::new(alloc::vec![-1.0, 0.0, 1.0], alloc::vec![0.0; 3]).unwrap();
        let w = SupportWindow::from_indices(&d, 0, 2, 0.0).unwrap();
        assert_eq!((w.center(), w.halfwidth()), (0.0, 1.0));
        let b = build_ortho_basis(&w, &d, 1).unwrap();
        assert!((b.norm(0) - 1.0).abs() < 1e-15);
        assert!((b.norm(1) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(b.coeffs(0), &[1.0]);
        assert!(b.coeffs(1)[0].abs() < 1e-15 && (b.coeffs(1)[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_points_give_parity() {
        let d = DataSet::new(alloc::vec![-1.0, -0.7, -0.1, 0.1, 0.7, 1.0], alloc::vec![0.0; 6]).unwrap();
        let w = SupportWindow::from_indices(&d, 0, 5, 0.0).unwrap();
        let b = build_ortho_basis(&w, &d, 4).unwrap();
        for k in 0..=4 {
            for (pow, c) in b.coeffs(k).iter().enumerate() {
                if (k + pow) % 2 == 1 {
                    assert!(c.abs() < 1e-13, "P_{k} has u^{pow} coefficient {c}");
                }
            }
        }
    }

    #[test]
    fn basis_is_orthogonal() {
        let x: Vec<f64> = (0..40).map(|i| libm::pow(i as f64 / 39.0, 1.7)).collect();
        let d = DataSet::new(x, alloc::vec![0.0; 40]).unwrap();
        let w = SupportWindow::from_indices(&d, 3, 35, 0.2).unwrap();
        let b = build_ortho_basis(&w, &d, 8).unwrap();
        for k in 0..=8 {
            for j in 0..=8 {
                let s: f64 = b.values(k).iter().zip(b.values(j)).map(|(a, c)| a * c).sum::<f64>() * b.scale();
                if k == j {
                    assert!((s - b.norm(k)).abs() < 1e-10 * b.norm(k));
                } else {
                    assert!(s.abs() < 1e-10 * (b.norm(k) * b.norm(j)).sqrt(), "{k} {j} {s}");
                }
            }
            assert!(b.coeffs(k)[k] != 0.0);
        }
    }

    #[test]
    fn dense_grid_norms_approach_legendre() {
        let d = equispaced(1001, -1.0, 1.0);
        let w = SupportWindow::from_indices(&d, 0, 1000, 0.0).unwrap().with_density(500.0);
        let b = build_ortho_basis(&w, &d, 6).unwrap();
        // The endpoint excess of the Riemann sum is (2k+1)/1000 relative, so
        // 1% holds up to k = 4.
        for k in 0..=4 {
            let expect = 2.0 / (2 * k + 1) as f64;
            assert!((b.norm(k) / expect - 1.0).abs() < 0.01, "g_{k} = {}", b.norm(k));
        }
    }

    #[test]
    fn rank_deficiency() {
        let d = equispaced(3, 0.0, 1.0);
        let w = SupportWindow::from_indices(&d, 0, 2, 0.5).unwrap();
        assert!(matches!(build_ortho_basis(&w, &d, 3), Err(Error::RankDeficient { .. })));
        assert!(matches!(
            build_kernel(&d, &w, KernelOrder::new(0, 2).unwrap(), LastCoefficient::NoiseRatio(0.1)),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn moment_matrix_structure() {
        let d = equispaced(11, -1.0, 1.0);
        let w = SupportWindow::from_indices(&d, 0, 10, 0.0).unwrap();
        let b = build_ortho_basis(&w, &d, 3).unwrap();
        let c = moment_matrix(&b, 0.0, 3).unwrap();
        assert_eq!(c.get(2, 1), 0.0);
        // P_0 = 1, j = 0: (1/(N h)) * N_T with N = 11, h = 1.
        assert!((c.get(0, 0) - 1.0).abs() < 1e-14);
        for j in 0..=3 {
            assert!(c.get(j, j) > 0.0);
        }
    }

    #[test]
    fn dense_moment_matrix_matches_continuum() {
        let d = equispaced(1001, -1.0, 1.0);
        let w = SupportWindow::from_indices(&d, 0, 1000, -0.4).unwrap().with_density(500.0);
        let b = build_ortho_basis(&w, &d, 4).unwrap();
        let c = moment_matrix(&b, -0.4, 4).unwrap();
        for k in 0..=4 {
            for j in k..=4 {
                let expect = continuum_c(-0.4, k, j);
                if expect.abs() > 1e-3 {
                    assert!((c.get(k, j) / expect - 1.0).abs() < 0.01, "C_{k}{j}");
                }
            }
        }
    }

    #[test]
    fn moment_coeffs_examples() {
        let d = equispaced(2001, -1.0, 1.0);
        let z = -0.6;
        let w = SupportWindow::from_indices(&d, 0, 2000, z).unwrap().with_density(1000.0);
        let basis = build_ortho_basis(&w, &d, 5).unwrap();
        let c = moment_matrix(&basis, z, 5).unwrap();
        let b = solve_moment_coeffs(&c, KernelOrder::new(2, 5).unwrap()).unwrap();
        assert_eq!(&b[..2], &[0.0, 0.0]);
        assert!((b[2] - 1.0 / c.get(2, 2)).abs() < 1e-15);
        let g = gamma_q_f64(2);
        assert!((b[2] / g - 1.0).abs() < 0.01);
        assert!((b[3] / ((2.0 * 2.0 + 3.0) * z * g) - 1.0).abs() < 0.01);

        let b0 = solve_moment_coeffs(&c, KernelOrder::new(0, 2).unwrap()).unwrap();
        assert!((b0[0] - 1.0 / c.get(0, 0)).abs() < 1e-15);
    }

    #[test]
    fn bp_limits() {
        let d = equispaced(41, 0.0, 1.0);
        let w = SupportWindow::from_interval(&d, 0.0, 0.5, 0.1).unwrap();
        let basis = build_ortho_basis(&w, &d, 2).unwrap();
        let c = moment_matrix(&basis, 0.1, 2).unwrap();
        let b = solve_moment_coeffs(&c, KernelOrder::new(0, 2).unwrap()).unwrap();
        let g = basis.norm(2);
        let free = -(c.get(0, 2) * b[0] + c.get(1, 2) * b[1]) / c.get(2, 2);
        let tiny = optimal_bp(&c, g, &b, 1e-30, 41.0, 0.25, 1.0).unwrap();
        assert!((tiny - free).abs() < 1e-12 * free.abs());
        let huge = optimal_bp(&c, g, &b, 1e30, 41.0, 0.25, 1.0).unwrap();
        assert!(huge.abs() < 1e-20);
        assert_eq!(optimal_bp(&c, g, &b, 1.0, 41.0, 0.25, 0.0), Err(Error::DegenerateCurvature));
    }

    #[test]
    fn continuum_bp_at_center() {
        // q = 0, p = 2, z = 0, β = 1: b_2 / γ_0 = -1.
        let c =
            MomentMatrix::from_entries(2, (0..3).flat_map(|k| (0..3).map(move |j| continuum_c(0.0, k, j))).collect())
                .unwrap();
        let b = solve_moment_coeffs(&c, KernelOrder::new(0, 2).unwrap()).unwrap();
        let ratio = 1.0 / (4.0 * 3.0 * 5.0 * 0.25);
        let bp = last_coefficient(&c, 2.0 / 5.0, &b, ratio);
        assert!((bp / gamma_q_f64(0) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_moment_conditions() {
        let d = equispaced(30, 0.0, 1.0);
        let w = SupportWindow::from_interval(&d, 0.0, 0.6, 0.1).unwrap();
        let ord = KernelOrder::new(0, 2).unwrap();
        let k = build_kernel(&d, &w, ord, LastCoefficient::NoiseRatio(0.05)).unwrap();
        assert!((k.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for m in 0..2 {
            assert!((k.moment(&d, m) - if m == 0 { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
        let ord = KernelOrder::new(1, 3).unwrap();
        let k = build_kernel(&d, &w, ord, LastCoefficient::NoiseRatio(0.05)).unwrap();
        let s0: f64 = k.weights().iter().sum();
        let s1: f64 = k.weights().iter().zip(&d.x()[k.first()..]).map(|(kk, x)| kk * (x - 0.1)).sum();
        assert!(s0.abs() < 1e-10 && (s1 - 1.0).abs() < 1e-10);
        assert!(k.bias_constant() != 0.0);
    }

    #[test]
    fn dense_kernel_approaches_epanechnikov() {
        let d = equispaced(1001, -1.0, 1.0);
        let w = SupportWindow::from_indices(&d, 0, 1000, 0.0).unwrap().with_density(500.0);
        let ord = KernelOrder::new(0, 2).unwrap();
        // Epanechnikov is the optimum at its own optimal halfwidth, where the
        // noise ratio equals 1/15. A vanishing ratio gives the bias-free kernel.
        let k = build_kernel(&d, &w, ord, LastCoefficient::NoiseRatio(1.0 / 15.0)).unwrap();
        let scale = 500.0; // N h^{q+1}
        let sup =
            k.weights().iter().zip(d.x()).map(|(kk, x)| (kk * scale - 0.75 * (1.0 - x * x)).abs()).fold(0.0, f64::max);
        assert!(sup < 0.01 * 0.75, "sup error {sup}");
    }

    #[test]
    fn vanishing_rules() {
        let d = equispaced(60, 0.0, 1.0);
        let w = SupportWindow::from_interval(&d, 0.0, 0.5, 0.12).unwrap();
        let ord = KernelOrder::new(0, 2).unwrap();
        let basis = build_ortho_basis(&w, &d, 3).unwrap();
        let k = kernel_from_basis(&basis, ord, LastCoefficient::VanishRight, 0.12).unwrap();
        let at = |u: f64| -> f64 { k.coeffs().iter().enumerate().map(|(j, b)| b * basis.eval(j, u)).sum() };
        assert!(at(1.0).abs() < 1e-12);
        let k = kernel_from_basis(&basis, ord, LastCoefficient::VanishBoth, 0.12).unwrap();
        let at = |u: f64| -> f64 { k.coeffs().iter().enumerate().map(|(j, b)| b * basis.eval(j, u)).sum() };
        assert!(at(1.0).abs() < 1e-12 && at(-1.0).abs() < 1e-12);
        assert!((k.moment(&d, 0) - 1.0).abs() < 1e-12 && k.moment(&d, 1).abs() < 1e-12);
    }

    #[test]
    fn halfwidth_and_risk() {
        let ord = KernelOrder::new(0, 2).unwrap();
        // Continuum constants of (3/4)(1 - y^2): m_2 = 3/5, B_2 = 1/10.
        let h = optimal_halfwidth(2.0, 3.0, 500.0, 0.6, 0.1, ord).unwrap();
        let expect = libm::pow(15.0 * 2.0 / (500.0 * 9.0), 0.2);
        assert!((h / expect - 1.0).abs() < 1e-14);
        let h2 = optimal_halfwidth(2.0, 3.0, 1000.0, 0.6, 0.1, ord).unwrap();
        assert!((h2 / h - libm::pow(2.0, -0.2)).abs() < 1e-14);
        assert!(optimal_halfwidth(2.0, 0.0, 500.0, 0.6, 0.1, ord).is_err());
        assert!((risk_constant(ord) - (libm::pow(0.25, 0.8) + libm::pow(4.0, 0.2))).abs() < 1e-15);
    }

    #[test]
    fn risk_split_at_optimal_halfwidth() {
        let d = equispaced(201, 0.0, 1.0);
        let ord = KernelOrder::new(0, 2).unwrap();
        let w = SupportWindow::from_indices(&d, 60, 140, 0.5).unwrap();
        let k = build_kernel(&d, &w, ord, LastCoefficient::NoiseRatio(0.05)).unwrap();
        let (s2, fp, n) = (0.3, 2.0, 201.0);
        let h0 = optimal_halfwidth(s2, fp, n, k.variance_constant(), k.bias_constant(), ord).unwrap();
        let bias2 = libm::pow(k.bias_constant() * fp * h0 * h0, 2.0);
        let var = s2 * k.variance_constant() / (n * h0);
        assert!((bias2 / var - 1.0 / 4.0).abs() < 1e-12);
        let pure_var = leading_risk(&k, 0.3, 0.0, n);
        assert!((pure_var - 0.3 * k.variance_constant() / (n * w.halfwidth())).abs() < 1e-15);
    }
}
