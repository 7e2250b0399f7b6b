//! Boundary kernels of type `(q, q+2)` in the continuum limit.
//!
//! On the support `[0, 2h]` with `y = x/h - 1` and the estimation point at
//! `y = z`, `z in [-1, 0]`, every kernel here has the form
//!
//! ```text
//! G(z, y) = γ_q (P_q(y) + (2q+3) z P_{q+1}(y) + b_{q+2} P_{q+2}(y) + b_{q+3} P_{q+3}(y))
//! ```
//!
//! The first two coefficients are fixed by the moment conditions, and the
//! kinds differ only in the tail `(b_{q+2}, b_{q+3})`. Tails are stored with
//! `γ_q` factored out, which is the convention of [`normalized_risk`].

use alloc::vec::Vec;

use crate::discrete::{optimal_halfwidth, solve_moment_coeffs, KernelOrder, MomentMatrix};
use crate::legendre::{continuum_c, eval_unchecked, gamma_q_f64};
use crate::lpr::continuum_equivalent_coeffs;
use crate::math::{powf, powi};
use crate::{Error, Result};

/// Which boundary kernel a [`ContinuumKernel`] is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContinuumKind {
    /// `γ_q (P_q - P_{q+2})`, the interior optimum.
    InteriorOptimal,
    /// Risk-optimal for a given normalized halfwidth `β`.
    BoundaryOptimal,
    /// The `β`-free kernel `b_{q+2} = (2q+3) z² - 1`.
    AsymptoticOptimal,
    /// The asymptotic kernel at the data edge, `z = -1`.
    EdgeOptimal,
    /// Order `q+3`, vanishing at both ends of the support.
    Mueller,
    /// Equivalent kernel of Bartlett-Priestley weighting centered at `t`.
    BartlettPriestley,
    /// Order `q+2`, vanishing at the right end of the support.
    VanishRight,
}

/// A continuum kernel at a fixed offset `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuumKernel {
    kind: ContinuumKind,
    q: usize,
    z: f64,
    tail: [f64; 2],
}

fn check_z(z: f64) -> Result<f64> {
    if !(-1.0 - 1e-12..=1e-12).contains(&z) {
        return Err(Error::invalid("offset z must lie in [-1, 0]"));
    }
    Ok(z.clamp(-1.0, 0.0))
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid("normalized halfwidth β must be positive"));
    }
    Ok(())
}

impl ContinuumKernel {
    fn new(kind: ContinuumKind, q: usize, z: f64, tail: [f64; 2]) -> Self {
        Self { kind, q, z, tail }
    }

    /// `G(y) = γ_q (P_q(y) - P_{q+2}(y))`.
    pub fn interior_optimal(q: usize) -> Self {
        Self::new(ContinuumKind::InteriorOptimal, q, 0.0, [-1.0, 0.0])
    }

    /// The minimum-risk kernel for offset `z` and `β = h / h_0(t)`:
    /// `b_{q+2} = ((2q+3)z² - 1) / ((2q+3)/((2q+5) β^{2q+5}) + 2/(2q+5))`.
    pub fn boundary_optimal(q: usize, z: f64, beta: f64) -> Result<Self> {
        let z = check_z(z)?;
        check_beta(beta)?;
        let a = (2 * q + 3) as f64;
        let c = (2 * q + 5) as f64;
        let b = (a * z * z - 1.0) / (a / (c * powi(beta, 2 * q + 5)) + 2.0 / c);
        Ok(Self::new(ContinuumKind::BoundaryOptimal, q, z, [b, 0.0]))
    }

    /// `b_{q+2} = (2q+3) z² - 1`, independent of `β` and of `f^{(p)}`.
    pub fn asymptotic_optimal(q: usize, z: f64) -> Result<Self> {
        let z = check_z(z)?;
        Ok(Self::new(ContinuumKind::AsymptoticOptimal, q, z, [(2 * q + 3) as f64 * z * z - 1.0, 0.0]))
    }

    /// `γ_q (P_q - (2q+3) P_{q+1} + (2q+2) P_{q+2})`.
    pub fn edge_optimal(q: usize) -> Self {
        Self::new(ContinuumKind::EdgeOptimal, q, -1.0, [(2 * q + 2) as f64, 0.0])
    }

    /// `b_{q+2} = -1`, `b_{q+3} = -(2q+3) z`.
    pub fn mueller(q: usize, z: f64) -> Result<Self> {
        let z = check_z(z)?;
        Ok(Self::new(ContinuumKind::Mueller, q, z, [-1.0, -((2 * q + 3) as f64) * z]))
    }

    /// `b_{q+2} = -(1 + (2q+3) z)`.
    pub fn vanish_right(q: usize, z: f64) -> Result<Self> {
        let z = check_z(z)?;
        Ok(Self::new(ContinuumKind::VanishRight, q, z, [-(1.0 + (2 * q + 3) as f64 * z), 0.0]))
    }

    /// Local quadratic-weighted fit with the parabola centered at `t` and
    /// reaching the right support end: `W(y) = (1 - y)(1 + y - 2z)`.
    /// Tail `(-(1 + (2q+3)z + b), b)` with `b = 9z² / (10z² - 8z + 1)` for `q = 0`.
    pub fn bartlett_priestley(q: usize, z: f64) -> Result<Self> {
        let z = check_z(z)?;
        if q == 0 {
            let b = 9.0 * z * z / (10.0 * z * z - 8.0 * z + 1.0);
            return Ok(Self::new(ContinuumKind::BartlettPriestley, 0, z, [-(1.0 + 3.0 * z + b), b]));
        }
        let tail = bp_tail_numeric(q, z)?;
        Ok(Self::new(ContinuumKind::BartlettPriestley, q, z, tail))
    }

    /// Kernel type.
    pub fn kind(&self) -> ContinuumKind {
        self.kind
    }

    /// Derivative order.
    pub fn q(&self) -> usize {
        self.q
    }

    /// Offset of the estimation point.
    pub fn z(&self) -> f64 {
        self.z
    }

    /// `(b_{q+2}, b_{q+3})` in units of `γ_q`.
    pub fn tail(&self) -> [f64; 2] {
        self.tail
    }

    /// Legendre coefficients `b_0, ..., b_{q+3}` with `b_q = 1`.
    pub fn unit_coeffs(&self) -> Vec<f64> {
        let q = self.q;
        let mut b = alloc::vec![0.0; q + 4];
        b[q] = 1.0;
        b[q + 1] = (2 * q + 3) as f64 * self.z;
        b[q + 2] = self.tail[0];
        b[q + 3] = self.tail[1];
        b
    }

    /// Legendre coefficients with `γ_q` applied.
    pub fn coeffs(&self) -> Vec<f64> {
        let g = gamma_q_f64(self.q);
        self.unit_coeffs().into_iter().map(|b| b * g).collect()
    }

    /// `G(z, y)`.
    pub fn eval(&self, y: f64) -> f64 {
        let g = gamma_q_f64(self.q);
        g * self.unit_coeffs().iter().enumerate().map(|(j, b)| b * eval_unchecked(j, y)).sum::<f64>()
    }

    /// Exact `∫ G(z, y) (y - z)^m / m! dy`.
    pub fn moment(&self, m: usize) -> f64 {
        self.coeffs().iter().enumerate().map(|(j, b)| b * continuum_c(self.z, j, m)).sum()
    }

    /// Normalized risk of this kernel at halfwidth ratio `β`.
    pub fn normalized_risk(&self, beta: f64) -> Result<f64> {
        normalized_risk(self.q, self.z, beta, &self.tail)
    }
}

/// Tail of the Bartlett-Priestley kernel by exact Gauss quadrature of the
/// continuum local fit.
fn bp_tail_numeric(q: usize, z: f64) -> Result<[f64; 2]> {
    let order = KernelOrder::new(q, q + 2)?;
    let w = move |y: f64| (1.0 - y) * (1.0 + y - 2.0 * z);
    let b = continuum_equivalent_coeffs(&w, z, order, q + 3)?;
    let g = gamma_q_f64(q);
    Ok([b[q + 2] / g, b[q + 3] / g])
}

/// Normalized leading-order risk
/// `R̄ = (2/β^{2q+1}) (1/(2q+1) + (2q+3) z² + sum_j b_j² / (2j+1))
///      + (2q+3)(2q+5) β⁴ (1/(2q+3) - z² + 2 b_{q+2} / ((2q+3)(2q+5)))²`,
/// with `tail = (b_{q+2}, b_{q+3}, ...)` in units of `γ_q`. Coefficients past
/// `q+2` only add variance.
pub fn normalized_risk(q: usize, z: f64, beta: f64, tail: &[f64]) -> Result<f64> {
    check_beta(beta)?;
    let a = (2 * q + 3) as f64;
    let c = (2 * q + 5) as f64;
    let var_sum: f64 = 1.0 / (2 * q + 1) as f64
        + a * z * z
        + tail.iter().enumerate().map(|(i, b)| b * b / (2 * (q + 2 + i) + 1) as f64).sum::<f64>();
    let b2 = tail.first().copied().unwrap_or(0.0);
    let bias = 1.0 / a - z * z + 2.0 * b2 / (a * c);
    Ok(2.0 / powi(beta, 2 * q + 1) * var_sum + a * c * powi(beta, 4) * bias * bias)
}

/// Optimal interior halfwidth for `p = q + 2`,
/// `h_0 = (4(2q+3)(2q+5) σ² γ_q² / (N f_p²))^{1/(2q+5)}`.
pub fn continuum_h0(q: usize, noise_var: f64, curvature: f64, n: f64) -> Result<f64> {
    if curvature == 0.0 || !curvature.is_finite() {
        return Err(Error::DegenerateCurvature);
    }
    if !(n >= 1.0) || !(noise_var >= 0.0) {
        return Err(Error::invalid("h_0 needs N >= 1 and σ² >= 0"));
    }
    let g = gamma_q_f64(q);
    let base = 4.0 * (2 * q + 3) as f64 * (2 * q + 5) as f64 * noise_var * g * g / (n * curvature * curvature);
    Ok(powf(base, 1.0 / (2 * q + 5) as f64))
}

/// Constants of the interior optimal kernel of type `(q, p)`, `p - q` even,
/// in the normalization `G = sum_k b_k P_k` (so `b_q = γ_q`).
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorConstants {
    /// Legendre coefficients `b_0, ..., b_p`.
    pub coeffs: Vec<f64>,
    /// `m_2 = ∫ G²`.
    pub variance_constant: f64,
    /// `B_p = ∫ G y^p / p!`.
    pub bias_constant: f64,
    /// Noise ratio `σ² / (N h_0^{2p+1} f_p²)` at the optimal halfwidth.
    pub noise_ratio: f64,
}

/// The symmetric interior kernel whose last coefficient is consistent with
/// its own optimal halfwidth.
///
/// At `h = h_0` the noise ratio is `2(p-q) B_p² / ((2q+1) m_2)`, which turns
/// the optimality condition for `b_p` into a quadratic with the double root
/// `b_p = -(p-q) S / ((2p+1) C_pp)`, `S = sum_{k<p} C_kp b_k`.
pub fn interior_constants(order: KernelOrder) -> Result<InteriorConstants> {
    let (q, p) = (order.q(), order.p());
    if (p - q) % 2 == 1 {
        return Err(Error::invalid("interior optimal kernel needs p - q even"));
    }
    let n = p + 1;
    let entries = (0..n).flat_map(|k| (0..n).map(move |j| continuum_c(0.0, k, j))).collect();
    let c = MomentMatrix::from_entries(p, entries)?;
    let mut b = solve_moment_coeffs(&c, order)?;
    let s: f64 = b.iter().enumerate().map(|(k, bk)| c.get(k, p) * bk).sum();
    b.push(-((p - q) as f64) * s / ((2 * p + 1) as f64 * c.get(p, p)));
    let m2: f64 = b.iter().enumerate().map(|(k, bk)| bk * bk * 2.0 / (2 * k + 1) as f64).sum();
    let bp: f64 = b.iter().enumerate().map(|(k, bk)| c.get(k, p) * bk).sum();
    let ratio = 2.0 * (p - q) as f64 * bp * bp / ((2 * q + 1) as f64 * m2);
    Ok(InteriorConstants { coeffs: b, variance_constant: m2, bias_constant: bp, noise_ratio: ratio })
}

/// Optimal interior halfwidth for type `(q, p)` from [`interior_constants`].
pub fn interior_h0(order: KernelOrder, noise_var: f64, curvature: f64, n: f64) -> Result<f64> {
    let k = interior_constants(order)?;
    optimal_halfwidth(noise_var, curvature, n, k.variance_constant, k.bias_constant, order)
}

/// Left-hand side of the halfwidth equation of the variable-halfwidth
/// boundary estimator,
/// `(2q+2)β^{2q+6} - (4q+8)τβ^{2q+5} + (2q+5)τ²β^{2q+4} - (2q+2)β + (2q+3)τ`.
pub fn variable_halfwidth_poly(q: usize, tau: f64, beta: f64) -> f64 {
    let qf = q as f64;
    let b4 = powi(beta, 2 * q + 4);
    (2.0 * qf + 2.0) * b4 * beta * beta - (4.0 * qf + 8.0) * tau * b4 * beta + (2.0 * qf + 5.0) * tau * tau * b4
        - (2.0 * qf + 2.0) * beta
        + (2.0 * qf + 3.0) * tau
}

/// Largest root `β` of [`variable_halfwidth_poly`] for `τ = t / h_0(t)`.
///
/// Scans downwards from `β = 4` in steps of `10⁻³` to `τ`, then bisects the
/// first bracket to machine precision.
pub fn variable_halfwidth_beta(q: usize, tau: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid("τ must lie in [0, 1]"));
    }
    const TOP: f64 = 4.0;
    let f = |b: f64| variable_halfwidth_poly(q, tau, b);
    let mut hi = TOP;
    let mut f_hi = f(hi);
    let steps = libm::floor((TOP - tau) * 1000.0) as usize;
    for k in 1..=steps + 1 {
        let lo = if k > steps { tau } else { (4000 - k) as f64 / 1000.0 };
        let f_lo = f(lo);
        if f_lo == 0.0 {
            return Ok(lo);
        }
        if f_lo.signum() != f_hi.signum() {
            let (mut a, mut b) = (lo, hi);
            let fa = f_lo;
            loop {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                let fm = f(mid);
                if fm == 0.0 {
                    return Ok(mid);
                }
                if fm.signum() == fa.signum() {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Ok(0.5 * (a + b));
        }
        hi = lo;
        f_hi = f_lo;
        if lo <= tau {
            break;
        }
    }
    Err(Error::NoRoot { lo: tau, hi: TOP })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;

    const ZS: [f64; 5] = [-1.0, -0.75, -0.5, -0.25, 0.0];

    fn all_kinds(q: usize, z: f64) -> Vec<ContinuumKernel> {
        alloc::vec![
            ContinuumKernel::boundary_optimal(q, z, 1.3).unwrap(),
            ContinuumKernel::asymptotic_optimal(q, z).unwrap(),
            ContinuumKernel::mueller(q, z).unwrap(),
            ContinuumKernel::bartlett_priestley(q, z).unwrap(),
            ContinuumKernel::vanish_right(q, z).unwrap(),
        ]
    }

    #[test]
    fn interior_examples() {
        let k = ContinuumKernel::interior_optimal(0);
        for &y in &[-0.7, 0.0, 0.4] {
            assert!((k.eval(y) - 0.75 * (1.0 - y * y)).abs() < 1e-15);
        }
        for q in 0..6 {
            let k = ContinuumKernel::interior_optimal(q);
            assert!(k.eval(1.0).abs() < 1e-12 * gamma_q_f64(q));
            assert!(k.eval(-1.0).abs() < 1e-12 * gamma_q_f64(q));
        }
        assert!((k.moment(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_optimal_examples() {
        for q in 0..5 {
            let b = ContinuumKernel::boundary_optimal(q, 0.0, 1.0).unwrap();
            assert_eq!(b.unit_coeffs(), ContinuumKernel::interior_optimal(q).unit_coeffs());
        }
        let b = ContinuumKernel::boundary_optimal(0, -1.0, 1.0).unwrap();
        assert!((b.tail()[0] - 2.0).abs() < 1e-15);
        let far = ContinuumKernel::boundary_optimal(1, -0.4, 1e6).unwrap();
        let a = ContinuumKernel::asymptotic_optimal(1, -0.4).unwrap();
        assert!((far.tail()[0] - a.tail()[0] * 7.0 / 2.0).abs() < 1e-9);
        assert!(ContinuumKernel::boundary_optimal(0, -0.5, 0.0).is_err());
    }

    #[test]
    fn asymptotic_and_edge() {
        assert_eq!(ContinuumKernel::asymptotic_optimal(3, 0.0).unwrap().tail()[0], -1.0);
        let e = ContinuumKernel::asymptotic_optimal(0, -1.0).unwrap();
        for &y in &[-0.9, 0.2, 0.8] {
            assert!((e.eval(y) - 1.5 * y * (y - 1.0)).abs() < 1e-14);
        }
        for q in 0..5 {
            let e = ContinuumKernel::edge_optimal(q);
            assert_eq!(e.unit_coeffs(), ContinuumKernel::asymptotic_optimal(q, -1.0).unwrap().unit_coeffs());
            assert!(e.eval(1.0).abs() < 1e-11 * gamma_q_f64(q));
            let v = ContinuumKernel::vanish_right(q, -1.0).unwrap();
            assert_eq!(v.unit_coeffs(), e.unit_coeffs());
        }
        assert_eq!(ContinuumKernel::edge_optimal(0).unit_coeffs(), alloc::vec![1.0, -3.0, 2.0, 0.0]);
    }

    #[test]
    fn edge_factor() {
        for q in 0..5 {
            let edge = ContinuumKernel::edge_optimal(q).normalized_risk(1.0).unwrap();
            let mid = ContinuumKernel::interior_optimal(q).normalized_risk(1.0).unwrap();
            let f = ((q + 1) * (q + 1) * 4) as f64;
            assert!((edge / mid - f).abs() < 1e-12 * f, "q={q}");
            assert!((mid - (2 * q + 3) as f64 / (2 * q + 1) as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn risk_examples() {
        assert!((normalized_risk(0, 0.0, 1.0, &[-1.0]).unwrap() - 3.0).abs() < 1e-14);
        assert!((normalized_risk(0, -1.0, 1.0, &[2.0]).unwrap() - 12.0).abs() < 1e-14);
        // Doubling β: variance part x 2^{-(2q+1)}, bias part x 16.
        let (q, z, t) = (1, -0.3, [0.4, 0.2]);
        let r1 = normalized_risk(q, z, 1.0, &t).unwrap();
        let r2 = normalized_risk(q, z, 2.0, &t).unwrap();
        let var1 = 2.0 * (1.0 / 3.0 + 5.0 * 0.09 + 0.16 / 7.0 + 0.04 / 9.0);
        let bias1 = r1 - var1;
        assert!((r2 - (var1 / 8.0 + 16.0 * bias1)).abs() < 1e-12);
        assert!(normalized_risk(0, 0.0, -1.0, &[]).is_err());
    }

    #[test]
    fn moment_conditions_every_kind() {
        let (nodes, w) = gauss_legendre(20);
        for q in 0..3 {
            for &z in &ZS {
                for k in all_kinds(q, z) {
                    for m in 0..=q + 1 {
                        let quad: f64 = nodes
                            .iter()
                            .zip(&w)
                            .map(|(&y, &wi)| wi * k.eval(y) * powi(y - z, m) / crate::math::factorial(m))
                            .sum();
                        let expect = if m == q { 1.0 } else { 0.0 };
                        assert!((quad - expect).abs() < 1e-10, "{:?} q={q} z={z} m={m}: {quad}", k.kind());
                        assert!((k.moment(m) - expect).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn mueller_vanishes_at_both_ends() {
        for q in 0..4 {
            for &z in &[-1.0, -0.5, 0.0] {
                let k = ContinuumKernel::mueller(q, z).unwrap();
                let s = gamma_q_f64(q) * 10.0;
                assert!(k.eval(-1.0).abs() < 1e-12 * s && k.eval(1.0).abs() < 1e-12 * s);
            }
        }
        assert_eq!(ContinuumKernel::mueller(2, 0.0).unwrap().unit_coeffs()[5], 0.0);
    }

    #[test]
    fn bp_examples() {
        let k = ContinuumKernel::bartlett_priestley(0, 0.0).unwrap();
        assert_eq!(k.tail(), [-1.0, 0.0]);
        let k = ContinuumKernel::bartlett_priestley(0, -1.0).unwrap();
        assert!((k.tail()[1] - 9.0 / 19.0).abs() < 1e-15);
        for &z in &ZS {
            let closed = ContinuumKernel::bartlett_priestley(0, z).unwrap().tail();
            let numeric = bp_tail_numeric(0, z).unwrap();
            assert!((closed[0] - numeric[0]).abs() < 1e-12 && (closed[1] - numeric[1]).abs() < 1e-12);
        }
        for &z in &[-0.2, -0.7] {
            let t = bp_tail_numeric(1, z).unwrap();
            let b = 10.0 * z * z * (5.0 * z - 3.0) / (35.0 * z * z * z - 45.0 * z * z + 15.0 * z - 1.0);
            assert!((t[1] - b).abs() < 1e-12);
            assert!((t[0] + 1.0 + 5.0 * z + b).abs() < 1e-12);
        }
        for q in 1..5 {
            let k = ContinuumKernel::bartlett_priestley(q, 0.0).unwrap();
            assert!((k.tail()[0] + 1.0).abs() < 1e-10 && k.tail()[1].abs() < 1e-10);
        }
    }

    #[test]
    fn optimal_minimizes_risk() {
        for q in 0..3 {
            for &z in &ZS {
                for &beta in &[0.5, 1.0, 2.0] {
                    let best = ContinuumKernel::boundary_optimal(q, z, beta).unwrap().normalized_risk(beta).unwrap();
                    for k in all_kinds(q, z) {
                        assert!(best <= k.normalized_risk(beta).unwrap() + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn touch_point_continuity() {
        for q in 0..4 {
            let want = ContinuumKernel::interior_optimal(q).unit_coeffs();
            assert_eq!(ContinuumKernel::boundary_optimal(q, 0.0, 1.0).unwrap().unit_coeffs(), want);
            assert_eq!(ContinuumKernel::asymptotic_optimal(q, 0.0).unwrap().unit_coeffs(), want);
            assert_eq!(ContinuumKernel::mueller(q, 0.0).unwrap().unit_coeffs(), want);
        }
    }

    #[test]
    fn asymptotic_sign_changes() {
        for q in 0..5 {
            for i in 0..=20 {
                let k = ContinuumKernel::asymptotic_optimal(q, -(i as f64) / 20.0).unwrap();
                let vals: Vec<f64> = (1..1000).map(|j| k.eval(-1.0 + j as f64 / 500.0)).collect();
                assert!(crate::lpr::sign_changes(&vals) <= q + 1);
            }
        }
    }

    #[test]
    fn h0_examples() {
        let h = continuum_h0(0, 2.0, 3.0, 700.0).unwrap();
        assert!((h - libm::pow(15.0 * 2.0 / (700.0 * 9.0), 0.2)).abs() < 1e-15);
        let h8 = continuum_h0(0, 2.0, 3.0, 5600.0).unwrap();
        assert!((h8 / h - libm::pow(8.0, -0.2)).abs() < 1e-14);
        assert_eq!(continuum_h0(0, 1.0, 0.0, 10.0), Err(Error::DegenerateCurvature));
        for q in 0..4 {
            let ord = KernelOrder::new(q, q + 2).unwrap();
            let a = continuum_h0(q, 0.7, 1.9, 3000.0).unwrap();
            let b = interior_h0(ord, 0.7, 1.9, 3000.0).unwrap();
            assert!((a / b - 1.0).abs() < 1e-12, "q={q}");
        }
    }

    #[test]
    fn risk_at_h0() {
        for q in 0..4 {
            let ord = KernelOrder::new(q, q + 2).unwrap();
            let k = interior_constants(ord).unwrap();
            let (s2, f, n) = (0.5, 2.0, 1000.0);
            let h = continuum_h0(q, s2, f, n).unwrap();
            let risk = powi(k.bias_constant * f * h * h, 2) + s2 * k.variance_constant / (n * powi(h, 2 * q + 1));
            let g = gamma_q_f64(q);
            let expect = (2 * q + 3) as f64 / (2 * q + 1) as f64 * s2 * g * g / (n * powi(h, 2 * q + 1));
            assert!((risk / expect - 1.0).abs() < 1e-12, "q={q}");
            assert!((k.coeffs[q + 2] + g).abs() < 1e-12 * g);
        }
    }

    #[test]
    fn interior_constants_are_stationary() {
        // b_p from the closed form reproduces itself through the last-coefficient rule.
        for (q, p) in [(0, 4), (1, 3), (1, 5), (2, 6)] {
            let ord = KernelOrder::new(q, p).unwrap();
            let k = interior_constants(ord).unwrap();
            let n = p + 1;
            let entries = (0..n).flat_map(|a| (0..n).map(move |j| continuum_c(0.0, a, j))).collect();
            let c = MomentMatrix::from_entries(p, entries).unwrap();
            let bp = crate::discrete::last_coefficient(&c, 2.0 / (2 * p + 1) as f64, &k.coeffs[..p], k.noise_ratio);
            assert!((bp - k.coeffs[p]).abs() < 1e-10 * k.coeffs[p].abs(), "({q},{p})");
        }
        assert!(interior_constants(KernelOrder::new(0, 3).unwrap()).is_err());
    }

    #[test]
    fn variable_halfwidth() {
        for q in 0..5 {
            let b = variable_halfwidth_beta(q, 0.0).unwrap();
            assert!((b - 1.0).abs() < 1e-12);
            for i in 1..=100 {
                let tau = i as f64 / 100.0;
                let b = variable_halfwidth_beta(q, tau).unwrap();
                assert!(b > tau, "q={q} τ={tau} β={b}");
                assert!(variable_halfwidth_poly(q, tau, b).abs() < 1e-10);
            }
        }
        assert!(variable_halfwidth_beta(0, 1.5).is_err());
    }
}
