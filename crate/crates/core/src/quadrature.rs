//! Gauss–Legendre rules, used to evaluate continuum integrals of polynomial
//! kernels exactly.

use alloc::vec::Vec;

use crate::legendre::eval_unchecked;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
///
/// Exact for polynomials of degree `<= 2n - 1`. Nodes are returned in
/// increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess for the i-th largest root.
        let theta = core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5);
        let mut x = libm::cos(theta);
        let mut dp = 1.0;
        for _ in 0..100 {
            let p = eval_unchecked(n, x);
            let pm1 = eval_unchecked(n - 1, x);
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let p = eval_unchecked(n, x);
        let pm1 = eval_unchecked(n - 1, x);
        dp = if (x * x - 1.0).abs() > 0.0 { n as f64 * (x * p - pm1) / (x * x - 1.0) } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}
