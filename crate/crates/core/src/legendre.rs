//! Legendre polynomials on `[-1, 1]` and their moment integrals.
//!
//! `m_ij = ∫ P_i(y) y^j / j! dy` is kept as an exact rational because the
//! factorials in its closed form overflow 64-bit integers long before the
//! supported maximum order. Values are converted to `f64` at the interface.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::{Error, Result};

/// Largest polynomial order handled by this module.
pub const MAX_ORDER: usize = 64;

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::OrderTooLarge { order, max: MAX_ORDER });
    }
    Ok(())
}

/// Evaluates `P_order(y)` with the forward three-term recurrence.
pub fn legendre_eval(order: usize, y: f64) -> Result<f64> {
    check_order(order)?;
    Ok(eval_unchecked(order, y))
}

pub(crate) fn eval_unchecked(order: usize, y: f64) -> f64 {
    match order {
        0 => 1.0,
        1 => y,
        _ => {
            let (mut prev, mut cur) = (1.0, y);
            for i in 2..=order {
                let next = ((2 * i - 1) as f64 * y * cur - (i - 1) as f64 * prev) / i as f64;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Values `P_0(y), ..., P_max(y)`.
pub fn legendre_values(max: usize, y: f64) -> Result<Vec<f64>> {
    check_order(max)?;
    let mut out = Vec::with_capacity(max + 1);
    out.push(1.0);
    if max >= 1 {
        out.push(y);
    }
    for i in 2..=max {
        let v = ((2 * i - 1) as f64 * y * out[i - 1] - (i - 1) as f64 * out[i - 2]) / i as f64;
        out.push(v);
    }
    Ok(out)
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `γ_q = (1/2) ∏_{i=1}^{q} (2i + 1)`, the normalization of the order-`q`
/// interior kernel. `γ_0 = 1/2`.
pub fn gamma_q(q: usize) -> BigRational {
    let odd = (1..=q).fold(BigInt::one(), |acc, i| acc * BigInt::from(2 * i + 1));
    BigRational::new(odd, BigInt::from(2))
}

/// `γ_q` as a float.
pub fn gamma_q_f64(q: usize) -> f64 {
    (1..=q).fold(0.5, |acc, i| acc * (2 * i + 1) as f64)
}

/// Exact `m_ij = ∫_{-1}^{1} P_i(y) y^j / j! dy`.
///
/// Zero unless `j >= i` and `j - i` is even, in which case it equals
/// `2^{i+1} ((i+j)/2)! / ((i+j+1)! ((j-i)/2)!)`.
pub fn legendre_moment(i: usize, j: usize) -> BigRational {
    if j < i || (j - i) % 2 == 1 {
        return BigRational::zero();
    }
    let num = (BigInt::one() << (i + 1)) * factorial((i + j) / 2);
    let den = factorial(i + j + 1) * factorial((j - i) / 2);
    BigRational::new(num, den)
}

pub(crate) fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Float value of [`legendre_moment`].
pub fn legendre_moment_f64(i: usize, j: usize) -> f64 {
    to_f64(&legendre_moment(i, j))
}

/// Table of `m_ij` for `0 <= i, j <= max_order`.
#[derive(Debug, Clone)]
pub struct LegendreMomentTable {
    max_order: usize,
    exact: Vec<BigRational>,
    float: Vec<f64>,
}

impl LegendreMomentTable {
    /// Builds the table; fails above [`MAX_ORDER`].
    pub fn new(max_order: usize) -> Result<Self> {
        check_order(max_order)?;
        let n = max_order + 1;
        let mut exact = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                exact.push(legendre_moment(i, j));
            }
        }
        let float = exact.iter().map(to_f64).collect();
        Ok(Self { max_order, exact, float })
    }

    /// Largest tabulated order.
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Exact `m_ij`. Panics if an index exceeds `max_order`.
    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.exact[i * (self.max_order + 1) + j]
    }

    /// `m_ij` as a float. Panics if an index exceeds `max_order`.
    pub fn get_f64(&self, i: usize, j: usize) -> f64 {
        self.float[i * (self.max_order + 1) + j]
    }
}

/// Continuum moment `C_ij(z) = ∫_{-1}^{1} P_i(y) (y - z)^j / j! dy`,
/// expanded as `sum_{k=i}^{j} (-z)^{j-k} / (j-k)! m_ik`. Zero for `i > j`.
pub fn continuum_c(z: f64, i: usize, j: usize) -> f64 {
    if i > j {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut shift = 1.0; // (-z)^{j-k} / (j-k)!, built from k = j downwards
    for k in (i..=j).rev() {
        let m = legendre_moment_f64(i, k);
        sum += shift * m;
        let d = (j - k + 1) as f64;
        shift *= -z / d;
    }
    sum
}

/// Upper-triangular matrix of continuum moments `C_ij(z)`, `0 <= i <= j <= p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumMomentMatrix {
    z: f64,
    order: usize,
    entries: Vec<f64>,
}

impl ContinuumMomentMatrix {
    /// Fills the matrix for normalized offset `z` (usually in `[-1, 0]`).
    pub fn new(z: f64, order: usize) -> Result<Self> {
        check_order(order)?;
        let table = LegendreMomentTable::new(order)?;
        let n = order + 1;
        let mut entries = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let mut sum = 0.0;
                let mut shift = 1.0;
                for k in (i..=j).rev() {
                    sum += shift * table.get_f64(i, k);
                    shift *= -z / (j - k + 1) as f64;
                }
                entries[i * n + j] = sum;
            }
        }
        Ok(Self { z, order, entries })
    }

    /// The offset the matrix was built for.
    pub fn z(&self) -> f64 {
        self.z
    }

    /// Largest index `p`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Entry `C_ij`; zero below the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * (self.order + 1) + j]
    }
}
