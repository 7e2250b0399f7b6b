//! Test functions with exact derivatives.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Regression functions on `[0, 1]` whose derivatives of every order are
/// available in closed form.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    /// `sin(2πx)`.
    Sine,
    /// `x³ e^{-x}`.
    CubicExp,
    /// `e^{2x}`.
    Exp,
    /// `1 / (1 + e^{-10(x - 1/2)})`.
    Logistic,
    /// `sum_k c_k x^k`.
    Polynomial(Vec<f64>),
}

const LOGISTIC_RATE: f64 = 10.0;

impl TestFunction {
    /// `f(x)`.
    pub fn value(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }

    /// `f^{(k)}(x)`.
    pub fn derivative(&self, k: usize, x: f64) -> f64 {
        match self {
            TestFunction::Sine => {
                let w = 2.0 * PI;
                w.powi(k as i32) * (w * x + k as f64 * PI / 2.0).sin()
            }
            TestFunction::CubicExp => {
                // Leibniz rule on x³ · e^{-x}.
                let mut s = 0.0;
                let mut binom = 1.0;
                let mut falling = 1.0;
                for j in 0..=k.min(3) {
                    let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
                    s += binom * falling * x.powi(3 - j as i32) * sign;
                    binom = binom * (k - j) as f64 / (j + 1) as f64;
                    falling *= (3 - j) as f64;
                }
                s * (-x).exp()
            }
            TestFunction::Exp => 2f64.powi(k as i32) * (2.0 * x).exp(),
            TestFunction::Logistic => {
                let s = 1.0 / (1.0 + (-LOGISTIC_RATE * (x - 0.5)).exp());
                let poly = logistic_poly(k);
                LOGISTIC_RATE.powi(k as i32) * poly.iter().rev().fold(0.0, |acc, c| acc * s + c)
            }
            TestFunction::Polynomial(c) => {
                let mut acc = 0.0;
                for (j, &cj) in c.iter().enumerate().skip(k).rev() {
                    let falling: f64 = ((j - k + 1)..=j).map(|v| v as f64).product();
                    acc = acc * x + cj * falling;
                }
                acc
            }
        }
    }

    /// Name accepted by [`FromStr`].
    pub fn name(&self) -> String {
        match self {
            TestFunction::Sine => "sine".into(),
            TestFunction::CubicExp => "cubic-exp".into(),
            TestFunction::Exp => "exp".into(),
            TestFunction::Logistic => "logistic".into(),
            TestFunction::Polynomial(c) => {
                format!("poly:{}", c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","))
            }
        }
    }
}

/// Coefficients in `s` of `d^k s / dz^k` for the logistic `s(z)`, using
/// `s' = s(1 - s)`.
fn logistic_poly(k: usize) -> Vec<f64> {
    let mut p = vec![0.0, 1.0];
    for _ in 0..k {
        // d/dz P(s) = P'(s) s (1 - s)
        let mut next = vec![0.0; p.len() + 1];
        for (j, &c) in p.iter().enumerate().skip(1) {
            let d = c * j as f64;
            next[j] += d;
            next[j + 1] -= d;
        }
        p = next;
    }
    p
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for TestFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "sine" | "sin" => Ok(TestFunction::Sine),
            "cubic-exp" => Ok(TestFunction::CubicExp),
            "exp" => Ok(TestFunction::Exp),
            "logistic" => Ok(TestFunction::Logistic),
            other => match other.strip_prefix("poly:") {
                Some(list) => {
                    let c: Result<Vec<f64>, _> = list.split(',').map(|v| v.trim().parse::<f64>()).collect();
                    match c {
                        Ok(c) if !c.is_empty() => Ok(TestFunction::Polynomial(c)),
                        _ => Err(format!("bad polynomial coefficients `{list}`")),
                    }
                }
                None => Err(format!(
                    "unknown function `{other}`; expected sine, cubic-exp, exp, logistic or poly:c0,c1,..."
                )),
            },
        }
    }
}
