//! Gauss-Legendre rules on `[-1, 1]`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::legendre::legendre_eval;

pub const MAX_POINTS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self.iter().map(|(x, w)| w * f(mid + half * x)).sum::<f64>()
    }
}

/// The `n`-point Gauss-Legendre rule, exact for polynomials of degree `2n-1`.
pub fn gauss_rule(n: usize) -> Result<&'static QuadratureRule> {
    static RULES: OnceLock<Vec<QuadratureRule>> = OnceLock::new();
    if !(1..=MAX_POINTS).contains(&n) {
        return Err(Error::UnsupportedQuadrature(n));
    }
    let rules = RULES.get_or_init(|| (1..=MAX_POINTS).map(newton_rule).collect());
    Ok(&rules[n - 1])
}

fn newton_rule(n: usize) -> QuadratureRule {
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess for the i-th largest root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_eval(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_eval(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points[i] = -x;
        points[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
    QuadratureRule { points, weights }
}
