//! Hermite interpolation in Newton form with confluent divided differences.

use crate::error::{Error, Result};

/// Interpolation data at one node: `derivs[k]` is the k-th time derivative.
#[derive(Debug, Clone)]
pub struct HermiteNode<'a> {
    pub t: f64,
    pub derivs: Vec<&'a [f64]>,
}

/// Vector-valued polynomial on `[t0, t0 + tau]` in Newton form over the
/// normalized variable `θ = (t - t0) / tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalPoly {
    t0: f64,
    tau: f64,
    nodes: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

impl IntervalPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].len()
    }

    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.tau
    }

    /// Newton coefficients `f[z_0..z_k]` in θ units.
    pub fn newton_coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    /// Newton nodes in θ units.
    pub fn newton_nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn value(&self, t: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        let mut d = vec![0.0; self.dim()];
        self.eval(t, &mut v, &mut d);
        v
    }

    pub fn derivative(&self, t: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        let mut d = vec![0.0; self.dim()];
        self.eval(t, &mut v, &mut d);
        d
    }

    /// Value and first time derivative at `t`.
    pub fn eval(&self, t: f64, value: &mut [f64], deriv: &mut [f64]) {
        let theta = (t - self.t0) / self.tau;
        let q = self.degree();
        value.copy_from_slice(&self.coeffs[q]);
        deriv.iter_mut().for_each(|d| *d = 0.0);
        for k in (0..q).rev() {
            let s = theta - self.nodes[k];
            let c = &self.coeffs[k];
            for i in 0..value.len() {
                deriv[i] = deriv[i] * s + value[i];
                value[i] = value[i] * s + c[i];
            }
        }
        let inv = 1.0 / self.tau;
        deriv.iter_mut().for_each(|d| *d *= inv);
    }

    /// Time derivatives of orders `0..=order` at `t`.
    pub fn derivatives(&self, t: f64, order: usize) -> Vec<Vec<f64>> {
        let theta = (t - self.t0) / self.tau;
        let q = self.degree();
        let dim = self.dim();
        let mut d = vec![vec![0.0; dim]; order + 1];
        d[0].copy_from_slice(&self.coeffs[q]);
        for k in (0..q).rev() {
            let s = theta - self.nodes[k];
            for j in (1..=order).rev() {
                let (lo, hi) = d.split_at_mut(j);
                for i in 0..dim {
                    hi[0][i] = hi[0][i] * s + lo[j - 1][i];
                }
            }
            for i in 0..dim {
                d[0][i] = d[0][i] * s + self.coeffs[k][i];
            }
        }
        let mut factorial = 1.0;
        for (j, dj) in d.iter_mut().enumerate() {
            if j > 0 {
                factorial *= j as f64;
            }
            let scale = factorial / self.tau.powi(j as i32);
            dj.iter_mut().for_each(|v| *v *= scale);
        }
        d
    }
}

/// In-place confluent divided differences. `z` lists nodes with repeated
/// entries contiguous; `data(i, k)` returns the k-th derivative at node `z[i]`.
/// Returns the Newton coefficients `f[z_0..z_k]`.
fn newton_table(z: &[f64], dim: usize, data: impl Fn(usize, usize) -> Vec<f64>) -> Vec<Vec<f64>> {
    let n = z.len();
    let mut col: Vec<Vec<f64>> = (0..n).map(|i| data(i, 0)).collect();
    let mut factorial = 1.0;
    for k in 1..n {
        factorial *= k as f64;
        for i in (k..n).rev() {
            if z[i] == z[i - k] {
                let d = data(i, k);
                col[i] = d.iter().map(|v| v / factorial).collect();
            } else {
                let denom = z[i] - z[i - k];
                let (lo, hi) = col.split_at_mut(i);
                for j in 0..dim {
                    hi[0][j] = (hi[0][j] - lo[i - 1][j]) / denom;
                }
            }
        }
    }
    col
}

/// Divided difference `f[z_0, ..., z_n]` over nodes with multiplicities.
///
/// Each entry `(z, [v, v', v'', ...])` contributes `z` with multiplicity equal
/// to the number of supplied derivatives.
pub fn divided_difference(nodes: &[(f64, Vec<f64>)]) -> f64 {
    let mut z = Vec::new();
    let mut owner = Vec::new();
    for (g, (t, derivs)) in nodes.iter().enumerate() {
        for _ in 0..derivs.len() {
            z.push(*t);
            owner.push(g);
        }
    }
    if z.is_empty() {
        return 0.0;
    }
    let coeffs = newton_table(&z, 1, |i, k| vec![nodes[owner[i]].1[k]]);
    coeffs[z.len() - 1][0]
}

/// The unique polynomial matching all value/derivative conditions, normalized
/// on `[t_left, t_right]`. Node order fixes the Newton basis; the first node
/// anchors it.
pub fn hermite_interval(
    t_left: f64,
    t_right: f64,
    nodes: &[HermiteNode<'_>],
) -> Result<IntervalPoly> {
    let tau = t_right - t_left;
    if !(tau > 0.0) {
        return Err(Error::Conditioning(format!(
            "empty interval [{t_left}, {t_right}]"
        )));
    }
    let thetas: Vec<f64> = nodes.iter().map(|n| (n.t - t_left) / tau).collect();
    for i in 0..thetas.len() {
        for j in i + 1..thetas.len() {
            if (thetas[i] - thetas[j]).abs() < 1e-14 {
                return Err(Error::Conditioning(format!(
                    "nodes {} and {} closer than 1e-14 relative to the step",
                    nodes[i].t, nodes[j].t
                )));
            }
        }
    }
    let dim = nodes
        .first()
        .and_then(|n| n.derivs.first())
        .map(|d| d.len())
        .ok_or_else(|| Error::Conditioning("no interpolation data".into()))?;
    let mut z = Vec::new();
    let mut owner = Vec::new();
    for (g, node) in nodes.iter().enumerate() {
        for d in &node.derivs {
            if d.len() != dim {
                return Err(Error::Conditioning("inconsistent data dimension".into()));
            }
        }
        for _ in 0..node.derivs.len() {
            z.push(thetas[g]);
            owner.push(g);
        }
    }
    let coeffs = newton_table(&z, dim, |i, k| {
        let scale = tau.powi(k as i32);
        nodes[owner[i]].derivs[k]
            .iter()
            .map(|v| v * scale)
            .collect()
    });
    Ok(IntervalPoly {
        t0: t_left,
        tau,
        nodes: z,
        coeffs,
    })
}
