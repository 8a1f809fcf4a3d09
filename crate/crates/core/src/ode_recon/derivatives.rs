//! Approximations of `∂_t² u = ∂_t F + DF·F` from right-hand-side evaluations.

use crate::error::{Error, Result};
use crate::time_integration::Rhs;

/// Central differences with step `τ²` in time and along `F(t, u)`:
/// `[F(t+τ², u) - F(t-τ², u)]/(2τ²) + [F(t, u+τ²F) - F(t, u-τ²F)]/(2τ²)`.
/// The time part is skipped for autonomous right-hand sides.
pub fn f2_directional(
    f: &dyn Rhs,
    t: f64,
    u: &[f64],
    fu: Option<&[f64]>,
    tau: f64,
) -> Result<Vec<f64>> {
    let n = u.len();
    let eps = tau * tau;
    let base = match fu {
        Some(v) => v.to_vec(),
        None => {
            let mut v = vec![0.0; n];
            f.eval(t, u, &mut v)?;
            v
        }
    };
    let mut out = vec![0.0; n];
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    if !f.autonomous() {
        f.eval(t + eps, u, &mut plus)?;
        f.eval(t - eps, u, &mut minus)?;
        for i in 0..n {
            out[i] += (plus[i] - minus[i]) / (2.0 * eps);
        }
    }
    let up: Vec<f64> = (0..n).map(|i| u[i] + eps * base[i]).collect();
    let um: Vec<f64> = (0..n).map(|i| u[i] - eps * base[i]).collect();
    f.eval(t, &up, &mut plus)?;
    f.eval(t, &um, &mut minus)?;
    for i in 0..n {
        out[i] += (plus[i] - minus[i]) / (2.0 * eps);
    }
    Ok(out)
}

/// Five-point backward difference of `F` at the newest node:
/// `(25/12 F_{n+1} - 4 F_n + 3 F_{n-1} - 4/3 F_{n-2} + 1/4 F_{n-3}) / τ`.
/// `history` is ordered oldest to newest.
pub fn f2_backward_fd(history: &[&[f64]], tau: f64) -> Result<Vec<f64>> {
    if history.len() < 5 {
        return Err(Error::StartUp(format!(
            "backward stencil needs 5 values, got {}",
            history.len()
        )));
    }
    let h = &history[history.len() - 5..];
    Ok(stencil(&[0.25, -4.0 / 3.0, 3.0, -4.0, 25.0 / 12.0], h, tau))
}

fn stencil(weights: &[f64], values: &[&[f64]], tau: f64) -> Vec<f64> {
    let n = values[0].len();
    (0..n)
        .map(|i| {
            weights
                .iter()
                .zip(values)
                .map(|(w, v)| w * v[i])
                .sum::<f64>()
                / tau
        })
        .collect()
}

/// Fourth-order difference approximations of `F'` at every node of an
/// equidistant history: forward and shifted stencils at nodes 0 and 1,
/// central stencils at nodes 2 and 3, backward stencils from node 4 on.
pub fn f2_from_history(f_values: &[Vec<f64>], tau: f64) -> Result<Vec<Vec<f64>>> {
    let len = f_values.len();
    if len < 6 {
        return Err(Error::StartUp(format!(
            "finite-difference derivatives need at least 6 nodes, got {len}"
        )));
    }
    let v = |i: usize| f_values[i].as_slice();
    let mut out = Vec::with_capacity(len);
    out.push(stencil(
        &[-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25],
        &[v(0), v(1), v(2), v(3), v(4)],
        tau,
    ));
    out.push(stencil(
        &[-0.25, -10.0 / 12.0, 1.5, -0.5, 1.0 / 12.0],
        &[v(0), v(1), v(2), v(3), v(4)],
        tau,
    ));
    for j in 2..4 {
        out.push(stencil(
            &[1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0],
            &[v(j - 2), v(j - 1), v(j), v(j + 1), v(j + 2)],
            tau,
        ));
    }
    for j in 4..len {
        let hist: Vec<&[f64]> = (j - 4..=j).map(v).collect();
        out.push(f2_backward_fd(&hist, tau)?);
    }
    Ok(out)
}
