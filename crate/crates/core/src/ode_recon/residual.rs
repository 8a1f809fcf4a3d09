//! Temporal residual `R = ∂_t û - F(t, û)` and the resulting ODE error bounds.

use serde::{Deserialize, Serialize};

use super::TemporalSource;
use crate::error::Result;
use crate::quadrature::gauss_rule;
use crate::time_integration::{Rhs, Trajectory};

/// `t ↦ ∂_t û(t) - F(t, û(t))`.
///
/// Pass the right-hand side the integrator used. For a DG semi-discretization
/// `F = -f` this gives `∂_t û + f(û)`.
pub struct TemporalResidual<'a, S: TemporalSource + ?Sized> {
    source: &'a S,
    rhs: &'a dyn Rhs,
}

impl<'a, S: TemporalSource + ?Sized> TemporalResidual<'a, S> {
    pub fn new(source: &'a S, rhs: &'a dyn Rhs) -> Self {
        Self { source, rhs }
    }

    pub fn at(&self, t: f64) -> Result<Vec<f64>> {
        let n = self.source.locate(t)?;
        let poly = self.source.interval(n)?;
        self.eval_on(&poly, t)
    }

    fn eval_on(&self, poly: &super::IntervalPoly, t: f64) -> Result<Vec<f64>> {
        let dim = poly.dim();
        let mut value = vec![0.0; dim];
        let mut deriv = vec![0.0; dim];
        poly.eval(t, &mut value, &mut deriv);
        let mut f = vec![0.0; dim];
        self.rhs.eval(t, &value, &mut f)?;
        for i in 0..dim {
            deriv[i] -= f[i];
        }
        Ok(deriv)
    }
}

/// Norms of the residual over the whole grid, in the Euclidean vector norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualNorms {
    pub l1: f64,
    pub l2: f64,
    /// Maximum over Gauss points and `samples` equidistant points per interval.
    pub linf: f64,
}

/// Residual norms with `n_quad` Gauss points per step (default: degree + 2)
/// and `samples` equidistant sup-samples per step, endpoints included.
pub fn residual_norms<S: TemporalSource + ?Sized>(
    source: &S,
    rhs: &dyn Rhs,
    n_quad: Option<usize>,
    samples: usize,
) -> Result<ResidualNorms> {
    let residual = TemporalResidual::new(source, rhs);
    let grid = source.grid();
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    let mut linf: f64 = 0.0;
    for n in 0..grid.steps {
        let poly = source.interval(n)?;
        let rule = gauss_rule(n_quad.unwrap_or(poly.degree() + 2).min(20))?;
        let (a, b) = (grid.time(n), grid.time(n + 1));
        let half = 0.5 * (b - a);
        for (xi, w) in rule.iter() {
            let t = a + half * (xi + 1.0);
            let r = residual.eval_on(&poly, t)?;
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            l1 += w * half * norm;
            l2 += w * half * norm * norm;
            linf = linf.max(norm);
        }
        for k in 0..samples {
            let s = if samples > 1 {
                k as f64 / (samples - 1) as f64
            } else {
                0.5
            };
            let r = residual.eval_on(&poly, a + s * (b - a))?;
            linf = linf.max(r.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
    }
    Ok(ResidualNorms {
        l1,
        l2: l2.sqrt(),
        linf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeBoundReport {
    pub lipschitz: f64,
    pub t_end: f64,
    pub residual_l1: f64,
    pub residual_l2: f64,
    pub initial_error: f64,
    /// `(e_0 + ‖R‖_{L¹}) e^{LT}`, a bound on `max_t |u - û|`.
    pub bound_linf: f64,
    /// `sqrt((e_0² + ‖R‖²_{L²}) e^{(L+1)T})`, a bound on `max_t |u - û|`.
    pub bound_l2: f64,
}

/// Gronwall bounds for `u' = F(t, u)` with `F` Lipschitz in `u` with constant `L`.
pub fn ode_error_bound(
    residual_l1: f64,
    residual_l2: f64,
    lipschitz: f64,
    t_end: f64,
    initial_error: f64,
) -> OdeBoundReport {
    let bound_linf = (initial_error + residual_l1) * (lipschitz * t_end).exp();
    let bound_l2 = ((initial_error * initial_error + residual_l2 * residual_l2)
        * ((lipschitz + 1.0) * t_end).exp())
    .sqrt();
    OdeBoundReport {
        lipschitz,
        t_end,
        residual_l1,
        residual_l2,
        initial_error,
        bound_linf,
        bound_l2,
    }
}

/// Largest Frobenius norm of a finite-difference Jacobian of `F` over the
/// trajectory states. Frobenius dominates the spectral norm, so this errs high.
pub fn sampled_lipschitz(rhs: &dyn Rhs, traj: &Trajectory) -> Result<f64> {
    let mut best: f64 = 0.0;
    for (n, u) in traj.states.iter().enumerate() {
        let t = traj.grid.time(n);
        let dim = u.len();
        let mut plus = vec![0.0; dim];
        let mut minus = vec![0.0; dim];
        let mut x = u.clone();
        let mut frob = 0.0;
        for j in 0..dim {
            let eps = 1e-6 * u[j].abs().max(1.0);
            x[j] = u[j] + eps;
            rhs.eval(t, &x, &mut plus)?;
            x[j] = u[j] - eps;
            rhs.eval(t, &x, &mut minus)?;
            x[j] = u[j];
            frob += (0..dim)
                .map(|i| ((plus[i] - minus[i]) / (2.0 * eps)).powi(2))
                .sum::<f64>();
        }
        best = best.max(frob.sqrt());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode_recon::{reconstruct, ReconSpec};
    use crate::time_integration::{evolve, Stepper, TimeGrid};

    #[test]
    fn bound_formulas() {
        let zero = ode_error_bound(0.0, 0.0, 1.0, 1.0, 0.0);
        assert_eq!(zero.bound_linf, 0.0);
        assert_eq!(zero.bound_l2, 0.0);
        let r = ode_error_bound(0.1, 0.0, 1.0, 1.0, 0.0);
        assert!((r.bound_linf - 0.1 * std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn exact_reconstruction_has_zero_residual() {
        let c = |_t: f64, _u: &[f64], out: &mut [f64]| -> Result<()> {
            out[0] = 0.7;
            Ok(())
        };
        let traj = evolve(&c, &[1.0], &TimeGrid::new(0.0, 0.1, 10), Stepper::Rk3Ssp).unwrap();
        let poly = reconstruct(&traj, ReconSpec::new(0, 0, 0), None, None).unwrap();
        let norms = residual_norms(&poly, &c, None, 5).unwrap();
        assert!(norms.linf < 1e-13);
    }

    #[test]
    fn lipschitz_of_linear_map() {
        let f = |_t: f64, u: &[f64], out: &mut [f64]| -> Result<()> {
            out[0] = -3.0 * u[0];
            Ok(())
        };
        let traj = evolve(&f, &[1.0], &TimeGrid::new(0.0, 0.1, 3), Stepper::Rk1).unwrap();
        assert!((sampled_lipschitz(&f, &traj).unwrap() - 3.0).abs() < 1e-8);
    }
}
