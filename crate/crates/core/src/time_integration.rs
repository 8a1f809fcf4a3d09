//! Explicit one-step and multi-step integrators for `u' = F(t, u)`.

use serde::{Deserialize, Serialize};

use crate::dg::DgOperator;
use crate::error::{Error, Result};

/// Right-hand side `F(t, u)` written into `out`.
pub trait Rhs {
    fn eval(&self, t: f64, u: &[f64], out: &mut [f64]) -> Result<()>;

    /// `true` when `F` does not depend on `t`.
    fn autonomous(&self) -> bool {
        false
    }
}

impl<F> Rhs for F
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    fn eval(&self, t: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        self(t, u, out)
    }
}

/// The semi-discrete DG scheme `∂_t u = -f(u)`.
pub struct DgRhs<'a> {
    op: &'a DgOperator<'a>,
}

impl<'a> DgRhs<'a> {
    pub fn new(op: &'a DgOperator<'a>) -> Self {
        Self { op }
    }
}

impl Rhs for DgRhs<'_> {
    fn eval(&self, _t: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.op.apply_into(u, out)?;
        out.iter_mut().for_each(|v| *v = -*v);
        Ok(())
    }

    fn autonomous(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepper {
    Rk1,
    Rk2Heun,
    Rk3Ssp,
    Rk4Classic,
    Ab2,
    Ab3,
}

impl Stepper {
    pub fn order(self) -> usize {
        match self {
            Stepper::Rk1 => 1,
            Stepper::Rk2Heun | Stepper::Ab2 => 2,
            Stepper::Rk3Ssp | Stepper::Ab3 => 3,
            Stepper::Rk4Classic => 4,
        }
    }

    pub fn is_multistep(self) -> bool {
        matches!(self, Stepper::Ab2 | Stepper::Ab3)
    }

    /// Runge-Kutta method of the same order, used to start multi-step methods.
    pub fn startup(self) -> Stepper {
        match self {
            Stepper::Ab2 => Stepper::Rk2Heun,
            Stepper::Ab3 => Stepper::Rk3Ssp,
            s => s,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stepper::Rk1 => "rk1",
            Stepper::Rk2Heun => "rk2_heun",
            Stepper::Rk3Ssp => "rk3_ssp",
            Stepper::Rk4Classic => "rk4_classic",
            Stepper::Ab2 => "ab2",
            Stepper::Ab3 => "ab3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "rk1" => Stepper::Rk1,
            "rk2_heun" | "rk2" => Stepper::Rk2Heun,
            "rk3_ssp" | "rk3" => Stepper::Rk3Ssp,
            "rk4_classic" | "rk4" => Stepper::Rk4Classic,
            "ab2" => Stepper::Ab2,
            "ab3" => Stepper::Ab3,
            _ => return None,
        })
    }
}

/// Equidistant grid `t_n = t0 + n τ`, `n = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub tau: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, tau: f64, steps: usize) -> Self {
        Self { t0, tau, steps }
    }

    /// Grid covering `[t0, t_end]` with `steps` equal steps.
    pub fn covering(t0: f64, t_end: f64, steps: usize) -> Self {
        Self {
            t0,
            tau: (t_end - t0) / steps as f64,
            steps,
        }
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.tau
    }

    pub fn end(&self) -> f64 {
        self.time(self.steps)
    }

    /// Index of the grid node closest to `t`, if within `1e-9 τ`.
    pub fn node_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.tau;
        let n = x.round();
        ((x - n).abs() < 1e-9 && n >= 0.0 && n as usize <= self.steps).then_some(n as usize)
    }
}

/// States `u^n` on an equidistant grid with cached `F(t_n, u^n)`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<Vec<f64>>,
    pub f_values: Vec<Vec<f64>>,
    pub order: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.grid.steps).map(|n| self.grid.time(n)).collect()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory holds at least u^0")
    }
}

/// One explicit Runge-Kutta step. `f0` may carry a cached `F(t, u)`.
pub fn rk_step(f: &dyn Rhs, t: f64, u: &[f64], tau: f64, family: Stepper) -> Result<Vec<f64>> {
    rk_step_cached(f, t, u, None, tau, family)
}

fn rk_step_cached(
    f: &dyn Rhs,
    t: f64,
    u: &[f64],
    f0: Option<&[f64]>,
    tau: f64,
    family: Stepper,
) -> Result<Vec<f64>> {
    if !(tau > 0.0) {
        return Err(Error::Config(format!("time step {tau} must be positive")));
    }
    let n = u.len();
    let stage = |idx: usize, t: f64, x: &[f64], out: &mut [f64]| {
        f.eval(t, x, out).map_err(|e| e.in_stage(idx))
    };
    let mut k1 = vec![0.0; n];
    match f0 {
        Some(v) => k1.copy_from_slice(v),
        None => stage(1, t, u, &mut k1)?,
    }
    let axpy = |a: f64, x: &[f64], y: &[f64]| -> Vec<f64> {
        y.iter().zip(x).map(|(yi, xi)| yi + a * xi).collect()
    };
    match family {
        Stepper::Rk1 => Ok(axpy(tau, &k1, u)),
        Stepper::Rk2Heun => {
            let u1 = axpy(tau, &k1, u);
            let mut k2 = vec![0.0; n];
            stage(2, t + tau, &u1, &mut k2)?;
            Ok((0..n).map(|i| u[i] + 0.5 * tau * (k1[i] + k2[i])).collect())
        }
        Stepper::Rk3Ssp => {
            let u1 = axpy(tau, &k1, u);
            let mut k = vec![0.0; n];
            stage(2, t + tau, &u1, &mut k)?;
            let u2: Vec<f64> = (0..n)
                .map(|i| 0.75 * u[i] + 0.25 * (u1[i] + tau * k[i]))
                .collect();
            stage(3, t + 0.5 * tau, &u2, &mut k)?;
            Ok((0..n)
                .map(|i| u[i] / 3.0 + 2.0 / 3.0 * (u2[i] + tau * k[i]))
                .collect())
        }
        Stepper::Rk4Classic => {
            let mut k2 = vec![0.0; n];
            let mut k3 = vec![0.0; n];
            let mut k4 = vec![0.0; n];
            stage(2, t + 0.5 * tau, &axpy(0.5 * tau, &k1, u), &mut k2)?;
            stage(3, t + 0.5 * tau, &axpy(0.5 * tau, &k2, u), &mut k3)?;
            stage(4, t + tau, &axpy(tau, &k3, u), &mut k4)?;
            Ok((0..n)
                .map(|i| u[i] + tau / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect())
        }
        Stepper::Ab2 | Stepper::Ab3 => Err(Error::Config(format!(
            "{} is a multi-step method",
            family.as_str()
        ))),
    }
}

/// Drives a stepper over a grid, handing each `(n, u^n, F(t_n, u^n))` to `visit`.
fn drive(
    f: &dyn Rhs,
    u0: &[f64],
    grid: &TimeGrid,
    stepper: Stepper,
    mut visit: impl FnMut(usize, &[f64], &[f64]),
) -> Result<()> {
    let n = u0.len();
    let mut u = u0.to_vec();
    let mut fu = vec![0.0; n];
    f.eval(grid.time(0), &u, &mut fu)
        .map_err(|e| e.in_step(0))?;
    visit(0, &u, &fu);
    // F values of previous steps, newest last, for Adams-Bashforth.
    let mut history: Vec<Vec<f64>> = Vec::new();
    let r = stepper.order();
    for step in 0..grid.steps {
        let t = grid.time(step);
        let next = if stepper.is_multistep() && step + 1 >= r {
            let tau = grid.tau;
            let coeffs: &[f64] = match stepper {
                Stepper::Ab2 => &[1.5, -0.5],
                _ => &[23.0 / 12.0, -16.0 / 12.0, 5.0 / 12.0],
            };
            let mut next = u.clone();
            for (j, c) in coeffs.iter().enumerate() {
                let fj: &[f64] = if j == 0 {
                    &fu
                } else {
                    &history[history.len() - j]
                };
                for i in 0..n {
                    next[i] += tau * c * fj[i];
                }
            }
            next
        } else {
            rk_step_cached(f, t, &u, Some(&fu), grid.tau, stepper.startup())
                .map_err(|e| e.in_step(step + 1))?
        };
        if stepper.is_multistep() {
            history.push(std::mem::take(&mut fu));
            if history.len() > 3 {
                history.remove(0);
            }
            fu = vec![0.0; n];
        }
        u = next;
        f.eval(grid.time(step + 1), &u, &mut fu)
            .map_err(|e| e.in_step(step + 1))?;
        visit(step + 1, &u, &fu);
    }
    Ok(())
}

/// Full trajectory with cached right-hand sides at every node.
pub fn evolve(f: &dyn Rhs, u0: &[f64], grid: &TimeGrid, stepper: Stepper) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(grid.steps + 1);
    let mut f_values = Vec::with_capacity(grid.steps + 1);
    drive(f, u0, grid, stepper, |_, u, fu| {
        states.push(u.to_vec());
        f_values.push(fu.to_vec());
    })?;
    Ok(Trajectory {
        grid: *grid,
        states,
        f_values,
        order: stepper.order(),
    })
}

/// Only the states at the requested node indices, in the order given.
pub fn evolve_to(
    f: &dyn Rhs,
    u0: &[f64],
    grid: &TimeGrid,
    stepper: Stepper,
    nodes: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![Vec::new(); nodes.len()];
    drive(f, u0, grid, stepper, |n, u, _| {
        for (slot, &want) in out.iter_mut().zip(nodes) {
            if want == n {
                *slot = u.to_vec();
            }
        }
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [Stepper; 6] = [
        Stepper::Rk1,
        Stepper::Rk2Heun,
        Stepper::Rk3Ssp,
        Stepper::Rk4Classic,
        Stepper::Ab2,
        Stepper::Ab3,
    ];

    fn decay(_t: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = -u[0];
        Ok(())
    }

    #[test]
    fn zero_rhs_is_identity() {
        let zero = |_t: f64, _u: &[f64], out: &mut [f64]| -> Result<()> {
            out.iter_mut().for_each(|v| *v = 0.0);
            Ok(())
        };
        for s in ALL.iter().filter(|s| !s.is_multistep()) {
            assert_eq!(
                rk_step(&zero, 0.0, &[1.5, -2.0], 0.1, *s).unwrap(),
                vec![1.5, -2.0]
            );
        }
    }

    #[test]
    fn constant_rhs_exact() {
        let one = |_t: f64, _u: &[f64], out: &mut [f64]| -> Result<()> {
            out[0] = 1.0;
            Ok(())
        };
        for s in ALL.iter().filter(|s| !s.is_multistep()) {
            let u = rk_step(&one, 0.3, &[2.0], 0.25, *s).unwrap();
            assert!((u[0] - 2.25).abs() < 1e-15);
        }
    }

    #[test]
    fn rk4_is_quartic_taylor_polynomial() {
        let growth = |_t: f64, u: &[f64], out: &mut [f64]| -> Result<()> {
            out[0] = u[0];
            Ok(())
        };
        let u = rk_step(&growth, 0.0, &[1.0], 0.1, Stepper::Rk4Classic).unwrap();
        let taylor = 1.0 + 0.1 + 0.005 + 1e-3 / 6.0 + 1e-4 / 24.0;
        assert!((u[0] - taylor).abs() < 1e-15);
    }

    #[test]
    fn empty_grid_keeps_initial_data() {
        let traj = evolve(
            &decay,
            &[1.0],
            &TimeGrid::new(0.0, 0.1, 0),
            Stepper::Rk4Classic,
        )
        .unwrap();
        assert_eq!(traj.states, vec![vec![1.0]]);
        assert_eq!(traj.f_values, vec![vec![-1.0]]);
    }

    #[test]
    fn rk4_exponential_decay() {
        let traj = evolve(
            &decay,
            &[1.0],
            &TimeGrid::new(0.0, 0.1, 10),
            Stepper::Rk4Classic,
        )
        .unwrap();
        // RK4 on u' = -u multiplies by the stability polynomial R(-τ) each step.
        let r: f64 = 1.0 - 0.1 + 0.005 - 1e-3 / 6.0 + 1e-4 / 24.0;
        assert!((traj.last()[0] - r.powi(10)).abs() < 1e-15);
        assert!((traj.last()[0] - (-1f64).exp()).abs() < 4e-7);
    }

    #[test]
    fn cached_f_values_are_fresh() {
        let f = |t: f64, u: &[f64], out: &mut [f64]| -> Result<()> {
            out[0] = -u[0] * u[0] + t.sin();
            Ok(())
        };
        for s in ALL {
            let traj = evolve(&f, &[1.0], &TimeGrid::new(0.0, 0.05, 12), s).unwrap();
            for n in 0..traj.len() {
                let mut fresh = [0.0];
                f(traj.grid.time(n), &traj.states[n], &mut fresh).unwrap();
                assert_eq!(fresh[0], traj.f_values[n][0]);
            }
        }
    }

    #[test]
    fn declared_orders_observed() {
        for s in ALL {
            let err = |steps: usize| {
                let traj = evolve(&decay, &[1.0], &TimeGrid::covering(0.0, 1.0, steps), s).unwrap();
                (traj.last()[0] - (-1f64).exp()).abs()
            };
            let errors: Vec<f64> = (0..6).map(|k| err(10 << k)).collect();
            let eoc = (errors[4] / errors[5]).log2();
            assert!((eoc - s.order() as f64).abs() < 0.2, "{s:?}: {eoc}");
        }
    }

    #[test]
    fn stage_errors_carry_indices() {
        let fail = |_t: f64, u: &[f64], out: &mut [f64]| -> Result<()> {
            if u[0] > 1.05 {
                return Err(Error::Config("blow-up".into()));
            }
            out[0] = 1.0;
            Ok(())
        };
        let err = evolve(&fail, &[1.0], &TimeGrid::new(0.0, 0.1, 5), Stepper::Rk2Heun).unwrap_err();
        match err {
            Error::Step { step: 1, source } => {
                assert!(matches!(*source, Error::Stage { stage: 2, .. }))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deterministic() {
        let f = |t: f64, u: &[f64], out: &mut [f64]| -> Result<()> {
            out[0] = -u[0].powi(3) + t.sin();
            Ok(())
        };
        let a = evolve(&f, &[1.0], &TimeGrid::new(0.0, 0.01, 100), Stepper::Ab3).unwrap();
        let b = evolve(&f, &[1.0], &TimeGrid::new(0.0, 0.01, 100), Stepper::Ab3).unwrap();
        assert_eq!(a.states, b.states);
        let only = evolve_to(
            &f,
            &[1.0],
            &TimeGrid::new(0.0, 0.01, 100),
            Stepper::Ab3,
            &[100, 50],
        )
        .unwrap();
        assert_eq!(only[0], a.states[100]);
        assert_eq!(only[1], a.states[50]);
    }
}
