use serde::{Deserialize, Serialize};

use super::report::eoc;
use crate::error::{Error, Result};
use crate::ode_recon::{
    ode_error_bound, reconstruct, residual_norms, sampled_lipschitz, DerivativeMode,
    OdeBoundReport, ReconSpec, ResidualNorms, TemporalRecon, TemporalSource,
};
use crate::time_integration::{evolve, Stepper, TimeGrid};

/// Scalar test problems on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OdeProblem {
    /// `u' = -u`.
    Decay,
    /// `u' = -u³ + sin t`.
    CubicForced,
}

impl OdeProblem {
    pub fn as_str(self) -> &'static str {
        match self {
            OdeProblem::Decay => "decay",
            OdeProblem::CubicForced => "cubic_forced",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "decay" => Some(OdeProblem::Decay),
            "cubic_forced" | "cubic" => Some(OdeProblem::CubicForced),
            _ => None,
        }
    }

    pub fn rhs(self, t: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = match self {
            OdeProblem::Decay => -u[0],
            OdeProblem::CubicForced => -u[0].powi(3) + t.sin(),
        };
        Ok(())
    }

    /// `∂_t F + ∂_u F · F`.
    pub fn second(self, t: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = match self {
            OdeProblem::Decay => u[0],
            OdeProblem::CubicForced => {
                let f = -u[0].powi(3) + t.sin();
                t.cos() - 3.0 * u[0] * u[0] * f
            }
        };
        Ok(())
    }

    pub fn exact(self, u0: f64, t: f64) -> Option<f64> {
        match self {
            OdeProblem::Decay => Some(u0 * (-t).exp()),
            OdeProblem::CubicForced => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeStudyConfig {
    pub problem: OdeProblem,
    pub u0: f64,
    pub t_end: f64,
    pub tau0: f64,
    /// Number of step sizes, the coarsest included.
    pub levels: usize,
    pub stepper: Stepper,
    pub recon: ReconSpec,
    /// Lipschitz constant of `F` in `u`; sampled along the trajectory
    /// (inflated by 10%) when absent.
    pub lipschitz: Option<f64>,
    /// Equidistant samples per step for sup-norms.
    pub samples: usize,
}

impl OdeStudyConfig {
    pub fn new(problem: OdeProblem, stepper: Stepper, recon: ReconSpec) -> Self {
        Self {
            problem,
            u0: 1.0,
            t_end: 1.0,
            tau0: 0.1,
            levels: 6,
            stepper,
            recon,
            lipschitz: match problem {
                OdeProblem::Decay => Some(1.0),
                OdeProblem::CubicForced => None,
            },
            samples: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeLevel {
    pub tau: f64,
    pub residual: ResidualNorms,
    /// Sampled `max_t |u(t) - û(t)|`.
    pub error_linf: f64,
    pub bound: OdeBoundReport,
    pub eoc_residual_linf: Option<f64>,
    pub eoc_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeStudyReport {
    pub config: OdeStudyConfig,
    pub levels: Vec<OdeLevel>,
}

impl OdeStudyReport {
    /// Whether both bounds dominate the measured error on every level.
    pub fn bounds_hold(&self) -> bool {
        self.levels
            .iter()
            .all(|l| l.error_linf <= l.bound.bound_linf && l.error_linf <= l.bound.bound_l2)
    }
}

pub fn run_ode_study(config: &OdeStudyConfig) -> Result<OdeStudyReport> {
    config.recon.validate()?;
    if config.levels == 0 || !(config.tau0 > 0.0) || !(config.t_end > 0.0) {
        return Err(Error::Config(
            "ODE study needs levels >= 1 and positive tau0, t_end".into(),
        ));
    }
    let problem = config.problem;
    let rhs = move |t: f64, u: &[f64], out: &mut [f64]| problem.rhs(t, u, out);
    let second = move |t: f64, u: &[f64], out: &mut [f64]| problem.second(t, u, out);
    let steps0 = (config.t_end / config.tau0).round() as usize;

    // Reference for problems without a closed form: RK4 on a 16× finer grid,
    // interpolated with exact-derivative quintic Hermite pieces.
    let finest_steps = steps0 << (config.levels - 1);
    let reference = match problem.exact(config.u0, 0.0) {
        Some(_) => None,
        None => {
            let grid = TimeGrid::covering(0.0, config.t_end, finest_steps * 16);
            let traj = evolve(&rhs, &[config.u0], &grid, Stepper::Rk4Classic)?;
            let spec = ReconSpec::new(0, 1, 1).with_mode(DerivativeMode::Exact);
            Some(reconstruct(&traj, spec, Some(&rhs), Some(&second))?)
        }
    };
    let exact = |t: f64| -> Result<f64> {
        match &reference {
            Some(r) => Ok(r.value(t)?[0]),
            None => Ok(problem.exact(config.u0, t).expect("closed form")),
        }
    };

    let mut levels = Vec::with_capacity(config.levels);
    for level in 0..config.levels {
        let steps = steps0 << level;
        let grid = TimeGrid::covering(0.0, config.t_end, steps);
        let traj = evolve(&rhs, &[config.u0], &grid, config.stepper)?;
        let recon = TemporalRecon::new(&traj, config.recon, Some(&rhs), Some(&second))?;
        let poly = recon.materialize()?;
        let residual = residual_norms(&poly, &rhs, None, config.samples)?;
        let mut error_linf: f64 = 0.0;
        let n = config.samples.max(2);
        for step in 0..steps {
            let piece = &poly.intervals[step];
            for k in 0..n {
                let t = grid.time(step) + grid.tau * k as f64 / (n - 1) as f64;
                error_linf = error_linf.max((piece.value(t)[0] - exact(t)?).abs());
            }
        }
        let lipschitz = match config.lipschitz {
            Some(l) => l,
            None => 1.1 * sampled_lipschitz(&rhs, &traj)?,
        };
        let initial_error = (poly.value(0.0)?[0] - config.u0).abs();
        let bound = ode_error_bound(
            residual.l1,
            residual.l2,
            lipschitz,
            config.t_end,
            initial_error,
        );
        levels.push(OdeLevel {
            tau: grid.tau,
            residual,
            error_linf,
            bound,
            eoc_residual_linf: None,
            eoc_error: None,
        });
    }
    let taus: Vec<f64> = levels.iter().map(|l| l.tau).collect();
    let res: Vec<Option<f64>> = levels.iter().map(|l| Some(l.residual.linf)).collect();
    let errs: Vec<Option<f64>> = levels.iter().map(|l| Some(l.error_linf)).collect();
    for (l, (r, e)) in levels
        .iter_mut()
        .zip(eoc(&taus, &res).into_iter().zip(eoc(&taus, &errs)))
    {
        l.eoc_residual_linf = r.eoc;
        l.eoc_error = e.eoc;
    }
    Ok(OdeStudyReport {
        config: *config,
        levels,
    })
}
