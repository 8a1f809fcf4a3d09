//! Piecewise polynomial reconstruction in time of an ODE trajectory.
//!
//! `H(p, d, r)` matches, on `[t_n, t_{n+1}]`, the value and `d + 1`
//! derivatives at the past nodes `t_{n-p}, …, t_n` and the value and `r + 1`
//! derivatives at `t_{n+1}`. Its degree is `(d + 2)(p + 1) + r + 1`.
//! `r = -1` keeps only the value at `t_{n+1}`.

mod derivatives;
mod hermite;
mod residual;

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time_integration::{Rhs, TimeGrid, Trajectory};

pub use derivatives::{f2_backward_fd, f2_directional, f2_from_history};
pub use hermite::{divided_difference, hermite_interval, HermiteNode, IntervalPoly};
pub use residual::{
    ode_error_bound, residual_norms, sampled_lipschitz, OdeBoundReport, ResidualNorms,
    TemporalResidual,
};

/// How second time derivatives `∂_t F(t, u) + DF(t, u) F(t, u)` are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    /// A user-supplied callable.
    Exact,
    #[default]
    Directional,
    BackwardFd,
}

impl DerivativeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DerivativeMode::Exact => "exact",
            DerivativeMode::Directional => "directional",
            DerivativeMode::BackwardFd => "backward_fd",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "exact" | "exact_callable" => DerivativeMode::Exact,
            "directional" => DerivativeMode::Directional,
            "backward_fd" | "fd" => DerivativeMode::BackwardFd,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconSpec {
    pub p: usize,
    pub d: usize,
    pub r: i32,
    #[serde(default)]
    pub mode: DerivativeMode,
}

impl ReconSpec {
    pub fn new(p: usize, d: usize, r: i32) -> Self {
        Self {
            p,
            d,
            r,
            mode: DerivativeMode::default(),
        }
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn degree(&self) -> usize {
        (self.d + 2) * (self.p + 1) + (self.r + 1) as usize
    }

    /// Whether second derivatives enter the interpolation conditions.
    pub fn needs_second(&self) -> bool {
        self.d >= 1 || self.r >= 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.d > 1 || !(-1..=1).contains(&self.r) {
            return Err(Error::Config(format!(
                "unsupported reconstruction H({},{},{}): need d <= 1 and -1 <= r <= 1",
                self.p, self.d, self.r
            )));
        }
        Ok(())
    }

    /// Fewest trajectory steps the reconstruction can be built from.
    pub fn min_steps(&self) -> usize {
        let base = self.p + 1;
        if self.needs_second() && self.mode == DerivativeMode::BackwardFd {
            base.max(5)
        } else {
            base
        }
    }

    /// Parses `H(p,d,r)` or `p,d,r`.
    pub fn parse(s: &str) -> Option<Self> {
        let inner = s
            .trim()
            .trim_start_matches(['H', 'h'])
            .trim_start_matches('(')
            .trim_end_matches(')');
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return None;
        }
        Some(Self::new(
            parts[0].parse().ok()?,
            parts[1].parse().ok()?,
            parts[2].parse().ok()?,
        ))
    }

    pub fn label(&self) -> String {
        format!("H({},{},{})", self.p, self.d, self.r)
    }
}

/// Exact second time derivative `∂_t F + DF·F` for [`DerivativeMode::Exact`].
pub type SecondDerivative<'a> = &'a dyn Fn(f64, &[f64], &mut [f64]) -> Result<()>;

/// Anything that yields the reconstruction on each step interval.
pub trait TemporalSource {
    fn grid(&self) -> TimeGrid;

    fn interval(&self, n: usize) -> Result<Cow<'_, IntervalPoly>>;

    /// Interval containing `t`; breakpoints belong to the interval on their right.
    fn locate(&self, t: f64) -> Result<usize> {
        let grid = self.grid();
        let lo = grid.t0;
        let hi = grid.end();
        let slack = 1e-12 * grid.tau.max(f64::MIN_POSITIVE);
        if !(t >= lo - slack && t <= hi + slack) || grid.steps == 0 {
            return Err(Error::Domain { t, lo, hi });
        }
        let n = ((t - lo) / grid.tau).floor().max(0.0) as usize;
        Ok(n.min(grid.steps - 1))
    }

    fn value(&self, t: f64) -> Result<Vec<f64>> {
        let n = self.locate(t)?;
        Ok(self.interval(n)?.value(t))
    }

    fn derivative(&self, t: f64) -> Result<Vec<f64>> {
        let n = self.locate(t)?;
        Ok(self.interval(n)?.derivative(t))
    }
}

/// Lazily built reconstruction over a trajectory; intervals are assembled on
/// request, so memory stays proportional to the trajectory itself.
pub struct TemporalRecon<'a> {
    traj: &'a Trajectory,
    spec: ReconSpec,
    second: Option<Vec<Vec<f64>>>,
}

impl<'a> TemporalRecon<'a> {
    /// `rhs` is needed for directional second derivatives and `exact` for
    /// [`DerivativeMode::Exact`]; both are ignored when `d = 0` and `r <= 0`.
    pub fn new(
        traj: &'a Trajectory,
        spec: ReconSpec,
        rhs: Option<&dyn Rhs>,
        exact: Option<SecondDerivative<'_>>,
    ) -> Result<Self> {
        spec.validate()?;
        if traj.grid.steps < spec.min_steps() {
            return Err(Error::StartUp(format!(
                "{} needs at least {} steps, trajectory has {}",
                spec.label(),
                spec.min_steps(),
                traj.grid.steps
            )));
        }
        let second = if spec.needs_second() {
            let tau = traj.grid.tau;
            Some(match spec.mode {
                DerivativeMode::BackwardFd => f2_from_history(&traj.f_values, tau)?,
                DerivativeMode::Directional => {
                    let rhs = rhs.ok_or_else(|| {
                        Error::Config("directional derivatives need the right-hand side".into())
                    })?;
                    (0..traj.len())
                        .map(|n| {
                            f2_directional(
                                rhs,
                                traj.grid.time(n),
                                &traj.states[n],
                                Some(&traj.f_values[n]),
                                tau,
                            )
                        })
                        .collect::<Result<_>>()?
                }
                DerivativeMode::Exact => {
                    let exact = exact.ok_or_else(|| {
                        Error::Config("exact mode needs a second-derivative callable".into())
                    })?;
                    (0..traj.len())
                        .map(|n| {
                            let mut out = vec![0.0; traj.states[n].len()];
                            exact(traj.grid.time(n), &traj.states[n], &mut out)?;
                            Ok(out)
                        })
                        .collect::<Result<_>>()?
                }
            })
        } else {
            None
        };
        Ok(Self { traj, spec, second })
    }

    pub fn spec(&self) -> &ReconSpec {
        &self.spec
    }

    pub fn trajectory(&self) -> &Trajectory {
        self.traj
    }

    pub fn degree(&self) -> usize {
        self.spec.degree()
    }

    fn node_data(&self, j: usize, count: usize) -> HermiteNode<'_> {
        let mut derivs: Vec<&[f64]> = vec![&self.traj.states[j]];
        if count >= 2 {
            derivs.push(&self.traj.f_values[j]);
        }
        if count >= 3 {
            derivs.push(&self.second.as_ref().expect("second derivatives prepared")[j]);
        }
        HermiteNode {
            t: self.traj.grid.time(j),
            derivs,
        }
    }

    /// The polynomial on `[t_n, t_{n+1}]`. Intervals before `t_p` reuse the
    /// polynomial built on `t_0, …, t_{p+1}`, normalized on `[t_p, t_{p+1}]`.
    pub fn build_interval(&self, n: usize) -> Result<IntervalPoly> {
        let grid = &self.traj.grid;
        if n >= grid.steps {
            return Err(Error::Domain {
                t: grid.time(n),
                lo: grid.t0,
                hi: grid.end(),
            });
        }
        let base = n.max(self.spec.p);
        let mut nodes = Vec::with_capacity(self.spec.p + 2);
        for j in (base - self.spec.p..=base).rev() {
            nodes.push(self.node_data(j, self.spec.d + 2));
        }
        nodes.push(self.node_data(base + 1, (self.spec.r + 2) as usize));
        hermite_interval(grid.time(base), grid.time(base + 1), &nodes)
            .map_err(|e| Error::Reconstruction(format!("interval {n}: {e}")))
    }

    /// All intervals, built eagerly.
    pub fn materialize(&self) -> Result<TemporalPoly> {
        let intervals = (0..self.traj.grid.steps)
            .map(|n| self.build_interval(n))
            .collect::<Result<_>>()?;
        Ok(TemporalPoly {
            grid: self.traj.grid,
            intervals,
        })
    }
}

impl TemporalSource for TemporalRecon<'_> {
    fn grid(&self) -> TimeGrid {
        self.traj.grid
    }

    fn interval(&self, n: usize) -> Result<Cow<'_, IntervalPoly>> {
        self.build_interval(n).map(Cow::Owned)
    }
}

/// Reconstruction with every interval stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalPoly {
    pub grid: TimeGrid,
    pub intervals: Vec<IntervalPoly>,
}

impl TemporalPoly {
    pub fn degree(&self) -> usize {
        self.intervals.first().map_or(0, IntervalPoly::degree)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        (0..=self.grid.steps).map(|n| self.grid.time(n)).collect()
    }
}

impl TemporalSource for TemporalPoly {
    fn grid(&self) -> TimeGrid {
        self.grid
    }

    fn interval(&self, n: usize) -> Result<Cow<'_, IntervalPoly>> {
        self.intervals
            .get(n)
            .map(Cow::Borrowed)
            .ok_or(Error::Domain {
                t: self.grid.time(n),
                lo: self.grid.t0,
                hi: self.grid.end(),
            })
    }
}

/// Convenience: materialized reconstruction of a trajectory.
pub fn reconstruct(
    traj: &Trajectory,
    spec: ReconSpec,
    rhs: Option<&dyn Rhs>,
    exact: Option<SecondDerivative<'_>>,
) -> Result<TemporalPoly> {
    TemporalRecon::new(traj, spec, rhs, exact)?.materialize()
}
