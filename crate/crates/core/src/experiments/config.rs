use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::EstimatorSettings;
use crate::flux::{FluxKind, FluxSpec};
use crate::ode_recon::ReconSpec;
use crate::spacetime::Sampling;
use crate::system::{Euler, SystemKind};
use crate::time_integration::Stepper;

/// Default cap on `max wave speed · τ / h`.
pub const DEFAULT_CFL_CAP: f64 = 0.13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// `mean - amplitude · cos(wavenumber · π x)`.
    Cosine {
        mean: f64,
        amplitude: f64,
        #[serde(default = "one")]
        wavenumber: f64,
    },
    /// `mean + amplitude · sin(wavenumber · π x)`.
    Sine {
        mean: f64,
        amplitude: f64,
        #[serde(default = "one")]
        wavenumber: f64,
    },
    /// A constant state, in conservative variables.
    Constant { state: Vec<f64> },
    /// Euler data with constant density and velocity and pressure
    /// `p_mean + p_amplitude · sin(wavenumber · π x)`.
    PressureWave {
        density: f64,
        velocity: f64,
        p_mean: f64,
        p_amplitude: f64,
        #[serde(default = "one")]
        wavenumber: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl InitialCondition {
    pub fn eval(&self, system: &SystemKind, x: f64, out: &mut [f64]) {
        match self {
            InitialCondition::Cosine {
                mean,
                amplitude,
                wavenumber,
            } => out[0] = mean - amplitude * (wavenumber * PI * x).cos(),
            InitialCondition::Sine {
                mean,
                amplitude,
                wavenumber,
            } => out[0] = mean + amplitude * (wavenumber * PI * x).sin(),
            InitialCondition::Constant { state } => out[..state.len()].copy_from_slice(state),
            InitialCondition::PressureWave {
                density,
                velocity,
                p_mean,
                p_amplitude,
                wavenumber,
            } => {
                let gamma = match system {
                    SystemKind::Euler { gamma } => *gamma,
                    _ => 1.4,
                };
                let p = p_mean + p_amplitude * (wavenumber * PI * x).sin();
                out[..3].copy_from_slice(&Euler { gamma }.from_primitive(*density, *velocity, p));
            }
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            InitialCondition::Cosine { .. } | InitialCondition::Sine { .. } => Some(1),
            InitialCondition::Constant { state } => Some(state.len()),
            InitialCondition::PressureWave { .. } => Some(3),
        }
    }
}

/// `u0(x - a t)` on a periodic domain.
pub fn exact_advection(
    u0: impl Fn(f64) -> f64,
    speed: f64,
    domain: (f64, f64),
    t: f64,
    x: f64,
) -> f64 {
    let (a, b) = domain;
    let len = b - a;
    let y = (x - speed * t - a).rem_euclid(len) + a;
    u0(y)
}

/// Flux settings; `lambda` left unset is chosen per level: `τ/h` for the
/// Richtmyer kinds and half the largest initial wave speed for `llf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxConfig {
    pub kind: FluxKind,
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "default_nu")]
    pub nu: u32,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "one")]
    pub chi_width: f64,
}

fn default_nu() -> u32 {
    1
}

impl FluxConfig {
    pub fn new(kind: FluxKind) -> Self {
        Self {
            kind,
            mu: 0.0,
            nu: 1,
            lambda: None,
            chi_width: 1.0,
        }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn spec(&self, tau: f64, h: f64, max_speed: f64) -> FluxSpec {
        let lambda = self.lambda.unwrap_or(match self.kind {
            FluxKind::Llf => 0.5 * max_speed,
            _ => tau / h,
        });
        FluxSpec {
            kind: self.kind,
            lambda,
            mu: self.mu,
            nu: self.nu,
            chi_width: self.chi_width,
        }
    }
}

/// Reference solutions for problems without a closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConfig {
    /// Refinement of the finest level in `h`, and in `τ` unless
    /// `time_refine` is set.
    pub refine: usize,
    /// Separate refinement in `τ`; the raised degree may need a smaller
    /// CFL number than the runs themselves.
    #[serde(default)]
    pub time_refine: Option<usize>,
    /// Degree increase of the reference space.
    #[serde(default = "default_degree_increase")]
    pub degree_increase: usize,
}

fn default_degree_increase() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub name: String,
    pub system: SystemKind,
    pub initial: InitialCondition,
    pub domain: (f64, f64),
    pub t_end: f64,
    pub q: usize,
    pub stepper: Stepper,
    pub recon: ReconSpec,
    pub flux: FluxConfig,
    /// Number of discretization levels (the coarsest counts).
    pub levels: usize,
    pub h0: f64,
    pub tau0: f64,
    pub checkpoints: Vec<f64>,
    #[serde(default = "default_cfl_cap")]
    pub cfl_cap: f64,
    #[serde(default)]
    pub reference: Option<ReferenceConfig>,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub estimator: EstimatorSettings,
    /// Run levels concurrently.
    #[serde(default = "yes")]
    pub parallel: bool,
}

fn default_cfl_cap() -> f64 {
    DEFAULT_CFL_CAP
}

fn yes() -> bool {
    true
}

/// Temporal reconstruction whose degree matches a method of order `order`.
pub fn matched_recon(order: usize) -> ReconSpec {
    match order {
        0..=2 => ReconSpec::new(0, 0, -1),
        3 => ReconSpec::new(0, 0, 0),
        _ => ReconSpec::new(1, 0, -1),
    }
}

/// Runge-Kutta method of order `min(q + 1, 4)`.
pub fn matched_stepper(q: usize) -> Stepper {
    match q {
        0 => Stepper::Rk1,
        1 => Stepper::Rk2Heun,
        2 => Stepper::Rk3Ssp,
        _ => Stepper::Rk4Classic,
    }
}

impl RunConfig {
    /// Linear advection with speed 8 of `1 - cos(πx)/2` on `[0, 2]` up to `T = 0.4`.
    pub fn advection(q: usize) -> Self {
        let stepper = matched_stepper(q);
        Self {
            name: "advection".into(),
            system: SystemKind::Advection { speed: 8.0 },
            initial: InitialCondition::Cosine {
                mean: 1.0,
                amplitude: 0.5,
                wavenumber: 1.0,
            },
            domain: (0.0, 2.0),
            t_end: 0.4,
            q,
            stepper,
            recon: matched_recon(stepper.order()),
            flux: FluxConfig::new(FluxKind::RichtmyerVisc).with_mu(0.5),
            levels: 5,
            h0: 0.125,
            tau0: 0.002,
            checkpoints: vec![0.1, 0.2, 0.3, 0.4],
            cfl_cap: DEFAULT_CFL_CAP,
            reference: None,
            sampling: Sampling::default(),
            estimator: EstimatorSettings::default(),
            parallel: true,
        }
    }

    /// Euler equations, `ρ = 1`, `u = 1`, `p = 1.3 + sin(πx)/2` on `[0, 2]`, up to `T = 1`.
    pub fn euler(q: usize) -> Self {
        let stepper = matched_stepper(q);
        Self {
            name: "euler".into(),
            system: SystemKind::Euler { gamma: 1.4 },
            initial: InitialCondition::PressureWave {
                density: 1.0,
                velocity: 1.0,
                p_mean: 1.3,
                p_amplitude: 0.5,
                wavenumber: 1.0,
            },
            domain: (0.0, 2.0),
            t_end: 1.0,
            q,
            stepper,
            recon: matched_recon(stepper.order()),
            flux: FluxConfig::new(FluxKind::RichtmyerVisc),
            levels: 4,
            h0: 0.125,
            tau0: 0.008,
            checkpoints: vec![0.6, 0.8, 1.0],
            cfl_cap: 0.2,
            reference: Some(ReferenceConfig {
                refine: 4,
                time_refine: Some(if q >= 3 { 8 } else { 4 }),
                degree_increase: 1,
            }),
            sampling: Sampling::default(),
            estimator: EstimatorSettings::default(),
            parallel: true,
        }
    }

    /// Burgers with `0.5 + sin(πx)` on `[0, 2]`, run past the shock time `1/π`.
    pub fn burgers() -> Self {
        Self {
            name: "burgers".into(),
            system: SystemKind::Burgers,
            initial: InitialCondition::Sine {
                mean: 0.5,
                amplitude: 1.0,
                wavenumber: 1.0,
            },
            domain: (0.0, 2.0),
            t_end: 0.45,
            q: 1,
            stepper: Stepper::Rk2Heun,
            recon: ReconSpec::new(0, 0, -1),
            flux: FluxConfig::new(FluxKind::RichtmyerVisc).with_mu(0.5),
            levels: 3,
            h0: 2.0 / 32.0,
            tau0: 0.005,
            checkpoints: vec![0.15, 0.3, 0.45],
            cfl_cap: DEFAULT_CFL_CAP,
            reference: None,
            sampling: Sampling::default(),
            estimator: EstimatorSettings::default(),
            parallel: true,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn u0(&self, x: f64, out: &mut [f64]) {
        self.initial.eval(&self.system, x, out)
    }

    /// Largest wave speed of the initial data, sampled on a fine grid.
    pub fn initial_max_speed(&self) -> f64 {
        let sys = self.system.build();
        let (a, b) = self.domain;
        let mut u = vec![0.0; sys.dim()];
        (0..=1000)
            .map(|k| {
                self.u0(a + (b - a) * k as f64 / 1000.0, &mut u);
                sys.max_speed(&u)
            })
            .fold(0.0, f64::max)
    }

    pub fn cfl(&self) -> f64 {
        self.initial_max_speed() * self.tau0 / self.h0
    }

    /// Exact solution at `(t, x)` when one is known.
    pub fn exact(&self, t: f64, x: f64, out: &mut [f64]) -> bool {
        match (&self.system, &self.initial) {
            (_, InitialCondition::Constant { state }) => {
                out[..state.len()].copy_from_slice(state);
                true
            }
            (SystemKind::Advection { speed }, _) => {
                out[0] = exact_advection(
                    |y| {
                        let mut v = [0.0];
                        self.u0(y, &mut v);
                        v[0]
                    },
                    *speed,
                    self.domain,
                    t,
                    x,
                );
                true
            }
            _ => false,
        }
    }

    pub fn has_exact(&self) -> bool {
        matches!(self.initial, InitialCondition::Constant { .. })
            || matches!(self.system, SystemKind::Advection { .. })
    }

    /// Cells of the coarsest mesh.
    pub fn cells0(&self) -> Result<usize> {
        let n = (self.domain.1 - self.domain.0) / self.h0;
        let r = n.round();
        if (n - r).abs() > 1e-9 * n.max(1.0) || r < 2.0 {
            return Err(Error::Config(format!(
                "h0 = {} does not divide the domain into at least 2 cells",
                self.h0
            )));
        }
        Ok(r as usize)
    }

    /// Steps of the coarsest grid.
    pub fn steps0(&self) -> Result<usize> {
        let n = self.t_end / self.tau0;
        let r = n.round();
        if (n - r).abs() > 1e-9 * n.max(1.0) || r < 1.0 {
            return Err(Error::Config(format!(
                "tau0 = {} does not divide T = {}",
                self.tau0, self.t_end
            )));
        }
        Ok(r as usize)
    }

    /// Checkpoint node indices on the coarsest grid.
    pub fn checkpoint_nodes0(&self) -> Result<Vec<usize>> {
        self.checkpoints
            .iter()
            .map(|&c| {
                let n = c / self.tau0;
                let r = n.round();
                if (n - r).abs() > 1e-9 * n.max(1.0) || c <= 0.0 || c > self.t_end + 1e-12 {
                    Err(Error::Config(format!(
                        "checkpoint {c} is not a node of the coarsest time grid in (0, {}]",
                        self.t_end
                    )))
                } else {
                    Ok(r as usize)
                }
            })
            .collect()
    }

    /// Rejects inconsistent configurations before any computation.
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::Config("at least one level required".into()));
        }
        if !(self.t_end > 0.0 && self.tau0 > 0.0 && self.h0 > 0.0) {
            return Err(Error::Config("t_end, tau0 and h0 must be positive".into()));
        }
        if self.initial.dim() != Some(self.system.dim()) {
            return Err(Error::Config(format!(
                "initial condition does not match the {}-component system",
                self.system.dim()
            )));
        }
        self.cells0()?;
        self.steps0()?;
        self.checkpoint_nodes0()?;
        self.recon.validate()?;
        self.flux.spec(self.tau0, self.h0, 1.0).validate()?;
        let sys = self.system.build();
        let (a, b) = self.domain;
        let mut u = vec![0.0; sys.dim()];
        for k in 0..=100 {
            self.u0(a + (b - a) * k as f64 / 100.0, &mut u);
            if !sys.admissible(&u) {
                return Err(Error::Config(format!("inadmissible initial state {u:?}")));
            }
        }
        let cfl = self.cfl();
        if cfl > self.cfl_cap * (1.0 + 1e-9) {
            return Err(Error::Config(format!(
                "CFL number {cfl:.4} exceeds the cap {}",
                self.cfl_cap
            )));
        }
        let steps = self.steps0()?;
        if steps < self.recon.min_steps() {
            return Err(Error::Config(format!(
                "{} needs at least {} steps",
                self.recon.label(),
                self.recon.min_steps()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn advection_exact_examples() {
        let u0 = |x: f64| 1.0 - 0.5 * (PI * x).cos();
        assert_eq!(exact_advection(u0, 8.0, (0.0, 2.0), 0.0, 0.7), u0(0.7));
        assert!((exact_advection(u0, 8.0, (0.0, 2.0), 0.25, 0.7) - u0(0.7)).abs() < 1e-14);
        assert!((exact_advection(u0, 8.0, (0.0, 2.0), 0.05, 0.9) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn presets_validate() {
        for q in 0..=3 {
            RunConfig::advection(q).validate().unwrap();
            RunConfig::euler(q).validate().unwrap();
        }
        RunConfig::burgers().validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let c = RunConfig::euler(2);
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn cfl_guard() {
        let mut c = RunConfig::advection(1);
        c.tau0 = 0.02;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }
}
