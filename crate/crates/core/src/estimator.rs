//! Relative-entropy a posteriori bound for the squared L² error at grid times.
//!
//! With constants `C_η̲ ≤ Hη ≤ C_η̄` and `|vᵀ Hg v| ≤ C_ḡ |v|²` on a compact
//! box containing the reconstruction,
//!
//! ```text
//! ‖u(t_n) - u_h^n‖² ≤ 2 ‖û^st(t_n) - u_h^n‖²
//!     + 2/C_η̲ (‖R^st‖² + C_η̄ ‖u_0 - û^st(0)‖²)
//!       · exp(∫_0^{t_n} (C_η̄ C_ḡ ‖∂_x û^st‖_∞ + C_η̄²) / C_η̲ ds).
//! ```

use serde::{Deserialize, Serialize};

use crate::dg::DgFunction;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, Mat, MAX_DIM, ZERO};
use crate::quadrature::gauss_rule;
use crate::spacetime::{raise_degree, ResidualField, SlabStats};
use crate::system::{System, SystemKind};
use crate::time_integration::Trajectory;

/// Strictly convex entropy `η` with entropy flux `q`, `Dη·Dg = Dq`.
pub trait EntropyPair: Send + Sync {
    fn dim(&self) -> usize;

    fn eta(&self, u: &[f64]) -> f64;

    fn entropy_flux(&self, u: &[f64]) -> f64;

    fn gradient(&self, u: &[f64], out: &mut [f64]);

    /// Hessian of `η`; defaults to central differences of the gradient.
    fn hessian(&self, u: &[f64]) -> Mat {
        let m = self.dim();
        let mut hess = ZERO;
        let mut x = [0.0; MAX_DIM];
        let mut gp = [0.0; MAX_DIM];
        let mut gm = [0.0; MAX_DIM];
        for j in 0..m {
            let eps = 1e-6 * u[j].abs().max(1.0);
            x[..m].copy_from_slice(&u[..m]);
            x[j] = u[j] + eps;
            self.gradient(&x[..m], &mut gp);
            x[j] = u[j] - eps;
            self.gradient(&x[..m], &mut gm);
            for i in 0..m {
                hess[i][j] = (gp[i] - gm[i]) / (2.0 * eps);
            }
        }
        for i in 0..m {
            for j in i + 1..m {
                let s = 0.5 * (hess[i][j] + hess[j][i]);
                hess[i][j] = s;
                hess[j][i] = s;
            }
        }
        hess
    }
}

/// `η(u) = u²/2` for scalar laws with flux derivative `g'`.
pub struct QuadraticEntropy {
    kind: SystemKind,
}

impl EntropyPair for QuadraticEntropy {
    fn dim(&self) -> usize {
        1
    }

    fn eta(&self, u: &[f64]) -> f64 {
        0.5 * u[0] * u[0]
    }

    fn entropy_flux(&self, u: &[f64]) -> f64 {
        match self.kind {
            SystemKind::Advection { speed } => 0.5 * speed * u[0] * u[0],
            _ => u[0].powi(3) / 3.0,
        }
    }

    fn gradient(&self, u: &[f64], out: &mut [f64]) {
        out[0] = u[0];
    }

    fn hessian(&self, _u: &[f64]) -> Mat {
        let mut h = ZERO;
        h[0][0] = 1.0;
        h
    }
}

/// `η = -ρ s / (γ - 1)` with `s = ln(p ρ^{-γ})` and `q = u η`.
pub struct EulerEntropy {
    pub gamma: f64,
}

impl EulerEntropy {
    fn primitive(&self, u: &[f64]) -> (f64, f64, f64) {
        let rho = u[0];
        let vel = u[1] / rho;
        let p = (self.gamma - 1.0) * (u[2] - 0.5 * rho * vel * vel);
        (rho, vel, p)
    }

    fn specific_entropy(&self, rho: f64, p: f64) -> f64 {
        p.ln() - self.gamma * rho.ln()
    }
}

impl EntropyPair for EulerEntropy {
    fn dim(&self) -> usize {
        3
    }

    fn eta(&self, u: &[f64]) -> f64 {
        let (rho, _, p) = self.primitive(u);
        -rho * self.specific_entropy(rho, p) / (self.gamma - 1.0)
    }

    fn entropy_flux(&self, u: &[f64]) -> f64 {
        let (_, vel, _) = self.primitive(u);
        vel * self.eta(u)
    }

    fn gradient(&self, u: &[f64], out: &mut [f64]) {
        let g = self.gamma;
        let (rho, vel, p) = self.primitive(u);
        let s = self.specific_entropy(rho, p);
        out[0] = (g - s) / (g - 1.0) - rho * vel * vel / (2.0 * p);
        out[1] = rho * vel / p;
        out[2] = -rho / p;
    }
}

pub fn builtin_entropy(kind: &SystemKind) -> Box<dyn EntropyPair> {
    match *kind {
        SystemKind::Euler { gamma } => Box::new(EulerEntropy { gamma }),
        other => Box::new(QuadraticEntropy { kind: other }),
    }
}

/// Componentwise bounds `lo ≤ u ≤ hi`, optionally intersected with
/// `positivity(u) ≥ floor`. The positivity functional is concave, so the set
/// stays compact and convex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default)]
    pub floor: Option<f64>,
}

impl CompactBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.iter().zip(&hi).any(|(a, b)| !(a <= b)) {
            return Err(Error::Config(format!("empty box [{lo:?}, {hi:?}]")));
        }
        Ok(Self {
            lo,
            hi,
            floor: None,
        })
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = Some(floor);
        self
    }

    /// Sampled extremes widened by `pad` times the range on each side.
    pub fn around(min: &[f64], max: &[f64], pad: f64) -> Result<Self> {
        let mut lo = Vec::with_capacity(min.len());
        let mut hi = Vec::with_capacity(min.len());
        for (&a, &b) in min.iter().zip(max) {
            let range = (b - a).max(1e-8 * a.abs().max(b.abs()).max(1.0));
            lo.push(a - pad * range);
            hi.push(b + pad * range);
        }
        Self::new(lo, hi)
    }

    /// Closed-box membership of the componentwise bounds with relative
    /// slack `tol`.
    pub fn contains(&self, u: &[f64], tol: f64) -> bool {
        u.iter().enumerate().all(|(c, &v)| {
            let slack = tol * (self.hi[c] - self.lo[c]).max(1.0);
            v >= self.lo[c] - slack && v <= self.hi[c] + slack
        })
    }

    /// Whether a sampled lower bound of the positivity functional respects
    /// the floor.
    pub fn floor_respected(&self, min_positivity: Option<f64>, tol: f64) -> bool {
        match (self.floor, min_positivity) {
            (Some(f), Some(p)) => p >= f - tol * f.abs().max(1.0),
            _ => true,
        }
    }

    /// Full membership, floor included.
    pub fn contains_state(&self, sys: &dyn System, u: &[f64], tol: f64) -> bool {
        self.contains(u, tol) && self.floor_respected(sys.positivity(u), tol)
    }

    fn corners(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        let m = self.lo.len();
        (0..1usize << m).map(move |mask| {
            (0..m)
                .map(|c| {
                    if mask >> c & 1 == 1 {
                        self.hi[c]
                    } else {
                        self.lo[c]
                    }
                })
                .collect()
        })
    }

    /// Without a floor: admissibility at every corner, sufficient for the
    /// built-in systems as their admissible sets are cut out by concave
    /// constraints. With a floor: admissibility of every grid sample that
    /// meets the floor, and at least one such sample.
    pub fn admissible_for(&self, sys: &dyn System, resolution: usize) -> bool {
        if self.floor.is_none() {
            return self.corners().all(|c| sys.admissible(&c));
        }
        let mut any = false;
        for u in self.grid(resolution) {
            if self.floor_respected(sys.positivity(&u), 0.0) {
                if !sys.admissible(&u) {
                    return false;
                }
                any = true;
            }
        }
        any
    }

    /// `resolution` points per axis, corners included; the floor is not
    /// applied.
    pub fn grid(&self, resolution: usize) -> Vec<Vec<f64>> {
        let m = self.lo.len();
        let r = resolution.max(2);
        let total = r.pow(m as u32);
        (0..total)
            .map(|mut idx| {
                (0..m)
                    .map(|c| {
                        let k = idx % r;
                        idx /= r;
                        self.lo[c] + (self.hi[c] - self.lo[c]) * k as f64 / (r - 1) as f64
                    })
                    .collect()
            })
            .collect()
    }

    /// Grid samples inside the set, floor included.
    pub fn samples(&self, sys: &dyn System, resolution: usize) -> Vec<Vec<f64>> {
        self.grid(resolution)
            .into_iter()
            .filter(|u| self.floor_respected(sys.positivity(u), 0.0))
            .collect()
    }
}

/// Outcome of checking sampled reconstruction values against a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCheck {
    pub inside: bool,
    /// `(t, x, state)` of the first sample outside.
    pub violation: Option<(f64, f64, Vec<f64>)>,
}

const BOX_TOL: f64 = 1e-12;

/// Samples `u` at the quadrature points, interfaces and an equidistant
/// per-cell grid; `t` only labels the result.
pub fn verify_function_in_box(
    u: &DgFunction,
    t: f64,
    bx: &CompactBox,
    sys: &dyn System,
    samples: usize,
) -> Result<BoxCheck> {
    let space = u.space();
    let mesh = space.mesh();
    let m = space.dim();
    let rule = gauss_rule((space.degree() + 3).min(20))?;
    let n = samples.max(2);
    let mut pts: Vec<f64> = rule.points.clone();
    pts.extend((0..n).map(|k| -1.0 + 2.0 * k as f64 / (n - 1) as f64));
    let mut v = vec![0.0; m];
    for cell in 0..mesh.cells() {
        for &xi in &pts {
            u.eval_cell(cell, xi, &mut v);
            if !bx.contains_state(sys, &v, BOX_TOL) {
                return Ok(BoxCheck {
                    inside: false,
                    violation: Some((t, mesh.map(cell, xi), v)),
                });
            }
        }
    }
    Ok(BoxCheck {
        inside: true,
        violation: None,
    })
}

/// Checks the sampled extremes of every slab. A violation reports the slab
/// start time; the spatial position is resolved by re-sampling that slab's
/// start when `field` is given.
pub fn verify_in_box(
    slabs: &[SlabStats],
    bx: &CompactBox,
    sys: &dyn System,
    field: Option<&ResidualField<'_>>,
) -> Result<BoxCheck> {
    for slab in slabs {
        let inside = bx.contains(&slab.min, BOX_TOL)
            && bx.contains(&slab.max, BOX_TOL)
            && bx.floor_respected(slab.min_positivity, BOX_TOL);
        if !inside {
            let outside = if bx.contains(&slab.min, BOX_TOL) {
                &slab.max
            } else {
                &slab.min
            };
            let mut located = (slab.t_start, f64::NAN, outside.clone());
            if let Some(field) = field {
                for t in [slab.t_start, slab.t_end] {
                    let (ust, _) = field.reconstruction_at(t)?;
                    let check = verify_function_in_box(&ust, t, bx, sys, ust.space().degree() + 4)?;
                    if let Some(v) = check.violation {
                        located = v;
                        break;
                    }
                }
            }
            return Ok(BoxCheck {
                inside: false,
                violation: Some(located),
            });
        }
    }
    Ok(BoxCheck {
        inside: true,
        violation: None,
    })
}

/// The constants of the bound; `safety` is the inflation factor applied
/// (lower constant divided, upper constants multiplied).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyConstants {
    pub c_eta_lower: f64,
    pub c_eta_upper: f64,
    pub c_g: f64,
    pub resolution: usize,
    pub safety: f64,
}

pub const DEFAULT_SAFETY: f64 = 1.05;

/// Extreme eigenvalues of `Hη` and the flux-Hessian bound
/// `C_ḡ = max sqrt(Σ_c ρ(H g_c)²)` over a `resolution^m` grid of the box.
pub fn entropy_constants(
    pair: &dyn EntropyPair,
    sys: &dyn System,
    bx: &CompactBox,
    resolution: usize,
    safety: f64,
) -> Result<EntropyConstants> {
    if !bx.admissible_for(sys, resolution) {
        return Err(Error::Config(format!(
            "box [{:?}, {:?}] leaves the admissible states",
            bx.lo, bx.hi
        )));
    }
    let m = sys.dim();
    let mut lower = f64::INFINITY;
    let mut upper: f64 = 0.0;
    let mut c_g: f64 = 0.0;
    for u in bx.samples(sys, resolution) {
        let eig = symmetric_eigenvalues(&pair.hessian(&u), m);
        let (lo, hi) = (eig[0], eig[m - 1]);
        if !(lo > 0.0) {
            return Err(Error::Convexity {
                state: u,
                min_eig: lo,
            });
        }
        lower = lower.min(lo);
        upper = upper.max(hi);
        let mut sum = 0.0;
        for comp in 0..m {
            let e = symmetric_eigenvalues(&sys.flux_hessian(&u, comp), m);
            let rho = e.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            sum += rho * rho;
        }
        c_g = c_g.max(sum.sqrt());
    }
    Ok(EntropyConstants {
        c_eta_lower: lower / safety,
        c_eta_upper: upper * safety,
        c_g: c_g * safety,
        resolution,
        safety,
    })
}

/// All terms of the bound at one grid time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEstimate {
    pub t: f64,
    pub recon_gap_sq: f64,
    pub residual_sq: f64,
    pub init_sq: f64,
    /// `∫_0^t ‖∂_x û^st‖_∞ ds`, integrated from slab-wise sups.
    pub sup_dx_integral: f64,
    pub exp_factor: f64,
    pub bound: f64,
}

/// Assembles the bound from its ingredients.
pub fn error_estimate(
    c: &EntropyConstants,
    t: f64,
    recon_gap_sq: f64,
    residual_sq: f64,
    init_sq: f64,
    sup_dx_integral: f64,
) -> CheckpointEstimate {
    let exponent = (c.c_eta_upper * c.c_g * sup_dx_integral + c.c_eta_upper * c.c_eta_upper * t)
        / c.c_eta_lower;
    let exp_factor = exponent.exp();
    let bound = 2.0 * recon_gap_sq
        + 2.0 / c.c_eta_lower * (residual_sq + c.c_eta_upper * init_sq) * exp_factor;
    CheckpointEstimate {
        t,
        recon_gap_sq,
        residual_sq,
        init_sq,
        sup_dx_integral,
        exp_factor,
        bound,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSettings {
    /// Grid points per state axis for the constants.
    pub resolution: usize,
    pub safety: f64,
    /// Relative padding of the default box around sampled values.
    pub box_padding: f64,
    /// Report instead of refusing when the reconstruction leaves the box.
    pub force: bool,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            resolution: 9,
            safety: DEFAULT_SAFETY,
            box_padding: 0.1,
            force: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub constants: EntropyConstants,
    pub compact_box: CompactBox,
    pub in_box: BoxCheck,
    /// Sampled `sup ‖∂_x û^st‖` per slab.
    pub sup_dx: Vec<f64>,
    pub checkpoints: Vec<CheckpointEstimate>,
}

/// Evaluates the bound at the trajectory nodes `checkpoints`. `bx` defaults
/// to the padded extremes of the sampled reconstruction.
#[allow(clippy::too_many_arguments)]
pub fn estimate(
    field: &ResidualField<'_>,
    slabs: &[SlabStats],
    traj: &Trajectory,
    u0: &(dyn Fn(f64, &mut [f64]) + Sync),
    pair: &dyn EntropyPair,
    sys: &dyn System,
    checkpoints: &[usize],
    bx: Option<CompactBox>,
    settings: &EstimatorSettings,
) -> Result<EstimatorReport> {
    let m = sys.dim();
    let bx = match bx {
        Some(b) => b,
        None => {
            let mut min = vec![f64::INFINITY; m];
            let mut max = vec![f64::NEG_INFINITY; m];
            for s in slabs {
                for c in 0..m {
                    min[c] = min[c].min(s.min[c]);
                    max[c] = max[c].max(s.max[c]);
                }
            }
            let bx = CompactBox::around(&min, &max, settings.box_padding)?;
            let floor = slabs
                .iter()
                .filter_map(|s| s.min_positivity)
                .fold(None, |acc: Option<f64>, p| {
                    Some(acc.map_or(p, |a| a.min(p)))
                });
            match floor {
                Some(p) => bx.with_floor(p * (1.0 - settings.box_padding)),
                None => bx,
            }
        }
    };
    let in_box = verify_in_box(slabs, &bx, sys, Some(field))?;
    if let (false, Some((t, x, state))) = (in_box.inside, &in_box.violation) {
        if !settings.force {
            return Err(Error::AssumptionViolated {
                t: *t,
                x: *x,
                state: state.clone(),
            });
        }
    }
    let constants = entropy_constants(pair, sys, &bx, settings.resolution, settings.safety)?;

    let (ust0, _) = field.reconstruction_at(traj.grid.t0)?;
    let n_quad = (ust0.space().degree() + 6).min(20);
    let init_sq = ust0.l2_error_sq(n_quad, u0)?;

    let tau = traj.grid.tau;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &k in checkpoints {
        if k > traj.grid.steps || k > slabs.len() {
            return Err(Error::Config(format!(
                "checkpoint node {k} beyond the trajectory"
            )));
        }
        let t = traj.grid.time(k);
        let (ust, _) = field.reconstruction_at(t)?;
        let uh = field.spatial().source().function(traj.states[k].clone());
        let uh_fine = raise_degree(&uh, 1);
        let gap: f64 = ust
            .coeffs()
            .iter()
            .zip(uh_fine.coeffs())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let residual_sq: f64 = slabs[..k].iter().map(|s| s.residual_sq).sum();
        let sup_integral: f64 = slabs[..k].iter().map(|s| s.sup_dx * tau).sum();
        out.push(error_estimate(
            &constants,
            t,
            gap,
            residual_sq,
            init_sq,
            sup_integral,
        ));
    }
    Ok(EstimatorReport {
        constants,
        compact_box: bx,
        in_box,
        sup_dx: slabs.iter().map(|s| s.sup_dx).collect(),
        checkpoints: out,
    })
}
