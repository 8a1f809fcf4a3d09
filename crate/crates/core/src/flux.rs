//! Numerical fluxes `G(a, b)` and their intermediate-state maps `w(a, b)`.
//!
//! Every flux here has the form `G(a, b) = g(w(a, b)) - V(a, b)` where the
//! viscosity part `V` vanishes for the central kinds. The same `w` supplies
//! the interface values of the continuous spatial reconstruction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matvec, norm, MAX_DIM};
use crate::system::System;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxKind {
    /// Richtmyer / Lax-Wendroff: `G = g(w)`, `w = (a+b)/2 - λ/2 (g(b) - g(a))`.
    CentralW,
    /// `G = (g(a) + g(b))/2 - λ (b - a)` with `w = (a+b)/2`.
    Llf,
    /// Richtmyer `w` with the viscosity `μ |b-a|^ν (b - a)`.
    RichtmyerVisc,
    /// Roe flux with averaged reconstruction `w = (a+b)/2`.
    RoeAvg,
    /// Roe flux with smoothed characteristic upwinding for `w`.
    RoeChar,
}

impl FluxKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FluxKind::CentralW => "central_w",
            FluxKind::Llf => "llf",
            FluxKind::RichtmyerVisc => "richtmyer_visc",
            FluxKind::RoeAvg => "roe_avg",
            FluxKind::RoeChar => "roe_char",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "central_w" => FluxKind::CentralW,
            "llf" => FluxKind::Llf,
            "richtmyer_visc" => FluxKind::RichtmyerVisc,
            "roe_avg" => FluxKind::RoeAvg,
            "roe_char" => FluxKind::RoeChar,
            _ => return None,
        })
    }
}

impl std::fmt::Display for FluxKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `lambda` is the ratio `τ/h` for the Richtmyer kinds and the viscosity
/// coefficient for `Llf`. `chi_width` scales the local cell width used as the
/// smoothing width of the characteristic upwinding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxSpec {
    pub kind: FluxKind,
    pub lambda: f64,
    pub mu: f64,
    pub nu: u32,
    pub chi_width: f64,
}

impl FluxSpec {
    pub fn new(kind: FluxKind) -> Self {
        Self {
            kind,
            lambda: 0.0,
            mu: 0.0,
            nu: 1,
            chi_width: 1.0,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_nu(mut self, nu: u32) -> Self {
        self.nu = nu;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0) {
            return Err(Error::Config(format!(
                "flux viscosity mu = {} < 0",
                self.mu
            )));
        }
        if !(self.chi_width > 0.0) {
            return Err(Error::Config(format!(
                "chi_width = {} must be positive",
                self.chi_width
            )));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::Config(format!("lambda = {} invalid", self.lambda)));
        }
        Ok(())
    }
}

/// Quintic smoothstep: 0 below `-h`, 1 above `h`, C² in between.
pub fn chi_smooth(z: f64, h: f64) -> f64 {
    let y = z / h;
    if y <= -1.0 {
        0.0
    } else if y >= 1.0 {
        1.0
    } else {
        let s = 0.5 * (y + 1.0);
        s * s * s * (s * (6.0 * s - 15.0) + 10.0)
    }
}

fn check(sys: &dyn System, a: &[f64], b: &[f64]) -> Result<()> {
    for s in [a, b] {
        if !sys.admissible(s) {
            return Err(Error::StateSpace {
                state: s.to_vec(),
                location: "numerical flux argument".into(),
            });
        }
    }
    Ok(())
}

/// `w(a, b)` written into `out`. `h` is the local width around the interface.
pub fn flux_w(
    sys: &dyn System,
    spec: &FluxSpec,
    a: &[f64],
    b: &[f64],
    h: f64,
    out: &mut [f64],
) -> Result<()> {
    check(sys, a, b)?;
    w_unchecked(sys, spec, a, b, h, out);
    Ok(())
}

fn w_unchecked(sys: &dyn System, spec: &FluxSpec, a: &[f64], b: &[f64], h: f64, out: &mut [f64]) {
    let m = sys.dim();
    match spec.kind {
        FluxKind::CentralW | FluxKind::RichtmyerVisc => {
            let mut ga = [0.0; MAX_DIM];
            let mut gb = [0.0; MAX_DIM];
            sys.flux(a, &mut ga);
            sys.flux(b, &mut gb);
            for i in 0..m {
                out[i] = 0.5 * (a[i] + b[i]) - 0.5 * spec.lambda * (gb[i] - ga[i]);
            }
        }
        FluxKind::Llf | FluxKind::RoeAvg => {
            for i in 0..m {
                out[i] = 0.5 * (a[i] + b[i]);
            }
        }
        FluxKind::RoeChar => {
            let mut c = [0.0; MAX_DIM];
            for i in 0..m {
                c[i] = 0.5 * (a[i] + b[i]);
            }
            char_upwind(sys, &c[..m], a, b, spec.chi_width * h, out);
        }
    }
}

/// `R(c) ω(L(c) a, L(c) b)` with eigen-data frozen at `c`.
fn char_upwind(sys: &dyn System, c: &[f64], a: &[f64], b: &[f64], width: f64, out: &mut [f64]) {
    let m = sys.dim();
    let eig = sys.eigen(c);
    let mut alpha = [0.0; MAX_DIM];
    let mut beta = [0.0; MAX_DIM];
    matvec(&eig.left, m, a, &mut alpha);
    matvec(&eig.left, m, b, &mut beta);
    let mut omega = [0.0; MAX_DIM];
    for i in 0..m {
        let chi = chi_smooth(eig.values[i], width);
        omega[i] = chi * alpha[i] + (1.0 - chi) * beta[i];
    }
    matvec(&eig.right, m, &omega[..m], out);
}

/// Directional derivative `Dw(a, b)[da, db]`, written into `dw`; `w` receives
/// `w(a, b)`.
#[allow(clippy::too_many_arguments)]
pub fn flux_w_derivative(
    sys: &dyn System,
    spec: &FluxSpec,
    a: &[f64],
    b: &[f64],
    da: &[f64],
    db: &[f64],
    h: f64,
    w: &mut [f64],
    dw: &mut [f64],
) -> Result<()> {
    check(sys, a, b)?;
    let m = sys.dim();
    w_unchecked(sys, spec, a, b, h, w);
    match spec.kind {
        FluxKind::CentralW | FluxKind::RichtmyerVisc => {
            let ja = sys.jacobian(a);
            let jb = sys.jacobian(b);
            let mut ga = [0.0; MAX_DIM];
            let mut gb = [0.0; MAX_DIM];
            matvec(&ja, m, da, &mut ga);
            matvec(&jb, m, db, &mut gb);
            for i in 0..m {
                dw[i] = 0.5 * (da[i] + db[i]) - 0.5 * spec.lambda * (gb[i] - ga[i]);
            }
        }
        FluxKind::Llf | FluxKind::RoeAvg => {
            for i in 0..m {
                dw[i] = 0.5 * (da[i] + db[i]);
            }
        }
        FluxKind::RoeChar => {
            let width = spec.chi_width * h;
            let mut c = [0.0; MAX_DIM];
            let mut dc = [0.0; MAX_DIM];
            for i in 0..m {
                c[i] = 0.5 * (a[i] + b[i]);
                dc[i] = 0.5 * (da[i] + db[i]);
            }
            // Linear part with eigen-data frozen at c.
            char_upwind(sys, &c[..m], da, db, width, dw);
            // Variation of the eigen-data through c, by central differences.
            let dc_norm = norm(&dc[..m]);
            if dc_norm > 0.0 {
                let eps = 1e-6 * (1.0 + norm(&c[..m])) / dc_norm;
                let mut cp = [0.0; MAX_DIM];
                let mut cm = [0.0; MAX_DIM];
                for i in 0..m {
                    cp[i] = c[i] + eps * dc[i];
                    cm[i] = c[i] - eps * dc[i];
                }
                if sys.admissible(&cp[..m]) && sys.admissible(&cm[..m]) {
                    let mut wp = [0.0; MAX_DIM];
                    let mut wm = [0.0; MAX_DIM];
                    char_upwind(sys, &cp[..m], a, b, width, &mut wp);
                    char_upwind(sys, &cm[..m], a, b, width, &mut wm);
                    for i in 0..m {
                        dw[i] += (wp[i] - wm[i]) / (2.0 * eps);
                    }
                }
            }
        }
    }
    Ok(())
}

/// `G(a, b)` written into `out`. `h` is the local width around the interface.
pub fn numerical_flux(
    sys: &dyn System,
    spec: &FluxSpec,
    a: &[f64],
    b: &[f64],
    h: f64,
    out: &mut [f64],
) -> Result<()> {
    check(sys, a, b)?;
    let m = sys.dim();
    match spec.kind {
        FluxKind::CentralW | FluxKind::RichtmyerVisc => {
            let mut w = [0.0; MAX_DIM];
            w_unchecked(sys, spec, a, b, h, &mut w);
            sys.flux(&w[..m], out);
            if spec.kind == FluxKind::RichtmyerVisc && spec.mu > 0.0 {
                let mut diff = [0.0; MAX_DIM];
                for i in 0..m {
                    diff[i] = b[i] - a[i];
                }
                let coeff = spec.mu * norm(&diff[..m]).powi(spec.nu as i32);
                for i in 0..m {
                    out[i] -= coeff * diff[i];
                }
            }
        }
        FluxKind::Llf => {
            let mut ga = [0.0; MAX_DIM];
            let mut gb = [0.0; MAX_DIM];
            sys.flux(a, &mut ga);
            sys.flux(b, &mut gb);
            for i in 0..m {
                out[i] = 0.5 * (ga[i] + gb[i]) - spec.lambda * (b[i] - a[i]);
            }
        }
        FluxKind::RoeAvg | FluxKind::RoeChar => {
            let mut c = [0.0; MAX_DIM];
            for i in 0..m {
                c[i] = 0.5 * (a[i] + b[i]);
            }
            if !sys.admissible(&c[..m]) {
                return Err(Error::StateSpace {
                    state: c[..m].to_vec(),
                    location: "Roe average state".into(),
                });
            }
            sys.flux(&c[..m], out);
            let eig = sys.eigen(&c[..m]);
            let mut diff = [0.0; MAX_DIM];
            for i in 0..m {
                diff[i] = a[i] - b[i];
            }
            let mut chars = [0.0; MAX_DIM];
            matvec(&eig.left, m, &diff[..m], &mut chars);
            for i in 0..m {
                chars[i] *= eig.values[i].abs();
            }
            let mut visc = [0.0; MAX_DIM];
            matvec(&eig.right, m, &chars[..m], &mut visc);
            for i in 0..m {
                out[i] += 0.5 * visc[i];
            }
        }
    }
    Ok(())
}
