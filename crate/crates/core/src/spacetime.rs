//! Continuous spatial reconstruction and the space-time residual.
//!
//! At each time `t` the reconstruction `û^st(t)` lives in `V_{q+1}^s`, is
//! globally continuous, keeps the first `q` Legendre coefficients of `û^t(t)`
//! per cell and takes the value `w(û^t(x_i⁻), û^t(x_i⁺))` at every interface.
//! The residual is `R^st = ∂_t û^st + ∂_x g(û^st)`, split as `R^s + R^t` with
//! `R^t = ∂_t û^t + f(û^t)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dg::{DgFunction, DgOperator, DgSpace};
use crate::error::{Error, Result};
use crate::flux::{flux_w, flux_w_derivative, FluxSpec};
use crate::legendre::{basis_scale, endpoint_sign, legendre_all};
use crate::linalg::{matvec, MAX_DIM};
use crate::ode_recon::TemporalSource;
use crate::quadrature::gauss_rule;
use crate::system::System;

/// The map `V_q^s → V_{q+1}^s` built from the intermediate state `w`.
pub struct SpatialRecon<'a> {
    sys: &'a dyn System,
    flux: FluxSpec,
    space: DgSpace,
    fine: DgSpace,
}

impl<'a> SpatialRecon<'a> {
    pub fn new(sys: &'a dyn System, flux: FluxSpec, space: DgSpace) -> Self {
        let fine = space.with_degree(space.degree() + 1);
        Self {
            sys,
            flux,
            space,
            fine,
        }
    }

    /// The degree `q + 1` target space.
    pub fn target(&self) -> &DgSpace {
        &self.fine
    }

    pub fn source(&self) -> &DgSpace {
        &self.space
    }

    fn trace(&self, u: &[f64], cell: usize, comp: usize, right: bool) -> f64 {
        let q = self.space.degree();
        let h = self.space.mesh().width(cell);
        let base = self.space.index(cell, comp, 0);
        (0..=q)
            .map(|k| u[base + k] * basis_scale(k, h) * endpoint_sign(k, right))
            .sum()
    }

    /// Interface values `w_i` (and their time derivatives when `du` is given),
    /// laid out `[interface * m + comp]`.
    fn interface_values(
        &self,
        u: &[f64],
        du: Option<&[f64]>,
        w: &mut [f64],
        dw: &mut [f64],
    ) -> Result<()> {
        let mesh = self.space.mesh();
        let cells = mesh.cells();
        let m = self.space.dim();
        let mut a = [0.0; MAX_DIM];
        let mut b = [0.0; MAX_DIM];
        let mut da = [0.0; MAX_DIM];
        let mut db = [0.0; MAX_DIM];
        for i in 0..cells {
            let left = (i + cells - 1) % cells;
            for c in 0..m {
                a[c] = self.trace(u, left, c, true);
                b[c] = self.trace(u, i, c, false);
            }
            let h = mesh.interface_width(i);
            let located = |e: Error| match e {
                Error::StateSpace { state, .. } => Error::StateSpace {
                    state,
                    location: format!("interface x = {}", mesh.nodes()[i]),
                },
                other => other,
            };
            match du {
                Some(du) => {
                    for c in 0..m {
                        da[c] = self.trace(du, left, c, true);
                        db[c] = self.trace(du, i, c, false);
                    }
                    flux_w_derivative(
                        self.sys,
                        &self.flux,
                        &a[..m],
                        &b[..m],
                        &da[..m],
                        &db[..m],
                        h,
                        &mut w[i * m..(i + 1) * m],
                        &mut dw[i * m..(i + 1) * m],
                    )
                    .map_err(located)?;
                }
                None => {
                    flux_w(
                        self.sys,
                        &self.flux,
                        &a[..m],
                        &b[..m],
                        h,
                        &mut w[i * m..(i + 1) * m],
                    )
                    .map_err(located)?;
                }
            }
        }
        Ok(())
    }

    /// Copies coefficients `0..q` and solves for `q, q+1` from the endpoint values.
    fn lift(&self, u: &[f64], w: &[f64], out: &mut [f64]) {
        let mesh = self.space.mesh();
        let cells = mesh.cells();
        let (q, m) = (self.space.degree(), self.space.dim());
        let parity = if q % 2 == 0 { 1.0 } else { -1.0 };
        for cell in 0..cells {
            let h = mesh.width(cell);
            let right_iface = (cell + 1) % cells;
            for c in 0..m {
                let src = self.space.index(cell, c, 0);
                let dst = self.fine.index(cell, c, 0);
                let mut left = 0.0;
                let mut right = 0.0;
                for k in 0..q {
                    out[dst + k] = u[src + k];
                    let v = u[src + k] * basis_scale(k, h);
                    right += v;
                    left += v * endpoint_sign(k, false);
                }
                let r_left = w[cell * m + c] - left;
                let r_right = w[right_iface * m + c] - right;
                // c_q s_q (±1)^q + c_{q+1} s_{q+1} (±1)^{q+1} = residuals at both ends
                let a = 0.5 * (r_right + parity * r_left);
                let b = 0.5 * (r_right - parity * r_left);
                out[dst + q] = a / basis_scale(q, h);
                out[dst + q + 1] = b / basis_scale(q + 1, h);
            }
        }
    }

    /// Coefficients of `û^st` for degree-`q` coefficients `u`.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.space.mesh().cells() * self.space.dim();
        let mut w = vec![0.0; n];
        self.interface_values(u, None, &mut w, &mut [])?;
        self.lift(u, &w, out);
        Ok(())
    }

    /// `û^st` and `∂_t û^st` from `û^t` and `∂_t û^t`. The map is linear in
    /// the copied coefficients and in `w`, so the rate follows by the chain rule.
    pub fn apply_with_rate(
        &self,
        u: &[f64],
        du: &[f64],
        out: &mut [f64],
        dout: &mut [f64],
    ) -> Result<()> {
        let n = self.space.mesh().cells() * self.space.dim();
        let mut w = vec![0.0; n];
        let mut dw = vec![0.0; n];
        self.interface_values(u, Some(du), &mut w, &mut dw)?;
        self.lift(u, &w, out);
        self.lift(du, &dw, dout);
        Ok(())
    }
}

/// `û^st` for a single DG function.
pub fn spatial_reconstruct(
    uh: &DgFunction,
    sys: &dyn System,
    spec: &FluxSpec,
) -> Result<DgFunction> {
    let recon = SpatialRecon::new(sys, *spec, uh.space().clone());
    let mut out = recon.target().zeros();
    recon.apply(uh.coeffs(), out.coeffs_mut())?;
    Ok(out)
}

/// Embeds a degree-`q` function into degree `q + extra` (zero padding).
pub fn raise_degree(u: &DgFunction, extra: usize) -> DgFunction {
    let space = u.space();
    let fine = space.with_degree(space.degree() + extra);
    let mut out = fine.zeros();
    for cell in 0..space.mesh().cells() {
        for c in 0..space.dim() {
            for k in 0..=space.degree() {
                out.coeffs_mut()[fine.index(cell, c, k)] = u.coeff(cell, c, k);
            }
        }
    }
    out
}

/// Sampling densities; `None` picks the defaults described on each field.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sampling {
    /// Gauss points per cell for the residual norm (default `q + 3`).
    pub space_quad: Option<usize>,
    /// Gauss points per slab (default `max(q + 3, deg_t + 2)`).
    pub time_quad: Option<usize>,
    /// Equidistant points per cell for sup-norms and box checks (default `q + 4`).
    pub sup_space: Option<usize>,
    /// Equidistant times per slab for sup-norms and box checks (default `q + 3`).
    pub sup_time: Option<usize>,
}

/// Per-slab summaries of the residual and of `û^st`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlabStats {
    pub t_start: f64,
    pub t_end: f64,
    /// `‖R^st‖²` over the slab.
    pub residual_sq: f64,
    /// `‖R^t‖²` over the slab.
    pub temporal_sq: f64,
    /// Sampled `sup ‖∂_x û^st‖` over the slab.
    pub sup_dx: f64,
    /// Componentwise extremes of sampled `û^st` values.
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Smallest sampled [`System::positivity`], when the system has one.
    pub min_positivity: Option<f64>,
}

/// `R^st`, `R^s` and `R^t` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSample {
    pub st: Vec<f64>,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
}

/// The residual of the space-time reconstruction of a DG trajectory.
pub struct ResidualField<'a> {
    source: &'a (dyn TemporalSource + Sync),
    op: &'a DgOperator<'a>,
    recon: SpatialRecon<'a>,
    sampling: Sampling,
}

struct Tables {
    vals: Vec<f64>,
    ders: Vec<f64>,
    len: usize,
}

impl Tables {
    fn new(points: &[f64], q: usize) -> Self {
        let len = q + 1;
        let mut vals = vec![0.0; points.len() * len];
        let mut ders = vec![0.0; points.len() * len];
        for (j, &xi) in points.iter().enumerate() {
            legendre_all(
                xi,
                &mut vals[j * len..(j + 1) * len],
                &mut ders[j * len..(j + 1) * len],
            );
        }
        Self { vals, ders, len }
    }

    /// Value and `∂_x` of all components at point `j` of `cell`.
    fn eval(
        &self,
        space: &DgSpace,
        u: &[f64],
        cell: usize,
        j: usize,
        v: &mut [f64],
        dx: &mut [f64],
    ) {
        let h = space.mesh().width(cell);
        let vals = &self.vals[j * self.len..(j + 1) * self.len];
        let ders = &self.ders[j * self.len..(j + 1) * self.len];
        for c in 0..space.dim() {
            let base = space.index(cell, c, 0);
            let mut sv = 0.0;
            let mut sd = 0.0;
            for k in 0..self.len {
                let s = u[base + k] * basis_scale(k, h);
                sv += s * vals[k];
                sd += s * ders[k];
            }
            v[c] = sv;
            dx[c] = sd * 2.0 / h;
        }
    }

    fn value(&self, space: &DgSpace, u: &[f64], cell: usize, j: usize, v: &mut [f64]) {
        let h = space.mesh().width(cell);
        let vals = &self.vals[j * self.len..(j + 1) * self.len];
        for c in 0..space.dim() {
            let base = space.index(cell, c, 0);
            v[c] = (0..self.len)
                .map(|k| u[base + k] * basis_scale(k, h) * vals[k])
                .sum();
        }
    }
}

fn equidistant(n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|k| -1.0 + 2.0 * k as f64 / (n - 1) as f64)
        .collect()
}

impl<'a> ResidualField<'a> {
    /// `source` reconstructs DG coefficient vectors of `op.space()` in time.
    pub fn new(
        source: &'a (dyn TemporalSource + Sync),
        op: &'a DgOperator<'a>,
        sampling: Sampling,
    ) -> Self {
        let recon = SpatialRecon::new(op.system(), *op.flux(), op.space().clone());
        Self {
            source,
            op,
            recon,
            sampling,
        }
    }

    pub fn spatial(&self) -> &SpatialRecon<'a> {
        &self.recon
    }

    pub fn steps(&self) -> usize {
        self.source.grid().steps
    }

    /// `(û^t(t), ∂_t û^t(t))` as coefficient vectors.
    pub fn temporal_at(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.source.locate(t)?;
        let poly = self.source.interval(n)?;
        let len = self.op.space().len();
        let mut u = vec![0.0; len];
        let mut du = vec![0.0; len];
        poly.eval(t, &mut u, &mut du);
        Ok((u, du))
    }

    /// `(û^st(t), ∂_t û^st(t))`.
    pub fn reconstruction_at(&self, t: f64) -> Result<(DgFunction, DgFunction)> {
        let (u, du) = self.temporal_at(t)?;
        let fine = self.recon.target();
        let mut ust = fine.zeros();
        let mut dust = fine.zeros();
        self.recon
            .apply_with_rate(&u, &du, ust.coeffs_mut(), dust.coeffs_mut())
            .map_err(|e| at_time(e, t))?;
        Ok((ust, dust))
    }

    /// Pointwise `R^st`, `R^s`, `R^t`.
    pub fn probe(&self, t: f64, x: f64) -> Result<ResidualSample> {
        let sys = self.op.system();
        let m = self.op.space().dim();
        let (u, du) = self.temporal_at(t)?;
        let (ust, dust) = self.reconstruction_at(t)?;
        let mut fu = vec![0.0; u.len()];
        self.op.apply_into(&u, &mut fu).map_err(|e| at_time(e, t))?;
        let coarse = self.op.space();
        let (cell, xi) = coarse.mesh().locate(x);
        let eval = |space: &DgSpace, c: &[f64], dx: bool| {
            let f = space.function(c.to_vec());
            let mut out = vec![0.0; m];
            if dx {
                f.eval_dx_cell(cell, xi, &mut out);
            } else {
                f.eval_cell(cell, xi, &mut out);
            }
            out
        };
        let fine = self.recon.target();
        let v = eval(fine, ust.coeffs(), false);
        let vx = eval(fine, ust.coeffs(), true);
        let vt = eval(fine, dust.coeffs(), false);
        let ut = eval(coarse, &du, false);
        let fval = eval(coarse, &fu, false);
        let mut flux_dx = [0.0; MAX_DIM];
        matvec(&sys.jacobian(&v), m, &vx, &mut flux_dx);
        let st: Vec<f64> = (0..m).map(|c| vt[c] + flux_dx[c]).collect();
        let tt: Vec<f64> = (0..m).map(|c| ut[c] + fval[c]).collect();
        let s: Vec<f64> = (0..m)
            .map(|c| (vt[c] - ut[c]) + flux_dx[c] - fval[c])
            .collect();
        Ok(ResidualSample { st, s, t: tt })
    }

    /// Residual integrals, sup of `∂_x û^st` and sampled extremes on slab `n`.
    pub fn slab(&self, n: usize) -> Result<SlabStats> {
        let grid = self.source.grid();
        let poly = self.source.interval(n)?;
        let space = self.op.space();
        let fine = self.recon.target();
        let sys = self.op.system();
        let mesh = space.mesh();
        let (q, m) = (space.degree(), space.dim());
        let len = space.len();
        let (a, b) = (grid.time(n), grid.time(n + 1));
        let half = 0.5 * (b - a);

        let nx = self.sampling.space_quad.unwrap_or(q + 3).min(20);
        let nt = self
            .sampling
            .time_quad
            .unwrap_or((q + 3).max(poly.degree() + 2))
            .min(20);
        let xrule = gauss_rule(nx)?;
        let trule = gauss_rule(nt)?;
        let xpts: Vec<f64> = xrule.points.clone();
        let quad = Tables::new(&xpts, q + 1);
        let sup_pts = equidistant(self.sampling.sup_space.unwrap_or(q + 4).max(2));
        let sup = Tables::new(&sup_pts, q + 1);

        let mut u = vec![0.0; len];
        let mut du = vec![0.0; len];
        let mut fu = vec![0.0; len];
        let mut ust = vec![0.0; fine.len()];
        let mut dust = vec![0.0; fine.len()];
        let mut stats = SlabStats {
            t_start: a,
            t_end: b,
            residual_sq: 0.0,
            temporal_sq: 0.0,
            sup_dx: 0.0,
            min: vec![f64::INFINITY; m],
            max: vec![f64::NEG_INFINITY; m],
            min_positivity: None,
        };
        let mut v = [0.0; MAX_DIM];
        let mut vx = [0.0; MAX_DIM];
        let mut vt = [0.0; MAX_DIM];
        let mut scratch = [0.0; MAX_DIM];
        let track = |stats: &mut SlabStats, v: &[f64]| {
            for c in 0..m {
                stats.min[c] = stats.min[c].min(v[c]);
                stats.max[c] = stats.max[c].max(v[c]);
            }
            if let Some(p) = sys.positivity(v) {
                stats.min_positivity = Some(stats.min_positivity.map_or(p, |q| q.min(p)));
            }
        };

        for (theta, wt) in trule.iter() {
            let t = a + half * (theta + 1.0);
            poly.eval(t, &mut u, &mut du);
            self.recon
                .apply_with_rate(&u, &du, &mut ust, &mut dust)
                .map_err(|e| at_time(e, t))?;
            self.op.apply_into(&u, &mut fu).map_err(|e| at_time(e, t))?;
            // R^t lies in V_q^s, so its L² norm is exact in coefficients.
            stats.temporal_sq += wt
                * half
                * du.iter()
                    .zip(&fu)
                    .map(|(x, y)| (x + y).powi(2))
                    .sum::<f64>();
            for cell in 0..mesh.cells() {
                let h = mesh.width(cell);
                for (j, &wx) in xrule.weights.iter().enumerate() {
                    quad.eval(fine, &ust, cell, j, &mut v[..m], &mut vx[..m]);
                    quad.value(fine, &dust, cell, j, &mut vt[..m]);
                    if !sys.admissible(&v[..m]) {
                        return Err(Error::StateSpace {
                            state: v[..m].to_vec(),
                            location: format!("t = {t}, x = {}", mesh.map(cell, xpts[j])),
                        });
                    }
                    matvec(&sys.jacobian(&v[..m]), m, &vx[..m], &mut scratch);
                    let r2: f64 = (0..m).map(|c| (vt[c] + scratch[c]).powi(2)).sum();
                    stats.residual_sq += wt * half * wx * 0.5 * h * r2;
                    track(&mut stats, &v[..m]);
                }
            }
        }

        let n_sup_t = self.sampling.sup_time.unwrap_or(q + 3).max(2);
        for k in 0..n_sup_t {
            let t = a + (b - a) * k as f64 / (n_sup_t - 1) as f64;
            poly.eval(t, &mut u, &mut du);
            self.recon.apply(&u, &mut ust).map_err(|e| at_time(e, t))?;
            for cell in 0..mesh.cells() {
                for j in 0..sup_pts.len() {
                    sup.eval(fine, &ust, cell, j, &mut v[..m], &mut vx[..m]);
                    let dx = vx[..m].iter().map(|d| d * d).sum::<f64>().sqrt();
                    stats.sup_dx = stats.sup_dx.max(dx);
                    track(&mut stats, &v[..m]);
                }
            }
        }
        Ok(stats)
    }

    /// Every slab, computed in parallel and returned in slab order.
    pub fn slabs(&self) -> Result<Vec<SlabStats>> {
        (0..self.steps())
            .into_par_iter()
            .map(|n| self.slab(n))
            .collect()
    }
}

fn at_time(e: Error, t: f64) -> Error {
    match e {
        Error::StateSpace { state, location } => Error::StateSpace {
            state,
            location: format!("t = {t}, {location}"),
        },
        other => other,
    }
}

/// `‖R^st‖_{L²((t_0, t_k) × T)}` from the first `k` slabs, summed in slab order.
pub fn residual_l2(slabs: &[SlabStats], k: usize) -> f64 {
    slabs[..k].iter().map(|s| s.residual_sq).sum::<f64>().sqrt()
}
