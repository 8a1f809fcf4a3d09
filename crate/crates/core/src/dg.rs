//! Discontinuous Galerkin spaces `V_q^s` and the spatial operator `f`.
//!
//! A [`DgFunction`] stores orthonormal Legendre coefficients, laid out as
//! `coeffs[(cell * m + comp) * (q + 1) + k]`. The flat coefficient vector is
//! also the state vector handed to the time integrators.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::flux::{numerical_flux, FluxSpec};
use crate::legendre::{basis_scale, endpoint_sign, legendre_all};
use crate::linalg::MAX_DIM;
use crate::mesh::Mesh1D;
use crate::quadrature::gauss_rule;
use crate::system::System;

#[derive(Debug, Clone)]
pub struct DgSpace {
    mesh: Arc<Mesh1D>,
    q: usize,
    m: usize,
}

impl DgSpace {
    pub fn new(mesh: Arc<Mesh1D>, q: usize, m: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&m), "system dimension {m} unsupported");
        Self { mesh, q, m }
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh1D> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.mesh.cells() * self.m * (self.q + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, cell: usize, comp: usize, k: usize) -> usize {
        (cell * self.m + comp) * (self.q + 1) + k
    }

    /// Same mesh and dimension, different degree.
    pub fn with_degree(&self, q: usize) -> Self {
        Self {
            mesh: self.mesh.clone(),
            q,
            m: self.m,
        }
    }

    pub fn zeros(&self) -> DgFunction {
        DgFunction {
            space: self.clone(),
            coeffs: vec![0.0; self.len()],
        }
    }

    pub fn function(&self, coeffs: Vec<f64>) -> DgFunction {
        assert_eq!(coeffs.len(), self.len(), "coefficient length mismatch");
        DgFunction {
            space: self.clone(),
            coeffs,
        }
    }

    /// L² projection of `u0` using `n_quad` Gauss points per cell.
    pub fn project(&self, n_quad: usize, u0: impl Fn(f64, &mut [f64])) -> Result<DgFunction> {
        let rule = gauss_rule(n_quad)?;
        let mut out = self.zeros();
        let mut vals = vec![0.0; self.q + 1];
        let mut ders = vec![0.0; self.q + 1];
        let mut state = [0.0; MAX_DIM];
        for cell in 0..self.mesh.cells() {
            let h = self.mesh.width(cell);
            for (xi, w) in rule.iter() {
                legendre_all(xi, &mut vals, &mut ders);
                u0(self.mesh.map(cell, xi), &mut state[..self.m]);
                for comp in 0..self.m {
                    for k in 0..=self.q {
                        // ∫ u φ_k = (h/2) Σ w u sqrt((2k+1)/h) P_k
                        out.coeffs[self.index(cell, comp, k)] +=
                            0.5 * h * w * state[comp] * basis_scale(k, h) * vals[k];
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct DgFunction {
    space: DgSpace,
    coeffs: Vec<f64>,
}

impl DgFunction {
    pub fn space(&self) -> &DgSpace {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn coeff(&self, cell: usize, comp: usize, k: usize) -> f64 {
        self.coeffs[self.space.index(cell, comp, k)]
    }

    /// Value at reference point `xi` of `cell`.
    pub fn eval_cell(&self, cell: usize, xi: f64, out: &mut [f64]) {
        let q = self.space.q;
        let h = self.space.mesh.width(cell);
        let mut vals = [0.0; 32];
        let mut ders = [0.0; 32];
        legendre_all(xi, &mut vals[..=q], &mut ders[..=q]);
        for (comp, o) in out.iter_mut().enumerate().take(self.space.m) {
            let base = self.space.index(cell, comp, 0);
            *o = (0..=q)
                .map(|k| self.coeffs[base + k] * basis_scale(k, h) * vals[k])
                .sum();
        }
    }

    /// `∂_x` at reference point `xi` of `cell`.
    pub fn eval_dx_cell(&self, cell: usize, xi: f64, out: &mut [f64]) {
        let q = self.space.q;
        let h = self.space.mesh.width(cell);
        let mut vals = [0.0; 32];
        let mut ders = [0.0; 32];
        legendre_all(xi, &mut vals[..=q], &mut ders[..=q]);
        for (comp, o) in out.iter_mut().enumerate().take(self.space.m) {
            let base = self.space.index(cell, comp, 0);
            *o = (0..=q)
                .map(|k| self.coeffs[base + k] * basis_scale(k, h) * ders[k] * 2.0 / h)
                .sum();
        }
    }

    /// Value at `x`; interface points take the value of the cell on their right.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let (cell, xi) = self.space.mesh.locate(x);
        let mut out = vec![0.0; self.space.m];
        self.eval_cell(cell, xi, &mut out);
        out
    }

    /// `(u(x_i⁻), u(x_i⁺), ⟦u⟧_i)` with `⟦u⟧ = u⁻ - u⁺`; interface 0 wraps.
    pub fn traces(&self, interface: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let cells = self.space.mesh.cells();
        let m = self.space.m;
        let mut minus = vec![0.0; m];
        let mut plus = vec![0.0; m];
        self.eval_cell((interface + cells - 1) % cells, 1.0, &mut minus);
        self.eval_cell(interface % cells, -1.0, &mut plus);
        let jump = minus.iter().zip(&plus).map(|(a, b)| a - b).collect();
        (minus, plus, jump)
    }

    /// `Σ_i h_i |⟦u⟧_i|²` with `h_i` the averaged width around interface `i`.
    pub fn jump_indicator(&self) -> f64 {
        let mesh = &self.space.mesh;
        (0..mesh.cells())
            .map(|i| {
                let (_, _, jump) = self.traces(i);
                mesh.interface_width(i) * jump.iter().map(|j| j * j).sum::<f64>()
            })
            .sum()
    }

    /// `∫ |u|²`, exact through orthonormality.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// `∫ u dx` per component.
    pub fn integral(&self) -> Vec<f64> {
        let mesh = &self.space.mesh;
        let mut out = vec![0.0; self.space.m];
        for cell in 0..mesh.cells() {
            let h = mesh.width(cell);
            for (comp, o) in out.iter_mut().enumerate() {
                *o += self.coeff(cell, comp, 0) * h.sqrt();
            }
        }
        out
    }

    /// L² distance to `exact` using `n_quad` Gauss points per cell.
    pub fn l2_error_sq(&self, n_quad: usize, exact: impl Fn(f64, &mut [f64])) -> Result<f64> {
        let rule = gauss_rule(n_quad)?;
        let mesh = &self.space.mesh;
        let m = self.space.m;
        let mut total = 0.0;
        let mut u = [0.0; MAX_DIM];
        let mut v = [0.0; MAX_DIM];
        for cell in 0..mesh.cells() {
            let h = mesh.width(cell);
            for (xi, w) in rule.iter() {
                self.eval_cell(cell, xi, &mut u[..m]);
                exact(mesh.map(cell, xi), &mut v[..m]);
                total += 0.5 * h * w * (0..m).map(|c| (u[c] - v[c]).powi(2)).sum::<f64>();
            }
        }
        Ok(total)
    }
}

/// Precomputed assembly data for `f: V_q^s → V_q^s`.
///
/// For all test functions ψ ∈ V_q^s,
/// `∫ f(u)·ψ = -∫ g(u) ∂_x ψ + Σ_i G(u(x_i⁻), u(x_i⁺)) ⟦ψ⟧_i`,
/// and the semi-discrete scheme is `∂_t u = -f(u)`.
pub struct DgOperator<'a> {
    sys: &'a dyn System,
    flux: FluxSpec,
    space: DgSpace,
    weights: Vec<f64>,
    /// `P_k(ξ_j)` and `P_k'(ξ_j)` at volume quadrature points, row per point.
    vals: Vec<f64>,
    ders: Vec<f64>,
}

impl<'a> DgOperator<'a> {
    pub fn new(sys: &'a dyn System, flux: FluxSpec, space: DgSpace) -> Result<Self> {
        if sys.dim() != space.dim() {
            return Err(Error::Config(format!(
                "system dimension {} does not match DG space dimension {}",
                sys.dim(),
                space.dim()
            )));
        }
        flux.validate()?;
        let q = space.degree();
        let rule = gauss_rule(q + 2)?;
        let mut vals = vec![0.0; rule.len() * (q + 1)];
        let mut ders = vec![0.0; rule.len() * (q + 1)];
        for (j, &xi) in rule.points.iter().enumerate() {
            legendre_all(
                xi,
                &mut vals[j * (q + 1)..(j + 1) * (q + 1)],
                &mut ders[j * (q + 1)..(j + 1) * (q + 1)],
            );
        }
        Ok(Self {
            sys,
            flux,
            space,
            weights: rule.weights.clone(),
            vals,
            ders,
        })
    }

    pub fn space(&self) -> &DgSpace {
        &self.space
    }

    pub fn flux(&self) -> &FluxSpec {
        &self.flux
    }

    pub fn system(&self) -> &'a dyn System {
        self.sys
    }

    pub fn apply(&self, u: &DgFunction) -> Result<DgFunction> {
        let mut out = self.space.zeros();
        self.apply_into(u.coeffs(), out.coeffs_mut())?;
        Ok(out)
    }

    /// `out = f(u)` on raw coefficient vectors.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let space = &self.space;
        let mesh = space.mesh();
        let (q, m) = (space.degree(), space.dim());
        let cells = mesh.cells();
        debug_assert_eq!(u.len(), space.len());
        out.iter_mut().for_each(|o| *o = 0.0);

        let mut state = [0.0; MAX_DIM];
        let mut g = [0.0; MAX_DIM];
        for cell in 0..cells {
            let h = mesh.width(cell);
            for (j, &w) in self.weights.iter().enumerate() {
                let vals = &self.vals[j * (q + 1)..(j + 1) * (q + 1)];
                let ders = &self.ders[j * (q + 1)..(j + 1) * (q + 1)];
                for comp in 0..m {
                    let base = space.index(cell, comp, 0);
                    state[comp] = (0..=q)
                        .map(|k| u[base + k] * basis_scale(k, h) * vals[k])
                        .sum();
                }
                if !self.sys.admissible(&state[..m]) {
                    return Err(Error::StateSpace {
                        state: state[..m].to_vec(),
                        location: format!("cell {cell}, x = {}", mesh.map(cell, gauss_point(q, j))),
                    });
                }
                self.sys.flux(&state[..m], &mut g);
                // -∫ g ∂_x φ_k = -Σ_j w_j (h/2) g sqrt((2k+1)/h) P_k' (2/h)
                for comp in 0..m {
                    let base = space.index(cell, comp, 0);
                    for k in 1..=q {
                        out[base + k] -= w * g[comp] * basis_scale(k, h) * ders[k];
                    }
                }
            }
        }

        let mut minus = [0.0; MAX_DIM];
        let mut plus = [0.0; MAX_DIM];
        let mut flux = [0.0; MAX_DIM];
        for i in 0..cells {
            let left = (i + cells - 1) % cells;
            let (hl, hr) = (mesh.width(left), mesh.width(i));
            for comp in 0..m {
                let bl = space.index(left, comp, 0);
                let br = space.index(i, comp, 0);
                minus[comp] = (0..=q).map(|k| u[bl + k] * basis_scale(k, hl)).sum();
                plus[comp] = (0..=q)
                    .map(|k| u[br + k] * basis_scale(k, hr) * endpoint_sign(k, false))
                    .sum();
            }
            numerical_flux(
                self.sys,
                &self.flux,
                &minus[..m],
                &plus[..m],
                mesh.interface_width(i),
                &mut flux,
            )
            .map_err(|e| match e {
                Error::StateSpace { state, .. } => Error::StateSpace {
                    state,
                    location: format!("interface {i}, x = {}", mesh.nodes()[i]),
                },
                other => other,
            })?;
            // ⟦ψ⟧_i = ψ(x_i⁻) - ψ(x_i⁺)
            for comp in 0..m {
                let bl = space.index(left, comp, 0);
                let br = space.index(i, comp, 0);
                for k in 0..=q {
                    out[bl + k] += flux[comp] * basis_scale(k, hl);
                    out[br + k] -= flux[comp] * basis_scale(k, hr) * endpoint_sign(k, false);
                }
            }
        }
        Ok(())
    }
}

fn gauss_point(q: usize, j: usize) -> f64 {
    gauss_rule(q + 2).map(|r| r.points[j]).unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::FluxKind;
    use crate::system::{Advection, Burgers};

    fn space(cells: usize, q: usize, a: f64, b: f64) -> DgSpace {
        DgSpace::new(Arc::new(Mesh1D::uniform(a, b, cells).unwrap()), q, 1)
    }

    fn piecewise_constant(space: &DgSpace, values: &[f64]) -> DgFunction {
        let mut u = space.zeros();
        for (cell, v) in values.iter().enumerate() {
            let h = space.mesh().width(cell);
            let idx = space.index(cell, 0, 0);
            u.coeffs_mut()[idx] = v * h.sqrt();
        }
        u
    }

    #[test]
    fn constant_evaluation() {
        let s = space(5, 3, 0.0, 1.0);
        let u = s.project(6, |_, out| out[0] = 2.5).unwrap();
        for x in [0.0, 0.13, 0.5, 0.99] {
            assert!((u.eval(x)[0] - 2.5).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_evaluation() {
        let s = space(2, 1, 0.0, 2.0);
        let u = s.project(3, |x, out| out[0] = x).unwrap();
        assert!((u.eval(0.25)[0] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn orthonormal_expansion_value() {
        let s = space(1 + 1, 2, -1.0, 3.0);
        let mut u = s.zeros();
        u.coeffs_mut()[s.index(0, 0, 0)] = 1.0;
        u.coeffs_mut()[s.index(0, 0, 2)] = 1.0;
        // Cell 0 is [-1, 1]: φ_0 = sqrt(1/2), φ_2(0) = sqrt(5/2) · (-1/2).
        let expected = 0.5f64.sqrt() - 0.5 * 2.5f64.sqrt();
        assert!((u.eval(0.0)[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn trace_sign_convention() {
        let s = space(2, 0, 0.0, 1.0);
        let u = piecewise_constant(&s, &[0.0, 1.0]);
        let (_, _, jump) = u.traces(1);
        assert!((jump[0] + 1.0).abs() < 1e-15);
        let (_, _, jump) = u.traces(0);
        assert!((jump[0] - 1.0).abs() < 1e-15);
        assert!((u.jump_indicator() - 1.0).abs() < 1e-14);
        let scaled = s.function(u.coeffs().iter().map(|c| 3.0 * c).collect());
        assert!((scaled.jump_indicator() - 9.0).abs() < 1e-13);
    }

    #[test]
    fn continuous_function_has_no_jumps() {
        let s = space(8, 2, 0.0, 1.0);
        let u = s.project(4, |_, out| out[0] = -0.7).unwrap();
        assert!(u.jump_indicator() < 1e-28);
    }

    #[test]
    fn operator_vanishes_on_constants() {
        let s = space(6, 3, 0.0, 2.0);
        let u = s.project(5, |_, out| out[0] = 1.3).unwrap();
        for kind in [
            FluxKind::CentralW,
            FluxKind::Llf,
            FluxKind::RichtmyerVisc,
            FluxKind::RoeAvg,
            FluxKind::RoeChar,
        ] {
            let op = DgOperator::new(
                &Burgers,
                FluxSpec::new(kind).with_lambda(0.2).with_mu(0.5),
                s.clone(),
            )
            .unwrap();
            let f = op.apply(&u).unwrap();
            assert!(f.coeffs().iter().all(|c| c.abs() < 1e-13), "{kind}");
        }
    }

    #[test]
    fn piecewise_constant_hand_example() {
        let s = space(4, 0, 0.0, 1.0);
        let u = piecewise_constant(&s, &[0.0, 1.0, 0.0, -1.0]);
        let sys = Advection { speed: 1.0 };
        let op = DgOperator::new(&sys, FluxSpec::new(FluxKind::CentralW), s.clone()).unwrap();
        let f = op.apply(&u).unwrap();
        for (cell, want) in [4.0, 0.0, -4.0, 0.0].iter().enumerate() {
            let value = f.eval(s.mesh().map(cell, 0.0))[0];
            assert!((value - want).abs() < 1e-13, "cell {cell}: {value}");
        }
    }
}
