//! Flux functions of the conservation laws `∂_t u + ∂_x g(u) = 0`.

use serde::{Deserialize, Serialize};

use crate::linalg::{Mat, MAX_DIM, ZERO};

/// The built-in conservation laws, as named in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemKind {
    Advection { speed: f64 },
    Burgers,
    Euler { gamma: f64 },
}

impl SystemKind {
    pub fn build(&self) -> Box<dyn System> {
        match *self {
            SystemKind::Advection { speed } => Box::new(Advection { speed }),
            SystemKind::Burgers => Box::new(Burgers),
            SystemKind::Euler { gamma } => Box::new(Euler { gamma }),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SystemKind::Euler { .. } => 3,
            _ => 1,
        }
    }
}

/// Right/left eigenvectors and eigenvalues of a flux Jacobian with
/// `L · Dg · R = diag(λ)` and `L · R = I`. `R` stores eigenvectors as columns,
/// `L` as rows.
#[derive(Debug, Clone, Copy)]
pub struct Eigen {
    pub right: Mat,
    pub left: Mat,
    pub values: [f64; MAX_DIM],
}

pub trait System: Send + Sync {
    fn dim(&self) -> usize;

    fn flux(&self, u: &[f64], out: &mut [f64]);

    /// Row-major `Dg(u)`.
    fn jacobian(&self, u: &[f64]) -> Mat;

    fn eigen(&self, u: &[f64]) -> Eigen;

    fn admissible(&self, u: &[f64]) -> bool;

    /// A concave functional that admissible states keep positive, when the
    /// admissible set is not a box (pressure for gas dynamics).
    fn positivity(&self, _u: &[f64]) -> Option<f64> {
        None
    }

    fn max_speed(&self, u: &[f64]) -> f64 {
        let e = self.eigen(u);
        e.values[..self.dim()]
            .iter()
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Hessian of the flux component `comp`, by central differences of the
    /// analytic Jacobian.
    fn flux_hessian(&self, u: &[f64], comp: usize) -> Mat {
        let m = self.dim();
        let mut hess = ZERO;
        let mut up = [0.0; MAX_DIM];
        let mut um = [0.0; MAX_DIM];
        for j in 0..m {
            let eps = 1e-5 * u[j].abs().max(1.0);
            up[..m].copy_from_slice(&u[..m]);
            um[..m].copy_from_slice(&u[..m]);
            up[j] += eps;
            um[j] -= eps;
            let jp = self.jacobian(&up[..m]);
            let jm = self.jacobian(&um[..m]);
            for k in 0..m {
                hess[k][j] = (jp[comp][k] - jm[comp][k]) / (2.0 * eps);
            }
        }
        for j in 0..m {
            for k in j + 1..m {
                let s = 0.5 * (hess[j][k] + hess[k][j]);
                hess[j][k] = s;
                hess[k][j] = s;
            }
        }
        hess
    }

    fn name(&self) -> String;
}

/// `g(u) = a u`.
#[derive(Debug, Clone, Copy)]
pub struct Advection {
    pub speed: f64,
}

impl System for Advection {
    fn dim(&self) -> usize {
        1
    }

    fn flux(&self, u: &[f64], out: &mut [f64]) {
        out[0] = self.speed * u[0];
    }

    fn jacobian(&self, _u: &[f64]) -> Mat {
        let mut a = ZERO;
        a[0][0] = self.speed;
        a
    }

    fn eigen(&self, _u: &[f64]) -> Eigen {
        scalar_eigen(self.speed)
    }

    fn admissible(&self, u: &[f64]) -> bool {
        u[0].is_finite()
    }

    fn flux_hessian(&self, _u: &[f64], _comp: usize) -> Mat {
        ZERO
    }

    fn name(&self) -> String {
        format!("advection(a={})", self.speed)
    }
}

/// `g(u) = u²/2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Burgers;

impl System for Burgers {
    fn dim(&self) -> usize {
        1
    }

    fn flux(&self, u: &[f64], out: &mut [f64]) {
        out[0] = 0.5 * u[0] * u[0];
    }

    fn jacobian(&self, u: &[f64]) -> Mat {
        let mut a = ZERO;
        a[0][0] = u[0];
        a
    }

    fn eigen(&self, u: &[f64]) -> Eigen {
        scalar_eigen(u[0])
    }

    fn admissible(&self, u: &[f64]) -> bool {
        u[0].is_finite()
    }

    fn flux_hessian(&self, _u: &[f64], _comp: usize) -> Mat {
        let mut a = ZERO;
        a[0][0] = 1.0;
        a
    }

    fn name(&self) -> String {
        "burgers".into()
    }
}

fn scalar_eigen(lambda: f64) -> Eigen {
    let mut right = ZERO;
    let mut left = ZERO;
    right[0][0] = 1.0;
    left[0][0] = 1.0;
    Eigen {
        right,
        left,
        values: [lambda, 0.0, 0.0],
    }
}

/// Ideal-gas Euler equations in conservative variables `(ρ, ρu, E)`.
#[derive(Debug, Clone, Copy)]
pub struct Euler {
    pub gamma: f64,
}

/// Lower bound on density and pressure for admissible Euler states.
pub const EULER_FLOOR: f64 = 1e-8;

impl Euler {
    pub fn pressure(&self, u: &[f64]) -> f64 {
        (self.gamma - 1.0) * (u[2] - 0.5 * u[1] * u[1] / u[0])
    }

    pub fn from_primitive(&self, rho: f64, vel: f64, p: f64) -> [f64; 3] {
        [
            rho,
            rho * vel,
            p / (self.gamma - 1.0) + 0.5 * rho * vel * vel,
        ]
    }

    pub fn to_primitive(&self, u: &[f64]) -> [f64; 3] {
        [u[0], u[1] / u[0], self.pressure(u)]
    }

    pub fn sound_speed(&self, u: &[f64]) -> f64 {
        (self.gamma * self.pressure(u) / u[0]).sqrt()
    }
}

impl System for Euler {
    fn dim(&self) -> usize {
        3
    }

    fn flux(&self, u: &[f64], out: &mut [f64]) {
        let vel = u[1] / u[0];
        let p = self.pressure(u);
        out[0] = u[1];
        out[1] = u[1] * vel + p;
        out[2] = (u[2] + p) * vel;
    }

    fn jacobian(&self, u: &[f64]) -> Mat {
        let g = self.gamma;
        let vel = u[1] / u[0];
        let enthalpy = (u[2] + self.pressure(u)) / u[0];
        [
            [0.0, 1.0, 0.0],
            [0.5 * (g - 3.0) * vel * vel, (3.0 - g) * vel, g - 1.0],
            [
                vel * (0.5 * (g - 1.0) * vel * vel - enthalpy),
                enthalpy - (g - 1.0) * vel * vel,
                g * vel,
            ],
        ]
    }

    fn eigen(&self, u: &[f64]) -> Eigen {
        let g = self.gamma;
        let vel = u[1] / u[0];
        let c = self.sound_speed(u);
        let enthalpy = (u[2] + self.pressure(u)) / u[0];
        let right = [
            [1.0, 1.0, 1.0],
            [vel - c, vel, vel + c],
            [enthalpy - vel * c, 0.5 * vel * vel, enthalpy + vel * c],
        ];
        let b1 = (g - 1.0) / (c * c);
        let b2 = 0.5 * b1 * vel * vel;
        let left = [
            [0.5 * (b2 + vel / c), -0.5 * (b1 * vel + 1.0 / c), 0.5 * b1],
            [1.0 - b2, b1 * vel, -b1],
            [0.5 * (b2 - vel / c), -0.5 * (b1 * vel - 1.0 / c), 0.5 * b1],
        ];
        Eigen {
            right,
            left,
            values: [vel - c, vel, vel + c],
        }
    }

    fn admissible(&self, u: &[f64]) -> bool {
        u.iter().all(|v| v.is_finite()) && u[0] >= EULER_FLOOR && self.pressure(u) >= EULER_FLOOR
    }

    fn max_speed(&self, u: &[f64]) -> f64 {
        (u[1] / u[0]).abs() + self.sound_speed(u)
    }

    fn positivity(&self, u: &[f64]) -> Option<f64> {
        Some(self.pressure(u))
    }

    fn name(&self) -> String {
        format!("euler(gamma={})", self.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, matmul};

    fn euler_states() -> Vec<[f64; 3]> {
        let e = Euler { gamma: 1.4 };
        let mut out = Vec::new();
        for i in 0..100 {
            let s = i as f64;
            let rho = 0.2 + (0.37 * s).sin().abs() * 2.0;
            let vel = 3.0 * (0.71 * s + 0.3).sin();
            let p = 0.1 + (1.13 * s).cos().abs() * 3.0;
            out.push(e.from_primitive(rho, vel, p));
        }
        out
    }

    #[test]
    fn euler_left_right_duality() {
        let e = Euler { gamma: 1.4 };
        let id = identity(3);
        for u in euler_states() {
            let eig = e.eigen(&u);
            let lr = matmul(&eig.left, &eig.right, 3);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((lr[i][j] - id[i][j]).abs() < 1e-12, "{u:?} {lr:?}");
                }
            }
        }
    }

    #[test]
    fn euler_diagonalizes_jacobian() {
        let e = Euler { gamma: 1.4 };
        for u in euler_states() {
            let eig = e.eigen(&u);
            let a = e.jacobian(&u);
            let d = matmul(&matmul(&eig.left, &a, 3), &eig.right, 3);
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j { eig.values[i] } else { 0.0 };
                    assert!((d[i][j] - want).abs() < 1e-10 * (1.0 + want.abs()));
                }
            }
            assert!(eig.values[0] < eig.values[1] && eig.values[1] < eig.values[2]);
        }
    }

    #[test]
    fn euler_jacobian_matches_finite_differences() {
        let e = Euler { gamma: 1.4 };
        let u = e.from_primitive(1.2, 0.7, 1.6);
        let a = e.jacobian(&u);
        for j in 0..3 {
            let eps = 1e-6;
            let (mut up, mut um) = (u, u);
            up[j] += eps;
            um[j] -= eps;
            let (mut fp, mut fm) = ([0.0; 3], [0.0; 3]);
            e.flux(&up, &mut fp);
            e.flux(&um, &mut fm);
            for i in 0..3 {
                assert!(((fp[i] - fm[i]) / (2.0 * eps) - a[i][j]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn euler_admissibility() {
        let e = Euler { gamma: 1.4 };
        assert!(e.admissible(&e.from_primitive(1.0, 1.0, 1.3)));
        assert!(!e.admissible(&[1.0, 0.0, 0.0]));
        assert!(!e.admissible(&[-1.0, 0.0, 1.0]));
    }

    #[test]
    fn burgers_hessian_is_one() {
        let h = Burgers.flux_hessian(&[0.3], 0);
        assert_eq!(h[0][0], 1.0);
        let generic = {
            struct Fd;
            impl System for Fd {
                fn dim(&self) -> usize {
                    1
                }
                fn flux(&self, u: &[f64], out: &mut [f64]) {
                    Burgers.flux(u, out)
                }
                fn jacobian(&self, u: &[f64]) -> Mat {
                    Burgers.jacobian(u)
                }
                fn eigen(&self, u: &[f64]) -> Eigen {
                    Burgers.eigen(u)
                }
                fn admissible(&self, _u: &[f64]) -> bool {
                    true
                }
                fn name(&self) -> String {
                    "fd".into()
                }
            }
            Fd.flux_hessian(&[0.3], 0)
        };
        assert!((generic[0][0] - 1.0).abs() < 1e-9);
    }
}
