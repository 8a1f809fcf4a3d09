//! Legendre polynomials and the cell-wise orthonormal DG basis.
//!
//! On a cell of width `h` the basis is `φ_k(x) = sqrt((2k+1)/h) P_k(ξ)`, with
//! `ξ ∈ [-1, 1]` the reference coordinate, so the mass matrix is the identity.

/// Standard Legendre `P_k(ξ)` and `P_k'(ξ)`.
pub fn legendre_eval(k: usize, xi: f64) -> (f64, f64) {
    let mut out = (1.0, 0.0);
    legendre_step(k, xi, |j, v, d| {
        if j == k {
            out = (v, d);
        }
    });
    out
}

/// Fills `values[k]`, `derivs[k]` with `P_k(ξ)`, `P_k'(ξ)` for `k < values.len()`.
pub fn legendre_all(xi: f64, values: &mut [f64], derivs: &mut [f64]) {
    let n = values.len();
    if n == 0 {
        return;
    }
    legendre_step(n - 1, xi, |j, v, d| {
        values[j] = v;
        derivs[j] = d;
    });
}

fn legendre_step(kmax: usize, xi: f64, mut emit: impl FnMut(usize, f64, f64)) {
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    emit(0, p, d);
    for j in 1..=kmax {
        let jf = j as f64;
        // j P_j = (2j-1) ξ P_{j-1} - (j-1) P_{j-2}
        let p_next = ((2.0 * jf - 1.0) * xi * p - (jf - 1.0) * p_prev) / jf;
        // P_j' = P_{j-2}' + (2j-1) P_{j-1}
        let d_next = d_prev + (2.0 * jf - 1.0) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
        emit(j, p, d);
    }
}

/// Scale `sqrt((2k+1)/h)` of the orthonormal basis function `φ_k`.
#[inline]
pub fn basis_scale(k: usize, h: f64) -> f64 {
    ((2 * k + 1) as f64 / h).sqrt()
}

/// `P_k(±1)`.
#[inline]
pub fn endpoint_sign(k: usize, right: bool) -> f64 {
    if right || k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}
