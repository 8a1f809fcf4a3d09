//! Dense helpers for the tiny (m ≤ 3) matrices of 1D systems.

pub const MAX_DIM: usize = 3;

/// Row-major `m × m` matrix stored in a fixed 3×3 array.
pub type Mat = [[f64; MAX_DIM]; MAX_DIM];

pub const ZERO: Mat = [[0.0; MAX_DIM]; MAX_DIM];

pub fn identity(m: usize) -> Mat {
    let mut a = ZERO;
    for (i, row) in a.iter_mut().enumerate().take(m) {
        row[i] = 1.0;
    }
    a
}

pub fn matvec(a: &Mat, m: usize, x: &[f64], out: &mut [f64]) {
    for i in 0..m {
        out[i] = (0..m).map(|j| a[i][j] * x[j]).sum();
    }
}

pub fn matmul(a: &Mat, b: &Mat, m: usize) -> Mat {
    let mut c = ZERO;
    for i in 0..m {
        for j in 0..m {
            c[i][j] = (0..m).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Eigenvalues of the symmetric `m × m` matrix `a` by cyclic Jacobi sweeps.
pub fn symmetric_eigenvalues(a: &Mat, m: usize) -> Vec<f64> {
    let mut a = *a;
    for _sweep in 0..64 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..m).map(|i| a[i][i] * a[i][i]).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..m).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalue"));
    eig
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_known_spectrum() {
        let a: Mat = [[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]];
        let eig = symmetric_eigenvalues(&a, 3);
        let s = 2f64.sqrt();
        for (got, want) in eig.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn jacobi_scalar_and_diagonal() {
        let mut a = ZERO;
        a[0][0] = 3.5;
        assert_eq!(symmetric_eigenvalues(&a, 1), vec![3.5]);
        a[1][1] = -1.0;
        assert_eq!(symmetric_eigenvalues(&a, 2), vec![-1.0, 3.5]);
    }
}
