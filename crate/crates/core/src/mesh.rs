//! Periodic partitions of a 1D interval.

use crate::error::{Error, Result};

/// Default bound on `h / h_min`.
pub const DEFAULT_QUASI_UNIFORMITY: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Grading {
    Uniform,
    /// Explicit nodes `x_0 < ... < x_M`; the first and last are identified.
    Nodes(Vec<f64>),
}

/// A periodic mesh `x_0 < x_1 < ... < x_M` with `x_0 ≡ x_M`.
///
/// Cell `i` is `(x_i, x_{i+1})`; interface `i` sits at `x_i`, so interface 0
/// separates the last cell from the first.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
    widths: Vec<f64>,
    h: f64,
    h_min: f64,
}

impl Mesh1D {
    pub fn uniform(a: f64, b: f64, cells: usize) -> Result<Self> {
        Self::build((a, b), cells, Grading::Uniform)
    }

    pub fn build(domain: (f64, f64), cells: usize, grading: Grading) -> Result<Self> {
        Self::build_with_cap(domain, cells, grading, DEFAULT_QUASI_UNIFORMITY)
    }

    pub fn build_with_cap(
        domain: (f64, f64),
        cells: usize,
        grading: Grading,
        quasi_uniformity: f64,
    ) -> Result<Self> {
        let (a, b) = domain;
        if !(b > a) {
            return Err(Error::InvalidMesh(format!("empty domain [{a}, {b}]")));
        }
        let nodes = match grading {
            Grading::Uniform => {
                if cells < 2 {
                    return Err(Error::InvalidMesh(format!(
                        "need at least 2 cells, got {cells}"
                    )));
                }
                let h = (b - a) / cells as f64;
                let mut nodes: Vec<f64> = (0..cells).map(|i| a + i as f64 * h).collect();
                nodes.push(b);
                nodes
            }
            Grading::Nodes(nodes) => {
                if nodes.len() < 3 {
                    return Err(Error::InvalidMesh(format!(
                        "need at least 2 cells, got {} nodes",
                        nodes.len()
                    )));
                }
                if nodes[0] != a || nodes[nodes.len() - 1] != b {
                    return Err(Error::InvalidMesh(
                        "explicit nodes must start and end at the domain bounds".into(),
                    ));
                }
                nodes
            }
        };
        let widths: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        if let Some(i) = widths.iter().position(|&w| !(w > 0.0)) {
            return Err(Error::InvalidMesh(format!(
                "nodes not strictly increasing at index {}",
                i + 1
            )));
        }
        let h = widths.iter().copied().fold(0.0, f64::max);
        let h_min = widths.iter().copied().fold(f64::INFINITY, f64::min);
        if h / h_min > quasi_uniformity {
            return Err(Error::InvalidMesh(format!(
                "h/h_min = {} exceeds {quasi_uniformity}",
                h / h_min
            )));
        }
        Ok(Self {
            nodes,
            widths,
            h,
            h_min,
        })
    }

    pub fn cells(&self) -> usize {
        self.widths.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn width(&self, cell: usize) -> f64 {
        self.widths[cell]
    }

    pub fn left(&self, cell: usize) -> f64 {
        self.nodes[cell]
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    pub fn length(&self) -> f64 {
        let (a, b) = self.domain();
        b - a
    }

    /// Averaged width `(h_{i-1/2} + h_{i+1/2}) / 2` around interface `i`.
    pub fn interface_width(&self, interface: usize) -> f64 {
        let m = self.cells();
        let left = self.widths[(interface + m - 1) % m];
        let right = self.widths[interface % m];
        0.5 * (left + right)
    }

    /// Wraps `x` into `[a, b)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let (a, _) = self.domain();
        let len = self.length();
        let y = (x - a).rem_euclid(len) + a;
        if y >= a + len {
            a
        } else {
            y
        }
    }

    /// Cell containing `x` (after periodic wrap) and the reference coordinate.
    /// Interface points belong to the cell on their right.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let y = self.wrap(x);
        let cell = match self
            .nodes
            .binary_search_by(|n| n.partial_cmp(&y).expect("finite coordinate"))
        {
            Ok(i) => i.min(self.cells() - 1),
            Err(i) => i.saturating_sub(1).min(self.cells() - 1),
        };
        let xi = 2.0 * (y - self.nodes[cell]) / self.widths[cell] - 1.0;
        (cell, xi.clamp(-1.0, 1.0))
    }

    /// Physical coordinate of reference point `xi` in `cell`.
    pub fn map(&self, cell: usize, xi: f64) -> f64 {
        self.nodes[cell] + 0.5 * (xi + 1.0) * self.widths[cell]
    }

    /// Refines every cell into `factor` equal parts.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        let mut nodes = Vec::with_capacity(self.cells() * factor + 1);
        for cell in 0..self.cells() {
            for j in 0..factor {
                nodes.push(self.nodes[cell] + self.widths[cell] * j as f64 / factor as f64);
            }
        }
        nodes.push(self.nodes[self.cells()]);
        let (a, b) = self.domain();
        Self::build_with_cap(
            (a, b),
            nodes.len() - 1,
            Grading::Nodes(nodes),
            f64::INFINITY,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_of_sixteen_cells() {
        let mesh = Mesh1D::uniform(0.0, 2.0, 16).unwrap();
        assert!(mesh.widths().iter().all(|&w| (w - 0.125).abs() < 1e-15));
        assert_eq!(mesh.h(), 0.125);
        assert_eq!(mesh.h_min(), 0.125);
    }

    #[test]
    fn uniform_two_cells() {
        let mesh = Mesh1D::uniform(0.0, 1.0, 2).unwrap();
        assert_eq!(mesh.widths(), &[0.5, 0.5]);
    }

    #[test]
    fn explicit_nodes() {
        let mesh = Mesh1D::build((0.0, 1.0), 2, Grading::Nodes(vec![0.0, 0.25, 1.0])).unwrap();
        assert_eq!(mesh.widths(), &[0.25, 0.75]);
        assert_eq!(mesh.h(), 0.75);
        assert_eq!(mesh.h_min(), 0.25);
        assert_eq!(mesh.interface_width(0), 0.5);
        assert_eq!(mesh.interface_width(1), 0.5);
    }

    #[test]
    fn rejects_non_monotone_nodes() {
        let err = Mesh1D::build((0.0, 1.0), 3, Grading::Nodes(vec![0.0, 0.6, 0.4, 1.0]));
        assert!(matches!(err, Err(Error::InvalidMesh(_))));
        assert!(matches!(
            Mesh1D::uniform(0.0, 1.0, 1),
            Err(Error::InvalidMesh(_))
        ));
    }

    #[test]
    fn rejects_strong_grading() {
        let nodes = vec![0.0, 0.01, 1.0];
        assert!(Mesh1D::build((0.0, 1.0), 2, Grading::Nodes(nodes)).is_err());
    }

    #[test]
    fn locate_wraps_periodically() {
        let mesh = Mesh1D::uniform(0.0, 2.0, 4).unwrap();
        assert_eq!(mesh.locate(0.5), (1, -1.0));
        let (cell, xi) = mesh.locate(2.25);
        assert_eq!(cell, 0);
        assert!((xi - 0.0).abs() < 1e-14);
        let (cell, xi) = mesh.locate(-0.25);
        assert_eq!(cell, 3);
        assert!((xi - 0.0).abs() < 1e-14);
        assert_eq!(mesh.locate(2.0).0, 0);
    }

    #[test]
    fn refine_nests() {
        let mesh = Mesh1D::uniform(0.0, 2.0, 4).unwrap().refine(4).unwrap();
        assert_eq!(mesh.cells(), 16);
        assert!((mesh.h() - 0.125).abs() < 1e-15);
    }
}
