use crate::error::{invalid, Result};
use crate::processes::DomainBox;
use crate::quadrature::trapezoid_weights;

/// Regular lattice over a box. Nodes are stored row-major with the first axis
/// varying slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: DomainBox,
    nodes: Vec<usize>,
}

/// Nodes per axis used when the caller does not choose.
pub const DEFAULT_NODES: usize = 101;

impl Grid {
    pub fn new(domain: DomainBox, nodes_per_axis: Vec<usize>) -> Result<Self> {
        if nodes_per_axis.len() != domain.dim() {
            return invalid("one node count per axis is required");
        }
        if nodes_per_axis.iter().any(|&n| n < 2) {
            return invalid("grids need at least two nodes per axis");
        }
        Ok(Grid { domain, nodes: nodes_per_axis })
    }

    /// Same node count on every axis.
    pub fn uniform(domain: DomainBox, nodes: usize) -> Result<Self> {
        let d = domain.dim();
        Self::new(domain, vec![nodes; d])
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self, axis: usize) -> f64 {
        (self.domain.hi()[axis] - self.domain.lo()[axis]) / (self.nodes[axis] - 1) as f64
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.nodes[axis] {
            self.domain.hi()[axis]
        } else {
            self.domain.lo()[axis] + i as f64 * self.step(axis)
        }
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.nodes[axis]).map(|i| self.coord(axis, i)).collect()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            idx[axis] = flat % self.nodes[axis];
            flat /= self.nodes[axis];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.nodes).fold(0, |acc, (i, n)| acc * n + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).iter().enumerate().map(|(a, &i)| self.coord(a, i)).collect()
    }

    /// Product trapezoid weights, one per node.
    pub fn weights(&self) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = (0..self.dim()).map(|a| trapezoid_weights(self.nodes[a], self.step(a))).collect();
        (0..self.len())
            .map(|f| self.multi_index(f).iter().enumerate().map(|(a, &i)| per_axis[a][i]).product())
            .collect()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        self.weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Multilinear interpolation of node values at `y` (clamped to the box).
    pub fn interpolate(&self, values: &[f64], y: &[f64]) -> f64 {
        let d = self.dim();
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for a in 0..d {
            let t = ((y[a] - self.domain.lo()[a]) / self.step(a)).clamp(0.0, (self.nodes[a] - 1) as f64);
            let i = (t.floor() as usize).min(self.nodes[a] - 2);
            base[a] = i;
            frac[a] = t - i as f64;
        }
        let mut acc = 0.0;
        let mut idx = vec![0usize; d];
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            for a in 0..d {
                let up = (corner >> a) & 1 == 1;
                idx[a] = base[a] + usize::from(up);
                w *= if up { frac[a] } else { 1.0 - frac[a] };
            }
            if w != 0.0 {
                acc += w * values[self.flat_index(&idx)];
            }
        }
        acc
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(crate::Error::GridMismatch(format!(
                "grids differ: {:?} over {:?} vs {:?} over {:?}",
                self.nodes, self.domain, other.nodes, other.domain
            )));
        }
        Ok(())
    }
}
