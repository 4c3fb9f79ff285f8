use super::CellPartition;
use crate::error::{invalid, Error, Result};
use crate::highrate::DensityField;
use crate::processes::DomainBox;

/// Scalar quantizer with explicit breakpoints `a = b_0 < ... < b_N = b`.
/// Cell `j` is `[b_j, b_{j+1})`, the last cell is closed.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanderQuantizer {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
    domain: DomainBox,
}

impl CompanderQuantizer {
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return invalid("a compander needs at least one cell");
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) || breakpoints.iter().any(|b| !b.is_finite()) {
            return invalid("breakpoints must be finite and strictly increasing");
        }
        let levels = breakpoints.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let domain = DomainBox::new(vec![breakpoints[0]], vec![*breakpoints.last().unwrap()])?;
        Ok(CompanderQuantizer { breakpoints, levels, domain })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Cell centroids under uniform weighting.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Empirical point density `1 / (N · width_j)` per cell.
    pub fn cell_point_density(&self) -> Vec<f64> {
        let n = self.levels.len() as f64;
        self.breakpoints.windows(2).map(|w| 1.0 / (n * (w[1] - w[0]))).collect()
    }
}

impl CellPartition for CompanderQuantizer {
    fn num_cells(&self) -> usize {
        self.levels.len()
    }

    fn dim(&self) -> usize {
        1
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn cell_of(&self, y: &[f64]) -> Result<usize> {
        if y.len() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: y.len() });
        }
        if !self.domain.contains(y) {
            return Err(Error::OutOfDomain(format!("{} lies outside the compander range", y[0])));
        }
        let j = self.breakpoints.partition_point(|b| *b <= y[0]);
        Ok(j.saturating_sub(1).min(self.levels.len() - 1))
    }

    fn intervals(&self) -> Option<Vec<(f64, f64)>> {
        Some(self.breakpoints.windows(2).map(|w| (w[0], w[1])).collect())
    }

    fn bounding_boxes(&self) -> Vec<DomainBox> {
        self.breakpoints.windows(2).map(|w| DomainBox::new(vec![w[0]], vec![w[1]]).expect("ordered")).collect()
    }
}

/// Compressor `φ(x) = ∫_a^x ζ` (trapezoid, so `φ` is piecewise quadratic) and
/// breakpoints at `φ⁻¹(j/N)`.
pub fn compander_from_density(zeta: &DensityField, cells: usize) -> Result<CompanderQuantizer> {
    let grid = zeta.grid();
    if grid.dim() != 1 {
        return invalid("companders are scalar");
    }
    if cells == 0 {
        return invalid("at least one cell is required");
    }
    let z = zeta.values();
    if let Some(i) = z.iter().position(|v| *v <= 0.0) {
        return invalid(format!("point density must be positive; node {i} is {}", z[i]));
    }
    let x = grid.axis_coords(0);
    let mut phi = vec![0.0; x.len()];
    for i in 1..x.len() {
        phi[i] = phi[i - 1] + 0.5 * (z[i - 1] + z[i]) * (x[i] - x[i - 1]);
    }
    let total = *phi.last().unwrap();
    let mut bps = Vec::with_capacity(cells + 1);
    bps.push(x[0]);
    let mut seg = 0;
    for j in 1..cells {
        let target = total * j as f64 / cells as f64;
        while seg + 2 < x.len() && phi[seg + 1] < target {
            seg += 1;
        }
        let h = x[seg + 1] - x[seg];
        let s = (z[seg + 1] - z[seg]) / h;
        let r = target - phi[seg];
        let disc = (z[seg] * z[seg] + 2.0 * s * r).max(0.0);
        let t = 2.0 * r / (z[seg] + disc.sqrt());
        bps.push((x[seg] + t).clamp(x[seg], x[seg + 1]));
    }
    bps.push(*x.last().unwrap());
    CompanderQuantizer::new(bps)
}
