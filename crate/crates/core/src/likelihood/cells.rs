use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::processes::FiniteStateHmm;
use crate::quantizers::CellPartition;
use crate::rng::{substream, tag};
use rand::Rng as _;

/// `log P[Y ∈ C_j | X = x]` for every state and cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLikelihoodTable {
    num_states: usize,
    num_cells: usize,
    log_prob: Vec<f64>,
    /// Per-state `1 - Σ_j P̂[C_j | x]` before renormalization.
    deficit: Vec<f64>,
}

impl CellLikelihoodTable {
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn log_prob(&self, state: usize, cell: usize) -> f64 {
        self.log_prob[state * self.num_cells + cell]
    }

    pub fn deficit(&self) -> &[f64] {
        &self.deficit
    }

    pub fn max_abs_deficit(&self) -> f64 {
        self.deficit.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    /// Message when the integration deficit of some state exceeds 1%.
    pub fn deficit_warning(&self) -> Option<String> {
        let d = self.max_abs_deficit();
        (d > 0.01).then(|| format!("cell integration deficit {:.3}% exceeds 1%", 100.0 * d))
    }
}

/// Integrates `f` (writing `k` values per point) over every cell, by
/// jittered-stratified uniform points in the cell's bounding box filtered on
/// membership. Returns `masses[j * k + i]`.
pub(crate) fn integrate_cells<F>(
    partition: &dyn CellPartition,
    k: usize,
    mc_per_cell: usize,
    seed: u64,
    execution: Execution,
    f: F,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let d = partition.dim();
    let boxes = partition.bounding_boxes();
    let per_axis = ((mc_per_cell.max(1) as f64).powf(1.0 / d as f64).ceil() as usize).max(1);
    let total = per_axis.pow(d as u32);
    let rows = execution.map(partition.num_cells(), |j| -> Result<Vec<f64>> {
        let b = &boxes[j];
        let mut rng = substream(seed, &[tag::CELL_MASS, j as u64]);
        let widths: Vec<f64> = (0..d).map(|a| (b.hi()[a] - b.lo()[a]) / per_axis as f64).collect();
        let mut acc = vec![0.0; k];
        let mut buf = vec![0.0; k];
        let mut y = vec![0.0; d];
        for s in 0..total {
            let mut r = s;
            for a in (0..d).rev() {
                let u: f64 = rng.random();
                y[a] = b.lo()[a] + ((r % per_axis) as f64 + u) * widths[a];
                r /= per_axis;
            }
            if partition.cell_of(&y)? == j {
                f(&y, &mut buf);
                acc.iter_mut().zip(&buf).for_each(|(a, v)| *a += v);
            }
        }
        let scale = b.volume() / total as f64;
        Ok(acc.into_iter().map(|v| v * scale).collect())
    });
    let mut out = Vec::with_capacity(partition.num_cells() * k);
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

/// `P[C_j | x]` by stratified Monte Carlo over each cell, renormalized per state.
pub fn cell_likelihoods(
    model: &FiniteStateHmm,
    partition: &dyn CellPartition,
    mc_per_cell: usize,
    seed: u64,
    execution: Execution,
) -> Result<CellLikelihoodTable> {
    if partition.domain() != model.domain() {
        return Err(Error::InvalidArgument("quantizer domain must equal the model domain".into()));
    }
    let s = model.num_states();
    let n = partition.num_cells();
    let masses = integrate_cells(partition, s, mc_per_cell, seed, execution, |y, out| {
        for (x, o) in out.iter_mut().enumerate() {
            *o = model.log_kernel(x, y).exp();
        }
    })?;
    Ok(table_from_masses(s, n, &masses))
}

pub(crate) fn table_from_masses(s: usize, n: usize, masses: &[f64]) -> CellLikelihoodTable {
    let mut log_prob = vec![0.0; s * n];
    let mut deficit = vec![0.0; s];
    for x in 0..s {
        let total: f64 = (0..n).map(|j| masses[j * s + x]).sum();
        deficit[x] = 1.0 - total;
        for j in 0..n {
            log_prob[x * n + j] = (masses[j * s + x] / total).ln().max(super::LOG_FLOOR);
        }
    }
    CellLikelihoodTable { num_states: s, num_cells: n, log_prob, deficit }
}
