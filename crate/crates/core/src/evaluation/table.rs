use crate::error::{invalid, Result};
use crate::exec::Execution;
use crate::highrate::{
    compute_de, compute_f, holder_lower_bound, marginal_density, score_field, CovariationProfile, DensityField,
    DensityKind, FbarConfig, Grid, ScoreEstimate, ScoreField, DEFAULT_NODES,
};
use crate::likelihood::{estimate_exponent_quantized, ExponentEstimate, QuantizedOptions};
use crate::processes::{Hypothesis, ProcessModel};
use crate::quantizers::{cell_stats, CellPartition, VoronoiQuantizer};
use serde::Serialize;

/// Where the point density used for a quantizer's `D_e` comes from.
#[derive(Debug, Clone)]
pub enum ZetaSource {
    /// Constant density over the truncation box.
    Uniform,
    Analytic(DensityField),
    /// Kernel-smoothed piecewise-constant density from Monte-Carlo cell volumes.
    Empirical,
}

impl ZetaSource {
    fn name(&self) -> &'static str {
        match self {
            ZetaSource::Uniform => "uniform",
            ZetaSource::Analytic(_) => "analytic",
            ZetaSource::Empirical => "empirical",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TableEntry<'a> {
    pub label: String,
    pub quantizer: &'a VoronoiQuantizer,
    pub zeta: ZetaSource,
}

/// Settings for [`exponent_loss_table`].
#[derive(Debug, Clone)]
pub struct TableConfig {
    pub grid_nodes: usize,
    pub fbar: FbarConfig,
    pub covariation: CovariationProfile,
    /// Smoothing kernel standard deviation for empirical densities, in grid steps.
    pub bandwidth: f64,
    /// Extra bandwidths whose `D_e` is reported alongside.
    pub sensitivity: Vec<f64>,
    /// Monte-Carlo points per cell for empirical cell volumes.
    pub mc_per_cell: usize,
    /// Path length for a quantized exponent estimate, when wanted.
    pub exponent_path: Option<usize>,
    pub likelihood: QuantizedOptions,
    pub seed: u64,
    pub execution: Execution,
}

impl TableConfig {
    pub fn new(seed: u64) -> Self {
        TableConfig {
            grid_nodes: DEFAULT_NODES,
            fbar: FbarConfig { seed, ..FbarConfig::default() },
            covariation: CovariationProfile::default(),
            bandwidth: 2.0,
            sensitivity: vec![1.0, 2.0, 3.0],
            mc_per_cell: 10_000,
            exponent_path: None,
            likelihood: QuantizedOptions { seed, ..QuantizedOptions::default() },
            seed,
            execution: Execution::default(),
        }
    }
}

/// Gridded inputs shared by every row of a comparison.
#[derive(Debug, Clone)]
pub struct TableFields {
    pub grid: Grid,
    pub p0: DensityField,
    pub score: ScoreEstimate,
    pub f: ScoreField,
}

pub fn table_fields(model: &ProcessModel, cfg: &TableConfig) -> Result<TableFields> {
    let grid = Grid::uniform(model.truncation_box(), cfg.grid_nodes)?;
    let p0 = marginal_density(model, Hypothesis::H0, &grid)?;
    let score = score_field(model, &grid, &cfg.fbar)?;
    let f = compute_f(&score, &cfg.covariation)?;
    Ok(TableFields { grid, p0, score, f })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandwidthPoint {
    pub bandwidth: f64,
    pub d_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonEntry {
    pub label: String,
    pub cells: usize,
    pub zeta_source: String,
    pub d_e: f64,
    pub bandwidth_sensitivity: Vec<BandwidthPoint>,
    pub exponent: Option<ExponentEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub model: String,
    pub grid_nodes: Vec<usize>,
    pub seed: u64,
    pub bandwidth: f64,
    /// `D_e` of the loss-optimal point density.
    pub optimal_d_e: f64,
    pub entries: Vec<ComparisonEntry>,
}

impl ComparisonReport {
    pub fn entry(&self, label: &str) -> Option<&ComparisonEntry> {
        self.entries.iter().find(|e| e.label == label)
    }
}

/// `D_e` (and optionally `K̂_N`) for each quantizer in `entries`.
pub fn exponent_loss_table(
    model: &ProcessModel,
    entries: &[TableEntry],
    cfg: &TableConfig,
) -> Result<ComparisonReport> {
    let fields = table_fields(model, cfg)?;
    exponent_loss_table_on(model, &fields, entries, cfg)
}

/// [`exponent_loss_table`] on precomputed fields.
pub fn exponent_loss_table_on(
    model: &ProcessModel,
    fields: &TableFields,
    entries: &[TableEntry],
    cfg: &TableConfig,
) -> Result<ComparisonReport> {
    if entries.is_empty() {
        return invalid("comparison needs at least one quantizer");
    }
    let grid = &fields.grid;
    let mut rows = Vec::with_capacity(entries.len());
    for e in entries {
        let q = e.quantizer;
        let (d_e, sensitivity) = match &e.zeta {
            ZetaSource::Uniform => (
                compute_de(&fields.p0, &fields.f, &DensityField::uniform(grid.clone(), DensityKind::PointDensity))?,
                vec![],
            ),
            ZetaSource::Analytic(z) => (compute_de(&fields.p0, &fields.f, z)?, vec![]),
            ZetaSource::Empirical => {
                let nodes = cell_density_on_grid(q, grid, cfg.mc_per_cell, cfg.seed, cfg.execution)?;
                let de_at = |bw: f64| -> Result<f64> {
                    let z = DensityField::new(grid.clone(), smooth(grid, &nodes, bw), DensityKind::PointDensity)?
                        .normalized()?;
                    compute_de(&fields.p0, &fields.f, &z)
                };
                let sens = cfg
                    .sensitivity
                    .iter()
                    .map(|&bw| Ok(BandwidthPoint { bandwidth: bw, d_e: de_at(bw)? }))
                    .collect::<Result<Vec<_>>>()?;
                (de_at(cfg.bandwidth)?, sens)
            }
        };
        let exponent = match cfg.exponent_path {
            Some(n) => Some(estimate_exponent_quantized(model, q, n, cfg.seed, &cfg.likelihood)?),
            None => None,
        };
        rows.push(ComparisonEntry {
            label: e.label.clone(),
            cells: q.num_cells(),
            zeta_source: e.zeta.name().into(),
            d_e,
            bandwidth_sensitivity: sensitivity,
            exponent,
        });
    }
    Ok(ComparisonReport {
        model: model.describe(),
        grid_nodes: grid.nodes_per_axis().to_vec(),
        seed: cfg.seed,
        bandwidth: cfg.bandwidth,
        optimal_d_e: holder_lower_bound(&fields.p0, &fields.f)?,
        entries: rows,
    })
}

/// `1 / (N V_j)` of the cell containing each grid node, volumes by Monte Carlo.
pub fn cell_density_on_grid(
    q: &VoronoiQuantizer,
    grid: &Grid,
    mc_per_cell: usize,
    seed: u64,
    execution: Execution,
) -> Result<Vec<f64>> {
    let stats = cell_stats(q, mc_per_cell.max(10_000) * q.num_cells(), seed, execution)?;
    let z = stats.point_density();
    execution
        .map(grid.len(), |i| -> Result<f64> {
            let mut y = grid.point(i);
            q.domain().clamp(&mut y);
            Ok(z[q.cell_of(&y)?])
        })
        .into_iter()
        .collect()
}

/// Separable Gaussian smoothing with standard deviation `bandwidth` grid steps,
/// truncated at four deviations, with edge values replicated past the border.
/// A zero bandwidth returns the input.
pub fn smooth(grid: &Grid, values: &[f64], bandwidth: f64) -> Vec<f64> {
    if bandwidth <= 0.0 {
        return values.to_vec();
    }
    let radius = (4.0 * bandwidth + 0.5) as i64;
    let mut kernel: Vec<f64> = (-radius..=radius).map(|x| (-0.5 * (x as f64 / bandwidth).powi(2)).exp()).collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);
    let mut cur = values.to_vec();
    let dims = grid.nodes_per_axis();
    for axis in 0..grid.dim() {
        let n = dims[axis] as i64;
        let stride: usize = dims[axis + 1..].iter().product();
        let mut next = vec![0.0; cur.len()];
        for (flat, out) in next.iter_mut().enumerate() {
            let i = ((flat / stride) % n as usize) as i64;
            let base = flat - i as usize * stride;
            *out = kernel
                .iter()
                .enumerate()
                .map(|(t, w)| w * cur[base + (i + t as i64 - radius).clamp(0, n - 1) as usize * stride])
                .sum();
        }
        cur = next;
    }
    cur
}
