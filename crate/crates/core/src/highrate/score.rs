use super::fields::{CovariationProfile, DensityField, ScoreEstimate, ScoreField, ScoreMoments};
use super::grid::Grid;
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::processes::{GaussLinearModel, Hypothesis, ModelKind, ObservationWindow, ProcessModel};
use crate::rng::{substream, tag};

/// How `F̄` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FbarMethod {
    /// Closed form when the model admits one, Monte Carlo otherwise.
    #[default]
    Auto,
    MonteCarlo,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbarConfig {
    /// Half-width of the side window.
    pub k: usize,
    pub n_mc: usize,
    pub seed: u64,
    pub method: FbarMethod,
    pub execution: Execution,
}

impl Default for FbarConfig {
    fn default() -> Self {
        FbarConfig { k: 3, n_mc: 1000, seed: 0, method: FbarMethod::Auto, execution: Execution::default() }
    }
}

/// `F̄` and `L̄` on `grid` using the method selected in `config`.
pub fn score_field(model: &ProcessModel, grid: &Grid, config: &FbarConfig) -> Result<ScoreEstimate> {
    let exact_available = !matches!(model.kind(), ModelKind::Hmm(_));
    match config.method {
        FbarMethod::MonteCarlo => estimate_fbar(model, grid, config),
        FbarMethod::Auto if !exact_available => estimate_fbar(model, grid, config),
        _ => match model.kind() {
            ModelKind::Gauss(m) => exact_gaussian_score(m, grid, config.k),
            ModelKind::Iid(_) => exact_iid_score(model, grid),
            ModelKind::Hmm(_) => Err(Error::Unsupported("no closed-form score field for hidden Markov models".into())),
        },
    }
}

/// Monte-Carlo `F̄_k(y) = E‖∇_{y₀} log(p₀/p₁)(Y_{-k:-1}, y, Y_{1:k})‖²` with side
/// samples drawn i.i.d. from the H0 marginal.
pub fn estimate_fbar(model: &ProcessModel, grid: &Grid, config: &FbarConfig) -> Result<ScoreEstimate> {
    if config.n_mc == 0 {
        return invalid("n_mc must be at least 1");
    }
    let d = model.dim();
    if grid.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: grid.dim() });
    }
    let k = config.k;
    let per_node = config.execution.map(grid.len(), |node| -> Result<(f64, f64, Vec<f64>)> {
        let y = grid.point(node);
        let mut rng = substream(config.seed, &[tag::FBAR, node as u64]);
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let mut outer = vec![0.0; d * d];
        let mut data = vec![0.0; (2 * k + 1) * d];
        for _ in 0..config.n_mc {
            let side = model.sample_marginal(Hypothesis::H0, 2 * k, &mut rng);
            data[..k * d].copy_from_slice(&side[..k * d]);
            data[k * d..(k + 1) * d].copy_from_slice(&y);
            data[(k + 1) * d..].copy_from_slice(&side[k * d..]);
            let w = ObservationWindow::new(-(k as i64), d, data.clone())?;
            let g = model.grad_log_ratio(&w, k)?;
            let sq: f64 = g.iter().map(|v| v * v).sum();
            sum += sq;
            sum2 += sq * sq;
            for a in 0..d {
                for b in 0..d {
                    outer[a * d + b] += g[a] * g[b];
                }
            }
        }
        let n = config.n_mc as f64;
        let mean = sum / n;
        let var = if config.n_mc > 1 { ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        outer.iter_mut().for_each(|v| *v /= n);
        Ok((mean, (var / n).sqrt(), outer))
    });
    collect_estimate(grid, per_node)
}

fn collect_estimate(grid: &Grid, per_node: Vec<Result<(f64, f64, Vec<f64>)>>) -> Result<ScoreEstimate> {
    let mut values = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    let mut lbar = Vec::with_capacity(grid.len() * grid.dim() * grid.dim());
    for r in per_node {
        let (v, e, o) = r?;
        values.push(v);
        stderr.push(e);
        lbar.extend(o);
    }
    Ok(ScoreEstimate {
        fbar: ScoreField::new(grid.clone(), values, stderr)?,
        moments: ScoreMoments::new(grid.clone(), lbar)?,
    })
}

/// Closed-form `F̄_k` and `L̄` for Gaussian models with white H0 observations.
///
/// Per axis the gradient is `c₀ y + Σ_{j≠0} c_j Y_j` with `c` the centre row of
/// `Σ1⁻¹ - Σ0⁻¹`, so `L̄_ab = c₀² y_a y_b + δ_ab s₀ Σ_{j≠0} c_j²`.
pub fn exact_gaussian_score(model: &GaussLinearModel, grid: &Grid, k: usize) -> Result<ScoreEstimate> {
    let d = model.dim();
    if grid.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: grid.dim() });
    }
    let c = model.score_coefficients(k);
    let c0 = c[k];
    let s0 = model.marginal_var(Hypothesis::H0);
    let side: f64 = s0 * c.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, v)| v * v).sum::<f64>();
    let per_node = (0..grid.len())
        .map(|node| {
            let y = grid.point(node);
            let mut outer = vec![0.0; d * d];
            for a in 0..d {
                for b in 0..d {
                    outer[a * d + b] = c0 * c0 * y[a] * y[b] + if a == b { side } else { 0.0 };
                }
            }
            let tr = (0..d).map(|a| outer[a * d + a]).sum();
            Ok((tr, 0.0, outer))
        })
        .collect();
    collect_estimate(grid, per_node)
}

fn exact_iid_score(model: &ProcessModel, grid: &Grid) -> Result<ScoreEstimate> {
    let d = model.dim();
    let per_node = (0..grid.len())
        .map(|node| {
            let w = ObservationWindow::new(0, d, grid.point(node))?;
            let g = model.grad_log_ratio(&w, 0)?;
            let outer: Vec<f64> = (0..d * d).map(|i| g[i / d] * g[i % d]).collect();
            Ok((g.iter().map(|v| v * v).sum(), 0.0, outer))
        })
        .collect();
    collect_estimate(grid, per_node)
}

/// `F(y) = ∇Λᵀ M ∇Λ` with `Λ = log(p₀/p₁)` differentiated on the grid by
/// central differences (one-sided at the edges). Nodes where either density
/// vanishes get `F = 0`.
pub fn gupta_hero_f(p0: &DensityField, p1: &DensityField, m: &CovariationProfile) -> Result<ScoreField> {
    let grid = p0.grid();
    grid.check_same(p1.grid())?;
    let d = grid.dim();
    m.validate(d)?;
    let lam: Vec<f64> = p0
        .values()
        .iter()
        .zip(p1.values())
        .map(|(a, b)| if *a > 0.0 && *b > 0.0 { a.ln() - b.ln() } else { f64::NAN })
        .collect();
    let values = (0..grid.len())
        .map(|node| {
            if lam[node].is_nan() {
                return 0.0;
            }
            let idx = grid.multi_index(node);
            let mut g = nalgebra::DVector::zeros(d);
            for a in 0..d {
                let n = grid.nodes_per_axis()[a];
                let (lo, hi) = (idx[a].saturating_sub(1), (idx[a] + 1).min(n - 1));
                let mut il = idx.clone();
                il[a] = lo;
                let mut ih = idx.clone();
                ih[a] = hi;
                let (vl, vh) = (lam[grid.flat_index(&il)], lam[grid.flat_index(&ih)]);
                g[a] = if vl.is_nan() || vh.is_nan() { 0.0 } else { (vh - vl) / ((hi - lo) as f64 * grid.step(a)) };
            }
            (g.transpose() * m.at(node, d) * &g)[(0, 0)].max(0.0)
        })
        .collect();
    ScoreField::exact(grid.clone(), values)
}
