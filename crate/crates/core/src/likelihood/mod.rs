//! Joint densities of raw and quantized paths, log-likelihood ratios and
//! Monte-Carlo error-exponent estimators.

mod cells;
mod gauss_filter;
mod oracle;

pub use cells::{cell_likelihoods, CellLikelihoodTable};
pub use gauss_filter::{GaussCellFilter, LatentGrid};
pub use oracle::gaussian_word_log_prob;

use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::processes::{FiniteStateHmm, Hypothesis, ModelKind, ObservationWindow, ProcessModel};
use crate::quadrature::adaptive_simpson;
use crate::quantizers::CellPartition;
use serde::{Deserialize, Serialize};

/// Log-probabilities below this are replaced by it.
pub const LOG_FLOOR: f64 = -745.0;

/// Batches used for batch-means standard errors.
pub const BATCHES: usize = 20;

/// `L_k = log p₁(y_{1:k}) - log p₀(y_{1:k})` for `k = 1..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLikelihoodPath {
    pub values: Vec<f64>,
    /// Some probability was floored at `exp(LOG_FLOOR)`.
    pub floored: bool,
}

impl LogLikelihoodPath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("nonempty path")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentMethod {
    ErgodicAverage,
    ExactDiscrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub path_length: usize,
    /// Number of past samples conditioned on.
    pub conditioning_depth: usize,
    pub method: ExponentMethod,
}

fn floor_prefix(v: &mut [f64]) -> bool {
    let mut floored = false;
    let mut prev_raw = 0.0;
    let mut acc = 0.0;
    for x in v.iter_mut() {
        let step = *x - prev_raw;
        prev_raw = *x;
        let step = if step.is_nan() || step < LOG_FLOOR {
            floored = true;
            LOG_FLOOR
        } else {
            step
        };
        acc += step;
        *x = acc;
    }
    floored
}

/// `log p_hyp(y_{1:t})` for every prefix of `window`.
pub fn prefix_log_densities(model: &ProcessModel, hyp: Hypothesis, window: &ObservationWindow) -> Result<Vec<f64>> {
    if window.is_empty() {
        return invalid("window must be nonempty");
    }
    model.check_window(window)?;
    let out = match model.kind() {
        ModelKind::Iid(m) => {
            let mut acc = 0.0;
            window
                .samples()
                .map(|y| {
                    acc += m.marginal(hyp).logpdf(y);
                    acc
                })
                .collect()
        }
        ModelKind::Hmm(m) => m.forward_log_prefix(hyp, &hmm_log_emissions(m, window)),
        ModelKind::Gauss(m) => m.prefix_log_density(hyp, window.as_slice()),
    };
    Ok(out)
}

fn hmm_log_emissions(m: &FiniteStateHmm, window: &ObservationWindow) -> Vec<f64> {
    let s = m.num_states();
    let mut le = vec![0.0; window.len() * s];
    for (t, y) in window.samples().enumerate() {
        m.log_emissions_into(y, &mut le[t * s..(t + 1) * s]);
    }
    le
}

/// `log p_hyp(y_{1:n})`.
pub fn joint_log_density(model: &ProcessModel, hyp: Hypothesis, window: &ObservationWindow) -> Result<f64> {
    Ok(*prefix_log_densities(model, hyp, window)?.last().expect("nonempty"))
}

/// LLR of every prefix, one forward pass per hypothesis.
pub fn llr_path(model: &ProcessModel, window: &ObservationWindow) -> Result<LogLikelihoodPath> {
    let mut l0 = prefix_log_densities(model, Hypothesis::H0, window)?;
    let mut l1 = prefix_log_densities(model, Hypothesis::H1, window)?;
    let floored = floor_prefix(&mut l0) | floor_prefix(&mut l1);
    Ok(LogLikelihoodPath { values: l1.iter().zip(&l0).map(|(a, b)| a - b).collect(), floored })
}

/// `-L_n/n` and its batch-means standard error.
fn ergodic_estimate(path: &LogLikelihoodPath) -> ExponentEstimate {
    let n = path.len();
    let l = &path.values;
    let at = |k: usize| if k == 0 { 0.0 } else { l[k - 1] };
    let batches = BATCHES.min(n);
    let means: Vec<f64> = (0..batches)
        .map(|b| {
            let (s, e) = (b * n / batches, (b + 1) * n / batches);
            -(at(e) - at(s)) / (e - s) as f64
        })
        .collect();
    let value = -path.last() / n as f64;
    let mean: f64 = means.iter().sum::<f64>() / batches as f64;
    let var =
        if batches > 1 { means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64 } else { 0.0 };
    ExponentEstimate {
        value,
        standard_error: (var / batches as f64).sqrt(),
        path_length: n,
        conditioning_depth: n - 1,
        method: ExponentMethod::ErgodicAverage,
    }
}

/// `K̂ = -L_n/n` on an H0 path of length `n ≥ 1000`.
pub fn estimate_exponent_raw(model: &ProcessModel, n: usize, seed: u64) -> Result<ExponentEstimate> {
    estimate_exponent_raw_with(model, n, 0, seed)
}

pub fn estimate_exponent_raw_with(
    model: &ProcessModel,
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<ExponentEstimate> {
    if n < 1000 {
        return invalid("exponent estimation needs n >= 1000");
    }
    let path = model.sample_path(Hypothesis::H0, n, burn_in, seed)?;
    Ok(ergodic_estimate(&llr_path(model, &path)?))
}

/// Settings for quantized likelihood evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizedOptions {
    /// Monte-Carlo points per cell for multi-dimensional cell integrals.
    pub mc_per_cell: usize,
    pub seed: u64,
    /// Allow the discretized-state filter for Gaussian models.
    pub gauss_approximation: bool,
    pub latent: LatentGrid,
    pub execution: Execution,
}

impl Default for QuantizedOptions {
    fn default() -> Self {
        QuantizedOptions {
            mc_per_cell: 4096,
            seed: 0,
            gauss_approximation: true,
            latent: LatentGrid::default(),
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone)]
enum Evaluator {
    Hmm(CellLikelihoodTable),
    Iid([Vec<f64>; 2]),
    Gauss(GaussCellFilter),
}

/// Likelihood of cell-index sequences for one model and partition.
#[derive(Debug, Clone)]
pub struct QuantizedLikelihood<'a> {
    model: &'a ProcessModel,
    evaluator: Evaluator,
    num_cells: usize,
    clamp: bool,
}

impl<'a> QuantizedLikelihood<'a> {
    pub fn new(model: &'a ProcessModel, partition: &dyn CellPartition, options: &QuantizedOptions) -> Result<Self> {
        if partition.dim() != model.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), got: partition.dim() });
        }
        let n = partition.num_cells();
        let evaluator = match model.kind() {
            ModelKind::Hmm(m) => {
                Evaluator::Hmm(cell_likelihoods(m, partition, options.mc_per_cell, options.seed, options.execution)?)
            }
            ModelKind::Iid(_) => Evaluator::Iid(iid_log_masses(model, partition, options)?),
            ModelKind::Gauss(m) => {
                if !options.gauss_approximation {
                    return Err(Error::Unsupported(
                        "quantized likelihood of Gaussian models requires the discretized-state approximation".into(),
                    ));
                }
                Evaluator::Gauss(GaussCellFilter::new(m, partition, options.latent)?)
            }
        };
        Ok(QuantizedLikelihood { model, evaluator, num_cells: n, clamp: model.bounded_domain().is_none() })
    }

    pub fn model(&self) -> &ProcessModel {
        self.model
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    /// Whether paths are projected onto the partition domain before quantizing.
    pub fn clamps(&self) -> bool {
        self.clamp
    }

    pub fn hmm_table(&self) -> Option<&CellLikelihoodTable> {
        match &self.evaluator {
            Evaluator::Hmm(t) => Some(t),
            _ => None,
        }
    }

    /// `log P_hyp[j_1..j_t]` for every prefix.
    pub fn prefix_log_prob(&self, hyp: Hypothesis, cells: &[usize]) -> Result<(Vec<f64>, bool)> {
        if let Some(&j) = cells.iter().find(|&&j| j >= self.num_cells) {
            return invalid(format!("cell index {j} out of range"));
        }
        Ok(match &self.evaluator {
            Evaluator::Hmm(t) => {
                let ModelKind::Hmm(m) = self.model.kind() else { unreachable!() };
                let s = t.num_states();
                let mut le = Vec::with_capacity(cells.len() * s);
                for &j in cells {
                    le.extend((0..s).map(|x| t.log_prob(x, j)));
                }
                let floored = le.iter().any(|v| *v <= LOG_FLOOR);
                (m.forward_log_prefix(hyp, &le), floored)
            }
            Evaluator::Iid(masses) => {
                let lm = &masses[hyp.index()];
                let mut acc = 0.0;
                let v = cells
                    .iter()
                    .map(|&j| {
                        acc += lm[j];
                        acc
                    })
                    .collect();
                (v, cells.iter().any(|&j| lm[j] <= LOG_FLOOR))
            }
            Evaluator::Gauss(f) => f.prefix_log_prob(hyp, cells),
        })
    }

    pub fn llr_path(&self, cells: &[usize]) -> Result<LogLikelihoodPath> {
        if cells.is_empty() {
            return invalid("cell sequence must be nonempty");
        }
        let (mut p0, f0) = self.prefix_log_prob(Hypothesis::H0, cells)?;
        let (mut p1, f1) = self.prefix_log_prob(Hypothesis::H1, cells)?;
        let floored = f0 | f1 | floor_prefix(&mut p0) | floor_prefix(&mut p1);
        Ok(LogLikelihoodPath { values: p1.iter().zip(&p0).map(|(a, b)| a - b).collect(), floored })
    }
}

fn iid_log_masses(
    model: &ProcessModel,
    partition: &dyn CellPartition,
    options: &QuantizedOptions,
) -> Result<[Vec<f64>; 2]> {
    let n = partition.num_cells();
    let masses: Vec<f64> = match partition.intervals() {
        Some(iv) => iv
            .iter()
            .flat_map(|&(a, b)| {
                Hypothesis::BOTH.map(|h| {
                    let f = |x: f64| model.marginal_logpdf(h, &[x]).map_or(0.0, f64::exp);
                    adaptive_simpson(&f, a, b, 1e-14)
                })
            })
            .collect(),
        None => {
            cells::integrate_cells(partition, 2, options.mc_per_cell, options.seed, options.execution, |y, out| {
                for h in Hypothesis::BOTH {
                    out[h.index()] = model.marginal_logpdf(h, y).map_or(0.0, f64::exp);
                }
            })?
        }
    };
    let t = cells::table_from_masses(2, n, &masses);
    Ok(Hypothesis::BOTH.map(|h| (0..n).map(|j| t.log_prob(h.index(), j)).collect()))
}

/// LLR of the cell sequence `cells`.
pub fn quantized_llr_path(
    model: &ProcessModel,
    partition: &dyn CellPartition,
    cells: &[usize],
    options: &QuantizedOptions,
) -> Result<LogLikelihoodPath> {
    QuantizedLikelihood::new(model, partition, options)?.llr_path(cells)
}

/// `K̂_N = -L_{n,N}/n` on a quantized H0 path.
pub fn estimate_exponent_quantized(
    model: &ProcessModel,
    partition: &dyn CellPartition,
    n: usize,
    seed: u64,
    options: &QuantizedOptions,
) -> Result<ExponentEstimate> {
    if n < 1000 {
        return invalid("exponent estimation needs n >= 1000");
    }
    let ql = QuantizedLikelihood::new(model, partition, options)?;
    let path = model.sample_path(Hypothesis::H0, n, 0, seed)?;
    let cells = partition.quantize_window(&path, ql.clamps())?;
    Ok(ergodic_estimate(&ql.llr_path(&cells)?))
}

/// Discrete KL `Σ_j P₀[C_j] log(P₀[C_j]/P₁[C_j])` of a scalar i.i.d. model, with
/// cell masses by adaptive quadrature.
pub fn exact_discrete_exponent(model: &ProcessModel, partition: &dyn CellPartition) -> Result<ExponentEstimate> {
    if !matches!(model.kind(), ModelKind::Iid(_)) || model.dim() != 1 {
        return Err(Error::Unsupported("exact discrete exponent needs a scalar i.i.d. model".into()));
    }
    let [l0, l1] = iid_log_masses(model, partition, &QuantizedOptions::default())?;
    let value = l0.iter().zip(&l1).filter(|(a, _)| **a > LOG_FLOOR).map(|(a, b)| a.exp() * (a - b)).sum();
    Ok(ExponentEstimate {
        value,
        standard_error: 0.0,
        path_length: 1,
        conditioning_depth: 0,
        method: ExponentMethod::ExactDiscrete,
    })
}
