use crate::error::{Error, Result};
use crate::likelihood::{gaussian_word_log_prob, GaussCellFilter, QuantizedOptions};
use crate::processes::{Hypothesis, ModelKind, ProcessModel};
use crate::quantizers::CellPartition;
use crate::rng::{substream, tag};
use serde::Serialize;

/// Largest allowed gap between filtered and exhaustive LLR values.
pub const PREFLIGHT_TOLERANCE: f64 = 1e-2;

const WORDS_PER_HYPOTHESIS: usize = 6;
const WORD_LENGTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PreflightReport {
    pub words_checked: usize,
    pub max_abs_error: f64,
    pub tolerance: f64,
}

/// Compares the discretized-state LLR of short sampled words with exhaustive
/// quadrature. Applies to scalar Gaussian models; `None` for other models.
pub fn preflight_gaussian(
    model: &ProcessModel,
    partition: &dyn CellPartition,
    options: &QuantizedOptions,
    seed: u64,
) -> Result<Option<PreflightReport>> {
    let ModelKind::Gauss(gm) = model.kind() else { return Ok(None) };
    if gm.dim() != 1 || !options.gauss_approximation {
        return Ok(None);
    }
    let Some(iv) = partition.intervals() else { return Ok(None) };
    let filter = GaussCellFilter::new(gm, partition, options.latent)?;
    let (lo, hi) = (partition.domain().lo()[0], partition.domain().hi()[0]);
    let mut max_err = 0.0f64;
    let mut words = 0;
    for hyp in Hypothesis::BOTH {
        for w in 0..WORDS_PER_HYPOTHESIS {
            let mut rng = substream(seed, &[tag::ROC, 2 + hyp.index() as u64, w as u64]);
            let path = model.sample_path_with(hyp, WORD_LENGTH, 0, &mut rng)?;
            let cells = partition.quantize_window(&path, true)?;
            let f1 = filter.prefix_log_prob(Hypothesis::H1, &cells).0;
            let f0 = filter.prefix_log_prob(Hypothesis::H0, &cells).0;
            for len in 1..=WORD_LENGTH {
                let word = &cells[..len];
                let e1 = gaussian_word_log_prob(gm, Hypothesis::H1, &iv, lo, hi, word)?;
                let e0 = gaussian_word_log_prob(gm, Hypothesis::H0, &iv, lo, hi, word)?;
                max_err = max_err.max(((f1[len - 1] - f0[len - 1]) - (e1 - e0)).abs());
                words += 1;
            }
        }
    }
    if max_err > PREFLIGHT_TOLERANCE {
        return Err(Error::Preflight(format!(
            "discretized-state LLR deviates from exhaustive quadrature by {max_err:.3e} (tolerance {PREFLIGHT_TOLERANCE:e})"
        )));
    }
    Ok(Some(PreflightReport { words_checked: words, max_abs_error: max_err, tolerance: PREFLIGHT_TOLERANCE }))
}
