use crate::error::{Error, Result};
use crate::highrate::DensityField;
use crate::rng::{substream, tag};
use rand::Rng as _;

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionSample {
    /// Draws back to back, `dim` values each.
    pub samples: Vec<f64>,
    pub dim: usize,
    pub acceptance_rate: f64,
}

/// `n` draws from the multilinear interpolant of `target` by uniform proposals
/// on its box, accepted under the envelope `1.05 · max node value`.
pub fn rejection_sample(target: &DensityField, n: usize, seed: u64) -> Result<RejectionSample> {
    let grid = target.grid();
    let d = grid.dim();
    let vmax = target.values().iter().copied().fold(0.0, f64::max);
    if !(vmax > 0.0) {
        return Err(Error::Degenerate("rejection target has zero mass".into()));
    }
    let bound = 1.05 * vmax;
    let (lo, hi) = (grid.domain().lo(), grid.domain().hi());
    let mut rng = substream(seed, &[tag::REJECTION]);
    let mut samples = Vec::with_capacity(n * d);
    let mut y = vec![0.0; d];
    let mut proposals: u64 = 0;
    while samples.len() < n * d {
        for a in 0..d {
            y[a] = rng.random_range(lo[a]..=hi[a]);
        }
        proposals += 1;
        let u: f64 = rng.random::<f64>() * bound;
        if u < grid.interpolate(target.values(), &y) {
            samples.extend_from_slice(&y);
        }
    }
    let acceptance_rate = if proposals == 0 { 1.0 } else { n as f64 / proposals as f64 };
    Ok(RejectionSample { samples, dim: d, acceptance_rate })
}
