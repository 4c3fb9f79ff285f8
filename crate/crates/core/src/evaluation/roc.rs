use super::preflight::{preflight_gaussian, PreflightReport};
use crate::error::{invalid, Result};
use crate::likelihood::{QuantizedLikelihood, QuantizedOptions};
use crate::processes::{Hypothesis, ProcessModel};
use crate::quantizers::CellPartition;
use crate::rng::{substream, tag};
use serde::Serialize;
use std::fmt::Write as _;

/// Empirical trade-off between false alarm and miss of the test `L_n > τ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    /// `(false_alarm, miss)` sorted by false alarm, from `(0, 1)` to `(1, 0)`.
    pub points: Vec<(f64, f64)>,
    pub samples_per_hypothesis: usize,
    pub path_length: usize,
    pub label: String,
    pub preflight: Option<PreflightReport>,
}

impl RocCurve {
    /// Curve swept over every pooled statistic value as a threshold.
    pub fn from_statistics(
        stats_h0: &[f64],
        stats_h1: &[f64],
        path_length: usize,
        label: impl Into<String>,
    ) -> Result<Self> {
        if stats_h0.is_empty() || stats_h1.is_empty() {
            return invalid("both hypotheses need at least one statistic");
        }
        if stats_h0.len() != stats_h1.len() {
            return invalid("the same number of trials is required under each hypothesis");
        }
        let mut pooled: Vec<(f64, usize)> =
            stats_h0.iter().map(|v| (*v, 0)).chain(stats_h1.iter().map(|v| (*v, 1))).collect();
        pooled.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (n0, n1) = (stats_h0.len() as f64, stats_h1.len() as f64);
        let (mut fa, mut det) = (0usize, 0usize);
        let mut points = vec![(0.0, 1.0)];
        let mut i = 0;
        while i < pooled.len() {
            let v = pooled[i].0;
            while i < pooled.len() && pooled[i].0 == v {
                if pooled[i].1 == 0 {
                    fa += 1;
                } else {
                    det += 1;
                }
                i += 1;
            }
            points.push((fa as f64 / n0, 1.0 - det as f64 / n1));
        }
        Ok(RocCurve {
            points,
            samples_per_hypothesis: stats_h0.len(),
            path_length,
            label: label.into(),
            preflight: None,
        })
    }

    /// Miss probability at false alarm `alpha`, linearly interpolated.
    pub fn miss_at(&self, alpha: f64) -> f64 {
        let alpha = alpha.clamp(0.0, 1.0);
        let p = &self.points;
        let mut best = 1.0f64;
        for w in p.windows(2) {
            let ((a0, m0), (a1, m1)) = (w[0], w[1]);
            if a0 <= alpha && alpha <= a1 {
                let m = if a1 > a0 { m0 + (m1 - m0) * (alpha - a0) / (a1 - a0) } else { m0.min(m1) };
                best = best.min(m);
            }
        }
        best
    }

    /// Binomial standard error of the miss estimate at `alpha`.
    pub fn miss_stderr(&self, alpha: f64) -> f64 {
        let m = self.miss_at(alpha);
        (m * (1.0 - m) / self.samples_per_hypothesis as f64).sqrt()
    }

    /// CSV with header `pfa,pmiss`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("pfa,pmiss\n");
        for (a, m) in &self.points {
            let _ = writeln!(s, "{a},{m}");
        }
        s
    }
}

/// Area under `(false_alarm, 1 - miss)` by the trapezoid rule.
pub fn auc(curve: &RocCurve) -> Result<f64> {
    if curve.points.len() < 2 {
        return invalid("auc needs at least two points");
    }
    Ok(curve.points.windows(2).map(|w| (w[1].0 - w[0].0) * (2.0 - w[0].1 - w[1].1) * 0.5).sum())
}

/// Quantized-LLR ROC from `trials` paths of length `n` under each hypothesis.
/// Scalar Gaussian models are first checked against exhaustive quadrature.
pub fn roc_curve(
    model: &ProcessModel,
    partition: &dyn CellPartition,
    n: usize,
    trials: usize,
    seed: u64,
    options: &QuantizedOptions,
    label: &str,
) -> Result<RocCurve> {
    if n == 0 || trials == 0 {
        return invalid("path length and trial count must be positive");
    }
    let preflight = preflight_gaussian(model, partition, options, seed)?;
    let ql = QuantizedLikelihood::new(model, partition, options)?;
    let stats = |hyp: Hypothesis| -> Result<Vec<f64>> {
        options
            .execution
            .map(trials, |t| -> Result<f64> {
                let mut rng = substream(seed, &[tag::ROC, hyp.index() as u64, t as u64]);
                let path = model.sample_path_with(hyp, n, 0, &mut rng)?;
                let cells = partition.quantize_window(&path, ql.clamps())?;
                Ok(ql.llr_path(&cells)?.last())
            })
            .into_iter()
            .collect()
    };
    let s0 = stats(Hypothesis::H0)?;
    let s1 = stats(Hypothesis::H1)?;
    let mut curve = RocCurve::from_statistics(&s0, &s1, n, label)?;
    curve.preflight = preflight;
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::{DomainBox, IidModel};
    use crate::quantizers::uniform_quantizer;

    #[test]
    fn blind_test_lies_on_diagonal() {
        let c = RocCurve::from_statistics(&[0.0; 100], &[0.0; 100], 1, "blind").unwrap();
        assert_eq!(c.points, vec![(0.0, 1.0), (1.0, 0.0)]);
        for a in [0.1, 0.37, 0.8] {
            assert!((c.miss_at(a) - (1.0 - a)).abs() < 1e-12);
        }
        assert!((auc(&c).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn separated_statistics_are_perfect() {
        let c = RocCurve::from_statistics(&[-2.0, -1.0, -1.5], &[1.0, 3.0, 2.0], 1, "sep").unwrap();
        assert_eq!(c.miss_at(0.0), 0.0);
        assert_eq!(auc(&c).unwrap(), 1.0);
        assert!(c.points.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 >= w[1].1));
    }

    #[test]
    fn identical_model_curve_within_bands() {
        let m: ProcessModel = IidModel::gaussian_scalar(0.0, 1.0, 0.0, 1.0).into();
        let q = uniform_quantizer(&DomainBox::cube(1, 8.0).unwrap(), &[4]).unwrap();
        let c = roc_curve(&m, &q, 5, 500, 1, &QuantizedOptions::default(), "same").unwrap();
        for a in [0.1, 0.5, 0.9] {
            assert!((c.miss_at(a) - (1.0 - a)).abs() <= 3.0 * c.miss_stderr(a) + 1e-12);
        }
    }

    #[test]
    fn csv_layout() {
        let c = RocCurve::from_statistics(&[0.0], &[1.0], 1, "x").unwrap();
        assert_eq!(c.to_csv(), "pfa,pmiss\n0,1\n0,0\n1,0\n");
    }
}
