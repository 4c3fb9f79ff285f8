use crate::error::{invalid, Result};
use crate::processes::{GaussLinearModel, Hypothesis};
use crate::quadrature::{norm_cdf, GaussLegendre};
use nalgebra::DVector;

const NODES: usize = 64;
const TAIL_SD: f64 = 8.0;

/// `log P_hyp[Y_1 ∈ C_{w_1}, ..., Y_n ∈ C_{w_n}]` for a scalar Gaussian model by
/// nested Gauss-Legendre integration over the first `n - 1` samples and the
/// exact conditional CDF for the last. Intervals touching `lo`/`hi` are
/// treated as extending to infinity. Intended for `n ≤ 3`.
pub fn gaussian_word_log_prob(
    model: &GaussLinearModel,
    hyp: Hypothesis,
    intervals: &[(f64, f64)],
    lo: f64,
    hi: f64,
    word: &[usize],
) -> Result<f64> {
    if model.dim() != 1 {
        return invalid("word oracle is scalar");
    }
    let n = word.len();
    if n == 0 || n > 4 {
        return invalid("word oracle supports 1 to 4 samples");
    }
    let sd = model.marginal_var(hyp).sqrt();
    let ext = |j: usize| -> (f64, f64) {
        let (a, b) = intervals[j];
        let a = if a <= lo { f64::NEG_INFINITY } else { a };
        let b = if b >= hi { f64::INFINITY } else { b };
        (a, b)
    };
    let cov = model.window_covariance(hyp, n);
    let (last_a, last_b) = ext(word[n - 1]);
    if n == 1 {
        let p = norm_cdf(last_b / sd) - norm_cdf(last_a / sd);
        return Ok(p.ln());
    }
    let m = n - 1;
    let s11 = cov.view((0, 0), (m, m)).into_owned();
    let s21 = cov.view((m, 0), (1, m)).into_owned();
    let chol = s11.clone().cholesky().expect("positive definite");
    let gain = chol.solve(&s21.transpose());
    let cond_var = cov[(m, m)] - (s21.clone() * &gain)[(0, 0)];
    let cond_sd = cond_var.max(0.0).sqrt();
    let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let gl = GaussLegendre::new(NODES);
    let rules: Vec<(Vec<f64>, Vec<f64>)> = (0..m)
        .map(|k| {
            let (a, b) = ext(word[k]);
            gl.mapped(a.max(-TAIL_SD * sd), b.min(TAIL_SD * sd))
        })
        .collect();
    let mut total = 0.0;
    let points = NODES.pow(m as u32);
    let mut y = DVector::zeros(m);
    for flat in 0..points {
        let mut r = flat;
        let mut w = 1.0;
        for k in (0..m).rev() {
            let i = r % NODES;
            r /= NODES;
            y[k] = rules[k].0[i];
            w *= rules[k].1[i];
        }
        let quad = y.dot(&chol.solve(&y));
        let log_pdf = -0.5 * (m as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + quad);
        let mu = gain.dot(&y);
        let pc = if cond_sd == 0.0 {
            f64::from(mu >= last_a && mu < last_b)
        } else {
            norm_cdf((last_b - mu) / cond_sd) - norm_cdf((last_a - mu) / cond_sd)
        };
        total += w * log_pdf.exp() * pc;
    }
    Ok(total.ln())
}
