use super::{DomainBox, Hypothesis, ObservationWindow};
use crate::error::{invalid, Result};
use crate::quadrature::log_normal_pdf;
use crate::rng::Rng;
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, PartialEq)]
pub enum GaussKind {
    /// `X_k = a X_{k-1} + sqrt(1 - a²) U_k` under H1, white under H0.
    Ar1 { a: f64 },
    /// `Σ_l h_l U_{k-l}` under H1, absent under H0.
    Ma { taps: Vec<f64> },
}

/// Gaussian signal plus white Gaussian noise, independent across axes.
///
/// Under H0 the observations are white with the same per-axis variance as the
/// H1 marginal for the AR(1) kind, and pure noise for the MA kind.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLinearModel {
    kind: GaussKind,
    sigma: f64,
    dim: usize,
    signal_var: f64,
    noise_var: f64,
}

impl GaussLinearModel {
    /// Real AR(1) signal with unit variance per axis plus `N(0, σ²)` noise.
    pub fn ar1(a: f64, sigma: f64, dim: usize) -> Result<Self> {
        Self::ar1_with_variances(a, sigma, dim, 1.0, sigma * sigma)
    }

    /// Circular complex AR(1) in the I/Q plane: `CN(0, 1)` signal and
    /// `CN(0, σ²)` noise, i.e. per-axis variances `1/2` and `σ²/2`.
    pub fn ar1_circular(a: f64, sigma: f64) -> Result<Self> {
        Self::ar1_with_variances(a, sigma, 2, 0.5, 0.5 * sigma * sigma)
    }

    fn ar1_with_variances(a: f64, sigma: f64, dim: usize, signal_var: f64, noise_var: f64) -> Result<Self> {
        if !(a.abs() < 1.0) {
            return invalid("ar coefficient must satisfy |a| < 1");
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return invalid("noise sigma must be positive");
        }
        if dim == 0 {
            return invalid("dimension must be positive");
        }
        Ok(GaussLinearModel { kind: GaussKind::Ar1 { a }, sigma, dim, signal_var, noise_var })
    }

    /// Scalar MA channel `h_0..h_L` driven by unit-variance innovations plus `N(0, σ²)` noise.
    pub fn ma(taps: Vec<f64>, sigma: f64) -> Result<Self> {
        if taps.is_empty() || taps.iter().any(|h| !h.is_finite()) {
            return invalid("moving-average taps must be finite and non-empty");
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return invalid("noise sigma must be positive");
        }
        let signal_var = taps.iter().map(|h| h * h).sum();
        Ok(GaussLinearModel { kind: GaussKind::Ma { taps }, sigma, dim: 1, signal_var, noise_var: sigma * sigma })
    }

    pub fn kind(&self) -> &GaussKind {
        &self.kind
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn signal_var(&self) -> f64 {
        self.signal_var
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Per-axis variance of one observation under `hyp`.
    pub fn marginal_var(&self, hyp: Hypothesis) -> f64 {
        match (&self.kind, hyp) {
            (GaussKind::Ma { .. }, Hypothesis::H0) => self.noise_var,
            _ => self.signal_var + self.noise_var,
        }
    }

    /// Per-axis autocovariance at `lag` under `hyp`.
    pub fn autocovariance(&self, hyp: Hypothesis, lag: usize) -> f64 {
        let noise = if lag == 0 { self.noise_var } else { 0.0 };
        match hyp {
            Hypothesis::H0 => {
                if lag == 0 {
                    self.marginal_var(Hypothesis::H0)
                } else {
                    0.0
                }
            }
            Hypothesis::H1 => match &self.kind {
                GaussKind::Ar1 { a } => self.signal_var * a.powi(lag as i32) + noise,
                GaussKind::Ma { taps } => {
                    let s: f64 = taps.iter().zip(taps.iter().skip(lag)).map(|(x, y)| x * y).sum();
                    s + noise
                }
            },
        }
    }

    /// Per-axis covariance of `len` consecutive observations.
    pub fn window_covariance(&self, hyp: Hypothesis, len: usize) -> DMatrix<f64> {
        DMatrix::from_fn(len, len, |i, j| self.autocovariance(hyp, i.abs_diff(j)))
    }

    /// Row `k` of `Σ1⁻¹ - Σ0⁻¹` for a window of `2k + 1` samples: the
    /// gradient of the log ratio at the centre is this row applied to each axis.
    pub fn score_coefficients(&self, k: usize) -> Vec<f64> {
        let n = 2 * k + 1;
        let s1 = self.window_covariance(Hypothesis::H1, n);
        let chol = s1.cholesky().expect("stationary covariance is positive definite");
        let mut e = DVector::zeros(n);
        e[k] = 1.0;
        let row = chol.solve(&e);
        let v0 = self.marginal_var(Hypothesis::H0);
        (0..n).map(|j| row[j] - if j == k { 1.0 / v0 } else { 0.0 }).collect()
    }

    pub(crate) fn grad_log_ratio(&self, window: &ObservationWindow, k: usize) -> Vec<f64> {
        let c = self.score_coefficients(k);
        (0..self.dim).map(|axis| window.samples().zip(&c).map(|(y, cj)| cj * y[axis]).sum()).collect()
    }

    pub(crate) fn marginal_logpdf(&self, hyp: Hypothesis, y: &[f64]) -> f64 {
        let v = self.marginal_var(hyp);
        y.iter().map(|x| log_normal_pdf(*x, 0.0, v)).sum()
    }

    pub(crate) fn sample_marginal(&self, hyp: Hypothesis, n: usize, rng: &mut Rng) -> Vec<f64> {
        let sd = self.marginal_var(hyp).sqrt();
        (0..n * self.dim).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
    }

    pub(crate) fn sample(&self, hyp: Hypothesis, n: usize, rng: &mut Rng) -> Vec<f64> {
        let d = self.dim;
        let noise_sd = self.noise_var.sqrt();
        let mut out = vec![0.0; n * d];
        match (&self.kind, hyp) {
            (GaussKind::Ar1 { .. }, Hypothesis::H0) | (GaussKind::Ma { .. }, Hypothesis::H0) => {
                return self.sample_marginal(Hypothesis::H0, n, rng);
            }
            (GaussKind::Ar1 { a }, Hypothesis::H1) => {
                let sx = self.signal_var.sqrt();
                let innov = (1.0 - a * a).sqrt() * sx;
                for axis in 0..d {
                    let mut x = sx * rng.sample::<f64, _>(StandardNormal);
                    for k in 0..n {
                        if k > 0 {
                            x = a * x + innov * rng.sample::<f64, _>(StandardNormal);
                        }
                        out[k * d + axis] = x + noise_sd * rng.sample::<f64, _>(StandardNormal);
                    }
                }
            }
            (GaussKind::Ma { taps }, Hypothesis::H1) => {
                let l = taps.len() - 1;
                // innovations U_{1-L}, ..., U_n
                let u: Vec<f64> = (0..n + l).map(|_| rng.sample(StandardNormal)).collect();
                for k in 0..n {
                    let s: f64 = taps.iter().enumerate().map(|(j, h)| h * u[k + l - j]).sum();
                    out[k] = s + noise_sd * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
        out
    }

    /// Exact `log p(y_1..y_t)` for every prefix, by Kalman filtering.
    pub(crate) fn prefix_log_density(&self, hyp: Hypothesis, data: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let n = data.len() / d;
        let mut out = vec![0.0; n];
        match (&self.kind, hyp) {
            (_, Hypothesis::H0) => {
                let v = self.marginal_var(Hypothesis::H0);
                let mut acc = 0.0;
                for (t, y) in data.chunks_exact(d).enumerate() {
                    acc += y.iter().map(|x| log_normal_pdf(*x, 0.0, v)).sum::<f64>();
                    out[t] = acc;
                }
            }
            (GaussKind::Ar1 { a }, Hypothesis::H1) => {
                let q = (1.0 - a * a) * self.signal_var;
                for axis in 0..d {
                    let (mut mean, mut var) = (0.0, self.signal_var);
                    let mut acc = 0.0;
                    for t in 0..n {
                        if t > 0 {
                            mean *= a;
                            var = a * a * var + q;
                        }
                        let y = data[t * d + axis];
                        let s = var + self.noise_var;
                        acc += log_normal_pdf(y, mean, s);
                        let gain = var / s;
                        mean += gain * (y - mean);
                        var *= 1.0 - gain;
                        out[t] += acc;
                    }
                }
            }
            (GaussKind::Ma { taps }, Hypothesis::H1) => {
                ma_kalman(taps, self.noise_var, data, &mut out);
            }
        }
        out
    }

    pub(crate) fn default_box(&self) -> DomainBox {
        let half = 8.0 * self.marginal_var(Hypothesis::H0).sqrt();
        DomainBox::cube(self.dim, half).expect("positive variance")
    }

    pub(crate) fn describe(&self) -> String {
        match &self.kind {
            GaussKind::Ar1 { a } => format!(
                "gauss ar1: a = {a}, sigma = {}, d = {}, signal var/axis = {}, noise var/axis = {}",
                self.sigma, self.dim, self.signal_var, self.noise_var
            ),
            GaussKind::Ma { taps } => format!("gauss ma: taps = {taps:?}, sigma = {}", self.sigma),
        }
    }
}

// State (U_k, ..., U_{k-L}); shift transition with a fresh unit innovation.
fn ma_kalman(taps: &[f64], noise_var: f64, data: &[f64], out: &mut [f64]) {
    let m = taps.len();
    let mut mean = vec![0.0; m];
    let mut cov = vec![0.0; m * m];
    for i in 0..m {
        cov[i * m + i] = 1.0;
    }
    let mut pred_mean = vec![0.0; m];
    let mut pred_cov = vec![0.0; m * m];
    let mut ph = vec![0.0; m];
    let mut acc = 0.0;
    for (t, &y) in data.iter().enumerate() {
        pred_mean[0] = 0.0;
        pred_mean[1..m].copy_from_slice(&mean[..m - 1]);
        for i in 0..m {
            for j in 0..m {
                pred_cov[i * m + j] = match (i, j) {
                    (0, 0) => 1.0,
                    (0, _) | (_, 0) => 0.0,
                    _ => cov[(i - 1) * m + (j - 1)],
                };
            }
        }
        for i in 0..m {
            ph[i] = (0..m).map(|j| pred_cov[i * m + j] * taps[j]).sum();
        }
        let s: f64 = taps.iter().zip(&ph).map(|(h, p)| h * p).sum::<f64>() + noise_var;
        let fitted: f64 = taps.iter().zip(&pred_mean).map(|(h, u)| h * u).sum();
        let innov = y - fitted;
        acc += log_normal_pdf(innov, 0.0, s);
        out[t] = acc;
        for i in 0..m {
            mean[i] = pred_mean[i] + ph[i] * innov / s;
            for j in 0..m {
                cov[i * m + j] = pred_cov[i * m + j] - ph[i] * ph[j] / s;
            }
        }
    }
}
