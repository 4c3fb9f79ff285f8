use super::{DomainBox, Hypothesis, ObservationWindow};
use crate::error::{invalid, Error, Result};
use crate::quadrature::GaussLegendre;
use crate::rng::Rng;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

const NORMALIZATION_NODES: usize = 64;

/// Hidden Markov model with finitely many states and truncated isotropic
/// Gaussian emissions on `[-M, M]^d`. The emission kernel is shared by both
/// hypotheses; only the transition matrices differ.
#[derive(Debug, Clone)]
pub struct FiniteStateHmm {
    num_states: usize,
    dim: usize,
    transition: [Vec<f64>; 2],
    stationary: [Vec<f64>; 2],
    centers: Vec<f64>,
    sigma: f64,
    half_width: f64,
    log_norm: Vec<f64>,
    domain: DomainBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub m: usize,
    pub sigma_minus: f64,
    pub sigma_plus: f64,
}

impl FiniteStateHmm {
    /// `transition_*` are row-major `S × S`; `centers[x]` is `T(x)`.
    pub fn new(
        transition_h0: Vec<f64>,
        transition_h1: Vec<f64>,
        centers: Vec<Vec<f64>>,
        sigma: f64,
        half_width: f64,
    ) -> Result<Self> {
        let s = centers.len();
        if s == 0 {
            return invalid("hmm needs at least one state");
        }
        let dim = centers[0].len();
        if dim == 0 || centers.iter().any(|c| c.len() != dim) {
            return invalid("state centers must share a positive dimension");
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return invalid("noise sigma must be positive");
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return invalid("truncation half-width must be positive");
        }
        for (name, q) in [("h0", &transition_h0), ("h1", &transition_h1)] {
            check_stochastic(name, q, s)?;
        }
        let stationary = [stationary_law(&transition_h0, s)?, stationary_law(&transition_h1, s)?];
        let gl = GaussLegendre::new(NORMALIZATION_NODES);
        let two_var = 2.0 * sigma * sigma;
        let log_norm = centers
            .iter()
            .map(|c| {
                c.iter()
                    .map(|t| gl.integrate(-half_width, half_width, |u| (-(u - t) * (u - t) / two_var).exp()).ln())
                    .sum()
            })
            .collect();
        let domain = DomainBox::cube(dim, half_width)?;
        Ok(FiniteStateHmm {
            num_states: s,
            dim,
            transition: [transition_h0, transition_h1],
            stationary,
            centers: centers.concat(),
            sigma,
            half_width,
            log_norm,
            domain,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn transition(&self, hyp: Hypothesis) -> &[f64] {
        &self.transition[hyp.index()]
    }

    pub fn stationary(&self, hyp: Hypothesis) -> &[f64] {
        &self.stationary[hyp.index()]
    }

    pub fn center(&self, state: usize) -> &[f64] {
        &self.centers[state * self.dim..(state + 1) * self.dim]
    }

    /// `log C_M(σ)` of state `x`.
    pub fn log_normalizer(&self, state: usize) -> f64 {
        self.log_norm[state]
    }

    /// Emission density `g(x, y)`; zero outside the box.
    pub fn observation_kernel(&self, state: usize, y: &[f64]) -> Result<f64> {
        if state >= self.num_states {
            return invalid(format!("state {state} out of range (num_states = {})", self.num_states));
        }
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: y.len() });
        }
        Ok(self.log_kernel(state, y).exp())
    }

    pub(crate) fn log_kernel(&self, state: usize, y: &[f64]) -> f64 {
        if !self.domain.contains(y) {
            return f64::NEG_INFINITY;
        }
        let c = self.center(state);
        let r2: f64 = y.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
        -r2 / (2.0 * self.sigma * self.sigma) - self.log_norm[state]
    }

    pub(crate) fn log_emissions_into(&self, y: &[f64], out: &mut [f64]) {
        for (x, o) in out.iter_mut().enumerate() {
            *o = self.log_kernel(x, y);
        }
    }

    pub(crate) fn marginal_logpdf(&self, hyp: Hypothesis, y: &[f64]) -> f64 {
        let pi = self.stationary(hyp);
        let terms: Vec<f64> = (0..self.num_states).map(|x| pi[x].ln() + self.log_kernel(x, y)).collect();
        crate::quadrature::log_sum_exp(&terms)
    }

    fn draw_state(weights: &[f64], rng: &mut Rng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        weights.len() - 1
    }

    fn emit(&self, state: usize, rng: &mut Rng, out: &mut Vec<f64>) {
        let m = self.half_width;
        for &t in self.center(state) {
            let mut v = f64::NAN;
            for _ in 0..64 {
                let z: f64 = rng.sample(StandardNormal);
                let c = t + self.sigma * z;
                if c.abs() <= m {
                    v = c;
                    break;
                }
            }
            if v.is_nan() {
                // inverse-cdf fallback for heavily truncated kernels
                use statrs::distribution::{ContinuousCDF, Normal};
                let nd = Normal::new(t, self.sigma).expect("positive sigma");
                let (a, b) = (nd.cdf(-m), nd.cdf(m));
                let u: f64 = rng.random_range(a..b);
                v = nd.inverse_cdf(u).clamp(-m, m);
            }
            out.push(v);
        }
    }

    /// Hidden states and observations of a stationary path of length `n`.
    pub(crate) fn sample(&self, hyp: Hypothesis, n: usize, rng: &mut Rng) -> (Vec<usize>, Vec<f64>) {
        let q = self.transition(hyp);
        let s = self.num_states;
        let mut states = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * self.dim);
        let mut x = Self::draw_state(self.stationary(hyp), rng);
        for k in 0..n {
            if k > 0 {
                x = Self::draw_state(&q[x * s..(x + 1) * s], rng);
            }
            states.push(x);
            self.emit(x, rng, &mut data);
        }
        (states, data)
    }

    pub(crate) fn sample_marginal(&self, hyp: Hypothesis, n: usize, rng: &mut Rng) -> Vec<f64> {
        let mut data = Vec::with_capacity(n * self.dim);
        for _ in 0..n {
            let x = Self::draw_state(self.stationary(hyp), rng);
            self.emit(x, rng, &mut data);
        }
        data
    }

    /// Scaled forward recursion. `log_emission` holds `n × S` log emission
    /// weights (densities or cell probabilities). Returns `log p(e_1..e_t)`
    /// for every prefix `t = 1..n`.
    pub(crate) fn forward_log_prefix(&self, hyp: Hypothesis, log_emission: &[f64]) -> Vec<f64> {
        let s = self.num_states;
        let q = self.transition(hyp);
        let n = log_emission.len() / s;
        let mut alpha = self.stationary(hyp).to_vec();
        let mut next = vec![0.0; s];
        let mut out = Vec::with_capacity(n);
        let mut total = 0.0;
        for t in 0..n {
            let le = &log_emission[t * s..(t + 1) * s];
            if t > 0 {
                next.iter_mut().for_each(|v| *v = 0.0);
                for (i, a) in alpha.iter().enumerate() {
                    if *a == 0.0 {
                        continue;
                    }
                    for (j, nv) in next.iter_mut().enumerate() {
                        *nv += a * q[i * s + j];
                    }
                }
                std::mem::swap(&mut alpha, &mut next);
            }
            let m = le.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if m == f64::NEG_INFINITY {
                total = f64::NEG_INFINITY;
                out.extend(std::iter::repeat_n(total, n - t));
                return out;
            }
            let mut c = 0.0;
            for (a, l) in alpha.iter_mut().zip(le) {
                *a *= (l - m).exp();
                c += *a;
            }
            if c <= 0.0 {
                total = f64::NEG_INFINITY;
                out.extend(std::iter::repeat_n(total, n - t));
                return out;
            }
            alpha.iter_mut().for_each(|a| *a /= c);
            total += m + c.ln();
            out.push(total);
        }
        out
    }

    /// Posterior law of the hidden state at position `center` given the whole
    /// window, by normalized forward-backward.
    pub(crate) fn smoothed_state(&self, hyp: Hypothesis, log_emission: &[f64], center: usize) -> Vec<f64> {
        let s = self.num_states;
        let q = self.transition(hyp);
        let n = log_emission.len() / s;
        let scaled = |t: usize| -> Vec<f64> {
            let le = &log_emission[t * s..(t + 1) * s];
            let m = le.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            le.iter().map(|l| (l - m).exp()).collect()
        };
        let mut alpha: Vec<f64> = self.stationary(hyp).to_vec();
        for t in 0..=center {
            if t > 0 {
                let mut nx = vec![0.0; s];
                for i in 0..s {
                    for j in 0..s {
                        nx[j] += alpha[i] * q[i * s + j];
                    }
                }
                alpha = nx;
            }
            let e = scaled(t);
            alpha.iter_mut().zip(&e).for_each(|(a, w)| *a *= w);
            normalize(&mut alpha);
        }
        let mut beta = vec![1.0; s];
        for t in (center + 1..n).rev() {
            let e = scaled(t);
            let mut nb = vec![0.0; s];
            for i in 0..s {
                nb[i] = (0..s).map(|j| q[i * s + j] * e[j] * beta[j]).sum();
            }
            normalize(&mut nb);
            beta = nb;
        }
        let mut post: Vec<f64> = alpha.iter().zip(&beta).map(|(a, b)| a * b).collect();
        normalize(&mut post);
        post
    }

    pub(crate) fn grad_log_ratio(&self, window: &ObservationWindow, k: usize) -> Vec<f64> {
        let s = self.num_states;
        let mut le = vec![0.0; window.len() * s];
        for (t, y) in window.samples().enumerate() {
            self.log_emissions_into(y, &mut le[t * s..(t + 1) * s]);
        }
        let mut grad = vec![0.0; self.dim];
        for (hyp, sign) in [(Hypothesis::H0, 1.0), (Hypothesis::H1, -1.0)] {
            let post = self.smoothed_state(hyp, &le, k);
            for (x, p) in post.iter().enumerate() {
                for (g, c) in grad.iter_mut().zip(self.center(x)) {
                    *g += sign * p * c;
                }
            }
        }
        let inv_var = 1.0 / (self.sigma * self.sigma);
        grad.iter_mut().for_each(|g| *g *= inv_var);
        grad
    }

    /// Smallest `m ≤ S²` such that every entry of the `m`-step kernels of
    /// both hypotheses is positive, with the extreme entries at that `m`.
    pub fn validate_mixing(&self) -> Result<MixingReport> {
        let s = self.num_states;
        let max_m = s * s;
        let mut powers = [self.transition[0].clone(), self.transition[1].clone()];
        for m in 1..=max_m {
            if powers.iter().all(|p| p.iter().all(|v| *v > 0.0)) {
                let all = powers.iter().flat_map(|p| p.iter().copied());
                let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
                return Ok(MixingReport { m, sigma_minus: lo, sigma_plus: hi });
            }
            for (p, q) in powers.iter_mut().zip(&self.transition) {
                *p = matmul(p, q, s);
            }
        }
        Err(Error::NonMixing { max_m })
    }

    pub(crate) fn describe(&self) -> String {
        format!(
            "finite-state hmm: {} states, d = {}, sigma = {}, half-width = {}",
            self.num_states, self.dim, self.sigma, self.half_width
        )
    }
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}

fn matmul(a: &[f64], b: &[f64], s: usize) -> Vec<f64> {
    let mut out = vec![0.0; s * s];
    for i in 0..s {
        for k in 0..s {
            let aik = a[i * s + k];
            for j in 0..s {
                out[i * s + j] += aik * b[k * s + j];
            }
        }
    }
    out
}

fn check_stochastic(name: &str, q: &[f64], s: usize) -> Result<()> {
    if q.len() != s * s {
        return invalid(format!("transition_{name} must be {s}×{s}"));
    }
    if q.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return invalid(format!("transition_{name} has negative or non-finite entries"));
    }
    for r in 0..s {
        let sum: f64 = q[r * s..(r + 1) * s].iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return invalid(format!("transition_{name} row {r} sums to {sum}"));
        }
    }
    Ok(())
}

/// Stationary law by power iteration on the lazy chain `(I + Q) / 2`, which
/// shares the stationary law of `Q` and converges for periodic chains too.
fn stationary_law(q: &[f64], s: usize) -> Result<Vec<f64>> {
    let mut pi = vec![1.0 / s as f64; s];
    for _ in 0..1_000_000 {
        let mut next = vec![0.0; s];
        for i in 0..s {
            for j in 0..s {
                next[j] += pi[i] * q[i * s + j];
            }
        }
        let mut delta: f64 = 0.0;
        for j in 0..s {
            let v = 0.5 * (pi[j] + next[j]);
            delta = delta.max((v - pi[j]).abs());
            pi[j] = v;
        }
        if delta < 1e-13 {
            break;
        }
    }
    let s_sum: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= s_sum);
    let mut resid: f64 = 0.0;
    for j in 0..s {
        let v: f64 = (0..s).map(|i| pi[i] * q[i * s + j]).sum();
        resid = resid.max((v - pi[j]).abs());
    }
    if resid > 1e-10 {
        return Err(Error::Degenerate(format!("stationary law did not converge (residual {resid:e})")));
    }
    Ok(pi)
}
