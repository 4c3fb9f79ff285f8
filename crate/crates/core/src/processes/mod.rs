//! Two-hypothesis stationary process models.
//!
//! A [`ProcessModel`] pairs the laws `P0` and `P1` of a stationary process.
//! Three families are built in: i.i.d. samples ([`IidModel`]), finite-state
//! hidden Markov models ([`FiniteStateHmm`]) and Gaussian signal-plus-noise
//! models ([`GaussLinearModel`]).

mod gauss;
mod hmm;
mod iid;

pub use gauss::{GaussKind, GaussLinearModel};
pub use hmm::{FiniteStateHmm, MixingReport};
pub use iid::{IidModel, Marginal};

use crate::error::{invalid, Error, Result};
use crate::rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    pub const BOTH: [Hypothesis; 2] = [Hypothesis::H0, Hypothesis::H1];

    pub fn index(self) -> usize {
        match self {
            Hypothesis::H0 => 0,
            Hypothesis::H1 => 1,
        }
    }
}

/// Axis-aligned box `[lo_1, hi_1] × ... × [lo_d, hi_d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return invalid("domain box needs matching non-empty bounds");
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return invalid("domain box bounds must be finite with lo < hi");
        }
        Ok(DomainBox { lo, hi })
    }

    /// `[-half, half]^d`.
    pub fn cube(dim: usize, half: f64) -> Result<Self> {
        Self::new(vec![-half; dim], vec![half; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.len() == self.dim() && y.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    /// Projects `y` onto the box in place.
    pub fn clamp(&self, y: &mut [f64]) {
        for (v, (a, b)) in y.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *v = v.clamp(*a, *b);
        }
    }
}

/// Consecutive `d`-dimensional samples `y_first, ..., y_{first + n - 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    first_index: i64,
    dim: usize,
    data: Vec<f64>,
}

impl ObservationWindow {
    /// `data` holds the samples back to back (`n * dim` values).
    pub fn new(first_index: i64, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return invalid("observation dimension must be positive");
        }
        if data.len() % dim != 0 {
            return invalid(format!("window data length {} is not a multiple of the dimension {dim}", data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return invalid("window samples must be finite");
        }
        Ok(ObservationWindow { first_index, dim, data })
    }

    /// Scalar samples starting at index 1.
    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        Self::new(1, 1, values)
    }

    pub fn first_index(&self) -> i64 {
        self.first_index
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// The `i`-th stored sample (position, not time index).
    pub fn sample(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn samples(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn sample_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Samples at positions `start..end`, keeping time indices.
    pub fn subwindow(&self, start: usize, end: usize) -> ObservationWindow {
        ObservationWindow {
            first_index: self.first_index + start as i64,
            dim: self.dim,
            data: self.data[start * self.dim..end * self.dim].to_vec(),
        }
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    Iid(IidModel),
    Hmm(FiniteStateHmm),
    Gauss(GaussLinearModel),
}

/// A pair of stationary laws on the observation space, with an optional
/// truncation box for unbounded models.
#[derive(Debug, Clone)]
pub struct ProcessModel {
    kind: ModelKind,
    truncation: Option<DomainBox>,
}

impl From<IidModel> for ProcessModel {
    fn from(m: IidModel) -> Self {
        ProcessModel { kind: ModelKind::Iid(m), truncation: None }
    }
}

impl From<FiniteStateHmm> for ProcessModel {
    fn from(m: FiniteStateHmm) -> Self {
        ProcessModel { kind: ModelKind::Hmm(m), truncation: None }
    }
}

impl From<GaussLinearModel> for ProcessModel {
    fn from(m: GaussLinearModel) -> Self {
        ProcessModel { kind: ModelKind::Gauss(m), truncation: None }
    }
}

impl ProcessModel {
    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// Overrides the truncation box used by grid and quadrature operations.
    /// Ignored for models with a bounded domain.
    pub fn with_truncation(mut self, truncation: DomainBox) -> Result<Self> {
        if truncation.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: truncation.dim() });
        }
        self.truncation = Some(truncation);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ModelKind::Iid(m) => m.dim(),
            ModelKind::Hmm(m) => m.dim(),
            ModelKind::Gauss(m) => m.dim(),
        }
    }

    /// The observation domain when it is bounded.
    pub fn bounded_domain(&self) -> Option<&DomainBox> {
        match &self.kind {
            ModelKind::Hmm(m) => Some(m.domain()),
            _ => None,
        }
    }

    /// Box used wherever bounded support is required: the domain itself for
    /// bounded models, otherwise the override or ±8 marginal standard
    /// deviations per axis.
    pub fn truncation_box(&self) -> DomainBox {
        if let Some(b) = self.bounded_domain() {
            return b.clone();
        }
        if let Some(t) = &self.truncation {
            return t.clone();
        }
        match &self.kind {
            ModelKind::Iid(m) => m.default_box(),
            ModelKind::Gauss(m) => m.default_box(),
            ModelKind::Hmm(m) => m.domain().clone(),
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            ModelKind::Iid(m) => m.describe(),
            ModelKind::Hmm(m) => m.describe(),
            ModelKind::Gauss(m) => m.describe(),
        }
    }

    pub(crate) fn check_sample(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: y.len() });
        }
        if let Some(b) = self.bounded_domain() {
            if !b.contains(y) {
                return Err(Error::OutOfDomain(format!("{y:?}")));
            }
        }
        Ok(())
    }

    pub(crate) fn check_window(&self, w: &ObservationWindow) -> Result<()> {
        if w.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: w.dim() });
        }
        if let Some(b) = self.bounded_domain() {
            if let Some(y) = w.samples().find(|y| !b.contains(y)) {
                return Err(Error::OutOfDomain(format!("{y:?}")));
            }
        }
        Ok(())
    }

    /// `n` consecutive samples under `hyp` after discarding `burn_in`, started
    /// from the stationary law.
    pub fn sample_path(&self, hyp: Hypothesis, n: usize, burn_in: usize, seed: u64) -> Result<ObservationWindow> {
        let mut rng = rng::substream(seed, &[rng::tag::PATH, hyp.index() as u64]);
        self.sample_path_with(hyp, n, burn_in, &mut rng)
    }

    /// Same as [`ProcessModel::sample_path`] drawing from a caller-owned generator.
    pub fn sample_path_with(
        &self,
        hyp: Hypothesis,
        n: usize,
        burn_in: usize,
        rng: &mut rng::Rng,
    ) -> Result<ObservationWindow> {
        if n == 0 {
            return invalid("path length must be at least 1");
        }
        let total = n + burn_in;
        let data = match &self.kind {
            ModelKind::Iid(m) => m.sample(hyp, total, rng),
            ModelKind::Hmm(m) => m.sample(hyp, total, rng).1,
            ModelKind::Gauss(m) => m.sample(hyp, total, rng),
        };
        let d = self.dim();
        ObservationWindow::new(1, d, data[burn_in * d..].to_vec())
    }

    /// `n` independent draws from the single-sample marginal under `hyp`,
    /// back to back.
    pub fn sample_marginal(&self, hyp: Hypothesis, n: usize, rng: &mut rng::Rng) -> Vec<f64> {
        match &self.kind {
            ModelKind::Iid(m) => m.sample(hyp, n, rng),
            ModelKind::Hmm(m) => m.sample_marginal(hyp, n, rng),
            ModelKind::Gauss(m) => m.sample_marginal(hyp, n, rng),
        }
    }

    /// Log of the single-sample marginal density under `hyp`.
    pub fn marginal_logpdf(&self, hyp: Hypothesis, y: &[f64]) -> Result<f64> {
        self.check_sample(y)?;
        Ok(match &self.kind {
            ModelKind::Iid(m) => m.marginal(hyp).logpdf(y),
            ModelKind::Hmm(m) => m.marginal_logpdf(hyp, y),
            ModelKind::Gauss(m) => m.marginal_logpdf(hyp, y),
        })
    }

    /// `∇_{y0} log p0(y_{-k:k}) - ∇_{y0} log p1(y_{-k:k})` for a window spanning `-k..=k`.
    pub fn grad_log_ratio(&self, window: &ObservationWindow, k: usize) -> Result<Vec<f64>> {
        if window.first_index() != -(k as i64) || window.len() != 2 * k + 1 {
            return invalid(format!(
                "gradient window must span indices -{k}..={k}, got first index {} and length {}",
                window.first_index(),
                window.len()
            ));
        }
        self.check_window(window)?;
        Ok(match &self.kind {
            ModelKind::Iid(m) => m.grad_log_ratio(window.sample(k)),
            ModelKind::Hmm(m) => m.grad_log_ratio(window, k),
            ModelKind::Gauss(m) => m.grad_log_ratio(window, k),
        })
    }
}
