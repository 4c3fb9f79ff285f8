use crate::error::{Error, Result};
use crate::highrate::{
    compute_de, compute_f, marginal_density, score_field, CovariationProfile, DensityField, DensityKind, FbarConfig,
    Grid,
};
use crate::likelihood::exact_discrete_exponent;
use crate::processes::{Hypothesis, ModelKind, ProcessModel};
use crate::quadrature::adaptive_simpson;
use crate::quantizers::uniform_quantizer;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub cells: usize,
    /// `K - K_N`.
    pub gap: f64,
    /// `N² (K - K_N)`.
    pub scaled_gap: f64,
    /// Predicted limit of `scaled_gap` for the uniform quantizer.
    pub d_e: f64,
}

/// Exponent gap of uniform quantizers with `cells` levels on the truncation
/// box of a scalar i.i.d. model, against the high-resolution prediction.
pub fn convergence_diagnostic(model: &ProcessModel, cells: &[usize], grid_nodes: usize) -> Result<Vec<ConvergenceRow>> {
    let ModelKind::Iid(m) = model.kind() else {
        return Err(Error::Unsupported("convergence diagnostic needs a scalar i.i.d. model".into()));
    };
    if m.dim() != 1 {
        return Err(Error::Unsupported("convergence diagnostic needs a scalar i.i.d. model".into()));
    }
    let domain = model.truncation_box();
    let k = match m.gaussian_kl() {
        Some(k) => k,
        None => {
            let (p0, p1) = (m.marginal(Hypothesis::H0), m.marginal(Hypothesis::H1));
            let f = |y: f64| p0.pdf(&[y]) * (p0.logpdf(&[y]) - p1.logpdf(&[y]));
            adaptive_simpson(&f, domain.lo()[0], domain.hi()[0], 1e-14)
        }
    };
    let grid = Grid::uniform(domain.clone(), grid_nodes)?;
    let p0 = marginal_density(model, Hypothesis::H0, &grid)?;
    let score = score_field(model, &grid, &FbarConfig::default())?;
    let f = compute_f(&score, &CovariationProfile::default())?;
    let d_e = compute_de(&p0, &f, &DensityField::uniform(grid, DensityKind::PointDensity))?;
    cells
        .iter()
        .map(|&n| {
            let q = uniform_quantizer(&domain, &[n])?;
            let gap = k - exact_discrete_exponent(model, &q)?.value;
            Ok(ConvergenceRow { cells: n, gap, scaled_gap: (n * n) as f64 * gap, d_e })
        })
        .collect()
}
