use super::{lbg_train, rejection_sample, LbgConfig, LbgResult, VoronoiQuantizer};
use crate::error::Result;
use crate::exec::Execution;
use crate::highrate::{
    gupta_hero_f, marginal_density, score_field, target_density_qstar, CovariationProfile, DensityField, FbarConfig,
    FbarMethod, Grid, ScoreEstimate, DEFAULT_NODES,
};
use crate::processes::{Hypothesis, ProcessModel};
use crate::rng::{substream, tag};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignConfig {
    pub cells: usize,
    /// Side-window half-width for `F̄`.
    pub k: usize,
    pub n_mc: usize,
    pub n_train: usize,
    pub grid_nodes: usize,
    pub fbar_method: FbarMethod,
    pub seed: u64,
    pub lbg_tol: f64,
    pub lbg_max_iter: usize,
    pub execution: Execution,
}

impl DesignConfig {
    pub fn new(cells: usize, seed: u64) -> Self {
        DesignConfig {
            cells,
            k: 3,
            n_mc: 1000,
            n_train: 20_000,
            grid_nodes: DEFAULT_NODES,
            fbar_method: FbarMethod::Auto,
            seed,
            lbg_tol: 1e-6,
            lbg_max_iter: 200,
            execution: Execution::default(),
        }
    }

    fn lbg(&self) -> LbgConfig {
        LbgConfig {
            cells: self.cells,
            seed: self.seed,
            tol: self.lbg_tol,
            max_iter: self.lbg_max_iter,
            execution: self.execution,
        }
    }

    pub fn grid(&self, model: &ProcessModel) -> Result<Grid> {
        Grid::uniform(model.truncation_box(), self.grid_nodes)
    }
}

/// Everything produced on the way to a trained codebook.
#[derive(Debug, Clone)]
pub struct DesignOutput {
    pub quantizer: VoronoiQuantizer,
    pub training: LbgResult,
    /// Density the training set was drawn from.
    pub target: DensityField,
    pub acceptance_rate: f64,
}

fn train_on_target(target: DensityField, cfg: &DesignConfig) -> Result<DesignOutput> {
    let rs = rejection_sample(&target, cfg.n_train, cfg.seed)?;
    let training = lbg_train(&rs.samples, rs.dim, target.grid().domain(), &cfg.lbg())?;
    Ok(DesignOutput { quantizer: training.quantizer.clone(), training, target, acceptance_rate: rs.acceptance_rate })
}

/// `F̄ → q* = p₀F̄ → rejection sampling → LBG`. Returns the score estimate used.
pub fn design_detection_quantizer(model: &ProcessModel, cfg: &DesignConfig) -> Result<(DesignOutput, ScoreEstimate)> {
    let grid = cfg.grid(model)?;
    let p0 = marginal_density(model, Hypothesis::H0, &grid)?;
    let fcfg =
        FbarConfig { k: cfg.k, n_mc: cfg.n_mc, seed: cfg.seed, method: cfg.fbar_method, execution: cfg.execution };
    let score = score_field(model, &grid, &fcfg)?;
    let q = target_density_qstar(&p0, &score.fbar)?;
    Ok((train_on_target(q, cfg)?, score))
}

/// LBG on draws from the H0 marginal, projected onto the truncation box.
pub fn mse_quantizer(model: &ProcessModel, cfg: &DesignConfig) -> Result<DesignOutput> {
    let b = model.truncation_box();
    let mut rng = substream(cfg.seed, &[tag::TRAINING]);
    let mut s = model.sample_marginal(Hypothesis::H0, cfg.n_train, &mut rng);
    for y in s.chunks_exact_mut(model.dim()) {
        b.clamp(y);
    }
    let training = lbg_train(&s, model.dim(), &b, &cfg.lbg())?;
    let target = marginal_density(model, Hypothesis::H0, &cfg.grid(model)?)?;
    Ok(DesignOutput { quantizer: training.quantizer.clone(), training, target, acceptance_rate: 1.0 })
}

/// LBG on draws from `p₀ ‖∇ log(p₀/p₁)‖²` built from the single-sample marginals.
pub fn gupta_hero_quantizer(model: &ProcessModel, cfg: &DesignConfig) -> Result<DesignOutput> {
    let grid = cfg.grid(model)?;
    let p0 = marginal_density(model, Hypothesis::H0, &grid)?;
    let p1 = marginal_density(model, Hypothesis::H1, &grid)?;
    let f = gupta_hero_f(&p0, &p1, &CovariationProfile::Scaled(1.0))?;
    let q = target_density_qstar(&p0, &f)?;
    train_on_target(q, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::IidModel;
    use crate::Error;

    #[test]
    fn identical_hypotheses_have_no_design_target() {
        let m: ProcessModel = IidModel::gaussian_scalar(0.0, 1.0, 0.0, 1.0).into();
        let cfg = DesignConfig { n_train: 400, ..DesignConfig::new(4, 1) };
        assert!(matches!(design_detection_quantizer(&m, &cfg), Err(Error::Degenerate(_))));
        assert!(matches!(gupta_hero_quantizer(&m, &cfg), Err(Error::Degenerate(_))));
    }

    #[test]
    fn variance_pair_pushes_cells_outward() {
        let m: ProcessModel = IidModel::gaussian_scalar(0.0, 1.0, 0.0, 2.0).into();
        let cfg = DesignConfig { n_train: 4000, ..DesignConfig::new(4, 2) };
        let (det, _) = design_detection_quantizer(&m, &cfg).unwrap();
        let mse = mse_quantizer(&m, &cfg).unwrap();
        let spread = |q: &VoronoiQuantizer| q.codebook().as_flat().iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(spread(&det.quantizer) > spread(&mse.quantizer));
    }
}
