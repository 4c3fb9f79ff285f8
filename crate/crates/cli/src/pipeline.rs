//! Scenario orchestration and artifact emission.

use crate::config::{ModelParams, Scenario, ScenarioConfig};
use npvq::evaluation::{
    auc, exponent_loss_table_on, roc_curve, ComparisonReport, PreflightReport, TableConfig, TableEntry, TableFields,
    ZetaSource,
};
use npvq::highrate::{compute_f, fields_csv, marginal_density, score_field, CovariationProfile, FbarConfig};
use npvq::likelihood::{LatentGrid, QuantizedOptions};
use npvq::processes::{GaussLinearModel, IidModel};
use npvq::quantizers::{
    design_detection_quantizer, gupta_hero_quantizer, mse_quantizer, uniform_quantizer, DesignConfig, DesignOutput,
    VoronoiQuantizer,
};
use npvq::scenarios::{ar_detect_model, ma_detect_model, qpsk_oqpsk_hmm};
use npvq::{DomainBox, Hypothesis, ProcessModel};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

/// False-alarm levels at which ROC summaries report the miss probability.
pub const REPORT_FALSE_ALARMS: [f64; 5] = [0.05, 0.1, 0.2, 0.3, 0.5];

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: npvq::Error,
    },
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serializing the report: {0}")]
    Json(#[from] serde_json::Error),
}

trait Stage<T> {
    fn stage(self, name: &'static str) -> Result<T, RunError>;
}

impl<T> Stage<T> for npvq::Result<T> {
    fn stage(self, name: &'static str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Stage { stage: name, source })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignSummary {
    pub label: String,
    pub cells: usize,
    pub iterations: usize,
    pub final_mse: f64,
    pub fixed_point: bool,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MissPoint {
    pub false_alarm: f64,
    pub miss: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RocSummary {
    pub label: String,
    pub file: String,
    pub auc: f64,
    pub trials: usize,
    pub path_length: usize,
    pub miss: Vec<MissPoint>,
    pub preflight: Option<PreflightReport>,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub version: String,
    pub scenario: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub model: String,
    pub files: Vec<String>,
    pub designs: Vec<DesignSummary>,
    pub table: ComparisonReport,
    pub roc: Vec<RocSummary>,
}

struct Writer {
    dir: PathBuf,
    files: Vec<String>,
}

impl Writer {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| RunError::Io { path, source })?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn build_model(cfg: &ScenarioConfig) -> npvq::Result<ProcessModel> {
    let model: ProcessModel = match &cfg.model {
        ModelParams::QpskOqpsk { half_width, sigma } => qpsk_oqpsk_hmm(*half_width, *sigma)?.into(),
        ModelParams::Ar1 { a, sigma, circular: true } => ar_detect_model(*a, *sigma)?.into(),
        ModelParams::Ar1 { a, sigma, circular: false } => GaussLinearModel::ar1(*a, *sigma, 1)?.into(),
        ModelParams::Ma { taps, sigma } => ma_detect_model(taps, *sigma)?.into(),
        ModelParams::IidGaussian { mean0, sd0, mean1, sd1 } => {
            IidModel::gaussian_scalar(*mean0, *sd0, *mean1, *sd1).into()
        }
    };
    match cfg.eval.half_box {
        Some(h) if model.bounded_domain().is_none() => {
            let b = DomainBox::cube(model.dim(), h)?;
            model.with_truncation(b)
        }
        _ => Ok(model),
    }
}

fn design_config(cfg: &ScenarioConfig) -> DesignConfig {
    let d = &cfg.design;
    DesignConfig {
        k: d.k,
        n_mc: d.n_mc,
        n_train: d.n_train,
        grid_nodes: cfg.eval.grid_nodes,
        fbar_method: d.fbar_method,
        lbg_tol: d.lbg_tol,
        lbg_max_iter: d.lbg_max_iter,
        ..DesignConfig::new(d.cells, cfg.seed)
    }
}

fn summary(label: &str, out: &DesignOutput) -> DesignSummary {
    DesignSummary {
        label: label.into(),
        cells: out.quantizer.codebook().len(),
        iterations: out.training.iterations,
        final_mse: out.training.mse_history.last().copied().unwrap_or(f64::NAN),
        fixed_point: out.training.fixed_point,
        acceptance_rate: out.acceptance_rate,
    }
}

fn uniform_baseline(model: &ProcessModel, cells: usize) -> npvq::Result<VoronoiQuantizer> {
    let b = model.truncation_box();
    let per_axis = match b.dim() {
        1 => vec![cells],
        _ => vec![(cells as f64).sqrt().round() as usize; b.dim()],
    };
    uniform_quantizer(&b, &per_axis)
}

/// Runs the configured scenario and writes its artifacts into the output
/// directory. Returns the report that was written to `report.json`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport, RunError> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|source| RunError::Io { path: dir.clone(), source })?;
    let mut w = Writer { dir, files: vec![] };
    w.write("config.echo", &cfg.echo())?;

    let model = build_model(cfg).stage("model")?;
    let dcfg = design_config(cfg);
    let grid = dcfg.grid(&model).stage("grid")?;
    let fcfg =
        FbarConfig { k: dcfg.k, n_mc: dcfg.n_mc, seed: cfg.seed, method: dcfg.fbar_method, execution: dcfg.execution };
    let p0 = marginal_density(&model, Hypothesis::H0, &grid).stage("marginal density")?;
    let p1 = marginal_density(&model, Hypothesis::H1, &grid).stage("marginal density")?;
    let score = score_field(&model, &grid, &fcfg).stage("score field")?;
    let covariation = CovariationProfile::default();
    let f = compute_f(&score, &covariation).stage("loss field")?;
    w.write("field_p0.csv", &fields_csv(&grid, p0.values(), None))?;
    w.write("field_p1.csv", &fields_csv(&grid, p1.values(), None))?;
    w.write("field_fbar.csv", &score.fbar.to_csv())?;
    w.write("field_f.csv", &f.to_csv())?;

    let mut designs: Vec<(String, VoronoiQuantizer)> = Vec::new();
    let mut summaries = Vec::new();
    if cfg.scenario != Scenario::QpskOqpsk {
        designs.push(("uniform".into(), uniform_baseline(&model, cfg.design.cells).stage("uniform quantizer")?));
    }
    let mse = mse_quantizer(&model, &dcfg).stage("mse design")?;
    summaries.push(summary("mse", &mse));
    designs.push(("mse".into(), mse.quantizer));
    if cfg.scenario == Scenario::MaDetect {
        let gh = gupta_hero_quantizer(&model, &dcfg).stage("gupta-hero design")?;
        summaries.push(summary("gupta_hero", &gh));
        w.write("field_gupta_hero_target.csv", &gh.target.to_csv())?;
        designs.push(("gupta_hero".into(), gh.quantizer));
    }
    let (proposed, _) = design_detection_quantizer(&model, &dcfg).stage("detection design")?;
    summaries.push(summary("proposed", &proposed));
    w.write("field_qstar.csv", &proposed.target.to_csv())?;
    designs.push(("proposed".into(), proposed.quantizer));
    for (label, q) in &designs {
        w.write(&format!("codebook_{label}.csv"), &q.codebook().to_csv())?;
    }

    let likelihood = QuantizedOptions {
        seed: cfg.seed,
        latent: LatentGrid { points: cfg.eval.latent_points, ..LatentGrid::default() },
        ..QuantizedOptions::default()
    };
    let tcfg = TableConfig {
        grid_nodes: cfg.eval.grid_nodes,
        fbar: fcfg,
        covariation,
        bandwidth: cfg.eval.bandwidth,
        mc_per_cell: cfg.eval.mc_per_cell,
        exponent_path: (cfg.eval.exponent_path > 0).then_some(cfg.eval.exponent_path),
        likelihood,
        ..TableConfig::new(cfg.seed)
    };
    let entries: Vec<TableEntry> = designs
        .iter()
        .map(|(label, q)| TableEntry {
            label: label.clone(),
            quantizer: q,
            zeta: if label == "uniform" { ZetaSource::Uniform } else { ZetaSource::Empirical },
        })
        .collect();
    let fields = TableFields { grid, p0, score, f };
    let table = exponent_loss_table_on(&model, &fields, &entries, &tcfg).stage("exponent-loss table")?;

    let mut roc = Vec::new();
    if cfg.eval.trials > 0 {
        for (label, q) in &designs {
            let curve = roc_curve(&model, q, cfg.eval.n, cfg.eval.trials, cfg.seed, &likelihood, label).stage("roc")?;
            let file = format!("roc_{label}.csv");
            w.write(&file, &curve.to_csv())?;
            roc.push(RocSummary {
                label: label.clone(),
                file,
                auc: auc(&curve).stage("roc")?,
                trials: cfg.eval.trials,
                path_length: cfg.eval.n,
                miss: REPORT_FALSE_ALARMS
                    .iter()
                    .map(|&a| MissPoint { false_alarm: a, miss: curve.miss_at(a), stderr: curve.miss_stderr(a) })
                    .collect(),
                preflight: curve.preflight,
            });
        }
    }

    let mut files = w.files.clone();
    files.push("report.json".into());
    let report = RunReport {
        version: npvq::VERSION.to_string(),
        scenario: cfg.scenario.name().into(),
        seed: cfg.seed,
        config: cfg.entries().iter().cloned().collect(),
        model: model.describe(),
        files,
        designs: summaries,
        table,
        roc,
    };
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    w.write("report.json", &json)?;
    Ok(report)
}

/// Loads a configuration file; a missing or unreadable file is a configuration error.
pub fn load_config(path: &Path) -> Result<crate::config::Validated, crate::config::ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| crate::config::ConfigError {
        issues: vec![crate::config::ConfigIssue {
            line: None,
            key: None,
            message: format!("cannot read {}: {e}", path.display()),
        }],
    })?;
    crate::config::parse_config(&text)
}
