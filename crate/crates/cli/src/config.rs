//! Flat `key = value` scenario configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key that applies
//! to the chosen scenario is resolved, either from the file or from a default,
//! and the resolved set is what [`ScenarioConfig::echo`] writes back.

use npvq::highrate::FbarMethod;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    QpskOqpsk,
    ArDetect,
    MaDetect,
    Custom,
}

impl Scenario {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "qpsk_oqpsk" => Scenario::QpskOqpsk,
            "ar_detect" => Scenario::ArDetect,
            "ma_detect" => Scenario::MaDetect,
            "custom" => Scenario::Custom,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::QpskOqpsk => "qpsk_oqpsk",
            Scenario::ArDetect => "ar_detect",
            Scenario::MaDetect => "ma_detect",
            Scenario::Custom => "custom",
        }
    }
}

/// Process parameters of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    QpskOqpsk { half_width: f64, sigma: f64 },
    Ar1 { a: f64, sigma: f64, circular: bool },
    Ma { taps: Vec<f64>, sigma: f64 },
    IidGaussian { mean0: f64, sd0: f64, mean1: f64, sd1: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignParams {
    pub cells: usize,
    pub k: usize,
    pub n_mc: usize,
    pub n_train: usize,
    pub fbar_method: FbarMethod,
    pub lbg_tol: f64,
    pub lbg_max_iter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalParams {
    /// ROC path length.
    pub n: usize,
    /// ROC trials per hypothesis; zero skips the ROC stage.
    pub trials: usize,
    pub grid_nodes: usize,
    /// Truncation half-width; `None` keeps the model's own box.
    pub half_box: Option<f64>,
    pub bandwidth: f64,
    pub mc_per_cell: usize,
    pub latent_points: usize,
    /// Path length for quantized exponent estimates; zero skips them.
    pub exponent_path: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub model: ModelParams,
    pub design: DesignParams,
    pub eval: EvalParams,
    pub output_dir: PathBuf,
    resolved: Vec<(String, String)>,
}

impl ScenarioConfig {
    /// Every resolved key in canonical order.
    pub fn entries(&self) -> &[(String, String)] {
        &self.resolved
    }

    /// Re-parseable `key = value` text of the resolved configuration.
    pub fn echo(&self) -> String {
        self.resolved.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// A parsed configuration with the defaults that were filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub config: ScenarioConfig,
    pub defaults: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        if let Some(k) = &self.key {
            write!(f, "{k}: ")?;
        }
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration ({} problem(s))", self.issues.len())?;
        for i in &self.issues {
            write!(f, "\n  {i}")?;
        }
        Ok(())
    }
}

const MA_TAPS_DEFAULT: &str = "1.06677,-0.59281,0.09565";

// Keys that apply to a scenario (and custom model kind), with their defaults.
fn applicable_keys(scenario: Scenario, kind: Option<&str>) -> Vec<(&'static str, Option<String>)> {
    use Scenario::*;
    let s = |v: &str| Some(v.to_string());
    let mut keys: Vec<(&'static str, Option<String>)> = vec![("scenario", None), ("seed", None)];
    match scenario {
        QpskOqpsk => keys.extend([("model.m", s("3")), ("model.sigma", s("0.6"))]),
        ArDetect => keys.extend([("model.a", s("0.8")), ("model.sigma", s("1"))]),
        MaDetect => keys.extend([("model.taps", s(MA_TAPS_DEFAULT)), ("model.sigma", s("1.5"))]),
        Custom => {
            keys.push(("model.kind", None));
            match kind {
                Some("iid_gaussian") => keys.extend([
                    ("model.mean0", s("0")),
                    ("model.sd0", s("1")),
                    ("model.mean1", s("1")),
                    ("model.sd1", s("1")),
                ]),
                Some("ar1") | Some("ar1_circular") => keys.extend([("model.a", None), ("model.sigma", s("1"))]),
                Some("ma") => keys.extend([("model.taps", None), ("model.sigma", s("1"))]),
                _ => {}
            }
        }
    }
    let cells = match scenario {
        QpskOqpsk => "128",
        ArDetect => "64",
        MaDetect => "4",
        Custom => "16",
    };
    keys.extend([
        ("design.cells", s(cells)),
        ("design.k", s("3")),
        ("design.n_mc", s("1000")),
        ("design.n_train", s("20000")),
        ("design.fbar_method", s("auto")),
        ("design.lbg_tol", s("1e-6")),
        ("design.lbg_max_iter", s("200")),
        ("eval.grid_nodes", s("101")),
        ("eval.bandwidth", s("2")),
        ("eval.mc_per_cell", s("10000")),
        ("eval.exponent_path", s("0")),
    ]);
    match scenario {
        QpskOqpsk => {}
        ArDetect => keys.push(("eval.box", s("8"))),
        MaDetect => keys.push(("eval.box", s("15"))),
        Custom => keys.push(("eval.box", s("auto"))),
    }
    if matches!(scenario, MaDetect | Custom) {
        let trials = if scenario == MaDetect { "50000" } else { "0" };
        keys.extend([("eval.n", s("80")), ("eval.trials", s(trials)), ("eval.latent_points", s("41"))]);
    }
    keys.push(("output.dir", s("npvq-out")));
    keys
}

const ALL_KEYS: &[&str] = &[
    "scenario",
    "seed",
    "model.m",
    "model.sigma",
    "model.a",
    "model.taps",
    "model.kind",
    "model.mean0",
    "model.sd0",
    "model.mean1",
    "model.sd1",
    "design.cells",
    "design.k",
    "design.n_mc",
    "design.n_train",
    "design.fbar_method",
    "design.lbg_tol",
    "design.lbg_max_iter",
    "eval.grid_nodes",
    "eval.bandwidth",
    "eval.mc_per_cell",
    "eval.exponent_path",
    "eval.box",
    "eval.n",
    "eval.trials",
    "eval.latent_points",
    "output.dir",
];

struct Resolver {
    values: BTreeMap<String, (Option<usize>, String)>,
    issues: Vec<ConfigIssue>,
}

impl Resolver {
    fn issue(&mut self, key: &str, message: impl Into<String>) {
        let line = self.values.get(key).and_then(|v| v.0);
        self.issues.push(ConfigIssue { line, key: Some(key.into()), message: message.into() });
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|v| v.1.as_str())
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Option<T> {
        let raw = self.raw(key)?.to_string();
        match raw.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.issue(key, format!("expected {what}, got `{raw}`"));
                None
            }
        }
    }

    fn real(&mut self, key: &str, check: impl Fn(f64) -> bool, range: &str) -> f64 {
        match self.parsed::<f64>(key, "a number") {
            Some(v) if v.is_finite() && check(v) => v,
            Some(v) => {
                self.issue(key, format!("{v} is out of range ({range})"));
                f64::NAN
            }
            None => f64::NAN,
        }
    }

    fn count(&mut self, key: &str, min: usize) -> usize {
        match self.parsed::<usize>(key, "a nonnegative integer") {
            Some(v) if v >= min => v,
            Some(v) => {
                self.issue(key, format!("{v} is out of range (must be at least {min})"));
                0
            }
            None => 0,
        }
    }
}

fn split_lines(text: &str) -> (BTreeMap<String, (Option<usize>, String)>, Vec<ConfigIssue>) {
    let mut values = BTreeMap::new();
    let mut issues = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let Some((k, v)) = t.split_once('=') else {
            issues.push(ConfigIssue { line: Some(line_no), key: None, message: "expected `key = value`".into() });
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            issues.push(ConfigIssue { line: Some(line_no), key: None, message: "empty key".into() });
        } else if !ALL_KEYS.contains(&k) {
            issues.push(ConfigIssue { line: Some(line_no), key: Some(k.into()), message: "unknown key".into() });
        } else if let Some((first, _)) = values.get(k) {
            let first: &Option<usize> = first;
            issues.push(ConfigIssue {
                line: Some(line_no),
                key: Some(k.into()),
                message: format!("duplicate key (first set on line {})", first.unwrap_or(0)),
            });
        } else {
            values.insert(k.to_string(), (Some(line_no), v.to_string()));
        }
    }
    (values, issues)
}

/// Parses and validates configuration text, listing every problem found.
pub fn parse_config(text: &str) -> Result<Validated, ConfigError> {
    let (values, issues) = split_lines(text);
    let mut r = Resolver { values, issues };

    let scenario = match r.raw("scenario").map(str::to_string) {
        None => {
            r.issues.push(ConfigIssue {
                line: None,
                key: Some("scenario".into()),
                message: "required field is missing".into(),
            });
            None
        }
        Some(s) => {
            let sc = Scenario::parse(&s);
            if sc.is_none() {
                r.issue(
                    "scenario",
                    format!("unknown scenario `{s}` (expected qpsk_oqpsk, ar_detect, ma_detect or custom)"),
                );
            }
            sc
        }
    };
    let Some(scenario) = scenario else {
        if r.raw("seed").is_none() {
            r.issues.push(ConfigIssue {
                line: None,
                key: Some("seed".into()),
                message: "required field is missing".into(),
            });
        }
        return Err(ConfigError { issues: r.issues });
    };
    let kind = r.raw("model.kind").map(str::to_string);
    if scenario == Scenario::Custom {
        if let Some(k) = &kind {
            if !["iid_gaussian", "ar1", "ar1_circular", "ma"].contains(&k.as_str()) {
                r.issue(
                    "model.kind",
                    format!("unknown model kind `{k}` (expected iid_gaussian, ar1, ar1_circular or ma)"),
                );
            }
        }
    }

    let keys = applicable_keys(scenario, kind.as_deref());
    let mut defaults = Vec::new();
    for (key, default) in &keys {
        if r.values.contains_key(*key) {
            continue;
        }
        match default {
            Some(d) => {
                r.values.insert(key.to_string(), (None, d.clone()));
                defaults.push((key.to_string(), d.clone()));
            }
            None => r.issues.push(ConfigIssue {
                line: None,
                key: Some(key.to_string()),
                message: "required field is missing".into(),
            }),
        }
    }
    let names: Vec<&str> = keys.iter().map(|k| k.0).collect();
    let extra: Vec<String> = r.values.keys().filter(|k| !names.contains(&k.as_str())).cloned().collect();
    for k in extra {
        r.issue(&k, format!("not used by scenario {}", scenario.name()));
    }

    let seed = r.parsed::<u64>("seed", "a nonnegative integer").unwrap_or(0);
    let positive = |v: f64| v > 0.0;
    let model = match (scenario, kind.as_deref()) {
        (Scenario::QpskOqpsk, _) => ModelParams::QpskOqpsk {
            half_width: r.real("model.m", positive, "must be > 0"),
            sigma: r.real("model.sigma", positive, "must be > 0"),
        },
        (Scenario::ArDetect, _) | (Scenario::Custom, Some("ar1" | "ar1_circular")) => ModelParams::Ar1 {
            a: r.real("model.a", |a| a.abs() < 1.0, "|a| must be < 1"),
            sigma: r.real("model.sigma", positive, "must be > 0"),
            circular: scenario == Scenario::ArDetect || kind.as_deref() == Some("ar1_circular"),
        },
        (Scenario::MaDetect, _) | (Scenario::Custom, Some("ma")) => {
            let taps = match r.raw("model.taps").map(str::to_string) {
                Some(t) => {
                    let parsed: Result<Vec<f64>, _> = t.split(',').map(|x| x.trim().parse::<f64>()).collect();
                    match parsed {
                        Ok(v) if !v.is_empty() && v.iter().all(|x| x.is_finite()) && v.iter().any(|x| *x != 0.0) => v,
                        _ => {
                            r.issue("model.taps", "expected a comma-separated list of finite numbers, not all zero");
                            vec![]
                        }
                    }
                }
                None => vec![],
            };
            ModelParams::Ma { taps, sigma: r.real("model.sigma", positive, "must be > 0") }
        }
        (Scenario::Custom, _) => ModelParams::IidGaussian {
            mean0: r.real("model.mean0", |_| true, "finite"),
            sd0: r.real("model.sd0", positive, "must be > 0"),
            mean1: r.real("model.mean1", |_| true, "finite"),
            sd1: r.real("model.sd1", positive, "must be > 0"),
        },
    };

    let cells = r.count("design.cells", 2);
    let fbar_method = match r.raw("design.fbar_method") {
        Some("auto") => FbarMethod::Auto,
        Some("monte_carlo") => FbarMethod::MonteCarlo,
        Some("exact") => FbarMethod::Exact,
        Some(other) => {
            let other = other.to_string();
            r.issue("design.fbar_method", format!("expected auto, monte_carlo or exact, got `{other}`"));
            FbarMethod::Auto
        }
        None => FbarMethod::Auto,
    };
    let design = DesignParams {
        cells,
        k: r.count("design.k", 0),
        n_mc: r.count("design.n_mc", 1),
        n_train: r.count("design.n_train", 1),
        fbar_method,
        lbg_tol: r.real("design.lbg_tol", positive, "must be > 0"),
        lbg_max_iter: r.count("design.lbg_max_iter", 1),
    };
    if cells >= 2 && design.n_train > 0 && design.n_train < 10 * cells {
        r.issue(
            "design.n_train",
            format!("{} is out of range (must be at least 10 x design.cells = {})", design.n_train, 10 * cells),
        );
    }
    let dim2 = matches!(model, ModelParams::QpskOqpsk { .. } | ModelParams::Ar1 { circular: true, .. });
    if dim2 && cells >= 2 && scenario != Scenario::QpskOqpsk {
        let s = (cells as f64).sqrt().round() as usize;
        if s * s != cells {
            r.issue(
                "design.cells",
                format!("{cells} must be a perfect square for the two-dimensional uniform baseline"),
            );
        }
    }

    let half_box = match r.raw("eval.box").map(str::to_string) {
        None => None,
        Some(b) if b == "auto" => None,
        Some(_) => Some(r.real("eval.box", positive, "must be > 0 or auto")),
    };
    let has_roc = r.values.contains_key("eval.n");
    let eval = EvalParams {
        n: if has_roc { r.count("eval.n", 1) } else { 80 },
        trials: if has_roc { r.count("eval.trials", if scenario == Scenario::MaDetect { 1 } else { 0 }) } else { 0 },
        grid_nodes: r.count("eval.grid_nodes", 3),
        half_box,
        bandwidth: r.real("eval.bandwidth", |b| b >= 0.0, "must be >= 0"),
        mc_per_cell: r.count("eval.mc_per_cell", 10_000),
        latent_points: if has_roc { r.count("eval.latent_points", 3) } else { 41 },
        exponent_path: r.count("eval.exponent_path", 0),
    };
    if eval.exponent_path > 0 && eval.exponent_path < 1000 {
        r.issue(
            "eval.exponent_path",
            format!("{} is out of range (0 to skip, otherwise at least 1000)", eval.exponent_path),
        );
    }
    let output_dir = PathBuf::from(r.raw("output.dir").unwrap_or("npvq-out"));

    if !r.issues.is_empty() {
        r.issues.sort_by_key(|i| (i.line.unwrap_or(usize::MAX), i.key.clone()));
        return Err(ConfigError { issues: r.issues });
    }
    let resolved = names.iter().map(|k| (k.to_string(), r.values[*k].1.clone())).collect();
    Ok(Validated { config: ScenarioConfig { scenario, seed, model, design, eval, output_dir, resolved }, defaults })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys(e: &ConfigError) -> Vec<String> {
        e.issues.iter().filter_map(|i| i.key.clone()).collect()
    }

    #[test]
    fn missing_seed_is_named() {
        let e = parse_config("scenario = ar_detect\n").unwrap_err();
        assert_eq!(keys(&e), vec!["seed"]);
    }

    #[test]
    fn zero_sigma_is_a_range_error() {
        let e = parse_config("scenario = qpsk_oqpsk\nseed = 1\nmodel.sigma = 0\n").unwrap_err();
        assert_eq!(e.issues.len(), 1);
        assert_eq!(e.issues[0].line, Some(3));
        assert!(e.issues[0].message.contains("out of range"));
    }

    #[test]
    fn scenario_one_defaults_are_echoed() {
        let v = parse_config("scenario = qpsk_oqpsk\nseed = 7\n").unwrap();
        let d: BTreeMap<_, _> = v.defaults.iter().cloned().collect();
        assert_eq!(d["design.k"], "3");
        assert_eq!(d["design.n_mc"], "1000");
        assert_eq!(d["design.cells"], "128");
        assert_eq!(v.config.model, ModelParams::QpskOqpsk { half_width: 3.0, sigma: 0.6 });
    }

    #[test]
    fn every_violation_is_listed() {
        let text = "scenario = ar_detect\nmodel.a = 1.2\nbogus\ndesign.cells = 1\nfoo.bar = 2\neval.n = 5\n";
        let e = parse_config(text).unwrap_err();
        let k = keys(&e);
        for want in ["seed", "model.a", "design.cells", "foo.bar", "eval.n"] {
            assert!(k.iter().any(|x| x == want), "{want} missing from {e}");
        }
        assert!(e.issues.iter().any(|i| i.line == Some(3) && i.key.is_none()));
    }

    #[test]
    fn echo_round_trips() {
        let v = parse_config("scenario = custom\nseed = 3\nmodel.kind = ma\nmodel.taps = 1, 0.5\n").unwrap();
        let again = parse_config(&v.config.echo()).unwrap();
        assert_eq!(again.config, v.config);
        assert!(again.defaults.is_empty());
    }

    #[test]
    fn duplicate_keys_rejected() {
        let e = parse_config("scenario = ar_detect\nseed = 1\nseed = 2\n").unwrap_err();
        assert_eq!(e.issues[0].line, Some(3));
        assert!(e.issues[0].message.contains("line 2"));
    }
}
