//! Scenario configuration and batch pipelines behind the `npvq` binary.

pub mod config;
pub mod pipeline;

pub use config::{parse_config, ConfigError, ConfigIssue, Scenario, ScenarioConfig, Validated};
pub use pipeline::{load_config, run_scenario, RunError, RunReport};
