//! Run configuration: an optional TOML file overlaid by command-line flags.
//!
//! Every key is optional and mirrors a flag (dashes become underscores):
//!
//! ```toml
//! n = 100
//! p = 1000
//! k_star = 10
//! rho = 0.1
//! seed = 2024
//! replications = 10
//! methods = ["l1", "l2", "slope"]
//! losses = ["svm", "logreg"]
//! grid_size = 50
//! tau = 0.2
//! epsilon = 1e-10
//! t_max = 5000
//! val_size = 10000
//! test_size = 10000
//! ns = [200, 400, 800, 1600]   # rate only
//! out = "table1.csv"
//! format = "csv"
//! ```

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use slopecls::datagen::{ExperimentSpec, DEFAULT_HOLDOUT_SIZE};
use slopecls::experiments::{LossKind, Method, PathSettings, ReportFormat};
use slopecls::solver::SolverConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config file {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("{0}")]
    Invalid(String),
}

impl From<slopecls::Error> for ConfigError {
    fn from(e: slopecls::Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub k_star: Option<usize>,
    pub rho: Option<f64>,
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub methods: Option<Vec<String>>,
    pub losses: Option<Vec<String>>,
    pub grid_size: Option<usize>,
    pub tau: Option<f64>,
    pub epsilon: Option<f64>,
    pub t_max: Option<usize>,
    pub val_size: Option<usize>,
    pub test_size: Option<usize>,
    pub ns: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_owned(), source })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse { path: path.to_owned(), source })
    }
}

/// Flags shared by both subcommands; each overrides the matching file key.
#[derive(Debug, Default, Clone, Args)]
pub struct RunArgs {
    /// TOML file with default values for any of the flags below
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long = "k-star")]
    pub k_star: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Comma-separated subset of l1,l2,slope
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// Comma-separated subset of svm,logreg
    #[arg(long, value_delimiter = ',')]
    pub losses: Option<Vec<String>>,
    #[arg(long = "grid-size")]
    pub grid_size: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "t-max")]
    pub t_max: Option<usize>,
    #[arg(long = "val-size")]
    pub val_size: Option<usize>,
    #[arg(long = "test-size")]
    pub test_size: Option<usize>,
    /// Sample sizes of the rate grid (rate only)
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or markdown
    #[arg(long)]
    pub format: Option<String>,
}

/// Fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub spec: ExperimentSpec,
    pub replications: usize,
    pub methods: Vec<Method>,
    pub losses: Vec<LossKind>,
    pub path: PathSettings,
    pub ns: Vec<usize>,
    pub out: PathBuf,
    pub format: ReportFormat,
}

fn parse_list<T: std::str::FromStr<Err = slopecls::Error>>(items: &[String]) -> Result<Vec<T>, ConfigError> {
    let mut out = Vec::new();
    for item in items.iter().filter(|s| !s.trim().is_empty()) {
        out.push(item.parse::<T>()?);
    }
    Ok(out)
}

pub struct Defaults {
    pub methods: &'static [Method],
    pub losses: &'static [LossKind],
    pub n: usize,
    pub p: usize,
    pub k_star: usize,
}

pub const TABLE_DEFAULTS: Defaults = Defaults {
    methods: &Method::ALL,
    losses: &LossKind::ALL,
    n: 100,
    p: 1000,
    k_star: 10,
};

pub const RATE_DEFAULTS: Defaults = Defaults {
    methods: &[Method::Slope],
    losses: &[LossKind::Logreg],
    n: 200,
    p: 500,
    k_star: 10,
};

impl RunArgs {
    pub fn resolve(&self, defaults: &Defaults) -> Result<Settings, ConfigError> {
        let file = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let n = self.n.or(file.n).unwrap_or(defaults.n);
        let p = self.p.or(file.p).unwrap_or(defaults.p);
        let k_star = self.k_star.or(file.k_star).unwrap_or(defaults.k_star);
        let rho = self.rho.or(file.rho).unwrap_or(0.1);
        let seed = self.seed.or(file.seed).unwrap_or(0);
        let mut spec = ExperimentSpec::new(n, p, k_star, rho, seed);
        spec.val_size = self.val_size.or(file.val_size).unwrap_or(DEFAULT_HOLDOUT_SIZE);
        spec.test_size = self.test_size.or(file.test_size).unwrap_or(DEFAULT_HOLDOUT_SIZE);

        let methods = match self.methods.as_ref().or(file.methods.as_ref()) {
            Some(list) => parse_list(list)?,
            None => defaults.methods.to_vec(),
        };
        let losses = match self.losses.as_ref().or(file.losses.as_ref()) {
            Some(list) => parse_list(list)?,
            None => defaults.losses.to_vec(),
        };

        let base = SolverConfig::default();
        let solver = SolverConfig {
            epsilon: self.epsilon.or(file.epsilon).unwrap_or(base.epsilon),
            t_max: self.t_max.or(file.t_max).unwrap_or(base.t_max),
            tau: self.tau.or(file.tau).unwrap_or(base.tau),
            step_override: None,
        };
        let path = PathSettings {
            grid_size: self.grid_size.or(file.grid_size).unwrap_or(PathSettings::default().grid_size),
            solver,
        };
        let format = match self.format.as_ref().or(file.format.as_ref()) {
            Some(f) => f.parse::<ReportFormat>()?,
            None => ReportFormat::Csv,
        };
        let out = self
            .out
            .clone()
            .or(file.out)
            .ok_or_else(|| ConfigError::Invalid("an output path is required (--out)".into()))?;
        let ns = self.ns.clone().or(file.ns).unwrap_or_else(|| vec![200, 400, 800, 1600]);

        Ok(Settings {
            spec,
            replications: self.replications.or(file.replications).unwrap_or(10),
            methods,
            losses,
            path,
            ns,
            out,
            format,
        })
    }
}
