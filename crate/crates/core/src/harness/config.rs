//! Experiment configuration files.
//!
//! A config is a small TOML file with two sections:
//!
//! ```toml
//! [experiment]
//! n_grid = [100, 1000, 10000]
//! trials = 10
//! seed = 1
//!
//! [generator]
//! kind = "gaussian_mixture"
//! dim = 2
//! mu = 1.0
//! sigma = 1.0
//! ```
//!
//! The experiment itself is chosen by the CLI subcommand; keys that an
//! experiment does not use are ignored by it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::datagen::Generator;
use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::model::SelectionMode;

fn default_trials() -> usize {
    1
}
fn default_test_size() -> usize {
    100_000
}
fn default_probes() -> usize {
    100_000
}
fn default_true() -> bool {
    true
}
fn default_selection() -> SelectionMode {
    SelectionMode::Bound
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub selection: SelectionMode,
    /// Fixed confidence; otherwise `δ_n = 1/n²`.
    pub delta: Option<f64>,
    /// Metric id overriding the generator's own metric.
    pub metric: Option<String>,
    /// k-NN neighbor count; otherwise the `√n` schedule.
    pub k: Option<usize>,
    /// Run the k-NN baseline alongside OptiNet.
    pub baseline: bool,
    pub test_size: usize,
    /// Scale for the net-growth and missing-mass experiments.
    pub gamma: Option<f64>,
    pub probes: usize,
    /// Record fit wall time; reports with timings are not reproducible.
    pub timing: bool,
    pub out: Option<PathBuf>,
    pub generator: Generator,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Section {
    n_grid: Vec<usize>,
    #[serde(default = "default_trials")]
    trials: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_selection")]
    selection: SelectionMode,
    #[serde(default)]
    delta: Option<f64>,
    #[serde(default)]
    metric: Option<String>,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default = "default_true")]
    baseline: bool,
    #[serde(default = "default_test_size")]
    test_size: usize,
    #[serde(default)]
    gamma: Option<f64>,
    #[serde(default = "default_probes")]
    probes: usize,
    #[serde(default)]
    timing: bool,
    #[serde(default)]
    out: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: Section,
    generator: Generator,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let e = file.experiment;
        let cfg = ExperimentConfig {
            n_grid: e.n_grid,
            trials: e.trials,
            seed: e.seed,
            selection: e.selection,
            delta: e.delta,
            metric: e.metric,
            k: e.k,
            baseline: e.baseline,
            test_size: e.test_size,
            gamma: e.gamma,
            probes: e.probes,
            timing: e.timing,
            out: e.out,
            generator: file.generator,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// A config for `generator` with defaults everywhere else.
    pub fn new(generator: Generator, n_grid: Vec<usize>, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            n_grid,
            trials,
            seed,
            selection: SelectionMode::Bound,
            delta: None,
            metric: None,
            k: None,
            baseline: true,
            test_size: default_test_size(),
            gamma: None,
            probes: default_probes(),
            timing: false,
            out: None,
            generator,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(Error::Config("n_grid must be non-empty with positive sizes".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n_grid must be strictly increasing".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.test_size == 0 || self.probes == 0 {
            return Err(Error::Config("test_size and probes must be positive".into()));
        }
        if let Some(d) = self.delta {
            crate::bound::validate_delta(d)?;
        }
        if let Some(g) = self.gamma {
            if g.is_nan() || g <= 0.0 {
                return Err(Error::Config(format!("gamma must be positive, got {g}")));
            }
        }
        if self.k == Some(0) {
            return Err(Error::Config("k must be at least 1".into()));
        }
        self.generator.validate()?;
        self.metric()?;
        Ok(())
    }

    /// The generator's metric unless overridden.
    pub fn metric(&self) -> Result<Metric> {
        match &self.metric {
            None => Ok(self.generator.metric()),
            Some(id) => {
                let m = Metric::from_id(id, None)?;
                if matches!(self.generator, Generator::HeavyAtomDiscrete { .. }) || matches!(m, Metric::Hamming) {
                    return Err(Error::Config(format!("metric {id} does not apply to {}", self.generator.name())));
                }
                Ok(m)
            }
        }
    }

    pub fn gamma(&self) -> Result<f64> {
        self.gamma.ok_or_else(|| Error::Config("this experiment needs `gamma`".into()))
    }
}
