//! TOML run configuration shared by the command-line front end.
//!
//! ```toml
//! [channel]
//! sigma = 0.9787            # or: capacity = 0.5
//!
//! [transfer]
//! kind = "ldpc"             # null | ldpc | table
//! var_degree = 3
//! check_degree = 60
//!
//! [design]
//! alpha = [6, 7, 8, 10, 12]
//! delta = 0.04
//!
//! [simulation]
//! distribution = "dist.txt"
//! overheads = [0.02, 0.04]
//! trials = 20
//!
//! [simulation.precode]
//! var_degree = 3
//! check_degree = 60
//! n = 10000
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::decoder::{DEFAULT_JOINT_ITERS, DEFAULT_TANDEM_PRECODE_ITERS};
use crate::degree::{DegreeMap, LdpcEnsemble, OutputDegreeDistribution};
use crate::design::{DesignConfig, DEFAULT_EPSILON, DEFAULT_GRID_POINTS, DEFAULT_MAX_DEGREE, DEFAULT_STRICT_MARGIN};
use crate::error::{Error, Result};
use crate::experiment::{ExperimentConfig, PrecodeSpec, Schedule};
use crate::gaussian_ic::ChannelParam;
use crate::transfer::{PrecodeThreshold, TransferFunction};

/// Tolerance of the bisection that locates the precode threshold.
pub const THRESHOLD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub channel: Option<ChannelSection>,
    #[serde(default)]
    pub transfer: TransferSection,
    pub design: Option<DesignSection>,
    pub analysis: Option<AnalysisSection>,
    pub simulation: Option<SimulationSection>,
    #[serde(skip)]
    base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub sigma: Option<f64>,
    pub capacity: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferKind {
    #[default]
    Null,
    Ldpc,
    Table,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferSection {
    #[serde(default)]
    pub kind: TransferKind,
    pub var_degree: Option<u32>,
    pub check_degree: Option<u32>,
    /// Edge-view variable and check distributions, keyed by degree.
    pub lambda: Option<BTreeMap<String, f64>>,
    pub rho: Option<BTreeMap<String, f64>>,
    pub path: Option<PathBuf>,
    /// Overrides the computed precode threshold.
    pub x_p: Option<f64>,
    /// Samples written by the `transfer` subcommand.
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub alpha: Vec<f64>,
    pub delta: f64,
    pub epsilon: Option<f64>,
    pub max_degree: Option<u32>,
    pub grid_points: Option<usize>,
    pub strict_margin: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub distribution: PathBuf,
    pub alpha: f64,
    /// Precode rate entering the overhead prediction; 1 without a precode.
    pub precode_rate: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub distribution: PathBuf,
    pub k_info: Option<usize>,
    pub precode: Option<PrecodeSection>,
    pub overheads: Vec<f64>,
    pub trials: usize,
    pub schedule: Option<Schedule>,
    pub max_iters: Option<usize>,
    pub precode_iters: Option<usize>,
    pub seed: Option<u64>,
    pub random_codeword: Option<bool>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecodeSection {
    pub var_degree: u32,
    pub check_degree: u32,
    pub n: usize,
}

fn degree_map(raw: &BTreeMap<String, f64>, what: &str) -> Result<DegreeMap> {
    raw.iter()
        .map(|(k, &v)| {
            k.trim()
                .parse::<u32>()
                .map(|d| (d, v))
                .map_err(|_| Error::config(format!("{what}: degree key {k:?} is not an integer")))
        })
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|source| Error::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Resolves `p` against the config file's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn channel(&self) -> Result<ChannelParam> {
        let section = self.channel.ok_or_else(|| Error::config("missing [channel] section"))?;
        match (section.sigma, section.capacity) {
            (Some(s), None) => ChannelParam::from_sigma(s),
            (None, Some(c)) => ChannelParam::from_capacity(c),
            _ => Err(Error::config("[channel] needs exactly one of sigma or capacity")),
        }
    }

    fn ensemble(&self) -> Result<LdpcEnsemble> {
        let t = &self.transfer;
        match (t.var_degree, t.check_degree, &t.lambda, &t.rho) {
            (Some(dv), Some(dc), None, None) => LdpcEnsemble::regular(dv, dc),
            (None, None, Some(l), Some(r)) => LdpcEnsemble::new(degree_map(l, "lambda")?, degree_map(r, "rho")?),
            _ => Err(Error::config("[transfer] needs var_degree/check_degree or lambda/rho")),
        }
    }

    pub fn transfer(&self) -> Result<TransferFunction> {
        match self.transfer.kind {
            TransferKind::Null => Ok(TransferFunction::Null),
            TransferKind::Ldpc => Ok(TransferFunction::AnalyticLdpc(self.ensemble()?)),
            TransferKind::Table => {
                let p = self.transfer.path.as_ref().ok_or_else(|| Error::config("[transfer] kind = \"table\" needs path"))?;
                TransferFunction::load_tabulated(&self.resolve(p))
            }
        }
    }

    /// The configured `x_p`, else the analytic threshold, else none.
    pub fn precode_threshold(&self, transfer: &TransferFunction) -> Result<PrecodeThreshold> {
        match (self.transfer.x_p, transfer) {
            (Some(x), _) => PrecodeThreshold::new(x),
            (None, TransferFunction::Null) => Ok(PrecodeThreshold::NONE),
            (None, TransferFunction::AnalyticLdpc(_)) => transfer.threshold(THRESHOLD_TOL),
            (None, TransferFunction::Tabulated(_)) => Err(Error::config("a tabulated transfer needs an explicit x_p")),
        }
    }

    pub fn ldpc_ensemble(&self) -> Result<LdpcEnsemble> {
        self.ensemble()
    }

    pub fn design(&self) -> Result<DesignConfig> {
        let d = self.design.as_ref().ok_or_else(|| Error::config("missing [design] section"))?;
        let transfer = self.transfer()?;
        let x_p = self.precode_threshold(&transfer)?;
        let mut cfg = DesignConfig::new(self.channel()?, transfer, x_p, d.alpha.clone(), d.delta);
        cfg.epsilon_start = d.epsilon.unwrap_or(DEFAULT_EPSILON);
        cfg.degree_support = (1..=d.max_degree.unwrap_or(DEFAULT_MAX_DEGREE)).collect();
        cfg.grid_points = d.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
        cfg.strict_margin = d.strict_margin.unwrap_or(DEFAULT_STRICT_MARGIN);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn analysis(&self) -> Result<(&AnalysisSection, OutputDegreeDistribution)> {
        let a = self.analysis.as_ref().ok_or_else(|| Error::config("missing [analysis] section"))?;
        let dist = OutputDegreeDistribution::read(&self.resolve(&a.distribution))?;
        Ok((a, dist))
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let s = self.simulation.as_ref().ok_or_else(|| Error::config("missing [simulation] section"))?;
        let dist = OutputDegreeDistribution::read(&self.resolve(&s.distribution))?;
        let mut cfg = ExperimentConfig::new(s.k_info.unwrap_or(0), dist, self.channel()?, s.overheads.clone(), s.trials);
        cfg.k_info = s.k_info;
        cfg.precode = s.precode.map(|p| PrecodeSpec {
            var_degree: p.var_degree,
            check_degree: p.check_degree,
            n: p.n,
        });
        cfg.schedule = s.schedule.unwrap_or(Schedule::Joint);
        cfg.max_iters = s.max_iters.unwrap_or(DEFAULT_JOINT_ITERS);
        cfg.precode_iters = s.precode_iters.unwrap_or(DEFAULT_TANDEM_PRECODE_ITERS);
        cfg.master_seed = s.seed.unwrap_or(0);
        cfg.random_codeword = s.random_codeword.unwrap_or(false);
        cfg.workers = s.workers.unwrap_or(1);
        Ok(cfg)
    }
}
