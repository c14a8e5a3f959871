//! BER-versus-overhead campaigns and the analytic threshold prediction.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::codec::{awgn_llr, build_regular_ldpc, ldpc_encode, mix_seed, random_bits, LdpcCode, LtStream};
use crate::decoder::{TannerGraph, DEFAULT_JOINT_ITERS, DEFAULT_TANDEM_LT_ITERS, DEFAULT_TANDEM_PRECODE_ITERS};
use crate::degree::OutputDegreeDistribution;
use crate::error::{Error, Result};
use crate::evolution::{EvolutionContext, Trajectory, DEFAULT_TRAJECTORY_TOL};
use crate::gaussian_ic::ChannelParam;
use crate::transfer::{PrecodeThreshold, TransferFunction};

/// Iteration budget for threshold prediction. LP designs leave `F(x) − x` at
/// the strict margin near active grid points, and crossing those
/// bottlenecks takes thousands of iterations.
pub const PREDICTION_MAX_ITERS: usize = 200_000;

pub const CSV_HEADER: &str = "overhead,n_output,trials,bit_errors,frame_errors,ber,fer,schedule,seed";

/// Received output symbols for `overhead`: `⌈k_info·(1+ε)/C⌉`.
pub fn overhead_to_symbols(k_info: usize, capacity: f64, overhead: f64) -> Result<usize> {
    if !(capacity > 0.0 && capacity <= 1.0) {
        return Err(Error::domain(format!("capacity {capacity} outside (0, 1]")));
    }
    if !(overhead > -1.0) {
        return Err(Error::domain(format!("overhead {overhead} must exceed -1")));
    }
    // Guard against representation error pushing an exact product up by one.
    let exact = k_info as f64 * (1.0 + overhead) / capacity;
    let rounded = exact.round();
    let n = if (exact - rounded).abs() <= 1e-9 * exact.max(1.0) { rounded } else { exact.ceil() };
    Ok(n as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Joint,
    Tandem,
}

impl Schedule {
    pub fn as_str(self) -> &'static str {
        match self {
            Schedule::Joint => "joint",
            Schedule::Tandem => "tandem",
        }
    }
}

impl std::str::FromStr for Schedule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(Schedule::Joint),
            "tandem" => Ok(Schedule::Tandem),
            other => Err(Error::config(format!("unknown schedule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecodeSpec {
    pub var_degree: u32,
    pub check_degree: u32,
    pub n: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Information bits per frame; `None` takes the precode's info length.
    pub k_info: Option<usize>,
    pub precode: Option<PrecodeSpec>,
    pub distribution: OutputDegreeDistribution,
    pub channel: ChannelParam,
    pub overheads: Vec<f64>,
    pub trials: usize,
    pub schedule: Schedule,
    /// Joint iterations, or LT iterations of the tandem schedule.
    pub max_iters: usize,
    pub precode_iters: usize,
    pub master_seed: u64,
    pub random_codeword: bool,
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn new(k_info: usize, distribution: OutputDegreeDistribution, channel: ChannelParam, overheads: Vec<f64>, trials: usize) -> Self {
        Self {
            k_info: Some(k_info),
            precode: None,
            distribution,
            channel,
            overheads,
            trials,
            schedule: Schedule::Joint,
            max_iters: DEFAULT_JOINT_ITERS,
            precode_iters: DEFAULT_TANDEM_PRECODE_ITERS,
            master_seed: 0,
            random_codeword: false,
            workers: 1,
        }
    }

    pub fn with_tandem_defaults(mut self) -> Self {
        self.schedule = Schedule::Tandem;
        self.max_iters = DEFAULT_TANDEM_LT_ITERS;
        self.precode_iters = DEFAULT_TANDEM_PRECODE_ITERS;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub overhead: f64,
    pub n_output: usize,
    pub trials: usize,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub fer: f64,
    pub schedule: Schedule,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub bit_errors: u64,
    pub converged: bool,
}

/// A validated campaign: the precode is built once from the master seed and
/// shared by every trial.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub cfg: ExperimentConfig,
    pub precode: Option<LdpcCode>,
    pub k_info: usize,
    /// LT input symbols (precode length, or `k_info` without a precode).
    pub k_input: usize,
}

impl Campaign {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        if cfg.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if cfg.overheads.iter().any(|&o| !(o > -1.0)) {
            return Err(Error::config("overheads must exceed -1"));
        }
        if cfg.max_iters == 0 {
            return Err(Error::config("max_iters must be at least 1"));
        }
        let precode = match cfg.precode {
            Some(p) => Some(build_regular_ldpc(p.n, p.var_degree, p.check_degree, mix_seed(cfg.master_seed, u64::MAX, 0))?),
            None => None,
        };
        let k_info = match (&precode, cfg.k_info) {
            (Some(code), Some(k)) if k != code.info_len() => {
                return Err(Error::config(format!("k_info {k} does not match the precode's info length {}", code.info_len())));
            }
            (Some(code), _) => code.info_len(),
            (None, Some(k)) if k > 0 => k,
            (None, _) => return Err(Error::config("k_info is required without a precode")),
        };
        let k_input = precode.as_ref().map_or(k_info, |c| c.n);
        // Catch a bad distribution before any trial runs.
        LtStream::new(cfg.distribution.clone(), k_input, 0)?;
        Ok(Self {
            cfg,
            precode,
            k_info,
            k_input,
        })
    }

    pub fn n_output(&self, overhead: f64) -> Result<usize> {
        overhead_to_symbols(self.k_info, self.cfg.channel.x0, overhead)
    }

    /// One frame at overhead index `point`; the sub-seed depends only on the
    /// master seed, `point` and `trial`.
    pub fn run_trial(&self, point: usize, trial: usize, schedule: Schedule) -> Result<TrialOutcome> {
        let overhead = *self
            .cfg
            .overheads
            .get(point)
            .ok_or_else(|| Error::config(format!("overhead index {point} out of range")))?;
        let seed = mix_seed(self.cfg.master_seed, point as u64, trial as u64);
        let n_output = self.n_output(overhead)?;
        let info = if self.cfg.random_codeword { random_bits(self.k_info, seed) } else { vec![0; self.k_info] };
        let input = match &self.precode {
            Some(code) => ldpc_encode(code, &info)?,
            None => info.clone(),
        };
        let mut stream = LtStream::new(self.cfg.distribution.clone(), self.k_input, seed)?;
        stream.extend(n_output);
        let bits = stream.encode_range(&input, 0);
        let channel = awgn_llr(&bits, self.cfg.channel.sigma(), seed)?;
        let mut graph = TannerGraph::from_stream(&stream, channel.llrs, self.precode.as_ref())?;
        let result = match schedule {
            Schedule::Joint => graph.decode_joint(self.cfg.max_iters),
            Schedule::Tandem => graph.decode_tandem(self.cfg.max_iters, self.cfg.precode_iters),
        };
        let bit_errors = match &self.precode {
            Some(code) => code
                .info_positions()
                .iter()
                .zip(&info)
                .filter(|(&p, &b)| result.decisions[p] != b)
                .count(),
            None => result.decisions.iter().zip(&info).filter(|(a, b)| a != b).count(),
        } as u64;
        Ok(TrialOutcome {
            bit_errors,
            converged: result.converged,
        })
    }

    /// All trials at one overhead, in trial order.
    pub fn run_point(&self, point: usize, schedule: Schedule) -> Result<Vec<TrialOutcome>> {
        (0..self.cfg.trials)
            .into_par_iter()
            .map(|t| self.run_trial(point, t, schedule))
            .collect()
    }

    fn record(&self, point: usize, outcomes: &[TrialOutcome]) -> Result<ExperimentRecord> {
        let overhead = self.cfg.overheads[point];
        let trials = outcomes.len();
        let bit_errors: u64 = outcomes.iter().map(|o| o.bit_errors).sum();
        let frame_errors = outcomes.iter().filter(|o| o.bit_errors > 0).count() as u64;
        Ok(ExperimentRecord {
            overhead,
            n_output: self.n_output(overhead)?,
            trials,
            bit_errors,
            frame_errors,
            ber: bit_errors as f64 / (trials as f64 * self.k_info as f64),
            fer: frame_errors as f64 / trials as f64,
            schedule: self.cfg.schedule,
            seed: self.cfg.master_seed,
        })
    }

    /// Runs every overhead point and writes one CSV row per point as soon as
    /// the point completes.
    pub fn run<W: Write>(&self, sink: W) -> Result<Vec<ExperimentRecord>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.workers.max(1))
            .build()
            .map_err(|e| Error::config(format!("worker pool: {e}")))?;
        let mut writer = csv::Writer::from_writer(sink);
        let mut records = Vec::with_capacity(self.cfg.overheads.len());
        for point in 0..self.cfg.overheads.len() {
            let outcomes = pool.install(|| self.run_point(point, self.cfg.schedule))?;
            let rec = self.record(point, &outcomes)?;
            log::info!(
                "overhead {:.4}: ber {:.3e} fer {:.3} ({} symbols)",
                rec.overhead,
                rec.ber,
                rec.fer,
                rec.n_output
            );
            writer.serialize(&rec)?;
            writer.flush().map_err(|e| Error::io("<csv sink>", e))?;
            records.push(rec);
        }
        Ok(records)
    }
}

/// Convenience wrapper: validate, build, run.
pub fn run_ber_curve<W: Write>(cfg: ExperimentConfig, sink: W) -> Result<Vec<ExperimentRecord>> {
    Campaign::new(cfg)?.run(sink)
}

#[derive(Debug, Clone)]
pub struct ThresholdPrediction {
    pub trajectory: Trajectory,
    /// True when the final extrinsic IC reaches `x_p`.
    pub reachable: bool,
    /// `C·α/(R_p·Ω'(1)) − 1`.
    pub overhead: f64,
    pub rate_lt: f64,
}

/// Runs the IC trajectory of `dist` at the design α and converts the design
/// rate into the overhead at which it meets the channel.
pub fn predict_threshold(
    dist: &OutputDegreeDistribution,
    channel: &ChannelParam,
    transfer: &TransferFunction,
    x_p: PrecodeThreshold,
    alpha: f64,
    precode_rate: f64,
) -> Result<ThresholdPrediction> {
    if !(precode_rate > 0.0 && precode_rate <= 1.0) {
        return Err(Error::domain(format!("precode rate {precode_rate} outside (0, 1]")));
    }
    let ctx = EvolutionContext::new(*channel, alpha, transfer.clone(), dist.clone())?;
    let target = if x_p.get() > 0.0 { Some(x_p) } else { None };
    let trajectory = ctx.run_trajectory(PREDICTION_MAX_ITERS, DEFAULT_TRAJECTORY_TOL, target)?;
    let reachable = trajectory.converged();
    if !reachable {
        let last = trajectory.final_point();
        log::warn!("trajectory stalls at x_u = {:.6} (x_ext = {:.6})", last.x_u, last.x_ext);
    }
    let overhead = channel.x0 * alpha / (precode_rate * dist.mean_degree()) - 1.0;
    Ok(ThresholdPrediction {
        trajectory,
        reachable,
        overhead,
        rate_lt: dist.rate_lt(alpha),
    })
}
