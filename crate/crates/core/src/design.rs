//! Output degree distribution design by linear programming.
//!
//! For a fixed α the IC map is affine in the edge weights ω, so the
//! convergence condition `F(x) > x` on a grid over `[0, x₀−δ]` becomes a set
//! of linear rows. Minimizing `Σ ω_j/j` maximizes the LT rate `Ω'(1)/α`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::degree::{DegreeMap, OutputDegreeDistribution};
use crate::error::{Error, Result};
use crate::evolution::{alpha_min, delta_max, stability_floor_omega2, EvolutionContext, EvolutionKernel};
use crate::gaussian_ic::ChannelParam;
use crate::simplex::{self, LinearProgram, LpOutcome, Relation};
use crate::transfer::{PrecodeThreshold, TransferFunction};

pub const DEFAULT_GRID_POINTS: usize = 200;
pub const DEFAULT_STRICT_MARGIN: f64 = 1e-6;
pub const DEFAULT_EPSILON: f64 = 0.005;
pub const DEFAULT_MAX_DEGREE: u32 = 100;
/// Ratio between the verification grid and the LP grid.
pub const VERIFY_REFINEMENT: usize = 4;
const MAX_CUT_ROUNDS: usize = 8;
const MIN_GRID_POINTS: usize = 50;

#[derive(Debug, Clone)]
pub struct DesignConfig {
    pub channel: ChannelParam,
    pub transfer: TransferFunction,
    pub x_p: PrecodeThreshold,
    pub alpha_grid: Vec<f64>,
    pub delta: f64,
    pub epsilon_start: f64,
    pub degree_support: Vec<u32>,
    pub grid_points: usize,
    pub strict_margin: f64,
}

impl DesignConfig {
    /// Defaults for everything but the channel, transfer and α grid.
    pub fn new(channel: ChannelParam, transfer: TransferFunction, x_p: PrecodeThreshold, alpha_grid: Vec<f64>, delta: f64) -> Self {
        Self {
            channel,
            transfer,
            x_p,
            alpha_grid,
            delta,
            epsilon_start: DEFAULT_EPSILON,
            degree_support: (1..=DEFAULT_MAX_DEGREE).collect(),
            grid_points: DEFAULT_GRID_POINTS,
            strict_margin: DEFAULT_STRICT_MARGIN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha_grid.is_empty() {
            return Err(Error::config("alpha grid is empty"));
        }
        if self.alpha_grid.windows(2).any(|w| w[0] >= w[1]) || self.alpha_grid.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::config("alpha grid must be positive and strictly ascending"));
        }
        if !(self.delta > 0.0) {
            return Err(Error::config(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.epsilon_start > 0.0) {
            return Err(Error::config(format!("epsilon must be positive, got {}", self.epsilon_start)));
        }
        if !(self.strict_margin >= 0.0) {
            return Err(Error::config("strict margin must be nonnegative"));
        }
        if self.grid_points < MIN_GRID_POINTS {
            return Err(Error::config(format!("grid_points must be at least {MIN_GRID_POINTS}")));
        }
        if !self.degree_support.contains(&1) || !self.degree_support.contains(&2) {
            return Err(Error::config("degree support must contain 1 and 2"));
        }
        if self.degree_support.contains(&0) {
            return Err(Error::config("degree 0 is not a valid output degree"));
        }
        for &alpha in &self.alpha_grid {
            self.check_alpha(alpha)?;
        }
        Ok(())
    }

    fn check_alpha(&self, alpha: f64) -> Result<()> {
        let floor = alpha_min(&self.channel, self.x_p)?;
        if alpha < floor {
            return Err(Error::config(format!("alpha {alpha} below alpha_min {floor:.6}")));
        }
        let dmax = delta_max(alpha, &self.channel, self.x_p)?;
        if self.delta > dmax {
            return Err(Error::config(format!("delta {} exceeds delta_max {dmax:.6} at alpha {alpha}", self.delta)));
        }
        Ok(())
    }

    /// Sorted, deduplicated support.
    fn support(&self) -> Vec<u32> {
        let mut s = self.degree_support.clone();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Uniform grid on `[0, x₀−δ]` with both endpoints.
    pub fn grid(&self, points: usize) -> Vec<f64> {
        let top = (self.channel.x0 - self.delta).max(0.0);
        let n = points.max(2);
        (0..n).map(|t| top * t as f64 / (n - 1) as f64).collect()
    }
}

/// Row families of the design LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Normalization,
    Progress { grid_index: usize },
    Start,
    Stability,
}

/// The assembled LP plus the bookkeeping needed to read slacks back.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub lp: LinearProgram,
    pub degrees: Vec<u32>,
    pub grid: Vec<f64>,
    pub kinds: Vec<RowKind>,
    pub alpha: f64,
}

/// `a_j(x)` for every degree in `degrees`, where `1 − F(x) = Σ ω_j a_j(x)`.
pub fn progress_coeffs(kernel: &EvolutionKernel, x: f64, degrees: &[u32]) -> Vec<f64> {
    let x_v = kernel.input_ic(x);
    degrees.iter().map(|&d| kernel.check_coeff(x_v, d)).collect()
}

fn progress_row(kernel: &EvolutionKernel, x: f64, degrees: &[u32], margin: f64) -> (Vec<f64>, f64) {
    (progress_coeffs(kernel, x, degrees), 1.0 - x - margin)
}

pub fn build_lp(cfg: &DesignConfig, alpha: f64) -> Result<LpProblem> {
    let degrees = cfg.support();
    if degrees.is_empty() {
        return Err(Error::config("degree support is empty"));
    }
    if degrees[0] == 0 {
        return Err(Error::config("degree 0 is not a valid output degree"));
    }
    let kernel = EvolutionKernel::new(cfg.channel, alpha, cfg.transfer.clone())?;
    let cost = degrees.iter().map(|&d| 1.0 / d as f64).collect();
    let mut lp = LinearProgram::new(cost);
    let mut kinds = Vec::new();

    lp.add(vec![1.0; degrees.len()], Relation::Eq, 1.0);
    kinds.push(RowKind::Normalization);

    let grid = cfg.grid(cfg.grid_points);
    let rows: Vec<_> = grid.par_iter().map(|&x| progress_row(&kernel, x, &degrees, cfg.strict_margin)).collect();
    for (t, (coeffs, rhs)) in rows.into_iter().enumerate() {
        lp.add(coeffs, Relation::Le, rhs);
        kinds.push(RowKind::Progress { grid_index: t });
    }

    let unit = |deg: u32, value: f64| degrees.iter().map(|&d| if d == deg { value } else { 0.0 }).collect::<Vec<_>>();
    lp.add(unit(1, cfg.channel.x0), Relation::Ge, cfg.epsilon_start);
    kinds.push(RowKind::Start);
    let slope = (alpha - 1.0) * (-cfg.channel.f0 / 4.0).exp();
    lp.add(unit(2, slope), Relation::Ge, 1.0 + cfg.strict_margin);
    kinds.push(RowKind::Stability);

    Ok(LpProblem {
        lp,
        degrees,
        grid,
        kinds,
        alpha,
    })
}

pub fn solve_lp(problem: &LpProblem) -> Result<LpOutcome> {
    simplex::solve(&problem.lp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

/// Slack of every constraint family at the LP solution (nonnegative when
/// satisfied).
#[derive(Debug, Clone)]
pub struct ConstraintReport {
    pub normalization: f64,
    /// `(x_t, 1 − x_t − margin − Σ ω_j a_j(x_t))` per LP grid point.
    pub progress: Vec<(f64, f64)>,
    pub start: f64,
    pub stability: f64,
}

impl ConstraintReport {
    pub fn min_progress(&self) -> f64 {
        self.progress.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }
}

/// Independent check of a distribution against the design conditions using
/// the full IC map.
#[derive(Debug, Clone)]
pub struct Verification {
    pub grid_points: usize,
    /// Smallest `F(x) − x` over the verification grid and where it occurs.
    pub min_gap: f64,
    pub min_gap_at: f64,
    pub start_value: f64,
    pub omega2: f64,
    pub omega2_floor: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct DesignResult {
    pub alpha: f64,
    pub lp_status: LpStatus,
    pub distribution: Option<OutputDegreeDistribution>,
    pub rate_lt: f64,
    pub objective: f64,
    pub duality_gap: f64,
    pub constraint_report: Option<ConstraintReport>,
    pub verification: Option<Verification>,
    /// Cutting-plane rounds that added verification points to the LP.
    pub refinements: usize,
    pub grid_rows: usize,
}

impl DesignResult {
    fn infeasible(alpha: f64, grid_rows: usize, refinements: usize) -> Self {
        Self {
            alpha,
            lp_status: LpStatus::Infeasible,
            distribution: None,
            rate_lt: 0.0,
            objective: f64::NAN,
            duality_gap: f64::NAN,
            constraint_report: None,
            verification: None,
            refinements,
            grid_rows,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.lp_status == LpStatus::Optimal
    }

    /// Optimal and independently verified.
    pub fn is_verified(&self) -> bool {
        self.is_optimal() && self.verification.as_ref().is_some_and(|v| v.passed)
    }

    /// True for an optimal LP solution that failed verification.
    pub fn flagged(&self) -> bool {
        self.is_optimal() && !self.is_verified()
    }

    pub fn report_text(&self, cfg: &DesignConfig) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sigma = {:.6}", cfg.channel.sigma());
        let _ = writeln!(s, "capacity = {:.9}", cfg.channel.x0);
        let _ = writeln!(s, "x_p = {:.9}", cfg.x_p.get());
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "delta = {}", cfg.delta);
        let _ = writeln!(s, "epsilon = {}", cfg.epsilon_start);
        let _ = writeln!(s, "grid_points = {}", cfg.grid_points);
        let _ = writeln!(s, "strict_margin = {:e}", cfg.strict_margin);
        let status = match self.lp_status {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
        };
        let _ = writeln!(s, "lp_status = {status}");
        if !self.is_optimal() {
            return s;
        }
        let _ = writeln!(s, "rate_lt = {:.9}", self.rate_lt);
        let _ = writeln!(s, "objective = {:.12}", self.objective);
        let _ = writeln!(s, "duality_gap = {:e}", self.duality_gap);
        let _ = writeln!(s, "cut_rounds = {}", self.refinements);
        let _ = writeln!(s, "lp_grid_rows = {}", self.grid_rows);
        if let Some(d) = &self.distribution {
            let _ = writeln!(s, "mean_degree = {:.9}", d.mean_degree());
        }
        if let Some(r) = &self.constraint_report {
            let _ = writeln!(s, "slack.normalization = {:e}", r.normalization);
            let _ = writeln!(s, "slack.progress_min = {:e}", r.min_progress());
            let _ = writeln!(s, "slack.start = {:e}", r.start);
            let _ = writeln!(s, "slack.stability = {:e}", r.stability);
        }
        if let Some(v) = &self.verification {
            let _ = writeln!(s, "verify.grid_points = {}", v.grid_points);
            let _ = writeln!(s, "verify.min_gap = {:e}", v.min_gap);
            let _ = writeln!(s, "verify.min_gap_at = {:.9}", v.min_gap_at);
            let _ = writeln!(s, "verify.start_value = {:.9}", v.start_value);
            let _ = writeln!(s, "verify.omega2 = {:.9}", v.omega2);
            let _ = writeln!(s, "verify.omega2_floor = {:.9}", v.omega2_floor);
            let _ = writeln!(s, "verify.passed = {}", v.passed);
        }
        if let Some(r) = &self.constraint_report {
            let _ = writeln!(s, "# x_t progress_slack");
            for (x, slack) in &r.progress {
                let _ = writeln!(s, "{x:.9} {slack:e}");
            }
        }
        s
    }
}

/// Checks `F(x) > x` on a grid `VERIFY_REFINEMENT`× finer than the LP grid,
/// `F(0) ≥ ε`, and ω₂ above the stability floor.
pub fn verify_distribution(cfg: &DesignConfig, alpha: f64, dist: &OutputDegreeDistribution) -> Result<Verification> {
    let ctx = EvolutionContext::new(cfg.channel, alpha, cfg.transfer.clone(), dist.clone())?;
    let points = VERIFY_REFINEMENT * (cfg.grid_points - 1) + 1;
    let grid = cfg.grid(points);
    let gaps: Vec<f64> = grid.par_iter().map(|&x| ctx.evolve_f(x) - x).collect();
    let (at, min_gap) = gaps
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &g)| if g < acc.1 { (i, g) } else { acc });
    let start_value = ctx.evolve_f(0.0);
    let omega2 = dist.edge_weight(2);
    let omega2_floor = stability_floor_omega2(alpha, &cfg.channel)?;
    // Allow round-off from renormalizing the LP solution.
    let tol = 1e-12;
    let passed = min_gap > 0.0 && start_value >= cfg.epsilon_start - tol && omega2 > omega2_floor * (1.0 - tol);
    Ok(Verification {
        grid_points: points,
        min_gap,
        min_gap_at: grid[at],
        start_value,
        omega2,
        omega2_floor,
        passed,
    })
}

fn distribution_from(degrees: &[u32], x: &[f64]) -> Result<OutputDegreeDistribution> {
    let edge: DegreeMap = degrees.iter().zip(x).filter(|(_, &w)| w > 1e-14).map(|(&d, &w)| (d, w)).collect();
    OutputDegreeDistribution::from_edge_weights(edge)
}

/// Solves the design LP at `alpha` and verifies the result.
///
/// Verification points where `F(x) − x` falls below the strict margin are
/// added to the LP as extra rows and the LP is re-solved, for at most a few
/// rounds. A result that still fails verification is returned flagged.
pub fn optimize_distribution(cfg: &DesignConfig, alpha: f64) -> Result<DesignResult> {
    let mut problem = build_lp(cfg, alpha)?;
    let kernel = EvolutionKernel::new(cfg.channel, alpha, cfg.transfer.clone())?;
    let fine = cfg.grid(VERIFY_REFINEMENT * (cfg.grid_points - 1) + 1);
    let mut rounds = 0;
    loop {
        let sol = match solve_lp(&problem)? {
            LpOutcome::Optimal(sol) => sol,
            LpOutcome::Infeasible(_) => return Ok(DesignResult::infeasible(alpha, problem.grid.len(), rounds)),
            LpOutcome::Unbounded => return Err(Error::Solver("design LP reported unbounded".into())),
        };
        let dist = distribution_from(&problem.degrees, &sol.x)?;
        let verification = verify_distribution(cfg, alpha, &dist)?;
        if !verification.passed && rounds < MAX_CUT_ROUNDS {
            let ctx = EvolutionContext {
                kernel: kernel.clone(),
                dist: dist.clone(),
            };
            let cuts: Vec<f64> = fine
                .par_iter()
                .copied()
                .filter(|&x| ctx.evolve_f(x) - x < cfg.strict_margin)
                .collect();
            let new_cuts: Vec<f64> = cuts.into_iter().filter(|x| !problem.grid.contains(x)).collect();
            if !new_cuts.is_empty() {
                log::debug!("alpha {alpha}: adding {} cut rows", new_cuts.len());
                for x in new_cuts {
                    let (coeffs, rhs) = progress_row(&kernel, x, &problem.degrees, cfg.strict_margin);
                    problem.lp.add(coeffs, Relation::Le, rhs);
                    problem.kinds.push(RowKind::Progress {
                        grid_index: problem.grid.len(),
                    });
                    problem.grid.push(x);
                }
                rounds += 1;
                continue;
            }
        }
        let report = constraint_report(&problem, &sol.x, cfg);
        return Ok(DesignResult {
            alpha,
            lp_status: LpStatus::Optimal,
            rate_lt: dist.rate_lt(alpha),
            distribution: Some(dist),
            objective: sol.objective,
            duality_gap: sol.duality_gap,
            constraint_report: Some(report),
            verification: Some(verification),
            refinements: rounds,
            grid_rows: problem.grid.len(),
        });
    }
}

fn constraint_report(problem: &LpProblem, x: &[f64], cfg: &DesignConfig) -> ConstraintReport {
    let act = problem.lp.activities(x);
    let mut report = ConstraintReport {
        normalization: 0.0,
        progress: Vec::with_capacity(problem.grid.len()),
        start: 0.0,
        stability: 0.0,
    };
    for ((row, kind), a) in problem.lp.rows.iter().zip(&problem.kinds).zip(act) {
        match kind {
            RowKind::Normalization => report.normalization = -(a - row.rhs).abs(),
            RowKind::Progress { grid_index } => report.progress.push((problem.grid[*grid_index], row.rhs - a)),
            RowKind::Start => report.start = a - row.rhs,
            RowKind::Stability => report.stability = a - row.rhs,
        }
    }
    report.progress.sort_by(|a, b| a.0.total_cmp(&b.0));
    debug_assert!(report.progress.len() >= cfg.grid_points);
    report
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    /// Highest-rate verified result, if any α was feasible.
    pub best: Option<DesignResult>,
    pub results: Vec<DesignResult>,
}

impl SweepReport {
    /// `(α, rate_lt)` for every grid point; `None` where the LP was
    /// infeasible or the result failed verification.
    pub fn profile(&self) -> Vec<(f64, Option<f64>)> {
        self.results.iter().map(|r| (r.alpha, r.is_verified().then_some(r.rate_lt))).collect()
    }
}

/// Optimizes at every α of the grid and keeps the best verified rate.
pub fn sweep_alpha(cfg: &DesignConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let results = cfg
        .alpha_grid
        .par_iter()
        .map(|&alpha| optimize_distribution(cfg, alpha))
        .collect::<Result<Vec<_>>>()?;
    let best = results
        .iter()
        .filter(|r| r.is_verified())
        .max_by(|a, b| a.rate_lt.total_cmp(&b.rate_lt))
        .cloned();
    if best.is_none() {
        log::warn!("no feasible verified design on alpha grid {:?}", cfg.alpha_grid);
    }
    Ok(SweepReport { best, results })
}
