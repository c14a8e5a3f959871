//! Information-content evolution of the LT part of a raptor code, including
//! the extrinsic information returned by the precode.
//!
//! One joint iteration maps the IC `x_u` on dynamic-check→input edges to
//!
//! ```text
//! x_ext = J(α·J⁻¹(x_u))
//! x_v   = Σ_i ι_i J((i−1)·J⁻¹(x_u) + J⁻¹(T(x_ext)))
//! F(x_u) = 1 − Σ_j ω_j J((j−1)·J⁻¹(1 − x_v) + f0)
//! ```
//!
//! `x_v` does not depend on ω, so `F` is affine in the edge weights ω_j. The
//! LP in [`crate::design`] relies on that split, exposed here as
//! [`EvolutionKernel::input_ic`] and [`EvolutionKernel::check_coeff`].

use crate::degree::{InputEnsemble, OutputDegreeDistribution, DEFAULT_TAIL_TOL};
use crate::error::{Error, Result};
use crate::gaussian_ic::{j, j_inv, ChannelParam};
use crate::transfer::{PrecodeThreshold, TransferFunction};

/// Everything in one IC iteration except the output distribution.
#[derive(Debug, Clone)]
pub struct EvolutionKernel {
    pub channel: ChannelParam,
    pub input: InputEnsemble,
    pub transfer: TransferFunction,
}

impl EvolutionKernel {
    pub fn new(channel: ChannelParam, alpha: f64, transfer: TransferFunction) -> Result<Self> {
        Ok(Self {
            channel,
            input: InputEnsemble::poisson(alpha, DEFAULT_TAIL_TOL)?,
            transfer,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.input.alpha()
    }

    /// `J(α·J⁻¹(x_u))`.
    pub fn extrinsic(&self, x_u: f64) -> f64 {
        extrinsic_ic(self.alpha(), x_u)
    }

    /// The ω-independent inner value `x_v` fed by the argument `x_u`.
    pub fn input_ic(&self, x_u: f64) -> f64 {
        let mu_u = j_inv(x_u);
        let prior = j_inv(self.transfer.eval(self.extrinsic(x_u)));
        self.input
            .edge_coeffs()
            .iter()
            .enumerate()
            .map(|(i, &w)| w * j(i as f64 * mu_u + prior))
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    /// `J((degree−1)·J⁻¹(1 − x_v) + f0)`, the weight of ω_degree in `1 − F`.
    pub fn check_coeff(&self, x_v: f64, degree: u32) -> f64 {
        check_coeff_with(self.channel.f0, check_mean(x_v), degree)
    }
}

/// `J⁻¹(1 − x_v)`, infinite when no input message carries information.
fn check_mean(x_v: f64) -> f64 {
    if x_v <= 0.0 {
        f64::INFINITY
    } else {
        j_inv(1.0 - x_v)
    }
}

#[inline]
fn check_coeff_with(f0: f64, mu_v: f64, degree: u32) -> f64 {
    if degree == 1 {
        return j(f0);
    }
    if mu_v.is_infinite() {
        return 1.0;
    }
    j((degree - 1) as f64 * mu_v + f0)
}

/// `J(α·J⁻¹(x_u))`, the IC the LT part passes to the precode.
pub fn extrinsic_ic(alpha: f64, x_u: f64) -> f64 {
    j(alpha * j_inv(x_u))
}

#[derive(Debug, Clone)]
pub struct EvolutionContext {
    pub kernel: EvolutionKernel,
    pub dist: OutputDegreeDistribution,
}

/// One recorded iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub x_u: f64,
    pub x_v: f64,
    pub x_ext: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    /// The extrinsic IC at the fixed point clears the precode threshold.
    Converged { fixed_point: f64 },
    /// Iteration stopped at `fixed_point` with the extrinsic IC still at or
    /// below `target`.
    Stalled { fixed_point: f64, target: f64 },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub verdict: Verdict,
}

impl Trajectory {
    pub fn final_point(&self) -> TrajectoryPoint {
        *self.points.last().expect("trajectory has at least one point")
    }

    pub fn converged(&self) -> bool {
        matches!(self.verdict, Verdict::Converged { .. })
    }
}

pub const DEFAULT_TRAJECTORY_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 5000;

impl EvolutionContext {
    pub fn new(
        channel: ChannelParam,
        alpha: f64,
        transfer: TransferFunction,
        dist: OutputDegreeDistribution,
    ) -> Result<Self> {
        Ok(Self {
            kernel: EvolutionKernel::new(channel, alpha, transfer)?,
            dist,
        })
    }

    pub fn channel(&self) -> &ChannelParam {
        &self.kernel.channel
    }

    /// One joint iteration `F(x_u)` and the intermediate `x_v`.
    pub fn step(&self, x_u: f64) -> (f64, f64) {
        let x_v = self.kernel.input_ic(x_u);
        let mu_v = check_mean(x_v);
        let f0 = self.kernel.channel.f0;
        let unresolved: f64 = self
            .dist
            .edge_weights()
            .iter()
            .map(|(&d, &w)| w * check_coeff_with(f0, mu_v, d))
            .sum();
        ((1.0 - unresolved).clamp(0.0, 1.0), x_v)
    }

    pub fn evolve_f(&self, x_u: f64) -> f64 {
        self.step(x_u).0
    }

    /// Iterates `F` from zero until the step falls below `tol` or `max_iters`
    /// iterations have run. Success means the final extrinsic IC reaches the
    /// precode threshold, or is nonzero when no threshold is given.
    pub fn run_trajectory(
        &self,
        max_iters: usize,
        tol: f64,
        target: Option<PrecodeThreshold>,
    ) -> Result<Trajectory> {
        if max_iters == 0 {
            return Err(Error::config("trajectory needs at least one iteration"));
        }
        let mut x = 0.0;
        let mut points = Vec::new();
        for iteration in 1..=max_iters {
            let (next, x_v) = self.step(x);
            points.push(TrajectoryPoint {
                iteration,
                x_u: next,
                x_v,
                x_ext: self.kernel.extrinsic(next),
            });
            let delta = (next - x).abs();
            x = next;
            if delta < tol {
                break;
            }
        }
        let last = *points.last().unwrap();
        // Without a precode threshold, any progress off zero counts.
        let cleared = match target {
            Some(t) => last.x_ext >= t.get(),
            None => last.x_ext > 0.0,
        };
        let target = target.map_or(0.0, PrecodeThreshold::get);
        let verdict = if cleared {
            Verdict::Converged { fixed_point: last.x_u }
        } else {
            Verdict::Stalled {
                fixed_point: last.x_u,
                target,
            }
        };
        Ok(Trajectory { points, verdict })
    }

    /// Exact slope bound term `ω2·(α−1)·e^{−f0/4}` of the small-IC analysis.
    pub fn stability_product(&self) -> f64 {
        self.dist.edge_weight(2) * (self.kernel.alpha() - 1.0) * (-self.kernel.channel.f0 / 4.0).exp()
    }
}

/// Smallest mean input degree for which the LT part can lift the extrinsic
/// IC above the precode threshold: `σ²·J⁻¹(x_p)/2`.
pub fn alpha_min(channel: &ChannelParam, x_p: PrecodeThreshold) -> Result<f64> {
    if x_p.get() >= 1.0 {
        return Err(Error::domain("alpha_min is unbounded for a precode threshold of 1"));
    }
    Ok(channel.sigma2 * j_inv(x_p.get()) / 2.0)
}

/// Largest capacity gap δ with `J(α·J⁻¹(x0 − δ)) ≥ x_p`, i.e.
/// `x0 − J(J⁻¹(x_p)/α)`.
pub fn delta_max(alpha: f64, channel: &ChannelParam, x_p: PrecodeThreshold) -> Result<f64> {
    let floor = alpha_min(channel, x_p)?;
    if alpha < floor * (1.0 - 1e-12) {
        return Err(Error::domain(format!("alpha {alpha} below alpha_min {floor}")));
    }
    Ok((channel.x0 - j(j_inv(x_p.get()) / alpha)).max(0.0))
}

/// Lower bound on ω2 from requiring `F'(0) > 1`: `1/((α−1)·e^{−f0/4})`.
pub fn stability_floor_omega2(alpha: f64, channel: &ChannelParam) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::domain(format!("stability bound needs alpha > 1, got {alpha}")));
    }
    Ok(1.0 / ((alpha - 1.0) * (-channel.f0 / 4.0).exp()))
}
