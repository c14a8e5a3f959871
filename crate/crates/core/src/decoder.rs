//! Belief propagation over the combined raptor Tanner graph.
//!
//! Input symbols are variable nodes without channel observations. Dynamic
//! checks are LT output symbols and hold a channel LLR; static checks are the
//! precode parities. Messages live on edges stored check-major, so a variable
//! pass is a scatter of check-to-variable messages into per-variable totals
//! followed by a gather of `total − incoming`.

use crate::codec::{LdpcCode, LtStream};
use crate::error::{Error, Result};

pub const DEFAULT_CLIP: f64 = 30.0;
pub const DEFAULT_JOINT_ITERS: usize = 300;
pub const DEFAULT_TANDEM_LT_ITERS: usize = 300;
pub const DEFAULT_TANDEM_PRECODE_ITERS: usize = 100;

/// Check nodes in compressed row form.
#[derive(Debug, Clone, Default)]
struct CheckSet {
    offsets: Vec<usize>,
    vars: Vec<u32>,
    c2v: Vec<f64>,
    v2c: Vec<f64>,
}

impl CheckSet {
    fn new(offsets: Vec<usize>, vars: Vec<u32>) -> Self {
        let e = vars.len();
        Self {
            offsets,
            vars,
            c2v: vec![0.0; e],
            v2c: vec![0.0; e],
        }
    }

    fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    fn edges(&self, c: usize) -> std::ops::Range<usize> {
        self.offsets[c]..self.offsets[c + 1]
    }

    fn reset(&mut self) {
        self.c2v.fill(0.0);
        self.v2c.fill(0.0);
    }
}

#[derive(Debug, Clone)]
pub struct TannerGraph {
    k: usize,
    dynamic: CheckSet,
    channel: Vec<f64>,
    stat: CheckSet,
    totals: Vec<f64>,
    prior: Vec<f64>,
    clip: f64,
    scratch: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DecodeResult {
    pub decisions: Vec<u8>,
    pub totals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Mean |total LLR| over the input symbols after each iteration.
    pub mean_abs_llr: Vec<f64>,
}

/// Hard decision; an LLR of exactly zero resolves to 0.
#[inline]
pub fn hard(llr: f64) -> u8 {
    (llr < 0.0) as u8
}

fn clip(x: f64, c: f64) -> f64 {
    x.clamp(-c, c)
}

/// Outgoing check messages for `incoming` (tanh rule), with the optional
/// channel LLR entering the product. Results are clipped to `±clip`.
pub fn check_update(incoming: &[f64], channel_llr: Option<f64>, clip_at: f64) -> Vec<f64> {
    let mut out = vec![0.0; incoming.len()];
    let mut scratch = Vec::new();
    check_kernel(incoming, channel_llr, clip_at, &mut out, &mut scratch);
    out
}

/// Forward/backward products so that zero inputs are handled exactly.
fn check_kernel(incoming: &[f64], channel_llr: Option<f64>, clip_at: f64, out: &mut [f64], scratch: &mut Vec<f64>) {
    let d = incoming.len();
    if d == 1 {
        out[0] = clip(channel_llr.unwrap_or(0.0), clip_at);
        return;
    }
    scratch.clear();
    scratch.extend(incoming.iter().map(|&m| (0.5 * m).tanh()));
    let seed = channel_llr.map_or(1.0, |l| (0.5 * l).tanh());
    // out[i] holds the prefix product before i; then multiply by the suffix.
    let mut acc = seed;
    for i in 0..d {
        out[i] = acc;
        acc *= scratch[i];
    }
    let mut suffix = 1.0;
    let mut saturated = false;
    for i in (0..d).rev() {
        out[i] *= suffix;
        saturated |= out[i].abs() > SATURATION;
        suffix *= scratch[i];
    }
    if saturated {
        check_kernel_log(incoming, channel_llr, clip_at, out, scratch);
        return;
    }
    for o in out.iter_mut() {
        *o = clip(2.0 * o.atanh(), clip_at);
    }
}

/// Beyond this |∏ tanh| the atanh of the product loses more than ~1e-10.
const SATURATION: f64 = 1.0 - 1e-6;

/// `ln tanh(|x|/2)`, accurate when the tanh is close to 1.
fn ln_tanh_half(x: f64) -> f64 {
    (-2.0 / (1.0 + x.abs().exp())).ln_1p()
}

/// Same rule as [`check_kernel`] with magnitudes carried as
/// `ln tanh(|m|/2)`, so strong messages keep full precision.
fn check_kernel_log(incoming: &[f64], channel_llr: Option<f64>, clip_at: f64, out: &mut [f64], scratch: &mut Vec<f64>) {
    let d = incoming.len();
    scratch.clear();
    scratch.extend(incoming.iter().map(|&m| ln_tanh_half(m)));
    let negative = |x: f64| x < 0.0;
    let mut sign_all = channel_llr.map_or(false, negative);
    for &m in incoming {
        sign_all ^= negative(m);
    }
    let mut acc = channel_llr.map_or(0.0, ln_tanh_half);
    for i in 0..d {
        out[i] = acc;
        acc += scratch[i];
    }
    let mut suffix = 0.0;
    for i in (0..d).rev() {
        let s = out[i] + suffix;
        suffix += scratch[i];
        // |p| = e^s; 2·atanh|p| = ln((2 − E)/E) with E = 1 − |p|.
        let e = -s.exp_m1();
        let mag = (2.0 - e).ln() - e.ln();
        let neg = sign_all ^ negative(incoming[i]);
        out[i] = clip(if neg { -mag } else { mag }, clip_at);
    }
}

/// Outgoing variable messages `Σ_{e'≠e} m_e'` and the total `Σ m_e`.
pub fn variable_update(incoming: &[f64]) -> (Vec<f64>, f64) {
    let total: f64 = incoming.iter().sum();
    (incoming.iter().map(|&m| total - m).collect(), total)
}

impl TannerGraph {
    /// Builds the graph from explicit adjacency. `dynamic` lists the input
    /// symbols of each received output symbol, `channel` their LLRs.
    pub fn from_parts(k: usize, dynamic: &[Vec<u32>], channel: Vec<f64>, stat: &[Vec<u32>]) -> Result<Self> {
        if dynamic.len() != channel.len() {
            return Err(Error::config("one channel LLR is needed per dynamic check"));
        }
        let csr = |rows: &[Vec<u32>]| -> Result<CheckSet> {
            let mut offsets = vec![0];
            let mut vars = Vec::new();
            for r in rows {
                if r.iter().any(|&v| v as usize >= k) {
                    return Err(Error::config("check references a variable outside the graph"));
                }
                vars.extend_from_slice(r);
                offsets.push(vars.len());
            }
            Ok(CheckSet::new(offsets, vars))
        };
        let dynamic = csr(dynamic)?;
        let stat = csr(stat)?;
        Self::assemble(k, dynamic, channel, stat)
    }

    /// Graph for the first `channel.len()` symbols of `stream`, with the
    /// precode checks when `precode` is given.
    pub fn from_stream(stream: &LtStream, channel: Vec<f64>, precode: Option<&LdpcCode>) -> Result<Self> {
        if channel.len() > stream.len() {
            return Err(Error::config("more channel LLRs than generated LT symbols"));
        }
        let (offsets, neighbors) = stream.csr();
        let offsets = offsets[..=channel.len()].to_vec();
        let vars = neighbors[..*offsets.last().unwrap()].to_vec();
        let dynamic = CheckSet::new(offsets, vars);
        let stat = match precode {
            Some(code) => {
                if code.n != stream.k {
                    return Err(Error::config(format!("precode length {} does not match LT input size {}", code.n, stream.k)));
                }
                let mut offsets = vec![0];
                let mut vars = Vec::new();
                for c in &code.checks {
                    vars.extend_from_slice(c);
                    offsets.push(vars.len());
                }
                CheckSet::new(offsets, vars)
            }
            None => CheckSet::new(vec![0], Vec::new()),
        };
        Self::assemble(stream.k, dynamic, channel, stat)
    }

    fn assemble(k: usize, dynamic: CheckSet, channel: Vec<f64>, stat: CheckSet) -> Result<Self> {
        if channel.iter().any(|l| !l.is_finite()) {
            return Err(Error::domain("channel LLRs must be finite"));
        }
        Ok(Self {
            k,
            dynamic,
            channel,
            stat,
            totals: vec![0.0; k],
            prior: vec![0.0; k],
            clip: DEFAULT_CLIP,
            scratch: Vec::new(),
        })
    }

    pub fn with_clip(mut self, clip: f64) -> Self {
        self.clip = clip;
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_dynamic(&self) -> usize {
        self.dynamic.len()
    }

    pub fn num_static(&self) -> usize {
        self.stat.len()
    }

    fn reset(&mut self) {
        self.dynamic.reset();
        self.stat.reset();
        self.totals.fill(0.0);
        self.prior.fill(0.0);
    }

    fn check_pass(set: &mut CheckSet, channel: Option<&[f64]>, clip_at: f64, scratch: &mut Vec<f64>) {
        for c in 0..set.len() {
            let r = set.edges(c);
            let llr = channel.map(|ch| ch[c]);
            let (v2c, c2v) = (&set.v2c[r.clone()], &mut set.c2v[r]);
            check_kernel(v2c, llr, clip_at, c2v, scratch);
        }
    }

    /// Recomputes totals from the prior and the selected families, then the
    /// variable-to-check messages of those families.
    fn variable_pass(&mut self, use_dynamic: bool, use_static: bool) {
        self.totals.copy_from_slice(&self.prior);
        let sets = [(use_dynamic, &self.dynamic), (use_static, &self.stat)];
        for (on, set) in sets {
            if on {
                for (&v, &m) in set.vars.iter().zip(&set.c2v) {
                    self.totals[v as usize] += m;
                }
            }
        }
        let clip_at = self.clip;
        for (on, set) in [(use_dynamic, &mut self.dynamic), (use_static, &mut self.stat)] {
            if on {
                for ((v2c, &v), &m) in set.v2c.iter_mut().zip(&set.vars).zip(&set.c2v) {
                    *v2c = clip(self.totals[v as usize] - m, clip_at);
                }
            }
        }
    }

    fn mean_abs(&self) -> f64 {
        if self.k == 0 {
            return 0.0;
        }
        self.totals.iter().map(|t| t.abs()).sum::<f64>() / self.k as f64
    }

    pub fn decisions(&self) -> Vec<u8> {
        self.totals.iter().map(|&t| hard(t)).collect()
    }

    /// Parity status of the current totals. A dynamic check is satisfied when
    /// the XOR of its input decisions agrees with the sign of its channel
    /// LLR plus the extrinsic LLR its inputs send it; a static check when the
    /// XOR of its decisions is 0. An input with a total of exactly 0 leaves
    /// the graph unconverged.
    pub fn parities_satisfied(&self, include_dynamic: bool, include_static: bool) -> bool {
        if self.totals.iter().any(|&t| t == 0.0) {
            return false;
        }
        if include_static {
            for c in 0..self.stat.len() {
                let x = self.stat.vars[self.stat.edges(c)].iter().fold(0, |a, &v| a ^ hard(self.totals[v as usize]));
                if x != 0 {
                    return false;
                }
            }
        }
        if include_dynamic {
            for c in 0..self.dynamic.len() {
                let vars = &self.dynamic.vars[self.dynamic.edges(c)];
                let x = vars.iter().fold(0, |a, &v| a ^ hard(self.totals[v as usize]));
                let p: f64 = vars.iter().map(|&v| (0.5 * self.totals[v as usize]).tanh()).product();
                let ext = clip(2.0 * p.atanh(), self.clip);
                if hard(self.channel[c] + ext) != x {
                    return false;
                }
            }
        }
        true
    }

    fn result(&self, iterations: usize, converged: bool, trace: Vec<f64>) -> DecodeResult {
        DecodeResult {
            decisions: self.decisions(),
            totals: self.totals.clone(),
            iterations,
            converged,
            mean_abs_llr: trace,
        }
    }

    /// Joint schedule: every iteration runs a dynamic-check pass, a variable
    /// pass, a static-check pass and another variable pass. Stops early once
    /// all parities hold when `early_stop` is set.
    pub fn decode_joint_with(&mut self, max_iters: usize, early_stop: bool) -> DecodeResult {
        self.reset();
        let mut trace = Vec::with_capacity(max_iters);
        let mut scratch = std::mem::take(&mut self.scratch);
        let mut done = 0;
        let mut converged = false;
        for it in 1..=max_iters {
            Self::check_pass(&mut self.dynamic, Some(&self.channel), self.clip, &mut scratch);
            self.variable_pass(true, true);
            if self.stat.len() > 0 {
                Self::check_pass(&mut self.stat, None, self.clip, &mut scratch);
                self.variable_pass(true, true);
            }
            trace.push(self.mean_abs());
            done = it;
            converged = self.parities_satisfied(true, true);
            if converged && early_stop {
                break;
            }
        }
        self.scratch = scratch;
        self.result(done, converged, trace)
    }

    pub fn decode_joint(&mut self, max_iters: usize) -> DecodeResult {
        self.decode_joint_with(max_iters, true)
    }

    /// Tandem schedule: `lt_iters` iterations on the LT subgraph, then the
    /// input totals are frozen and used as a-priori LLRs for `precode_iters`
    /// iterations on the precode subgraph.
    pub fn decode_tandem_with(&mut self, lt_iters: usize, precode_iters: usize, early_stop: bool) -> DecodeResult {
        self.reset();
        let mut trace = Vec::with_capacity(lt_iters + precode_iters);
        let mut scratch = std::mem::take(&mut self.scratch);
        let mut done = 0;
        for it in 1..=lt_iters {
            Self::check_pass(&mut self.dynamic, Some(&self.channel), self.clip, &mut scratch);
            self.variable_pass(true, false);
            trace.push(self.mean_abs());
            done = it;
            if early_stop && self.parities_satisfied(true, true) {
                self.scratch = scratch;
                return self.result(done, true, trace);
            }
        }
        let frozen = self.totals.clone();
        let dynamic_ok = self.stat.len() == 0 && self.parities_satisfied(true, false);
        if self.stat.len() == 0 {
            self.scratch = scratch;
            return self.result(done, dynamic_ok, trace);
        }
        self.prior.copy_from_slice(&frozen);
        self.variable_pass(false, true);
        for it in 1..=precode_iters {
            Self::check_pass(&mut self.stat, None, self.clip, &mut scratch);
            self.variable_pass(false, true);
            trace.push(self.mean_abs());
            done = lt_iters + it;
            if early_stop && self.parities_satisfied(false, true) && !self.totals.iter().any(|&t| t == 0.0) {
                break;
            }
        }
        self.scratch = scratch;
        let converged = self.parities_satisfied(false, true);
        self.result(done, converged, trace)
    }

    pub fn decode_tandem(&mut self, lt_iters: usize, precode_iters: usize) -> DecodeResult {
        self.decode_tandem_with(lt_iters, precode_iters, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_one_check_forwards_channel() {
        assert_eq!(check_update(&[5.0], Some(1.7), 30.0), vec![1.7]);
    }

    #[test]
    fn zero_annihilates_others() {
        let out = check_update(&[0.0, 2.0, -1.0], None, 30.0);
        assert_eq!(out[1], 0.0);
        assert_eq!(out[2], 0.0);
        assert!(out[0] < 0.0);
    }

    #[test]
    fn variable_arithmetic() {
        let (out, total) = variable_update(&[1.0, -2.0, 0.5]);
        assert_eq!(out, vec![-1.5, 1.5, -1.0]);
        assert_eq!(total, -0.5);
        assert_eq!(variable_update(&[3.0]).0, vec![0.0]);
    }

    #[test]
    fn clipping() {
        let out = check_update(&[40.0, 40.0], Some(40.0), 30.0);
        assert!(out.iter().all(|&m| m == 30.0));
    }

    #[test]
    fn no_symbols_no_information() {
        let mut g = TannerGraph::from_parts(4, &[], vec![], &[]).unwrap();
        let r = g.decode_joint(10);
        assert_eq!(r.decisions, vec![0; 4]);
        assert!(!r.converged);
    }

    #[test]
    fn tandem_without_precode_matches_joint() {
        let dynamic = vec![vec![0], vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]];
        let llr = vec![1.2, -0.4, 2.0, 0.7, -0.3];
        let mut g = TannerGraph::from_parts(4, &dynamic, llr, &[]).unwrap();
        let a = g.decode_joint_with(20, false);
        let b = g.decode_tandem_with(20, 7, false);
        assert_eq!(a.totals, b.totals);
        assert_eq!(a.decisions, b.decisions);
    }
}
