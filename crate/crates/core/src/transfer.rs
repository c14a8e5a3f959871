//! Extrinsic IC transfer functions of the precode.
//!
//! A transfer function maps the a-priori IC the LT part delivers to the
//! precode onto the extrinsic IC the precode hands back. Three kinds exist:
//! the analytic curve of an LDPC ensemble (one check stage feeding the
//! variable stage), a curve tabulated from a file, and the null transfer that
//! turns joint decoding back into tandem decoding.

use std::fmt::Write as _;
use std::path::Path;

use crate::degree::LdpcEnsemble;
use crate::error::{Error, Result};
use crate::gaussian_ic::{j, j_inv};
use crate::interp::MonotoneCubic;

#[derive(Debug, Clone)]
pub enum TransferFunction {
    /// No information flows back from the precode.
    Null,
    AnalyticLdpc(LdpcEnsemble),
    Tabulated(TabulatedTransfer),
}

#[derive(Debug, Clone)]
pub struct TabulatedTransfer {
    curve: MonotoneCubic,
}

impl TabulatedTransfer {
    /// Builds from sorted samples. The curve must start at `x = 0`; the
    /// endpoint `(1, 1)` is appended when missing.
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.first().map(|p| p.0) != Some(0.0) {
            return Err(Error::config("tabulated transfer must start at x = 0"));
        }
        match points.last() {
            Some(&(x, _)) if x < 1.0 => points.push((1.0, 1.0)),
            Some(&(_, t)) if t != 1.0 => {
                return Err(Error::config("tabulated transfer must satisfy T(1) = 1"));
            }
            _ => {}
        }
        let (xs, ts) = points.into_iter().unzip();
        Ok(Self {
            curve: MonotoneCubic::pchip(xs, ts)?,
        })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.curve.knots()
    }
}

impl TransferFunction {
    pub fn regular_ldpc(var_degree: u32, check_degree: u32) -> Result<Self> {
        Ok(Self::AnalyticLdpc(LdpcEnsemble::regular(var_degree, check_degree)?))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Self::Null)
    }

    /// Evaluates `T(x)` for `x` in `[0, 1]` (inputs are clamped).
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            Self::Null => 0.0,
            Self::AnalyticLdpc(ens) => ldpc_transfer(ens, x),
            Self::Tabulated(tab) => tab.curve.eval(x).clamp(0.0, 1.0),
        }
    }

    pub fn eval_checked(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::domain(format!("transfer input {x} outside [0, 1]")));
        }
        Ok(self.eval(x))
    }

    /// Decoding threshold of the precode; only defined for the analytic kind.
    pub fn threshold(&self, tol: f64) -> Result<PrecodeThreshold> {
        match self {
            Self::AnalyticLdpc(ens) => threshold_xp(ens, tol),
            _ => Err(Error::config("precode threshold needs an analytic LDPC transfer")),
        }
    }

    /// Reads a two-column `x T` table. A comment line `# kind: null` marks a
    /// null transfer, whose values must all be zero.
    pub fn load_tabulated(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tabulated(&text, path)
    }

    pub fn parse_tabulated(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut marked_null = false;
        let mut points: Vec<(f64, f64)> = Vec::new();
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if let Some(comment) = trimmed.strip_prefix('#') {
                let directive: String = comment.chars().filter(|c| !c.is_whitespace()).collect();
                if directive.eq_ignore_ascii_case("kind:null") {
                    marked_null = true;
                }
                continue;
            }
            let content = trimmed.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            let [xs, ts] = fields[..] else {
                return Err(err(line, "expected two columns \"x T\"".into()));
            };
            let x: f64 = xs.parse().map_err(|_| err(line, format!("invalid x {xs:?}")))?;
            let t: f64 = ts.parse().map_err(|_| err(line, format!("invalid T {ts:?}")))?;
            if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&t) {
                return Err(err(line, format!("values ({x}, {t}) outside [0, 1]")));
            }
            if let Some(&(px, pt)) = points.last() {
                if x <= px {
                    return Err(err(line, format!("x column not ascending at {x}")));
                }
                if t < pt {
                    return Err(err(line, format!("T decreases at x = {x}")));
                }
            }
            points.push((x, t));
            last_line = line;
        }
        if points.is_empty() {
            return Err(err(0, "no data rows".into()));
        }
        if marked_null {
            if points.iter().any(|&(_, t)| t != 0.0) {
                return Err(err(last_line, "null transfer table has nonzero values".into()));
            }
            return Ok(Self::Null);
        }
        if points[0].0 != 0.0 {
            return Err(err(1, "table must start at x = 0".into()));
        }
        if let Some(&(x, t)) = points.last() {
            if x == 1.0 && t != 1.0 {
                return Err(err(
                    last_line,
                    format!("T(1) = {t}; a transfer table must end at T(1) = 1 unless marked `# kind: null`"),
                ));
            }
        }
        TabulatedTransfer::new(points).map(Self::Tabulated)
    }

    /// Samples the curve on `points` equally spaced inputs in `[0, 1]`.
    pub fn to_table_text(&self, points: usize) -> String {
        let mut out = String::from("# x T(x)\n");
        if self.is_null() {
            out.push_str("# kind: null\n");
        }
        // Abscissae crowd toward x = 1, where LDPC curves rise steeply.
        let n = points.max(2) - 1;
        for i in 0..=n {
            let u = 1.0 - i as f64 / n as f64;
            let x = 1.0 - u * u;
            writeln!(out, "{x} {}", self.eval(x)).unwrap();
        }
        out
    }
}

/// `T(x) = Σ λ_i J(i·J⁻¹(1 − Σ ρ_j J((j−1)·J⁻¹(1 − x))))`.
fn ldpc_transfer(ens: &LdpcEnsemble, x: f64) -> f64 {
    if x >= 1.0 {
        return 1.0;
    }
    let mu_in = j_inv(1.0 - x);
    let check: f64 = 1.0
        - ens
            .rho()
            .iter()
            .map(|(&d, &w)| w * j((d - 1) as f64 * mu_in))
            .sum::<f64>();
    let mu_check = j_inv(check.clamp(0.0, 1.0));
    ens.lambda()
        .iter()
        .map(|(&d, &w)| w * j(d as f64 * mu_check))
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// A-priori IC above which the precode decodes on its own.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PrecodeThreshold(f64);

impl PrecodeThreshold {
    pub const NONE: PrecodeThreshold = PrecodeThreshold(0.0);

    pub fn new(x_p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x_p) {
            return Err(Error::domain(format!("precode threshold {x_p} outside [0, 1]")));
        }
        Ok(Self(x_p))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

const DE_MAX_ITERS: usize = 2000;
const DE_SUCCESS: f64 = 1.0 - 1e-6;

/// Runs LDPC IC density evolution with a constant a-priori IC at every
/// variable node and no channel; true when the variable-to-check IC reaches
/// `1 - 1e-6` within 2000 iterations.
pub fn ldpc_decodes_from(ens: &LdpcEnsemble, a_priori: f64) -> bool {
    let mu_a = j_inv(a_priori);
    let mut x_cv = 0.0_f64;
    let mut prev = -1.0_f64;
    for _ in 0..DE_MAX_ITERS {
        let mu_c = j_inv(x_cv);
        let x_vc: f64 = ens
            .lambda()
            .iter()
            .map(|(&d, &w)| w * j((d - 1) as f64 * mu_c + mu_a))
            .sum();
        if x_vc >= DE_SUCCESS {
            return true;
        }
        if (x_vc - prev).abs() < 1e-15 {
            return false;
        }
        prev = x_vc;
        let mu_v = j_inv(1.0 - x_vc);
        x_cv = 1.0
            - ens
                .rho()
                .iter()
                .map(|(&d, &w)| w * j((d - 1) as f64 * mu_v))
                .sum::<f64>();
    }
    false
}

/// Smallest a-priori IC (to within `tol`) from which the ensemble's density
/// evolution succeeds; 1 when it never does.
pub fn threshold_xp(ens: &LdpcEnsemble, tol: f64) -> Result<PrecodeThreshold> {
    if !(tol > 0.0 && tol < 1e-2) {
        return Err(Error::domain(format!("threshold tolerance {tol} outside (0, 1e-2)")));
    }
    if ldpc_decodes_from(ens, 0.0) {
        return Ok(PrecodeThreshold(0.0));
    }
    if !ldpc_decodes_from(ens, 1.0) {
        return Ok(PrecodeThreshold(1.0));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if ldpc_decodes_from(ens, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(PrecodeThreshold(hi))
}
