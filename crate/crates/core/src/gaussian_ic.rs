//! The J-function: information content of a symmetric Gaussian LLR.
//!
//! For an LLR distributed as `N(m, 2m)` the mutual information with the
//! transmitted bit is
//!
//! ```text
//! J(m) = 1 - E[log2(1 + exp(-v))],   v ~ N(m, 2m)
//! ```
//!
//! Evaluating the expectation by quadrature on every call is far too slow for
//! the design loop, so the complement `K(m) = 1 - J(m)` is tabulated once on a
//! uniform grid together with its exact derivative and interpolated with
//! monotone cubic Hermite pieces. Past the last knot `K` decays exponentially,
//! matched in value and slope at the boundary.
//!
//! Working with `K` rather than `J` keeps relative precision in the
//! saturating region, which is where `J⁻¹` is most sensitive.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;

/// Mutual information in bits, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct IcValue(f64);

impl IcValue {
    pub const ZERO: IcValue = IcValue(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::domain(format!("information content {value} outside [0, 1]")));
        }
        Ok(Self(value))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Mean of a symmetric Gaussian LLR (its variance is twice the mean).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct LlrMean(f64);

impl LlrMean {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::domain(format!("LLR mean {value} must be finite and nonnegative")));
        }
        Ok(Self(value))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Largest IC accepted by [`j_inv`]; inputs above are clamped here.
pub const IC_CLAMP: f64 = 1.0 - 1e-12;

const TABLE_MAX_MEAN: f64 = 128.0;
const TABLE_STEP: f64 = 0.02;
const LN_2: f64 = std::f64::consts::LN_2;

struct JTable {
    /// Interpolant of K(m) = 1 - J(m) on [0, TABLE_MAX_MEAN].
    k: MonotoneCubic,
    tail_value: f64,
    tail_rate: f64,
}

fn table() -> &'static JTable {
    static TABLE: OnceLock<JTable> = OnceLock::new();
    TABLE.get_or_init(build_table)
}

fn build_table() -> JTable {
    let n = (TABLE_MAX_MEAN / TABLE_STEP).round() as usize;
    let ms: Vec<f64> = (0..=n).map(|i| i as f64 * TABLE_STEP).collect();
    let (ks, dks): (Vec<f64>, Vec<f64>) = ms.iter().map(|&m| complement_and_slope(m)).unzip();
    let k = MonotoneCubic::with_slopes(ms, ks, dks).expect("J table knots are well formed");
    let tail_value = k.last_value();
    let tail_rate = -k.last_slope() / tail_value;
    JTable {
        k,
        tail_value,
        tail_rate,
    }
}

const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_69),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_34),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_05),
    (-0.183_434_642_495_649_78, 0.362_683_783_378_361_77),
    (0.183_434_642_495_649_78, 0.362_683_783_378_361_77),
    (0.525_532_409_916_329, 0.313_706_645_877_887_05),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_34),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_69),
];

/// `K(m) = E[log2(1 + e^-v)]` and `K'(m)` for `v ~ N(m, 2m)`, by composite
/// Gauss–Legendre quadrature.
///
/// The derivative uses Stein's identity, `K'(m) = E[f'(v) + f''(v)]`, which
/// stays regular as `m → 0`.
pub(crate) fn complement_and_slope(m: f64) -> (f64, f64) {
    if m <= 0.0 {
        return (1.0, -0.25 / LN_2);
    }
    let s = (2.0 * m).sqrt();
    // Outside |v| > 80 the integrand is below e^-40 relative to K.
    let lo = (m - 12.0 * s).max(-80.0);
    let hi = (m + 12.0 * s).min(80.0);
    // Eight-point panels this wide agree with much finer ones to ~1e-14.
    let width = (s / 1.5).min(1.5);
    let panels = ((hi - lo) / width).ceil() as usize;
    let h = (hi - lo) / panels as f64;
    let norm = 1.0 / (4.0 * std::f64::consts::PI * m).sqrt();
    let (mut k, mut dk) = (0.0, 0.0);
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        for &(node, weight) in &GL8 {
            let v = mid + 0.5 * h * node;
            let pdf = norm * (-(v - m) * (v - m) / (4.0 * m)).exp();
            let w = weight * 0.5 * h * pdf;
            // log2(1 + e^-v) and the logistic terms, overflow-safe.
            let (f, sig_neg) = if v > 0.0 {
                let e = (-v).exp();
                (e.ln_1p() / LN_2, e / (1.0 + e))
            } else {
                let e = v.exp();
                ((-v + e.ln_1p()) / LN_2, 1.0 / (1.0 + e))
            };
            let sig_pos = 1.0 - sig_neg;
            k += w * f;
            dk += w * (-sig_neg + sig_pos * sig_neg) / LN_2;
        }
    }
    (k, dk)
}

/// `1 - J(m)` for raw means; nonpositive means give 1.
#[inline]
fn complement(m: f64) -> f64 {
    if m <= 0.0 {
        return 1.0;
    }
    let t = table();
    if m <= TABLE_MAX_MEAN {
        t.k.eval(m)
    } else {
        t.tail_value * (-t.tail_rate * (m - TABLE_MAX_MEAN)).exp()
    }
}

/// J on raw floats. Nonpositive means map to 0; the result stays strictly
/// below 1 for finite inputs.
#[inline]
pub fn j(m: f64) -> f64 {
    1.0 - complement(m).max(f64::EPSILON / 2.0)
}

/// J⁻¹ on raw floats with the input clamped to `[0, IC_CLAMP]`.
#[inline]
pub fn j_inv(x: f64) -> f64 {
    let x = x.clamp(0.0, IC_CLAMP);
    if x <= 0.0 {
        return 0.0;
    }
    let target = 1.0 - x;
    let t = table();
    if target >= t.tail_value {
        t.k.invert(target)
    } else {
        TABLE_MAX_MEAN + (t.tail_value / target).ln() / t.tail_rate
    }
}

/// Information content carried by a symmetric Gaussian LLR of mean `m`.
pub fn j_of_mean(m: LlrMean) -> IcValue {
    IcValue(j(m.0))
}

/// Inverse of [`j_of_mean`]. Saturated information (`x ≥ 1`) has no finite
/// preimage and is rejected.
pub fn mean_of_ic(x: IcValue) -> Result<LlrMean> {
    if x.0 >= 1.0 {
        return Err(Error::domain("J⁻¹ is unbounded at information content 1"));
    }
    Ok(LlrMean(j_inv(x.0)))
}

/// Checked entry point for raw means.
pub fn try_j(m: f64) -> Result<f64> {
    Ok(j(LlrMean::new(m)?.0))
}

/// BIAWGN channel constants derived from the noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParam {
    pub sigma2: f64,
    /// Capacity, `J(2/σ²)`.
    pub x0: f64,
    /// `J⁻¹(1 - x0)`, the check-side channel offset.
    pub f0: f64,
}

impl ChannelParam {
    pub fn from_sigma(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::domain(format!("noise sigma {sigma} must be positive")));
        }
        let sigma2 = sigma * sigma;
        let x0 = j(2.0 / sigma2);
        let f0 = j_inv(1.0 - x0);
        Ok(Self { sigma2, x0, f0 })
    }

    /// Channel whose capacity equals `capacity`.
    pub fn from_capacity(capacity: f64) -> Result<Self> {
        if !(capacity > 0.0 && capacity < 1.0) {
            return Err(Error::domain(format!("capacity {capacity} must lie in (0, 1)")));
        }
        let mean = j_inv(capacity);
        Self::from_sigma((2.0 / mean).sqrt())
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// LLR mean of a single channel observation, `2/σ²`.
    pub fn llr_mean(&self) -> f64 {
        2.0 / self.sigma2
    }
}

pub fn channel_from_sigma(sigma: f64) -> Result<ChannelParam> {
    ChannelParam::from_sigma(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin() {
        assert_eq!(j(0.0), 0.0);
        assert_eq!(j_inv(0.0), 0.0);
        assert_eq!(mean_of_ic(IcValue::ZERO).unwrap().get(), 0.0);
    }

    #[test]
    fn rejects_bad_domain() {
        assert!(LlrMean::new(-1.0).is_err());
        assert!(LlrMean::new(f64::NAN).is_err());
        assert!(try_j(f64::INFINITY).is_err());
        assert!(IcValue::new(-0.1).is_err());
        assert!(mean_of_ic(IcValue::new(1.0).unwrap()).is_err());
        assert!(ChannelParam::from_sigma(0.0).is_err());
        assert!(ChannelParam::from_sigma(-2.0).is_err());
    }

    #[test]
    fn half_capacity_point() {
        let ch = channel_from_sigma(0.9787).unwrap();
        assert!((ch.x0 - 0.5).abs() < 5e-3);
        assert!((ch.f0 - 2.0 / ch.sigma2).abs() < 2e-2);
        let m = mean_of_ic(IcValue::new(0.5).unwrap()).unwrap().get();
        assert!((m - 2.0 / (0.9787f64 * 0.9787)).abs() < 1e-2);
    }

    #[test]
    fn saturates_below_one() {
        for m in [50.0, 127.9, 128.0, 128.1, 200.0, 1e6] {
            let x = j(m);
            assert!(x < 1.0 && x > 0.999_99, "{m} -> {x}");
        }
        // Continuity across the table boundary.
        let below = complement(TABLE_MAX_MEAN - 1e-9);
        let above = complement(TABLE_MAX_MEAN + 1e-9);
        assert!((below / above - 1.0).abs() < 1e-6);
    }

    #[test]
    fn inverse_in_tail_region() {
        let x = IC_CLAMP;
        let m = j_inv(x);
        assert!(m > 90.0 && m < TABLE_MAX_MEAN);
        assert!(((1.0 - j(m)) / (1.0 - x) - 1.0).abs() < 1e-6);
        let m_tail = 140.0;
        let k = complement(m_tail);
        let back = TABLE_MAX_MEAN + (table().tail_value / k).ln() / table().tail_rate;
        assert!((back - m_tail).abs() < 1e-9);
    }

    #[test]
    fn slope_matches_finite_difference() {
        for m in [0.05, 1.0, 4.0, 17.0, 60.0] {
            let (_, dk) = complement_and_slope(m);
            let fd = (complement_and_slope(m + 1e-5).0 - complement_and_slope(m - 1e-5).0) / 2e-5;
            assert!((dk - fd).abs() < 1e-8 * (1.0 + dk.abs()), "{m}: {dk} vs {fd}");
        }
    }
}
