//! Monotone piecewise-cubic Hermite interpolation.
//!
//! Shared by the J-function table and tabulated precode transfer curves.
//! Slopes are limited with the Fritsch–Carlson conditions so the interpolant
//! never overshoots monotone data.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
    /// Set when the knots are equally spaced, enabling O(1) lookup.
    uniform_step: Option<f64>,
}

impl MonotoneCubic {
    /// Builds an interpolant from knots and known derivatives. The
    /// derivatives are limited where needed to keep each piece monotone.
    pub fn with_slopes(xs: Vec<f64>, ys: Vec<f64>, mut slopes: Vec<f64>) -> Result<Self> {
        check_knots(&xs, &ys)?;
        if slopes.len() != xs.len() {
            return Err(Error::config("slope count does not match knot count"));
        }
        limit_slopes(&xs, &ys, &mut slopes);
        let uniform_step = detect_uniform(&xs);
        Ok(Self {
            xs,
            ys,
            slopes,
            uniform_step,
        })
    }

    /// Builds a PCHIP interpolant (weighted harmonic-mean slopes).
    pub fn pchip(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        check_knots(&xs, &ys)?;
        let slopes = pchip_slopes(&xs, &ys);
        Self::with_slopes(xs, ys, slopes)
    }

    pub fn x_min(&self) -> f64 {
        self.xs[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn first_value(&self) -> f64 {
        self.ys[0]
    }

    pub fn last_value(&self) -> f64 {
        *self.ys.last().unwrap()
    }

    pub fn last_slope(&self) -> f64 {
        *self.slopes.last().unwrap()
    }

    fn interval(&self, x: f64) -> usize {
        let last = self.xs.len() - 2;
        match self.uniform_step {
            Some(h) => (((x - self.xs[0]) / h) as usize).min(last),
            None => self.xs.partition_point(|&k| k <= x).saturating_sub(1).min(last),
        }
    }

    /// Evaluates the interpolant; `x` is clamped to the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(self.x_min(), self.x_max());
        let k = self.interval(x);
        self.eval_piece(k, x)
    }

    #[inline]
    fn eval_piece(&self, k: usize, x: f64) -> f64 {
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        hermite(t, h, self.ys[k], self.ys[k + 1], self.slopes[k], self.slopes[k + 1])
    }

    /// Solves `eval(x) = y` for monotone data. `y` must lie within the
    /// knot value range.
    pub fn invert(&self, y: f64) -> f64 {
        let increasing = self.last_value() >= self.first_value();
        // Index of the first knot strictly past y in the direction of travel.
        let idx = if increasing {
            self.ys.partition_point(|&v| v <= y)
        } else {
            self.ys.partition_point(|&v| v >= y)
        };
        if idx == 0 {
            return self.x_min();
        }
        if idx >= self.ys.len() {
            return self.x_max();
        }
        let k = idx - 1;
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let (y0, y1) = (self.ys[k], self.ys[k + 1]);
        let h = x1 - x0;
        let (d0, d1) = (self.slopes[k], self.slopes[k + 1]);
        let sign = if increasing { 1.0 } else { -1.0 };

        // Safeguarded Newton on t in [0, 1].
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        let mut t = if y1 != y0 { ((y - y0) / (y1 - y0)).clamp(0.0, 1.0) } else { 0.5 };
        for _ in 0..100 {
            let r = sign * (hermite(t, h, y0, y1, d0, d1) - y);
            if r == 0.0 {
                break;
            }
            if r > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let dr = sign * hermite_dt(t, h, y0, y1, d0, d1);
            let mut next = if dr > 0.0 { t - r / dr } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-16 || hi - lo <= 1e-16 {
                t = next;
                break;
            }
            t = next;
        }
        x0 + t * h
    }
}

#[inline]
fn hermite(t: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Derivative of the Hermite piece with respect to `t`.
#[inline]
fn hermite_dt(t: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let h00 = 6.0 * t2 - 6.0 * t;
    let h10 = 3.0 * t2 - 4.0 * t + 1.0;
    let h01 = -6.0 * t2 + 6.0 * t;
    let h11 = 3.0 * t2 - 2.0 * t;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

fn check_knots(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(Error::config("interpolation needs at least two knots of matching length"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::config("interpolation knots must be finite"));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("interpolation abscissae must be strictly increasing"));
    }
    Ok(())
}

fn detect_uniform(xs: &[f64]) -> Option<f64> {
    let n = xs.len() - 1;
    let h = (xs[n] - xs[0]) / n as f64;
    let uniform = xs
        .iter()
        .enumerate()
        .all(|(i, &x)| (x - (xs[0] + i as f64 * h)).abs() <= 1e-12 * (1.0 + x.abs()));
    uniform.then_some(h)
}

fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0], delta[0]];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// One-sided three-point end slope, shape preserving.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    if d0 == 0.0 {
        return 0.0;
    }
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

fn limit_slopes(xs: &[f64], ys: &[f64], d: &mut [f64]) {
    for k in 0..xs.len() - 1 {
        let delta = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
        if delta == 0.0 {
            d[k] = 0.0;
            d[k + 1] = 0.0;
            continue;
        }
        // Slopes must share the sign of the secant.
        if d[k] * delta < 0.0 {
            d[k] = 0.0;
        }
        if d[k + 1] * delta < 0.0 {
            d[k + 1] = 0.0;
        }
        let a = d[k] / delta;
        let b = d[k + 1] / delta;
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            d[k] = tau * a * delta;
            d[k + 1] = tau * b * delta;
        }
    }
}
