//! Test-only oracles that do not share code with the library.

#![allow(dead_code)]

/// Adaptive Simpson quadrature.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// J(m) straight from its integral definition.
pub fn j_quadrature(m: f64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    let spread = (2.0 * m).sqrt();
    let integrand = |nu: f64| {
        let loss = if nu > 0.0 {
            (-nu).exp().ln_1p()
        } else {
            -nu + nu.exp().ln_1p()
        } / std::f64::consts::LN_2;
        loss * (-(nu - m) * (nu - m) / (4.0 * m)).exp()
    };
    let lo = m - 20.0 * spread;
    let hi = m + 20.0 * spread;
    let pieces = 64;
    let width = (hi - lo) / pieces as f64;
    let total: f64 = (0..pieces)
        .map(|p| {
            let a = lo + p as f64 * width;
            adaptive_simpson(&integrand, a, a + width, 1e-14)
        })
        .sum();
    1.0 - total / (4.0 * std::f64::consts::PI * m).sqrt()
}

/// Bisection inverse of the quadrature J.
pub fn j_inv_quadrature(x: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 200.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if j_quadrature(mid) < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A cycle-free factor graph: dynamic checks carry a channel LLR, static
/// checks force even parity.
#[derive(Debug, Clone)]
pub struct TreeGraph {
    pub k: usize,
    pub dynamic: Vec<Vec<u32>>,
    pub channel: Vec<f64>,
    pub stat: Vec<Vec<u32>>,
}

/// Grows a random tree: each new check hangs off one existing variable and
/// introduces only fresh variables, so no cycle can close.
pub fn random_tree(rng: &mut impl rand::Rng, max_vars: usize) -> TreeGraph {
    let target = rng.gen_range(2..=max_vars);
    let mut g = TreeGraph {
        k: 1,
        dynamic: Vec::new(),
        channel: Vec::new(),
        stat: Vec::new(),
    };
    while g.k < target {
        let anchor = rng.gen_range(0..g.k) as u32;
        let fresh = rng.gen_range(1..=3).min(target - g.k);
        let mut row = vec![anchor];
        row.extend((g.k..g.k + fresh).map(|v| v as u32));
        g.k += fresh;
        if rng.gen_bool(0.6) {
            g.dynamic.push(row);
            g.channel.push(rng.gen_range(-4.0..4.0));
        } else {
            g.stat.push(row);
        }
    }
    // Leaf observations keep every variable informed.
    for v in 0..g.k {
        if rng.gen_bool(0.7) {
            g.dynamic.push(vec![v as u32]);
            g.channel.push(rng.gen_range(-4.0..4.0));
        }
    }
    g
}

/// Exact posterior LLR of every variable by enumerating all 2^k assignments.
pub fn brute_force_marginals(g: &TreeGraph) -> Vec<f64> {
    let mut p0 = vec![0.0; g.k];
    let mut p1 = vec![0.0; g.k];
    for x in 0u32..(1 << g.k) {
        let bit = |v: u32| (x >> v) & 1;
        if g.stat.iter().any(|row| row.iter().fold(0, |a, &v| a ^ bit(v)) != 0) {
            continue;
        }
        let log_w: f64 = g
            .dynamic
            .iter()
            .zip(&g.channel)
            .map(|(row, &l)| {
                let y = row.iter().fold(0, |a, &v| a ^ bit(v));
                if y == 0 { 0.5 * l } else { -0.5 * l }
            })
            .sum();
        let w = log_w.exp();
        for v in 0..g.k {
            if bit(v as u32) == 0 {
                p0[v] += w;
            } else {
                p1[v] += w;
            }
        }
    }
    p0.iter().zip(&p1).map(|(a, b)| (a / b).ln()).collect()
}
