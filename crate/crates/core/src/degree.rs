//! Degree distributions: LT output degrees (node and edge view), the Poisson
//! input ensemble, and LDPC precode ensembles.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Sparse map from degree to probability.
pub type DegreeMap = BTreeMap<u32, f64>;

const SUM_TOL: f64 = 1e-9;

fn validate_weights(weights: &DegreeMap, what: &str) -> Result<f64> {
    let mut total = 0.0;
    for (&d, &w) in weights {
        if d == 0 {
            return Err(Error::domain(format!("{what}: degree 0 is not allowed")));
        }
        if !w.is_finite() || w < 0.0 {
            return Err(Error::domain(format!("{what}: weight {w} of degree {d} is invalid")));
        }
        total += w;
    }
    if total <= 0.0 {
        return Err(Error::domain(format!("{what}: weights sum to zero")));
    }
    Ok(total)
}

/// Converts node-view weights Ω to edge-view weights ω, `ω_i = iΩ_i / Σ kΩ_k`.
pub fn node_to_edge(node: &DegreeMap) -> Result<DegreeMap> {
    validate_weights(node, "node weights")?;
    let mean: f64 = node.iter().map(|(&d, &w)| d as f64 * w).sum();
    Ok(node
        .iter()
        .map(|(&d, &w)| (d, d as f64 * w / mean))
        .collect())
}

/// Converts edge-view weights ω to node-view weights Ω, `Ω_i ∝ ω_i / i`.
pub fn edge_to_node(edge: &DegreeMap) -> Result<DegreeMap> {
    validate_weights(edge, "edge weights")?;
    let norm: f64 = edge.iter().map(|(&d, &w)| w / d as f64).sum();
    Ok(edge
        .iter()
        .map(|(&d, &w)| (d, w / d as f64 / norm))
        .collect())
}

/// LT output degree distribution, kept in both views.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputDegreeDistribution {
    node: DegreeMap,
    edge: DegreeMap,
}

impl OutputDegreeDistribution {
    /// Takes node weights as given; they must already sum to one.
    pub fn from_node_weights(node: DegreeMap) -> Result<Self> {
        let total = validate_weights(&node, "node weights")?;
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::domain(format!("node weights sum to {total}, not 1")));
        }
        let edge = node_to_edge(&node)?;
        Ok(Self { node, edge })
    }

    /// Normalizes arbitrary nonnegative edge weights and derives the node view.
    pub fn from_edge_weights(edge: DegreeMap) -> Result<Self> {
        let total = validate_weights(&edge, "edge weights")?;
        let edge: DegreeMap = edge.into_iter().map(|(d, w)| (d, w / total)).collect();
        let node = edge_to_node(&edge)?;
        Ok(Self { node, edge })
    }

    pub fn node_weights(&self) -> &DegreeMap {
        &self.node
    }

    pub fn edge_weights(&self) -> &DegreeMap {
        &self.edge
    }

    pub fn max_degree(&self) -> u32 {
        *self.node.keys().next_back().unwrap()
    }

    pub fn edge_weight(&self, degree: u32) -> f64 {
        self.edge.get(&degree).copied().unwrap_or(0.0)
    }

    /// Average output degree Ω'(1).
    pub fn mean_degree(&self) -> f64 {
        self.node.iter().map(|(&d, &w)| d as f64 * w).sum()
    }

    /// `Σ ω_j / j`, the LP cost; equals `1/Ω'(1)`.
    pub fn inverse_mean_edge_cost(&self) -> f64 {
        self.edge.iter().map(|(&d, &w)| w / d as f64).sum()
    }

    pub fn rate_lt(&self, alpha: f64) -> f64 {
        self.mean_degree() / alpha
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# degree weight (node view)\n");
        for (d, w) in &self.node {
            writeln!(out, "{d} {w}").unwrap();
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut node = DegreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            let mut fields = content.split_whitespace();
            let (Some(d), Some(w), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err(line, "expected \"degree weight\"".into()));
            };
            let d: u32 = d
                .parse()
                .map_err(|_| parse_err(line, format!("invalid degree {d:?}")))?;
            let w: f64 = w
                .parse()
                .map_err(|_| parse_err(line, format!("invalid weight {w:?}")))?;
            if d == 0 || !w.is_finite() || w < 0.0 {
                return Err(parse_err(line, format!("invalid entry {d} {w}")));
            }
            if node.insert(d, w).is_some() {
                return Err(parse_err(line, format!("degree {d} listed twice")));
            }
        }
        Self::from_node_weights(node).map_err(|e| parse_err(0, e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// `R_LT = Ω'(1) / α`.
pub fn rate_lt(dist: &OutputDegreeDistribution, alpha: f64) -> f64 {
    dist.rate_lt(alpha)
}

/// Edge-view input degree distribution ι of an LT code whose input degrees
/// are Poisson(α), truncated where the neglected tail mass drops below a
/// tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct InputEnsemble {
    alpha: f64,
    /// `edge[i - 1]` is ι_i.
    edge: Vec<f64>,
    dropped_tail: f64,
}

pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

impl InputEnsemble {
    pub fn poisson(alpha: f64, tail_tol: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::domain(format!("Poisson parameter {alpha} must be positive")));
        }
        if !(tail_tol > 0.0 && tail_tol < 1e-3) {
            return Err(Error::domain(format!("tail tolerance {tail_tol} outside (0, 1e-3)")));
        }
        // ι_i = P(Poisson(α) = i - 1), built in log space to survive large α.
        let ln_alpha = alpha.ln();
        let mut log_p = -alpha;
        let mut edge = Vec::new();
        let mut cumulative = 0.0;
        loop {
            let i = edge.len() + 1;
            let p = log_p.exp();
            edge.push(p);
            cumulative += p;
            let tail = 1.0 - cumulative;
            if tail < tail_tol && (i as f64) > alpha {
                let total: f64 = edge.iter().sum();
                edge.iter_mut().for_each(|w| *w /= total);
                return Ok(Self {
                    alpha,
                    edge,
                    dropped_tail: tail.max(0.0),
                });
            }
            log_p += ln_alpha - (i as f64).ln();
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// ι_i for i = 1..=max_degree, in order.
    pub fn edge_coeffs(&self) -> &[f64] {
        &self.edge
    }

    pub fn coeff(&self, degree: usize) -> f64 {
        degree
            .checked_sub(1)
            .and_then(|i| self.edge.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn max_degree(&self) -> usize {
        self.edge.len()
    }

    pub fn dropped_tail(&self) -> f64 {
        self.dropped_tail
    }

    /// Mean of the truncated node-view Poisson law (degree 0 included).
    pub fn node_mean(&self) -> f64 {
        // Node pmf p_d for d = 0..=max_degree; p_d·d = α·ι_d (unnormalized).
        let ln_alpha = self.alpha.ln();
        let mut log_p = -self.alpha;
        let (mut mass, mut first) = (0.0, 0.0);
        for d in 0..=self.edge.len() {
            let p = log_p.exp();
            mass += p;
            first += d as f64 * p;
            log_p += ln_alpha - ((d + 1) as f64).ln();
        }
        first / mass
    }
}

pub fn poisson_input(alpha: f64, tail_tol: f64) -> Result<InputEnsemble> {
    InputEnsemble::poisson(alpha, tail_tol)
}

/// Edge-perspective LDPC ensemble `(λ, ρ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdpcEnsemble {
    lambda: DegreeMap,
    rho: DegreeMap,
}

impl LdpcEnsemble {
    pub fn new(lambda: DegreeMap, rho: DegreeMap) -> Result<Self> {
        for (map, what) in [(&lambda, "lambda"), (&rho, "rho")] {
            let total = validate_weights(map, what)?;
            if (total - 1.0).abs() > SUM_TOL {
                return Err(Error::domain(format!("{what} sums to {total}, not 1")));
            }
        }
        Ok(Self { lambda, rho })
    }

    pub fn regular(var_degree: u32, check_degree: u32) -> Result<Self> {
        Self::new(
            DegreeMap::from([(var_degree, 1.0)]),
            DegreeMap::from([(check_degree, 1.0)]),
        )
    }

    pub fn lambda(&self) -> &DegreeMap {
        &self.lambda
    }

    pub fn rho(&self) -> &DegreeMap {
        &self.rho
    }

    /// `1 - (Σ ρ_j/j) / (Σ λ_i/i)`.
    pub fn design_rate(&self) -> f64 {
        let var: f64 = self.lambda.iter().map(|(&d, &w)| w / d as f64).sum();
        let chk: f64 = self.rho.iter().map(|(&d, &w)| w / d as f64).sum();
        1.0 - chk / var
    }
}
