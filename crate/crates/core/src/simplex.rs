//! Dense two-phase simplex for small linear programs.
//!
//! Solves `min cᵀx` subject to linear rows (`≤`, `≥`, `=`) and `x ≥ 0`.
//! Pricing uses Dantzig's rule and falls back to Bland's rule after a run of
//! degenerate pivots. The final basis is re-factorized from the original data
//! so the reported primal and dual vectors carry no accumulated tableau error.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub rows: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(cost: Vec<f64>) -> Self {
        Self {
            cost,
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.cost.len());
        self.rows.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    /// Row activities `Ax`.
    pub fn activities(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| dot(&r.coeffs, x)).collect()
    }

    /// Largest violation of any row or sign bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| {
            let a = dot(&r.coeffs, x);
            match r.relation {
                Relation::Le => (a - r.rhs).max(0.0),
                Relation::Ge => (r.rhs - a).max(0.0),
                Relation::Eq => (a - r.rhs).abs(),
            }
        });
        let bounds = x.iter().map(|&v| (-v).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row duals `y` with `cᵀx = bᵀy` at optimality.
    pub duals: Vec<f64>,
    pub duality_gap: f64,
    pub pivots: usize,
}

/// Farkas certificate: `yᵀA ≤ 0` on every variable, `y_i ≤ 0` on `≤` rows,
/// `y_i ≥ 0` on `≥` rows, and `yᵀb > 0`.
#[derive(Debug, Clone)]
pub struct InfeasibilityCertificate {
    pub ray: Vec<f64>,
    pub residual: f64,
}

impl InfeasibilityCertificate {
    pub fn verify(&self, lp: &LinearProgram, tol: f64) -> bool {
        let signs_ok = lp.rows.iter().zip(&self.ray).all(|(r, &y)| match r.relation {
            Relation::Le => y <= tol,
            Relation::Ge => y >= -tol,
            Relation::Eq => true,
        });
        let cols_ok = (0..lp.num_vars()).all(|j| {
            let s: f64 = lp.rows.iter().zip(&self.ray).map(|(r, &y)| y * r.coeffs[j]).sum();
            s <= tol
        });
        let rhs: f64 = lp.rows.iter().zip(&self.ray).map(|(r, &y)| y * r.rhs).sum();
        signs_ok && cols_ok && rhs > tol
    }
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible(InfeasibilityCertificate),
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    /// Row-major, `cols + 1` entries per row (last is the rhs).
    data: Vec<f64>,
    rows: usize,
    cols: usize,
    basis: Vec<usize>,
    kinds: Vec<ColKind>,
    /// Column that formed the initial identity for each row.
    initial: Vec<usize>,
    /// Sign applied to each original row so its rhs is nonnegative.
    flip: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.data[r * (self.cols + 1) + self.cols]
    }

    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let m = lp.rows.len();
        let mut flip = Vec::with_capacity(m);
        let mut rels = Vec::with_capacity(m);
        for r in &lp.rows {
            let s = if r.rhs < 0.0 { -1.0 } else { 1.0 };
            flip.push(s);
            rels.push(match (r.relation, s < 0.0) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (rel, _) => rel,
            });
        }
        let slacks = rels.iter().filter(|r| **r != Relation::Eq).count();
        let arts = rels.iter().filter(|r| **r != Relation::Le).count();
        let cols = n + slacks + arts;
        let mut kinds = vec![ColKind::Structural; n];
        kinds.extend(std::iter::repeat(ColKind::Slack).take(slacks));
        kinds.extend(std::iter::repeat(ColKind::Artificial).take(arts));
        let mut data = vec![0.0; m * (cols + 1)];
        let mut basis = Vec::with_capacity(m);
        let (mut next_slack, mut next_art) = (n, n + slacks);
        for (i, (r, rel)) in lp.rows.iter().zip(&rels).enumerate() {
            let row = &mut data[i * (cols + 1)..(i + 1) * (cols + 1)];
            for (dst, &a) in row.iter_mut().zip(&r.coeffs) {
                *dst = flip[i] * a;
            }
            row[cols] = flip[i] * r.rhs;
            match rel {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
        }
        let initial = basis.clone();
        Self {
            data,
            rows: m,
            cols,
            basis,
            kinds,
            initial,
            flip,
            pivots: 0,
        }
    }

    /// Reduced costs `c_j − c_Bᵀ B⁻¹ A_j` for every column.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut red = cost.to_vec();
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.data[r * (self.cols + 1)..r * (self.cols + 1) + self.cols];
            for (rc, &a) in red.iter_mut().zip(row) {
                *rc -= cb * a;
            }
        }
        red
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        (0..self.rows).map(|r| cost[self.basis[r]] * self.rhs(r)).sum()
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let p = self.data[pr * w + pc];
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[r * w..(r + 1) * w];
            for (dst, &src) in row.iter_mut().zip(&pivot_row) {
                *dst -= f * src;
            }
            row[pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Runs simplex iterations for `cost`; `allowed` filters entering columns.
    fn optimize(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool) -> Result<bool> {
        let limit = 50 * (self.rows + self.cols) + 1000;
        let mut bland = false;
        let mut degenerate = 0usize;
        let mut last_obj = self.objective(cost);
        for _ in 0..limit {
            let red = self.reduced_costs(cost);
            let entering = if bland {
                (0..self.cols).find(|&c| allowed(c) && red[c] < -COST_TOL)
            } else {
                (0..self.cols)
                    .filter(|&c| allowed(c) && red[c] < -COST_TOL)
                    .min_by(|&a, &b| red[a].total_cmp(&red[b]))
            };
            let Some(pc) = entering else {
                return Ok(true);
            };
            // Ratio test; ties broken by larger pivot, or by basis index under Bland.
            let mut best: Option<(usize, f64, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                best = match best {
                    None => Some((r, ratio, a)),
                    Some((br, bratio, ba)) => {
                        let tie = (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio.abs());
                        let better = if tie {
                            if bland {
                                self.basis[r] < self.basis[br]
                            } else {
                                a > ba
                            }
                        } else {
                            ratio < bratio
                        };
                        if better {
                            Some((r, ratio, a))
                        } else {
                            Some((br, bratio, ba))
                        }
                    }
                };
            }
            let Some((pr, _, _)) = best else {
                return Ok(false);
            };
            self.pivot(pr, pc);
            let obj = self.objective(cost);
            if obj < last_obj - 1e-12 * (1.0 + last_obj.abs()) {
                degenerate = 0;
            } else {
                degenerate += 1;
                if degenerate >= DEGENERATE_RUN {
                    bland = true;
                }
            }
            last_obj = obj;
        }
        Err(Error::Solver(format!("no convergence after {limit} pivots")))
    }

    /// Pivots zero-level artificials out of the basis where possible.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.rows {
            if self.kinds[self.basis[r]] != ColKind::Artificial {
                continue;
            }
            let col = (0..self.cols)
                .filter(|&c| self.kinds[c] != ColKind::Artificial)
                .max_by(|&a, &b| self.at(r, a).abs().total_cmp(&self.at(r, b).abs()));
            if let Some(c) = col {
                if self.at(r, c).abs() > PIVOT_TOL {
                    self.pivot(r, c);
                }
            }
        }
    }

    /// Standardized column `c` of the original system.
    fn original_column(&self, lp: &LinearProgram, c: usize) -> Vec<f64> {
        let n = lp.num_vars();
        if c < n {
            lp.rows.iter().zip(&self.flip).map(|(r, s)| s * r.coeffs[c]).collect()
        } else {
            // Slack, surplus and artificial columns are signed unit vectors.
            let mut e = vec![0.0; self.rows];
            for r in 0..self.rows {
                let v = self.initial_entry(lp, r, c);
                e[r] = v;
            }
            e
        }
    }

    fn initial_entry(&self, lp: &LinearProgram, r: usize, c: usize) -> f64 {
        // Rebuild the single auxiliary entry by replaying the layout.
        let n = lp.num_vars();
        let mut next_slack = n;
        let slacks = self.kinds.iter().filter(|k| **k == ColKind::Slack).count();
        let mut next_art = n + slacks;
        for (i, row) in lp.rows.iter().enumerate() {
            let rel = match (row.relation, self.flip[i] < 0.0) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (rel, _) => rel,
            };
            match rel {
                Relation::Le => {
                    if next_slack == c {
                        return if i == r { 1.0 } else { 0.0 };
                    }
                    next_slack += 1;
                }
                Relation::Ge => {
                    if next_slack == c {
                        return if i == r { -1.0 } else { 0.0 };
                    }
                    if next_art == c {
                        return if i == r { 1.0 } else { 0.0 };
                    }
                    next_slack += 1;
                    next_art += 1;
                }
                Relation::Eq => {
                    if next_art == c {
                        return if i == r { 1.0 } else { 0.0 };
                    }
                    next_art += 1;
                }
            }
        }
        0.0
    }
}

/// Solves `B z = rhs` (or `Bᵀ z = rhs`) by Gaussian elimination with partial
/// pivoting; `None` when `B` is numerically singular.
fn dense_solve(mut b: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let m = rhs.len();
    for k in 0..m {
        let p = (k..m).max_by(|&a, &c| b[a][k].abs().total_cmp(&b[c][k].abs()))?;
        if b[p][k].abs() < 1e-13 {
            return None;
        }
        b.swap(k, p);
        rhs.swap(k, p);
        for r in k + 1..m {
            let f = b[r][k] / b[k][k];
            if f == 0.0 {
                continue;
            }
            for c in k..m {
                b[r][c] -= f * b[k][c];
            }
            rhs[r] -= f * rhs[k];
        }
    }
    let mut z = vec![0.0; m];
    for k in (0..m).rev() {
        let s: f64 = (k + 1..m).map(|c| b[k][c] * z[c]).sum();
        z[k] = (rhs[k] - s) / b[k][k];
    }
    Some(z)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn solve(lp: &LinearProgram) -> Result<LpOutcome> {
    let n = lp.num_vars();
    if n == 0 {
        return Err(Error::config("linear program has no variables"));
    }
    if lp.rows.iter().any(|r| r.coeffs.len() != n) {
        return Err(Error::config("constraint width does not match variable count"));
    }
    if lp.cost.iter().chain(lp.rows.iter().flat_map(|r| r.coeffs.iter().chain([&r.rhs]))).any(|v| !v.is_finite()) {
        return Err(Error::config("linear program data must be finite"));
    }
    let mut tab = Tableau::build(lp);
    let scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);

    // Phase I: minimize the sum of artificials.
    let phase1: Vec<f64> = tab
        .kinds
        .iter()
        .map(|k| if *k == ColKind::Artificial { 1.0 } else { 0.0 })
        .collect();
    let has_artificials = phase1.iter().any(|&c| c > 0.0);
    if has_artificials {
        tab.optimize(&phase1, &|_| true)?;
        let residual = tab.objective(&phase1);
        if residual > 1e-9 * scale {
            let ray = row_duals(&tab, &phase1)
                .into_iter()
                .zip(&tab.flip)
                .map(|(y, s)| y * s)
                .collect();
            return Ok(LpOutcome::Infeasible(InfeasibilityCertificate { ray, residual }));
        }
        tab.drive_out_artificials();
    }

    // Phase II on the original cost; artificials may not re-enter.
    let mut cost = lp.cost.clone();
    cost.resize(tab.cols, 0.0);
    let kinds = tab.kinds.clone();
    if !tab.optimize(&cost, &|c| kinds[c] != ColKind::Artificial)? {
        return Ok(LpOutcome::Unbounded);
    }

    // Refactor the final basis from the original data.
    let m = tab.rows;
    let cols: Vec<Vec<f64>> = tab.basis.iter().map(|&c| tab.original_column(lp, c)).collect();
    let bmat: Vec<Vec<f64>> = (0..m).map(|r| cols.iter().map(|col| col[r]).collect()).collect();
    let b_std: Vec<f64> = lp.rows.iter().zip(&tab.flip).map(|(r, s)| s * r.rhs).collect();
    let (x_basic, y_std) = if m == 0 {
        (Vec::new(), Vec::new())
    } else {
        let bt: Vec<Vec<f64>> = (0..m).map(|r| cols[r].clone()).collect();
        let cb: Vec<f64> = tab.basis.iter().map(|&c| cost[c]).collect();
        match (dense_solve(bmat, b_std.clone()), dense_solve(bt, cb)) {
            (Some(xb), Some(y)) => (xb, y),
            _ => {
                // Singular refactorization: fall back to tableau values.
                let xb = (0..m).map(|r| tab.rhs(r)).collect();
                (xb, row_duals(&tab, &cost))
            }
        }
    };
    let mut x = vec![0.0; n];
    for (r, &c) in tab.basis.iter().enumerate() {
        if c < n {
            x[c] = x_basic[r];
        }
    }
    // Clean round-off below zero.
    for v in &mut x {
        if *v < 0.0 && *v > -1e-9 {
            *v = 0.0;
        }
    }
    let violation = lp.max_violation(&x);
    if violation > 1e-7 * scale {
        return Err(Error::Solver(format!("primal solution violates constraints by {violation:e}")));
    }
    let objective = dot(&lp.cost, &x);
    let duals: Vec<f64> = y_std.iter().zip(&tab.flip).map(|(y, s)| y * s).collect();
    let dual_obj: f64 = lp.rows.iter().zip(&duals).map(|(r, y)| r.rhs * y).sum();
    Ok(LpOutcome::Optimal(LpSolution {
        x,
        objective,
        duality_gap: (objective - dual_obj).abs(),
        duals,
        pivots: tab.pivots,
    }))
}

/// `y = c_Bᵀ B⁻¹` read off the columns of the initial identity basis.
fn row_duals(tab: &Tableau, cost: &[f64]) -> Vec<f64> {
    (0..tab.rows)
        .map(|i| {
            let col = tab.initial[i];
            (0..tab.rows).map(|r| cost[tab.basis[r]] * tab.at(r, col)).sum::<f64>()
        })
        .collect()
}
