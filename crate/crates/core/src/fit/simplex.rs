//! Dense two-phase tableau simplex for small linear programs.
//!
//! `min c·x` subject to rows `a·x (≤ | = | ≥) b` and `x ≥ 0`. Dantzig pricing
//! with a switch to Bland's rule after a run of degenerate pivots.

use crate::error::{Error, Result};

const EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(vars: usize) -> Self {
        LinearProgram {
            cost: vec![0.0; vars],
            rows: Vec::new(),
        }
    }

    pub fn vars(&self) -> usize {
        self.cost.len()
    }

    /// Adds `Σ coef·x_var (rel) rhs` from sparse terms.
    pub fn add_row(&mut self, terms: &[(usize, f64)], rel: Relation, rhs: f64) {
        let mut a = vec![0.0; self.vars()];
        for &(j, v) in terms {
            a[j] += v;
        }
        self.rows.push((a, rel, rhs));
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).solve(self)
    }
}

struct Tableau {
    /// rows × (cols + 1); last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_struct: usize,
    n_cols: usize,
    artificial_start: usize,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.vars();
        let m = lp.rows.len();
        let n_slack = lp.rows.iter().filter(|r| r.1 != Relation::Eq).count();

        // Normalize to nonnegative right-hand sides first to know which rows
        // need an artificial.
        let mut norm_rows = Vec::with_capacity(m);
        for (a, rel, b) in &lp.rows {
            let (mut a, mut rel, mut b) = (a.clone(), *rel, *b);
            if b < 0.0 {
                a.iter_mut().for_each(|v| *v = -*v);
                b = -b;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            norm_rows.push((a, rel, b));
        }
        let n_art = norm_rows.iter().filter(|r| r.1 != Relation::Le).count();
        let n_cols = n + n_slack + n_art;
        let artificial_start = n + n_slack;

        let mut t = vec![vec![0.0; n_cols + 1]; m];
        let mut basis = vec![0; m];
        let mut slack = n;
        let mut art = artificial_start;
        for (i, (a, rel, b)) in norm_rows.into_iter().enumerate() {
            t[i][..n].copy_from_slice(&a);
            t[i][n_cols] = b;
            match rel {
                Relation::Le => {
                    t[i][slack] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    t[i][slack] = -1.0;
                    slack += 1;
                    t[i][art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    t[i][art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }
        Tableau {
            t,
            basis,
            n_struct: n,
            n_cols,
            artificial_start,
            pivots: 0,
        }
    }

    fn solve(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        let n_cols = self.n_cols;
        if self.artificial_start < n_cols {
            let mut phase1 = vec![0.0; n_cols];
            phase1[self.artificial_start..]
                .iter_mut()
                .for_each(|c| *c = 1.0);
            let allowed = n_cols;
            self.optimize(&phase1, allowed)?;
            let infeas: f64 = self
                .basis
                .iter()
                .zip(&self.t)
                .filter(|(b, _)| **b >= self.artificial_start)
                .map(|(_, row)| row[n_cols])
                .sum();
            if infeas > 1e-7 {
                return Err(Error::LinearProgram(format!(
                    "infeasible (phase one residual {infeas:e})"
                )));
            }
            self.drive_out_artificials();
        }
        let mut cost = vec![0.0; n_cols];
        cost[..self.n_struct].copy_from_slice(&lp.cost);
        self.optimize(&cost, self.artificial_start)?;

        let mut x = vec![0.0; self.n_struct];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                x[b] = self.t[i][n_cols];
            }
        }
        let objective = lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution {
            x,
            objective,
            pivots: self.pivots,
        })
    }

    /// Minimizes `cost` over columns `< allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<()> {
        let n_cols = self.n_cols;
        let m = self.t.len();
        let max_pivots = 50 * (m + n_cols) + 1000;
        let mut degenerate_run = 0usize;
        loop {
            // reduced costs c_j − c_B B⁻¹ A_j
            let mut reduced = cost[..allowed].to_vec();
            for (i, &b) in self.basis.iter().enumerate() {
                let cb = cost[b];
                if cb != 0.0 {
                    for (r, a) in reduced.iter_mut().zip(&self.t[i][..allowed]) {
                        *r -= cb * a;
                    }
                }
            }
            let bland = degenerate_run > 50;
            let entering = if bland {
                reduced.iter().position(|r| *r < -EPS)
            } else {
                reduced
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| **r < -EPS)
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(j, _)| j)
            };
            let Some(col) = entering else {
                return Ok(());
            };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.t[i][col];
                if a > EPS {
                    let ratio = self.t[i][n_cols] / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - EPS
                                || (ratio <= lr + EPS && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((row, ratio)) = leave else {
                return Err(Error::LinearProgram("unbounded".into()));
            };
            if ratio <= EPS {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(row, col);
            if self.pivots > max_pivots {
                return Err(Error::LinearProgram(format!(
                    "no optimum after {} pivots",
                    self.pivots
                )));
            }
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        self.pivots += 1;
        let p = self.t[row][col];
        self.t[row].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.t[row].clone();
        for (i, r) in self.t.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (v, pr) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                r[col] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Pivots zero-level artificials out of the basis where possible.
    fn drive_out_artificials(&mut self) {
        for i in 0..self.t.len() {
            if self.basis[i] >= self.artificial_start {
                if let Some(col) = (0..self.artificial_start).find(|&j| self.t[i][j].abs() > 1e-9) {
                    self.pivot(i, col);
                }
                // otherwise the row is redundant; the artificial stays at zero
                // and is never allowed to re-enter in phase two.
            }
        }
    }
}
