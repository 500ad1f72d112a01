//! Dense two-phase primal simplex with Bland's rule.
//!
//! Sized for the maximin programs in this crate (tens of rows and columns),
//! where exactness and guaranteed termination matter more than speed.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct Constraint {
    pub coef: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coef: Vec<f64>, sense: Sense, rhs: f64) -> Self {
        Self { coef, sense, rhs }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

const PIVOT_EPS: f64 = 1e-12;
const COST_EPS: f64 = 1e-12;
const FEAS_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 50_000;

struct Tableau {
    rows: Vec<Vec<f64>>, // each row: ncols coefficients followed by the rhs
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    fn reduced_cost(&self, obj: &[f64], j: usize) -> f64 {
        let zj: f64 = self.rows.iter().zip(&self.basis).map(|(row, &b)| obj[b] * row[j]).sum();
        obj[j] - zj
    }

    fn objective(&self, obj: &[f64]) -> f64 {
        self.basis.iter().enumerate().map(|(r, &b)| obj[b] * self.rhs(r)).sum()
    }

    /// Maximise `obj · x` over columns `allowed`, Bland's rule throughout.
    fn optimise(&mut self, obj: &[f64], allowed: &[bool]) -> Result<()> {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..self.ncols)
                .find(|&j| allowed[j] && !self.basis.contains(&j) && self.reduced_cost(obj, j) > COST_EPS);
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][c];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-15 || (ratio <= lratio + 1e-15 && self.basis[r] < self.basis[lr]) {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::NumericFailure(format!("linear program unbounded in column {c}")));
            };
            self.pivot(r, c);
        }
        Err(Error::NumericFailure(format!("simplex exceeded {MAX_PIVOTS} pivots")))
    }
}

/// Maximise `c · x` subject to `constraints` and `x ≥ 0`.
pub(crate) fn maximize(c: &[f64], constraints: &[Constraint]) -> Result<LpSolution> {
    let n = c.len();
    let m = constraints.len();
    let n_slack = constraints.iter().filter(|k| k.sense != Sense::Eq).count();
    // every row gets an artificial after normalisation, except <= rows with rhs >= 0
    let mut rows_norm: Vec<(Vec<f64>, Sense, f64)> = constraints
        .iter()
        .map(|k| {
            debug_assert_eq!(k.coef.len(), n);
            if k.rhs < 0.0 {
                let flipped = match k.sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
                (k.coef.iter().map(|v| -v).collect(), flipped, -k.rhs)
            } else {
                (k.coef.clone(), k.sense, k.rhs)
            }
        })
        .collect();
    let n_art = rows_norm.iter().filter(|(_, s, _)| *s != Sense::Le).count();
    let ncols = n + n_slack + n_art;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut slack_col = n;
    let mut art_col = n + n_slack;
    for (coef, sense, rhs) in rows_norm.drain(..) {
        let mut row = vec![0.0; ncols + 1];
        row[..n].copy_from_slice(&coef);
        row[ncols] = rhs;
        match sense {
            Sense::Le => {
                row[slack_col] = 1.0;
                basis.push(slack_col);
                slack_col += 1;
            }
            Sense::Ge => {
                row[slack_col] = -1.0;
                slack_col += 1;
                row[art_col] = 1.0;
                basis.push(art_col);
                art_col += 1;
            }
            Sense::Eq => {
                row[art_col] = 1.0;
                basis.push(art_col);
                art_col += 1;
            }
        }
        rows.push(row);
    }
    let mut tab = Tableau { rows, basis, ncols };
    let is_art = |j: usize| j >= n + n_slack;

    if n_art > 0 {
        let obj1: Vec<f64> = (0..ncols).map(|j| if is_art(j) { -1.0 } else { 0.0 }).collect();
        tab.optimise(&obj1, &vec![true; ncols])?;
        let infeas = -tab.objective(&obj1);
        if infeas > FEAS_EPS {
            return Err(Error::NumericFailure(format!(
                "linear program infeasible (phase-one residual {infeas:e})"
            )));
        }
        // drive zero-level artificials out of the basis, dropping redundant rows
        let mut r = 0;
        while r < tab.rows.len() {
            if is_art(tab.basis[r]) {
                match (0..n + n_slack).find(|&j| tab.rows[r][j].abs() > 1e-9) {
                    Some(j) => {
                        tab.pivot(r, j);
                        r += 1;
                    }
                    None => {
                        tab.rows.remove(r);
                        tab.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
    }

    let mut obj2 = vec![0.0; ncols];
    obj2[..n].copy_from_slice(c);
    let allowed: Vec<bool> = (0..ncols).map(|j| !is_art(j)).collect();
    tab.optimise(&obj2, &allowed)?;

    let mut x = vec![0.0; n];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rhs(r);
        }
    }
    let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(LpSolution { x, value })
}
