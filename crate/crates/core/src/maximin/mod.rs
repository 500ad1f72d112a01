//! Best guarding mixed action and its divergence rate.
//!
//! For hypothesis `i`, `λ_i` maximises `min_{j≠i} Σ_a λ(a)·D(q_i^a ‖ q_j^a)`
//! over the probability simplex on actions and `D_i` is the optimal value.
//! [`solve_maximin`] solves the program exactly for any table; the closed
//! forms cover the two visual-search settings (oddball identity known, and
//! oddball identity one of two known images).

mod simplex;

use serde::Serialize;

use crate::poisson::{kl_rate, RateVector};
use crate::{Error, Result};
use simplex::{maximize, Constraint, Sense};

/// `div[i][j][a] = D(q_i^a ‖ q_j^a)` for `M` hypotheses and `K` actions.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceTable {
    m: usize,
    k: usize,
    div: Vec<f64>,
}

impl DivergenceTable {
    /// Build from a function of `(i, j, a)`; diagonal entries are forced to 0.
    ///
    /// Entries must be finite and non-negative, and the zero pattern must be
    /// symmetric in `(i, j)` for every action.
    pub fn from_fn(m: usize, k: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        if m < 2 || k < 1 {
            return Err(Error::invalid(format!("need M >= 2 and K >= 1, got M={m}, K={k}")));
        }
        let mut div = vec![0.0; m * m * k];
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                for a in 0..k {
                    let v = f(i, j, a);
                    if !(v.is_finite() && v >= 0.0) {
                        return Err(Error::invalid(format!("div[{i}][{j}][{a}] = {v}")));
                    }
                    div[(i * m + j) * k + a] = v;
                }
            }
        }
        let table = Self { m, k, div };
        for i in 0..m {
            for j in (i + 1)..m {
                for a in 0..k {
                    if (table.get(i, j, a) == 0.0) != (table.get(j, i, a) == 0.0) {
                        return Err(Error::Model(format!(
                            "zero pattern not symmetric: div[{i}][{j}][{a}] = {}, div[{j}][{i}][{a}] = {}",
                            table.get(i, j, a),
                            table.get(j, i, a)
                        )));
                    }
                }
            }
        }
        Ok(table)
    }

    /// Divergences between observation models: `D(q_i^a ‖ q_j^a) = kl_rate · T`.
    pub fn from_rates(obs_model: &[Vec<RateVector>], slot: f64) -> Result<Self> {
        let m = obs_model.len();
        let k = obs_model.first().map_or(0, Vec::len);
        if obs_model.iter().any(|row| row.len() != k) {
            return Err(Error::invalid("every hypothesis needs one rate vector per action"));
        }
        let mut err = None;
        let table = Self::from_fn(m, k, |i, j, a| {
            kl_rate(&obs_model[i][a], &obs_model[j][a])
                .map(|v| v * slot)
                .unwrap_or_else(|e| {
                    err.get_or_insert(e);
                    0.0
                })
        });
        match err {
            Some(e) => Err(e),
            None => table,
        }
    }

    pub fn hypotheses(&self) -> usize {
        self.m
    }

    pub fn actions(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize, a: usize) -> f64 {
        self.div[(i * self.m + j) * self.k + a]
    }

    /// `Σ_a λ(a)·div[i][j][a]`.
    pub fn mixed(&self, i: usize, j: usize, lambda: &[f64]) -> f64 {
        lambda.iter().enumerate().map(|(a, l)| l * self.get(i, j, a)).sum()
    }

    /// `min_{j≠i} Σ_a λ(a)·div[i][j][a]`.
    pub fn guard_value(&self, i: usize, lambda: &[f64]) -> f64 {
        (0..self.m)
            .filter(|&j| j != i)
            .map(|j| self.mixed(i, j, lambda))
            .fold(f64::INFINITY, f64::min)
    }

    /// First pair `(i, j)` that no action distinguishes, if any.
    pub fn indistinguishable_pair(&self) -> Option<(usize, usize)> {
        (0..self.m)
            .flat_map(|i| (0..self.m).map(move |j| (i, j)))
            .find(|&(i, j)| i != j && self.indistinguishable(i, j))
    }

    fn indistinguishable(&self, i: usize, j: usize) -> bool {
        (0..self.k).all(|a| self.get(i, j, a) == 0.0)
    }

    fn largest(&self) -> f64 {
        self.div.iter().copied().fold(0.0, f64::max)
    }
}

/// Optimal mixed action `λ` and guarded rate `D_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaximinSolution {
    pub lambda: Vec<f64>,
    pub value: f64,
}

/// Dual witness: a mixture over alternatives under which no action earns
/// more than `bound`. Strong duality `bound == D_i` proves optimality.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub alternative_weights: Vec<f64>,
    pub bound: f64,
}

const CERT_TOL: f64 = 1e-9;

/// Exact `λ_i`, `D_i` for hypothesis `i`; ties go to the lexicographically
/// smallest `λ`.
pub fn solve_maximin(table: &DivergenceTable, i: usize) -> Result<MaximinSolution> {
    let (m, k) = (table.m, table.k);
    if i >= m {
        return Err(Error::invalid(format!("hypothesis {i} out of range (M = {m})")));
    }
    if let Some(j) = (0..m).find(|&j| j != i && table.indistinguishable(i, j)) {
        return Err(Error::Indistinguishable { i, j });
    }

    let simplex_row = {
        let mut coef = vec![1.0; k];
        coef.push(0.0);
        Constraint::new(coef, Sense::Eq, 1.0)
    };

    // variables: λ_0 … λ_{K−1}, t; maximise t subject to t ≤ Σ_a λ_a·div[i][j][a]
    let mut cons: Vec<Constraint> = (0..m)
        .filter(|&j| j != i)
        .map(|j| {
            let mut coef: Vec<f64> = (0..k).map(|a| -table.get(i, j, a)).collect();
            coef.push(1.0);
            Constraint::new(coef, Sense::Le, 0.0)
        })
        .collect();
    cons.push(simplex_row.clone());
    let mut obj = vec![0.0; k + 1];
    obj[k] = 1.0;
    let best = maximize(&obj, &cons)?.value;

    // lexicographic tie-break: minimise λ_0, then λ_1, … keeping value ≥ best
    let slack = 1e-12 * (1.0 + best);
    let mut fixed: Vec<Constraint> = Vec::new();
    let mut lambda = vec![0.0; k];
    for a in 0..k {
        let mut cons: Vec<Constraint> = (0..m)
            .filter(|&j| j != i)
            .map(|j| {
                let mut coef: Vec<f64> = (0..k).map(|b| table.get(i, j, b)).collect();
                coef.push(0.0);
                Constraint::new(coef, Sense::Ge, best - slack)
            })
            .collect();
        cons.push(simplex_row.clone());
        cons.extend(fixed.iter().cloned());
        let mut obj = vec![0.0; k + 1];
        obj[a] = -1.0;
        let sol = maximize(&obj, &cons)?;
        lambda = sol.x[..k].to_vec();
        let mut coef = vec![0.0; k + 1];
        coef[a] = 1.0;
        fixed.push(Constraint::new(coef, Sense::Le, lambda[a] + slack));
    }
    for l in lambda.iter_mut() {
        if *l < 0.0 {
            *l = 0.0;
        }
    }
    let total: f64 = lambda.iter().sum();
    for l in lambda.iter_mut() {
        *l /= total;
    }
    let value = table.guard_value(i, &lambda);

    let sol = MaximinSolution { lambda, value };
    let cert = certify(table, i)?;
    let tol = CERT_TOL * (1.0 + table.largest());
    if (cert.bound - sol.value).abs() > tol || (best - sol.value).abs() > tol {
        return Err(Error::NumericFailure(format!(
            "maximin optimality check failed for hypothesis {i}: primal {best}, tie-broken {}, dual {}",
            sol.value, cert.bound
        )));
    }
    Ok(sol)
}

/// Solve the dual program `min_y max_a Σ_j y_j·div[i][j][a]` over mixtures
/// of alternatives `j ≠ i`.
pub fn certify(table: &DivergenceTable, i: usize) -> Result<Certificate> {
    let (m, k) = (table.m, table.k);
    let alts: Vec<usize> = (0..m).filter(|&j| j != i).collect();
    let nv = alts.len() + 1; // y_j…, u
    let mut cons: Vec<Constraint> = (0..k)
        .map(|a| {
            let mut coef: Vec<f64> = alts.iter().map(|&j| table.get(i, j, a)).collect();
            coef.push(-1.0);
            Constraint::new(coef, Sense::Le, 0.0)
        })
        .collect();
    let mut coef = vec![1.0; nv];
    coef[nv - 1] = 0.0;
    cons.push(Constraint::new(coef, Sense::Eq, 1.0));
    let mut obj = vec![0.0; nv];
    obj[nv - 1] = -1.0;
    let sol = maximize(&obj, &cons)?;
    let mut weights = vec![0.0; m];
    for (idx, &j) in alts.iter().enumerate() {
        weights[j] = sol.x[idx].max(0.0);
    }
    Ok(Certificate {
        alternative_weights: weights,
        bound: -sol.value,
    })
}

fn check_divergences(dkl: f64, dlk: f64) -> Result<()> {
    if !(dkl.is_finite() && dkl >= 0.0 && dlk.is_finite() && dlk >= 0.0) {
        return Err(Error::invalid(format!(
            "divergences must be finite and >= 0, got {dkl}, {dlk}"
        )));
    }
    Ok(())
}

/// Divergence table when the oddball's identity is known: `W` hypotheses
/// (oddball location) and `W` actions (fixated location).
pub fn build_case1_table(dkl: f64, dlk: f64, w: usize) -> Result<DivergenceTable> {
    check_divergences(dkl, dlk)?;
    if w < 2 {
        return Err(Error::invalid(format!("need W >= 2, got {w}")));
    }
    DivergenceTable::from_fn(w, w, |i, j, a| {
        if a == i {
            dkl
        } else if a == j {
            dlk
        } else {
            0.0
        }
    })
}

/// Closed-form `λ_i`, `D_i` when the oddball's identity is known. The
/// boundary `dkl == dlk/(W−1)` takes the fixate-the-oddball branch.
pub fn case1_closed_form(dkl: f64, dlk: f64, w: usize, i: usize) -> Result<MaximinSolution> {
    check_divergences(dkl, dlk)?;
    if w < 2 {
        return Err(Error::invalid(format!("need W >= 2, got {w}")));
    }
    if i >= w {
        return Err(Error::invalid(format!("location {i} out of range (W = {w})")));
    }
    let wm1 = (w - 1) as f64;
    if dkl * wm1 >= dlk {
        let mut lambda = vec![0.0; w];
        lambda[i] = 1.0;
        Ok(MaximinSolution { lambda, value: dkl })
    } else {
        let mut lambda = vec![1.0 / wm1; w];
        lambda[i] = 0.0;
        Ok(MaximinSolution {
            lambda,
            value: dlk / wm1,
        })
    }
}

/// Divergence table when the oddball is one of two known images: `2W`
/// hypotheses (`i < W`: image k is the oddball at location `i`; `i ≥ W`:
/// image l is the oddball at location `i − W`) and `W` actions.
pub fn build_case2_table(dkl: f64, dlk: f64, w: usize) -> Result<DivergenceTable> {
    check_divergences(dkl, dlk)?;
    if w < 3 {
        return Err(Error::invalid(format!("need W >= 3, got {w}")));
    }
    DivergenceTable::from_fn(2 * w, w, |i, j, a| {
        // hypotheses with i >= W mirror those below with the images swapped
        let (own, other, li) = if i < w { (dkl, dlk, i) } else { (dlk, dkl, i - w) };
        let same_side = (i < w) == (j < w);
        let lj = if j < w { j } else { j - w };
        if same_side {
            if a == li {
                own
            } else if a == lj {
                other
            } else {
                0.0
            }
        } else if lj == li {
            if a == li {
                own
            } else {
                other
            }
        } else if a == li || a == lj {
            0.0
        } else {
            other
        }
    })
}

/// Closed-form `λ_i`, `D_i` when the oddball is one of two known images.
pub fn case2_closed_form(dkl: f64, dlk: f64, w: usize, i: usize) -> Result<MaximinSolution> {
    check_divergences(dkl, dlk)?;
    if w < 3 {
        return Err(Error::invalid(format!("need W >= 3, got {w}")));
    }
    if i >= 2 * w {
        return Err(Error::invalid(format!("hypothesis {i} out of range (2W = {})", 2 * w)));
    }
    let (own, other, loc) = if i < w { (dkl, dlk, i) } else { (dlk, dkl, i - w) };
    let wf = w as f64;
    if own * (wf - 1.0) >= other && own > 0.0 {
        let denom = (wf - 1.0) * own + (wf - 3.0) * other;
        let mut lambda = vec![own / denom; w];
        lambda[loc] = (wf - 3.0) * other / denom;
        Ok(MaximinSolution {
            lambda,
            value: (wf - 2.0) * own * other / denom,
        })
    } else {
        let mut lambda = vec![1.0 / (wf - 1.0); w];
        lambda[loc] = 0.0;
        Ok(MaximinSolution {
            lambda,
            value: other / (wf - 1.0),
        })
    }
}

/// Normalised index `D̃ = D / (d·T)` for the pair with `p` as the oddball
/// image and `q` as the distractor, `D` from the two-image closed form with
/// divergences `kl_rate · T`. Units: nats per second per neuron.
pub fn d_tilde(p: &RateVector, q: &RateVector, w: usize, slot: f64) -> Result<f64> {
    if !(slot > 0.0 && slot.is_finite()) {
        return Err(Error::invalid(format!("slot duration must be positive, got {slot}")));
    }
    let dkl = kl_rate(p, q)? * slot;
    let dlk = kl_rate(q, p)? * slot;
    let sol = case2_closed_form(dkl, dlk, w, 0)?;
    Ok(sol.value / (p.dim() as f64 * slot))
}

/// `D̃` from divergence rates (nats/s) supplied directly, e.g. estimated from
/// counts, for `d` neurons. The closed form is homogeneous of degree one, so
/// the slot duration cancels.
pub fn d_tilde_from_rates(dkl_rate: f64, dlk_rate: f64, w: usize, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("need at least one neuron"));
    }
    Ok(case2_closed_form(dkl_rate, dlk_rate, w, 0)?.value / d as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_sol(a: &MaximinSolution, b: &MaximinSolution, tol: f64) {
        assert_abs_diff_eq!(a.value, b.value, epsilon = tol);
        assert_eq!(a.lambda.len(), b.lambda.len());
        for (x, y) in a.lambda.iter().zip(&b.lambda) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-7);
        }
    }

    #[test]
    fn single_action() {
        let t = DivergenceTable::from_fn(2, 1, |_, _, _| 0.7).unwrap();
        let s = solve_maximin(&t, 0).unwrap();
        assert_eq!(s.lambda, vec![1.0]);
        assert_abs_diff_eq!(s.value, 0.7, epsilon = 1e-12);
    }

    #[test]
    fn indistinguishable_pair_is_named() {
        let t = DivergenceTable::from_fn(
            3,
            2,
            |i, j, _| if (i, j) == (0, 2) || (i, j) == (2, 0) { 0.0 } else { 1.0 },
        )
        .unwrap();
        match solve_maximin(&t, 0) {
            Err(Error::Indistinguishable { i: 0, j: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(t.indistinguishable_pair(), Some((0, 2)));
    }

    #[test]
    fn asymmetric_zero_pattern_rejected() {
        let r = DivergenceTable::from_fn(2, 1, |i, _, _| if i == 0 { 0.0 } else { 1.0 });
        assert!(matches!(r, Err(Error::Model(_))));
    }

    #[test]
    fn case1_examples() {
        let s = case1_closed_form(1.0, 1.0, 6, 2).unwrap();
        assert_eq!(s.lambda, vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.value, 1.0);
        let s = case1_closed_form(0.1, 1.0, 6, 0).unwrap();
        assert_eq!(s.lambda[0], 0.0);
        for l in &s.lambda[1..] {
            assert_abs_diff_eq!(*l, 0.2, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(s.value, 0.2, epsilon = 1e-15);
        assert!(case1_closed_form(1.0, 1.0, 1, 0).is_err());
    }

    #[test]
    fn case1_matches_lp_both_branches() {
        for (dkl, dlk) in [(1.0, 1.0), (0.1, 1.0), (2.0, 0.3), (0.05, 3.0)] {
            for w in 2..=7 {
                let t = build_case1_table(dkl, dlk, w).unwrap();
                for i in [0, w - 1] {
                    let lp = solve_maximin(&t, i).unwrap();
                    let cf = case1_closed_form(dkl, dlk, w, i).unwrap();
                    if dkl * (w as f64 - 1.0) == dlk {
                        // both branches are optimal; only the value is unique
                        assert_abs_diff_eq!(lp.value, cf.value, epsilon = 1e-9);
                    } else {
                        assert_sol(&lp, &cf, 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn case2_equal_divergences_w6() {
        let d = 0.8;
        let s = case2_closed_form(d, d, 6, 1).unwrap();
        assert_abs_diff_eq!(s.value, d / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.lambda[1], 0.375, epsilon = 1e-15);
        for (a, l) in s.lambda.iter().enumerate() {
            if a != 1 {
                assert_abs_diff_eq!(*l, 0.125, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn case2_w6_specialisation() {
        let (dkl, dlk) = (0.9, 0.4);
        let s = case2_closed_form(dkl, dlk, 6, 0).unwrap();
        assert_abs_diff_eq!(s.value, 4.0 * dkl * dlk / (5.0 * dkl + 3.0 * dlk), epsilon = 1e-15);
    }

    #[test]
    fn case2_rejects_small_w() {
        assert!(case2_closed_form(1.0, 1.0, 2, 0).is_err());
        assert!(build_case2_table(1.0, 1.0, 2).is_err());
    }

    #[test]
    fn case2_w3_first_branch_has_no_self_weight() {
        let s = case2_closed_form(1.0, 1.0, 3, 0).unwrap();
        assert_eq!(s.lambda[0], 0.0);
        let lp = solve_maximin(&build_case2_table(1.0, 1.0, 3).unwrap(), 0).unwrap();
        assert_abs_diff_eq!(lp.value, s.value, epsilon = 1e-9);
    }

    #[test]
    fn case2_table_entries() {
        let (dkl, dlk, w) = (0.7, 0.3, 5);
        let t = build_case2_table(dkl, dlk, w).unwrap();
        // j = i + W
        assert_eq!(t.get(1, 1 + w, 1), dkl);
        assert_eq!(t.get(1, 1 + w, 3), dlk);
        // j > W, j != i + W: zero at a = i and a = j − W
        assert_eq!(t.get(1, 3 + w, 1), 0.0);
        assert_eq!(t.get(1, 3 + w, 3), 0.0);
        assert_eq!(t.get(1, 3 + w, 0), dlk);
        // same side
        assert_eq!(t.get(1, 2, 1), dkl);
        assert_eq!(t.get(1, 2, 2), dlk);
        assert_eq!(t.get(1, 2, 0), 0.0);
        // mirrored side swaps the images
        assert_eq!(t.get(w + 1, w + 2, 1), dlk);
        assert_eq!(t.get(w + 1, 1, 1), dlk);
        assert_eq!(t.get(w + 1, 1, 0), dkl);
    }

    /// Independent route: derive the table from the observation densities.
    fn case2_table_from_densities(dkl: f64, dlk: f64, w: usize) -> DivergenceTable {
        // image seen at location a under hypothesis i: true = image k
        let sees_k = |i: usize, a: usize| if i < w { a == i } else { a != i - w };
        DivergenceTable::from_fn(2 * w, w, |i, j, a| match (sees_k(i, a), sees_k(j, a)) {
            (true, false) => dkl,
            (false, true) => dlk,
            _ => 0.0,
        })
        .unwrap()
    }

    #[test]
    fn case2_table_matches_density_construction() {
        for w in 3..=8 {
            let (dkl, dlk) = (0.37 * w as f64, 1.3);
            assert_eq!(
                build_case2_table(dkl, dlk, w).unwrap(),
                case2_table_from_densities(dkl, dlk, w)
            );
        }
    }

    #[test]
    fn case2_branch_boundary_is_continuous() {
        for w in 3..=8 {
            let dlk = 1.7;
            let dkl = dlk / (w as f64 - 1.0);
            let first = case2_closed_form(dkl, dlk, w, 0).unwrap().value;
            let second = dlk / (w as f64 - 1.0);
            assert_abs_diff_eq!(first, second, epsilon = 1e-12);
            let lp = solve_maximin(&build_case2_table(dkl, dlk, w).unwrap(), 0).unwrap();
            assert_abs_diff_eq!(lp.value, first, epsilon = 1e-9);
        }
    }

    #[test]
    fn case2_matches_lp_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..500 {
            let dkl = rng.random_range(1e-3..5.0);
            let dlk = rng.random_range(1e-3..5.0);
            let w = rng.random_range(3..=8);
            let t = build_case2_table(dkl, dlk, w).unwrap();
            for i in [0, w + 1] {
                let lp = solve_maximin(&t, i).unwrap();
                let cf = case2_closed_form(dkl, dlk, w, i).unwrap();
                assert_sol(&lp, &cf, 1e-9);
            }
        }
    }

    /// Brute-force maximum over a simplex grid with `steps` subdivisions.
    fn grid_max(t: &DivergenceTable, i: usize, steps: usize) -> f64 {
        fn rec(t: &DivergenceTable, i: usize, steps: usize, left: usize, acc: &mut Vec<f64>, best: &mut f64) {
            let k = t.actions();
            if acc.len() == k - 1 {
                acc.push(left as f64 / steps as f64);
                *best = best.max(t.guard_value(i, acc));
                acc.pop();
                return;
            }
            for s in 0..=left {
                acc.push(s as f64 / steps as f64);
                rec(t, i, steps, left - s, acc, best);
                acc.pop();
            }
        }
        let mut best = f64::NEG_INFINITY;
        rec(t, i, steps, steps, &mut Vec::new(), &mut best);
        best
    }

    #[test]
    fn lp_matches_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // K = 3 with 140 subdivisions gives ~10^4 grid points
        let steps = 140;
        for _ in 0..20 {
            let t = DivergenceTable::from_fn(4, 3, |_, _, _| rng.random_range(0.01..3.0)).unwrap();
            for i in 0..4 {
                let lp = solve_maximin(&t, i).unwrap();
                let grid = grid_max(&t, i, steps);
                let max_d = (0..4)
                    .flat_map(|j| (0..3).map(move |a| (j, a)))
                    .map(|(j, a)| t.get(i, j, a))
                    .fold(0.0, f64::max);
                assert!(lp.value >= grid - 1e-9, "LP {} below grid {grid}", lp.value);
                // resolution: one grid step can move each term by at most 2·max/steps
                assert!(lp.value - grid <= 2.0 * max_d / steps as f64);
            }
        }
    }

    #[test]
    fn lp_certificate_and_vertices() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let k = rng.random_range(1..=6);
            let m = rng.random_range(2..=7);
            let t = DivergenceTable::from_fn(m, k, |_, _, _| {
                if rng.random_bool(0.2) {
                    0.0
                } else {
                    rng.random_range(0.01..4.0)
                }
            });
            let Ok(t) = t else { continue };
            for i in 0..m {
                let Ok(s) = solve_maximin(&t, i) else { continue };
                let sum: f64 = s.lambda.iter().sum();
                assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
                assert!(s.lambda.iter().all(|&l| l >= 0.0));
                assert_abs_diff_eq!(s.value, t.guard_value(i, &s.lambda), epsilon = 1e-9);
                // no pure action beats the mixture
                for a in 0..k {
                    let mut e = vec![0.0; k];
                    e[a] = 1.0;
                    assert!(t.guard_value(i, &e) <= s.value + 1e-9);
                }
                let cert = certify(&t, i).unwrap();
                assert_abs_diff_eq!(cert.bound, s.value, epsilon = 1e-9);
                // dual feasibility: every action earns at most the bound
                for a in 0..k {
                    let earn: f64 = (0..m).map(|j| cert.alternative_weights[j] * t.get(i, j, a)).sum();
                    assert!(earn <= cert.bound + 1e-9);
                }
            }
        }
    }

    #[test]
    fn lexicographic_tie_break() {
        // both actions are equally good against the single alternative
        let t = DivergenceTable::from_fn(2, 3, |_, _, a| if a == 2 { 0.5 } else { 1.0 }).unwrap();
        let s = solve_maximin(&t, 0).unwrap();
        assert_abs_diff_eq!(s.value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.lambda[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.lambda[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn monotone_in_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..30 {
            let base: Vec<f64> = (0..5 * 5 * 3).map(|_| rng.random_range(0.1..2.0)).collect();
            let t = DivergenceTable::from_fn(5, 3, |i, j, a| base[(i * 5 + j) * 3 + a]).unwrap();
            let bumped =
                DivergenceTable::from_fn(5, 3, |i, j, a| base[(i * 5 + j) * 3 + a] + rng.random_range(0.0..0.3))
                    .unwrap();
            for i in 0..5 {
                let v0 = solve_maximin(&t, i).unwrap().value;
                let v1 = solve_maximin(&bumped, i).unwrap().value;
                assert!(v1 >= v0 - 1e-9);
            }
        }
    }

    #[test]
    fn d_tilde_examples() {
        let p = RateVector::new(vec![2.0]).unwrap();
        let q = RateVector::new(vec![1.0]).unwrap();
        let dkl = 2.0 * 2f64.ln() - 1.0;
        let dlk = 1.0 - 2f64.ln();
        let expect = 4.0 * dkl * dlk / (5.0 * dkl + 3.0 * dlk);
        assert_abs_diff_eq!(d_tilde(&p, &q, 6, 1.0).unwrap(), expect, epsilon = 1e-14);
        assert_abs_diff_eq!(expect, 0.16626, epsilon = 1e-4);
        assert_eq!(d_tilde(&p, &p, 6, 1.0).unwrap(), 0.0);
        for t in [0.01, 0.25, 3.0] {
            assert_abs_diff_eq!(d_tilde(&p, &q, 6, t).unwrap(), expect, epsilon = 1e-12);
        }
        assert!(d_tilde(&p, &q, 6, 0.0).is_err());
        assert_abs_diff_eq!(d_tilde_from_rates(dkl, dlk, 6, 1).unwrap(), expect, epsilon = 1e-14);
    }
}
