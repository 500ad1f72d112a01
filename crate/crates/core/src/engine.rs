//! Sequential controlled-sensing simulator.
//!
//! A [`TestProblem`] fixes the hypotheses, the actions, the Poisson
//! observation model of every (hypothesis, action) pair and the switching
//! costs. A [`Trial`] runs one realisation of Sluggish Procedure A (Procedure
//! A is the special case `η = 1`) or of its ε-uniform variant under the
//! problem's true hypothesis; [`run_campaign`] aggregates independent trials.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::maximin::{solve_maximin, DivergenceTable, MaximinSolution};
use crate::poisson::{poisson_draw, RateVector};
use crate::{Error, Result};

/// Hard cap on slots per trial; stopping is almost surely finite, so hitting
/// it signals a modelling or numerical problem.
pub const DEFAULT_MAX_SLOTS: u64 = 100_000_000;

const TRACE_LEN: usize = 16;
const TIE_TOL: f64 = 1e-9;

/// Hypotheses × actions table of Poisson observation models with switching
/// costs and the maximin mixed action of every hypothesis.
#[derive(Debug, Clone)]
pub struct TestProblem {
    obs_model: Vec<Vec<RateVector>>,
    /// `ln` of the floored rates, `[i][a][m]`.
    log_rates: Vec<Vec<Vec<f64>>>,
    /// `T · Σ_m rate`, floored, `[i][a]`.
    mass: Vec<Vec<f64>>,
    slot: f64,
    switch_cost: Vec<Vec<f64>>,
    true_hypothesis: usize,
    table: DivergenceTable,
    guards: Vec<MaximinSolution>,
}

impl TestProblem {
    /// `obs_model[i][a]` generates the counts under hypothesis `i` and
    /// action `a` over a slot of `slot` seconds; `switch_cost[a][b]` is charged
    /// whenever the action changes from `a` to `b`.
    pub fn new(
        obs_model: Vec<Vec<RateVector>>,
        slot: f64,
        switch_cost: Vec<Vec<f64>>,
        true_hypothesis: usize,
    ) -> Result<Self> {
        if !(slot > 0.0 && slot.is_finite()) {
            return Err(Error::invalid(format!("slot duration must be positive, got {slot}")));
        }
        let m = obs_model.len();
        let k = obs_model.first().map_or(0, Vec::len);
        if m < 2 || k < 1 {
            return Err(Error::invalid(format!(
                "need at least 2 hypotheses and 1 action, got {m}×{k}"
            )));
        }
        let d = obs_model[0][0].dim();
        for (i, row) in obs_model.iter().enumerate() {
            if row.len() != k {
                return Err(Error::invalid(format!(
                    "hypothesis {i} has {} actions, expected {k}",
                    row.len()
                )));
            }
            if let Some(a) = row.iter().position(|rv| rv.dim() != d) {
                return Err(Error::invalid(format!(
                    "hypothesis {i}, action {a}: expected {d} neurons"
                )));
            }
        }
        if switch_cost.len() != k || switch_cost.iter().any(|r| r.len() != k) {
            return Err(Error::invalid(format!("switching-cost matrix must be {k}×{k}")));
        }
        for (a, row) in switch_cost.iter().enumerate() {
            for (b, &g) in row.iter().enumerate() {
                if !(g.is_finite() && g >= 0.0) {
                    return Err(Error::invalid(format!("switching cost g({a},{b}) = {g}")));
                }
                if a == b && g != 0.0 {
                    return Err(Error::invalid(format!("g({a},{a}) must be 0, got {g}")));
                }
            }
        }
        if true_hypothesis >= m {
            return Err(Error::invalid(format!(
                "true hypothesis {true_hypothesis} out of range (M = {m})"
            )));
        }

        let table = DivergenceTable::from_rates(&obs_model, slot)?;
        if let Some((i, j)) = table.indistinguishable_pair() {
            return Err(Error::Indistinguishable { i, j });
        }
        let guards = (0..m).map(|i| solve_maximin(&table, i)).collect::<Result<Vec<_>>>()?;
        let log_rates = obs_model
            .iter()
            .map(|row| {
                row.iter()
                    .map(|rv| rv.floored().rates().iter().map(|r| r.ln()).collect())
                    .collect()
            })
            .collect();
        let mass = obs_model
            .iter()
            .map(|row| {
                row.iter()
                    .map(|rv| slot * rv.floored().rates().iter().sum::<f64>())
                    .collect()
            })
            .collect();
        Ok(Self {
            obs_model,
            log_rates,
            mass,
            slot,
            switch_cost,
            true_hypothesis,
            table,
            guards,
        })
    }

    /// Oddball search with known identities: `W` hypotheses (oddball
    /// location), `W` actions (fixated location). The oddball shows `oddball`,
    /// every other location shows `distractor`.
    pub fn case1(
        oddball: &RateVector,
        distractor: &RateVector,
        w: usize,
        slot: f64,
        switch_cost: f64,
        true_hypothesis: usize,
    ) -> Result<Self> {
        if w < 2 {
            return Err(Error::invalid(format!("need W >= 2, got {w}")));
        }
        let obs = (0..w)
            .map(|i| {
                (0..w)
                    .map(|a| if a == i { oddball.clone() } else { distractor.clone() })
                    .collect()
            })
            .collect();
        Self::new(obs, slot, uniform_switch_cost(w, switch_cost)?, true_hypothesis)
    }

    /// Oddball search where either image may be the oddball: hypothesis
    /// `i < W` puts image k at location `i` among copies of image l;
    /// `i ≥ W` puts image l at location `i − W` among copies of image k.
    pub fn case2(
        image_k: &RateVector,
        image_l: &RateVector,
        w: usize,
        slot: f64,
        switch_cost: f64,
        true_hypothesis: usize,
    ) -> Result<Self> {
        if w < 3 {
            return Err(Error::invalid(format!("need W >= 3, got {w}")));
        }
        let obs = (0..2 * w)
            .map(|i| {
                (0..w)
                    .map(|a| {
                        let sees_k = if i < w { a == i } else { a != i - w };
                        if sees_k {
                            image_k.clone()
                        } else {
                            image_l.clone()
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(obs, slot, uniform_switch_cost(w, switch_cost)?, true_hypothesis)
    }

    /// The same problem simulated under a different true hypothesis.
    pub fn with_true_hypothesis(&self, i: usize) -> Result<Self> {
        if i >= self.hypotheses() {
            return Err(Error::invalid(format!(
                "true hypothesis {i} out of range (M = {})",
                self.hypotheses()
            )));
        }
        let mut p = self.clone();
        p.true_hypothesis = i;
        Ok(p)
    }

    pub fn hypotheses(&self) -> usize {
        self.obs_model.len()
    }

    pub fn actions(&self) -> usize {
        self.obs_model[0].len()
    }

    pub fn slot(&self) -> f64 {
        self.slot
    }

    pub fn true_hypothesis(&self) -> usize {
        self.true_hypothesis
    }

    pub fn obs_model(&self, i: usize, a: usize) -> &RateVector {
        &self.obs_model[i][a]
    }

    pub fn switch_cost(&self, a: usize, b: usize) -> f64 {
        self.switch_cost[a][b]
    }

    /// Largest switching cost `g_max`.
    pub fn max_switch_cost(&self) -> f64 {
        self.switch_cost.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Per-slot divergences `D(q_i^a ‖ q_j^a)` in nats.
    pub fn divergences(&self) -> &DivergenceTable {
        &self.table
    }

    /// Maximin mixed action `λ_i` and rate `D_i` (nats per slot).
    pub fn guard(&self, i: usize) -> &MaximinSolution {
        &self.guards[i]
    }

    /// Log-likelihood of `counts` under hypothesis `i` and action `a`, up to
    /// a term that is common to all hypotheses.
    fn log_likelihood(&self, i: usize, a: usize, counts: &[u64]) -> f64 {
        let lr = &self.log_rates[i][a];
        counts.iter().zip(lr).map(|(&n, l)| n as f64 * l).sum::<f64>() - self.mass[i][a]
    }
}

fn uniform_switch_cost(k: usize, g: f64) -> Result<Vec<Vec<f64>>> {
    if !(g.is_finite() && g >= 0.0) {
        return Err(Error::invalid(format!(
            "switching cost must be finite and >= 0, got {g}"
        )));
    }
    Ok((0..k)
        .map(|a| (0..k).map(|b| if a == b { 0.0 } else { g }).collect())
        .collect())
}

/// Action-selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PolicyKind {
    /// Chernoff's Procedure A: redraw from `λ_θ` every slot.
    ProcedureA,
    /// Redraw from `λ_θ` with probability `eta`, otherwise keep the action.
    SluggishA { eta: f64 },
    /// Procedure A with `λ_θ` replaced by `(1 − ε)·λ_θ + ε·unif`.
    EpsilonUniform { epsilon: f64 },
}

impl PolicyKind {
    pub fn eta(&self) -> f64 {
        match self {
            PolicyKind::SluggishA { eta } => *eta,
            _ => 1.0,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            PolicyKind::EpsilonUniform { epsilon } => *epsilon,
            _ => 0.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::ProcedureA => "procedure_a",
            PolicyKind::SluggishA { .. } => "sluggish_a",
            PolicyKind::EpsilonUniform { .. } => "epsilon_uniform",
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            PolicyKind::ProcedureA => Ok(()),
            PolicyKind::SluggishA { eta } if eta > 0.0 && eta <= 1.0 => Ok(()),
            PolicyKind::SluggishA { eta } => Err(Error::invalid(format!("eta must lie in (0, 1], got {eta}"))),
            PolicyKind::EpsilonUniform { epsilon } if epsilon > 0.0 && epsilon <= 1.0 => Ok(()),
            PolicyKind::EpsilonUniform { epsilon } => {
                Err(Error::invalid(format!("epsilon must lie in (0, 1], got {epsilon}")))
            }
        }
    }
}

/// When the test is allowed to retire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopRule {
    /// Retire as soon as the leader clears the threshold.
    Any,
    /// Retire only when hypothesis `i` leads and clears the threshold.
    OnlyAt(usize),
    /// Never retire (observe forever).
    Never,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Threshold parameter `L`; the test retires when the leader's
    /// log-likelihood ratio against every rival reaches `ln((M − 1)·L)`.
    pub threshold: f64,
    pub seed: u64,
    pub stop_rule: StopRule,
    /// When true, a slot in which the action changes yields no observation.
    pub switch_consumes_slot: bool,
    pub max_slots: u64,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind, threshold: f64, seed: u64) -> Self {
        Self {
            kind,
            threshold,
            seed,
            stop_rule: StopRule::Any,
            switch_consumes_slot: false,
            max_slots: DEFAULT_MAX_SLOTS,
        }
    }

    fn validate(&self, problem: &TestProblem) -> Result<()> {
        self.kind.validate()?;
        if !(self.threshold > 0.0) {
            return Err(Error::invalid(format!(
                "threshold L must be positive, got {}",
                self.threshold
            )));
        }
        if let StopRule::OnlyAt(i) = self.stop_rule {
            if i >= problem.hypotheses() {
                return Err(Error::invalid(format!("stop hypothesis {i} out of range")));
            }
        }
        Ok(())
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    /// Stopping time in slots.
    pub tau: u64,
    pub decision: usize,
    pub switch_count: u64,
    pub switch_cost_total: f64,
    /// `tau + switch_cost_total`.
    pub total_cost: f64,
}

/// What happened in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    /// Slot index, starting at 1.
    pub n: u64,
    pub action: usize,
    pub switched: bool,
    /// Whether the slot produced an observation.
    pub observed: bool,
    /// Leading hypothesis after the slot.
    pub theta: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Continue(SlotRecord),
    Stop(TrialResult),
}

/// One trial as an explicit state machine.
#[derive(Debug, Clone)]
pub struct Trial<'a> {
    problem: &'a TestProblem,
    config: PolicyConfig,
    rng: ChaCha8Rng,
    /// Log-likelihoods relative to the current maximum.
    z: Vec<f64>,
    log_threshold: f64,
    theta: usize,
    action: Option<usize>,
    n: u64,
    switch_count: u64,
    switch_cost_total: f64,
    trace: Vec<f64>,
    counts: Vec<u64>,
}

impl<'a> Trial<'a> {
    pub fn new(problem: &'a TestProblem, config: PolicyConfig) -> Result<Self> {
        config.validate(problem)?;
        let m = problem.hypotheses();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        // θ(0) is uniform over the hypotheses
        let theta = rng.random_range(0..m);
        Ok(Self {
            problem,
            log_threshold: (((m - 1) as f64) * config.threshold).ln(),
            config,
            rng,
            z: vec![0.0; m],
            theta,
            action: None,
            n: 0,
            switch_count: 0,
            switch_cost_total: 0.0,
            trace: Vec::with_capacity(TRACE_LEN),
            counts: vec![0; problem.obs_model[0][0].dim()],
        })
    }

    /// Leading hypothesis `θ(n)`.
    pub fn theta(&self) -> usize {
        self.theta
    }

    /// Slots elapsed.
    pub fn slots(&self) -> u64 {
        self.n
    }

    /// Current action `A_n` (none before the first slot).
    pub fn action(&self) -> Option<usize> {
        self.action
    }

    /// Log-likelihood ratio `Z_ij(n)`.
    pub fn llr(&self, i: usize, j: usize) -> f64 {
        self.z[i] - self.z[j]
    }

    /// `min_{j≠θ} Z_θj(n)`.
    pub fn lead(&self) -> f64 {
        let t = self.theta;
        (0..self.z.len())
            .filter(|&j| j != t)
            .map(|j| self.z[t] - self.z[j])
            .fold(f64::INFINITY, f64::min)
    }

    fn should_stop(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let allowed = match self.config.stop_rule {
            StopRule::Any => true,
            StopRule::OnlyAt(i) => self.theta == i,
            StopRule::Never => false,
        };
        allowed && self.lead() >= self.log_threshold
    }

    fn result(&self) -> TrialResult {
        TrialResult {
            tau: self.n,
            decision: self.theta,
            switch_count: self.switch_count,
            switch_cost_total: self.switch_cost_total,
            total_cost: self.n as f64 + self.switch_cost_total,
        }
    }

    fn draw_action(&mut self) -> usize {
        let lambda = &self.problem.guards[self.theta].lambda;
        match self.config.kind {
            PolicyKind::EpsilonUniform { epsilon } => epsilon_uniform_policy_action(lambda, epsilon, &mut self.rng),
            _ => sample_index(lambda, &mut self.rng),
        }
    }

    fn update_theta(&mut self) {
        let max = self.z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for v in self.z.iter_mut() {
            *v -= max;
        }
        let leaders: Vec<usize> = (0..self.z.len()).filter(|&i| self.z[i] >= -TIE_TOL).collect();
        self.theta = if leaders.len() == 1 {
            leaders[0]
        } else {
            leaders[self.rng.random_range(0..leaders.len())]
        };
    }

    /// Check the stopping rule; if the test continues, choose the next
    /// action, take one slot and update the log-likelihoods.
    pub fn step(&mut self) -> Result<Step> {
        if self.should_stop() {
            return Ok(Step::Stop(self.result()));
        }
        if self.n >= self.config.max_slots {
            return Err(Error::RunawayTrial {
                slots: self.n,
                trace: self.trace.clone(),
            });
        }
        // U is drawn every slot, even when η = 1, so Procedure A and
        // Sluggish A with η = 1 consume the random stream identically
        let redraw = self.rng.random::<f64>() < self.config.kind.eta();
        let next = match self.action {
            Some(a) if !redraw => a,
            _ => self.draw_action(),
        };
        let switched = matches!(self.action, Some(a) if a != next);
        if let Some(prev) = self.action.filter(|_| switched) {
            self.switch_count += 1;
            self.switch_cost_total += self.problem.switch_cost[prev][next];
        }
        self.action = Some(next);
        self.n += 1;

        let observed = !(switched && self.config.switch_consumes_slot);
        if observed {
            let truth = self.problem.true_hypothesis;
            let slot = self.problem.slot;
            for (c, &r) in self.counts.iter_mut().zip(self.problem.obs_model[truth][next].rates()) {
                *c = poisson_draw(r * slot, &mut self.rng);
            }
            for i in 0..self.z.len() {
                self.z[i] += self.problem.log_likelihood(i, next, &self.counts);
            }
            if self.z.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericFailure(format!(
                    "non-finite log-likelihood at slot {}",
                    self.n
                )));
            }
            self.update_theta();
        }
        if self.trace.len() == TRACE_LEN {
            self.trace.remove(0);
        }
        let lead = self.lead();
        self.trace.push(lead);

        Ok(Step::Continue(SlotRecord {
            n: self.n,
            action: next,
            switched,
            observed,
            theta: self.theta,
        }))
    }

    /// Step until the test retires.
    pub fn run(mut self) -> Result<TrialResult> {
        loop {
            if let Step::Stop(r) = self.step()? {
                return Ok(r);
            }
        }
    }
}

/// Draw index `a` with probability `weights[a]` (weights sum to one).
fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (a, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return a;
        }
    }
    // rounding left u above the final partial sum: take the last supported action
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// Draw from `(1 − ε)·λ + ε·unif(actions)`.
pub fn epsilon_uniform_policy_action<R: Rng + ?Sized>(lambda: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..lambda.len())
    } else {
        sample_index(lambda, rng)
    }
}

/// Run one trial to completion.
pub fn run_trial(problem: &TestProblem, config: &PolicyConfig) -> Result<TrialResult> {
    Trial::new(problem, config.clone())?.run()
}

/// Means and standard errors over a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignSummary {
    pub n_trials: usize,
    pub mean_tau: f64,
    pub se_tau: f64,
    pub mean_cost: f64,
    pub se_cost: f64,
    /// Fraction of trials whose decision differs from the true hypothesis.
    pub err_rate: f64,
    pub se_err: f64,
    /// Switches per slot transition, pooled over trials: `Σ switches / Σ (τ − 1)`.
    pub switch_frac: f64,
    pub se_switch_frac: f64,
    /// `E[C] / E[τ]`.
    pub cost_ratio: f64,
    pub se_cost_ratio: f64,
}

impl CampaignSummary {
    pub fn from_trials(truth: usize, trials: &[TrialResult]) -> Result<Self> {
        let n = trials.len();
        if n == 0 {
            return Err(Error::invalid("campaign needs at least one trial"));
        }
        let taus: Vec<f64> = trials.iter().map(|t| t.tau as f64).collect();
        let costs: Vec<f64> = trials.iter().map(|t| t.total_cost).collect();
        let errs: Vec<f64> = trials
            .iter()
            .map(|t| f64::from(u8::from(t.decision != truth)))
            .collect();
        let switches: Vec<f64> = trials.iter().map(|t| t.switch_count as f64).collect();
        let transitions: Vec<f64> = trials.iter().map(|t| t.tau.saturating_sub(1) as f64).collect();
        let (mean_tau, se_tau) = mean_se(&taus);
        let (mean_cost, se_cost) = mean_se(&costs);
        let (err_rate, _) = mean_se(&errs);
        let se_err = (err_rate * (1.0 - err_rate) / n as f64).sqrt();
        let (switch_frac, se_switch_frac) = ratio_se(&switches, &transitions);
        let (cost_ratio, se_cost_ratio) = ratio_se(&costs, &taus);
        Ok(Self {
            n_trials: n,
            mean_tau,
            se_tau,
            mean_cost,
            se_cost,
            err_rate,
            se_err,
            switch_frac,
            se_switch_frac,
            cost_ratio,
            se_cost_ratio,
        })
    }
}

/// Sample mean and its standard error.
pub fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Ratio of means `Σy / Σx` with its delta-method standard error.
fn ratio_se(y: &[f64], x: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let sx: f64 = x.iter().sum();
    if sx == 0.0 {
        return (0.0, 0.0);
    }
    let r = y.iter().sum::<f64>() / sx;
    if y.len() < 2 {
        return (r, f64::NAN);
    }
    let mx = sx / n;
    let resid = y.iter().zip(x).map(|(a, b)| (a - r * b).powi(2)).sum::<f64>() / (n - 1.0);
    (r, (resid / n).sqrt() / mx)
}

/// Seed of trial `index` in a campaign rooted at `seed`.
pub fn trial_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

/// Run `n_trials` independent trials (trial `t` uses seed `seed + t`) in
/// parallel and return them in index order.
pub fn run_trials(problem: &TestProblem, config: &PolicyConfig, n_trials: usize) -> Result<Vec<TrialResult>> {
    config.validate(problem)?;
    (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut c = config.clone();
            c.seed = trial_seed(config.seed, t);
            run_trial(problem, &c)
        })
        .collect()
}

/// Monte Carlo summary of `n_trials` independent trials.
pub fn run_campaign(problem: &TestProblem, config: &PolicyConfig, n_trials: usize) -> Result<CampaignSummary> {
    if n_trials == 0 {
        return Err(Error::invalid("campaign needs at least one trial"));
    }
    let trials = run_trials(problem, config, n_trials)?;
    CampaignSummary::from_trials(problem.true_hypothesis, &trials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maximin::case2_closed_form;
    use approx::assert_abs_diff_eq;

    fn rv(r: f64) -> RateVector {
        RateVector::new(vec![r]).unwrap()
    }

    fn small_case2(truth: usize) -> TestProblem {
        TestProblem::case2(&rv(20.0), &rv(10.0), 6, 0.25, 5.0, truth).unwrap()
    }

    #[test]
    fn identical_models_rejected() {
        let obs = vec![vec![rv(3.0)], vec![rv(3.0)]];
        let r = TestProblem::new(obs, 1.0, vec![vec![0.0]], 0);
        assert!(matches!(r, Err(Error::Indistinguishable { i: 0, j: 1 })));
    }

    #[test]
    fn nonzero_self_switch_cost_rejected() {
        let obs = vec![vec![rv(3.0)], vec![rv(4.0)]];
        assert!(TestProblem::new(obs, 1.0, vec![vec![1.0]], 0).is_err());
    }

    #[test]
    fn guards_match_closed_form() {
        let p = small_case2(0);
        let dkl = p.divergences().get(0, 6, 0);
        let dlk = p.divergences().get(6, 0, 0);
        for i in [0, 3, 7] {
            let cf = case2_closed_form(dkl, dlk, 6, i).unwrap();
            assert_abs_diff_eq!(p.guard(i).value, cf.value, epsilon = 1e-9);
        }
    }

    #[test]
    fn llr_matches_direct_formula() {
        let p = small_case2(2);
        let counts = [7u64];
        let direct = crate::poisson::llr_increment(
            &crate::poisson::CountObservation::new(counts.to_vec(), 0.25).unwrap(),
            p.obs_model(0, 0),
            p.obs_model(1, 0),
        )
        .unwrap();
        let via = p.log_likelihood(0, 0, &counts) - p.log_likelihood(1, 0, &counts);
        assert_abs_diff_eq!(direct, via, epsilon = 1e-12);
    }

    #[test]
    fn procedure_a_equals_sluggish_eta_one() {
        let p = small_case2(1);
        let a = run_trials(&p, &PolicyConfig::new(PolicyKind::ProcedureA, 50.0, 11), 200).unwrap();
        let b = run_trials(
            &p,
            &PolicyConfig::new(PolicyKind::SluggishA { eta: 1.0 }, 50.0, 11),
            200,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reproducible() {
        let p = small_case2(4);
        let c = PolicyConfig::new(PolicyKind::SluggishA { eta: 0.3 }, 100.0, 7);
        assert_eq!(run_trial(&p, &c).unwrap(), run_trial(&p, &c).unwrap());
    }

    #[test]
    fn degenerate_threshold_stops_after_first_slot() {
        let p = small_case2(0);
        // (M − 1)·L = 1 → log threshold 0
        let c = PolicyConfig::new(PolicyKind::ProcedureA, 1.0 / 11.0, 3);
        let r = run_trial(&p, &c).unwrap();
        assert_eq!(r.tau, 1);
    }

    #[test]
    fn invalid_policy_parameters() {
        let p = small_case2(0);
        for kind in [
            PolicyKind::SluggishA { eta: 0.0 },
            PolicyKind::SluggishA { eta: 1.5 },
            PolicyKind::EpsilonUniform { epsilon: 0.0 },
        ] {
            assert!(run_trial(&p, &PolicyConfig::new(kind, 10.0, 0)).is_err());
        }
        assert!(run_trial(&p, &PolicyConfig::new(PolicyKind::ProcedureA, 0.0, 0)).is_err());
    }

    #[test]
    fn runaway_cap_reports_trace() {
        let p = small_case2(0);
        let mut c = PolicyConfig::new(PolicyKind::ProcedureA, 10.0, 0);
        c.stop_rule = StopRule::Never;
        c.max_slots = 40;
        match run_trial(&p, &c) {
            Err(Error::RunawayTrial { slots: 40, trace }) => assert_eq!(trace.len(), TRACE_LEN),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cost_accounting() {
        let p = small_case2(3);
        for t in run_trials(
            &p,
            &PolicyConfig::new(PolicyKind::SluggishA { eta: 0.5 }, 100.0, 1),
            300,
        )
        .unwrap()
        {
            assert!(t.total_cost >= t.tau as f64);
            assert!(t.switch_count <= t.tau.saturating_sub(1));
            assert_abs_diff_eq!(t.switch_cost_total, 5.0 * t.switch_count as f64, epsilon = 1e-9);
            assert_abs_diff_eq!(t.total_cost, t.tau as f64 + t.switch_cost_total, epsilon = 1e-9);
        }
    }

    #[test]
    fn switch_consumes_slot_lengthens_trials() {
        let p = small_case2(0);
        let base = PolicyConfig::new(PolicyKind::ProcedureA, 100.0, 5);
        let mut slow = base.clone();
        slow.switch_consumes_slot = true;
        let a = run_campaign(&p, &base, 2000).unwrap();
        let b = run_campaign(&p, &slow, 2000).unwrap();
        assert!(b.mean_tau > a.mean_tau);
    }

    #[test]
    fn epsilon_mixture_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lambda = [0.0, 1.0, 0.0, 0.0];
        let n = 100_000;
        let mut hits = [0usize; 4];
        for _ in 0..n {
            hits[epsilon_uniform_policy_action(&lambda, 0.1, &mut rng)] += 1;
        }
        assert_abs_diff_eq!(hits[1] as f64 / n as f64, 0.9 + 0.1 / 4.0, epsilon = 0.01);
        let mut hits = [0usize; 4];
        for _ in 0..n {
            hits[epsilon_uniform_policy_action(&lambda, 1.0, &mut rng)] += 1;
        }
        for h in hits {
            assert_abs_diff_eq!(h as f64 / n as f64, 0.25, epsilon = 0.01);
        }
    }

    #[test]
    fn summary_statistics() {
        let trials = vec![
            TrialResult {
                tau: 2,
                decision: 0,
                switch_count: 1,
                switch_cost_total: 1.0,
                total_cost: 3.0,
            },
            TrialResult {
                tau: 4,
                decision: 1,
                switch_count: 0,
                switch_cost_total: 0.0,
                total_cost: 4.0,
            },
        ];
        let s = CampaignSummary::from_trials(0, &trials).unwrap();
        assert_eq!(s.mean_tau, 3.0);
        assert_eq!(s.err_rate, 0.5);
        assert_abs_diff_eq!(s.switch_frac, 1.0 / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.cost_ratio, 7.0 / 6.0, epsilon = 1e-15);
        assert!(CampaignSummary::from_trials(0, &[]).is_err());
    }
}
