//! Subcommand implementations. Each reads its parameters from a [`Config`],
//! rejects unknown keys before doing any work, and writes tidy CSV files
//! into the output directory.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use asht_core::engine::{run_campaign, PolicyConfig, PolicyKind, TestProblem, DEFAULT_MAX_SLOTS};
use asht_core::estimator::{bias_surface, offset_bias, optimal_offset};
use asht_core::io::{
    read_counts_file, read_pairs_file, read_rates_file, read_times_file, write_pairs, write_rates, write_rows,
    write_times,
};
use asht_core::poisson::RateVector;
use asht_core::stats::KS_CALIBRATION_REPLICATES;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::indices::{all_ordered_pairs, compute_indices, compute_indices_from_counts, IndexKind};
use crate::rank::analyze;
use crate::synth::{synthesize, SynthParams};

pub const DEFAULT_W: usize = 6;
pub const DEFAULT_SLOT: f64 = 0.25;
pub const DEFAULT_SHAPE: f64 = 2.7;

/// Files written and text destined for standard output.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub report: String,
    pub warnings: Vec<String>,
}

fn write_csv<T: Serialize>(out: &Path, name: &str, rows: &[T], outcome: &mut Outcome) -> CliResult<()> {
    let path = out.join(name);
    write_rows(BufWriter::new(File::create(&path)?), rows)?;
    outcome.files.push(path);
    Ok(())
}

fn prepare(out: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

fn geometry(cfg: &Config) -> CliResult<(usize, f64)> {
    Ok((cfg.get("W", DEFAULT_W)?, cfg.get("slot", DEFAULT_SLOT)?))
}

// ---------------------------------------------------------------- indices

pub fn indices(cfg: &Config, out: &Path) -> CliResult<Outcome> {
    let rates_path = cfg.optional::<String>("rates")?;
    let counts_path = cfg.optional::<String>("counts")?;
    let pairs_path = cfg.optional::<String>("pairs")?;
    let (w, slot) = geometry(cfg)?;
    cfg.check_all_used()?;

    let rows = match (rates_path, counts_path) {
        (Some(r), None) => {
            let rates = read_rates_file(Path::new(&r))?;
            let pairs = match pairs_path {
                Some(p) => read_pairs_file(Path::new(&p))?,
                None => all_ordered_pairs(&rates),
            };
            compute_indices(&rates, &pairs, w, slot)?
        }
        (None, Some(c)) => {
            let counts = read_counts_file(Path::new(&c))?;
            let pairs = match pairs_path {
                Some(p) => read_pairs_file(Path::new(&p))?,
                None => {
                    let ids: Vec<_> = counts.iter().map(|c| c.image_id.clone()).collect();
                    ids.iter()
                        .flat_map(|a| ids.iter().filter(move |b| *b != a).map(move |b| (a, b)))
                        .map(|(a, b)| asht_core::io::ImagePair {
                            oddball_id: a.clone(),
                            distractor_id: b.clone(),
                        })
                        .collect()
                }
            };
            compute_indices_from_counts(&counts, &pairs, w, slot)?
        }
        (Some(_), Some(_)) => return Err(CliError::Config("give either `rates` or `counts`, not both".into())),
        (None, None) => return Err(CliError::Config("missing required key `rates` (or `counts`)".into())),
    };
    prepare(out)?;
    let mut outcome = Outcome::default();
    write_csv(out, "indices.csv", &rows, &mut outcome)?;
    Ok(outcome)
}

// --------------------------------------------------------------- simulate

/// Policy specification: `procedure_a`, `sluggish_a:<eta>` or
/// `epsilon_uniform:<epsilon>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySpec(pub PolicyKind);

impl FromStr for PolicySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |a: Option<&str>| -> Result<f64, String> {
            a.ok_or_else(|| format!("policy `{name}` needs a parameter, e.g. `{name}:0.2`"))?
                .parse::<f64>()
                .map_err(|_| format!("bad parameter in policy `{s}`"))
        };
        let kind = match name {
            "procedure_a" if arg.is_none() => PolicyKind::ProcedureA,
            "sluggish_a" => PolicyKind::SluggishA { eta: num(arg)? },
            "epsilon_uniform" => PolicyKind::EpsilonUniform { epsilon: num(arg)? },
            _ => return Err(format!("unknown policy `{s}`")),
        };
        Ok(Self(kind))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRow {
    pub problem_id: String,
    pub policy: String,
    #[serde(rename = "L")]
    pub l: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub n_trials: usize,
    pub mean_tau: f64,
    pub se_tau: f64,
    pub mean_cost: f64,
    pub se_cost: f64,
    pub err_rate: f64,
    pub switch_frac: f64,
    pub truth: usize,
    /// Maximin divergence of the true hypothesis, nats per slot.
    pub d_i: f64,
    pub se_err: f64,
    pub se_switch_frac: f64,
    /// `E[C] / E[τ]`.
    pub cost_ratio: f64,
    pub se_cost_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct SimulateParams {
    pub problem: String,
    pub problem_id: String,
    pub rate_k: Vec<f64>,
    pub rate_l: Vec<f64>,
    pub w: usize,
    pub slot: f64,
    pub switch_cost: f64,
    pub truths: Vec<usize>,
    pub policies: Vec<PolicySpec>,
    pub thresholds: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub switch_consumes_slot: bool,
    pub max_slots: u64,
}

impl SimulateParams {
    pub fn from_config(cfg: &Config) -> CliResult<Self> {
        let problem: String = cfg.get("problem", "case2".to_string())?;
        let (w, slot) = geometry(cfg)?;
        let p = Self {
            problem_id: cfg.get("problem_id", problem.clone())?,
            problem,
            rate_k: cfg.list("rate_k", vec![20.0])?,
            rate_l: cfg.list("rate_l", vec![10.0])?,
            w,
            slot,
            switch_cost: cfg.get("switch_cost", 0.0)?,
            truths: cfg.list("truth", vec![0])?,
            policies: cfg.list("policies", vec![PolicySpec(PolicyKind::ProcedureA)])?,
            thresholds: cfg.list("L", vec![100.0, 1000.0, 10000.0])?,
            trials: cfg.get("trials", 1000)?,
            seed: cfg.seed()?,
            switch_consumes_slot: cfg.get("switch_consumes_slot", false)?,
            max_slots: cfg.get("max_slots", DEFAULT_MAX_SLOTS)?,
        };
        if p.policies.is_empty() || p.thresholds.is_empty() || p.truths.is_empty() {
            return Err(CliError::Config("`policies`, `L` and `truth` must be non-empty".into()));
        }
        Ok(p)
    }

    pub fn build_problem(&self, truth: usize) -> CliResult<TestProblem> {
        let k = RateVector::new(self.rate_k.clone())?;
        let l = RateVector::new(self.rate_l.clone())?;
        let p = match self.problem.as_str() {
            "case1" => TestProblem::case1(&k, &l, self.w, self.slot, self.switch_cost, truth)?,
            "case2" => TestProblem::case2(&k, &l, self.w, self.slot, self.switch_cost, truth)?,
            other => {
                return Err(CliError::Config(format!(
                    "key `problem`: unknown problem `{other}` (case1 or case2)"
                )))
            }
        };
        Ok(p)
    }

    /// One campaign per (truth, policy, L); every row shares the root seed,
    /// so rows differing only in policy use common random numbers.
    pub fn run(&self) -> CliResult<Vec<CampaignRow>> {
        let mut rows = Vec::new();
        for &truth in &self.truths {
            let problem = self.build_problem(truth)?;
            let d_i = problem.guard(truth).value;
            for spec in &self.policies {
                for &l in &self.thresholds {
                    let mut pc = PolicyConfig::new(spec.0, l, self.seed);
                    pc.switch_consumes_slot = self.switch_consumes_slot;
                    pc.max_slots = self.max_slots;
                    let s = run_campaign(&problem, &pc, self.trials)?;
                    rows.push(CampaignRow {
                        problem_id: self.problem_id.clone(),
                        policy: spec.0.name().into(),
                        l,
                        eta: spec.0.eta(),
                        epsilon: spec.0.epsilon(),
                        n_trials: s.n_trials,
                        mean_tau: s.mean_tau,
                        se_tau: s.se_tau,
                        mean_cost: s.mean_cost,
                        se_cost: s.se_cost,
                        err_rate: s.err_rate,
                        switch_frac: s.switch_frac,
                        truth,
                        d_i,
                        se_err: s.se_err,
                        se_switch_frac: s.se_switch_frac,
                        cost_ratio: s.cost_ratio,
                        se_cost_ratio: s.se_cost_ratio,
                    });
                }
            }
        }
        Ok(rows)
    }
}

pub fn simulate(cfg: &Config, out: &Path) -> CliResult<Outcome> {
    let params = SimulateParams::from_config(cfg)?;
    cfg.check_all_used()?;
    let rows = params.run()?;
    prepare(out)?;
    let mut outcome = Outcome::default();
    write_csv(out, "campaign.csv", &rows, &mut outcome)?;
    Ok(outcome)
}

// ------------------------------------------------------------- synthesize

pub fn synth_params(cfg: &Config) -> CliResult<SynthParams> {
    let d = SynthParams::default();
    let (w, slot) = geometry(cfg)?;
    Ok(SynthParams {
        groups: cfg.get("groups", d.groups)?,
        samples: cfg.get("samples", d.samples)?,
        neurons: cfg.get("neurons", d.neurons)?,
        shape: cfg.get("shape", d.shape)?,
        w,
        slot,
        base_rate: cfg.get("base_rate", d.base_rate)?,
        generative_index: cfg.get("generative_index", d.generative_index)?,
        seed: cfg.seed()?,
    })
}

pub fn synthesize_cmd(cfg: &Config, out: &Path) -> CliResult<Outcome> {
    let params = synth_params(cfg)?;
    cfg.check_all_used()?;
    let data = synthesize(&params)?;
    prepare(out)?;
    let create = |name: &str| -> CliResult<(PathBuf, BufWriter<File>)> {
        let path = out.join(name);
        let file = BufWriter::new(File::create(&path)?);
        Ok((path, file))
    };
    let (rates_path, f) = create("rates.csv")?;
    write_rates(f, &data.rates)?;
    let (pairs_path, f) = create("pairs.csv")?;
    write_pairs(f, &data.pairs)?;
    let (times_path, f) = create("times.csv")?;
    write_times(f, &data.times)?;
    Ok(Outcome {
        files: vec![rates_path, pairs_path, times_path],
        ..Outcome::default()
    })
}

// ------------------------------------------------------------------- rank

pub fn rank(cfg: &Config, out: &Path, truncate_to_min: bool) -> CliResult<Outcome> {
    let rates_path = cfg.path("rates")?;
    let times_path = cfg.path("times")?;
    let (w, slot) = geometry(cfg)?;
    let shape = cfg.get("shape", DEFAULT_SHAPE)?;
    let ks_replicates = cfg.get("ks_replicates", KS_CALIBRATION_REPLICATES)?;
    let truncate = truncate_to_min || cfg.get("truncate_to_min", false)?;
    let seed = cfg.seed()?;
    cfg.check_all_used()?;

    let rates = read_rates_file(&rates_path)?;
    let times = read_times_file(&times_path)?;
    let analysis = analyze(&rates, &times, w, slot, shape, truncate)?;
    let (group_rows, fit) = analysis.shape_checks(shape, ks_replicates, seed)?;
    prepare(out)?;
    let mut outcome = Outcome {
        warnings: analysis.warnings.clone(),
        ..Outcome::default()
    };
    write_csv(out, "ranking.csv", &analysis.ranking_rows(), &mut outcome)?;
    write_csv(out, "correlations.csv", &analysis.correlations()?, &mut outcome)?;
    write_csv(out, "majorization.csv", &analysis.majorization_rows(), &mut outcome)?;
    write_csv(
        out,
        "normalized_means.csv",
        &analysis.normalized_mean_rows(),
        &mut outcome,
    )?;
    write_csv(out, "groups.csv", &group_rows, &mut outcome)?;
    write_csv(out, "shape_fit.csv", std::slice::from_ref(&fit), &mut outcome)?;
    outcome.report = format!(
        "{}std-vs-mean slope {:.4} (implied shape {:.3}); {:.0}% of groups pass the Gamma({}) KS test\n",
        analysis.table(),
        fit.slope,
        fit.implied_shape,
        100.0 * fit.ks_pass_fraction,
        shape
    );
    Ok(outcome)
}

// ------------------------------------------------------ estimator surfaces

pub fn bias_surface_cmd(cfg: &Config, out: &Path) -> CliResult<Outcome> {
    let r1: Vec<f64> = cfg.list("r1", vec![3.0, 10.0, 20.0, 50.0])?;
    let r2: Vec<f64> = cfg.list("r2", vec![3.0, 10.0, 20.0, 50.0])?;
    let n: u64 = cfg.get("n", 24)?;
    let slot = cfg.get("slot", DEFAULT_SLOT)?;
    let replicates = cfg.get("replicates", 100_000)?;
    let seed = cfg.seed()?;
    cfg.check_all_used()?;
    let grid: Vec<(f64, f64)> = r1.iter().flat_map(|&a| r2.iter().map(move |&b| (a, b))).collect();
    let cells = bias_surface(&grid, n, slot, replicates, seed)?;
    prepare(out)?;
    let mut outcome = Outcome::default();
    write_csv(out, "bias_surface.csv", &cells, &mut outcome)?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetRow {
    pub r: f64,
    pub n: u64,
    pub slot: f64,
    /// Expected count `R·n·T`.
    pub mu: f64,
    /// Offset (in counts) that makes the log-count unbiased.
    pub optimal_offset: f64,
    /// `E[ln(N + ½)] − ln μ`.
    pub bias_at_half: f64,
}

pub fn offset_rows(rates: &[f64], n: u64, slot: f64) -> CliResult<Vec<OffsetRow>> {
    rates
        .iter()
        .map(|&r| {
            let mu = r * n as f64 * slot;
            Ok(OffsetRow {
                r,
                n,
                slot,
                mu,
                optimal_offset: optimal_offset(r, n, slot)?,
                bias_at_half: offset_bias(0.5, mu)?,
            })
        })
        .collect()
}

pub fn offset_curve_cmd(cfg: &Config, out: &Path) -> CliResult<Outcome> {
    let default_r = vec![0.5, 1.0, 2.0, 3.0, 5.0, 7.5, 10.0, 15.0, 20.0, 30.0, 50.0];
    let r: Vec<f64> = cfg.list("r", default_r)?;
    let n: u64 = cfg.get("n", 24)?;
    let slot = cfg.get("slot", DEFAULT_SLOT)?;
    cfg.check_all_used()?;
    let rows = offset_rows(&r, n, slot)?;
    prepare(out)?;
    let mut outcome = Outcome::default();
    write_csv(out, "offset_curve.csv", &rows, &mut outcome)?;
    Ok(outcome)
}

/// Names accepted by `generative_index`, for help text.
pub fn index_names() -> String {
    IndexKind::ALL.map(IndexKind::name).join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_specs_parse() {
        assert_eq!("procedure_a".parse::<PolicySpec>().unwrap().0, PolicyKind::ProcedureA);
        assert_eq!(
            "sluggish_a:0.2".parse::<PolicySpec>().unwrap().0,
            PolicyKind::SluggishA { eta: 0.2 }
        );
        assert_eq!(
            "epsilon_uniform: 0.1".parse::<PolicySpec>().unwrap().0,
            PolicyKind::EpsilonUniform { epsilon: 0.1 }
        );
        assert!("sluggish_a".parse::<PolicySpec>().is_err());
        assert!("procedure_b".parse::<PolicySpec>().is_err());
    }

    #[test]
    fn eta_one_reproduces_procedure_a_rows() {
        let cfg = Config::parse(
            "version = 1\nseed = 9\nL = 100\ntrials = 200\ntruth = 0, 7\npolicies = procedure_a, sluggish_a:1\n",
        )
        .unwrap();
        let rows = SimulateParams::from_config(&cfg).unwrap().run().unwrap();
        cfg.check_all_used().unwrap();
        assert_eq!(rows.len(), 4);
        for pair in rows.chunks(2) {
            let (a, b) = (&pair[0], &pair[1]);
            assert_eq!(
                (a.mean_tau, a.mean_cost, a.err_rate),
                (b.mean_tau, b.mean_cost, b.err_rate)
            );
            assert_eq!(a.switch_frac, b.switch_frac);
        }
    }

    #[test]
    fn offset_curve_is_flat_above_three() {
        let rows = offset_rows(&[0.5, 1.0, 2.0, 5.0, 20.0], 6, 1.0).unwrap();
        for r in rows.iter().filter(|r| r.mu >= 3.0) {
            assert!((r.optimal_offset - 0.5).abs() <= 0.05, "{r:?}");
        }
    }
}
