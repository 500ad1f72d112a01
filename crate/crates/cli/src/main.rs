use std::path::PathBuf;
use std::process::ExitCode;

use asht_experiment::acceptance::{self, CRITERIA};
use asht_experiment::commands::{self, Outcome};
use asht_experiment::config::Config;
use asht_experiment::error::{exit, CliError, CliResult};
use clap::{Args, Parser, Subcommand};

/// Active sequential hypothesis testing experiments for oddball visual search.
#[derive(Debug, Parser)]
#[command(name = "asht", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` config file (must declare `version = 1`).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides ASHT_OUT_DIR and the `out_dir` key).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// D̃, KL, Chernoff and L¹ indices for ordered image pairs.
    Indices {
        #[command(flatten)]
        common: Common,
        /// Rate table (`image_id, rate_1, …`).
        #[arg(long)]
        rates: Option<PathBuf>,
        /// Raw spike counts (`image_id, trial, count_1, …`) instead of rates.
        #[arg(long, conflicts_with = "rates")]
        counts: Option<PathBuf>,
        /// Pair list (`oddball_id, distractor_id`); default: all ordered pairs.
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
    /// Monte Carlo campaigns over a policy × L grid.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Synthetic rates, pairs and decision times.
    Synthesize {
        #[command(flatten)]
        common: Common,
    },
    /// Rank the indices by how well they equalize scaled decision times.
    Rank {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rates: Option<PathBuf>,
        /// Decision times (`pair_id, oddball_id, distractor_id, subject, time_s`).
        #[arg(long)]
        times: Option<PathBuf>,
        /// Truncate every group to the smallest group size instead of failing.
        #[arg(long)]
        truncate_to_min: bool,
    },
    /// Monte Carlo bias of the corrected KL estimator over a rate grid.
    BiasSurface {
        #[command(flatten)]
        common: Common,
    },
    /// Bias-cancelling offset of the log-count as a function of rate.
    OffsetCurve {
        #[command(flatten)]
        common: Common,
    },
    /// Run the acceptance suite and print a pass/fail line per criterion.
    Selftest {
        /// Run only these criteria (comma separated).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

fn load(common: &Common, files: &[(&str, &Option<PathBuf>)]) -> CliResult<(Config, PathBuf)> {
    let mut cfg = Config::load(common.config.as_deref(), &common.set)?;
    for (key, path) in files {
        if let Some(p) = path {
            cfg.set(key, &p.display().to_string());
        }
    }
    let out = cfg.out_dir(common.out_dir.as_deref())?;
    Ok((cfg, out))
}

fn selftest(only: &[usize]) -> CliResult<Outcome> {
    let ids: Vec<usize> = if only.is_empty() {
        CRITERIA.iter().map(|c| c.0).collect()
    } else {
        only.to_vec()
    };
    if let Some(bad) = ids.iter().find(|i| !(1..=CRITERIA.len()).contains(*i)) {
        return Err(CliError::Config(format!(
            "no criterion {bad}; valid ids are 1–{}",
            CRITERIA.len()
        )));
    }
    let mut failed = 0;
    for id in ids {
        let v = acceptance::run(id);
        println!("{}", v.line());
        failed += usize::from(!v.pass);
    }
    if failed > 0 {
        return Err(CliError::AcceptanceFailed { failed });
    }
    Ok(Outcome::default())
}

fn dispatch(cli: Cli) -> CliResult<Outcome> {
    match cli.command {
        Command::Indices {
            common,
            rates,
            counts,
            pairs,
        } => {
            let (cfg, out) = load(&common, &[("rates", &rates), ("counts", &counts), ("pairs", &pairs)])?;
            commands::indices(&cfg, &out)
        }
        Command::Simulate { common } => {
            let (cfg, out) = load(&common, &[])?;
            commands::simulate(&cfg, &out)
        }
        Command::Synthesize { common } => {
            let (cfg, out) = load(&common, &[])?;
            commands::synthesize_cmd(&cfg, &out)
        }
        Command::Rank {
            common,
            rates,
            times,
            truncate_to_min,
        } => {
            let (cfg, out) = load(&common, &[("rates", &rates), ("times", &times)])?;
            commands::rank(&cfg, &out, truncate_to_min)
        }
        Command::BiasSurface { common } => {
            let (cfg, out) = load(&common, &[])?;
            commands::bias_surface_cmd(&cfg, &out)
        }
        Command::OffsetCurve { common } => {
            let (cfg, out) = load(&common, &[])?;
            commands::offset_curve_cmd(&cfg, &out)
        }
        Command::Selftest { only } => selftest(&only),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    match dispatch(cli) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", outcome.report);
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::from(exit::OK)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
