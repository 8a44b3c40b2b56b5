use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rulemine::data::{
    align_entries, discretize, discretize_per_stock, load_dataset, read_binned, read_panel, write_binned,
    write_edges, write_panel, BinEdges, Dataset, DiscretizedDataset, PanelIndex,
};
use rulemine::evaluation::{
    aggregate_predictions, build_portfolios, cumulative_return, read_predictions, write_cumulative,
    write_holdings, write_predictions, ReturnsPanel,
};
use rulemine::generation::{count_rules, generate_to_csv, read_timings_csv, write_timings_csv};
use rulemine::io::{read_rules_csv, write_rules_csv};
use rulemine::scaling::{fit_measurements, read_measurements, run_benchmark, write_measurements};
use rulemine::selection::select_signed;
use rulemine::synth::synthetic_dataset;
use rulemine::workload::{simulate_schedule, synth_workload};
use rulemine::{Config, Error, Executor, Result, Rule};

#[derive(Parser)]
#[command(name = "rulemine", version, about = "Rule induction over date x stock panels")]
struct Cli {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Binned {
    /// Raw features panel; discretized on the fly.
    #[arg(long, conflicts_with = "binned", required_unless_present = "binned")]
    features: Option<PathBuf>,
    /// Panel of bin indices written by `discretize`.
    #[arg(long)]
    binned: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Quantile-discretize a features panel.
    Discretize {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the cut points (global quantiles only).
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    /// Print candidate counts per rule length.
    Count {
        #[arg(long)]
        d: usize,
    },
    /// Enumerate, gate and write surviving rules.
    Generate {
        #[arg(long)]
        target: PathBuf,
        #[command(flatten)]
        input: Binned,
        #[arg(long)]
        out: PathBuf,
        /// Per-task timing rows.
        #[arg(long)]
        timings: Option<PathBuf>,
    },
    /// Covering selection over a rules file.
    Select {
        #[arg(long)]
        rules: PathBuf,
        #[command(flatten)]
        input: Binned,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate rule conclusions into a prediction panel.
    Predict {
        #[arg(long)]
        rules: PathBuf,
        #[command(flatten)]
        input: Binned,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monthly top-k long-only backtest.
    Backtest {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        returns: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        holdings: PathBuf,
    },
    /// Time generation at several worker counts.
    Bench {
        #[arg(long)]
        target: PathBuf,
        #[command(flatten)]
        input: Binned,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
        workers: Vec<usize>,
        #[arg(long, default_value_t = 4)]
        repeats: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit Amdahl's law to a measurements file.
    FitAmdahl {
        #[arg(long)]
        measurements: PathBuf,
    },
    /// Greedy list-scheduling makespans for a synthetic or recorded workload.
    Simulate {
        #[arg(long, default_value_t = 4000)]
        tasks: usize,
        #[arg(long, default_value_t = 0.99)]
        fast_fraction: f64,
        #[arg(long, default_value_t = 50.0)]
        bump_mode: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use recorded task durations from `generate --timings` instead.
        #[arg(long)]
        timings: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,10,40,100,400")]
        workers: Vec<usize>,
    },
    /// Write a seeded synthetic panel (target, features, returns).
    SynthData {
        #[arg(long, default_value_t = 60)]
        dates: usize,
        #[arg(long, default_value_t = 20)]
        stocks: usize,
        #[arg(long, default_value_t = 4)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn parse_overrides(items: &[String]) -> Result<Vec<(String, String)>> {
    items
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {s:?}")))
        })
        .collect()
}

fn features_only(path: &Path) -> Result<Dataset> {
    let table = read_panel(path)?;
    let n = table.entries.len();
    Dataset::new(
        PanelIndex::new(table.entries)?,
        vec![0.0; n],
        table.names,
        table.columns,
    )
}

fn discretize_with(ds: &Dataset, cfg: &Config) -> Result<DiscretizedDataset> {
    if cfg.discretize_per_stock {
        discretize_per_stock(ds, cfg.m_n)
    } else {
        discretize(ds, &BinEdges::fit(ds, cfg.m_n)?)
    }
}

fn load_binned(input: &Binned, cfg: &Config) -> Result<DiscretizedDataset> {
    match (&input.features, &input.binned) {
        (_, Some(b)) => read_binned(b, cfg.m_n),
        (Some(f), None) => discretize_with(&features_only(f)?, cfg),
        (None, None) => Err(Error::InvalidArgument(
            "one of --features or --binned is required".into(),
        )),
    }
}

/// Discretized features plus the aligned target.
fn load_training(target: &Path, input: &Binned, cfg: &Config) -> Result<(DiscretizedDataset, Vec<f64>)> {
    match (&input.features, &input.binned) {
        (Some(f), None) => {
            let ds = load_dataset(target, f)?;
            let dd = discretize_with(&ds, cfg)?;
            Ok((dd, ds.y().to_vec()))
        }
        _ => {
            let dd = load_binned(input, cfg)?;
            let t = read_panel(target)?;
            if t.names.len() != 1 {
                return Err(Error::Parse {
                    path: target.into(),
                    record: 0,
                    message: format!("target file must have one value column, found {}", t.names.len()),
                });
            }
            align_entries(&t.entries, dd.index().entries(), "binned file")?;
            Ok((dd, t.columns.into_iter().next().expect("one column")))
        }
    }
}

fn read_rules(path: &Path, dd: &DiscretizedDataset) -> Result<Vec<Rule>> {
    Ok(read_rules_csv(path, dd)?.into_iter().map(|r| r.rule).collect())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = Config::load(cli.config.as_deref(), &parse_overrides(&cli.set)?)?;
    match cli.command {
        Command::Discretize { features, out, edges } => {
            let ds = features_only(&features)?;
            let dd = discretize_with(&ds, &cfg)?;
            write_binned(&dd, &out)?;
            if let Some(path) = edges {
                if cfg.discretize_per_stock {
                    return Err(Error::InvalidArgument(
                        "--edges is not available with per-stock discretization".into(),
                    ));
                }
                write_edges(&BinEdges::fit(&ds, cfg.m_n)?, ds.feature_names(), &path)?;
            }
            println!("discretized n={} d={} m_n={}", dd.n(), dd.d(), dd.m_n());
        }
        Command::Count { d } => {
            let counts = count_rules(d, cfg.m_n, cfg.l_max, cfg.interval_mode)?;
            for l in &counts.lengths {
                println!(
                    "length={} rulesets={} rules_per_ruleset={} rules={}",
                    l.length, l.rulesets, l.rules_per_ruleset, l.rules
                );
            }
            println!("total={}", counts.total);
        }
        Command::Generate {
            target,
            input,
            out,
            timings,
        } => {
            let (dd, y) = load_training(&target, &input, &cfg)?;
            let generation = generate_to_csv(&dd, &y, &cfg.generation(), &out)?;
            if let Some(path) = timings {
                write_timings_csv(&path, &generation.report.tasks)?;
            }
            for l in &generation.report.lengths {
                println!(
                    "length={} tasks={} nonempty_rulesets={} candidates={} survivors={}",
                    l.length, l.tasks, l.nonempty_rulesets, l.candidates, l.survivors
                );
            }
            println!("seconds={}", generation.report.total_seconds);
        }
        Command::Select { rules, input, out } => {
            let dd = load_binned(&input, &cfg)?;
            let rules = read_rules(&rules, &dd)?;
            let exec = Executor::new(cfg.workers)?;
            let selected = select_signed(&rules, &dd, &cfg.selection()?, &exec)?;
            write_rules_csv(&out, &selected, dd.feature_names())?;
            println!("selected={} of {}", selected.len(), rules.len());
        }
        Command::Predict { rules, input, out } => {
            let dd = load_binned(&input, &cfg)?;
            let rules = read_rules(&rules, &dd)?;
            let exec = Executor::new(cfg.workers)?;
            let panel = aggregate_predictions(&rules, &dd, &exec)?;
            write_predictions(&panel, &out)?;
            let covered = panel.values.iter().filter(|v| v.is_some()).count();
            println!("predicted={covered} of {}", panel.values.len());
        }
        Command::Backtest {
            predictions,
            returns,
            out,
            holdings,
        } => {
            let panel = read_predictions(&predictions)?;
            let returns = ReturnsPanel::load(&returns)?;
            let series = build_portfolios(&panel, cfg.top_k)?;
            let cum = cumulative_return(&series, &returns, cfg.compound)?;
            write_cumulative(&cum, &out)?;
            write_holdings(&series, &holdings)?;
            let last = cum.last().map_or(0.0, |c| c.1);
            println!(
                "months={} days={} cumulative_return={last}",
                series.holdings.len(),
                cum.len()
            );
        }
        Command::Bench {
            target,
            input,
            workers,
            repeats,
            out,
        } => {
            let (dd, y) = load_training(&target, &input, &cfg)?;
            let ms = run_benchmark(&dd, &y, &cfg.generation(), &workers, repeats)?;
            write_measurements(&out, &ms)?;
            for m in &ms {
                println!("workers={} repeat={} seconds={}", m.workers, m.repeat, m.seconds);
            }
        }
        Command::FitAmdahl { measurements } => {
            let fit = fit_measurements(&read_measurements(&measurements)?)?;
            println!("{fit}");
        }
        Command::Simulate {
            tasks,
            fast_fraction,
            bump_mode,
            seed,
            timings,
            workers,
        } => {
            let durations = match timings {
                Some(path) => read_timings_csv(&path)?,
                None => synth_workload(tasks, fast_fraction, bump_mode, seed)?.durations,
            };
            for w in workers {
                let makespan = simulate_schedule(&durations, w)?;
                println!("workers={w} makespan={makespan}");
            }
        }
        Command::SynthData {
            dates,
            stocks,
            d,
            seed,
            out_dir,
        } => {
            std::fs::create_dir_all(&out_dir).map_err(|e| Error::Io {
                path: out_dir.clone(),
                source: e,
            })?;
            let ds = synthetic_dataset(dates, stocks, d, seed)?;
            let y = [ds.y().to_vec()];
            write_panel(&out_dir.join("target.csv"), ds.index(), &["y".to_string()], &y)?;
            write_panel(&out_dir.join("returns.csv"), ds.index(), &["ret".to_string()], &y)?;
            write_panel(
                &out_dir.join("features.csv"),
                ds.index(),
                ds.feature_names(),
                ds.features(),
            )?;
            println!("wrote n={} d={} to {}", ds.n(), ds.d(), out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {msg}", e.kind());
            ExitCode::FAILURE
        }
    }
}
