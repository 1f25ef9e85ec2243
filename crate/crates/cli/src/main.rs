use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use minlgan_cli::config::{DatasetConfig, DATA_ROOT_ENV};
use minlgan_cli::runner::run_dir;
use minlgan_cli::stability::{stability_of, write_stability, DEFAULT_TRIALS};
use minlgan_cli::{apply, report, toy, ExperimentConfig, FinishedRun, RunOptions};

#[derive(Parser)]
#[command(name = "minlgan", version, about = "Minimum-likelihood GAN anomaly detection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train, score and evaluate the experiment described by a config file.
    Run(RunArgs),
    /// Aggregate completed runs into AUC tables and figures.
    Report(ReportArgs),
    /// Draw generator samples and score maps for a run on 2-D toy data.
    PlotToy(PlotToyArgs),
    /// Sub-ensemble AUC mean and spread as a function of ensemble size.
    Stability(StabilityArgs),
    /// Apply the models of a finished run to new data.
    Score(ScoreArgs),
}

/// Overrides applied on top of a config file.
#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output root; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Keep at most this many normal rows of a tabular dataset.
    #[arg(long)]
    subsample: Option<usize>,
}

impl ConfigArgs {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let Some(path) = &self.config else { bail!("--config is required") };
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(n) = self.subsample {
            match &mut cfg.dataset {
                DatasetConfig::Tabular(t) => t.max_normals = Some(n),
                DatasetConfig::Toy(_) => bail!("--subsample applies to tabular datasets only"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Worker threads for restarts and ensemble members (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Directory that relative data paths are resolved against.
    #[arg(long, env = DATA_ROOT_ENV)]
    data_root: Option<PathBuf>,
    /// Skip the figures emitted after a successful run.
    #[arg(long)]
    no_plots: bool,
}

/// Selects a finished run either directly or through its config.
#[derive(Args)]
struct RunSelector {
    /// Run directory (`<output_dir>/<config-hash>`).
    #[arg(long, conflicts_with = "config")]
    run: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

impl RunSelector {
    fn open(&self) -> anyhow::Result<FinishedRun> {
        let dir = match &self.run {
            Some(d) => d.clone(),
            None if self.config.config.is_some() => run_dir(&self.config.load()?),
            None => bail!("pass --run <dir> or --config <file>"),
        };
        FinishedRun::open_completed(&dir).with_context(|| format!("opening run {}", dir.display()))
    }
}

#[derive(Args)]
struct ReportArgs {
    /// Output root holding the run directories.
    #[arg(long)]
    out: PathBuf,
    /// Where to write the report (default: `<out>/report`).
    #[arg(long)]
    dest: Option<PathBuf>,
}

#[derive(Args)]
struct PlotToyArgs {
    #[command(flatten)]
    select: RunSelector,
    /// Score-map resolution per axis.
    #[arg(long, default_value_t = 100)]
    grid: usize,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    select: RunSelector,
    /// Random subsets per ensemble size when they cannot all be enumerated.
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    /// Seed for subset sampling.
    #[arg(long = "subset-seed", default_value_t = 0)]
    subset_seed: u64,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    select: RunSelector,
    /// Headered delimited file containing the run's feature columns.
    #[arg(long)]
    input: PathBuf,
    /// Destination table (default: `<input>.scores.tsv`).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run(args) => {
            let cfg = args.config.load()?;
            let opts = RunOptions {
                workers: args.workers,
                data_root: args.data_root,
            };
            let record = minlgan_cli::run_experiment(&cfg, &opts)?;
            let dir = run_dir(&cfg);
            if !args.no_plots {
                let run = FinishedRun::open_completed(&dir)?;
                if run.data.feature_names.len() == 2 && cfg.is_toy() {
                    toy::emit_toy_figures(&run, 100)?;
                }
                if record.ensemble.is_some() {
                    write_stability(&stability_of(&run, DEFAULT_TRIALS, 0)?, cfg.method, &dir.join("ensemble"))?;
                }
            }
            for r in &record.restarts {
                println!("restart {} (seed {}): test AUC {:.4}", r.index, r.seed, r.test_auc);
            }
            if let Some(e) = &record.ensemble {
                println!("ensemble of {}: test AUC {:.4}, scaled {:.4}", e.members, e.test_auc_ensemble, e.test_auc_scaled_ensemble);
            }
            println!("{}", dir.display());
        }
        Command::Report(args) => {
            let runs = report::collect_runs(&args.out)?;
            let dest = args.dest.unwrap_or_else(|| args.out.join("report"));
            let files = report::emit_report(&runs, &dest)?;
            print!("{}", std::fs::read_to_string(dest.join("table.md"))?);
            log::info!("wrote {} files to {}", files.len(), dest.display());
        }
        Command::PlotToy(args) => {
            let run = args.select.open()?;
            for f in toy::emit_toy_figures(&run, args.grid)? {
                println!("{}", f.display());
            }
        }
        Command::Stability(args) => {
            let run = args.select.open()?;
            let rep = stability_of(&run, args.trials, args.subset_seed)?;
            for (mode, curve) in [("ensemble", &rep.plain), ("scaled_ensemble", &rep.scaled)] {
                for p in curve {
                    println!("{mode}\tk={}\tmean {:.4}\tstd {:.4}", p.k, p.mean_auc, p.std_auc);
                }
            }
            write_stability(&rep, run.record.method, &run.dir.join("ensemble"))?;
        }
        Command::Score(args) => {
            let run = args.select.open()?;
            let output = args
                .output
                .unwrap_or_else(|| args.input.with_extension("scores.tsv"));
            let n = apply::score_file(&run, &args.input, &output)?;
            println!("scored {n} rows into {}", output.display());
        }
    }
    Ok(())
}
