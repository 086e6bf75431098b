use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use elco_cli::{
    cmd_analyze, cmd_augment, cmd_cluster, cmd_run_all, cmd_train, CliError, ConfigSources, Metric, RunConfig, Which,
};
use elco_core::synthetic::{self, SyntheticConfig};
use elco_core::write_dataset;

#[derive(Parser)]
#[command(
    name = "elco",
    version,
    about = "Elector-node graph augmentation for GCN node classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Global seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override a config key, e.g. `--set gnn.hidden=32`
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Overlapping clusters of the input graph
    Cluster,
    /// Elector synthesis, labeling and the augmented dataset
    Augment,
    /// GCN training on the original or augmented graph
    Train {
        #[arg(value_parser = ["base", "augmented"])]
        which: String,
    },
    /// Diagnostics: l2, domlabel, sparsity, ablation, embedding or all
    Analyze {
        #[arg(value_parser = ["l2", "domlabel", "sparsity", "ablation", "embedding", "all"])]
        metric: String,
    },
    /// Every stage and `report.json`
    RunAll,
    /// Write a synthetic planted-community dataset in canonical format
    Generate {
        dir: PathBuf,
        /// Generator settings as JSON, e.g. '{"num_classes": 5}'
        #[arg(long)]
        params: Option<String>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("ELCO_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("ELCO_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot start {n} worker threads: {e}")))
}

fn generate(dir: &Path, params: Option<&str>, seed: Option<u64>) -> Result<(), CliError> {
    let mut config: SyntheticConfig = match params {
        Some(p) => serde_json::from_str(p).map_err(|e| CliError::Config(format!("--params: {e}")))?,
        None => SyntheticConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let (g, splits) = synthetic::generate(&config)?;
    write_dataset(&g, &splits, dir, "synthetic", None)?;
    println!("{}", dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    if let Command::Generate { dir, params } = &cli.command {
        return generate(dir, params.as_deref(), cli.common.seed);
    }
    let config = RunConfig::resolve(&ConfigSources {
        file: cli.common.config,
        overrides: cli.common.overrides,
        seed: cli.common.seed,
        out: cli.common.out,
    })?;
    match cli.command {
        Command::Cluster => println!("{}", cmd_cluster(&config)?.display()),
        Command::Augment => println!("{}", cmd_augment(&config)?.display()),
        Command::Train { which } => {
            let which: Which = which.parse()?;
            let r = cmd_train(&config, which)?;
            println!(
                "{which}: test acc {:.4} ± {:.4} over {} trials",
                r.mean_test_acc,
                r.std_test_acc,
                r.trials.len()
            );
        }
        Command::Analyze { metric } => {
            for path in cmd_analyze(&config, metric.parse::<Metric>()?)? {
                println!("{}", path.display());
            }
        }
        Command::Generate { .. } => unreachable!("handled before config resolution"),
        Command::RunAll => {
            let r = cmd_run_all(&config)?;
            println!(
                "{}: GCN {:.4} ± {:.4}, ELCO-GCN {:.4} ± {:.4}, delta {:+.4}",
                r.dataset, r.baseline_acc, r.baseline_std, r.elco_acc, r.elco_std, r.delta_acc
            );
            println!("{}", config.out.join("report.json").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let structured = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{structured}");
            ExitCode::from(if matches!(e, CliError::Config(_)) { 2 } else { 1 })
        }
    }
}
