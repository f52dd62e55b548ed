use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use atpe::atpe::Variant;
use atpe::benchmarks::{self, Benchmark};
use atpe::harness::{self, plot, ExperimentConfig};
use atpe::predictor::{self, gbdt::GbdtConfig, ParamPredictor, StaticDefaults, TrainingOptions};
use atpe::statistics::write_feature_manifest;
use atpe::surrogate::{self, DEFAULT_PROBE_BUDGET};

#[derive(Parser)]
#[command(name = "atpe", version, about = "Adaptive TPE optimizer and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run benchmark experiments and write summary.csv, traces.csv, filters.csv.
    Run {
        /// Comma-separated benchmark names, or `all`.
        #[arg(long, default_value = "all")]
        benchmarks: String,
        /// Comma-separated variant names.
        #[arg(long, default_value = "tpe,atpe")]
        variants: String,
        #[arg(long, default_value_t = 50)]
        rounds: usize,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Trained parameter model; static defaults are used without one.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Also write SVG charts.
        #[arg(long)]
        plots: bool,
    },
    /// Generate a surrogate corpus and keep cluster representatives.
    Corpus {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 40)]
        representatives: usize,
        /// Variant whose atom pool is used.
        #[arg(long, default_value = "atpe")]
        variant: String,
        #[arg(long, default_value_t = DEFAULT_PROBE_BUDGET)]
        probe_budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "corpus.jsonl")]
        out: PathBuf,
    },
    /// Train a parameter model on a corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "model.bin")]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        runs: usize,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Variant whose gates apply during training.
        #[arg(long, default_value = "atpe")]
        variant: String,
    },
    /// Benchmark registry.
    Bench {
        #[arg(long)]
        list: bool,
    },
    /// Render SVG charts from a results directory.
    Plot { dir: PathBuf },
    /// Write the statistics feature manifest.
    Features {
        #[arg(long, default_value = "features.txt")]
        out: PathBuf,
    },
}

fn parse_variants(list: &str) -> Result<Vec<Variant>> {
    list.split(',')
        .map(|s| s.parse::<Variant>().map_err(anyhow::Error::msg))
        .collect()
}

fn load_predictor(model: Option<&PathBuf>) -> Result<Arc<dyn ParamPredictor>> {
    Ok(match model {
        Some(path) => Arc::new(
            predictor::load_model(path).with_context(|| format!("loading model {}", path.display()))?,
        ),
        None => Arc::new(StaticDefaults),
    })
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            benchmarks,
            variants,
            rounds,
            steps,
            seed,
            model,
            out,
            plots,
        } => {
            let cfg = ExperimentConfig {
                benchmarks: benchmarks::parse_list(&benchmarks)?,
                variants: parse_variants(&variants)?,
                rounds,
                steps,
                seed,
                model,
                out,
            };
            let predictor = load_predictor(cfg.model.as_ref())?;
            let result = harness::run_experiment(&cfg, predictor)?;
            harness::summarize(&result, &cfg.out)?;
            if plots {
                plot::plot_results(&cfg.out)?;
            }
            for c in &result.cells {
                let s = c.summary();
                println!("{:<15} {:<15} mean {:>12.6} median {:>12.6}", c.benchmark, c.variant, s.mean, s.median);
            }
        }
        Command::Corpus {
            count,
            representatives,
            variant,
            probe_budget,
            seed,
            out,
        } => {
            if representatives == 0 || count < representatives {
                bail!("need 1 <= representatives <= count");
            }
            let variant: Variant = variant.parse().map_err(anyhow::Error::msg)?;
            let corpus =
                surrogate::representative_corpus(count, representatives, &variant.atom_pool(), probe_budget, seed);
            surrogate::write_corpus(&out, &corpus)?;
            println!("wrote {} functions to {}", corpus.len(), out.display());
        }
        Command::Train {
            corpus,
            out,
            runs,
            steps,
            seed,
            variant,
        } => {
            let variant: Variant = variant.parse().map_err(anyhow::Error::msg)?;
            if !variant.is_adaptive() {
                bail!("variant `tpe` has no parameters to learn");
            }
            if runs < 4 {
                bail!("--runs must be at least 4");
            }
            let functions = surrogate::read_corpus(&corpus)?;
            if functions.is_empty() {
                bail!("corpus {} is empty", corpus.display());
            }
            let opts = TrainingOptions {
                runs,
                steps,
                variant,
                seed,
            };
            let examples = predictor::build_training_set(&functions, &opts);
            let model = predictor::train(&examples, &GbdtConfig::default())?;
            predictor::save_model(&model, &out)?;
            println!("trained on {} examples, wrote {}", examples.len(), out.display());
        }
        Command::Bench { list } => {
            if !list {
                bail!("use `atpe bench --list`");
            }
            for b in Benchmark::ALL {
                let bounds: Vec<String> = b.bounds().iter().map(|(l, h)| format!("[{l}, {h}]")).collect();
                println!("{:<15} dims {}  domain {}", b.name(), b.dims(), bounds.join(" x "));
            }
        }
        Command::Plot { dir } => {
            for path in plot::plot_results(&dir)? {
                println!("{}", path.display());
            }
        }
        Command::Features { out } => {
            write_feature_manifest(&out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}
