//! Benchmark experiments: many seeded rounds per (benchmark, variant) pair,
//! summarized into CSV tables.

pub mod plot;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::atpe::{OptimizerSession, Variant};
use crate::benchmarks::Benchmark;
use crate::filtering::FilterMode;
use crate::predictor::ParamPredictor;
use crate::rng::stable_hash;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("rounds and steps must both be at least 1")]
    EmptyProtocol,
    #[error("no benchmarks or no variants selected")]
    NothingToRun,
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub benchmarks: Vec<Benchmark>,
    pub variants: Vec<Variant>,
    pub rounds: usize,
    pub steps: usize,
    pub seed: u64,
    pub model: Option<PathBuf>,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.rounds == 0 || self.steps == 0 {
            return Err(HarnessError::EmptyProtocol);
        }
        if self.benchmarks.is_empty() || self.variants.is_empty() {
            return Err(HarnessError::NothingToRun);
        }
        Ok(())
    }
}

/// Seed of one round; depends only on its own coordinates.
pub fn round_seed(base: u64, benchmark: Benchmark, variant: Variant, round: usize) -> u64 {
    stable_hash(&[
        "round",
        &base.to_string(),
        benchmark.name(),
        variant.name(),
        &round.to_string(),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult {
    /// Incumbent loss after each step.
    pub trace: Vec<f64>,
    /// Filter modes chosen at adaptive steps.
    pub filter_counts: BTreeMap<FilterMode, usize>,
}

impl RoundResult {
    pub fn final_loss(&self) -> f64 {
        *self.trace.last().expect("at least one step")
    }
}

pub fn run_round(
    benchmark: Benchmark,
    variant: Variant,
    predictor: Arc<dyn ParamPredictor>,
    seed: u64,
    steps: usize,
) -> RoundResult {
    let mut session = OptimizerSession::new(benchmark.space(), variant, predictor, seed);
    let mut trace = Vec::with_capacity(steps);
    let mut filter_counts = BTreeMap::new();
    for _ in 0..steps {
        let config = session.ask();
        if let Some(step) = session.last_step() {
            *filter_counts.entry(step.params.filter.mode).or_insert(0) += 1;
        }
        let loss = benchmark
            .evaluate(&config.as_reals())
            .expect("suggestions stay inside the benchmark domain");
        session.tell(config, loss).expect("benchmark losses are finite");
        trace.push(session.incumbent().expect("at least one trial").loss);
    }
    RoundResult { trace, filter_counts }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub best: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        assert!(n > 0);
        let mean = values.iter().sum::<f64>() / n as f64;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            median,
            std,
            best: sorted[0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub benchmark: Benchmark,
    pub variant: Variant,
    pub rounds: Vec<RoundResult>,
}

impl CellResult {
    pub fn losses(&self) -> Vec<f64> {
        self.rounds.iter().map(RoundResult::final_loss).collect()
    }

    pub fn summary(&self) -> Summary {
        Summary::of(&self.losses())
    }

    /// Relative frequency of each chosen filter mode; empty when the
    /// adaptive layer never ran.
    pub fn filter_frequencies(&self) -> BTreeMap<FilterMode, f64> {
        let mut counts: BTreeMap<FilterMode, usize> = BTreeMap::new();
        for r in &self.rounds {
            for (&m, &c) in &r.filter_counts {
                *counts.entry(m).or_insert(0) += c;
            }
        }
        let total: usize = counts.values().sum();
        counts
            .into_iter()
            .map(|(m, c)| (m, c as f64 / total as f64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub cells: Vec<CellResult>,
}

impl ExperimentResult {
    pub fn cell(&self, benchmark: Benchmark, variant: Variant) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.benchmark == benchmark && c.variant == variant)
    }
}

/// Runs every (benchmark, variant, round) in parallel. The result does not
/// depend on scheduling.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    predictor: Arc<dyn ParamPredictor>,
) -> Result<ExperimentResult, HarnessError> {
    cfg.validate()?;
    let mut tasks = Vec::new();
    for &b in &cfg.benchmarks {
        for &v in &cfg.variants {
            for r in 0..cfg.rounds {
                tasks.push((b, v, r));
            }
        }
    }
    let rounds: Vec<RoundResult> = tasks
        .par_iter()
        .map(|&(b, v, r)| run_round(b, v, predictor.clone(), round_seed(cfg.seed, b, v, r), cfg.steps))
        .collect();
    let mut rounds = rounds.into_iter();
    let mut cells = Vec::new();
    for &b in &cfg.benchmarks {
        for &v in &cfg.variants {
            cells.push(CellResult {
                benchmark: b,
                variant: v,
                rounds: rounds.by_ref().take(cfg.rounds).collect(),
            });
        }
    }
    Ok(ExperimentResult { cells })
}

/// Writes `summary.csv`, `traces.csv` and `filters.csv` into `out`.
pub fn summarize(result: &ExperimentResult, out: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(out)?;

    let mut w = csv::Writer::from_path(out.join("summary.csv"))?;
    w.write_record(["benchmark", "variant", "rounds", "mean", "median", "std", "best"])?;
    for c in &result.cells {
        let s = c.summary();
        w.write_record([
            c.benchmark.name().to_string(),
            c.variant.name().to_string(),
            c.rounds.len().to_string(),
            s.mean.to_string(),
            s.median.to_string(),
            s.std.to_string(),
            s.best.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join("traces.csv"))?;
    w.write_record(["benchmark", "variant", "round", "step", "incumbent"])?;
    for c in &result.cells {
        for (r, round) in c.rounds.iter().enumerate() {
            for (s, v) in round.trace.iter().enumerate() {
                w.write_record([
                    c.benchmark.name().to_string(),
                    c.variant.name().to_string(),
                    r.to_string(),
                    (s + 1).to_string(),
                    v.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join("filters.csv"))?;
    w.write_record(["variant", "benchmark", "mode", "frequency"])?;
    for c in &result.cells {
        for (mode, freq) in c.filter_frequencies() {
            w.write_record([
                c.variant.name().to_string(),
                c.benchmark.name().to_string(),
                mode.name().to_string(),
                freq.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::StaticDefaults;
    use crate::rng::RngStream;

    #[test]
    fn summary_arithmetic() {
        let s = Summary::of(&[1.0, 2.0, 3.0]);
        assert_eq!((s.mean, s.median), (2.0, 2.0));
        let s = Summary::of(&[1.0, 2.0, 3.0, 100.0]);
        assert_eq!((s.mean, s.median, s.best), (26.5, 2.5, 1.0));
    }

    #[test]
    fn single_step_round_is_the_prior_sample() {
        for b in Benchmark::ALL {
            for v in [Variant::Tpe, Variant::Atpe] {
                let seed = round_seed(1, b, v, 0);
                let r = run_round(b, v, Arc::new(StaticDefaults), seed, 1);
                let prior = b.space().sample_prior(&mut RngStream::new(seed, 0));
                assert_eq!(r.final_loss(), b.evaluate(&prior.as_reals()).unwrap());
            }
        }
    }

    #[test]
    fn seeds_are_independent_of_other_cells() {
        let a = round_seed(42, Benchmark::Branin, Variant::Atpe, 3);
        assert_eq!(a, round_seed(42, Benchmark::Branin, Variant::Atpe, 3));
        assert_ne!(a, round_seed(42, Benchmark::Branin, Variant::Atpe, 4));
        assert_ne!(a, round_seed(42, Benchmark::Levy, Variant::Atpe, 3));
    }

    #[test]
    fn invalid_config() {
        let cfg = ExperimentConfig {
            benchmarks: vec![Benchmark::Forrester],
            variants: vec![Variant::Tpe],
            rounds: 0,
            steps: 5,
            seed: 0,
            model: None,
            out: PathBuf::from("unused"),
        };
        assert!(matches!(cfg.validate(), Err(HarnessError::EmptyProtocol)));
    }
}
