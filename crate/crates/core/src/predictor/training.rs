//! Training data from random-parameter runs on surrogate objectives.
//!
//! Every run draws fresh parameters at each adaptive step. Only the runs
//! that finish in the best quartile for their function are kept, so the
//! models learn to imitate parameter choices that worked.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use super::gbdt::{fit, GbdtConfig, Objective};
use super::params::{AtpeParams, CASCADE};
use super::{FieldModel, ParamModel, UniformRandom};
use crate::atpe::{OptimizerSession, Variant};
use crate::rng::stable_hash;
use crate::statistics::StatisticsVector;
use crate::surrogate::SurrogateFunction;

pub const MIN_EXAMPLES: usize = 50;

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("need at least {MIN_EXAMPLES} training examples, got {0}; use the static defaults instead")]
    TooFewExamples(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub features: StatisticsVector,
    pub target: AtpeParams,
    /// `1 - rank / (runs - 1)` of the producing run, in `[0, 1]`.
    pub quality: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingOptions {
    pub runs: usize,
    pub steps: usize,
    pub variant: Variant,
    pub seed: u64,
}

impl Default for TrainingOptions {
    fn default() -> Self {
        Self {
            runs: 8,
            steps: 50,
            variant: Variant::Atpe,
            seed: 0,
        }
    }
}

/// Runs kept for training as `(run index, quality)`, best first: the best
/// `ceil(runs / 4)` by final loss, ties to the lower run index.
pub fn select_runs(final_losses: &[f64]) -> Vec<(usize, f64)> {
    let r = final_losses.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| final_losses[a].total_cmp(&final_losses[b]).then(a.cmp(&b)));
    let keep = r.div_ceil(4);
    let denom = (r.max(2) - 1) as f64;
    order
        .into_iter()
        .take(keep)
        .enumerate()
        .map(|(rank, run)| (run, 1.0 - rank as f64 / denom))
        .collect()
}

fn run_once(f: &SurrogateFunction, opts: &TrainingOptions, seed: u64) -> (f64, Vec<(StatisticsVector, AtpeParams)>) {
    let mut session = OptimizerSession::new(f.space(), opts.variant, Arc::new(UniformRandom), seed);
    let mut records = Vec::new();
    for _ in 0..opts.steps {
        let config = session.ask();
        if let Some(step) = session.last_step() {
            records.push((step.stats.clone(), step.params));
        }
        let loss = f.evaluate_config(&config);
        session.tell(config, loss).expect("surrogate losses are finite");
    }
    (session.incumbent().map_or(f64::INFINITY, |t| t.loss), records)
}

/// Builds examples for every function, in corpus order.
pub fn build_training_set(corpus: &[SurrogateFunction], opts: &TrainingOptions) -> Vec<TrainingExample> {
    assert!(!corpus.is_empty(), "corpus is empty");
    assert!(opts.runs >= 4, "at least four runs per function are required");
    assert!(opts.variant.is_adaptive(), "training needs an adaptive variant");
    let per_function: Vec<Vec<TrainingExample>> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let runs: Vec<(f64, Vec<(StatisticsVector, AtpeParams)>)> = (0..opts.runs)
                .map(|r| {
                    let seed = stable_hash(&[&opts.seed.to_string(), &i.to_string(), &r.to_string()]);
                    run_once(f, opts, seed)
                })
                .collect();
            let finals: Vec<f64> = runs.iter().map(|r| r.0).collect();
            select_runs(&finals)
                .into_iter()
                .flat_map(|(run, quality)| {
                    runs[run].1.iter().map(move |(features, target)| TrainingExample {
                        features: features.clone(),
                        target: *target,
                        quality,
                    })
                })
                .collect()
        })
        .collect();
    per_function.into_iter().flatten().collect()
}

/// Fits one ensemble per cascade field (per class for categorical fields),
/// weighting examples by quality. Earlier fields enter as their true values.
pub fn train(examples: &[TrainingExample], cfg: &GbdtConfig) -> Result<ParamModel, TrainError> {
    if examples.len() < MIN_EXAMPLES {
        return Err(TrainError::TooFewExamples(examples.len()));
    }
    let packed: Vec<Vec<f64>> = examples.iter().map(|e| e.target.pack()).collect();
    let weights: Vec<f64> = examples.iter().map(|e| e.quality).collect();
    let fields = CASCADE
        .par_iter()
        .enumerate()
        .map(|(j, field)| {
            let x: Vec<Vec<f64>> = examples
                .iter()
                .zip(&packed)
                .map(|(e, p)| {
                    let mut row = e.features.values().to_vec();
                    row.extend_from_slice(&p[..j]);
                    row
                })
                .collect();
            let targets: Vec<f64> = packed.iter().map(|p| p[j]).collect();
            match field.classes() {
                None => FieldModel::Regression(fit(&x, &targets, &weights, Objective::SquaredError, cfg)),
                Some(k) => FieldModel::Classification(
                    (0..k)
                        .map(|class| {
                            let y: Vec<f64> = targets
                                .iter()
                                .map(|&t| if t as usize == class { 1.0 } else { 0.0 })
                                .collect();
                            fit(&x, &y, &weights, Objective::Logistic, cfg)
                        })
                        .collect(),
                ),
            }
        })
        .collect();
    Ok(ParamModel { fields })
}
