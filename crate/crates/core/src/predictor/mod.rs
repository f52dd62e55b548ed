//! Per-iteration prediction of the adaptive parameters from statistics.
//!
//! Parameters are predicted one at a time in [`CASCADE`] order; each field's
//! model sees the 56 statistics followed by every earlier prediction.

pub mod gbdt;
mod model_file;
mod params;
mod training;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use model_file::{layout_checksum, layout_checksum_for, load_model, save_model, ModelError, FORMAT_VERSION};
pub use params::{cascade_names, AtpeParams, Field, CASCADE, PROBABILITY_MODES, VALUE_MODES};
pub use training::{build_training_set, train, TrainError, TrainingExample, TrainingOptions, MIN_EXAMPLES};

use crate::blocking::CutoffMode;
use crate::filtering::FilterMode;
use crate::rng::RngStream;
use crate::statistics::StatisticsVector;
use gbdt::Ensemble;

/// Variant-imposed restrictions on predicted parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gates {
    pub menu: Vec<FilterMode>,
    pub cutoff_mode: CutoffMode,
}

pub trait ParamPredictor: fmt::Debug + Send + Sync {
    fn predict(&self, stats: &StatisticsVector, gates: &Gates, rng: &mut RngStream) -> AtpeParams;
}

/// Constant fallback parameters.
#[derive(Debug, Clone, Copy, Default)]
pub struct StaticDefaults;

impl ParamPredictor for StaticDefaults {
    fn predict(&self, _stats: &StatisticsVector, gates: &Gates, _rng: &mut RngStream) -> AtpeParams {
        let mut p = AtpeParams::defaults(gates.cutoff_mode);
        if !gates.menu.contains(&p.filter.mode) {
            p.filter.mode = gates.menu[0];
        }
        p
    }
}

/// Parameters drawn uniformly from their ranges at every call.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformRandom;

impl ParamPredictor for UniformRandom {
    fn predict(&self, _stats: &StatisticsVector, gates: &Gates, rng: &mut RngStream) -> AtpeParams {
        AtpeParams::sample_uniform(&gates.menu, gates.cutoff_mode, rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldModel {
    Regression(Ensemble),
    /// One-vs-rest ensembles, one per class.
    Classification(Vec<Ensemble>),
}

/// Trained cascade of per-field tree ensembles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamModel {
    pub fields: Vec<FieldModel>,
}

impl ParamModel {
    /// Cascaded prediction. Class fields take the highest-scoring allowed
    /// class (ties to the lower index); reals are clipped to their ranges.
    pub fn predict_params(&self, stats: &StatisticsVector, gates: &Gates) -> AtpeParams {
        let mut params = AtpeParams::defaults(gates.cutoff_mode);
        let mut input = stats.values().to_vec();
        for (field, model) in CASCADE.iter().zip(&self.fields) {
            let value = match model {
                FieldModel::Regression(e) => e.raw(&input),
                FieldModel::Classification(per_class) => {
                    let mut best: Option<(usize, f64)> = None;
                    for (k, e) in per_class.iter().enumerate() {
                        if *field == Field::FilterMode && !gates.menu.contains(&FilterMode::ALL[k]) {
                            continue;
                        }
                        let s = e.raw(&input);
                        if best.is_none_or(|(_, b)| s > b) {
                            best = Some((k, s));
                        }
                    }
                    best.expect("menu is non-empty").0 as f64
                }
            };
            params.set(*field, value);
            input.push(params.get(*field));
        }
        params
    }
}

impl ParamPredictor for ParamModel {
    fn predict(&self, stats: &StatisticsVector, gates: &Gates, _rng: &mut RngStream) -> AtpeParams {
        self.predict_params(stats, gates)
    }
}
