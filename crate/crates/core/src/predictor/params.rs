//! The adaptive parameter set and its fixed cascade layout.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::blocking::{BlockingParams, CutoffMode, ProbabilityMode, ValueMode};
use crate::filtering::{FilterMode, FilterParams};
use crate::tpe::TpeConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtpeParams {
    pub filter: FilterParams,
    pub blocking: BlockingParams,
    pub tpe: TpeConfig,
}

/// One predicted field of [`AtpeParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    FilterMode,
    ProbabilityMode,
    ValueMode,
    RandomProbability,
    AgeMultiplier,
    LossMultiplier,
    ClustersQuantile,
    ZscoreThreshold,
    SecondaryCutoff,
    CorrelationExponent,
    FixedProbability,
    CorrelationMultiplier,
    ElitePercentile,
    AnovaExponent,
    CatCutoff,
    AnovaMultiplier,
}

/// Prediction order: categorical fields first, then reals.
pub const CASCADE: [Field; 16] = [
    Field::FilterMode,
    Field::ProbabilityMode,
    Field::ValueMode,
    Field::RandomProbability,
    Field::AgeMultiplier,
    Field::LossMultiplier,
    Field::ClustersQuantile,
    Field::ZscoreThreshold,
    Field::SecondaryCutoff,
    Field::CorrelationExponent,
    Field::FixedProbability,
    Field::CorrelationMultiplier,
    Field::ElitePercentile,
    Field::AnovaExponent,
    Field::CatCutoff,
    Field::AnovaMultiplier,
];

pub const PROBABILITY_MODES: [ProbabilityMode; 2] = [ProbabilityMode::Fixed, ProbabilityMode::CorrelationWeighted];
pub const VALUE_MODES: [ValueMode; 2] = [ValueMode::Random, ValueMode::Elite];

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::FilterMode => "filter_mode",
            Field::ProbabilityMode => "probability_mode",
            Field::ValueMode => "value_mode",
            Field::RandomProbability => "random_probability",
            Field::AgeMultiplier => "age_multiplier",
            Field::LossMultiplier => "loss_multiplier",
            Field::ClustersQuantile => "clusters_quantile",
            Field::ZscoreThreshold => "zscore_threshold",
            Field::SecondaryCutoff => "secondary_cutoff",
            Field::CorrelationExponent => "correlation_exponent",
            Field::FixedProbability => "fixed_probability",
            Field::CorrelationMultiplier => "correlation_multiplier",
            Field::ElitePercentile => "elite_percentile",
            Field::AnovaExponent => "anova_exponent",
            Field::CatCutoff => "cat_cutoff",
            Field::AnovaMultiplier => "anova_multiplier",
        }
    }

    /// Number of classes for categorical fields, `None` for reals.
    pub fn classes(self) -> Option<usize> {
        match self {
            Field::FilterMode => Some(FilterMode::ALL.len()),
            Field::ProbabilityMode => Some(PROBABILITY_MODES.len()),
            Field::ValueMode => Some(VALUE_MODES.len()),
            _ => None,
        }
    }

    /// Inclusive range of a real field.
    pub fn range(self) -> (f64, f64) {
        match self {
            Field::RandomProbability => (0.0, 0.9),
            Field::AgeMultiplier | Field::LossMultiplier => (0.0, 1.0),
            Field::ClustersQuantile => (0.1, 1.0),
            Field::ZscoreThreshold => (-3.0, 3.0),
            Field::SecondaryCutoff | Field::CatCutoff => (-1.0, 1.0),
            Field::CorrelationExponent | Field::AnovaExponent => (0.5, 3.0),
            Field::FixedProbability => (0.0, 1.0),
            Field::CorrelationMultiplier | Field::AnovaMultiplier => (0.0, 3.0),
            Field::ElitePercentile => (0.05, 1.0),
            Field::FilterMode | Field::ProbabilityMode | Field::ValueMode => {
                let k = self.classes().unwrap();
                (0.0, (k - 1) as f64)
            }
        }
    }
}

/// Field names in cascade order; hashed into model files.
pub fn cascade_names() -> Vec<&'static str> {
    CASCADE.iter().map(|f| f.name()).collect()
}

impl AtpeParams {
    /// Static defaults used when no trained model is available.
    pub fn defaults(cutoff_mode: CutoffMode) -> Self {
        Self {
            filter: FilterParams {
                mode: FilterMode::Loss,
                random_probability: 0.0,
                age_multiplier: 0.0,
                loss_multiplier: 1.0,
                clusters_quantile: 0.3,
                zscore_threshold: 0.0,
            },
            blocking: BlockingParams {
                secondary_cutoff: 0.5,
                correlation_exponent: 2.0,
                cutoff_mode,
                probability_mode: ProbabilityMode::Fixed,
                fixed_probability: 0.5,
                correlation_multiplier: 1.0,
                value_mode: ValueMode::Elite,
                elite_percentile: 0.3,
                anova_exponent: 2.0,
                cat_cutoff: 0.5,
                anova_multiplier: 1.0,
            },
            tpe: TpeConfig::default(),
        }
    }

    /// Numeric value of `field`; categorical fields map to their class index.
    pub fn get(&self, field: Field) -> f64 {
        let (f, b) = (&self.filter, &self.blocking);
        match field {
            Field::FilterMode => FilterMode::ALL.iter().position(|&m| m == f.mode).unwrap() as f64,
            Field::ProbabilityMode => PROBABILITY_MODES.iter().position(|&m| m == b.probability_mode).unwrap() as f64,
            Field::ValueMode => VALUE_MODES.iter().position(|&m| m == b.value_mode).unwrap() as f64,
            Field::RandomProbability => f.random_probability,
            Field::AgeMultiplier => f.age_multiplier,
            Field::LossMultiplier => f.loss_multiplier,
            Field::ClustersQuantile => f.clusters_quantile,
            Field::ZscoreThreshold => f.zscore_threshold,
            Field::SecondaryCutoff => b.secondary_cutoff,
            Field::CorrelationExponent => b.correlation_exponent,
            Field::FixedProbability => b.fixed_probability,
            Field::CorrelationMultiplier => b.correlation_multiplier,
            Field::ElitePercentile => b.elite_percentile,
            Field::AnovaExponent => b.anova_exponent,
            Field::CatCutoff => b.cat_cutoff,
            Field::AnovaMultiplier => b.anova_multiplier,
        }
    }

    /// Sets `field`, clipping reals to their range and rounding class indices.
    pub fn set(&mut self, field: Field, value: f64) {
        let (lo, hi) = field.range();
        let v = value.clamp(lo, hi);
        let class = v.round() as usize;
        let (f, b) = (&mut self.filter, &mut self.blocking);
        match field {
            Field::FilterMode => f.mode = FilterMode::ALL[class],
            Field::ProbabilityMode => b.probability_mode = PROBABILITY_MODES[class],
            Field::ValueMode => b.value_mode = VALUE_MODES[class],
            Field::RandomProbability => f.random_probability = v,
            Field::AgeMultiplier => f.age_multiplier = v,
            Field::LossMultiplier => f.loss_multiplier = v,
            Field::ClustersQuantile => f.clusters_quantile = v,
            Field::ZscoreThreshold => f.zscore_threshold = v,
            Field::SecondaryCutoff => b.secondary_cutoff = v,
            Field::CorrelationExponent => b.correlation_exponent = v,
            Field::FixedProbability => b.fixed_probability = v,
            Field::CorrelationMultiplier => b.correlation_multiplier = v,
            Field::ElitePercentile => b.elite_percentile = v,
            Field::AnovaExponent => b.anova_exponent = v,
            Field::CatCutoff => b.cat_cutoff = v,
            Field::AnovaMultiplier => b.anova_multiplier = v,
        }
    }

    /// Values in cascade order.
    pub fn pack(&self) -> Vec<f64> {
        CASCADE.iter().map(|&f| self.get(f)).collect()
    }

    pub fn unpack(values: &[f64], cutoff_mode: CutoffMode) -> Self {
        let mut p = Self::defaults(cutoff_mode);
        for (&f, &v) in CASCADE.iter().zip(values) {
            p.set(f, v);
        }
        p
    }

    /// Uniform draw: the filter mode from `menu`, other categoricals from
    /// their enumerations, reals from their ranges.
    pub fn sample_uniform<R: Rng + ?Sized>(menu: &[FilterMode], cutoff_mode: CutoffMode, rng: &mut R) -> Self {
        let mut p = Self::defaults(cutoff_mode);
        for field in CASCADE {
            match field {
                Field::FilterMode => p.filter.mode = menu[rng.random_range(0..menu.len())],
                Field::ProbabilityMode | Field::ValueMode => {
                    let k = field.classes().unwrap();
                    p.set(field, rng.random_range(0..k) as f64);
                }
                _ => {
                    let (lo, hi) = field.range();
                    p.set(field, rng.random_range(lo..=hi));
                }
            }
        }
        p
    }

    /// True when every field lies in its declared range.
    pub fn is_valid(&self) -> bool {
        CASCADE.iter().all(|&f| {
            let (lo, hi) = f.range();
            let v = self.get(f);
            (lo..=hi).contains(&v)
        })
    }
}
