//! Evaluated trials and the append-only history.

use serde::{Deserialize, Serialize};

use crate::space::Config;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HistoryError {
    #[error("loss must be finite, got {0}")]
    NonFiniteLoss(f64),
    #[error("trial ids must be strictly increasing ({prev} then {next})")]
    NonIncreasingIds { prev: u64, next: u64 },
}

/// One evaluated configuration. Losses follow the minimization convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub id: u64,
    pub config: Config,
    pub loss: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    trials: Vec<Trial>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a history from trials whose ids are strictly increasing.
    pub fn from_trials(trials: Vec<Trial>) -> Result<Self, HistoryError> {
        for w in trials.windows(2) {
            if w[1].id <= w[0].id {
                return Err(HistoryError::NonIncreasingIds {
                    prev: w[0].id,
                    next: w[1].id,
                });
            }
        }
        if let Some(t) = trials.iter().find(|t| !t.loss.is_finite()) {
            return Err(HistoryError::NonFiniteLoss(t.loss));
        }
        Ok(Self { trials })
    }

    /// Appends a trial with the next id and returns that id.
    pub fn push(&mut self, config: Config, loss: f64) -> Result<u64, HistoryError> {
        if !loss.is_finite() {
            return Err(HistoryError::NonFiniteLoss(loss));
        }
        let id = self.trials.last().map_or(0, |t| t.id + 1);
        let iteration = self.trials.len();
        self.trials.push(Trial {
            id,
            config,
            loss,
            iteration,
        });
        Ok(id)
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn losses(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.loss).collect()
    }

    /// Indices into `trials()` sorted by ascending loss, ties by id.
    pub fn rank_by_loss(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.trials.len()).collect();
        idx.sort_by(|&a, &b| {
            let (ta, tb) = (&self.trials[a], &self.trials[b]);
            ta.loss.total_cmp(&tb.loss).then(ta.id.cmp(&tb.id))
        });
        idx
    }

    /// Lowest-loss trial; the earliest one wins ties.
    pub fn best(&self) -> Option<&Trial> {
        self.rank_by_loss().first().map(|&i| &self.trials[i])
    }

    /// Subsequence selected by sorted, unique positions.
    pub fn select(&self, positions: &[usize]) -> History {
        History {
            trials: positions.iter().map(|&i| self.trials[i].clone()).collect(),
        }
    }

    /// Same trials restricted to the listed dimensions.
    pub fn project(&self, dims: &[usize]) -> History {
        History {
            trials: self
                .trials
                .iter()
                .map(|t| Trial {
                    config: t.config.project(dims),
                    ..t.clone()
                })
                .collect(),
        }
    }
}
