//! Classic Tree-structured Parzen Estimator suggest step.
//!
//! Trials are split into a small "good" group and the remaining "bad" group,
//! each group gets an independent per-dimension Parzen density (`l` and `g`),
//! and the next configuration is the candidate drawn from `l` that maximizes
//! `log l(x) - log g(x)`.

mod parzen;

pub use parzen::{
    fit_parzen, DimensionDensity, ParzenModel, SmoothedCategorical, TruncatedGaussianMixture,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::history::{History, Trial};
use crate::space::{Config, SearchSpace};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TpeError {
    #[error("history is empty; use prior sampling")]
    EmptyHistory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpeConfig {
    pub gamma: f64,
    pub n_ei_candidates: usize,
    pub good_cap: usize,
}

impl Default for TpeConfig {
    fn default() -> Self {
        Self {
            gamma: 0.25,
            n_ei_candidates: 24,
            good_cap: 25,
        }
    }
}

impl TpeConfig {
    /// Size of the good group for a history of `n` trials.
    pub fn n_good(&self, n: usize) -> usize {
        ((self.gamma * (n as f64).sqrt()).ceil() as usize).min(self.good_cap)
    }
}

/// Splits a history into good and bad trials (ascending loss, ties by id).
pub fn split_history(history: &History, cfg: &TpeConfig) -> Result<(Vec<Trial>, Vec<Trial>), TpeError> {
    if history.is_empty() {
        return Err(TpeError::EmptyHistory);
    }
    let order = history.rank_by_loss();
    let n_good = cfg.n_good(history.len());
    let trials = history.trials();
    let good = order[..n_good].iter().map(|&i| trials[i].clone()).collect();
    let bad = order[n_good..].iter().map(|&i| trials[i].clone()).collect();
    Ok((good, bad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub config: Config,
    pub score: f64,
}

/// Outcome of one suggest step including every scored candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Suggestion {
    pub config: Config,
    pub candidates: Vec<ScoredCandidate>,
}

/// Proposes the next configuration; falls back to the prior on empty history.
pub fn suggest<R: Rng + ?Sized>(
    history: &History,
    space: &SearchSpace,
    cfg: &TpeConfig,
    rng: &mut R,
) -> Config {
    suggest_with_candidates(history, space, cfg, rng).config
}

pub fn suggest_with_candidates<R: Rng + ?Sized>(
    history: &History,
    space: &SearchSpace,
    cfg: &TpeConfig,
    rng: &mut R,
) -> Suggestion {
    let (good, bad) = match split_history(history, cfg) {
        Ok(split) => split,
        Err(TpeError::EmptyHistory) => {
            return Suggestion {
                config: space.sample_prior(rng),
                candidates: Vec::new(),
            }
        }
    };
    let good_refs: Vec<&Trial> = good.iter().collect();
    let bad_refs: Vec<&Trial> = bad.iter().collect();
    let below = fit_parzen(&good_refs, space);
    let above = fit_parzen(&bad_refs, space);

    let mut candidates = Vec::with_capacity(cfg.n_ei_candidates);
    for _ in 0..cfg.n_ei_candidates.max(1) {
        let config = Config::new(
            (0..space.len())
                .map(|d| below.sample_dim(space, d, rng))
                .collect(),
        );
        let score = (0..space.len())
            .map(|d| {
                let v = config.get(d);
                below.log_density(space, d, &v) - above.log_density(space, d, &v)
            })
            .sum();
        candidates.push(ScoredCandidate { config, score });
    }

    let mut best = 0;
    for (i, c) in candidates.iter().enumerate().skip(1) {
        if c.score > candidates[best].score {
            best = i;
        }
    }
    Suggestion {
        config: candidates[best].config.clone(),
        candidates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::space::{HyperparameterSpec, Value};

    fn history_1d(points: &[(f64, f64)]) -> History {
        let mut h = History::new();
        for &(x, loss) in points {
            h.push(Config::new(vec![Value::Real(x)]), loss).unwrap();
        }
        h
    }

    #[test]
    fn split_single_trial() {
        let h = history_1d(&[(0.3, 1.0)]);
        let (good, bad) = split_history(&h, &TpeConfig::default()).unwrap();
        assert_eq!(good.len(), 1);
        assert!(bad.is_empty());
    }

    #[test]
    fn split_size_formula() {
        assert_eq!(TpeConfig::default().n_good(100), 3);
        let pts: Vec<(f64, f64)> = (0..100).map(|i| (i as f64 / 100.0, (i * 37 % 100) as f64)).collect();
        let (good, bad) = split_history(&history_1d(&pts), &TpeConfig::default()).unwrap();
        assert_eq!((good.len(), bad.len()), (3, 97));
        assert!(good.iter().map(|t| t.loss).collect::<Vec<_>>() == vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn split_cap() {
        let cfg = TpeConfig {
            gamma: 0.9,
            good_cap: 5,
            ..Default::default()
        };
        assert_eq!(cfg.n_good(10_000), 5);
    }

    #[test]
    fn split_tie_break_by_id() {
        let mut h = History::new();
        for i in 0..8 {
            let loss = if i == 3 || i == 7 { 0.0 } else { 10.0 + i as f64 };
            h.push(Config::new(vec![Value::Real(0.1)]), loss).unwrap();
        }
        let cfg = TpeConfig {
            gamma: 0.25,
            good_cap: 1,
            n_ei_candidates: 24,
        };
        let (good, _) = split_history(&h, &cfg).unwrap();
        assert_eq!(good.len(), 1);
        assert_eq!(good[0].id, 3);
    }

    #[test]
    fn split_empty_errors() {
        assert_eq!(
            split_history(&History::new(), &TpeConfig::default()),
            Err(TpeError::EmptyHistory)
        );
    }

    #[test]
    fn empty_history_returns_prior_draw() {
        let space = SearchSpace::unit_cube(3);
        let mut r1 = RngStream::new(5, 0);
        let mut r2 = RngStream::new(5, 0);
        let c = suggest(&History::new(), &space, &TpeConfig::default(), &mut r1);
        assert!(space.contains(&c));
        assert_eq!(c, space.sample_prior(&mut r2));
    }

    #[test]
    fn suggestion_prefers_good_region() {
        let space = SearchSpace::unit_cube(1);
        let mut pts = Vec::new();
        for i in 0..5 {
            pts.push((0.08 + 0.01 * i as f64, 0.0 + i as f64 * 0.01));
        }
        for i in 0..30 {
            pts.push((0.85 + 0.003 * i as f64, 5.0 + i as f64));
        }
        let h = history_1d(&pts);
        let below_half = (0..100)
            .filter(|&s| {
                let mut rng = RngStream::new(s, 1);
                match suggest(&h, &space, &TpeConfig::default(), &mut rng).get(0) {
                    Value::Real(x) => x < 0.5,
                    _ => unreachable!(),
                }
            })
            .count();
        assert!(below_half >= 95, "{below_half}");
    }

    #[test]
    fn mixed_space_suggestions_in_domain() {
        let space = SearchSpace::new(vec![
            HyperparameterSpec::log_uniform("lr", 1e-5, 1e-1),
            HyperparameterSpec::integer("layers", 1, 6),
            HyperparameterSpec::categorical("act", &["relu", "tanh", "gelu"]),
        ])
        .unwrap();
        let mut rng = RngStream::new(17, 0);
        let mut h = History::new();
        for i in 0..40 {
            let c = suggest(&h, &space, &TpeConfig::default(), &mut rng);
            assert!(space.contains(&c), "{c:?}");
            h.push(c, (i % 7) as f64).unwrap();
        }
    }

    #[test]
    fn suggest_is_pure_given_rng() {
        let space = SearchSpace::unit_cube(2);
        let mut rng = RngStream::new(2, 0);
        let mut h = History::new();
        for _ in 0..15 {
            let c = space.sample_prior(&mut rng);
            let l = c.as_reals().iter().sum::<f64>();
            h.push(c, l).unwrap();
        }
        let a = suggest(&h, &space, &TpeConfig::default(), &mut RngStream::new(8, 8));
        let b = suggest(&h, &space, &TpeConfig::default(), &mut RngStream::new(8, 8));
        assert_eq!(a, b);
    }
}
