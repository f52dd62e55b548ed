//! History reduction applied before the TPE step.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::history::History;
use crate::kmeans::kmeans;
use crate::space::SearchSpace;

pub const KMEANS_ITERATIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    None,
    Random,
    Age,
    Loss,
    Clustering,
    Zscore,
}

impl FilterMode {
    pub const ALL: [FilterMode; 6] = [
        FilterMode::None,
        FilterMode::Random,
        FilterMode::Age,
        FilterMode::Loss,
        FilterMode::Clustering,
        FilterMode::Zscore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterMode::None => "none",
            FilterMode::Random => "random",
            FilterMode::Age => "age",
            FilterMode::Loss => "loss",
            FilterMode::Clustering => "clustering",
            FilterMode::Zscore => "zscore",
        }
    }
}

impl fmt::Display for FilterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for FilterMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FilterMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown filter mode `{s}`"))
    }
}

/// Filter settings; only the fields belonging to `mode` are consulted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub mode: FilterMode,
    /// Per-trial elimination probability in `random` mode, `[0, 1]`.
    pub random_probability: f64,
    /// `age` mode multiplier, `>= 0`.
    pub age_multiplier: f64,
    /// `loss` mode multiplier, `>= 0`.
    pub loss_multiplier: f64,
    /// Clusters per trial in `clustering` mode, `(0, 1]`.
    pub clusters_quantile: f64,
    /// Signed threshold for `zscore` mode, `[-3, 3]`.
    pub zscore_threshold: f64,
}

impl FilterParams {
    pub fn none() -> Self {
        Self {
            mode: FilterMode::None,
            random_probability: 0.0,
            age_multiplier: 0.0,
            loss_multiplier: 0.0,
            clusters_quantile: 1.0,
            zscore_threshold: 0.0,
        }
    }

    pub fn with_mode(mode: FilterMode) -> Self {
        Self {
            mode,
            ..Self::none()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterStatus {
    Applied,
    /// Zero loss variance in `zscore` mode; the history passed through unchanged.
    ZeroVariance,
    /// Every trial was eliminated; only the best one was kept.
    FellBackToBest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub history: History,
    pub status: FilterStatus,
}

/// Returns a subsequence of `history` according to `params`.
///
/// The result is never empty for a non-empty input: if every trial would be
/// eliminated, the single best trial is returned instead.
pub fn filter_history<R: Rng + ?Sized>(
    history: &History,
    params: &FilterParams,
    space: &SearchSpace,
    rng: &mut R,
) -> Filtered {
    let n = history.len();
    if n == 0 {
        return Filtered {
            history: history.clone(),
            status: FilterStatus::Applied,
        };
    }
    let keep: Vec<usize> = match params.mode {
        FilterMode::None => (0..n).collect(),
        FilterMode::Random => (0..n)
            .filter(|_| rng.random::<f64>() >= params.random_probability)
            .collect(),
        FilterMode::Age => (0..n)
            .filter(|&i| {
                let rank = (n - i) as f64;
                let p = (params.age_multiplier * rank / n as f64).min(1.0);
                rng.random::<f64>() >= p
            })
            .collect(),
        FilterMode::Loss => {
            let mut rank = vec![0usize; n];
            for (r, i) in history.rank_by_loss().into_iter().enumerate() {
                rank[i] = r + 1;
            }
            (0..n)
                .filter(|&i| {
                    let p = (params.loss_multiplier * rank[i] as f64 / n as f64).min(1.0);
                    rng.random::<f64>() >= p
                })
                .collect()
        }
        FilterMode::Clustering => cluster_representatives(history, params.clusters_quantile, space, rng),
        FilterMode::Zscore => match zscore_keep(&history.losses(), params.zscore_threshold) {
            Some(keep) => keep,
            None => {
                return Filtered {
                    history: history.clone(),
                    status: FilterStatus::ZeroVariance,
                }
            }
        },
    };

    if keep.is_empty() {
        let best = history.rank_by_loss()[0];
        return Filtered {
            history: history.select(&[best]),
            status: FilterStatus::FellBackToBest,
        };
    }
    Filtered {
        history: history.select(&keep),
        status: FilterStatus::Applied,
    }
}

fn cluster_representatives<R: Rng + ?Sized>(
    history: &History,
    quantile: f64,
    space: &SearchSpace,
    rng: &mut R,
) -> Vec<usize> {
    let n = history.len();
    let k = ((quantile * n as f64).floor() as usize).max(1);
    let points: Vec<Vec<f64>> = history
        .trials()
        .iter()
        .map(|t| space.encode_numeric(&t.config))
        .collect();
    let clustering = kmeans(&points, k, KMEANS_ITERATIONS, rng);
    let mut keep: Vec<usize> = clustering
        .members()
        .into_iter()
        .filter(|m| !m.is_empty())
        .map(|m| m[rng.random_range(0..m.len())])
        .collect();
    keep.sort_unstable();
    keep
}

/// Population z-scores of `losses`, or `None` when the spread is zero.
pub fn zscores(losses: &[f64]) -> Option<Vec<f64>> {
    let n = losses.len() as f64;
    let mean = losses.iter().sum::<f64>() / n;
    let var = losses.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if !(sd > 1e-12 * mean.abs().max(1.0)) {
        return None;
    }
    Some(losses.iter().map(|l| (l - mean) / sd).collect())
}

fn zscore_keep(losses: &[f64], threshold: f64) -> Option<Vec<usize>> {
    let z = zscores(losses)?;
    let keep = if threshold < 0.0 {
        let cut = threshold.abs();
        z.iter().enumerate().filter(|(_, &v)| v > cut).map(|(i, _)| i).collect()
    } else {
        let cut = 3.0 - threshold.abs();
        z.iter().enumerate().filter(|(_, &v)| v < cut).map(|(i, _)| i).collect()
    };
    Some(keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::space::{Config, Value};

    fn history(losses: &[f64]) -> History {
        let mut h = History::new();
        for (i, &l) in losses.iter().enumerate() {
            h.push(Config::new(vec![Value::Real(i as f64 / losses.len() as f64)]), l)
                .unwrap();
        }
        h
    }

    fn ids(h: &History) -> Vec<u64> {
        h.trials().iter().map(|t| t.id).collect()
    }

    fn losses(h: &History) -> Vec<f64> {
        h.losses()
    }

    #[test]
    fn none_is_identity() {
        let h = history(&[3.0, 1.0, 2.0, 5.0]);
        let out = filter_history(&h, &FilterParams::none(), &SearchSpace::unit_cube(1), &mut RngStream::new(0, 0));
        assert_eq!(ids(&out.history), ids(&h));
    }

    #[test]
    fn zscore_positive_threshold() {
        let h = history(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let params = FilterParams {
            zscore_threshold: 2.9,
            ..FilterParams::with_mode(FilterMode::Zscore)
        };
        let out = filter_history(&h, &params, &SearchSpace::unit_cube(1), &mut RngStream::new(0, 0));
        assert_eq!(losses(&out.history), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn zscore_negative_threshold_keeps_upper_tail() {
        let h = history(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let params = FilterParams {
            zscore_threshold: -0.5,
            ..FilterParams::with_mode(FilterMode::Zscore)
        };
        let out = filter_history(&h, &params, &SearchSpace::unit_cube(1), &mut RngStream::new(0, 0));
        assert_eq!(losses(&out.history), vec![4.0, 5.0]);
    }

    #[test]
    fn zscore_zero_variance_is_flagged_identity() {
        let h = history(&[0.1, 0.1, 0.1]);
        let params = FilterParams::with_mode(FilterMode::Zscore);
        let out = filter_history(&h, &params, &SearchSpace::unit_cube(1), &mut RngStream::new(0, 0));
        assert_eq!(out.status, FilterStatus::ZeroVariance);
        assert_eq!(ids(&out.history), ids(&h));
    }

    #[test]
    fn zscore_threshold_zero_drops_only_outliers() {
        let mut ls = vec![0.0; 30];
        ls.push(100.0);
        let h = history(&ls);
        let out = filter_history(&h, &FilterParams::with_mode(FilterMode::Zscore), &SearchSpace::unit_cube(1), &mut RngStream::new(0, 0));
        assert_eq!(out.history.len(), 30);
    }

    #[test]
    fn random_extremes() {
        let h = history(&[3.0, 1.0, 2.0, 5.0]);
        let space = SearchSpace::unit_cube(1);
        let keep_all = FilterParams {
            random_probability: 0.0,
            ..FilterParams::with_mode(FilterMode::Random)
        };
        let drop_all = FilterParams {
            random_probability: 1.0,
            ..FilterParams::with_mode(FilterMode::Random)
        };
        let mut rng = RngStream::new(4, 0);
        assert_eq!(ids(&filter_history(&h, &keep_all, &space, &mut rng).history), ids(&h));
        let out = filter_history(&h, &drop_all, &space, &mut rng);
        assert_eq!(out.status, FilterStatus::FellBackToBest);
        assert_eq!(ids(&out.history), vec![1]);
    }

    #[test]
    fn loss_mode_prefers_good_trials() {
        let ls: Vec<f64> = (0..200).map(|i| ((i * 73) % 200) as f64).collect();
        let h = history(&ls);
        let params = FilterParams {
            loss_multiplier: 1.0,
            ..FilterParams::with_mode(FilterMode::Loss)
        };
        let mut rng = RngStream::new(12, 0);
        let out = filter_history(&h, &params, &SearchSpace::unit_cube(1), &mut rng);
        let kept = losses(&out.history);
        let good = kept.iter().filter(|&&l| l < 100.0).count();
        assert!(good > kept.len() - good);
        // The worst trial has elimination probability one.
        assert!(!kept.contains(&199.0));
    }

    #[test]
    fn age_mode_prefers_recent_trials() {
        let h = history(&vec![1.0; 200]);
        let params = FilterParams {
            age_multiplier: 1.0,
            ..FilterParams::with_mode(FilterMode::Age)
        };
        let out = filter_history(&h, &params, &SearchSpace::unit_cube(1), &mut RngStream::new(3, 0));
        let ids = ids(&out.history);
        assert!(!ids.contains(&0), "oldest trial is always eliminated");
        let recent = ids.iter().filter(|&&i| i >= 100).count();
        assert!(recent > ids.len() - recent);
    }

    #[test]
    fn clustering_keeps_one_per_blob() {
        let space = SearchSpace::unit_cube(2);
        let centers = [(0.1, 0.1), (0.9, 0.2), (0.5, 0.9)];
        let mut h = History::new();
        for i in 0..10 {
            let (cx, cy) = centers[i % 3];
            let j = (i / 3) as f64 * 0.01;
            h.push(Config::new(vec![Value::Real(cx + j), Value::Real(cy + j)]), i as f64)
                .unwrap();
        }
        let params = FilterParams {
            clusters_quantile: 0.3,
            ..FilterParams::with_mode(FilterMode::Clustering)
        };
        for seed in 0..20 {
            let out = filter_history(&h, &params, &space, &mut RngStream::new(seed, 0));
            assert_eq!(out.history.len(), 3);
            let blobs: std::collections::HashSet<u64> =
                out.history.trials().iter().map(|t| t.id % 3).collect();
            assert_eq!(blobs.len(), 3);
        }
    }

    #[test]
    fn empty_input_passes_through() {
        let out = filter_history(
            &History::new(),
            &FilterParams::with_mode(FilterMode::Random),
            &SearchSpace::unit_cube(1),
            &mut RngStream::new(0, 0),
        );
        assert!(out.history.is_empty());
    }

    proptest::proptest! {
        #[test]
        fn output_is_nonempty_subsequence(
            ls in proptest::collection::vec(-50.0f64..50.0, 1..40),
            mode_idx in 0usize..6,
            p in 0.0f64..1.0,
            mult in 0.0f64..3.0,
            q in 0.01f64..1.0,
            zt in -3.0f64..3.0,
            seed in 0u64..1000,
        ) {
            let h = history(&ls);
            let params = FilterParams {
                mode: FilterMode::ALL[mode_idx],
                random_probability: p,
                age_multiplier: mult,
                loss_multiplier: mult,
                clusters_quantile: q,
                zscore_threshold: zt,
            };
            let before = h.clone();
            let out = filter_history(&h, &params, &SearchSpace::unit_cube(1), &mut RngStream::new(seed, 0));
            proptest::prop_assert!(!out.history.is_empty());
            let all = ids(&h);
            let kept = ids(&out.history);
            proptest::prop_assert!(kept.windows(2).all(|w| w[0] < w[1]));
            proptest::prop_assert!(kept.iter().all(|i| all.contains(i)));
            for t in out.history.trials() {
                proptest::prop_assert_eq!(t, &h.trials()[t.id as usize]);
            }
            proptest::prop_assert_eq!(h, before);
        }
    }
}
