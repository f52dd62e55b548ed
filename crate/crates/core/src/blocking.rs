//! Hyperparameter blocking: choosing which dimensions to lock for one
//! iteration and which values to lock them to.
//!
//! Numeric dimensions are ranked by weighted Spearman correlation with the
//! loss, categorical ones by a weighted one-way ANOVA F statistic.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::history::History;
use crate::space::{SearchSpace, Value};

/// Slack for floor/ceil of products like `0.3 * 10` that land a hair above
/// or below an integer.
const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffMode {
    CountOriginal,
    CountReversed,
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilityMode {
    Fixed,
    CorrelationWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueMode {
    Random,
    Elite,
}

macro_rules! named_enum {
    ($ty:ty { $($variant:path => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $($variant => $name),+ }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.pad(self.name())
            }
        }
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok($variant),)+
                    _ => Err(format!("unknown value `{s}`")),
                }
            }
        }
    };
}

named_enum!(CutoffMode {
    CutoffMode::CountOriginal => "count_original",
    CutoffMode::CountReversed => "count_reversed",
    CutoffMode::Threshold => "threshold",
});
named_enum!(ProbabilityMode {
    ProbabilityMode::Fixed => "fixed",
    ProbabilityMode::CorrelationWeighted => "correlation_weighted",
});
named_enum!(ValueMode {
    ValueMode::Random => "random",
    ValueMode::Elite => "elite",
});

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockingParams {
    /// Signed cutoff in `[-1, 1]` for numeric candidate selection.
    pub secondary_cutoff: f64,
    /// Exponent applied to `|rho|`, `> 0`.
    pub correlation_exponent: f64,
    pub cutoff_mode: CutoffMode,
    pub probability_mode: ProbabilityMode,
    pub fixed_probability: f64,
    pub correlation_multiplier: f64,
    pub value_mode: ValueMode,
    pub elite_percentile: f64,
    pub anova_exponent: f64,
    /// Signed cutoff in `[-1, 1]` for categorical candidate selection.
    pub cat_cutoff: f64,
    pub anova_multiplier: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimCorrelation {
    pub dim: usize,
    pub rho: f64,
}

/// Spearman correlations of every non-categorical dimension that has at
/// least two distinct observed values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrelationReport {
    pub entries: Vec<DimCorrelation>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimAnova {
    pub dim: usize,
    pub f_stat: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnovaReport {
    pub entries: Vec<DimAnova>,
}

/// A dimension eligible for locking together with its weighted score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub dim: usize,
    pub weighted: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spearman {
    pub rho: f64,
    pub degenerate: bool,
}

/// 1-based ranks with ties replaced by their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of the average ranks.
///
/// Fewer than two samples, a constant input or a constant loss yield
/// `rho = 0` with `degenerate = true`.
pub fn spearman_values(xs: &[f64], losses: &[f64]) -> Spearman {
    let n = xs.len();
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if n < 2 || constant(xs) || constant(losses) {
        return Spearman {
            rho: 0.0,
            degenerate: true,
        };
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(losses);
    // Average ranks always sum to n(n+1)/2.
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mean, b - mean);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Spearman {
        rho: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

pub fn spearman(history: &History, dim: usize) -> Spearman {
    let xs: Vec<f64> = history
        .trials()
        .iter()
        .map(|t| t.config.get(dim).as_real())
        .collect();
    spearman_values(&xs, &history.losses())
}

pub fn correlation_report(history: &History, space: &SearchSpace) -> CorrelationReport {
    let entries = space
        .specs()
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.is_categorical())
        .filter_map(|(dim, _)| {
            let xs: Vec<f64> = history
                .trials()
                .iter()
                .map(|t| t.config.get(dim).as_real())
                .collect();
            if xs.len() < 2 || xs.iter().all(|&x| x == xs[0]) {
                return None;
            }
            let s = spearman_values(&xs, &history.losses());
            Some(DimCorrelation { dim, rho: s.rho })
        })
        .collect();
    CorrelationReport { entries }
}

/// One-way ANOVA F statistic of `losses` grouped by `groups`.
///
/// Returns `(F, degenerate)`; fewer than two groups, no residual degrees of
/// freedom or zero within-group variance give `F = 0`.
pub fn anova_f(groups: &[usize], losses: &[f64]) -> (f64, bool) {
    let n = losses.len();
    let n_groups = groups.iter().copied().max().map_or(0, |m| m + 1);
    let mut sums = vec![0.0; n_groups];
    let mut counts = vec![0usize; n_groups];
    for (&g, &l) in groups.iter().zip(losses) {
        sums[g] += l;
        counts[g] += 1;
    }
    let k = counts.iter().filter(|&&c| c > 0).count();
    if k < 2 || n <= k {
        return (0.0, true);
    }
    let grand = losses.iter().sum::<f64>() / n as f64;
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let ssb: f64 = means
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0)
        .map(|(&m, &c)| c as f64 * (m - grand) * (m - grand))
        .sum();
    let ssw: f64 = groups
        .iter()
        .zip(losses)
        .map(|(&g, &l)| (l - means[g]) * (l - means[g]))
        .sum();
    if ssw <= 0.0 {
        return (0.0, true);
    }
    let f = (ssb / (k - 1) as f64) / (ssw / (n - k) as f64);
    (f, false)
}

pub fn anova_report(history: &History, space: &SearchSpace) -> AnovaReport {
    let losses = history.losses();
    let entries = space
        .specs()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_categorical())
        .map(|(dim, _)| {
            let groups: Vec<usize> = history
                .trials()
                .iter()
                .map(|t| match t.config.get(dim) {
                    Value::Choice(c) => c,
                    v => panic!("categorical dimension holds {v:?}"),
                })
                .collect();
            let (f_stat, degenerate) = anova_f(&groups, &losses);
            DimAnova {
                dim,
                f_stat,
                degenerate,
            }
        })
        .collect();
    AnovaReport { entries }
}

/// Candidates sorted by descending weight, ties by space order.
fn sorted_desc(mut cands: Vec<Candidate>) -> Vec<Candidate> {
    cands.sort_by(|a, b| b.weighted.total_cmp(&a.weighted).then(a.dim.cmp(&b.dim)));
    cands
}

/// Greedy prefix (`from_top`) or suffix of `desc` whose cumulative weight
/// stays within `threshold`.
fn cumulative_within(desc: &[Candidate], threshold: f64, from_top: bool) -> Vec<Candidate> {
    let total: f64 = desc.iter().map(|c| c.weighted).sum();
    let limit = threshold + 1e-12 * total;
    let mut out = Vec::new();
    let mut acc = 0.0;
    if from_top {
        for c in desc {
            acc += c.weighted;
            if acc > limit {
                break;
            }
            out.push(*c);
        }
    } else {
        for c in desc.iter().rev() {
            acc += c.weighted;
            if acc > limit {
                break;
            }
            out.push(*c);
        }
        out.reverse();
    }
    out
}

/// Dimensions eligible for numeric blocking, in descending weight order.
pub fn select_numeric_candidates(report: &CorrelationReport, params: &BlockingParams) -> Vec<Candidate> {
    let desc = sorted_desc(
        report
            .entries
            .iter()
            .map(|e| Candidate {
                dim: e.dim,
                weighted: e.rho.abs().powf(params.correlation_exponent),
            })
            .collect(),
    );
    let n = desc.len();
    let c = params.secondary_cutoff;
    let cut = ((c.abs() * n as f64) + ROUNDING_SLACK).floor() as usize;
    let cut = cut.min(n);
    let highest = |m: usize| desc[..m].to_vec();
    let lowest = |m: usize| desc[n - m..].to_vec();
    match params.cutoff_mode {
        CutoffMode::CountOriginal => {
            if c < 0.0 {
                highest(cut)
            } else if c > 0.0 {
                lowest(cut)
            } else {
                Vec::new()
            }
        }
        CutoffMode::CountReversed => {
            let m = n - cut;
            if c < 0.0 {
                highest(m)
            } else if c > 0.0 {
                lowest(m)
            } else {
                desc
            }
        }
        CutoffMode::Threshold => {
            let total: f64 = desc.iter().map(|c| c.weighted).sum();
            cumulative_within(&desc, total * c.abs(), c >= 0.0)
        }
    }
}

/// Categorical dimensions eligible for blocking, in descending weight order.
pub fn select_categorical_candidates(report: &AnovaReport, params: &BlockingParams) -> Vec<Candidate> {
    let desc = sorted_desc(
        report
            .entries
            .iter()
            .map(|e| Candidate {
                dim: e.dim,
                weighted: e.f_stat.abs().powf(params.anova_exponent),
            })
            .collect(),
    );
    let beta = params.cat_cutoff;
    let total: f64 = desc.iter().map(|c| c.weighted).sum();
    cumulative_within(&desc, total * (1.0 - beta.abs()), beta >= 0.0)
}

/// Randomly keeps a subset of the candidates; one uniform draw per candidate.
pub fn choose_locked<R: Rng + ?Sized>(
    candidates: &[Candidate],
    mode: ProbabilityMode,
    fixed_probability: f64,
    multiplier: f64,
    rng: &mut R,
) -> Vec<usize> {
    candidates
        .iter()
        .filter(|c| {
            let p = match mode {
                ProbabilityMode::Fixed => fixed_probability,
                ProbabilityMode::CorrelationWeighted => (c.weighted * multiplier).min(1.0),
            };
            rng.random::<f64>() < p
        })
        .map(|c| c.dim)
        .collect()
}

/// Picks a value for each locked dimension from the history.
pub fn assign_locked_values<R: Rng + ?Sized>(
    locked: &[usize],
    history: &History,
    params: &BlockingParams,
    rng: &mut R,
) -> Vec<(usize, Value)> {
    assert!(!history.is_empty(), "locking needs a non-empty history");
    let pool: Vec<usize> = match params.value_mode {
        ValueMode::Random => (0..history.len()).collect(),
        ValueMode::Elite => {
            let n = history.len();
            let size = ((params.elite_percentile * n as f64) - ROUNDING_SLACK).ceil() as usize;
            let mut ranked = history.rank_by_loss();
            ranked.truncate(size.clamp(1, n));
            ranked
        }
    };
    locked
        .iter()
        .map(|&dim| {
            let t = &history.trials()[pool[rng.random_range(0..pool.len())]];
            (dim, t.config.get(dim))
        })
        .collect()
}
