//! The fixed-length feature vector describing an optimization state.
//!
//! Seven summary statistics are computed over seven sub-ranges of the loss
//! history (49 features), followed by the same seven statistics over the
//! absolute Spearman correlations of the numeric dimensions (7 features).

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::blocking::CorrelationReport;
use crate::history::History;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleRange {
    All,
    Last(usize),
    Top(usize),
}

impl SampleRange {
    pub fn name(self) -> String {
        match self {
            SampleRange::All => "all".to_string(),
            SampleRange::Last(k) => format!("last{k}"),
            SampleRange::Top(k) => format!("top{k}"),
        }
    }
}

pub const RANGES: [SampleRange; 7] = [
    SampleRange::All,
    SampleRange::Last(10),
    SampleRange::Last(15),
    SampleRange::Last(25),
    SampleRange::Top(10),
    SampleRange::Top(20),
    SampleRange::Top(30),
];

pub const STATISTIC_NAMES: [&str; 7] = [
    "max_over_p25",
    "max_over_p50",
    "max_over_p75",
    "kurtosis",
    "p25_over_p5",
    "skewness",
    "std_over_max",
];

pub const STATS_PER_BLOCK: usize = STATISTIC_NAMES.len();
pub const FEATURE_COUNT: usize = RANGES.len() * STATS_PER_BLOCK + STATS_PER_BLOCK;

/// Upper bound for ratio features whose denominator vanishes.
pub const RATIO_CAP: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StatisticsVector {
    values: Vec<f64>,
}

impl StatisticsVector {
    pub fn from_values(values: Vec<f64>) -> Option<Self> {
        (values.len() == FEATURE_COUNT).then_some(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        feature_names()
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }
}

/// Feature names in vector order.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_COUNT);
    for range in RANGES {
        for stat in STATISTIC_NAMES {
            names.push(format!("loss_{}_{}", range.name(), stat));
        }
    }
    for stat in STATISTIC_NAMES {
        names.push(format!("corr_{stat}"));
    }
    names
}

pub fn write_feature_manifest(path: &Path) -> io::Result<()> {
    let mut text = feature_names().join("\n");
    text.push('\n');
    std::fs::write(path, text)
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Population moments; zero spread maps skewness and kurtosis to 0.
pub fn moments(values: &[f64]) -> Moments {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    if m2.sqrt() <= 1e-12 * scale {
        return Moments {
            mean,
            std: 0.0,
            skewness: 0.0,
            excess_kurtosis: 0.0,
        };
    }
    Moments {
        mean,
        std: m2.sqrt(),
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    let r = if den > 0.0 {
        num / den
    } else if num > 0.0 {
        RATIO_CAP
    } else {
        1.0
    };
    r.min(RATIO_CAP)
}

/// The seven statistics of one block. Ratios use `ratio_values`, moments
/// use `raw`; both hold the same multiset up to a shift.
fn block(raw: &[f64], ratio_values: &[f64]) -> [f64; STATS_PER_BLOCK] {
    let mut sorted = ratio_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let max = *sorted.last().unwrap();
    let p5 = percentile(&sorted, 0.05);
    let p25 = percentile(&sorted, 0.25);
    let p50 = percentile(&sorted, 0.50);
    let p75 = percentile(&sorted, 0.75);
    let m = moments(raw);
    let std_over_max = if m.std == 0.0 { 0.0 } else { ratio(m.std, max) };
    [
        ratio(max, p25),
        ratio(max, p50),
        ratio(max, p75),
        m.excess_kurtosis,
        ratio(p25, p5),
        m.skewness,
        std_over_max,
    ]
}

/// Losses of the trials selected by `range`; the whole history when it is
/// shorter than the range.
pub fn range_losses(history: &History, range: SampleRange) -> Vec<f64> {
    let trials = history.trials();
    match range {
        SampleRange::All => history.losses(),
        SampleRange::Last(k) => trials[trials.len().saturating_sub(k)..]
            .iter()
            .map(|t| t.loss)
            .collect(),
        SampleRange::Top(k) => history
            .rank_by_loss()
            .into_iter()
            .take(k)
            .map(|i| trials[i].loss)
            .collect(),
    }
}

/// Computes the feature vector. The history must be non-empty.
pub fn compute_statistics(history: &History, correlations: &CorrelationReport) -> StatisticsVector {
    assert!(!history.is_empty(), "statistics need at least one trial");
    let mut values = Vec::with_capacity(FEATURE_COUNT);
    for range in RANGES {
        let raw = range_losses(history, range);
        let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let shifted: Vec<f64> = raw.iter().map(|v| v - min + 1.0).collect();
        values.extend(block(&raw, &shifted));
    }
    if correlations.entries.is_empty() {
        values.extend([0.0; STATS_PER_BLOCK]);
    } else {
        let abs: Vec<f64> = correlations.entries.iter().map(|e| e.rho.abs()).collect();
        values.extend(block(&abs, &abs));
    }
    StatisticsVector { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocking::DimCorrelation;
    use crate::space::{Config, Value};

    fn history(losses: &[f64]) -> History {
        let mut h = History::new();
        for &l in losses {
            h.push(Config::new(vec![Value::Real(0.5)]), l).unwrap();
        }
        h
    }

    #[test]
    fn layout() {
        assert_eq!(FEATURE_COUNT, 56);
        let names = feature_names();
        assert_eq!(names.len(), 56);
        assert_eq!(names[0], "loss_all_max_over_p25");
        assert_eq!(names[55], "corr_std_over_max");
    }

    #[test]
    fn constant_losses() {
        let s = compute_statistics(&history(&[5.0; 4]), &CorrelationReport::default());
        for (name, v) in feature_names().iter().zip(s.values()) {
            if name.starts_with("loss_") {
                let expect = if name.contains("_over_p") { 1.0 } else { 0.0 };
                assert_eq!(*v, expect, "{name}");
            } else {
                assert_eq!(*v, 0.0, "{name}");
            }
        }
    }

    #[test]
    fn max_over_median_of_one_to_ten() {
        let losses: Vec<f64> = (1..=10).map(f64::from).collect();
        let s = compute_statistics(&history(&losses), &CorrelationReport::default());
        let v = s.get("loss_all_max_over_p50").unwrap();
        assert!((v - 10.0 / 5.5).abs() < 1e-12);
    }

    #[test]
    fn short_history_ranges_match_all() {
        let s = compute_statistics(&history(&[3.0, 1.0, 4.0, 1.5, 9.0]), &CorrelationReport::default());
        for stat in STATISTIC_NAMES {
            let all = s.get(&format!("loss_all_{stat}")).unwrap();
            for r in ["last10", "last25", "top30"] {
                assert_eq!(s.get(&format!("loss_{r}_{stat}")).unwrap(), all);
            }
        }
    }

    #[test]
    fn last_and_top_ranges() {
        let losses: Vec<f64> = (0..40).map(|i| ((i * 17) % 40) as f64).collect();
        let h = history(&losses);
        assert_eq!(range_losses(&h, SampleRange::Last(10)), losses[30..].to_vec());
        let top = range_losses(&h, SampleRange::Top(10));
        assert_eq!(top, (0..10).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn correlation_block_uses_abs_rho() {
        let report = CorrelationReport {
            entries: vec![
                DimCorrelation { dim: 0, rho: -0.8 },
                DimCorrelation { dim: 1, rho: 0.2 },
            ],
        };
        let s = compute_statistics(&history(&[1.0, 2.0]), &report);
        let v = s.get("corr_max_over_p50").unwrap();
        assert!((v - 0.8 / 0.5).abs() < 1e-12);
        assert!(s.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn zero_correlations_stay_finite() {
        let report = CorrelationReport {
            entries: vec![DimCorrelation { dim: 0, rho: 0.0 }, DimCorrelation { dim: 1, rho: 0.4 }],
        };
        let s = compute_statistics(&history(&[1.0, 2.0]), &report);
        assert!(s.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn serde_round_trip_is_bit_exact() {
        let losses: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin() * 3.1).collect();
        let s = compute_statistics(&history(&losses), &CorrelationReport::default());
        let text = serde_json::to_string(&s).unwrap();
        let back: StatisticsVector = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
    }

    proptest::proptest! {
        #[test]
        fn shift_invariance(
            losses in proptest::collection::vec(-100.0f64..100.0, 1..60),
            shift in -1000.0f64..1000.0,
        ) {
            let a = compute_statistics(&history(&losses), &CorrelationReport::default());
            let moved: Vec<f64> = losses.iter().map(|l| l + shift).collect();
            let b = compute_statistics(&history(&moved), &CorrelationReport::default());
            for (x, y) in a.values().iter().zip(b.values()) {
                proptest::prop_assert!(x.is_finite() && y.is_finite());
                proptest::prop_assert!((x - y).abs() <= 1e-6 * (1.0 + x.abs()), "{} vs {}", x, y);
            }
        }
    }
}
