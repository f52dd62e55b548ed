//! Cheap synthetic objectives on the unit hypercube, used to train the
//! parameter predictor.

use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocking::correlation_report;
use crate::history::History;
use crate::kmeans::kmeans;
use crate::rng::RngStream;
use crate::space::{Config, SearchSpace, Value};
use crate::statistics::{compute_statistics, StatisticsVector};

pub const DEFAULT_PROBE_BUDGET: usize = 200;

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("corpus io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("corpus line {line}: {reason}")]
    Invalid { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomKind {
    Linear,
    Quadratic,
    GaussianPeak,
    SineWave,
    Sigmoid,
    GaussianProduct,
    SineProduct,
    HyperbolicProduct,
}

impl AtomKind {
    pub const ALL: [AtomKind; 8] = [
        AtomKind::Linear,
        AtomKind::Quadratic,
        AtomKind::GaussianPeak,
        AtomKind::SineWave,
        AtomKind::Sigmoid,
        AtomKind::GaussianProduct,
        AtomKind::SineProduct,
        AtomKind::HyperbolicProduct,
    ];

    pub fn arity(self) -> usize {
        match self {
            AtomKind::GaussianProduct | AtomKind::SineProduct | AtomKind::HyperbolicProduct => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AtomKind::Linear => "linear",
            AtomKind::Quadratic => "quadratic",
            AtomKind::GaussianPeak => "gaussian_peak",
            AtomKind::SineWave => "sine_wave",
            AtomKind::Sigmoid => "sigmoid",
            AtomKind::GaussianProduct => "gaussian_product",
            AtomKind::SineProduct => "sine_product",
            AtomKind::HyperbolicProduct => "hyperbolic_product",
        }
    }
}

impl fmt::Display for AtomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for AtomKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AtomKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown atom kind `{s}`"))
    }
}

pub fn base_pool() -> Vec<AtomKind> {
    vec![
        AtomKind::Linear,
        AtomKind::Quadratic,
        AtomKind::GaussianPeak,
        AtomKind::SineWave,
        AtomKind::GaussianProduct,
        AtomKind::SineProduct,
    ]
}

/// Base pool plus the sigmoid and hyperbolic-product atoms.
pub fn extended_pool() -> Vec<AtomKind> {
    let mut pool = base_pool();
    pool.push(AtomKind::Sigmoid);
    pool.push(AtomKind::HyperbolicProduct);
    pool.sort();
    pool
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateAtom {
    pub kind: AtomKind,
    pub dims: Vec<usize>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub weight: f64,
}

impl SurrogateAtom {
    pub fn unary(kind: AtomKind, dim: usize, a: f64, b: f64, weight: f64) -> Self {
        Self {
            kind,
            dims: vec![dim],
            a,
            b,
            c: 0.0,
            weight,
        }
    }

    pub fn binary(kind: AtomKind, i: usize, j: usize, a: f64, b: f64, c: f64, weight: f64) -> Self {
        Self {
            kind,
            dims: vec![i, j],
            a,
            b,
            c,
            weight,
        }
    }

    /// Unweighted atom value at `h`.
    pub fn eval(&self, h: &[f64]) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        let x = h[self.dims[0]];
        match self.kind {
            AtomKind::Linear => a * (x - b),
            AtomKind::Quadratic => a * (x - b) * (x - b),
            AtomKind::GaussianPeak => (-a * (x - b) * (x - b)).exp(),
            AtomKind::SineWave => (a * x + b).sin(),
            AtomKind::Sigmoid => 1.0 / (1.0 + (-a * (x - b)).exp()),
            AtomKind::GaussianProduct => {
                let y = h[self.dims[1]];
                (-a * (x - b) * (x - b)).exp() * (-a * (y - c) * (y - c)).exp()
            }
            AtomKind::SineProduct => (a * x).sin() * (b * h[self.dims[1]]).sin(),
            AtomKind::HyperbolicProduct => {
                let y = h[self.dims[1]];
                (a * x).sinh() * (b * y).sinh() / (c + (x * y).cosh())
            }
        }
    }

    fn check(&self, dims: usize) -> Result<(), String> {
        if self.dims.len() != self.kind.arity() {
            return Err(format!("{} takes {} dims", self.kind, self.kind.arity()));
        }
        if self.dims.iter().any(|&d| d >= dims) {
            return Err(format!("{} refers to a dim outside 0..{dims}", self.kind));
        }
        if self.kind == AtomKind::HyperbolicProduct && self.c <= -1.0 {
            return Err("hyperbolic_product needs c > -1".to_string());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateFunction {
    pub dims: usize,
    pub atoms: Vec<SurrogateAtom>,
}

impl SurrogateFunction {
    pub fn evaluate(&self, h: &[f64]) -> f64 {
        debug_assert_eq!(h.len(), self.dims);
        self.atoms.iter().map(|a| a.weight * a.eval(h)).sum()
    }

    pub fn space(&self) -> SearchSpace {
        SearchSpace::unit_cube(self.dims)
    }

    pub fn evaluate_config(&self, config: &Config) -> f64 {
        self.evaluate(&config.as_reals())
    }

    pub fn kinds(&self) -> Vec<AtomKind> {
        let mut kinds: Vec<AtomKind> = self.atoms.iter().map(|a| a.kind).collect();
        kinds.sort();
        kinds.dedup();
        kinds
    }
}

/// One unary atom per dimension plus `dims / 2` binary atoms over distinct
/// dimension pairs. Kinds of an arity missing from the pool are skipped.
pub fn generate_surrogate<R: Rng + ?Sized>(
    dims: usize,
    pool: &[AtomKind],
    rng: &mut R,
) -> SurrogateFunction {
    assert!(dims >= 1 && !pool.is_empty());
    let unary: Vec<AtomKind> = pool.iter().copied().filter(|k| k.arity() == 1).collect();
    let binary: Vec<AtomKind> = pool.iter().copied().filter(|k| k.arity() == 2).collect();
    let mut atoms = Vec::new();
    if !unary.is_empty() {
        for d in 0..dims {
            let kind = unary[rng.random_range(0..unary.len())];
            let a = rng.random_range(1.0..=20.0);
            let b = rng.random_range(0.0..=1.0);
            let w = rng.random_range(0.5..=2.0);
            atoms.push(SurrogateAtom::unary(kind, d, a, b, w));
        }
    }
    if !binary.is_empty() && dims >= 2 {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for i in 0..dims {
            for j in i + 1..dims {
                pairs.push((i, j));
            }
        }
        pairs.shuffle(rng);
        for &(i, j) in pairs.iter().take(dims / 2) {
            let kind = binary[rng.random_range(0..binary.len())];
            let a = rng.random_range(0.5..=3.0);
            let b = rng.random_range(0.5..=3.0);
            let c = rng.random_range(0.0..=2.0);
            let w = rng.random_range(0.5..=2.0);
            atoms.push(SurrogateAtom::binary(kind, i, j, a, b, c, w));
        }
    }
    SurrogateFunction { dims, atoms }
}

/// Corpus of `count` functions with dimensions drawn from `dims_range`.
pub fn generate_corpus(
    count: usize,
    dims_range: (usize, usize),
    pool: &[AtomKind],
    seed: u64,
) -> Vec<SurrogateFunction> {
    let mut rng = RngStream::new(seed, 0);
    (0..count)
        .map(|_| {
            let dims = rng.random_range(dims_range.0..=dims_range.1);
            generate_surrogate(dims, pool, &mut rng)
        })
        .collect()
}

pub fn write_corpus(path: &Path, corpus: &[SurrogateFunction]) -> Result<(), SurrogateError> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    for f in corpus {
        let line = serde_json::to_string(f).map_err(|source| SurrogateError::Json { line: 0, source })?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_corpus(path: &Path) -> Result<Vec<SurrogateFunction>, SurrogateError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut corpus = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: SurrogateFunction =
            serde_json::from_str(&line).map_err(|source| SurrogateError::Json { line: i + 1, source })?;
        if f.dims == 0 {
            return Err(SurrogateError::Invalid {
                line: i + 1,
                reason: "dims must be at least 1".to_string(),
            });
        }
        for atom in &f.atoms {
            atom.check(f.dims)
                .map_err(|reason| SurrogateError::Invalid { line: i + 1, reason })?;
        }
        corpus.push(f);
    }
    Ok(corpus)
}

/// Statistics of `probe_budget` uniform random evaluations.
pub fn profile(f: &SurrogateFunction, probe_budget: usize, rng: &mut RngStream) -> StatisticsVector {
    let space = f.space();
    let mut history = History::new();
    for _ in 0..probe_budget.max(1) {
        let h: Vec<f64> = (0..f.dims).map(|_| rng.random::<f64>()).collect();
        let loss = f.evaluate(&h);
        let config = Config::new(h.into_iter().map(Value::Real).collect());
        history.push(config, loss).expect("surrogates are finite");
    }
    compute_statistics(&history, &correlation_report(&history, &space))
}

/// Each profile feature rescaled to zero mean and unit variance across the
/// corpus; constant features become 0.
fn standardize(profiles: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = profiles.len() as f64;
    let width = profiles[0].len();
    let mut out = profiles.to_vec();
    for j in 0..width {
        let mean = profiles.iter().map(|p| p[j]).sum::<f64>() / n;
        let var = profiles.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        for row in out.iter_mut() {
            row[j] = if sd > 0.0 { (row[j] - mean) / sd } else { 0.0 };
        }
    }
    out
}

/// Indices of one representative per non-empty cluster of statistical
/// profiles, in cluster order.
pub fn cluster_corpus(
    functions: &[SurrogateFunction],
    k: usize,
    probe_budget: usize,
    rng: &mut RngStream,
) -> Vec<usize> {
    assert!(!functions.is_empty() && k >= 1);
    let seed: u64 = rng.random();
    let profiles: Vec<Vec<f64>> = functions
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let mut probe_rng = RngStream::new(seed, i as u64);
            profile(f, probe_budget, &mut probe_rng).values().to_vec()
        })
        .collect();
    let clustering = kmeans(&standardize(&profiles), k, crate::filtering::KMEANS_ITERATIONS, rng);
    clustering
        .members()
        .into_iter()
        .filter(|m| !m.is_empty())
        .map(|m| m[rng.random_range(0..m.len())])
        .collect()
}

/// Dimension range of generated corpora.
pub const CORPUS_DIMS: (usize, usize) = (1, 6);

/// Generates `count` functions and keeps one representative per profile
/// cluster, at most `representatives` of them.
pub fn representative_corpus(
    count: usize,
    representatives: usize,
    pool: &[AtomKind],
    probe_budget: usize,
    seed: u64,
) -> Vec<SurrogateFunction> {
    let corpus = generate_corpus(count, CORPUS_DIMS, pool, seed);
    let mut rng = RngStream::new(seed, 1);
    cluster_corpus(&corpus, representatives, probe_budget, &mut rng)
        .into_iter()
        .map(|i| corpus[i].clone())
        .collect()
}
