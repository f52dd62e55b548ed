//! Per-dimension Parzen density estimators on the encoded unit interval.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::history::Trial;
use crate::space::{ParamKind, SearchSpace, Value};

const PRIOR_CENTER: f64 = 0.5;
const PRIOR_BANDWIDTH: f64 = 1.0;
const MAX_BANDWIDTH: f64 = 1.0;

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Gaussian mixture with every component truncated and renormalized to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedGaussianMixture {
    centers: Vec<f64>,
    bandwidths: Vec<f64>,
    weights: Vec<f64>,
    /// Probability mass of each untruncated component inside `[0, 1]`.
    masses: Vec<f64>,
}

impl TruncatedGaussianMixture {
    /// One component per observation plus a broad prior component.
    ///
    /// Observation bandwidths are the larger distance to the adjacent sorted
    /// neighbours, with the domain edges acting as neighbours of the extreme
    /// points, clipped to `[1 / min(100, n + 2), 1]`.
    pub fn fit(observations: &[f64]) -> Self {
        let n = observations.len();
        let mut sorted = observations.to_vec();
        sorted.sort_by(f64::total_cmp);
        let min_bw = 1.0 / (n + 2).min(100) as f64;

        let mut centers = Vec::with_capacity(n + 1);
        let mut bandwidths = Vec::with_capacity(n + 1);
        for (i, &x) in sorted.iter().enumerate() {
            let left = if i == 0 { 0.0 } else { sorted[i - 1] };
            let right = if i + 1 == n { 1.0 } else { sorted[i + 1] };
            let bw = (x - left).max(right - x).clamp(min_bw, MAX_BANDWIDTH);
            centers.push(x);
            bandwidths.push(bw);
        }
        centers.push(PRIOR_CENTER);
        bandwidths.push(PRIOR_BANDWIDTH);

        let weights = vec![1.0 / (n + 1) as f64; n + 1];
        let masses = centers
            .iter()
            .zip(&bandwidths)
            .map(|(&mu, &sigma)| normal_cdf((1.0 - mu) / sigma) - normal_cdf(-mu / sigma))
            .collect();
        Self {
            centers,
            bandwidths,
            weights,
            masses,
        }
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let inv_sqrt_2pi = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        self.centers
            .iter()
            .zip(&self.bandwidths)
            .zip(self.weights.iter().zip(&self.masses))
            .map(|((&mu, &sigma), (&w, &mass))| {
                let z = (x - mu) / sigma;
                w * inv_sqrt_2pi * (-0.5 * z * z).exp() / (sigma * mass)
            })
            .sum()
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        self.pdf(x).ln()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let k = pick_weighted(&self.weights, rng);
        let (mu, sigma) = (self.centers[k], self.bandwidths[k]);
        loop {
            let z: f64 = StandardNormal.sample(rng);
            let x = mu + sigma * z;
            if (0.0..=1.0).contains(&x) {
                return x;
            }
        }
    }
}

/// Add-one smoothed frequency table over categorical choices.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedCategorical {
    weights: Vec<f64>,
}

impl SmoothedCategorical {
    pub fn fit(observations: &[usize], n_choices: usize) -> Self {
        let mut counts = vec![0usize; n_choices];
        for &c in observations {
            counts[c] += 1;
        }
        let total = (observations.len() + n_choices) as f64;
        Self {
            weights: counts.iter().map(|&c| (c + 1) as f64 / total).collect(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_pmf(&self, choice: usize) -> f64 {
        self.weights[choice].ln()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        pick_weighted(&self.weights, rng)
    }
}

fn pick_weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

#[derive(Debug, Clone, PartialEq)]
pub enum DimensionDensity {
    Continuous(TruncatedGaussianMixture),
    Categorical(SmoothedCategorical),
}

/// Independent per-dimension densities fitted to one group of trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ParzenModel {
    dims: Vec<DimensionDensity>,
}

impl ParzenModel {
    pub fn dims(&self) -> &[DimensionDensity] {
        &self.dims
    }

    /// Log-density of a value in dimension `d`. Continuous and integer
    /// values are evaluated in the encoded unit interval.
    pub fn log_density(&self, space: &SearchSpace, d: usize, value: &Value) -> f64 {
        match (&self.dims[d], value) {
            (DimensionDensity::Categorical(cat), Value::Choice(c)) => cat.log_pmf(*c),
            (DimensionDensity::Continuous(mix), v) => mix.log_pdf(space.specs()[d].encode(v)),
            (DimensionDensity::Categorical(_), v) => {
                panic!("categorical density evaluated at non-choice value {v:?}")
            }
        }
    }

    /// Draws a value for dimension `d`; integers are rounded on emission.
    pub fn sample_dim<R: Rng + ?Sized>(&self, space: &SearchSpace, d: usize, rng: &mut R) -> Value {
        match &self.dims[d] {
            DimensionDensity::Categorical(cat) => Value::Choice(cat.sample(rng)),
            DimensionDensity::Continuous(mix) => space.specs()[d].decode(mix.sample(rng)),
        }
    }
}

/// Fits one density per dimension of `space` to `trials`.
pub fn fit_parzen(trials: &[&Trial], space: &SearchSpace) -> ParzenModel {
    let dims = space
        .specs()
        .iter()
        .enumerate()
        .map(|(d, spec)| match &spec.kind {
            ParamKind::Categorical { choices } => {
                let obs: Vec<usize> = trials
                    .iter()
                    .map(|t| match t.config.get(d) {
                        Value::Choice(c) => c,
                        v => panic!("categorical dimension holds {v:?}"),
                    })
                    .collect();
                DimensionDensity::Categorical(SmoothedCategorical::fit(&obs, choices.len()))
            }
            _ => {
                let obs: Vec<f64> = trials.iter().map(|t| spec.encode(&t.config.get(d))).collect();
                DimensionDensity::Continuous(TruncatedGaussianMixture::fit(&obs))
            }
        })
        .collect();
    ParzenModel { dims }
}
