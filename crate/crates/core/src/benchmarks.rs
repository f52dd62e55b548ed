//! Closed-form benchmark objectives with their standard domains.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use thiserror::Error;

use crate::space::{HyperparameterSpec, SearchSpace};

#[derive(Debug, Error, PartialEq)]
pub enum BenchmarkError {
    #[error("unknown benchmark `{0}`")]
    Unknown(String),
    #[error("{name} expects {expected} coordinates, got {got}")]
    WrongDims {
        name: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{name}: coordinate {index} = {value} outside [{lower}, {upper}]")]
    OutOfDomain {
        name: &'static str,
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Benchmark {
    Bohachevsky,
    Branin,
    Camelback,
    Forrester,
    GoldsteinPrice,
    Hartmann3,
    Hartmann6,
    Levy,
    Rosenbrock,
}

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];

const HARTMANN3_A: [[f64; 3]; 4] = [
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
];

const HARTMANN3_P: [[f64; 3]; 4] = [
    [0.3689, 0.1170, 0.2673],
    [0.4699, 0.4387, 0.7470],
    [0.1091, 0.8732, 0.5547],
    [0.0381, 0.5743, 0.8828],
];

const HARTMANN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];

const HARTMANN6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

fn hartmann<const D: usize>(x: &[f64], a: &[[f64; D]; 4], p: &[[f64; D]; 4]) -> f64 {
    let mut total = 0.0;
    for i in 0..4 {
        let inner: f64 = (0..D).map(|j| a[i][j] * (x[j] - p[i][j]).powi(2)).sum();
        total += HARTMANN_ALPHA[i] * (-inner).exp();
    }
    -total
}

impl Benchmark {
    pub const ALL: [Benchmark; 9] = [
        Benchmark::Bohachevsky,
        Benchmark::Branin,
        Benchmark::Camelback,
        Benchmark::Forrester,
        Benchmark::GoldsteinPrice,
        Benchmark::Hartmann3,
        Benchmark::Hartmann6,
        Benchmark::Levy,
        Benchmark::Rosenbrock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Bohachevsky => "Bohachevsky",
            Benchmark::Branin => "Branin",
            Benchmark::Camelback => "Camelback",
            Benchmark::Forrester => "Forrester",
            Benchmark::GoldsteinPrice => "GoldsteinPrice",
            Benchmark::Hartmann3 => "Hartmann3",
            Benchmark::Hartmann6 => "Hartmann6",
            Benchmark::Levy => "Levy",
            Benchmark::Rosenbrock => "Rosenbrock",
        }
    }

    pub fn bounds(self) -> Vec<(f64, f64)> {
        match self {
            Benchmark::Bohachevsky => vec![(-100.0, 100.0); 2],
            Benchmark::Branin => vec![(-5.0, 10.0), (0.0, 15.0)],
            Benchmark::Camelback => vec![(-3.0, 3.0), (-2.0, 2.0)],
            Benchmark::Forrester => vec![(0.0, 1.0)],
            Benchmark::GoldsteinPrice => vec![(-2.0, 2.0); 2],
            Benchmark::Hartmann3 => vec![(0.0, 1.0); 3],
            Benchmark::Hartmann6 => vec![(0.0, 1.0); 6],
            Benchmark::Levy => vec![(-10.0, 10.0); 2],
            Benchmark::Rosenbrock => vec![(-5.0, 10.0); 2],
        }
    }

    pub fn dims(self) -> usize {
        self.bounds().len()
    }

    /// Continuous linear-scale space over the benchmark domain.
    pub fn space(self) -> SearchSpace {
        let specs = self
            .bounds()
            .into_iter()
            .enumerate()
            .map(|(i, (lo, hi))| HyperparameterSpec::continuous(&format!("x{i}"), lo, hi))
            .collect();
        SearchSpace::new(specs).expect("benchmark domains are valid")
    }

    /// Known global minimum value, where one is documented.
    pub fn analytic_minimum(self) -> Option<f64> {
        match self {
            Benchmark::Bohachevsky | Benchmark::Levy | Benchmark::Rosenbrock => Some(0.0),
            Benchmark::Branin => Some(0.397_887_357_729_738),
            Benchmark::Camelback => Some(-1.031_628_453_489_877),
            Benchmark::Forrester => Some(-6.020_740_055_767_083),
            Benchmark::GoldsteinPrice => Some(3.0),
            Benchmark::Hartmann3 => Some(-3.862_782_147_820_755),
            Benchmark::Hartmann6 => Some(-3.322_368_011_391_339),
        }
    }

    pub fn evaluate(self, x: &[f64]) -> Result<f64, BenchmarkError> {
        let bounds = self.bounds();
        if x.len() != bounds.len() {
            return Err(BenchmarkError::WrongDims {
                name: self.name(),
                expected: bounds.len(),
                got: x.len(),
            });
        }
        for (index, (&value, &(lower, upper))) in x.iter().zip(&bounds).enumerate() {
            if !(lower..=upper).contains(&value) {
                return Err(BenchmarkError::OutOfDomain {
                    name: self.name(),
                    index,
                    value,
                    lower,
                    upper,
                });
            }
        }
        Ok(self.formula(x))
    }

    fn formula(self, x: &[f64]) -> f64 {
        match self {
            Benchmark::Bohachevsky => {
                let (a, b) = (x[0], x[1]);
                a * a + 2.0 * b * b - 0.3 * (3.0 * PI * a).cos() - 0.4 * (4.0 * PI * b).cos() + 0.7
            }
            Benchmark::Branin => {
                let (a, b) = (x[0], x[1]);
                let bb = 5.1 / (4.0 * PI * PI);
                let c = 5.0 / PI;
                let t = 1.0 / (8.0 * PI);
                (b - bb * a * a + c * a - 6.0).powi(2) + 10.0 * (1.0 - t) * a.cos() + 10.0
            }
            Benchmark::Camelback => {
                let (a, b) = (x[0], x[1]);
                (4.0 - 2.1 * a * a + a.powi(4) / 3.0) * a * a + a * b + (-4.0 + 4.0 * b * b) * b * b
            }
            Benchmark::Forrester => (6.0 * x[0] - 2.0).powi(2) * (12.0 * x[0] - 4.0).sin(),
            Benchmark::GoldsteinPrice => {
                let (a, b) = (x[0], x[1]);
                let f1 = 1.0
                    + (a + b + 1.0).powi(2)
                        * (19.0 - 14.0 * a + 3.0 * a * a - 14.0 * b + 6.0 * a * b + 3.0 * b * b);
                let f2 = 30.0
                    + (2.0 * a - 3.0 * b).powi(2)
                        * (18.0 - 32.0 * a + 12.0 * a * a + 48.0 * b - 36.0 * a * b + 27.0 * b * b);
                f1 * f2
            }
            Benchmark::Hartmann3 => hartmann(x, &HARTMANN3_A, &HARTMANN3_P),
            Benchmark::Hartmann6 => hartmann(x, &HARTMANN6_A, &HARTMANN6_P),
            Benchmark::Levy => {
                let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
                let d = w.len();
                let mut sum = (PI * w[0]).sin().powi(2);
                for wi in &w[..d - 1] {
                    sum += (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2));
                }
                sum + (w[d - 1] - 1.0).powi(2) * (1.0 + (2.0 * PI * w[d - 1]).sin().powi(2))
            }
            Benchmark::Rosenbrock => (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
        }
    }

    /// Numerically located minimum (value, tolerance): a low-discrepancy
    /// sweep of the domain followed by pattern-search refinement of the best
    /// points. Computed once per process.
    pub fn reference_minimum(self) -> (f64, f64) {
        static CACHE: [OnceLock<f64>; 9] = [const { OnceLock::new() }; 9];
        let slot = Benchmark::ALL.iter().position(|&b| b == self).unwrap();
        (*CACHE[slot].get_or_init(|| grid_minimum(self, REFERENCE_SAMPLES)), REFERENCE_TOLERANCE)
    }
}

pub const REFERENCE_SAMPLES: usize = 1_000_000;
pub const REFERENCE_TOLERANCE: f64 = 1e-2;

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = BenchmarkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name().to_ascii_lowercase() == wanted)
            .ok_or_else(|| BenchmarkError::Unknown(s.to_string()))
    }
}

/// Parses a comma-separated list; `all` expands to every benchmark.
pub fn parse_list(list: &str) -> Result<Vec<Benchmark>, BenchmarkError> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(Benchmark::ALL.to_vec());
    }
    list.split(',').map(str::parse).collect()
}

const PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut result = 0.0;
    let mut f = inv;
    while i > 0 {
        result += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    result
}

/// Halton point `i` (skipping the origin) scaled into the domain.
fn halton_point(i: u64, bounds: &[(f64, f64)]) -> Vec<f64> {
    bounds
        .iter()
        .zip(PRIMES)
        .map(|(&(lo, hi), p)| lo + radical_inverse(i + 1, p) * (hi - lo))
        .collect()
}

fn pattern_search(b: Benchmark, start: Vec<f64>, bounds: &[(f64, f64)]) -> f64 {
    let mut x = start;
    let mut fx = b.formula(&x);
    let mut steps: Vec<f64> = bounds.iter().map(|(lo, hi)| (hi - lo) * 1e-2).collect();
    for _ in 0..10_000 {
        let mut improved = false;
        for d in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[d] = (y[d] + sign * steps[d]).clamp(bounds[d].0, bounds[d].1);
                let fy = b.formula(&y);
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            for s in steps.iter_mut() {
                *s *= 0.5;
            }
            if steps.iter().zip(bounds).all(|(s, (lo, hi))| *s < (hi - lo) * 1e-12) {
                break;
            }
        }
    }
    fx
}

/// Minimum over `samples` Halton points, refined locally from the best ten.
pub fn grid_minimum(b: Benchmark, samples: usize) -> f64 {
    let bounds = b.bounds();
    let mut best: Vec<(f64, u64)> = Vec::with_capacity(11);
    for i in 0..samples as u64 {
        let v = b.formula(&halton_point(i, &bounds));
        if best.len() < 10 || v < best[best.len() - 1].0 {
            best.push((v, i));
            best.sort_by(|p, q| p.0.total_cmp(&q.0));
            best.truncate(10);
        }
    }
    best.iter()
        .map(|&(v, i)| pattern_search(b, halton_point(i, &bounds), &bounds).min(v))
        .fold(f64::INFINITY, f64::min)
}
