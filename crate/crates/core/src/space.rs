//! Search-space definition, configurations and the numeric unit encoding.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Errors raised while building or parsing a search space.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpaceError {
    #[error("search space must contain at least one hyperparameter")]
    Empty,
    #[error("duplicate hyperparameter name `{0}`")]
    DuplicateName(String),
    #[error("hyperparameter `{name}`: lower bound {lower} must be below upper bound {upper}")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("hyperparameter `{name}`: log scale requires a positive lower bound (got {lower})")]
    NonPositiveLogBound { name: String, lower: f64 },
    #[error("hyperparameter `{name}`: categorical needs at least two distinct choices")]
    TooFewChoices { name: String },
    #[error("hyperparameter `{name}`: missing field `{field}`")]
    MissingField { name: String, field: &'static str },
    #[error("hyperparameter `{name}`: unknown kind `{kind}`")]
    UnknownKind { name: String, kind: String },
    #[error("hyperparameter `{name}`: unknown scale `{scale}`")]
    UnknownScale { name: String, scale: String },
    #[error("invalid search space document: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamKind {
    Continuous { lower: f64, upper: f64, scale: Scale },
    Integer { lower: i64, upper: i64 },
    Categorical { choices: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperparameterSpec {
    pub name: String,
    pub kind: ParamKind,
}

impl HyperparameterSpec {
    pub fn continuous(name: &str, lower: f64, upper: f64) -> Self {
        Self {
            name: name.to_string(),
            kind: ParamKind::Continuous {
                lower,
                upper,
                scale: Scale::Linear,
            },
        }
    }

    pub fn log_uniform(name: &str, lower: f64, upper: f64) -> Self {
        Self {
            name: name.to_string(),
            kind: ParamKind::Continuous {
                lower,
                upper,
                scale: Scale::Log,
            },
        }
    }

    pub fn integer(name: &str, lower: i64, upper: i64) -> Self {
        Self {
            name: name.to_string(),
            kind: ParamKind::Integer { lower, upper },
        }
    }

    pub fn categorical<S: AsRef<str>>(name: &str, choices: &[S]) -> Self {
        Self {
            name: name.to_string(),
            kind: ParamKind::Categorical {
                choices: choices.iter().map(|c| c.as_ref().to_string()).collect(),
            },
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, ParamKind::Categorical { .. })
    }

    fn validate(&self) -> Result<(), SpaceError> {
        match &self.kind {
            ParamKind::Continuous {
                lower,
                upper,
                scale,
            } => {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return Err(SpaceError::InvalidBounds {
                        name: self.name.clone(),
                        lower: *lower,
                        upper: *upper,
                    });
                }
                if *scale == Scale::Log && *lower <= 0.0 {
                    return Err(SpaceError::NonPositiveLogBound {
                        name: self.name.clone(),
                        lower: *lower,
                    });
                }
            }
            ParamKind::Integer { lower, upper } => {
                if lower >= upper {
                    return Err(SpaceError::InvalidBounds {
                        name: self.name.clone(),
                        lower: *lower as f64,
                        upper: *upper as f64,
                    });
                }
            }
            ParamKind::Categorical { choices } => {
                let distinct: HashSet<&String> = choices.iter().collect();
                if choices.len() < 2 || distinct.len() != choices.len() {
                    return Err(SpaceError::TooFewChoices {
                        name: self.name.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Maps a value of this hyperparameter into `[0, 1]`.
    pub fn encode(&self, value: &Value) -> f64 {
        match (&self.kind, value) {
            (
                ParamKind::Continuous {
                    lower,
                    upper,
                    scale: Scale::Linear,
                },
                Value::Real(v),
            ) => (v - lower) / (upper - lower),
            (
                ParamKind::Continuous {
                    lower,
                    upper,
                    scale: Scale::Log,
                },
                Value::Real(v),
            ) => (v.ln() - lower.ln()) / (upper.ln() - lower.ln()),
            (ParamKind::Integer { lower, upper }, Value::Int(v)) => {
                (v - lower) as f64 / (upper - lower) as f64
            }
            (ParamKind::Categorical { choices }, Value::Choice(i)) => {
                *i as f64 / (choices.len() - 1) as f64
            }
            _ => panic!("value {value:?} does not match hyperparameter `{}`", self.name),
        }
    }

    /// Inverse of [`encode`](Self::encode); integers and choices are rounded
    /// to the nearest admissible value.
    pub fn decode(&self, unit: f64) -> Value {
        let u = unit.clamp(0.0, 1.0);
        match &self.kind {
            ParamKind::Continuous {
                lower,
                upper,
                scale: Scale::Linear,
            } => Value::Real((lower + u * (upper - lower)).clamp(*lower, *upper)),
            ParamKind::Continuous {
                lower,
                upper,
                scale: Scale::Log,
            } => {
                let v = (lower.ln() + u * (upper.ln() - lower.ln())).exp();
                Value::Real(v.clamp(*lower, *upper))
            }
            ParamKind::Integer { lower, upper } => {
                let v = (*lower as f64 + u * (upper - lower) as f64).round() as i64;
                Value::Int(v.clamp(*lower, *upper))
            }
            ParamKind::Categorical { choices } => {
                let i = (u * (choices.len() - 1) as f64).round() as usize;
                Value::Choice(i.min(choices.len() - 1))
            }
        }
    }

    pub fn contains(&self, value: &Value) -> bool {
        match (&self.kind, value) {
            (ParamKind::Continuous { lower, upper, .. }, Value::Real(v)) => {
                v.is_finite() && lower <= v && v <= upper
            }
            (ParamKind::Integer { lower, upper }, Value::Int(v)) => lower <= v && v <= upper,
            (ParamKind::Categorical { choices }, Value::Choice(i)) => *i < choices.len(),
            _ => false,
        }
    }

    /// Draws a value from the uniform prior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        match &self.kind {
            ParamKind::Continuous {
                lower,
                upper,
                scale: Scale::Linear,
            } => {
                let u: f64 = rng.random();
                Value::Real((lower + u * (upper - lower)).min(*upper))
            }
            ParamKind::Continuous {
                lower,
                upper,
                scale: Scale::Log,
            } => {
                let u: f64 = rng.random();
                let v = (lower.ln() + u * (upper.ln() - lower.ln())).exp();
                Value::Real(v.clamp(*lower, *upper))
            }
            ParamKind::Integer { lower, upper } => Value::Int(rng.random_range(*lower..=*upper)),
            ParamKind::Categorical { choices } => Value::Choice(rng.random_range(0..choices.len())),
        }
    }

    fn to_json_value(&self, value: &Value) -> serde_json::Value {
        match (&self.kind, value) {
            (ParamKind::Categorical { choices }, Value::Choice(i)) => {
                serde_json::Value::String(choices[*i].clone())
            }
            (_, Value::Real(v)) => serde_json::json!(v),
            (_, Value::Int(v)) => serde_json::json!(v),
            (_, Value::Choice(i)) => serde_json::json!(i),
        }
    }
}

/// One hyperparameter value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Real(f64),
    Int(i64),
    /// Index into the categorical choice list.
    Choice(usize),
}

impl Value {
    /// `Real` as is, `Int` widened, `Choice` as its index.
    pub fn as_real(&self) -> f64 {
        match self {
            Value::Real(x) => *x,
            Value::Int(x) => *x as f64,
            Value::Choice(i) => *i as f64,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(v) => write!(f, "{v}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Choice(i) => write!(f, "#{i}"),
        }
    }
}

/// An assignment of one value per hyperparameter, in search-space order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    values: Vec<Value>,
}

impl Config {
    pub fn new(values: Vec<Value>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn get(&self, index: usize) -> Value {
        self.values[index]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Keeps only the listed dimensions, in the given order.
    pub fn project(&self, dims: &[usize]) -> Config {
        Config::new(dims.iter().map(|&d| self.values[d]).collect())
    }

    pub fn as_reals(&self) -> Vec<f64> {
        self.values.iter().map(Value::as_real).collect()
    }
}

/// Ordered, validated set of hyperparameter specifications.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    specs: Vec<HyperparameterSpec>,
}

impl SearchSpace {
    pub fn new(specs: Vec<HyperparameterSpec>) -> Result<Self, SpaceError> {
        if specs.is_empty() {
            return Err(SpaceError::Empty);
        }
        let mut names = HashSet::new();
        for spec in &specs {
            if !names.insert(spec.name.as_str()) {
                return Err(SpaceError::DuplicateName(spec.name.clone()));
            }
            spec.validate()?;
        }
        Ok(Self { specs })
    }

    /// Unit hypercube of the given dimension with params named `x0, x1, ...`.
    pub fn unit_cube(dims: usize) -> Self {
        let specs = (0..dims)
            .map(|d| HyperparameterSpec::continuous(&format!("x{d}"), 0.0, 1.0))
            .collect();
        Self::new(specs).expect("unit cube is valid")
    }

    /// Parses `{"params": [{"name": .., "kind": .., ...}, ...]}`.
    pub fn from_json(text: &str) -> Result<Self, SpaceError> {
        let doc: RawSpaceDoc =
            serde_json::from_str(text).map_err(|e| SpaceError::Json(e.to_string()))?;
        let specs = doc
            .params
            .into_iter()
            .map(RawSpec::into_spec)
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(specs)
    }

    pub fn to_json(&self) -> String {
        let params: Vec<serde_json::Value> = self
            .specs
            .iter()
            .map(|s| match &s.kind {
                ParamKind::Continuous {
                    lower,
                    upper,
                    scale,
                } => serde_json::json!({
                    "name": s.name, "kind": "continuous", "lower": lower, "upper": upper,
                    "scale": scale,
                }),
                ParamKind::Integer { lower, upper } => serde_json::json!({
                    "name": s.name, "kind": "integer", "lower": lower, "upper": upper,
                }),
                ParamKind::Categorical { choices } => serde_json::json!({
                    "name": s.name, "kind": "categorical", "choices": choices,
                }),
            })
            .collect();
        serde_json::json!({ "params": params }).to_string()
    }

    pub fn specs(&self) -> &[HyperparameterSpec] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    /// Sub-space over the listed dimensions (in the given order).
    pub fn subspace(&self, dims: &[usize]) -> Result<SearchSpace, SpaceError> {
        SearchSpace::new(dims.iter().map(|&d| self.specs[d].clone()).collect())
    }

    pub fn contains(&self, config: &Config) -> bool {
        config.len() == self.len()
            && self
                .specs
                .iter()
                .zip(config.values())
                .all(|(s, v)| s.contains(v))
    }

    /// Draws one configuration from the uniform prior.
    pub fn sample_prior<R: Rng + ?Sized>(&self, rng: &mut R) -> Config {
        Config::new(self.specs.iter().map(|s| s.sample(rng)).collect())
    }

    /// Maps a configuration to `[0, 1]^d` in space order.
    pub fn encode_numeric(&self, config: &Config) -> Vec<f64> {
        self.specs
            .iter()
            .zip(config.values())
            .map(|(s, v)| s.encode(v))
            .collect()
    }

    pub fn decode_numeric(&self, unit: &[f64]) -> Config {
        Config::new(
            self.specs
                .iter()
                .zip(unit)
                .map(|(s, &u)| s.decode(u))
                .collect(),
        )
    }

    /// Name → value JSON object, categorical values rendered as labels.
    pub fn config_to_json(&self, config: &Config) -> serde_json::Value {
        let map = self
            .specs
            .iter()
            .zip(config.values())
            .map(|(s, v)| (s.name.clone(), s.to_json_value(v)))
            .collect::<serde_json::Map<_, _>>();
        serde_json::Value::Object(map)
    }
}

#[derive(Deserialize)]
struct RawSpaceDoc {
    params: Vec<RawSpec>,
}

#[derive(Deserialize)]
struct RawSpec {
    name: String,
    kind: String,
    lower: Option<f64>,
    upper: Option<f64>,
    scale: Option<String>,
    choices: Option<Vec<String>>,
}

impl RawSpec {
    fn into_spec(self) -> Result<HyperparameterSpec, SpaceError> {
        let missing = |field| SpaceError::MissingField {
            name: self.name.clone(),
            field,
        };
        let kind = match self.kind.as_str() {
            "continuous" => {
                let scale = match self.scale.as_deref() {
                    None | Some("linear") => Scale::Linear,
                    Some("log") => Scale::Log,
                    Some(other) => {
                        return Err(SpaceError::UnknownScale {
                            name: self.name.clone(),
                            scale: other.to_string(),
                        })
                    }
                };
                ParamKind::Continuous {
                    lower: self.lower.ok_or_else(|| missing("lower"))?,
                    upper: self.upper.ok_or_else(|| missing("upper"))?,
                    scale,
                }
            }
            "integer" => ParamKind::Integer {
                lower: self.lower.ok_or_else(|| missing("lower"))?.round() as i64,
                upper: self.upper.ok_or_else(|| missing("upper"))?.round() as i64,
            },
            "categorical" => ParamKind::Categorical {
                choices: self.choices.clone().ok_or_else(|| missing("choices"))?,
            },
            other => {
                return Err(SpaceError::UnknownKind {
                    name: self.name.clone(),
                    kind: other.to_string(),
                })
            }
        };
        Ok(HyperparameterSpec {
            name: self.name,
            kind,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::RngCore;

    /// Always yields the bit pattern that maps to 0.5 under `random::<f64>()`.
    struct MidpointRng;

    impl RngCore for MidpointRng {
        fn next_u32(&mut self) -> u32 {
            1 << 31
        }
        fn next_u64(&mut self) -> u64 {
            1 << 63
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            dst.fill(0x80);
        }
    }

    #[test]
    fn prior_midpoint_stub() {
        let space = SearchSpace::new(vec![HyperparameterSpec::continuous("x", 0.0, 1.0)]).unwrap();
        let c = space.sample_prior(&mut MidpointRng);
        assert_eq!(c.get(0), Value::Real(0.5));
    }

    #[test]
    fn prior_categorical_frequencies() {
        let space =
            SearchSpace::new(vec![HyperparameterSpec::categorical("c", &["A", "B"])]).unwrap();
        let mut rng = RngStream::new(7, 0);
        let n = 10_000;
        let a = (0..n)
            .filter(|_| space.sample_prior(&mut rng).get(0) == Value::Choice(0))
            .count();
        let freq = a as f64 / n as f64;
        assert!((0.45..=0.55).contains(&freq), "freq {freq}");
    }

    #[test]
    fn prior_log_median() {
        let space =
            SearchSpace::new(vec![HyperparameterSpec::log_uniform("x", 1.0, 100.0)]).unwrap();
        let mut rng = RngStream::new(11, 0);
        let mut xs: Vec<f64> = (0..10_000)
            .map(|_| match space.sample_prior(&mut rng).get(0) {
                Value::Real(v) => v,
                _ => unreachable!(),
            })
            .collect();
        xs.sort_by(f64::total_cmp);
        let median = 0.5 * (xs[4999] + xs[5000]);
        assert!((8.0..=12.5).contains(&median), "median {median}");
    }

    #[test]
    fn encode_examples() {
        let space = SearchSpace::new(vec![
            HyperparameterSpec::continuous("x", 0.0, 10.0),
            HyperparameterSpec::categorical("c", &["A", "B", "C"]),
            HyperparameterSpec::log_uniform("l", 1.0, 100.0),
        ])
        .unwrap();
        let c = Config::new(vec![Value::Real(5.0), Value::Choice(2), Value::Real(10.0)]);
        let e = space.encode_numeric(&c);
        assert_eq!(e[0], 0.5);
        assert_eq!(e[1], 1.0);
        assert!((e[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn validation_errors() {
        assert_eq!(SearchSpace::new(vec![]), Err(SpaceError::Empty));
        assert!(matches!(
            SearchSpace::new(vec![HyperparameterSpec::continuous("x", 1.0, 1.0)]),
            Err(SpaceError::InvalidBounds { .. })
        ));
        assert!(matches!(
            SearchSpace::new(vec![HyperparameterSpec::log_uniform("x", 0.0, 1.0)]),
            Err(SpaceError::NonPositiveLogBound { .. })
        ));
        assert!(matches!(
            SearchSpace::new(vec![HyperparameterSpec::categorical("c", &["A"])]),
            Err(SpaceError::TooFewChoices { .. })
        ));
        assert!(matches!(
            SearchSpace::new(vec![HyperparameterSpec::categorical("c", &["A", "A"])]),
            Err(SpaceError::TooFewChoices { .. })
        ));
        assert!(matches!(
            SearchSpace::new(vec![
                HyperparameterSpec::continuous("x", 0.0, 1.0),
                HyperparameterSpec::integer("x", 0, 3),
            ]),
            Err(SpaceError::DuplicateName(_))
        ));
    }

    #[test]
    fn json_document() {
        let text = r#"{"params":[{"name":"x","kind":"continuous","lower":0,"upper":1,"scale":"linear"},
            {"name":"c","kind":"categorical","choices":["A","B"]},
            {"name":"n","kind":"integer","lower":1,"upper":8}]}"#;
        let space = SearchSpace::from_json(text).unwrap();
        assert_eq!(space.len(), 3);
        assert_eq!(space.index_of("c"), Some(1));
        let again = SearchSpace::from_json(&space.to_json()).unwrap();
        assert_eq!(again, space);

        let bad = r#"{"params":[{"name":"x","kind":"continuous","upper":1}]}"#;
        assert_eq!(
            SearchSpace::from_json(bad),
            Err(SpaceError::MissingField {
                name: "x".into(),
                field: "lower"
            })
        );
    }

    #[test]
    fn integer_decode_rounds() {
        let s = HyperparameterSpec::integer("n", 0, 4);
        assert_eq!(s.decode(0.49), Value::Int(2));
        assert_eq!(s.decode(1.0), Value::Int(4));
        assert_eq!(s.encode(&Value::Int(1)), 0.25);
    }

    proptest::proptest! {
        #[test]
        fn encode_is_order_preserving(a in 1e-3f64..1e3, b in 1e-3f64..1e3) {
            let lin = HyperparameterSpec::continuous("x", 1e-3, 1e3);
            let log = HyperparameterSpec::log_uniform("y", 1e-3, 1e3);
            for s in [&lin, &log] {
                let ea = s.encode(&Value::Real(a));
                let eb = s.encode(&Value::Real(b));
                proptest::prop_assert_eq!(a < b, ea < eb);
                proptest::prop_assert!((0.0..=1.0).contains(&ea));
            }
        }

        #[test]
        fn prior_replay_is_bit_identical(seed in proptest::num::u64::ANY) {
            let space = SearchSpace::new(vec![
                HyperparameterSpec::log_uniform("l", 1e-4, 1.0),
                HyperparameterSpec::integer("n", -3, 9),
                HyperparameterSpec::categorical("c", &["a", "b", "c"]),
            ]).unwrap();
            let mut r1 = RngStream::new(seed, 5);
            let mut r2 = RngStream::new(seed, 5);
            for _ in 0..8 {
                let c = space.sample_prior(&mut r1);
                proptest::prop_assert!(space.contains(&c));
                proptest::prop_assert_eq!(c, space.sample_prior(&mut r2));
            }
        }
    }
}
