//! The adaptive optimizer loop with an ask/tell interface.
//!
//! Each adaptive step computes statistics on the full history, asks the
//! predictor for parameters, filters the history, locks some dimensions and
//! runs TPE on the remaining ones.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::blocking::{
    anova_report, assign_locked_values, choose_locked, correlation_report, select_categorical_candidates,
    select_numeric_candidates, AnovaReport, CutoffMode,
};
use crate::filtering::{filter_history, FilterMode, FilterStatus};
use crate::history::{History, HistoryError, Trial};
use crate::predictor::{AtpeParams, Gates, ParamPredictor, StaticDefaults};
use crate::rng::RngStream;
use crate::space::{Config, SearchSpace, Value};
use crate::statistics::{compute_statistics, StatisticsVector};
use crate::surrogate::{base_pool, extended_pool, AtomKind};
use crate::tpe::{self, TpeConfig};

/// Prior samples drawn before the adaptive layer switches on.
pub const WARM_UP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Tpe,
    Atpe,
    AtpeR,
    AtpeF,
    AtpeCf,
    AtpeC,
    AtpeCCf,
    AtpeCfZscore,
}

const BASE_MENU: [FilterMode; 4] = [FilterMode::None, FilterMode::Random, FilterMode::Age, FilterMode::Loss];

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::Tpe,
        Variant::Atpe,
        Variant::AtpeR,
        Variant::AtpeF,
        Variant::AtpeCf,
        Variant::AtpeC,
        Variant::AtpeCCf,
        Variant::AtpeCfZscore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Tpe => "tpe",
            Variant::Atpe => "atpe",
            Variant::AtpeR => "atpe-r",
            Variant::AtpeF => "atpe-f",
            Variant::AtpeCf => "atpe-cf",
            Variant::AtpeC => "atpe-c",
            Variant::AtpeCCf => "atpe-c-cf",
            Variant::AtpeCfZscore => "atpe-cf-zscore",
        }
    }

    pub fn is_adaptive(self) -> bool {
        self != Variant::Tpe
    }

    pub fn cutoff_mode(self) -> CutoffMode {
        match self {
            Variant::AtpeR | Variant::AtpeC | Variant::AtpeCCf => CutoffMode::CountReversed,
            _ => CutoffMode::CountOriginal,
        }
    }

    /// Filter modes the predictor may choose from.
    pub fn filter_menu(self) -> Vec<FilterMode> {
        let mut menu = BASE_MENU.to_vec();
        match self {
            Variant::AtpeF => menu.extend([FilterMode::Clustering, FilterMode::Zscore]),
            Variant::AtpeCfZscore => menu.push(FilterMode::Zscore),
            _ => {}
        }
        menu
    }

    /// Surrogate atoms used when training a predictor for this variant.
    pub fn atom_pool(self) -> Vec<AtomKind> {
        match self {
            Variant::AtpeCf | Variant::AtpeCCf | Variant::AtpeCfZscore => extended_pool(),
            _ => base_pool(),
        }
    }

    pub fn categorical_blocking(self) -> bool {
        matches!(self, Variant::AtpeC | Variant::AtpeCCf)
    }

    pub fn gates(self) -> Gates {
        Gates {
            menu: self.filter_menu(),
            cutoff_mode: self.cutoff_mode(),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_ascii_lowercase().replace('_', "-");
        Variant::ALL.into_iter().find(|v| v.name() == wanted).ok_or_else(|| {
            let names: Vec<&str> = Variant::ALL.iter().map(|v| v.name()).collect();
            format!("unknown variant `{s}` (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SessionError {
    #[error("loss must be finite, got {0}")]
    NonFiniteLoss(f64),
    #[error("configuration is outside the search space")]
    OutOfDomain,
    #[error(transparent)]
    History(#[from] HistoryError),
}

/// What the adaptive layer did during the latest `ask`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub stats: StatisticsVector,
    pub params: AtpeParams,
    pub filter_status: FilterStatus,
    pub filtered_len: usize,
    pub locked: Vec<(usize, Value)>,
}

#[derive(Debug, Clone)]
pub struct OptimizerSession {
    space: SearchSpace,
    history: History,
    variant: Variant,
    predictor: Arc<dyn ParamPredictor>,
    rng: RngStream,
    incumbent: Option<usize>,
    last_step: Option<StepRecord>,
}

impl OptimizerSession {
    /// The session draws from stream 0 of `seed`.
    pub fn new(space: SearchSpace, variant: Variant, predictor: Arc<dyn ParamPredictor>, seed: u64) -> Self {
        Self {
            space,
            history: History::new(),
            variant,
            predictor,
            rng: RngStream::new(seed, 0),
            incumbent: None,
            last_step: None,
        }
    }

    pub fn with_defaults(space: SearchSpace, variant: Variant, seed: u64) -> Self {
        Self::new(space, variant, Arc::new(StaticDefaults), seed)
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn incumbent(&self) -> Option<&Trial> {
        self.incumbent.map(|i| &self.history.trials()[i])
    }

    pub fn last_step(&self) -> Option<&StepRecord> {
        self.last_step.as_ref()
    }

    pub fn ask(&mut self) -> Config {
        self.last_step = None;
        if !self.variant.is_adaptive() {
            return tpe::suggest(&self.history, &self.space, &TpeConfig::default(), &mut self.rng);
        }
        if self.history.len() < WARM_UP {
            return self.space.sample_prior(&mut self.rng);
        }
        let (config, record) = self.adaptive_step();
        self.last_step = Some(record);
        config
    }

    fn adaptive_step(&mut self) -> (Config, StepRecord) {
        let history = &self.history;
        let space = &self.space;
        let rng = &mut self.rng;

        let correlations = correlation_report(history, space);
        let anova = if self.variant.categorical_blocking() {
            anova_report(history, space)
        } else {
            AnovaReport::default()
        };
        let stats = compute_statistics(history, &correlations);
        let params = self.predictor.predict(&stats, &self.variant.gates(), rng);

        let filtered = filter_history(history, &params.filter, space, rng);

        let b = &params.blocking;
        let numeric = select_numeric_candidates(&correlations, b);
        let mut locked_dims = choose_locked(
            &numeric,
            b.probability_mode,
            b.fixed_probability,
            b.correlation_multiplier,
            rng,
        );
        if self.variant.categorical_blocking() {
            let categorical = select_categorical_candidates(&anova, b);
            locked_dims.extend(choose_locked(
                &categorical,
                b.probability_mode,
                b.fixed_probability,
                b.anova_multiplier,
                rng,
            ));
        }
        locked_dims.sort_unstable();
        let locked = assign_locked_values(&locked_dims, history, b, rng);

        let free: Vec<usize> = (0..space.len()).filter(|d| !locked_dims.contains(d)).collect();
        let mut values: Vec<Option<Value>> = vec![None; space.len()];
        for (d, v) in &locked {
            values[*d] = Some(*v);
        }
        if !free.is_empty() {
            let sub_space = space.subspace(&free).expect("free dims index the space");
            let sub_history = filtered.history.project(&free);
            let sub = tpe::suggest(&sub_history, &sub_space, &params.tpe, rng);
            for (k, &d) in free.iter().enumerate() {
                values[d] = Some(sub.get(k));
            }
        }
        let config = Config::new(values.into_iter().map(|v| v.expect("every dim assigned")).collect());
        let record = StepRecord {
            stats,
            params,
            filter_status: filtered.status,
            filtered_len: filtered.history.len(),
            locked,
        };
        (config, record)
    }

    /// Records an evaluation; the incumbent moves only on strict improvement.
    pub fn tell(&mut self, config: Config, loss: f64) -> Result<u64, SessionError> {
        if !loss.is_finite() {
            return Err(SessionError::NonFiniteLoss(loss));
        }
        if !self.space.contains(&config) {
            return Err(SessionError::OutOfDomain);
        }
        let id = self.history.push(config, loss)?;
        let pos = self.history.len() - 1;
        let improved = match self.incumbent() {
            None => true,
            Some(best) => loss < best.loss,
        };
        if improved {
            self.incumbent = Some(pos);
        }
        Ok(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::HyperparameterSpec;

    fn quadratic(c: &Config) -> f64 {
        c.as_reals().iter().map(|x| (x - 0.3).powi(2)).sum()
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("atpe_cf_zscore".parse::<Variant>().unwrap(), Variant::AtpeCfZscore);
        let err = "atpe-x".parse::<Variant>().unwrap_err();
        assert!(err.contains("atpe-cf-zscore"));
    }

    #[test]
    fn variant_gates() {
        assert!(Variant::AtpeF.filter_menu().contains(&FilterMode::Clustering));
        assert!(!Variant::AtpeCfZscore.filter_menu().contains(&FilterMode::Clustering));
        assert!(Variant::AtpeCfZscore.filter_menu().contains(&FilterMode::Zscore));
        assert!(!Variant::Atpe.filter_menu().contains(&FilterMode::Zscore));
        assert_eq!(Variant::AtpeR.cutoff_mode(), CutoffMode::CountReversed);
        assert!(Variant::AtpeC.categorical_blocking() && !Variant::AtpeCf.categorical_blocking());
        assert!(Variant::AtpeCf.atom_pool().contains(&AtomKind::Sigmoid));
        assert!(!Variant::Atpe.atom_pool().contains(&AtomKind::Sigmoid));
    }

    #[test]
    fn fresh_session_samples_prior() {
        let space = SearchSpace::unit_cube(3);
        let mut s = OptimizerSession::with_defaults(space.clone(), Variant::Atpe, 5);
        let c = s.ask();
        assert_eq!(c, space.sample_prior(&mut RngStream::new(5, 0)));
        assert!(s.last_step().is_none());
    }

    #[test]
    fn incumbent_rules() {
        let mut s = OptimizerSession::with_defaults(SearchSpace::unit_cube(1), Variant::Atpe, 1);
        let c = Config::new(vec![Value::Real(0.5)]);
        s.tell(c.clone(), 2.0).unwrap();
        let first = s.incumbent().unwrap().id;
        s.tell(c.clone(), 2.0).unwrap();
        assert_eq!(s.incumbent().unwrap().id, first);
        s.tell(c.clone(), 1.0).unwrap();
        assert_eq!(s.incumbent().unwrap().loss, 1.0);
        assert!(matches!(s.tell(c.clone(), f64::NAN), Err(SessionError::NonFiniteLoss(_))));
        assert_eq!(s.history().len(), 3);
        assert_eq!(s.tell(Config::new(vec![Value::Real(1.5)]), 0.0), Err(SessionError::OutOfDomain));
    }

    #[test]
    fn adaptive_loop_runs_and_respects_locks() {
        let space = SearchSpace::new(vec![
            HyperparameterSpec::continuous("a", 0.0, 1.0),
            HyperparameterSpec::continuous("b", 0.0, 1.0),
            HyperparameterSpec::categorical("c", &["x", "y", "z"]),
            HyperparameterSpec::continuous("d", 0.0, 1.0),
        ])
        .unwrap();
        for variant in Variant::ALL {
            let mut s = OptimizerSession::with_defaults(space.clone(), variant, 3);
            for _ in 0..40 {
                let c = s.ask();
                assert!(space.contains(&c));
                if let Some(rec) = s.last_step() {
                    for (d, v) in &rec.locked {
                        assert_eq!(c.get(*d), *v);
                    }
                    assert!(rec.params.is_valid());
                }
                let loss = quadratic(&Config::new(vec![c.get(0), c.get(1), c.get(3)]))
                    + if c.get(2) == Value::Choice(1) { 0.0 } else { 0.5 };
                s.tell(c, loss).unwrap();
            }
        }
    }

    #[test]
    fn sessions_are_reproducible() {
        let run = || {
            let mut s = OptimizerSession::with_defaults(SearchSpace::unit_cube(2), Variant::AtpeR, 17);
            let mut out = Vec::new();
            for _ in 0..30 {
                let c = s.ask();
                let l = quadratic(&c);
                out.push(c.clone());
                s.tell(c, l).unwrap();
            }
            out
        };
        assert_eq!(run(), run());
    }
}
