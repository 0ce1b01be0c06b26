//! Randomized hyperparameter search scored by cross-validation.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cv::{cross_validate, CvOptions, EvalReport};
use crate::data::DataTable;
use crate::error::{Error, Result};
use crate::models::{Family, HyperValue, ModelSpec};
use crate::rng::rng_from_seed;

pub const DEFAULT_DRAW_COUNT: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Distribution {
    Choice { values: Vec<HyperValue> },
    /// Inclusive on both ends.
    IntRange { low: i64, high: i64 },
    LogUniform { low: f64, high: f64 },
}

impl Distribution {
    fn validate(&self, name: &str) -> Result<()> {
        let ok = match self {
            Distribution::Choice { values } => !values.is_empty(),
            Distribution::IntRange { low, high } => low <= high,
            Distribution::LogUniform { low, high } => *low > 0.0 && low <= high && high.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("empty or invalid range for {name}: {self:?}")))
        }
    }

    pub fn draw(&self, rng: &mut impl Rng) -> HyperValue {
        match self {
            Distribution::Choice { values } => values[rng.gen_range(0..values.len())].clone(),
            Distribution::IntRange { low, high } => HyperValue::Int(rng.gen_range(*low..=*high)),
            Distribution::LogUniform { low, high } => {
                if low == high {
                    HyperValue::Float(*low)
                } else {
                    HyperValue::Float(rng.gen_range(low.ln()..high.ln()).exp().clamp(*low, *high))
                }
            }
        }
    }

    pub fn contains(&self, v: &HyperValue) -> bool {
        match (self, v) {
            (Distribution::Choice { values }, v) => values.contains(v),
            (Distribution::IntRange { low, high }, HyperValue::Int(i)) => low <= i && i <= high,
            (Distribution::LogUniform { low, high }, HyperValue::Float(x)) => low <= x && x <= high,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub params: BTreeMap<String, Distribution>,
    #[serde(default = "default_draws")]
    pub draw_count: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_draws() -> usize {
    DEFAULT_DRAW_COUNT
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SearchMetric {
    #[default]
    Accuracy,
    Sensitivity,
    Specificity,
    Auc,
}

impl SearchMetric {
    fn of(self, r: &EvalReport) -> Option<f64> {
        match self {
            SearchMetric::Accuracy => Some(r.accuracy.mean),
            SearchMetric::Sensitivity => r.sensitivity.map(|a| a.mean),
            SearchMetric::Specificity => r.specificity.map(|a| a.mean),
            SearchMetric::Auc => r.auc.map(|a| a.mean),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub seed: u64,
    pub hyperparameters: BTreeMap<String, HyperValue>,
    /// Mean cross-validated metric; 0 when the trial failed.
    pub score: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_index: usize,
    pub best_score: f64,
    pub best_spec: ModelSpec,
    pub metric: SearchMetric,
    pub trials: Vec<Trial>,
}

/// Draws `draw_count` independent specs (trial `i` uses seed `seed ^ i`,
/// parameters drawn in name order), cross-validates each and keeps the
/// highest mean score, ties to the earlier trial.
pub fn random_search(
    table: &DataTable,
    family: Family,
    space: &SearchSpace,
    features: &[String],
    cv: &CvOptions,
    metric: SearchMetric,
) -> Result<SearchResult> {
    if space.draw_count == 0 {
        return Err(Error::InvalidArgument("draw_count must be at least 1".into()));
    }
    if space.params.is_empty() {
        return Err(Error::InvalidArgument("search space is empty".into()));
    }
    let legal = family.defaults();
    for (name, dist) in &space.params {
        if !legal.contains_key(name) {
            return Err(Error::UnknownHyperparameter {
                family: family.to_string(),
                name: name.clone(),
            });
        }
        dist.validate(name)?;
    }

    let trials: Vec<(Trial, Option<ModelSpec>)> = (0..space.draw_count)
        .into_par_iter()
        .map(|index| {
            let seed = space.seed ^ index as u64;
            let mut rng = rng_from_seed(seed);
            let hyperparameters: BTreeMap<String, HyperValue> = space
                .params
                .iter()
                .map(|(k, d)| (k.clone(), d.draw(&mut rng)))
                .collect();
            let outcome = ModelSpec::new(family, hyperparameters.clone(), seed).and_then(|spec| {
                let report = cross_validate(table, &spec, features, cv)?;
                let score = metric
                    .of(&report)
                    .ok_or_else(|| Error::InvalidArgument(format!("{metric:?} undefined for this task")))?;
                Ok((spec, score))
            });
            let (score, error, spec) = match outcome {
                Ok((spec, score)) => (score, None, Some(spec)),
                Err(e) => (0.0, Some(e.to_string()), None),
            };
            (
                Trial {
                    index,
                    seed,
                    hyperparameters,
                    score,
                    error,
                },
                spec,
            )
        })
        .collect();

    let mut best = 0;
    for (i, (t, _)) in trials.iter().enumerate() {
        if t.score > trials[best].0.score {
            best = i;
        }
    }
    let best_score = trials[best].0.score;
    let best_spec = match &trials[best].1 {
        Some(s) => s.clone(),
        None => {
            // every trial failed; report the drawn values of the first one
            let t = &trials[best].0;
            let mut s = ModelSpec::defaults(family, t.seed);
            for (k, v) in &t.hyperparameters {
                s.hyperparameters.insert(k.clone(), v.clone());
            }
            s
        }
    };
    Ok(SearchResult {
        best_index: best,
        best_score,
        best_spec,
        metric,
        trials: trials.into_iter().map(|(t, _)| t).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_stay_in_range() {
        let mut rng = rng_from_seed(1);
        let d = Distribution::LogUniform { low: 1e-3, high: 10.0 };
        let i = Distribution::IntRange { low: 2, high: 4 };
        for _ in 0..500 {
            assert!(d.contains(&d.draw(&mut rng)));
            assert!(i.contains(&i.draw(&mut rng)));
        }
        assert!(Distribution::IntRange { low: 3, high: 2 }.validate("x").is_err());
        assert!(Distribution::Choice { values: vec![] }.validate("x").is_err());
        assert!(Distribution::LogUniform { low: 0.0, high: 1.0 }.validate("x").is_err());
    }
}
