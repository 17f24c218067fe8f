//! Seeded synthetic cohorts with a known logistic data-generating process.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::data::{Cell, Cohort, Kind, Role, VariableSpec};
use crate::error::{Error, Result};
use crate::rng;
use crate::schema;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Marginal {
    /// Levels drawn with the given relative weights. `log_odds` holds one
    /// effect per level (0 at the reference); empty means no effect.
    Categorical {
        kind: Kind,
        levels: Vec<String>,
        reference: String,
        weights: Vec<f64>,
        #[serde(default)]
        log_odds: Vec<f64>,
    },
    /// Normal draw clamped to `[lo, hi]`, optionally rounded; `log_odds`
    /// is the effect per unit.
    Continuous {
        mean: f64,
        sd: f64,
        lo: f64,
        hi: f64,
        #[serde(default)]
        integer: bool,
        #[serde(default)]
        log_odds: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPredictor {
    pub name: String,
    pub marginal: Marginal,
    #[serde(default)]
    pub missing_rate: f64,
}

impl SyntheticPredictor {
    pub fn binary(name: &str, p_yes: f64, log_odds: f64) -> Self {
        SyntheticPredictor {
            name: name.to_string(),
            marginal: Marginal::Categorical {
                kind: Kind::Binary,
                levels: schema::NO_YES.iter().map(|s| s.to_string()).collect(),
                reference: "No".into(),
                weights: vec![1.0 - p_yes, p_yes],
                log_odds: vec![0.0, log_odds],
            },
            missing_rate: 0.0,
        }
    }

    pub fn categorical(name: &str, kind: Kind, levels: &[&str], reference: &str, weights: &[f64], log_odds: &[f64]) -> Self {
        SyntheticPredictor {
            name: name.to_string(),
            marginal: Marginal::Categorical {
                kind,
                levels: levels.iter().map(|s| s.to_string()).collect(),
                reference: reference.to_string(),
                weights: weights.to_vec(),
                log_odds: log_odds.to_vec(),
            },
            missing_rate: 0.0,
        }
    }

    pub fn with_missing(mut self, rate: f64) -> Self {
        self.missing_rate = rate;
        self
    }

    fn spec(&self) -> VariableSpec {
        match &self.marginal {
            Marginal::Categorical { kind, levels, reference, .. } => {
                let labels: Vec<&str> = levels.iter().map(String::as_str).collect();
                VariableSpec::indexed(&self.name, *kind, &labels, reference, Role::Predictor)
            }
            Marginal::Continuous { lo, hi, .. } => {
                VariableSpec::continuous(&self.name, Role::Predictor).with_range(*lo, *hi)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("synthetic predictor `{}`: {msg}", self.name)));
        if !(0.0..1.0).contains(&self.missing_rate) {
            return bad(format!("missing_rate {} outside [0, 1)", self.missing_rate));
        }
        match &self.marginal {
            Marginal::Categorical { levels, reference, weights, log_odds, .. } => {
                if levels.len() < 2 || weights.len() != levels.len() {
                    return bad("needs >= 2 levels and one weight per level".into());
                }
                if weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
                    return bad("weights must be non-negative with a positive sum".into());
                }
                let Some(r) = levels.iter().position(|l| l == reference) else {
                    return bad(format!("reference `{reference}` is not a level"));
                };
                if !log_odds.is_empty() && (log_odds.len() != levels.len() || log_odds[r] != 0.0) {
                    return bad("log_odds needs one entry per level and 0 at the reference".into());
                }
            }
            Marginal::Continuous { sd, lo, hi, .. } => {
                if !(*sd >= 0.0) || !(hi > lo) {
                    return bad("needs sd >= 0 and hi > lo".into());
                }
            }
        }
        self.spec().validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub prevalence: f64,
    pub predictors: Vec<SyntheticPredictor>,
}

impl SyntheticSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SyntheticSpec = serde_json::from_str(text).map_err(|e| Error::Config(format!("synthetic spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.prevalence > 0.0 && self.prevalence < 1.0) {
            return Err(Error::Config(format!("prevalence {} outside (0, 1)", self.prevalence)));
        }
        if self.n < 2 {
            return Err(Error::Config("synthetic cohort needs n >= 2".into()));
        }
        for (i, p) in self.predictors.iter().enumerate() {
            if self.predictors[..i].iter().any(|q| q.name == p.name) || p.name == schema::OUTCOME || p.name == schema::ID {
                return Err(Error::Config(format!("duplicate or reserved predictor name `{}`", p.name)));
            }
            p.validate()?;
        }
        Ok(())
    }
}

/// A generated effect on the log-odds scale, relative to the reference level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueEffect {
    pub predictor: String,
    pub level: Option<String>,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCohort {
    /// `id`, the predictors in spec order, then the outcome.
    pub cohort: Cohort,
    pub intercept: f64,
    pub truth: Vec<TrueEffect>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Intercept whose average predicted risk over `eta` equals `prevalence`.
fn calibrate_intercept(eta: &[f64], prevalence: f64) -> f64 {
    let mean_risk = |b: f64| eta.iter().map(|e| sigmoid(b + e)).sum::<f64>() / eta.len() as f64;
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_risk(mid) < prevalence {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Predictors from their marginals, the outcome from the logistic link with
/// an intercept calibrated to the target prevalence on the drawn sample,
/// then predictor cells blanked completely at random.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticCohort> {
    spec.validate()?;
    let n = spec.n;
    let mut eta = vec![0.0; n];
    let mut columns = Vec::with_capacity(spec.predictors.len());
    let mut truth = Vec::new();
    for (j, pred) in spec.predictors.iter().enumerate() {
        let mut r = rng::stream(seed, &[0x5E1, j as u64]);
        let vspec = pred.spec();
        let cells: Vec<Cell> = match &pred.marginal {
            Marginal::Categorical { levels, weights, log_odds, .. } => {
                let dist = WeightedIndex::new(weights).map_err(|e| Error::Config(format!("{}: {e}", pred.name)))?;
                for (l, b) in levels.iter().zip(log_odds) {
                    if Some(l.as_str()) != vspec.reference_level.as_deref() {
                        truth.push(TrueEffect { predictor: pred.name.clone(), level: Some(l.clone()), beta: *b });
                    }
                }
                (0..n)
                    .map(|i| {
                        let l = dist.sample(&mut r);
                        eta[i] += log_odds.get(l).copied().unwrap_or(0.0);
                        Cell::Category(vspec.levels[l].code)
                    })
                    .collect()
            }
            Marginal::Continuous { mean, sd, lo, hi, integer, log_odds } => {
                let normal = Normal::new(*mean, *sd).map_err(|e| Error::Config(format!("{}: {e}", pred.name)))?;
                truth.push(TrueEffect { predictor: pred.name.clone(), level: None, beta: *log_odds });
                (0..n)
                    .map(|i| {
                        let mut v = normal.sample(&mut r).clamp(*lo, *hi);
                        if *integer {
                            v = v.round().clamp(lo.ceil(), hi.floor());
                        }
                        eta[i] += log_odds * v;
                        Cell::Numeric(v)
                    })
                    .collect()
            }
        };
        columns.push((vspec, cells));
    }

    let intercept = calibrate_intercept(&eta, spec.prevalence);
    let mut r = rng::stream(seed, &[0x5E2]);
    let outcome: Vec<Cell> = eta.iter().map(|e| Cell::Category(i64::from(r.random_bool(sigmoid(intercept + e))))).collect();

    for (j, (pred, (_, cells))) in spec.predictors.iter().zip(columns.iter_mut()).enumerate() {
        if pred.missing_rate > 0.0 {
            let mut r = rng::stream(seed, &[0x5E3, j as u64]);
            for c in cells.iter_mut() {
                if r.random_bool(pred.missing_rate) {
                    *c = Cell::Missing;
                }
            }
        }
    }

    let mut cohort = Cohort::new(n);
    cohort.push_column(VariableSpec::continuous(schema::ID, Role::Identifier), (1..=n).map(|i| Cell::Numeric(i as f64)).collect())?;
    for (vspec, cells) in columns {
        cohort.push_column(vspec, cells)?;
    }
    cohort.push_column(schema::outcome_spec(), outcome)?;
    Ok(SyntheticCohort { cohort, intercept, truth })
}
