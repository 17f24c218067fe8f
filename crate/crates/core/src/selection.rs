//! Bivariate screening of candidate predictors, importance ranking, and
//! the forward prefix search scored by out-of-bag error under repeated
//! stratified cross-validation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{stratified_kfold, Cell, Cohort};
use crate::error::{Error, Result};
use crate::forest::{train_forest, ForestParams};
use crate::matrix::Matrix;
use crate::rng;
use crate::stats::{chi_square_test, mann_whitney, shapiro_wilk_subsampled, ShapiroWilk, TestMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScreenTest {
    ChiSquare,
    MannWhitney,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenRow {
    pub predictor: String,
    pub test: ScreenTest,
    pub method: TestMethod,
    pub statistic: f64,
    pub df: Option<usize>,
    pub p_value: f64,
    pub kept: bool,
    /// Normality check per outcome group (0 then 1) for continuous predictors.
    pub normality: Option<[Option<ShapiroWilk>; 2]>,
    pub n: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenReport {
    pub alpha: f64,
    pub rows: Vec<ScreenRow>,
}

impl ScreenReport {
    pub fn kept(&self) -> Vec<String> {
        self.rows.iter().filter(|r| r.kept).map(|r| r.predictor.clone()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("predictor,test,method,statistic,df,p_value,kept,n,note\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:?},{:?},{},{},{},{},{},{}\n",
                r.predictor,
                r.test,
                r.method,
                r.statistic,
                r.df.map(|d| d.to_string()).unwrap_or_default(),
                r.p_value,
                r.kept,
                r.n,
                r.note.clone().unwrap_or_default()
            ));
        }
        out
    }
}

/// Tests each candidate against the binary outcome on rows where both are
/// observed: chi-square for categorical predictors, Mann-Whitney U (after a
/// Shapiro-Wilk check per group) for continuous ones. Kept when `p < alpha`.
pub fn bivariate_screen(cohort: &Cohort, outcome: &str, candidates: &[String], alpha: f64, seed: u64) -> Result<ScreenReport> {
    let ycol = cohort.column(outcome)?;
    let y: Vec<Option<usize>> = ycol.level_indices();
    if ycol.spec.levels.len() != 2 {
        return Err(Error::InvalidOutcome(format!("{outcome} must have two levels")));
    }
    let mut rows = Vec::with_capacity(candidates.len());
    for (ci, name) in candidates.iter().enumerate() {
        let col = cohort.column(name)?;
        if col.spec.kind.is_categorical() {
            let levels = col.spec.levels.len();
            let mut table = vec![vec![0u64; 2]; levels];
            let mut n = 0;
            for (cell, yi) in col.level_indices().iter().zip(&y) {
                if let (Some(l), Some(c)) = (cell, yi) {
                    table[*l][*c] += 1;
                    n += 1;
                }
            }
            let row = match chi_square_test(&table) {
                Ok(t) => ScreenRow {
                    predictor: name.clone(),
                    test: ScreenTest::ChiSquare,
                    method: t.method,
                    statistic: t.statistic,
                    df: Some(t.df),
                    p_value: t.p_value,
                    kept: t.p_value < alpha,
                    normality: None,
                    n,
                    note: None,
                },
                Err(Error::DegenerateTable) => ScreenRow {
                    predictor: name.clone(),
                    test: ScreenTest::ChiSquare,
                    method: TestMethod::Asymptotic,
                    statistic: 0.0,
                    df: Some(0),
                    p_value: 1.0,
                    kept: false,
                    normality: None,
                    n,
                    note: Some("single observed level".into()),
                },
                Err(e) => return Err(e),
            };
            rows.push(row);
        } else {
            let mut groups: [Vec<f64>; 2] = [vec![], vec![]];
            for (cell, yi) in col.cells.iter().zip(&y) {
                if let (Cell::Numeric(v), Some(c)) = (cell, yi) {
                    groups[*c].push(*v);
                }
            }
            let sw = |g: usize| shapiro_wilk_subsampled(&groups[g], rng::derive_seed(seed, &[ci as u64, g as u64])).ok();
            let mw = mann_whitney(&groups[0], &groups[1])?;
            rows.push(ScreenRow {
                predictor: name.clone(),
                test: ScreenTest::MannWhitney,
                method: mw.method,
                statistic: mw.u,
                df: None,
                p_value: mw.p_value,
                kept: mw.p_value < alpha,
                normality: Some([sw(0), sw(1)]),
                n: groups[0].len() + groups[1].len(),
                note: None,
            });
        }
    }
    Ok(ScreenReport { alpha, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub name: String,
    /// Column in the matrix that was ranked.
    pub column: usize,
    pub importance: f64,
    pub importance_raw: f64,
}

/// Features in descending normalized importance, ties to the lower column.
pub fn rank_by_importance(x: &Matrix, y: &[u8], names: &[String], params: &ForestParams) -> Result<Vec<RankedFeature>> {
    if names.len() != x.n_cols() {
        return Err(Error::FeatureMismatch { expected: x.n_cols(), got: names.len() });
    }
    let model = train_forest(x, y, params)?;
    let mut ranked: Vec<RankedFeature> = names
        .iter()
        .enumerate()
        .map(|(j, n)| RankedFeature {
            name: n.clone(),
            column: j,
            importance: model.importance.normalized[j],
            importance_raw: model.importance.raw[j],
        })
        .collect();
    ranked.sort_by(|a, b| b.importance.total_cmp(&a.importance).then(a.column.cmp(&b.column)));
    Ok(ranked)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub folds: usize,
    pub repeats: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { folds: 10, repeats: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetPoint {
    pub m: usize,
    pub feature_added: String,
    pub mean_oob: f64,
    pub sd_oob: f64,
    /// Error on the held-out fold; diagnostic only.
    pub mean_holdout: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetCurve {
    pub points: Vec<SubsetPoint>,
    pub chosen_m: usize,
    pub chosen_features: Vec<String>,
}

impl SubsetCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,feature_added,mean_oob,sd_oob,mean_holdout\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{},{},{}\n", p.m, p.feature_added, p.mean_oob, p.sd_oob, p.mean_holdout));
        }
        out
    }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// For every prefix of the ranking, trains one forest per (repeat, fold)
/// on the fold's training portion and records its out-of-bag error. The
/// chosen prefix minimizes the mean error, ties to the shorter prefix.
pub fn stepwise_oob(x: &Matrix, y: &[u8], ranking: &[RankedFeature], cv: &CvConfig, params: &ForestParams) -> Result<SubsetCurve> {
    if ranking.is_empty() || ranking.len() > x.n_cols() {
        return Err(Error::FeatureMismatch { expected: x.n_cols(), got: ranking.len() });
    }
    if cv.folds < 2 || cv.repeats == 0 {
        return Err(Error::Config("cross-validation needs folds >= 2 and repeats >= 1".into()));
    }
    let seed = params.seed;
    let assignments: Vec<Vec<usize>> =
        (0..cv.repeats).map(|r| stratified_kfold(y, cv.folds, rng::derive_seed(seed, &[0xCF, r as u64]))).collect::<Result<_>>()?;
    let cells: Vec<(usize, usize, usize)> = (1..=ranking.len())
        .flat_map(|m| (0..cv.repeats).flat_map(move |r| (0..cv.folds).map(move |f| (m, r, f))))
        .collect();
    let results: Vec<(f64, f64)> = cells
        .par_iter()
        .map(|&(m, r, f)| {
            let cols: Vec<usize> = ranking[..m].iter().map(|rf| rf.column).collect();
            let sub = x.select_columns(&cols);
            let train: Vec<usize> = (0..y.len()).filter(|&i| assignments[r][i] != f).collect();
            let held: Vec<usize> = (0..y.len()).filter(|&i| assignments[r][i] == f).collect();
            let ytr: Vec<u8> = train.iter().map(|&i| y[i]).collect();
            let p = params.with_seed(rng::derive_seed(seed, &[r as u64, f as u64, m as u64]));
            let model = train_forest(&sub.select_rows(&train), &ytr, &p)?;
            let pred = model.predict(&sub.select_rows(&held))?;
            let wrong = held.iter().zip(&pred).filter(|(&i, &p)| y[i] != p).count();
            Ok((model.oob_error, wrong as f64 / held.len() as f64))
        })
        .collect::<Result<_>>()?;
    let per_m = cv.repeats * cv.folds;
    let points: Vec<SubsetPoint> = ranking
        .iter()
        .enumerate()
        .map(|(k, rf)| {
            let chunk = &results[k * per_m..(k + 1) * per_m];
            let oob: Vec<f64> = chunk.iter().map(|c| c.0).collect();
            let hold: Vec<f64> = chunk.iter().map(|c| c.1).collect();
            let (mean_oob, sd_oob) = mean_sd(&oob);
            SubsetPoint { m: k + 1, feature_added: rf.name.clone(), mean_oob, sd_oob, mean_holdout: mean_sd(&hold).0, runs: per_m }
        })
        .collect();
    let best = points.iter().fold(&points[0], |b, p| if p.mean_oob < b.mean_oob { p } else { b });
    let chosen_m = best.m;
    Ok(SubsetCurve { chosen_features: ranking[..chosen_m].iter().map(|r| r.name.clone()).collect(), points, chosen_m })
}
