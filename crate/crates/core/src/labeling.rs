//! Dependent-variable construction: normative subsample, regression-based
//! norms, residual z-scores, IADL functional impairment, and the three-way
//! cognitive status rule.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Cell, Cohort, Column};
use crate::error::{Error, Result};
use crate::instruments::{score_cesd8, CesdScoring, IqcodeStatus, Sex, iqcode_status};
use crate::linalg;
use crate::schema;
use crate::stats::dist;

/// A residual z at or below this marks cognitive impairment.
pub const IMPAIRMENT_Z: f64 = -1.5;

/// Exclusion flags; a participant is normative iff none is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct NormativeFilter {
    pub sensory_impairment: bool,
    pub depression: bool,
    pub neurological_history: bool,
    pub excessive_alcohol: bool,
    pub memory_complaint: bool,
    pub iadl_impairment: bool,
    pub missing_cognitive: bool,
}

impl NormativeFilter {
    pub fn is_normative(&self) -> bool {
        !(self.sensory_impairment
            || self.depression
            || self.neurological_history
            || self.excessive_alcohol
            || self.memory_complaint
            || self.iadl_impairment
            || self.missing_cognitive)
    }
}

/// Sex-specific heavy-drinking rule: men >= 14 per week or >= 4 per
/// drinking day, women >= 7 per week or >= 3 per drinking day.
pub fn niaaa_excessive(sex: Sex, days_per_week: f64, drinks_per_day: f64) -> bool {
    let weekly = days_per_week * drinks_per_day;
    match sex {
        Sex::Male => weekly >= 14.0 || (days_per_week > 0.0 && drinks_per_day >= 4.0),
        Sex::Female => weekly >= 7.0 || (days_per_week > 0.0 && drinks_per_day >= 3.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormativeOptions {
    pub cesd8_scoring: CesdScoring,
    pub iadl_threshold: usize,
}

impl Default for NormativeOptions {
    fn default() -> Self {
        NormativeOptions { cesd8_scoring: CesdScoring::ReverseFiveSeven, iadl_threshold: 4 }
    }
}

/// `Some(true)` when a binary column holds its second level.
pub(crate) fn flag(col: &Column, row: usize) -> Option<bool> {
    col.cells[row].code().and_then(|c| col.spec.level_index(c)).map(|i| i > 0)
}

pub(crate) fn sex_of(col: &Column, row: usize) -> Option<Sex> {
    flag(col, row).map(|female| if female { Sex::Female } else { Sex::Male })
}

/// Per-row exclusion flags. A missing flag source counts as the flag being
/// set, since missing data is itself an exclusion criterion.
pub fn normative_flags(cohort: &Cohort, battery_complete: &[bool], opts: &NormativeOptions) -> Result<Vec<NormativeFilter>> {
    let get = |name: &str| cohort.column(name);
    let vision = get(schema::VISION_IMPAIRMENT)?;
    let hearing = get(schema::HEARING_IMPAIRMENT)?;
    let dep = get(schema::DEPRESSION_DX)?;
    let cesd: Vec<&Column> = schema::CESD.iter().map(|n| get(n)).collect::<Result<_>>()?;
    let neuro: Vec<&Column> = [schema::STROKE, schema::ALZHEIMER, schema::PARKINSON].iter().map(|n| get(n)).collect::<Result<_>>()?;
    let sex = get(schema::SEX)?;
    let days = get(schema::ALCOHOL_DAYS)?;
    let drinks = get(schema::ALCOHOL_DRINKS)?;
    let memory: Vec<&Column> = [schema::MEMORY_SELF, schema::MEMORY_INFORMANT].iter().map(|n| get(n)).collect::<Result<_>>()?;
    let iadl: Vec<&Column> = schema::IADL.iter().map(|n| get(n)).collect::<Result<_>>()?;
    if battery_complete.len() != cohort.n_rows() {
        return Err(Error::LengthMismatch { column: "battery_complete".into(), got: battery_complete.len(), expected: cohort.n_rows() });
    }

    let any_set = |cols: &[&Column], r: usize| cols.iter().any(|c| flag(c, r).unwrap_or(true));
    Ok((0..cohort.n_rows())
        .map(|r| {
            let mut items = [None; 8];
            for (slot, c) in items.iter_mut().zip(&cesd) {
                *slot = flag(c, r);
            }
            let cesd_positive = score_cesd8(&items, opts.cesd8_scoring).map(|s| s.positive || !s.complete).unwrap_or(true);
            let alcohol = match (sex_of(sex, r), days.cells[r].as_f64(), drinks.cells[r].as_f64()) {
                (Some(s), Some(d), Some(k)) => niaaa_excessive(s, d, k),
                _ => true,
            };
            let mut iadl_flags = [None; 4];
            for (slot, c) in iadl_flags.iter_mut().zip(&iadl) {
                *slot = flag(c, r);
            }
            NormativeFilter {
                sensory_impairment: any_set(&[vision, hearing], r),
                depression: flag(dep, r).unwrap_or(true) || cesd_positive,
                neurological_history: any_set(&neuro, r),
                excessive_alcohol: alcohol,
                memory_complaint: any_set(&memory, r),
                iadl_impairment: iadl_flags.iter().any(Option::is_none)
                    || functional_impairment(&iadl_flags.map(|f| f.unwrap_or(false)), opts.iadl_threshold),
                missing_cognitive: !battery_complete[r],
            }
        })
        .collect())
}

/// Indices of participants with no exclusion flag set.
pub fn build_normative_subsample(cohort: &Cohort, battery_complete: &[bool], opts: &NormativeOptions) -> Result<Vec<usize>> {
    Ok(normative_flags(cohort, battery_complete, opts)?
        .iter()
        .enumerate()
        .filter(|(_, f)| f.is_normative())
        .map(|(i, _)| i)
        .collect())
}

/// OLS norms: global score on intercept, age, sex (female = 1), years of
/// education.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormsModel {
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Slopes rescaled to sd units of predictor and response; 0 for the intercept.
    pub standardized: Vec<f64>,
    /// Residual standard error, `sqrt(SSE / (n - p))`.
    pub rmse: f64,
    pub r2: f64,
    pub f_stat: f64,
    pub f_p_value: f64,
    pub n: usize,
}

impl NormsModel {
    pub fn predict(&self, age: f64, sex: Sex, education_years: f64) -> f64 {
        let x = [1.0, age, if sex == Sex::Female { 1.0 } else { 0.0 }, education_years];
        x.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum()
    }
}

pub fn fit_norms(score: &[f64], age: &[f64], sex: &[Sex], education_years: &[f64]) -> Result<NormsModel> {
    let n = score.len();
    if age.len() != n || sex.len() != n || education_years.len() != n {
        return Err(Error::LengthMismatch { column: "norms inputs".into(), got: age.len(), expected: n });
    }
    let p = 4;
    if n <= p {
        return Err(Error::SingularDesign);
    }
    let x = DMatrix::from_fn(n, p, |i, j| match j {
        0 => 1.0,
        1 => age[i],
        2 => if sex[i] == Sex::Female { 1.0 } else { 0.0 },
        _ => education_years[i],
    });
    if !linalg::full_column_rank(&x) {
        return Err(Error::SingularDesign);
    }
    let y = DVector::from_column_slice(score);
    let beta = linalg::least_squares(&x, &y)?;
    let resid = &y - &x * &beta;
    let sse = resid.norm_squared();
    let ybar = y.mean();
    let sst = y.iter().map(|v| (v - ybar).powi(2)).sum::<f64>();
    let df_resid = (n - p) as f64;
    let mse = sse / df_resid;
    let xtx_inv = linalg::spd_inverse(&(x.transpose() * &x))?;
    let std_errors: Vec<f64> = (0..p).map(|j| (mse * xtx_inv[(j, j)]).sqrt()).collect();
    let p_values = (0..p)
        .map(|j| if std_errors[j] > 0.0 { dist::t_two_sided(beta[j] / std_errors[j], df_resid) } else if beta[j] == 0.0 { 1.0 } else { 0.0 })
        .collect();
    let r2 = if sst > 0.0 { (1.0 - sse / sst).max(0.0) } else { 0.0 };
    let ssr = (sst - sse).max(0.0);
    let (f_stat, f_p_value) = if sst > 0.0 && sse > 0.0 {
        let f = (ssr / (p - 1) as f64) / mse;
        (f, dist::f_sf(f, (p - 1) as f64, df_resid))
    } else if sst > 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        (0.0, 1.0)
    };
    let sd = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    let sd_y = sd(score);
    let female: Vec<f64> = sex.iter().map(|s| if *s == Sex::Female { 1.0 } else { 0.0 }).collect();
    let sds = [0.0, sd(age), sd(&female), sd(education_years)];
    let standardized = (0..p).map(|j| if j == 0 || sd_y == 0.0 { 0.0 } else { beta[j] * sds[j] / sd_y }).collect();
    Ok(NormsModel {
        terms: vec!["intercept".into(), "age".into(), "sex_female".into(), "education_years".into()],
        coefficients: beta.iter().copied().collect(),
        std_errors,
        p_values,
        standardized,
        rmse: mse.sqrt(),
        r2,
        f_stat,
        f_p_value,
        n,
    })
}

/// `(observed - predicted) / rmse`.
pub fn residual_z(observed: f64, norms: &NormsModel, age: f64, sex: Sex, education_years: f64) -> Result<f64> {
    if !(norms.rmse > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    Ok((observed - norms.predict(age, sex, education_years)) / norms.rmse)
}

/// Impaired when at least `threshold` of the four IADLs are reported difficult.
pub fn functional_impairment(difficulties: &[bool; 4], threshold: usize) -> bool {
    difficulties.iter().filter(|&&d| d).count() >= threshold
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, PartialOrd, Ord)]
pub enum CognitiveStatus {
    Normal,
    CognitiveImpairment,
    Dementia,
}

impl CognitiveStatus {
    pub const LABELS: [&'static str; 3] = ["Normal", "CognitiveImpairment", "Dementia"];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelPath {
    Battery,
    Iqcode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CognitiveLabel {
    pub status: CognitiveStatus,
    pub path: LabelPath,
    pub residual_z: Option<f64>,
    pub functional_impairment: bool,
}

/// Three-way status. With a complete battery and a residual z the battery
/// rules apply; otherwise the informant score is binned.
pub fn classify_status(
    residual_z: Option<f64>,
    functional: bool,
    functional_noncognitive: bool,
    iqcode: Option<f64>,
    battery_complete: bool,
) -> Result<CognitiveLabel> {
    if let (true, Some(z)) = (battery_complete, residual_z) {
        let cognitive = z <= IMPAIRMENT_Z;
        let status = match (cognitive, functional) {
            (true, true) => CognitiveStatus::Dementia,
            (true, false) => CognitiveStatus::CognitiveImpairment,
            (false, false) => CognitiveStatus::Normal,
            (false, true) if functional_noncognitive => CognitiveStatus::Normal,
            (false, true) => return Err(Error::Unclassifiable),
        };
        return Ok(CognitiveLabel { status, path: LabelPath::Battery, residual_z: Some(z), functional_impairment: functional });
    }
    let score = iqcode.ok_or(Error::Unclassifiable)?;
    let status = match iqcode_status(score) {
        IqcodeStatus::Normal => CognitiveStatus::Normal,
        IqcodeStatus::Impairment => CognitiveStatus::CognitiveImpairment,
        IqcodeStatus::Dementia => CognitiveStatus::Dementia,
    };
    Ok(CognitiveLabel { status, path: LabelPath::Iqcode, residual_z: None, functional_impairment: functional })
}

/// Dementia -> 1, Normal -> 0, everything else dropped (`None`).
pub fn binarize_outcome(labels: &[Option<CognitiveStatus>]) -> Vec<Option<u8>> {
    labels
        .iter()
        .map(|l| match l {
            Some(CognitiveStatus::Dementia) => Some(1),
            Some(CognitiveStatus::Normal) => Some(0),
            _ => None,
        })
        .collect()
}

/// Cells for the appended `cog_status`, `residual_z`, `label_path` columns.
pub fn label_cells(labels: &[Option<CognitiveLabel>]) -> [Vec<Cell>; 3] {
    let status = labels.iter().map(|l| l.map_or(Cell::Missing, |l| Cell::Category(l.status.index() as i64))).collect();
    let z = labels.iter().map(|l| l.and_then(|l| l.residual_z).map_or(Cell::Missing, Cell::Numeric)).collect();
    let path = labels
        .iter()
        .map(|l| l.map_or(Cell::Missing, |l| Cell::Category(if l.path == LabelPath::Battery { 0 } else { 1 })))
        .collect();
    [status, z, path]
}
