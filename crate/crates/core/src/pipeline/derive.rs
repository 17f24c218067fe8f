//! Raw instrument answers to the analysis predictors and the outcome label.

use serde::{Deserialize, Serialize};

use crate::data::{Cell, Cohort, Column, Kind, Role, VariableSpec};
use crate::error::{Error, Result};
use crate::instruments::{
    battery_raw_scores, categorize_bmi, categorize_hgs, classify_bp, collapse_hearing, global_cognitive_score, score_cesd8,
    score_ipaq, score_iqcode, social_isolation, weekly_drinks, zscore, ActivityLevel, BatteryResponses, CesdScoring,
    ContactFrequency, Hearing, HearingRaw, HgsNorms, HgsReading, IpaqInput, ProspectiveRubric, SdConvention, SocialContact,
    IQCODE_ITEMS,
};
use crate::labeling::{
    binarize_outcome, build_normative_subsample, classify_status, fit_norms, flag, functional_impairment, label_cells,
    residual_z, sex_of, CognitiveLabel, CognitiveStatus, LabelPath, NormativeOptions, NormsModel,
};
use crate::schema;

fn level(col: &Column, r: usize) -> Option<usize> {
    col.cells[r].code().and_then(|c| col.spec.level_index(c))
}

fn num(col: &Column, r: usize) -> Option<f64> {
    col.cells[r].as_f64()
}

fn cell_at(spec: &VariableSpec, index: Option<usize>) -> Cell {
    index.map_or(Cell::Missing, |i| Cell::Category(spec.levels[i].code))
}

fn yes_no(v: Option<bool>) -> Option<usize> {
    v.map(usize::from)
}

/// Copies a categorical column into the analysis coding, matching by label.
fn relabel(raw: &Column, target: &VariableSpec) -> Result<Vec<Cell>> {
    raw.cells
        .iter()
        .map(|c| match c {
            Cell::Missing => Ok(Cell::Missing),
            Cell::Category(code) => {
                let label = raw.spec.label_of(*code).unwrap_or_default();
                target.code_of(label).map(Cell::Category).ok_or_else(|| Error::CodebookViolation {
                    column: target.name.clone(),
                    value: label.to_string(),
                })
            }
            Cell::Numeric(v) => Err(Error::WrongKind(format!("{}: numeric cell {v}", raw.spec.name))),
        })
        .collect()
}

/// Scores every instrument and returns `id` plus the 21 candidate predictors.
pub fn derive_predictors(raw: &Cohort, norms: &HgsNorms, scoring: CesdScoring) -> Result<Cohort> {
    let n = raw.n_rows();
    let get = |name: &str| raw.column(name);
    let mut out = Cohort::new(n);
    out.push_column(VariableSpec::continuous(schema::ID, Role::Identifier), get(schema::ID)?.cells.clone())?;

    let age = get(schema::AGE)?;
    let sex = get(schema::SEX)?;
    for spec in schema::analysis_predictors() {
        let name = spec.name.clone();
        let cells: Vec<Cell> = match name.as_str() {
            schema::AGE_GROUP => (0..n).map(|r| cell_at(&spec, num(age, r).and_then(schema::age_group_index))).collect(),
            schema::LIFE_SATISFACTION => get(schema::LIFE_SATISFACTION)?.cells.clone(),
            schema::BMI => {
                let (w, h) = (get(schema::WEIGHT)?, get(schema::HEIGHT)?);
                (0..n)
                    .map(|r| match (num(w, r), num(h, r)) {
                        (Some(w), Some(h)) => Ok(cell_at(&spec, Some(categorize_bmi(w, h)?.category as usize))),
                        _ => Ok(Cell::Missing),
                    })
                    .collect::<Result<_>>()?
            }
            schema::HGS => {
                let (kgf, status) = (get(schema::HGS_KGF)?, get(schema::HGS_STATUS)?);
                (0..n)
                    .map(|r| {
                        let reading = match level(status, r) {
                            Some(0) => num(kgf, r).map(HgsReading::Measured),
                            Some(1) | Some(2) => Some(HgsReading::Unable),
                            _ => None,
                        };
                        let (Some(reading), Some(s), Some(a)) = (reading, sex_of(sex, r), num(age, r)) else {
                            return Ok(Cell::Missing);
                        };
                        let lvl = categorize_hgs(reading, s, a, norms)?;
                        Ok(cell_at(&spec, lvl.map(|l| l as usize)))
                    })
                    .collect::<Result<_>>()?
            }
            schema::PHYSICAL_ACTIVITY => {
                let cols: Vec<&Column> = [
                    schema::WALK_DAYS,
                    schema::WALK_MIN,
                    schema::MODERATE_DAYS,
                    schema::MODERATE_MIN,
                    schema::VIGOROUS_DAYS,
                    schema::VIGOROUS_MIN,
                ]
                .iter()
                .map(|c| get(c))
                .collect::<Result<_>>()?;
                (0..n)
                    .map(|r| {
                        let input = IpaqInput {
                            walk_days: num(cols[0], r),
                            walk_min: num(cols[1], r),
                            moderate_days: num(cols[2], r),
                            moderate_min: num(cols[3], r),
                            vigorous_days: num(cols[4], r),
                            vigorous_min: num(cols[5], r),
                        };
                        match score_ipaq(&input) {
                            Ok(rec) => Ok(cell_at(
                                &spec,
                                Some(match rec.category {
                                    ActivityLevel::High => 0,
                                    ActivityLevel::Moderate => 1,
                                    ActivityLevel::Low => 2,
                                }),
                            )),
                            Err(Error::MissingInput(_)) => Ok(Cell::Missing),
                            Err(e) => Err(e),
                        }
                    })
                    .collect::<Result<_>>()?
            }
            schema::HEARING => {
                let h = get(schema::HEARING_SELF)?;
                (0..n)
                    .map(|r| {
                        let raw = level(h, r).map(|i| HearingRaw::ALL[i]);
                        cell_at(
                            &spec,
                            collapse_hearing(raw).ok().map(|v| match v {
                                Hearing::Good => 0,
                                Hearing::Fair => 1,
                                Hearing::Poor => 2,
                            }),
                        )
                    })
                    .collect()
            }
            schema::DEPRESSIVE_SYMPTOMS => {
                let items: Vec<&Column> = schema::CESD.iter().map(|c| get(c)).collect::<Result<_>>()?;
                (0..n)
                    .map(|r| {
                        let answers: [Option<bool>; 8] = std::array::from_fn(|i| flag(items[i], r));
                        let v = score_cesd8(&answers, scoring).ok().filter(|s| s.complete).map(|s| usize::from(s.positive));
                        cell_at(&spec, v)
                    })
                    .collect()
            }
            schema::SOCIAL_ISOLATION => {
                let items: Vec<&Column> = schema::CONTACT.iter().map(|c| get(c)).collect::<Result<_>>()?;
                (0..n)
                    .map(|r| {
                        let f: [Option<ContactFrequency>; 3] =
                            std::array::from_fn(|i| level(items[i], r).and_then(ContactFrequency::from_index));
                        cell_at(&spec, social_isolation(f).map(|s| usize::from(s == SocialContact::Isolated)))
                    })
                    .collect()
            }
            schema::HYPERTENSION => {
                let sbp: Vec<&Column> = schema::SBP.iter().map(|c| get(c)).collect::<Result<_>>()?;
                let dbp: Vec<&Column> = schema::DBP.iter().map(|c| get(c)).collect::<Result<_>>()?;
                (0..n)
                    .map(|r| {
                        let readings: Vec<_> = sbp.iter().zip(&dbp).map(|(s, d)| (num(s, r), num(d, r))).collect();
                        match classify_bp(&readings) {
                            Ok(v) => Ok(cell_at(&spec, Some(usize::from(v)))),
                            Err(Error::AllMissing) => Ok(Cell::Missing),
                            Err(e) => Err(e),
                        }
                    })
                    .collect::<Result<_>>()?
            }
            schema::CATARACT => {
                let (dx, surgery) = (get(schema::CATARACT_DX)?, get(schema::CATARACT_SURGERY)?);
                (0..n)
                    .map(|r| {
                        let v = match (flag(dx, r), flag(surgery, r)) {
                            (Some(false), _) => Some(false),
                            (Some(true), Some(operated)) => Some(!operated),
                            _ => None,
                        };
                        cell_at(&spec, yes_no(v))
                    })
                    .collect()
            }
            schema::EXCESSIVE_ALCOHOL => {
                let (days, drinks) = (get(schema::ALCOHOL_DAYS)?, get(schema::ALCOHOL_DRINKS)?);
                (0..n)
                    .map(|r| match weekly_drinks(num(days, r), num(drinks, r)) {
                        Ok((_, excessive)) => Ok(cell_at(&spec, Some(usize::from(excessive)))),
                        Err(Error::MissingInput(_)) => Ok(Cell::Missing),
                        Err(e) => Err(e),
                    })
                    .collect::<Result<_>>()?
            }
            other => relabel(get(other)?, &spec)?,
        };
        out.push_column(spec, cells)?;
    }
    Ok(out)
}

/// Row counts from the labeling stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub participants: usize,
    pub battery_complete: usize,
    pub normative: usize,
    pub normal: usize,
    pub cognitive_impairment: usize,
    pub dementia: usize,
    pub unclassifiable: usize,
    pub informant_path: usize,
}

#[derive(Debug, Clone)]
pub struct Labeled {
    pub labels: Vec<Option<CognitiveLabel>>,
    pub norms: NormsModel,
    pub normative_rows: Vec<usize>,
    pub counts: LabelCounts,
}

fn battery_responses(raw: &Cohort, r: usize, semantic: &[&Column]) -> Result<BatteryResponses> {
    let get = |name: &str| raw.column(name);
    Ok(BatteryResponses {
        orientation: schema::ORIENTATION.iter().map(|c| Ok(flag(get(c)?, r))).collect::<Result<_>>()?,
        semantic_memory: semantic.iter().map(|c| flag(c, r)).collect(),
        fluency_animals: num(get(schema::FLUENCY)?, r),
        immediate_recall: num(get(schema::RECALL_IMMEDIATE)?, r),
        delayed_recall: num(get(schema::RECALL_DELAYED)?, r),
        prospective_code: num(get(schema::PROSPECTIVE)?, r).map(|v| v as i64),
    })
}

/// Global cognitive score, regression norms on the normative subsample,
/// residual z-scores and the three-way status for every participant.
pub fn label_participants(raw: &Cohort, opts: &NormativeOptions, rubric: &ProspectiveRubric) -> Result<Labeled> {
    let n = raw.n_rows();
    let semantic: Vec<&Column> = raw
        .columns()
        .iter()
        .filter(|c| c.name().starts_with(schema::SEMANTIC_MEMORY_PREFIX))
        .collect();

    let mut scores: Vec<Option<[f64; 6]>> = Vec::with_capacity(n);
    for r in 0..n {
        scores.push(match battery_raw_scores(&battery_responses(raw, r, &semantic)?, rubric) {
            Ok(s) => Some(s.0),
            Err(Error::MissingInput(_)) => None,
            Err(e) => return Err(e),
        });
    }
    let complete_rows: Vec<usize> = (0..n).filter(|&r| scores[r].is_some()).collect();
    let complete: Vec<bool> = scores.iter().map(Option::is_some).collect();

    // Subdomain z-scores over participants with a complete battery.
    let mut per_row = vec![Vec::with_capacity(6); complete_rows.len()];
    for d in 0..6 {
        let values: Vec<f64> = complete_rows.iter().map(|&r| scores[r].unwrap()[d]).collect();
        for (slot, z) in per_row.iter_mut().zip(zscore(&values, SdConvention::Population)?) {
            slot.push(z);
        }
    }
    let global = global_cognitive_score(&per_row, SdConvention::Population)?;
    let mut global_by_row = vec![None; n];
    for (&r, g) in complete_rows.iter().zip(global) {
        global_by_row[r] = Some(g);
    }

    let age = raw.column(schema::AGE)?;
    let sex = raw.column(schema::SEX)?;
    let edu = raw.column(schema::EDUCATION_YEARS)?;
    let covariates = |r: usize| Some((num(age, r)?, sex_of(sex, r)?, num(edu, r)?));

    let normative: Vec<usize> = build_normative_subsample(raw, &complete, opts)?
        .into_iter()
        .filter(|&r| covariates(r).is_some())
        .collect();
    let (mut ys, mut ages, mut sexes, mut edus) = (vec![], vec![], vec![], vec![]);
    for &r in &normative {
        let (a, s, e) = covariates(r).unwrap();
        ys.push(global_by_row[r].unwrap());
        ages.push(a);
        sexes.push(s);
        edus.push(e);
    }
    let norms = fit_norms(&ys, &ages, &sexes, &edus)?;

    let iadl: Vec<&Column> = schema::IADL.iter().map(|c| raw.column(c)).collect::<Result<_>>()?;
    let noncog = raw.column(schema::IADL_NONCOGNITIVE)?;
    let iq_items: Vec<&Column> = schema::iqcode_columns().iter().map(|c| raw.column(c)).collect::<Result<_>>()?;
    let mut labels = Vec::with_capacity(n);
    for r in 0..n {
        let z = match (global_by_row[r], covariates(r)) {
            (Some(g), Some((a, s, e))) => Some(residual_z(g, &norms, a, s, e)?),
            _ => None,
        };
        let difficulties: [bool; 4] = std::array::from_fn(|i| flag(iadl[i], r).unwrap_or(false));
        let functional = functional_impairment(&difficulties, opts.iadl_threshold);
        let items: [Option<u8>; IQCODE_ITEMS] = std::array::from_fn(|i| iq_items[i].cells[r].code().map(|c| c as u8));
        let iq = score_iqcode(&items).ok().map(|s| s.score);
        labels.push(match classify_status(z, functional, flag(noncog, r).unwrap_or(false), iq, complete[r] && z.is_some()) {
            Ok(l) => Some(l),
            Err(Error::Unclassifiable) => None,
            Err(e) => return Err(e),
        });
    }

    let count = |s: CognitiveStatus| labels.iter().flatten().filter(|l| l.status == s).count();
    let counts = LabelCounts {
        participants: n,
        battery_complete: complete_rows.len(),
        normative: normative.len(),
        normal: count(CognitiveStatus::Normal),
        cognitive_impairment: count(CognitiveStatus::CognitiveImpairment),
        dementia: count(CognitiveStatus::Dementia),
        unclassifiable: labels.iter().filter(|l| l.is_none()).count(),
        informant_path: labels.iter().flatten().filter(|l| l.path == LabelPath::Iqcode).count(),
    };
    Ok(Labeled { labels, norms, normative_rows: normative, counts })
}

/// Specs of the appended label columns.
pub fn label_specs() -> [VariableSpec; 3] {
    [
        VariableSpec::indexed(schema::COG_STATUS, Kind::Nominal, &CognitiveStatus::LABELS, "Normal", Role::Outcome),
        VariableSpec::continuous(schema::RESIDUAL_Z, Role::Outcome),
        VariableSpec::indexed(schema::LABEL_PATH, Kind::Binary, &["Battery", "Iqcode"], "Battery", Role::Outcome),
    ]
}

/// Appends the label columns to `derived` (same rows as the labels).
pub fn with_labels(derived: &Cohort, labels: &[Option<CognitiveLabel>]) -> Result<Cohort> {
    let mut out = derived.clone();
    for (spec, cells) in label_specs().into_iter().zip(label_cells(labels)) {
        out.push_column(spec, cells)?;
    }
    Ok(out)
}

/// Keeps normal and dementia participants and appends the binary outcome.
pub fn analysis_cohort(derived: &Cohort, labels: &[Option<CognitiveLabel>]) -> Result<Cohort> {
    let binary = binarize_outcome(&labels.iter().map(|l| l.map(|l| l.status)).collect::<Vec<_>>());
    let keep: Vec<usize> = (0..binary.len()).filter(|&r| binary[r].is_some()).collect();
    let mut out = derived.select_rows(&keep);
    let outcome = keep.iter().map(|&r| Cell::Category(i64::from(binary[r].unwrap()))).collect();
    out.push_column(schema::outcome_spec(), outcome)?;
    Ok(out)
}
