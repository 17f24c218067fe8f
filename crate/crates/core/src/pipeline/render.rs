//! Expands a synthetic analysis cohort into raw instrument answers that the
//! scoring stage maps back onto the same predictor values.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Cell, Cohort, Column};
use crate::error::{Error, Result};
use crate::instruments::{CesdScoring, HgsNorms, Sex};
use crate::rng::{self, StreamRng};
use crate::schema;

pub const SEMANTIC_ITEMS: usize = 3;

/// Years of schooling drawn for each education level.
const EDUCATION_YEARS: [(u32, u32); 6] = [(0, 0), (1, 3), (4, 4), (5, 10), (11, 11), (12, 17)];
/// BMI drawn inside each category, away from the cut points.
const BMI_BANDS: [(f64, f64); 7] =
    [(13.0, 16.0), (16.0, 18.5), (18.5, 25.0), (25.0, 30.0), (30.0, 35.0), (35.0, 40.0), (40.0, 48.0)];

struct Sheet {
    n: usize,
    cells: HashMap<String, Vec<Cell>>,
    specs: crate::data::Codebook,
}

impl Sheet {
    fn set(&mut self, name: &str, r: usize, cell: Cell) {
        self.cells.entry(name.to_string()).or_insert_with(|| vec![Cell::Missing; self.n])[r] = cell;
    }

    fn num(&mut self, name: &str, r: usize, v: f64) {
        self.set(name, r, Cell::Numeric(v));
    }

    /// Level by position in the raw codebook.
    fn level(&mut self, name: &str, r: usize, index: usize) {
        let code = self.specs.get(name).expect("raw column").levels[index].code;
        self.set(name, r, Cell::Category(code));
    }

    fn flag(&mut self, name: &str, r: usize, yes: bool) {
        self.level(name, r, usize::from(yes));
    }

    fn into_cohort(mut self) -> Result<Cohort> {
        let mut c = Cohort::new(self.n);
        for spec in self.specs.variables.clone() {
            let cells = self.cells.remove(&spec.name).unwrap_or_else(|| vec![Cell::Missing; self.n]);
            c.push_column(spec, cells)?;
        }
        Ok(c)
    }
}

fn label_index(col: &Column, r: usize) -> Option<usize> {
    col.cells[r].code().and_then(|c| col.spec.level_index(c))
}

fn uniform(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Renders every row of `analysis`, which must hold the schema predictors and
/// the binary outcome. Missing predictors become missing source answers.
pub fn render_raw(analysis: &Cohort, norms: &HgsNorms, scoring: CesdScoring, seed: u64) -> Result<Cohort> {
    let n = analysis.n_rows();
    let get = |name: &str| analysis.column(name);
    let y = analysis.binary_outcome(schema::OUTCOME)?;
    let mut sheet = Sheet { n, cells: HashMap::new(), specs: schema::raw_codebook(SEMANTIC_ITEMS) };
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    for r in 0..n {
        let mut g = rng::stream(seed, &[0x4A3, r as u64]);
        let g = &mut g;
        let idx = |name: &str| -> Result<Option<usize>> { Ok(label_index(get(name)?, r)) };
        let dementia = y[r] == 1;

        sheet.set(schema::ID, r, get(schema::ID)?.cells[r]);
        for name in [
            schema::SEX,
            schema::EDUCATION,
            schema::SKIN_COLOR,
            schema::OCCUPATION,
            schema::MARITAL_STATUS,
            schema::DIABETES,
            schema::HIGH_CHOLESTEROL,
            schema::RETINOPATHY,
            schema::SMOKING,
            schema::LONELINESS,
        ] {
            if let Some(i) = idx(name)? {
                sheet.level(name, r, i);
            }
        }
        sheet.set(schema::LIFE_SATISFACTION, r, get(schema::LIFE_SATISFACTION)?.cells[r]);

        let age = idx(schema::AGE_GROUP)?.map(|band| {
            let lo = 50.0 + 5.0 * band as f64;
            let hi = if band + 1 == schema::AGE_GROUPS.len() { 100.0 } else { lo + 5.0 };
            uniform(g, lo, hi).floor()
        });
        if let Some(a) = age {
            sheet.num(schema::AGE, r, a);
        }
        let sex = idx(schema::SEX)?.map(|i| if i == 1 { Sex::Female } else { Sex::Male });
        let edu_years = idx(schema::EDUCATION)?.map(|i| {
            let (lo, hi) = EDUCATION_YEARS[i];
            f64::from(g.random_range(lo..=hi))
        });
        if let Some(e) = edu_years {
            sheet.num(schema::EDUCATION_YEARS, r, e);
        }

        let height = uniform(g, 1.50, 1.80);
        sheet.num(schema::HEIGHT, r, height);
        if let Some(i) = idx(schema::BMI)? {
            let (lo, hi) = BMI_BANDS[i];
            let bmi = uniform(g, lo + 0.05, hi - 0.05);
            sheet.num(schema::WEIGHT, r, bmi * height * height);
        }

        match (idx(schema::HGS)?, sex, age) {
            (Some(level), Some(s), Some(a)) => {
                let cell = norms.cell(s, a).ok_or(Error::NormsGap { sex: format!("{s:?}"), age: a })?;
                let cuts = [0.0, cell.p20, cell.p40, cell.p60, cell.p80, cell.p80 + 10.0];
                if level == 0 && g.random_bool(0.1) {
                    sheet.level(schema::HGS_STATUS, r, 2);
                } else {
                    let (lo, hi) = (cuts[level], cuts[level + 1]);
                    let w = hi - lo;
                    sheet.level(schema::HGS_STATUS, r, 0);
                    sheet.num(schema::HGS_KGF, r, uniform(g, lo + 0.1 * w, hi - 0.1 * w));
                }
            }
            _ => sheet.level(schema::HGS_STATUS, r, 3),
        }

        // (walk, moderate, vigorous) as (days, minutes) per level.
        let ipaq = match idx(schema::PHYSICAL_ACTIVITY)? {
            Some(0) => Some([(0.0, 0.0), (0.0, 0.0), (4.0, 60.0)]),
            Some(1) => Some([(5.0, 30.0), (0.0, 0.0), (0.0, 0.0)]),
            Some(_) => Some([(2.0, 20.0), (0.0, 0.0), (0.0, 0.0)]),
            None => None,
        };
        if let Some(p) = ipaq {
            let names = [
                (schema::WALK_DAYS, schema::WALK_MIN),
                (schema::MODERATE_DAYS, schema::MODERATE_MIN),
                (schema::VIGOROUS_DAYS, schema::VIGOROUS_MIN),
            ];
            for ((d, m), (days, min)) in names.iter().zip(p) {
                sheet.num(d, r, days);
                sheet.num(m, r, min);
            }
        }

        let hearing = idx(schema::HEARING)?;
        if let Some(h) = hearing {
            let raw = match h {
                0 => g.random_range(0..=1),
                1 => 2,
                _ => g.random_range(3..=4),
            };
            sheet.level(schema::HEARING_SELF, r, raw);
        }

        let depressed = idx(schema::DEPRESSIVE_SYMPTOMS)?;
        if let Some(d) = depressed {
            let reversed = |item: usize| match scoring {
                CesdScoring::ReverseFiveSeven => item == 5 || item == 7,
                CesdScoring::ReverseFourSix => item == 4 || item == 6,
            };
            for (i, name) in schema::CESD.iter().enumerate() {
                // Every item scores when depressed, none otherwise.
                sheet.flag(name, r, (d == 1) != reversed(i + 1));
            }
        } else {
            sheet.flag(schema::CESD[0], r, false);
        }

        if let Some(iso) = idx(schema::SOCIAL_ISOLATION)? {
            for (i, name) in schema::CONTACT.iter().enumerate() {
                let f = if iso == 1 {
                    g.random_range(3..=5)
                } else if i == 0 {
                    g.random_range(0..=2)
                } else {
                    g.random_range(0..=5)
                };
                sheet.level(name, r, f);
            }
        }

        if let Some(h) = idx(schema::HYPERTENSION)? {
            for (s, d) in schema::SBP.iter().zip(schema::DBP) {
                let (sys, dia) = if h == 1 {
                    (uniform(g, 145.0, 175.0), uniform(g, 80.0, 100.0))
                } else {
                    (uniform(g, 105.0, 135.0), uniform(g, 60.0, 85.0))
                };
                sheet.num(s, r, sys.round());
                sheet.num(d, r, dia.round());
            }
        }

        if let Some(c) = idx(schema::CATARACT)? {
            if c == 1 {
                sheet.flag(schema::CATARACT_DX, r, true);
                sheet.flag(schema::CATARACT_SURGERY, r, false);
            } else {
                let operated = g.random_bool(0.3);
                sheet.flag(schema::CATARACT_DX, r, operated);
                sheet.flag(schema::CATARACT_SURGERY, r, operated);
            }
        }

        if let Some(a) = idx(schema::EXCESSIVE_ALCOHOL)? {
            let (days, drinks) =
                if a == 1 { (7.0, f64::from(g.random_range(3..=5))) } else { (f64::from(g.random_range(0..=3)), f64::from(g.random_range(0..=2))) };
            sheet.num(schema::ALCOHOL_DAYS, r, days);
            sheet.num(schema::ALCOHOL_DRINKS, r, drinks);
        }

        // Cognition: a latent ability, shifted far down for dementia cases,
        // drives every battery subdomain.
        let base = -0.03 * (age.unwrap_or(65.0) - 65.0) + 0.12 * (edu_years.unwrap_or(6.0) - 6.0);
        let latent = base + normal.sample(g) - if dementia { 4.0 } else { 0.0 };
        let noisy = |g: &mut StreamRng| latent + 0.5 * normal.sample(g);
        let informant = g.random_bool(0.05);
        for name in schema::ORIENTATION {
            let a = noisy(g);
            sheet.flag(name, r, g.random_bool(sigmoid(2.0 + 1.5 * a)));
        }
        for name in schema::semantic_memory_columns(SEMANTIC_ITEMS) {
            let a = noisy(g);
            sheet.flag(&name, r, g.random_bool(sigmoid(1.5 + 1.5 * a)));
        }
        let fluency = (14.0 + 4.0 * noisy(g)).round().max(0.0);
        if !informant {
            sheet.num(schema::FLUENCY, r, fluency);
        }
        sheet.num(schema::RECALL_IMMEDIATE, r, (5.0 + 1.5 * noisy(g)).round().clamp(0.0, 10.0));
        sheet.num(schema::RECALL_DELAYED, r, (4.0 + 1.8 * noisy(g)).round().clamp(0.0, 10.0));
        sheet.num(schema::PROSPECTIVE, r, (3.0 + noisy(g)).round().clamp(0.0, 5.0));
        if informant {
            let answer = if dementia { 3 } else { 2 };
            for name in schema::iqcode_columns() {
                sheet.level(&name, r, answer);
            }
        }

        for name in schema::IADL {
            sheet.flag(name, r, dementia || g.random_bool(0.04));
        }
        sheet.flag(schema::IADL_NONCOGNITIVE, r, g.random_bool(0.02));
        sheet.flag(schema::VISION_IMPAIRMENT, r, g.random_bool(0.08));
        sheet.flag(schema::HEARING_IMPAIRMENT, r, hearing == Some(2) || g.random_bool(0.02));
        sheet.flag(schema::DEPRESSION_DX, r, g.random_bool(if depressed == Some(1) { 0.3 } else { 0.05 }));
        sheet.flag(schema::STROKE, r, g.random_bool(0.04));
        sheet.flag(schema::ALZHEIMER, r, g.random_bool(if dementia { 0.15 } else { 0.002 }));
        sheet.flag(schema::PARKINSON, r, g.random_bool(0.01));
        sheet.flag(schema::MEMORY_SELF, r, g.random_bool(if dementia { 0.6 } else { 0.15 }));
        sheet.flag(schema::MEMORY_INFORMANT, r, g.random_bool(if dementia { 0.5 } else { 0.05 }));
    }
    sheet.into_cohort()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
