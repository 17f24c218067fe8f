use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MET_WALK: f64 = 3.3;
pub const MET_MODERATE: f64 = 4.0;
pub const MET_VIGOROUS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Sex {
    Male,
    Female,
}

/// Raw IPAQ short-form answers: days per week and minutes per day.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IpaqInput {
    pub walk_days: Option<f64>,
    pub walk_min: Option<f64>,
    pub moderate_days: Option<f64>,
    pub moderate_min: Option<f64>,
    pub vigorous_days: Option<f64>,
    pub vigorous_min: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActivityLevel {
    Low,
    Moderate,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IpaqRecord {
    pub walk_days: f64,
    pub walk_min: f64,
    pub moderate_days: f64,
    pub moderate_min: f64,
    pub vigorous_days: f64,
    pub vigorous_min: f64,
    /// Total physical activity, MET-minutes per week.
    pub tpa: f64,
    pub category: ActivityLevel,
}

pub fn score_ipaq(input: &IpaqInput) -> Result<IpaqRecord> {
    let need = |v: Option<f64>, what: &str| v.ok_or_else(|| Error::MissingInput(format!("ipaq {what}")));
    let days = |v: Option<f64>, what: &str| -> Result<f64> {
        let d = need(v, what)?;
        if !(0.0..=7.0).contains(&d) {
            return Err(Error::InvalidMeasure(format!("ipaq {what} = {d}")));
        }
        Ok(d)
    };
    let minutes = |v: Option<f64>, what: &str| -> Result<f64> {
        let m = need(v, what)?;
        if !(m >= 0.0) {
            return Err(Error::InvalidMeasure(format!("ipaq {what} = {m}")));
        }
        Ok(m)
    };
    let (wd, wm) = (days(input.walk_days, "walk days")?, minutes(input.walk_min, "walk minutes")?);
    let (md, mm) = (days(input.moderate_days, "moderate days")?, minutes(input.moderate_min, "moderate minutes")?);
    let (vd, vm) = (days(input.vigorous_days, "vigorous days")?, minutes(input.vigorous_min, "vigorous minutes")?);

    let tpa = MET_WALK * wm * wd + MET_MODERATE * mm * md + MET_VIGOROUS * vm * vd;
    // Days on which an activity was done at all; "any combination" counts.
    let active = |d: f64, m: f64| if m > 0.0 { d } else { 0.0 };
    let combined_days = active(wd, wm) + active(md, mm) + active(vd, vm);
    let long = |d: f64, m: f64, floor: f64| if m >= floor { d } else { 0.0 };

    let high = (vd >= 3.0 && vm > 0.0 && tpa >= 1500.0) || (combined_days >= 7.0 && tpa >= 3000.0);
    let moderate = (vd >= 3.0 && vm >= 20.0)
        || long(md, mm, 30.0) + long(wd, wm, 30.0) >= 5.0
        || (combined_days >= 5.0 && tpa >= 600.0);
    let category = if high {
        ActivityLevel::High
    } else if moderate {
        ActivityLevel::Moderate
    } else {
        ActivityLevel::Low
    };
    Ok(IpaqRecord {
        walk_days: wd,
        walk_min: wm,
        moderate_days: md,
        moderate_min: mm,
        vigorous_days: vd,
        vigorous_min: vm,
        tpa,
        category,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HgsReading {
    Measured(f64),
    /// Attempted but could not, or unable: scored as zero strength.
    Unable,
    /// Refused or not attempted for safety: no information.
    Refused,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HgsLevel {
    Low,
    SlightlyLow,
    Moderate,
    SlightlyHigh,
    High,
}

impl HgsLevel {
    pub const ALL: [HgsLevel; 5] =
        [HgsLevel::Low, HgsLevel::SlightlyLow, HgsLevel::Moderate, HgsLevel::SlightlyHigh, HgsLevel::High];
}

/// One (sex, age band) row of the grip-strength percentile table, in kgf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HgsCell {
    pub sex: Sex,
    pub age_min: f64,
    pub age_max: f64,
    pub p20: f64,
    pub p40: f64,
    pub p60: f64,
    pub p80: f64,
}

impl HgsCell {
    fn cutoffs(&self) -> [f64; 4] {
        [self.p20, self.p40, self.p60, self.p80]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HgsNorms {
    pub cells: Vec<HgsCell>,
}

impl HgsNorms {
    pub fn new(cells: Vec<HgsCell>) -> Result<Self> {
        for c in &cells {
            let k = c.cutoffs();
            if !k.windows(2).all(|w| w[0] < w[1]) || c.age_min > c.age_max {
                return Err(Error::Config(format!("handgrip norms cell {c:?} is not strictly ascending")));
            }
        }
        Ok(HgsNorms { cells })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cells: Vec<HgsCell> =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("handgrip norms: {e}")))?;
        Self::new(cells)
    }

    /// Age bands are closed on both ends; the first matching row wins.
    pub fn cell(&self, sex: Sex, age: f64) -> Option<&HgsCell> {
        self.cells.iter().find(|c| c.sex == sex && age >= c.age_min && age <= c.age_max)
    }
}

/// Bin a grip reading against the (sex, age) percentile row. Bins above the
/// first cutoff are lower-inclusive. Refusals yield `Ok(None)`.
pub fn categorize_hgs(reading: HgsReading, sex: Sex, age: f64, norms: &HgsNorms) -> Result<Option<HgsLevel>> {
    let kgf = match reading {
        HgsReading::Refused => return Ok(None),
        HgsReading::Unable => 0.0,
        HgsReading::Measured(v) if v >= 0.0 => v,
        HgsReading::Measured(v) => return Err(Error::InvalidMeasure(format!("grip strength {v}"))),
    };
    let cell = norms.cell(sex, age).ok_or_else(|| Error::NormsGap { sex: format!("{sex:?}"), age })?;
    let above = cell.cutoffs().iter().filter(|&&c| kgf >= c).count();
    Ok(Some(HgsLevel::ALL[above]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BmiCategory {
    SeverelyUnderweight,
    Underweight,
    Normal,
    Overweight,
    ObeseI,
    ObeseII,
    ObeseIII,
}

impl BmiCategory {
    pub const ALL: [BmiCategory; 7] = [
        BmiCategory::SeverelyUnderweight,
        BmiCategory::Underweight,
        BmiCategory::Normal,
        BmiCategory::Overweight,
        BmiCategory::ObeseI,
        BmiCategory::ObeseII,
        BmiCategory::ObeseIII,
    ];
    /// Lower edges of every bin above the first, kg/m².
    pub const EDGES: [f64; 6] = [16.0, 18.5, 25.0, 30.0, 35.0, 40.0];

    pub fn from_bmi(bmi: f64) -> BmiCategory {
        let above = Self::EDGES.iter().filter(|&&e| bmi >= e).count();
        Self::ALL[above]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BodyMeasures {
    pub weight: f64,
    pub height: f64,
    pub bmi: f64,
    pub category: BmiCategory,
}

pub fn categorize_bmi(weight: f64, height: f64) -> Result<BodyMeasures> {
    if !(weight > 0.0 && height > 0.0) {
        return Err(Error::InvalidMeasure(format!("weight {weight} kg, height {height} m")));
    }
    let bmi = weight / (height * height);
    Ok(BodyMeasures { weight, height, bmi, category: BmiCategory::from_bmi(bmi) })
}

/// Hypertensive when mean systolic >= 140 or mean diastolic >= 90 over the
/// readings where both values are present.
pub fn classify_bp(readings: &[(Option<f64>, Option<f64>)]) -> Result<bool> {
    let valid: Vec<(f64, f64)> = readings.iter().filter_map(|&(s, d)| Some((s?, d?))).collect();
    if valid.is_empty() {
        return Err(Error::AllMissing);
    }
    let n = valid.len() as f64;
    let sys = valid.iter().map(|r| r.0).sum::<f64>() / n;
    let dia = valid.iter().map(|r| r.1).sum::<f64>() / n;
    Ok(sys >= 140.0 || dia >= 90.0)
}

/// Drinks per week and whether it reaches the 21-drink excess threshold.
pub fn weekly_drinks(days_per_week: Option<f64>, drinks_per_day: Option<f64>) -> Result<(f64, bool)> {
    let days = days_per_week.ok_or_else(|| Error::MissingInput("drinking days".into()))?;
    let drinks = drinks_per_day.ok_or_else(|| Error::MissingInput("drinks per day".into()))?;
    if !(0.0..=7.0).contains(&days) || drinks < 0.0 {
        return Err(Error::InvalidMeasure(format!("{days} days x {drinks} drinks")));
    }
    let total = days * drinks;
    Ok((total, total >= 21.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ipaq(w: (f64, f64), m: (f64, f64), v: (f64, f64)) -> IpaqInput {
        IpaqInput {
            walk_days: Some(w.0),
            walk_min: Some(w.1),
            moderate_days: Some(m.0),
            moderate_min: Some(m.1),
            vigorous_days: Some(v.0),
            vigorous_min: Some(v.1),
        }
    }

    #[test]
    fn ipaq_examples() {
        let zero = score_ipaq(&ipaq((0.0, 0.0), (0.0, 0.0), (0.0, 0.0))).unwrap();
        assert_eq!((zero.tpa, zero.category), (0.0, ActivityLevel::Low));
        let walk = score_ipaq(&ipaq((3.0, 30.0), (0.0, 0.0), (0.0, 0.0))).unwrap();
        assert!((walk.tpa - 297.0).abs() < 1e-9);
        let vig = score_ipaq(&ipaq((0.0, 0.0), (0.0, 0.0), (3.0, 60.0))).unwrap();
        assert_eq!(vig.tpa, 1440.0);
        assert_eq!(vig.category, ActivityLevel::Moderate);
        let vig_hi = score_ipaq(&ipaq((0.0, 0.0), (0.0, 0.0), (3.0, 63.0))).unwrap();
        assert_eq!(vig_hi.category, ActivityLevel::High);
    }

    #[test]
    fn ipaq_combination_rules() {
        // 7 combined days at >= 3000 MET-min.
        let r = score_ipaq(&ipaq((4.0, 120.0), (3.0, 120.0), (0.0, 0.0))).unwrap();
        assert!(r.tpa >= 3000.0);
        assert_eq!(r.category, ActivityLevel::High);
        // walking 5 days x 30 min
        assert_eq!(score_ipaq(&ipaq((5.0, 30.0), (0.0, 0.0), (0.0, 0.0))).unwrap().category, ActivityLevel::Moderate);
        assert_eq!(score_ipaq(&ipaq((5.0, 20.0), (0.0, 0.0), (0.0, 0.0))).unwrap().category, ActivityLevel::Low);
        assert!(matches!(score_ipaq(&IpaqInput::default()), Err(Error::MissingInput(_))));
        assert!(matches!(score_ipaq(&ipaq((8.0, 10.0), (0.0, 0.0), (0.0, 0.0))), Err(Error::InvalidMeasure(_))));
    }

    fn norms() -> HgsNorms {
        HgsNorms::new(vec![HgsCell { sex: Sex::Female, age_min: 50.0, age_max: 120.0, p20: 10.0, p40: 20.0, p60: 30.0, p80: 40.0 }])
            .unwrap()
    }

    #[test]
    fn hgs_examples() {
        let n = norms();
        assert_eq!(categorize_hgs(HgsReading::Unable, Sex::Female, 60.0, &n), Ok(Some(HgsLevel::Low)));
        assert_eq!(categorize_hgs(HgsReading::Measured(0.0), Sex::Female, 60.0, &n), Ok(Some(HgsLevel::Low)));
        assert_eq!(categorize_hgs(HgsReading::Measured(10.0), Sex::Female, 60.0, &n), Ok(Some(HgsLevel::SlightlyLow)));
        assert_eq!(categorize_hgs(HgsReading::Measured(35.0), Sex::Female, 60.0, &n), Ok(Some(HgsLevel::SlightlyHigh)));
        assert_eq!(categorize_hgs(HgsReading::Measured(40.0), Sex::Female, 60.0, &n), Ok(Some(HgsLevel::High)));
        assert_eq!(categorize_hgs(HgsReading::Refused, Sex::Female, 60.0, &n), Ok(None));
        assert!(matches!(categorize_hgs(HgsReading::Measured(5.0), Sex::Male, 60.0, &n), Err(Error::NormsGap { .. })));
    }

    #[test]
    fn hgs_norms_must_ascend() {
        let bad = HgsCell { sex: Sex::Male, age_min: 50.0, age_max: 59.0, p20: 10.0, p40: 10.0, p60: 30.0, p80: 40.0 };
        assert!(HgsNorms::new(vec![bad]).is_err());
        let json = r#"[{"sex":"male","age_min":50,"age_max":59,"p20":1,"p40":2,"p60":3,"p80":4}]"#;
        assert_eq!(HgsNorms::from_json(json).unwrap().cells.len(), 1);
    }

    #[test]
    fn bmi_examples() {
        let b = categorize_bmi(70.0, 1.75).unwrap();
        assert!((b.bmi - 22.857142857142858).abs() < 1e-12);
        assert_eq!(b.category, BmiCategory::Normal);
        assert_eq!(BmiCategory::from_bmi(18.4), BmiCategory::Underweight);
        assert_eq!(BmiCategory::from_bmi(18.5), BmiCategory::Normal);
        assert_eq!(categorize_bmi(49.0, 1.75).unwrap().category, BmiCategory::Underweight);
        assert_eq!(BmiCategory::from_bmi(15.99), BmiCategory::SeverelyUnderweight);
        assert_eq!(BmiCategory::from_bmi(40.0), BmiCategory::ObeseIII);
        assert!(categorize_bmi(0.0, 1.7).is_err());
        assert!(categorize_bmi(60.0, -1.0).is_err());
    }

    #[test]
    fn bp_examples() {
        assert_eq!(classify_bp(&[(Some(120.0), Some(80.0)); 3]), Ok(false));
        assert_eq!(classify_bp(&[(Some(140.0), Some(89.0)); 3]), Ok(true));
        let r = [(Some(150.0), Some(85.0)), (Some(130.0), Some(85.0)), (Some(140.0), Some(95.0))];
        assert_eq!(classify_bp(&r), Ok(true));
        assert_eq!(classify_bp(&[(Some(150.0), None), (None, None)]), Err(Error::AllMissing));
        assert_eq!(classify_bp(&[(Some(150.0), None), (Some(120.0), Some(70.0))]), Ok(false));
    }

    #[test]
    fn drink_examples() {
        assert_eq!(weekly_drinks(Some(0.0), Some(5.0)), Ok((0.0, false)));
        assert_eq!(weekly_drinks(Some(7.0), Some(3.0)), Ok((21.0, true)));
        assert_eq!(weekly_drinks(Some(3.0), Some(6.0)), Ok((18.0, false)));
        assert!(matches!(weekly_drinks(None, Some(1.0)), Err(Error::MissingInput(_))));
    }

    proptest! {
        #[test]
        fn bmi_bins_partition(bmi in 0.01f64..100.0) {
            let hits = BmiCategory::ALL.iter().enumerate().filter(|(i, _)| {
                let lo = if *i == 0 { 0.0 } else { BmiCategory::EDGES[i - 1] };
                let hi = BmiCategory::EDGES.get(*i).copied().unwrap_or(f64::INFINITY);
                bmi >= lo && bmi < hi
            }).count();
            prop_assert_eq!(hits, 1);
            let idx = BmiCategory::ALL.iter().position(|&c| c == BmiCategory::from_bmi(bmi)).unwrap();
            let lo = if idx == 0 { 0.0 } else { BmiCategory::EDGES[idx - 1] };
            prop_assert!(bmi >= lo);
        }

        #[test]
        fn hgs_monotone(a in 0.0f64..60.0, b in 0.0f64..60.0) {
            let n = norms();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let cl = categorize_hgs(HgsReading::Measured(lo), Sex::Female, 70.0, &n).unwrap();
            let ch = categorize_hgs(HgsReading::Measured(hi), Sex::Female, 70.0, &n).unwrap();
            prop_assert!(cl <= ch);
        }

        #[test]
        fn ipaq_linear_and_high_implies_moderate_floor(
            wd in 0u8..=7, wm in 0.0f64..200.0, md in 0u8..=7, mm in 0.0f64..200.0, vd in 0u8..=7, vm in 0.0f64..200.0
        ) {
            let r = score_ipaq(&ipaq((wd as f64, wm), (md as f64, mm), (vd as f64, vm))).unwrap();
            let expect = 3.3 * wm * wd as f64 + 4.0 * mm * md as f64 + 8.0 * vm * vd as f64;
            prop_assert!((r.tpa - expect).abs() <= 1e-9 * expect.max(1.0));
            prop_assert!(r.tpa >= 0.0);
            if r.category == ActivityLevel::High {
                prop_assert!(r.tpa >= 600.0);
            }
        }
    }
}
