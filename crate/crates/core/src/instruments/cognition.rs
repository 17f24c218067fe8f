use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SUBDOMAINS: [&str; 6] =
    ["orientation", "semantic_memory", "verbal_fluency", "immediate_recall", "delayed_recall", "prospective_memory"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdConvention {
    #[default]
    Population,
    Sample,
}

/// Response-code to points (0..5) table for the prospective-memory task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProspectiveRubric {
    pub points: Vec<RubricEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RubricEntry {
    pub code: i64,
    pub points: u8,
}

impl Default for ProspectiveRubric {
    /// Codes 0..=5 score their own value.
    fn default() -> Self {
        ProspectiveRubric { points: (0..=5).map(|c| RubricEntry { code: c, points: c as u8 }).collect() }
    }
}

impl ProspectiveRubric {
    pub fn from_json(text: &str) -> Result<Self> {
        let r: ProspectiveRubric =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("prospective rubric: {e}")))?;
        if r.points.iter().any(|e| e.points > 5) {
            return Err(Error::Config("prospective rubric points must lie in 0..=5".into()));
        }
        Ok(r)
    }

    pub fn score(&self, code: i64) -> Option<u8> {
        self.points.iter().find(|e| e.code == code).map(|e| e.points)
    }
}

/// Per-participant answers to the neuropsychological battery.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BatteryResponses {
    /// Day, month, year, weekday: `Some(true)` when correct.
    pub orientation: Vec<Option<bool>>,
    pub semantic_memory: Vec<Option<bool>>,
    pub fluency_animals: Option<f64>,
    pub immediate_recall: Option<f64>,
    pub delayed_recall: Option<f64>,
    pub prospective_code: Option<i64>,
}

/// Raw score per subdomain, in [`SUBDOMAINS`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatteryScores(pub [f64; 6]);

/// Raw scores, or `MissingInput` when any answer is absent (the
/// participant then goes to the informant path).
pub fn battery_raw_scores(r: &BatteryResponses, rubric: &ProspectiveRubric) -> Result<BatteryScores> {
    let incomplete = |what: &str| Error::MissingInput(format!("battery {what}"));
    let correct = |items: &[Option<bool>], what: &str| -> Result<f64> {
        if items.is_empty() {
            return Err(incomplete(what));
        }
        items.iter().try_fold(0.0, |acc, a| a.map(|ok| acc + f64::from(u8::from(ok))).ok_or_else(|| incomplete(what)))
    };
    let count = |v: Option<f64>, what: &str| -> Result<f64> {
        match v {
            Some(x) if x >= 0.0 => Ok(x),
            Some(x) => Err(Error::InvalidMeasure(format!("{what} = {x}"))),
            None => Err(incomplete(what)),
        }
    };
    let code = r.prospective_code.ok_or_else(|| incomplete("prospective memory"))?;
    let prospective =
        rubric.score(code).ok_or_else(|| Error::InvalidMeasure(format!("prospective memory code {code}")))?;
    Ok(BatteryScores([
        correct(&r.orientation, "orientation")?,
        correct(&r.semantic_memory, "semantic memory")?,
        count(r.fluency_animals, "verbal fluency")?,
        count(r.immediate_recall, "immediate recall")?,
        count(r.delayed_recall, "delayed recall")?,
        f64::from(prospective),
    ]))
}

fn mean_sd(values: &[f64], conv: SdConvention) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let denom = match conv {
        SdConvention::Population => n,
        SdConvention::Sample => n - 1.0,
    };
    (mean, (ss / denom).sqrt())
}

/// `(x - mean) / sd` over the vector.
pub fn zscore(values: &[f64], conv: SdConvention) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::DegenerateVariance);
    }
    let (mean, sd) = mean_sd(values, conv);
    if !(sd > 1e-12 * mean.abs().max(1.0)) {
        return Err(Error::DegenerateVariance);
    }
    Ok(values.iter().map(|v| (v - mean) / sd).collect())
}

/// Mean of each participant's subdomain z-scores, re-standardized over the
/// sample.
pub fn global_cognitive_score(z_by_participant: &[Vec<f64>], conv: SdConvention) -> Result<Vec<f64>> {
    let means: Vec<f64> = z_by_participant
        .iter()
        .map(|z| {
            if z.is_empty() {
                return Err(Error::MissingInput("subdomain z-scores".into()));
            }
            Ok(z.iter().sum::<f64>() / z.len() as f64)
        })
        .collect::<Result<_>>()?;
    zscore(&means, conv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full() -> BatteryResponses {
        BatteryResponses {
            orientation: vec![Some(true); 4],
            semantic_memory: vec![Some(true), Some(false), Some(true)],
            fluency_animals: Some(0.0),
            immediate_recall: Some(6.0),
            delayed_recall: Some(4.0),
            prospective_code: Some(5),
        }
    }

    #[test]
    fn battery_examples() {
        let s = battery_raw_scores(&full(), &ProspectiveRubric::default()).unwrap();
        assert_eq!(s.0, [4.0, 2.0, 0.0, 6.0, 4.0, 5.0]);
    }

    #[test]
    fn battery_incomplete_routes_to_informant() {
        let mut r = full();
        r.orientation[2] = None;
        assert!(matches!(battery_raw_scores(&r, &ProspectiveRubric::default()), Err(Error::MissingInput(_))));
        let mut r = full();
        r.prospective_code = None;
        assert!(matches!(battery_raw_scores(&r, &ProspectiveRubric::default()), Err(Error::MissingInput(_))));
    }

    #[test]
    fn rubric_maps_codes() {
        let rubric = ProspectiveRubric::from_json(r#"{"points":[{"code":1,"points":5},{"code":2,"points":2}]}"#).unwrap();
        let mut r = full();
        r.prospective_code = Some(2);
        assert_eq!(battery_raw_scores(&r, &rubric).unwrap().0[5], 2.0);
        r.prospective_code = Some(9);
        assert!(matches!(battery_raw_scores(&r, &rubric), Err(Error::InvalidMeasure(_))));
        assert!(ProspectiveRubric::from_json(r#"{"points":[{"code":1,"points":6}]}"#).is_err());
    }

    #[test]
    fn zscore_examples() {
        assert_eq!(zscore(&[1.0, 2.0, 3.0], SdConvention::Population).unwrap(), vec![
            -1.224744871391589,
            0.0,
            1.224744871391589
        ]);
        assert_eq!(zscore(&[1.0, 2.0, 3.0], SdConvention::Sample).unwrap(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(zscore(&[10.0, 20.0], SdConvention::Population).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(zscore(&[4.0, 4.0, 4.0], SdConvention::Population), Err(Error::DegenerateVariance));
        assert_eq!(zscore(&[4.0], SdConvention::Population), Err(Error::DegenerateVariance));
    }

    #[test]
    fn zscore_moments() {
        let v: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64 * 1.3 + 2.0).collect();
        for conv in [SdConvention::Population, SdConvention::Sample] {
            let z = zscore(&v, conv).unwrap();
            let (m, sd) = mean_sd(&z, conv);
            assert!(m.abs() < 1e-9);
            assert!((sd - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn global_score_oracle() {
        // Three participants, two subdomains; mean then re-standardize by hand.
        let z = vec![vec![1.0, 0.0], vec![-1.0, -1.0], vec![0.5, 1.5]];
        let means = [0.5, -1.0, 1.0];
        let mu = (0.5 - 1.0 + 1.0) / 3.0;
        let sd = ((means.iter().map(|m| (m - mu) * (m - mu)).sum::<f64>()) / 3.0).sqrt();
        let g = global_cognitive_score(&z, SdConvention::Population).unwrap();
        for (gi, mi) in g.iter().zip(means) {
            assert!((gi - (mi - mu) / sd).abs() < 1e-12);
        }
        assert!(g[2] > g[0] && g[0] > g[1]);
    }

    #[test]
    fn global_score_mean_participant_is_zero() {
        let z = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![-1.0, -1.0]];
        let g = global_cognitive_score(&z, SdConvention::Population).unwrap();
        assert!(g[0].abs() < 1e-15);
        assert!(g[1] > 0.0);
    }
}
