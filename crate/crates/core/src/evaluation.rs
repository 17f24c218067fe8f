//! Test-set performance: ROC curve and AUC, bootstrap AUC interval,
//! threshold choice on training scores, and the confusion-matrix panel.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{train_forest, ForestParams};
use crate::logit::{fit_logit, DesignMatrix, LogitOptions};
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// Starts at (0, 0) with an infinite threshold, then one vertex per
    /// distinct score in descending order, ending at (1, 1).
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

fn class_counts(labels: &[u8]) -> Result<(usize, usize)> {
    let pos = labels.iter().filter(|&&v| v == 1).count();
    if labels.iter().any(|&v| v > 1) {
        return Err(Error::InvalidOutcome("labels must be 0/1".into()));
    }
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateLabels);
    }
    Ok((pos, neg))
}

fn check_inputs(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch { column: "scores".into(), got: scores.len(), expected: labels.len() });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidMeasure("scores must be finite".into()));
    }
    class_counts(labels)
}

/// Distinct scores in descending order with weighted (negative, positive)
/// counts at each.
fn grouped(scores: &[f64], labels: &[u8], weights: Option<&[u32]>) -> Vec<(f64, f64, f64)> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out: Vec<(f64, f64, f64)> = Vec::new();
    for i in idx {
        let w = weights.map_or(1.0, |w| w[i] as f64);
        if w == 0.0 {
            continue;
        }
        let (neg, pos) = if labels[i] == 1 { (0.0, w) } else { (w, 0.0) };
        match out.last_mut() {
            Some(last) if last.0 == scores[i] => {
                last.1 += neg;
                last.2 += pos;
            }
            _ => out.push((scores[i], neg, pos)),
        }
    }
    out
}

fn trapezoid(groups: &[(f64, f64, f64)]) -> f64 {
    let neg: f64 = groups.iter().map(|g| g.1).sum();
    let pos: f64 = groups.iter().map(|g| g.2).sum();
    let (mut fp, mut tp, mut area) = (0.0, 0.0, 0.0);
    for &(_, dn, dp) in groups {
        area += dn * (tp + dp / 2.0);
        fp += dn;
        tp += dp;
    }
    debug_assert!(fp == neg && tp == pos);
    area / (neg * pos)
}

pub fn roc(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let groups = grouped(scores, labels, None);
    let mut points = vec![RocPoint { threshold: f64::INFINITY, fpr: 0.0, tpr: 0.0 }];
    let (mut fp, mut tp) = (0.0, 0.0);
    for &(s, dn, dp) in &groups {
        fp += dn;
        tp += dp;
        points.push(RocPoint { threshold: s, fpr: fp / neg as f64, tpr: tp / pos as f64 });
    }
    Ok(RocCurve { points, auc: trapezoid(&groups) })
}

pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_inputs(scores, labels)?;
    Ok(trapezoid(&grouped(scores, labels, None)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucInterval {
    pub low: f64,
    pub high: f64,
    pub method: String,
    pub n_boot: usize,
    pub seed: u64,
}

/// Linear interpolation between order statistics at `q * (n - 1)`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Percentile interval of AUC over bootstrap replicates that resample
/// cases and non-cases separately, each replicate on its own RNG stream.
pub fn auc_ci(scores: &[f64], labels: &[u8], n_boot: usize, seed: u64) -> Result<AucInterval> {
    check_inputs(scores, labels)?;
    if n_boot < 100 {
        return Err(Error::Config("n_boot must be >= 100".into()));
    }
    let pos_idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let neg_idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut reps: Vec<f64> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(seed, &[0xA0C, b as u64]);
            let mut mult = vec![0u32; scores.len()];
            for group in [&pos_idx, &neg_idx] {
                for _ in 0..group.len() {
                    mult[group[r.random_range(0..group.len())]] += 1;
                }
            }
            // sweep the presorted scores
            let (mut fp, mut tp, mut area) = (0.0, 0.0, 0.0);
            let mut i = 0;
            while i < order.len() {
                let s = scores[order[i]];
                let (mut dn, mut dp) = (0.0, 0.0);
                while i < order.len() && scores[order[i]] == s {
                    let k = order[i];
                    if labels[k] == 1 {
                        dp += mult[k] as f64;
                    } else {
                        dn += mult[k] as f64;
                    }
                    i += 1;
                }
                area += dn * (tp + dp / 2.0);
                fp += dn;
                tp += dp;
            }
            area / (fp * tp)
        })
        .collect();
    reps.sort_by(f64::total_cmp);
    Ok(AucInterval {
        low: percentile(&reps, 0.025),
        high: percentile(&reps, 0.975),
        method: "stratified_percentile_bootstrap".into(),
        n_boot,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    YoudenJ,
    Fixed(f64),
}

/// Threshold maximizing `tpr - fpr` over the ROC vertices of the tuning
/// scores (ties to the higher threshold), placed halfway to the next lower
/// distinct score.
pub fn choose_threshold(scores: &[f64], labels: &[u8], rule: ThresholdRule) -> Result<f64> {
    match rule {
        ThresholdRule::Fixed(t) => Ok(t),
        ThresholdRule::YoudenJ => {
            let curve = roc(scores, labels)?;
            let v = &curve.points[1..];
            let mut best = 0;
            for i in 1..v.len() {
                if v[i].tpr - v[i].fpr > v[best].tpr - v[best].fpr {
                    best = i;
                }
            }
            Ok(match v.get(best + 1) {
                Some(next) => v[best].threshold + (next.threshold - v[best].threshold) / 2.0,
                None => v[best].threshold,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub tp: f64,
    pub fp: f64,
    pub tn: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub precision: f64,
    pub f1: f64,
    /// Set when no row is predicted positive; `f1` is then 0.
    pub f1_undefined: bool,
    pub g_mean: f64,
    pub accuracy: f64,
}

impl Panel {
    /// Metrics from confusion counts (which may be fractional, e.g. when
    /// reconstructed from reported rates).
    pub fn from_confusion(tp: f64, fp: f64, tn: f64, fn_: f64) -> Self {
        let sensitivity = tp / (tp + fn_);
        let specificity = tn / (tn + fp);
        let f1_undefined = tp + fp == 0.0;
        let precision = if f1_undefined { 0.0 } else { tp / (tp + fp) };
        let f1 = if precision + sensitivity > 0.0 { 2.0 * precision * sensitivity / (precision + sensitivity) } else { 0.0 };
        Panel {
            tp,
            fp,
            tn,
            fn_,
            sensitivity,
            specificity,
            precision,
            f1,
            f1_undefined,
            g_mean: (sensitivity * specificity).sqrt(),
            accuracy: (tp + tn) / (tp + fp + tn + fn_),
        }
    }

    /// Closes the confusion matrix implied by rates and class sizes.
    pub fn from_rates(sensitivity: f64, specificity: f64, positives: f64, negatives: f64) -> Self {
        let tp = sensitivity * positives;
        let tn = specificity * negatives;
        Panel::from_confusion(tp, negatives - tn, tn, positives - tp)
    }
}

/// Confusion at `score >= threshold` and the derived metrics.
pub fn metric_panel(scores: &[f64], labels: &[u8], threshold: f64) -> Result<Panel> {
    check_inputs(scores, labels)?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0u64, 0u64, 0u64, 0u64);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(Panel::from_confusion(tp as f64, fp as f64, tn as f64, fn_ as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelTag {
    RandomForest,
    Logit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: ModelTag,
    pub threshold: f64,
    pub threshold_rule: ThresholdRule,
    #[serde(flatten)]
    pub panel: Panel,
    pub auc: f64,
    pub auc_ci: AucInterval,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub threshold_rule: ThresholdRule,
    pub n_boot: usize,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { threshold_rule: ThresholdRule::YoudenJ, n_boot: 2000, seed: 0 }
    }
}

/// Picks the threshold on `tune` scores and reports the panel and AUC on `test`.
pub fn evaluate_scores(
    model: ModelTag,
    tune: (&[f64], &[u8]),
    test: (&[f64], &[u8]),
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let threshold = choose_threshold(tune.0, tune.1, opts.threshold_rule)?;
    let panel = metric_panel(test.0, test.1, threshold)?;
    Ok(EvalReport {
        model,
        threshold,
        threshold_rule: opts.threshold_rule,
        panel,
        auc: auc(test.0, test.1)?,
        auc_ci: auc_ci(test.0, test.1, opts.n_boot, opts.seed)?,
        n_test: test.1.len(),
    })
}

/// Model inputs for one data partition: the numeric matrix for the forest
/// and the dummy-coded design for the regression.
#[derive(Debug, Clone)]
pub struct ModelInputs {
    pub forest_x: Matrix,
    pub design: DesignMatrix,
    pub y: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedReport {
    pub forest: EvalReport,
    pub logit: EvalReport,
    pub roc_forest: RocCurve,
    pub roc_logit: RocCurve,
}

/// Fits both final models on the training partition and evaluates each once
/// on the test partition. Forest thresholds are tuned on out-of-bag training
/// scores, regression thresholds on fitted training probabilities.
pub fn final_retrain_and_compare(
    train: &ModelInputs,
    test: &ModelInputs,
    forest: &ForestParams,
    logit: &LogitOptions,
    opts: &EvalOptions,
) -> Result<PairedReport> {
    let rf = train_forest(&train.forest_x, &train.y, forest)?;
    let oob = rf.oob(&train.forest_x, &train.y)?;
    let (tune_scores, tune_y): (Vec<f64>, Vec<u8>) =
        oob.scores.iter().zip(&train.y).filter_map(|(s, &y)| s.map(|s| (s, y))).unzip();
    let rf_test = rf.predict_proba(&test.forest_x)?;
    let forest_report = evaluate_scores(ModelTag::RandomForest, (&tune_scores, &tune_y), (&rf_test, &test.y), opts)?;

    let lm = fit_logit(&train.design, &train.y, None, logit)?;
    let lm_train = lm.predict_proba(&train.design.x)?;
    let lm_test = lm.predict_proba(&test.design.x)?;
    let logit_report = evaluate_scores(ModelTag::Logit, (&lm_train, &train.y), (&lm_test, &test.y), opts)?;

    Ok(PairedReport {
        forest: forest_report,
        logit: logit_report,
        roc_forest: roc(&rf_test, &test.y)?,
        roc_logit: roc(&lm_test, &test.y)?,
    })
}

pub fn roc_csv(curve: &RocCurve) -> String {
    let mut out = String::from("threshold,fpr,tpr\n");
    for p in &curve.points {
        out.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roc_basics() {
        assert_eq!(auc(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap(), 1.0);
        let c = roc(&[0.4; 6], &[1, 0, 1, 0, 0, 1]).unwrap();
        assert_eq!(c.auc, 0.5);
        assert_eq!(c.points.len(), 2);
        assert_eq!(auc(&[0.9, 0.8, 0.7, 0.6], &[1, 0, 1, 0]).unwrap(), 0.75);
        let last = c.points.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        assert_eq!(auc(&[0.1, 0.2], &[1, 1]), Err(Error::DegenerateLabels));
    }

    #[test]
    fn separated_interval_collapses() {
        let s = [0.9, 0.8, 0.7, 0.3, 0.2, 0.1];
        let ci = auc_ci(&s, &[1, 1, 1, 0, 0, 0], 200, 1).unwrap();
        assert_eq!((ci.low, ci.high), (1.0, 1.0));
    }

    #[test]
    fn thresholds() {
        let s = [0.9, 0.8, 0.7, 0.3, 0.2, 0.1];
        let y = [1, 1, 1, 0, 0, 0];
        assert_eq!(choose_threshold(&s, &y, ThresholdRule::YoudenJ).unwrap(), 0.5);
        assert_eq!(choose_threshold(&s, &y, ThresholdRule::Fixed(0.5)).unwrap(), 0.5);
        let p = metric_panel(&s, &y, 0.0).unwrap();
        assert_eq!((p.sensitivity, p.specificity), (1.0, 0.0));
        let p = metric_panel(&s, &y, 2.0).unwrap();
        assert!(p.f1_undefined && p.f1 == 0.0);
    }

    #[test]
    fn youden_tie_prefers_higher_threshold() {
        // J = 0.5 at scores 0.9 and 0.7
        let s = [0.9, 0.8, 0.7, 0.6];
        let y = [1, 0, 1, 0];
        let c = roc(&s, &y).unwrap();
        let j: Vec<f64> = c.points.iter().map(|p| p.tpr - p.fpr).collect();
        assert!((j[1] - j[3]).abs() < 1e-12 && j[1] == 0.5);
        assert!((choose_threshold(&s, &y, ThresholdRule::YoudenJ).unwrap() - 0.85).abs() < 1e-12);
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.5), 3.0);
        assert_eq!(percentile(&v, 0.1), 1.4);
    }

    #[test]
    fn panel_identities() {
        let p = Panel::from_rates(0.708, 0.702, 845.0, 7962.0);
        assert!((p.g_mean - 0.705).abs() < 5e-4);
        assert!((p.accuracy - 0.7026).abs() < 5e-4);
    }
}
