use cogrisk::evaluation::{
    auc, auc_ci, choose_threshold, final_retrain_and_compare, metric_panel, roc, EvalOptions, ModelInputs, ThresholdRule,
};
use cogrisk::forest::ForestParams;
use cogrisk::logit::{DesignMatrix, LogitOptions, Term};
use cogrisk::matrix::Matrix;
use cogrisk::rng;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};

// Pairwise concordance with ties counted one half.
fn rank_sum_auc(s: &[f64], y: &[u8]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..s.len() {
        for j in 0..s.len() {
            if y[i] == 1 && y[j] == 0 {
                den += 1.0;
                num += if s[i] > s[j] { 1.0 } else if s[i] == s[j] { 0.5 } else { 0.0 };
            }
        }
    }
    num / den
}

fn scored(n: usize, shift: f64, seed: u64) -> (Vec<f64>, Vec<u8>) {
    let mut r = rng::stream(seed, &[]);
    let nrm = Normal::new(0.0, 1.0).unwrap();
    let y: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
    let s = y.iter().map(|&c| nrm.sample(&mut r) + shift * c as f64).collect();
    (s, y)
}

proptest! {
    #[test]
    fn trapezoid_equals_rank_sum(
        data in proptest::collection::vec((0u8..8, 0u8..2), 2..60)
    ) {
        let mut s: Vec<f64> = data.iter().map(|d| d.0 as f64 / 8.0).collect();
        let mut y: Vec<u8> = data.iter().map(|d| d.1).collect();
        y[0] = 0;
        y[1] = 1;
        s[0] = s[0].min(0.5);
        let a = auc(&s, &y).unwrap();
        prop_assert!((a - rank_sum_auc(&s, &y)).abs() < 1e-10);
        let c = roc(&s, &y).unwrap();
        prop_assert!(c.points.windows(2).all(|w| w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr));
        // strictly monotone transform keeps the point set
        let t: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
        let ct = roc(&t, &y).unwrap();
        prop_assert_eq!(c.points.len(), ct.points.len());
        for (p, q) in c.points.iter().zip(&ct.points) {
            prop_assert_eq!((p.fpr, p.tpr), (q.fpr, q.tpr));
        }
        prop_assert_eq!(c.auc, ct.auc);
    }

    #[test]
    fn panel_identities(
        data in proptest::collection::vec((0.0f64..1.0, 0u8..2), 4..80), thr in 0.0f64..1.0
    ) {
        let s: Vec<f64> = data.iter().map(|d| d.0).collect();
        let mut y: Vec<u8> = data.iter().map(|d| d.1).collect();
        y[0] = 0;
        y[1] = 1;
        let p = metric_panel(&s, &y, thr).unwrap();
        let prev = y.iter().filter(|&&v| v == 1).count() as f64 / y.len() as f64;
        prop_assert!((p.g_mean * p.g_mean - p.sensitivity * p.specificity).abs() < 1e-12);
        prop_assert!((p.accuracy - (p.sensitivity * prev + p.specificity * (1.0 - prev))).abs() < 1e-12);
        for v in [p.sensitivity, p.specificity, p.f1, p.g_mean, p.accuracy, p.precision] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn null_interval_coverage() {
    let mut hits = 0;
    for trial in 0..100 {
        let (s, y) = scored(300, 0.0, 1000 + trial);
        let ci = auc_ci(&s, &y, 500, trial).unwrap();
        if ci.low <= 0.5 && 0.5 <= ci.high {
            hits += 1;
        }
    }
    assert!(hits >= 93, "coverage {hits}/100");
}

#[test]
fn interval_width_shrinks_like_root_n() {
    let widths: Vec<f64> = [200usize, 800, 3200]
        .iter()
        .map(|&n| {
            let (s, y) = scored(n, 1.0, n as u64);
            let ci = auc_ci(&s, &y, 1000, 7).unwrap();
            ci.high - ci.low
        })
        .collect();
    let slope = (widths[2] / widths[0]).ln() / 16f64.ln();
    assert!((slope + 0.5).abs() < 0.15, "widths {widths:?} slope {slope}");
}

#[test]
fn interval_is_deterministic_per_seed() {
    let (s, y) = scored(200, 0.5, 3);
    assert_eq!(auc_ci(&s, &y, 300, 11).unwrap(), auc_ci(&s, &y, 300, 11).unwrap());
}

#[test]
fn youden_on_symmetric_gaussians_is_near_midpoint() {
    let (s, y) = scored(20000, 2.0, 5);
    let t = choose_threshold(&s, &y, ThresholdRule::YoudenJ).unwrap();
    assert!((t - 1.0).abs() < 0.1, "threshold {t}");
}

fn single_feature(n: usize, seed: u64) -> ModelInputs {
    let mut r = rng::stream(seed, &[]);
    let mut xs = vec![];
    let mut y = vec![];
    for _ in 0..n {
        // a single binary feature: both models can only rank its two levels
        let level = f64::from(r.random_bool(0.4) as u8);
        let p = if level == 1.0 { 0.7 } else { 0.2 };
        y.push(u8::from(r.random::<f64>() < p));
        xs.push(level);
    }
    let forest_x = Matrix::from_rows(&xs.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap();
    let design = DesignMatrix {
        x: Matrix::from_rows(&xs.iter().map(|&v| vec![1.0, v]).collect::<Vec<_>>()).unwrap(),
        terms: vec![Term { predictor: "x".into(), level: None }],
        blocks: vec![],
    };
    ModelInputs { forest_x, design, y }
}

#[test]
fn single_feature_models_agree_and_rerun_is_identical() {
    let train = single_feature(800, 1);
    let test = single_feature(400, 2);
    let fp = ForestParams { n_trees: 50, seed: 4, ..Default::default() };
    let opts = EvalOptions { n_boot: 200, seed: 9, ..Default::default() };
    let a = final_retrain_and_compare(&train, &test, &fp, &LogitOptions::default(), &opts).unwrap();
    assert!((a.forest.auc - a.logit.auc).abs() < 0.02, "{} vs {}", a.forest.auc, a.logit.auc);
    let b = final_retrain_and_compare(&train, &test, &fp, &LogitOptions::default(), &opts).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
