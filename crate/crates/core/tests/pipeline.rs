use std::path::{Path, PathBuf};

use cogrisk::instruments::{CesdScoring, HgsNorms};
use cogrisk::labeling::{CognitiveStatus, NormativeOptions};
use cogrisk::instruments::ProspectiveRubric;
use cogrisk::pipeline::{
    derive_predictors, generate_synthetic, label_participants, render_raw, run_pipeline, run_until, ForestSettings,
    ImputationSettings, InputSource, Partition, RunConfig, StopAfter, SyntheticPredictor, SyntheticSpec, TEST_READERS,
};
use cogrisk::selection::CvConfig;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn bundled_spec(n: usize) -> SyntheticSpec {
    let text = std::fs::read_to_string(configs().join("synthetic_spec.json")).unwrap();
    let mut spec = SyntheticSpec::from_json(&text).unwrap();
    spec.n = n;
    spec
}

fn bundled_norms() -> HgsNorms {
    HgsNorms::from_json(&std::fs::read_to_string(configs().join("hgs_norms.json")).unwrap()).unwrap()
}

/// 15 balanced binary predictors; the first three carry equal effects, so
/// the majority-vote rule needs all of them.
fn planted_spec(n: usize, missing: f64) -> SyntheticSpec {
    let predictors = (0..15)
        .map(|j| {
            let beta = if j < 3 { 1.6 } else { 0.0 };
            SyntheticPredictor::binary(&format!("x{j:02}"), 0.5, beta).with_missing(missing)
        })
        .collect();
    SyntheticSpec { n, prevalence: 0.5, predictors }
}

fn quick_config(dir: &Path, spec: &SyntheticSpec, seed: u64) -> RunConfig {
    let path = dir.join("spec.json");
    std::fs::write(&path, serde_json::to_string(spec).unwrap()).unwrap();
    let mut cfg = RunConfig::new(InputSource::Synthetic { spec: path, render_raw: false });
    cfg.seed = seed;
    cfg.imputer = ImputationSettings { k_grid: vec![1, 3, 5, 7], mask_fraction: 0.1, repeats: 3 };
    cfg.forest = ForestSettings { n_trees: 60, mtry: None, min_leaf: 1, max_depth: None };
    cfg.cv = CvConfig { folds: 3, repeats: 1 };
    cfg.n_boot = 200;
    cfg
}

#[test]
fn rendered_answers_score_back_to_the_same_predictors() {
    let syn = generate_synthetic(&bundled_spec(600), 11).unwrap();
    let norms = bundled_norms();
    for scoring in [CesdScoring::ReverseFiveSeven, CesdScoring::ReverseFourSix] {
        let raw = render_raw(&syn.cohort, &norms, scoring, 5).unwrap();
        let derived = derive_predictors(&raw, &norms, scoring).unwrap();
        for col in syn.cohort.columns().iter().filter(|c| c.name() != "id" && c.name() != "dementia") {
            let back = derived.column(col.name()).unwrap();
            let mismatches: Vec<usize> = (0..col.cells.len()).filter(|&r| col.cells[r] != back.cells[r]).collect();
            assert!(mismatches.is_empty(), "{} differs at rows {:?}", col.name(), &mismatches[..mismatches.len().min(5)]);
        }
    }
}

#[test]
fn rendered_battery_mostly_reproduces_the_outcome() {
    let syn = generate_synthetic(&bundled_spec(1500), 3).unwrap();
    let raw = render_raw(&syn.cohort, &bundled_norms(), CesdScoring::ReverseFiveSeven, 9).unwrap();
    let labeled = label_participants(&raw, &NormativeOptions::default(), &ProspectiveRubric::default()).unwrap();
    let truth = syn.cohort.binary_outcome("dementia").unwrap();
    let (mut agree, mut total, mut demented_as_normal) = (0, 0, 0);
    for (label, &y) in labeled.labels.iter().zip(&truth) {
        let Some(label) = label else { continue };
        total += 1;
        match (label.status, y) {
            (CognitiveStatus::Dementia, 1) | (CognitiveStatus::Normal, 0) => agree += 1,
            (CognitiveStatus::Normal, 1) => demented_as_normal += 1,
            _ => {}
        }
    }
    assert!(total > 1400, "labeled {total}");
    assert!(agree as f64 / total as f64 > 0.8, "agreement {agree}/{total}");
    assert!(demented_as_normal < 15, "{demented_as_normal} dementia cases labeled normal");
}

#[test]
fn runs_are_deterministic_and_gate_test_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), &planted_spec(400, 0.05), 21);
    let a = run_pipeline(&cfg).unwrap();
    let b = run_pipeline(&cfg).unwrap();
    assert_eq!(a.manifest_json(), b.manifest_json());
    assert_eq!(a.artifacts, b.artifacts);
    assert!(a.metrics.is_some());
    for name in ["or_table.csv", "roc_rf.csv", "roc_logit.csv", "metrics.json", "descriptive.csv", "elbow.csv"] {
        assert!(a.artifacts.contains_key(name), "missing {name}");
    }

    let access = &a.manifest.row_access;
    let first_test = access.iter().position(|x| x.partition != Partition::Train).expect("test rows are read");
    for x in &access[first_test..] {
        assert!(x.partition == Partition::Train || TEST_READERS.contains(&x.stage.as_str()), "{x:?}");
    }
    for x in &access[..first_test] {
        assert_eq!(x.partition, Partition::Train);
    }
    for stage in ["impute", "screen", "rank", "select", "fit"] {
        let last = access.iter().rposition(|x| x.stage == stage).unwrap_or_else(|| panic!("{stage} not traced"));
        assert!(last < first_test, "{stage} ran after test rows were read");
    }
}

#[test]
fn zero_missing_cohort_skips_imputation_but_still_picks_k() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), &planted_spec(300, 0.0), 4);
    let res = run_until(&cfg, StopAfter::Impute).unwrap();
    assert_eq!(res.manifest.train_missing_cells, Some(0));
    assert!(res.manifest.chosen_k.is_some());
    let syn = generate_synthetic(&planted_spec(300, 0.0), cogrisk::pipeline::Seeds::from_master(4).synthetic).unwrap();
    let imputed = &res.artifacts["train_imputed.csv"];
    let ids: Vec<i64> = imputed.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    let header: Vec<&str> = imputed.lines().next().unwrap().split(',').collect();
    for (line, id) in imputed.lines().skip(1).zip(&ids) {
        for (name, token) in header.iter().zip(line.split(',')).skip(1) {
            let col = syn.cohort.column(name).unwrap();
            let original = col.cells[*id as usize - 1];
            assert_eq!(col.spec.parse_token(token).unwrap(), original, "{name} row {id}");
        }
    }
}

#[test]
fn planted_signal_is_recovered_across_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let mut hits = 0;
    for seed in 0..20u64 {
        let cfg = quick_config(dir.path(), &planted_spec(500, 0.0), seed);
        let res = run_until(&cfg, StopAfter::Fit).unwrap();
        let sel = &res.manifest.final_features;
        if ["x00", "x01", "x02"].iter().all(|f| sel.iter().any(|s| s == f)) {
            hits += 1;
        }
    }
    assert!(hits >= 16, "planted predictors recovered in {hits}/20 seeds");
}

#[test]
fn fingerprint_follows_content_not_location() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let spec = planted_spec(100, 0.0);
    let a = quick_config(d1.path(), &spec, 1);
    let mut b = quick_config(d2.path(), &spec, 1);
    b.output_dir = "elsewhere".into();
    assert_eq!(a.fingerprint().unwrap(), b.fingerprint().unwrap());
    b.seed = 2;
    assert_ne!(a.fingerprint().unwrap(), b.fingerprint().unwrap());
    let c = quick_config(d2.path(), &planted_spec(101, 0.0), 1);
    assert_ne!(a.fingerprint().unwrap(), c.fingerprint().unwrap());
}

#[test]
fn raw_rendered_run_reaches_the_label_stage() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spec.json");
    std::fs::write(&path, serde_json::to_string(&bundled_spec(800)).unwrap()).unwrap();
    let mut cfg = RunConfig::new(InputSource::Synthetic { spec: path, render_raw: true });
    cfg.hgs_norms = Some(configs().join("hgs_norms.json"));
    let res = run_until(&cfg, StopAfter::Label).unwrap();
    let counts = res.manifest.label_counts.unwrap();
    assert_eq!(counts.participants, 800);
    assert!(counts.normative > 0 && counts.dementia > 0);
    assert!(res.artifacts["descriptive.csv"].starts_with("variable,level,"));
    let analysis = &res.artifacts["analysis.csv"];
    assert_eq!(analysis.lines().count(), 1 + counts.normal + counts.dementia);
}
