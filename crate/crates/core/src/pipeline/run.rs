//! The end-to-end batch: ingest, score, label, split, impute, screen, rank,
//! select, fit, evaluate and report.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{InputSource, LifeSatisfactionScale, RunConfig, TestMissing};
use super::derive::{analysis_cohort, derive_predictors, label_participants, with_labels, LabelCounts};
use super::descriptive::descriptive_report;
use super::render::render_raw;
use super::synthetic::{generate_synthetic, SyntheticSpec};
use crate::data::{read_cohort, stratified_split, write_cohort_to, Codebook, Cohort, Role, SplitPlan};
use crate::error::{Error, Result};
use crate::evaluation::{final_retrain_and_compare, roc_csv, EvalOptions, EvalReport, ModelInputs};
use crate::imputation::{elbow_select_k, encode_for_imputation, knn_impute, knn_impute_from, ElbowRule};
use crate::instruments::{HgsNorms, ProspectiveRubric};
use crate::labeling::NormativeOptions;
use crate::logit::{build_design, fit_logit, or_table, or_table_csv, or_table_text, DesignMatrix, LogitModel, LogitOptions};
use crate::matrix::Matrix;
use crate::rng::derive_seed;
use crate::schema;
use crate::selection::{bivariate_screen, rank_by_importance, stepwise_oob};

/// Last stage to run; later artifacts are not produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopAfter {
    Label,
    Impute,
    Rank,
    Select,
    Fit,
    Evaluate,
    Report,
}

/// Child seeds of the master seed, one per randomized stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
    pub synthetic: u64,
    pub render: u64,
    pub split: u64,
    pub imputer: u64,
    pub screening: u64,
    pub ranking: u64,
    pub stepwise: u64,
    pub final_forest: u64,
    pub bootstrap: u64,
}

impl Seeds {
    pub fn from_master(master: u64) -> Self {
        let s = |i: u64| derive_seed(master, &[0x5EED, i]);
        Seeds {
            master,
            synthetic: s(0),
            render: s(1),
            split: s(2),
            imputer: s(3),
            screening: s(4),
            ranking: s(5),
            stepwise: s(6),
            final_forest: s(7),
            bootstrap: s(8),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRows {
    pub stage: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Test,
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Access {
    pub stage: String,
    pub partition: Partition,
}

/// Stages allowed to read test rows.
pub const TEST_READERS: [&str; 3] = ["impute_test", "evaluate", "report"];

/// Hands out row indices of the split and records who asked for which side.
struct RowGate<'a> {
    plan: &'a SplitPlan,
    all: Vec<usize>,
    log: RefCell<Vec<Access>>,
}

impl<'a> RowGate<'a> {
    fn new(plan: &'a SplitPlan, n: usize) -> Self {
        RowGate { plan, all: (0..n).collect(), log: RefCell::new(Vec::new()) }
    }

    fn record(&self, stage: &str, partition: Partition) -> Result<()> {
        if partition != Partition::Train && !TEST_READERS.contains(&stage) {
            return Err(Error::Config(format!("stage `{stage}` may not read test rows")));
        }
        let mut log = self.log.borrow_mut();
        if log.last().is_none_or(|a| a.stage != stage || a.partition != partition) {
            log.push(Access { stage: stage.to_string(), partition });
        }
        Ok(())
    }

    fn train(&self, stage: &str) -> Result<&[usize]> {
        self.record(stage, Partition::Train)?;
        Ok(&self.plan.train_index)
    }

    fn test(&self, stage: &str) -> Result<&[usize]> {
        self.record(stage, Partition::Test)?;
        Ok(&self.plan.test_index)
    }

    fn all(&self, stage: &str) -> Result<&[usize]> {
        self.record(stage, Partition::All)?;
        Ok(&self.all)
    }
}

/// Everything needed to audit or repeat a run. Contains no paths and no
/// timestamps, so equal inputs give byte-identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config_fingerprint: String,
    pub config: serde_json::Value,
    pub completed: StopAfter,
    pub seeds: Seeds,
    pub stage_rows: Vec<StageRows>,
    pub label_counts: Option<LabelCounts>,
    pub outcome: String,
    pub candidates: Vec<String>,
    pub train_rows: Option<usize>,
    pub test_rows: Option<usize>,
    pub train_missing_cells: Option<usize>,
    pub chosen_k: Option<usize>,
    pub elbow_rule: Option<ElbowRule>,
    pub screened: Vec<String>,
    pub ranking: Vec<String>,
    pub chosen_m: Option<usize>,
    pub selected_features: Vec<String>,
    pub final_features: Vec<String>,
    pub test_missing_cells: Option<usize>,
    pub test_rows_dropped: Option<usize>,
    pub row_access: Vec<Access>,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub forest: EvalReport,
    pub logit: EvalReport,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub manifest: RunManifest,
    pub metrics: Option<Metrics>,
    /// Logistic model on the selected prefix, before significance filtering.
    pub selected_model: Option<LogitModel>,
    /// Final file name to contents, written next to `manifest.json`.
    pub artifacts: BTreeMap<String, String>,
}

impl RunResult {
    pub fn manifest_json(&self) -> String {
        serde_json::to_string_pretty(&self.manifest).expect("manifest serializes") + "\n"
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        for (name, body) in &self.artifacts {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        }
        let path = dir.join("manifest.json");
        std::fs::write(&path, self.manifest_json()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializes") + "\n"
}

fn cohort_csv(c: &Cohort) -> Result<String> {
    let mut buf = Vec::new();
    write_cohort_to(&mut buf, c)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

fn missing_cells(m: &Matrix) -> usize {
    m.as_slice().iter().filter(|v| v.is_nan()).count()
}

struct Ingested {
    analysis: Cohort,
    outcome: String,
    label_counts: Option<LabelCounts>,
}

struct Runner<'c> {
    cfg: &'c RunConfig,
    seeds: Seeds,
    stage_rows: Vec<StageRows>,
    artifacts: BTreeMap<String, String>,
}

impl Runner<'_> {
    fn rows(&mut self, stage: &str, rows: usize) {
        self.stage_rows.push(StageRows { stage: stage.to_string(), rows });
    }

    fn artifact(&mut self, name: &str, body: String) {
        self.artifacts.insert(name.to_string(), body);
    }

    fn norms(&self) -> Result<HgsNorms> {
        let path = self.cfg.hgs_norms.as_ref().ok_or_else(|| Error::Config("`hgs_norms` is required".into()))?;
        HgsNorms::from_json(&read_text(path)?)
    }

    fn rubric(&self) -> Result<ProspectiveRubric> {
        match &self.cfg.prospective_rubric {
            Some(p) => ProspectiveRubric::from_json(&read_text(p)?),
            None => Ok(ProspectiveRubric::default()),
        }
    }

    /// Score instruments, label and binarize a raw participant cohort.
    fn ingest_raw(&mut self, raw: Cohort) -> Result<Ingested> {
        let n = raw.n_rows();
        self.rows("ingest", n);
        let norms = self.norms().map_err(|e| e.in_stage("score", n))?;
        let derived = derive_predictors(&raw, &norms, self.cfg.cesd8_scoring).map_err(|e| e.in_stage("score", n))?;
        self.rows("score", derived.n_rows());
        let opts = NormativeOptions { cesd8_scoring: self.cfg.cesd8_scoring, iadl_threshold: self.cfg.iadl_threshold };
        let rubric = self.rubric().map_err(|e| e.in_stage("label", n))?;
        let labeled = label_participants(&raw, &opts, &rubric).map_err(|e| e.in_stage("label", n))?;
        self.rows("normative_subsample", labeled.counts.normative);
        self.rows("label", n - labeled.counts.unclassifiable);
        self.artifact("norms.json", json(&labeled.norms));
        self.artifact("labeled.csv", cohort_csv(&with_labels(&derived, &labeled.labels)?)?);
        let analysis = analysis_cohort(&derived, &labeled.labels).map_err(|e| e.in_stage("binarize", n))?;
        self.rows("binarize", analysis.n_rows());
        Ok(Ingested { analysis, outcome: schema::OUTCOME.to_string(), label_counts: Some(labeled.counts) })
    }

    fn ingest(&mut self) -> Result<Ingested> {
        match &self.cfg.input {
            InputSource::Raw { data, codebook } => {
                let cb = Codebook::from_json(&read_text(codebook)?)?;
                let raw = read_cohort(data, &cb).map_err(|e| e.in_stage("ingest", 0))?;
                self.ingest_raw(raw)
            }
            InputSource::Analysis { data, codebook, outcome } => {
                let cb = Codebook::from_json(&read_text(codebook)?)?;
                let analysis = read_cohort(data, &cb).map_err(|e| e.in_stage("ingest", 0))?;
                analysis.binary_outcome(outcome).map_err(|e| e.in_stage("ingest", analysis.n_rows()))?;
                self.rows("ingest", analysis.n_rows());
                Ok(Ingested { analysis, outcome: outcome.clone(), label_counts: None })
            }
            InputSource::Synthetic { spec, render_raw: raw } => {
                let spec = SyntheticSpec::from_json(&read_text(spec)?)?;
                let syn = generate_synthetic(&spec, self.seeds.synthetic).map_err(|e| e.in_stage("generate", spec.n))?;
                self.artifact("synthetic_truth.json", json(&serde_json::json!({ "intercept": syn.intercept, "effects": syn.truth })));
                if *raw {
                    let norms = self.norms()?;
                    let rendered = render_raw(&syn.cohort, &norms, self.cfg.cesd8_scoring, self.seeds.render)
                        .map_err(|e| e.in_stage("generate", spec.n))?;
                    self.ingest_raw(rendered)
                } else {
                    self.rows("ingest", syn.cohort.n_rows());
                    Ok(Ingested { analysis: syn.cohort, outcome: schema::OUTCOME.to_string(), label_counts: None })
                }
            }
        }
    }

    fn scaling(&self, cohort: &Cohort, names: &[String]) -> Vec<(String, f64, f64)> {
        if self.cfg.life_satisfaction_scale == LifeSatisfactionScale::Raw {
            return Vec::new();
        }
        names
            .iter()
            .filter_map(|n| {
                let spec = &cohort.column(n).ok()?.spec;
                let [lo, hi] = spec.range?;
                (!spec.kind.is_categorical()).then(|| (n.clone(), lo, hi - lo))
            })
            .collect()
    }

    fn design(&self, cohort: &Cohort, names: &[String]) -> Result<DesignMatrix> {
        let owned = self.scaling(cohort, names);
        let scaling: Vec<(&str, f64, f64)> = owned.iter().map(|(n, o, w)| (n.as_str(), *o, *w)).collect();
        let rows: Vec<usize> = (0..cohort.n_rows()).collect();
        build_design(cohort, &rows, names, &scaling)
    }
}

/// Runs every stage through `stop`. Each stage error carries the stage
/// name and the number of rows it was working on.
pub fn run_until(cfg: &RunConfig, stop: StopAfter) -> Result<RunResult> {
    cfg.validate()?;
    let fingerprint = cfg.fingerprint()?;
    let mut run = Runner { cfg, seeds: Seeds::from_master(cfg.seed), stage_rows: Vec::new(), artifacts: BTreeMap::new() };
    let Ingested { analysis, outcome, label_counts } = run.ingest()?;
    let candidates: Vec<String> = analysis
        .columns()
        .iter()
        .filter(|c| c.spec.role == Role::Predictor && c.name() != outcome)
        .map(|c| c.name().to_string())
        .collect();
    let mut manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_fingerprint: fingerprint,
        config: cfg.canonical(),
        completed: StopAfter::Label,
        seeds: run.seeds.clone(),
        stage_rows: Vec::new(),
        label_counts,
        outcome: outcome.clone(),
        candidates: candidates.clone(),
        train_rows: None,
        test_rows: None,
        train_missing_cells: None,
        chosen_k: None,
        elbow_rule: None,
        screened: Vec::new(),
        ranking: Vec::new(),
        chosen_m: None,
        selected_features: Vec::new(),
        final_features: Vec::new(),
        test_missing_cells: None,
        test_rows_dropped: None,
        row_access: Vec::new(),
        artifacts: Vec::new(),
    };
    run.artifact("analysis.csv", cohort_csv(&analysis)?);
    let mut metrics = None;
    let mut selected_model = None;
    let n = analysis.n_rows();

    let finish = |mut run: Runner, mut manifest: RunManifest, metrics, selected_model, log: Vec<Access>, done| {
        manifest.completed = done;
        manifest.stage_rows = std::mem::take(&mut run.stage_rows);
        manifest.row_access = log;
        manifest.artifacts = run.artifacts.keys().cloned().chain(["manifest.json".to_string()]).collect();
        manifest.artifacts.sort();
        Ok(RunResult { manifest, metrics, selected_model, artifacts: run.artifacts })
    };
    if stop == StopAfter::Label {
        // Nothing is split yet, so the whole-sample table leaks nothing.
        let table = descriptive_report(&analysis, &outcome, &candidates).map_err(|e| e.in_stage("report", n))?;
        run.artifact("descriptive.csv", table.to_csv()?);
        return finish(run, manifest, metrics, selected_model, Vec::new(), StopAfter::Label);
    }

    // Split before anything looks at the predictors' relation to the outcome.
    let plan = stratified_split(&analysis, &outcome, cfg.test_fraction, run.seeds.split).map_err(|e| e.in_stage("split", n))?;
    run.rows("split_train", plan.train_index.len());
    run.rows("split_test", plan.test_index.len());
    manifest.train_rows = Some(plan.train_index.len());
    manifest.test_rows = Some(plan.test_index.len());
    let gate = RowGate::new(&plan, n);

    // Training-only imputation: scale, pick k on complete cases, fill.
    let train_rows = gate.train("impute")?.to_vec();
    let n_train = train_rows.len();
    let stage = |e: Error| e.in_stage("impute", n_train);
    let (train_m, encoding) = encode_for_imputation(&analysis, &candidates, &train_rows).map_err(stage)?;
    let complete: Vec<usize> = (0..n_train).filter(|&i| !train_m.row(i).iter().any(|v| v.is_nan())).collect();
    let curve = elbow_select_k(&train_m.select_rows(&complete), &cfg.imputer.with_seed(run.seeds.imputer)).map_err(stage)?;
    let k = curve.chosen_k;
    let train_missing = missing_cells(&train_m);
    let donors = if train_missing > 0 { knn_impute(&train_m, k).map_err(stage)? } else { train_m.clone() };
    let mut train = analysis.select_rows(&train_rows);
    let local: Vec<usize> = (0..n_train).collect();
    encoding.write_back(&mut train, &local, &donors).map_err(stage)?;
    run.rows("impute", n_train);
    manifest.train_missing_cells = Some(train_missing);
    manifest.chosen_k = Some(k);
    manifest.elbow_rule = Some(curve.chosen_rule);
    let mut elbow = String::from("k,mean_mae,sd_mae\n");
    for p in &curve.points {
        elbow.push_str(&format!("{},{},{}\n", p.k, p.mean_mae, p.sd_mae));
    }
    run.artifact("elbow.csv", elbow);
    run.artifact("train_imputed.csv", cohort_csv(&train)?);
    if stop == StopAfter::Impute {
        let log = gate.log.into_inner();
        return finish(run, manifest, metrics, selected_model, log, StopAfter::Impute);
    }

    gate.train("screen")?;
    let y_train = train.binary_outcome(&outcome)?;
    let screen = bivariate_screen(&train, &outcome, &candidates, cfg.screening_alpha, run.seeds.screening)
        .map_err(|e| e.in_stage("screen", n_train))?;
    run.artifact("screening.csv", screen.to_csv());
    let kept = screen.kept();
    if kept.is_empty() {
        return Err(Error::MissingInput("no candidate passed screening".into()).in_stage("screen", n_train));
    }
    run.rows("screen", n_train);
    manifest.screened = kept.clone();

    gate.train("rank")?;
    let (x_kept, _) = encode_for_imputation(&train, &kept, &local).map_err(|e| e.in_stage("rank", n_train))?;
    let ranking = rank_by_importance(&x_kept, &y_train, &kept, &cfg.forest.with_seed(run.seeds.ranking))
        .map_err(|e| e.in_stage("rank", n_train))?;
    let mut importance = String::from("rank,predictor,importance,importance_raw\n");
    for (i, r) in ranking.iter().enumerate() {
        importance.push_str(&format!("{},{},{},{}\n", i + 1, r.name, r.importance, r.importance_raw));
    }
    run.artifact("importance.csv", importance);
    run.rows("rank", n_train);
    manifest.ranking = ranking.iter().map(|r| r.name.clone()).collect();
    if stop == StopAfter::Rank {
        let log = gate.log.into_inner();
        return finish(run, manifest, metrics, selected_model, log, StopAfter::Rank);
    }

    gate.train("select")?;
    let subset = stepwise_oob(&x_kept, &y_train, &ranking, &cfg.cv, &cfg.forest.with_seed(run.seeds.stepwise))
        .map_err(|e| e.in_stage("select", n_train))?;
    run.artifact("subset_curve.csv", subset.to_csv());
    run.rows("select", n_train);
    manifest.chosen_m = Some(subset.chosen_m);
    manifest.selected_features = subset.chosen_features.clone();
    if stop == StopAfter::Select {
        let log = gate.log.into_inner();
        return finish(run, manifest, metrics, selected_model, log, StopAfter::Select);
    }

    // Multivariable logit on the selected prefix, then keep predictors with
    // at least one significant level.
    gate.train("fit")?;
    let fit_stage = |e: Error| e.in_stage("fit", n_train);
    let selected = subset.chosen_features;
    let design = run.design(&train, &selected).map_err(fit_stage)?;
    let model = fit_logit(&design, &y_train, None, &LogitOptions::default()).map_err(fit_stage)?;
    let table = or_table(&model, &design, &y_train).map_err(fit_stage)?;
    run.artifact("or_table_selected.csv", or_table_csv(&table)?);
    run.artifact("or_table_selected.txt", or_table_text(&table));
    let significant: Vec<String> = selected
        .iter()
        .filter(|name| {
            design.terms.iter().enumerate().any(|(j, t)| &t.predictor == *name && model.wald_p(j + 1) < cfg.significance_alpha)
        })
        .cloned()
        .collect();
    selected_model = Some(model);
    run.rows("fit", n_train);
    if significant.is_empty() {
        return Err(Error::MissingInput("no selected predictor is significant".into()).in_stage("fit", n_train));
    }
    manifest.final_features = significant.clone();
    if stop == StopAfter::Fit {
        let log = gate.log.into_inner();
        return finish(run, manifest, metrics, selected_model, log, StopAfter::Fit);
    }

    // Test rows are completed from training neighbours only.
    let test_rows = gate.test("impute_test")?.to_vec();
    let n_test = test_rows.len();
    let (test_m, test_enc) =
        encode_for_imputation(&analysis, &candidates, &test_rows).map_err(|e| e.in_stage("impute_test", n_test))?;
    let test_missing = missing_cells(&test_m);
    let mut test = analysis.select_rows(&test_rows);
    let mut dropped = 0;
    match cfg.test_missing {
        TestMissing::Impute => {
            if test_missing > 0 {
                let filled = knn_impute_from(&test_m, &donors, k).map_err(|e| e.in_stage("impute_test", n_test))?;
                test_enc.write_back(&mut test, &(0..n_test).collect::<Vec<_>>(), &filled)?;
            }
        }
        TestMissing::Drop => {
            let cols: Vec<&[crate::data::Cell]> =
                significant.iter().map(|f| test.column(f).map(|c| c.cells.as_slice())).collect::<Result<_>>()?;
            let keep: Vec<usize> = (0..n_test).filter(|&i| cols.iter().all(|c| !c[i].is_missing())).collect();
            dropped = n_test - keep.len();
            test = test.select_rows(&keep);
        }
    }
    run.rows("impute_test", test.n_rows());
    manifest.test_missing_cells = Some(test_missing);
    manifest.test_rows_dropped = Some(dropped);

    // Final models on the significant predictors, evaluated once on test.
    gate.train("evaluate")?;
    gate.test("evaluate")?;
    let eval_stage = |e: Error| e.in_stage("evaluate", test.n_rows());
    let inputs = |c: &Cohort| -> Result<ModelInputs> {
        let rows: Vec<usize> = (0..c.n_rows()).collect();
        Ok(ModelInputs {
            forest_x: encode_for_imputation(c, &significant, &rows)?.0,
            design: run.design(c, &significant)?,
            y: c.binary_outcome(&outcome)?,
        })
    };
    let train_in = inputs(&train).map_err(eval_stage)?;
    let test_in = inputs(&test).map_err(eval_stage)?;
    let eval_opts = EvalOptions { threshold_rule: cfg.threshold_rule, n_boot: cfg.n_boot, seed: run.seeds.bootstrap };
    let paired = final_retrain_and_compare(
        &train_in,
        &test_in,
        &cfg.forest.with_seed(run.seeds.final_forest),
        &LogitOptions::default(),
        &eval_opts,
    )
    .map_err(eval_stage)?;
    let final_model = fit_logit(&train_in.design, &train_in.y, None, &LogitOptions::default()).map_err(eval_stage)?;
    let final_table = or_table(&final_model, &train_in.design, &train_in.y).map_err(eval_stage)?;
    run.artifact("or_table.csv", or_table_csv(&final_table)?);
    run.artifact("or_table.txt", or_table_text(&final_table));
    run.artifact("roc_rf.csv", roc_csv(&paired.roc_forest));
    run.artifact("roc_logit.csv", roc_csv(&paired.roc_logit));
    let m = Metrics { forest: paired.forest, logit: paired.logit };
    run.artifact("metrics.json", json(&m));
    metrics = Some(m);
    run.rows("evaluate", test.n_rows());
    if stop == StopAfter::Evaluate {
        let log = gate.log.into_inner();
        return finish(run, manifest, metrics, selected_model, log, StopAfter::Evaluate);
    }

    let all = gate.all("report")?;
    let table = descriptive_report(&analysis.select_rows(all), &outcome, &candidates).map_err(|e| e.in_stage("report", n))?;
    run.artifact("descriptive.csv", table.to_csv()?);
    run.rows("report", n);
    let log = gate.log.into_inner();
    finish(run, manifest, metrics, selected_model, log, StopAfter::Report)
}

pub fn run_pipeline(cfg: &RunConfig) -> Result<RunResult> {
    run_until(cfg, StopAfter::Report)
}
