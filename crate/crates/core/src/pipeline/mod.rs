//! Configuration, synthetic cohorts, instrument scoring and labeling stages,
//! descriptive tables and the end-to-end run.

mod config;
mod derive;
mod descriptive;
mod render;
mod run;
mod synthetic;

pub use config::{ForestSettings, ImputationSettings, InputSource, LifeSatisfactionScale, RunConfig, TestMissing};
pub use derive::{analysis_cohort, derive_predictors, label_participants, label_specs, with_labels, LabelCounts, Labeled};
pub use descriptive::{descriptive_report, DescriptiveRow, DescriptiveTable};
pub use render::{render_raw, SEMANTIC_ITEMS};
pub use run::{run_pipeline, run_until, Access, Metrics, Partition, RunManifest, RunResult, Seeds, StageRows, StopAfter, TEST_READERS};
pub use synthetic::{generate_synthetic, Marginal, SyntheticCohort, SyntheticPredictor, SyntheticSpec, TrueEffect};
