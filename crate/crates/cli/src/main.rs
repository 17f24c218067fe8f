use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cogrisk::data::write_cohort;
use cogrisk::error::{Error, Result};
use cogrisk::instruments::HgsNorms;
use cogrisk::pipeline::{generate_synthetic, render_raw, run_until, InputSource, RunConfig, Seeds, StopAfter, SyntheticSpec};

#[derive(Parser)]
#[command(name = "cogrisk", version, about = "Dementia risk-factor pipeline: labeling, imputation, forest selection, logistic model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration JSON; relative paths inside it resolve against its directory.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic cohort described by the config's input spec.
    Generate(Common),
    /// Score instruments, label participants and build the analysis cohort.
    Label(Common),
    /// Run through training-set imputation.
    Impute(Common),
    /// Run through bivariate screening and forest importance ranking.
    Rank(Common),
    /// Run through OOB stepwise selection.
    Select(Common),
    /// Run through the logistic fit on the selected predictors.
    Fit(Common),
    /// Run through retraining and test-set evaluation.
    Evaluate(Common),
    /// Label the cohort and write the descriptive table.
    Report(Common),
    /// Full pipeline.
    Run(Common),
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn write(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn generate(cfg: &RunConfig) -> Result<()> {
    let InputSource::Synthetic { spec, render_raw: raw } = &cfg.input else {
        return Err(Error::Config("`generate` needs a synthetic input".into()));
    };
    let text = std::fs::read_to_string(spec).map_err(|e| Error::Config(format!("{}: {e}", spec.display())))?;
    let spec = SyntheticSpec::from_json(&text)?;
    let seeds = Seeds::from_master(cfg.seed);
    let syn = generate_synthetic(&spec, seeds.synthetic)?;
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    write_cohort(&out.join("synthetic.csv"), &syn.cohort)?;
    write(&out.join("synthetic_codebook.json"), &syn.cohort.codebook().to_json())?;
    let truth = serde_json::json!({ "intercept": syn.intercept, "effects": syn.truth });
    write(&out.join("synthetic_truth.json"), &(serde_json::to_string_pretty(&truth).expect("serializes") + "\n"))?;
    if *raw {
        let path = cfg.hgs_norms.as_ref().ok_or_else(|| Error::Config("`hgs_norms` is required".into()))?;
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let rendered = render_raw(&syn.cohort, &HgsNorms::from_json(&text)?, cfg.cesd8_scoring, seeds.render)?;
        write_cohort(&out.join("raw.csv"), &rendered)?;
        write(&out.join("raw_codebook.json"), &rendered.codebook().to_json())?;
    }
    eprintln!("wrote {} rows to {}", spec.n, out.display());
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    let (common, stop) = match &command {
        Command::Generate(c) => return generate(&load(c)?),
        Command::Label(c) | Command::Report(c) => (c, StopAfter::Label),
        Command::Impute(c) => (c, StopAfter::Impute),
        Command::Rank(c) => (c, StopAfter::Rank),
        Command::Select(c) => (c, StopAfter::Select),
        Command::Fit(c) => (c, StopAfter::Fit),
        Command::Evaluate(c) => (c, StopAfter::Evaluate),
        Command::Run(c) => (c, StopAfter::Report),
    };
    let cfg = load(common)?;
    let result = run_until(&cfg, stop)?;
    result.write(&cfg.output_dir)?;
    if let Some(m) = &result.metrics {
        eprintln!("forest AUC {:.3}, logistic AUC {:.3}", m.forest.auc, m.logit.auc);
    }
    eprintln!("wrote {} artifacts and manifest.json to {}", result.artifacts.len(), cfg.output_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
