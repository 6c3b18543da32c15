use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fakestack_cli::{
    compare_runs, load_config, CliOverrides, Pipeline, Result, SplitKey, StageStatus,
};

#[derive(Parser)]
#[command(
    name = "fakestack",
    version,
    about = "Stacked transformer ensemble for fake-news tweet classification",
    subcommand_required = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every config-driven command; each one overrides the
/// matching config key for this invocation only.
#[derive(Args)]
struct CommonArgs {
    /// Experiment config file (TOML).
    #[arg(long, short = 'c')]
    config: PathBuf,
    /// Override the global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the parent directory for run directories.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Never touch the network; weights must already be cached.
    #[arg(long)]
    offline: bool,
    /// Reuse artifacts whose input fingerprints are unchanged (the default).
    #[arg(long, conflicts_with = "no_resume")]
    resume: bool,
    /// Recompute every stage even when cached artifacts exist.
    #[arg(long)]
    no_resume: bool,
    /// Override the backbone size class.
    #[arg(long, value_enum)]
    size_class: Option<SizeClassArg>,
}

impl CommonArgs {
    fn overrides(&self) -> CliOverrides {
        CliOverrides {
            seed: self.seed,
            out: self.out.clone(),
            offline: self.offline.then_some(true),
            resume: match (self.resume, self.no_resume) {
                (true, _) => Some(true),
                (_, true) => Some(false),
                _ => None,
            },
            size_class: self.size_class.map(|s| s.as_str().to_string()),
        }
    }

    fn pipeline(&self) -> Result<Pipeline> {
        let cfg = load_config(&self.config, &self.overrides())?;
        let pipeline = Pipeline::new(cfg)?;
        println!("run directory: {}", pipeline.run_dir().display());
        Ok(pipeline)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SizeClassArg {
    Base,
    SmallProxy,
}

impl SizeClassArg {
    fn as_str(&self) -> &'static str {
        match self {
            SizeClassArg::Base => "base",
            SizeClassArg::SmallProxy => "small-proxy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Train,
    Validation,
    Test,
}

impl From<SplitArg> for SplitKey {
    fn from(arg: SplitArg) -> Self {
        match arg {
            SplitArg::Train => SplitKey::Train,
            SplitArg::Validation => SplitKey::Validation,
            SplitArg::Test => SplitKey::Test,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load, validate, optionally merge, and summarize the dataset splits.
    PrepareData {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fine-tune one ensemble member and checkpoint it.
    TrainBase {
        #[command(flatten)]
        common: CommonArgs,
        /// Member name (e.g. roberta).
        #[arg(long)]
        member: String,
    },
    /// Predict one split with one member's checkpoint and cache the CSV.
    Predict {
        #[command(flatten)]
        common: CommonArgs,
        /// Member name (e.g. roberta).
        #[arg(long)]
        member: String,
        /// Split to predict.
        #[arg(long, value_enum)]
        split: SplitArg,
    },
    /// Assemble the meta-feature matrix from the configured source.
    BuildMeta {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Train the meta-learner on the assembled matrix.
    TrainMeta {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate every member and the ensemble on validation and test.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the whole pipeline end to end.
    RunExperiment {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Print a side-by-side metric comparison of two run directories.
    Compare {
        /// First run directory (the A column).
        run_a: PathBuf,
        /// Second run directory (the B column).
        run_b: PathBuf,
    },
    /// Generate the synthetic corpus (official split sizes) plus the
    /// external fact-check export into a directory.
    SynthData {
        /// Output directory for train/validation/test/external CSVs.
        #[arg(long)]
        dir: PathBuf,
        /// Generator seed.
        #[arg(long, default_value_t = 2020)]
        seed: u64,
    },
}

fn member_index(pipeline: &Pipeline, member: &str) -> Result<usize> {
    let members = pipeline.config().member_names()?;
    members.iter().position(|m| m == member).ok_or_else(|| {
        fakestack_cli::CliError::Config(format!(
            "member {member:?} is not part of this experiment (members: {})",
            members.join(", ")
        ))
    })
}

fn print_stage_table(pipeline: &Pipeline) {
    println!("{:<28} {:>8} {:>10}", "stage", "status", "wall ms");
    for stage in &pipeline.manifest().stages {
        println!(
            "{:<28} {:>8} {:>10}",
            stage.name,
            stage.status.as_str(),
            stage.wall_ms
        );
        if let Some(detail) = &stage.detail {
            if stage.status == StageStatus::Failed {
                println!("    {detail}");
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::PrepareData { common } => {
            let mut pipeline = common.pipeline()?;
            pipeline.stage_prepare()?;
            if let Some(data) = &pipeline.manifest().data {
                let row = |name: &str, s: &fakestack_data::SplitStats| {
                    println!(
                        "{name:<12} {:>6} posts ({} real / {} fake), avg words {:.2}",
                        s.n_total, s.n_real, s.n_fake, s.avg_words
                    );
                };
                row("train", &data.train);
                row("validation", &data.validation);
                row("test", &data.test);
                if let Some(external) = &data.external {
                    row("external", external);
                }
                if let Some(merged) = &data.merged_train {
                    row("merged", merged);
                }
            }
        }
        Command::TrainBase { common, member } => {
            let mut pipeline = common.pipeline()?;
            pipeline.stage_prepare()?;
            let index = member_index(&pipeline, &member)?;
            pipeline.stage_train_member(&member, index)?;
            print_stage_table(&pipeline);
        }
        Command::Predict {
            common,
            member,
            split,
        } => {
            let mut pipeline = common.pipeline()?;
            pipeline.stage_prepare()?;
            member_index(&pipeline, &member)?;
            pipeline.stage_predict(&member, split.into())?;
            print_stage_table(&pipeline);
        }
        Command::BuildMeta { common } => {
            let mut pipeline = common.pipeline()?;
            pipeline.stage_prepare()?;
            pipeline.stage_build_meta()?;
            print_stage_table(&pipeline);
        }
        Command::TrainMeta { common } => {
            let mut pipeline = common.pipeline()?;
            pipeline.stage_train_meta()?;
            print_stage_table(&pipeline);
        }
        Command::Evaluate { common } => {
            let mut pipeline = common.pipeline()?;
            pipeline.stage_prepare()?;
            pipeline.stage_evaluate()?;
            print_stage_table(&pipeline);
            println!(
                "reports written under {}",
                pipeline.run_dir().join("reports").display()
            );
        }
        Command::RunExperiment { common } => {
            let mut pipeline = common.pipeline()?;
            let outcome = pipeline.run_all();
            print_stage_table(&pipeline);
            outcome?;
            println!(
                "manifest: {}",
                pipeline.run_dir().join("manifest.json").display()
            );
        }
        Command::Compare { run_a, run_b } => {
            print!("{}", compare_runs(&run_a, &run_b)?);
        }
        Command::SynthData { dir, seed } => {
            let options = fakestack_data::synth::SynthOptions {
                seed,
                ..Default::default()
            };
            fakestack_data::synth::generate_competition_corpus(&dir, &options)
                .map_err(fakestack_cli::CliError::from)?;
            fakestack_data::synth::generate_fakecovid_export(&dir.join("external.csv"), seed)
                .map_err(fakestack_cli::CliError::from)?;
            println!(
                "wrote train.csv, validation.csv, test.csv, external.csv under {}",
                dir.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
