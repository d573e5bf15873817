use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use synthscene::detmetrics::IouType;
use synthscene::pipeline::{cmd_evaluate, cmd_stats, parse_thresholds, Overrides, Pipeline, PipelineError};

#[derive(Parser)]
#[command(name = "synthscene", version, about = "Synthetic dynamic indoor dataset generator and evaluator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    experiments: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    Bbox,
    Mask,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Generate experiments (scene, trajectory, IMU, per-frame ground truth).
    Generate {
        #[command(flatten)]
        common: Common,
        /// Output root, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assemble a recipe over generated experiments into a COCO dataset.
    Assemble {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        recipe: String,
        /// Dataset directory; defaults to <output>/datasets/<recipe>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a COCO results file against ground truth.
    Evaluate {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        task: Task,
        #[arg(long, default_value = "0.7,0.05")]
        thresholds: String,
        /// Machine-readable report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print counts of a COCO file or dataset directory.
    Stats { path: PathBuf },
}

fn overrides(c: &Common, out: Option<PathBuf>) -> Overrides {
    Overrides {
        seed: c.seed,
        experiments: c.experiments,
        output: out,
        jobs: c.jobs,
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Generate { common, out } => {
            let p = Pipeline::load(&common.config, &overrides(&common, out))?;
            let r = p.generate()?;
            println!(
                "generated {} experiment(s), {} up to date, in {}",
                r.generated.len(),
                r.skipped.len(),
                p.output_dir().display()
            );
        }
        Command::Assemble { common, recipe, out } => {
            let p = Pipeline::load(&common.config, &overrides(&common, None))?;
            let (a, dir) = p.assemble(&recipe, out.as_deref())?;
            println!(
                "{}: {} train / {} val images, {} frames discarded, written to {}",
                recipe,
                a.train.images.len(),
                a.val.images.len(),
                a.log.frames_discarded,
                dir.display()
            );
        }
        Command::Evaluate {
            gt,
            predictions,
            task,
            thresholds,
            out,
        } => {
            let tasks: &[IouType] = match task {
                Task::Bbox => &[IouType::Bbox],
                Task::Mask => &[IouType::Mask],
                Task::Both => &[IouType::Bbox, IouType::Mask],
            };
            let report = cmd_evaluate(gt, predictions, tasks, &parse_thresholds(&thresholds)?, out.as_deref())?;
            print!("{report}");
        }
        Command::Stats { path } => {
            for (name, stats) in cmd_stats(&path)? {
                println!("[{name}]");
                print!("{stats}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", PipelineError::Usage(first.to_string()).report_line());
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
