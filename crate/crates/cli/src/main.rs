use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mcd_cli::commands::{
    cmd_compare, cmd_diffuse, cmd_eval, cmd_plot, cmd_synth, cmd_train, print_diffuse_summary,
    print_eval_report, print_synth_summary,
};
use mcd_cli::config::{RunConfig, KEYS};
use mcd_cli::error::Result;

#[derive(Parser)]
#[command(
    name = "mcd",
    about = "Two-view geometry estimation with Monte Carlo diffusion training data",
    after_help = "Any config key can be set as a flag of the same dotted name, e.g. \
                  `--mcd.r_min 0.2` or `--scene.n_points 512`. `--style` is shorthand \
                  for `--style.name`."
)]
struct Cli {
    /// Config file with `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic two-view scenes (ground truth or styled).
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo-diffuse a ground-truth dataset.
    Diffuse {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the sampling scorer on a styled or diffused dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "model-out")]
        model_out: PathBuf,
        /// Defaults to `<model-out stem>.log.csv`.
        #[arg(long = "log-out")]
        log_out: Option<PathBuf>,
    },
    /// Evaluate uniform or guided RANSAC over a dataset.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
    },
    /// Train on each source, evaluate every model (plus the uniform
    /// baseline) on every test set, emit the cross table and curves.
    Compare {
        #[arg(long = "train-data")]
        train_data: Vec<PathBuf>,
        #[arg(long = "test-data", required = true)]
        test_data: Vec<PathBuf>,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
    /// Cumulative error curves from one or more eval reports.
    Plot {
        #[arg(long = "report", required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Pull `--<config.key> value` (and `--<config.key>=value`) pairs out of
/// argv before clap sees it. `--style` is shorthand for `style.name`.
fn split_config_overrides(argv: Vec<String>) -> (Vec<String>, Vec<(String, String)>) {
    let mut rest = Vec::with_capacity(argv.len());
    let mut overrides = Vec::new();
    let mut it = argv.into_iter().peekable();
    while let Some(arg) = it.next() {
        let Some(name) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (name, inline_value) = match name.split_once('=') {
            Some((n, v)) => (n, Some(v.to_string())),
            None => (name, None),
        };
        let key = if name == "style" { "style.name" } else { name };
        if KEYS.contains(&key) {
            let value = match inline_value {
                Some(v) => v,
                None => match it.next() {
                    Some(v) => v,
                    None => {
                        // Let clap produce the missing-value error.
                        rest.push(arg.clone());
                        continue;
                    }
                },
            };
            overrides.push((key.to_string(), value));
        } else {
            rest.push(arg);
        }
    }
    (rest, overrides)
}

fn build_config(
    config_path: &Option<PathBuf>,
    overrides: &[(String, String)],
) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = config_path {
        cfg.apply_file(path)?;
    }
    cfg.apply_overrides(overrides)?;
    Ok(cfg)
}

fn run(cli: Cli, overrides: Vec<(String, String)>) -> Result<()> {
    let cfg = build_config(&cli.config, &overrides)?;
    match cli.command {
        Command::Synth { out } => {
            let summary = cmd_synth(&cfg, &out)?;
            print_synth_summary(&summary);
        }
        Command::Diffuse { input, out } => {
            let summary = cmd_diffuse(&cfg, &input, &out)?;
            print_diffuse_summary(&summary);
        }
        Command::Train { data, model_out, log_out } => {
            let summary = cmd_train(&cfg, &data, &model_out, log_out.as_deref())?;
            println!(
                "trained {} epochs, final mean loss {:.4}",
                summary.epochs, summary.final_mean_loss
            );
        }
        Command::Eval { data, model, report } => {
            let result = cmd_eval(&cfg, &data, model.as_deref(), Some(&report))?;
            print_eval_report(&data.display().to_string(), &result);
        }
        Command::Compare { train_data, test_data, out_dir } => {
            let summary = cmd_compare(&cfg, &train_data, &test_data, &out_dir)?;
            print!("{}", summary.table_text);
        }
        Command::Plot { reports, out } => {
            cmd_plot(&reports, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let (clap_args, overrides) = split_config_overrides(std::env::args().collect());
    // Usage errors exit with clap's default status 2, same as config errors.
    let cli = Cli::parse_from(clap_args);
    match run(cli, overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
