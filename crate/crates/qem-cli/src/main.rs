//! `qem`: generate Trotter-circuit magnetization datasets on a synthetic
//! noisy backend, train a neural error-mitigation model, apply it, and
//! evaluate the result against reference dynamics.

mod config;
mod error;
mod formats;
mod pipeline;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qem_core::circuits::Stage;
use qem_core::datasets::DatasetRole;
use qem_core::metrics;
use qem_core::qsim::Axis;

use config::RunConfig;
use error::AppError;

#[derive(Parser)]
#[command(name = "qem", version, about = "Neural error mitigation for Trotterized spin dynamics")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the master sampling seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Compute exact expectations instead of finite-shot estimates.
    #[arg(long, global = true)]
    exact_mode: bool,
    /// Enable post-selection on a fixed excitation count.
    #[arg(long, global = true, value_name = "N")]
    post_select: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    QuasiIdeal,
    TrainingNoisy,
    EvalNoisy,
}

impl From<StageArg> for Stage {
    fn from(s: StageArg) -> Stage {
        match s {
            StageArg::QuasiIdeal => Stage::QuasiIdeal,
            StageArg::TrainingNoisy => Stage::TrainingNoisy,
            StageArg::EvalNoisy => Stage::EvalNoisy,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Csv,
    Svg,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one protocol stage and write its dataset.
    Generate {
        #[arg(long, value_enum)]
        stage: StageArg,
    },
    /// Train a mitigation network on a (training-noisy, quasi-ideal) pair.
    Train {
        /// Training-noisy dataset file.
        #[arg(long)]
        noisy: PathBuf,
        /// Quasi-ideal target dataset file.
        #[arg(long)]
        quasi: PathBuf,
    },
    /// Apply a trained checkpoint to an evaluation dataset.
    Mitigate {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Noisy evaluation dataset file.
        #[arg(long)]
        eval: PathBuf,
        /// Skip physics-hash consistency checks.
        #[arg(long)]
        force: bool,
    },
    /// Compare mitigated and raw datasets against a baseline.
    Evaluate {
        /// Mitigated dataset file.
        mitigated: PathBuf,
        /// Unmitigated evaluation dataset file.
        raw: PathBuf,
        /// Baseline dataset file (typically quasi-ideal or ideal Trotter).
        baseline: PathBuf,
        /// Exact-dynamics dataset for the second deviation curve.
        #[arg(long)]
        exact: Option<PathBuf>,
        /// Skip physics-hash consistency checks.
        #[arg(long)]
        force: bool,
    },
    /// Write exact and noise-free Trotter reference datasets.
    Reference,
    /// Convert a dataset or report to CSV or SVG.
    Export {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        #[arg(long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("qem: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, AppError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seeds.master = seed;
    }
    if let Some(out) = &cli.out {
        config.output.dir = out.display().to_string();
    }
    if cli.exact_mode {
        config.sampling.exact_mode = true;
    }
    if let Some(target) = cli.post_select {
        config.postselect.enabled = true;
        config.postselect.target = Some(target);
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<(), AppError> {
    let config = load_config(&cli)?;
    let out_dir = PathBuf::from(&config.output.dir);
    match cli.command {
        Command::Generate { stage } => {
            let stage: Stage = stage.into();
            let dataset = pipeline::generate_dataset(&config, stage)?;
            let path = pipeline::dataset_path(&out_dir, stage.into());
            formats::save_dataset(&path, &dataset, &config.hash(), &config.physics_hash())?;
            log::info!("wrote {} records to {}", dataset.records.len(), path.display());
            println!("{}", path.display());
        }
        Command::Train { noisy, quasi } => {
            let (checkpoint, result) = pipeline::train_from_files(&config, &noisy, &quasi)?;
            let path = out_dir.join("checkpoint.json");
            formats::save_checkpoint(&path, &checkpoint)?;
            log::info!(
                "best epoch {} with validation loss {:.6e}",
                result.best_epoch,
                result.best_val_loss
            );
            println!("{}", path.display());
        }
        Command::Mitigate { checkpoint, eval, force } => {
            let mitigated = pipeline::mitigate_file(&config, &checkpoint, &eval, force)?;
            let path = pipeline::dataset_path(&out_dir, DatasetRole::Mitigated);
            formats::save_dataset(&path, &mitigated, &config.hash(), &config.physics_hash())?;
            println!("{}", path.display());
        }
        Command::Evaluate { mitigated, raw, baseline, exact, force } => {
            let report = pipeline::evaluate(
                &config,
                &mitigated,
                &raw,
                &baseline,
                exact.as_deref(),
                force,
            )?;
            let path = out_dir.join("report.json");
            formats::save_report(&path, &report)?;
            log::info!(
                "raw mse {:.6e}, mitigated mse {:.6e}, ratio {:.4}",
                report.report.raw_mse,
                report.report.mitigated_mse,
                report.report.improvement_ratio
            );
            println!("{}", path.display());
        }
        Command::Reference => {
            let (exact, trotter) = pipeline::reference_datasets(&config)?;
            for dataset in [&exact, &trotter] {
                let path = pipeline::dataset_path(&out_dir, dataset.meta.role);
                formats::save_dataset(&path, dataset, &config.hash(), &config.physics_hash())?;
                println!("{}", path.display());
            }
        }
        Command::Export { input, format, output } => {
            export(&input, format, &output)?;
            println!("{}", output.display());
        }
    }
    Ok(())
}

fn export(input: &Path, format: ExportFormat, output: &Path) -> Result<(), AppError> {
    // Reports export their deviation curves; everything else is a dataset.
    if let Ok(report) = formats::load_report(input) {
        let mut curves = Vec::new();
        for (init, dev) in &report.deviations {
            curves.push((format!("{init} vs trotter"), dev.times.clone(), dev.vs_trotter.clone()));
            curves.push((format!("{init} vs exact"), dev.times.clone(), dev.vs_exact.clone()));
        }
        let bytes = match format {
            ExportFormat::Csv => formats::curves_to_csv(&curves),
            ExportFormat::Svg => plot::line_chart("mitigated magnetization deviation", &curves),
        };
        return formats::write_file(output, bytes.as_bytes());
    }
    let (dataset, _) = formats::load_dataset(input)?;
    match format {
        ExportFormat::Csv => {
            formats::write_file(output, formats::dataset_to_csv(&dataset).as_bytes())
        }
        ExportFormat::Svg => {
            // One mean-magnetization series per initial state; XY datasets
            // carry only Z-axis records, TFIM charts also use the Z axis.
            let mut series = Vec::new();
            for init in &dataset.meta.init_states {
                if dataset.records.iter().any(|r| r.init_state == *init && r.axis == Axis::Z) {
                    let (times, values) = metrics::mean_magnetization(&dataset, init)?;
                    series.push((init.clone(), times, values));
                }
            }
            let title = format!("mean Z magnetization ({})", pipeline::role_tag(dataset.meta.role));
            formats::write_file(output, plot::line_chart(&title, &series).as_bytes())
        }
    }
}
