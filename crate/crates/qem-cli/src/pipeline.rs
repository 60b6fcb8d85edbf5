//! Pipeline steps behind the CLI subcommands: dataset generation with a
//! worker pool, reference-curve emission, training, mitigation, and
//! evaluation. Every step is a deterministic function of (config, inputs).

use std::path::{Path, PathBuf};

use qem_core::circuits::Stage;
use qem_core::datasets::{
    generate_task, pair_for_training, DatasetMeta, DatasetRole, GenerateSpec, ObservationDataset,
    ObservationRecord,
};
use qem_core::metrics::{self, MetricReport};
use qem_core::mitigator::{self, TrainResult};
use qem_core::qsim::{Axis, NoiseModel};
use qem_core::reference::{
    exact_expectations, ideal_trotter_expectations, observable_grid, CurveTable,
};

use crate::config::RunConfig;
use crate::error::AppError;
use crate::formats::{self, CheckpointFile, DatasetHeader, ReportFile};

pub fn generate_spec(config: &RunConfig, stage: Stage) -> GenerateSpec {
    GenerateSpec {
        model: config.spin_model(),
        schedule: config.trotter_schedule(),
        stage,
        noise: config.noise_model(),
        sampling: config.sampling_mode(),
        axes: config.axes(),
        init_states: config.init_states(),
        master_seed: config.seeds.master,
        post_select: config.post_select(),
    }
}

/// Generates one stage dataset, fanning tasks out over
/// `config.output.workers` threads. Records are merged in task order, so
/// the result is identical for any worker count.
pub fn generate_dataset(config: &RunConfig, stage: Stage) -> Result<ObservationDataset, AppError> {
    let spec = generate_spec(config, stage);
    spec.validate().map_err(AppError::from)?;
    let tasks = spec.tasks();
    let workers = config.output.workers.min(tasks.len().max(1));
    let mut results: Vec<Vec<ObservationRecord>> = Vec::with_capacity(tasks.len());
    if workers <= 1 {
        for &(l, i, axis) in &tasks {
            results.push(generate_task(&spec, l, i, axis).map_err(AppError::from)?);
        }
    } else {
        let chunks: Vec<&[(usize, usize, Axis)]> =
            tasks.chunks(tasks.len().div_ceil(workers)).collect();
        let outputs: Vec<Result<Vec<Vec<ObservationRecord>>, qem_core::Error>> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = chunks
                    .into_iter()
                    .map(|chunk| {
                        let spec = &spec;
                        scope.spawn(move || {
                            chunk
                                .iter()
                                .map(|&(l, i, axis)| generate_task(spec, l, i, axis))
                                .collect()
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
            });
        for chunk in outputs {
            results.extend(chunk.map_err(AppError::from)?);
        }
    }
    Ok(ObservationDataset {
        meta: dataset_meta(&spec),
        records: results.into_iter().flatten().collect(),
    })
}

fn dataset_meta(spec: &GenerateSpec) -> DatasetMeta {
    DatasetMeta {
        model: spec.model,
        schedule: spec.schedule.clone(),
        role: spec.stage.into(),
        noise: spec.noise.clone(),
        sampling: spec.sampling,
        axes: spec.axes.clone(),
        init_states: spec.init_states.clone(),
        master_seed: spec.master_seed,
        post_select: spec.post_select,
    }
}

/// Exact Schrödinger and noise-free Trotter (at N2) curves in dataset form.
pub fn reference_datasets(
    config: &RunConfig,
) -> Result<(ObservationDataset, ObservationDataset), AppError> {
    let model = config.spin_model();
    let schedule = config.trotter_schedule();
    let axes = config.axes();
    let grid = schedule.time_grid();
    let observables = observable_grid(&axes, model.num_spins);
    let mut exact_records = Vec::new();
    let mut trotter_records = Vec::new();
    for init in config.init_states() {
        let exact = exact_expectations(&model, &init, &grid, &observables)?;
        let trotter =
            ideal_trotter_expectations(&model, &init, schedule.n2(), &grid, &observables)?;
        exact_records.extend(curve_records(&exact, &init, config, DatasetRole::Exact));
        trotter_records.extend(curve_records(&trotter, &init, config, DatasetRole::IdealTrotter));
    }
    let spec = generate_spec(config, Stage::EvalNoisy);
    let meta = |role: DatasetRole| {
        let mut m = dataset_meta(&spec);
        m.role = role;
        m.noise = NoiseModel::disabled(model.num_spins);
        m
    };
    Ok((
        ObservationDataset { meta: meta(DatasetRole::Exact), records: exact_records },
        ObservationDataset { meta: meta(DatasetRole::IdealTrotter), records: trotter_records },
    ))
}

fn curve_records(
    table: &CurveTable,
    init: &str,
    config: &RunConfig,
    role: DatasetRole,
) -> Vec<ObservationRecord> {
    let schedule = config.trotter_schedule();
    let mut records = Vec::new();
    for (i, &t) in table.times.iter().enumerate() {
        for &(axis, qubit) in &table.observables {
            records.push(ObservationRecord {
                model_kind: config.model.kind,
                n1: schedule.n1,
                c: schedule.c,
                layout: schedule.layout.clone(),
                role,
                init_state: init.to_string(),
                time_index: i + 1,
                time: t,
                axis,
                qubit,
                value: table.value(i, axis, qubit).expect("observable present"),
                shots: config.sampling.shots,
                seed: 0,
            });
        }
    }
    records
}

pub fn dataset_path(out_dir: &Path, role: DatasetRole) -> PathBuf {
    out_dir.join(format!("dataset_{}.jsonl", role_tag(role)))
}

pub fn role_tag(role: DatasetRole) -> String {
    serde_json::to_string(&role).expect("role serializes").trim_matches('"').to_string()
}

/// Trains a network on (training-noisy, quasi-ideal) dataset files and
/// packages the selected checkpoint.
pub fn train_from_files(
    config: &RunConfig,
    noisy_path: &Path,
    quasi_path: &Path,
) -> Result<(CheckpointFile, TrainResult), AppError> {
    let (noisy, noisy_header) = formats::load_dataset(noisy_path)?;
    let (quasi, quasi_header) = formats::load_dataset(quasi_path)?;
    check_physics(config, &noisy_header, noisy_path, false)?;
    check_physics(config, &quasi_header, quasi_path, false)?;
    let pairs = pair_for_training(&noisy, &quasi).map_err(AppError::from)?;
    let result = mitigator::train(&pairs, &config.train_config()).map_err(AppError::from)?;
    let file = CheckpointFile {
        format: formats::CHECKPOINT_FORMAT.into(),
        version: formats::FORMAT_VERSION,
        config_hash: config.hash(),
        physics_hash: config.physics_hash(),
        best_epoch: result.best_epoch,
        best_val_loss: result.best_val_loss,
        checkpoints: result.checkpoints.clone(),
        model: result.model.clone(),
    };
    Ok((file, result))
}

pub fn mitigate_file(
    config: &RunConfig,
    checkpoint_path: &Path,
    eval_path: &Path,
    force: bool,
) -> Result<ObservationDataset, AppError> {
    let checkpoint = formats::load_checkpoint(checkpoint_path)?;
    let (eval, header) = formats::load_dataset(eval_path)?;
    check_physics(config, &header, eval_path, force)?;
    if !force && checkpoint.physics_hash != config.physics_hash() {
        return Err(AppError::data(format!(
            "{}: checkpoint physics hash {} does not match config {} (pass --force to override)",
            checkpoint_path.display(),
            checkpoint.physics_hash,
            config.physics_hash()
        )));
    }
    mitigator::mitigate(&checkpoint.model, &eval).map_err(AppError::from)
}

fn check_physics(
    config: &RunConfig,
    header: &DatasetHeader,
    path: &Path,
    force: bool,
) -> Result<(), AppError> {
    if !force && header.physics_hash != config.physics_hash() {
        return Err(AppError::data(format!(
            "{}: dataset physics hash {} does not match config {} (pass --force to override)",
            path.display(),
            header.physics_hash,
            config.physics_hash()
        )));
    }
    Ok(())
}

/// Compares mitigated and raw datasets against a baseline and assembles the
/// metric report with per-init deviation curves of the mitigated data.
pub fn evaluate(
    config: &RunConfig,
    mitigated_path: &Path,
    raw_path: &Path,
    baseline_path: &Path,
    exact_path: Option<&Path>,
    force: bool,
) -> Result<ReportFile, AppError> {
    let (mitigated, mheader) = formats::load_dataset(mitigated_path)?;
    let (raw, rheader) = formats::load_dataset(raw_path)?;
    let (baseline, bheader) = formats::load_dataset(baseline_path)?;
    for (header, path) in [
        (&mheader, mitigated_path),
        (&rheader, raw_path),
        (&bheader, baseline_path),
    ] {
        check_physics(config, header, path, force)?;
    }
    let axes = [Axis::Z];
    let raw_mse = metrics::mse(&raw, &baseline, &axes)?;
    let mitigated_mse = metrics::mse(&mitigated, &baseline, &axes)?;
    let num_compared = metrics::compared_count(&mitigated, &axes);
    let report = MetricReport::new(raw_mse, mitigated_mse, vec![Axis::Z], num_compared);

    let mut deviations = Vec::new();
    let exact = match exact_path {
        Some(path) => {
            let (ds, eheader) = formats::load_dataset(path)?;
            check_physics(config, &eheader, path, force)?;
            Some(ds)
        }
        None => None,
    };
    for init in &mitigated.meta.init_states {
        let trotter_curve = metrics::mean_magnetization(&baseline, init)?;
        let exact_curve = match &exact {
            Some(ds) => metrics::mean_magnetization(ds, init)?,
            None => trotter_curve.clone(),
        };
        deviations.push((
            init.clone(),
            metrics::deviation_curves(&mitigated, init, &trotter_curve, &exact_curve)?,
        ));
    }
    Ok(ReportFile {
        format: formats::REPORT_FORMAT.into(),
        version: formats::FORMAT_VERSION,
        config_hash: config.hash(),
        physics_hash: config.physics_hash(),
        report,
        deviations,
    })
}
