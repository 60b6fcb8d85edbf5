//! On-disk artifact formats: JSON-lines datasets, JSON model checkpoints and
//! metric reports, and CSV exports. All writers are deterministic — no
//! timestamps, stable field order, stable record order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use qem_core::datasets::{DatasetMeta, ObservationDataset, ObservationRecord};
use qem_core::metrics::{DeviationCurves, MetricReport};
use qem_core::mitigator::{CheckpointEntry, MlpModel};

use crate::error::AppError;

pub const DATASET_FORMAT: &str = "qem-dataset";
pub const CHECKPOINT_FORMAT: &str = "qem-checkpoint";
pub const REPORT_FORMAT: &str = "qem-report";
pub const FORMAT_VERSION: u32 = 1;

/// First line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub physics_hash: String,
    pub num_records: usize,
    pub meta: DatasetMeta,
}

pub fn save_dataset(
    path: &Path,
    dataset: &ObservationDataset,
    config_hash: &str,
    physics_hash: &str,
) -> Result<(), AppError> {
    let header = DatasetHeader {
        format: DATASET_FORMAT.into(),
        version: FORMAT_VERSION,
        config_hash: config_hash.into(),
        physics_hash: physics_hash.into(),
        num_records: dataset.records.len(),
        meta: dataset.meta.clone(),
    };
    let mut out = String::new();
    out.push_str(&serde_json::to_string(&header).expect("header serializes"));
    out.push('\n');
    for record in &dataset.records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

pub fn load_dataset(path: &Path) -> Result<(ObservationDataset, DatasetHeader), AppError> {
    let text = fs::read_to_string(path)
        .map_err(|e| AppError::data(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| AppError::data(format!("{}: empty file", path.display())))?;
    let header: DatasetHeader = serde_json::from_str(first)
        .map_err(|e| AppError::data(format!("{}:1: bad header: {e}", path.display())))?;
    if header.format != DATASET_FORMAT {
        return Err(AppError::data(format!(
            "{}: format {:?} is not {DATASET_FORMAT:?}",
            path.display(),
            header.format
        )));
    }
    if header.version != FORMAT_VERSION {
        return Err(AppError::data(format!(
            "{}: unsupported version {}",
            path.display(),
            header.version
        )));
    }
    let mut records = Vec::with_capacity(header.num_records);
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let record: ObservationRecord = serde_json::from_str(line)
            .map_err(|e| AppError::data(format!("{}:{lineno}: bad record: {e}", path.display())))?;
        if record.shots == 0 {
            return Err(AppError::data(format!(
                "{}:{lineno}: record has shots = 0",
                path.display()
            )));
        }
        if !record.value.is_finite() {
            return Err(AppError::data(format!(
                "{}:{lineno}: record value {} is not finite",
                path.display(),
                record.value
            )));
        }
        records.push(record);
    }
    if records.len() != header.num_records {
        return Err(AppError::data(format!(
            "{}: header promises {} records, file has {}",
            path.display(),
            header.num_records,
            records.len()
        )));
    }
    Ok((ObservationDataset { meta: header.meta.clone(), records }, header))
}

/// Trained model plus its training provenance. Round trips bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub physics_hash: String,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub checkpoints: Vec<CheckpointEntry>,
    pub model: MlpModel,
}

pub fn save_checkpoint(path: &Path, checkpoint: &CheckpointFile) -> Result<(), AppError> {
    let mut text =
        serde_json::to_string_pretty(checkpoint).expect("checkpoint serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn load_checkpoint(path: &Path) -> Result<CheckpointFile, AppError> {
    let text = fs::read_to_string(path)
        .map_err(|e| AppError::data(format!("cannot read {}: {e}", path.display())))?;
    let checkpoint: CheckpointFile = serde_json::from_str(&text)
        .map_err(|e| AppError::data(format!("{}: bad checkpoint: {e}", path.display())))?;
    if checkpoint.format != CHECKPOINT_FORMAT || checkpoint.version != FORMAT_VERSION {
        return Err(AppError::data(format!(
            "{}: not a version-{FORMAT_VERSION} {CHECKPOINT_FORMAT} file",
            path.display()
        )));
    }
    checkpoint.model.validate().map_err(AppError::from)?;
    Ok(checkpoint)
}

/// Evaluation summary written by the evaluate command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub physics_hash: String,
    pub report: MetricReport,
    /// Per-init deviation curves of the mitigated data, keyed by init state.
    pub deviations: Vec<(String, DeviationCurves)>,
}

pub fn save_report(path: &Path, report: &ReportFile) -> Result<(), AppError> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn load_report(path: &Path) -> Result<ReportFile, AppError> {
    let text = fs::read_to_string(path)
        .map_err(|e| AppError::data(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| AppError::data(format!("{}: bad report: {e}", path.display())))
}

/// Dataset rows with the same columns as the JSON records.
pub fn dataset_to_csv(dataset: &ObservationDataset) -> String {
    let mut out =
        String::from("model_kind,n1,c,role,init_state,time_index,time,axis,qubit,value,shots,seed\n");
    for r in &dataset.records {
        let kind = serde_plain(&r.model_kind);
        let role = serde_plain(&r.role);
        let axis = serde_plain(&r.axis);
        out.push_str(&format!(
            "{kind},{},{},{role},{},{},{},{axis},{},{},{},{}\n",
            r.n1, r.c, r.init_state, r.time_index, r.time, r.qubit, r.value, r.shots, r.seed
        ));
    }
    out
}

/// `(t, value)` columns per named curve, one block per curve.
pub fn curves_to_csv(curves: &[(String, Vec<f64>, Vec<f64>)]) -> String {
    let mut out = String::from("series,t,value\n");
    for (name, times, values) in curves {
        for (t, v) in times.iter().zip(values) {
            out.push_str(&format!("{name},{t},{v}\n"));
        }
    }
    out
}

fn serde_plain<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value)
        .expect("serializes")
        .trim_matches('"')
        .to_string()
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), AppError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| AppError::data(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, bytes)
        .map_err(|e| AppError::data(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qem_core::circuits::{SpinModel, Stage, TrotterSchedule};
    use qem_core::datasets::{generate, GenerateSpec, Sampling};
    use qem_core::datasets::TrainingPair;
    use qem_core::mitigator::{train, TrainConfig};
    use qem_core::qsim::{Axis, NoiseModel};
    use tempfile::tempdir;

    fn sample_dataset() -> ObservationDataset {
        let spec = GenerateSpec {
            model: SpinModel::tfim(2, 2.0, 1.0),
            schedule: TrotterSchedule::new(2, 2, 1.0, 3),
            stage: Stage::EvalNoisy,
            noise: NoiseModel::default_calibration(2),
            sampling: Sampling::Shots(256),
            axes: vec![Axis::Z],
            init_states: vec!["00".into(), "10".into()],
            master_seed: 5,
            post_select: None,
        };
        generate(&spec).unwrap()
    }

    #[test]
    fn dataset_round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        let ds = sample_dataset();
        save_dataset(&path, &ds, "abc", "def").unwrap();
        let (loaded, header) = load_dataset(&path).unwrap();
        assert_eq!(loaded, ds);
        assert_eq!(header.config_hash, "abc");
        // byte-identical rewrite
        let first = fs::read(&path).unwrap();
        save_dataset(&path, &loaded, "abc", "def").unwrap();
        assert_eq!(first, fs::read(&path).unwrap());
    }

    #[test]
    fn loader_reports_line_numbers() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        let ds = sample_dataset();
        save_dataset(&path, &ds, "abc", "def").unwrap();
        let mut text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let mut broken = lines.clone();
        broken[3] = "{not json";
        text = broken.join("\n");
        fs::write(&path, text).unwrap();
        let err = load_dataset(&path).unwrap_err();
        assert!(err.to_string().contains(":4:"), "{err}");
    }

    #[test]
    fn loader_rejects_zero_shots_and_count_mismatch() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        let mut ds = sample_dataset();
        ds.records[0].shots = 0;
        save_dataset(&path, &ds, "a", "b").unwrap();
        assert!(load_dataset(&path).unwrap_err().to_string().contains("shots = 0"));

        let ds = sample_dataset();
        save_dataset(&path, &ds, "a", "b").unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let truncated: Vec<&str> = text.lines().take(text.lines().count() - 1).collect();
        fs::write(&path, truncated.join("\n")).unwrap();
        assert!(load_dataset(&path).unwrap_err().to_string().contains("promises"));
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let pairs: Vec<TrainingPair> = (0..8)
            .map(|i| TrainingPair {
                init_state: format!("{i:02b}"),
                time_index: i % 4 + 1,
                input: vec![0.1 * i as f64 - 0.3, 0.05 * i as f64],
                target: vec![0.2 - 0.04 * i as f64],
            })
            .collect();
        let cfg = TrainConfig { epochs: 20, checkpoint_every: 10, ..TrainConfig::default() };
        let result = train(&pairs, &cfg).unwrap();
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: FORMAT_VERSION,
            config_hash: "h".into(),
            physics_hash: "p".into(),
            best_epoch: result.best_epoch,
            best_val_loss: result.best_val_loss,
            checkpoints: result.checkpoints.clone(),
            model: result.model.clone(),
        };
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_checkpoint(&path, &file).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded, file);
        for (a, b) in loaded.model.weights.iter().flatten().zip(file.model.weights.iter().flatten())
        {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn csv_has_one_row_per_record() {
        let ds = sample_dataset();
        let csv = dataset_to_csv(&ds);
        assert_eq!(csv.lines().count(), ds.records.len() + 1);
        assert!(csv.starts_with("model_kind,"));
        assert!(csv.contains("tfim,"));
    }
}
