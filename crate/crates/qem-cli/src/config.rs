//! TOML run configuration: one file drives every pipeline command.
//!
//! Section and field names are stable so configs stay portable; every
//! artifact written by the CLI embeds the SHA-256 hash of the canonical
//! JSON form of the parsed config for traceability.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qem_core::circuits::{BlockLayout, ModelKind, SpinModel, TrotterSchedule};
use qem_core::datasets::{full_basis, PostSelect, Sampling};
use qem_core::mitigator::TrainConfig;
use qem_core::qsim::{Axis, NoiseModel};

use crate::error::AppError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub postselect: PostSelectSection,
    #[serde(default)]
    pub seeds: SeedsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub num_spins: usize,
    pub coupling: f64,
    pub field: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { kind: ModelKind::Tfim, num_spins: 5, coupling: 2.0, field: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub n1: usize,
    pub c: usize,
    /// Total evolution time T; the default 1.0 equals 2/J at J=2.
    pub total_time: f64,
    /// Time-grid points K; the grid is t_i = i*T/K for i = 1..K.
    pub num_points: usize,
    /// "interleaved", "appended", or an explicit true/false slot pattern.
    pub layout: LayoutSpec,
    pub epsilon_angle: f64,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection {
            n1: 2,
            c: 2,
            total_time: 1.0,
            num_points: 20,
            layout: LayoutSpec::Named(String::from("interleaved")),
            epsilon_angle: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LayoutSpec {
    Named(String),
    Custom(Vec<bool>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub enabled: bool,
    pub p1: f64,
    pub p2: f64,
    pub eps01: f64,
    pub eps10: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection { enabled: true, p1: 5e-4, p2: 1.2e-2, eps01: 0.02, eps10: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    pub shots: u64,
    pub exact_mode: bool,
    /// Measurement axes; `None` picks the model default (x,y,z for the
    /// Ising chain, z only for the XY chain).
    pub axes: Option<Vec<Axis>>,
    /// Initial states; `None` means the full computational basis.
    pub init_states: Option<Vec<String>>,
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection { shots: 8192, exact_mode: false, axes: None, init_states: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub epochs: usize,
    pub checkpoint_every: usize,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_adam: f64,
    /// 0 trains full-batch.
    pub batch_size: usize,
    pub validation_fraction: f64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        TrainingSection {
            epochs: 50_000,
            checkpoint_every: 100,
            alpha: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps_adam: 1e-8,
            batch_size: 0,
            validation_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PostSelectSection {
    #[serde(default)]
    pub enabled: bool,
    /// Fixed excitation target; `None` uses the popcount of each init state.
    #[serde(default)]
    pub target: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedsSection {
    pub master: u64,
    pub training: u64,
}

impl Default for SeedsSection {
    fn default() -> Self {
        SeedsSection { master: 1234, training: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    /// Worker threads for dataset generation fan-out.
    pub workers: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: String::from("out"), workers: 1 }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelSection::default(),
            schedule: ScheduleSection::default(),
            noise: NoiseSection::default(),
            sampling: SamplingSection::default(),
            training: TrainingSection::default(),
            postselect: PostSelectSection::default(),
            seeds: SeedsSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, AppError> {
        let text = fs::read_to_string(path).map_err(|e| {
            AppError::config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: RunConfig = toml::from_str(&text).map_err(|e| {
            AppError::config(format!("cannot parse config {}: {e}", path.display()))
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Collects every violated field into one error.
    pub fn validate(&self) -> Result<(), AppError> {
        let mut violations = Vec::new();
        if self.model.num_spins < 2 || self.model.num_spins > 6 {
            violations.push(format!("model.num_spins = {} not in 2..=6", self.model.num_spins));
        }
        if self.schedule.n1 == 0 {
            violations.push("schedule.n1 must be >= 1".into());
        }
        if self.schedule.c == 0 {
            violations.push("schedule.c must be >= 1".into());
        }
        if !(self.schedule.total_time > 0.0) {
            violations.push(format!("schedule.total_time = {} must be > 0", self.schedule.total_time));
        }
        if self.schedule.num_points == 0 {
            violations.push("schedule.num_points must be >= 1".into());
        }
        if self.schedule.epsilon_angle.abs() > 1e-2 {
            violations.push(format!(
                "schedule.epsilon_angle = {} exceeds 1e-2",
                self.schedule.epsilon_angle
            ));
        }
        if let LayoutSpec::Named(name) = &self.schedule.layout {
            if name != "interleaved" && name != "appended" {
                violations.push(format!(
                    "schedule.layout = {name:?} is not \"interleaved\", \"appended\", or a slot pattern"
                ));
            }
        }
        for (name, p) in [("noise.p1", self.noise.p1), ("noise.p2", self.noise.p2)] {
            if !(0.0..=1.0).contains(&p) {
                violations.push(format!("{name} = {p} not in [0, 1]"));
            }
        }
        for (name, e) in [("noise.eps01", self.noise.eps01), ("noise.eps10", self.noise.eps10)] {
            if !(0.0..=0.5).contains(&e) {
                violations.push(format!("{name} = {e} not in [0, 0.5]"));
            }
        }
        if self.sampling.shots == 0 {
            violations.push("sampling.shots must be >= 1".into());
        }
        if let Some(states) = &self.sampling.init_states {
            if states.is_empty() {
                violations.push("sampling.init_states must not be empty when given".into());
            }
            for s in states {
                if s.len() != self.model.num_spins || s.chars().any(|c| c != '0' && c != '1') {
                    violations.push(format!(
                        "sampling.init_states entry {s:?} is not a {}-bit string",
                        self.model.num_spins
                    ));
                }
            }
        }
        if let Some(axes) = &self.sampling.axes {
            if axes.is_empty() {
                violations.push("sampling.axes must not be empty when given".into());
            }
        }
        if self.training.checkpoint_every == 0 {
            violations.push("training.checkpoint_every must be >= 1".into());
        } else if self.training.epochs < self.training.checkpoint_every {
            violations.push(format!(
                "training.epochs = {} below training.checkpoint_every = {}",
                self.training.epochs, self.training.checkpoint_every
            ));
        }
        if !(0.0..=0.5).contains(&self.training.validation_fraction) {
            violations.push(format!(
                "training.validation_fraction = {} not in [0, 0.5]",
                self.training.validation_fraction
            ));
        }
        if self.output.workers == 0 {
            violations.push("output.workers must be >= 1".into());
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(AppError::config(format!(
                "invalid config ({} violations):\n  - {}",
                violations.len(),
                violations.join("\n  - ")
            )))
        }
    }

    /// SHA-256 over the canonical JSON form of the full config.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        hex(&digest)
    }

    /// Hash over the model and schedule sections only; evaluate compares
    /// artifacts by this so sampling/training edits do not block comparison.
    pub fn physics_hash(&self) -> String {
        let canon = serde_json::to_string(&(&self.model, &self.schedule))
            .expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        hex(&digest)
    }

    pub fn spin_model(&self) -> SpinModel {
        SpinModel {
            kind: self.model.kind,
            num_spins: self.model.num_spins,
            coupling: self.model.coupling,
            field: self.model.field,
        }
    }

    pub fn trotter_schedule(&self) -> TrotterSchedule {
        let layout = match &self.schedule.layout {
            LayoutSpec::Named(name) if name == "appended" => BlockLayout::Appended,
            LayoutSpec::Named(_) => BlockLayout::Interleaved,
            LayoutSpec::Custom(slots) => BlockLayout::Custom(slots.clone()),
        };
        TrotterSchedule {
            n1: self.schedule.n1,
            c: self.schedule.c,
            total_time: self.schedule.total_time,
            num_points: self.schedule.num_points,
            layout,
            epsilon_angle: self.schedule.epsilon_angle,
        }
    }

    pub fn noise_model(&self) -> NoiseModel {
        if self.noise.enabled {
            NoiseModel {
                p1: self.noise.p1,
                p2: self.noise.p2,
                readout: vec![(self.noise.eps01, self.noise.eps10); self.model.num_spins],
                enabled: true,
            }
        } else {
            NoiseModel::disabled(self.model.num_spins)
        }
    }

    pub fn sampling_mode(&self) -> Sampling {
        if self.sampling.exact_mode {
            Sampling::Exact
        } else {
            Sampling::Shots(self.sampling.shots)
        }
    }

    pub fn axes(&self) -> Vec<Axis> {
        match &self.sampling.axes {
            Some(axes) => axes.clone(),
            None => match self.model.kind {
                ModelKind::Tfim => vec![Axis::X, Axis::Y, Axis::Z],
                ModelKind::Xy => vec![Axis::Z],
            },
        }
    }

    pub fn init_states(&self) -> Vec<String> {
        match &self.sampling.init_states {
            Some(states) => states.clone(),
            None => full_basis(self.model.num_spins),
        }
    }

    pub fn post_select(&self) -> Option<PostSelect> {
        if !self.postselect.enabled {
            return None;
        }
        Some(match self.postselect.target {
            Some(n) => PostSelect::Target(n),
            None => PostSelect::Auto,
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.training.epochs,
            checkpoint_every: self.training.checkpoint_every,
            alpha: self.training.alpha,
            beta1: self.training.beta1,
            beta2: self.training.beta2,
            eps_adam: self.training.eps_adam,
            batch_size: if self.training.batch_size == 0 {
                None
            } else {
                Some(self.training.batch_size)
            },
            validation_fraction: self.training.validation_fraction,
            seed: self.seeds.training,
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
