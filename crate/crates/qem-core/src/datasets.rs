//! Generation, post-selection, and pairing of observation datasets.
//!
//! A dataset is a flat list of magnetization records indexed by initial
//! state, time point, axis, and qubit, plus a header describing exactly how
//! it was produced. One simulated circuit (per initial state, time point,
//! and measurement axis) yields one record per qubit; all qubits of that
//! circuit share one measured histogram and therefore one derived seed.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::circuits::{self, BlockLayout, ModelKind, SpinModel, Stage, TrotterSchedule};
use crate::qsim::{self, Axis, NoiseModel, ShotHistogram};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Provenance of a dataset's values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetRole {
    QuasiIdeal,
    TrainingNoisy,
    EvalNoisy,
    Mitigated,
    Exact,
    IdealTrotter,
}

impl From<Stage> for DatasetRole {
    fn from(stage: Stage) -> DatasetRole {
        match stage {
            Stage::QuasiIdeal => DatasetRole::QuasiIdeal,
            Stage::TrainingNoisy => DatasetRole::TrainingNoisy,
            Stage::EvalNoisy => DatasetRole::EvalNoisy,
        }
    }
}

/// How expectation values are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Finite shot sampling with readout flips.
    Shots(u64),
    /// Deterministic expectations (readout confusion folded analytically).
    Exact,
}

/// Post-selection target for histograms measured in the Z basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostSelect {
    /// Keep bitstrings whose popcount equals that of the initial state.
    Auto,
    /// Keep bitstrings with a fixed excitation count.
    Target(u32),
}

/// One measured magnetization value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub model_kind: ModelKind,
    pub n1: usize,
    pub c: usize,
    pub layout: BlockLayout,
    pub role: DatasetRole,
    pub init_state: String,
    /// 1-based index into the time grid `t_i = i T / K`.
    pub time_index: usize,
    pub time: f64,
    pub axis: Axis,
    pub qubit: usize,
    pub value: f64,
    pub shots: u64,
    pub seed: u64,
}

/// Dataset header: everything needed to regenerate the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub model: SpinModel,
    pub schedule: TrotterSchedule,
    pub role: DatasetRole,
    pub noise: NoiseModel,
    pub sampling: Sampling,
    pub axes: Vec<Axis>,
    pub init_states: Vec<String>,
    pub master_seed: u64,
    pub post_select: Option<PostSelect>,
}

/// Records plus their generation header.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationDataset {
    pub meta: DatasetMeta,
    pub records: Vec<ObservationRecord>,
}

impl ObservationDataset {
    /// Looks up a value by its unique record key.
    pub fn value(&self, init: &str, time_index: usize, axis: Axis, qubit: usize) -> Option<f64> {
        self.records
            .iter()
            .find(|r| {
                r.init_state == init && r.time_index == time_index && r.axis == axis && r.qubit == qubit
            })
            .map(|r| r.value)
    }

    /// Distinct (init_state, time_index) keys in record order.
    pub fn sample_keys(&self) -> Vec<(String, usize)> {
        let mut keys: Vec<(String, usize)> = Vec::new();
        for r in &self.records {
            let key = (r.init_state.clone(), r.time_index);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        keys
    }

    /// Key-to-value map for fast batched lookups.
    pub fn value_index(&self) -> ValueIndex {
        let mut map = alloc::collections::BTreeMap::new();
        for r in &self.records {
            map.insert((r.init_state.clone(), r.time_index, r.axis, r.qubit), r.value);
        }
        ValueIndex { map, num_qubits: self.meta.model.num_spins }
    }

    /// Observable vector for one sample, ordered axis-major then by qubit.
    pub fn feature_vector(
        &self,
        init: &str,
        time_index: usize,
        axes: &[Axis],
    ) -> Result<Vec<f64>> {
        self.value_index().feature_vector(init, time_index, axes)
    }
}

/// Fast lookup of record values by (init, time index, axis, qubit).
#[derive(Debug, Clone)]
pub struct ValueIndex {
    map: alloc::collections::BTreeMap<(String, usize, Axis, usize), f64>,
    num_qubits: usize,
}

impl ValueIndex {
    pub fn get(&self, init: &str, time_index: usize, axis: Axis, qubit: usize) -> Option<f64> {
        self.map.get(&(String::from(init), time_index, axis, qubit)).copied()
    }

    /// Observable vector for one sample, ordered axis-major then by qubit.
    pub fn feature_vector(&self, init: &str, time_index: usize, axes: &[Axis]) -> Result<Vec<f64>> {
        let mut features = Vec::with_capacity(axes.len() * self.num_qubits);
        let mut missing = Vec::new();
        for &axis in axes {
            for qubit in 0..self.num_qubits {
                match self.get(init, time_index, axis, qubit) {
                    Some(v) => features.push(v),
                    None => missing.push(format!("({init}, t{time_index}, {}, q{qubit})", axis.label())),
                }
            }
        }
        if !missing.is_empty() {
            return Err(Error::Alignment(format!("missing records: {}", missing.join(", "))));
        }
        Ok(features)
    }
}

/// Inputs to [`generate`].
#[derive(Debug, Clone)]
pub struct GenerateSpec {
    pub model: SpinModel,
    pub schedule: TrotterSchedule,
    pub stage: Stage,
    pub noise: NoiseModel,
    pub sampling: Sampling,
    pub axes: Vec<Axis>,
    pub init_states: Vec<String>,
    pub master_seed: u64,
    pub post_select: Option<PostSelect>,
}

impl GenerateSpec {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.schedule.validate()?;
        self.noise.validate(self.model.num_spins)?;
        if self.init_states.is_empty() {
            return Err(Error::InvalidArgument("init_states must not be empty".into()));
        }
        if self.axes.is_empty() {
            return Err(Error::InvalidArgument("axes must not be empty".into()));
        }
        if let Sampling::Shots(0) = self.sampling {
            return Err(Error::InvalidArgument("shots must be positive".into()));
        }
        for init in &self.init_states {
            if init.len() != self.model.num_spins {
                return Err(Error::InvalidArgument(format!(
                    "initial state {init:?} does not match {} spins",
                    self.model.num_spins
                )));
            }
            qsim::parse_bits(init)?;
        }
        Ok(())
    }

    fn nominal_shots(&self) -> u64 {
        match self.sampling {
            Sampling::Shots(s) => s,
            Sampling::Exact => 8192,
        }
    }

    /// All (init index, time index, axis) simulation tasks, in dataset order.
    pub fn tasks(&self) -> Vec<(usize, usize, Axis)> {
        let mut tasks = Vec::new();
        for l in 0..self.init_states.len() {
            for i in 1..=self.schedule.num_points {
                for &axis in &self.axes {
                    tasks.push((l, i, axis));
                }
            }
        }
        tasks
    }
}

fn stage_tag(stage: Stage) -> u64 {
    match stage {
        Stage::QuasiIdeal => 1,
        Stage::TrainingNoisy => 2,
        Stage::EvalNoisy => 3,
    }
}

fn axis_tag(axis: Axis) -> u64 {
    match axis {
        Axis::X => 1,
        Axis::Y => 2,
        Axis::Z => 3,
    }
}

/// Runs one simulation task: builds the stage circuit for time point `i`,
/// simulates it with noise, applies the measurement pre-rotation for the
/// axis (also noisy), and estimates one value per qubit.
pub fn generate_task(
    spec: &GenerateSpec,
    init_index: usize,
    time_index: usize,
    axis: Axis,
) -> Result<Vec<ObservationRecord>> {
    let init = &spec.init_states[init_index];
    let init_bits = qsim::parse_bits(init)?;
    let t = time_index as f64 * spec.schedule.total_time / spec.schedule.num_points as f64;
    let mut circuit = circuits::build_circuit(&spec.model, &spec.schedule, t, spec.stage)?;
    circuit.extend(circuits::measurement_prerotation(axis, spec.model.num_spins));
    let rho = circuit.simulate(
        &qsim::DensityMatrix::basis_state(spec.model.num_spins, init)?,
        &spec.noise,
    )?;
    let seed = derive_seed(
        spec.master_seed,
        &[stage_tag(spec.stage), init_bits as u64, time_index as u64, axis_tag(axis)],
    );

    let values: Vec<f64> = match spec.sampling {
        Sampling::Exact => (0..spec.model.num_spins)
            .map(|q| rho.measured_z_expectation(q, &spec.noise))
            .collect::<Result<_>>()?,
        Sampling::Shots(shots) => {
            let mut hist = rho.sample_counts(shots, &spec.noise, seed)?;
            if axis == Axis::Z {
                if let Some(ps) = spec.post_select {
                    let target = match ps {
                        PostSelect::Auto => qsim::popcount(init),
                        PostSelect::Target(n) => n,
                    };
                    match post_select(&hist, target) {
                        Ok(filtered) => hist = filtered,
                        Err(Error::DegeneratePostSelection) => {
                            log::warn!(
                                "post-selection discarded all shots for ({init}, t{time_index}); using unfiltered counts"
                            );
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            (0..spec.model.num_spins)
                .map(|q| qsim::expectation_from_counts(&hist, axis, q, axis != Axis::Z))
                .collect::<Result<_>>()?
        }
    };

    Ok(values
        .into_iter()
        .enumerate()
        .map(|(qubit, value)| ObservationRecord {
            model_kind: spec.model.kind,
            n1: spec.schedule.n1,
            c: spec.schedule.c,
            layout: spec.schedule.layout.clone(),
            role: spec.stage.into(),
            init_state: init.clone(),
            time_index,
            time: t,
            axis,
            qubit,
            value,
            shots: spec.nominal_shots(),
            seed,
        })
        .collect())
}

/// Generates the full dataset for a protocol stage.
///
/// Covers every (initial state, time point, axis, qubit); for a full-basis
/// run the record count is `D = 2^Nq * Nq * K * B`.
pub fn generate(spec: &GenerateSpec) -> Result<ObservationDataset> {
    spec.validate()?;
    let mut records = Vec::new();
    for (l, i, axis) in spec.tasks() {
        records.extend(generate_task(spec, l, i, axis)?);
    }
    Ok(ObservationDataset {
        meta: DatasetMeta {
            model: spec.model,
            schedule: spec.schedule.clone(),
            role: spec.stage.into(),
            noise: spec.noise.clone(),
            sampling: spec.sampling,
            axes: spec.axes.clone(),
            init_states: spec.init_states.clone(),
            master_seed: spec.master_seed,
            post_select: spec.post_select,
        },
        records,
    })
}

/// All computational-basis bitstrings for a register size.
pub fn full_basis(num_qubits: usize) -> Vec<String> {
    (0..1usize << num_qubits)
        .map(|index| qsim::format_bits(index, num_qubits))
        .collect()
}

/// Keeps only bitstrings whose popcount equals `target_excitations`,
/// rescaling `shots` to the kept total.
pub fn post_select(histogram: &ShotHistogram, target_excitations: u32) -> Result<ShotHistogram> {
    let counts: alloc::collections::BTreeMap<String, u64> = histogram
        .counts
        .iter()
        .filter(|(bits, _)| qsim::popcount(bits) == target_excitations)
        .map(|(bits, &n)| (bits.clone(), n))
        .collect();
    if counts.values().sum::<u64>() == 0 {
        return Err(Error::DegeneratePostSelection);
    }
    Ok(ShotHistogram::new(counts))
}

/// One input/target pair per (initial state, time point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub init_state: String,
    pub time_index: usize,
    /// Noisy observables, axis-major then by qubit (raw magnetizations).
    pub input: Vec<f64>,
    /// Quasi-ideal z-magnetizations per qubit.
    pub target: Vec<f64>,
}

/// Aligns a noisy dataset with its quasi-ideal counterpart into training
/// pairs: inputs are the noisy observables over `noisy.meta.axes`, targets
/// the quasi-ideal z-magnetizations.
pub fn pair_for_training(
    noisy: &ObservationDataset,
    quasi_ideal: &ObservationDataset,
) -> Result<Vec<TrainingPair>> {
    if noisy.meta.role != DatasetRole::TrainingNoisy {
        return Err(Error::InvalidArgument(format!(
            "noisy dataset role is {:?}, expected TrainingNoisy",
            noisy.meta.role
        )));
    }
    if quasi_ideal.meta.role != DatasetRole::QuasiIdeal {
        return Err(Error::InvalidArgument(format!(
            "target dataset role is {:?}, expected QuasiIdeal",
            quasi_ideal.meta.role
        )));
    }
    let noisy_keys = noisy.sample_keys();
    let target_keys = quasi_ideal.sample_keys();
    if noisy_keys != target_keys {
        let missing: Vec<String> = noisy_keys
            .iter()
            .filter(|k| !target_keys.contains(k))
            .chain(target_keys.iter().filter(|k| !noisy_keys.contains(k)))
            .map(|(init, i)| format!("({init}, t{i})"))
            .collect();
        return Err(Error::Alignment(format!(
            "datasets cover different (init, time) keys: {}",
            missing.join(", ")
        )));
    }
    let axes = &noisy.meta.axes;
    let noisy_index = noisy.value_index();
    let target_index = quasi_ideal.value_index();
    noisy_keys
        .into_iter()
        .map(|(init, time_index)| {
            let input = noisy_index.feature_vector(&init, time_index, axes)?;
            let target = target_index.feature_vector(&init, time_index, &[Axis::Z])?;
            Ok(TrainingPair { init_state: init, time_index, input, target })
        })
        .collect()
}
