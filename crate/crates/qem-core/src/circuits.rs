//! Trotter-step gate sequences for spin chains and full-circuit assembly
//! with real and empty (fictitious) blocks.
//!
//! A single Trotter step follows the split `exp(-i H_A dt) exp(-i H_B dt)`:
//! single-qubit rotations for the field term, then two-qubit blocks for the
//! bond terms, even bonds before odd bonds. Empty blocks are structural
//! clones of a real step with every rotation angle replaced by a small
//! epsilon; they reduce to the identity under perfect execution and act as
//! pure noise amplifiers otherwise.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::CMatrix;
use crate::qsim::{Axis, DensityMatrix, Gate, GateKind, NoiseModel};
use crate::{Error, Result};

/// Spin-chain model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "tfim")]
    Tfim,
    #[serde(rename = "xy")]
    Xy,
}

/// Nearest-neighbor spin chain with uniform coupling and field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinModel {
    pub kind: ModelKind,
    pub num_spins: usize,
    /// Coupling constant J.
    pub coupling: f64,
    /// Transverse (TFIM) or longitudinal (XY) field h.
    pub field: f64,
}

impl SpinModel {
    pub fn tfim(num_spins: usize, coupling: f64, field: f64) -> SpinModel {
        SpinModel { kind: ModelKind::Tfim, num_spins, coupling, field }
    }

    pub fn xy(num_spins: usize, coupling: f64, field: f64) -> SpinModel {
        SpinModel { kind: ModelKind::Xy, num_spins, coupling, field }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_spins < 2 {
            return Err(Error::InvalidArgument("chain needs at least 2 spins".into()));
        }
        Ok(())
    }

    /// Nearest-neighbor bonds, even bonds first, then odd bonds.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let even = (0..self.num_spins - 1).step_by(2);
        let odd = (1..self.num_spins - 1).step_by(2);
        even.chain(odd).map(|j| (j, j + 1)).collect()
    }
}

/// Placement of real vs empty blocks in a training-stage circuit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockLayout {
    /// After each real block, insert `c - 1` empty blocks.
    Interleaved,
    /// All empty blocks after all real blocks.
    Appended,
    /// Explicit pattern over the N2 slots; `true` marks a real block.
    Custom(Vec<bool>),
}

/// Protocol stage a circuit is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// N1 real blocks of length t/N1 (shallow, quasi-ideal data).
    QuasiIdeal,
    /// N1 real blocks of length t/N1 plus N2 - N1 empty blocks.
    TrainingNoisy,
    /// N2 real blocks of length t/N2 (the deep circuit to be mitigated).
    EvalNoisy,
}

/// Trotter-protocol geometry: N1 real steps, depth factor c (N2 = c N1),
/// total time T, K time points, and the empty-block layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrotterSchedule {
    pub n1: usize,
    pub c: usize,
    pub total_time: f64,
    pub num_points: usize,
    pub layout: BlockLayout,
    pub epsilon_angle: f64,
}

impl TrotterSchedule {
    pub fn new(n1: usize, c: usize, total_time: f64, num_points: usize) -> TrotterSchedule {
        TrotterSchedule {
            n1,
            c,
            total_time,
            num_points,
            layout: BlockLayout::Interleaved,
            epsilon_angle: 0.0,
        }
    }

    pub fn n2(&self) -> usize {
        self.c * self.n1
    }

    /// Time grid `t_i = i T / K` for `i = 1..K`.
    pub fn time_grid(&self) -> Vec<f64> {
        (1..=self.num_points)
            .map(|i| i as f64 * self.total_time / self.num_points as f64)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 < 1 || self.c < 1 {
            return Err(Error::InvalidArgument("N1 and c must be >= 1".into()));
        }
        if !(self.total_time > 0.0) {
            return Err(Error::InvalidArgument("total time T must be positive".into()));
        }
        if self.num_points < 1 {
            return Err(Error::InvalidArgument("K must be >= 1".into()));
        }
        if self.epsilon_angle.abs() > 1e-2 {
            return Err(Error::InvalidArgument(format!(
                "epsilon_angle {} too large; empty blocks must stay near-identity",
                self.epsilon_angle
            )));
        }
        if let BlockLayout::Custom(pattern) = &self.layout {
            if pattern.len() != self.n2() {
                return Err(Error::InvalidArgument(format!(
                    "custom layout has {} slots, expected N2 = {}",
                    pattern.len(),
                    self.n2()
                )));
            }
            let real = pattern.iter().filter(|&&r| r).count();
            if real != self.n1 {
                return Err(Error::InvalidArgument(format!(
                    "custom layout has {real} real slots, expected N1 = {}",
                    self.n1
                )));
            }
        }
        Ok(())
    }
}

/// An ordered list of gates forming (part of) a circuit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GateSequence {
    pub gates: Vec<Gate>,
}

impl GateSequence {
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn extend(&mut self, other: GateSequence) {
        self.gates.extend(other.gates);
    }

    /// Applies all gates in order, with per-gate depolarizing noise when
    /// the model is enabled.
    pub fn simulate(&self, init: &DensityMatrix, noise: &NoiseModel) -> Result<DensityMatrix> {
        let mut rho = init.clone();
        for gate in &self.gates {
            rho = rho.apply_gate_noisy(gate, noise)?;
        }
        Ok(rho)
    }

    /// Dense unitary of the whole sequence (test oracle; small registers).
    pub fn unitary(&self, num_qubits: usize) -> Result<CMatrix> {
        let mut u = CMatrix::identity(1 << num_qubits);
        for gate in &self.gates {
            u = gate_unitary(gate, num_qubits)?.matmul(&u);
        }
        Ok(u)
    }

    /// Multiset of gate kinds, for structural-parity checks.
    pub fn kind_counts(&self) -> [usize; 6] {
        let mut counts = [0usize; 6];
        for gate in &self.gates {
            let slot = match gate.kind {
                GateKind::Rx => 0,
                GateKind::Rz => 1,
                GateKind::X => 2,
                GateKind::H => 3,
                GateKind::Sdg => 4,
                GateKind::Cnot => 5,
            };
            counts[slot] += 1;
        }
        counts
    }
}

/// Dense full-register unitary of a single gate.
pub fn gate_unitary(gate: &Gate, num_qubits: usize) -> Result<CMatrix> {
    gate.validate(num_qubits)?;
    let dim = 1 << num_qubits;
    let u;
    match gate.kind {
        GateKind::Cnot => {
            let cm = 1usize << (num_qubits - 1 - gate.targets[0]);
            let tm = 1usize << (num_qubits - 1 - gate.targets[1]);
            let mut m = CMatrix::zeros(dim);
            for col in 0..dim {
                let row = if col & cm != 0 { col ^ tm } else { col };
                m[(row, col)] = Complex64::new(1.0, 0.0);
            }
            u = m;
        }
        _ => {
            let g2 = gate2x2(gate);
            let mask = 1usize << (num_qubits - 1 - gate.targets[0]);
            let mut m = CMatrix::zeros(dim);
            for col in 0..dim {
                let bit = (col & mask != 0) as usize;
                for row_bit in 0..2 {
                    let row = if row_bit == 1 { col | mask } else { col & !mask };
                    m[(row, col)] += g2[row_bit * 2 + bit];
                }
            }
            u = m;
        }
    }
    Ok(u)
}

fn gate2x2(gate: &Gate) -> [Complex64; 4] {
    let z0 = Complex64::new(0.0, 0.0);
    let z1 = Complex64::new(1.0, 0.0);
    match gate.kind {
        GateKind::Rx => {
            let half = gate.angle.unwrap() / 2.0;
            let c = Complex64::new(libm::cos(half), 0.0);
            let s = Complex64::new(0.0, -libm::sin(half));
            [c, s, s, c]
        }
        GateKind::Rz => {
            let half = gate.angle.unwrap() / 2.0;
            [
                Complex64::new(libm::cos(half), -libm::sin(half)),
                z0,
                z0,
                Complex64::new(libm::cos(half), libm::sin(half)),
            ]
        }
        GateKind::X => [z0, z1, z1, z0],
        GateKind::H => {
            let s = Complex64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
            [s, s, s, -s]
        }
        GateKind::Sdg => [z1, z0, z0, Complex64::new(0.0, -1.0)],
        GateKind::Cnot => unreachable!(),
    }
}

/// Single Trotter step `exp(-i H_A dt) exp(-i H_B dt)` for the model.
///
/// The rotation magnitudes are `phi1 = 2 h dt` and `phi2 = 2 J dt`; signs
/// are fixed so the step unitary matches the Hamiltonian sign convention
/// of [`crate::reference::hamiltonian`] exactly.
pub fn trotter_step(model: &SpinModel, dt: f64) -> GateSequence {
    let phi1 = -2.0 * model.field * dt;
    let phi2 = -2.0 * model.coupling * dt;
    let mut seq = GateSequence::default();
    match model.kind {
        ModelKind::Tfim => {
            for q in 0..model.num_spins {
                seq.gates.push(Gate::rx(q, phi1));
            }
            for (a, b) in model.bonds() {
                push_zz_block(&mut seq, a, b, phi2);
            }
        }
        ModelKind::Xy => {
            for q in 0..model.num_spins {
                seq.gates.push(Gate::rz(q, phi1));
            }
            for (a, b) in model.bonds() {
                // XX block: H-conjugated ZZ block
                seq.gates.push(Gate::h(a));
                seq.gates.push(Gate::h(b));
                push_zz_block(&mut seq, a, b, phi2);
                seq.gates.push(Gate::h(a));
                seq.gates.push(Gate::h(b));
                // YY block: (Rz(-pi/2) then H)-conjugated ZZ block; the
                // Rz phases cancel pairwise so the block equals
                // exp(+i J dt YY) with no residual global phase.
                for q in [a, b] {
                    seq.gates.push(Gate::rz(q, -FRAC_PI_2));
                    seq.gates.push(Gate::h(q));
                }
                push_zz_block(&mut seq, a, b, phi2);
                for q in [a, b] {
                    seq.gates.push(Gate::h(q));
                    seq.gates.push(Gate::rz(q, FRAC_PI_2));
                }
            }
        }
    }
    seq
}

/// `CNOT(a,b) Rz(phi on b) CNOT(a,b)` = `exp(-i phi/2 Z_a Z_b)`.
fn push_zz_block(seq: &mut GateSequence, a: usize, b: usize, phi: f64) {
    seq.gates.push(Gate::cnot(a, b));
    seq.gates.push(Gate::rz(b, phi));
    seq.gates.push(Gate::cnot(a, b));
}

/// Fictitious Trotter block: the same gate count, kinds, and targets as a
/// real step, with every rotation angle replaced by `epsilon_angle`.
pub fn empty_step(model: &SpinModel, epsilon_angle: f64) -> Result<GateSequence> {
    if epsilon_angle.abs() > 1e-2 {
        return Err(Error::InvalidArgument(format!(
            "epsilon_angle {epsilon_angle} too large for an empty block"
        )));
    }
    let mut seq = trotter_step(model, 0.0);
    for gate in &mut seq.gates {
        if gate.angle.is_some() {
            gate.angle = Some(epsilon_angle);
        }
    }
    Ok(seq)
}

/// Assembles the full circuit for one time point of a protocol stage.
pub fn build_circuit(
    model: &SpinModel,
    schedule: &TrotterSchedule,
    t: f64,
    stage: Stage,
) -> Result<GateSequence> {
    model.validate()?;
    schedule.validate()?;
    if !(t > 0.0) || t > schedule.total_time * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "time {t} outside (0, T = {}]",
            schedule.total_time
        )));
    }
    let mut seq = GateSequence::default();
    match stage {
        Stage::QuasiIdeal => {
            let step = trotter_step(model, t / schedule.n1 as f64);
            for _ in 0..schedule.n1 {
                seq.extend(step.clone());
            }
        }
        Stage::TrainingNoisy => {
            let real = trotter_step(model, t / schedule.n1 as f64);
            let empty = empty_step(model, schedule.epsilon_angle)?;
            for is_real in block_pattern(schedule) {
                seq.extend(if is_real { real.clone() } else { empty.clone() });
            }
        }
        Stage::EvalNoisy => {
            let step = trotter_step(model, t / schedule.n2() as f64);
            for _ in 0..schedule.n2() {
                seq.extend(step.clone());
            }
        }
    }
    Ok(seq)
}

/// Real/empty slot pattern over the N2 blocks of a training-stage circuit.
pub fn block_pattern(schedule: &TrotterSchedule) -> Vec<bool> {
    match &schedule.layout {
        BlockLayout::Interleaved => {
            let mut pattern = Vec::with_capacity(schedule.n2());
            for _ in 0..schedule.n1 {
                pattern.push(true);
                for _ in 0..schedule.c - 1 {
                    pattern.push(false);
                }
            }
            pattern
        }
        BlockLayout::Appended => {
            let mut pattern = alloc::vec![true; schedule.n1];
            pattern.extend(core::iter::repeat(false).take(schedule.n2() - schedule.n1));
            pattern
        }
        BlockLayout::Custom(pattern) => pattern.clone(),
    }
}

/// Gates that rotate the measurement basis of every qubit onto Z: `H` for
/// X, `Sdg` then `H` for Y, nothing for Z.
pub fn measurement_prerotation(axis: Axis, num_qubits: usize) -> GateSequence {
    let mut seq = GateSequence::default();
    for q in 0..num_qubits {
        match axis {
            Axis::X => seq.gates.push(Gate::h(q)),
            Axis::Y => {
                seq.gates.push(Gate::sdg(q));
                seq.gates.push(Gate::h(q));
            }
            Axis::Z => {}
        }
    }
    seq
}
