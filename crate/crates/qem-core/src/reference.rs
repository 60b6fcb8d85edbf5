//! Ground-truth oracles: exact Schrödinger evolution (the infinite-Trotter
//! limit) and noise-free Trotterized evolution.
//!
//! Both chain Hamiltonians are real symmetric in the computational basis,
//! so `exp(-iHt)` is computed by a real eigendecomposition (dimension at
//! most 64) and reused across the whole time grid.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::circuits::{self, ModelKind, SpinModel, Stage, TrotterSchedule};
use crate::linalg::eigh_symmetric;
use crate::qsim::{parse_bits, Axis, DensityMatrix, NoiseModel};
use crate::{Error, Result};

/// Dense Hamiltonian of a supported spin chain (real symmetric).
#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    pub model: SpinModel,
    dim: usize,
    data: Vec<f64>,
}

/// Eigendecomposition of a Hamiltonian, cached for grid-wide reuse.
#[derive(Debug, Clone)]
pub struct Spectrum {
    dim: usize,
    eigenvalues: Vec<f64>,
    /// Row-major; column k is the eigenvector of `eigenvalues[k]`.
    eigenvectors: Vec<f64>,
}

/// Expectation values on a time grid, one row per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub times: Vec<f64>,
    pub observables: Vec<(Axis, usize)>,
    /// `values[i][o]` = observable `o` at grid point `i`.
    pub values: Vec<Vec<f64>>,
}

impl CurveTable {
    pub fn value(&self, time_index: usize, axis: Axis, qubit: usize) -> Option<f64> {
        let o = self.observables.iter().position(|&(a, q)| a == axis && q == qubit)?;
        self.values.get(time_index).map(|row| row[o])
    }

    /// Average over qubits of a fixed axis at every grid point.
    pub fn mean_over_qubits(&self, axis: Axis) -> Vec<f64> {
        let cols: Vec<usize> = self
            .observables
            .iter()
            .enumerate()
            .filter(|(_, &(a, _))| a == axis)
            .map(|(o, _)| o)
            .collect();
        self.values
            .iter()
            .map(|row| cols.iter().map(|&o| row[o]).sum::<f64>() / cols.len() as f64)
            .collect()
    }
}

/// Builds the dense Hamiltonian:
///
/// TFIM: `H = -sum_j h X_j - sum_<ij> J Z_i Z_j`
/// XY:   `H = -h sum_j Z_j - J sum_<ij> (X_i X_j + Y_i Y_j)`
pub fn hamiltonian(model: &SpinModel) -> Result<HamiltonianMatrix> {
    model.validate()?;
    if model.num_spins > 6 {
        return Err(Error::Capability(format!(
            "{} spins exceed the dense-reference limit of 6",
            model.num_spins
        )));
    }
    let nq = model.num_spins;
    let dim = 1usize << nq;
    let mask = |q: usize| 1usize << (nq - 1 - q);
    let zsign = |index: usize, q: usize| if index & mask(q) != 0 { -1.0 } else { 1.0 };
    let mut data = vec![0.0f64; dim * dim];
    match model.kind {
        ModelKind::Tfim => {
            for r in 0..dim {
                for (a, b) in model.bonds() {
                    data[r * dim + r] -= model.coupling * zsign(r, a) * zsign(r, b);
                }
                for q in 0..nq {
                    let c = r ^ mask(q);
                    data[r * dim + c] -= model.field;
                }
            }
        }
        ModelKind::Xy => {
            for r in 0..dim {
                for q in 0..nq {
                    data[r * dim + r] -= model.field * zsign(r, q);
                }
                // (XX + YY)|r> = 2 |r with bond bits swapped> when the bond
                // bits differ, zero otherwise
                for (a, b) in model.bonds() {
                    let bit_a = r & mask(a) != 0;
                    let bit_b = r & mask(b) != 0;
                    if bit_a != bit_b {
                        let c = r ^ mask(a) ^ mask(b);
                        data[r * dim + c] -= 2.0 * model.coupling;
                    }
                }
            }
        }
    }
    Ok(HamiltonianMatrix { model: *model, dim, data })
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn element(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.dim + c]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn spectrum(&self) -> Spectrum {
        let (eigenvalues, eigenvectors) = eigh_symmetric(&self.data, self.dim);
        Spectrum { dim: self.dim, eigenvalues, eigenvectors }
    }
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `psi(t) = exp(-iHt) |init>` for a computational-basis start index.
    pub fn evolve_basis_state(&self, init_index: usize, t: f64) -> Vec<Complex64> {
        let n = self.dim;
        let mut psi = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            let coeff = self.eigenvectors[init_index * n + k];
            if coeff == 0.0 {
                continue;
            }
            let phase = Complex64::new(libm::cos(self.eigenvalues[k] * t), -libm::sin(self.eigenvalues[k] * t));
            let weight = phase * coeff;
            for r in 0..n {
                psi[r] += weight * self.eigenvectors[r * n + k];
            }
        }
        psi
    }
}

/// Single-qubit Pauli expectation on a statevector.
pub fn pauli_expectation_vec(psi: &[Complex64], num_qubits: usize, axis: Axis, qubit: usize) -> f64 {
    let mask = 1usize << (num_qubits - 1 - qubit);
    let mut acc = Complex64::new(0.0, 0.0);
    for (r, amp) in psi.iter().enumerate() {
        let term = match axis {
            Axis::Z => {
                let sign = if r & mask != 0 { -1.0 } else { 1.0 };
                amp.conj() * amp * sign
            }
            Axis::X => amp.conj() * psi[r ^ mask],
            Axis::Y => {
                // (Y psi)_r = i (-1)^{bit_j of r^mask} psi_{r^mask}
                let src = r ^ mask;
                let phase = if src & mask != 0 {
                    Complex64::new(0.0, -1.0)
                } else {
                    Complex64::new(0.0, 1.0)
                };
                amp.conj() * phase * psi[src]
            }
        };
        acc += term;
    }
    acc.re
}

/// Exact Schrödinger expectations `<psi(t)| P |psi(t)>` on a time grid.
pub fn exact_expectations(
    model: &SpinModel,
    init: &str,
    grid: &[f64],
    observables: &[(Axis, usize)],
) -> Result<CurveTable> {
    let spectrum = hamiltonian(model)?.spectrum();
    let init_index = parse_bits(init)?;
    if init.len() != model.num_spins {
        return Err(Error::InvalidArgument(format!(
            "initial state {init:?} does not match {} spins",
            model.num_spins
        )));
    }
    let mut values = Vec::with_capacity(grid.len());
    for &t in grid {
        let psi = spectrum.evolve_basis_state(init_index, t);
        values.push(
            observables
                .iter()
                .map(|&(axis, qubit)| pauli_expectation_vec(&psi, model.num_spins, axis, qubit))
                .collect(),
        );
    }
    Ok(CurveTable { times: grid.to_vec(), observables: observables.to_vec(), values })
}

/// Noise-free Trotterized expectations: N real steps of length t/N per
/// grid point (the "ideal simulation" curves).
pub fn ideal_trotter_expectations(
    model: &SpinModel,
    init: &str,
    num_steps: usize,
    grid: &[f64],
    observables: &[(Axis, usize)],
) -> Result<CurveTable> {
    if num_steps < 1 {
        return Err(Error::InvalidArgument("Trotter step count must be >= 1".into()));
    }
    let noise = NoiseModel::disabled(model.num_spins);
    let init_state = DensityMatrix::basis_state(model.num_spins, init)?;
    let total_time = grid.iter().fold(0.0f64, |a, &b| a.max(b));
    let schedule = TrotterSchedule::new(num_steps, 1, total_time, grid.len().max(1));
    let mut values = Vec::with_capacity(grid.len());
    for &t in grid {
        let circuit = circuits::build_circuit(model, &schedule, t, Stage::EvalNoisy)?;
        let rho = circuit.simulate(&init_state, &noise)?;
        let row: Result<Vec<f64>> = observables
            .iter()
            .map(|&(axis, qubit)| rho.expectation_pauli(axis, qubit))
            .collect();
        values.push(row?);
    }
    Ok(CurveTable { times: grid.to_vec(), observables: observables.to_vec(), values })
}

/// All (axis, qubit) pairs for the given axes, qubit-major within axis.
pub fn observable_grid(axes: &[Axis], num_qubits: usize) -> Vec<(Axis, usize)> {
    let mut obs = Vec::with_capacity(axes.len() * num_qubits);
    for &axis in axes {
        for q in 0..num_qubits {
            obs.push((axis, q));
        }
    }
    obs
}
