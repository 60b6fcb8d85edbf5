//! Density-matrix simulator for small qubit registers.
//!
//! This is the stand-in for the NISQ processor: ideal gates followed by
//! depolarizing channels, per-qubit readout confusion on measurement, and
//! seeded shot sampling. States are exact 2^n x 2^n density matrices, so
//! channel noise is deterministic and decoupled from shot noise.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::CMatrix;
use crate::rng;
use crate::{Error, Result};

const Z0: Complex64 = Complex64::new(0.0, 0.0);
const Z1: Complex64 = Complex64::new(1.0, 0.0);

/// Measurement axis / Pauli label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "z")]
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn label(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

/// Gate kinds supported by the backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    #[serde(rename = "rx")]
    Rx,
    #[serde(rename = "rz")]
    Rz,
    #[serde(rename = "x")]
    X,
    #[serde(rename = "h")]
    H,
    #[serde(rename = "sdg")]
    Sdg,
    #[serde(rename = "cnot")]
    Cnot,
}

/// A single gate: kind, target qubits, and a rotation angle for Rx/Rz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

impl Gate {
    pub fn rx(qubit: usize, angle: f64) -> Gate {
        Gate { kind: GateKind::Rx, targets: vec![qubit], angle: Some(angle) }
    }

    pub fn rz(qubit: usize, angle: f64) -> Gate {
        Gate { kind: GateKind::Rz, targets: vec![qubit], angle: Some(angle) }
    }

    pub fn x(qubit: usize) -> Gate {
        Gate { kind: GateKind::X, targets: vec![qubit], angle: None }
    }

    pub fn h(qubit: usize) -> Gate {
        Gate { kind: GateKind::H, targets: vec![qubit], angle: None }
    }

    pub fn sdg(qubit: usize) -> Gate {
        Gate { kind: GateKind::Sdg, targets: vec![qubit], angle: None }
    }

    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate { kind: GateKind::Cnot, targets: vec![control, target], angle: None }
    }

    /// Checks target arity, distinctness, and range against a register size.
    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let arity = if self.kind == GateKind::Cnot { 2 } else { 1 };
        if self.targets.len() != arity {
            return Err(Error::InvalidArgument(format!(
                "{:?} takes {} target(s), got {}",
                self.kind,
                arity,
                self.targets.len()
            )));
        }
        if arity == 2 && self.targets[0] == self.targets[1] {
            return Err(Error::InvalidArgument("CNOT targets must be distinct".into()));
        }
        for &t in &self.targets {
            if t >= num_qubits {
                return Err(Error::InvalidArgument(format!(
                    "qubit {t} out of range for {num_qubits}-qubit register"
                )));
            }
        }
        let needs_angle = matches!(self.kind, GateKind::Rx | GateKind::Rz);
        if needs_angle != self.angle.is_some() {
            return Err(Error::InvalidArgument(format!(
                "{:?}: angle {}",
                self.kind,
                if needs_angle { "required" } else { "not allowed" }
            )));
        }
        Ok(())
    }

    /// 2x2 unitary for single-qubit kinds. Panics on CNOT.
    fn matrix2(&self) -> [Complex64; 4] {
        match self.kind {
            GateKind::Rx => {
                let half = self.angle.unwrap() / 2.0;
                let c = Complex64::new(libm::cos(half), 0.0);
                let s = Complex64::new(0.0, -libm::sin(half));
                [c, s, s, c]
            }
            GateKind::Rz => {
                let half = self.angle.unwrap() / 2.0;
                [
                    Complex64::new(libm::cos(half), -libm::sin(half)),
                    Z0,
                    Z0,
                    Complex64::new(libm::cos(half), libm::sin(half)),
                ]
            }
            GateKind::X => [Z0, Z1, Z1, Z0],
            GateKind::H => {
                let s = Complex64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
                [s, s, s, -s]
            }
            GateKind::Sdg => [Z1, Z0, Z0, Complex64::new(0.0, -1.0)],
            GateKind::Cnot => unreachable!("CNOT has no 2x2 matrix"),
        }
    }
}

/// Per-gate depolarizing probabilities and per-qubit readout confusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Depolarizing probability after each single-qubit gate.
    pub p1: f64,
    /// Two-qubit depolarizing probability after each CNOT.
    pub p2: f64,
    /// Per-qubit `(eps01, eps10)` = P(read 1 | true 0), P(read 0 | true 1).
    pub readout: Vec<(f64, f64)>,
    pub enabled: bool,
}

impl NoiseModel {
    /// Noise entirely off.
    pub fn disabled(num_qubits: usize) -> NoiseModel {
        NoiseModel { p1: 0.0, p2: 0.0, readout: vec![(0.0, 0.0); num_qubits], enabled: false }
    }

    /// Default synthetic calibration: p1 = 5e-4, p2 = 1.2e-2, eps = 0.02.
    pub fn default_calibration(num_qubits: usize) -> NoiseModel {
        NoiseModel {
            p1: 5e-4,
            p2: 1.2e-2,
            readout: vec![(0.02, 0.02); num_qubits],
            enabled: true,
        }
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let in_unit = |p: f64| (0.0..=1.0).contains(&p);
        if !in_unit(self.p1) || !in_unit(self.p2) {
            return Err(Error::InvalidArgument("depolarizing probabilities must be in [0,1]".into()));
        }
        if self.readout.len() != num_qubits {
            return Err(Error::InvalidArgument(format!(
                "readout table has {} entries for {} qubits",
                self.readout.len(),
                num_qubits
            )));
        }
        for &(e01, e10) in &self.readout {
            if !in_unit(e01) || !in_unit(e10) {
                return Err(Error::InvalidArgument("readout probabilities must be in [0,1]".into()));
            }
        }
        Ok(())
    }
}

/// Counts of measured bitstrings (qubit 0 is the leftmost bit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotHistogram {
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
}

impl ShotHistogram {
    pub fn new(counts: BTreeMap<String, u64>) -> ShotHistogram {
        let shots = counts.values().sum();
        ShotHistogram { counts, shots }
    }
}

/// Expectation estimate from counts: `(N_even - N_odd) / shots` on the
/// measured bit of `qubit`.
///
/// For axes other than Z the caller must have applied the matching basis
/// pre-rotation before sampling and asserts that via `prerotated`.
pub fn expectation_from_counts(
    histogram: &ShotHistogram,
    axis: Axis,
    qubit: usize,
    prerotated: bool,
) -> Result<f64> {
    if axis != Axis::Z && !prerotated {
        return Err(Error::Contract(format!(
            "axis {} requires sampling with a basis pre-rotation",
            axis.label()
        )));
    }
    if histogram.shots == 0 {
        return Err(Error::InvalidArgument("empty histogram".into()));
    }
    let mut acc: i64 = 0;
    for (bits, &n) in &histogram.counts {
        let bit = bits.as_bytes().get(qubit).copied().ok_or_else(|| {
            Error::InvalidArgument(format!("qubit {qubit} out of range for bitstring {bits}"))
        })?;
        let sign = if bit == b'0' { 1 } else { -1 };
        acc += sign * n as i64;
    }
    Ok(acc as f64 / histogram.shots as f64)
}

/// A 2^n x 2^n Hermitian, PSD, trace-one matrix: the simulated quantum state.
///
/// Values are immutable once returned; every operation yields a new state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    mat: CMatrix,
}

impl DensityMatrix {
    /// The computational-basis state `|bits><bits|`.
    pub fn basis_state(num_qubits: usize, bits: &str) -> Result<DensityMatrix> {
        if num_qubits > 6 {
            return Err(Error::Capability(format!(
                "{num_qubits} qubits exceed the 6-qubit backend limit"
            )));
        }
        if bits.len() != num_qubits {
            return Err(Error::InvalidArgument(format!(
                "bitstring {bits:?} does not match {num_qubits} qubits"
            )));
        }
        let index = parse_bits(bits)?;
        let mut mat = CMatrix::zeros(1 << num_qubits);
        mat[(index, index)] = Z1;
        Ok(DensityMatrix { num_qubits, mat })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    /// Bit mask of `qubit` in basis-state indices (qubit 0 = leftmost bit).
    fn mask(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    /// Unitary conjugation `U rho U^dag`.
    pub fn apply_gate(&self, gate: &Gate) -> Result<DensityMatrix> {
        let mut out = self.clone();
        out.apply_gate_in_place(gate)?;
        Ok(out)
    }

    pub(crate) fn apply_gate_in_place(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        match gate.kind {
            GateKind::Cnot => self.apply_cnot(gate.targets[0], gate.targets[1]),
            _ => self.apply_1q(&gate.matrix2(), gate.targets[0]),
        }
        Ok(())
    }

    fn apply_1q(&mut self, u: &[Complex64; 4], qubit: usize) {
        let dim = self.dim();
        let m = self.mask(qubit);
        let data = self.mat.data_mut();
        // left multiply by U over row pairs
        for r0 in 0..dim {
            if r0 & m != 0 {
                continue;
            }
            let r1 = r0 | m;
            for c in 0..dim {
                let a = data[r0 * dim + c];
                let b = data[r1 * dim + c];
                data[r0 * dim + c] = u[0] * a + u[1] * b;
                data[r1 * dim + c] = u[2] * a + u[3] * b;
            }
        }
        // right multiply by U^dag over column pairs
        let (u00, u01, u10, u11) = (u[0].conj(), u[1].conj(), u[2].conj(), u[3].conj());
        for r in 0..dim {
            for c0 in 0..dim {
                if c0 & m != 0 {
                    continue;
                }
                let c1 = c0 | m;
                let a = data[r * dim + c0];
                let b = data[r * dim + c1];
                data[r * dim + c0] = a * u00 + b * u01;
                data[r * dim + c1] = a * u10 + b * u11;
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let dim = self.dim();
        let cm = self.mask(control);
        let tm = self.mask(target);
        let perm = |i: usize| if i & cm != 0 { i ^ tm } else { i };
        let mut out = vec![Z0; dim * dim];
        let data = self.mat.data();
        for r in 0..dim {
            let pr = perm(r);
            for c in 0..dim {
                out[r * dim + c] = data[pr * dim + perm(c)];
            }
        }
        self.mat = CMatrix::from_rows(dim, out);
    }

    /// Conjugation `P rho P` by a single-qubit Pauli.
    fn pauli_conjugate(&self, axis: Axis, qubit: usize) -> DensityMatrix {
        let dim = self.dim();
        let m = self.mask(qubit);
        let mut out = CMatrix::zeros(dim);
        let src = self.mat.data();
        // P |b> = phase(b) |b ^ flip>
        let (flip, phase): (usize, fn(bool) -> Complex64) = match axis {
            Axis::X => (m, |_| Z1),
            Axis::Y => (m, |b| if b { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 1.0) }),
            Axis::Z => (0, |b| if b { -Z1 } else { Z1 }),
        };
        for r in 0..dim {
            let rs = r ^ flip;
            let pr = phase(rs & m != 0);
            for c in 0..dim {
                let cs = c ^ flip;
                out[(r, c)] = pr * phase(cs & m != 0).conj() * src[rs * dim + cs];
            }
        }
        DensityMatrix { num_qubits: self.num_qubits, mat: out }
    }

    /// Depolarizing channel on one or two qubits.
    ///
    /// Single qubit: `(1-p) rho + (p/3)(X rho X + Y rho Y + Z rho Z)`.
    /// Two qubits: uniform over the 15 non-identity Pauli pairs with total
    /// weight `p`.
    pub fn apply_depolarizing(&self, qubits: &[usize], p: f64) -> Result<DensityMatrix> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("depolarizing p={p} out of [0,1]")));
        }
        for &q in qubits {
            if q >= self.num_qubits {
                return Err(Error::InvalidArgument(format!("qubit {q} out of range")));
            }
        }
        if p == 0.0 {
            return Ok(self.clone());
        }
        match qubits {
            [q] => {
                let mut out = self.scaled(1.0 - p);
                for axis in Axis::ALL {
                    out.add_scaled(&self.pauli_conjugate(axis, *q), p / 3.0);
                }
                Ok(out)
            }
            [qa, qb] => {
                if qa == qb {
                    return Err(Error::InvalidArgument("two-qubit channel needs distinct qubits".into()));
                }
                let mut out = self.scaled(1.0 - p);
                let w = p / 15.0;
                let paulis = [None, Some(Axis::X), Some(Axis::Y), Some(Axis::Z)];
                for pa in paulis {
                    for pb in paulis {
                        if pa.is_none() && pb.is_none() {
                            continue;
                        }
                        let mut term = match pa {
                            Some(axis) => self.pauli_conjugate(axis, *qa),
                            None => self.clone(),
                        };
                        if let Some(axis) = pb {
                            term = term.pauli_conjugate(axis, *qb);
                        }
                        out.add_scaled(&term, w);
                    }
                }
                Ok(out)
            }
            _ => Err(Error::InvalidArgument(format!(
                "depolarizing channel supports 1 or 2 qubits, got {}",
                qubits.len()
            ))),
        }
    }

    /// Applies the gate and, if noise is enabled, the matching depolarizing
    /// channel (p1 after single-qubit gates, p2 after CNOT).
    pub fn apply_gate_noisy(&self, gate: &Gate, noise: &NoiseModel) -> Result<DensityMatrix> {
        let clean = self.apply_gate(gate)?;
        if !noise.enabled {
            return Ok(clean);
        }
        match gate.kind {
            GateKind::Cnot => clean.apply_depolarizing(&gate.targets, noise.p2),
            _ => clean.apply_depolarizing(&gate.targets, noise.p1),
        }
    }

    fn scaled(&self, factor: f64) -> DensityMatrix {
        let mut out = self.clone();
        for z in out.mat.data_mut() {
            *z *= factor;
        }
        out
    }

    fn add_scaled(&mut self, other: &DensityMatrix, factor: f64) {
        for (dst, src) in self.mat.data_mut().iter_mut().zip(other.mat.data()) {
            *dst += src * factor;
        }
    }

    /// `Tr(rho P_qubit)` for a single-qubit Pauli; real part returned.
    pub fn expectation_pauli(&self, axis: Axis, qubit: usize) -> Result<f64> {
        if qubit >= self.num_qubits {
            return Err(Error::InvalidArgument(format!("qubit {qubit} out of range")));
        }
        let dim = self.dim();
        let m = self.mask(qubit);
        let data = self.mat.data();
        let mut acc = Z0;
        // Tr(rho P) = sum_r rho[r, f(r)] * phase(r)
        for r in 0..dim {
            let (col, ph) = match axis {
                Axis::X => (r ^ m, Z1),
                Axis::Y => (
                    r ^ m,
                    if r & m != 0 { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 1.0) },
                ),
                Axis::Z => (r, if r & m != 0 { -Z1 } else { Z1 }),
            };
            acc += data[r * dim + col] * ph;
        }
        Ok(acc.re)
    }

    /// Exact expectation of the measured Z on `qubit`, folding readout
    /// confusion in analytically when noise is enabled.
    pub fn measured_z_expectation(&self, qubit: usize, noise: &NoiseModel) -> Result<f64> {
        let z = self.expectation_pauli(Axis::Z, qubit)?;
        if !noise.enabled {
            return Ok(z);
        }
        let (e01, e10) = noise.readout[qubit];
        let p1_true = (1.0 - z) / 2.0;
        let p1_read = p1_true * (1.0 - e10) + (1.0 - p1_true) * e01;
        Ok(1.0 - 2.0 * p1_read)
    }

    /// Draws `shots` bitstrings from `diag(rho)`, then applies independent
    /// per-qubit readout flips. Deterministic given the seed.
    pub fn sample_counts(&self, shots: u64, noise: &NoiseModel, seed: u64) -> Result<ShotHistogram> {
        if shots == 0 {
            return Err(Error::InvalidArgument("shots must be positive".into()));
        }
        let trace = self.mat.trace();
        if (trace.re - 1.0).abs() > 1e-8 || trace.im.abs() > 1e-8 {
            return Err(Error::InvalidState(format!("state trace {trace} is not 1")));
        }
        let dim = self.dim();
        let mut cumulative = Vec::with_capacity(dim);
        let mut total = 0.0;
        for i in 0..dim {
            total += self.mat[(i, i)].re.max(0.0);
            cumulative.push(total);
        }
        let mut rng = rng::stream(seed);
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for _ in 0..shots {
            let u = rng::uniform_f64(&mut rng) * total;
            let mut index = cumulative.partition_point(|&c| c <= u);
            if index >= dim {
                index = dim - 1;
            }
            if noise.enabled {
                for (q, &(e01, e10)) in noise.readout.iter().enumerate() {
                    let m = self.mask(q);
                    let flip_p = if index & m == 0 { e01 } else { e10 };
                    if flip_p > 0.0 && rng::uniform_f64(&mut rng) < flip_p {
                        index ^= m;
                    }
                }
            }
            *counts.entry(format_bits(index, self.num_qubits)).or_insert(0) += 1;
        }
        Ok(ShotHistogram { counts, shots })
    }

    /// `Tr(rho^2)`; equals 1 exactly for pure states.
    pub fn purity(&self) -> f64 {
        let dim = self.dim();
        let data = self.mat.data();
        let mut acc = 0.0;
        for r in 0..dim {
            for c in 0..dim {
                acc += (data[r * dim + c] * data[c * dim + r]).re;
            }
        }
        acc
    }

    /// `(hermiticity residual, |trace - 1|, min eigenvalue)` for invariant
    /// checks in tests and debug assertions.
    pub fn invariant_report(&self) -> (f64, f64, f64) {
        let trace = self.mat.trace();
        let trace_err = libm::hypot(trace.re - 1.0, trace.im);
        (
            self.mat.hermiticity_residual(),
            trace_err,
            self.mat.min_eigenvalue_hermitian(),
        )
    }
}

/// Renders a basis index as a bitstring with qubit 0 leftmost.
pub fn format_bits(index: usize, num_qubits: usize) -> String {
    (0..num_qubits)
        .map(|q| if index & (1 << (num_qubits - 1 - q)) != 0 { '1' } else { '0' })
        .collect()
}

/// Parses a bitstring (qubit 0 leftmost) into a basis index.
pub fn parse_bits(bits: &str) -> Result<usize> {
    let mut index = 0usize;
    for ch in bits.chars() {
        index <<= 1;
        match ch {
            '0' => {}
            '1' => index |= 1,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "bitstring {bits:?} contains non-binary character {ch:?}"
                )))
            }
        }
    }
    Ok(index)
}

/// Number of 1-bits in a bitstring.
pub fn popcount(bits: &str) -> u32 {
    bits.chars().filter(|&c| c == '1').count() as u32
}
