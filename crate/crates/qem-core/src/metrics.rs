//! Comparison metrics between observation datasets: normalized mean-square
//! error, mean magnetization curves, the half-difference observable for
//! domain-wall initial states, and deviation curves against exact dynamics.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::datasets::ObservationDataset;
use crate::qsim::Axis;
use crate::{Error, Result};

/// Mean-square error between two datasets over the given axes, normalized by
/// the number of compared scalars: `(1/2D) sum (a - b)^2`.
///
/// The datasets must cover identical sample keys (initial state, time index)
/// and qubits on every requested axis; a missing counterpart is an alignment
/// error, never silently skipped.
pub fn mse(a: &ObservationDataset, b: &ObservationDataset, axes: &[Axis]) -> Result<f64> {
    if axes.is_empty() {
        return Err(Error::InvalidArgument("mse needs at least one axis".into()));
    }
    let keys_a = keys_on_axes(a, axes);
    let keys_b = keys_on_axes(b, axes);
    if keys_a.is_empty() {
        return Err(Error::Alignment("no records on the requested axes".into()));
    }
    if keys_a.keys().ne(keys_b.keys()) {
        let only_a = keys_a.keys().filter(|k| !keys_b.contains_key(*k)).count();
        let only_b = keys_b.keys().filter(|k| !keys_a.contains_key(*k)).count();
        return Err(Error::Alignment(format!(
            "datasets cover different samples: {only_a} keys only in the first, \
             {only_b} only in the second"
        )));
    }
    let mut acc = 0.0;
    for (key, &va) in &keys_a {
        let vb = keys_b[key];
        acc += (va - vb) * (va - vb);
    }
    Ok(acc / (2.0 * keys_a.len() as f64))
}

type SampleKey = (String, usize, Axis, usize);

fn keys_on_axes(ds: &ObservationDataset, axes: &[Axis]) -> BTreeMap<SampleKey, f64> {
    ds.records
        .iter()
        .filter(|r| axes.contains(&r.axis))
        .map(|r| ((r.init_state.clone(), r.time_index, r.axis, r.qubit), r.value))
        .collect()
}

/// Site-averaged magnetization `(1/Nq) sum_j <Z_j>` for one initial state,
/// ordered by time index. Returns `(times, values)`.
pub fn mean_magnetization(ds: &ObservationDataset, init_state: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    per_time_average(ds, init_state, |values| {
        values.iter().sum::<f64>() / values.len() as f64
    })
}

/// Half-difference of spin magnetization: with `m_j = 2 n_j - 1 = -<Z_j>`,
/// returns `d = mean_{j in up} m_j - mean_{j in down} m_j`, where the up set
/// holds the sites initialized to 1 and the down set the sites initialized
/// to 0. Fails for fully polarized initial states, where one set is empty.
pub fn half_difference(ds: &ObservationDataset, init_state: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let up: Vec<usize> = init_state
        .char_indices()
        .filter(|&(_, c)| c == '1')
        .map(|(j, _)| j)
        .collect();
    let down: Vec<usize> = init_state
        .char_indices()
        .filter(|&(_, c)| c == '0')
        .map(|(j, _)| j)
        .collect();
    if up.is_empty() || down.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "half-difference is degenerate for the fully polarized state {init_state}"
        )));
    }
    per_time_average(ds, init_state, move |z| {
        let mean_m = |set: &[usize]| set.iter().map(|&j| -z[j]).sum::<f64>() / set.len() as f64;
        mean_m(&up) - mean_m(&down)
    })
}

fn per_time_average(
    ds: &ObservationDataset,
    init_state: &str,
    reduce: impl Fn(&[f64]) -> f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let nq = ds.meta.model.num_spins;
    let mut by_time: BTreeMap<usize, (f64, Vec<Option<f64>>)> = BTreeMap::new();
    for r in &ds.records {
        if r.init_state != init_state || r.axis != Axis::Z {
            continue;
        }
        let entry = by_time.entry(r.time_index).or_insert_with(|| (r.time, alloc::vec![None; nq]));
        entry.1[r.qubit] = Some(r.value);
    }
    if by_time.is_empty() {
        return Err(Error::Alignment(format!(
            "no z-axis records for initial state {init_state}"
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (time_index, (time, zs)) in by_time {
        let z: Vec<f64> = zs
            .into_iter()
            .enumerate()
            .map(|(q, v)| {
                v.ok_or_else(|| {
                    Error::Alignment(format!(
                        "missing z-axis record for qubit {q} at time index {time_index}"
                    ))
                })
            })
            .collect::<Result<_>>()?;
        times.push(time);
        values.push(reduce(&z));
    }
    Ok((times, values))
}

/// Per-time signed deviations of a dataset's mean magnetization from two
/// baselines, typically ideal Trotter and exact dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationCurves {
    pub times: Vec<f64>,
    /// `<Zbar>_data - <Zbar>_trotter` per time point.
    pub vs_trotter: Vec<f64>,
    /// `<Zbar>_data - <Zbar>_exact` per time point.
    pub vs_exact: Vec<f64>,
}

/// Builds [`DeviationCurves`] for one initial state. The baselines are
/// supplied as `(times, values)` curves aligned to the same time grid.
pub fn deviation_curves(
    ds: &ObservationDataset,
    init_state: &str,
    trotter: &(Vec<f64>, Vec<f64>),
    exact: &(Vec<f64>, Vec<f64>),
) -> Result<DeviationCurves> {
    let (times, data) = mean_magnetization(ds, init_state)?;
    for (name, base) in [("trotter", trotter), ("exact", exact)] {
        if base.0.len() != times.len() {
            return Err(Error::Alignment(format!(
                "{name} baseline has {} points, dataset has {}",
                base.0.len(),
                times.len()
            )));
        }
        if times.iter().zip(&base.0).any(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(Error::Alignment(format!("{name} baseline time grid mismatch")));
        }
    }
    Ok(DeviationCurves {
        times,
        vs_trotter: data.iter().zip(&trotter.1).map(|(a, b)| a - b).collect(),
        vs_exact: data.iter().zip(&exact.1).map(|(a, b)| a - b).collect(),
    })
}

/// Summary of one evaluation run, serialized to JSON by callers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// MSE of the noisy dataset against the quasi-ideal baseline.
    pub raw_mse: f64,
    /// MSE of the mitigated dataset against the same baseline.
    pub mitigated_mse: f64,
    /// `mitigated_mse / raw_mse`; below 1 means the network helped.
    pub improvement_ratio: f64,
    /// Axes the MSEs were computed over.
    pub axes: Vec<Axis>,
    pub num_compared: usize,
}

impl MetricReport {
    pub fn new(raw_mse: f64, mitigated_mse: f64, axes: Vec<Axis>, num_compared: usize) -> Self {
        MetricReport {
            raw_mse,
            mitigated_mse,
            improvement_ratio: mitigated_mse / raw_mse,
            axes,
            num_compared,
        }
    }
}

/// Number of scalars [`mse`] would compare on the given axes.
pub fn compared_count(ds: &ObservationDataset, axes: &[Axis]) -> usize {
    keys_on_axes(ds, axes).len()
}
