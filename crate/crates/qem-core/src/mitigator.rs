//! Feed-forward network applied at the post-processing stage:
//! construction, Adam training against the mean-square error between noisy
//! and quasi-ideal magnetizations, checkpoint selection, and inference.
//!
//! The architecture is fixed to two hidden layers of 200 neurons with a
//! sigmoid after both hidden layers and after the output layer. Because the
//! sigmoid range is (0,1) while magnetizations live in [-1,1], inputs and
//! targets pass through the affine encoding `m -> (m+1)/2` and network
//! outputs through its inverse `y -> 2y-1`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::datasets::{DatasetRole, ObservationDataset, ObservationRecord, TrainingPair};
use crate::qsim::Axis;
use crate::rng::{derive_seed, stream, uniform_f64, Stream};
use crate::{Error, Result};

/// Affine map between magnetization space [-1,1] and sigmoid space [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub scale: f64,
    pub offset: f64,
}

impl Default for Encoding {
    fn default() -> Self {
        Encoding { scale: 0.5, offset: 0.5 }
    }
}

impl Encoding {
    pub fn encode(&self, m: f64) -> f64 {
        m * self.scale + self.offset
    }

    pub fn decode(&self, y: f64) -> f64 {
        (y - self.offset) / self.scale
    }
}

/// Weights and biases of the sigmoid MLP, plus the value encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// Layer widths `[K_in, 200, 200, K_out]`.
    pub sizes: Vec<usize>,
    /// `weights[l]` is row-major `sizes[l+1] x sizes[l]`.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub encoding: Encoding,
}

impl MlpModel {
    /// Glorot-uniform initialization with a fixed seed.
    pub fn new(k_in: usize, k_out: usize, seed: u64) -> MlpModel {
        Self::with_hidden(k_in, &[200, 200], k_out, seed)
    }

    pub fn with_hidden(k_in: usize, hidden: &[usize], k_out: usize, seed: u64) -> MlpModel {
        let mut sizes = vec![k_in];
        sizes.extend_from_slice(hidden);
        sizes.push(k_out);
        let mut rng = stream(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let bound = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            let w: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| (2.0 * uniform_f64(&mut rng) - 1.0) * bound)
                .collect();
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
        }
        MlpModel { sizes, weights, biases, encoding: Encoding::default() }
    }

    pub fn k_in(&self) -> usize {
        self.sizes[0]
    }

    pub fn k_out(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Checks that weight/bias shapes match `sizes` and all values are finite.
    pub fn validate(&self) -> Result<()> {
        if self.sizes.len() < 2 {
            return Err(Error::InvalidArgument("model needs at least one layer".into()));
        }
        if self.weights.len() != self.num_layers() || self.biases.len() != self.num_layers() {
            return Err(Error::InvalidArgument("layer count mismatch".into()));
        }
        for l in 0..self.num_layers() {
            if self.weights[l].len() != self.sizes[l] * self.sizes[l + 1]
                || self.biases[l].len() != self.sizes[l + 1]
            {
                return Err(Error::InvalidArgument(format!("layer {l} shape mismatch")));
            }
            if self.weights[l].iter().chain(&self.biases[l]).any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("layer {l} has non-finite parameters")));
            }
        }
        Ok(())
    }

    /// Network output in sigmoid space for a single encoded input.
    pub fn forward(&self, x_encoded: &[f64]) -> Result<Vec<f64>> {
        if x_encoded.len() != self.k_in() {
            return Err(Error::InvalidArgument(format!(
                "input has {} components, expected K_in = {}",
                x_encoded.len(),
                self.k_in()
            )));
        }
        let mut a = x_encoded.to_vec();
        for l in 0..self.num_layers() {
            let mut next = self.biases[l].clone();
            let in_dim = self.sizes[l];
            for (o, out) in next.iter_mut().enumerate() {
                let row = &self.weights[l][o * in_dim..(o + 1) * in_dim];
                *out += dot(row, &a);
                *out = sigmoid(*out);
            }
            a = next;
        }
        Ok(a)
    }

    /// Mitigated magnetizations for raw (unencoded) inputs.
    pub fn predict(&self, raw_input: &[f64]) -> Result<Vec<f64>> {
        let encoded: Vec<f64> = raw_input.iter().map(|&m| self.encoding.encode(m)).collect();
        Ok(self.forward(&encoded)?.iter().map(|&y| self.encoding.decode(y)).collect())
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-z))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Optimizer and checkpoint settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub checkpoint_every: usize,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_adam: f64,
    /// `None` trains full-batch; `Some(b)` iterates fixed chunks of size b.
    pub batch_size: Option<usize>,
    /// Fraction of time indices held out for checkpoint selection.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50_000,
            checkpoint_every: 100,
            alpha: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps_adam: 1e-8,
            batch_size: None,
            validation_fraction: 0.2,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < self.checkpoint_every || self.checkpoint_every == 0 {
            return Err(Error::InvalidArgument(
                "epochs must be >= checkpoint_every and checkpoint_every > 0".into(),
            ));
        }
        if !(0.0..=0.5).contains(&self.validation_fraction) {
            return Err(Error::InvalidArgument("validation fraction must be in [0, 0.5]".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        Ok(())
    }
}

/// Losses recorded at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Outcome of [`train`]: the checkpoint with minimum validation loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub model: MlpModel,
    pub checkpoints: Vec<CheckpointEntry>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

/// Mean-square error `(1/2D) sum (a - b)^2` between decoded network outputs
/// and targets, with `D` the total number of compared scalars.
pub fn loss(model: &MlpModel, pairs: &[TrainingPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("loss needs at least one pair".into()));
    }
    let batch = Batch::build(model, pairs)?;
    let activations = batch.forward(model);
    Ok(batch.mse(model, activations.last().unwrap()))
}

/// Parameter gradient of [`loss`], matching its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Exact analytic gradient of the loss by backpropagation.
pub fn gradient(model: &MlpModel, pairs: &[TrainingPair]) -> Result<Gradient> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("gradient needs at least one pair".into()));
    }
    let batch = Batch::build(model, pairs)?;
    Ok(batch.gradient(model))
}

/// Flat row-major batch of encoded inputs and raw targets.
struct Batch {
    n: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl Batch {
    fn build(model: &MlpModel, pairs: &[TrainingPair]) -> Result<Batch> {
        let (k_in, k_out) = (model.k_in(), model.k_out());
        model.validate()?;
        let mut inputs = Vec::with_capacity(pairs.len() * k_in);
        let mut targets = Vec::with_capacity(pairs.len() * k_out);
        for pair in pairs {
            if pair.input.len() != k_in || pair.target.len() != k_out {
                return Err(Error::InvalidArgument(format!(
                    "pair ({}, t{}) has shape ({} -> {}), model expects ({k_in} -> {k_out})",
                    pair.init_state,
                    pair.time_index,
                    pair.input.len(),
                    pair.target.len()
                )));
            }
            inputs.extend(pair.input.iter().map(|&m| model.encoding.encode(m)));
            targets.extend_from_slice(&pair.target);
        }
        Ok(Batch { n: pairs.len(), inputs, targets })
    }

    /// Activations per layer; index 0 is the encoded input.
    fn forward(&self, model: &MlpModel) -> Vec<Vec<f64>> {
        let mut activations = vec![self.inputs.clone()];
        for l in 0..model.num_layers() {
            let (in_dim, out_dim) = (model.sizes[l], model.sizes[l + 1]);
            let prev = activations.last().unwrap();
            let mut out = vec![0.0f64; self.n * out_dim];
            for i in 0..self.n {
                let x = &prev[i * in_dim..(i + 1) * in_dim];
                let row_out = &mut out[i * out_dim..(i + 1) * out_dim];
                for (o, v) in row_out.iter_mut().enumerate() {
                    let w = &model.weights[l][o * in_dim..(o + 1) * in_dim];
                    *v = sigmoid(model.biases[l][o] + dot(w, x));
                }
            }
            activations.push(out);
        }
        activations
    }

    fn mse(&self, model: &MlpModel, outputs: &[f64]) -> f64 {
        let d = self.targets.len() as f64;
        let mut acc = 0.0;
        for (y, t) in outputs.iter().zip(&self.targets) {
            let diff = model.encoding.decode(*y) - t;
            acc += diff * diff;
        }
        acc / (2.0 * d)
    }

    fn gradient(&self, model: &MlpModel) -> Gradient {
        let activations = self.forward(model);
        let layers = model.num_layers();
        let k_out = model.k_out();
        let d = self.targets.len() as f64;

        // dL/dy = (decoded - target) / (D * scale); then through the sigmoid
        let outputs = activations.last().unwrap();
        let mut delta: Vec<f64> = outputs
            .iter()
            .zip(&self.targets)
            .map(|(&y, &t)| {
                let dl_dy = (model.encoding.decode(y) - t) / (d * model.encoding.scale);
                dl_dy * y * (1.0 - y)
            })
            .collect();
        debug_assert_eq!(delta.len(), self.n * k_out);

        let mut grad_w: Vec<Vec<f64>> = model.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut grad_b: Vec<Vec<f64>> = model.biases.iter().map(|b| vec![0.0; b.len()]).collect();

        for l in (0..layers).rev() {
            let (in_dim, out_dim) = (model.sizes[l], model.sizes[l + 1]);
            let prev = &activations[l];
            for i in 0..self.n {
                let del = &delta[i * out_dim..(i + 1) * out_dim];
                let x = &prev[i * in_dim..(i + 1) * in_dim];
                for (o, &del_o) in del.iter().enumerate() {
                    grad_b[l][o] += del_o;
                    let row = &mut grad_w[l][o * in_dim..(o + 1) * in_dim];
                    for (gw, &xv) in row.iter_mut().zip(x) {
                        *gw += del_o * xv;
                    }
                }
            }
            if l > 0 {
                let mut prev_delta = vec![0.0f64; self.n * in_dim];
                for i in 0..self.n {
                    let del = &delta[i * out_dim..(i + 1) * out_dim];
                    let out_row = &mut prev_delta[i * in_dim..(i + 1) * in_dim];
                    for (o, &del_o) in del.iter().enumerate() {
                        let w = &model.weights[l][o * in_dim..(o + 1) * in_dim];
                        for (pd, &wv) in out_row.iter_mut().zip(w) {
                            *pd += del_o * wv;
                        }
                    }
                    // sigmoid derivative of the previous activation
                    let a = &prev[i * in_dim..(i + 1) * in_dim];
                    for (pd, &av) in out_row.iter_mut().zip(a) {
                        *pd *= av * (1.0 - av);
                    }
                }
                delta = prev_delta;
            }
        }
        Gradient { weights: grad_w, biases: grad_b }
    }
}

fn shuffled<T: Clone>(items: &[T], rng: &mut Stream) -> Vec<T> {
    let mut out: Vec<T> = items.to_vec();
    for i in (1..out.len()).rev() {
        let j = (uniform_f64(rng) * (i + 1) as f64) as usize;
        out.swap(i, j.min(i));
    }
    out
}

/// Full-batch (or chunked) Adam training with periodic checkpoints; returns
/// the checkpoint with minimum validation loss.
///
/// The validation split holds out `validation_fraction` of the time indices
/// across all initial states, so checkpoint selection probes generalization
/// to unseen time points.
pub fn train(pairs: &[TrainingPair], cfg: &TrainConfig) -> Result<TrainResult> {
    cfg.validate()?;
    if pairs.len() < 2 {
        return Err(Error::InvalidArgument("training needs at least 2 pairs".into()));
    }
    let k_in = pairs[0].input.len();
    let k_out = pairs[0].target.len();

    // stratified split over time indices
    let mut time_indices: Vec<usize> = Vec::new();
    for pair in pairs {
        if !time_indices.contains(&pair.time_index) {
            time_indices.push(pair.time_index);
        }
    }
    time_indices.sort_unstable();
    let mut split_rng = stream(derive_seed(cfg.seed, &[0x5e17]));
    let shuffled_indices = shuffled(&time_indices, &mut split_rng);
    let n_val = (cfg.validation_fraction * time_indices.len() as f64 + 0.5) as usize;
    let val_indices = &shuffled_indices[..n_val];
    let train_pairs: Vec<TrainingPair> =
        pairs.iter().filter(|p| !val_indices.contains(&p.time_index)).cloned().collect();
    let val_pairs: Vec<TrainingPair> =
        pairs.iter().filter(|p| val_indices.contains(&p.time_index)).cloned().collect();
    if train_pairs.is_empty() {
        return Err(Error::InvalidArgument("validation split left no training pairs".into()));
    }

    let mut model = MlpModel::new(k_in, k_out, derive_seed(cfg.seed, &[0x1417]));
    let train_batch = Batch::build(&model, &train_pairs)?;
    let val_batch = if val_pairs.is_empty() { None } else { Some(Batch::build(&model, &val_pairs)?) };

    // chunk boundaries for the batch policy (full batch when None)
    let chunk = cfg.batch_size.unwrap_or(train_pairs.len()).min(train_pairs.len());
    let chunks: Vec<(usize, usize)> = {
        let mut v = Vec::new();
        let mut start = 0;
        while start < train_pairs.len() {
            v.push((start, (start + chunk).min(train_pairs.len())));
            start += chunk;
        }
        v
    };

    let mut adam = AdamState::new(&model);
    let mut checkpoints = Vec::new();
    let mut best: Option<(usize, f64, MlpModel)> = None;

    for epoch in 1..=cfg.epochs {
        for &(lo, hi) in &chunks {
            let sub = train_batch.slice(lo, hi, k_in, k_out);
            let grad = sub.gradient(&model);
            adam.step(&mut model, &grad, cfg);
        }
        if epoch % cfg.checkpoint_every == 0 || epoch == cfg.epochs {
            let acts = train_batch.forward(&model);
            let train_loss = train_batch.mse(&model, acts.last().unwrap());
            let val_loss = match &val_batch {
                Some(vb) => {
                    let acts = vb.forward(&model);
                    vb.mse(&model, acts.last().unwrap())
                }
                None => train_loss,
            };
            if !train_loss.is_finite() || !val_loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            checkpoints.push(CheckpointEntry { epoch, train_loss, val_loss });
            if best.as_ref().map_or(true, |(_, b, _)| val_loss < *b) {
                best = Some((epoch, val_loss, model.clone()));
            }
        }
    }
    let (best_epoch, best_val_loss, model) = best.expect("at least one checkpoint");
    Ok(TrainResult { model, checkpoints, best_epoch, best_val_loss })
}

impl Batch {
    fn slice(&self, lo: usize, hi: usize, k_in: usize, k_out: usize) -> Batch {
        Batch {
            n: hi - lo,
            inputs: self.inputs[lo * k_in..hi * k_in].to_vec(),
            targets: self.targets[lo * k_out..hi * k_out].to_vec(),
        }
    }
}

struct AdamState {
    m_w: Vec<Vec<f64>>,
    v_w: Vec<Vec<f64>>,
    m_b: Vec<Vec<f64>>,
    v_b: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    fn new(model: &MlpModel) -> AdamState {
        AdamState {
            m_w: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            v_w: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            m_b: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            v_b: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            t: 0,
        }
    }

    fn step(&mut self, model: &mut MlpModel, grad: &Gradient, cfg: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - libm::pow(cfg.beta1, self.t as f64);
        let bc2 = 1.0 - libm::pow(cfg.beta2, self.t as f64);
        let update = |theta: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..theta.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                theta[i] -= cfg.alpha * m_hat / (libm::sqrt(v_hat) + cfg.eps_adam);
            }
        };
        for l in 0..model.weights.len() {
            update(&mut model.weights[l], &grad.weights[l], &mut self.m_w[l], &mut self.v_w[l]);
            update(&mut model.biases[l], &grad.biases[l], &mut self.m_b[l], &mut self.v_b[l]);
        }
    }
}

/// Applies a trained model to a noisy dataset; outputs z-axis records only.
pub fn mitigate(model: &MlpModel, noisy: &ObservationDataset) -> Result<ObservationDataset> {
    model.validate()?;
    if !matches!(noisy.meta.role, DatasetRole::EvalNoisy | DatasetRole::TrainingNoisy) {
        return Err(Error::InvalidArgument(format!(
            "mitigation input role is {:?}, expected EvalNoisy (or TrainingNoisy)",
            noisy.meta.role
        )));
    }
    let nq = noisy.meta.model.num_spins;
    let expected_k_in = noisy.meta.axes.len() * nq;
    if model.k_in() != expected_k_in || model.k_out() != nq {
        return Err(Error::InvalidArgument(format!(
            "model shape ({} -> {}) does not match dataset layout ({expected_k_in} -> {nq})",
            model.k_in(),
            model.k_out()
        )));
    }
    let index = noisy.value_index();
    let mut shots_seed = alloc::collections::BTreeMap::new();
    for r in &noisy.records {
        if r.axis == Axis::Z {
            shots_seed.insert((r.init_state.clone(), r.time_index, r.qubit), (r.shots, r.seed));
        }
    }
    let mut records = Vec::new();
    for (init, time_index) in noisy.sample_keys() {
        let input = index.feature_vector(&init, time_index, &noisy.meta.axes)?;
        let output = model.predict(&input)?;
        let time = time_index as f64 * noisy.meta.schedule.total_time
            / noisy.meta.schedule.num_points as f64;
        for (qubit, &value) in output.iter().enumerate() {
            let (shots, seed) = shots_seed
                .get(&(init.clone(), time_index, qubit))
                .copied()
                .unwrap_or((0, 0));
            records.push(ObservationRecord {
                model_kind: noisy.meta.model.kind,
                n1: noisy.meta.schedule.n1,
                c: noisy.meta.schedule.c,
                layout: noisy.meta.schedule.layout.clone(),
                role: DatasetRole::Mitigated,
                init_state: init.clone(),
                time_index,
                time,
                axis: Axis::Z,
                qubit,
                value,
                shots,
                seed,
            });
        }
    }
    let mut meta = noisy.meta.clone();
    meta.role = DatasetRole::Mitigated;
    meta.axes = vec![Axis::Z];
    Ok(ObservationDataset { meta, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;
    use approx::assert_abs_diff_eq;

    fn toy_pairs(n: usize, k_in: usize, k_out: usize, seed: u64) -> Vec<TrainingPair> {
        let mut rng = stream(seed);
        (0..n)
            .map(|i| TrainingPair {
                init_state: String::from("toy"),
                time_index: i + 1,
                input: (0..k_in).map(|_| 2.0 * uniform_f64(&mut rng) - 1.0).collect(),
                target: (0..k_out).map(|_| 1.6 * uniform_f64(&mut rng) - 0.8).collect(),
            })
            .collect()
    }

    #[test]
    fn encoding_round_trip_is_exact() {
        let enc = Encoding::default();
        for m in [-1.0, -0.3, 0.0, 0.123456789, 0.99] {
            assert!((enc.decode(enc.encode(m)) - m).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_parameters_output_half() {
        let mut model = MlpModel::new(15, 5, 1);
        for w in &mut model.weights {
            w.iter_mut().for_each(|v| *v = 0.0);
        }
        let x = vec![0.3; 15];
        let y = model.forward(&x).unwrap();
        for v in y {
            assert_abs_diff_eq!(v, 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn decoded_outputs_stay_in_open_interval() {
        let model = MlpModel::new(5, 5, 3);
        let mut rng = stream(17);
        for _ in 0..50 {
            let x: Vec<f64> = (0..5).map(|_| 2.0 * uniform_f64(&mut rng) - 1.0).collect();
            for v in model.predict(&x).unwrap() {
                assert!(v > -1.0 && v < 1.0);
            }
        }
    }

    #[test]
    fn forward_rejects_shape_mismatch() {
        let model = MlpModel::new(15, 5, 1);
        assert!(model.forward(&vec![0.0; 14]).is_err());
    }

    #[test]
    fn loss_basics() {
        let model = MlpModel::new(2, 5, 1);
        // identical outputs and targets -> 0: fabricate by measuring outputs
        let probe = TrainingPair {
            init_state: String::from("p"),
            time_index: 1,
            input: vec![0.2, -0.4],
            target: vec![0.0; 5],
        };
        let out = model.predict(&probe.input).unwrap();
        let exact = TrainingPair { target: out.clone(), ..probe.clone() };
        assert_abs_diff_eq!(loss(&model, &[exact.clone()]).unwrap(), 0.0, epsilon = 1e-18);
        // constant offset delta on every scalar -> delta^2 / 2
        let delta = 0.01;
        let offset = TrainingPair {
            target: out.iter().map(|v| v - delta).collect(),
            ..probe.clone()
        };
        assert_abs_diff_eq!(
            loss(&model, &[offset]).unwrap(),
            delta * delta / 2.0,
            epsilon = 1e-12
        );
        assert!(loss(&model, &[]).is_err());
    }

    #[test]
    fn single_pair_unit_error_gives_half() {
        // output (0,...,0), target (1,...,1): E = (1/2D) * D * 1 = 0.5
        // realize exact zero outputs by checking the formula through mse()
        let model = MlpModel::new(5, 5, 2);
        let pair = TrainingPair {
            init_state: String::from("p"),
            time_index: 1,
            input: vec![0.0; 5],
            target: model
                .predict(&vec![0.0; 5])
                .unwrap()
                .iter()
                .map(|v| v - 1.0)
                .collect(),
        };
        assert_abs_diff_eq!(loss(&model, &[pair]).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for trial in 0..10 {
            let model = MlpModel::with_hidden(4, &[7, 6], 3, 100 + trial);
            let pairs = toy_pairs(5, 4, 3, 200 + trial);
            let grad = gradient(&model, &pairs).unwrap();
            let step = 1e-5;
            let mut checked = 0usize;
            let mut probe_rng = stream(300 + trial);
            for l in 0..model.weights.len() {
                for _ in 0..6 {
                    let idx = (uniform_f64(&mut probe_rng) * model.weights[l].len() as f64)
                        as usize % model.weights[l].len();
                    let mut plus = model.clone();
                    plus.weights[l][idx] += step;
                    let mut minus = model.clone();
                    minus.weights[l][idx] -= step;
                    let fd = (loss(&plus, &pairs).unwrap() - loss(&minus, &pairs).unwrap())
                        / (2.0 * step);
                    let an = grad.weights[l][idx];
                    let denom = fd.abs().max(an.abs()).max(1e-8);
                    assert!(
                        ((an - fd) / denom).abs() < 1e-4,
                        "trial {trial} layer {l} idx {idx}: analytic {an}, fd {fd}"
                    );
                    checked += 1;
                }
                let idx = l % model.biases[l].len();
                let mut plus = model.clone();
                plus.biases[l][idx] += step;
                let mut minus = model.clone();
                minus.biases[l][idx] -= step;
                let fd =
                    (loss(&plus, &pairs).unwrap() - loss(&minus, &pairs).unwrap()) / (2.0 * step);
                let an = grad.biases[l][idx];
                let denom = fd.abs().max(an.abs()).max(1e-8);
                assert!(((an - fd) / denom).abs() < 1e-4);
                checked += 1;
            }
            assert!(checked > 0);
        }
    }

    #[test]
    fn gradient_vanishes_at_perfect_fit() {
        let model = MlpModel::new(3, 2, 5);
        let mut rng = stream(77);
        let pairs: Vec<TrainingPair> = (0..4)
            .map(|i| {
                let input: Vec<f64> = (0..3).map(|_| 2.0 * uniform_f64(&mut rng) - 1.0).collect();
                let target = model.predict(&input).unwrap();
                TrainingPair { init_state: String::from("p"), time_index: i + 1, input, target }
            })
            .collect();
        let grad = gradient(&model, &pairs).unwrap();
        let norm: f64 = grad
            .weights
            .iter()
            .flatten()
            .chain(grad.biases.iter().flatten())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt();
        assert!(norm < 1e-8, "gradient norm {norm}");
    }

    #[test]
    fn gradient_is_invariant_under_dataset_duplication() {
        let model = MlpModel::new(4, 3, 9);
        let pairs = toy_pairs(6, 4, 3, 10);
        let mut doubled = pairs.clone();
        doubled.extend(pairs.clone());
        let g1 = gradient(&model, &pairs).unwrap();
        let g2 = gradient(&model, &doubled).unwrap();
        for (a, b) in g1.weights.iter().flatten().zip(g2.weights.iter().flatten()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn training_descends_and_is_deterministic() {
        let pairs = toy_pairs(40, 4, 2, 55);
        let cfg = TrainConfig {
            epochs: 300,
            checkpoint_every: 50,
            validation_fraction: 0.2,
            ..TrainConfig::default()
        };
        let r1 = train(&pairs, &cfg).unwrap();
        let r2 = train(&pairs, &cfg).unwrap();
        assert_eq!(r1.checkpoints, r2.checkpoints);
        assert_eq!(r1.model, r2.model);
        let first = r1.checkpoints.first().unwrap();
        let selected = r1
            .checkpoints
            .iter()
            .find(|c| c.epoch == r1.best_epoch)
            .unwrap();
        assert!(selected.val_loss <= first.val_loss);
        // descent sanity vs the untrained model
        let initial = loss(
            &MlpModel::new(4, 2, derive_seed(cfg.seed, &[0x1417])),
            &pairs,
        )
        .unwrap();
        assert!(selected.train_loss <= initial);
    }

    #[test]
    fn forward_golden_vector() {
        // frozen regression oracle: seed 42 model, fixed input
        let model = MlpModel::new(15, 5, 42);
        let x: Vec<f64> = (0..15).map(|i| ((i as f64) * 0.1).sin() * 0.9).collect();
        let y = model.predict(&x).unwrap();
        let golden = golden_forward_values();
        assert_eq!(y.len(), golden.len());
        for (a, b) in y.iter().zip(&golden) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    // recorded once from the implementation and locked; see forward_golden_vector
    fn golden_forward_values() -> Vec<f64> {
        vec![
            5.11387098394238127e-1,
            4.97218885449456360e-1,
            1.49075066697637926e-1,
            -2.57680310805321944e-1,
            3.71586797336258767e-1,
        ]
    }
}
