//! Acceptance suite: one test per release criterion, each printing a
//! `criterion N ... PASS/FAIL` line (visible with `--nocapture` and in
//! failure output). Tolerances are pinned here and nowhere else.
//!
//! Criterion 2 (first-order Trotter error ratio in [1.6, 2.4]) is expected
//! to fail: for these models the observed convergence of the mean
//! magnetization is second order — see
//! `trotter_error_at_fixed_time_is_monotone_and_even_order` in the core
//! reference module for the symmetry argument. The criterion is kept as
//! stated rather than loosened.

use std::fs;
use std::process::Command;
use std::time::Instant;

use qem_core::circuits::{ModelKind, SpinModel, Stage, TrotterSchedule};
use qem_core::datasets::{
    self, full_basis, pair_for_training, GenerateSpec, ObservationDataset, PostSelect,
};
use qem_core::metrics;
use qem_core::mitigator::{self, MlpModel, TrainConfig};
use qem_core::qsim::{
    expectation_from_counts, popcount, Axis, DensityMatrix, Gate, NoiseModel, ShotHistogram,
};
use qem_core::reference::{
    exact_expectations, hamiltonian, ideal_trotter_expectations, observable_grid,
    pauli_expectation_vec,
};
use qem_core::rng;

const NUM_SPINS: usize = 5;
const COUPLING: f64 = 2.0;
const FIELD: f64 = 1.0;
const TOTAL_TIME: f64 = 1.0;
const NUM_POINTS: usize = 20;
const SHOTS: u64 = 8192;
const MASTER_SEED: u64 = 1234;

struct Criterion {
    number: u32,
    name: &'static str,
    start: Instant,
    budget_secs: Option<u64>,
}

impl Criterion {
    fn begin(number: u32, name: &'static str, budget_secs: Option<u64>) -> Criterion {
        Criterion { number, name, start: Instant::now(), budget_secs }
    }

    fn finish(self, pass: bool, detail: &str) {
        let elapsed = self.start.elapsed().as_secs_f64();
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {} ({}): {verdict} [{elapsed:.1}s] {detail}",
            self.number, self.name
        );
        assert!(pass, "criterion {} ({}) failed: {detail}", self.number, self.name);
        if let Some(budget) = self.budget_secs {
            assert!(
                elapsed < budget as f64,
                "criterion {} exceeded its {budget}s runtime budget ({elapsed:.1}s)",
                self.number
            );
        }
    }
}

fn model(kind: ModelKind) -> SpinModel {
    match kind {
        ModelKind::Tfim => SpinModel::tfim(NUM_SPINS, COUPLING, FIELD),
        ModelKind::Xy => SpinModel::xy(NUM_SPINS, COUPLING, FIELD),
    }
}

fn default_axes(kind: ModelKind) -> Vec<Axis> {
    match kind {
        ModelKind::Tfim => vec![Axis::X, Axis::Y, Axis::Z],
        ModelKind::Xy => vec![Axis::Z],
    }
}

fn spec(
    kind: ModelKind,
    stage: Stage,
    c: usize,
    noisy: bool,
    exact: bool,
    post_select: Option<PostSelect>,
) -> GenerateSpec {
    GenerateSpec {
        model: model(kind),
        schedule: TrotterSchedule::new(2, c, TOTAL_TIME, NUM_POINTS),
        stage,
        noise: if noisy {
            NoiseModel::default_calibration(NUM_SPINS)
        } else {
            NoiseModel::disabled(NUM_SPINS)
        },
        sampling: if exact {
            datasets::Sampling::Exact
        } else {
            datasets::Sampling::Shots(SHOTS)
        },
        axes: default_axes(kind),
        init_states: full_basis(NUM_SPINS),
        master_seed: MASTER_SEED,
        post_select,
    }
}

#[test]
fn criterion_1_oracle_equivalence_noise_off() {
    let crit = Criterion::begin(1, "oracle equivalence, noise off", Some(60));
    let mut worst: f64 = 0.0;
    for kind in [ModelKind::Tfim, ModelKind::Xy] {
        let shallow = datasets::generate(&spec(kind, Stage::QuasiIdeal, 2, false, true, None))
            .expect("stage-a generation");
        let padded = datasets::generate(&spec(kind, Stage::TrainingNoisy, 2, false, true, None))
            .expect("stage-b generation");
        assert_eq!(shallow.records.len(), padded.records.len());
        for (a, b) in shallow.records.iter().zip(&padded.records) {
            worst = worst.max((a.value - b.value).abs());
        }
        let m = model(kind);
        let schedule = TrotterSchedule::new(2, 2, TOTAL_TIME, NUM_POINTS);
        let observables = observable_grid(&default_axes(kind), NUM_SPINS);
        for init in full_basis(NUM_SPINS) {
            let oracle = ideal_trotter_expectations(
                &m,
                &init,
                schedule.n1,
                &schedule.time_grid(),
                &observables,
            )
            .expect("oracle curves");
            for record in shallow.records.iter().filter(|r| r.init_state == init) {
                let want = oracle
                    .value(record.time_index - 1, record.axis, record.qubit)
                    .expect("oracle value");
                worst = worst.max((record.value - want).abs());
            }
        }
    }
    crit.finish(worst < 1e-10, &format!("max deviation {worst:.3e} (tolerance 1e-10)"));
}

#[test]
fn criterion_2_trotter_convergence_first_order() {
    let crit = Criterion::begin(2, "Trotter convergence", Some(60));
    let m = model(ModelKind::Tfim);
    let init = "11100";
    let grid = [TOTAL_TIME];
    let observables = observable_grid(&[Axis::Z], NUM_SPINS);
    let exact = exact_expectations(&m, init, &grid, &observables).expect("exact curves");
    let exact_zbar = exact.mean_over_qubits(Axis::Z)[0];
    let steps = [2usize, 4, 8, 16, 32, 64];
    let errors: Vec<f64> = steps
        .iter()
        .map(|&n| {
            let trotter = ideal_trotter_expectations(&m, init, n, &grid, &observables)
                .expect("trotter curves");
            (trotter.mean_over_qubits(Axis::Z)[0] - exact_zbar).abs()
        })
        .collect();
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let ratios: Vec<f64> = [1usize, 2, 3].iter().map(|&i| errors[i] / errors[i + 1]).collect();
    let in_band = ratios.iter().all(|r| (1.6..=2.4).contains(r));
    crit.finish(
        monotone && in_band,
        &format!(
            "monotone: {monotone}; err(N)/err(2N) for N in {{4,8,16}}: \
             [{:.2}, {:.2}, {:.2}] (required band [1.6, 2.4])",
            ratios[0], ratios[1], ratios[2]
        ),
    );
}

#[test]
fn criterion_3_mlp_gradient_check() {
    let crit = Criterion::begin(3, "MLP gradient check", Some(60));
    let mut stream = rng::stream(rng::derive_seed(77, &[3]));
    let mut worst: f64 = 0.0;
    for case in 0..10u64 {
        let k_in = 2 + (case as usize % 4);
        let k_out = 1 + (case as usize % 3);
        let hidden = [3 + (case as usize % 5)];
        let model = MlpModel::with_hidden(k_in, &hidden, k_out, 1000 + case);
        let pairs: Vec<datasets::TrainingPair> = (0..6)
            .map(|p| datasets::TrainingPair {
                init_state: format!("{p:05b}"),
                time_index: p + 1,
                input: (0..k_in).map(|_| 2.0 * rng::uniform_f64(&mut stream) - 1.0).collect(),
                target: (0..k_out).map(|_| 2.0 * rng::uniform_f64(&mut stream) - 1.0).collect(),
            })
            .collect();
        let analytic = mitigator::gradient(&model, &pairs).expect("gradient");
        let h = 1e-6;
        for layer in 0..model.weights.len() {
            // probe a spread of weights rather than every parameter
            let count = model.weights[layer].len();
            for idx in [0, count / 2, count - 1] {
                let mut plus = model.clone();
                plus.weights[layer][idx] += h;
                let mut minus = model.clone();
                minus.weights[layer][idx] -= h;
                let numeric = (mitigator::loss(&plus, &pairs).unwrap()
                    - mitigator::loss(&minus, &pairs).unwrap())
                    / (2.0 * h);
                let exact = analytic.weights[layer][idx];
                let rel = (numeric - exact).abs() / exact.abs().max(1e-8);
                worst = worst.max(rel);
            }
            let bias = model.biases[layer].len() / 2;
            let mut plus = model.clone();
            plus.biases[layer][bias] += h;
            let mut minus = model.clone();
            minus.biases[layer][bias] -= h;
            let numeric = (mitigator::loss(&plus, &pairs).unwrap()
                - mitigator::loss(&minus, &pairs).unwrap())
                / (2.0 * h);
            let exact = analytic.biases[layer][bias];
            worst = worst.max((numeric - exact).abs() / exact.abs().max(1e-8));
        }
    }
    crit.finish(worst < 1e-4, &format!("max relative error {worst:.3e} (tolerance 1e-4)"));
}

fn train_config() -> TrainConfig {
    TrainConfig {
        epochs: 5000,
        checkpoint_every: 100,
        batch_size: Some(64),
        ..TrainConfig::default()
    }
}

/// Runs generate/train/mitigate for one (model, c) cell and returns
/// `(mitigated MSE, raw MSE)` against the noise-free Trotter baseline.
fn mitigation_mse(kind: ModelKind, c: usize, post_select: Option<PostSelect>) -> (f64, f64) {
    let quasi = datasets::generate(&spec(kind, Stage::QuasiIdeal, c, true, false, post_select))
        .expect("quasi-ideal");
    let noisy = datasets::generate(&spec(kind, Stage::TrainingNoisy, c, true, false, post_select))
        .expect("training-noisy");
    let eval = datasets::generate(&spec(kind, Stage::EvalNoisy, c, true, false, post_select))
        .expect("eval-noisy");
    let baseline = datasets::generate(&spec(kind, Stage::EvalNoisy, c, false, true, None))
        .expect("ideal trotter baseline");
    let pairs = pair_for_training(&noisy, &quasi).expect("pairs");
    let result = mitigator::train(&pairs, &train_config()).expect("training");
    let mitigated = mitigator::mitigate(&result.model, &eval).expect("mitigation");
    let axes = [Axis::Z];
    (
        metrics::mse(&mitigated, &baseline, &axes).expect("mitigated mse"),
        metrics::mse(&eval, &baseline, &axes).expect("raw mse"),
    )
}

#[test]
fn criterion_4_end_to_end_mitigation_tfim() {
    let crit = Criterion::begin(4, "end-to-end mitigation, TFIM", Some(900));
    let mut detail = String::new();
    let mut pass = true;
    for c in [2usize, 3] {
        let (mitigated, raw) = mitigation_mse(ModelKind::Tfim, c, None);
        let ratio = mitigated / raw;
        pass &= ratio <= 0.5;
        detail.push_str(&format!(
            "c={c}: mitigated {mitigated:.3e} / raw {raw:.3e} = {ratio:.3}; "
        ));
    }
    crit.finish(pass, &format!("{detail}(required ratio <= 0.5)"));
}

#[test]
fn criterion_5_xy_post_selection_improves_mitigation() {
    let crit = Criterion::begin(5, "XY post-selection", Some(900));
    let mut detail = String::new();
    let mut pass = true;
    for c in [2usize, 3] {
        let (selected, _) = mitigation_mse(ModelKind::Xy, c, Some(PostSelect::Auto));
        let (plain, _) = mitigation_mse(ModelKind::Xy, c, None);
        pass &= selected <= plain;
        detail.push_str(&format!(
            "N2={}: post-selected {selected:.3e} vs plain {plain:.3e}; ",
            2 * c
        ));
    }
    crit.finish(pass, &format!("{detail}(post-selected must not exceed plain)"));
}

#[test]
fn criterion_6_conservation_and_symmetry() {
    let crit = Criterion::begin(6, "conservation and symmetry", None);

    // XY exact evolution conserves the excitation number.
    let spectrum = hamiltonian(&model(ModelKind::Xy)).expect("hamiltonian").spectrum();
    let mut worst: f64 = 0.0;
    for init in ["10000", "11010", "11100"] {
        let expected = popcount(init) as f64;
        let index = usize::from_str_radix(init, 2).unwrap();
        for i in 1..=NUM_POINTS {
            let t = i as f64 * TOTAL_TIME / NUM_POINTS as f64;
            let psi = spectrum.evolve_basis_state(index, t);
            let excitations: f64 = (0..NUM_SPINS)
                .map(|q| (1.0 - pauli_expectation_vec(&psi, NUM_SPINS, Axis::Z, q)) / 2.0)
                .sum();
            worst = worst.max((excitations - expected).abs());
        }
    }
    let conserved = worst < 1e-10;

    // Half-difference antisymmetry: relabeling a dataset with the
    // complementary initial state exchanges the up and down sets and must
    // negate d at every time.
    let ds = datasets::generate(&spec(ModelKind::Xy, Stage::EvalNoisy, 2, true, false, None))
        .expect("xy dataset");
    let mut swapped = ds.clone();
    for r in &mut swapped.records {
        if r.init_state == "11100" {
            r.init_state = "00011".into();
        } else if r.init_state == "00011" {
            r.init_state = "11100".into();
        }
    }
    let (_, d) = metrics::half_difference(&ds, "11100").expect("half-difference");
    let (_, d_swapped) = metrics::half_difference(&swapped, "00011").expect("half-difference");
    let antisymmetric =
        d.iter().zip(&d_swapped).all(|(a, b)| (a + b).abs() < 1e-12) && !d.is_empty();

    // d(|11100>, t=0) = 2 exactly from the unevolved basis state.
    let rho = DensityMatrix::basis_state(NUM_SPINS, "11100").expect("basis state");
    let mut t0 = ObservationDataset { meta: ds.meta.clone(), records: Vec::new() };
    for q in 0..NUM_SPINS {
        let mut record = ds.records[0].clone();
        record.init_state = "11100".into();
        record.time_index = 1;
        record.time = 0.0;
        record.axis = Axis::Z;
        record.qubit = q;
        record.value = rho.expectation_pauli(Axis::Z, q).expect("expectation");
        t0.records.push(record);
    }
    let (_, d0) = metrics::half_difference(&t0, "11100").expect("t=0 half-difference");
    let domain_wall = d0 == vec![2.0];

    // post_select idempotence on a sampled histogram.
    let mut counts = std::collections::BTreeMap::new();
    counts.insert("11000".to_string(), 400u64);
    counts.insert("10100".to_string(), 350);
    counts.insert("10000".to_string(), 120);
    counts.insert("11100".to_string(), 90);
    counts.insert("00011".to_string(), 64);
    let histogram = ShotHistogram::new(counts);
    let once = datasets::post_select(&histogram, 2).expect("post-selection");
    let twice = datasets::post_select(&once, 2).expect("repeated post-selection");
    let idempotent = once == twice;

    crit.finish(
        conserved && antisymmetric && domain_wall && idempotent,
        &format!(
            "excitation drift {worst:.3e} (tolerance 1e-10); antisymmetry {antisymmetric}; \
             d(|11100>, 0) = {:?}; post-selection idempotent {idempotent}",
            d0
        ),
    );
}

#[test]
fn criterion_7_pipeline_determinism() {
    let crit = Criterion::begin(7, "pipeline determinism", None);
    let dir = tempfile::TempDir::new().unwrap();
    let out = dir.path().join("out");
    let config_path = dir.path().join("run.toml");
    fs::write(
        &config_path,
        format!(
            r#"
[model]
kind = "tfim"
num_spins = 3

[schedule]
n1 = 2
c = 2
num_points = 6

[sampling]
shots = 512

[training]
epochs = 60
checkpoint_every = 20

[output]
dir = "{}"
"#,
            out.display()
        ),
    )
    .unwrap();
    let artifacts = [
        "dataset_quasi_ideal.jsonl",
        "dataset_training_noisy.jsonl",
        "dataset_eval_noisy.jsonl",
        "dataset_exact.jsonl",
        "dataset_ideal_trotter.jsonl",
        "dataset_mitigated.jsonl",
        "checkpoint.json",
        "report.json",
    ];
    let run = || {
        let cfg = config_path.to_str().unwrap();
        let qem = |args: &[&str]| {
            let output = Command::new(env!("CARGO_BIN_EXE_qem"))
                .arg("--config")
                .arg(cfg)
                .args(args)
                .output()
                .expect("binary runs");
            assert!(
                output.status.success(),
                "qem {args:?} failed: {}",
                String::from_utf8_lossy(&output.stderr)
            );
        };
        for stage in ["quasi-ideal", "training-noisy", "eval-noisy"] {
            qem(&["generate", "--stage", stage]);
        }
        qem(&["reference"]);
        let path = |name: &str| out.join(name).to_str().unwrap().to_string();
        qem(&[
            "train",
            "--noisy",
            &path("dataset_training_noisy.jsonl"),
            "--quasi",
            &path("dataset_quasi_ideal.jsonl"),
        ]);
        qem(&[
            "mitigate",
            "--checkpoint",
            &path("checkpoint.json"),
            "--eval",
            &path("dataset_eval_noisy.jsonl"),
        ]);
        qem(&[
            "evaluate",
            &path("dataset_mitigated.jsonl"),
            &path("dataset_eval_noisy.jsonl"),
            &path("dataset_ideal_trotter.jsonl"),
            "--exact",
            &path("dataset_exact.jsonl"),
        ]);
        artifacts
            .iter()
            .map(|name| fs::read(out.join(name)).expect("artifact exists"))
            .collect::<Vec<_>>()
    };
    let first = run();
    let second = run();
    let identical = first == second;
    crit.finish(identical, "two full pipeline runs compared byte-for-byte over 8 artifacts");
}

#[test]
fn criterion_8_shot_noise_statistics() {
    let crit = Criterion::begin(8, "shot-noise statistics", None);
    let bound = 4.0 / (SHOTS as f64).sqrt();
    let noise = NoiseModel::disabled(NUM_SPINS);
    let mut stream = rng::stream(rng::derive_seed(MASTER_SEED, &[8]));
    let trials = 1000usize;
    let states = trials / NUM_SPINS;
    let mut within = 0usize;
    for s in 0..states {
        // random product state: independent RX rotation on each qubit
        let mut rho = DensityMatrix::basis_state(NUM_SPINS, "00000").unwrap();
        for q in 0..NUM_SPINS {
            let angle = 2.0 * core::f64::consts::PI * rng::uniform_f64(&mut stream);
            rho = rho.apply_gate(&Gate::rx(q, angle)).unwrap();
        }
        let histogram = rho.sample_counts(SHOTS, &noise, 9000 + s as u64).unwrap();
        for q in 0..NUM_SPINS {
            let expected = rho.expectation_pauli(Axis::Z, q).unwrap();
            let sampled = expectation_from_counts(&histogram, Axis::Z, q, false).unwrap();
            if (sampled - expected).abs() < bound {
                within += 1;
            }
        }
    }
    let fraction = within as f64 / trials as f64;
    crit.finish(
        fraction >= 0.99,
        &format!("{within}/{trials} estimates within 4/sqrt(8192) = {bound:.4}"),
    );
}
