use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fedcgau::data::{synth_blobs, BlobSpec, EmbeddingDataset};
use fedcgau::fed::{build_clients, run_federated, run_federated_observed, FederatedConfig, MomentumConfig};
use fedcgau::hetero::gamma_from_assignment;
use fedcgau::linalg::Matrix;
use fedcgau::nn::{ClassifierModel, ClientOneHot, HiddenLayer, ModelSpec, Task, UnitKind};
use fedcgau::simclients::{shuffle_assignment, simulate_clients, ClientAssignment, Provenance};

fn client_data(k: usize) -> EmbeddingDataset {
    let blobs = synth_blobs(&BlobSpec {
        num_classes: 2,
        blobs_per_class: k,
        samples_per_blob: 30,
        dim: 3,
        separation: 4.0,
        spread: 1.0,
        seed: 12,
    })
    .unwrap();
    let clients = blobs.groups.clone();
    blobs.dataset.with_clients(clients).unwrap()
}

fn cgau_model(k: usize, dropout: f64, seed: u64) -> ClassifierModel {
    let spec = ModelSpec {
        input_dim: 3,
        hidden: vec![5, 4],
        kind: UnitKind::Cgau,
        task: Task::Binary,
        dropout,
        num_clients: k,
    };
    ClassifierModel::init(&spec, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn config(k: usize, per_round: usize) -> FederatedConfig {
    FederatedConfig {
        num_clients: k,
        clients_per_round: per_round,
        local_steps: 3,
        batch_size: 8,
        rounds: 15,
        learning_rate: 0.1,
        seed: 3,
        validation_fraction: 0.1,
        ..FederatedConfig::default()
    }
}

fn conditioning_rows(model: &ClassifierModel, client: usize) -> Vec<f64> {
    model
        .hidden()
        .iter()
        .flat_map(|l| match l {
            HiddenLayer::Cgau(c) => [c.v_filter.row(client), c.v_gate.row(client)].concat(),
            HiddenLayer::Relu(_) => Vec::new(),
        })
        .collect()
}

#[test]
fn runs_are_bit_reproducible() {
    let ds = client_data(5);
    let mut cfg = config(5, 3);
    cfg.momentum = Some(MomentumConfig {
        coefficient: 0.9,
        reset_each_round: false,
    });
    let template = cgau_model(5, 0.3, 1);
    let run = || {
        let mut clients = build_clients(&ds, 5, cfg.validation_fraction, 4).unwrap();
        run_federated(&template, &mut clients, &cfg).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.records, b.records);
    assert_eq!(a.best_model, b.best_model);
    assert_eq!(a.final_model, b.final_model);
    assert!(a.records.iter().all(|r| r.participants.len() == 3));
}

#[test]
fn conditioning_changes_only_for_participants() {
    let k = 5;
    let ds = client_data(k);
    let cfg = config(k, 2);
    let template = cgau_model(k, 0.0, 2);
    let mut clients = build_clients(&ds, k, cfg.validation_fraction, 4).unwrap();
    let mut previous = template.clone();
    let mut violations = Vec::new();
    let mut ever_moved = vec![false; k];
    run_federated_observed(&template, &mut clients, &cfg, &mut |record, full| {
        for c in 0..k {
            let changed = conditioning_rows(full, c) != conditioning_rows(&previous, c);
            let sampled = record.participants.contains(&c);
            if changed && !sampled {
                violations.push((record.round, c));
            }
            ever_moved[c] |= changed;
        }
        previous = full.clone();
    })
    .unwrap();
    assert!(violations.is_empty(), "rows changed without training: {violations:?}");
    assert!(ever_moved.iter().all(|&m| m), "{ever_moved:?}");
    for c in &clients {
        assert_eq!(c.conditioning().len(), 2);
        assert_eq!(
            [c.conditioning()[0].filter.clone(), c.conditioning()[0].gate.clone()].concat(),
            conditioning_rows(&previous, c.client_id())[..10].to_vec()
        );
    }
}

#[test]
fn relu_baseline_runs_without_conditioning() {
    let ds = client_data(3);
    let cfg = config(3, 3);
    let spec = ModelSpec {
        input_dim: 3,
        hidden: vec![6],
        kind: UnitKind::Relu,
        task: Task::Binary,
        dropout: 0.2,
        num_clients: 3,
    };
    let template = ClassifierModel::init(&spec, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let mut clients = build_clients(&ds, 3, cfg.validation_fraction, 1).unwrap();
    let out = run_federated(&template, &mut clients, &cfg).unwrap();
    assert!(clients.iter().all(|c| c.conditioning().is_empty()));
    let first = out.records.first().unwrap().val_loss;
    assert!(out.best_val_loss <= first);
    assert!(out.records.iter().all(|r| r.round >= 1 && r.round <= cfg.rounds));
}

#[test]
fn dropout_preserves_expected_activation() {
    let width = 16;
    let spec = ModelSpec {
        input_dim: 4,
        hidden: vec![width],
        kind: UnitKind::Cgau,
        task: Task::Multiclass(width),
        dropout: 0.5,
        num_clients: 2,
    };
    let mut model = ClassifierModel::init(&spec, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    for l in model.hidden_mut() {
        if let HiddenLayer::Cgau(c) = l {
            c.v_gate.fill(0.4);
        }
    }
    // an identity head exposes the pre-output activation as the logits
    model.output_mut().weight = Matrix::identity(width);
    model.output_mut().bias.fill(0.0);
    let x = Matrix::from_rows(&[[0.5, -1.0, 0.25, 2.0]]).unwrap();
    let h = ClientOneHot::new(1, 2).unwrap();
    let eval = model.predict(&x, h).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let trials = 10_000;
    let mut mean = Matrix::zeros(1, width);
    for _ in 0..trials {
        let (act, _) = model
            .forward(&x, h, Some(&mut rng as &mut dyn RngCore))
            .unwrap();
        mean.axpy(1.0 / trials as f64, &act).unwrap();
    }
    let norm = |m: &Matrix| m.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
    let rel = norm(&mean.sub(&eval).unwrap()) / norm(&eval);
    assert!(rel < 0.02, "relative deviation {rel}");
}

#[test]
fn conditioning_gradients_touch_only_the_active_row() {
    let model = {
        let mut m = cgau_model(4, 0.0, 5);
        for l in m.hidden_mut() {
            if let HiddenLayer::Cgau(c) = l {
                c.v_filter.fill(0.3);
                c.v_gate.fill(-0.2);
            }
        }
        m
    };
    let x = Matrix::from_rows(&[[1.0, 0.5, -0.5], [0.0, -1.0, 2.0]]).unwrap();
    for client in 0..4 {
        let h = ClientOneHot::new(client, 4).unwrap();
        let (_, grads) = model.loss_and_gradients(&x, &[0, 1], h, None).unwrap();
        for layer in grads.hidden() {
            let HiddenLayer::Cgau(g) = layer else { unreachable!() };
            for v in [&g.v_filter, &g.v_gate] {
                for r in 0..4 {
                    let nonzero = v.row(r).iter().any(|&e| e != 0.0);
                    assert_eq!(nonzero, r == client, "client {client}, row {r}");
                }
            }
        }
    }
}

fn constant_assignment(n: usize, k: usize, value: usize) -> ClientAssignment {
    ClientAssignment {
        assignment: vec![value; n],
        num_clients: k,
        centroids: Vec::new(),
        centroid_to_client: Vec::new(),
        provenance: Provenance::Centroid,
        shuffle_proportion: 0.0,
        seed: 0,
    }
}

#[test]
fn shuffle_redraws_exactly_the_requested_count() {
    // the out-of-range sentinel marks samples that were never redrawn
    let a = constant_assignment(100, 10, 10);
    let s = shuffle_assignment(&a, 0.5, 4).unwrap();
    assert_eq!(s.assignment.iter().filter(|&&c| c < 10).count(), 50);
    let s = shuffle_assignment(&a, 0.999, 4).unwrap();
    assert_eq!(s.assignment.iter().filter(|&&c| c < 10).count(), 99);
}

#[test]
fn full_shuffle_is_uniform() {
    let (n, k, draws) = (10_000, 10, 20);
    let expected = n as f64 / k as f64;
    let mut totals = vec![0usize; k];
    for seed in 0..draws {
        let s = shuffle_assignment(&constant_assignment(n, k, 0), 1.0, seed).unwrap();
        let mut counts = vec![0usize; k];
        for &c in &s.assignment {
            counts[c] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .map(|&o| (o as f64 - expected).powi(2) / expected)
            .sum();
        // 99.9th percentile of chi-square with 9 degrees of freedom
        assert!(chi2 < 27.877, "seed {seed}: chi-square {chi2}");
        for (t, c) in totals.iter_mut().zip(&counts) {
            *t += c;
        }
    }
    // a single draw has sd 30 per client, so the share check runs on the pooled mean
    for (c, &t) in totals.iter().enumerate() {
        let share = t as f64 / draws as f64;
        let dev = (share - expected).abs() / expected;
        assert!(dev <= 0.05, "client {c}: mean share {share}");
    }
}

#[test]
fn gamma_shrinks_when_clients_are_shuffled() {
    let blobs = synth_blobs(&BlobSpec {
        num_classes: 2,
        blobs_per_class: 4,
        samples_per_blob: 100,
        dim: 3,
        separation: 20.0,
        spread: 1.0,
        seed: 6,
    })
    .unwrap();
    let train = blobs.dataset;
    let sim = simulate_clients(&train, &train.subset(&[]), 4, 2).unwrap();
    let g = |p: f64| {
        let a = shuffle_assignment(&sim.train, p, 9).unwrap();
        gamma_from_assignment(&sim.train_projected, &a.assignment, 4)
            .unwrap()
            .gamma
    };
    let (g0, g1) = (g(0.0), g(1.0));
    assert!(g0 > 10.0 * g1, "Γ(0) = {g0}, Γ(1) = {g1}");
}

