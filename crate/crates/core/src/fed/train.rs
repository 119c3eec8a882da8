use std::io::Write;

use rand::seq::SliceRandom;
use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use super::client::ClientState;
use super::{Averaging, FederatedConfig};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{cross_entropy, sgd_step, BlockRole, ClassifierModel, ClientOneHot, MomentumState};
use crate::seeds::child_rng;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: usize,
    /// Sampled clients in ascending order.
    pub participants: Vec<usize>,
    /// Mean local training loss of each participant, aligned with
    /// `participants`.
    pub client_train_loss: Vec<f64>,
    pub mean_client_train_loss: f64,
    pub val_loss: f64,
    pub val_metric: f64,
}

#[derive(Debug, Clone)]
pub struct FederatedOutcome {
    /// Shared parameters and every client's conditioning rows from the round
    /// with the lowest validation loss (earliest on ties).
    pub best_model: ClassifierModel,
    pub best_round: usize,
    pub best_val_loss: f64,
    pub best_val_metric: f64,
    pub final_model: ClassifierModel,
    pub records: Vec<RoundRecord>,
}

/// Convex combination of the shared blocks of `params`, computed as
/// `p₀ + Σ wᵢ (pᵢ − p₀)` with weights normalized to sum to one, so identical
/// inputs come back unchanged bit for bit. Conditioning blocks are copied from
/// the first entry.
pub fn average_shared(params: &[&ClassifierModel], weights: &[f64]) -> Result<ClassifierModel> {
    if params.is_empty() || params.len() != weights.len() {
        return Err(Error::dim(format!(
            "{} parameter sets with {} weights",
            params.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::config("averaging weights must be finite and nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::config("averaging weights sum to zero"));
    }
    let first = params[0];
    if let Some(i) = params.iter().position(|p| !first.same_shape(p)) {
        return Err(Error::dim(format!("parameter set {i} has a different layout")));
    }
    let norm: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let others: Vec<Vec<(crate::nn::BlockInfo, &Matrix)>> =
        params.iter().map(|p| p.blocks()).collect();
    let mut out = first.clone();
    for (b, (info, block)) in out.blocks_mut().into_iter().enumerate() {
        if info.role != BlockRole::Shared {
            continue;
        }
        for (e, v) in block.as_mut_slice().iter_mut().enumerate() {
            let base = *v;
            let mut acc = base;
            for (p, w) in others.iter().zip(&norm).skip(1) {
                acc += w * (p[b].1.as_slice()[e] - base);
            }
            *v = acc;
        }
    }
    Ok(out)
}

fn zero_conditioning(model: &mut ClassifierModel) {
    for (info, block) in model.blocks_mut() {
        if info.role == BlockRole::Conditioning {
            block.fill(0.0);
        }
    }
}

fn check_setup(
    template: &ClassifierModel,
    clients: &[ClientState],
    cfg: &FederatedConfig,
) -> Result<()> {
    cfg.validate()?;
    cfg.metric.check_task(template.task())?;
    if clients.len() != cfg.num_clients {
        return Err(Error::config(format!(
            "{} client states for num_clients = {}",
            clients.len(),
            cfg.num_clients
        )));
    }
    if let Some(k) = template.num_clients() {
        if k != cfg.num_clients {
            return Err(Error::config(format!(
                "model conditions on {k} clients, config has {}",
                cfg.num_clients
            )));
        }
    }
    let classes = template.task().num_classes();
    for (i, c) in clients.iter().enumerate() {
        if c.client_id() != i {
            return Err(Error::config(format!(
                "client state {i} carries id {}",
                c.client_id()
            )));
        }
        if c.train().is_empty() {
            return Err(Error::config(format!("client {i} has no training data")));
        }
        for ds in [c.train(), c.validation()] {
            if !ds.is_empty() && ds.dim() != template.input_dim() {
                return Err(Error::dim(format!(
                    "client {i} has {} features, model expects {}",
                    ds.dim(),
                    template.input_dim()
                )));
            }
            if let Some((index, &label)) =
                ds.labels().iter().enumerate().find(|(_, &l)| l >= classes)
            {
                return Err(Error::Label {
                    index,
                    label,
                    num_classes: classes,
                });
            }
        }
    }
    if clients.iter().all(|c| c.validation().is_empty()) {
        return Err(Error::InsufficientData(
            "no client has validation samples".into(),
        ));
    }
    Ok(())
}

/// Up to `local_steps` SGD steps over one seeded shuffle of the client's
/// data, stopping after one epoch. Returns the mean batch loss.
fn local_training(
    model: &mut ClassifierModel,
    client: &mut ClientState,
    cfg: &FederatedConfig,
    round: usize,
) -> Result<f64> {
    let mut rng = child_rng(cfg.seed, "local", &[round as u64, client.client_id as u64]);
    let train = &client.train;
    let momentum = &mut client.momentum;
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut rng);
    let h = ClientOneHot::new(client.client_id, cfg.num_clients)?;
    let mut total = 0.0;
    let mut steps = 0;
    for chunk in order.chunks(cfg.batch_size).take(cfg.local_steps) {
        let mut idx = chunk.to_vec();
        idx.sort_unstable();
        let x = train.features().select_rows(&idx);
        let y: Vec<usize> = idx.iter().map(|&i| train.labels()[i]).collect();
        let (loss, grads) =
            model.loss_and_gradients(&x, &y, h, Some(&mut rng as &mut dyn RngCore))?;
        sgd_step(model, &grads, cfg.learning_rate, momentum.as_mut())?;
        total += loss;
        steps += 1;
    }
    Ok(total / steps as f64)
}

/// Pooled validation cross-entropy and metric over every client's
/// validation slice.
fn pooled_validation(
    model: &ClassifierModel,
    clients: &[ClientState],
    cfg: &FederatedConfig,
) -> Result<(f64, f64)> {
    let task = model.task();
    let mut logit_parts = Vec::new();
    let mut labels = Vec::new();
    let mut loss_sum = 0.0;
    for c in clients.iter().filter(|c| !c.validation().is_empty()) {
        let val = c.validation();
        let logits = model.predict(val.features(), ClientOneHot::new(c.client_id(), cfg.num_clients)?)?;
        let (loss, _) = cross_entropy(&logits, val.labels(), task)?;
        loss_sum += loss * val.len() as f64;
        labels.extend_from_slice(val.labels());
        logit_parts.push(logits);
    }
    let refs: Vec<&Matrix> = logit_parts.iter().collect();
    let pooled = Matrix::vstack(&refs)?;
    let metric = cfg.metric.score(&pooled, &labels, task)?;
    Ok((loss_sum / labels.len() as f64, metric))
}

/// Runs FedAvg from `template`. See [`run_federated_observed`].
pub fn run_federated(
    template: &ClassifierModel,
    clients: &mut [ClientState],
    cfg: &FederatedConfig,
) -> Result<FederatedOutcome> {
    run_federated_observed(template, clients, cfg, &mut |_, _| {})
}

/// Runs FedAvg from `template`, calling `observer` after every round with the
/// round record and the full model (global shared parameters plus every
/// client's current conditioning rows).
///
/// Clients whose conditioning rows are still unset take them from the
/// template's rows. Sampled clients train in parallel; the server reduces
/// their results in ascending client order, so runs are bit-reproducible.
pub fn run_federated_observed(
    template: &ClassifierModel,
    clients: &mut [ClientState],
    cfg: &FederatedConfig,
    observer: &mut dyn FnMut(&RoundRecord, &ClassifierModel),
) -> Result<FederatedOutcome> {
    check_setup(template, clients, cfg)?;
    for c in clients.iter_mut() {
        if template.is_conditioned() && c.conditioning.is_empty() {
            c.load_rows(template);
        }
        c.momentum = match cfg.momentum {
            Some(m) => Some(MomentumState::new(m.coefficient)?),
            None => None,
        };
    }
    let mut global = template.clone();
    zero_conditioning(&mut global);

    let k = cfg.num_clients;
    let mut records = Vec::with_capacity(cfg.rounds);
    let mut best: Option<(usize, f64, f64, ClassifierModel)> = None;
    for round in 1..=cfg.rounds {
        let mut selected = vec![false; k];
        if cfg.clients_per_round == k {
            selected.fill(true);
        } else {
            let mut rng = child_rng(cfg.seed, "sample", &[round as u64]);
            for i in rand::seq::index::sample(&mut rng, k, cfg.clients_per_round) {
                selected[i] = true;
            }
        }

        let reset = cfg.momentum.is_some_and(|m| m.reset_each_round);
        let global_ref = &global;
        let results: Vec<Option<Result<(ClassifierModel, f64)>>> = clients
            .par_iter_mut()
            .zip(selected.par_iter())
            .map(|(client, &chosen)| {
                if !chosen {
                    return None;
                }
                Some((|| {
                    let mut local = global_ref.clone();
                    client.store_rows(&mut local);
                    if reset {
                        if let Some(m) = client.momentum.as_mut() {
                            m.reset();
                        }
                    }
                    let loss = local_training(&mut local, client, cfg, round)?;
                    client.load_rows(&local);
                    client.times_sampled += 1;
                    Ok((local, loss))
                })())
            })
            .collect();

        let mut participants = Vec::new();
        let mut locals = Vec::new();
        let mut losses = Vec::new();
        let mut weights = Vec::new();
        for (i, r) in results.into_iter().enumerate() {
            if let Some(r) = r {
                let (model, loss) = r?;
                participants.push(i);
                locals.push(model);
                losses.push(loss);
                weights.push(match cfg.averaging {
                    Averaging::Uniform => 1.0,
                    Averaging::SampleWeighted => clients[i].train().len() as f64,
                });
            }
        }
        let refs: Vec<&ClassifierModel> = locals.iter().collect();
        global = average_shared(&refs, &weights)?;
        zero_conditioning(&mut global);

        let mut full = global.clone();
        for c in clients.iter() {
            c.store_rows(&mut full);
        }
        let (val_loss, val_metric) = pooled_validation(&full, clients, cfg)?;
        let record = RoundRecord {
            round,
            mean_client_train_loss: losses.iter().sum::<f64>() / losses.len() as f64,
            participants,
            client_train_loss: losses,
            val_loss,
            val_metric,
        };
        observer(&record, &full);
        if best.as_ref().is_none_or(|b| val_loss < b.1) {
            best = Some((round, val_loss, val_metric, full.clone()));
        }
        records.push(record);
    }

    let mut final_model = global;
    for c in clients.iter() {
        c.store_rows(&mut final_model);
    }
    let (best_round, best_val_loss, best_val_metric, best_model) =
        best.expect("at least one round ran");
    Ok(FederatedOutcome {
        best_model,
        best_round,
        best_val_loss,
        best_val_metric,
        final_model,
        records,
    })
}

/// Per-round CSV: `round,mean_client_train_loss,val_loss,val_metric`.
pub fn write_rounds_csv<W: Write>(records: &[RoundRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["round", "mean_client_train_loss", "val_loss", "val_metric"])?;
    for r in records {
        w.write_record([
            r.round.to_string(),
            r.mean_client_train_loss.to_string(),
            r.val_loss.to_string(),
            r.val_metric.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{CgauLayer, DenseLayer, HiddenLayer, Task};

    fn scalar(v: f64) -> ClassifierModel {
        let head = DenseLayer {
            weight: Matrix::from_vec(1, 1, vec![v]).unwrap(),
            bias: Matrix::zeros(1, 1),
        };
        ClassifierModel::new(vec![], head, Task::Binary, 0.0).unwrap()
    }

    fn value(m: &ClassifierModel) -> f64 {
        m.output().weight[(0, 0)]
    }

    #[test]
    fn uniform_and_weighted_means() {
        let (a, b) = (scalar(0.0), scalar(4.0));
        assert_eq!(value(&average_shared(&[&a, &b], &[1.0, 1.0]).unwrap()), 2.0);
        assert_eq!(value(&average_shared(&[&a, &b], &[1.0, 3.0]).unwrap()), 3.0);
        assert_eq!(value(&average_shared(&[&a, &b], &[1.0, 0.0]).unwrap()), 0.0);
    }

    #[test]
    fn identical_inputs_are_fixed_points() {
        let a = scalar(0.1 + 0.2);
        let avg = average_shared(&[&a, &a, &a], &[0.3, 1.7, 2.9]).unwrap();
        assert_eq!(value(&avg).to_bits(), value(&a).to_bits());
    }

    #[test]
    fn conditioning_is_not_averaged() {
        let mut layer = CgauLayer::zeros(1, 1, 2);
        let make = |v: f64, layer: &mut CgauLayer| {
            layer.v_filter.fill(v);
            layer.w_filter.fill(v);
            ClassifierModel::new(
                vec![HiddenLayer::Cgau(layer.clone())],
                DenseLayer::zeros(1, 1),
                Task::Binary,
                0.0,
            )
            .unwrap()
        };
        let a = make(1.0, &mut layer);
        let b = make(5.0, &mut layer);
        let avg = average_shared(&[&a, &b], &[1.0, 1.0]).unwrap();
        let HiddenLayer::Cgau(l) = &avg.hidden()[0] else {
            unreachable!()
        };
        assert_eq!(l.w_filter[(0, 0)], 3.0);
        assert_eq!(l.v_filter[(0, 0)], 1.0);
    }

    #[test]
    fn bad_weights() {
        let a = scalar(1.0);
        assert!(average_shared(&[&a], &[0.0]).is_err());
        assert!(average_shared(&[&a], &[-1.0]).is_err());
        assert!(average_shared(&[&a, &a], &[1.0]).is_err());
        assert!(average_shared(&[], &[]).is_err());
    }
}
