//! Training phases: joint baseline fit, diagonal-gamma fit with the encoder
//! frozen, and head refit on steered features.

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nn::{Acts, Dims, Encoder, Head, Plan};
use super::steer::{BankActivations, Query};
use super::{transform, GammaMode, Model, Steering, SteeringConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub query: Query,
    /// (WNS, TNS) in ps.
    pub target: [f64; 2],
}

impl Sample {
    fn t(&self) -> [f64; 2] {
        [transform(self.target[0]), transform(self.target[1])]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub dims: Dims,
    pub lr: f64,
    pub batch: usize,
    pub max_epochs: usize,
    /// Epochs without a relative improvement above `tol` before stopping.
    pub patience: usize,
    pub tol: f64,
    /// Held-out share for early stopping of the baseline.
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            dims: Dims::default(),
            lr: 1e-3,
            batch: 32,
            max_epochs: 500,
            patience: 20,
            tol: 1e-6,
            val_fraction: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub phase: String,
    pub epochs: usize,
    /// Training MSE in transformed space before and after the phase.
    pub initial_loss: f64,
    pub final_loss: f64,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    fn new(n: usize, lr: f64) -> Adam {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, p: &mut [f64], g: &[f64]) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        for i in 0..p.len() {
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * g[i];
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * g[i] * g[i];
            p[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + 1e-8);
        }
    }
}

fn sq_err(y: [f64; 2], t: [f64; 2]) -> f64 {
    (y[0] - t[0]).powi(2) + (y[1] - t[1]).powi(2)
}

/// Runs epochs of `step` over shuffled mini-batches of `0..n`, keeping the
/// state with the lowest `monitor` value (the initial state included).
#[allow(clippy::too_many_arguments)]
fn train_loop<S: Clone>(
    state: &mut S,
    n: usize,
    hp: &TrainParams,
    rng: &mut ChaCha8Rng,
    phase: &'static str,
    mut step: impl FnMut(&mut S, &[usize]),
    mut monitor: impl FnMut(&S) -> f64,
    to_model: impl Fn(&S) -> Model,
) -> Result<usize> {
    let mut best = monitor(state);
    if !best.is_finite() {
        return Err(Error::Divergence {
            phase,
            epoch: 0,
            last_good: Box::new(to_model(state)),
        });
    }
    let mut best_state = state.clone();
    let mut order: Vec<usize> = (0..n).collect();
    let mut stale = 0;
    let mut epochs = 0;
    for epoch in 1..=hp.max_epochs {
        epochs = epoch;
        order.shuffle(rng);
        for batch in order.chunks(hp.batch.max(1)) {
            step(state, batch);
        }
        let loss = monitor(state);
        if !loss.is_finite() {
            return Err(Error::Divergence {
                phase,
                epoch,
                last_good: Box::new(to_model(&best_state)),
            });
        }
        if loss < best {
            if loss < best - hp.tol * best.abs() {
                stale = 0;
            } else {
                stale += 1;
            }
            best = loss;
            best_state = state.clone();
        } else {
            stale += 1;
        }
        if stale >= hp.patience {
            break;
        }
    }
    *state = best_state;
    Ok(epochs)
}

fn mean_std(xs: &[&[f64]], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = xs.len() as f64;
    let mut mean = vec![0.0; dim];
    for x in xs {
        for j in 0..dim {
            mean[j] += x[j] / n;
        }
    }
    let mut var = vec![0.0; dim];
    for x in xs {
        for j in 0..dim {
            var[j] += (x[j] - mean[j]).powi(2) / n;
        }
    }
    let std = var.into_iter().map(|v| if v.sqrt() > 1e-9 { v.sqrt() } else { 1.0 }).collect();
    (mean, std)
}

/// Unsteered MSE (transformed space) and gradients w.r.t. encoder and head
/// parameters over the items `idx`.
pub fn baseline_loss_grad(model: &Model, xs: &[Vec<f64>], ts: &[[f64; 2]], idx: &[usize]) -> (f64, Vec<f64>, Vec<f64>) {
    let mut ge = vec![0.0; model.encoder.params.len()];
    let mut gh = vec![0.0; model.head.params.len()];
    let scale = 1.0 / idx.len() as f64;
    let mut loss = 0.0;
    for &i in idx {
        let acts = model.encoder.forward(&xs[i]);
        let ha = model.head.forward(acts.last());
        loss += sq_err(ha.y, ts[i]);
        let gy = [(ha.y[0] - ts[i][0]) * scale, (ha.y[1] - ts[i][1]) * scale];
        let g = model.head.backward(acts.last(), &ha, gy, Some(&mut gh));
        model.encoder.backward(&acts, &[], g, 0, Some(&mut ge), None);
    }
    (loss * scale / 2.0, ge, gh)
}

/// A training item prepared for the frozen-encoder phases.
pub struct SteerItem {
    pub base: Acts,
    /// `(weight, index into the neighbour table)`.
    pub neighbors: Vec<(f64, usize)>,
    pub t: [f64; 2],
}

/// Steered MSE and gradients w.r.t. the diagonal gamma and head parameters.
pub fn steered_loss_grad(
    encoder: &Encoder,
    head: &Head,
    config: &SteeringConfig,
    gamma: &[f64],
    items: &[SteerItem],
    table: &[&Acts],
    idx: &[usize],
) -> (f64, Vec<f64>, Vec<f64>) {
    let mut gg = vec![0.0; gamma.len()];
    let mut gh = vec![0.0; head.params.len()];
    let first = config.injections.iter().map(|i| i.block).min().unwrap_or(encoder.dims.blocks);
    let scale = 1.0 / idx.len() as f64;
    let mut loss = 0.0;
    for &i in idx {
        let it = &items[i];
        let plan = Plan {
            injections: &config.injections,
            gamma,
            neighbors: it.neighbors.iter().map(|&(w, j)| (w, table[j])).collect(),
        };
        let acts = encoder.forward_steered(&it.base, &plan);
        let ha = head.forward(acts.last());
        loss += sq_err(ha.y, it.t);
        let gy = [(ha.y[0] - it.t[0]) * scale, (ha.y[1] - it.t[1]) * scale];
        let g = head.backward(acts.last(), &ha, gy, Some(&mut gh));
        encoder.backward(&acts, gamma, g, first, None, Some(&mut gg));
    }
    (loss * scale / 2.0, gg, gh)
}

fn head_mse(head: &Head, feats: &[Vec<f64>], ts: &[[f64; 2]]) -> f64 {
    let s: f64 = feats.iter().zip(ts).map(|(f, t)| sq_err(head.forward(f).y, *t)).sum();
    s / (2.0 * feats.len() as f64)
}

/// Joint encoder + head fit on unsteered features with early stopping on a
/// held-out share of `train`.
pub fn fit_baseline(train: &[Sample], hp: &TrainParams) -> Result<(Model, FitReport)> {
    if train.is_empty() {
        return Err(Error::BadConfig("training set is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let dims = hp.dims;
    let xs: Vec<Vec<f64>> = train.iter().map(|s| s.query.x.clone()).collect();
    let ts: Vec<[f64; 2]> = train.iter().map(Sample::t).collect();
    let mut encoder = Encoder::init(dims, &mut rng);
    let (shift, scale) = mean_std(&xs.iter().map(Vec::as_slice).collect::<Vec<_>>(), dims.input);
    encoder.shift = shift;
    encoder.scale = scale;
    let n = train.len() as f64;
    let bias = [ts.iter().map(|t| t[0]).sum::<f64>() / n, ts.iter().map(|t| t[1]).sum::<f64>() / n];
    let head = Head::init(dims.hidden, dims.head_hidden, bias, &mut rng);
    let mut model = Model {
        encoder,
        head,
        steering: None,
        bank_checksum: None,
    };

    let mut perm: Vec<usize> = (0..train.len()).collect();
    perm.shuffle(&mut rng);
    let n_val = if train.len() >= 10 {
        (train.len() as f64 * hp.val_fraction).round() as usize
    } else {
        0
    };
    let (val, fit) = perm.split_at(n_val);
    let (val, fit) = (val.to_vec(), fit.to_vec());
    let all: Vec<usize> = (0..train.len()).collect();
    let initial_loss = baseline_loss_grad(&model, &xs, &ts, &all).0;

    let mut opt_e = Adam::new(model.encoder.params.len(), hp.lr);
    let mut opt_h = Adam::new(model.head.params.len(), hp.lr);
    let monitor_set = if val.is_empty() { fit.clone() } else { val.clone() };
    let epochs = train_loop(
        &mut model,
        fit.len(),
        hp,
        &mut rng,
        "fit_baseline",
        |m, batch| {
            let idx: Vec<usize> = batch.iter().map(|&b| fit[b]).collect();
            let (_, ge, gh) = baseline_loss_grad(m, &xs, &ts, &idx);
            opt_e.step(&mut m.encoder.params, &ge);
            opt_h.step(&mut m.head.params, &gh);
        },
        |m| mse_plain(m, &xs, &ts, &monitor_set),
        |m| m.clone(),
    )?;
    let final_loss = baseline_loss_grad(&model, &xs, &ts, &all).0;
    Ok((
        model,
        FitReport {
            phase: "fit_baseline".into(),
            epochs,
            initial_loss,
            final_loss,
        },
    ))
}

fn mse_plain(m: &Model, xs: &[Vec<f64>], ts: &[[f64; 2]], idx: &[usize]) -> f64 {
    let s: f64 = idx.iter().map(|&i| sq_err(m.head.forward(m.encoder.forward(&xs[i]).last()).y, ts[i])).sum();
    s / (2.0 * idx.len() as f64)
}

/// Neighbour activations for every operating point in `train`, flattened;
/// [`prepare_items`] indexes into this table.
pub fn neighbor_table(model: &Model, view: &BankActivations, train: &[Sample]) -> (Vec<Arc<Vec<Acts>>>, HashMap<(u64, u64), usize>) {
    let mut tables = Vec::new();
    let mut offsets = HashMap::new();
    let mut next = 0;
    for s in train {
        let key = op_key(&s.query.x);
        if let std::collections::hash_map::Entry::Vacant(e) = offsets.entry(key) {
            e.insert(next);
            let t = view.table(model, &s.query.x);
            next += t.len();
            tables.push(t);
        }
    }
    (tables, offsets)
}

fn op_key(x: &[f64]) -> (u64, u64) {
    (x[x.len() - 2].to_bits(), x[x.len() - 1].to_bits())
}

/// Retrieves neighbours for every training item and caches its unsteered pass.
pub fn prepare_items(
    model: &Model,
    view: &BankActivations,
    offsets: &HashMap<(u64, u64), usize>,
    train: &[Sample],
    k: usize,
) -> Result<Vec<SteerItem>> {
    train
        .par_iter()
        .map(|s| {
            let set = match &s.query.id {
                Some(id) => view.bank().self_exclusion(id, &s.query.fingerprint, k)?,
                None => view.bank().retrieve(&s.query.fingerprint, k)?,
            };
            let off = offsets[&op_key(&s.query.x)];
            Ok(SteerItem {
                base: model.encode(&s.query.x)?,
                neighbors: set.neighbors.iter().map(|n| (n.weight, off + n.index)).collect(),
                t: s.t(),
            })
        })
        .collect()
}

/// Attaches steering to a baseline. Scalar mode takes gamma from the
/// config; diagonal mode learns gamma (from zero) jointly with the head
/// while the encoder stays frozen.
pub fn fit_gamma(
    model: &Model,
    view: &BankActivations,
    train: &[Sample],
    config: &SteeringConfig,
    hp: &TrainParams,
) -> Result<(Model, FitReport)> {
    let d = model.encoder.dims.hidden;
    config.validate(model.encoder.dims.blocks)?;
    let mut out = model.clone();
    out.bank_checksum = Some(view.bank().checksum());
    let gamma = match config.gamma {
        GammaMode::Scalar { gamma } => vec![gamma; d],
        GammaMode::Diagonal => vec![0.0; d],
    };
    out.steering = Some(Steering {
        config: config.clone(),
        gamma,
    });
    if let GammaMode::Scalar { .. } = config.gamma {
        let loss = train_mse(&out, Some(view), train)?;
        return Ok((
            out,
            FitReport {
                phase: "fit_gamma".into(),
                epochs: 0,
                initial_loss: loss,
                final_loss: loss,
            },
        ));
    }

    let (tables, offsets) = neighbor_table(model, view, train);
    let table: Vec<&Acts> = tables.iter().flat_map(|t| t.iter()).collect();
    let items = prepare_items(model, view, &offsets, train, config.k)?;
    let all: Vec<usize> = (0..items.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed ^ 0x6a77);
    let encoder = &model.encoder;
    let mut state = (vec![0.0; d], model.head.clone());
    let initial_loss = steered_loss_grad(encoder, &state.1, config, &state.0, &items, &table, &all).0;
    let mut opt_g = Adam::new(d, hp.lr);
    let mut opt_h = Adam::new(state.1.params.len(), hp.lr);
    let epochs = train_loop(
        &mut state,
        items.len(),
        hp,
        &mut rng,
        "fit_gamma",
        |(g, h), batch| {
            let (_, gg, gh) = steered_loss_grad(encoder, h, config, g, &items, &table, batch);
            opt_g.step(g, &gg);
            opt_h.step(&mut h.params, &gh);
        },
        |(g, h)| steered_loss_grad(encoder, h, config, g, &items, &table, &all).0,
        |(g, h)| {
            let mut m = out.clone();
            m.head = h.clone();
            m.steering.as_mut().expect("set above").gamma = g.clone();
            m
        },
    )?;
    let (gamma, head) = state;
    let final_loss = steered_loss_grad(encoder, &head, config, &gamma, &items, &table, &all).0;
    out.head = head;
    out.steering.as_mut().expect("set above").gamma = gamma;
    Ok((
        out,
        FitReport {
            phase: "fit_gamma".into(),
            epochs,
            initial_loss,
            final_loss,
        },
    ))
}

/// Final-block features for every sample, steered when the model is.
pub fn steered_features(model: &Model, view: Option<&BankActivations>, samples: &[Sample]) -> Result<Vec<Vec<f64>>> {
    samples.par_iter().map(|s| model.features(view, &s.query)).collect()
}

/// Training MSE in transformed space with the model's current head.
pub fn train_mse(model: &Model, view: Option<&BankActivations>, samples: &[Sample]) -> Result<f64> {
    let feats = steered_features(model, view, samples)?;
    let ts: Vec<[f64; 2]> = samples.iter().map(Sample::t).collect();
    Ok(head_mse(&model.head, &feats, &ts))
}

/// Refits only the head on steered features. The result never has a
/// higher training loss than the head it started from.
pub fn refit_head(model: &Model, view: Option<&BankActivations>, train: &[Sample], hp: &TrainParams) -> Result<(Model, FitReport)> {
    refit_head_monitored(model, view, train, &[], hp)
}

/// As [`refit_head`], but keeps the head with the lowest MSE on `monitor`
/// (on `train` itself when `monitor` is empty).
pub fn refit_head_monitored(
    model: &Model,
    view: Option<&BankActivations>,
    train: &[Sample],
    monitor: &[Sample],
    hp: &TrainParams,
) -> Result<(Model, FitReport)> {
    if train.is_empty() {
        return Err(Error::BadConfig("training set is empty".into()));
    }
    let enc_before = model.encoder_checksum();
    let gamma_before = model.gamma_checksum();
    let feats = steered_features(model, view, train)?;
    let ts: Vec<[f64; 2]> = train.iter().map(Sample::t).collect();
    let (mon_feats, mon_ts) = if monitor.is_empty() {
        (feats.clone(), ts.clone())
    } else {
        (steered_features(model, view, monitor)?, monitor.iter().map(Sample::t).collect())
    };
    let mut head = model.head.clone();
    let initial_loss = head_mse(&head, &feats, &ts);
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed ^ 0x4e4d);
    let mut opt = Adam::new(head.params.len(), hp.lr);
    let scale = |n: usize| 1.0 / n as f64;
    let epochs = train_loop(
        &mut head,
        train.len(),
        hp,
        &mut rng,
        "refit_head",
        |h, batch| {
            let mut g = vec![0.0; h.params.len()];
            let s = scale(batch.len());
            for &i in batch {
                let ha = h.forward(&feats[i]);
                let gy = [(ha.y[0] - ts[i][0]) * s, (ha.y[1] - ts[i][1]) * s];
                h.backward(&feats[i], &ha, gy, Some(&mut g));
            }
            opt.step(&mut h.params, &g);
        },
        |h| head_mse(h, &mon_feats, &mon_ts),
        |h| {
            let mut m = model.clone();
            m.head = h.clone();
            m
        },
    )?;
    let mut out = model.clone();
    out.head = head;
    let final_loss = head_mse(&out.head, &feats, &ts);
    if out.encoder_checksum() != enc_before || out.gamma_checksum() != gamma_before {
        return Err(Error::AdaptationViolation("encoder or gamma changed during head refit".into()));
    }
    Ok((
        out,
        FitReport {
            phase: "refit_head".into(),
            epochs,
            initial_loss,
            final_loss,
        },
    ))
}
