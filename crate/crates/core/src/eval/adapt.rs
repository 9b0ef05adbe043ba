//! Head-only adaptation to a new library or corner.

use slackcast_oracle::CellLibrary;

use super::data::{Dataset, InputKind, OperatingPoint};
use crate::bank::Bank;
use crate::corpus::gen::gate_bin;
use crate::corpus::sample::sample_by_cell;

use crate::model::{steered_features, transform, BankActivations, FitReport, Model, Sample, TrainParams};
use crate::{Error, Result};

pub const DEFAULT_N_ADAPT: usize = 200;

/// Picks `n` ids from `pool` stratified by gate-count bin and logic depth,
/// without looking at any timing label.
pub fn select_adaptation_set(ds: &Dataset, pool: &[String], n: usize, seed: u64) -> Result<Vec<String>> {
    let keyed = pool
        .iter()
        .map(|id| {
            let a = &ds.record(id)?.annotation;
            Ok((id.as_str(), (gate_bin(a.gates), slackcast_stage1::phi::depth_bin(a.depth))))
        })
        .collect::<Result<Vec<_>>>()?;
    sample_by_cell(&keyed, |_| 1.0, n.min(keyed.len()), seed)
}

fn frozen_state(model: &Model, bank: &Bank) -> (String, String, String, Option<String>) {
    (
        model.encoder_checksum(),
        model.gamma_checksum(),
        bank.checksum(),
        model.bank_checksum.clone(),
    )
}

fn mse(ys: &[[f64; 2]], ts: &[[f64; 2]]) -> f64 {
    let sum: f64 = ys.iter().zip(ts).map(|(y, t)| (y[0] - t[0]).powi(2) + (y[1] - t[1]).powi(2)).sum();
    sum / (2 * ys.len()).max(1) as f64
}

/// Least-squares `(a, c)` with `t ~ a * y + c`; `(1, mean(t - y))` when `y`
/// has no spread.
fn affine_fit(y: &[f64], t: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let (my, mt) = (y.iter().sum::<f64>() / n, t.iter().sum::<f64>() / n);
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let syt: f64 = y.iter().zip(t).map(|(a, b)| (a - my) * (b - mt)).sum();
    if syy <= f64::EPSILON * n {
        return (1.0, mt - my);
    }
    let a = syt / syy;
    (a, mt - a * my)
}

/// Refits only the head on `samples` (labels at the new setting) by
/// recalibrating its output layer: each output's weights and bias are
/// mapped through the least-squares affine map from the stale prediction
/// to the new target. The encoder, gamma, steering config and bank are
/// verified unchanged.
pub fn adapt_head(model: &Model, bank: &Bank, samples: &[Sample], _hp: &TrainParams) -> Result<(Model, FitReport)> {
    if let Some(expected) = &model.bank_checksum {
        if *expected != bank.checksum() {
            return Err(Error::AdaptationViolation(
                "bank differs from the one the model was trained against".into(),
            ));
        }
    }
    if samples.len() < 2 {
        return Err(Error::BadConfig("adaptation needs at least two samples".into()));
    }
    let before = frozen_state(model, bank);
    let view = model.steering.as_ref().map(|_| BankActivations::new(model, bank));
    let ys: Vec<[f64; 2]> = steered_features(model, view.as_ref(), samples)?
        .iter()
        .map(|f| model.head_output(f))
        .collect();
    let ts: Vec<[f64; 2]> = samples.iter().map(|s| [transform(s.target[0]), transform(s.target[1])]).collect();

    let mut out = model.clone();
    let (n, k) = (model.head.input, model.head.hidden);
    let o = k * n + k;
    for j in 0..2 {
        let y: Vec<f64> = ys.iter().map(|v| v[j]).collect();
        let t: Vec<f64> = ts.iter().map(|v| v[j]).collect();
        let (a, c) = affine_fit(&y, &t);
        let p = &mut out.head.params;
        p[o + j * k..o + (j + 1) * k].iter_mut().for_each(|w| *w *= a);
        p[o + 2 * k + j] = a * p[o + 2 * k + j] + c;
    }
    let adapted: Vec<[f64; 2]> = steered_features(&out, view.as_ref(), samples)?
        .iter()
        .map(|f| out.head_output(f))
        .collect();
    if frozen_state(&out, bank) != before || out.steering.as_ref().map(|s| &s.config) != model.steering.as_ref().map(|s| &s.config) {
        return Err(Error::AdaptationViolation("frozen state changed during adaptation".into()));
    }
    Ok((
        out,
        FitReport {
            phase: "adapt_head".into(),
            epochs: 1,
            initial_loss: mse(&ys, &ts),
            final_loss: mse(&adapted, &ts),
        },
    ))
}

/// Selects `n_adapt` training modules, labels them with the oracle at
/// `point` under `lib`, and adapts the head.
pub fn adapt_on_dataset(
    model: &Model,
    bank: &Bank,
    ds: &Dataset,
    lib: &CellLibrary,
    point: &OperatingPoint,
    n_adapt: usize,
    hp: &TrainParams,
) -> Result<(Model, FitReport, Vec<String>)> {
    let ids = select_adaptation_set(ds, &ds.manifest.train, n_adapt, hp.seed)?;
    let relabeled = Dataset {
        lib: lib.clone(),
        ..ds.clone()
    };
    let samples = relabeled.samples(&ids, point, InputKind::Stage1)?;
    let (m, r) = adapt_head(model, bank, &samples, hp)?;
    Ok((m, r, ids))
}
