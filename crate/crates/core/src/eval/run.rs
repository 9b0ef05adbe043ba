//! Training orchestration: baseline, then steering fit, then head refit.

use serde::{Deserialize, Serialize};

use crate::bank::Bank;
use crate::model::{fit_baseline, fit_gamma, refit_head, BankActivations, FitReport, Model, Sample, SteeringConfig, TrainParams};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trained {
    pub baseline: Model,
    pub steered: Model,
    pub reports: Vec<FitReport>,
}

/// Enables `config` on a trained baseline and refits the head on the
/// steered features.
pub fn steer_model(
    baseline: &Model,
    view: &BankActivations,
    train: &[Sample],
    config: &SteeringConfig,
    hp: &TrainParams,
) -> Result<(Model, Vec<FitReport>)> {
    let (g, r1) = fit_gamma(baseline, view, train, config, hp)?;
    let (m, r2) = refit_head(&g, Some(view), train, hp)?;
    Ok((m, vec![r1, r2]))
}

pub fn train_pipeline(train: &[Sample], bank: &Bank, config: &SteeringConfig, hp: &TrainParams) -> Result<Trained> {
    let (baseline, r0) = fit_baseline(train, hp)?;
    let view = BankActivations::new(&baseline, bank);
    let (steered, mut reports) = steer_model(&baseline, &view, train, config, hp)?;
    reports.insert(0, r0);
    Ok(Trained {
        baseline,
        steered,
        reports,
    })
}
