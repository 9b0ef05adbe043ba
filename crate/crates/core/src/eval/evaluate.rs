//! Test-split evaluation with JSON and CSV outputs.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::TargetResult;
use crate::model::{BankActivations, Model, Query, Sample};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub y_wns: f64,
    pub yhat_wns: f64,
    pub y_tns: f64,
    pub yhat_tns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub id: String,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub wns: TargetResult,
    pub tns: TargetResult,
    /// Modules whose prediction failed; counted in each target's `n_excluded`.
    pub failed: Vec<Failure>,
}

/// Scores `(id, label, prediction-or-error)` triples.
pub fn score(rows: Vec<(String, [f64; 2], Result<(f64, f64)>)>) -> (EvalResult, Vec<Prediction>) {
    let mut preds = Vec::new();
    let mut failed = Vec::new();
    for (id, y, p) in rows {
        match p {
            Ok((w, t)) => preds.push(Prediction {
                id,
                y_wns: y[0],
                yhat_wns: w,
                y_tns: y[1],
                yhat_tns: t,
            }),
            Err(e) => failed.push(Failure {
                id,
                code: e.code().to_string(),
            }),
        }
    }
    let col = |f: fn(&Prediction) -> f64| preds.iter().map(f).collect::<Vec<f64>>();
    let mut wns = TargetResult::compute(&col(|p| p.y_wns), &col(|p| p.yhat_wns));
    let mut tns = TargetResult::compute(&col(|p| p.y_tns), &col(|p| p.yhat_tns));
    wns.n_excluded += failed.len();
    tns.n_excluded += failed.len();
    (EvalResult { wns, tns, failed }, preds)
}

/// Predicts every test sample (without self-exclusion) and scores it.
pub fn evaluate(model: &Model, view: Option<&BankActivations>, test: &[Sample]) -> (EvalResult, Vec<Prediction>) {
    let rows = test
        .par_iter()
        .map(|s| {
            let q = Query {
                id: None,
                ..s.query.clone()
            };
            let id = s.query.id.clone().unwrap_or_default();
            (id, s.target, model.predict(view, &q))
        })
        .collect();
    score(rows)
}

pub fn predictions_csv(preds: &[Prediction]) -> String {
    let mut s = String::from("id,y_wns,yhat_wns,y_tns,yhat_tns\n");
    for p in preds {
        let _ = writeln!(s, "{},{},{},{},{}", p.id, p.y_wns, p.yhat_wns, p.y_tns, p.yhat_tns);
    }
    s
}

/// Writes `result.json` and `predictions.csv` into `dir`.
pub fn write_eval(dir: &Path, result: &EvalResult, preds: &[Prediction]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    crate::jsonl::write_json(&dir.join("result.json"), result)?;
    let p = dir.join("predictions.csv");
    std::fs::write(&p, predictions_csv(preds)).map_err(|e| Error::io(&p, e))
}
