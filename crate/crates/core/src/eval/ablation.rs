//! Ablation grids over k, gamma, injection layer, budget split and
//! pipeline stages, reported as mean and standard deviation over seeds.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::data::{Dataset, InputKind};
use super::evaluate::{evaluate, score, EvalResult};
use super::run::steer_model;
use crate::model::{fit_baseline, BankActivations, GammaMode, Injection, SteeringConfig, TrainParams};
use crate::{Error, Result};

pub const K_GRID: [usize; 4] = [1, 2, 3, 5];
pub const GAMMA_GRID: [f64; 6] = [0.02, 0.05, 0.10, 0.20, 0.30, 0.40];
pub const LAYER_GRID: [usize; 5] = [2, 4, 6, 7, 8];
/// (later block, earlier block, share at the later block).
pub const ALPHA_GRID: [(usize, usize, f64); 5] = [(8, 7, 1.0), (8, 7, 0.75), (8, 7, 0.5), (8, 6, 0.75), (7, 4, 0.75)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    K,
    Gamma,
    Layer,
    Alpha,
    StageRemoval,
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "k" => Axis::K,
            "gamma" => Axis::Gamma,
            "layer" => Axis::Layer,
            "alpha" => Axis::Alpha,
            "stage-removal" => Axis::StageRemoval,
            _ => return Err(Error::BadConfig(format!("unknown ablation axis `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellKind {
    Steered(SteeringConfig),
    Stage1Only,
    Stage2Only,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub label: String,
    pub kind: CellKind,
}

/// The cells of `axis`; steered cells vary one field of `base`.
pub fn grid(axis: Axis, base: &SteeringConfig) -> Vec<Cell> {
    let steered = |label: String, c: SteeringConfig| Cell {
        label,
        kind: CellKind::Steered(c),
    };
    match axis {
        Axis::K => K_GRID
            .iter()
            .map(|&k| steered(format!("k={k}"), SteeringConfig { k, ..base.clone() }))
            .collect(),
        Axis::Gamma => GAMMA_GRID
            .iter()
            .map(|&g| {
                steered(
                    format!("gamma={g:.2}"),
                    SteeringConfig {
                        gamma: GammaMode::Scalar { gamma: g },
                        ..base.clone()
                    },
                )
            })
            .chain(std::iter::once(steered(
                "gamma=diagonal".into(),
                SteeringConfig {
                    gamma: GammaMode::Diagonal,
                    ..base.clone()
                },
            )))
            .collect(),
        Axis::Layer => LAYER_GRID
            .iter()
            .map(|&b| {
                steered(
                    format!("block={b}"),
                    SteeringConfig {
                        injections: vec![Injection { block: b, share: 1.0 }],
                        ..base.clone()
                    },
                )
            })
            .collect(),
        Axis::Alpha => ALPHA_GRID
            .iter()
            .map(|&(l, e, a)| {
                let mut c = SteeringConfig::split(base.k, l, e, a);
                c.gamma = base.gamma.clone();
                steered(format!("({l},{e}) alpha={a:.2}"), c)
            })
            .collect(),
        Axis::StageRemoval => vec![
            Cell {
                label: "stage1-only".into(),
                kind: CellKind::Stage1Only,
            },
            Cell {
                label: "stage2-only".into(),
                kind: CellKind::Stage2Only,
            },
            steered("full".into(), base.clone()),
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub result: Option<EvalResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    /// Sample mean and (n - 1) standard deviation; `None` if empty.
    pub fn of(values: &[f64]) -> Option<MeanStd> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(MeanStd { mean, std, n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub seeds: Vec<SeedResult>,
    pub r_wns: Option<MeanStd>,
    pub mape_wns: Option<MeanStd>,
    pub r_tns: Option<MeanStd>,
    pub mape_tns: Option<MeanStd>,
}

impl AblationRow {
    fn new(label: String, seeds: Vec<SeedResult>) -> Self {
        let col = |f: fn(&EvalResult) -> Option<f64>| {
            let v: Vec<f64> = seeds.iter().filter_map(|s| s.result.as_ref().and_then(f)).collect();
            MeanStd::of(&v)
        };
        AblationRow {
            r_wns: col(|r| r.wns.r),
            mape_wns: col(|r| r.wns.mape),
            r_tns: col(|r| r.tns.r),
            mape_tns: col(|r| r.tns.mape),
            label,
            seeds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub axis: Axis,
    pub rows: Vec<AblationRow>,
}

/// Runs every cell of `axis` for every seed. One baseline is trained per
/// seed and shared by its steered cells; each steered cell fits its own
/// gamma and refits the head. Cell failures are recorded, not fatal.
pub fn run_ablation(axis: Axis, base: &SteeringConfig, ds: &Dataset, seeds: &[u64], hp: &TrainParams) -> Result<AblationTable> {
    let cells = grid(axis, base);
    let point = ds.label_point();
    let train = ds.samples(&ds.manifest.train, &point, InputKind::Stage1)?;
    let test = ds.samples(&ds.manifest.test, &point, InputKind::Stage1)?;
    let bank = ds.bank()?;
    let mut per_cell: Vec<Vec<SeedResult>> = vec![Vec::new(); cells.len()];
    let stage1 = if cells.iter().any(|c| c.kind == CellKind::Stage1Only) {
        let est = ds.stage1_estimates(&ds.manifest.test, point.clock_period)?;
        let rows = test
            .iter()
            .zip(est)
            .map(|(s, e)| (s.query.id.clone().unwrap_or_default(), s.target, Ok((e[0], e[1]))))
            .collect();
        Some(score(rows).0)
    } else {
        None
    };
    let needs_stage2 = cells.iter().any(|c| c.kind == CellKind::Stage2Only);
    let (train_tok, test_tok) = if needs_stage2 {
        (
            ds.samples(&ds.manifest.train, &point, InputKind::TokenStats)?,
            ds.samples(&ds.manifest.test, &point, InputKind::TokenStats)?,
        )
    } else {
        (Vec::new(), Vec::new())
    };
    for &seed in seeds {
        let hp = TrainParams { seed, ..hp.clone() };
        let baseline = fit_baseline(&train, &hp);
        let view = baseline.as_ref().ok().map(|(m, _)| BankActivations::new(m, &bank));
        for (i, cell) in cells.iter().enumerate() {
            let outcome: Result<EvalResult> = match &cell.kind {
                CellKind::Stage1Only => Ok(stage1.clone().expect("computed above")),
                CellKind::Stage2Only => fit_baseline(&train_tok, &hp).map(|(m, _)| evaluate(&m, None, &test_tok).0),
                CellKind::Steered(config) => match (&baseline, &view) {
                    (Ok((b, _)), Some(v)) => {
                        steer_model(b, v, &train, config, &hp).map(|(m, _)| evaluate(&m, Some(v), &test).0)
                    }
                    (Err(e), _) => Err(Error::BadConfig(format!("baseline failed: {}", e.code()))),
                    _ => unreachable!("view exists whenever the baseline does"),
                },
            };
            per_cell[i].push(match outcome {
                Ok(r) => SeedResult {
                    seed,
                    result: Some(r),
                    error: None,
                },
                Err(e) => SeedResult {
                    seed,
                    result: None,
                    error: Some(e.code().to_string()),
                },
            });
        }
    }
    Ok(AblationTable {
        axis,
        rows: cells
            .into_iter()
            .zip(per_cell)
            .map(|(c, s)| AblationRow::new(c.label, s))
            .collect(),
    })
}

fn fmt_ms(m: &Option<MeanStd>, digits: usize) -> String {
    match m {
        Some(m) => format!("{:.*} ± {:.*}", digits, m.mean, digits, m.std),
        None => "n/a".into(),
    }
}

impl AblationTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("setting,r_wns_mean,r_wns_std,mape_wns_mean,mape_wns_std,r_tns_mean,r_tns_std,mape_tns_mean,mape_tns_std,seeds_ok\n");
        let cols = |m: &Option<MeanStd>| match m {
            Some(m) => format!("{},{}", m.mean, m.std),
            None => ",".into(),
        };
        for r in &self.rows {
            let ok = r.seeds.iter().filter(|s| s.result.is_some()).count();
            let _ = writeln!(
                s,
                "\"{}\",{},{},{},{},{ok}",
                r.label,
                cols(&r.r_wns),
                cols(&r.mape_wns),
                cols(&r.r_tns),
                cols(&r.mape_tns)
            );
        }
        s
    }

    /// Plain-text table: setting, then R and MAPE for WNS and TNS.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{:<20} {:>17} {:>17} {:>17} {:>17}\n",
            "setting", "WNS R", "WNS MAPE %", "TNS R", "TNS MAPE %"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<20} {:>17} {:>17} {:>17} {:>17}",
                r.label,
                fmt_ms(&r.r_wns, 4),
                fmt_ms(&r.mape_wns, 1),
                fmt_ms(&r.r_tns, 4),
                fmt_ms(&r.mape_tns, 1)
            );
        }
        s
    }

    /// Writes `table.json`, `table.csv` and `summary.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        crate::jsonl::write_json(&dir.join("table.json"), self)?;
        for (name, text) in [("table.csv", self.to_csv()), ("summary.txt", self.summary())] {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shapes() {
        let base = SteeringConfig::default();
        assert_eq!(grid(Axis::K, &base).len(), 4);
        assert_eq!(grid(Axis::Gamma, &base).len(), 7);
        assert_eq!(grid(Axis::Layer, &base).len(), 5);
        assert_eq!(grid(Axis::Alpha, &base).len(), 5);
        assert_eq!(grid(Axis::StageRemoval, &base).len(), 3);
        for axis in [Axis::K, Axis::Gamma, Axis::Layer, Axis::Alpha] {
            for c in grid(axis, &base) {
                let CellKind::Steered(cfg) = c.kind else { panic!() };
                cfg.validate(8).unwrap();
            }
        }
    }

    #[test]
    fn mean_std() {
        let m = MeanStd::of(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((m.mean, m.std, m.n), (2.0, 1.0, 3));
        assert_eq!(MeanStd::of(&[]), None);
        assert_eq!("stage-removal".parse::<Axis>().unwrap(), Axis::StageRemoval);
        assert!("depth".parse::<Axis>().is_err());
    }
}
