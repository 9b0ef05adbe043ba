use std::path::PathBuf;
use std::time::{Duration, Instant};

use slackcast::corpus::{curate_in_memory, generate, CorpusDir, CurateConfig, GenSpec};
use slackcast::eval::{adapt_on_dataset, evaluate, run_ablation, train_pipeline, Axis, Dataset, InputKind, OperatingPoint};
use slackcast::jsonl::read_json;
use slackcast::model::{BankActivations, Model, SteeringConfig, TrainParams};
use slackcast_oracle::CellLibrary;
use slackcast_stage1::analyze;

fn smoke_dir() -> CorpusDir {
    CorpusDir::new(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/smoke"))
}

fn smoke() -> Dataset {
    Dataset::load(&smoke_dir(), CellLibrary::default_lib45()).unwrap()
}

fn hp() -> TrainParams {
    TrainParams::default()
}

#[test]
fn fixture_is_reproducible_from_its_recorded_configs() {
    let dir = smoke_dir();
    let spec: GenSpec = read_json(&dir.path("gen_spec.json")).unwrap();
    let cfg: CurateConfig = read_json(&dir.path("curate.json")).unwrap();
    let curated = curate_in_memory(generate(&spec).unwrap(), &cfg, spec.seed).unwrap();
    assert_eq!(curated.manifest, dir.manifest().unwrap());
    let m = &curated.manifest;
    assert_eq!((m.train.len(), m.rag.len(), m.test.len()), (8, 4, 4));
}

#[test]
fn predictions_are_finite_and_fast() {
    let ds = smoke();
    let bank = ds.bank().unwrap();
    let point = ds.label_point();
    let train = ds.samples(&ds.manifest.train, &point, InputKind::Stage1).unwrap();
    let trained = train_pipeline(&train, &bank, &SteeringConfig::default(), &hp()).unwrap();
    let all: Vec<String> = ds.modules.keys().cloned().collect();
    assert_eq!(all.len(), 16);

    let start = Instant::now();
    let view = BankActivations::new(&trained.steered, &bank);
    let queries = ds.queries(&all, &point, InputKind::Stage1, false).unwrap();
    for q in &queries {
        let (wns, tns) = trained.steered.predict(Some(&view), q).unwrap();
        assert!(wns.is_finite() && tns.is_finite());
        assert!(tns <= 0.0);
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "{elapsed:?}");
}

#[test]
fn evaluation_on_smoke_corpus_is_finite_and_fast() {
    let start = Instant::now();
    let ds = smoke();
    let bank = ds.bank().unwrap();
    let point = ds.label_point();
    let train = ds.samples(&ds.manifest.train, &point, InputKind::Stage1).unwrap();
    let test = ds.samples(&ds.manifest.test, &point, InputKind::Stage1).unwrap();
    let trained = train_pipeline(&train, &bank, &SteeringConfig::default(), &hp()).unwrap();
    let view = BankActivations::new(&trained.steered, &bank);
    let (result, preds) = evaluate(&trained.steered, Some(&view), &test);
    assert!(result.failed.is_empty());
    assert_eq!(preds.len(), 4);
    for t in [&result.wns, &result.tns] {
        assert!(t.r.unwrap().is_finite());
        assert!(t.mape.unwrap().is_finite());
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(60), "{elapsed:?}");
}

#[test]
fn zero_gamma_prediction_equals_baseline_bit_exactly() {
    let ds = smoke();
    let bank = ds.bank().unwrap();
    let point = ds.label_point();
    let train = ds.samples(&ds.manifest.train, &point, InputKind::Stage1).unwrap();
    let trained = train_pipeline(&train, &bank, &SteeringConfig::scalar(3, 0.0, 8), &hp()).unwrap();
    let baseline = Model {
        head: trained.steered.head.clone(),
        ..trained.baseline.clone()
    };
    let view = BankActivations::new(&trained.steered, &bank);
    for q in ds.queries(&ds.manifest.test, &point, InputKind::Stage1, false).unwrap() {
        assert_eq!(trained.steered.predict(Some(&view), &q).unwrap(), baseline.predict(None, &q).unwrap());
    }
}

#[test]
fn bank_module_retrieves_itself_first() {
    let ds = smoke();
    let bank = ds.bank().unwrap();
    for id in &ds.manifest.rag {
        let a = analyze(&ds.record(id).unwrap().source, ds.label_point().clock_period).unwrap();
        let top = bank.retrieve(&a.fingerprint.s, 1).unwrap();
        assert!((top.neighbors[0].sim - 1.0).abs() <= 1e-9);
        // Ties among identical fingerprints resolve to the smaller id.
        assert!(top.neighbors[0].id <= *id);
    }
}

#[test]
fn adaptation_changes_head_weights_only() {
    let ds = smoke();
    let bank = ds.bank().unwrap();
    let point = ds.label_point();
    let train = ds.samples(&ds.manifest.train, &point, InputKind::Stage1).unwrap();
    let model = train_pipeline(&train, &bank, &SteeringConfig::default(), &hp()).unwrap().steered;
    let slow = OperatingPoint {
        corner: "slow".into(),
        clock_period: point.clock_period,
    };
    let lib = CellLibrary::default_lib45();
    let (adapted, _, ids) = adapt_on_dataset(&model, &bank, &ds, &lib, &slow, 6, &hp()).unwrap();
    assert_eq!(ids.len(), 6);
    assert!(ids.iter().all(|id| ds.manifest.train.contains(id)));

    let before: serde_json::Value = serde_json::from_str(&model.to_json()).unwrap();
    let after: serde_json::Value = serde_json::from_str(&adapted.to_json()).unwrap();
    assert_ne!(before["model"]["head"]["params"], after["model"]["head"]["params"]);
    let strip = |mut v: serde_json::Value| {
        v["model"]["head"]["params"] = serde_json::Value::Null;
        v
    };
    assert_eq!(strip(before), strip(after));
}

#[test]
fn ablation_is_reproducible() {
    let ds = smoke();
    let a = run_ablation(Axis::K, &SteeringConfig::default(), &ds, &[0], &hp()).unwrap();
    let b = run_ablation(Axis::K, &SteeringConfig::default(), &ds, &[0], &hp()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows.len(), 4);
}
