use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use slackcast::bank::Bank;
use slackcast::corpus::{generate, CorpusDir, CurateConfig, GenSpec};
use slackcast::eval::{
    adapt_on_dataset, evaluate, run_ablation, train_pipeline, write_eval, Axis, Dataset, InputKind, OperatingPoint, DEFAULT_N_ADAPT,
};
use slackcast::features::encoder_input;
use slackcast::model::{refit_head, BankActivations, GammaMode, Model, Query, SteeringConfig, TrainParams};
use slackcast::{Error, Result};
use slackcast_oracle::{CellLibrary, TimingConstraint};

use crate::provenance::{run_dir, write_run};

#[derive(Debug, Parser)]
#[command(name = "slackcast", version, about = "Pre-synthesis WNS/TNS estimation from RTL")]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Root under which each run gets a provenance directory.
    #[arg(long, global = true, default_value = "results")]
    results: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic RTL corpus.
    Gen(GenArgs),
    /// Run the curation pipeline (all stages, or one).
    Curate(CurateArgs),
    /// Ground-truth WNS/TNS for one module.
    Label(LabelArgs),
    /// Stage-1 features and fingerprint for one module.
    Fingerprint(FingerprintArgs),
    /// Retrieval bank operations.
    #[command(subcommand)]
    Bank(BankCommand),
    /// Train the baseline and the steered model.
    Train(TrainArgs),
    /// Refit the head of a checkpoint on the training split.
    Refit(RefitArgs),
    /// Predict WNS/TNS for one module.
    Predict(PredictArgs),
    /// Score a checkpoint on the test split.
    Eval(EvalArgs),
    /// Run one ablation axis over several seeds.
    Ablate(AblateArgs),
    /// Head-only adaptation to a new library or corner.
    Adapt(AdaptArgs),
}

#[derive(Debug, Subcommand)]
enum BankCommand {
    /// Build the bank from the rag split of a curated corpus.
    Build(BankBuildArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
struct LibArgs {
    /// Cell library JSON; the built-in lib45 when omitted.
    #[arg(long)]
    lib: Option<PathBuf>,
}

impl LibArgs {
    fn load(&self) -> Result<CellLibrary> {
        match &self.lib {
            Some(p) => Ok(CellLibrary::load(p)?),
            None => Ok(CellLibrary::default_lib45()),
        }
    }

    fn inputs(&self) -> Vec<PathBuf> {
        self.lib.iter().cloned().collect()
    }
}

#[derive(Debug, Args, Serialize)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = GenSpec::default().count)]
    count: usize,
    #[arg(long, env = "SLACKCAST_SEED", default_value_t = GenSpec::default().seed)]
    seed: u64,
    /// Percent per tier: tiny, structured, elemental, counter, fsm.
    #[arg(long, value_parser = parse_list::<5>)]
    tier_mix: Option<[f64; 5]>,
    /// Percent per gate bin: 0-10, 11-50, 51-100, 101-200, 201+.
    #[arg(long, value_parser = parse_list::<5>)]
    bin_mix: Option<[f64; 5]>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Stage {
    All,
    Filter,
    Dedup,
    Annotate,
    Stratify,
    Cluster,
    Sample,
    Split,
}

#[derive(Debug, Args, Serialize)]
struct CurateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = Stage::All)]
    stage: Stage,
    #[command(flatten)]
    lib: LibArgs,
    #[arg(long, default_value = "typ")]
    corner: String,
    #[arg(long, default_value_t = CurateConfig::default().clock_period)]
    clock: f64,
    #[arg(long, default_value_t = CurateConfig::default().clusters)]
    clusters: usize,
    #[arg(long, default_value_t = CurateConfig::default().target)]
    target: usize,
    #[arg(long, default_value_t = CurateConfig::default().dedup_threshold)]
    dedup_threshold: f64,
    /// Train, rag and test shares.
    #[arg(long, value_parser = parse_list::<3>)]
    ratios: Option<[f64; 3]>,
    #[arg(long, env = "SLACKCAST_SEED", default_value_t = CurateConfig::default().seed)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct LabelArgs {
    #[arg(long)]
    rtl: PathBuf,
    #[command(flatten)]
    lib: LibArgs,
    #[arg(long, default_value = "typ")]
    corner: String,
    #[arg(long)]
    clock: f64,
}

#[derive(Debug, Args, Serialize)]
struct FingerprintArgs {
    #[arg(long)]
    rtl: PathBuf,
    #[arg(long)]
    clock: f64,
}

#[derive(Debug, Args, Serialize)]
struct BankBuildArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SteerArgs {
    /// Neighbours retrieved per query.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// `diagonal` for a learned per-coordinate gain, or a fixed scalar.
    #[arg(long, default_value = "diagonal")]
    gamma: String,
    /// Injection block (1-based).
    #[arg(long, default_value_t = 8)]
    layer: usize,
}

impl SteerArgs {
    fn config(&self) -> Result<SteeringConfig> {
        let gamma = match self.gamma.as_str() {
            "diagonal" => GammaMode::Diagonal,
            s => GammaMode::Scalar {
                gamma: s
                    .parse()
                    .map_err(|_| Error::BadConfig(format!("gamma `{s}` is neither `diagonal` nor a number")))?,
            },
        };
        let mut cfg = SteeringConfig::scalar(self.k, 0.0, self.layer);
        cfg.gamma = gamma;
        Ok(cfg)
    }
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    bank: PathBuf,
    /// Steered checkpoint.
    #[arg(long)]
    out: PathBuf,
    /// Also save the no-retrieval baseline here.
    #[arg(long)]
    baseline_out: Option<PathBuf>,
    #[command(flatten)]
    steer: SteerArgs,
    #[arg(long, env = "SLACKCAST_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct RefitArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    bank: PathBuf,
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "SLACKCAST_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct PredictArgs {
    #[arg(long)]
    rtl: PathBuf,
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    bank: PathBuf,
    #[command(flatten)]
    lib: LibArgs,
    #[arg(long, default_value = "typ")]
    corner: String,
    #[arg(long)]
    clock: f64,
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    bank: PathBuf,
    #[command(flatten)]
    lib: LibArgs,
    /// Defaults to the corner the corpus was labeled at.
    #[arg(long)]
    corner: Option<String>,
    /// Defaults to the clock the corpus was labeled at.
    #[arg(long)]
    clock: Option<f64>,
    /// Where result.json and predictions.csv go; the run directory by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct AblateArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// k, gamma, layer, alpha or stage-removal.
    #[arg(long)]
    axis: String,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    #[command(flatten)]
    steer: SteerArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct AdaptArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    bank: PathBuf,
    #[command(flatten)]
    lib: LibArgs,
    #[arg(long)]
    corner: String,
    #[arg(long)]
    clock: f64,
    #[arg(long, default_value_t = DEFAULT_N_ADAPT)]
    n_adapt: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "SLACKCAST_SEED", default_value_t = 0)]
    seed: u64,
}

/// Provenance for one invocation: its name, resolved config and inputs.
struct Run<'a> {
    results: &'a Path,
    name: &'static str,
    config: Value,
}

impl Run<'_> {
    fn dir(&self) -> PathBuf {
        run_dir(self.results, self.name, &self.config)
    }

    fn record(&self, inputs: &[PathBuf]) -> Result<PathBuf> {
        write_run(&self.dir(), self.name, &self.config, inputs)
    }
}

fn config_of<T: Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn read_source(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load_dataset(corpus: &Path, lib: CellLibrary) -> Result<(CorpusDir, Dataset)> {
    let dir = CorpusDir::new(corpus);
    let ds = Dataset::load(&dir, lib)?;
    Ok((dir, ds))
}

/// Loads a bank and checks it was built against this corpus's training split.
fn load_bank(path: &Path, ds: &Dataset) -> Result<Bank> {
    let bank = Bank::load(path)?;
    bank.verify_train(ds.manifest.train.iter().map(String::as_str))?;
    Ok(bank)
}

fn check_bank(model: &Model, bank: &Bank) -> Result<()> {
    match &model.bank_checksum {
        Some(sum) if *sum != bank.checksum() => Err(Error::Checkpoint("checkpoint was fit against a different bank".into())),
        _ => Ok(()),
    }
}

fn corpus_inputs(corpus: &Path) -> Vec<PathBuf> {
    let dir = CorpusDir::new(corpus);
    ["manifest.json", "annotations.jsonl", "features.jsonl"]
        .iter()
        .map(|n| dir.path(n))
        .collect()
}

pub fn run(cli: Cli) -> Result<Value> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::BadConfig(format!("--jobs: {e}")))?;
    }
    let results = cli.results.as_path();
    match cli.command {
        Command::Gen(a) => gen(results, a),
        Command::Curate(a) => curate(results, a),
        Command::Label(a) => label(results, a),
        Command::Fingerprint(a) => fingerprint(results, a),
        Command::Bank(BankCommand::Build(a)) => bank_build(results, a),
        Command::Train(a) => train(results, a),
        Command::Refit(a) => refit(results, a),
        Command::Predict(a) => predict(results, a),
        Command::Eval(a) => eval(results, a),
        Command::Ablate(a) => ablate(results, a),
        Command::Adapt(a) => adapt(results, a),
    }
}

/// Parses exactly `N` comma-separated numbers.
fn parse_list<const N: usize>(s: &str) -> std::result::Result<[f64; N], String> {
    let vals = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<std::result::Result<Vec<f64>, String>>()?;
    vals.try_into().map_err(|v: Vec<f64>| format!("expected {N} comma-separated values, got {}", v.len()))
}

fn gen(results: &Path, a: GenArgs) -> Result<Value> {
    let d = GenSpec::default();
    let spec = GenSpec {
        tier_mix: a.tier_mix.unwrap_or(d.tier_mix),
        bin_mix: a.bin_mix.unwrap_or(d.bin_mix),
        seed: a.seed,
        count: a.count,
    };
    let run = Run {
        results,
        name: "gen",
        config: json!({ "out": a.out, "spec": spec }),
    };
    let modules = generate(&spec)?;
    CorpusDir::new(&a.out).write_generated(&spec, &modules)?;
    let record = run.record(&[])?;
    Ok(json!({ "modules": modules.len(), "out": a.out, "run": record }))
}

fn curate(results: &Path, a: CurateArgs) -> Result<Value> {
    let cfg = CurateConfig {
        lib: a.lib.load()?,
        corner: a.corner.clone(),
        clock_period: a.clock,
        dedup_threshold: a.dedup_threshold,
        clusters: a.clusters,
        target: a.target,
        ratios: a.ratios.unwrap_or(CurateConfig::default().ratios),
        seed: a.seed,
        ..CurateConfig::default()
    };
    let run = Run {
        results,
        name: "curate",
        config: json!({ "corpus": a.corpus, "stage": a.stage, "lib": a.lib.lib, "config": cfg }),
    };
    let dir = CorpusDir::new(&a.corpus);
    let summary = match a.stage {
        Stage::All => {
            let m = dir.curate(&cfg)?;
            json!({ "train": m.train.len(), "rag": m.rag.len(), "test": m.test.len() })
        }
        Stage::Filter => json!({ "rejected": dir.stage_filter()?.len() }),
        Stage::Dedup => json!({ "kept": dir.stage_dedup(&cfg)? }),
        Stage::Annotate => {
            let ann = dir.stage_annotate(&cfg)?;
            json!({ "annotated": ann.len(), "violating": ann.iter().filter(|x| x.violates).count() })
        }
        Stage::Stratify => json!({ "stratified": dir.stage_stratify()?.len() }),
        Stage::Cluster => json!({ "k": dir.stage_cluster(&cfg)?.clustering.k }),
        Stage::Sample => json!({ "sampled": dir.stage_sample(&cfg)?.ids.len() }),
        Stage::Split => {
            let m = dir.stage_split(&cfg)?;
            json!({ "train": m.train.len(), "rag": m.rag.len(), "test": m.test.len() })
        }
    };
    let mut inputs = vec![dir.path("generated.jsonl")];
    inputs.extend(a.lib.inputs());
    let record = run.record(&inputs)?;
    Ok(json!({ "stage": a.stage, "summary": summary, "run": record }))
}

fn label(results: &Path, a: LabelArgs) -> Result<Value> {
    let run = Run {
        results,
        name: "label",
        config: config_of(&a),
    };
    let lib = a.lib.load()?;
    let source = read_source(&a.rtl)?;
    let (wns, tns) = slackcast_oracle::label(&source, &lib, &a.corner, TimingConstraint::new(a.clock)?)?;
    let mut inputs = vec![a.rtl.clone()];
    inputs.extend(a.lib.inputs());
    run.record(&inputs)?;
    Ok(json!({ "wns_ps": wns, "tns_ps": tns }))
}

fn fingerprint(results: &Path, a: FingerprintArgs) -> Result<Value> {
    let run = Run {
        results,
        name: "fingerprint",
        config: config_of(&a),
    };
    let an = slackcast_stage1::analyze(&read_source(&a.rtl)?, a.clock)?;
    run.record(&[a.rtl.clone()])?;
    Ok(json!({
        "fingerprint": an.fingerprint.s,
        "phi": an.phi.to_vec(),
        "approx_wns_ps": an.report.wns,
        "approx_tns_ps": an.report.tns,
    }))
}

fn bank_build(results: &Path, a: BankBuildArgs) -> Result<Value> {
    let run = Run {
        results,
        name: "bank-build",
        config: config_of(&a),
    };
    let (_, ds) = load_dataset(&a.corpus, CellLibrary::default_lib45())?;
    let bank = ds.bank()?;
    bank.write(&a.out)?;
    let record = run.record(&corpus_inputs(&a.corpus))?;
    Ok(json!({ "entries": bank.len(), "checksum": bank.checksum(), "out": a.out, "run": record }))
}

fn train(results: &Path, a: TrainArgs) -> Result<Value> {
    let run = Run {
        results,
        name: "train",
        config: config_of(&a),
    };
    let config = a.steer.config()?;
    let (_, ds) = load_dataset(&a.corpus, CellLibrary::default_lib45())?;
    let bank = load_bank(&a.bank, &ds)?;
    let samples = ds.samples(&ds.manifest.train, &ds.label_point(), InputKind::Stage1)?;
    let hp = TrainParams {
        seed: a.seed,
        ..TrainParams::default()
    };
    let trained = train_pipeline(&samples, &bank, &config, &hp)?;
    trained.steered.save(&a.out)?;
    if let Some(p) = &a.baseline_out {
        trained.baseline.save(p)?;
    }
    let mut inputs = corpus_inputs(&a.corpus);
    inputs.push(a.bank.clone());
    let record = run.record(&inputs)?;
    Ok(json!({ "out": a.out, "reports": trained.reports, "run": record }))
}

fn refit(results: &Path, a: RefitArgs) -> Result<Value> {
    let run = Run {
        results,
        name: "refit",
        config: config_of(&a),
    };
    let (_, ds) = load_dataset(&a.corpus, CellLibrary::default_lib45())?;
    let bank = load_bank(&a.bank, &ds)?;
    let model = Model::load(&a.ckpt)?;
    check_bank(&model, &bank)?;
    let samples = ds.samples(&ds.manifest.train, &ds.label_point(), InputKind::Stage1)?;
    let view = BankActivations::new(&model, &bank);
    let hp = TrainParams {
        seed: a.seed,
        ..TrainParams::default()
    };
    let (out, report) = refit_head(&model, Some(&view), &samples, &hp)?;
    out.save(&a.out)?;
    let mut inputs = corpus_inputs(&a.corpus);
    inputs.extend([a.bank.clone(), a.ckpt.clone()]);
    let record = run.record(&inputs)?;
    Ok(json!({ "out": a.out, "report": report, "run": record }))
}

fn predict(results: &Path, a: PredictArgs) -> Result<Value> {
    let run = Run {
        results,
        name: "predict",
        config: config_of(&a),
    };
    let lib = a.lib.load()?;
    let scale = lib.scale(&a.corner)?;
    TimingConstraint::new(a.clock)?;
    let model = Model::load(&a.ckpt)?;
    let bank = Bank::load(&a.bank)?;
    check_bank(&model, &bank)?;
    let an = slackcast_stage1::analyze(&read_source(&a.rtl)?, a.clock)?;
    let query = Query {
        id: None,
        x: encoder_input(&an.phi, a.clock, scale),
        fingerprint: an.fingerprint.s,
    };
    let view = BankActivations::new(&model, &bank);
    let (wns, tns) = model.predict(Some(&view), &query)?;
    let mut inputs = vec![a.rtl.clone(), a.ckpt.clone(), a.bank.clone()];
    inputs.extend(a.lib.inputs());
    run.record(&inputs)?;
    Ok(json!({ "wns_ps": wns, "tns_ps": tns }))
}

fn eval(results: &Path, a: EvalArgs) -> Result<Value> {
    let run = Run {
        results,
        name: "eval",
        config: config_of(&a),
    };
    let (_, ds) = load_dataset(&a.corpus, a.lib.load()?)?;
    let bank = load_bank(&a.bank, &ds)?;
    let model = Model::load(&a.ckpt)?;
    check_bank(&model, &bank)?;
    let label = ds.label_point();
    let point = OperatingPoint {
        corner: a.corner.clone().unwrap_or(label.corner),
        clock_period: a.clock.unwrap_or(label.clock_period),
    };
    let test = ds.samples(&ds.manifest.test, &point, InputKind::Stage1)?;
    let view = BankActivations::new(&model, &bank);
    let (result, preds) = evaluate(&model, Some(&view), &test);
    let out = a.out.clone().unwrap_or_else(|| run.dir());
    write_eval(&out, &result, &preds)?;
    let mut inputs = corpus_inputs(&a.corpus);
    inputs.extend([a.bank.clone(), a.ckpt.clone()]);
    inputs.extend(a.lib.inputs());
    let record = run.record(&inputs)?;
    Ok(json!({ "result": result, "out": out, "run": record }))
}

fn ablate(results: &Path, a: AblateArgs) -> Result<Value> {
    let run = Run {
        results,
        name: "ablate",
        config: config_of(&a),
    };
    let axis: Axis = a.axis.parse()?;
    let base = a.steer.config()?;
    if a.seeds.is_empty() {
        return Err(Error::BadConfig("at least one seed is required".into()));
    }
    let (_, ds) = load_dataset(&a.corpus, CellLibrary::default_lib45())?;
    let table = run_ablation(axis, &base, &ds, &a.seeds, &TrainParams::default())?;
    let out = a.out.clone().unwrap_or_else(|| run.dir());
    table.write(&out)?;
    eprint!("{}", table.summary());
    let record = run.record(&corpus_inputs(&a.corpus))?;
    Ok(json!({ "table": table, "out": out, "run": record }))
}

fn adapt(results: &Path, a: AdaptArgs) -> Result<Value> {
    let run = Run {
        results,
        name: "adapt",
        config: config_of(&a),
    };
    let lib = a.lib.load()?;
    let (_, ds) = load_dataset(&a.corpus, lib.clone())?;
    let bank = load_bank(&a.bank, &ds)?;
    let model = Model::load(&a.ckpt)?;
    let point = OperatingPoint {
        corner: a.corner.clone(),
        clock_period: a.clock,
    };
    let hp = TrainParams {
        seed: a.seed,
        ..TrainParams::default()
    };
    let (adapted, report, ids) = adapt_on_dataset(&model, &bank, &ds, &lib, &point, a.n_adapt, &hp)?;
    adapted.save(&a.out)?;
    let mut inputs = corpus_inputs(&a.corpus);
    inputs.extend([a.bank.clone(), a.ckpt.clone()]);
    inputs.extend(a.lib.inputs());
    let record = run.record(&inputs)?;
    Ok(json!({
        "out": a.out,
        "report": report,
        "adaptation_ids": ids,
        "encoder_checksum": adapted.encoder_checksum(),
        "bank_checksum": bank.checksum(),
        "run": record,
    }))
}
