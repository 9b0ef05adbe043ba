//! Curation pipeline: filter, dedup, annotate, stratify, cluster, sample,
//! split. Each stage is available in memory and as a file stage that reads
//! the previous stage's artifact from the corpus directory.

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use slackcast_oracle::{CellLibrary, TimingConstraint};

use super::annotate::{annotate, Annotation};
use super::dedup::{dedup_tokens, DEFAULT_THRESHOLD};
use super::gen::{GenSpec, SourceModule, Tier};
use super::kmeans::{kmeans, Clustering, DEFAULT_K};
use super::sample::{stratified_sample, PoolItem, DEFAULT_OVERSAMPLE};
use super::split::{split, LabelSetting, SplitManifest, DEFAULT_RATIOS};
use super::strata::{module_features, stratify, ModuleFeatures, StratAxes};
use crate::jsonl::{read_json, read_jsonl, write_json, write_jsonl};
use crate::{Error, Result};

/// Clock constraint for corpus labels (about a third of modules violate).
pub const DEFAULT_CLOCK_PS: f64 = 300.0;
/// Domains below this share of the pool are oversampled.
pub const RARE_DOMAIN_SHARE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurateConfig {
    #[serde(skip, default = "CellLibrary::default_lib45")]
    pub lib: CellLibrary,
    pub corner: String,
    pub clock_period: f64,
    pub dedup_threshold: f64,
    pub clusters: usize,
    pub target: usize,
    pub oversample_factor: f64,
    /// Explicit rare domains; `None` picks those under [`RARE_DOMAIN_SHARE`].
    pub rare_domains: Option<Vec<String>>,
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl Default for CurateConfig {
    fn default() -> Self {
        CurateConfig {
            lib: CellLibrary::default_lib45(),
            corner: "typ".into(),
            clock_period: DEFAULT_CLOCK_PS,
            dedup_threshold: DEFAULT_THRESHOLD,
            clusters: DEFAULT_K,
            target: 3500,
            oversample_factor: DEFAULT_OVERSAMPLE,
            rare_domains: None,
            ratios: DEFAULT_RATIOS,
            seed: 7,
        }
    }
}

impl CurateConfig {
    pub fn constraint(&self) -> Result<TimingConstraint> {
        Ok(TimingConstraint::new(self.clock_period)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub code: String,
}

/// Keeps modules that parse and elaborate.
pub fn filter(modules: Vec<SourceModule>) -> (Vec<SourceModule>, Vec<Rejection>) {
    let checks: Vec<Option<String>> = modules
        .par_iter()
        .map(|m| slackcast_rtl::synthesize(&m.source).err().map(|e| e.code().to_string()))
        .collect();
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for (m, c) in modules.into_iter().zip(checks) {
        match c {
            None => kept.push(m),
            Some(code) => rejected.push(Rejection { id: m.id, code }),
        }
    }
    (kept, rejected)
}

/// Greedy near-duplicate removal in id order.
pub fn dedup(mut modules: Vec<SourceModule>, threshold: f64) -> Result<Vec<SourceModule>> {
    modules.sort_by(|a, b| a.id.cmp(&b.id));
    let streams = modules
        .par_iter()
        .map(|m| slackcast_rtl::canonical_tokens(&m.source))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let keep: BTreeSet<usize> = dedup_tokens(&streams, threshold).into_iter().collect();
    Ok(modules
        .into_iter()
        .enumerate()
        .filter(|(i, _)| keep.contains(i))
        .map(|(_, m)| m)
        .collect())
}

pub fn annotate_all(modules: &[SourceModule], cfg: &CurateConfig) -> Result<Vec<Annotation>> {
    let clk = cfg.constraint()?;
    modules.par_iter().map(|m| annotate(m, &cfg.lib, &cfg.corner, clk)).collect()
}

pub fn features_all(modules: &[SourceModule], clock_period: f64) -> Result<Vec<ModuleFeatures>> {
    modules.par_iter().map(|m| module_features(m, clock_period)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFile {
    pub seed: u64,
    pub ids: Vec<String>,
    pub clustering: Clustering,
}

pub fn cluster(features: &[ModuleFeatures], k: usize, seed: u64) -> Result<ClusterFile> {
    let points: Vec<Vec<f64>> = features.iter().map(|f| f.fingerprint.clone()).collect();
    Ok(ClusterFile {
        seed,
        ids: features.iter().map(|f| f.id.clone()).collect(),
        clustering: kmeans(&points, k, seed)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFile {
    pub target: usize,
    pub oversample_factor: f64,
    pub rare_domains: Vec<String>,
    pub ids: Vec<String>,
}

pub fn sample(axes: &[StratAxes], clusters: &ClusterFile, cfg: &CurateConfig) -> Result<SampleFile> {
    let rare: Vec<String> = match &cfg.rare_domains {
        Some(r) => r.clone(),
        None => {
            let mut counts: HashMap<&str, usize> = HashMap::new();
            for a in axes {
                *counts.entry(&a.domain).or_default() += 1;
            }
            let mut r: Vec<String> = counts
                .into_iter()
                .filter(|&(_, n)| (n as f64) < RARE_DOMAIN_SHARE * axes.len() as f64)
                .map(|(d, _)| d.to_string())
                .collect();
            r.sort();
            r
        }
    };
    let cluster_of: HashMap<&str, usize> = clusters
        .ids
        .iter()
        .zip(&clusters.clustering.assignment)
        .map(|(id, &c)| (id.as_str(), c))
        .collect();
    let pool = axes
        .iter()
        .map(|a| {
            let cluster = *cluster_of
                .get(a.id.as_str())
                .ok_or_else(|| Error::PipelineOrder(format!("`{}` has strata but no cluster", a.id)))?;
            Ok(PoolItem {
                id: a.id.clone(),
                cluster,
                size_bin: a.size_bin,
                difficulty: a.difficulty,
                rare: rare.contains(&a.domain),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let target = cfg.target.min(pool.len());
    let ids = stratified_sample(&pool, target, cfg.oversample_factor, cfg.seed)?;
    Ok(SampleFile {
        target,
        oversample_factor: cfg.oversample_factor,
        rare_domains: rare,
        ids,
    })
}

pub fn split_sample(
    sample: &SampleFile,
    features: &[ModuleFeatures],
    cfg: &CurateConfig,
    generator_seed: u64,
) -> Result<SplitManifest> {
    let hash: HashMap<&str, &str> = features.iter().map(|f| (f.id.as_str(), f.token_hash.as_str())).collect();
    let items = sample
        .ids
        .iter()
        .map(|id| {
            let h = hash
                .get(id.as_str())
                .ok_or_else(|| Error::PipelineOrder(format!("sampled `{id}` has no features")))?;
            Ok((id.clone(), h.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    split(
        &items,
        cfg.ratios,
        cfg.seed,
        generator_seed,
        LabelSetting {
            library: cfg.lib.name.clone(),
            corner: cfg.corner.clone(),
            clock_period: cfg.clock_period,
        },
    )
}

/// Everything the pipeline produces, for in-memory use.
#[derive(Debug, Clone)]
pub struct Curated {
    pub modules: Vec<SourceModule>,
    pub rejected: Vec<Rejection>,
    pub annotations: Vec<Annotation>,
    pub axes: Vec<StratAxes>,
    pub features: Vec<ModuleFeatures>,
    pub clusters: ClusterFile,
    pub sample: SampleFile,
    pub manifest: SplitManifest,
}

pub fn curate_in_memory(modules: Vec<SourceModule>, cfg: &CurateConfig, generator_seed: u64) -> Result<Curated> {
    let (kept, rejected) = filter(modules);
    let modules = dedup(kept, cfg.dedup_threshold)?;
    let annotations = annotate_all(&modules, cfg)?;
    let axes: Vec<StratAxes> = annotations.iter().map(stratify).collect();
    let features = features_all(&modules, cfg.clock_period)?;
    let clusters = cluster(&features, cfg.clusters.min(features.len()), cfg.seed)?;
    let sample = sample(&axes, &clusters, cfg)?;
    let manifest = split_sample(&sample, &features, cfg, generator_seed)?;
    Ok(Curated {
        modules,
        rejected,
        annotations,
        axes,
        features,
        clusters,
        sample,
        manifest,
    })
}

pub const GENERATED: &str = "generated.jsonl";
pub const FILTERED: &str = "filtered.jsonl";
pub const DEDUP: &str = "dedup.jsonl";
pub const ANNOTATIONS: &str = "annotations.jsonl";
pub const STRATA: &str = "strata.jsonl";
pub const FEATURES: &str = "features.jsonl";
pub const CLUSTERS: &str = "clusters.json";
pub const SAMPLE: &str = "sample.json";
pub const MANIFEST: &str = "manifest.json";
pub const GEN_SPEC: &str = "gen_spec.json";
pub const CURATE_CONFIG: &str = "curate.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModuleRecord {
    id: String,
    tier: Tier,
    domain: String,
    gates: usize,
}

/// A corpus directory and its stage artifacts.
#[derive(Debug, Clone)]
pub struct CorpusDir {
    pub root: PathBuf,
}

impl CorpusDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        CorpusDir { root: root.into() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn module_path(&self, id: &str) -> PathBuf {
        self.root.join("modules").join(format!("{id}.v"))
    }

    fn need(&self, artifact: &str, stage: &str) -> Result<PathBuf> {
        let p = self.path(artifact);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::PipelineOrder(format!(
                "{stage} needs {} (run the previous stage first)",
                p.display()
            )))
        }
    }

    pub fn write_generated(&self, spec: &GenSpec, modules: &[SourceModule]) -> Result<()> {
        let dir = self.root.join("modules");
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for m in modules {
            let p = self.module_path(&m.id);
            std::fs::write(&p, &m.source).map_err(|e| Error::io(&p, e))?;
        }
        let rows: Vec<ModuleRecord> = modules
            .iter()
            .map(|m| ModuleRecord {
                id: m.id.clone(),
                tier: m.tier,
                domain: m.domain.clone(),
                gates: m.gates,
            })
            .collect();
        write_json(&self.path(GEN_SPEC), spec)?;
        write_jsonl(&self.path(GENERATED), &rows)
    }

    pub fn generator_seed(&self) -> Result<u64> {
        let spec: GenSpec = read_json(&self.need(GEN_SPEC, "curation")?)?;
        Ok(spec.seed)
    }

    fn load_modules(&self, artifact: &str, stage: &str) -> Result<Vec<SourceModule>> {
        let rows: Vec<ModuleRecord> = read_jsonl(&self.need(artifact, stage)?)?;
        rows.into_iter()
            .map(|r| {
                let p = self.module_path(&r.id);
                let source = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                Ok(SourceModule {
                    id: r.id,
                    tier: r.tier,
                    domain: r.domain,
                    gates: r.gates,
                    source,
                })
            })
            .collect()
    }

    fn save_modules(&self, artifact: &str, modules: &[SourceModule]) -> Result<()> {
        let rows: Vec<ModuleRecord> = modules
            .iter()
            .map(|m| ModuleRecord {
                id: m.id.clone(),
                tier: m.tier,
                domain: m.domain.clone(),
                gates: m.gates,
            })
            .collect();
        write_jsonl(&self.path(artifact), &rows)
    }

    /// All generated modules.
    pub fn generated(&self) -> Result<Vec<SourceModule>> {
        self.load_modules(GENERATED, "loading")
    }

    /// Modules that survived dedup.
    pub fn curated_modules(&self) -> Result<Vec<SourceModule>> {
        self.load_modules(DEDUP, "loading")
    }

    pub fn stage_filter(&self) -> Result<Vec<Rejection>> {
        let (kept, rejected) = filter(self.load_modules(GENERATED, "filter")?);
        self.save_modules(FILTERED, &kept)?;
        write_jsonl(&self.path("rejected.jsonl"), &rejected)?;
        Ok(rejected)
    }

    pub fn stage_dedup(&self, cfg: &CurateConfig) -> Result<usize> {
        let kept = dedup(self.load_modules(FILTERED, "dedup")?, cfg.dedup_threshold)?;
        self.save_modules(DEDUP, &kept)?;
        Ok(kept.len())
    }

    pub fn stage_annotate(&self, cfg: &CurateConfig) -> Result<Vec<Annotation>> {
        let modules = self.load_modules(DEDUP, "annotate")?;
        let ann = annotate_all(&modules, cfg)?;
        write_jsonl(&self.path(ANNOTATIONS), &ann)?;
        write_json(&self.path(CURATE_CONFIG), cfg)?;
        Ok(ann)
    }

    pub fn stage_stratify(&self) -> Result<Vec<StratAxes>> {
        let ann: Vec<Annotation> = read_jsonl(&self.need(ANNOTATIONS, "stratify")?)?;
        let axes: Vec<StratAxes> = ann.iter().map(stratify).collect();
        write_jsonl(&self.path(STRATA), &axes)?;
        Ok(axes)
    }

    pub fn stage_cluster(&self, cfg: &CurateConfig) -> Result<ClusterFile> {
        let axes: Vec<StratAxes> = read_jsonl(&self.need(STRATA, "cluster")?)?;
        let by_id: HashMap<String, SourceModule> =
            self.curated_modules()?.into_iter().map(|m| (m.id.clone(), m)).collect();
        let modules = axes
            .iter()
            .map(|a| {
                by_id
                    .get(&a.id)
                    .cloned()
                    .ok_or_else(|| Error::PipelineOrder(format!("`{}` is stratified but not in {DEDUP}", a.id)))
            })
            .collect::<Result<Vec<_>>>()?;
        let features = features_all(&modules, cfg.clock_period)?;
        write_jsonl(&self.path(FEATURES), &features)?;
        let c = cluster(&features, cfg.clusters.min(features.len()), cfg.seed)?;
        write_json(&self.path(CLUSTERS), &c)?;
        Ok(c)
    }

    pub fn stage_sample(&self, cfg: &CurateConfig) -> Result<SampleFile> {
        let clusters: ClusterFile = read_json(&self.need(CLUSTERS, "sample")?)?;
        let axes: Vec<StratAxes> = read_jsonl(&self.need(STRATA, "sample")?)?;
        let s = sample(&axes, &clusters, cfg)?;
        write_json(&self.path(SAMPLE), &s)?;
        Ok(s)
    }

    pub fn stage_split(&self, cfg: &CurateConfig) -> Result<SplitManifest> {
        let s: SampleFile = read_json(&self.need(SAMPLE, "split")?)?;
        let features = self.features()?;
        let m = split_sample(&s, &features, cfg, self.generator_seed()?)?;
        write_json(&self.path(MANIFEST), &m)?;
        Ok(m)
    }

    /// Runs every stage after generation, in order.
    pub fn curate(&self, cfg: &CurateConfig) -> Result<SplitManifest> {
        self.stage_filter()?;
        self.stage_dedup(cfg)?;
        self.stage_annotate(cfg)?;
        self.stage_stratify()?;
        self.stage_cluster(cfg)?;
        self.stage_sample(cfg)?;
        self.stage_split(cfg)
    }

    pub fn annotations(&self) -> Result<Vec<Annotation>> {
        read_jsonl(&self.need(ANNOTATIONS, "loading")?)
    }

    pub fn features(&self) -> Result<Vec<ModuleFeatures>> {
        read_jsonl(&self.need(FEATURES, "loading")?)
    }

    pub fn manifest(&self) -> Result<SplitManifest> {
        read_json(&self.need(MANIFEST, "loading")?)
    }

}
