//! Synthetic corpus generation and the curation pipeline.

pub mod annotate;
pub mod dedup;
pub mod gen;
pub mod kmeans;
pub mod sample;
pub mod split;
pub mod strata;

pub use annotate::{annotate, Annotation};
pub use gen::{generate, GenSpec, SourceModule, Tier};
pub use kmeans::{kmeans, Clustering};
pub use sample::{stratified_sample, PoolItem};
pub use split::{split, LabelSetting, SplitManifest};
pub use strata::{module_features, stratify, ModuleFeatures, StratAxes};
pub mod pipeline;

pub use pipeline::{curate_in_memory, CorpusDir, CurateConfig, Curated};
