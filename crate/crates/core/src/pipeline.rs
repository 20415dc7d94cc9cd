//! End-to-end helpers: records to graph, model variants, evaluation runs.

use crate::cmvae::{joint_train, JointConfig, JointModel};
use crate::error::{Error, Result};
use crate::evalkit::{self, EvalReport, EvalSplit};
use crate::ingest::{extract_transitions, CareerRecord, YearMonth};
use crate::jobgraph::JobGraph;
use crate::par::Exec;
use crate::titlenorm::TitleNormalizer;
use crate::views::{train_views, Table, ViewKind, ViewSet};

/// Fits the title normalizer on every record and builds the job graph.
pub fn build_graph(
    records: &[CareerRecord],
    min_freq: u64,
    snapshot: Option<YearMonth>,
    exec: Exec,
) -> Result<(JobGraph, TitleNormalizer)> {
    let snapshot = snapshot
        .or_else(|| crate::ingest::default_snapshot(records))
        .ok_or_else(|| Error::InsufficientData("no records with a concrete end date".into()))?;
    let titles: Vec<&str> = records.iter().map(|r| r.title_raw.as_str()).collect();
    let norm = TitleNormalizer::fit(&titles, min_freq, exec);
    let transitions = extract_transitions(records, snapshot, |r| norm.key(&r.title_raw, &r.company));
    Ok((JobGraph::build(&transitions), norm))
}

/// Model variants compared by the evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// All four views fused by the autoencoder.
    Full,
    /// Topology self vectors only.
    Topology,
    /// Semantic node vectors only.
    Semantic,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Full, Variant::Topology, Variant::Semantic];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "job2vec",
            Variant::Topology => "topology",
            Variant::Semantic => "semantic",
        }
    }

    pub fn parse(s: &str) -> Result<Variant> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown model variant {s:?}")))
    }

    /// Trains this variant on `graph` and returns one vector per node.
    pub fn train(self, graph: &JobGraph, cfg: &JointConfig) -> Result<Table> {
        match self {
            Variant::Full => Ok(joint_train(graph, cfg)?.fused),
            Variant::Topology => {
                let (emb, _) = train_views(graph, &cfg.train, cfg.dims, ViewSet::only(ViewKind::Topology), cfg.schedule)?;
                Ok(emb.e)
            }
            Variant::Semantic => {
                let (emb, _) = train_views(graph, &cfg.train, cfg.dims, ViewSet::only(ViewKind::Semantic), cfg.schedule)?;
                Ok(emb.s)
            }
        }
    }
}

/// Split settings of an evaluation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub weight_threshold: f64,
    pub split_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            weight_threshold: 5.0,
            split_seed: 1,
        }
    }
}

/// Splits, trains the full model on the training edges and returns it with
/// the split.
pub fn train_full(graph: &JobGraph, cfg: &JointConfig, eval: EvalConfig) -> Result<(JointModel, EvalSplit)> {
    let split = evalkit::threshold_and_split(graph, eval.weight_threshold, eval.split_seed)?;
    let model = joint_train(&split.train_graph(graph), cfg)?;
    Ok((model, split))
}

/// Trains and scores each variant on one split.
pub fn compare_variants(
    graph: &JobGraph,
    split: &EvalSplit,
    cfg: &JointConfig,
    variants: &[Variant],
) -> Result<Vec<EvalReport>> {
    let train = split.train_graph(graph);
    variants
        .iter()
        .map(|v| {
            let vectors = v.train(&train, cfg)?;
            evalkit::evaluate(v.name(), &vectors, split, cfg.train.exec)
        })
        .collect()
}

/// Robustness sweep for one variant over the given subsampling rates.
pub fn sweep_variant(
    graph: &JobGraph,
    split: &EvalSplit,
    cfg: &JointConfig,
    variant: Variant,
    rates: &[f64],
    seed: u64,
) -> Result<Vec<EvalReport>> {
    evalkit::robustness_sweep(variant.name(), graph, split, rates, seed, Exec::Sequential, |g| {
        variant.train(g, cfg)
    })
}
