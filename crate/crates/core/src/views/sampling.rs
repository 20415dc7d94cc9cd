use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use super::{transition_balance, transition_duration_score, TrainConfig};
use crate::error::Result;
use crate::jobgraph::JobGraph;
use crate::par::Exec;

/// O(1) weighted index sampler over a fixed item list.
#[derive(Debug, Clone)]
pub struct AliasSampler {
    alias: Option<WeightedAliasIndex<f64>>,
    support: usize,
}

impl AliasSampler {
    /// Items with zero weight are never drawn. An all-zero or empty weight
    /// list gives an empty sampler.
    pub fn new(weights: &[f64]) -> Self {
        let support = weights.iter().filter(|&&w| w > 0.0).count();
        let alias = if support == 0 {
            None
        } else {
            WeightedAliasIndex::new(weights.to_vec()).ok()
        };
        AliasSampler { alias, support }
    }

    pub fn is_empty(&self) -> bool {
        self.alias.is_none()
    }

    /// Number of items with positive weight.
    pub fn support(&self) -> usize {
        self.support
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        self.alias.as_ref().map(|a| a.sample(rng))
    }
}

/// Positive pairs and noise distributions for all four views.
#[derive(Debug, Clone)]
pub struct ViewSamples {
    pub topology_pairs: Vec<(usize, usize)>,
    pub topology: AliasSampler,
    pub topology_noise: AliasSampler,
    /// (node, word) pairs.
    pub semantic_pairs: Vec<(usize, usize)>,
    pub semantic: AliasSampler,
    pub semantic_noise: AliasSampler,
    pub balance_pairs: Vec<(usize, usize)>,
    pub balance: AliasSampler,
    pub duration_pairs: Vec<(usize, usize)>,
    pub duration: AliasSampler,
    pub num_nodes: usize,
}

impl ViewSamples {
    pub fn build(graph: &JobGraph, cfg: &TrainConfig, exec: Exec) -> Result<Self> {
        let n = graph.num_nodes();

        // topology: extended edges, weight w; noise over weighted degree
        let ext = graph.extend_k_steps(cfg.k, cfg.lambda, exec)?;
        let merged = ext.merged();
        let mut degree = vec![0.0; n];
        let mut topology_pairs = Vec::with_capacity(merged.len());
        let mut topo_w = Vec::with_capacity(merged.len());
        for (&(i, j), &w) in &merged {
            topology_pairs.push((i, j));
            topo_w.push(w);
            degree[i] += w;
            degree[j] += w;
        }
        let topo_noise: Vec<f64> = degree.iter().map(|d| d.powf(cfg.noise_power)).collect();

        // semantic: (node, word) with in-title frequency; noise over corpus counts
        let vocab = graph.vocabulary();
        let mut word_count = vec![0.0; vocab.len()];
        let mut semantic_pairs = Vec::new();
        let mut sem_w = Vec::new();
        for (i, key) in graph.nodes().iter().enumerate() {
            let mut ids: Vec<usize> = key
                .title_norm
                .iter()
                .filter_map(|w| vocab.id(w))
                .collect();
            ids.sort_unstable();
            for chunk in ids.chunk_by(|a, b| a == b) {
                semantic_pairs.push((i, chunk[0]));
                sem_w.push(chunk.len() as f64);
                word_count[chunk[0]] += chunk.len() as f64;
            }
        }
        let sem_noise: Vec<f64> = word_count.iter().map(|c| c.powf(cfg.noise_power)).collect();

        // balance: base edges whose reverse also exists
        let mut balance_pairs = Vec::new();
        let mut bal_w = Vec::new();
        // duration: base edges with an observed tenure
        let mut duration_pairs = Vec::new();
        let mut dur_w = Vec::new();
        for e in graph.edges() {
            if e.stats.order != 1 {
                continue;
            }
            let back = graph.weight(e.dst, e.src);
            if back > 0.0 {
                balance_pairs.push((e.src, e.dst));
                bal_w.push(transition_balance(e.stats.w, back)?);
            }
            if let Some(t) = e.stats.t_avg_years {
                duration_pairs.push((e.src, e.dst));
                dur_w.push(transition_duration_score(t)?);
            }
        }

        Ok(ViewSamples {
            topology: AliasSampler::new(&topo_w),
            topology_pairs,
            topology_noise: AliasSampler::new(&topo_noise),
            semantic: AliasSampler::new(&sem_w),
            semantic_pairs,
            semantic_noise: AliasSampler::new(&sem_noise),
            balance: AliasSampler::new(&bal_w),
            balance_pairs,
            duration: AliasSampler::new(&dur_w),
            duration_pairs,
            num_nodes: n,
        })
    }
}

/// Draws up to `count` noise items that differ from `avoid`, within a bounded
/// number of draws.
pub(crate) fn draw_negatives<R: Rng + ?Sized>(
    noise: &AliasSampler,
    avoid: &[usize],
    count: usize,
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    out.clear();
    if noise.support() <= avoid.len() {
        return;
    }
    let mut budget = count * 64;
    while out.len() < count && budget > 0 {
        budget -= 1;
        if let Some(x) = noise.sample(rng) {
            if !avoid.contains(&x) {
                out.push(x);
            }
        }
    }
}

/// Uniform node negatives excluding `avoid`.
pub(crate) fn draw_uniform_negatives<R: Rng + ?Sized>(
    n: usize,
    avoid: &[usize],
    count: usize,
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    out.clear();
    if n <= avoid.len() {
        return;
    }
    while out.len() < count {
        let x = rng.random_range(0..n);
        if !avoid.contains(&x) {
            out.push(x);
        }
    }
}
