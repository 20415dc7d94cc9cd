//! Link-prediction evaluation: edge splits, cosine ranking, MRR and MP@K.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::jobgraph::{Edge, JobGraph};
use crate::par::Exec;
use crate::views::{mix_seed, Table};

/// Cutoffs reported by [`evaluate`].
pub const REPORT_KS: [usize; 4] = [5, 10, 15, 20];

/// Train/validation/test partition of the thresholded edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSplit {
    pub train: Vec<Edge>,
    pub valid: Vec<Edge>,
    pub test: Vec<Edge>,
    /// Validation or test edges removed because an endpoint never occurs in
    /// a training edge.
    pub cold_start_dropped: Vec<Edge>,
    /// Sorted ids of nodes touching at least one training edge.
    pub candidate_nodes: Vec<usize>,
}

impl EvalSplit {
    /// The graph restricted to training edges (all nodes kept).
    pub fn train_graph(&self, graph: &JobGraph) -> JobGraph {
        graph.with_edges(&self.train)
    }
}

/// Keeps base edges with `w > weight_threshold`, shuffles them with `seed`
/// and cuts ten equal parts into 8 train / 1 valid / 1 test. Validation and
/// test edges with an endpoint outside the training nodes are dropped.
pub fn threshold_and_split(graph: &JobGraph, weight_threshold: f64, seed: u64) -> Result<EvalSplit> {
    let mut edges: Vec<Edge> = graph
        .edges()
        .filter(|e| e.stats.order == 1 && e.stats.w > weight_threshold)
        .collect();
    if edges.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} edges have weight above {weight_threshold}; at least 10 are needed for a 8/1/1 split",
            edges.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, 0x5B1]));
    edges.shuffle(&mut rng);
    let tenth = edges.len() / 10;
    let test_raw = edges.split_off(edges.len() - tenth);
    let valid_raw = edges.split_off(edges.len() - tenth);
    let train = edges;

    let nodes: BTreeSet<usize> = train.iter().flat_map(|e| [e.src, e.dst]).collect();
    let mut cold_start_dropped = Vec::new();
    let mut keep = |raw: Vec<Edge>| -> Vec<Edge> {
        let (kept, dropped): (Vec<Edge>, Vec<Edge>) = raw
            .into_iter()
            .partition(|e| nodes.contains(&e.src) && nodes.contains(&e.dst));
        cold_start_dropped.extend(dropped);
        kept
    };
    let valid = keep(valid_raw);
    let test = keep(test_raw);
    Ok(EvalSplit {
        train,
        valid,
        test,
        cold_start_dropped,
        candidate_nodes: nodes.into_iter().collect(),
    })
}

/// Writes `part<TAB>src<TAB>dst` lines, part being train, valid, test or
/// cold.
pub fn write_split<W: Write>(mut out: W, split: &EvalSplit) -> Result<()> {
    for (part, edges) in [
        ("train", &split.train),
        ("valid", &split.valid),
        ("test", &split.test),
        ("cold", &split.cold_start_dropped),
    ] {
        for e in edges {
            writeln!(out, "{part}\t{}\t{}", e.src, e.dst)?;
        }
    }
    Ok(())
}

/// Reads [`write_split`] output, taking edge statistics from `graph`.
pub fn read_split<R: BufRead>(reader: R, origin: &str, graph: &JobGraph) -> Result<EvalSplit> {
    let mut split = EvalSplit {
        train: Vec::new(),
        valid: Vec::new(),
        test: Vec::new(),
        cold_start_dropped: Vec::new(),
        candidate_nodes: Vec::new(),
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::format(origin, i + 1, msg);
        let f: Vec<&str> = line.split('\t').collect();
        let [part, src, dst] = f.as_slice() else {
            return Err(bad("expected part, src and dst"));
        };
        let src: usize = src.parse().map_err(|_| bad("bad source id"))?;
        let dst: usize = dst.parse().map_err(|_| bad("bad target id"))?;
        let stats = *graph.edge(src, dst).ok_or_else(|| bad("edge not in graph"))?;
        let e = Edge { src, dst, stats };
        match *part {
            "train" => split.train.push(e),
            "valid" => split.valid.push(e),
            "test" => split.test.push(e),
            "cold" => split.cold_start_dropped.push(e),
            _ => return Err(bad("unknown split part")),
        }
    }
    let nodes: BTreeSet<usize> = split.train.iter().flat_map(|e| [e.src, e.dst]).collect();
    split.candidate_nodes = nodes.into_iter().collect();
    Ok(split)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(x: &[f64], y: &[f64]) -> f64 {
    let (nx, ny) = (norm(x), norm(y));
    if nx == 0.0 || ny == 0.0 {
        return 0.0;
    }
    crate::views::dot(x, y) / (nx * ny)
}

/// Candidates other than `query`, by descending cosine similarity to the
/// query; ties go to the smaller node id.
pub fn rank_candidates(query: usize, vectors: &Table, candidates: &[usize]) -> Vec<usize> {
    let q = vectors.row(query);
    let mut scored: Vec<(f64, usize)> = candidates
        .iter()
        .filter(|&&c| c != query)
        .map(|&c| (cosine(q, vectors.row(c)), c))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().map(|(_, c)| c).collect()
}

/// 1-based position of `target` in [`rank_candidates`] order, without
/// sorting. `None` if `target` is not a candidate.
pub fn rank_of(query: usize, target: usize, vectors: &Table, candidates: &[usize]) -> Option<usize> {
    if target == query || !candidates.contains(&target) {
        return None;
    }
    let q = vectors.row(query);
    let t = cosine(q, vectors.row(target));
    let ahead = candidates
        .iter()
        .filter(|&&c| c != query && c != target)
        .filter(|&&c| {
            let s = cosine(q, vectors.row(c));
            s.total_cmp(&t).is_gt() || (s.total_cmp(&t).is_eq() && c < target)
        })
        .count();
    Some(ahead + 1)
}

/// Mean reciprocal rank.
pub fn mrr(ranks: &[usize]) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::invalid("no ranks to average"));
    }
    if ranks.contains(&0) {
        return Err(Error::invalid("ranks are 1-based"));
    }
    Ok(ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64)
}

/// Fraction of ranks within the top `k`.
pub fn mp_at_k(ranks: &[usize], k: usize) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::invalid("no ranks to average"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    Ok(ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub model: String,
    pub subsample_rate: f64,
    pub mrr: f64,
    /// MP@K for each K in [`REPORT_KS`].
    pub mp: [f64; 4],
    pub queries: usize,
}

impl EvalReport {
    pub const TSV_HEADER: &'static str = "model\trate\tMRR\tMP@5\tMP@10\tMP@15\tMP@20";

    pub fn mp_at(&self, k: usize) -> Option<f64> {
        REPORT_KS.iter().position(|&x| x == k).map(|i| self.mp[i])
    }

    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            self.model, self.subsample_rate, self.mrr, self.mp[0], self.mp[1], self.mp[2], self.mp[3]
        )
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tsv_row())
    }
}

/// Rank of each test target among the candidates, queried from its source.
pub fn test_ranks(vectors: &Table, split: &EvalSplit, exec: Exec) -> Result<Vec<usize>> {
    if vectors.rows() <= split.candidate_nodes.last().copied().unwrap_or(0) {
        return Err(Error::invalid("vector table does not cover every candidate node"));
    }
    exec.map_slice(&split.test, |e| {
        rank_of(e.src, e.dst, vectors, &split.candidate_nodes)
            .ok_or_else(|| Error::invalid(format!("test target {} is not a candidate", e.dst)))
    })
    .into_iter()
    .collect()
}

pub fn evaluate(model: &str, vectors: &Table, split: &EvalSplit, exec: Exec) -> Result<EvalReport> {
    let ranks = test_ranks(vectors, split, exec)?;
    report_from_ranks(model, 1.0, &ranks)
}

pub fn report_from_ranks(model: &str, rate: f64, ranks: &[usize]) -> Result<EvalReport> {
    let mut mp = [0.0; 4];
    for (slot, &k) in mp.iter_mut().zip(&REPORT_KS) {
        *slot = mp_at_k(ranks, k)?;
    }
    Ok(EvalReport {
        model: model.to_string(),
        subsample_rate: rate,
        mrr: mrr(ranks)?,
        mp,
        queries: ranks.len(),
    })
}

/// Mean and standard deviation of MRR under uniformly random rankings of
/// the split's test queries, estimated from `trials` simulated runs.
pub fn random_baseline(split: &EvalSplit, trials: usize, seed: u64) -> Result<(f64, f64)> {
    if split.test.is_empty() || trials < 2 {
        return Err(Error::invalid("random baseline needs test edges and at least 2 trials"));
    }
    let pool = split.candidate_nodes.len() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, 0xBA5E]));
    let runs: Vec<f64> = (0..trials)
        .map(|_| {
            let ranks: Vec<usize> = split.test.iter().map(|_| rng.random_range(1..=pool)).collect();
            mrr(&ranks).expect("non-empty")
        })
        .collect();
    let mean = runs.iter().sum::<f64>() / trials as f64;
    let var = runs.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    Ok((mean, var.sqrt()))
}

/// Keeps `floor(rate * |train|)` training edges chosen uniformly at random.
pub fn subsample_train(split: &EvalSplit, rate: f64, seed: u64) -> Result<Vec<Edge>> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::invalid(format!("rate {rate} outside (0, 1]")));
    }
    if rate == 1.0 {
        return Ok(split.train.clone());
    }
    let keep = (rate * split.train.len() as f64).floor() as usize;
    let mut idx: Vec<usize> = (0..split.train.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, rate.to_bits()]));
    idx.shuffle(&mut rng);
    idx.truncate(keep);
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| split.train[i]).collect())
}

/// Retrains `train` on subsampled training edges for every rate and scores
/// each result on the unchanged test set. `train` receives the restricted
/// graph and returns one vector per node.
pub fn robustness_sweep<F>(
    model: &str,
    graph: &JobGraph,
    split: &EvalSplit,
    rates: &[f64],
    seed: u64,
    exec: Exec,
    train: F,
) -> Result<Vec<EvalReport>>
where
    F: Fn(&JobGraph) -> Result<Table> + Sync + Send,
{
    exec.map_slice(rates, |&rate| {
        let kept = subsample_train(split, rate, seed)?;
        let vectors = train(&graph.with_edges(&kept))?;
        let ranks = test_ranks(&vectors, split, Exec::Sequential)?;
        report_from_ranks(model, rate, &ranks)
    })
    .into_iter()
    .collect()
}
