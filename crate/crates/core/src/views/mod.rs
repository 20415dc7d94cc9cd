//! Per-view embedding tables and their negative-sampling objectives.
//!
//! Four views are learned for every node:
//!
//! * topology: a self vector `e` and a context vector `e'`, trained so that
//!   `sigma(e'_j . e_i)` is high for (k-step extended) edges `i -> j`;
//! * semantic: a node vector `s` against word vectors `s'` for the words of
//!   the node's title;
//! * balance: a vector `b` pulled together for pairs with balanced
//!   bidirectional flow, weighted by [`transition_balance`];
//! * duration: a vector `d` pulled together for quick transitions, weighted
//!   by [`transition_duration_score`].
//!
//! Pair weights enter through the sampling distribution, not as gradient
//! multipliers.

mod sampling;
mod step;
mod table;
mod train;

pub use sampling::{AliasSampler, ViewSamples};
pub use step::{pair_step, RowStore, SharedTable};
pub use table::{read_embeddings, write_embeddings, Table};
pub use train::{mix_seed, train_views, EpochLosses, Schedule, ViewKind, ViewSet, ViewTrainer};

use rand::Rng;

use crate::error::{Error, Result};
use crate::par::Exec;

/// Optimizer settings shared by the four view objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Floor of the linear decay.
    pub min_learning_rate: f64,
    pub negatives_per_positive: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Exponent applied to unigram counts for the topology and semantic noise
    /// distributions.
    pub noise_power: f64,
    /// Walk length for topology edge extension.
    pub k: u32,
    pub lambda: f64,
    pub exec: Exec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.025,
            min_learning_rate: 0.0001,
            negatives_per_positive: 5,
            epochs: 10,
            seed: 1,
            noise_power: 0.75,
            k: 2,
            lambda: 0.5,
            exec: Exec::Sequential,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if self.negatives_per_positive < 1 {
            return Err(Error::invalid("negatives_per_positive must be at least 1"));
        }
        if self.k < 1 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::invalid("lambda must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Linearly decayed rate at `progress` in [0, 1].
    pub fn rate_at(&self, progress: f64) -> f64 {
        (self.learning_rate * (1.0 - progress.clamp(0.0, 1.0))).max(self.min_learning_rate.min(self.learning_rate))
    }
}

/// Dimensions of the four views.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ViewDims {
    pub topology: usize,
    pub semantic: usize,
    pub balance: usize,
    pub duration: usize,
}

impl Default for ViewDims {
    fn default() -> Self {
        ViewDims::uniform(128)
    }
}

impl ViewDims {
    pub fn uniform(d: usize) -> Self {
        ViewDims {
            topology: d,
            semantic: d,
            balance: d,
            duration: d,
        }
    }

    pub fn total(&self) -> usize {
        self.topology + self.semantic + self.balance + self.duration
    }
}

/// The six learnable tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewEmbeddings {
    /// Topology self vectors, one row per node.
    pub e: Table,
    /// Topology context vectors, one row per node.
    pub e_prime: Table,
    /// Semantic node vectors.
    pub s: Table,
    /// Semantic word vectors, one row per vocabulary word.
    pub s_prime: Table,
    pub b: Table,
    pub d: Table,
}

impl ViewEmbeddings {
    /// Uniform init in `(-0.5/dim, 0.5/dim)` for every table.
    pub fn init<R: Rng>(nodes: usize, words: usize, dims: ViewDims, rng: &mut R) -> Self {
        ViewEmbeddings {
            e: Table::uniform(nodes, dims.topology, rng),
            e_prime: Table::uniform(nodes, dims.topology, rng),
            s: Table::uniform(nodes, dims.semantic, rng),
            s_prime: Table::uniform(words, dims.semantic, rng),
            b: Table::uniform(nodes, dims.balance, rng),
            d: Table::uniform(nodes, dims.duration, rng),
        }
    }

    pub fn zeros(nodes: usize, words: usize, dims: ViewDims) -> Self {
        ViewEmbeddings {
            e: Table::zeros(nodes, dims.topology),
            e_prime: Table::zeros(nodes, dims.topology),
            s: Table::zeros(nodes, dims.semantic),
            s_prime: Table::zeros(words, dims.semantic),
            b: Table::zeros(nodes, dims.balance),
            d: Table::zeros(nodes, dims.duration),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.e.rows()
    }

    pub fn dims(&self) -> ViewDims {
        ViewDims {
            topology: self.e.dim(),
            semantic: self.s.dim(),
            balance: self.b.dim(),
            duration: self.d.dim(),
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.e, &self.e_prime, &self.s, &self.s_prime, &self.b, &self.d]
            .iter()
            .all(|t| t.as_slice().iter().all(|v| v.is_finite()))
    }
}

/// `exp(-|w_ij - w_ji| / (w_ij * w_ji))`.
pub fn transition_balance(w_ij: f64, w_ji: f64) -> Result<f64> {
    if !(w_ij > 0.0 && w_ji > 0.0) {
        return Err(Error::invalid("transition weights must be positive"));
    }
    Ok((-(w_ij - w_ji).abs() / (w_ij * w_ji)).exp())
}

/// `exp(-t)` for a mean tenure `t` in years.
pub fn transition_duration_score(t_years: f64) -> Result<f64> {
    if !(t_years >= 0.0) {
        return Err(Error::invalid("duration must be non-negative"));
    }
    Ok((-t_years).exp())
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let z = x.exp();
        z / (1.0 + z)
    }
}

/// `ln(sigmoid(x))` without overflow.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// `sigmoid(x . y)`.
pub fn joint_prob(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("dimension mismatch {} vs {}", x.len(), y.len())));
    }
    Ok(sigmoid(dot(x, y)))
}

/// Exact softmax probability of `j` as a context of `i` over `candidates`.
pub fn neighbor_prob(i: usize, j: usize, emb: &ViewEmbeddings, candidates: &[usize]) -> Result<f64> {
    if !candidates.contains(&j) {
        return Err(Error::invalid(format!("node {j} is not a candidate")));
    }
    let ei = emb.e.row(i);
    let logits: Vec<f64> = candidates.iter().map(|&c| dot(emb.e_prime.row(c), ei)).collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|l| (l - max).exp()).sum();
    let pos = candidates.iter().position(|&c| c == j).unwrap();
    Ok((logits[pos] - max).exp() / z)
}

/// One negative-sampling step for the topology view on edge `i -> j`.
/// Returns the sample loss evaluated before the update.
pub fn step_topology(emb: &mut ViewEmbeddings, i: usize, j: usize, negatives: &[usize], lr: f64) -> f64 {
    pair_step(&mut emb.e, Some(&mut emb.e_prime), i, j, negatives, lr)
}

/// One step pulling node `i`'s semantic vector toward word `word`.
pub fn step_semantic(emb: &mut ViewEmbeddings, i: usize, word: usize, negatives: &[usize], lr: f64) -> f64 {
    pair_step(&mut emb.s, Some(&mut emb.s_prime), i, word, negatives, lr)
}

/// One step on the balance table for a bidirectional pair.
pub fn step_balance(emb: &mut ViewEmbeddings, i: usize, j: usize, negatives: &[usize], lr: f64) -> f64 {
    pair_step::<Table>(&mut emb.b, None, i, j, negatives, lr)
}

/// One step on the duration table for an edge with observed tenure.
pub fn step_duration(emb: &mut ViewEmbeddings, i: usize, j: usize, negatives: &[usize], lr: f64) -> f64 {
    pair_step::<Table>(&mut emb.d, None, i, j, negatives, lr)
}
