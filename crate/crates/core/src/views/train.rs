use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sampling::{draw_negatives, draw_uniform_negatives, ViewSamples};
use super::step::{pair_step, RowStore, SharedTable};
use super::table::Table;
use super::{TrainConfig, ViewDims, ViewEmbeddings};
use crate::error::Result;
use crate::jobgraph::JobGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViewKind {
    Topology,
    Semantic,
    Balance,
    Duration,
}

impl ViewKind {
    pub const ALL: [ViewKind; 4] = [ViewKind::Topology, ViewKind::Semantic, ViewKind::Balance, ViewKind::Duration];

    fn index(self) -> u64 {
        self as u64
    }
}

/// Which view objectives are trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ViewSet {
    pub topology: bool,
    pub semantic: bool,
    pub balance: bool,
    pub duration: bool,
}

impl ViewSet {
    pub fn all() -> Self {
        ViewSet {
            topology: true,
            semantic: true,
            balance: true,
            duration: true,
        }
    }

    pub fn only(kind: ViewKind) -> Self {
        let mut s = ViewSet {
            topology: false,
            semantic: false,
            balance: false,
            duration: false,
        };
        s.set(kind, true);
        s
    }

    pub fn contains(&self, kind: ViewKind) -> bool {
        match kind {
            ViewKind::Topology => self.topology,
            ViewKind::Semantic => self.semantic,
            ViewKind::Balance => self.balance,
            ViewKind::Duration => self.duration,
        }
    }

    pub fn set(&mut self, kind: ViewKind, on: bool) {
        match kind {
            ViewKind::Topology => self.topology = on,
            ViewKind::Semantic => self.semantic = on,
            ViewKind::Balance => self.balance = on,
            ViewKind::Duration => self.duration = on,
        }
    }
}

/// Positive samples drawn per epoch for each view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub topology: usize,
    pub semantic: usize,
    pub balance: usize,
    pub duration: usize,
}

impl Schedule {
    pub fn uniform(n: usize) -> Self {
        Schedule {
            topology: n,
            semantic: n,
            balance: n,
            duration: n,
        }
    }

    /// `passes` draws per positive item of each view, at least `floor`.
    pub fn per_item(samples: &ViewSamples, passes: usize, floor: usize) -> Self {
        let f = |len: usize| if len == 0 { 0 } else { (len * passes).max(floor) };
        Schedule {
            topology: f(samples.topology_pairs.len()),
            semantic: f(samples.semantic_pairs.len()),
            balance: f(samples.balance_pairs.len()),
            duration: f(samples.duration_pairs.len()),
        }
    }

    pub fn get(&self, kind: ViewKind) -> usize {
        match kind {
            ViewKind::Topology => self.topology,
            ViewKind::Semantic => self.semantic,
            ViewKind::Balance => self.balance,
            ViewKind::Duration => self.duration,
        }
    }
}

/// Mean per-sample loss of one epoch; `None` for views that did not run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpochLosses {
    pub topology: Option<f64>,
    pub semantic: Option<f64>,
    pub balance: Option<f64>,
    pub duration: Option<f64>,
}

impl EpochLosses {
    pub fn get(&self, kind: ViewKind) -> Option<f64> {
        match kind {
            ViewKind::Topology => self.topology,
            ViewKind::Semantic => self.semantic,
            ViewKind::Balance => self.balance,
            ViewKind::Duration => self.duration,
        }
    }

    fn set(&mut self, kind: ViewKind, v: Option<f64>) {
        match kind {
            ViewKind::Topology => self.topology = v,
            ViewKind::Semantic => self.semantic = v,
            ViewKind::Balance => self.balance = v,
            ViewKind::Duration => self.duration = v,
        }
    }
}

/// Folds seed components into one 64-bit seed (splitmix64 steps).
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut z: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        z = z.wrapping_add(p).wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// Drives the per-view halves of training, one epoch at a time.
#[derive(Debug, Clone)]
pub struct ViewTrainer {
    pub samples: ViewSamples,
    pub cfg: TrainConfig,
    pub schedule: Schedule,
    pub views: ViewSet,
    /// Step-size multipliers, in [`ViewKind::ALL`] order.
    pub loss_weights: [f64; 4],
    total_epochs: usize,
}

impl ViewTrainer {
    pub fn new(graph: &JobGraph, cfg: &TrainConfig, views: ViewSet, schedule: Option<Schedule>) -> Result<Self> {
        cfg.validate()?;
        let samples = ViewSamples::build(graph, cfg, cfg.exec)?;
        let schedule = schedule.unwrap_or_else(|| Schedule::per_item(&samples, 20, 1000));
        Ok(ViewTrainer {
            samples,
            cfg: cfg.clone(),
            schedule,
            views,
            loss_weights: [1.0; 4],
            total_epochs: cfg.epochs.max(1),
        })
    }

    pub fn init_embeddings(&self, graph: &JobGraph, dims: ViewDims) -> ViewEmbeddings {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[self.cfg.seed, 0xE1B]));
        ViewEmbeddings::init(graph.num_nodes(), graph.vocabulary().len(), dims, &mut rng)
    }

    /// One sampling pass over every enabled view, in the order topology,
    /// semantic, balance, duration.
    pub fn run_epoch(&self, emb: &mut ViewEmbeddings, epoch: usize) -> EpochLosses {
        let mut losses = EpochLosses::default();
        for kind in ViewKind::ALL {
            if !self.views.contains(kind) {
                continue;
            }
            let count = self.schedule.get(kind);
            if count == 0 || self.positive_sampler_empty(kind) {
                continue;
            }
            let loss = if self.cfg.exec.workers() > 1 {
                self.view_epoch_shared(emb, kind, epoch, count)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[self.cfg.seed, kind.index(), epoch as u64]));
                let (inp, out) = tables_mut(emb, kind);
                let ctx = EpochCtx {
                    trainer: self,
                    kind,
                    epoch,
                    count,
                    stride: 1,
                    offset: 0,
                };
                ctx.run(inp, out, &mut rng)
            };
            losses.set(kind, Some(loss / count as f64));
        }
        losses
    }

    fn positive_sampler_empty(&self, kind: ViewKind) -> bool {
        match kind {
            ViewKind::Topology => self.samples.topology.is_empty(),
            ViewKind::Semantic => self.samples.semantic.is_empty(),
            ViewKind::Balance => self.samples.balance.is_empty(),
            ViewKind::Duration => self.samples.duration.is_empty(),
        }
    }

    /// Lock-free multi-worker epoch; results depend on thread interleaving.
    fn view_epoch_shared(&self, emb: &mut ViewEmbeddings, kind: ViewKind, epoch: usize, count: usize) -> f64 {
        let workers = self.cfg.exec.workers();
        let (inp, out) = tables_mut(emb, kind);
        let shared_in = SharedTable::from_table(inp);
        let shared_out = out.as_ref().map(|t| SharedTable::from_table(t));
        let per_worker = self.cfg.exec.map_range(workers, |w| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[self.cfg.seed, kind.index(), epoch as u64, w as u64 + 1]));
            let mut i: &SharedTable = &shared_in;
            let mut o: Option<&SharedTable> = shared_out.as_ref();
            let ctx = EpochCtx {
                trainer: self,
                kind,
                epoch,
                count: count.div_ceil(workers),
                stride: workers,
                offset: w,
            };
            ctx.run(&mut i, o.as_mut(), &mut rng)
        });
        shared_in.write_back(inp);
        if let (Some(s), Some(t)) = (shared_out, out) {
            s.write_back(t);
        }
        per_worker.into_iter().sum()
    }
}

fn tables_mut(emb: &mut ViewEmbeddings, kind: ViewKind) -> (&mut Table, Option<&mut Table>) {
    match kind {
        ViewKind::Topology => (&mut emb.e, Some(&mut emb.e_prime)),
        ViewKind::Semantic => (&mut emb.s, Some(&mut emb.s_prime)),
        ViewKind::Balance => (&mut emb.b, None),
        ViewKind::Duration => (&mut emb.d, None),
    }
}

struct EpochCtx<'a> {
    trainer: &'a ViewTrainer,
    kind: ViewKind,
    epoch: usize,
    /// Samples drawn by this worker.
    count: usize,
    stride: usize,
    offset: usize,
}

impl EpochCtx<'_> {
    fn run<S: RowStore, R: Rng>(&self, input: &mut S, mut output: Option<&mut S>, rng: &mut R) -> f64 {
        let t = self.trainer;
        let samples = &t.samples;
        let neg = t.cfg.negatives_per_positive;
        let per_epoch = t.schedule.get(self.kind);
        let total = (per_epoch * t.total_epochs) as f64;
        let mut negs = Vec::with_capacity(neg);
        let mut loss = 0.0;
        for s in 0..self.count {
            let global = self.epoch * per_epoch + s * self.stride + self.offset;
            let lr = t.cfg.rate_at(global as f64 / total) * t.loss_weights[self.kind.index() as usize];
            let (src, dst) = match self.kind {
                ViewKind::Topology => {
                    let p = samples.topology_pairs[samples.topology.sample(rng).unwrap()];
                    draw_negatives(&samples.topology_noise, &[p.1], neg, rng, &mut negs);
                    p
                }
                ViewKind::Semantic => {
                    let p = samples.semantic_pairs[samples.semantic.sample(rng).unwrap()];
                    draw_negatives(&samples.semantic_noise, &[p.1], neg, rng, &mut negs);
                    p
                }
                ViewKind::Balance => {
                    let p = samples.balance_pairs[samples.balance.sample(rng).unwrap()];
                    draw_uniform_negatives(samples.num_nodes, &[p.0, p.1], neg, rng, &mut negs);
                    p
                }
                ViewKind::Duration => {
                    let p = samples.duration_pairs[samples.duration.sample(rng).unwrap()];
                    draw_uniform_negatives(samples.num_nodes, &[p.0, p.1], neg, rng, &mut negs);
                    p
                }
            };
            loss += pair_step(input, output.as_deref_mut(), src, dst, &negs, lr);
        }
        loss
    }
}

/// Trains the enabled views for `cfg.epochs` epochs from a seeded
/// initialization. Returns the tables and per-epoch mean losses.
pub fn train_views(
    graph: &JobGraph,
    cfg: &TrainConfig,
    dims: ViewDims,
    views: ViewSet,
    schedule: Option<Schedule>,
) -> Result<(ViewEmbeddings, Vec<EpochLosses>)> {
    let trainer = ViewTrainer::new(graph, cfg, views, schedule)?;
    let mut emb = trainer.init_embeddings(graph, dims);
    let history = (0..cfg.epochs).map(|ep| trainer.run_epoch(&mut emb, ep)).collect();
    Ok((emb, history))
}
