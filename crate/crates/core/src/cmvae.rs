//! Collective multi-view autoencoder.
//!
//! The four view vectors of a node are concatenated into `X_i = [e; s; b; d]`
//! and passed through a two-layer encoder (LeakyReLU, then Tanh) to a
//! bottleneck, then a two-layer decoder (LeakyReLU, then linear) back to the
//! input width. The objective is the mean squared reconstruction error
//! `1/N sum ||X_i - G(F(X_i))||^2`; `F(X_i)` is the fused representation.

use std::io::{BufRead, Write};

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::jobgraph::JobGraph;
use crate::views::{EpochLosses, Schedule, Table, TrainConfig, ViewDims, ViewEmbeddings, ViewSet, ViewTrainer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    LeakyRelu(f64),
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::LeakyRelu(slope) => {
                if z > 0.0 {
                    z
                } else {
                    slope * z
                }
            }
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative given pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::LeakyRelu(slope) => {
                if z > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }

    fn token(self) -> String {
        match self {
            Activation::LeakyRelu(s) => format!("leaky_relu:{s}"),
            Activation::Tanh => "tanh".into(),
            Activation::Identity => "identity".into(),
        }
    }

    fn parse(tok: &str) -> Option<Self> {
        match tok {
            "tanh" => Some(Activation::Tanh),
            "identity" => Some(Activation::Identity),
            t => t
                .strip_prefix("leaky_relu:")
                .and_then(|s| s.parse().ok())
                .map(Activation::LeakyRelu),
        }
    }
}

/// Fully connected layer; `weight` is `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn input_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub bottleneck_dim: usize,
    pub negative_slope: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            input_dim: 512,
            hidden_dim: 512,
            bottleneck_dim: 248,
            negative_slope: 0.7,
            learning_rate: 0.01,
            batch_size: 64,
        }
    }
}

impl NetConfig {
    pub fn for_views(dims: ViewDims) -> Self {
        NetConfig {
            input_dim: dims.total(),
            ..NetConfig::default()
        }
    }
}

/// Encoder layers are `layers[..2]`, decoder layers `layers[2..]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionNet {
    pub layers: Vec<Dense>,
}

/// Per-layer parameter gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weight: Vec<Array2<f64>>,
    pub bias: Vec<Array1<f64>>,
    /// Gradient of the batch loss with respect to the inputs.
    pub input: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub bottleneck: Array1<f64>,
    pub reconstruction: Array1<f64>,
    pub loss: f64,
}

struct Trace {
    /// Pre-activations per layer.
    z: Vec<Array2<f64>>,
    /// `a[0]` is the input; `a[l + 1]` is the output of layer `l`.
    a: Vec<Array2<f64>>,
}

impl FusionNet {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng>(cfg: &NetConfig, rng: &mut R) -> Self {
        let shapes = [
            (cfg.input_dim, cfg.hidden_dim, Activation::LeakyRelu(cfg.negative_slope)),
            (cfg.hidden_dim, cfg.bottleneck_dim, Activation::Tanh),
            (cfg.bottleneck_dim, cfg.hidden_dim, Activation::LeakyRelu(cfg.negative_slope)),
            (cfg.hidden_dim, cfg.input_dim, Activation::Identity),
        ];
        let layers = shapes
            .iter()
            .map(|&(fan_in, fan_out, activation)| {
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Dense {
                    weight: Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-limit..=limit)),
                    bias: Array1::zeros(fan_out),
                    activation,
                }
            })
            .collect();
        FusionNet { layers }
    }

    /// Same shapes as [`FusionNet::new`], every parameter zero.
    pub fn zeros(cfg: &NetConfig) -> Self {
        let mut net = FusionNet::new(cfg, &mut ChaCha8Rng::seed_from_u64(0));
        net.visit_params_mut(|p| *p = 0.0);
        net
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn bottleneck_dim(&self) -> usize {
        self.layers[1].output_dim()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn visit_params_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for l in &mut self.layers {
            l.weight.iter_mut().for_each(&mut f);
            l.bias.iter_mut().for_each(&mut f);
        }
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::invalid(format!(
                "input has {cols} columns, network expects {}",
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn trace(&self, x: ArrayView2<f64>) -> Trace {
        let mut z = Vec::with_capacity(self.layers.len());
        let mut a = vec![x.to_owned()];
        for layer in &self.layers {
            let pre = a.last().unwrap().dot(&layer.weight.t()) + &layer.bias;
            let act = layer.activation;
            a.push(pre.mapv(|v| act.apply(v)));
            z.push(pre);
        }
        Trace { z, a }
    }

    /// Encoder output for each row of `x`.
    pub fn encode(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        let mut h = x.to_owned();
        for layer in &self.layers[..2] {
            let act = layer.activation;
            h = (h.dot(&layer.weight.t()) + &layer.bias).mapv(|v| act.apply(v));
        }
        Ok(h)
    }

    /// Mean over rows of the squared reconstruction error.
    pub fn batch_loss(&self, x: ArrayView2<f64>) -> Result<f64> {
        self.check_input(x.ncols())?;
        if x.nrows() == 0 {
            return Ok(0.0);
        }
        let t = self.trace(x);
        let diff = &t.a[self.layers.len()] - &x;
        Ok(diff.mapv(|v| v * v).sum() / x.nrows() as f64)
    }

    /// Forward pass on one input vector.
    pub fn forward(&self, x: &[f64]) -> Result<ForwardOutput> {
        self.check_input(x.len())?;
        let xv = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        let t = self.trace(xv);
        let recon = t.a[self.layers.len()].row(0).to_owned();
        let loss = recon
            .iter()
            .zip(x)
            .map(|(r, v)| (v - r) * (v - r))
            .sum();
        Ok(ForwardOutput {
            bottleneck: t.a[2].row(0).to_owned(),
            reconstruction: recon,
            loss,
        })
    }

    /// Exact gradients of the mean batch loss. Also returns that loss.
    pub fn backward(&self, x: ArrayView2<f64>) -> Result<(Gradients, f64)> {
        self.check_input(x.ncols())?;
        let n = x.nrows();
        let depth = self.layers.len();
        if n == 0 {
            return Ok((self.zero_grads(0), 0.0));
        }
        let t = self.trace(x);
        let diff = &t.a[depth] - &x;
        let loss = diff.mapv(|v| v * v).sum() / n as f64;

        let mut grad_a = &diff * (2.0 / n as f64);
        let mut weight = vec![Array2::zeros((0, 0)); depth];
        let mut bias = vec![Array1::zeros(0); depth];
        for l in (0..depth).rev() {
            let layer = &self.layers[l];
            let act = layer.activation;
            let mut grad_z = grad_a;
            ndarray::Zip::from(&mut grad_z)
                .and(&t.z[l])
                .and(&t.a[l + 1])
                .for_each(|g, &z, &a| *g *= act.derivative(z, a));
            weight[l] = grad_z.t().dot(&t.a[l]);
            bias[l] = grad_z.sum_axis(Axis(0));
            grad_a = grad_z.dot(&layer.weight);
        }
        // the input is also the reconstruction target
        let input = grad_a - diff * (2.0 / n as f64);
        Ok((Gradients { weight, bias, input }, loss))
    }

    fn zero_grads(&self, rows: usize) -> Gradients {
        Gradients {
            weight: self.layers.iter().map(|l| Array2::zeros(l.weight.raw_dim())).collect(),
            bias: self.layers.iter().map(|l| Array1::zeros(l.bias.len())).collect(),
            input: Array2::zeros((rows, self.input_dim())),
        }
    }

    /// Plain gradient descent update.
    pub fn apply(&mut self, grads: &Gradients, lr: f64) {
        for (l, layer) in self.layers.iter_mut().enumerate() {
            layer.weight.scaled_add(-lr, &grads.weight[l]);
            layer.bias.scaled_add(-lr, &grads.bias[l]);
        }
    }

    pub fn save<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "cmvae-checkpoint 1")?;
        writeln!(out, "layers {}", self.layers.len())?;
        for layer in &self.layers {
            writeln!(
                out,
                "layer {} {} {}",
                layer.input_dim(),
                layer.output_dim(),
                layer.activation.token()
            )?;
            for row in layer.weight.rows() {
                write_row(&mut out, row)?;
            }
            write_row(&mut out, layer.bias.view())?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R, origin: &str) -> Result<FusionNet> {
        let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, l)) => Ok((i, l?)),
                None => Err(Error::format(origin, 0, format!("unexpected end of file, expected {what}"))),
            }
        };
        let (ln, header) = next("header")?;
        if header.trim() != "cmvae-checkpoint 1" {
            return Err(Error::format(origin, ln, "unsupported checkpoint header"));
        }
        let (ln, count) = next("layer count")?;
        let count: usize = count
            .strip_prefix("layers ")
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| Error::format(origin, ln, "expected `layers N`"))?;
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, header) = next("layer header")?;
            let parts: Vec<&str> = header.split_whitespace().collect();
            let (fan_in, fan_out, act) = match parts.as_slice() {
                ["layer", i, o, a] => (
                    i.parse::<usize>().map_err(|_| Error::format(origin, ln, "bad input dim"))?,
                    o.parse::<usize>().map_err(|_| Error::format(origin, ln, "bad output dim"))?,
                    Activation::parse(a).ok_or_else(|| Error::format(origin, ln, "bad activation"))?,
                ),
                _ => return Err(Error::format(origin, ln, "expected `layer IN OUT ACTIVATION`")),
            };
            let mut w = Vec::with_capacity(fan_in * fan_out);
            for _ in 0..fan_out {
                let (ln, row) = next("weight row")?;
                w.extend(parse_row(&row, fan_in, origin, ln)?);
            }
            let (ln, row) = next("bias row")?;
            let b = parse_row(&row, fan_out, origin, ln)?;
            layers.push(Dense {
                weight: Array2::from_shape_vec((fan_out, fan_in), w).expect("shape checked"),
                bias: Array1::from(b),
                activation: act,
            });
        }
        if layers.len() != 4
            || layers.windows(2).any(|p| p[0].output_dim() != p[1].input_dim())
            || layers[0].input_dim() != layers[3].output_dim()
        {
            return Err(Error::format(origin, 2, "layer shapes do not form an autoencoder"));
        }
        Ok(FusionNet { layers })
    }
}

fn write_row<W: Write>(out: &mut W, row: ArrayView1<f64>) -> std::io::Result<()> {
    let mut first = true;
    for v in row {
        if !first {
            write!(out, " ")?;
        }
        write!(out, "{v}")?;
        first = false;
    }
    writeln!(out)
}

fn parse_row(line: &str, expect: usize, origin: &str, ln: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = line
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::format(origin, ln, "bad number"))?;
    if vals.len() != expect {
        return Err(Error::format(origin, ln, format!("expected {expect} values, found {}", vals.len())));
    }
    Ok(vals)
}

/// `[e_i; s_i; b_i; d_i]`.
pub fn assemble_input(emb: &ViewEmbeddings, i: usize) -> Result<Vec<f64>> {
    let tables = [&emb.e, &emb.s, &emb.b, &emb.d];
    if tables.iter().any(|t| i >= t.rows()) {
        return Err(Error::invalid(format!("node {i} has no row in every view")));
    }
    Ok(tables.iter().flat_map(|t| t.row(i).iter().copied()).collect())
}

/// All nodes' concatenated view vectors, one row per node.
pub fn assemble_all(emb: &ViewEmbeddings) -> Array2<f64> {
    let n = emb.num_nodes();
    let dims = emb.dims();
    let mut x = Array2::zeros((n, dims.total()));
    for i in 0..n {
        let mut col = 0;
        for t in [&emb.e, &emb.s, &emb.b, &emb.d] {
            x.slice_mut(s![i, col..col + t.dim()])
                .assign(&ArrayView1::from(t.row(i)));
            col += t.dim();
        }
    }
    x
}

/// Weights multiplying the step size of each objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub topology: f64,
    pub semantic: f64,
    pub balance: f64,
    pub duration: f64,
    pub fusion: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            topology: 1.0,
            semantic: 1.0,
            balance: 1.0,
            duration: 1.0,
            fusion: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointConfig {
    /// `train.epochs` is the number of outer alternation epochs.
    pub train: TrainConfig,
    pub dims: ViewDims,
    pub net: NetConfig,
    pub views: ViewSet,
    pub schedule: Option<Schedule>,
    /// Let reconstruction gradients flow into the view tables.
    pub end_to_end: bool,
    pub weights: LossWeights,
}

impl Default for JointConfig {
    fn default() -> Self {
        let dims = ViewDims::default();
        JointConfig {
            train: TrainConfig::default(),
            dims,
            net: NetConfig::for_views(dims),
            views: ViewSet::all(),
            schedule: None,
            end_to_end: false,
            weights: LossWeights::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct JointModel {
    pub emb: ViewEmbeddings,
    pub net: FusionNet,
    /// `F(X_i)` per node.
    pub fused: Table,
    pub view_losses: Vec<EpochLosses>,
    /// Mean reconstruction loss of each outer epoch's CMVAE pass.
    pub fusion_losses: Vec<f64>,
    /// `fusion_losses` divided by the mean squared norm of that epoch's
    /// inputs, so epochs with differently scaled view tables compare.
    pub relative_fusion_losses: Vec<f64>,
}

/// Alternates per outer epoch between one sampling pass of every enabled
/// view and one minibatch SGD pass of the autoencoder over all nodes, then
/// encodes every node.
pub fn joint_train(graph: &JobGraph, cfg: &JointConfig) -> Result<JointModel> {
    if cfg.net.input_dim != cfg.dims.total() {
        return Err(Error::invalid(format!(
            "network input {} does not match view dims {}",
            cfg.net.input_dim,
            cfg.dims.total()
        )));
    }
    let mut trainer = ViewTrainer::new(graph, &cfg.train, cfg.views, cfg.schedule)?;
    trainer.loss_weights = [
        cfg.weights.topology,
        cfg.weights.semantic,
        cfg.weights.balance,
        cfg.weights.duration,
    ];
    let mut emb = trainer.init_embeddings(graph, cfg.dims);
    let mut rng = ChaCha8Rng::seed_from_u64(crate::views::mix_seed(&[cfg.train.seed, 0xAE]));
    let mut net = FusionNet::new(&cfg.net, &mut rng);
    let mut order: Vec<usize> = (0..graph.num_nodes()).collect();
    let mut view_losses = Vec::with_capacity(cfg.train.epochs);
    let mut fusion_losses = Vec::with_capacity(cfg.train.epochs);
    let mut relative_fusion_losses = Vec::with_capacity(cfg.train.epochs);
    let lr = cfg.net.learning_rate * cfg.weights.fusion;

    for epoch in 0..cfg.train.epochs {
        view_losses.push(trainer.run_epoch(&mut emb, epoch));

        let x = assemble_all(&emb);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.net.batch_size.max(1)) {
            let xb = x.select(Axis(0), batch);
            let (grads, loss) = net.backward(xb.view())?;
            total += loss * batch.len() as f64;
            net.apply(&grads, lr);
            if cfg.end_to_end {
                push_into_views(&mut emb, batch, &grads.input, lr);
            }
        }
        let mean = if order.is_empty() { 0.0 } else { total / order.len() as f64 };
        let scale = if order.is_empty() { 0.0 } else { x.mapv(|v| v * v).sum() / order.len() as f64 };
        fusion_losses.push(mean);
        relative_fusion_losses.push(if scale > 0.0 { mean / scale } else { 0.0 });
    }

    let fused = encode_all(&net, &emb)?;
    Ok(JointModel {
        emb,
        net,
        fused,
        view_losses,
        fusion_losses,
        relative_fusion_losses,
    })
}

fn push_into_views(emb: &mut ViewEmbeddings, batch: &[usize], grad: &Array2<f64>, lr: f64) {
    for (r, &node) in batch.iter().enumerate() {
        let g = grad.row(r);
        let mut col = 0;
        for t in [&mut emb.e, &mut emb.s, &mut emb.b, &mut emb.d] {
            let d = t.dim();
            for (x, gv) in t.row_mut(node).iter_mut().zip(g.slice(s![col..col + d])) {
                *x -= lr * gv;
            }
            col += d;
        }
    }
}

/// `F(X_i)` for every node as a table.
pub fn encode_all(net: &FusionNet, emb: &ViewEmbeddings) -> Result<Table> {
    let x = assemble_all(emb);
    let h = net.encode(x.view())?;
    if h.nrows() == 0 {
        return Ok(Table::zeros(0, net.bottleneck_dim()));
    }
    Table::from_vec(net.bottleneck_dim(), h.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn tiny() -> NetConfig {
        NetConfig {
            input_dim: 8,
            hidden_dim: 6,
            bottleneck_dim: 4,
            ..NetConfig::default()
        }
    }

    fn random_batch(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn default_shapes() {
        let net = FusionNet::new(&NetConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
        let dims: Vec<(usize, usize)> = net.layers.iter().map(|l| (l.input_dim(), l.output_dim())).collect();
        assert_eq!(dims, [(512, 512), (512, 248), (248, 512), (512, 512)]);
        assert_eq!(net.layers[0].activation, Activation::LeakyRelu(0.7));
        assert_eq!(net.layers[1].activation, Activation::Tanh);
        assert_eq!(net.layers[3].activation, Activation::Identity);
    }

    #[test]
    fn assemble_concatenates_views_in_order() {
        let mut emb = ViewEmbeddings::zeros(3, 2, ViewDims::uniform(128));
        assert_eq!(assemble_input(&emb, 0).unwrap().len(), 512);
        assert!(assemble_input(&emb, 0).unwrap().iter().all(|&v| v == 0.0));
        emb.e.row_mut(1)[0] = 1.0;
        emb.s.row_mut(1)[0] = 2.0;
        emb.b.row_mut(1)[0] = 3.0;
        emb.d.row_mut(1)[127] = 4.0;
        let x = assemble_input(&emb, 1).unwrap();
        assert_eq!((x[0], x[128], x[256], x[511]), (1.0, 2.0, 3.0, 4.0));
        assert!(assemble_input(&emb, 3).is_err());
        let all = assemble_all(&emb);
        assert_eq!(all.row(1).to_vec(), x);
    }

    #[test]
    fn zero_network() {
        let net = FusionNet::zeros(&tiny());
        let out = net.forward(&[0.0; 8]).unwrap();
        assert_eq!(out.loss, 0.0);
        assert!(out.reconstruction.iter().all(|&v| v == 0.0));
        let x = [1.0, -2.0, 0.5, 0.0, 3.0, 0.25, -1.0, 2.0];
        let out = net.forward(&x).unwrap();
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        assert_eq!(out.loss, norm2);
        assert!(net.forward(&[0.0; 7]).is_err());
    }

    #[test]
    fn leaky_relu_slope() {
        assert_eq!(Activation::LeakyRelu(0.7).apply(-1.0), -0.7);
        // identity first layer weight, so the hidden unit sees -1
        let mut net = FusionNet::zeros(&tiny());
        net.layers[0].weight[[0, 0]] = 1.0;
        let x = [-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let t = net.trace(ArrayView2::from_shape((1, 8), &x).unwrap());
        assert_eq!(t.a[1][[0, 0]], -0.7);
    }

    #[test]
    fn zero_batch_zero_bias_gives_zero_gradients() {
        let net = FusionNet::new(&tiny(), &mut ChaCha8Rng::seed_from_u64(1));
        let (g, loss) = net.backward(Array2::zeros((5, 8)).view()).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.weight.iter().all(|w| w.iter().all(|&v| v == 0.0)));
        assert!(g.bias.iter().all(|b| b.iter().all(|&v| v == 0.0)));
    }

    /// Central differences of `batch_loss`, one parameter at a time.
    fn finite_difference_max_rel_error(net: &FusionNet, x: &Array2<f64>) -> f64 {
        let (g, _) = net.backward(x.view()).unwrap();
        let analytic: Vec<f64> = g
            .weight
            .iter()
            .zip(&g.bias)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied().collect::<Vec<_>>())
            .collect();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for (p, &a) in analytic.iter().enumerate() {
            let perturbed = |delta: f64| {
                let mut n = net.clone();
                let mut k = 0;
                n.visit_params_mut(|v| {
                    if k == p {
                        *v += delta;
                    }
                    k += 1;
                });
                n.batch_loss(x.view()).unwrap()
            };
            let fd = (perturbed(h) - perturbed(-h)) / (2.0 * h);
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-7));
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut net = FusionNet::new(&tiny(), &mut rng);
            net.visit_params_mut(|v| *v += rng.random_range(-0.1..0.1));
            let x = random_batch(&mut rng, 3, 8);
            let err = finite_difference_max_rel_error(&net, &x);
            assert!(err < 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn duplicated_batch_has_same_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = FusionNet::new(&tiny(), &mut rng);
        let x = random_batch(&mut rng, 4, 8);
        let doubled = ndarray::concatenate(Axis(0), &[x.view(), x.view()]).unwrap();
        let (a, la) = net.backward(x.view()).unwrap();
        let (b, lb) = net.backward(doubled.view()).unwrap();
        assert!((la - lb).abs() < 1e-12);
        for (wa, wb) in a.weight.iter().zip(&b.weight) {
            assert!(wa.iter().zip(wb).all(|(p, q)| (p - q).abs() < 1e-12));
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let net = FusionNet::new(&tiny(), &mut ChaCha8Rng::seed_from_u64(4));
        let mut buf = Vec::new();
        net.save(&mut buf).unwrap();
        assert!(buf.starts_with(b"cmvae-checkpoint 1\nlayers 4\nlayer 8 6 leaky_relu:0.7\n"));
        let back = FusionNet::load(buf.as_slice(), "ck").unwrap();
        assert_eq!(back, net);
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(FusionNet::load(cut.as_bytes(), "ck").is_err());
    }

    proptest! {
        #[test]
        fn bottleneck_inside_unit_cube(vals in prop::collection::vec(-3.0f64..3.0, 8), seed in 0u64..50) {
            let net = FusionNet::new(&tiny(), &mut ChaCha8Rng::seed_from_u64(seed));
            let out = net.forward(&vals).unwrap();
            prop_assert!(out.bottleneck.iter().all(|v| v.abs() < 1.0));
            prop_assert_eq!(out.clone(), net.forward(&vals).unwrap());
        }

        #[test]
        fn loss_invariant_under_batch_permutation(seed in 0u64..100) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = FusionNet::new(&tiny(), &mut rng);
            let x = random_batch(&mut rng, 6, 8);
            let mut perm: Vec<usize> = (0..6).collect();
            perm.shuffle(&mut rng);
            let y = x.select(Axis(0), &perm);
            let a = net.batch_loss(x.view()).unwrap();
            let b = net.batch_loss(y.view()).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    fn fifty_node_graph() -> JobGraph {
        use crate::ingest::Transition;
        use crate::titlenorm::NodeKey;
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let key = |n: usize| NodeKey::new(vec![format!("f{}", n % 5), format!("l{}", n / 10)], format!("c{}", n % 10));
        let ts: Vec<Transition> = (0..2000)
            .map(|_| {
                let a = rng.random_range(0..50);
                let b = (a + rng.random_range(1..6)) % 50;
                Transition {
                    src: key(a),
                    dst: key(b),
                    src_tenure_months: rng.random_range(1..48),
                }
            })
            .collect();
        JobGraph::build(&ts)
    }

    fn small_joint(epochs: usize) -> JointConfig {
        let dims = ViewDims::uniform(8);
        JointConfig {
            train: TrainConfig {
                epochs,
                seed: 9,
                ..TrainConfig::default()
            },
            dims,
            net: NetConfig {
                input_dim: 32,
                hidden_dim: 32,
                bottleneck_dim: 12,
                batch_size: 8,
                ..NetConfig::default()
            },
            schedule: Some(Schedule::uniform(500)),
            ..JointConfig::default()
        }
    }

    #[test]
    fn zero_epochs_encodes_initial_state() {
        let g = fifty_node_graph();
        let cfg = small_joint(0);
        let m = joint_train(&g, &cfg).unwrap();
        let trainer = ViewTrainer::new(&g, &cfg.train, cfg.views, cfg.schedule).unwrap();
        let emb0 = trainer.init_embeddings(&g, cfg.dims);
        let mut rng = ChaCha8Rng::seed_from_u64(crate::views::mix_seed(&[cfg.train.seed, 0xAE]));
        let net0 = FusionNet::new(&cfg.net, &mut rng);
        assert_eq!(m.emb, emb0);
        assert_eq!(m.net, net0);
        assert_eq!(m.fused, encode_all(&net0, &emb0).unwrap());
    }

    #[test]
    fn reconstruction_loss_falls() {
        let g = fifty_node_graph();
        assert_eq!(g.num_nodes(), 50);
        let m = joint_train(&g, &small_joint(20)).unwrap();
        let rel = &m.relative_fusion_losses;
        assert!(rel[19] < rel[0], "{rel:?}");
        assert!(m.fused.as_slice().iter().all(|v| v.abs() < 1.0));
        assert_eq!(m.fused.rows(), 50);
        assert_eq!(m.fused.dim(), 12);
    }

    #[test]
    fn joint_training_is_deterministic() {
        let g = fifty_node_graph();
        let a = joint_train(&g, &small_joint(3)).unwrap();
        let b = joint_train(&g, &small_joint(3)).unwrap();
        assert_eq!(a.fused, b.fused);
        assert_eq!(a.net, b.net);
        assert_eq!(a.fusion_losses, b.fusion_losses);
    }

    #[test]
    fn end_to_end_variant_moves_view_tables() {
        let g = fifty_node_graph();
        let mut cfg = small_joint(2);
        cfg.views = ViewSet::only(crate::views::ViewKind::Topology);
        let staged = joint_train(&g, &cfg).unwrap();
        cfg.end_to_end = true;
        let e2e = joint_train(&g, &cfg).unwrap();
        // balance table is untouched by view training, so only e2e moves it
        assert_ne!(staged.emb.b, e2e.emb.b);
    }

    #[test]
    fn rejects_mismatched_dims() {
        let g = fifty_node_graph();
        let mut cfg = small_joint(1);
        cfg.net.input_dim = 30;
        assert!(joint_train(&g, &cfg).is_err());
    }
}
