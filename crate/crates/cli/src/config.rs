//! Plain-text `key = value` run configuration.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use job2vec::cmvae::{JointConfig, LossWeights, NetConfig};
use job2vec::ingest::YearMonth;
use job2vec::pipeline::{EvalConfig, Variant};
use job2vec::synthgen::SynthConfig;
use job2vec::titlenorm::TitleNormalizer;
use job2vec::views::{TrainConfig, ViewDims};
use job2vec::Exec;

use crate::Failure;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub synth: SynthConfig,
    pub min_freq: u64,
    pub snapshot: Option<YearMonth>,
    pub eval: EvalConfig,
    pub train: TrainConfig,
    pub dims: usize,
    pub hidden_dim: usize,
    pub bottleneck_dim: usize,
    pub negative_slope: f64,
    pub cmvae_learning_rate: f64,
    pub batch_size: usize,
    pub weights: LossWeights,
    pub e2e: bool,
    pub deterministic: bool,
    pub rates: Vec<f64>,
    pub variants: Vec<Variant>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let net = NetConfig::default();
        RunConfig {
            synth: SynthConfig::default(),
            min_freq: TitleNormalizer::DEFAULT_MIN_FREQ,
            snapshot: None,
            eval: EvalConfig::default(),
            train: TrainConfig::default(),
            dims: ViewDims::default().topology,
            hidden_dim: net.hidden_dim,
            bottleneck_dim: net.bottleneck_dim,
            negative_slope: net.negative_slope,
            cmvae_learning_rate: net.learning_rate,
            batch_size: net.batch_size,
            weights: LossWeights::default(),
            e2e: false,
            deterministic: false,
            rates: Vec::new(),
            variants: Variant::ALL.to_vec(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, Failure> {
    value
        .parse()
        .map_err(|_| Failure::Usage(format!("bad value {value:?} for key `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, Failure> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Failure::Usage(format!("bad value {value:?} for key `{key}`; expected true or false"))),
    }
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Failure> {
        let v = value.trim();
        match key {
            "persons" => self.synth.n_persons = parse(key, v)?,
            "companies" => self.synth.n_companies = parse(key, v)?,
            "levels" => self.synth.n_levels = parse(key, v)?,
            "functions" => self.synth.n_functions = parse(key, v)?,
            "mean_tenure" => self.synth.mean_tenure_years = parse(key, v)?,
            "lateral_prob" => self.synth.lateral_move_prob = parse(key, v)?,
            "promote_factor" => self.synth.promote_tenure_factor = parse(key, v)?,
            "noise_word_prob" => self.synth.noise_word_prob = parse(key, v)?,
            "min_jobs" => self.synth.min_jobs = parse(key, v)?,
            "max_jobs" => self.synth.max_jobs = parse(key, v)?,
            "seed" => {
                let s = parse(key, v)?;
                self.synth.seed = s;
                self.train.seed = s;
            }
            "min_freq" => self.min_freq = parse(key, v)?,
            "snapshot" => {
                self.snapshot = match v {
                    "" | "auto" => None,
                    _ => Some(parse(key, v)?),
                }
            }
            "weight_threshold" => self.eval.weight_threshold = parse(key, v)?,
            "split_seed" => self.eval.split_seed = parse(key, v)?,
            "dims" => self.dims = parse(key, v)?,
            "epochs" => self.train.epochs = parse(key, v)?,
            "learning_rate" => self.train.learning_rate = parse(key, v)?,
            "min_learning_rate" => self.train.min_learning_rate = parse(key, v)?,
            "negatives" => self.train.negatives_per_positive = parse(key, v)?,
            "noise_power" => self.train.noise_power = parse(key, v)?,
            "k" => self.train.k = parse(key, v)?,
            "lambda" => self.train.lambda = parse(key, v)?,
            "hidden_dim" => self.hidden_dim = parse(key, v)?,
            "bottleneck_dim" => self.bottleneck_dim = parse(key, v)?,
            "negative_slope" => self.negative_slope = parse(key, v)?,
            "cmvae_learning_rate" => self.cmvae_learning_rate = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "weight_topology" => self.weights.topology = parse(key, v)?,
            "weight_semantic" => self.weights.semantic = parse(key, v)?,
            "weight_balance" => self.weights.balance = parse(key, v)?,
            "weight_duration" => self.weights.duration = parse(key, v)?,
            "weight_fusion" => self.weights.fusion = parse(key, v)?,
            "e2e" => self.e2e = parse_bool(key, v)?,
            "deterministic" => self.deterministic = parse_bool(key, v)?,
            "rates" => {
                self.rates = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(key, s.trim()))
                    .collect::<Result<_, _>>()?
            }
            "variants" => {
                self.variants = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| Variant::parse(s.trim()).map_err(|e| Failure::Usage(e.to_string())))
                    .collect::<Result<_, _>>()?
            }
            _ => return Err(Failure::Usage(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), Failure> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("{origin}:{}: expected `key = value`", i + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| Failure::Usage(format!("{origin}:{}: {}", i + 1, e.message())))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Data(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Every key with its current value, in a stable order.
    pub fn to_text(&self) -> String {
        let s = &self.synth;
        let t = &self.train;
        let w = &self.weights;
        let pairs: Vec<(&str, String)> = vec![
            ("persons", s.n_persons.to_string()),
            ("companies", s.n_companies.to_string()),
            ("levels", s.n_levels.to_string()),
            ("functions", s.n_functions.to_string()),
            ("mean_tenure", s.mean_tenure_years.to_string()),
            ("lateral_prob", s.lateral_move_prob.to_string()),
            ("promote_factor", s.promote_tenure_factor.to_string()),
            ("noise_word_prob", s.noise_word_prob.to_string()),
            ("min_jobs", s.min_jobs.to_string()),
            ("max_jobs", s.max_jobs.to_string()),
            ("seed", t.seed.to_string()),
            ("min_freq", self.min_freq.to_string()),
            ("snapshot", self.snapshot.map_or_else(|| "auto".into(), |m| m.to_string())),
            ("weight_threshold", self.eval.weight_threshold.to_string()),
            ("split_seed", self.eval.split_seed.to_string()),
            ("dims", self.dims.to_string()),
            ("epochs", t.epochs.to_string()),
            ("learning_rate", t.learning_rate.to_string()),
            ("min_learning_rate", t.min_learning_rate.to_string()),
            ("negatives", t.negatives_per_positive.to_string()),
            ("noise_power", t.noise_power.to_string()),
            ("k", t.k.to_string()),
            ("lambda", t.lambda.to_string()),
            ("hidden_dim", self.hidden_dim.to_string()),
            ("bottleneck_dim", self.bottleneck_dim.to_string()),
            ("negative_slope", self.negative_slope.to_string()),
            ("cmvae_learning_rate", self.cmvae_learning_rate.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("weight_topology", w.topology.to_string()),
            ("weight_semantic", w.semantic.to_string()),
            ("weight_balance", w.balance.to_string()),
            ("weight_duration", w.duration.to_string()),
            ("weight_fusion", w.fusion.to_string()),
            ("e2e", self.e2e.to_string()),
            ("deterministic", self.deterministic.to_string()),
            ("rates", join(&self.rates)),
            ("variants", join(self.variants.iter().map(|v| v.name()))),
        ];
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn exec(&self) -> Exec {
        if self.deterministic {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }

    pub fn joint(&self) -> Result<JointConfig, Failure> {
        if self.dims == 0 || self.hidden_dim == 0 || self.bottleneck_dim == 0 || self.batch_size == 0 {
            return Err(Failure::Usage("dims, hidden_dim, bottleneck_dim and batch_size must be positive".into()));
        }
        let dims = ViewDims::uniform(self.dims);
        let mut train = self.train.clone();
        train.exec = self.exec();
        train.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(JointConfig {
            train,
            dims,
            net: NetConfig {
                input_dim: dims.total(),
                hidden_dim: self.hidden_dim,
                bottleneck_dim: self.bottleneck_dim,
                negative_slope: self.negative_slope,
                learning_rate: self.cmvae_learning_rate,
                batch_size: self.batch_size,
            },
            end_to_end: self.e2e,
            weights: self.weights,
            ..JointConfig::default()
        })
    }
}
