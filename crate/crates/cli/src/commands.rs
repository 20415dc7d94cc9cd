use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use job2vec::cmvae::{encode_all, joint_train, FusionNet};
use job2vec::evalkit::{self, EvalReport, EvalSplit};
use job2vec::ingest::{parse_records, write_records, ParsedRecords};
use job2vec::io::{open, write_atomic};
use job2vec::jobgraph::JobGraph;
use job2vec::pipeline::{self, Variant};
use job2vec::synthgen::generate;
use job2vec::titlenorm::TitleNormalizer;
use job2vec::views::{read_embeddings, write_embeddings, Table, ViewEmbeddings};
use log::{info, warn};

use crate::config::RunConfig;
use crate::{AggregateArgs, BuildGraphArgs, EvalArgs, Failure, GenSynthArgs, PredictArgs, TrainArgs};

pub const RUN_CONF: &str = "run.conf";
pub const GRAPH: &str = "graph.tsv";
pub const SPLIT: &str = "split.tsv";
pub const CHECKPOINT: &str = "cmvae.ckpt";
pub const FUSED: &str = "fused.emb";
const VIEW_TABLES: [&str; 6] = ["e", "e_prime", "s", "s_prime", "b", "d"];

fn variant_file(v: Variant) -> &'static str {
    match v {
        Variant::Full => FUSED,
        Variant::Topology => "topology.emb",
        Variant::Semantic => "semantic.emb",
    }
}

fn read_records(path: &Path) -> Result<ParsedRecords, Failure> {
    let parsed = parse_records(open(path)?)?;
    for s in parsed.skipped.iter().take(5) {
        warn!("{}:{}: skipped: {}", path.display(), s.line, s.reason);
    }
    if !parsed.skipped.is_empty() {
        warn!("{}: {} malformed lines skipped", path.display(), parsed.skipped.len());
    }
    Ok(parsed)
}

fn load_graph(path: &Path) -> Result<JobGraph, Failure> {
    Ok(JobGraph::load(open(path)?, &path.display().to_string())?)
}

fn save_table(path: &Path, keys: &[String], table: &Table) -> Result<(), Failure> {
    Ok(write_atomic(path, |w| write_embeddings(w, keys, table))?)
}

fn load_table(path: &Path) -> Result<Table, Failure> {
    let (_, t) = read_embeddings(open(path)?, &path.display().to_string())?;
    Ok(t)
}

fn require(path: PathBuf) -> Result<PathBuf, Failure> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Failure::Data(format!("missing model file {}", path.display())))
    }
}

pub fn gen_synth(a: &GenSynthArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let data = generate(&cfg.synth, cfg.exec())?;
    write_atomic(&a.out, |w| Ok(write_records(w, &data.records)?))?;
    let truth = a.truth.clone().unwrap_or_else(|| a.out.with_extension("truth.tsv"));
    write_atomic(&truth, |w| Ok(data.truth.write_tsv(w)?))?;
    info!(
        "{} records for {} persons -> {}; ground truth -> {}",
        data.records.len(),
        cfg.synth.n_persons,
        a.out.display(),
        truth.display()
    );
    Ok(())
}

pub fn aggregate(a: &AggregateArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let parsed = read_records(&a.input)?;
    let titles: Vec<&str> = parsed.records.iter().map(|r| r.title_raw.as_str()).collect();
    let norm = TitleNormalizer::fit(&titles, cfg.min_freq, cfg.exec());
    let map: BTreeMap<&str, String> = titles.iter().map(|t| (*t, norm.normalize(t).join(" "))).collect();
    let write = |w: &mut dyn Write| -> std::io::Result<()> {
        for (raw, n) in &map {
            writeln!(w, "{raw}\t{n}")?;
        }
        Ok(())
    };
    match &a.out {
        Some(p) => write_atomic(p, |w| Ok(write(w)?))?,
        None => write(&mut std::io::stdout().lock()).map_err(|e| Failure::Data(e.to_string()))?,
    }
    info!("{} distinct titles", map.len());
    Ok(())
}

pub fn build_graph(a: &BuildGraphArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let parsed = read_records(&a.input)?;
    let (graph, _) = pipeline::build_graph(&parsed.records, cfg.min_freq, cfg.snapshot, cfg.exec())?;
    write_atomic(&a.out, |w| Ok(graph.save(w)?))?;
    info!(
        "{} nodes, {} edges, {} self-loops dropped -> {}",
        graph.num_nodes(),
        graph.num_edges(),
        graph.self_loops_dropped(),
        a.out.display()
    );
    Ok(())
}

pub fn train(a: &TrainArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let graph = load_graph(&a.graph)?;
    let joint = cfg.joint()?;
    let split = evalkit::threshold_and_split(&graph, cfg.eval.weight_threshold, cfg.eval.split_seed)?;
    info!(
        "split: {} train, {} valid, {} test, {} cold-start dropped, {} candidates",
        split.train.len(),
        split.valid.len(),
        split.test.len(),
        split.cold_start_dropped.len(),
        split.candidate_nodes.len()
    );
    let dir = &a.model_dir;
    std::fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("cannot create {}: {e}", dir.display())))?;

    let train_graph = split.train_graph(&graph);
    let model = joint_train(&train_graph, &joint)?;
    if let (Some(first), Some(last)) = (model.relative_fusion_losses.first(), model.relative_fusion_losses.last()) {
        info!("job2vec: relative reconstruction loss {first:.4} -> {last:.4}");
    }
    let node_keys: Vec<String> = graph.nodes().iter().map(|n| n.export_key()).collect();
    let word_keys: Vec<String> = graph.vocabulary().words().to_vec();
    let emb = &model.emb;
    for (name, table) in VIEW_TABLES.iter().zip([&emb.e, &emb.e_prime, &emb.s, &emb.s_prime, &emb.b, &emb.d]) {
        let keys = if *name == "s_prime" { &word_keys } else { &node_keys };
        save_table(&dir.join(format!("{name}.emb")), keys, table)?;
    }
    save_table(&dir.join(FUSED), &node_keys, &model.fused)?;
    write_atomic(dir.join(CHECKPOINT), |w| Ok(model.net.save(w)?))?;

    for v in cfg.variants.iter().filter(|v| **v != Variant::Full) {
        let vectors = v.train(&train_graph, &joint)?;
        save_table(&dir.join(variant_file(*v)), &node_keys, &vectors)?;
        info!("{}: trained", v.name());
    }
    write_atomic(dir.join(GRAPH), |w| Ok(graph.save(w)?))?;
    write_atomic(dir.join(SPLIT), |w| evalkit::write_split(w, &split))?;
    write_atomic(dir.join(RUN_CONF), |w| Ok(w.write_all(cfg.to_text().as_bytes())?))?;
    info!("model written to {}", dir.display());
    Ok(())
}

/// Vectors of one variant as stored in the model directory. The fused
/// vectors are recomputed from the view tables and the checkpoint.
fn stored_vectors(dir: &Path, v: Variant) -> Result<Table, Failure> {
    match v {
        Variant::Full => {
            let ckpt = require(dir.join(CHECKPOINT))?;
            let net = FusionNet::load(open(&ckpt)?, &ckpt.display().to_string())?;
            let mut t = Vec::with_capacity(6);
            for name in VIEW_TABLES {
                t.push(load_table(&require(dir.join(format!("{name}.emb")))?)?);
            }
            let mut it = t.into_iter();
            let mut next = || it.next().unwrap();
            let emb = ViewEmbeddings {
                e: next(),
                e_prime: next(),
                s: next(),
                s_prime: next(),
                b: next(),
                d: next(),
            };
            Ok(encode_all(&net, &emb)?)
        }
        _ => load_table(&require(dir.join(variant_file(v)))?),
    }
}

fn load_split(dir: &Path, graph: &JobGraph) -> Result<EvalSplit, Failure> {
    let p = require(dir.join(SPLIT))?;
    Ok(evalkit::read_split(open(&p)?, &p.display().to_string(), graph)?)
}

pub fn eval(a: &EvalArgs, cfg: &RunConfig) -> Result<(), Failure> {
    let dir = &a.model_dir;
    // checked first so a missing checkpoint is reported by name
    require(dir.join(CHECKPOINT))?;
    let graph = load_graph(&require(dir.join(GRAPH))?)?;
    let split = load_split(dir, &graph)?;
    let exec = cfg.exec();
    let mut reports: Vec<EvalReport> = Vec::new();
    for &v in &cfg.variants {
        let vectors = stored_vectors(dir, v)?;
        reports.push(evalkit::evaluate(v.name(), &vectors, &split, exec)?);
    }
    let rates: Vec<f64> = cfg.rates.iter().copied().filter(|&r| r < 1.0).collect();
    if !rates.is_empty() {
        let joint = cfg.joint()?;
        for &v in &cfg.variants {
            reports.extend(pipeline::sweep_variant(&graph, &split, &joint, v, &rates, cfg.eval.split_seed)?);
        }
    }
    let mut text = String::from(EvalReport::TSV_HEADER);
    text.push('\n');
    for r in &reports {
        text.push_str(&r.tsv_row());
        text.push('\n');
    }
    match &a.out {
        Some(p) => write_atomic(p, |w| Ok(w.write_all(text.as_bytes())?))?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn predict(a: &PredictArgs) -> Result<(), Failure> {
    if a.k == 0 {
        return Err(Failure::Usage("--k must be at least 1".into()));
    }
    let (title, company) = a
        .query
        .rsplit_once('@')
        .ok_or_else(|| Failure::Usage(format!("query {:?} is not of the form title@company", a.query)))?;
    let dir = &a.model_dir;
    let graph = load_graph(&require(dir.join(GRAPH))?)?;
    let fused = load_table(&require(dir.join(FUSED))?)?;
    if fused.rows() != graph.num_nodes() {
        return Err(Failure::Data(format!(
            "{} has {} rows but the graph has {} nodes",
            FUSED,
            fused.rows(),
            graph.num_nodes()
        )));
    }
    let query = graph
        .find_node(title, company)
        .ok_or_else(|| Failure::Data(format!("no node matches {:?}", a.query)))?;
    let all: Vec<usize> = (0..graph.num_nodes()).collect();
    let q = fused.row(query);
    let mut out = std::io::stdout().lock();
    for id in evalkit::rank_candidates(query, &fused, &all).into_iter().take(a.k) {
        let n = graph.node(id);
        let cos = evalkit::cosine(q, fused.row(id));
        writeln!(out, "{}@{}\t{cos:.6}", n.title(), n.company).map_err(|e| Failure::Data(e.to_string()))?;
    }
    Ok(())
}
