//! The job-transition graph: (title, company) nodes, directed edges weighted by
//! transition counts and annotated with mean source tenure.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::ingest::Transition;
use crate::par::Exec;
use crate::titlenorm::NodeKey;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeStats {
    /// Transition count for base edges; discounted path weight otherwise.
    pub w: f64,
    /// Mean source tenure in years, absent for extended edges.
    pub t_avg_years: Option<f64>,
    /// Path length that produced the edge; 1 for observed transitions.
    pub order: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub stats: EdgeStats,
}

/// Words of all node titles with dense ids, in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn insert(&mut self, w: &str) -> usize {
        if let Some(&id) = self.index.get(w) {
            return id;
        }
        let id = self.words.len();
        self.words.push(w.to_string());
        self.index.insert(w.to_string(), id);
        id
    }

    pub fn id(&self, w: &str) -> Option<usize> {
        self.index.get(w).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct JobGraph {
    nodes: Vec<NodeKey>,
    index: HashMap<NodeKey, usize>,
    edges: BTreeMap<(usize, usize), EdgeStats>,
    vocab: Vocabulary,
    self_loops_dropped: u64,
}

impl PartialEq for JobGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl JobGraph {
    fn add_node(&mut self, key: &NodeKey) -> usize {
        if let Some(&id) = self.index.get(key) {
            return id;
        }
        let id = self.nodes.len();
        for w in &key.title_norm {
            self.vocab.insert(w);
        }
        self.nodes.push(key.clone());
        self.index.insert(key.clone(), id);
        id
    }

    /// Aggregates transitions into weighted edges. Self-transitions are
    /// dropped and counted in [`JobGraph::self_loops_dropped`].
    pub fn build(transitions: &[Transition]) -> JobGraph {
        let mut g = JobGraph::default();
        let mut acc: BTreeMap<(usize, usize), (u64, u64)> = BTreeMap::new();
        for t in transitions {
            let s = g.add_node(&t.src);
            let d = g.add_node(&t.dst);
            if s == d {
                g.self_loops_dropped += 1;
                continue;
            }
            let e = acc.entry((s, d)).or_insert((0, 0));
            e.0 += 1;
            e.1 += t.src_tenure_months as u64;
        }
        g.edges = acc
            .into_iter()
            .map(|(k, (n, months))| {
                let stats = EdgeStats {
                    w: n as f64,
                    t_avg_years: Some(months as f64 / n as f64 / 12.0),
                    order: 1,
                };
                (k, stats)
            })
            .collect();
        g
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, id: usize) -> &NodeKey {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[NodeKey] {
        &self.nodes
    }

    pub fn node_id(&self, key: &NodeKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn self_loops_dropped(&self) -> u64 {
        self.self_loops_dropped
    }

    /// Total weight of stored edges; for a freshly built graph this is the
    /// number of retained transitions.
    pub fn total_weight(&self) -> f64 {
        self.edges.values().map(|e| e.w).sum()
    }

    pub fn edge(&self, src: usize, dst: usize) -> Option<&EdgeStats> {
        self.edges.get(&(src, dst))
    }

    pub fn weight(&self, src: usize, dst: usize) -> f64 {
        self.edge(src, dst).map_or(0.0, |e| e.w)
    }

    /// Edges in (src, dst) order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().map(|(&(src, dst), &stats)| Edge { src, dst, stats })
    }

    /// Looks up a raw title at a company. Title words outside the graph
    /// vocabulary are dropped first, mirroring title aggregation; if none
    /// remain the full token list is tried.
    pub fn find_node(&self, title_raw: &str, company: &str) -> Option<usize> {
        let tokens = crate::titlenorm::tokenize(title_raw);
        let known: Vec<String> = tokens.iter().filter(|t| self.vocab.id(t).is_some()).cloned().collect();
        let title = if known.is_empty() { tokens } else { known };
        self.node_id(&NodeKey::new(title, company.trim()))
    }

    /// Same nodes and vocabulary, keeping only the listed edges.
    pub fn with_edges(&self, keep: &[Edge]) -> JobGraph {
        JobGraph {
            nodes: self.nodes.clone(),
            index: self.index.clone(),
            edges: keep.iter().map(|e| ((e.src, e.dst), e.stats)).collect(),
            vocab: self.vocab.clone(),
            self_loops_dropped: 0,
        }
    }

    fn out_adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in self.edges() {
            adj[e.src].push((e.dst, e.stats.w));
        }
        adj
    }

    /// Adds edges for walks of length 2..=k. Weight of a length-`l` edge is
    /// `lambda^(l-1)` times the summed product of base weights over all
    /// length-`l` walks from `i` to `j`; walks returning to their start are
    /// not added.
    pub fn extend_k_steps(&self, k: u32, lambda: f64, exec: Exec) -> Result<ExtendedEdges> {
        if k < 1 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::invalid(format!("lambda {lambda} outside (0, 1]")));
        }
        let adj = self.out_adjacency();
        let n = self.nodes.len();
        let per_source = exec.map_range(n, |i| {
            let mut out = Vec::new();
            let mut frontier: BTreeMap<usize, f64> = adj[i].iter().copied().collect();
            let mut scale = 1.0;
            for order in 2..=k {
                scale *= lambda;
                let mut next: BTreeMap<usize, f64> = BTreeMap::new();
                for (&mid, &wm) in &frontier {
                    for &(j, w) in &adj[mid] {
                        *next.entry(j).or_insert(0.0) += wm * w;
                    }
                }
                for (&j, &w) in &next {
                    if j != i && w > 0.0 {
                        out.push(Edge {
                            src: i,
                            dst: j,
                            stats: EdgeStats {
                                w: scale * w,
                                t_avg_years: None,
                                order,
                            },
                        });
                    }
                }
                frontier = next;
            }
            out
        });
        let mut entries: Vec<Edge> = self.edges().collect();
        entries.extend(per_source.into_iter().flatten());
        Ok(ExtendedEdges { entries })
    }

    pub fn save<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "#nodes {} #edges {}", self.nodes.len(), self.edges.len())?;
        for (id, key) in self.nodes.iter().enumerate() {
            writeln!(out, "{id}\t{}\t{}", key.title(), key.company)?;
        }
        for e in self.edges() {
            let t = e
                .stats
                .t_avg_years
                .map_or_else(|| "-".to_string(), |t| t.to_string());
            writeln!(out, "{}\t{}\t{}\t{}\t{}", e.src, e.dst, e.stats.w, t, e.stats.order)?;
        }
        Ok(())
    }

    /// Reads the format written by [`JobGraph::save`]. `origin` names the
    /// source in error messages.
    pub fn load<R: BufRead>(reader: R, origin: &str) -> Result<JobGraph> {
        let mut lines = reader.lines().enumerate();
        let bad = |line: usize, msg: &str| Error::format(origin, line, msg);

        let Some((_, header)) = lines.next() else {
            return Ok(JobGraph::default());
        };
        let header = header?;
        if header.trim().is_empty() {
            return Ok(JobGraph::default());
        }
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (n, m) = match parts.as_slice() {
            ["#nodes", n, "#edges", m] => (
                n.parse::<usize>().map_err(|_| bad(1, "bad node count"))?,
                m.parse::<usize>().map_err(|_| bad(1, "bad edge count"))?,
            ),
            _ => return Err(bad(1, "expected header `#nodes N #edges M`")),
        };

        let mut g = JobGraph::default();
        for expect in 0..n {
            let lineno = expect + 2;
            let (_, line) = lines
                .next()
                .ok_or_else(|| bad(lineno, "unexpected end of file in node section"))?;
            let line = line?;
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(bad(lineno, "node line needs 3 fields"));
            }
            let id: usize = f[0].parse().map_err(|_| bad(lineno, "bad node id"))?;
            if id != expect {
                return Err(bad(lineno, "node ids must be consecutive from 0"));
            }
            let title: Vec<String> = f[1].split(' ').filter(|s| !s.is_empty()).map(String::from).collect();
            if title.is_empty() {
                return Err(bad(lineno, "empty title"));
            }
            let key = NodeKey::new(title, f[2]);
            if g.index.contains_key(&key) {
                return Err(bad(lineno, "duplicate node"));
            }
            g.add_node(&key);
        }
        for e in 0..m {
            let lineno = n + e + 2;
            let (_, line) = lines
                .next()
                .ok_or_else(|| bad(lineno, "unexpected end of file in edge section"))?;
            let line = line?;
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 5 {
                return Err(bad(lineno, "edge line needs 5 fields"));
            }
            let src: usize = f[0].parse().map_err(|_| bad(lineno, "bad source id"))?;
            let dst: usize = f[1].parse().map_err(|_| bad(lineno, "bad target id"))?;
            let w: f64 = f[2].parse().map_err(|_| bad(lineno, "bad weight"))?;
            let t_avg_years = match f[3] {
                "-" => None,
                t => Some(t.parse::<f64>().map_err(|_| bad(lineno, "bad duration"))?),
            };
            let order: u32 = f[4].parse().map_err(|_| bad(lineno, "bad order"))?;
            if src >= n || dst >= n {
                return Err(bad(lineno, "edge endpoint out of range"));
            }
            if src == dst {
                return Err(bad(lineno, "self-loop edge"));
            }
            if !(w > 0.0 && w.is_finite()) || order < 1 || t_avg_years.is_some_and(|t| !(t >= 0.0)) {
                return Err(bad(lineno, "edge statistics out of range"));
            }
            if g
                .edges
                .insert((src, dst), EdgeStats { w, t_avg_years, order })
                .is_some()
            {
                return Err(bad(lineno, "duplicate edge"));
            }
        }
        if let Some((idx, line)) = lines.next() {
            if !line?.trim().is_empty() {
                return Err(bad(idx + 1, "trailing content after declared edges"));
            }
        }
        Ok(g)
    }
}

/// Base edges plus higher-order walk edges. Entries are kept per order, so a
/// pair reachable by several walk lengths appears once per length; its
/// effective weight is the sum (see [`ExtendedEdges::merged`]).
#[derive(Debug, Clone, Default)]
pub struct ExtendedEdges {
    pub entries: Vec<Edge>,
}

impl ExtendedEdges {
    pub fn base(&self) -> impl Iterator<Item = &Edge> {
        self.entries.iter().filter(|e| e.stats.order == 1)
    }

    /// One entry per (src, dst) with weights of all orders added.
    pub fn merged(&self) -> BTreeMap<(usize, usize), f64> {
        let mut m = BTreeMap::new();
        for e in &self.entries {
            *m.entry((e.src, e.dst)).or_insert(0.0) += e.stats.w;
        }
        m
    }
}
