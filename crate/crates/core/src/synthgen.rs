//! Synthetic career records with planted same-level title equivalences.
//!
//! Every company uses the same functions and the same number of levels, but
//! names its levels from a shared ladder of words with a company-specific
//! offset, so equal words do not always mean equal levels. Lateral moves
//! keep function and level and go to a peer company chosen from a symmetric
//! ring distribution; promotions raise the level by one, usually inside the
//! same company, and follow longer tenures.

use std::collections::BTreeMap;
use std::io::Write;

use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;

use crate::error::{Error, Result};
use crate::ingest::{CareerRecord, EndDate, YearMonth};
use crate::par::Exec;
use crate::titlenorm::{tokenize, NodeKey};
use crate::views::mix_seed;

const COMPANIES: [&str; 12] = [
    "Acme", "Globex", "Initech", "Umbrella", "Hooli", "Vandelay", "Stark", "Wayne", "Tyrell", "Cyberdyne", "Soylent",
    "Wonka",
];

const FUNCTIONS: [&str; 12] = [
    "Software Engineer",
    "Data Analyst",
    "Sales Representative",
    "Product Designer",
    "Security Architect",
    "Sourcing Buyer",
    "Marketing Specialist",
    "Financial Auditor",
    "Recruiting Coordinator",
    "Network Administrator",
    "Hardware Technician",
    "Legal Counsel",
];

const LEVELS: [&str; 9] = [
    "Junior",
    "Associate",
    "Senior",
    "Staff",
    "Principal",
    "Lead",
    "Director",
    "Executive",
    "Chief",
];

const SYLLABLES: [&str; 24] = [
    "ka", "zu", "mi", "tor", "vel", "qua", "nix", "ob", "ra", "sel", "dun", "pe", "fal", "gri", "ho", "jen", "lu", "mox",
    "tri", "yar", "bex", "cor", "dra", "wim",
];

/// Probability that a promotion stays inside the current company.
const INTERNAL_PROMOTION_PROB: f64 = 0.6;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_companies: usize,
    pub n_levels: usize,
    pub n_functions: usize,
    pub n_persons: usize,
    pub mean_tenure_years: f64,
    /// Probability that a move keeps the level.
    pub lateral_move_prob: f64,
    /// Tenure multiplier before a promotion; greater than 1.
    pub promote_tenure_factor: f64,
    /// Chance that a title carries a rare decorator word.
    pub noise_word_prob: f64,
    /// Jobs per career are uniform in this inclusive range.
    pub min_jobs: usize,
    pub max_jobs: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_companies: 10,
            n_levels: 5,
            n_functions: 8,
            n_persons: 6000,
            mean_tenure_years: 1.5,
            lateral_move_prob: 0.6,
            promote_tenure_factor: 2.0,
            noise_word_prob: 0.1,
            min_jobs: 3,
            max_jobs: 8,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_companies < 1 || self.n_levels < 1 || self.n_functions < 1 || self.n_persons < 1 {
            return Err(Error::invalid("company, level, function and person counts must be at least 1"));
        }
        for (name, p) in [
            ("lateral_move_prob", self.lateral_move_prob),
            ("noise_word_prob", self.noise_word_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if !(self.promote_tenure_factor > 1.0) || !self.promote_tenure_factor.is_finite() {
            return Err(Error::invalid("promote_tenure_factor must be greater than 1"));
        }
        if !(self.mean_tenure_years > 0.0) || !self.mean_tenure_years.is_finite() {
            return Err(Error::invalid("mean_tenure_years must be positive"));
        }
        if self.min_jobs < 1 || self.min_jobs > self.max_jobs {
            return Err(Error::invalid("need 1 <= min_jobs <= max_jobs"));
        }
        Ok(())
    }
}

pub fn company_name(c: usize) -> String {
    COMPANIES.get(c).map(|s| s.to_string()).unwrap_or_else(|| format!("Company{c}"))
}

pub fn function_name(f: usize) -> String {
    FUNCTIONS.get(f).map(|s| s.to_string()).unwrap_or_else(|| format!("Function{f} Officer"))
}

fn level_word(i: usize) -> String {
    LEVELS.get(i).map(|s| s.to_string()).unwrap_or_else(|| format!("Grade{i}"))
}

/// Ladder offset of a company: every fifth company starts one word higher.
fn level_offset(company: usize) -> usize {
    usize::from(company % 5 == 4)
}

/// Undecorated title for a position.
pub fn canonical_title(company: usize, function: usize, level: usize) -> String {
    format!("{} {}", level_word(level + level_offset(company)), function_name(function))
}

/// Planted labels of every (title, company) position.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroundTruth {
    /// (normalized title, company) -> (function, level).
    labels: BTreeMap<(String, String), (usize, usize)>,
}

impl GroundTruth {
    fn for_config(cfg: &SynthConfig) -> Self {
        let mut labels = BTreeMap::new();
        for c in 0..cfg.n_companies {
            for f in 0..cfg.n_functions {
                for l in 0..cfg.n_levels {
                    let title = tokenize(&canonical_title(c, f, l)).join(" ");
                    labels.insert((title, company_name(c)), (f, l));
                }
            }
        }
        GroundTruth { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// (function, level) of a node, if it is a planted position.
    pub fn label(&self, key: &NodeKey) -> Option<(usize, usize)> {
        self.labels.get(&(key.title(), key.company.clone())).copied()
    }

    /// True when both nodes are planted positions of equal level and function.
    pub fn same_level(&self, a: &NodeKey, b: &NodeKey) -> bool {
        matches!((self.label(a), self.label(b)), (Some(x), Some(y)) if x == y)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, usize, usize)> {
        self.labels.iter().map(|((t, c), &(f, l))| (t.as_str(), c.as_str(), f, l))
    }

    /// `title_norm<TAB>company<TAB>function<TAB>level` per line.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (t, c, f, l) in self.iter() {
            writeln!(out, "{t}\t{c}\t{f}\t{l}")?;
        }
        out.flush()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub records: Vec<CareerRecord>,
    pub truth: GroundTruth,
}

/// Generates every person's career independently from `(seed, person)`.
pub fn generate(cfg: &SynthConfig, exec: Exec) -> Result<Synthetic> {
    cfg.validate()?;
    let per_person = exec.map_range(cfg.n_persons, |p| person_records(cfg, p));
    Ok(Synthetic {
        records: per_person.into_iter().flatten().collect(),
        truth: GroundTruth::for_config(cfg),
    })
}

/// Peer company by ring distance `d`, with probability halving per step.
/// The distribution depends only on distance, so flows are symmetric.
fn peer_company<R: Rng>(from: usize, n: usize, rng: &mut R) -> usize {
    if n == 1 {
        return from;
    }
    let offsets: Vec<(usize, f64)> = (1..n).map(|o| (o, 0.5f64.powi(o.min(n - o) as i32 - 1))).collect();
    let total: f64 = offsets.iter().map(|x| x.1).sum();
    let mut u = rng.random::<f64>() * total;
    for &(o, w) in &offsets {
        if u < w {
            return (from + o) % n;
        }
        u -= w;
    }
    (from + offsets.last().unwrap().0) % n
}

fn decorator<R: Rng>(rng: &mut R) -> String {
    let s = Uniform::new(0, SYLLABLES.len()).unwrap();
    let mut w: String = (0..3).map(|_| SYLLABLES[s.sample(rng)]).collect();
    w[..1].make_ascii_uppercase();
    w
}

fn person_records(cfg: &SynthConfig, person: usize) -> Vec<CareerRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[cfg.seed, person as u64]));
    let tenure = Exp::new(1.0 / cfg.mean_tenure_years).unwrap();
    let person_id = format!("p{person:06}");

    let mut company = rng.random_range(0..cfg.n_companies);
    let function = rng.random_range(0..cfg.n_functions);
    let mut level = match rng.random::<f64>() {
        u if u < 0.5 => 0,
        u if u < 0.8 => 1,
        _ => 2,
    }
    .min(cfg.n_levels - 1);
    let jobs = rng.random_range(cfg.min_jobs..=cfg.max_jobs);
    let mut start = YearMonth::new(rng.random_range(1990..=2005), rng.random_range(1..=12)).unwrap();

    let mut out = Vec::with_capacity(jobs);
    for job in 0..jobs {
        // decide the next move first so the tenure reflects it
        let top = level + 1 >= cfg.n_levels;
        let next = if job + 1 == jobs {
            None
        } else if rng.random::<f64>() < cfg.lateral_move_prob || top {
            if cfg.lateral_move_prob == 0.0 || cfg.n_companies == 1 {
                None
            } else {
                Some((peer_company(company, cfg.n_companies, &mut rng), level, false))
            }
        } else {
            let c = if rng.random::<f64>() < INTERNAL_PROMOTION_PROB {
                company
            } else {
                peer_company(company, cfg.n_companies, &mut rng)
            };
            Some((c, level + 1, true))
        };
        let factor = match next {
            Some((_, _, true)) => cfg.promote_tenure_factor,
            _ => 1.0,
        };
        let months = ((tenure.sample(&mut rng) * factor * 12.0).round() as i32).max(1);
        let end_month = start.plus_months(months);

        let mut title = canonical_title(company, function, level);
        if rng.random::<f64>() < cfg.noise_word_prob {
            title.push_str(" - ");
            title.push_str(&decorator(&mut rng));
        }
        let end = if next.is_none() && rng.random::<f64>() < 0.5 {
            EndDate::Present
        } else {
            EndDate::Month(end_month)
        };
        out.push(CareerRecord {
            person_id: person_id.clone(),
            title_raw: title,
            company: company_name(company),
            start,
            end,
        });
        match next {
            Some((c, l, _)) => {
                company = c;
                level = l;
                start = end_month;
            }
            None => break,
        }
    }
    out
}
