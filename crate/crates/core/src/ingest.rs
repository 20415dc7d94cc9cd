//! Career-record parsing and transition extraction.
//!
//! Input is one record per line:
//! `person_id<TAB>title<TAB>company<TAB>start<TAB>end`, with dates written as
//! `YYYY/MM` (a single-digit month is accepted) and `present` allowed as the
//! end date.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::titlenorm::NodeKey;

/// A calendar month, stored as months since year 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth(i32);

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::invalid(format!("month {month} out of range")));
        }
        Ok(YearMonth(year * 12 + month as i32 - 1))
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(12)
    }

    pub fn month(self) -> u32 {
        self.0.rem_euclid(12) as u32 + 1
    }

    /// Whole months from `self` to `later`; negative if `later` is earlier.
    pub fn months_until(self, later: YearMonth) -> i32 {
        later.0 - self.0
    }

    pub fn plus_months(self, months: i32) -> YearMonth {
        YearMonth(self.0 + months)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (y, m) = s
            .split_once(['/', '-'])
            .ok_or_else(|| Error::invalid(format!("date {s:?} is not YYYY/MM")))?;
        let year: i32 = y
            .parse()
            .map_err(|_| Error::invalid(format!("bad year in {s:?}")))?;
        let month: u32 = m
            .parse()
            .map_err(|_| Error::invalid(format!("bad month in {s:?}")))?;
        YearMonth::new(year, month)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}/{:02}", self.year(), self.month())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EndDate {
    Month(YearMonth),
    Present,
}

impl EndDate {
    pub fn resolve(self, snapshot: YearMonth) -> YearMonth {
        match self {
            EndDate::Month(m) => m,
            EndDate::Present => snapshot,
        }
    }
}

impl fmt::Display for EndDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EndDate::Month(m) => m.fmt(f),
            EndDate::Present => f.write_str("present"),
        }
    }
}

/// One employment row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CareerRecord {
    pub person_id: String,
    pub title_raw: String,
    pub company: String,
    pub start: YearMonth,
    pub end: EndDate,
}

impl CareerRecord {
    /// Parses one tab-separated line.
    pub fn parse_line(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(Error::invalid(format!(
                "expected 5 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let person_id = fields[0].trim();
        let title = fields[1].trim();
        let company = fields[2].trim();
        if person_id.is_empty() || title.is_empty() || company.is_empty() {
            return Err(Error::invalid("empty person, title or company"));
        }
        let start: YearMonth = fields[3].parse()?;
        let end = match fields[4].trim() {
            e if e.eq_ignore_ascii_case("present") => EndDate::Present,
            e => EndDate::Month(e.parse()?),
        };
        if let EndDate::Month(e) = end {
            if e < start {
                return Err(Error::invalid(format!("end {e} precedes start {start}")));
            }
        }
        Ok(CareerRecord {
            person_id: person_id.to_string(),
            title_raw: title.to_string(),
            company: company.to_string(),
            start,
            end,
        })
    }

    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.person_id, self.title_raw, self.company, self.start, self.end
        )
    }

    /// Tenure in whole months, resolving `present` against `snapshot`.
    /// Clamped at zero when the snapshot precedes the start.
    pub fn tenure_months(&self, snapshot: YearMonth) -> u32 {
        self.start
            .months_until(self.end.resolve(snapshot))
            .max(0) as u32
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

/// Parsed records plus per-line diagnostics.
#[derive(Debug, Clone, Default)]
pub struct ParsedRecords {
    /// Grouped by person in order of first appearance; each person's rows
    /// sorted by start, then end, then input order.
    pub records: Vec<CareerRecord>,
    pub skipped: Vec<SkippedLine>,
}

impl ParsedRecords {
    /// Latest concrete end month, falling back to the latest start. `None`
    /// only when there are no records.
    pub fn default_snapshot(&self) -> Option<YearMonth> {
        default_snapshot(&self.records)
    }

    /// Iterates per-person slices of `records`.
    pub fn persons(&self) -> impl Iterator<Item = &[CareerRecord]> {
        persons(&self.records)
    }
}

pub fn default_snapshot(records: &[CareerRecord]) -> Option<YearMonth> {
    records
        .iter()
        .filter_map(|r| match r.end {
            EndDate::Month(m) => Some(m),
            EndDate::Present => None,
        })
        .max()
        .or_else(|| records.iter().map(|r| r.start).max())
}

/// Splits a person-grouped record list into per-person runs.
pub fn persons(records: &[CareerRecord]) -> impl Iterator<Item = &[CareerRecord]> {
    records.chunk_by(|a, b| a.person_id == b.person_id)
}

/// Reads every line of `reader`. Blank lines and lines starting with `#` are
/// ignored; malformed lines are skipped and reported.
pub fn parse_records<R: BufRead>(reader: R) -> Result<ParsedRecords> {
    let mut by_person: Vec<Vec<(usize, CareerRecord)>> = Vec::new();
    let mut slot: HashMap<String, usize> = HashMap::new();
    let mut skipped = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match CareerRecord::parse_line(trimmed) {
            Ok(rec) => {
                let next = by_person.len();
                let s = *slot.entry(rec.person_id.clone()).or_insert(next);
                if s == next {
                    by_person.push(Vec::new());
                }
                by_person[s].push((idx, rec));
            }
            Err(e) => skipped.push(SkippedLine {
                line: idx + 1,
                reason: e.to_string(),
            }),
        }
    }

    let mut records = Vec::new();
    for mut rows in by_person {
        rows.sort_by(|(ia, a), (ib, b)| {
            a.start
                .cmp(&b.start)
                .then_with(|| end_key(a.end).cmp(&end_key(b.end)))
                .then(ia.cmp(ib))
        });
        records.extend(rows.into_iter().map(|(_, r)| r));
    }
    Ok(ParsedRecords { records, skipped })
}

fn end_key(end: EndDate) -> (u8, YearMonth) {
    match end {
        EndDate::Month(m) => (0, m),
        EndDate::Present => (1, YearMonth(0)),
    }
}

/// Serializes records in the input format.
pub fn write_records<W: std::io::Write>(mut out: W, records: &[CareerRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(out, "{}", r.to_line())?;
    }
    Ok(())
}

/// A move from one job to the next within one person's history.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transition {
    pub src: NodeKey,
    pub dst: NodeKey,
    pub src_tenure_months: u32,
}

/// Emits one transition per consecutive pair of a person's records.
///
/// `records` must be grouped by person and sorted by start, as returned by
/// [`parse_records`]. Employment gaps do not break the chain.
pub fn extract_transitions<F>(records: &[CareerRecord], snapshot: YearMonth, key: F) -> Vec<Transition>
where
    F: Fn(&CareerRecord) -> NodeKey,
{
    let mut out = Vec::new();
    for person in persons(records) {
        let keys: Vec<NodeKey> = person.iter().map(&key).collect();
        for (w, pair) in person.windows(2).enumerate() {
            out.push(Transition {
                src: keys[w].clone(),
                dst: keys[w + 1].clone(),
                src_tenure_months: pair[0].tenure_months(snapshot),
            });
        }
    }
    out
}
