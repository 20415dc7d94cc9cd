use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};

/// Dense row-major embedding table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    dim: usize,
    data: Vec<f64>,
}

impl Table {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Table {
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    pub fn uniform<R: Rng>(rows: usize, dim: usize, rng: &mut R) -> Self {
        let half = 0.5 / dim.max(1) as f64;
        Table {
            dim,
            data: (0..rows * dim).map(|_| rng.random_range(-half..half)).collect(),
        }
    }

    pub fn from_vec(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::invalid("table data is not a whole number of rows"));
        }
        Ok(Table { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("ragged rows"));
        }
        Ok(Table {
            dim,
            data: rows.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }
}

/// Writes `count dim` then one `key v1 .. vdim` line per row.
pub fn write_embeddings<W: Write, K: AsRef<str>>(mut out: W, keys: &[K], table: &Table) -> Result<()> {
    if keys.len() != table.rows() {
        return Err(Error::invalid(format!(
            "{} keys for {} rows",
            keys.len(),
            table.rows()
        )));
    }
    writeln!(out, "{} {}", table.rows(), table.dim())?;
    for (r, key) in keys.iter().enumerate() {
        let key = key.as_ref();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::invalid(format!("embedding key {key:?} is empty or has whitespace")));
        }
        write!(out, "{key}")?;
        for v in table.row(r) {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads the format of [`write_embeddings`]; rows keep file order.
pub fn read_embeddings<R: BufRead>(reader: R, origin: &str) -> Result<(Vec<String>, Table)> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(l) => l?,
        None => return Err(Error::format(origin, 1, "missing `count dim` header")),
    };
    let mut h = header.split_whitespace();
    let (count, dim) = match (h.next(), h.next(), h.next()) {
        (Some(c), Some(d), None) => (
            c.parse::<usize>().map_err(|_| Error::format(origin, 1, "bad count"))?,
            d.parse::<usize>().map_err(|_| Error::format(origin, 1, "bad dim"))?,
        ),
        _ => return Err(Error::format(origin, 1, "expected `count dim`")),
    };
    let mut keys = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    for r in 0..count {
        let lineno = r + 2;
        let line = lines
            .next()
            .ok_or_else(|| Error::format(origin, lineno, "unexpected end of file"))??;
        let mut parts = line.split(' ');
        let key = parts.next().unwrap_or_default();
        if key.is_empty() {
            return Err(Error::format(origin, lineno, "empty key"));
        }
        let before = data.len();
        for p in parts {
            data.push(
                p.parse::<f64>()
                    .map_err(|_| Error::format(origin, lineno, format!("bad value {p:?}")))?,
            );
        }
        if data.len() - before != dim {
            return Err(Error::format(origin, lineno, format!("expected {dim} values")));
        }
        keys.push(key.to_string());
    }
    let table = if dim == 0 {
        Table::zeros(0, 0)
    } else {
        Table::from_vec(dim, data)?
    };
    Ok((keys, table))
}
