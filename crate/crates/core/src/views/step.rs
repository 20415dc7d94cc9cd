use std::sync::atomic::{AtomicU64, Ordering};

use super::table::Table;
use super::{dot, log_sigmoid, sigmoid};

/// Row access used by the SGD steps, so the same update code drives both an
/// exclusively owned [`Table`] and a [`SharedTable`] written by several
/// workers at once.
pub trait RowStore {
    fn dim(&self) -> usize;
    fn read_row(&self, r: usize, out: &mut [f64]);
    /// `row[r] += scale * delta`
    fn add_to_row(&mut self, r: usize, delta: &[f64], scale: f64);
}

impl RowStore for Table {
    fn dim(&self) -> usize {
        Table::dim(self)
    }

    fn read_row(&self, r: usize, out: &mut [f64]) {
        out.copy_from_slice(self.row(r));
    }

    fn add_to_row(&mut self, r: usize, delta: &[f64], scale: f64) {
        for (x, d) in self.row_mut(r).iter_mut().zip(delta) {
            *x += scale * d;
        }
    }
}

/// A table of relaxed atomics. Concurrent row updates may interleave and
/// lose increments; that is accepted in throughput mode.
#[derive(Debug)]
pub struct SharedTable {
    dim: usize,
    cells: Vec<AtomicU64>,
}

impl SharedTable {
    pub fn from_table(t: &Table) -> Self {
        SharedTable {
            dim: t.dim(),
            cells: t.as_slice().iter().map(|v| AtomicU64::new(v.to_bits())).collect(),
        }
    }

    pub fn write_back(&self, t: &mut Table) {
        for (dst, c) in t.as_mut_slice().iter_mut().zip(&self.cells) {
            *dst = f64::from_bits(c.load(Ordering::Relaxed));
        }
    }
}

impl RowStore for &SharedTable {
    fn dim(&self) -> usize {
        self.dim
    }

    fn read_row(&self, r: usize, out: &mut [f64]) {
        let row = &self.cells[r * self.dim..(r + 1) * self.dim];
        for (o, c) in out.iter_mut().zip(row) {
            *o = f64::from_bits(c.load(Ordering::Relaxed));
        }
    }

    fn add_to_row(&mut self, r: usize, delta: &[f64], scale: f64) {
        let row = &self.cells[r * self.dim..(r + 1) * self.dim];
        for (c, d) in row.iter().zip(delta) {
            let v = f64::from_bits(c.load(Ordering::Relaxed)) + scale * d;
            c.store(v.to_bits(), Ordering::Relaxed);
        }
    }
}

/// Negative-sampling step on one positive pair.
///
/// The minimized sample loss is
/// `-ln sigma(u . v_pos) - sum_n ln sigma(-u . v_n)`, where `u` is row
/// `input_row` of `input` and the `v` rows come from `output`, or from
/// `input` itself when `output` is `None` (the symmetric balance and duration
/// views). All gradients are taken at the pre-step values and then applied
/// with step size `lr`, so repeated rows receive the sum of their gradients.
/// Returns the loss before the update.
pub fn pair_step<S: RowStore>(
    input: &mut S,
    mut output: Option<&mut S>,
    input_row: usize,
    positive: usize,
    negatives: &[usize],
    lr: f64,
) -> f64 {
    let dim = input.dim();
    let mut u = vec![0.0; dim];
    input.read_row(input_row, &mut u);
    let mut grad_u = vec![0.0; dim];
    let mut v = vec![0.0; dim];
    let mut loss = 0.0;

    // (row, coefficient) pairs: grad of output row = coefficient * u
    let mut out_grads: Vec<(usize, f64)> = Vec::with_capacity(negatives.len() + 1);
    let targets = std::iter::once((positive, true)).chain(negatives.iter().map(|&n| (n, false)));
    for (row, is_pos) in targets {
        match output.as_deref() {
            Some(o) => o.read_row(row, &mut v),
            None => input.read_row(row, &mut v),
        }
        let x = dot(&u, &v);
        // d(-ln sigma(x))/dx = sigma(x) - 1, d(-ln sigma(-x))/dx = sigma(x)
        let coeff = if is_pos {
            loss -= log_sigmoid(x);
            sigmoid(x) - 1.0
        } else {
            loss -= log_sigmoid(-x);
            sigmoid(x)
        };
        for (g, vv) in grad_u.iter_mut().zip(&v) {
            *g += coeff * vv;
        }
        out_grads.push((row, coeff));
    }

    if lr != 0.0 {
        for &(row, coeff) in &out_grads {
            match output.as_deref_mut() {
                Some(o) => o.add_to_row(row, &u, -lr * coeff),
                None => input.add_to_row(row, &u, -lr * coeff),
            }
        }
        input.add_to_row(input_row, &grad_u, -lr);
    }
    loss
}
