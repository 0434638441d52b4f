//! Unordered-pair summation of `|u_i − u_j|^p · |i − j|^{-(N+ps)}` over an
//! aligned box of a grid, in integer grid units.
//!
//! The box is walked as rows along the last axis. For a pair of rows the
//! kernel weight depends only on the row offset and the in-row offset `δ`,
//! so each row pair reduces to one contiguous diagonal sum per `δ`. Each
//! row's contribution (all pairs with a partner in the same or a later row)
//! is an independent task; task results are combined in row order, so the
//! total does not depend on how many threads ran the tasks.

use rayon::prelude::*;

use crate::geometry::{linear_index, next_multi_index};
use crate::scalar::{CompensatedSum, Scalar};

#[derive(Clone, Copy, Debug)]
pub(crate) enum Power<T> {
    One,
    Two,
    General(T),
}

impl<T: Scalar> Power<T> {
    pub(crate) fn new(p: T) -> Self {
        if p == T::one() {
            Power::One
        } else if p == T::lit(2.0) {
            Power::Two
        } else {
            Power::General(p)
        }
    }
}

/// `|d|^{-exponent}` for every offset `d ∈ [0, n)^N`, lexicographic.
pub(crate) struct OffsetWeights<T> {
    n: usize,
    dim: usize,
    weights: Vec<T>,
}

impl<T: Scalar> OffsetWeights<T> {
    pub(crate) fn new(dim: usize, n: usize, exponent: T) -> Self {
        let mut weights = Vec::with_capacity(n.pow(dim as u32));
        let mut d = vec![0usize; dim];
        loop {
            let r2 = d
                .iter()
                .map(|&x| T::from_usize_exact(x * x))
                .fold(T::zero(), |a, b| a + b);
            weights.push(if r2 == T::zero() {
                T::zero()
            } else {
                r2.sqrt().powf(-exponent)
            });
            if !next_multi_index(&mut d, n) {
                break;
            }
        }
        Self { n, dim, weights }
    }
}

/// An `n^N` box of a parent grid with `parent_m` cells per axis, starting at
/// `origin`.
pub(crate) struct BoxView<'a, T> {
    pub values: &'a [T],
    pub parent_m: usize,
    pub origin: Vec<usize>,
    pub n: usize,
}

impl<T: Scalar> BoxView<'_, T> {
    fn dim(&self) -> usize {
        self.origin.len()
    }

    /// Leading (N−1)-index of every row, and the parent offset where it starts.
    fn rows(&self) -> (Vec<usize>, Vec<usize>) {
        let lead = self.dim() - 1;
        let count = self.n.pow(lead as u32);
        let mut idx = vec![0usize; lead];
        let mut full = vec![0usize; self.dim()];
        let mut lead_flat = Vec::with_capacity(count * lead);
        let mut starts = Vec::with_capacity(count);
        for _ in 0..count {
            lead_flat.extend_from_slice(&idx);
            for a in 0..lead {
                full[a] = self.origin[a] + idx[a];
            }
            full[lead] = self.origin[lead];
            starts.push(linear_index(&full, self.parent_m));
            next_multi_index(&mut idx, self.n);
        }
        (lead_flat, starts)
    }
}

#[inline(always)]
fn lane_sum<T: Scalar, F: Fn(T) -> T>(a: &[T], b: &[T], f: &F) -> T {
    let len = a.len().min(b.len());
    let (a, b) = (&a[..len], &b[..len]);
    let mut acc = [T::zero(); 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += f(x[0] - y[0]);
        acc[1] += f(x[1] - y[1]);
        acc[2] += f(x[2] - y[2]);
        acc[3] += f(x[3] - y[3]);
    }
    let mut tail = T::zero();
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += f(x - y);
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline(always)]
fn row_pair<T: Scalar, F: Fn(T) -> T>(x: &[T], y: &[T], w: &[T], same: bool, f: &F) -> T {
    let n = x.len();
    let mut total = T::zero();
    if same {
        for delta in 1..n {
            total += w[delta] * lane_sum(&x[delta..], &x[..n - delta], f);
        }
    } else {
        total += w[0] * lane_sum(x, y, f);
        for delta in 1..n {
            let s = lane_sum(&x[delta..], &y[..n - delta], f) + lane_sum(&x[..n - delta], &y[delta..], f);
            total += w[delta] * s;
        }
    }
    total
}

fn row_total<T: Scalar, F: Fn(T) -> T>(
    view: &BoxView<'_, T>,
    table: &OffsetWeights<T>,
    lead: &[usize],
    starts: &[usize],
    ri: usize,
    f: &F,
) -> T {
    let n = view.n;
    let dim = table.dim;
    let lead_dim = dim - 1;
    let li = &lead[ri * lead_dim..(ri + 1) * lead_dim];
    let x = &view.values[starts[ri]..starts[ri] + n];
    let mut acc = CompensatedSum::new();
    for rj in ri..starts.len() {
        let lj = &lead[rj * lead_dim..(rj + 1) * lead_dim];
        let base = li
            .iter()
            .zip(lj)
            .fold(0usize, |b, (&a, &c)| b * table.n + a.abs_diff(c))
            * table.n;
        let w = &table.weights[base..base + n];
        let y = &view.values[starts[rj]..starts[rj] + n];
        acc.add(row_pair(x, y, w, ri == rj, f));
    }
    acc.value()
}

fn sum_with<T: Scalar, F: Fn(T) -> T + Sync>(
    view: &BoxView<'_, T>,
    table: &OffsetWeights<T>,
    parallel: bool,
    f: F,
) -> T {
    debug_assert_eq!(view.n, table.n);
    let (lead, starts) = view.rows();
    let rows = starts.len();
    let partials: Vec<T> = if parallel {
        (0..rows)
            .into_par_iter()
            .map(|ri| row_total(view, table, &lead, &starts, ri, &f))
            .collect()
    } else {
        (0..rows)
            .map(|ri| row_total(view, table, &lead, &starts, ri, &f))
            .collect()
    };
    partials.into_iter().collect::<CompensatedSum<T>>().value()
}

/// `Σ_{i<j} |u_i − u_j|^p · |i − j|^{-(N+ps)}` over the box, grid units.
pub(crate) fn unordered_pair_sum<T: Scalar>(
    view: &BoxView<'_, T>,
    table: &OffsetWeights<T>,
    power: Power<T>,
    parallel: bool,
) -> T {
    match power {
        Power::One => sum_with(view, table, parallel, |d: T| d.abs()),
        Power::Two => sum_with(view, table, parallel, |d: T| d * d),
        Power::General(p) => sum_with(view, table, parallel, move |d: T| d.abs().powf(p)),
    }
}
