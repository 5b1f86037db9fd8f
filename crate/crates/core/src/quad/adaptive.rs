//! Globally adaptive cubature over axis-aligned cells.
//!
//! The cell with the largest error estimate is bisected along every axis
//! until the summed estimate meets the tolerance. Refinement happens in
//! batches evaluated in parallel; batch membership, tie-breaking and the
//! final summation order depend only on the cells, never on scheduling, so
//! results are bit-reproducible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::geom::GeomError;

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub depth: u32,
}

impl Cell {
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// Regular grid of `per_axis^n` cells over a box.
    pub fn grid(bounds: &[(f64, f64)], per_axis: usize) -> Vec<Cell> {
        let n = bounds.len();
        let per_axis = per_axis.max(1);
        let total = per_axis.pow(n as u32);
        (0..total)
            .map(|mut k| {
                let mut lo = vec![0.0; n];
                let mut hi = vec![0.0; n];
                for a in 0..n {
                    let i = k % per_axis;
                    k /= per_axis;
                    let (a0, a1) = bounds[a];
                    let h = (a1 - a0) / per_axis as f64;
                    lo[a] = a0 + i as f64 * h;
                    hi[a] = if i + 1 == per_axis { a1 } else { a0 + (i + 1) as f64 * h };
                }
                Cell { lo, hi, depth: 0 }
            })
            .collect()
    }

    fn split(&self) -> Vec<Cell> {
        let n = self.dim();
        let mid = self.center();
        (0..1usize << n)
            .map(|mask| {
                let mut lo = self.lo.clone();
                let mut hi = self.hi.clone();
                for a in 0..n {
                    if mask & (1 << a) == 0 {
                        hi[a] = mid[a];
                    } else {
                        lo[a] = mid[a];
                    }
                }
                Cell { lo, hi, depth: self.depth + 1 }
            })
            .collect()
    }

    fn order_key(&self, other: &Cell) -> Ordering {
        for (a, b) in self.lo.iter().zip(&other.lo) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellEstimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub max_depth: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOutcome {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
    pub cells: usize,
}

struct HeapEntry {
    error: f64,
    id: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    // largest error first, then the oldest cell
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.id.cmp(&self.id))
    }
}

/// Sum in a fixed binary tree.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        len => {
            let (a, b) = xs.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

pub fn integrate<F>(
    initial: Vec<Cell>,
    rule: F,
    opts: AdaptiveOptions,
) -> Result<AdaptiveOutcome, GeomError>
where
    F: Fn(&Cell) -> Result<CellEstimate, GeomError> + Sync,
{
    let evaluate = |cells: Vec<Cell>| -> Result<Vec<(Cell, CellEstimate)>, GeomError> {
        cells
            .into_par_iter()
            .map(|c| rule(&c).map(|e| (c, e)))
            .collect()
    };

    let mut leaves: Vec<Option<(Cell, CellEstimate)>> = Vec::new();
    let mut heap = BinaryHeap::new();
    let push = |leaves: &mut Vec<Option<(Cell, CellEstimate)>>,
                    heap: &mut BinaryHeap<HeapEntry>,
                    item: (Cell, CellEstimate)| {
        let id = leaves.len();
        if item.1.error > 0.0 {
            heap.push(HeapEntry { error: item.1.error, id });
        }
        leaves.push(Some(item));
    };
    for item in evaluate(initial)? {
        push(&mut leaves, &mut heap, item);
    }

    let mut subdivisions = 0usize;
    let converged = loop {
        let (value, error, magnitude) = totals(&leaves);
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target || error <= 64.0 * f64::EPSILON * magnitude {
            break true;
        }
        if subdivisions >= opts.max_subdivisions {
            break false;
        }
        let batch_len = (heap.len() / 8).clamp(1, 64);
        let mut batch = Vec::with_capacity(batch_len);
        while batch.len() < batch_len {
            let Some(entry) = heap.pop() else { break };
            let (cell, _) = leaves[entry.id].as_ref().expect("live leaf");
            if cell.depth >= opts.max_depth {
                // stays a leaf; its error keeps counting against the tolerance
                continue;
            }
            batch.push(entry.id);
        }
        if batch.is_empty() {
            break false;
        }
        let children: Vec<Cell> = batch
            .iter()
            .flat_map(|&id| {
                let (cell, _) = leaves[id].take().expect("live leaf");
                cell.split()
            })
            .collect();
        subdivisions += batch.len();
        for item in evaluate(children)? {
            push(&mut leaves, &mut heap, item);
        }
    };

    let mut live: Vec<(Cell, CellEstimate)> = leaves.into_iter().flatten().collect();
    live.sort_by(|a, b| a.0.order_key(&b.0));
    let values: Vec<f64> = live.iter().map(|(_, e)| e.value).collect();
    let errors: Vec<f64> = live.iter().map(|(_, e)| e.error).collect();
    Ok(AdaptiveOutcome {
        value: pairwise_sum(&values),
        error: pairwise_sum(&errors),
        converged,
        cells: live.len(),
    })
}

fn totals(leaves: &[Option<(Cell, CellEstimate)>]) -> (f64, f64, f64) {
    let mut value = 0.0;
    let mut error = 0.0;
    let mut magnitude = 0.0;
    for (_, e) in leaves.iter().flatten() {
        value += e.value;
        error += e.error;
        magnitude += e.value.abs();
    }
    (value, error, magnitude)
}
