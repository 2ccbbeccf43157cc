//! Deterministic sparse Gaussian elimination rank.
//!
//! Pivots are chosen by minimal Markowitz cost `(r_i - 1)(c_j - 1)`, ties
//! broken by the smallest `(row, col)` pair. The rank itself does not depend
//! on the pivot rule; fill and runtime do.

use std::collections::BTreeSet;
use std::time::Instant;

use super::{RankMethod, RankReport, SparseMatrix};
use crate::algebra::Field;

struct Workspace<F: Field> {
    /// Active rows, each sorted by column.
    rows: Vec<Vec<(u32, F)>>,
    /// Active row indices carrying each column.
    col_rows: Vec<BTreeSet<u32>>,
    /// (count, index) orderings for pivot search.
    row_queue: BTreeSet<(usize, u32)>,
    col_queue: BTreeSet<(usize, u32)>,
    row_active: Vec<bool>,
    col_active: Vec<bool>,
}

impl<F: Field> Workspace<F> {
    fn new(m: &SparseMatrix<F>) -> Self {
        let mut rows: Vec<Vec<(u32, F)>> = vec![Vec::new(); m.nrows()];
        let mut col_rows: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); m.ncols()];
        for (r, c, v) in m.triplets() {
            rows[*r].push((*c as u32, v.clone()));
            col_rows[*c].insert(*r as u32);
        }
        let mut row_queue = BTreeSet::new();
        let mut row_active = vec![false; m.nrows()];
        for (i, row) in rows.iter().enumerate() {
            if !row.is_empty() {
                row_queue.insert((row.len(), i as u32));
                row_active[i] = true;
            }
        }
        let mut col_queue = BTreeSet::new();
        let mut col_active = vec![false; m.ncols()];
        for (j, set) in col_rows.iter().enumerate() {
            if !set.is_empty() {
                col_queue.insert((set.len(), j as u32));
                col_active[j] = true;
            }
        }
        Workspace {
            rows,
            col_rows,
            row_queue,
            col_queue,
            row_active,
            col_active,
        }
    }

    fn row_count(&self, i: u32) -> usize {
        self.rows[i as usize].len()
    }

    fn col_count(&self, j: u32) -> usize {
        self.col_rows[j as usize].len()
    }

    /// Minimal `(cost, row, col)` over all active nonzero positions.
    fn pick_pivot(&self) -> Option<(usize, u32, u32)> {
        let (min_rc, _) = *self.row_queue.first()?;
        let mut best: Option<(usize, u32, u32)> = None;
        // Zero-cost fast path: singleton rows and singleton columns.
        if min_rc == 1 {
            for &(rc, i) in self.row_queue.iter().take_while(|&&(rc, _)| rc == 1) {
                debug_assert_eq!(rc, 1);
                let j = self.rows[i as usize][0].0;
                let cand = (0usize, i, j);
                if best.map_or(true, |b| cand < b) {
                    best = Some(cand);
                }
            }
        }
        for &(cc, j) in self.col_queue.iter().take_while(|&&(cc, _)| cc == 1) {
            debug_assert_eq!(cc, 1);
            let i = *self.col_rows[j as usize].first().unwrap();
            let cand = (0usize, i, j);
            if best.map_or(true, |b| cand < b) {
                best = Some(cand);
            }
        }
        if let Some(b) = best {
            return Some(b);
        }
        // General scan, columns in increasing count order, pruned by the
        // lower bound (cc - 1)(min_rc - 1).
        for &(cc, j) in &self.col_queue {
            let bound = (cc - 1) * (min_rc - 1);
            if let Some((bc, _, _)) = best {
                if bound > bc {
                    break;
                }
            }
            let mut col_best: Option<(usize, u32)> = None;
            for &i in &self.col_rows[j as usize] {
                let cand = (self.row_count(i), i);
                if col_best.map_or(true, |b| cand < b) {
                    col_best = Some(cand);
                }
            }
            let (rc, i) = col_best.expect("active column is nonempty");
            let cand = ((rc - 1) * (cc - 1), i, j);
            if best.map_or(true, |b| cand < b) {
                best = Some(cand);
            }
        }
        best
    }

    fn set_row_count(&mut self, i: u32, old: usize, new: usize) {
        if old > 0 {
            self.row_queue.remove(&(old, i));
        }
        if new > 0 {
            self.row_queue.insert((new, i));
        } else {
            self.row_active[i as usize] = false;
        }
    }

    fn col_entry_added(&mut self, j: u32, i: u32) {
        let old = self.col_count(j);
        if old > 0 {
            self.col_queue.remove(&(old, j));
        }
        self.col_rows[j as usize].insert(i);
        self.col_queue.insert((old + 1, j));
        self.col_active[j as usize] = true;
    }

    fn col_entry_removed(&mut self, j: u32, i: u32) {
        let old = self.col_count(j);
        self.col_queue.remove(&(old, j));
        self.col_rows[j as usize].remove(&i);
        if old > 1 {
            self.col_queue.insert((old - 1, j));
        } else {
            self.col_active[j as usize] = false;
        }
    }

    /// rows[k] -= factor * rows[pivot]
    fn add_scaled_row(&mut self, k: u32, pivot: u32, factor: &F) {
        let pivot_row = std::mem::take(&mut self.rows[pivot as usize]);
        let target = std::mem::take(&mut self.rows[k as usize]);
        let old_len = target.len();
        let mut merged = Vec::with_capacity(target.len() + pivot_row.len());
        let mut a = target.into_iter().peekable();
        let mut b = pivot_row.iter().peekable();
        while let (Some(&(ca, _)), Some(&&(cb, _))) = (a.peek(), b.peek()) {
            if ca < cb {
                merged.push(a.next().unwrap());
            } else if ca > cb {
                let (c, v) = b.next().unwrap();
                let nv = -(factor.clone() * v.clone());
                self.col_entry_added(*c, k);
                merged.push((*c, nv));
            } else {
                let (c, va) = a.next().unwrap();
                let (_, vb) = b.next().unwrap();
                let nv = va - factor.clone() * vb.clone();
                if nv.is_zero() {
                    self.col_entry_removed(c, k);
                } else {
                    merged.push((c, nv));
                }
            }
        }
        merged.extend(a);
        for (c, v) in b {
            self.col_entry_added(*c, k);
            merged.push((*c, -(factor.clone() * v.clone())));
        }
        self.set_row_count(k, old_len, merged.len());
        self.rows[k as usize] = merged;
        self.rows[pivot as usize] = pivot_row;
    }

    fn retire_row(&mut self, i: u32) {
        let row = std::mem::take(&mut self.rows[i as usize]);
        self.set_row_count(i, row.len(), 0);
        for (c, _) in &row {
            self.col_entry_removed(*c, i);
        }
    }
}

/// Exact rank over the coefficient field by sparse Gaussian elimination.
pub fn rank_elimination<F: Field>(m: &SparseMatrix<F>) -> RankReport {
    let start = Instant::now();
    let prime = m.witness().and_then(|w| w.modulus_hint());
    let mut ws = Workspace::new(m);
    let mut rank = 0usize;
    while let Some((_, i, j)) = ws.pick_pivot() {
        let pivot_val = ws.rows[i as usize]
            .iter()
            .find(|(c, _)| *c == j)
            .map(|(_, v)| v.clone())
            .expect("pivot entry exists");
        let inv = pivot_val.inv().expect("pivot is nonzero");
        let others: Vec<u32> = ws.col_rows[j as usize]
            .iter()
            .copied()
            .filter(|&k| k != i)
            .collect();
        for k in others {
            let factor = ws.rows[k as usize]
                .iter()
                .find(|(c, _)| *c == j)
                .map(|(_, v)| v.clone() * inv.clone())
                .expect("column index is exact");
            ws.add_scaled_row(k, i, &factor);
        }
        ws.retire_row(i);
        rank += 1;
    }
    RankReport {
        rank,
        kernel_dim: m.ncols() - rank,
        method: RankMethod::Elimination,
        prime,
        elapsed: start.elapsed(),
        steps: rank,
        certified: true,
        warnings: Vec::new(),
    }
}
