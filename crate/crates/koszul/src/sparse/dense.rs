//! Dense rank and kernel oracle for small matrices, used to cross-check the
//! sparse paths and to exhibit explicit kernel vectors.

use std::time::Instant;

use super::{RankMethod, RankReport, SparseError, SparseMatrix};
use crate::algebra::Field;

/// Dense routines refuse matrices wider than this.
pub const DENSE_COLUMN_LIMIT: usize = 2000;

fn to_dense<F: Field>(m: &SparseMatrix<F>, ctx: &F) -> Result<Vec<Vec<F>>, SparseError> {
    if m.ncols() > DENSE_COLUMN_LIMIT {
        return Err(SparseError::TooLarge {
            ncols: m.ncols(),
            limit: DENSE_COLUMN_LIMIT,
        });
    }
    let zero = ctx.zero_like();
    let mut rows = vec![vec![zero; m.ncols()]; m.nrows()];
    for (r, c, v) in m.triplets() {
        rows[*r][*c] = v.clone();
    }
    Ok(rows)
}

/// Exact rank by dense row reduction.
pub fn rank_dense<F: Field>(m: &SparseMatrix<F>, ctx: &F) -> Result<RankReport, SparseError> {
    let start = Instant::now();
    let mut rows = to_dense(m, ctx)?;
    let mut rank = 0usize;
    for col in 0..m.ncols() {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = rows[rank][col].inv().map_err(SparseError::Algebra)?;
        for r in 0..rows.len() {
            if r == rank || rows[r][col].is_zero() {
                continue;
            }
            let factor = rows[r][col].clone() * inv.clone();
            for c in col..m.ncols() {
                let delta = factor.clone() * rows[rank][c].clone();
                rows[r][c] = rows[r][c].clone() - delta;
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    Ok(RankReport {
        rank,
        kernel_dim: m.ncols() - rank,
        method: RankMethod::DenseOracle,
        prime: m.witness().and_then(|w| w.modulus_hint()),
        elapsed: start.elapsed(),
        steps: rank,
        certified: true,
        warnings: Vec::new(),
    })
}

/// Basis of the right kernel `{x : Mx = 0}`, one vector per free column.
/// Each vector has a 1 in its free column and is zero in the other free
/// columns, which makes the output deterministic.
pub fn kernel_basis_dense<F: Field>(
    m: &SparseMatrix<F>,
    ctx: &F,
) -> Result<Vec<Vec<F>>, SparseError> {
    let mut rows = to_dense(m, ctx)?;
    let zero = ctx.zero_like();
    let one = ctx.one_like();
    // reduced row echelon form, tracking pivot columns
    let mut pivot_cols = Vec::new();
    let mut rank = 0usize;
    for col in 0..m.ncols() {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = rows[rank][col].inv().map_err(SparseError::Algebra)?;
        for c in col..m.ncols() {
            rows[rank][c] = rows[rank][c].clone() * inv.clone();
        }
        for r in 0..rows.len() {
            if r == rank || rows[r][col].is_zero() {
                continue;
            }
            let factor = rows[r][col].clone();
            for c in col..m.ncols() {
                let delta = factor.clone() * rows[rank][c].clone();
                rows[r][c] = rows[r][c].clone() - delta;
            }
        }
        pivot_cols.push(col);
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    let is_pivot: Vec<bool> = {
        let mut v = vec![false; m.ncols()];
        for &c in &pivot_cols {
            v[c] = true;
        }
        v
    };
    let mut basis = Vec::with_capacity(m.ncols() - rank);
    for free in 0..m.ncols() {
        if is_pivot[free] {
            continue;
        }
        let mut x = vec![zero.clone(); m.ncols()];
        x[free] = one.clone();
        for (r, &pc) in pivot_cols.iter().enumerate() {
            x[pc] = -rows[r][free].clone();
        }
        basis.push(x);
    }
    Ok(basis)
}
