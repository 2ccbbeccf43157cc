//! Scalar black-box Wiedemann rank over GF(p).
//!
//! The matrix is preconditioned as `Ã = D1 A D2` with independent uniformly
//! random nonzero diagonals, and the Krylov sequence `u^T B^i v` of the
//! square product `B = Ã^T Ã` (or `Ã Ã^T`, whichever is smaller) is fed to
//! Berlekamp-Massey. With high probability the minimal polynomial of `B` has
//! degree `rank + 1` when `B` is singular, so the rank is read off as
//! `deg(minpoly) - [x divides minpoly]`. The result is a Monte Carlo lower
//! bound, never an overestimate; `trials` repetitions take the maximum.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{RankMethod, RankReport, SparseError, SparseMatrix};
use crate::algebra::{Field, Fp64, PrimeModulus};

struct Csr {
    nrows: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<u64>,
}

impl Csr {
    fn from_triplets(nrows: usize, triplets: &[(usize, usize, u64)]) -> Csr {
        // triplets must be sorted by row
        let mut row_ptr = vec![0usize; nrows + 1];
        for &(r, _, _) in triplets {
            row_ptr[r + 1] += 1;
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr {
            nrows,
            row_ptr,
            col_idx: triplets.iter().map(|&(_, c, _)| c as u32).collect(),
            values: triplets.iter().map(|&(_, _, v)| v).collect(),
        }
    }

    fn apply(&self, x: &[u64], p: u64, out: &mut [u64]) {
        for r in 0..self.nrows {
            let mut acc = 0u128;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] as u128 * x[self.col_idx[k] as usize] as u128;
                // p < 2^62 keeps each product below 2^124; fold eagerly to
                // avoid overflow on long rows.
                if acc >= 1u128 << 126 {
                    acc %= p as u128;
                }
            }
            out[r] = (acc % p as u128) as u64;
        }
    }
}

fn scale_in_place(x: &mut [u64], d: &[u64], p: u64) {
    for (xi, di) in x.iter_mut().zip(d) {
        *xi = ((*xi as u128 * *di as u128) % p as u128) as u64;
    }
}

fn dot(a: &[u64], b: &[u64], p: u64) -> u64 {
    let mut acc = 0u128;
    for (x, y) in a.iter().zip(b) {
        acc += *x as u128 * *y as u128;
        if acc >= 1u128 << 126 {
            acc %= p as u128;
        }
    }
    (acc % p as u128) as u64
}

/// Berlekamp-Massey: minimal connection polynomial of `seq` over GF(p),
/// returned as `c` with `c[0] = 1`; the LFSR length is `c.len() - 1`.
pub(crate) fn berlekamp_massey(seq: &[u64], modulus: PrimeModulus) -> Vec<u64> {
    let p = modulus.get();
    let mut c = vec![1u64];
    let mut b = vec![1u64];
    let mut l = 0usize;
    let mut m = 1usize;
    let mut bb = 1u64; // last nonzero discrepancy
    for n in 0..seq.len() {
        let mut d = 0u128;
        for i in 0..=l {
            d += c[i] as u128 * seq[n - i] as u128;
            if d >= 1u128 << 126 {
                d %= p as u128;
            }
        }
        let d = (d % p as u128) as u64;
        if d == 0 {
            m += 1;
        } else {
            let coef = modulus.elem(d) * modulus.elem(bb).inv().expect("bb nonzero");
            if 2 * l <= n {
                let t = c.clone();
                if c.len() < b.len() + m {
                    c.resize(b.len() + m, 0);
                }
                for (i, &bi) in b.iter().enumerate() {
                    let sub = coef * modulus.elem(bi);
                    c[i + m] = (modulus.elem(c[i + m]) - sub).value();
                }
                l = n + 1 - l;
                b = t;
                bb = d;
                m = 1;
            } else {
                if c.len() < b.len() + m {
                    c.resize(b.len() + m, 0);
                }
                for (i, &bi) in b.iter().enumerate() {
                    let sub = coef * modulus.elem(bi);
                    c[i + m] = (modulus.elem(c[i + m]) - sub).value();
                }
                m += 1;
            }
        }
    }
    c.truncate(l + 1);
    c
}

/// Monte Carlo rank: maximum over `trials` independent preconditioned runs.
pub fn rank_wiedemann(
    m: &SparseMatrix<Fp64>,
    modulus: PrimeModulus,
    trials: usize,
    seed: u64,
) -> Result<RankReport, SparseError> {
    let start = Instant::now();
    let p = modulus.get();
    let mut warnings = Vec::new();
    let n_small = m.nrows().min(m.ncols());
    if m.nnz() == 0 || n_small == 0 {
        return Ok(RankReport {
            rank: 0,
            kernel_dim: m.ncols(),
            method: RankMethod::Wiedemann,
            prime: Some(p),
            elapsed: start.elapsed(),
            steps: 0,
            certified: true,
            warnings,
        });
    }
    if p <= 2 * n_small as u64 {
        warnings.push(format!(
            "prime {} is small relative to dimension {}; failure probability bound is weak",
            p, n_small
        ));
    }
    let trips: Vec<(usize, usize, u64)> = m
        .triplets()
        .iter()
        .map(|(r, c, v)| (*r, *c, v.value()))
        .collect();
    let a = Csr::from_triplets(m.nrows(), &trips);
    let mut trips_t: Vec<(usize, usize, u64)> =
        trips.iter().map(|&(r, c, v)| (c, r, v)).collect();
    trips_t.sort_by_key(|&(r, c, _)| (r, c));
    let at = Csr::from_triplets(m.ncols(), &trips_t);

    // B acts on the smaller side.
    let on_cols = m.ncols() <= m.nrows();
    let n = n_small;
    let mut best = 0usize;
    let mut probes = 0usize;
    for trial in 0..trials.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
        let d1: Vec<u64> = (0..m.nrows()).map(|_| rng.gen_range(1..p)).collect();
        let d2: Vec<u64> = (0..m.ncols()).map(|_| rng.gen_range(1..p)).collect();
        let u: Vec<u64> = (0..n).map(|_| rng.gen_range(0..p)).collect();
        let v: Vec<u64> = (0..n).map(|_| rng.gen_range(0..p)).collect();
        let mut w = v;
        let mut tmp_rows = vec![0u64; m.nrows()];
        let mut tmp_cols = vec![0u64; m.ncols()];
        let len = 2 * n + 2;
        let mut seq = Vec::with_capacity(len);
        for _ in 0..len {
            seq.push(dot(&u, &w, p));
            if on_cols {
                // w <- D2 A^T D1^2 A D2 w
                scale_in_place(&mut w, &d2, p);
                a.apply(&w, p, &mut tmp_rows);
                scale_in_place(&mut tmp_rows, &d1, p);
                scale_in_place(&mut tmp_rows, &d1, p);
                at.apply(&tmp_rows, p, &mut tmp_cols);
                scale_in_place(&mut tmp_cols, &d2, p);
                w.copy_from_slice(&tmp_cols);
            } else {
                // w <- D1 A D2^2 A^T D1 w
                scale_in_place(&mut w, &d1, p);
                at.apply(&w, p, &mut tmp_cols);
                scale_in_place(&mut tmp_cols, &d2, p);
                scale_in_place(&mut tmp_cols, &d2, p);
                a.apply(&tmp_cols, p, &mut tmp_rows);
                scale_in_place(&mut tmp_rows, &d1, p);
                w.copy_from_slice(&tmp_rows);
            }
            probes += 1;
        }
        let c = berlekamp_massey(&seq, modulus);
        let deg = c.len() - 1;
        // minpoly(x) = x^deg * c(1/x); its constant term is c[deg]
        let est = if deg == 0 {
            0
        } else if c[deg] == 0 {
            deg - 1
        } else {
            deg
        };
        best = best.max(est.min(n));
    }
    if best == 0 {
        return Err(SparseError::NonConvergence {
            trials: trials.max(1),
        });
    }
    Ok(RankReport {
        rank: best,
        kernel_dim: m.ncols() - best,
        method: RankMethod::Wiedemann,
        prime: Some(p),
        elapsed: start.elapsed(),
        steps: probes,
        certified: false,
        warnings,
    })
}
