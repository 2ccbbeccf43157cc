use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn pm(p: u64) -> PrimeModulus {
    PrimeModulus::new(p).unwrap()
}

fn from_dense(rows: &[Vec<u64>], modulus: PrimeModulus) -> SparseMatrix<Fp64> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut triplets = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            triplets.push((i, j, modulus.elem(v)));
        }
    }
    SparseMatrix::new(rows.len(), ncols, triplets).unwrap()
}

/// Exact planted rank: start from a partial identity and apply random
/// elementary row/column operations, which preserve rank.
fn planted(
    nrows: usize,
    ncols: usize,
    rank: usize,
    modulus: PrimeModulus,
    seed: u64,
) -> SparseMatrix<Fp64> {
    assert!(rank <= nrows.min(ncols));
    let p = modulus.get();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dense = vec![vec![modulus.zero(); ncols]; nrows];
    for i in 0..rank {
        dense[i][i] = modulus.one();
    }
    for _ in 0..3 * (nrows + ncols) {
        let c = modulus.elem(rng.gen_range(1..p));
        if rng.gen_bool(0.5) && nrows > 1 {
            let (a, b) = distinct_pair(&mut rng, nrows);
            for j in 0..ncols {
                let delta = c * dense[b][j];
                dense[a][j] = dense[a][j] + delta;
            }
        } else if ncols > 1 {
            let (a, b) = distinct_pair(&mut rng, ncols);
            for row in dense.iter_mut() {
                let delta = c * row[b];
                row[a] = row[a] + delta;
            }
        }
    }
    let mut triplets = Vec::new();
    for (i, row) in dense.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            triplets.push((i, j, v));
        }
    }
    SparseMatrix::new(nrows, ncols, triplets).unwrap()
}

fn distinct_pair<R: Rng>(rng: &mut R, n: usize) -> (usize, usize) {
    let a = rng.gen_range(0..n);
    let mut b = rng.gen_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

#[test]
fn identity_sms_exact_text() {
    let m = SparseMatrix::identity(2, pm(131).one());
    assert_eq!(write_sms(&m), "2 2 M\n1 1 1\n2 2 1\n0 0 0\n");
}

#[test]
fn empty_matrix_sms() {
    let m: SparseMatrix<Fp64> = SparseMatrix::zero(3, 4);
    assert_eq!(write_sms(&m), "3 4 M\n0 0 0\n");
    let back = read_sms(&write_sms(&m), pm(131)).unwrap();
    assert_eq!(back.nrows(), 3);
    assert_eq!(back.ncols(), 4);
    assert_eq!(back.nnz(), 0);
}

#[test]
fn read_sms_rejects_missing_terminator() {
    let err = read_sms("2 2 M\n1 1 1\n", pm(131)).unwrap_err();
    assert!(matches!(err, SparseError::ParseError { .. }));
}

#[test]
fn read_sms_rejects_out_of_range() {
    let err = read_sms("2 2 M\n3 1 1\n0 0 0\n", pm(131)).unwrap_err();
    assert!(matches!(err, SparseError::IndexOutOfRange { .. }));
}

#[test]
fn read_sms_rejects_zero_reduction() {
    let err = read_sms("2 2 M\n1 1 131\n0 0 0\n", pm(131)).unwrap_err();
    assert!(matches!(err, SparseError::ParseError { .. }));
}

#[test]
fn read_sms_reduces_negative_values() {
    let m = read_sms("1 1 M\n1 1 -1\n0 0 0\n", pm(131)).unwrap();
    assert_eq!(m.triplets()[0].2.value(), 130);
}

#[test]
fn duplicate_entries_rejected() {
    let modulus = pm(131);
    let err = SparseMatrix::new(
        2,
        2,
        vec![(0, 0, modulus.one()), (0, 0, modulus.elem(2))],
    )
    .unwrap_err();
    assert!(matches!(err, SparseError::DuplicateEntry { row: 0, col: 0 }));
}

#[test]
fn rank_identity_and_zero() {
    let modulus = pm(131);
    let id = SparseMatrix::identity(5, modulus.one());
    assert_eq!(rank_elimination(&id).rank, 5);
    let z: SparseMatrix<Fp64> = SparseMatrix::zero(4, 7);
    let r = rank_elimination(&z);
    assert_eq!(r.rank, 0);
    assert_eq!(r.kernel_dim, 7);
}

#[test]
fn rank_rank_one_outer_product() {
    let modulus = pm(131);
    // rows are multiples of (1, 2, 3)
    let m = from_dense(&[vec![1, 2, 3], vec![2, 4, 6], vec![5, 10, 15]], modulus);
    let r = rank_elimination(&m);
    assert_eq!(r.rank, 1);
    assert_eq!(r.kernel_dim, 2);
}

#[test]
fn elimination_matches_dense_on_planted_ranks() {
    let modulus = pm(65537);
    for seed in 0..10u64 {
        let nrows = 6 + (seed as usize % 5);
        let ncols = 5 + (seed as usize % 7);
        let rank = seed as usize % (nrows.min(ncols) + 1);
        let m = planted(nrows, ncols, rank, modulus, seed);
        let elim = rank_elimination(&m);
        let dense = rank_dense(&m, &modulus.one()).unwrap();
        assert_eq!(elim.rank, rank, "seed {}", seed);
        assert_eq!(dense.rank, rank, "seed {}", seed);
    }
}

#[test]
fn wiedemann_matches_planted_rank() {
    let modulus = pm(65537);
    for seed in 0..6u64 {
        let rank = 3 + seed as usize % 5;
        let m = planted(12, 9, rank, modulus, 100 + seed);
        let r = rank_wiedemann(&m, modulus, 3, seed).unwrap();
        assert_eq!(r.rank, rank, "seed {}", seed);
        assert!(!r.certified);
    }
}

#[test]
fn wiedemann_zero_matrix_is_exact() {
    let z: SparseMatrix<Fp64> = SparseMatrix::zero(4, 4);
    let r = rank_wiedemann(&z, pm(131), 3, 0).unwrap();
    assert_eq!(r.rank, 0);
    assert_eq!(r.kernel_dim, 4);
}

#[test]
fn wiedemann_warns_on_small_prime() {
    let modulus = pm(131);
    let m = planted(80, 80, 40, modulus, 7);
    let r = rank_wiedemann(&m, modulus, 3, 1).unwrap();
    assert!(r.warnings.iter().any(|w| w.contains("small")));
}

#[test]
fn kernel_of_row_of_ones() {
    let modulus = pm(131);
    let m = from_dense(&[vec![1, 1]], modulus);
    let basis = kernel_basis_dense(&m, &modulus.one()).unwrap();
    assert_eq!(basis.len(), 1);
    assert_eq!(basis[0][0].value(), 130);
    assert_eq!(basis[0][1].value(), 1);
}

#[test]
fn kernel_vectors_are_annihilated() {
    let modulus = pm(65537);
    for seed in 0..5u64 {
        let m = planted(8, 11, 5, modulus, 200 + seed);
        let basis = kernel_basis_dense(&m, &modulus.one()).unwrap();
        assert_eq!(basis.len(), 11 - 5);
        for x in &basis {
            for row in 0..m.nrows() {
                let mut acc = modulus.zero();
                for (r, c, v) in m.triplets() {
                    if *r == row {
                        acc = acc + *v * x[*c];
                    }
                }
                assert!(acc.is_zero());
            }
        }
    }
}

#[test]
fn dense_refuses_wide_matrices() {
    let modulus = pm(131);
    let m: SparseMatrix<Fp64> = SparseMatrix::zero(1, DENSE_COLUMN_LIMIT + 1);
    let err = rank_dense(&m, &modulus.one()).unwrap_err();
    assert!(matches!(err, SparseError::TooLarge { .. }));
}

#[test]
fn multi_prime_flags_p_divisible_entry() {
    // the entry 131 vanishes modulo 131 but not modulo 257
    let gen = |modulus: PrimeModulus| {
        SparseMatrix::new(1, 1, vec![(0, 0, modulus.elem_i64(131))]).map_err(|e| e.to_string())
    };
    let report = multi_prime_rank(gen, &[131, 257]).unwrap();
    assert!(!report.agree);
    assert_eq!(report.max_rank, 1);
    assert_eq!(report.runs[0].rank, 0);
    assert_eq!(report.runs[1].rank, 1);
}

#[test]
fn multi_prime_agreement() {
    let gen = |modulus: PrimeModulus| Ok(planted(9, 7, 4, modulus, 42));
    let report = multi_prime_rank(gen, &[131, 65537]).unwrap();
    assert!(report.agree);
    assert_eq!(report.max_rank, 4);
}

#[test]
fn sidecar_hash_is_stable() {
    let m = SparseMatrix::identity(2, pm(131).one());
    let text = write_sms(&m);
    let s1 = SmsSidecar::new(&text, 131, 2, 2);
    let s2 = SmsSidecar::new(&text, 131, 2, 2);
    assert_eq!(s1, s2);
    assert_eq!(s1.sha256_of_sms.len(), 64);
}

#[test]
fn berlekamp_massey_fibonacci() {
    // x^2 - x - 1 has LFSR connection (1, -1, -1)
    let modulus = pm(131);
    let mut seq = vec![1u64, 1];
    for i in 2..12 {
        seq.push((seq[i - 1] + seq[i - 2]) % 131);
    }
    let c = super::wiedemann::berlekamp_massey(&seq, modulus);
    assert_eq!(c, vec![1, 130, 130]);
}

proptest! {
    #[test]
    fn sms_round_trip(entries in proptest::collection::vec((0usize..12, 0usize..9, 1u64..131), 0..40)) {
        let modulus = pm(131);
        let mut seen = std::collections::HashSet::new();
        let triplets: Vec<(usize, usize, Fp64)> = entries
            .into_iter()
            .filter(|(r, c, _)| seen.insert((*r, *c)))
            .map(|(r, c, v)| (r, c, modulus.elem(v)))
            .collect();
        let m = SparseMatrix::new(12, 9, triplets).unwrap();
        let back = read_sms(&write_sms(&m), modulus).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn rank_invariant_under_transpose(seed in 0u64..200, rank in 0usize..6) {
        let modulus = pm(65537);
        let m = planted(7, 6, rank, modulus, seed);
        prop_assert_eq!(rank_elimination(&m).rank, rank_elimination(&m.transpose()).rank);
    }
}
