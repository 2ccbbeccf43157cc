//! Sparse exact linear algebra over GF(p): triplet storage, SMS
//! serialization, deterministic elimination rank, black-box Wiedemann rank,
//! and a dense kernel oracle for tiny instances.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::algebra::{AlgebraError, Field, Fp64, PrimeModulus};

mod dense;
mod elimination;
mod wiedemann;

pub use dense::{kernel_basis_dense, rank_dense, DENSE_COLUMN_LIMIT};
pub use elimination::rank_elimination;
pub use wiedemann::rank_wiedemann;

/// Auto method switch: elimination below this nonzero count, Wiedemann above.
pub const AUTO_WIEDEMANN_NNZ: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("entry ({row}, {col}) outside a {nrows} x {ncols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("matrix with {ncols} columns exceeds the dense-oracle limit {limit}")]
    TooLarge { ncols: usize, limit: usize },
    #[error("Wiedemann failed to converge after {trials} trials")]
    NonConvergence { trials: usize },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Immutable sparse matrix in canonically sorted triplet form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<F: Field> {
    nrows: usize,
    ncols: usize,
    triplets: Vec<(usize, usize, F)>,
}

impl<F: Field> SparseMatrix<F> {
    /// Zero entries are dropped; duplicates are an error; triplets end up
    /// strictly sorted by (row, col).
    pub fn new(
        nrows: usize,
        ncols: usize,
        triplets: Vec<(usize, usize, F)>,
    ) -> Result<Self, SparseError> {
        let mut kept: Vec<(usize, usize, F)> =
            triplets.into_iter().filter(|(_, _, v)| !v.is_zero()).collect();
        for &(r, c, _) in &kept {
            if r >= nrows || c >= ncols {
                return Err(SparseError::IndexOutOfRange {
                    row: r,
                    col: c,
                    nrows,
                    ncols,
                });
            }
        }
        kept.sort_by_key(|&(r, c, _)| (r, c));
        for w in kept.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(SparseError::DuplicateEntry {
                    row: w[0].0,
                    col: w[0].1,
                });
            }
        }
        Ok(SparseMatrix {
            nrows,
            ncols,
            triplets: kept,
        })
    }

    pub fn zero(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            triplets: Vec::new(),
        }
    }

    pub fn identity(n: usize, one: F) -> Self {
        SparseMatrix {
            nrows: n,
            ncols: n,
            triplets: (0..n).map(|i| (i, i, one.clone())).collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.triplets.len()
    }

    pub fn triplets(&self) -> &[(usize, usize, F)] {
        &self.triplets
    }

    pub fn transpose(&self) -> Self {
        let mut t: Vec<(usize, usize, F)> = self
            .triplets
            .iter()
            .map(|(r, c, v)| (*c, *r, v.clone()))
            .collect();
        t.sort_by_key(|&(r, c, _)| (r, c));
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            triplets: t,
        }
    }

    /// A scalar of the coefficient field, when the matrix has any entry.
    pub fn witness(&self) -> Option<&F> {
        self.triplets.first().map(|(_, _, v)| v)
    }
}

/// Result of a rank computation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankMethod {
    Elimination,
    Wiedemann,
    DenseOracle,
}

#[derive(Debug, Clone)]
pub struct RankReport {
    pub rank: usize,
    /// `ncols - rank`; the column-kernel dimension when the method certifies
    /// column rank.
    pub kernel_dim: usize,
    pub method: RankMethod,
    pub prime: Option<u64>,
    pub elapsed: Duration,
    /// Pivot count (elimination) or matvec probe count (Wiedemann).
    pub steps: usize,
    /// Exact result (elimination, dense) vs high-probability lower bound.
    pub certified: bool,
    pub warnings: Vec<String>,
}

// ---------------------------------------------------------------------------
// SMS interchange format
// ---------------------------------------------------------------------------

/// Serialize in the SMS text format: header `"nrows ncols M"`, one 1-based
/// `"i j v"` line per entry with `v` normalized to `[1, p-1]`, terminator
/// `"0 0 0"`.
pub fn write_sms(m: &SparseMatrix<Fp64>) -> String {
    let mut out = String::with_capacity(16 + 12 * m.nnz());
    out.push_str(&format!("{} {} M\n", m.nrows, m.ncols));
    for (r, c, v) in &m.triplets {
        out.push_str(&format!("{} {} {}\n", r + 1, c + 1, v.value()));
    }
    out.push_str("0 0 0\n");
    out
}

/// Parse an SMS stream. Values may be any integers; they are reduced modulo
/// the prime, and an entry that reduces to zero is rejected.
pub fn read_sms(text: &str, modulus: PrimeModulus) -> Result<SparseMatrix<Fp64>, SparseError> {
    let mut lines = text.lines().enumerate();
    let (lineno, header) = lines
        .next()
        .ok_or_else(|| SparseError::ParseError {
            line: 1,
            msg: "empty input".into(),
        })?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || SparseError::ParseError {
        line: lineno + 1,
        msg: format!("expected header \"nrows ncols M\", got {:?}", header),
    };
    if parts.len() != 3 || parts[2] != "M" {
        return Err(bad_header());
    }
    let nrows: usize = parts[0].parse().map_err(|_| bad_header())?;
    let ncols: usize = parts[1].parse().map_err(|_| bad_header())?;
    let mut triplets = Vec::new();
    let mut terminated = false;
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: String| SparseError::ParseError {
            line: lineno + 1,
            msg,
        };
        if fields.len() != 3 {
            return Err(bad(format!("expected \"i j v\", got {:?}", line)));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| bad(format!("bad row index {:?}", fields[0])))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| bad(format!("bad column index {:?}", fields[1])))?;
        let v: i64 = fields[2]
            .parse()
            .map_err(|_| bad(format!("bad value {:?}", fields[2])))?;
        if i == 0 && j == 0 && v == 0 {
            terminated = true;
            break;
        }
        if i == 0 || j == 0 || i > nrows || j > ncols {
            return Err(SparseError::IndexOutOfRange {
                row: i,
                col: j,
                nrows,
                ncols,
            });
        }
        let value = modulus.elem_i64(v);
        if value.is_zero() {
            return Err(bad(format!("entry reduces to zero modulo {}", modulus.get())));
        }
        triplets.push((i - 1, j - 1, value));
    }
    if !terminated {
        return Err(SparseError::ParseError {
            line: text.lines().count(),
            msg: "missing \"0 0 0\" terminator".into(),
        });
    }
    SparseMatrix::new(nrows, ncols, triplets)
}

/// Sidecar metadata written next to each SMS file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmsSidecar {
    pub prime: u64,
    pub nrows: usize,
    pub ncols: usize,
    pub sha256_of_sms: String,
}

impl SmsSidecar {
    pub fn new(sms_text: &str, prime: u64, nrows: usize, ncols: usize) -> SmsSidecar {
        SmsSidecar {
            prime,
            nrows,
            ncols,
            sha256_of_sms: sha256_hex(sms_text.as_bytes()),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{:02x}", b)).collect()
}

// ---------------------------------------------------------------------------
// Multi-prime certification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrimeRun {
    pub prime: u64,
    pub rank: usize,
    pub kernel_dim: usize,
}

/// Per-prime ranks of the same integer matrix family. The maximum over the
/// primes is a certified lower bound for the characteristic-zero rank;
/// disagreement across primes is flagged.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiPrimeReport {
    pub runs: Vec<PrimeRun>,
    pub max_rank: usize,
    pub agree: bool,
}

#[derive(Debug, Error)]
pub enum MultiPrimeError {
    #[error("no primes supplied")]
    NoPrimes,
    #[error(transparent)]
    BadPrime(#[from] AlgebraError),
    #[error("matrix generation failed: {0}")]
    Gen(String),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

pub fn multi_prime_rank<G>(gen: G, primes: &[u64]) -> Result<MultiPrimeReport, MultiPrimeError>
where
    G: Fn(PrimeModulus) -> Result<SparseMatrix<Fp64>, String>,
{
    if primes.is_empty() {
        return Err(MultiPrimeError::NoPrimes);
    }
    let mut runs = Vec::with_capacity(primes.len());
    for &p in primes {
        let pm = PrimeModulus::new(p)?;
        let m = gen(pm).map_err(MultiPrimeError::Gen)?;
        let report = rank_elimination(&m);
        runs.push(PrimeRun {
            prime: p,
            rank: report.rank,
            kernel_dim: report.kernel_dim,
        });
    }
    let max_rank = runs.iter().map(|r| r.rank).max().unwrap();
    let agree = runs.iter().all(|r| r.rank == max_rank);
    Ok(MultiPrimeReport {
        runs,
        max_rank,
        agree,
    })
}

#[cfg(test)]
mod tests;
