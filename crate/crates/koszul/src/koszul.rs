//! Assembly of Koszul differentials as sparse matrices over the coefficient
//! field.
//!
//! The differential sends a generator `w_{i_1} ^ ... ^ w_{i_l} (x) s_m` to
//! `sum_h (-1)^h  w_{i_1} ^ ... ^ w_{i_h}-omitted ^ ... (x) (w_{i_h} s_m)`,
//! where the `w_i` are the wedge-factor sections (Prym-canonical sections for
//! the Prym model, canonical sections for the canonical model) and the `s_m`
//! run over the canonical sections. Products of two sections restrict to
//! polynomials of degree at most `2g - 2` on each component, so the target is
//! flattened into `2 (2g - 1)` coefficient slots per wedge index.
//!
//! Injectivity of this matrix on a suitable column subspace is the syzygy
//! vanishing being tested; the subspaces live in [`Subspace`].

use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{AlgebraError, Field};
use crate::curve::{CurveError, CurveParams, Model, SectionBasis};
use crate::sparse::{SparseError, SparseMatrix};

#[derive(Debug, Error)]
pub enum KoszulError {
    #[error("wedge degree {l} out of range for {n_t} wedge sections")]
    BadDimensions { n_t: usize, l: usize },
    #[error("position {h} out of range for a wedge of length {l}")]
    OutOfRange { h: usize, l: usize },
    #[error("invalid multi-index: {0}")]
    BadIndex(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// `n choose k` in `usize`, panicking on overflow (far beyond desk scale).
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    usize::try_from(acc).expect("binomial fits in usize")
}

/// A strictly increasing tuple of 1-based section indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(indices: Vec<usize>) -> Result<MultiIndex, KoszulError> {
        for (pos, &x) in indices.iter().enumerate() {
            if x == 0 {
                return Err(KoszulError::BadIndex("indices are 1-based".into()));
            }
            if pos > 0 && indices[pos - 1] >= x {
                return Err(KoszulError::BadIndex(format!(
                    "not strictly increasing at position {}",
                    pos + 1
                )));
            }
        }
        Ok(MultiIndex(indices))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, m: usize) -> bool {
        self.0.binary_search(&m).is_ok()
    }

    pub fn min(&self) -> Option<usize> {
        self.0.first().copied()
    }

    /// Entry at 1-based position `h`.
    pub fn at(&self, h: usize) -> Result<usize, KoszulError> {
        self.0
            .get(h - 1)
            .copied()
            .ok_or(KoszulError::OutOfRange { h, l: self.len() })
    }

    /// The multi-index with the 1-based position `h` removed.
    pub fn remove(&self, h: usize) -> Result<MultiIndex, KoszulError> {
        if h == 0 || h > self.len() {
            return Err(KoszulError::OutOfRange { h, l: self.len() });
        }
        let mut v = self.0.clone();
        v.remove(h - 1);
        Ok(MultiIndex(v))
    }

    /// Lexicographic rank among the `l`-subsets of `{1, ..., n}`.
    pub fn rank(&self, n: usize) -> usize {
        let l = self.len();
        let mut r = 0;
        let mut prev = 0;
        for (j, &e) in self.0.iter().enumerate() {
            for x in prev + 1..e {
                r += binomial(n - x, l - j - 1);
            }
            prev = e;
        }
        r
    }

    /// Inverse of [`rank`](MultiIndex::rank).
    pub fn unrank(n: usize, l: usize, mut r: usize) -> Result<MultiIndex, KoszulError> {
        if l > n || r >= binomial(n, l) {
            return Err(KoszulError::BadIndex(format!(
                "rank {} out of range for C({}, {})",
                r, n, l
            )));
        }
        let mut out = Vec::with_capacity(l);
        let mut x = 1;
        for j in 0..l {
            loop {
                let block = binomial(n - x, l - j - 1);
                if r < block {
                    break;
                }
                r -= block;
                x += 1;
            }
            out.push(x);
            x += 1;
        }
        Ok(MultiIndex(out))
    }

    /// Lexicographic successor among `l`-subsets of `{1, ..., n}`.
    fn next_subset(&mut self, n: usize) -> bool {
        let l = self.0.len();
        for j in (0..l).rev() {
            if self.0[j] < n - (l - 1 - j) {
                self.0[j] += 1;
                for i in j + 1..l {
                    self.0[i] = self.0[i - 1] + 1;
                }
                return true;
            }
        }
        false
    }
}

/// `(-1)^h` for omitting the 1-based position `h` from a wedge of length `l`.
pub fn koszul_sign(h: usize, l: usize) -> Result<i8, KoszulError> {
    if h == 0 || h > l {
        return Err(KoszulError::OutOfRange { h, l });
    }
    Ok(if h % 2 == 0 { 1 } else { -1 })
}

/// Column subspaces of the full domain `wedge^l (x) H`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subspace {
    /// Every pair `(I, m)`.
    Full,
    /// `m` not in `I`: the multiplier avoids the wedge factors.
    W,
    /// `m >= min(I)`.
    V,
    /// Both restrictions at once.
    Wcan,
    /// `W` with wedge indices avoiding an exclusion set.
    Ycut(Vec<usize>),
    /// `Wcan` with wedge indices avoiding an exclusion set.
    YcutCan(Vec<usize>),
}

impl Subspace {
    pub fn admits(&self, i: &MultiIndex, m: usize) -> bool {
        let avoid = |excl: &[usize]| excl.iter().all(|&r| !i.contains(r));
        match self {
            Subspace::Full => true,
            Subspace::W => !i.contains(m),
            Subspace::V => i.min().map_or(true, |lo| m >= lo),
            Subspace::Wcan => !i.contains(m) && i.min().map_or(true, |lo| m >= lo),
            Subspace::Ycut(excl) => !i.contains(m) && avoid(excl),
            Subspace::YcutCan(excl) => {
                !i.contains(m) && i.min().map_or(true, |lo| m >= lo) && avoid(excl)
            }
        }
    }
}

/// Ordered list of domain generators `(I, m)`, one per matrix column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainBasis {
    pub pairs: Vec<(MultiIndex, usize)>,
    pub n_wedge: usize,
    pub n_mult: usize,
    pub level: usize,
}

/// All admissible pairs `(I, m)` in lexicographic `(I, m)` order.
pub fn enumerate_domain(
    n_wedge: usize,
    n_mult: usize,
    l: usize,
    subspace: &Subspace,
) -> Result<DomainBasis, KoszulError> {
    if l == 0 || l > n_wedge {
        return Err(KoszulError::BadDimensions { n_t: n_wedge, l });
    }
    let mut pairs = Vec::new();
    let mut i = MultiIndex((1..=l).collect());
    loop {
        for m in 1..=n_mult {
            if subspace.admits(&i, m) {
                pairs.push((i.clone(), m));
            }
        }
        if !i.next_subset(n_wedge) {
            break;
        }
    }
    Ok(DomainBasis {
        pairs,
        n_wedge,
        n_mult,
        level: l,
    })
}

/// An assembled Koszul differential.
#[derive(Debug, Clone)]
pub struct KoszulMatrix<F: Field> {
    pub matrix: SparseMatrix<F>,
    pub domain: DomainBasis,
    pub genus: usize,
    /// Polynomial coefficient slots per (wedge index, component) row block.
    pub coeff_slots: usize,
}

fn bases<F: Field>(
    params: &CurveParams<F>,
) -> Result<(SectionBasis<F>, SectionBasis<F>), KoszulError> {
    let mult = params.canonical_h_basis()?;
    let wedge = match params.model {
        Model::Prym => params.prym_t_basis()?,
        Model::Canonical => mult.clone(),
    };
    Ok((wedge, mult))
}

fn assemble_inner<F: Field>(
    params: &CurveParams<F>,
    domain: DomainBasis,
    force_plus_signs: bool,
) -> Result<KoszulMatrix<F>, KoszulError> {
    let g = params.genus;
    let l = domain.level;
    let (wedge, mult) = bases(params)?;
    debug_assert_eq!(wedge.len(), domain.n_wedge);
    debug_assert_eq!(mult.len(), domain.n_mult);
    let coeff_slots = 2 * g - 1;
    let nrows = binomial(domain.n_wedge, l - 1) * 2 * coeff_slots;

    let columns: Result<Vec<Vec<(usize, usize, F)>>, KoszulError> = domain
        .pairs
        .par_iter()
        .enumerate()
        .map(|(col, (i, m))| {
            let mut entries = Vec::new();
            for h in 1..=l {
                let sign = if force_plus_signs {
                    1
                } else {
                    koszul_sign(h, l)?
                };
                let j_idx = i.remove(h)?;
                let block = j_idx.rank(domain.n_wedge);
                let w = &wedge.sections[i.at(h)? - 1];
                let s = &mult.sections[*m - 1];
                for comp in 1..=2usize {
                    let prod = w.on(comp).mul(s.on(comp))?;
                    let base = (block * 2 + (comp - 1)) * coeff_slots;
                    for (slot, c) in prod.coeffs().iter().enumerate() {
                        if c.is_zero() {
                            continue;
                        }
                        let v = if sign < 0 { -c.clone() } else { c.clone() };
                        entries.push((base + slot, col, v));
                    }
                }
            }
            Ok(entries)
        })
        .collect();
    let triplets: Vec<(usize, usize, F)> = columns?.into_iter().flatten().collect();
    let matrix = SparseMatrix::new(nrows, domain.pairs.len(), triplets)?;
    Ok(KoszulMatrix {
        matrix,
        domain,
        genus: g,
        coeff_slots,
    })
}

/// Assemble the level-`l` Koszul differential restricted to the columns of
/// `subspace`.
pub fn assemble<F: Field>(
    params: &CurveParams<F>,
    l: usize,
    subspace: &Subspace,
) -> Result<KoszulMatrix<F>, KoszulError> {
    let (n_wedge, n_mult) = basis_sizes(params.model, params.genus);
    let domain = enumerate_domain(n_wedge, n_mult, l, subspace)?;
    assemble_inner(params, domain, false)
}

/// Assemble on an explicit, possibly non-standard, list of generators.
pub fn assemble_with_domain<F: Field>(
    params: &CurveParams<F>,
    domain: DomainBasis,
) -> Result<KoszulMatrix<F>, KoszulError> {
    assemble_inner(params, domain, false)
}

/// Number of wedge-factor sections and multiplier sections for a model.
pub fn basis_sizes(model: Model, genus: usize) -> (usize, usize) {
    match model {
        Model::Prym => (genus - 1, genus),
        Model::Canonical => (genus, genus),
    }
}

/// Symbolic verification that the differential squares to zero: apply it
/// twice to every generator of `wedge^{l+1} (x) H`, keeping the polynomial
/// payload exact, and demand that every accumulated component vanishes.
pub fn compose_check_dd_zero<F: Field>(
    params: &CurveParams<F>,
    l: usize,
) -> Result<bool, KoszulError> {
    compose_inner(params, l, false)
}

/// Negative control: the same composition with all signs forced to `+1` must
/// fail to cancel (a global sign flip would still square to zero, so the
/// control breaks the sign pattern instead).
pub fn compose_check_all_plus_signs<F: Field>(
    params: &CurveParams<F>,
    l: usize,
) -> Result<bool, KoszulError> {
    compose_inner(params, l, true)
}

fn compose_inner<F: Field>(
    params: &CurveParams<F>,
    l: usize,
    force_plus_signs: bool,
) -> Result<bool, KoszulError> {
    use std::collections::HashMap;

    use crate::algebra::DensePoly;

    let (n_wedge, n_mult) = basis_sizes(params.model, params.genus);
    if l + 1 > n_wedge {
        return Err(KoszulError::BadDimensions { n_t: n_wedge, l: l + 1 });
    }
    let (wedge, mult) = bases(params)?;
    let sgn = |h: usize, len: usize| -> Result<i8, KoszulError> {
        if force_plus_signs {
            Ok(1)
        } else {
            koszul_sign(h, len)
        }
    };
    let top = enumerate_domain(n_wedge, n_mult, l + 1, &Subspace::Full)?;
    for (i, m) in &top.pairs {
        // (K, component) -> accumulated polynomial
        let mut acc: HashMap<(MultiIndex, usize), DensePoly<F>> = HashMap::new();
        for h in 1..=l + 1 {
            let s1 = sgn(h, l + 1)?;
            let j_idx = i.remove(h)?;
            for h2 in 1..=l {
                let s2 = sgn(h2, l)?;
                let k_idx = j_idx.remove(h2)?;
                let sign = s1 * s2;
                for comp in 1..=2usize {
                    let prod = wedge.sections[i.at(h)? - 1]
                        .on(comp)
                        .mul(mult.sections[*m - 1].on(comp))?
                        .mul(wedge.sections[j_idx.at(h2)? - 1].on(comp))?;
                    let term = if sign < 0 { prod.negate() } else { prod };
                    let slot = acc
                        .entry((k_idx.clone(), comp))
                        .or_insert_with(DensePoly::zero);
                    *slot = slot.add(&term)?;
                }
            }
        }
        if acc.values().any(|p| !p.is_zero()) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Fp64, PrimeModulus};
    use crate::DEFAULT_PRIME;

    fn pm() -> PrimeModulus {
        PrimeModulus::new(DEFAULT_PRIME).unwrap()
    }

    fn prym(genus: usize, seed: u64) -> CurveParams<Fp64> {
        CurveParams::sample(Model::Prym, genus, pm(), seed).unwrap()
    }

    fn canonical(genus: usize, seed: u64) -> CurveParams<Fp64> {
        CurveParams::sample(Model::Canonical, genus, pm(), seed).unwrap()
    }

    #[test]
    fn binomial_table() {
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(5, 6), 0);
        assert_eq!(binomial(15, 7), 6435);
        assert_eq!(binomial(31, 15), 300540195);
    }

    #[test]
    fn rank_unrank_round_trip() {
        for n in 1..=12usize {
            for l in 1..=n {
                let total = binomial(n, l);
                let mut seen = Vec::with_capacity(total);
                for r in 0..total {
                    let idx = MultiIndex::unrank(n, l, r).unwrap();
                    assert_eq!(idx.rank(n), r);
                    seen.push(idx);
                }
                // lexicographic order
                for w in seen.windows(2) {
                    assert!(w[0].indices() < w[1].indices());
                }
            }
        }
    }

    #[test]
    fn multi_index_validation() {
        assert!(MultiIndex::new(vec![1, 3, 4]).is_ok());
        assert!(MultiIndex::new(vec![1, 1]).is_err());
        assert!(MultiIndex::new(vec![2, 1]).is_err());
        assert!(MultiIndex::new(vec![0]).is_err());
    }

    #[test]
    fn sign_convention() {
        assert_eq!(koszul_sign(1, 3).unwrap(), -1);
        assert_eq!(koszul_sign(2, 3).unwrap(), 1);
        assert!(koszul_sign(0, 3).is_err());
        assert!(koszul_sign(4, 3).is_err());
    }

    #[test]
    fn subspace_counts_match_formulas() {
        // exhaustive check of the closed-form counts on small shapes
        for n in 2..=8usize {
            for l in 1..=n - 1 {
                let w = enumerate_domain(n, n, l, &Subspace::W).unwrap();
                assert_eq!(w.pairs.len(), binomial(n, l) * (n - l));
                let wc = enumerate_domain(n, n, l, &Subspace::Wcan).unwrap();
                assert_eq!(
                    wc.pairs.len(),
                    binomial(n, l) * (n - l) - binomial(n, l + 1)
                );
            }
        }
    }

    #[test]
    fn v_count_closed_form() {
        // sum over I of (min(I) - 1) = C(n, l+1), so |V| = C(n,l) n - C(n,l+1)
        for n in 2..=9usize {
            for l in 1..=n - 1 {
                let v = enumerate_domain(n, n, l, &Subspace::V).unwrap();
                assert_eq!(v.pairs.len(), binomial(n, l) * n - binomial(n, l + 1));
            }
        }
    }

    #[test]
    fn prym_w_counts() {
        // wedge over g-1 sections, multipliers over g sections
        let d = enumerate_domain(5, 6, 3, &Subspace::W).unwrap();
        assert_eq!(d.pairs.len(), 30);
        let d = enumerate_domain(7, 8, 4, &Subspace::W).unwrap();
        assert_eq!(d.pairs.len(), 140);
    }

    #[test]
    fn ycut_drops_excluded_wedges() {
        let full_w = enumerate_domain(5, 6, 2, &Subspace::W).unwrap();
        let cut = enumerate_domain(5, 6, 2, &Subspace::Ycut(vec![1])).unwrap();
        assert!(cut.pairs.len() < full_w.pairs.len());
        for (i, _) in &cut.pairs {
            assert!(!i.contains(1));
        }
        // splitting off the excluded wedge index is exact:
        // |Ycut({r})| + |{(I, m) in W : r in I}| = |W|
        let with_r = full_w
            .pairs
            .iter()
            .filter(|(i, _)| i.contains(1))
            .count();
        assert_eq!(cut.pairs.len() + with_r, full_w.pairs.len());
    }

    #[test]
    fn threshold_matrix_dimensions() {
        let p = prym(6, 1);
        let k = assemble(&p, 3, &Subspace::W).unwrap();
        assert_eq!(k.matrix.nrows(), 220);
        assert_eq!(k.matrix.ncols(), 30);

        let p = prym(8, 1);
        let k = assemble(&p, 4, &Subspace::W).unwrap();
        assert_eq!(k.matrix.nrows(), 1050);
        assert_eq!(k.matrix.ncols(), 140);

        let c = canonical(5, 1);
        let k = assemble(&c, 2, &Subspace::V).unwrap();
        assert_eq!(k.matrix.nrows(), 90);
        assert_eq!(k.matrix.ncols(), 40);

        let c3 = canonical(3, 1);
        let k = assemble(&c3, 1, &Subspace::V).unwrap();
        assert_eq!(k.matrix.nrows(), 10);
        assert_eq!(k.matrix.ncols(), 6);
    }

    #[test]
    fn single_column_block_structure() {
        // generator t_1 ^ t_3 (x) s_4 maps to
        //   -(t_1 s_4) in block J = (3)  and  +(t_3 s_4) in block J = (1)
        let p = prym(6, 5);
        let i = MultiIndex::new(vec![1, 3]).unwrap();
        let domain = DomainBasis {
            pairs: vec![(i, 4)],
            n_wedge: 5,
            n_mult: 6,
            level: 2,
        };
        let k = assemble_with_domain(&p, domain).unwrap();
        let t = p.prym_t_basis().unwrap();
        let s = p.canonical_h_basis().unwrap();
        let slots = 2 * 6 - 1;
        let block_of = |idx: Vec<usize>| MultiIndex::new(idx).unwrap().rank(5);
        for comp in 1..=2usize {
            let minus = t.sections[0].on(comp).mul(s.sections[3].on(comp)).unwrap();
            let plus = t.sections[2].on(comp).mul(s.sections[3].on(comp)).unwrap();
            for (expect, block, negate) in [
                (&minus, block_of(vec![3]), true),
                (&plus, block_of(vec![1]), false),
            ] {
                let base = (block * 2 + (comp - 1)) * slots;
                for (slot, c) in expect.coeffs().iter().enumerate() {
                    let want = if negate { -*c } else { *c };
                    let got = k
                        .matrix
                        .triplets()
                        .iter()
                        .find(|(r, _, _)| *r == base + slot)
                        .map(|(_, _, v)| *v)
                        .unwrap_or_else(|| pm().zero());
                    assert_eq!(got, want, "comp {} slot {}", comp, slot);
                }
            }
        }
    }

    #[test]
    fn column_support_is_bounded() {
        // each column touches at most l blocks x 2 components x (2g-1) slots
        let p = prym(7, 3);
        let l = 3;
        let k = assemble(&p, l, &Subspace::Full).unwrap();
        let bound = l * 2 * (2 * 7 - 1);
        let mut per_col = vec![0usize; k.matrix.ncols()];
        for (_, c, _) in k.matrix.triplets() {
            per_col[*c] += 1;
        }
        assert!(per_col.iter().all(|&n| n > 0 && n <= bound));
    }

    #[test]
    fn differential_squares_to_zero() {
        for seed in [1, 2] {
            let p = prym(6, seed);
            assert!(compose_check_dd_zero(&p, 1).unwrap());
            assert!(compose_check_dd_zero(&p, 2).unwrap());
            let c = canonical(5, seed);
            assert!(compose_check_dd_zero(&c, 1).unwrap());
            assert!(compose_check_dd_zero(&c, 2).unwrap());
        }
    }

    #[test]
    fn all_plus_signs_break_the_square() {
        let p = prym(6, 1);
        assert!(!compose_check_all_plus_signs(&p, 2).unwrap());
        let c = canonical(5, 1);
        assert!(!compose_check_all_plus_signs(&c, 2).unwrap());
    }

    #[test]
    fn assembly_is_deterministic() {
        let p = prym(7, 11);
        let a = assemble(&p, 2, &Subspace::W).unwrap();
        let b = assemble(&p, 2, &Subspace::W).unwrap();
        assert_eq!(a.matrix, b.matrix);
    }

    #[test]
    fn rational_and_modular_assembly_agree() {
        let p = prym(5, 3);
        let q = p.to_rational().unwrap();
        let kp = assemble(&p, 2, &Subspace::W).unwrap();
        let kq = assemble(&q, 2, &Subspace::W).unwrap();
        // reduce the rational matrix entrywise (entries divisible by p drop out)
        let reduced = SparseMatrix::new(
            kq.matrix.nrows(),
            kq.matrix.ncols(),
            kq.matrix
                .triplets()
                .iter()
                .map(|(r, c, v)| (*r, *c, v.reduce_mod(pm()).unwrap()))
                .collect(),
        )
        .unwrap();
        assert_eq!(reduced, kp.matrix);
    }

    #[test]
    fn bad_level_rejected() {
        let p = prym(6, 1);
        assert!(matches!(
            assemble(&p, 0, &Subspace::Full),
            Err(KoszulError::BadDimensions { .. })
        ));
        assert!(matches!(
            assemble(&p, 6, &Subspace::Full),
            Err(KoszulError::BadDimensions { .. })
        ));
    }
}
