//! Canonical and Prym-canonical binary curve models.
//!
//! A binary curve of genus `g` is the union of two rational components
//! `C_1`, `C_2` meeting transversally at `g + 1` nodes. Each model is pinned
//! down by a 2-row table of component parameters `a_{i,j}`: the canonical
//! model uses `g` parameters per component (nodes at the `a`'s and at
//! infinity), the Prym-canonical model uses `g - 1` (nodes at the `a`'s, at
//! `t = 0` and at infinity) together with gluing constants `d_1, d_2` tied by
//! `d_1 = -d_2 A_1 / A_2` where `A_j` is the product of row `j`.
//!
//! Global sections of the relevant line bundles are represented by their two
//! component restrictions, a pair of polynomials of degree at most `g - 1`
//! after dehomogenizing at `u = 1`.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, DensePoly, Field, Fp64, PrimeModulus, Rat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("field GF({p}) too small for genus {genus}: need at least {needed} nonzero elements")]
    FieldTooSmall { p: u64, genus: usize, needed: u64 },
    #[error("model {model:?} does not support genus {genus}")]
    UnsupportedGenus { model: Model, genus: usize },
    #[error("operation requires the {0:?} model")]
    ModelMismatch(Model),
    #[error("node {r} is not admissible for projection at genus {genus}")]
    InvalidNode { r: usize, genus: usize },
    #[error("invalid curve parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Canonical,
    Prym,
}

impl Model {
    /// Width of the parameter table: one entry per finite nonzero node.
    pub fn table_width(self, genus: usize) -> usize {
        match self {
            Model::Canonical => genus,
            Model::Prym => genus - 1,
        }
    }

    pub fn min_genus(self) -> usize {
        match self {
            Model::Canonical => 3,
            Model::Prym => 5,
        }
    }
}

/// Parameters of a binary curve model, plus the sampling provenance needed to
/// reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveParams<F: Field> {
    pub model: Model,
    pub genus: usize,
    /// `a[j][i]` is `a_{i+1, j+1}`: row `j` holds the parameters on `C_{j+1}`.
    a: [Vec<F>; 2],
    /// Prym only: `[d_1, d_2]`.
    d: Option<[F; 2]>,
    pub prime: Option<u64>,
    pub seed: Option<u64>,
}

impl<F: Field> CurveParams<F> {
    /// Build and validate. For the Prym model, `d_2` defaults to 1 and `d_1`
    /// is derived as `-d_2 A_1 / A_2`.
    pub fn new(
        model: Model,
        genus: usize,
        a: [Vec<F>; 2],
        d2: Option<F>,
    ) -> Result<Self, CurveError> {
        if genus < model.min_genus() {
            return Err(CurveError::UnsupportedGenus { model, genus });
        }
        let width = model.table_width(genus);
        for row in &a {
            if row.len() != width {
                return Err(CurveError::InvalidParams(format!(
                    "expected {} parameters per component, got {}",
                    width,
                    row.len()
                )));
            }
            for (i, x) in row.iter().enumerate() {
                if x.is_zero() {
                    return Err(CurveError::InvalidParams(format!(
                        "parameter {} is zero",
                        i + 1
                    )));
                }
                if row[..i].contains(x) {
                    return Err(CurveError::InvalidParams(format!(
                        "parameter {} repeats within its component",
                        i + 1
                    )));
                }
            }
        }
        let d = match model {
            Model::Canonical => None,
            Model::Prym => {
                let witness = &a[0][0];
                let d2 = d2.unwrap_or_else(|| witness.one_like());
                if d2.is_zero() {
                    return Err(CurveError::InvalidParams("d2 must be nonzero".into()));
                }
                let a1 = row_product(&a[0]);
                let a2 = row_product(&a[1]);
                let d1 = -(d2.clone() * a1 * a2.inv()?);
                Some([d1, d2])
            }
        };
        Ok(CurveParams {
            model,
            genus,
            a,
            d,
            prime: None,
            seed: None,
        })
    }

    /// `k = floor(g / 2)`, the split position of the Prym coordinates.
    pub fn half(&self) -> usize {
        self.genus / 2
    }

    pub fn table_width(&self) -> usize {
        self.model.table_width(self.genus)
    }

    /// `a_{i,j}` with 1-based `i` and component `j` in `{1, 2}`.
    pub fn a(&self, i: usize, j: usize) -> &F {
        &self.a[j - 1][i - 1]
    }

    pub fn row(&self, j: usize) -> &[F] {
        &self.a[j - 1]
    }

    /// `A_j`, the product of the parameters on component `j`.
    pub fn row_prod(&self, j: usize) -> F {
        row_product(&self.a[j - 1])
    }

    /// `d_j` (Prym only).
    pub fn d(&self, j: usize) -> Option<&F> {
        self.d.as_ref().map(|d| &d[j - 1])
    }

    /// `M_j(t) = prod_i (t - a_{i,j})`, the monic node polynomial.
    pub fn m_poly(&self, j: usize) -> DensePoly<F> {
        DensePoly::from_roots(&self.a[0][0].one_like(), &self.a[j - 1])
    }

    fn witness(&self) -> &F {
        &self.a[0][0]
    }

    /// Basis `t_1, ..., t_{g-1}` of the Prym-canonical sections, as component
    /// restriction pairs at `u = 1`.
    pub fn prym_t_basis(&self) -> Result<SectionBasis<F>, CurveError> {
        if self.model != Model::Prym {
            return Err(CurveError::ModelMismatch(Model::Prym));
        }
        let g = self.genus;
        let k = self.half();
        let d = self.d.as_ref().expect("prym params carry d");
        let mut sections = Vec::with_capacity(g - 1);
        let m = [self.m_poly(1), self.m_poly(2)];
        let a_prod = [self.row_prod(1), self.row_prod(2)];
        for i in 1..=g - 1 {
            let mut pair = Vec::with_capacity(2);
            for j in 1..=2 {
                let base = m[j - 1].div_linear(self.a(i, j))?;
                let f = if i <= k {
                    // t M_j(t) / (t - a_{i,j}), degree g - 1
                    base.shift_up()
                } else {
                    // -d_j a_{i,j} M_j(t) / (A_j (t - a_{i,j})), degree g - 2
                    let c = -(d[j - 1].clone() * self.a(i, j).clone() * a_prod[j - 1].inv()?);
                    base.scale(&c)
                };
                pair.push(f);
            }
            let on_c2 = pair.pop().unwrap();
            let on_c1 = pair.pop().unwrap();
            sections.push(SectionPair { on_c1, on_c2 });
        }
        Ok(SectionBasis {
            kind: BasisKind::PrymT,
            genus: g,
            sections,
        })
    }

    /// Basis `s_1, ..., s_g` of the canonical sections. For the canonical
    /// model these are the embedding coordinates `M_j / (t - a_{i,j})`. For
    /// the Prym model (whose nodes sit at the `a`'s, 0 and infinity) the same
    /// recipe transported to that node set gives `t M_j / (t - a_{i,j})` for
    /// `i <= g - 1` and `s_g = M_j`; residue matching at every node holds
    /// identically, so these are genuine canonical sections.
    pub fn canonical_h_basis(&self) -> Result<SectionBasis<F>, CurveError> {
        let g = self.genus;
        let m = [self.m_poly(1), self.m_poly(2)];
        let mut sections = Vec::with_capacity(g);
        match self.model {
            Model::Canonical => {
                for i in 1..=g {
                    sections.push(SectionPair {
                        on_c1: m[0].div_linear(self.a(i, 1))?,
                        on_c2: m[1].div_linear(self.a(i, 2))?,
                    });
                }
            }
            Model::Prym => {
                for i in 1..=g - 1 {
                    sections.push(SectionPair {
                        on_c1: m[0].div_linear(self.a(i, 1))?.shift_up(),
                        on_c2: m[1].div_linear(self.a(i, 2))?.shift_up(),
                    });
                }
                sections.push(SectionPair {
                    on_c1: m[0].clone(),
                    on_c2: m[1].clone(),
                });
            }
        }
        Ok(SectionBasis {
            kind: BasisKind::CanonicalH,
            genus: g,
            sections,
        })
    }

    /// Node table of the embedding basis: T-coordinates for the Prym model,
    /// H-coordinates for the canonical model.
    pub fn node_table(&self) -> NodeTable<F> {
        match self.model {
            Model::Canonical => self.node_table_for(BasisKind::CanonicalH),
            Model::Prym => self.node_table_for(BasisKind::PrymT),
        }
    }

    /// Node table in the coordinates of the given basis kind.
    pub fn node_table_for(&self, kind: BasisKind) -> NodeTable<F> {
        let g = self.genus;
        let k = self.half();
        let zero = self.witness().zero_like();
        let one = self.witness().one_like();
        let dim = match kind {
            BasisKind::PrymT => g - 1,
            BasisKind::CanonicalH => g,
        };
        let unit = |l: usize| {
            let mut v = vec![zero.clone(); dim];
            v[l - 1] = one.clone();
            v
        };
        let mut nodes = Vec::with_capacity(g + 1);
        match (self.model, kind) {
            (Model::Canonical, BasisKind::CanonicalH) => {
                for l in 1..=g {
                    nodes.push(Node {
                        params: [
                            NodeParam::Finite(self.a(l, 1).clone()),
                            NodeParam::Finite(self.a(l, 2).clone()),
                        ],
                        point: unit(l),
                    });
                }
                nodes.push(Node {
                    params: [NodeParam::Infinity, NodeParam::Infinity],
                    point: vec![one.clone(); g],
                });
            }
            (Model::Prym, kind) => {
                for l in 1..=g - 1 {
                    nodes.push(Node {
                        params: [
                            NodeParam::Finite(self.a(l, 1).clone()),
                            NodeParam::Finite(self.a(l, 2).clone()),
                        ],
                        point: unit(l),
                    });
                }
                let (p_g, p_inf) = match kind {
                    BasisKind::PrymT => {
                        // P_g: zeros in slots 1..k, ones after; P_{g+1} the complement.
                        let mut p_g = vec![zero.clone(); g - 1];
                        let mut p_inf = vec![zero.clone(); g - 1];
                        for i in 0..g - 1 {
                            if i < k {
                                p_inf[i] = one.clone();
                            } else {
                                p_g[i] = one.clone();
                            }
                        }
                        (p_g, p_inf)
                    }
                    BasisKind::CanonicalH => {
                        // s_i(0) = 0 for i < g and s_g(0) != 0; all leading
                        // coefficients are 1.
                        (unit(g), vec![one.clone(); g])
                    }
                };
                nodes.push(Node {
                    params: [
                        NodeParam::Finite(zero.clone()),
                        NodeParam::Finite(zero.clone()),
                    ],
                    point: p_g,
                });
                nodes.push(Node {
                    params: [NodeParam::Infinity, NodeParam::Infinity],
                    point: p_inf,
                });
            }
            (Model::Canonical, BasisKind::PrymT) => {
                unreachable!("canonical model has no T basis")
            }
        }
        NodeTable {
            nodes,
            eval_degree: g - 1,
        }
    }

    fn admissible_projection(&self, r: usize) -> bool {
        let g = self.genus;
        let k = self.half();
        match self.model {
            Model::Canonical => (1..=g).contains(&r),
            Model::Prym => {
                if g % 2 == 0 {
                    (1..=k).contains(&r)
                } else {
                    (k + 1..=g - 1).contains(&r)
                }
            }
        }
    }

    /// Project from node `P_r`: the genus `g - 1` child with the raw
    /// (unrenormalized) gluing constants `d'_j = d_j / a_{r,j}`. The
    /// parity-dependent range of `r` is what keeps the child in the standard
    /// Prym form.
    pub fn project_at_node_raw(&self, r: usize) -> Result<CurveParams<F>, CurveError> {
        if !self.admissible_projection(r) {
            return Err(CurveError::InvalidNode { r, genus: self.genus });
        }
        let drop = |row: &[F]| {
            let mut v = row.to_vec();
            v.remove(r - 1);
            v
        };
        let a = [drop(&self.a[0]), drop(&self.a[1])];
        let d = match &self.d {
            None => None,
            Some([d1, d2]) => Some([
                d1.clone() * self.a(r, 1).inv()?,
                d2.clone() * self.a(r, 2).inv()?,
            ]),
        };
        Ok(CurveParams {
            model: self.model,
            genus: self.genus - 1,
            a,
            d,
            prime: self.prime,
            seed: None,
        })
    }

    /// Project from node `P_r` and renormalize the child to the `d_2 = 1`
    /// convention. The renormalization is a diagonal coordinate change, so
    /// every rank computed downstream is unaffected.
    pub fn project_at_node(&self, r: usize) -> Result<CurveParams<F>, CurveError> {
        let mut child = self.project_at_node_raw(r)?;
        if let Some([d1, d2]) = child.d.take() {
            let scale = d2.inv()?;
            child.d = Some([d1 * scale, d2.one_like()]);
        }
        Ok(child)
    }

    pub fn validate(&self) -> Result<(), CurveError> {
        let check = CurveParams::new(
            self.model,
            self.genus,
            self.a.clone(),
            self.d.as_ref().map(|d| d[1].clone()),
        )?;
        if let (Some(d), Some(dc)) = (&self.d, &check.d) {
            if d[0] != dc[0] {
                return Err(CurveError::InvalidParams(
                    "d1 does not satisfy d1 A2 = -d2 A1".into(),
                ));
            }
        }
        Ok(())
    }
}

fn row_product<F: Field>(row: &[F]) -> F {
    row.iter()
        .fold(row[0].one_like(), |acc, x| acc * x.clone())
}

impl CurveParams<Fp64> {
    /// Deterministic random parameters: same `(model, genus, prime, seed)`
    /// always yields the same table. Collisions within a row are resampled.
    pub fn sample(
        model: Model,
        genus: usize,
        modulus: PrimeModulus,
        seed: u64,
    ) -> Result<CurveParams<Fp64>, CurveError> {
        if genus < model.min_genus() {
            return Err(CurveError::UnsupportedGenus { model, genus });
        }
        let p = modulus.get();
        let needed = 4 * genus as u64;
        if p - 1 < needed {
            return Err(CurveError::FieldTooSmall { p, genus, needed });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(model, genus, p, seed));
        let width = model.table_width(genus);
        let mut a: [Vec<Fp64>; 2] = [Vec::with_capacity(width), Vec::with_capacity(width)];
        for row in a.iter_mut() {
            let mut used = HashSet::new();
            while row.len() < width {
                let v = rng.gen_range(1..p);
                if used.insert(v) {
                    row.push(modulus.elem(v));
                }
            }
        }
        let mut params = CurveParams::new(model, genus, a, None)?;
        params.prime = Some(p);
        params.seed = Some(seed);
        Ok(params)
    }

    /// Lift the parameter table to the rationals, treating each residue as an
    /// integer. Derived constants are recomputed over the new field.
    pub fn to_rational(&self) -> Result<CurveParams<Rat>, CurveError> {
        let lift = |row: &[Fp64]| row.iter().map(|x| Rat::from_u64(x.value())).collect();
        let mut lifted = CurveParams::new(
            self.model,
            self.genus,
            [lift(&self.a[0]), lift(&self.a[1])],
            None,
        )?;
        lifted.seed = self.seed;
        Ok(lifted)
    }
}

fn mix_seed(model: Model, genus: usize, p: u64, seed: u64) -> u64 {
    let tag = match model {
        Model::Canonical => 1u64,
        Model::Prym => 2u64,
    };
    let mut x = seed
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(tag)
        .wrapping_add((genus as u64) << 8)
        .wrapping_add(p.rotate_left(17));
    // splitmix64 finalizer
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58476d1ce4e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d049bb133111eb);
    x ^= x >> 31;
    x
}

// ---------------------------------------------------------------------------
// Sections and nodes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// The `t_i`: Prym-canonical sections, `g - 1` of them.
    PrymT,
    /// The `s_i`: canonical sections, `g` of them.
    CanonicalH,
}

/// A global section given by its two component restrictions.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionPair<F: Field> {
    pub on_c1: DensePoly<F>,
    pub on_c2: DensePoly<F>,
}

impl<F: Field> SectionPair<F> {
    /// Restriction to component `j` in `{1, 2}`.
    pub fn on(&self, j: usize) -> &DensePoly<F> {
        match j {
            1 => &self.on_c1,
            2 => &self.on_c2,
            _ => panic!("component index must be 1 or 2"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionBasis<F: Field> {
    pub kind: BasisKind,
    pub genus: usize,
    pub sections: Vec<SectionPair<F>>,
}

impl<F: Field> SectionBasis<F> {
    pub fn len(&self) -> usize {
        self.sections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sections.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeParam<F> {
    Finite(F),
    Infinity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node<F: Field> {
    /// Parameter of the node on each component.
    pub params: [NodeParam<F>; 2],
    /// Expected projective point, as a coordinate vector.
    pub point: Vec<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeTable<F: Field> {
    pub nodes: Vec<Node<F>>,
    /// Coefficient index read off at the infinity node (degree `g - 1`;
    /// sections of lower degree contribute 0 there).
    pub eval_degree: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceFailure {
    pub node: usize,
    pub component: usize,
    pub detail: String,
}

/// Evaluate a section at a node parameter; the infinity node reads the
/// leading coefficient slot.
pub fn eval_at_node<F: Field>(
    pair: &SectionPair<F>,
    j: usize,
    param: &NodeParam<F>,
    eval_degree: usize,
    ctx: &F,
) -> F {
    match param {
        NodeParam::Finite(a) => pair.on(j).eval(a),
        NodeParam::Infinity => pair.on(j).coeff_or_zero(eval_degree, ctx),
    }
}

/// Check that evaluating every basis section at each node, on each component,
/// gives a nonzero scalar multiple of the declared projective point.
pub fn check_node_incidence<F: Field>(
    basis: &SectionBasis<F>,
    nodes: &NodeTable<F>,
) -> Result<(), IncidenceFailure> {
    for (l, node) in nodes.nodes.iter().enumerate() {
        if node.point.len() != basis.len() {
            return Err(IncidenceFailure {
                node: l + 1,
                component: 0,
                detail: format!(
                    "point has {} coordinates, basis has {} sections",
                    node.point.len(),
                    basis.len()
                ),
            });
        }
        for j in 1..=2 {
            let ctx = &node.point[0];
            let values: Vec<F> = basis
                .sections
                .iter()
                .map(|s| eval_at_node(s, j, &node.params[j - 1], nodes.eval_degree, ctx))
                .collect();
            let pivot = node
                .point
                .iter()
                .position(|c| !c.is_zero())
                .expect("projective point is nonzero");
            let lambda = match node.point[pivot].inv() {
                Ok(inv) => values[pivot].clone() * inv,
                Err(_) => unreachable!(),
            };
            if lambda.is_zero() {
                return Err(IncidenceFailure {
                    node: l + 1,
                    component: j,
                    detail: "section values vanish where the point does not".into(),
                });
            }
            for (i, (v, c)) in values.iter().zip(node.point.iter()).enumerate() {
                if *v != lambda.clone() * c.clone() {
                    return Err(IncidenceFailure {
                        node: l + 1,
                        component: j,
                        detail: format!("coordinate {} off by a non-scalar factor", i + 1),
                    });
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Curve file (JSON interchange)
// ---------------------------------------------------------------------------

/// On-disk curve description; round-trips bit-exactly through serde_json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFile {
    pub model: Model,
    pub genus: usize,
    pub prime: u64,
    pub seed: Option<u64>,
    pub a: [Vec<u64>; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d2: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d1: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub a1: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub a2: Option<u64>,
}

impl CurveFile {
    pub fn from_params(params: &CurveParams<Fp64>) -> CurveFile {
        let row = |j: usize| params.row(j).iter().map(|x| x.value()).collect();
        CurveFile {
            model: params.model,
            genus: params.genus,
            prime: params.prime.unwrap_or_else(|| params.a(1, 1).modulus()),
            seed: params.seed,
            a: [row(1), row(2)],
            d2: params.d(2).map(|d| d.value()),
            d1: params.d(1).map(|d| d.value()),
            a1: match params.model {
                Model::Prym => Some(params.row_prod(1).value()),
                Model::Canonical => None,
            },
            a2: match params.model {
                Model::Prym => Some(params.row_prod(2).value()),
                Model::Canonical => None,
            },
        }
    }

    pub fn to_params(&self) -> Result<CurveParams<Fp64>, CurveError> {
        let pm = PrimeModulus::new(self.prime)?;
        let lift = |row: &[u64]| row.iter().map(|&v| pm.elem(v)).collect();
        let mut params = CurveParams::new(
            self.model,
            self.genus,
            [lift(&self.a[0]), lift(&self.a[1])],
            self.d2.map(|v| pm.elem(v)),
        )?;
        params.prime = Some(self.prime);
        params.seed = self.seed;
        // cross-check stored derived constants
        if let Some(d1) = self.d1 {
            if params.d(1).map(|d| d.value()) != Some(d1) {
                return Err(CurveError::InvalidParams(
                    "stored d1 disagrees with -d2 A1 / A2".into(),
                ));
            }
        }
        for (stored, j) in [(self.a1, 1), (self.a2, 2)] {
            if let Some(v) = stored {
                if params.row_prod(j).value() != v {
                    return Err(CurveError::InvalidParams(format!(
                        "stored A{} disagrees with the parameter product",
                        j
                    )));
                }
            }
        }
        Ok(params)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("curve file serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<CurveFile, CurveError> {
        serde_json::from_str(s).map_err(|e| CurveError::InvalidParams(e.to_string()))
    }
}
