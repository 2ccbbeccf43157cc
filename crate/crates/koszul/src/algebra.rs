//! Exact scalar and univariate polynomial arithmetic.
//!
//! Two scalar types implement [`Field`]: [`Fp64`], elements of GF(p) for an
//! odd prime `p < 2^62` chosen at runtime, and [`Rat`], arbitrary-precision
//! rationals used by the tiny-genus oracle path. Every value carries its own
//! field context, so GF(p) elements for different moduli cannot be mixed
//! silently.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("cannot invert zero")]
    ZeroInverse,
    #[error("operands belong to different fields")]
    FieldMismatch,
    #[error("{0} is not an odd prime below 2^62")]
    BadModulus(u64),
    #[error("value is not a root of the polynomial")]
    NotARoot,
    #[error("denominator vanishes modulo the prime")]
    BadReduction,
}

/// An exact field scalar.
///
/// `zero_like`/`one_like` take a witness value because the prime-field
/// modulus is a runtime quantity: a bare `zero()` could not know which field
/// it belongs to.
pub trait Field:
    Clone
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn from_i64_like(&self, n: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn inv(&self) -> Result<Self, AlgebraError>;
    fn same_field(&self, other: &Self) -> bool;
    /// The characteristic, when the field is GF(p).
    fn modulus_hint(&self) -> Option<u64> {
        None
    }
}

// ---------------------------------------------------------------------------
// GF(p) for a word-size odd prime
// ---------------------------------------------------------------------------

/// A validated odd prime modulus, `2 < p < 2^62`.
///
/// The bound keeps every product of two residues inside 128-bit intermediate
/// arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeModulus {
    p: u64,
}

impl PrimeModulus {
    pub const MAX: u64 = 1 << 62;

    pub fn new(p: u64) -> Result<Self, AlgebraError> {
        if p <= 2 || p >= Self::MAX || p % 2 == 0 || !is_prime_u64(p) {
            return Err(AlgebraError::BadModulus(p));
        }
        Ok(Self { p })
    }

    pub fn get(self) -> u64 {
        self.p
    }

    pub fn elem(self, v: u64) -> Fp64 {
        Fp64 {
            value: v % self.p,
            p: self.p,
        }
    }

    pub fn elem_i64(self, v: i64) -> Fp64 {
        Fp64 {
            value: v.rem_euclid(self.p as i64) as u64,
            p: self.p,
        }
    }

    pub fn zero(self) -> Fp64 {
        self.elem(0)
    }

    pub fn one(self) -> Fp64 {
        self.elem(1)
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> Fp64 {
        self.elem(rng.gen_range(0..self.p))
    }

    pub fn sample_nonzero<R: Rng + ?Sized>(self, rng: &mut R) -> Fp64 {
        self.elem(rng.gen_range(1..self.p))
    }
}

/// Element of GF(p); the residue and its modulus travel together.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp64 {
    value: u64,
    p: u64,
}

impl Fp64 {
    pub fn value(self) -> u64 {
        self.value
    }

    pub fn modulus(self) -> u64 {
        self.p
    }

    pub fn pow(self, mut e: u64) -> Fp64 {
        let mut base = self;
        let mut acc = Fp64 { value: 1, p: self.p };
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl fmt::Debug for Fp64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.p)
    }
}

impl fmt::Display for Fp64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Add for Fp64 {
    type Output = Fp64;
    fn add(self, rhs: Fp64) -> Fp64 {
        debug_assert_eq!(self.p, rhs.p, "mixed moduli");
        let s = self.value + rhs.value;
        Fp64 {
            value: if s >= self.p { s - self.p } else { s },
            p: self.p,
        }
    }
}

impl Sub for Fp64 {
    type Output = Fp64;
    fn sub(self, rhs: Fp64) -> Fp64 {
        debug_assert_eq!(self.p, rhs.p, "mixed moduli");
        let v = if self.value >= rhs.value {
            self.value - rhs.value
        } else {
            self.value + self.p - rhs.value
        };
        Fp64 { value: v, p: self.p }
    }
}

impl Mul for Fp64 {
    type Output = Fp64;
    fn mul(self, rhs: Fp64) -> Fp64 {
        debug_assert_eq!(self.p, rhs.p, "mixed moduli");
        Fp64 {
            value: ((self.value as u128 * rhs.value as u128) % self.p as u128) as u64,
            p: self.p,
        }
    }
}

impl Neg for Fp64 {
    type Output = Fp64;
    fn neg(self) -> Fp64 {
        Fp64 {
            value: if self.value == 0 { 0 } else { self.p - self.value },
            p: self.p,
        }
    }
}

impl Field for Fp64 {
    fn zero_like(&self) -> Self {
        Fp64 { value: 0, p: self.p }
    }

    fn one_like(&self) -> Self {
        Fp64 { value: 1, p: self.p }
    }

    fn from_i64_like(&self, n: i64) -> Self {
        Fp64 {
            value: n.rem_euclid(self.p as i64) as u64,
            p: self.p,
        }
    }

    fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn inv(&self) -> Result<Self, AlgebraError> {
        if self.value == 0 {
            return Err(AlgebraError::ZeroInverse);
        }
        Ok(self.pow(self.p - 2))
    }

    fn same_field(&self, other: &Self) -> bool {
        self.p == other.p
    }

    fn modulus_hint(&self) -> Option<u64> {
        Some(self.p)
    }
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, a, m);
        }
        a = mulmod(a, a, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the witness set below is exact for all u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &q in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

// ---------------------------------------------------------------------------
// Exact rationals (oracle mode)
// ---------------------------------------------------------------------------

/// Arbitrary-precision rational scalar, kept in lowest terms with a positive
/// denominator by `BigRational` itself.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Rat(BigRational);

impl Rat {
    pub fn from_int(n: i64) -> Rat {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(num: i64, den: i64) -> Rat {
        Rat(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_u64(n: u64) -> Rat {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    /// Reduce modulo p; fails when the denominator is divisible by p.
    pub fn reduce_mod(&self, pm: PrimeModulus) -> Result<Fp64, AlgebraError> {
        let p = BigInt::from(pm.get());
        let den = self.0.denom().mod_floor_big(&p);
        if den.is_zero() {
            return Err(AlgebraError::BadReduction);
        }
        let num = self.0.numer().mod_floor_big(&p);
        let num = pm.elem(num.to_u64().expect("residue fits u64"));
        let den = pm.elem(den.to_u64().expect("residue fits u64"));
        Ok(num * den.inv()?)
    }
}

trait ModFloorBig {
    fn mod_floor_big(&self, m: &BigInt) -> BigInt;
}

impl ModFloorBig for BigInt {
    fn mod_floor_big(&self, m: &BigInt) -> BigInt {
        let r = self % m;
        if r.is_negative() {
            r + m
        } else {
            r
        }
    }
}

impl Add for Rat {
    type Output = Rat;
    fn add(self, rhs: Rat) -> Rat {
        Rat(self.0 + rhs.0)
    }
}

impl Sub for Rat {
    type Output = Rat;
    fn sub(self, rhs: Rat) -> Rat {
        Rat(self.0 - rhs.0)
    }
}

impl Mul for Rat {
    type Output = Rat;
    fn mul(self, rhs: Rat) -> Rat {
        Rat(self.0 * rhs.0)
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl Field for Rat {
    fn zero_like(&self) -> Self {
        Rat(BigRational::zero())
    }

    fn one_like(&self) -> Self {
        Rat(BigRational::one())
    }

    fn from_i64_like(&self, n: i64) -> Self {
        Rat::from_int(n)
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn inv(&self) -> Result<Self, AlgebraError> {
        if self.0.is_zero() {
            return Err(AlgebraError::ZeroInverse);
        }
        Ok(Rat(self.0.recip()))
    }

    fn same_field(&self, _other: &Self) -> bool {
        true
    }
}

// ---------------------------------------------------------------------------
// Dense univariate polynomials
// ---------------------------------------------------------------------------

/// Univariate polynomial as a dense coefficient list, index `i` holding the
/// coefficient of `t^i`. Trailing zeros are trimmed; the zero polynomial is
/// the empty list. Every polynomial in play here has degree at most `2g - 2`,
/// so dense storage is the right trade.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DensePoly<F: Field> {
    coeffs: Vec<F>,
}

impl<F: Field> DensePoly<F> {
    pub fn zero() -> Self {
        DensePoly { coeffs: Vec::new() }
    }

    pub fn constant(c: F) -> Self {
        Self::from_coeffs(vec![c])
    }

    pub fn from_coeffs(mut coeffs: Vec<F>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        DensePoly { coeffs }
    }

    pub fn coeffs(&self) -> &[F] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&F> {
        self.coeffs.last()
    }

    pub fn coeff_or_zero(&self, i: usize, ctx: &F) -> F {
        self.coeffs.get(i).cloned().unwrap_or_else(|| ctx.zero_like())
    }

    /// Horner evaluation.
    pub fn eval(&self, x: &F) -> F {
        let mut acc = x.zero_like();
        for c in self.coeffs.iter().rev() {
            acc = acc * x.clone() + c.clone();
        }
        acc
    }

    fn check_same_field(&self, other: &Self) -> Result<(), AlgebraError> {
        if let (Some(a), Some(b)) = (self.coeffs.first(), other.coeffs.first()) {
            if !a.same_field(b) {
                return Err(AlgebraError::FieldMismatch);
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_same_field(other)?;
        let (long, short) = if self.coeffs.len() >= other.coeffs.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = long.coeffs.clone();
        for (i, c) in short.coeffs.iter().enumerate() {
            out[i] = out[i].clone() + c.clone();
        }
        Ok(Self::from_coeffs(out))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.add(&other.negate())
    }

    pub fn negate(&self) -> Self {
        DensePoly {
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }

    pub fn scale(&self, c: &F) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self::from_coeffs(self.coeffs.iter().map(|a| a.clone() * c.clone()).collect())
    }

    /// Schoolbook convolution; degrees here never warrant anything fancier.
    pub fn mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_same_field(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero());
        }
        let zero = self.coeffs[0].zero_like();
        let mut out = vec![zero; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Ok(Self::from_coeffs(out))
    }

    /// Multiply by `t`.
    pub fn shift_up(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(self.coeffs[0].zero_like());
        out.extend(self.coeffs.iter().cloned());
        DensePoly { coeffs: out }
    }

    /// Multiply by `(t - a)`.
    pub fn mul_linear(&self, a: &F) -> Self {
        self.shift_up()
            .sub(&self.scale(a))
            .expect("same field by construction")
    }

    /// Exact removal of the linear factor `(t - a)`; `a` must be a root.
    pub fn div_linear(&self, a: &F) -> Result<Self, AlgebraError> {
        if self.is_zero() {
            return Ok(Self::zero());
        }
        // Synthetic division; the final remainder is f(a).
        let mut quot = vec![a.zero_like(); self.coeffs.len() - 1];
        let mut carry = a.zero_like();
        for i in (0..self.coeffs.len()).rev() {
            let v = self.coeffs[i].clone() + carry.clone() * a.clone();
            if i == 0 {
                if !v.is_zero() {
                    return Err(AlgebraError::NotARoot);
                }
            } else {
                quot[i - 1] = v.clone();
                carry = v;
            }
        }
        Ok(Self::from_coeffs(quot))
    }

    /// Monic polynomial vanishing exactly at the given root multiset.
    /// `ctx` supplies the field when `roots` is empty.
    pub fn from_roots(ctx: &F, roots: &[F]) -> Self {
        let mut acc = Self::constant(ctx.one_like());
        for r in roots {
            acc = acc.mul_linear(r);
        }
        acc
    }
}
