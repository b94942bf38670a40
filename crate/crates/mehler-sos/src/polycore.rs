//! Sparse multivariate polynomial arithmetic over exact rationals and floats,
//! plus the Gaussian-moment inner product and the coefficient norm.
//!
//! The coefficient domain is a type parameter: `Polynomial<BigRational>` for
//! the exact identity pipeline, `Polynomial<f64>` for quadrature and
//! certificate work. Mixing the two is a compile error, which is the intended
//! replacement for a runtime tag check.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Rat = BigRational;
pub type Nat = BigUint;

/// Exponent vector alpha in N_0^d with graded-lexicographic ordering.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exps: Vec<u32>) -> Self {
        assert!(!exps.is_empty(), "multi-index needs d >= 1");
        MultiIndex(exps)
    }

    pub fn zeros(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn unit(d: usize, j: usize) -> Self {
        let mut e = vec![0; d];
        e[j] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    /// |alpha| = sum of entries.
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// alpha! = product of entry factorials, exact.
    pub fn factorial(&self) -> Nat {
        self.0.iter().map(|&e| factorial(e)).product()
    }

    /// Componentwise partial order alpha <= beta.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        assert_eq!(self.0.len(), other.0.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn floor_half(&self) -> MultiIndex {
        MultiIndex(self.0.iter().map(|&e| e / 2).collect())
    }

    pub fn ceil_half(&self) -> MultiIndex {
        MultiIndex(self.0.iter().map(|&e| e.div_ceil(2)).collect())
    }

    /// All entries even.
    pub fn is_even(&self) -> bool {
        self.0.iter().all(|&e| e % 2 == 0)
    }

    /// binom(beta, alpha) = prod binom(beta_j, alpha_j), for alpha <= beta.
    pub fn binom(beta: &MultiIndex, alpha: &MultiIndex) -> Nat {
        assert!(alpha.le(beta));
        beta.0
            .iter()
            .zip(&alpha.0)
            .map(|(&b, &a)| binomial(b, a))
            .product()
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total()
            .cmp(&other.total())
            .then_with(|| self.0.cmp(&other.0))
    }
}

pub fn factorial(n: u32) -> Nat {
    let mut acc = Nat::one();
    for k in 2..=n as u64 {
        acc *= k;
    }
    acc
}

pub fn binomial(n: u32, k: u32) -> Nat {
    if k > n {
        return Nat::zero();
    }
    let k = k.min(n - k);
    let mut num = Nat::one();
    let mut den = Nat::one();
    for j in 0..k {
        num *= n as u64 - j as u64;
        den *= j as u64 + 1;
    }
    num / den
}

/// Coefficient domain: exact rationals or binary64.
pub trait Coeff:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Neg<Output = Self>
    + Sub<Output = Self>
    + Add<Output = Self>
    + Mul<Output = Self>
{
    fn from_rat(r: &Rat) -> Self;
}

impl Coeff for Rat {
    fn from_rat(r: &Rat) -> Self {
        r.clone()
    }
}

impl Coeff for f64 {
    fn from_rat(r: &Rat) -> Self {
        rat_to_f64(r)
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back for numerators/denominators beyond f64 range.
        let bits = 200u64;
        let scaled = (r.numer() << bits) / r.denom();
        scaled.to_f64().unwrap_or(f64::INFINITY) / 2f64.powi(bits as i32)
    })
}

/// Sparse polynomial: map from exponent vectors to nonzero coefficients.
#[derive(Clone, PartialEq, Debug)]
pub struct Polynomial<C: Coeff> {
    vars: usize,
    terms: BTreeMap<MultiIndex, C>,
}

impl<C: Coeff> Polynomial<C> {
    pub fn zero(vars: usize) -> Self {
        assert!(vars >= 1);
        Polynomial {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: usize, c: C) -> Self {
        let mut p = Self::zero(vars);
        p.insert(MultiIndex::zeros(vars), c);
        p
    }

    /// The variable x_j.
    pub fn variable(vars: usize, j: usize) -> Self {
        let mut p = Self::zero(vars);
        p.insert(MultiIndex::unit(vars, j), C::one());
        p
    }

    pub fn from_terms(vars: usize, terms: impl IntoIterator<Item = (MultiIndex, C)>) -> Self {
        let mut p = Self::zero(vars);
        for (idx, c) in terms {
            p.add_to(idx, c);
        }
        p
    }

    pub fn num_vars(&self) -> usize {
        self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Degree, with the zero polynomial at -1.
    pub fn degree(&self) -> i64 {
        self.terms
            .keys()
            .map(|idx| idx.total() as i64)
            .max()
            .unwrap_or(-1)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, idx: &MultiIndex) -> C {
        self.terms.get(idx).cloned().unwrap_or_else(C::zero)
    }

    /// Insert, dropping zeros and replacing any existing coefficient.
    pub fn insert(&mut self, idx: MultiIndex, c: C) {
        assert_eq!(idx.dim(), self.vars, "exponent arity mismatch");
        if c.is_zero() {
            self.terms.remove(&idx);
        } else {
            self.terms.insert(idx, c);
        }
    }

    /// Add `c` into the coefficient at `idx`.
    pub fn add_to(&mut self, idx: MultiIndex, c: C) {
        assert_eq!(idx.dim(), self.vars, "exponent arity mismatch");
        let cur = self.terms.remove(&idx).unwrap_or_else(C::zero);
        let next = cur + c;
        if !next.is_zero() {
            self.terms.insert(idx, next);
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.vars != other.vars {
            return Err(Error::DimensionMismatch(format!(
                "add: {} vs {} variables",
                self.vars, other.vars
            )));
        }
        let mut out = self.clone();
        for (idx, c) in &other.terms {
            out.add_to(idx.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.vars != other.vars {
            return Err(Error::DimensionMismatch(format!(
                "mul: {} vs {} variables",
                self.vars, other.vars
            )));
        }
        let mut out = Self::zero(self.vars);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_to(a.add(b), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.try_add(other).expect("dimension mismatch")
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.try_mul(other).expect("dimension mismatch")
    }

    pub fn neg(&self) -> Self {
        self.map(|c| -c.clone())
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(self.vars);
        }
        self.map(|x| x.clone() * c.clone())
    }

    pub fn map<F: Fn(&C) -> C>(&self, f: F) -> Self {
        let mut out = Self::zero(self.vars);
        for (idx, c) in &self.terms {
            out.insert(idx.clone(), f(c));
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::constant(self.vars, C::one());
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn evaluate(&self, point: &[C]) -> C {
        assert_eq!(point.len(), self.vars, "evaluation point arity mismatch");
        let mut acc = C::zero();
        for (idx, c) in &self.terms {
            let mut term = c.clone();
            for (j, &e) in idx.exps().iter().enumerate() {
                term = term * pow_c(point[j].clone(), e);
            }
            acc = acc + term;
        }
        acc
    }

    /// Embed a polynomial in `self.vars` variables into `vars` variables,
    /// placing variable j at position offset + j.
    pub fn embed(&self, vars: usize, offset: usize) -> Self {
        assert!(offset + self.vars <= vars);
        let mut out = Self::zero(vars);
        for (idx, c) in &self.terms {
            let mut e = vec![0u32; vars];
            e[offset..offset + self.vars].copy_from_slice(idx.exps());
            out.insert(MultiIndex::new(e), c.clone());
        }
        out
    }
}

fn pow_c<C: Coeff>(base: C, e: u32) -> C {
    let mut acc = C::one();
    let mut b = base;
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b.clone();
        }
        b = b.clone() * b;
        e >>= 1;
    }
    acc
}

impl Polynomial<Rat> {
    pub fn to_float(&self) -> Polynomial<f64> {
        let mut out = Polynomial::zero(self.vars);
        for (idx, c) in &self.terms {
            out.insert(idx.clone(), rat_to_f64(c));
        }
        out
    }
}

impl Polynomial<f64> {
    /// Largest absolute coefficient; 0 for the zero polynomial.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// (x.x)^n in d variables: homogeneous of degree 2n with multinomial
/// coefficients n!/beta!.
pub fn dot_square_power<C: Coeff>(d: usize, n: u32) -> Polynomial<C> {
    let n_fact = factorial(n);
    let mut out = Polynomial::zero(d);
    for beta in multi_indices_of_total(d, n) {
        let coef = Rat::from_integer(BigInt::from(&n_fact / beta.factorial()));
        let mut exps = Vec::with_capacity(d);
        for &e in beta.exps() {
            exps.push(2 * e);
        }
        out.insert(MultiIndex::new(exps), C::from_rat(&coef));
    }
    out
}

/// All multi-indices in N_0^d with |alpha| = total.
pub fn multi_indices_of_total(d: usize, total: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    fn rec(d: usize, j: usize, rest: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if j == d - 1 {
            cur[j] = rest;
            out.push(MultiIndex::new(cur.clone()));
            return;
        }
        for e in 0..=rest {
            cur[j] = e;
            rec(d, j + 1, rest - e, cur, out);
        }
    }
    rec(d, 0, total, &mut cur, &mut out);
    out
}

/// All multi-indices with |alpha| <= max_total.
pub fn multi_indices_up_to(d: usize, max_total: u32) -> Vec<MultiIndex> {
    (0..=max_total)
        .flat_map(|t| multi_indices_of_total(d, t))
        .collect()
}

/// Normalized Gaussian moment: integral of xi^l against
/// exp(-xi^2/lambda) dxi / sqrt(lambda pi). Zero for odd l, else
/// lambda^{l/2} l! / (2^l (l/2)!), exact.
pub fn gaussian_moment(l: u32, lambda: &Rat) -> Rat {
    assert!(lambda.is_positive(), "gaussian_moment needs lambda > 0");
    if l % 2 == 1 {
        return Rat::zero();
    }
    let m = l / 2;
    let num = Rat::from_integer(BigInt::from(factorial(l)));
    let den = Rat::from_integer(BigInt::from(Nat::one() << l) * BigInt::from(factorial(m)));
    pow_rat(lambda, m) * num / den
}

pub fn pow_rat(r: &Rat, e: u32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..e {
        acc *= r;
    }
    acc
}

/// Gaussian inner product <p, q> against exp(-(xi.xi)) d^d xi / sqrt(pi)^d,
/// computed termwise and exactly.
pub fn inner_product_infty(p: &Polynomial<Rat>, q: &Polynomial<Rat>) -> Result<Rat> {
    if p.num_vars() != q.num_vars() {
        return Err(Error::DimensionMismatch(format!(
            "inner product: {} vs {} variables",
            p.num_vars(),
            q.num_vars()
        )));
    }
    let one = Rat::one();
    let mut acc = Rat::zero();
    for (a, ca) in p.terms() {
        for (b, cb) in q.terms() {
            let sum = a.add(b);
            if !sum.is_even() {
                continue;
            }
            let mut m = Rat::one();
            for &e in sum.exps() {
                m *= gaussian_moment(e, &one);
            }
            acc += ca * cb * m;
        }
    }
    Ok(acc)
}

/// A finite sum of c_i * sqrt(r_i) with c_i >= 0 rational and r_i a
/// nonnegative integer radicand. Supports exact comparison against rational
/// thresholds by interval refinement on integer square roots.
#[derive(Clone, Debug, PartialEq)]
pub struct RadicalSum {
    terms: BTreeMap<Nat, Rat>,
}

impl RadicalSum {
    pub fn zero() -> Self {
        RadicalSum {
            terms: BTreeMap::new(),
        }
    }

    pub fn from_rational(c: Rat) -> Self {
        let mut s = Self::zero();
        s.push(c, Nat::one());
        s
    }

    /// Add c * sqrt(radicand), c >= 0.
    pub fn push(&mut self, c: Rat, radicand: Nat) {
        assert!(!c.is_negative(), "radical sums keep nonnegative coefficients");
        if c.is_zero() || radicand.is_zero() {
            return;
        }
        let cur = self.terms.remove(&radicand).unwrap_or_else(Rat::zero);
        let next = cur + c;
        if !next.is_zero() {
            self.terms.insert(radicand, next);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Nat, &Rat)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &RadicalSum) -> RadicalSum {
        let mut out = self.clone();
        for (r, c) in &other.terms {
            out.push(c.clone(), r.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> RadicalSum {
        assert!(!c.is_negative());
        let mut out = Self::zero();
        for (r, x) in &self.terms {
            out.push(x * c, r.clone());
        }
        out
    }

    pub fn mul(&self, other: &RadicalSum) -> RadicalSum {
        let mut out = Self::zero();
        for (r1, c1) in &self.terms {
            for (r2, c2) in &other.terms {
                out.push(c1 * c2, r1 * r2);
            }
        }
        out
    }

    fn bound(&self, bits: u64, upper: bool) -> Rat {
        let scale = BigInt::from(Nat::one() << bits);
        let mut acc = Rat::zero();
        for (r, c) in &self.terms {
            let shifted = r << (2 * bits);
            let mut s = shifted.sqrt();
            if upper {
                s += 1u32;
            }
            acc += c * Rat::new(BigInt::from(s), scale.clone());
        }
        acc
    }

    pub fn lower_rational(&self, bits: u64) -> Rat {
        self.bound(bits, false)
    }

    pub fn upper_rational(&self, bits: u64) -> Rat {
        self.bound(bits, true)
    }

    /// Outward-rounded f64 upper bound.
    pub fn to_f64_upper(&self) -> f64 {
        rat_to_f64(&self.upper_rational(80)) * (1.0 + 1e-12)
    }

    /// f64 lower bound.
    pub fn to_f64_lower(&self) -> f64 {
        rat_to_f64(&self.lower_rational(80)) * (1.0 - 1e-12)
    }

    /// The exact rational value, when there is one. Square roots of distinct
    /// square-free naturals are linearly independent over the rationals, so
    /// the sum is rational iff every radicand is a perfect square.
    pub fn as_rational(&self) -> Option<Rat> {
        if self.terms.keys().all(is_perfect_square) {
            Some(
                self.terms
                    .iter()
                    .map(|(r, c)| c * Rat::from_integer(BigInt::from(r.sqrt())))
                    .sum(),
            )
        } else {
            None
        }
    }

    /// Exact comparison against a rational threshold. Values that agree to
    /// 1024 bits are reported Equal; when every radicand is a perfect square
    /// the comparison is fully exact.
    pub fn cmp_rational(&self, threshold: &Rat) -> Ordering {
        if self.terms.keys().all(is_perfect_square) {
            let exact: Rat = self
                .terms
                .iter()
                .map(|(r, c)| c * Rat::from_integer(BigInt::from(r.sqrt())))
                .sum();
            return exact.cmp(threshold);
        }
        let mut bits = 32;
        while bits <= 1024 {
            if self.lower_rational(bits) > *threshold {
                return Ordering::Greater;
            }
            if self.upper_rational(bits) < *threshold {
                return Ordering::Less;
            }
            bits *= 2;
        }
        Ordering::Equal
    }
}

fn is_perfect_square(n: &Nat) -> bool {
    let s = n.sqrt();
    &s * &s == *n
}

/// The coefficient norm: sum over terms of |p_alpha| sqrt(alpha!), kept as an
/// exact radical sum plus an outward-rounded float.
#[derive(Clone, Debug)]
pub struct NormValue {
    pub exact: RadicalSum,
    pub upper: f64,
}

impl NormValue {
    pub fn from_radical_sum(exact: RadicalSum) -> Self {
        let upper = exact.to_f64_upper();
        NormValue { exact, upper }
    }

    pub fn from_rational(c: Rat) -> Self {
        Self::from_radical_sum(RadicalSum::from_rational(c))
    }
}

pub fn coefficient_norm(p: &Polynomial<Rat>) -> NormValue {
    let mut sum = RadicalSum::zero();
    for (idx, c) in p.terms() {
        sum.push(c.abs(), idx.factorial());
    }
    NormValue::from_radical_sum(sum)
}

// --- JSON schema -----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PolyJson {
    vars: usize,
    terms: Vec<TermJson>,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exp: Vec<u32>,
    coef: String,
}

/// Parse the polynomial JSON schema
/// `{"vars": d, "terms": [{"exp": [...], "coef": "<int|num/den|decimal>"}]}`.
/// Decimal coefficients become exact scaled rationals.
pub fn parse(text: &str, d: usize) -> Result<Polynomial<Rat>> {
    let json: PolyJson =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("polynomial JSON: {e}")))?;
    if json.vars != d {
        return Err(Error::Parse(format!(
            "expected {} variables, file declares {}",
            d, json.vars
        )));
    }
    build_poly(json)
}

/// Parse, taking the variable count from the file.
pub fn parse_auto(text: &str) -> Result<Polynomial<Rat>> {
    let json: PolyJson =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("polynomial JSON: {e}")))?;
    build_poly(json)
}

fn build_poly(json: PolyJson) -> Result<Polynomial<Rat>> {
    if json.vars == 0 {
        return Err(Error::Parse("vars must be >= 1".into()));
    }
    let mut p = Polynomial::zero(json.vars);
    for t in json.terms {
        if t.exp.len() != json.vars {
            return Err(Error::Parse(format!(
                "term exponent arity {} != vars {}",
                t.exp.len(),
                json.vars
            )));
        }
        let c = parse_rational(&t.coef)?;
        p.add_to(MultiIndex::new(t.exp), c);
    }
    Ok(p)
}

/// Parse "123", "-4/5", or "1.25" into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rat> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator {num:?}")))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator {den:?}")))?;
        if d.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let digits = format!("{}{}", int_part, frac_part);
        let n: BigInt = digits
            .parse()
            .map_err(|_| Error::Parse(format!("bad decimal {s:?}")))?;
        let mut d = BigInt::one();
        for _ in 0..frac_part.len() {
            d *= 10;
        }
        return Ok(Rat::new(n, d));
    }
    let n: BigInt = s
        .parse()
        .map_err(|_| Error::Parse(format!("bad coefficient {s:?}")))?;
    Ok(Rat::from_integer(n))
}

fn format_rational(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Canonical JSON output: terms in graded-lexicographic order.
pub fn format(p: &Polynomial<Rat>) -> String {
    let json = PolyJson {
        vars: p.num_vars(),
        terms: p
            .terms()
            .map(|(idx, c)| TermJson {
                exp: idx.exps().to_vec(),
                coef: format_rational(c),
            })
            .collect(),
    };
    serde_json::to_string(&json).expect("serialization cannot fail")
}

/// Canonical JSON output for float polynomials.
pub fn format_float(p: &Polynomial<f64>) -> String {
    let json = PolyJson {
        vars: p.num_vars(),
        terms: p
            .terms()
            .map(|(idx, c)| TermJson {
                exp: idx.exps().to_vec(),
                coef: format!("{c:.17e}"),
            })
            .collect(),
    };
    serde_json::to_string(&json).expect("serialization cannot fail")
}

/// The Motzkin polynomial x1^2 x2^2 (x1^2 + x2^2 - 3) + 1, the standard
/// nonnegative-but-not-SOS example.
pub fn motzkin() -> Polynomial<Rat> {
    Polynomial::from_terms(
        2,
        [
            (MultiIndex::new(vec![4, 2]), Rat::one()),
            (MultiIndex::new(vec![2, 4]), Rat::one()),
            (MultiIndex::new(vec![2, 2]), -Rat::from_integer(3.into())),
            (MultiIndex::new(vec![0, 0]), Rat::one()),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    fn random_poly(rng: &mut ChaCha8Rng, d: usize, deg: u32, terms: usize) -> Polynomial<Rat> {
        let mut p = Polynomial::zero(d);
        for _ in 0..terms {
            let mut exps = vec![0u32; d];
            let mut left = deg;
            for e in exps.iter_mut() {
                *e = rng.gen_range(0..=left);
                left -= *e;
            }
            let num = rng.gen_range(-9i64..=9);
            let den = rng.gen_range(1i64..=9);
            p.add_to(MultiIndex::new(exps), rat(num, den));
        }
        p
    }

    #[test]
    fn parse_constant_one() {
        let p = parse(r#"{"vars":2,"terms":[{"exp":[0,0],"coef":"1"}]}"#, 2).unwrap();
        assert_eq!(p.degree(), 0);
        assert_eq!(p.coefficient(&MultiIndex::zeros(2)), Rat::one());
    }

    #[test]
    fn parse_motzkin_source() {
        let text = r#"{"vars":2,"terms":[
            {"exp":[4,2],"coef":"1"},{"exp":[2,4],"coef":"1"},
            {"exp":[2,2],"coef":"-3"},{"exp":[0,0],"coef":"1"}]}"#;
        let p = parse(text, 2).unwrap();
        assert_eq!(p, motzkin());
        assert_eq!(p.degree(), 6);
        assert_eq!(p.num_terms(), 4);
    }

    #[test]
    fn parse_zero_coefficient_normalizes() {
        let p = parse(r#"{"vars":1,"terms":[{"exp":[1],"coef":"0"}]}"#, 1).unwrap();
        assert!(p.is_zero());
        assert_eq!(p.degree(), -1);
    }

    #[test]
    fn parse_decimal_is_exact() {
        assert_eq!(parse_rational("1.25").unwrap(), rat(5, 4));
        assert_eq!(parse_rational("-0.5").unwrap(), rat(-1, 2));
        assert_eq!(parse_rational("7/3").unwrap(), rat(7, 3));
    }

    #[test]
    fn parse_errors() {
        assert!(parse(r#"{"vars":2,"terms":[{"exp":[1],"coef":"1"}]}"#, 2).is_err());
        assert!(parse(r#"{"vars":1,"terms":[{"exp":[1],"coef":"x"}]}"#, 1).is_err());
        assert!(parse(r#"{"vars":1,"terms":[{"exp":[1],"coef":"1"}]}"#, 2).is_err());
    }

    #[test]
    fn format_round_trip() {
        let p = motzkin();
        let q = parse(&format(&p), 2).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn difference_of_squares() {
        let z = Polynomial::<Rat>::variable(1, 0);
        let one = Polynomial::constant(1, Rat::one());
        let prod = z.add(&one).mul(&z.sub(&one));
        let expected = z.mul(&z).sub(&one);
        assert_eq!(prod, expected);
    }

    #[test]
    fn evaluate_motzkin_at_ones() {
        let v = motzkin().evaluate(&[Rat::one(), Rat::one()]);
        assert_eq!(v, Rat::zero());
    }

    #[test]
    fn scale_by_zero() {
        let p = motzkin().scale(&Rat::zero());
        assert!(p.is_zero());
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let p = Polynomial::<Rat>::variable(1, 0);
        let q = Polynomial::<Rat>::variable(2, 0);
        assert!(p.try_add(&q).is_err());
        assert!(p.try_mul(&q).is_err());
    }

    #[test]
    fn dot_square_power_cases() {
        let one: Polynomial<Rat> = dot_square_power(2, 0);
        assert_eq!(one, Polynomial::constant(2, Rat::one()));

        // (x1^2 + x2^2)^2 oracle via binomial expansion.
        let p: Polynomial<Rat> = dot_square_power(2, 2);
        assert_eq!(p.coefficient(&MultiIndex::new(vec![4, 0])), Rat::one());
        assert_eq!(p.coefficient(&MultiIndex::new(vec![2, 2])), rat(2, 1));
        assert_eq!(p.coefficient(&MultiIndex::new(vec![0, 4])), Rat::one());
        assert_eq!(p.num_terms(), 3);

        let q: Polynomial<Rat> = dot_square_power(1, 3);
        assert_eq!(q.coefficient(&MultiIndex::new(vec![6])), Rat::one());
        assert_eq!(q.num_terms(), 1);
    }

    #[test]
    fn gaussian_moment_cases() {
        assert_eq!(gaussian_moment(3, &Rat::one()), Rat::zero());
        assert_eq!(gaussian_moment(2, &Rat::one()), rat(1, 2));
        assert_eq!(gaussian_moment(4, &Rat::one()), rat(3, 4));
        assert_eq!(gaussian_moment(8, &Rat::one()), rat(105, 16));
    }

    #[test]
    fn gaussian_moment_factorial_estimate() {
        // moment(2m, lambda) <= lambda^m m! exactly.
        for &(n, d) in &[(1i64, 4i64), (1, 2), (1, 1), (2, 1)] {
            let lambda = rat(n, d);
            for m in 0..=20u32 {
                let lhs = gaussian_moment(2 * m, &lambda);
                let rhs = pow_rat(&lambda, m) * Rat::from_integer(BigInt::from(factorial(m)));
                assert!(lhs <= rhs, "m={m} lambda={lambda}");
            }
        }
    }

    #[test]
    fn inner_product_cases() {
        let one = Polynomial::constant(1, Rat::one());
        let z = Polynomial::<Rat>::variable(1, 0);
        let z2 = z.mul(&z);
        let z3 = z2.mul(&z);
        assert_eq!(inner_product_infty(&one, &one).unwrap(), Rat::one());
        assert_eq!(inner_product_infty(&one, &z2).unwrap(), rat(1, 2));
        assert_eq!(inner_product_infty(&z, &z3).unwrap(), rat(3, 4));
    }

    #[test]
    fn norm_cases() {
        let one = Polynomial::constant(1, Rat::one());
        assert_eq!(
            coefficient_norm(&one).exact.cmp_rational(&Rat::one()),
            Ordering::Equal
        );

        let x1sq = Polynomial::from_terms(2, [(MultiIndex::new(vec![2, 0]), Rat::one())]);
        let n = coefficient_norm(&x1sq);
        assert!((n.upper - 2f64.sqrt()).abs() < 1e-9);

        // Motzkin: 2 sqrt(48) + 3*2 + 1 = 7 + 8 sqrt(3).
        let n = coefficient_norm(&motzkin());
        assert!((n.upper - (7.0 + 8.0 * 3f64.sqrt())).abs() < 1e-9);
        // Exact: compare (norm - 7)^2 = 192 by squaring through the API.
        assert_eq!(n.exact.cmp_rational(&rat(208564, 10000)), Ordering::Greater);
        assert_eq!(n.exact.cmp_rational(&rat(208565, 10000)), Ordering::Less);
    }

    #[test]
    fn radical_sum_comparisons() {
        // 2 sqrt(2) vs 2.828427...
        let mut s = RadicalSum::zero();
        s.push(rat(2, 1), Nat::from(2u32));
        assert_eq!(s.cmp_rational(&rat(28, 10)), Ordering::Greater);
        assert_eq!(s.cmp_rational(&rat(29, 10)), Ordering::Less);
        // Perfect squares compare exactly.
        let s = RadicalSum::from_rational(rat(3, 2));
        assert_eq!(s.cmp_rational(&rat(3, 2)), Ordering::Equal);
    }

    #[test]
    fn inner_product_bounded_by_norm() {
        // <p,p>^(1/2) <= ||p|| on 200 random sparse polynomials.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let d = rng.gen_range(1..=3);
            let p = random_poly(&mut rng, d, 6, 5);
            let ip = inner_product_infty(&p, &p).unwrap();
            let norm = coefficient_norm(&p);
            // Compare ip <= ||p||^2 exactly via the radical-sum square.
            let norm_sq = norm.exact.mul(&norm.exact);
            assert_ne!(norm_sq.cmp_rational(&ip), Ordering::Less, "p = {p:?}");
        }
    }

    #[test]
    fn pseudo_cauchy_schwarz_square_identity() {
        // lambda p^2 + q^2/lambda +- 2pq is (sqrt(lambda) p +- q/sqrt(lambda))^2
        // after clearing lambda: for lambda = (a/b)^2 rational square,
        // lambda p^2 + q^2/lambda + 2pq times lambda is (lambda p + q)^2.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let d = rng.gen_range(1..=2);
            let p = random_poly(&mut rng, d, 3, 3);
            let q = random_poly(&mut rng, d, 3, 3);
            let a = rat(rng.gen_range(1i64..=5), rng.gen_range(1i64..=5));
            let lambda = &a * &a;
            let lhs = p
                .mul(&p)
                .scale(&lambda)
                .add(&q.mul(&q).scale(&lambda.recip()))
                .add(&p.mul(&q).scale(&rat(2, 1)));
            // (a p + q/a)^2
            let s = p.scale(&a).add(&q.scale(&a.recip()));
            assert_eq!(lhs, s.mul(&s));
        }
    }

    #[test]
    fn ring_laws_and_evaluation_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let d = rng.gen_range(1..=3);
            let p = random_poly(&mut rng, d, 4, 4);
            let q = random_poly(&mut rng, d, 4, 4);
            let r = random_poly(&mut rng, d, 4, 4);
            assert_eq!(p.mul(&q), q.mul(&p));
            assert_eq!(p.mul(&q).mul(&r), p.mul(&q.mul(&r)));
            let point: Vec<Rat> = (0..d)
                .map(|_| rat(rng.gen_range(-3i64..=3), rng.gen_range(1i64..=3)))
                .collect();
            assert_eq!(
                p.mul(&q).evaluate(&point),
                p.evaluate(&point) * q.evaluate(&point)
            );
            assert_eq!(
                p.add(&q).evaluate(&point),
                p.evaluate(&point) + q.evaluate(&point)
            );
        }
    }
}
