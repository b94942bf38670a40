//! Physicists' Hermite polynomials (weight e^{-xi^2}), their Gaussian inner
//! products, and the Hermite-basis expansion of a polynomial. Everything here
//! is exact over the rationals.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::polycore::{
    factorial, multi_indices_up_to, MultiIndex, Nat, Polynomial, Rat,
};

static CACHE: OnceLock<Mutex<Vec<Polynomial<Rat>>>> = OnceLock::new();

/// H_n in one variable via the recursion H_0 = 1, H_1 = 2z,
/// H_{n+1} = 2z H_n - 2n H_{n-1}. Memoized; safe for concurrent callers.
pub fn hermite_univariate(n: u32) -> Polynomial<Rat> {
    let cache = CACHE.get_or_init(|| {
        let h0 = Polynomial::constant(1, Rat::one());
        let two_z = Polynomial::variable(1, 0).scale(&Rat::from_integer(2.into()));
        Mutex::new(vec![h0, two_z])
    });
    let mut guard = cache.lock().expect("hermite cache poisoned");
    while guard.len() <= n as usize {
        let k = guard.len(); // building H_k from H_{k-1}, H_{k-2}
        let two_z = Polynomial::<Rat>::variable(1, 0).scale(&Rat::from_integer(2.into()));
        let a = two_z.mul(&guard[k - 1]);
        let b = guard[k - 2].scale(&Rat::from_integer(BigInt::from(2 * (k as u64 - 1))));
        guard.push(a.sub(&b));
    }
    guard[n as usize].clone()
}

/// H_n via the explicit alternating-sum formula. Retained as an independent
/// oracle for the recursion.
pub fn hermite_explicit(n: u32) -> Polynomial<Rat> {
    let n_fact = Rat::from_integer(BigInt::from(factorial(n)));
    let mut p = Polynomial::zero(1);
    for k in 0..=n / 2 {
        let sign = if k % 2 == 0 { Rat::one() } else { -Rat::one() };
        let pow2 = Rat::from_integer(BigInt::from(Nat::one() << (n - 2 * k)));
        let den = Rat::from_integer(BigInt::from(factorial(k) * factorial(n - 2 * k)));
        p.add_to(
            MultiIndex::new(vec![n - 2 * k]),
            sign * &n_fact * pow2 / den,
        );
    }
    p
}

/// H_alpha = prod_j H_{alpha_j}(x_j), total degree |alpha|.
pub fn hermite_multi(alpha: &MultiIndex) -> Polynomial<Rat> {
    let d = alpha.dim();
    let mut out = Polynomial::constant(d, Rat::one());
    for (j, &e) in alpha.exps().iter().enumerate() {
        if e > 0 {
            out = out.mul(&hermite_univariate(e).embed(d, j));
        }
    }
    out
}

/// Gaussian inner product of H_n with the monomial xi^m: zero for m < n or
/// m - n odd, else m! / (2^{m-n} ((m-n)/2)!), exact.
pub fn hermite_moment(n: u32, m: u32) -> Rat {
    if m < n || (m - n) % 2 == 1 {
        return Rat::zero();
    }
    let l = m - n;
    let num = Rat::from_integer(BigInt::from(factorial(m)));
    let den = Rat::from_integer(BigInt::from(Nat::one() << l) * BigInt::from(factorial(l / 2)));
    num / den
}

/// <H_alpha, p> computed termwise: each monomial of p contracts against the
/// per-axis Hermite moments, so H_alpha is never built explicitly.
pub fn hermite_inner(alpha: &MultiIndex, p: &Polynomial<Rat>) -> Rat {
    assert_eq!(alpha.dim(), p.num_vars(), "dimension mismatch");
    let mut acc = Rat::zero();
    for (gamma, c) in p.terms() {
        let mut m = Rat::one();
        for (&a, &g) in alpha.exps().iter().zip(gamma.exps()) {
            let axis = hermite_moment(a, g);
            if axis.is_zero() {
                m = Rat::zero();
                break;
            }
            m *= axis;
        }
        if !m.is_zero() {
            acc += c * m;
        }
    }
    acc
}

/// Expansion p = sum_alpha c_alpha H_alpha with
/// c_alpha = <H_alpha, p> / (2^{|alpha|} alpha!).
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteExpansion {
    vars: usize,
    coeffs: BTreeMap<MultiIndex, Rat>,
}

impl HermiteExpansion {
    pub fn num_vars(&self) -> usize {
        self.vars
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&MultiIndex, &Rat)> {
        self.coeffs.iter()
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> Rat {
        self.coeffs.get(alpha).cloned().unwrap_or_else(Rat::zero)
    }

    /// Rebuild the polynomial sum_alpha c_alpha H_alpha, exactly.
    pub fn reconstruct(&self) -> Polynomial<Rat> {
        let mut p = Polynomial::zero(self.vars);
        for (alpha, c) in &self.coeffs {
            p = p.add(&hermite_multi(alpha).scale(c));
        }
        p
    }
}

/// Orthogonality weight 2^{|alpha|} alpha! as an exact rational.
pub fn hermite_weight(alpha: &MultiIndex) -> Rat {
    Rat::from_integer(
        BigInt::from(Nat::one() << alpha.total()) * BigInt::from(alpha.factorial()),
    )
}

/// Expand p in the Hermite basis. Support is confined to |alpha| <= deg p.
pub fn hermite_expand(p: &Polynomial<Rat>) -> HermiteExpansion {
    let d = p.num_vars();
    let deg = p.degree().max(0) as u32;
    let mut coeffs = BTreeMap::new();
    if !p.is_zero() {
        for alpha in multi_indices_up_to(d, deg) {
            let ip = hermite_inner(&alpha, p);
            if !ip.is_zero() {
                coeffs.insert(alpha.clone(), ip / hermite_weight(&alpha));
            }
        }
    }
    HermiteExpansion { vars: d, coeffs }
}
