//! The explicit degree-bound calculus: the constant mu, the coupling choice
//! lambda*, the truncation order N_expl, and the two estimate inequalities it
//! rests on.
//!
//! Rounding discipline: every transcendental quantity is evaluated in binary64,
//! inflated by a relative guard of 2^-40, and only then floored or ceiled, so a
//! reported order is never smaller than the real-valued formula demands.
//! Decisions that the math requires to be exact (is mu*||p|| above 1, is a
//! coupling admissible) are made on radical sums, never on floats.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

use crate::polycore::{
    binomial, coefficient_norm, dot_square_power, factorial, pow_rat, rat_to_f64, Nat, NormValue,
    Polynomial, RadicalSum, Rat,
};
use crate::{Error, Result};

/// Relative inflation applied to float upper bounds before rounding.
const GUARD: f64 = 1.0 + 9.094947017729282e-13; // 1 + 2^-40

fn ceil_outward(x: f64) -> u128 {
    (x * GUARD).ceil() as u128
}

/// Pull the largest square factor out of n: returns (outside, radicand) with
/// n = outside^2 * radicand.
fn simplify_radical(n: &Nat) -> (Nat, Nat) {
    let mut outside = Nat::one();
    let mut rest = n.clone();
    let mut f = Nat::from(2u32);
    while &f * &f <= rest {
        let sq = &f * &f;
        while (&rest % &sq).is_zero() {
            rest /= &sq;
            outside *= &f;
        }
        f += 1u32;
    }
    // rest may itself be a square of a prime larger than the loop bound.
    let s = rest.sqrt();
    if &s * &s == rest {
        outside *= &s;
        rest = Nat::one();
    }
    (outside, rest)
}

/// mu = M * binom(2M + d - 1, d - 1)^{1/2} * 2^{M + 1/2}, kept exact as
/// coeff * sqrt(radicand) with the float an outward upper bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Mu {
    pub coeff: Nat,
    pub radicand: Nat,
    pub float_upper: f64,
}

impl Mu {
    pub fn as_radical_sum(&self) -> RadicalSum {
        let mut s = RadicalSum::zero();
        s.push(
            Rat::from_integer(BigInt::from(self.coeff.clone())),
            self.radicand.clone(),
        );
        s
    }

    pub fn float_lower(&self) -> f64 {
        self.as_radical_sum().to_f64_lower()
    }
}

pub fn compute_mu(m: u32, d: u32) -> Result<Mu> {
    if m == 0 || d == 0 {
        return Err(Error::Domain(format!(
            "mu requires M >= 1 and d >= 1, got M = {m}, d = {d}"
        )));
    }
    let binom = binomial(2 * m + d - 1, d - 1);
    let raw = binom * (Nat::one() << (2 * m + 1));
    let (outside, radicand) = simplify_radical(&raw);
    let mu = Mu {
        coeff: Nat::from(m) * outside,
        radicand,
        float_upper: 0.0,
    };
    let float_upper = mu.as_radical_sum().to_f64_upper();
    Ok(Mu { float_upper, ..mu })
}

/// (1 - lambda^{2M}) * (mu / M) * ||p|| as an exact radical sum; admissibility
/// demands this stays at or below 1.
pub fn first_estimate_admissible(mu: &Mu, m: u32, norm: &NormValue, lambda_sq: &Rat) -> bool {
    let factor = Rat::one() - pow_rat(lambda_sq, m);
    if factor.is_negative() || factor.is_zero() {
        return true; // lambda^2 >= 1 is outside the domain; 1 - lambda^{2M} <= 0
    }
    let mu_over_m = {
        let mut s = RadicalSum::zero();
        s.push(
            Rat::new(BigInt::from(mu.coeff.clone()), BigInt::from(m)),
            mu.radicand.clone(),
        );
        s
    };
    let lhs = mu_over_m.mul(&norm.exact).scale(&factor);
    lhs.cmp_rational(&Rat::one()) != std::cmp::Ordering::Greater
}

/// Rational coupling lambda^2 standing in for the ideal 1 - 1/(mu ||p||).
///
/// When mu ||p|| <= 1 (decided exactly) the coupling is 0. Otherwise the ideal
/// value is irrational in general; we seed with a float rounding and verify
/// admissibility exactly, bisecting upward toward 1 until the check passes
/// (the admissibility left side vanishes as lambda^2 -> 1, so this
/// terminates).
pub fn lambda_star(mu: &Mu, m: u32, norm: &NormValue) -> Rat {
    let product = mu.as_radical_sum().mul(&norm.exact);
    if product.cmp_rational(&Rat::one()) != std::cmp::Ordering::Greater {
        return Rat::zero();
    }
    // Exact shortcut when mu ||p|| is rational.
    if let Some(exact) = product.as_rational() {
        let candidate = Rat::one() - exact.recip();
        if first_estimate_admissible(mu, m, norm, &candidate) {
            return candidate;
        }
    }
    let seed = 1.0 - 1.0 / (mu.float_upper * norm.upper);
    let mut candidate = Rat::from_float(seed.max(0.0))
        .unwrap_or_else(Rat::zero)
        .min(Rat::new(BigInt::from(u32::MAX - 1), BigInt::from(u32::MAX)));
    while !first_estimate_admissible(mu, m, norm, &candidate) {
        candidate = (candidate + Rat::one()) / Rat::from_integer(2.into());
    }
    candidate
}

/// Labeled intermediate values of a bound computation, for audit output.
pub type Audit = Vec<(String, String)>;

#[derive(Clone, Debug)]
pub struct BoundReport {
    pub m: u32,
    pub d: u32,
    pub t: Rat,
    pub epsilon: Rat,
    pub norm_p_over_eps: NormValue,
    pub mu: Mu,
    pub lambda_star_sq: Rat,
    pub term_lame: u128,
    pub term_relevant: u128,
    pub n_expl: u128,
    pub audit: Audit,
}

/// The full order computation for p / epsilon.
pub fn n_expl(p: &Polynomial<Rat>, epsilon: &Rat, t: &Rat) -> Result<BoundReport> {
    if p.is_zero() {
        return Err(Error::Domain(
            "the zero polynomial has no bound report; 0 is trivially a sum of squares".into(),
        ));
    }
    if epsilon.is_negative() || epsilon.is_zero() {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if t.is_negative() || *t >= Rat::one() {
        return Err(Error::Domain(format!("t must lie in [0, 1), got {t}")));
    }
    let d = p.num_vars() as u32;
    let deg = p.degree().max(0) as u32;
    let m = deg.div_ceil(2).max(1);
    let mu = compute_mu(m, d)?;

    let norm_p = coefficient_norm(p);
    let scaled = norm_p.exact.scale(&epsilon.recip());
    let norm_p_over_eps = NormValue::from_radical_sum(scaled);
    let lambda_star_sq = lambda_star(&mu, m, &norm_p_over_eps);

    let mut audit: Audit = Vec::new();
    let t_f = rat_to_f64(t);
    let inv_one_minus_t = 1.0 / (1.0 - t_f) * GUARD;
    let norm_up = norm_p_over_eps.exact.to_f64_upper();
    let norm_lo = norm_p_over_eps.exact.to_f64_lower();
    let mu_up = mu.float_upper;
    let mu_lo = mu.float_lower();

    let term_lame = 2 * m as u128 + (5 * d as u128).div_ceil(2) + 2;

    // Leading term: ceil(2e (4 mu ||p/eps||)^{1/(1-t)}).
    let base = 4.0 * mu_up * norm_up;
    let lead = 2.0 * std::f64::consts::E * base.powf(inv_one_minus_t);
    let lead_ceil = ceil_outward(lead);

    // Logarithm term: max(0, ceil(ln((d+1)^2 2^{2d} ||p/eps|| / mu) / (1-t))),
    // with the argument rounded up (norm up, mu down).
    let log_arg = ((d + 1) as f64).powi(2) * 4f64.powi(d as i32) * norm_up / mu_lo;
    let log_term = if log_arg > 1.0 {
        ceil_outward(log_arg.ln() * inv_one_minus_t)
    } else {
        0
    };

    let trailing = (3 * d as u128) / 2 + 1;
    let term_relevant = lead_ceil + log_term + trailing;
    let n_expl = term_lame.max(term_relevant);

    audit.push(("degree".into(), deg.to_string()));
    audit.push(("half_degree_m".into(), m.to_string()));
    audit.push((
        "mu_exact".into(),
        format!("{}*sqrt({})", mu.coeff, mu.radicand),
    ));
    audit.push(("mu_float_upper".into(), format!("{mu_up:.6}")));
    audit.push((
        "norm_p_over_eps_bracket".into(),
        format!("[{norm_lo:.6}, {norm_up:.6}]"),
    ));
    audit.push(("lambda_star_sq".into(), lambda_star_sq.to_string()));
    audit.push(("leading_term_raw".into(), format!("{lead:.6}")));
    audit.push(("leading_term_ceil".into(), lead_ceil.to_string()));
    audit.push(("log_argument".into(), format!("{log_arg:.6}")));
    audit.push(("log_term".into(), log_term.to_string()));
    audit.push(("trailing_term".into(), trailing.to_string()));
    audit.push(("term_lame".into(), term_lame.to_string()));
    audit.push(("term_relevant".into(), term_relevant.to_string()));

    Ok(BoundReport {
        m,
        d,
        t: t.clone(),
        epsilon: epsilon.clone(),
        norm_p_over_eps,
        mu,
        lambda_star_sq,
        term_lame,
        term_relevant,
        n_expl,
        audit,
    })
}

/// The two sides of an estimate inequality, kept as float polynomials for
/// sampling checks, plus the exact admissibility verdict where one exists.
#[derive(Clone, Debug)]
pub struct EstimatePair {
    pub lhs: Polynomial<f64>,
    pub rhs: Polynomial<f64>,
    pub context: String,
    pub admissible: Option<bool>,
}

/// First estimate: the Hermite correction of p against the perturbation sum
/// Sigma_{n <= M + floor(d/2)} (x.x)^n / (n!)^t, with the exact admissibility
/// check (1 - lambda^{2M}) (mu / M) ||p|| <= 1.
pub fn first_estimate_pair(p: &Polynomial<Rat>, lambda_sq: &Rat, t: &Rat) -> Result<EstimatePair> {
    if lambda_sq.is_negative() || *lambda_sq > Rat::one() {
        return Err(Error::Domain(format!(
            "lambda^2 must lie in [0, 1], got {lambda_sq}"
        )));
    }
    let d = p.num_vars() as u32;
    let deg = p.degree().max(0) as u32;
    let m = deg.div_ceil(2).max(1);

    // LHS via the Hermite expansion; odd components pick up a float
    // sqrt(lambda^2).
    let lam = rat_to_f64(lambda_sq).sqrt();
    let expansion = crate::hermite::hermite_expand(p);
    let mut lhs = Polynomial::<f64>::zero(d as usize);
    for (alpha, c) in expansion.coeffs() {
        if alpha.total() == 0 {
            continue;
        }
        let weight = lam.powi(alpha.total() as i32) - 1.0;
        let h = crate::hermite::hermite_multi(alpha).to_float();
        for (idx, hc) in h.terms() {
            lhs.add_to(idx.clone(), weight * rat_to_f64(c) * hc);
        }
    }

    let rhs = perturbation_sum_float(d as usize, m + d / 2, t);

    let mu = compute_mu(m, d)?;
    let norm = coefficient_norm(p);
    let admissible = first_estimate_admissible(&mu, m, &norm, lambda_sq);

    Ok(EstimatePair {
        lhs,
        rhs,
        context: format!("first estimate, M = {m}, lambda^2 = {lambda_sq}, t = {t}"),
        admissible: Some(admissible),
    })
}

/// ln(n!) as a plain sum of logarithms.
fn ln_factorial(n: u32) -> f64 {
    (2..=n as u64).map(|k| (k as f64).ln()).sum()
}

/// Sigma_{n=0}^{N} (x.x)^n / (n!)^t with float coefficients.
fn perturbation_sum_float(d: usize, n_max: u32, t: &Rat) -> Polynomial<f64> {
    let t_f = rat_to_f64(t);
    let mut out = Polynomial::zero(d);
    for n in 0..=n_max {
        let w = (-t_f * ln_factorial(n)).exp();
        let base = dot_square_power::<f64>(d, n);
        for (idx, c) in base.terms() {
            out.add_to(idx.clone(), w * c);
        }
    }
    out
}

/// Second estimate condition: N at or above
/// floor(d/2) + e (4/(1-lambda^2))^{1/(1-t)}
///             + max(0, ln((d+1) 2^d ||p|| sqrt(1-lambda^2)) / (1-t)),
/// decided against an outward-rounded threshold.
pub fn second_estimate_condition(
    n: u64,
    lambda_sq: &Rat,
    t: &Rat,
    norm_p: &NormValue,
    d: u32,
) -> Result<bool> {
    if lambda_sq.is_negative() || *lambda_sq >= Rat::one() {
        return Err(Error::Domain(format!(
            "lambda^2 must lie in [0, 1), got {lambda_sq}"
        )));
    }
    if t.is_negative() || *t >= Rat::one() {
        return Err(Error::Domain(format!("t must lie in [0, 1), got {t}")));
    }
    Ok(n as f64 >= second_estimate_threshold(lambda_sq, t, norm_p, d))
}

/// The outward-rounded right side of the second estimate.
pub fn second_estimate_threshold(lambda_sq: &Rat, t: &Rat, norm_p: &NormValue, d: u32) -> f64 {
    let t_f = rat_to_f64(t);
    let inv_one_minus_t = 1.0 / (1.0 - t_f) * GUARD;
    let variance = 1.0 - rat_to_f64(lambda_sq);
    let head = (d / 2) as f64;
    let mid = std::f64::consts::E * (4.0 / variance).powf(inv_one_minus_t);
    let log_arg = (d + 1) as f64 * 2f64.powi(d as i32) * norm_p.exact.to_f64_upper()
        * variance.sqrt();
    let tail = if log_arg > 1.0 {
        log_arg.ln() * inv_one_minus_t
    } else {
        0.0
    };
    (head + mid + tail) * GUARD
}

/// Smallest m with m! >= a b^m for the given positive a, b (and for every
/// larger m): ceil(e b + max(0, ln(a / sqrt(b)))).
pub fn stirling_min_m(a: f64, b: f64) -> Result<u64> {
    if a <= 0.0 || b <= 0.0 || a.is_nan() || b.is_nan() {
        return Err(Error::Domain(format!(
            "stirling bound needs positive a, b; got a = {a}, b = {b}"
        )));
    }
    let log_part = (a / b.sqrt()).ln().max(0.0);
    Ok(ceil_outward(std::f64::consts::E * b + log_part) as u64)
}

/// The central binomial coefficient binom(n, floor(n/2)) through the telescoped
/// product 2^n prod_{j=1}^{ceil(n/2)} (2j-1)/(2j), exact.
pub fn max_binomial(n: u32) -> Rat {
    let mut v = Rat::from_integer(BigInt::from(BigUint::one() << n));
    for j in 1..=n.div_ceil(2) {
        v *= Rat::new(BigInt::from(2 * j - 1), BigInt::from(2 * j));
    }
    v
}

/// The perturbation eps Sigma_{n=0}^{N} (x.x)^n / (n!)^t, float coefficients.
pub fn build_perturbation(d: usize, n_max: u32, t: &Rat, epsilon: &Rat) -> Polynomial<f64> {
    perturbation_sum_float(d, n_max, t).scale(&rat_to_f64(epsilon))
}

/// Exact rational perturbation for the closed-weight cases t = 0 and t = 1.
pub fn build_perturbation_exact(
    d: usize,
    n_max: u32,
    t: &Rat,
    epsilon: &Rat,
) -> Option<Polynomial<Rat>> {
    let weight_of: Box<dyn Fn(u32) -> Rat> = if t.is_zero() {
        Box::new(|_| Rat::one())
    } else if t.is_one() {
        Box::new(|n| Rat::new(BigInt::one(), BigInt::from(factorial(n))))
    } else {
        return None;
    };
    let mut out = Polynomial::zero(d);
    for n in 0..=n_max {
        let w = weight_of(n) * epsilon;
        let base = dot_square_power::<Rat>(d, n);
        for (idx, c) in base.terms() {
            out.add_to(idx.clone(), &w * c);
        }
    }
    Some(out)
}
