//! The truncated Mehler kernel and its integral operator.
//!
//! For rational lambda^2 the operator image has coefficients in the quadratic
//! field Q(s) with s = sqrt(lambda^2): even-degree monomials get rational
//! coefficients, odd-degree monomials get a rational multiple of s. [`QuadPoly`]
//! carries both parts so every identity in this module is checked by exact
//! equality, never by float tolerance. The naive expansion of the kernel
//! ([`kernel_coefficient`]) is kept as an independent oracle for the Hermite
//! route used by [`apply_operator`].

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::hermite::{hermite_expand, hermite_multi};
use crate::polycore::{
    dot_square_power, factorial, gaussian_moment, multi_indices_of_total, pow_rat, rat_to_f64,
    MultiIndex, Polynomial, RadicalSum, Rat,
};
use crate::{Error, Result};

/// Truncation order and coupling of the kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelParams {
    n: u32,
    lambda_sq: Rat,
}

impl KernelParams {
    pub fn new(n: u32, lambda_sq: Rat) -> Result<Self> {
        if lambda_sq.is_negative() || lambda_sq >= Rat::one() {
            return Err(Error::Domain(format!(
                "lambda^2 must lie in [0, 1), got {lambda_sq}"
            )));
        }
        Ok(KernelParams { n, lambda_sq })
    }

    pub fn truncation(&self) -> u32 {
        self.n
    }

    pub fn lambda_sq(&self) -> &Rat {
        &self.lambda_sq
    }

    /// 1 - lambda^2, the variance of the merged Gaussian weight.
    pub fn merged_variance(&self) -> Rat {
        Rat::one() - &self.lambda_sq
    }
}

/// Scalar a + s*b with s^2 = lambda^2 (the value of lambda itself).
#[derive(Clone, Debug, PartialEq)]
pub struct QuadScalar {
    pub rational: Rat,
    pub radical: Rat,
}

impl QuadScalar {
    pub fn zero() -> Self {
        QuadScalar {
            rational: Rat::zero(),
            radical: Rat::zero(),
        }
    }

    pub fn from_rational(r: Rat) -> Self {
        QuadScalar {
            rational: r,
            radical: Rat::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.radical.is_zero()
    }

    pub fn to_float(&self, lambda_sq: &Rat) -> f64 {
        rat_to_f64(&self.rational) + rat_to_f64(lambda_sq).sqrt() * rat_to_f64(&self.radical)
    }
}

/// lambda^e as a member of Q(s): rational for even e, s times rational for odd.
/// At lambda = 0 the s part is identically zero (0^0 = 1 applies only to the
/// rational branch).
pub fn lambda_pow(lambda_sq: &Rat, e: u32) -> QuadScalar {
    if e.is_multiple_of(2) {
        QuadScalar {
            rational: pow_rat(lambda_sq, e / 2),
            radical: Rat::zero(),
        }
    } else if lambda_sq.is_zero() {
        QuadScalar::zero()
    } else {
        QuadScalar {
            rational: Rat::zero(),
            radical: pow_rat(lambda_sq, (e - 1) / 2),
        }
    }
}

/// Polynomial over Q(s), s = sqrt(lambda^2), stored as rational + s*radical.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadPoly {
    lambda_sq: Rat,
    rational: Polynomial<Rat>,
    radical: Polynomial<Rat>,
}

impl QuadPoly {
    pub fn zero(vars: usize, lambda_sq: Rat) -> Self {
        QuadPoly {
            lambda_sq,
            rational: Polynomial::zero(vars),
            radical: Polynomial::zero(vars),
        }
    }

    pub fn from_rational_poly(p: Polynomial<Rat>, lambda_sq: Rat) -> Self {
        let vars = p.num_vars();
        QuadPoly {
            lambda_sq,
            rational: p,
            radical: Polynomial::zero(vars),
        }
    }

    pub fn from_parts(rational: Polynomial<Rat>, radical: Polynomial<Rat>, lambda_sq: Rat) -> Self {
        assert_eq!(rational.num_vars(), radical.num_vars());
        QuadPoly {
            lambda_sq,
            rational,
            radical,
        }
        .canonicalize()
    }

    /// At lambda = 0, s = 0 exactly, so the s part carries nothing.
    fn canonicalize(mut self) -> Self {
        if self.lambda_sq.is_zero() && !self.radical.is_zero() {
            self.radical = Polynomial::zero(self.rational.num_vars());
        }
        self
    }

    pub fn num_vars(&self) -> usize {
        self.rational.num_vars()
    }

    pub fn lambda_sq(&self) -> &Rat {
        &self.lambda_sq
    }

    pub fn rational_part(&self) -> &Polynomial<Rat> {
        &self.rational
    }

    pub fn radical_part(&self) -> &Polynomial<Rat> {
        &self.radical
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.radical.is_zero()
    }

    pub fn degree(&self) -> i64 {
        self.rational.degree().max(self.radical.degree())
    }

    pub fn coefficient(&self, idx: &MultiIndex) -> QuadScalar {
        QuadScalar {
            rational: self.rational.coefficient(idx),
            radical: self.radical.coefficient(idx),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.lambda_sq, other.lambda_sq);
        QuadPoly {
            lambda_sq: self.lambda_sq.clone(),
            rational: self.rational.add(&other.rational),
            radical: self.radical.add(&other.radical),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.lambda_sq, other.lambda_sq);
        QuadPoly {
            lambda_sq: self.lambda_sq.clone(),
            rational: self.rational.sub(&other.rational),
            radical: self.radical.sub(&other.radical),
        }
    }

    /// (a + sb)(c + sd) = (ac + lambda^2 bd) + s(ad + bc).
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.lambda_sq, other.lambda_sq);
        let ac = self.rational.mul(&other.rational);
        let bd = self.radical.mul(&other.radical);
        let ad = self.rational.mul(&other.radical);
        let bc = self.radical.mul(&other.rational);
        QuadPoly {
            lambda_sq: self.lambda_sq.clone(),
            rational: ac.add(&bd.scale(&self.lambda_sq)),
            radical: ad.add(&bc),
        }
        .canonicalize()
    }

    pub fn scale(&self, c: &Rat) -> Self {
        QuadPoly {
            lambda_sq: self.lambda_sq.clone(),
            rational: self.rational.scale(c),
            radical: self.radical.scale(c),
        }
    }

    pub fn scale_scalar(&self, c: &QuadScalar) -> Self {
        let rational = self
            .rational
            .scale(&c.rational)
            .add(&self.radical.scale(&(&c.radical * &self.lambda_sq)));
        let radical = self
            .rational
            .scale(&c.radical)
            .add(&self.radical.scale(&c.rational));
        QuadPoly {
            lambda_sq: self.lambda_sq.clone(),
            rational,
            radical,
        }
        .canonicalize()
    }

    /// Add c * x^idx, where c may carry an s part.
    pub fn add_term(&mut self, idx: MultiIndex, c: QuadScalar) {
        if !c.rational.is_zero() {
            self.rational.add_to(idx.clone(), c.rational);
        }
        if !c.radical.is_zero() && !self.lambda_sq.is_zero() {
            self.radical.add_to(idx, c.radical);
        }
    }

    /// Drop every monomial of total degree above `max_deg`.
    pub fn truncate_degree(&self, max_deg: u32) -> Self {
        let keep = |p: &Polynomial<Rat>| {
            Polynomial::from_terms(
                p.num_vars(),
                p.terms()
                    .filter(|(idx, _)| idx.total() <= max_deg)
                    .map(|(idx, c)| (idx.clone(), c.clone())),
            )
        };
        QuadPoly {
            lambda_sq: self.lambda_sq.clone(),
            rational: keep(&self.rational),
            radical: keep(&self.radical),
        }
    }

    /// Merge the two parts into one float polynomial, substituting
    /// s = sqrt(lambda^2).
    pub fn to_float(&self) -> Polynomial<f64> {
        let s = rat_to_f64(&self.lambda_sq).sqrt();
        let mut out = self.rational.to_float();
        for (idx, c) in self.radical.terms() {
            out.add_to(idx.clone(), s * rat_to_f64(c));
        }
        out
    }
}

/// exp_N(z) = sum_{n=0}^{2N} z^n / n!, univariate, degree 2N.
pub fn exp_truncated(n: u32) -> Polynomial<Rat> {
    let mut p = Polynomial::zero(1);
    for k in 0..=2 * n {
        p.add_to(
            MultiIndex::new(vec![k]),
            Rat::new(BigInt::one(), BigInt::from(factorial(k))),
        );
    }
    p
}

/// exp_N applied to a polynomial argument: sum_{n=0}^{2N} arg^n / n!.
fn exp_truncated_of(arg: &QuadPoly, n: u32) -> QuadPoly {
    let mut acc = QuadPoly::from_rational_poly(
        Polynomial::constant(arg.num_vars(), Rat::one()),
        arg.lambda_sq().clone(),
    );
    let mut power = acc.clone();
    for k in 1..=2 * n {
        power = power.mul(arg);
        acc = acc.add(&power.scale(&Rat::new(BigInt::one(), BigInt::from(factorial(k)))));
    }
    acc
}

/// One x-coefficient of the kernel: [K_{N,lambda}]_alpha as a polynomial in xi
/// against the merged Gaussian weight exp(-(xi . xi)/(1 - lambda^2)).
///
/// The polynomial stored here omits the (1 - lambda^2)^{-d/2} prefactor of the
/// kernel; it cancels exactly against the normalization of the merged weight,
/// which is why [`KernelSlice::inner_product`] stays in Q(s). The float view
/// [`KernelSlice::xi_poly_float`] reinstates the prefactor.
#[derive(Clone, Debug)]
pub struct KernelSlice {
    xi_poly: QuadPoly,
}

impl KernelSlice {
    pub fn xi_poly(&self) -> &QuadPoly {
        &self.xi_poly
    }

    pub fn is_zero(&self) -> bool {
        self.xi_poly.is_zero()
    }

    /// The xi-polynomial factor including the (1 - lambda^2)^{-d/2} prefactor.
    pub fn xi_poly_float(&self) -> Polynomial<f64> {
        let d = self.xi_poly.num_vars();
        let variance = 1.0 - rat_to_f64(self.xi_poly.lambda_sq());
        let scale = variance.powf(-(d as f64) / 2.0);
        self.xi_poly.to_float().scale(&scale)
    }

    /// <[K_{N,lambda}]_alpha, p>_infty, exact in Q(s).
    pub fn inner_product(&self, p: &Polynomial<Rat>) -> Result<QuadScalar> {
        let d = self.xi_poly.num_vars();
        if p.num_vars() != d {
            return Err(Error::DimensionMismatch(format!(
                "kernel slice in {d} variables, polynomial in {}",
                p.num_vars()
            )));
        }
        let variance = Rat::one() - self.xi_poly.lambda_sq();
        let mut out = QuadScalar::zero();
        for (part, acc) in [
            (&self.xi_poly.rational, &mut out.rational),
            (&self.xi_poly.radical, &mut out.radical),
        ] {
            for (gamma, kc) in part.terms() {
                for (beta, pc) in p.terms() {
                    let mut m = Rat::one();
                    for (&g, &b) in gamma.exps().iter().zip(beta.exps()) {
                        let axis = gaussian_moment(g + b, &variance);
                        if axis.is_zero() {
                            m = Rat::zero();
                            break;
                        }
                        m *= axis;
                    }
                    if !m.is_zero() {
                        *acc += kc * pc * m;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// The symbolic expansion exp_N(arg) in 2d variables (x at 0..d, xi at d..2d),
/// from which every kernel slice can be read off. Exponential cost in N and d;
/// this is the test oracle, not the production route (see [`apply_operator`]).
pub fn kernel_expansion(params: &KernelParams, d: usize) -> QuadPoly {
    let lam_sq = params.lambda_sq().clone();
    // Argument of exp_N in 2d variables (x at 0..d, xi at d..2d):
    //   -(lambda^2 (x.x) - 2 lambda (x.xi)) / (1 - lambda^2)
    // = rational: -lambda^2/(1-lambda^2) (x.x),  s part: 2/(1-lambda^2) (x.xi).
    let variance = params.merged_variance();
    let mut xx = Polynomial::<Rat>::zero(2 * d);
    for j in 0..d {
        let mut exps = vec![0u32; 2 * d];
        exps[j] = 2;
        xx.add_to(MultiIndex::new(exps), Rat::one());
    }
    let mut x_dot_xi = Polynomial::zero(2 * d);
    for j in 0..d {
        let mut exps = vec![0u32; 2 * d];
        exps[j] = 1;
        exps[d + j] = 1;
        x_dot_xi.add_to(MultiIndex::new(exps), Rat::one());
    }
    let rational = xx.scale(&(-&lam_sq / &variance));
    let radical = x_dot_xi.scale(&(Rat::from_integer(2.into()) / &variance));
    let arg = QuadPoly::from_parts(rational, radical, lam_sq);
    exp_truncated_of(&arg, params.truncation())
}

/// Read [K_{N,lambda}]_alpha out of a shared [`kernel_expansion`].
pub fn kernel_slice_of(expanded: &QuadPoly, alpha: &MultiIndex) -> KernelSlice {
    let d = alpha.dim();
    assert_eq!(expanded.num_vars(), 2 * d, "expansion dimension mismatch");
    let lam_sq = expanded.lambda_sq().clone();
    // Collect the terms whose x-exponents match alpha, keeping the xi part.
    let mut xi_poly = QuadPoly::zero(d, lam_sq);
    for (part, is_radical) in [(&expanded.rational, false), (&expanded.radical, true)] {
        for (idx, c) in part.terms() {
            if idx.exps()[..d] == *alpha.exps() {
                let xi_idx = MultiIndex::new(idx.exps()[d..].to_vec());
                let scalar = if is_radical {
                    QuadScalar {
                        rational: Rat::zero(),
                        radical: c.clone(),
                    }
                } else {
                    QuadScalar::from_rational(c.clone())
                };
                xi_poly.add_term(xi_idx, scalar);
            }
        }
    }
    KernelSlice { xi_poly }
}

/// Expand the kernel and read off the coefficient of x^alpha. Convenience
/// wrapper over [`kernel_expansion`]; prefer the shared expansion when many
/// slices of the same kernel are needed.
pub fn kernel_coefficient(params: &KernelParams, alpha: &MultiIndex) -> KernelSlice {
    if alpha.total() > 4 * params.truncation() {
        return KernelSlice {
            xi_poly: QuadPoly::zero(alpha.dim(), params.lambda_sq().clone()),
        };
    }
    kernel_slice_of(&kernel_expansion(params, alpha.dim()), alpha)
}

/// C_lambda(alpha, beta): the square-rooted prefactor times the merged Gaussian
/// moment of xi^{alpha+beta}. Exact as a single-term radical sum; zero unless
/// alpha + beta is even in every coordinate.
pub fn c_integral_exact(lambda_sq: &Rat, alpha: &MultiIndex, beta: &MultiIndex) -> RadicalSum {
    assert_eq!(alpha.dim(), beta.dim(), "dimension mismatch");
    let variance = Rat::one() - lambda_sq;
    let mut moment = Rat::one();
    for (&a, &b) in alpha.exps().iter().zip(beta.exps()) {
        let axis = gaussian_moment(a + b, &variance);
        if axis.is_zero() {
            return RadicalSum::zero();
        }
        moment *= axis;
    }
    // prefactor^2 = 2^{|alpha|} floor(alpha/2)! ceil(alpha/2)!
    //             / ((1-lambda^2)^{|alpha|} (alpha!)^2)
    let fac_sq = Rat::from_integer(BigInt::from(alpha.factorial())).pow(2);
    let num = Rat::from_integer(BigInt::from(
        (num_bigint::BigUint::one() << alpha.total())
            * alpha.floor_half().factorial()
            * alpha.ceil_half().factorial(),
    ));
    let pref_sq = num / (pow_rat(&variance, alpha.total()) * fac_sq);
    // sqrt(a/b) = sqrt(a b)/b with a, b positive integers.
    let a = pref_sq.numer().magnitude().clone();
    let b = pref_sq.denom().magnitude().clone();
    let mut out = RadicalSum::zero();
    out.push(
        moment / Rat::from_integer(BigInt::from(b.clone())),
        a * b,
    );
    out
}

/// Float value of C_lambda(alpha, beta).
pub fn c_integral(lambda_sq: &Rat, alpha: &MultiIndex, beta: &MultiIndex) -> f64 {
    c_integral_exact(lambda_sq, alpha, beta).to_f64_upper()
}

/// Image of p under the operator, split into the part of degree <= 2N and the
/// tail supported on degrees in (2N, 4N].
#[derive(Clone, Debug)]
pub struct OperatorImage {
    pub total: QuadPoly,
    pub low_part: QuadPoly,
    pub tail: QuadPoly,
}

/// The degree-(2N,4N] tail of the operator image, via the exact quadruple sum.
pub fn tail_polynomial(params: &KernelParams, p: &Polynomial<Rat>) -> QuadPoly {
    let d = p.num_vars();
    let n_trunc = params.truncation();
    let lam_sq = params.lambda_sq().clone();
    let mut tail = QuadPoly::zero(d, lam_sq.clone());
    if lam_sq.is_zero() || p.is_zero() {
        return tail;
    }
    let variance = params.merged_variance();
    for n in n_trunc + 1..=2 * n_trunc {
        for k in 0..=2 * n - 2 * n_trunc - 1 {
            let base = dot_square_power::<Rat>(d, n - k);
            for alpha in multi_indices_of_total(d, k) {
                // Scalar factor common to all beta:
                //   (-1)^{n-k} lambda^{2(n-k)} 2^k lambda^k
                //   / ((1 - lambda^2)^n (n-k)! alpha!)
                let mut inner = Rat::zero();
                for (beta, pc) in p.terms() {
                    let mut m = Rat::one();
                    for (&a, &b) in alpha.exps().iter().zip(beta.exps()) {
                        let axis = gaussian_moment(a + b, &variance);
                        if axis.is_zero() {
                            m = Rat::zero();
                            break;
                        }
                        m *= axis;
                    }
                    if !m.is_zero() {
                        inner += pc * m;
                    }
                }
                if inner.is_zero() {
                    continue;
                }
                let sign = if (n - k) % 2 == 0 { Rat::one() } else { -Rat::one() };
                let num = sign
                    * pow_rat(&lam_sq, n - k)
                    * Rat::from_integer(BigInt::from(num_bigint::BigUint::one() << k));
                let den = pow_rat(&variance, n)
                    * Rat::from_integer(BigInt::from(factorial(n - k)))
                    * Rat::from_integer(BigInt::from(alpha.factorial()));
                let scalar = lambda_pow(&lam_sq, k);
                let coeff = QuadScalar {
                    rational: &scalar.rational * &num / &den * &inner,
                    radical: &scalar.radical * &num / &den * &inner,
                };
                for (idx, c) in base.terms() {
                    tail.add_term(
                        idx.add(&alpha),
                        QuadScalar {
                            rational: &coeff.rational * c,
                            radical: &coeff.radical * c,
                        },
                    );
                }
            }
        }
    }
    tail
}

/// Apply the operator: low part through the finite Hermite sum, tail through
/// [`tail_polynomial`].
pub fn apply_operator(params: &KernelParams, p: &Polynomial<Rat>) -> Result<OperatorImage> {
    let d = p.num_vars();
    let lam_sq = params.lambda_sq().clone();
    let expansion = hermite_expand(p);
    let mut low = QuadPoly::zero(d, lam_sq.clone());
    for (alpha, c) in expansion.coeffs() {
        let scalar = lambda_pow(&lam_sq, alpha.total());
        let h = hermite_multi(alpha);
        low = low.add(&QuadPoly::from_rational_poly(h, lam_sq.clone()).scale_scalar(&QuadScalar {
            rational: &scalar.rational * c,
            radical: &scalar.radical * c,
        }));
    }
    let low = low.truncate_degree(2 * params.truncation());
    let tail = tail_polynomial(params, p);
    let total = low.add(&tail);
    Ok(OperatorImage {
        total,
        low_part: low,
        tail,
    })
}

/// The operator image written as p + correction + tail, where the correction
/// collects the (lambda^{|alpha|} - 1)-weighted Hermite components of p.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub identity_poly: Polynomial<Rat>,
    pub correction: QuadPoly,
    pub tail: QuadPoly,
    pub m: u32,
}

impl Decomposition {
    /// p + correction + tail, for comparison with the operator image.
    pub fn total(&self) -> QuadPoly {
        let base = QuadPoly::from_rational_poly(
            self.identity_poly.clone(),
            self.correction.lambda_sq().clone(),
        );
        base.add(&self.correction).add(&self.tail)
    }
}

/// Decompose the image of p. `m_override` raises the half-degree bound M above
/// its default ceil(deg p / 2); the truncation order must satisfy N >= M.
pub fn decompose(
    params: &KernelParams,
    p: &Polynomial<Rat>,
    m_override: Option<u32>,
) -> Result<Decomposition> {
    let deg = p.degree().max(0) as u32;
    let m_default = deg.div_ceil(2);
    let m = m_override.unwrap_or(m_default);
    if m < m_default {
        return Err(Error::Domain(format!(
            "M = {m} is below ceil(deg p / 2) = {m_default}"
        )));
    }
    if params.truncation() < m {
        return Err(Error::Domain(format!(
            "truncation order N = {} is below M = {m}",
            params.truncation()
        )));
    }
    let d = p.num_vars();
    let lam_sq = params.lambda_sq().clone();
    let expansion = hermite_expand(p);
    let mut correction = QuadPoly::zero(d, lam_sq.clone());
    for (alpha, c) in expansion.coeffs() {
        if alpha.total() == 0 {
            continue; // lambda^0 - 1 = 0
        }
        let scalar = lambda_pow(&lam_sq, alpha.total());
        let weight = QuadScalar {
            rational: (&scalar.rational - Rat::one()) * c,
            radical: &scalar.radical * c,
        };
        let h = hermite_multi(alpha);
        correction =
            correction.add(&QuadPoly::from_rational_poly(h, lam_sq.clone()).scale_scalar(&weight));
    }
    Ok(Decomposition {
        identity_poly: p.clone(),
        correction,
        tail: tail_polynomial(params, p),
        m,
    })
}
