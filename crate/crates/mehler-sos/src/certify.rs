//! Constructive SOS certificates for the operator image.
//!
//! The image of a nonnegative p is a convex combination of evaluations of
//! exp_N at quadratic arguments. We realize that integral with tensor
//! Gauss-Hermite quadrature and split exp_N into two squares, giving an
//! explicit weighted square list that re-expands to the operator image.
//!
//! The quadrature runs over scaled nodes xi = sqrt(1 - lambda^2) * eta, where
//! eta are the nodes for the weight e^{-eta^2}/sqrt(pi). After that change of
//! variables the integrand is polynomial times exactly that weight, so a rule
//! of sufficient order reproduces the operator image to rounding error, and
//! the node weights are (product Gauss-Hermite weights) * p(xi) -- no residual
//! Gaussian factor is needed.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::mehler::{apply_operator, exp_truncated, KernelParams};
use crate::polycore::{rat_to_f64, MultiIndex, Polynomial, Rat};
use crate::{Error, Result};

/// Gauss-Hermite rule for the weight e^{-xi^2}/sqrt(pi): weights sum to 1 and
/// monomials up to `exactness_degree` integrate to the exact Gaussian moment.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub exactness_degree: u32,
}

/// Evaluate (H_n(x), H_{n-1}(x)) by the recursion, in floats.
fn hermite_eval(n: u32, x: f64) -> (f64, f64) {
    let mut prev = 0.0f64; // H_{-1} placeholder
    let mut cur = 1.0f64; // H_0
    for k in 0..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Nodes as roots of H_n via the Jacobi matrix, polished by Newton; weights
/// from the closed form 2^{n-1} n! / (n^2 H_{n-1}(x_i)^2).
pub fn gauss_hermite(n: u32) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::Domain("quadrature order must be at least 1".into()));
    }
    let dim = n as usize;
    let jacobi = DMatrix::<f64>::from_fn(dim, dim, |i, j| {
        if i + 1 == j {
            ((j as f64) / 2.0).sqrt()
        } else if j + 1 == i {
            ((i as f64) / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eigen = nalgebra::SymmetricEigen::new(jacobi);
    let mut nodes: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // Newton polish: x <- x - H_n(x)/H_n'(x) with H_n' = 2n H_{n-1}.
    let mut weights = Vec::with_capacity(dim);
    for x in nodes.iter_mut() {
        let mut converged = false;
        for _ in 0..60 {
            let (h, h_prev) = hermite_eval(n, *x);
            let dh = 2.0 * n as f64 * h_prev;
            if dh == 0.0 {
                break;
            }
            let step = h / dh;
            *x -= step;
            if h.abs() < 1e-13 * dh.abs() {
                converged = true;
                break;
            }
        }
        let (h, h_prev) = hermite_eval(n, *x);
        let dh = 2.0 * n as f64 * h_prev;
        if !converged && h.abs() >= 1e-13 * dh.abs() {
            return Err(Error::Precision(format!(
                "quadrature node failed to converge at order {n}"
            )));
        }
        let mut num = 1.0f64;
        for _ in 0..n - 1 {
            num *= 2.0;
        }
        for k in 1..=n {
            num *= k as f64;
        }
        weights.push(num / ((n as f64).powi(2) * h_prev * h_prev));
    }
    // Enforce the rule's symmetry exactly: H_n is even or odd, so nodes come
    // in +/- pairs with equal weights. This zeroes all odd moments.
    let dim = nodes.len();
    for i in 0..dim / 2 {
        let j = dim - 1 - i;
        let mag = (nodes[j] - nodes[i]) / 2.0;
        nodes[i] = -mag;
        nodes[j] = mag;
        let w = (weights[i] + weights[j]) / 2.0;
        weights[i] = w;
        weights[j] = w;
    }
    if dim % 2 == 1 {
        nodes[dim / 2] = 0.0;
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        exactness_degree: 2 * n - 1,
    })
}

/// Two real polynomials with sigma1^2 + sigma2^2 = exp_N, obtained by pairing
/// the complex-conjugate roots of exp_N (which has no real roots).
pub fn split_exp_n(n: u32) -> Result<(Polynomial<f64>, Polynomial<f64>)> {
    if n == 0 {
        return Ok((Polynomial::constant(1, 1.0), Polynomial::zero(1)));
    }
    let deg = (2 * n) as usize;
    let coeffs: Vec<f64> = exp_truncated(n)
        .terms()
        .map(|(_, c)| rat_to_f64(c))
        .collect(); // graded order = ascending degree for univariate
    let lc = coeffs[deg];
    // Companion matrix of the monic polynomial.
    let companion = DMatrix::<f64>::from_fn(deg, deg, |i, j| {
        if j == deg - 1 {
            -coeffs[i] / lc
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let mut roots: Vec<nalgebra::Complex<f64>> =
        companion.complex_eigenvalues().iter().copied().collect();

    // Newton polish on exp_N directly (Horner in complex arithmetic).
    let horner = |z: nalgebra::Complex<f64>| {
        let mut v = nalgebra::Complex::new(0.0, 0.0);
        let mut dv = nalgebra::Complex::new(0.0, 0.0);
        for &c in coeffs.iter().rev() {
            dv = dv * z + v;
            v = v * z + c;
        }
        (v, dv)
    };
    for r in roots.iter_mut() {
        for _ in 0..50 {
            let (v, dv) = horner(*r);
            if dv.norm() == 0.0 {
                break;
            }
            let step = v / dv;
            *r -= step;
            if step.norm() < 1e-15 * r.norm().max(1.0) {
                break;
            }
        }
        if r.im.abs() < 1e-8 * r.norm().max(1.0) {
            return Err(Error::Precision(format!(
                "found a (numerically) real root {} of the truncated exponential; \
                 the split is only defined for root-free real axes",
                r.re
            )));
        }
    }

    // W(z) = prod over upper-half-plane roots of (z - r); exp_N = lc |W|^2 on
    // the real axis, so the squares are sqrt(lc) Re W and sqrt(lc) Im W.
    let upper: Vec<_> = roots.iter().filter(|r| r.im > 0.0).collect();
    if upper.len() != deg / 2 {
        return Err(Error::Precision(format!(
            "conjugate pairing failed: {} of {} roots in the upper half-plane",
            upper.len(),
            deg
        )));
    }
    let mut re = Polynomial::<f64>::constant(1, 1.0);
    let mut im = Polynomial::<f64>::zero(1);
    let z = Polynomial::<f64>::variable(1, 0);
    for r in upper {
        // (re + i im) * (z - r)
        let new_re = re
            .mul(&z)
            .sub(&re.scale(&r.re))
            .add(&im.scale(&r.im));
        let new_im = im
            .mul(&z)
            .sub(&im.scale(&r.re))
            .sub(&re.scale(&r.im));
        re = new_re;
        im = new_im;
    }
    let s = lc.sqrt();
    Ok((re.scale(&s), im.scale(&s)))
}

/// One weighted square-list entry: the squares are sigma_{1,2} composed with
/// the node's quadratic argument, so (xi, lambda^2, N) suffice to re-derive
/// them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertTerm {
    pub weight: f64,
    pub xi: Vec<f64>,
    pub squares: Vec<FloatPolyJson>,
}

/// Serialization mirror of a float polynomial.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FloatPolyJson {
    pub vars: usize,
    pub terms: Vec<FloatTermJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FloatTermJson {
    pub exp: Vec<u32>,
    pub coef: f64,
}

impl FloatPolyJson {
    pub fn from_poly(p: &Polynomial<f64>) -> Self {
        FloatPolyJson {
            vars: p.num_vars(),
            terms: p
                .terms()
                .map(|(idx, c)| FloatTermJson {
                    exp: idx.exps().to_vec(),
                    coef: *c,
                })
                .collect(),
        }
    }

    pub fn to_poly(&self) -> Polynomial<f64> {
        Polynomial::from_terms(
            self.vars,
            self.terms
                .iter()
                .map(|t| (MultiIndex::new(t.exp.clone()), t.coef)),
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertParams {
    pub n: u32,
    pub lambda_sq: String,
}

/// A weighted sum-of-squares realization of the operator image.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub target: FloatPolyJson,
    pub params: CertParams,
    pub terms: Vec<CertTerm>,
    pub residual_norm: f64,
}

impl Certificate {
    /// Sigma_i w_i Sigma_s squares_{i,s}^2 in floats.
    pub fn re_expand(&self) -> Polynomial<f64> {
        let vars = self.target.vars;
        let mut acc = Polynomial::<f64>::zero(vars);
        for term in &self.terms {
            for sq in &term.squares {
                let s = sq.to_poly();
                acc = acc.add(&s.mul(&s).scale(&term.weight));
            }
        }
        acc
    }
}

/// Substitute a multivariate argument into a univariate polynomial.
fn compose(outer: &Polynomial<f64>, arg: &Polynomial<f64>) -> Polynomial<f64> {
    // Horner over the dense coefficient list of `outer`.
    let deg = outer.degree().max(0) as u32;
    let mut acc = Polynomial::<f64>::zero(arg.num_vars());
    for e in (0..=deg).rev() {
        acc = acc.mul(arg);
        let c = outer.coefficient(&MultiIndex::new(vec![e]));
        if c != 0.0 {
            acc.add_to(MultiIndex::zeros(arg.num_vars()), c);
        }
    }
    acc
}

/// Build the certificate for the image of p. Refuses when p is negative at a
/// quadrature node unless `force` clamps that weight to zero (which makes the
/// output unsound as a certificate for I(p); the residual will say so).
pub fn certify_operator_image(
    params: &KernelParams,
    p: &Polynomial<Rat>,
    quad_order: Option<u32>,
    force: bool,
) -> Result<Certificate> {
    let d = p.num_vars();
    let n_trunc = params.truncation();
    let deg_xi = p.degree().max(0) as u32 + 2 * n_trunc;
    let min_order = (deg_xi + 1).div_ceil(2).max(1);
    let order = quad_order.unwrap_or(min_order);
    if order < min_order {
        return Err(Error::Domain(format!(
            "quadrature order {order} cannot integrate xi-degree {deg_xi} exactly; \
             need at least {min_order}"
        )));
    }
    let rule = gauss_hermite(order)?;
    let (sigma1, sigma2) = split_exp_n(n_trunc)?;

    let lam_sq = rat_to_f64(params.lambda_sq());
    let lam = lam_sq.sqrt();
    let variance = 1.0 - lam_sq;
    let scale = variance.sqrt();
    let p_float = p.to_float();

    let mut terms = Vec::new();
    let mut stack = vec![0usize; d];
    loop {
        // Tensor node indexed by `stack`.
        let xi: Vec<f64> = stack.iter().map(|&i| scale * rule.nodes[i]).collect();
        let mut w: f64 = stack.iter().map(|&i| rule.weights[i]).product();
        let p_val = p_float.evaluate(&xi);
        if p_val < 0.0 {
            if !force {
                return Err(Error::HypothesisViolation(format!(
                    "input is negative ({p_val:.6e}) at quadrature node {xi:?}; \
                     it cannot be certified nonnegative"
                )));
            }
            w = 0.0;
        } else {
            w *= p_val;
        }

        // q(x) = (2 lambda (x . xi) - lambda^2 (x . x)) / (1 - lambda^2).
        let mut q = Polynomial::<f64>::zero(d);
        for j in 0..d {
            let mut lin = vec![0u32; d];
            lin[j] = 1;
            q.add_to(MultiIndex::new(lin), 2.0 * lam * xi[j] / variance);
            let mut sq = vec![0u32; d];
            sq[j] = 2;
            q.add_to(MultiIndex::new(sq), -lam_sq / variance);
        }
        let squares = vec![
            FloatPolyJson::from_poly(&compose(&sigma1, &q)),
            FloatPolyJson::from_poly(&compose(&sigma2, &q)),
        ];
        terms.push(CertTerm {
            weight: w,
            xi,
            squares,
        });

        // Advance the tensor index.
        let mut pos = 0;
        loop {
            if pos == d {
                break;
            }
            stack[pos] += 1;
            if stack[pos] < rule.nodes.len() {
                break;
            }
            stack[pos] = 0;
            pos += 1;
        }
        if pos == d {
            break;
        }
    }

    let target = apply_operator(params, p)?.total.to_float();
    let mut cert = Certificate {
        target: FloatPolyJson::from_poly(&target),
        params: CertParams {
            n: n_trunc,
            lambda_sq: params.lambda_sq().to_string(),
        },
        terms,
        residual_norm: 0.0,
    };
    let residual = relative_residual(&cert.re_expand(), &target);
    cert.residual_norm = residual;
    if residual > 1e-8 && !force {
        return Err(Error::Precision(format!(
            "certificate re-expansion residual {residual:.3e} exceeds 1e-8"
        )));
    }
    Ok(cert)
}

/// Max coefficient difference, relative to the largest target coefficient.
pub fn relative_residual(got: &Polynomial<f64>, want: &Polynomial<f64>) -> f64 {
    let scale = want.max_abs_coeff().max(1.0);
    let diff = got.sub(want);
    diff.max_abs_coeff() / scale
}

/// Re-expansion report of a certificate.
#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub max_coeff_err: f64,
    pub min_weight: f64,
    pub ok: bool,
}

pub fn verify_certificate(cert: &Certificate) -> CertificateReport {
    let target = cert.target.to_poly();
    let max_coeff_err = relative_residual(&cert.re_expand(), &target);
    let min_weight = cert
        .terms
        .iter()
        .map(|t| t.weight)
        .fold(f64::INFINITY, f64::min);
    let min_weight = if min_weight.is_finite() { min_weight } else { 0.0 };
    CertificateReport {
        ok: max_coeff_err <= cert.residual_norm.max(1e-8) && min_weight >= 0.0,
        max_coeff_err,
        min_weight,
    }
}
