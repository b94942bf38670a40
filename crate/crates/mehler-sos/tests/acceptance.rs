//! Acceptance suite: one test per criterion, each printing a single
//! `criterion <name>: pass` / `FAIL` line.

use std::panic::catch_unwind;
use std::process::Command;

use mehler_sos::bounds::{
    compute_mu, first_estimate_admissible, first_estimate_pair, lambda_star, max_binomial, n_expl,
    second_estimate_condition, second_estimate_threshold, stirling_min_m,
};
use mehler_sos::certify::{certify_operator_image, relative_residual};
use mehler_sos::hermite::{hermite_inner, hermite_multi, hermite_weight};
use mehler_sos::mehler::{
    apply_operator, decompose, exp_truncated, kernel_expansion, kernel_slice_of, KernelParams,
};
use mehler_sos::polycore::{
    binomial, coefficient_norm, factorial, inner_product_infty, motzkin, multi_indices_up_to,
    rat_to_f64, MultiIndex, Nat, Polynomial, Rat,
};
use mehler_sos::verify::{gram_from_squares, psd_check, sample_nonneg, synthesis_residual, Sampler};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

/// Run `body`, print the pass/fail line, and re-raise any panic so the test
/// still fails under the harness.
fn criterion(name: &str, body: impl FnOnce() + std::panic::UnwindSafe) {
    let result = catch_unwind(body);
    match &result {
        Ok(()) => println!("criterion {name}: pass"),
        Err(_) => println!("criterion {name}: FAIL"),
    }
    if let Err(e) = result {
        std::panic::resume_unwind(e);
    }
}

/// Deterministic dense degree-4 polynomial with small rational coefficients.
fn random_deg4(d: usize, seed: u64) -> Polynomial<Rat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Polynomial::zero(d);
    for idx in multi_indices_up_to(d, 4) {
        let num: i64 = rng.gen_range(-9..=9);
        let den: i64 = rng.gen_range(1..=4);
        if num != 0 {
            p.insert(idx, rat(num, den));
        }
    }
    if p.is_zero() {
        p.insert(MultiIndex::zeros(d), Rat::one());
    }
    p
}

/// The test grid shared by the cross-validation and decomposition criteria.
fn grid_polys(d: usize) -> Vec<Polynomial<Rat>> {
    let one = Polynomial::constant(d, Rat::one());
    let mut z_sq = Polynomial::zero(d);
    let mut exps = vec![0u32; d];
    exps[0] = 2;
    z_sq.insert(MultiIndex::new(exps), Rat::one());
    let mut polys = vec![one, z_sq, random_deg4(d, 7)];
    if d == 2 {
        polys.push(motzkin());
    }
    polys
}

#[test]
fn criterion_1_hermite_orthogonality() {
    criterion("hermite-orthogonality", || {
        for n in 0u32..=12 {
            let h_n = hermite_multi(&MultiIndex::new(vec![n]));
            for m in 0u32..=12 {
                let got = hermite_inner(&MultiIndex::new(vec![m]), &h_n);
                let want = if n == m {
                    hermite_weight(&MultiIndex::new(vec![n]))
                } else {
                    Rat::zero()
                };
                assert_eq!(got, want, "d=1, n={n}, m={m}");
            }
        }
        let indices = multi_indices_up_to(2, 6);
        for alpha in &indices {
            let h_a = hermite_multi(alpha);
            for beta in &indices {
                let got = hermite_inner(beta, &h_a);
                let want = if alpha == beta {
                    hermite_weight(alpha)
                } else {
                    Rat::zero()
                };
                assert_eq!(got, want, "d=2, alpha={alpha:?}, beta={beta:?}");
            }
        }
    });
}

#[test]
fn criterion_2_low_part_cross_validation() {
    criterion("low-part-cross-validation", || {
        for d in [1usize, 2] {
            let polys = grid_polys(d);
            for n in [1u32, 2, 3] {
                for lam_sq in [rat(1, 4), rat(1, 2)] {
                    let params = KernelParams::new(n, lam_sq.clone()).unwrap();
                    let expansion = kernel_expansion(&params, d);
                    for p in &polys {
                        let image = apply_operator(&params, p).unwrap();
                        for gamma in multi_indices_up_to(d, 2 * n) {
                            let slice = kernel_slice_of(&expansion, &gamma);
                            let want = slice.inner_product(p).unwrap();
                            let got = image.low_part.coefficient(&gamma);
                            assert_eq!(
                                got, want,
                                "d={d}, N={n}, lambda^2={lam_sq}, gamma={gamma:?}"
                            );
                        }
                    }
                }
            }
        }
    });
}

#[test]
fn criterion_3_decomposition_identity() {
    criterion("decomposition-identity", || {
        for d in [1usize, 2] {
            let polys = grid_polys(d);
            for n in [1u32, 2, 3] {
                for lam_sq in [rat(1, 4), rat(1, 2)] {
                    let params = KernelParams::new(n, lam_sq.clone()).unwrap();
                    for p in &polys {
                        // The decomposition needs N >= ceil(deg p / 2).
                        if (p.degree().max(0) as u32).div_ceil(2) > n {
                            continue;
                        }
                        let image = apply_operator(&params, p).unwrap();
                        let dec = decompose(&params, p, None).unwrap();
                        assert_eq!(dec.identity_poly, *p);
                        assert_eq!(
                            dec.total(),
                            image.total,
                            "d={d}, N={n}, lambda^2={lam_sq}"
                        );
                    }
                }
            }
        }
        // Zero-coupling collapse: the image is the plain Gaussian mean of p
        // and the tail vanishes identically.
        for d in [1usize, 2] {
            for p in grid_polys(d) {
                let params = KernelParams::new(3, Rat::zero()).unwrap();
                let image = apply_operator(&params, &p).unwrap();
                assert!(image.tail.is_zero(), "tail at lambda = 0");
                let mean = inner_product_infty(&Polynomial::constant(d, Rat::one()), &p).unwrap();
                let expected = Polynomial::constant(d, mean);
                assert!(image.total.radical_part().is_zero());
                assert_eq!(*image.total.rational_part(), expected);
            }
        }
    });
}

#[test]
fn criterion_4_constructive_certificate() {
    criterion("constructive-certificate", || {
        let p = motzkin();
        let params = KernelParams::new(2, rat(1, 2)).unwrap();
        let cert = certify_operator_image(&params, &p, None, false).unwrap();
        assert!(!cert.terms.is_empty());
        for term in &cert.terms {
            assert!(term.weight >= 0.0, "negative weight {}", term.weight);
        }
        let exact = apply_operator(&params, &p).unwrap().total.to_float();
        let rel = relative_residual(&cert.re_expand(), &exact);
        assert!(rel <= 1e-8, "relative residual {rel}");
        let squares: Vec<(f64, Polynomial<f64>)> = cert
            .terms
            .iter()
            .flat_map(|t| t.squares.iter().map(|s| (t.weight, s.to_poly())))
            .collect();
        let gram = gram_from_squares(&squares).unwrap();
        assert!(psd_check(&gram.gram, 1e-9).unwrap(), "Gram matrix not PSD");
    });
}

#[test]
fn criterion_5_exp_split() {
    criterion("exp-split", || {
        for n in 1u32..=8 {
            let (s1, s2) = mehler_sos::certify::split_exp_n(n).unwrap();
            let sum = s1.mul(&s1).try_add(&s2.mul(&s2)).unwrap();
            let diff = sum.sub(&exp_truncated(n).to_float());
            assert!(
                diff.max_abs_coeff() <= 1e-11,
                "N={n}: residual {}",
                diff.max_abs_coeff()
            );
            // Positivity on the hard region [-50, 0].
            let target = exp_truncated(n).to_float();
            for k in 0..=500 {
                let x = -50.0 + 0.1 * k as f64;
                let v = target.evaluate(&[x]);
                assert!(v > 0.0, "exp_{n}({x}) = {v}");
            }
        }
    });
}

#[test]
fn criterion_6_bound_calculator() {
    criterion("bound-calculator", || {
        // mu(3, 2) = 24 sqrt(14), about 89.7998.
        let mu = compute_mu(3, 2).unwrap();
        assert_eq!(mu.coeff, Nat::from(24u32));
        assert_eq!(mu.radicand, Nat::from(14u32));
        assert!((mu.float_upper - 89.7998).abs() <= 1e-3);

        // The worked univariate order: p = z, epsilon = 1, t = 0 gives 66.
        let z = Polynomial::<Rat>::variable(1, 0);
        let report = n_expl(&z, &Rat::one(), &Rat::zero()).unwrap();
        assert_eq!(report.n_expl, 66);

        // The lame term is 2M + ceil(5d/2) + 2 across 20 (M, d) pairs.
        for m in 1u32..=5 {
            for d in 1u32..=4 {
                let mut exps = vec![0u32; d as usize];
                exps[0] = 2 * m;
                let mut p = Polynomial::zero(d as usize);
                p.insert(MultiIndex::new(exps), Rat::one());
                let report = n_expl(&p, &Rat::one(), &Rat::zero()).unwrap();
                let want = 2 * m as u128 + (5 * d as u128).div_ceil(2) + 2;
                assert_eq!(report.term_lame, want, "M={m}, d={d}");
            }
        }

        // At t = 0 the order grows linearly in 1/epsilon: successive ratios
        // over epsilon = 1, 1/10, 1/100 stay within a factor 1.2 of 10.
        let orders: Vec<f64> = [rat(1, 1), rat(1, 10), rat(1, 100)]
            .iter()
            .map(|eps| n_expl(&z, eps, &Rat::zero()).unwrap().n_expl as f64)
            .collect();
        for w in orders.windows(2) {
            let ratio = w[1] / w[0];
            assert!(
                (10.0 / 1.2..=10.0 * 1.2).contains(&ratio),
                "scaling ratio {ratio}"
            );
        }
    });
}

#[test]
fn criterion_7_estimate_suites() {
    criterion("estimate-suites", || {
        // Admissible coupling for the Motzkin polynomial, checked exactly,
        // then the first-estimate gap sampled at 10^4 Gaussian points.
        let p = motzkin();
        let norm = coefficient_norm(&p);
        let mu = compute_mu(3, 2).unwrap();
        let lam_sq = lambda_star(&mu, 3, &norm);
        assert!(first_estimate_admissible(&mu, 3, &norm, &lam_sq));
        let pair = first_estimate_pair(&p, &lam_sq, &rat(1, 2)).unwrap();
        assert_eq!(pair.admissible, Some(true));
        let gap = pair.rhs.sub(&pair.lhs);
        let report = sample_nonneg(&gap, 10_000, 11, Sampler::Gaussian, 1e-9).unwrap();
        assert_eq!(report.violations, 0, "min gap {}", report.min_value);

        // The second estimate flips from false to true at its threshold on a
        // grid of couplings, exponents, norms, and dimensions.
        let grid: Vec<(Rat, Rat, Rat, u32)> = vec![
            (rat(1, 4), rat(0, 1), rat(1, 1), 1),
            (rat(1, 4), rat(1, 2), rat(1, 1), 1),
            (rat(1, 2), rat(0, 1), rat(3, 1), 1),
            (rat(1, 2), rat(1, 2), rat(3, 1), 2),
            (rat(3, 4), rat(0, 1), rat(1, 2), 2),
            (rat(3, 4), rat(1, 4), rat(1, 2), 2),
            (rat(1, 10), rat(0, 1), rat(10, 1), 3),
            (rat(1, 10), rat(3, 4), rat(10, 1), 3),
            (rat(9, 10), rat(0, 1), rat(1, 1), 4),
            (rat(1, 3), rat(1, 3), rat(5, 1), 4),
        ];
        for (lam_sq, t, c, d) in grid {
            let q = Polynomial::constant(d as usize, c.clone());
            let norm = coefficient_norm(&q);
            let thr = second_estimate_threshold(&lam_sq, &t, &norm, d);
            let n_ok = thr.ceil() as u64;
            assert!(
                second_estimate_condition(n_ok, &lam_sq, &t, &norm, d).unwrap(),
                "true side: lambda^2={lam_sq}, t={t}, c={c}, d={d}"
            );
            if n_ok >= 1 && ((n_ok - 1) as f64) < thr {
                assert!(
                    !second_estimate_condition(n_ok - 1, &lam_sq, &t, &norm, d).unwrap(),
                    "false side: lambda^2={lam_sq}, t={t}, c={c}, d={d}"
                );
            }
        }
    });
}

#[test]
fn criterion_8_stirling_and_binomial() {
    criterion("stirling-and-binomial", || {
        let values = [rat(1, 2), rat(1, 1), rat(2, 1), rat(10, 1)];
        for a in &values {
            for b in &values {
                let m = stirling_min_m(rat_to_f64(a), rat_to_f64(b)).unwrap();
                // m! >= a b^m with exact arithmetic.
                let fact = Rat::from(num_bigint::BigInt::from(factorial(m.try_into().unwrap())));
                let mut rhs = a.clone();
                for _ in 0..m {
                    rhs *= b.clone();
                }
                assert!(fact >= rhs, "a={a}, b={b}, m={m}");
            }
        }
        for n in 0u32..=30 {
            let want = (0..=n).map(|k| binomial(n, k)).max().unwrap();
            assert_eq!(max_binomial(n), Rat::from(num_bigint::BigInt::from(want)), "n={n}");
        }
    });
}

#[test]
fn criterion_9_toy_synthesis() {
    criterion("toy-synthesis", || {
        let mut p = Polynomial::zero(1);
        p.insert(MultiIndex::new(vec![2]), Rat::one());
        let params = KernelParams::new(3, rat(1, 4)).unwrap();
        let report =
            synthesis_residual(&p, &params, &Rat::zero(), &Rat::one(), 7, 10_000, 0, 1e-9).unwrap();
        assert_eq!(report.residual.violations, 0);
        assert!(report.residual.min_value >= -1e-9);

        let image = apply_operator(&params, &p).unwrap().total.to_float();
        let direct = sample_nonneg(&image, 10_000, 0, Sampler::Gaussian, 1e-9).unwrap();
        assert_eq!(direct.violations, 0);
    });
}

#[test]
fn criterion_10_cli_determinism() {
    criterion("cli-determinism", || {
        let bin = env!("CARGO_BIN_EXE_mehler-sos");
        let dir = tempfile::tempdir().unwrap();
        let motzkin_path = dir.path().join("motzkin.json");
        let z2_path = dir.path().join("z2.json");
        std::fs::write(
            &motzkin_path,
            r#"{"vars":2,"terms":[{"exp":[4,2],"coef":"1"},{"exp":[2,4],"coef":"1"},{"exp":[2,2],"coef":"-3"},{"exp":[0,0],"coef":"1"}]}"#,
        )
        .unwrap();
        std::fs::write(
            &z2_path,
            r#"{"vars":1,"terms":[{"exp":[2],"coef":"1"}]}"#,
        )
        .unwrap();
        let motzkin = motzkin_path.to_str().unwrap();
        let z2 = z2_path.to_str().unwrap();
        let cert_path = dir.path().join("cert.json");
        let cert = cert_path.to_str().unwrap();

        let run = |args: &[&str]| {
            let out = Command::new(bin).args(args).output().unwrap();
            assert!(
                out.status.success(),
                "{args:?}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            out.stdout
        };

        // Produce a certificate file for verify-certificate.
        run(&[
            "certify", "--input", z2, "--N", "2", "--lambda-sq", "1/2", "--output", cert,
        ]);

        let invocations: Vec<Vec<&str>> = vec![
            vec!["bound", "--input", motzkin, "--t", "1/2"],
            vec!["perturb", "--input", z2, "--N-pert", "4", "--t", "1/2"],
            vec!["apply-kernel", "--input", z2, "--N", "2", "--lambda-sq", "1/2"],
            vec!["tail", "--input", z2, "--N", "2", "--lambda-sq", "1/2"],
            vec!["decompose", "--input", motzkin, "--N", "3", "--lambda-sq", "1/4"],
            vec!["certify", "--input", z2, "--N", "2", "--lambda-sq", "1/2"],
            vec!["verify-certificate", "--input", cert],
            vec![
                "check-estimates", "--input", motzkin, "--N", "3", "--lambda-sq", "1/10",
                "--t", "1/2", "--seed", "0",
            ],
            vec![
                "synthesis", "--input", z2, "--N", "2", "--lambda-sq", "1/4",
                "--N-pert", "5", "--seed", "1",
            ],
        ];
        for args in &invocations {
            let first = run(args);
            let second = run(args);
            assert_eq!(first, second, "non-deterministic output for {args:?}");
            assert!(!first.is_empty(), "empty output for {args:?}");
        }
    });
}
