//! Command-line front end: JSON polynomials in, JSON reports out.
//!
//! Exit codes: 0 success, 2 hypothesis violation (the input fails a
//! nonnegativity requirement), 3 precision failure, 1 anything else. Errors
//! are emitted as JSON on stderr. Outputs are deterministic for fixed inputs
//! and seed.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use mehler_sos::bounds::{
    build_perturbation, build_perturbation_exact, first_estimate_pair, n_expl,
    second_estimate_condition, second_estimate_threshold,
};
use mehler_sos::certify::{
    certify_operator_image, verify_certificate, Certificate, FloatPolyJson,
};
use mehler_sos::mehler::{apply_operator, decompose, tail_polynomial, KernelParams, QuadPoly};
use mehler_sos::polycore::{
    coefficient_norm, parse_auto, parse_rational, Polynomial, Rat,
};
use mehler_sos::verify::{sample_nonneg, synthesis_residual, Sampler};
use mehler_sos::{Error, Result};

#[derive(Parser)]
#[command(
    name = "mehler-sos",
    about = "Kernel-based sum-of-squares certificates and degree bounds",
    version
)]
struct Cli {
    /// Cap on worker threads (also MEHLER_SOS_THREADS). The current pipeline
    /// is single-threaded; values below 1 are rejected.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArg {
    /// Path to a polynomial JSON file {"vars": d, "terms": [...]}.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct KernelArgs {
    /// Truncation order N.
    #[arg(long = "N", visible_alias = "truncation")]
    n: u32,

    /// Coupling lambda^2 as a rational string like "1/2".
    #[arg(long = "lambda-sq")]
    lambda_sq: String,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the explicit truncation order and its audit trail.
    Bound {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, default_value = "1")]
        epsilon: String,
        #[arg(long, default_value = "0")]
        t: String,
    },
    /// Emit p + epsilon Sigma_{n<=N} (x.x)^n/(n!)^t.
    Perturb {
        #[command(flatten)]
        input: InputArg,
        #[arg(long = "N-pert")]
        n_pert: u32,
        #[arg(long, default_value = "1")]
        epsilon: String,
        #[arg(long, default_value = "0")]
        t: String,
    },
    /// Apply the kernel operator; emits total, low part, and tail.
    ApplyKernel {
        #[command(flatten)]
        input: InputArg,
        #[command(flatten)]
        kernel: KernelArgs,
    },
    /// Emit only the degree-(2N,4N] tail of the operator image.
    Tail {
        #[command(flatten)]
        input: InputArg,
        #[command(flatten)]
        kernel: KernelArgs,
    },
    /// Write the image as p + correction + tail and check the identity.
    Decompose {
        #[command(flatten)]
        input: InputArg,
        #[command(flatten)]
        kernel: KernelArgs,
        /// Raise the half-degree bound M above ceil(deg p / 2).
        #[arg(long = "M")]
        m: Option<u32>,
    },
    /// Build the weighted square list certifying the operator image.
    Certify {
        #[command(flatten)]
        input: InputArg,
        #[command(flatten)]
        kernel: KernelArgs,
        /// Quadrature order per axis (default: smallest exact order).
        #[arg(long)]
        quad_order: Option<u32>,
        /// Clamp negative node weights to zero instead of refusing. The
        /// resulting output is NOT a sound certificate.
        #[arg(long)]
        force: bool,
    },
    /// Re-expand a certificate file and report the residual.
    VerifyCertificate {
        #[command(flatten)]
        input: InputArg,
    },
    /// Evaluate the two estimate inequalities for the given parameters.
    CheckEstimates {
        #[command(flatten)]
        input: InputArg,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, default_value = "0")]
        t: String,
        #[arg(long, default_value = "1000")]
        samples: usize,
        #[arg(long, default_value = "0")]
        seed: u64,
    },
    /// End-to-end pipeline: perturbation, operator image, sampled residual.
    Synthesis {
        #[command(flatten)]
        input: InputArg,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long = "N-pert")]
        n_pert: u32,
        #[arg(long, default_value = "1")]
        epsilon: String,
        #[arg(long, default_value = "0")]
        t: String,
        #[arg(long, default_value = "10000")]
        samples: usize,
        #[arg(long, default_value = "0")]
        seed: u64,
        #[arg(long, default_value = "1e-9")]
        tol: f64,
    },
}

fn read_poly(path: &PathBuf) -> Result<Polynomial<Rat>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_auto(&text)
}

fn poly_value(p: &Polynomial<Rat>) -> Value {
    serde_json::from_str(&mehler_sos::polycore::format(p)).expect("canonical JSON")
}

fn float_poly_value(p: &Polynomial<f64>) -> Value {
    serde_json::to_value(FloatPolyJson::from_poly(p)).expect("serialization cannot fail")
}

/// A Q(s)-polynomial as JSON: both exact parts plus the merged float view.
fn quad_poly_value(q: &QuadPoly) -> Value {
    json!({
        "lambda_sq": q.lambda_sq().to_string(),
        "rational_part": poly_value(q.rational_part()),
        "radical_part": poly_value(q.radical_part()),
        "float": float_poly_value(&q.to_float()),
    })
}

fn kernel_params(args: &KernelArgs) -> Result<KernelParams> {
    KernelParams::new(args.n, parse_rational(&args.lambda_sq)?)
}

fn run(cli: &Cli) -> Result<Value> {
    match &cli.command {
        Command::Bound { input, epsilon, t } => {
            let p = read_poly(&input.input)?;
            let eps = parse_rational(epsilon)?;
            let t = parse_rational(t)?;
            let report = n_expl(&p, &eps, &t)?;
            let audit: Vec<Value> = report
                .audit
                .iter()
                .map(|(k, v)| json!({"label": k, "value": v}))
                .collect();
            Ok(json!({
                "check": "bound",
                "m": report.m,
                "d": report.d,
                "t": report.t.to_string(),
                "epsilon": report.epsilon.to_string(),
                "norm_p_over_eps_upper": report.norm_p_over_eps.upper,
                "mu": {
                    "coeff": report.mu.coeff.to_string(),
                    "radicand": report.mu.radicand.to_string(),
                    "float_upper": report.mu.float_upper,
                },
                "lambda_star_sq": report.lambda_star_sq.to_string(),
                "term_lame": report.term_lame.to_string(),
                "term_relevant": report.term_relevant.to_string(),
                "n_expl": report.n_expl.to_string(),
                "audit": audit,
            }))
        }
        Command::Perturb {
            input,
            n_pert,
            epsilon,
            t,
        } => {
            let p = read_poly(&input.input)?;
            let eps = parse_rational(epsilon)?;
            let t = parse_rational(t)?;
            let d = p.num_vars();
            let body = match build_perturbation_exact(d, *n_pert, &t, &eps) {
                Some(pert) => json!({
                    "exact": true,
                    "polynomial": poly_value(&p.add(&pert)),
                }),
                None => {
                    let pert = build_perturbation(d, *n_pert, &t, &eps);
                    json!({
                        "exact": false,
                        "polynomial": float_poly_value(&p.to_float().add(&pert)),
                    })
                }
            };
            Ok(json!({
                "check": "perturb",
                "n_pert": n_pert,
                "t": t.to_string(),
                "epsilon": eps.to_string(),
                "result": body,
            }))
        }
        Command::ApplyKernel { input, kernel } => {
            let p = read_poly(&input.input)?;
            let params = kernel_params(kernel)?;
            let image = apply_operator(&params, &p)?;
            Ok(json!({
                "check": "apply-kernel",
                "params": {"n": params.truncation(), "lambda_sq": params.lambda_sq().to_string()},
                "total": quad_poly_value(&image.total),
                "low_part": quad_poly_value(&image.low_part),
                "tail": quad_poly_value(&image.tail),
            }))
        }
        Command::Tail { input, kernel } => {
            let p = read_poly(&input.input)?;
            let params = kernel_params(kernel)?;
            let tail = tail_polynomial(&params, &p);
            let m = (p.degree().max(0) as u32).div_ceil(2);
            Ok(json!({
                "check": "tail",
                "params": {"n": params.truncation(), "lambda_sq": params.lambda_sq().to_string(), "m": m},
                "tail": quad_poly_value(&tail),
            }))
        }
        Command::Decompose { input, kernel, m } => {
            let p = read_poly(&input.input)?;
            let params = kernel_params(kernel)?;
            let dec = decompose(&params, &p, *m)?;
            let image = apply_operator(&params, &p)?;
            let identity_exact = dec.total() == image.total;
            Ok(json!({
                "check": "decompose",
                "params": {"n": params.truncation(), "lambda_sq": params.lambda_sq().to_string(), "m": dec.m},
                "identity_poly": poly_value(&dec.identity_poly),
                "correction": quad_poly_value(&dec.correction),
                "tail": quad_poly_value(&dec.tail),
                "identity_exact": identity_exact,
            }))
        }
        Command::Certify {
            input,
            kernel,
            quad_order,
            force,
        } => {
            let p = read_poly(&input.input)?;
            let params = kernel_params(kernel)?;
            let cert = certify_operator_image(&params, &p, *quad_order, *force)?;
            Ok(serde_json::to_value(&cert).expect("serialization cannot fail"))
        }
        Command::VerifyCertificate { input } => {
            let text = std::fs::read_to_string(&input.input)
                .map_err(|e| Error::Parse(format!("cannot read certificate: {e}")))?;
            let cert: Certificate = serde_json::from_str(&text)
                .map_err(|e| Error::Parse(format!("certificate JSON: {e}")))?;
            let report = verify_certificate(&cert);
            Ok(json!({
                "check": "verify-certificate",
                "max_coeff_err": report.max_coeff_err,
                "min_weight": report.min_weight,
                "ok": report.ok,
            }))
        }
        Command::CheckEstimates {
            input,
            kernel,
            t,
            samples,
            seed,
        } => {
            let p = read_poly(&input.input)?;
            let params = kernel_params(kernel)?;
            let t = parse_rational(t)?;
            let pair = first_estimate_pair(&p, params.lambda_sq(), &t)?;
            let norm = coefficient_norm(&p);
            let d = p.num_vars() as u32;
            let second = second_estimate_condition(
                params.truncation() as u64,
                params.lambda_sq(),
                &t,
                &norm,
                d,
            )?;
            let threshold = second_estimate_threshold(params.lambda_sq(), &t, &norm, d);
            let slack = sample_nonneg(
                &pair.rhs.sub(&pair.lhs),
                (*samples).max(1),
                *seed,
                Sampler::Gaussian,
                1e-9,
            )?;
            Ok(json!({
                "check": "check-estimates",
                "params": {"n": params.truncation(), "lambda_sq": params.lambda_sq().to_string(), "t": t.to_string()},
                "first_estimate": {
                    "context": pair.context,
                    "admissible": pair.admissible,
                    "sampled_slack_min": slack.min_value,
                    "violations": slack.violations,
                    "samples": slack.samples,
                },
                "second_estimate": {
                    "satisfied": second,
                    "threshold_upper": threshold,
                },
                "seed": seed,
                "note": "sampling is a necessary condition, not a proof",
            }))
        }
        Command::Synthesis {
            input,
            kernel,
            n_pert,
            epsilon,
            t,
            samples,
            seed,
            tol,
        } => {
            let p = read_poly(&input.input)?;
            let params = kernel_params(kernel)?;
            let eps = parse_rational(epsilon)?;
            let t = parse_rational(t)?;
            let report = synthesis_residual(
                &p,
                &params,
                &t,
                &eps,
                *n_pert,
                (*samples).max(1),
                *seed,
                *tol,
            )?;
            let image_float = apply_operator(&params, &p)?.total.to_float();
            let image_samples = sample_nonneg(
                &image_float,
                (*samples).max(1),
                *seed,
                Sampler::Gaussian,
                *tol,
            )?;
            Ok(json!({
                "check": "synthesis",
                "params": {
                    "n": params.truncation(),
                    "lambda_sq": params.lambda_sq().to_string(),
                    "n_pert": n_pert,
                    "t": t.to_string(),
                    "epsilon": eps.to_string(),
                },
                "seed": seed,
                "residual": serde_json::to_value(&report.residual).unwrap(),
                "image_nonneg": serde_json::to_value(&image_samples).unwrap(),
                "first_estimate_admissible": report.first_estimate_admissible,
                "second_estimate_satisfied": report.second_estimate_satisfied,
                "first_estimate_slack": serde_json::to_value(&report.first_estimate_slack).unwrap(),
                "perturbation_order_sufficient": report.perturbation_order_sufficient,
                "note": report.note,
            }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let threads = cli.threads.or_else(|| {
        std::env::var("MEHLER_SOS_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(0) = threads {
        eprintln!("{}", json!({"error": "threads must be at least 1"}));
        return ExitCode::from(1);
    }

    match run(&cli) {
        Ok(value) => {
            let text = serde_json::to_string_pretty(&value).expect("serialization cannot fail");
            match &cli.output {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, text + "\n") {
                        eprintln!("{}", json!({"error": format!("cannot write output: {e}")}));
                        return ExitCode::from(1);
                    }
                }
                None => {
                    let mut stdout = std::io::stdout().lock();
                    let _ = writeln!(stdout, "{text}");
                }
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let (code, kind) = match &err {
                Error::HypothesisViolation(_) => (2, "hypothesis-violation"),
                Error::Precision(_) => (3, "precision-failure"),
                _ => (1, "error"),
            };
            eprintln!("{}", json!({"error": err.to_string(), "kind": kind}));
            ExitCode::from(code)
        }
    }
}
