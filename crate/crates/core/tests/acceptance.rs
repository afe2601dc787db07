//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL line
//! each and exits non-zero if any fails.

// negated comparisons are deliberate: a NaN must fail the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use hlineq::harness::{self, VerifyOptions};
use hlineq::opnorm::{self, AscentOptions, DEFAULT_GRID_CAP};
use hlineq::{
    bayart_check, conjugate, critical_exponents, delta, diagonal_norm_closed_form, falsify,
    mixed_norm, reduce, reduced_spaces, sharpness_experiment, Exponents, ExtReal, MixedNormSpec,
    NonNegTensor, Perm, Spaces, Verdict,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, Duration, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn ac1_exponent_calculus() -> Outcome {
    ensure!(
        delta(sp(&["2", "2"]).as_slice()).map_err(err)? == ExtReal::Infinity,
        "delta(2,2) is not inf"
    );
    ensure!(
        delta(sp(&["4", "4"]).as_slice()).map_err(err)? == x("2"),
        "delta(4,4) != 2"
    );
    ensure!(
        delta(&[ExtReal::Infinity]).map_err(err)? == x("1"),
        "delta(inf) != 1"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p = if rng.gen_bool(0.05) {
            ExtReal::Infinity
        } else {
            let d: i64 = rng.gen_range(1..=1000);
            ExtReal::rational(rng.gen_range(d..=50 * d), d).map_err(err)?
        };
        let back = conjugate(&conjugate(&p).map_err(err)?).map_err(err)?;
        ensure!(back == p, "rational involution failed at {p}");

        let pf = if p.is_infinite() {
            f64::INFINITY
        } else {
            rng.gen_range(1.0..100.0)
        };
        let pf_ext = ExtReal::float(pf).map_err(err)?;
        let backf = conjugate(&conjugate(&pf_ext).map_err(err)?)
            .map_err(err)?
            .to_f64();
        if pf.is_infinite() {
            ensure!(backf.is_infinite(), "float involution lost inf");
        } else {
            let e = rel_err(backf, pf);
            worst = worst.max(e);
            ensure!(e <= 1e-12, "float involution off by {e:e} at {pf}");
        }
    }
    Ok(format!("1000 involutions, worst float rel err {worst:.1e}"))
}

fn ac2_reduced_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    for _ in 0..500 {
        let m = rng.gen_range(2..=5);
        let p = spaces_from_recips(&rand_recips(&mut rng, m, true));
        let r = reduced_spaces(&p).map_err(err)?;
        ensure!(
            r.iter().all(ExtReal::is_exact),
            "reduced spaces left rational mode for {p:?}"
        );
        let dm = delta(&p.as_slice()[m - 1..]).map_err(err)?;
        for i in 0..m - 1 {
            let lhs = delta(&r.as_slice()[i..]).map_err(err)?;
            let rhs = delta(&p.as_slice()[i..])
                .map_err(err)?
                .checked_div(&dm)
                .map_err(err)?;
            ensure!(lhs == rhs, "p={p:?} i={i}: {lhs} != {rhs}");
            checked += 1;
        }
    }
    Ok(format!("500 tuples, {checked} suffix identities exact"))
}

fn ac3_sharpness() -> Outcome {
    let p = sp(&["4", "4"]);
    let ns = [1, 10, 100, 1000, 10_000];
    let rows = sharpness_experiment(&p, &Perm::identity(2), &ns).map_err(err)?;
    for r in &rows {
        ensure!(
            (r.ratio - 1.0).abs() <= 1e-9,
            "ratio {} at n={}",
            r.ratio,
            r.n
        );
    }
    // sub-critical first exponent against the same diagonal family
    let q1 = 1.9f64;
    let ratios: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let lhs = (n as f64).powf(1.0 / q1);
            let norm = diagonal_norm_closed_form(n, p.as_slice()).unwrap();
            lhs / norm
        })
        .collect();
    let q = Exponents::new(vec![x("1.9"), x("4/3")]).map_err(err)?;
    let fal = falsify(&p, &Perm::identity(2), &q, &ns).map_err(err)?;
    ensure!(
        fal.level == 0,
        "sub-critical q fails at level {}",
        fal.level
    );
    for (row, want) in fal.rows.iter().zip(&ratios) {
        ensure!(
            rel_err(row.ratio, *want) <= 1e-12,
            "falsify ratio {} vs {want}",
            row.ratio
        );
    }
    let target = 10f64.powf(4.0 * (1.0 / 1.9 - 0.5));
    let last = fal.rows.last().unwrap().ratio;
    ensure!(
        (last - target).abs() <= 1e-6,
        "ratio at 1e4 is {last}, want {target}"
    );
    ensure!((last - 1.2743).abs() < 1e-4, "ratio at 1e4 is {last}");
    ensure!(
        fal.rows.windows(2).all(|w| w[1].ratio > w[0].ratio),
        "ratios not increasing"
    );
    Ok(format!(
        "critical ratio 1 at all n; q1=1.9 ratio {last:.6} at n=1e4"
    ))
}

fn ac4_second_case() -> Outcome {
    let f = falsify(
        &sp(&["2", "2"]),
        &Perm::identity(2),
        &Exponents::new(vec![x("10"), x("2")]).map_err(err)?,
        &[1024],
    )
    .map_err(err)?;
    let row = f.rows[0];
    ensure!(row.norm == 1.0, "norm {}", row.norm);
    ensure!((row.ratio - 2.0).abs() <= 1e-9, "ratio {}", row.ratio);

    let f = falsify(
        &sp(&["2", "2", "4"]),
        &Perm::identity(3),
        &Exponents::new(vec![ExtReal::Infinity, x("3"), x("4/3")]).map_err(err)?,
        &[10, 100, 1000, 10_000],
    )
    .map_err(err)?;
    ensure!(f.level + 1 == 2, "failing index k={}", f.level + 1);
    let want = 1.0 / 3.0 - 1.0 / 4.0;
    ensure!(
        (f.slope - want).abs() <= 1e-6,
        "predicted slope {}",
        f.slope
    );
    for s in harness::log_slopes(&f.rows) {
        ensure!((s - want).abs() <= 1e-6, "measured slope {s}");
    }
    Ok(format!(
        "ratio {} at n=1024; k=2, slope {:.9}",
        row.ratio, f.slope
    ))
}

fn chain_tensors() -> Vec<NonNegTensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    (0..200)
        .map(|_| rand_tensor(&mut rng, vec![4, 4, 4]))
        .collect()
}

fn ac5_chain_identity() -> Outcome {
    let p = sp(&["8", "8", "2"]);
    let qd = critical_exponents(&p, &Perm::identity(3)).map_err(err)?;
    let mut worst = 0.0f64;
    for d in chain_tensors() {
        let red = reduce(&d, &p).map_err(err)?;
        ensure!(red.power == x("2"), "power {}", red.power);
        let qa = critical_exponents(&red.spaces, &Perm::identity(2)).map_err(err)?;
        let lhs = mixed_norm(&d, &MixedNormSpec::identity(qd.clone()))
            .map_err(err)?
            .powi(2);
        let rhs = mixed_norm(&red.tensor, &MixedNormSpec::identity(qa)).map_err(err)?;
        let e = rel_err(lhs, rhs);
        worst = worst.max(e);
        ensure!(e <= 1e-9, "{lhs} vs {rhs}");
    }
    Ok(format!("200 tensors, worst rel err {worst:.1e}"))
}

fn ac6_norm_transfer() -> Outcome {
    let p = sp(&["8", "8", "2"]);
    let opts = AscentOptions {
        restarts: 20,
        ..AscentOptions::default()
    };
    let mut worst = 0.0f64;
    for (i, d) in chain_tensors().into_iter().enumerate() {
        let red = reduce(&d, &p).map_err(err)?;
        let o = AscentOptions {
            seed: i as u64,
            ..opts
        };
        let nd = opnorm::alternating_ascent(&d, &p, &o).map_err(err)?.value;
        let na = opnorm::alternating_ascent(&red.tensor, &red.spaces, &o)
            .map_err(err)?
            .value;
        let ratio = na / nd.powi(2);
        worst = worst.max(ratio);
        ensure!(ratio <= 1.05, "tensor {i}: {na} > {nd}^2 * 1.05");
    }
    Ok(format!("200 tensors, worst ratio {worst:.6}"))
}

fn ac7_oracle_equivalence() -> Outcome {
    let spaces = [sp(&["2", "2"]), sp(&["4", "2"]), sp(&["inf", "2"])];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_gap = 0.0f64;
    let mut widest = 0.0f64;
    for t in 0..50 {
        let a = rand_tensor(&mut rng, vec![3, 3]);
        for p in &spaces {
            let est = opnorm::alternating_ascent(
                &a,
                p,
                &AscentOptions {
                    seed: t,
                    ..AscentOptions::default()
                },
            )
            .map_err(err)?;
            let o = opnorm::grid_oracle(&a, p, 60, DEFAULT_GRID_CAP).map_err(err)?;
            let gap = (est.value - o.estimate.value).abs();
            let allowed = o.error_bound + 1e-2 * o.estimate.value;
            ensure!(
                gap <= allowed,
                "tensor {t} p={p:?}: ascent {} oracle {} bound {}",
                est.value,
                o.estimate.value,
                o.error_bound
            );
            worst_gap = worst_gap.max(gap / o.estimate.value);
            widest = widest.max(o.error_bound / o.estimate.value);
        }
    }
    Ok(format!(
        "150 cases, worst rel gap {worst_gap:.1e}, widest rel bound {widest:.3}"
    ))
}

fn ac8_sufficiency_sweep() -> Outcome {
    let tuples = [sp(&["4", "4"]), sp(&["3", "3", "3"]), sp(&["2", "4", "8"])];
    let mut total = 0;
    let mut inconclusive = 0;
    let mut worst = 0.0f64;
    for p in &tuples {
        for sigma in [Perm::identity(p.len()), Perm::reversal(p.len())] {
            let q = critical_exponents(p, &sigma).map_err(err)?;
            let opts = VerifyOptions {
                trials: 200,
                max_dim: 6,
                seed: 8,
                ..VerifyOptions::default()
            };
            let rep = hlineq::verify_random(p, &sigma, &q, &opts).map_err(err)?;
            let violated = rep
                .records
                .iter()
                .filter(|r| r.verdict == Verdict::ViolatedCandidate)
                .count();
            ensure!(
                violated == 0,
                "p={p:?} sigma={:?}: {violated} violations",
                sigma.to_one_based()
            );
            total += rep.trials;
            inconclusive += rep.inconclusive;
            worst = worst.max(rep.worst_ratio);
        }
    }
    Ok(format!(
        "{total} trials, 0 violated, {inconclusive} inconclusive, worst ratio {worst:.6}"
    ))
}

fn rand_q(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m)
        .map(|_| {
            if rng.gen_bool(0.2) {
                f64::INFINITY
            } else {
                rng.gen_range(0.5..8.0)
            }
        })
        .collect()
}

fn exps(q: &[f64]) -> Exponents {
    Exponents::new(q.iter().map(|&v| ExtReal::float(v).unwrap()).collect()).unwrap()
}

fn rand_case(rng: &mut ChaCha8Rng) -> NonNegTensor {
    let m = rng.gen_range(1..=4);
    let shape = (0..m).map(|_| rng.gen_range(1..=4)).collect();
    rand_tensor(rng, shape)
}

fn ac9_mixed_norm_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let tol = 1e-10;
    let norm = |a: &NonNegTensor, sigma: &Perm, q: &[f64]| {
        mixed_norm(a, &MixedNormSpec::new(sigma.clone(), exps(q)).unwrap()).unwrap()
    };
    for _ in 0..500 {
        let a = rand_case(&mut rng);
        let m = a.order();
        let sigma = rand_perm(&mut rng, m);
        let q = rand_q(&mut rng, m);
        let c = rng.gen_range(0.0..50.0);
        let (l, r) = (
            norm(&a.scaled(c).unwrap(), &sigma, &q),
            c * norm(&a, &sigma, &q),
        );
        ensure!(rel_err(l, r) <= tol, "homogeneity: {l} vs {r}");
    }
    for _ in 0..500 {
        let a = rand_case(&mut rng);
        let m = a.order();
        let sigma = rand_perm(&mut rng, m);
        let q = rand_q(&mut rng, m);
        let mut data = a.data().to_vec();
        let i = rng.gen_range(0..data.len());
        data[i] += rng.gen_range(0.0..3.0);
        let b = NonNegTensor::new(a.shape().to_vec(), data).unwrap();
        let (lo, hi) = (norm(&a, &sigma, &q), norm(&b, &sigma, &q));
        ensure!(lo <= hi * (1.0 + tol), "entry monotonicity: {lo} > {hi}");
    }
    for _ in 0..500 {
        let a = rand_case(&mut rng);
        let m = a.order();
        let sigma = rand_perm(&mut rng, m);
        let q = rand_q(&mut rng, m);
        let mut q2 = q.clone();
        let k = rng.gen_range(0..m);
        q2[k] = if rng.gen_bool(0.2) {
            f64::INFINITY
        } else {
            q2[k] + rng.gen_range(0.0..4.0)
        };
        let (small, big) = (norm(&a, &sigma, &q2), norm(&a, &sigma, &q));
        ensure!(
            small <= big * (1.0 + tol),
            "exponent monotonicity: {small} > {big}"
        );
    }
    for _ in 0..500 {
        let a = rand_case(&mut rng);
        let m = a.order();
        let sigma = rand_perm(&mut rng, m);
        let tau = rand_perm(&mut rng, m);
        let q = rand_q(&mut rng, m);
        let b = a.permute_axes(&tau).unwrap();
        let tinv = tau.inverse();
        let sigma_b = Perm::new(sigma.iter().map(|&s| tinv.as_slice()[s]).collect()).unwrap();
        let (na, nb) = (norm(&a, &sigma, &q), norm(&b, &sigma_b, &q));
        ensure!(
            rel_err(na, nb) <= tol,
            "permutation covariance: {na} vs {nb}"
        );
        let naive = naive_mixed_norm(&a, sigma.as_slice(), &q);
        ensure!(
            rel_err(na, naive) <= tol,
            "definition mismatch: {na} vs {naive}"
        );
    }
    for _ in 0..500 {
        let a = rand_case(&mut rng);
        let m = a.order();
        let sigma = rand_perm(&mut rng, m);
        let q = rand_q(&mut rng, m);
        let b = a
            .zero_padded(rng.gen_range(0..m), rng.gen_range(1..=3))
            .unwrap();
        let (na, nb) = (norm(&a, &sigma, &q), norm(&b, &sigma, &q));
        ensure!(rel_err(na, nb) <= tol, "zero padding: {na} vs {nb}");
    }
    Ok("5 properties x 500 cases".into())
}

fn ac10_isotropic_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut below = 0;
    for _ in 0..1000 {
        let m = rng.gen_range(1..=5);
        let p: Spaces = spaces_from_recips(&rand_recips(&mut rng, m, true));
        let d = delta(p.as_slice()).map_err(err)?;
        ensure!(
            bayart_check(&p, &d).map_err(err)?,
            "boundary rho = {d} rejected for {p:?}"
        );
        let ratio = d.as_ratio().unwrap();
        // just below the boundary, by the smallest step the denominator allows
        let eps = BigRational::new(BigInt::from(1), ratio.denom() * BigInt::from(1000));
        let under = ExtReal::from_ratio(ratio - eps);
        if let Ok(under) = under {
            ensure!(
                !bayart_check(&p, &under).map_err(err)?,
                "rho = {under} < {d} accepted"
            );
            below += 1;
        }
        let rho = ExtReal::rational(rng.gen_range(1..=400), rng.gen_range(1..=40)).map_err(err)?;
        ensure!(
            bayart_check(&p, &rho).map_err(err)? == (rho >= d),
            "rho = {rho} vs delta {d}"
        );
    }
    Ok(format!(
        "1000 tuples, boundary exact, {below} just-below checks"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (
            "AC1",
            "exponent calculus",
            Duration::from_secs(1),
            ac1_exponent_calculus,
        ),
        (
            "AC2",
            "reduced-spaces identity",
            Duration::from_secs(5),
            ac2_reduced_identity,
        ),
        (
            "AC3",
            "sharpness at criticality",
            Duration::from_secs(1),
            ac3_sharpness,
        ),
        (
            "AC4",
            "second-case falsification",
            Duration::from_secs(1),
            ac4_second_case,
        ),
        (
            "AC5",
            "chain identity",
            Duration::from_secs(10),
            ac5_chain_identity,
        ),
        (
            "AC6",
            "norm transfer",
            Duration::from_secs(60),
            ac6_norm_transfer,
        ),
        (
            "AC7",
            "oracle equivalence",
            Duration::from_secs(120),
            ac7_oracle_equivalence,
        ),
        (
            "AC8",
            "sufficiency sweep",
            Duration::from_secs(300),
            ac8_sufficiency_sweep,
        ),
        (
            "AC9",
            "mixed-norm properties",
            Duration::from_secs(30),
            ac9_mixed_norm_properties,
        ),
        (
            "AC10",
            "isotropic recovery",
            Duration::from_secs(5),
            ac10_isotropic_recovery,
        ),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > budget => Err(format!("{detail}; over the {budget:?} budget")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("[PASS] {id} {name} ({:.2}s): {detail}", took.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {id} {name} ({:.2}s): {why}", took.as_secs_f64());
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
