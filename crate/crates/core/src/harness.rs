//! Experiments for both directions of the mixed-norm inequality.
//!
//! * [`verify_random`] draws random non-negative forms and compares the mixed
//!   norm with an operator-norm estimate (sufficiency).
//! * [`falsify`] and [`sharpness_experiment`] use the extremal families in
//!   closed form to show growth or equality in `n` (necessity / sharpness).
//!
//! Estimates from alternating ascent are lower bounds, so a trial where the
//! mixed norm exceeds the estimate is only a *candidate* violation.

use std::io::Write;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exponents::{self, Admissibility, ExponentError, Exponents, ExtReal, Perm, Spaces};
use crate::extremal::{self, ExtremalError, ExtremalFamily};
use crate::opnorm::{self, AscentOptions, OpNormError};
use crate::tensor::{self, MixedNormSpec, NonNegTensor, TensorError};

/// Relative slack allowed before a trial stops counting as HOLDS.
pub const HOLDS_TOL: f64 = 1e-9;

/// Largest `n` at which closed forms are cross-checked numerically.
pub const NUMERIC_CHECK_MAX_N: usize = 64;
const NUMERIC_CHECK_MAX_CELLS: usize = 1_000_000;
const ASCENT_CHECK_MAX_CELLS: usize = 4_096;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("q is inadmissible (fails at k={}); use falsify instead", level + 1)]
    Inadmissible { level: usize },
    #[error("q is admissible; use verify instead")]
    Admissible,
    #[error("p has reciprocal sum {sum} >= 1; this experiment needs it strictly below 1")]
    SecondCase { sum: String },
    #[error("size list is empty")]
    NoSizes,
    #[error("sizes must be at least 1")]
    ZeroSize,
    #[error("max_dim must be at least 1")]
    ZeroDim,
    #[error("{what} at n={n}: closed form {expected}, numeric {got}")]
    CrossCheck {
        what: &'static str,
        n: usize,
        expected: f64,
        got: f64,
    },
    #[error("length mismatch: {0}")]
    Length(String),
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Extremal(#[from] ExtremalError),
    #[error(transparent)]
    OpNorm(#[from] OpNormError),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Verdict {
    Holds,
    ViolatedCandidate,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub dims: Vec<usize>,
    pub lhs: f64,
    pub estimate: f64,
    pub verdict: Verdict,
    pub escalated: bool,
}

impl TrialRecord {
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.estimate
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub trials: usize,
    pub holds: usize,
    pub inconclusive: usize,
    pub violated: usize,
    pub worst_ratio: f64,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntryDistribution {
    Uniform,
    Pareto { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub trials: usize,
    pub max_dim: usize,
    pub seed: u64,
    pub ascent: AscentOptions,
    pub distribution: EntryDistribution,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            trials: 100,
            max_dim: 4,
            seed: 0,
            ascent: AscentOptions::default(),
            distribution: EntryDistribution::Uniform,
        }
    }
}

/// Seed of trial `t`, drawn from stream `t` of the master generator.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial as u64);
    rng.next_u64()
}

/// Random tensor with every extent in `1..=max_dim`.
pub fn random_tensor(
    order: usize,
    max_dim: usize,
    dist: EntryDistribution,
    seed: u64,
) -> Result<NonNegTensor> {
    if max_dim == 0 {
        return Err(HarnessError::ZeroDim);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape: Vec<usize> = (0..order).map(|_| rng.gen_range(1..=max_dim)).collect();
    let len = shape.iter().product();
    let data = match dist {
        EntryDistribution::Uniform => (0..len).map(|_| rng.gen::<f64>()).collect(),
        EntryDistribution::Pareto { alpha } => {
            let pareto = Pareto::new(1.0, alpha)
                .map_err(|e| HarnessError::Length(format!("bad Pareto shape {alpha}: {e}")))?;
            (0..len).map(|_| pareto.sample(&mut rng)).collect()
        }
    };
    Ok(NonNegTensor::new(shape, data)?)
}

/// Single sufficiency trial on a given tensor.
pub fn run_trial(
    a: &NonNegTensor,
    p: &Spaces,
    spec: &MixedNormSpec,
    ascent: &AscentOptions,
    seed: u64,
) -> Result<TrialRecord> {
    let lhs = tensor::mixed_norm(a, spec)?;
    let opts = AscentOptions { seed, ..*ascent };
    let mut est = opnorm::alternating_ascent(a, p, &opts)?;
    let holds = |e: f64| lhs <= e * (1.0 + HOLDS_TOL);
    let mut escalated = false;
    if !holds(est.value) {
        escalated = true;
        let wider = AscentOptions {
            restarts: opts.restarts * 4,
            ..opts
        };
        est = opnorm::alternating_ascent(a, p, &wider)?;
    }
    let verdict = if holds(est.value) {
        Verdict::Holds
    } else if !est.converged {
        Verdict::Inconclusive
    } else {
        Verdict::ViolatedCandidate
    };
    Ok(TrialRecord {
        trial: 0,
        seed,
        dims: a.shape().to_vec(),
        lhs,
        estimate: est.value,
        verdict,
        escalated,
    })
}

fn check_lengths(p: &Spaces, sigma: &Perm, q: &Exponents) -> Result<()> {
    if p.len() != sigma.len() || p.len() != q.len() {
        return Err(HarnessError::Length(format!(
            "p has {}, sigma {}, q {} entries",
            p.len(),
            sigma.len(),
            q.len()
        )));
    }
    Ok(())
}

/// Random sufficiency sweep. Requires `q` admissible for `(p, σ)`.
pub fn verify_random(
    p: &Spaces,
    sigma: &Perm,
    q: &Exponents,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    check_lengths(p, sigma, q)?;
    if let Admissibility::Fails { level } = exponents::admissible(p, sigma, q)? {
        return Err(HarnessError::Inadmissible { level });
    }
    if opts.max_dim == 0 {
        return Err(HarnessError::ZeroDim);
    }
    let spec = MixedNormSpec::new(sigma.clone(), q.clone())?;
    let mut records = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(opts.seed, t);
            let a = random_tensor(p.len(), opts.max_dim, opts.distribution, seed)?;
            let mut rec = run_trial(&a, p, &spec, &opts.ascent, seed)?;
            rec.trial = t;
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|r| (r.seed, r.trial));
    Ok(summarize(records))
}

pub fn summarize(records: Vec<TrialRecord>) -> VerifyReport {
    let count = |v: Verdict| records.iter().filter(|r| r.verdict == v).count();
    VerifyReport {
        trials: records.len(),
        holds: count(Verdict::Holds),
        inconclusive: count(Verdict::Inconclusive),
        violated: count(Verdict::ViolatedCandidate),
        worst_ratio: records.iter().map(TrialRecord::ratio).fold(0.0, f64::max),
        records,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpnessRow {
    pub n: usize,
    pub lhs: f64,
    pub norm: f64,
    pub ratio: f64,
}

impl SharpnessRow {
    fn new(n: usize, lhs: f64, norm: f64) -> Self {
        SharpnessRow {
            n,
            lhs,
            norm,
            ratio: lhs / norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Falsification {
    /// 0-based nesting level of the first violated condition.
    pub level: usize,
    pub family: ExtremalFamily,
    /// Predicted slope of `log ratio` against `log n`: `1/q_k − 1/δ_k`.
    pub slope: f64,
    pub rows: Vec<SharpnessRow>,
}

fn check_sizes(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() {
        return Err(HarnessError::NoSizes);
    }
    if n_list.contains(&0) {
        return Err(HarnessError::ZeroSize);
    }
    Ok(())
}

fn within(expected: f64, got: f64, rel: f64) -> bool {
    (expected - got).abs() <= rel * expected.abs().max(f64::MIN_POSITIVE)
}

/// Materializes the family at small `n` and compares the closed forms with
/// the mixed-norm evaluator and, on tiny cases, with alternating ascent.
fn cross_check(
    family: &ExtremalFamily,
    p: &Spaces,
    spec: &MixedNormSpec,
    row: &SharpnessRow,
) -> Result<()> {
    let cells = (family.n as u128).saturating_pow(family.m as u32);
    if family.n > NUMERIC_CHECK_MAX_N || cells > NUMERIC_CHECK_MAX_CELLS as u128 {
        return Ok(());
    }
    let a = family.materialize()?;
    let lhs = tensor::mixed_norm(&a, spec)?;
    if !within(row.lhs, lhs, 1e-9) {
        return Err(HarnessError::CrossCheck {
            what: "mixed norm",
            n: family.n,
            expected: row.lhs,
            got: lhs,
        });
    }
    if cells <= ASCENT_CHECK_MAX_CELLS as u128 {
        let est = opnorm::alternating_ascent(&a, p, &AscentOptions::default())?;
        if est.value > row.norm * (1.0 + 1e-9) {
            return Err(HarnessError::CrossCheck {
                what: "family norm",
                n: family.n,
                expected: row.norm,
                got: est.value,
            });
        }
    }
    Ok(())
}

/// Necessity: for inadmissible `q` failing at level `k`, the pinned diagonal
/// with `k` pinned slots has mixed norm `n^{1/q_k}` against a norm of
/// `n^{1/δ_k}`, so the ratio grows without bound.
pub fn falsify(p: &Spaces, sigma: &Perm, q: &Exponents, n_list: &[usize]) -> Result<Falsification> {
    check_lengths(p, sigma, q)?;
    check_sizes(n_list)?;
    let level = match exponents::admissible(p, sigma, q)? {
        Admissibility::Admissible => return Err(HarnessError::Admissible),
        Admissibility::Fails { level } => level,
    };
    let qk = &q.as_slice()[level];
    let ordered = p.permuted(sigma)?;
    let dk = exponents::delta(&ordered.as_slice()[level..])?;
    let slope = qk.reciprocal().to_f64() - dk.reciprocal().to_f64();
    let spec = MixedNormSpec::new(sigma.clone(), q.clone())?;
    let rows = n_list
        .iter()
        .map(|&n| {
            let family = ExtremalFamily::pinned(p.len(), n, level, sigma.clone());
            let row = SharpnessRow::new(n, extremal::pow_reciprocal(n, qk), family.norm(p)?);
            cross_check(&family, p, &spec, &row)?;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Falsification {
        level,
        family: ExtremalFamily::pinned(p.len(), n_list[0], level, sigma.clone()),
        slope,
        rows,
    })
}

/// Sharpness at the critical tuple: the diagonal family gives ratio 1 at
/// every `n`.
pub fn sharpness_experiment(
    p: &Spaces,
    sigma: &Perm,
    n_list: &[usize],
) -> Result<Vec<SharpnessRow>> {
    if !p.is_first_case() {
        return Err(HarnessError::SecondCase {
            sum: p.reciprocal_sum().to_string(),
        });
    }
    check_sizes(n_list)?;
    let q = exponents::critical_exponents(p, sigma)?;
    let spec = MixedNormSpec::new(sigma.clone(), q.clone())?;
    n_list
        .iter()
        .map(|&n| {
            let family = ExtremalFamily::diagonal(p.len(), n);
            let lhs = extremal::pow_reciprocal(n, &q.as_slice()[0]);
            let row = SharpnessRow::new(n, lhs, family.norm(p)?);
            cross_check(&family, p, &spec, &row)?;
            Ok(row)
        })
        .collect()
}

/// Log-log slopes between consecutive rows.
pub fn log_slopes(rows: &[SharpnessRow]) -> Vec<f64> {
    rows.windows(2)
        .map(|w| (w[1].ratio / w[0].ratio).ln() / (w[1].n as f64 / w[0].n as f64).ln())
        .collect()
}

/// Isotropic exponent `(ρ,…,ρ)` against `p` in the first case.
pub fn bayart_check(p: &Spaces, rho: &ExtReal) -> Result<bool> {
    if !p.is_first_case() {
        return Err(HarnessError::SecondCase {
            sum: p.reciprocal_sum().to_string(),
        });
    }
    let q = Exponents::uniform(rho.clone(), p.len())?;
    Ok(exponents::admissible(p, &Perm::identity(p.len()), &q)?.is_admissible())
}

#[derive(Serialize)]
struct TrialCsvRow {
    trial: usize,
    seed: u64,
    dims: String,
    lhs: String,
    estimate: String,
    ratio: String,
    verdict: Verdict,
    escalated: bool,
}

#[derive(Serialize)]
struct SharpnessCsvRow {
    n: usize,
    lhs: String,
    norm: String,
    ratio: String,
}

/// Shortest round-trip form that always keeps a decimal point (`2.0`).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_sharpness_csv<W: Write>(rows: &[SharpnessRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(SharpnessCsvRow {
            n: r.n,
            lhs: fmt_f64(r.lhs),
            norm: fmt_f64(r.norm),
            ratio: fmt_f64(r.ratio),
        })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_trials_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(TrialCsvRow {
            trial: r.trial,
            seed: r.seed,
            dims: r
                .dims
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join("x"),
            lhs: fmt_f64(r.lhs),
            estimate: fmt_f64(r.estimate),
            ratio: fmt_f64(r.ratio()),
            verdict: r.verdict,
            escalated: r.escalated,
        })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
