//! Operator norms of non-negative multilinear forms on products of `ℓ_p` balls.
//!
//! For non-negative coefficients the supremum is attained on non-negative
//! vectors, so every witness here lives in the non-negative orthant.
//! General tensors are handled by alternating ascent, which only ever
//! produces lower bounds; the grid oracle is an independent brute-force
//! cross-check for small shapes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exponents::{self, ExponentError, ExtReal, Spaces};
use crate::tensor::{self, lq_norm, NonNegTensor, TensorError};

/// Hard cap on grid-oracle evaluations.
pub const DEFAULT_GRID_CAP: u64 = 100_000_000;

#[derive(Debug, Error)]
pub enum OpNormError {
    #[error("tensor has order {order} but {spaces} spaces were given")]
    OrderMismatch { order: usize, spaces: usize },
    #[error("restarts must be at least 1")]
    NoRestarts,
    #[error("grid resolution must be at least 1")]
    ZeroResolution,
    #[error(
        "grid oracle needs {evaluations} evaluations (cap {cap}); lower the resolution or shrink the tensor"
    )]
    GridTooLarge { evaluations: u128, cap: u64 },
    #[error("vector entry {index} is {value}; entries must be finite and >= 0")]
    BadVector { index: usize, value: f64 },
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

pub type Result<T> = std::result::Result<T, OpNormError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    Exact,
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub kind: EstimateKind,
    pub iterations: usize,
    pub restarts_used: usize,
    pub converged: bool,
    pub witness: Vec<Vec<f64>>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualArgmax {
    pub x: Vec<f64>,
    pub value: f64,
}

fn check_vector(c: &[f64]) -> Result<()> {
    match c.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        Some(index) => Err(OpNormError::BadVector {
            index,
            value: c[index],
        }),
        None => Ok(()),
    }
}

/// `ℓ_p` norm of a non-negative vector.
pub fn lp_norm(x: &[f64], p: &ExtReal) -> f64 {
    lq_norm(x, p.to_f64())
}

fn basis(n: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[j] = 1.0;
    e
}

/// Lowest index of the largest entry.
fn argmax(c: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in c.iter().enumerate() {
        if v > c[best] {
            best = j;
        }
    }
    best
}

/// Maximizes `Σ c_j x_j` over the non-negative `ℓ_p` unit ball; the optimum
/// is `‖c‖_{p*}`. An all-zero `c` yields `e_1` with value 0.
pub fn holder_dual_argmax(c: &[f64], p: &ExtReal) -> Result<DualArgmax> {
    check_vector(c)?;
    let n = c.len();
    if n == 0 || c.iter().all(|&v| v == 0.0) {
        return Ok(DualArgmax {
            x: if n == 0 { Vec::new() } else { basis(n, 0) },
            value: 0.0,
        });
    }
    if p.is_infinite() {
        return Ok(DualArgmax {
            x: vec![1.0; n],
            value: c.iter().sum(),
        });
    }
    let pf = p.to_f64();
    if pf == 1.0 {
        let j = argmax(c);
        return Ok(DualArgmax {
            x: basis(n, j),
            value: c[j],
        });
    }
    let dual = exponents::conjugate(p)?.to_f64();
    let value = lq_norm(c, dual);
    let x = c.iter().map(|&cj| (cj / value).powf(dual - 1.0)).collect();
    Ok(DualArgmax { x, value })
}

/// `‖c‖_{p*}` for a linear form, with its maximizing witness.
pub fn exact_norm_m1(c: &[f64], p: &ExtReal) -> Result<NormEstimate> {
    let DualArgmax { x, value } = holder_dual_argmax(c, p)?;
    Ok(NormEstimate {
        value,
        kind: EstimateKind::Exact,
        iterations: 0,
        restarts_used: 0,
        converged: true,
        witness: vec![x],
        seed: 0,
    })
}

/// Evaluates the form at one vector per slot.
pub fn form_value(a: &NonNegTensor, witness: &[Vec<f64>]) -> Result<f64> {
    if witness.len() != a.order() {
        return Err(OpNormError::OrderMismatch {
            order: a.order(),
            spaces: witness.len(),
        });
    }
    let mut t = a.clone();
    for (k, x) in witness.iter().enumerate().rev() {
        t = t.contract(k, x)?;
    }
    Ok(t.data()[0])
}

/// Contracts every slot except `keep`, leaving the coefficient vector of
/// the linear form in slot `keep`.
pub fn partial_gradient(a: &NonNegTensor, witness: &[Vec<f64>], keep: usize) -> Result<Vec<f64>> {
    let mut t = a.clone();
    for k in (0..a.order()).rev() {
        if k != keep {
            t = t.contract(k, &witness[k])?;
        }
    }
    Ok(t.data().to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentOptions {
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions {
            restarts: 8,
            tol: 1e-10,
            max_iter: 1000,
            seed: 0,
        }
    }
}

/// One alternating run from a fixed start.
#[derive(Debug, Clone, PartialEq)]
pub struct AscentRun {
    pub value: f64,
    pub witness: Vec<Vec<f64>>,
    /// Full sweeps over all slots.
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every single-slot update.
    pub trace: Vec<f64>,
}

fn check_order(a: &NonNegTensor, p: &Spaces) -> Result<()> {
    if a.order() != p.len() {
        return Err(OpNormError::OrderMismatch {
            order: a.order(),
            spaces: p.len(),
        });
    }
    Ok(())
}

/// Round-robin block ascent: each update replaces one slot's vector by the
/// Hölder maximizer against the others, so the objective never decreases.
/// Stops once a full sweep gains less than `tol` relative.
pub fn ascent_from(
    a: &NonNegTensor,
    p: &Spaces,
    start: Vec<Vec<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<AscentRun> {
    check_order(a, p)?;
    let mut witness = start;
    let mut prev = form_value(a, &witness)?;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut current = prev;
        for (k, pk) in p.iter().enumerate() {
            let c = partial_gradient(a, &witness, k)?;
            let update = holder_dual_argmax(&c, pk)?;
            witness[k] = update.x;
            current = update.value;
            trace.push(current);
        }
        if current - prev <= tol * current.abs() {
            converged = true;
            break;
        }
        prev = current;
    }
    let value = form_value(a, &witness)?;
    Ok(AscentRun {
        value,
        witness,
        iterations,
        converged,
        trace,
    })
}

fn normalized(mut x: Vec<f64>, p: &ExtReal) -> Vec<f64> {
    let norm = lp_norm(&x, p);
    x.iter_mut().for_each(|v| *v /= norm);
    x
}

/// Start vectors for restart `restart`: restart 0 is uniform, the rest are
/// positive random draws from stream `restart` of the seeded generator.
pub fn start_vectors(shape: &[usize], p: &Spaces, seed: u64, restart: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    shape
        .iter()
        .zip(p.iter())
        .map(|(&n, pk)| {
            let raw = if restart == 0 {
                vec![1.0; n]
            } else {
                (0..n).map(|_| rng.gen_range(0.05..1.0)).collect()
            };
            normalized(raw, pk)
        })
        .collect()
}

/// Exact norm when every `p_k ∈ {1, ∞}`: ∞ slots take the all-ones vector
/// and 1 slots a basis vector at the best cell.
fn extreme_exponent_norm(a: &NonNegTensor, p: &Spaces) -> Result<NormEstimate> {
    let mut t = a.clone();
    for (k, pk) in p.iter().enumerate().rev() {
        if pk.is_infinite() {
            t = t.contract(k, &vec![1.0; a.shape()[k]])?;
        }
    }
    let best = argmax(t.data());
    let cell = tensor::unravel(best, t.shape());
    let mut cells = cell.into_iter();
    let witness = p
        .iter()
        .zip(a.shape())
        .map(|(pk, &n)| {
            if pk.is_infinite() {
                vec![1.0; n]
            } else {
                basis(n, cells.next().expect("one cell index per 1-slot"))
            }
        })
        .collect();
    Ok(NormEstimate {
        value: t.data()[best],
        kind: EstimateKind::Exact,
        iterations: 0,
        restarts_used: 0,
        converged: true,
        witness,
        seed: 0,
    })
}

/// Lower bound on `‖A‖` (exact for order 1 and for `p ⊂ {1, ∞}`).
///
/// Restarts run in parallel; the best value wins, ties going to the lower
/// restart index, so the result does not depend on the thread count.
pub fn alternating_ascent(
    a: &NonNegTensor,
    p: &Spaces,
    opts: &AscentOptions,
) -> Result<NormEstimate> {
    check_order(a, p)?;
    if opts.restarts == 0 {
        return Err(OpNormError::NoRestarts);
    }
    if a.order() == 1 {
        let mut est = exact_norm_m1(a.data(), &p.as_slice()[0])?;
        est.seed = opts.seed;
        return Ok(est);
    }
    if a.is_zero() {
        return Ok(NormEstimate {
            value: 0.0,
            kind: EstimateKind::LowerBound,
            iterations: 0,
            restarts_used: 0,
            converged: true,
            witness: a.shape().iter().map(|&n| basis(n, 0)).collect(),
            seed: opts.seed,
        });
    }
    let extreme = p.iter().all(|pk| pk.is_infinite() || pk.to_f64() == 1.0);
    if extreme {
        let mut est = extreme_exponent_norm(a, p)?;
        est.seed = opts.seed;
        return Ok(est);
    }
    let runs = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let start = start_vectors(a.shape(), p, opts.seed, r);
            ascent_from(a, p, start, opts.tol, opts.max_iter)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        if run.value > runs[best].value {
            best = r;
        }
    }
    let run = runs.into_iter().nth(best).expect("restarts >= 1");
    Ok(NormEstimate {
        value: run.value,
        kind: EstimateKind::LowerBound,
        iterations: run.iterations,
        restarts_used: opts.restarts,
        converged: run.converged,
        witness: run.witness,
        seed: opts.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleEstimate {
    pub estimate: NormEstimate,
    /// Rigorous additive bound on `‖A‖ − estimate.value`.
    pub error_bound: f64,
    pub evaluations: u64,
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Number of grid points for one slot of length `n`.
pub fn grid_points(n: usize, resolution: usize) -> u128 {
    binomial((resolution + n - 1) as u128, (n - 1) as u128)
}

/// All non-negative integer vectors of length `n` summing to `total`.
fn compositions(n: usize, total: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() + 1 == n {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in (0..=left).rev() {
            cur.push(k);
            rec(n, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, total, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Unit vectors `k/‖k‖_p` over the lattice `{k ∈ ℕ^n : Σk = resolution}`.
/// Resolution 1 yields exactly the basis vectors.
fn slot_grid(n: usize, resolution: usize, p: &ExtReal) -> Vec<Vec<f64>> {
    compositions(n, resolution)
        .into_iter()
        .map(|k| normalized(k.into_iter().map(|v| v as f64).collect(), p))
        .collect()
}

/// Worst-case `ℓ_p` distance from a non-negative unit vector to the grid.
///
/// Project the target onto the simplex, round to the lattice by largest
/// remainder (every coordinate moves by less than `1/res`), then
/// renormalize; the renormalization at most doubles the distance.
fn slot_distance_bound(n: usize, resolution: usize, p: &ExtReal) -> f64 {
    let nf = n as f64;
    let inv_p = p.reciprocal().to_f64();
    let rounding = (2.0 * (nf - 1.0)).min(nf.powf(inv_p)) / resolution as f64;
    // ‖w‖_p ≥ n^{1/p − 1} on the simplex
    2.0 * rounding * nf.powf(1.0 - inv_p)
}

/// Exhaustive search over per-slot direction grids.
///
/// With `c = Σ_k dist_k`, multilinearity gives `‖A‖ − best ≤ c‖A‖`, hence
/// `‖A‖ − best ≤ min(c·best/(1−c), c·ΣA)` (the first term only when `c < 1`).
pub fn grid_oracle(
    a: &NonNegTensor,
    p: &Spaces,
    resolution: usize,
    cap: u64,
) -> Result<OracleEstimate> {
    check_order(a, p)?;
    if resolution == 0 {
        return Err(OpNormError::ZeroResolution);
    }
    let evaluations = a
        .shape()
        .iter()
        .map(|&n| grid_points(n, resolution))
        .fold(1u128, u128::saturating_mul);
    if evaluations > cap as u128 {
        return Err(OpNormError::GridTooLarge { evaluations, cap });
    }
    let grids: Vec<Vec<Vec<f64>>> = a
        .shape()
        .iter()
        .zip(p.iter())
        .map(|(&n, pk)| slot_grid(n, resolution, pk))
        .collect();

    let mut best = (f64::NEG_INFINITY, vec![0usize; a.order()]);
    let mut choice = vec![0usize; a.order()];
    search(a, &grids, 0, &mut choice, &mut best)?;

    let witness: Vec<Vec<f64>> = best
        .1
        .iter()
        .zip(&grids)
        .map(|(&i, g)| g[i].clone())
        .collect();
    let value = best.0.max(0.0);
    let c: f64 = a
        .shape()
        .iter()
        .zip(p.iter())
        .map(|(&n, pk)| slot_distance_bound(n, resolution, pk))
        .sum();
    let crude = c * a.sum();
    let error_bound = if c < 1.0 {
        (c * value / (1.0 - c)).min(crude)
    } else {
        crude
    };
    Ok(OracleEstimate {
        estimate: NormEstimate {
            value,
            kind: EstimateKind::LowerBound,
            iterations: 0,
            restarts_used: 0,
            converged: true,
            witness,
            seed: 0,
        },
        error_bound,
        evaluations: evaluations as u64,
    })
}

fn search(
    t: &NonNegTensor,
    grids: &[Vec<Vec<f64>>],
    slot: usize,
    choice: &mut [usize],
    best: &mut (f64, Vec<usize>),
) -> Result<()> {
    let grid = &grids[slot];
    if slot + 1 == grids.len() {
        let c = t.data();
        for (i, x) in grid.iter().enumerate() {
            let v: f64 = c.iter().zip(x).map(|(a, b)| a * b).sum();
            if v > best.0 {
                choice[slot] = i;
                *best = (v, choice.to_vec());
            }
        }
        return Ok(());
    }
    for (i, x) in grid.iter().enumerate() {
        choice[slot] = i;
        let next = t.contract(0, x)?;
        search(&next, grids, slot + 1, choice, best)?;
    }
    Ok(())
}
