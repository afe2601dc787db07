//! Extremal coefficient families and the last-axis reduction.
//!
//! The diagonal family `B_n(x) = Σ_j x_j^{(1)}⋯x_j^{(m)}` attains `n^{1/δ}`
//! in the first case and `1` otherwise. The pinned family fixes its leading
//! slots (in σ order) at the first basis vector and runs the diagonal over
//! the remaining ones; pinning costs nothing in norm since `‖e_1‖_p = 1`, so
//! its norm is the diagonal norm of the trailing block.

use serde::Serialize;
use thiserror::Error;

use crate::exponents::{self, ExponentError, ExtReal, Perm, Spaces};
use crate::tensor::{NonNegTensor, TensorError};

/// Largest dense family the generators will materialize.
pub const MAX_DENSE_CELLS: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum ExtremalError {
    #[error("order must be at least 1")]
    ZeroOrder,
    #[error("size must be at least 1")]
    ZeroSize,
    #[error("pin count {pin_count} must be below the order {order}")]
    PinCount { pin_count: usize, order: usize },
    #[error("{n}^{m} cells exceeds the dense limit of {MAX_DENSE_CELLS}; use the closed forms")]
    TooLarge { m: usize, n: usize },
    #[error("permutation has length {got}, expected {expected}")]
    PermLength { expected: usize, got: usize },
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

pub type Result<T> = std::result::Result<T, ExtremalError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Diagonal,
    PinnedDiagonal,
}

/// Description of an extremal family member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExtremalFamily {
    pub kind: FamilyKind,
    pub m: usize,
    pub n: usize,
    pub pin_count: usize,
    pub sigma: Perm,
}

impl ExtremalFamily {
    pub fn diagonal(m: usize, n: usize) -> Self {
        ExtremalFamily {
            kind: FamilyKind::Diagonal,
            m,
            n,
            pin_count: 0,
            sigma: Perm::identity(m),
        }
    }

    pub fn pinned(m: usize, n: usize, pin_count: usize, sigma: Perm) -> Self {
        let kind = if pin_count == 0 {
            FamilyKind::Diagonal
        } else {
            FamilyKind::PinnedDiagonal
        };
        ExtremalFamily {
            kind,
            m,
            n,
            pin_count,
            sigma,
        }
    }

    pub fn materialize(&self) -> Result<NonNegTensor> {
        pinned_diagonal(self.m, self.n, self.pin_count, &self.sigma)
    }

    /// Exact operator norm for the source spaces `p`.
    pub fn norm(&self, p: &Spaces) -> Result<f64> {
        pinned_diagonal_norm_closed_form(self.n, p, self.pin_count, &self.sigma)
    }
}

fn check_dense(m: usize, n: usize) -> Result<()> {
    if m == 0 {
        return Err(ExtremalError::ZeroOrder);
    }
    if n == 0 {
        return Err(ExtremalError::ZeroSize);
    }
    let cells = (n as u128).checked_pow(m as u32);
    match cells {
        Some(c) if c <= MAX_DENSE_CELLS as u128 => Ok(()),
        _ => Err(ExtremalError::TooLarge { m, n }),
    }
}

/// `B_n`: ones on the full diagonal of an `n × ⋯ × n` tensor.
pub fn diagonal(m: usize, n: usize) -> Result<NonNegTensor> {
    pinned_diagonal(m, n, 0, &Perm::identity(m))
}

/// Ones where `j_{σ(l)} = 1` for the first `pin_count` levels and the
/// remaining σ-ordered indices all agree.
pub fn pinned_diagonal(m: usize, n: usize, pin_count: usize, sigma: &Perm) -> Result<NonNegTensor> {
    check_dense(m, n)?;
    if pin_count >= m {
        return Err(ExtremalError::PinCount {
            pin_count,
            order: m,
        });
    }
    if sigma.len() != m {
        return Err(ExtremalError::PermLength {
            expected: m,
            got: sigma.len(),
        });
    }
    let (pinned, free) = sigma.as_slice().split_at(pin_count);
    let lead = free[0];
    Ok(NonNegTensor::from_fn(vec![n; m], |idx| {
        let pinned_ok = pinned.iter().all(|&ax| idx[ax] == 0);
        let diag_ok = free.iter().all(|&ax| idx[ax] == idx[lead]);
        if pinned_ok && diag_ok {
            1.0
        } else {
            0.0
        }
    })?)
}

/// `n^{1/δ(p)}`, i.e. `n^{1 − Σ1/p}` when `Σ1/p < 1` and `1` otherwise.
pub fn diagonal_norm_closed_form(n: usize, p: &[ExtReal]) -> Result<f64> {
    let d = exponents::delta(p)?;
    Ok(pow_reciprocal(n, &d))
}

/// `n^{1/e}` with `n^{1/∞} = 1`.
pub fn pow_reciprocal(n: usize, e: &ExtReal) -> f64 {
    let r = e.reciprocal().to_f64();
    if r == 0.0 {
        1.0
    } else {
        (n as f64).powf(r)
    }
}

/// Norm of the pinned family: the diagonal norm over the σ-ordered trailing
/// spaces `p_{σ(pin_count+1)},…,p_{σ(m)}`.
pub fn pinned_diagonal_norm_closed_form(
    n: usize,
    p: &Spaces,
    pin_count: usize,
    sigma: &Perm,
) -> Result<f64> {
    if pin_count >= p.len() {
        return Err(ExtremalError::PinCount {
            pin_count,
            order: p.len(),
        });
    }
    let ordered = p.permuted(sigma)?;
    diagonal_norm_closed_form(n, &ordered.as_slice()[pin_count..])
}

/// Output of [`reduce`]: the `(m−1)`-linear coefficients and their spaces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reduction {
    pub tensor: NonNegTensor,
    pub spaces: Spaces,
    /// `δ(p_m)`, the power applied to every entry before summing.
    pub power: ExtReal,
}

/// `A(j_1,…,j_{m−1}) = Σ_{j_m} D(j_1,…,j_m)^{δ(p_m)}` on spaces
/// `r_i = p_i/δ(p_m)`. Always collapses the last axis.
pub fn reduce(d: &NonNegTensor, p: &Spaces) -> Result<Reduction> {
    if d.order() != p.len() {
        return Err(ExtremalError::PermLength {
            expected: d.order(),
            got: p.len(),
        });
    }
    let spaces = exponents::reduced_spaces(p)?;
    let last = p.as_slice().last().expect("non-empty");
    let power = exponents::delta(std::slice::from_ref(last))?;
    let raised = d.powf(power.to_f64())?;
    let n = *d.shape().last().expect("order >= 2");
    let tensor = raised.contract(d.order() - 1, &vec![1.0; n])?;
    Ok(Reduction {
        tensor,
        spaces,
        power,
    })
}
