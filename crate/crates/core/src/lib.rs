//! Critical exponents, anisotropic mixed norms and `ℓ_p` operator norms for
//! non-negative multilinear forms.
//!
//! A non-negative `m`-linear form on `ℓ_{p_1} × ⋯ × ℓ_{p_m}` is represented by
//! its finite coefficient tensor. The mixed norm nested in the order `σ` with
//! exponents `q` is bounded by the operator norm for every such form exactly
//! when `q_k ≥ δ(p_{σ(k)},…,p_{σ(m)})` for all `k`, where
//! `δ(s) = 1/(1 − Σ 1/s_i)` (or `∞` once the sum reaches 1).
//!
//! * [`exponents`]: exact exponent arithmetic, `δ`, admissibility.
//! * [`tensor`]: coefficient tensors and the mixed-norm evaluator.
//! * [`extremal`]: the diagonal and pinned-diagonal families, the reduction.
//! * [`opnorm`]: operator-norm estimation and a brute-force oracle.
//! * [`harness`]: sufficiency sweeps and necessity/sharpness experiments.
//! * [`cli`]: the `hlineq` command-line front end.

pub mod cli;
pub mod exponents;
pub mod extremal;
pub mod harness;
pub mod opnorm;
pub mod tensor;

pub use exponents::{
    admissible, conjugate, critical_exponents, delta, i0_index, reduced_spaces, Admissibility,
    ExponentError, Exponents, ExtReal, Perm, Scalar, Spaces,
};
pub use extremal::{diagonal, diagonal_norm_closed_form, pinned_diagonal, reduce, Reduction};
pub use harness::{
    bayart_check, falsify, sharpness_experiment, verify_random, SharpnessRow, Verdict,
    VerifyOptions, VerifyReport,
};
pub use opnorm::{
    alternating_ascent, grid_oracle, holder_dual_argmax, AscentOptions, NormEstimate,
};
pub use tensor::{mixed_norm, MixedNormSpec, NonNegTensor};
