//! Finite non-negative coefficient tensors and the anisotropic mixed norm.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exponents::{ExponentError, Exponents, Perm};

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape {shape:?} holds {expected} cells but data has {got}")]
    DataLength {
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("shape has a zero extent at axis {axis}")]
    EmptyAxis { axis: usize },
    #[error("entry {flat} at index {index:?} is {value}; entries must be finite and >= 0")]
    BadEntry {
        flat: usize,
        index: Vec<usize>,
        value: f64,
    },
    #[error("expected {expected} along {what}, got {got}")]
    Mismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("axis {axis} out of range for an order-{order} tensor")]
    AxisOutOfRange { axis: usize, order: usize },
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error("cannot read tensor file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed tensor JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, TensorError>;

/// Dense row-major array of non-negative coefficients `A(e_{j1},…,e_{jm})`.
///
/// Order 0 is allowed and holds a single scalar; it is what a full
/// contraction produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonNegTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl<'de> Deserialize<'de> for NonNegTensor {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = RawTensor::deserialize(de)?;
        NonNegTensor::new(raw.shape, raw.data).map_err(serde::de::Error::custom)
    }
}

impl NonNegTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if let Some(axis) = shape.iter().position(|&n| n == 0) {
            return Err(TensorError::EmptyAxis { axis });
        }
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(TensorError::DataLength {
                shape,
                expected,
                got: data.len(),
            });
        }
        if let Some(flat) = data.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(TensorError::BadEntry {
                flat,
                index: unravel(flat, &shape),
                value: data[flat],
            });
        }
        Ok(NonNegTensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let len = shape.iter().product();
        Self::new(shape, vec![0.0; len])
    }

    pub fn scalar(value: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![value])
    }

    /// Builds a tensor by evaluating `f` at every multi-index in row-major order.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(shape.iter().product());
        for_each_index(&shape, |idx| data.push(f(idx)));
        Self::new(shape, data)
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.shape)
    }

    pub fn get(&self, index: &[usize]) -> Option<f64> {
        if index.len() != self.order() || index.iter().zip(&self.shape).any(|(i, n)| i >= n) {
            return None;
        }
        let flat = index
            .iter()
            .zip(self.strides())
            .map(|(i, s)| i * s)
            .sum::<usize>();
        Some(self.data[flat])
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// `c·a` for `c ≥ 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.shape.clone(),
            self.data.iter().map(|v| v * c).collect(),
        )
    }

    /// Entrywise power `a^e`, used by the reduction.
    pub fn powf(&self, e: f64) -> Result<Self> {
        Self::new(
            self.shape.clone(),
            self.data
                .iter()
                .map(|&v| if v == 0.0 { 0.0 } else { v.powf(e) })
                .collect(),
        )
    }

    /// Appends `extra` zero slices along `axis`.
    pub fn zero_padded(&self, axis: usize, extra: usize) -> Result<Self> {
        self.check_axis(axis)?;
        let mut shape = self.shape.clone();
        shape[axis] += extra;
        let old = self.shape[axis];
        Self::from_fn(shape, |idx| {
            if idx[axis] < old {
                self.get(idx).expect("inside the original extent")
            } else {
                0.0
            }
        })
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.order() {
            return Err(TensorError::AxisOutOfRange {
                axis,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// Sums over `slot` weighted by `x`: `b[…] = Σ_j a[…, j, …]·x_j`.
    pub fn contract(&self, slot: usize, x: &[f64]) -> Result<Self> {
        self.check_axis(slot)?;
        let n = self.shape[slot];
        if x.len() != n {
            return Err(TensorError::Mismatch {
                what: "the contracted axis",
                expected: n,
                got: x.len(),
            });
        }
        if let Some(flat) = x.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(TensorError::BadEntry {
                flat,
                index: vec![flat],
                value: x[flat],
            });
        }
        let outer: usize = self.shape[..slot].iter().product();
        let inner: usize = self.shape[slot + 1..].iter().product();
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            let dst = &mut out[o * inner..(o + 1) * inner];
            for (j, &w) in x.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let src = &self.data[(o * n + j) * inner..(o * n + j + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += s * w;
                }
            }
        }
        let mut shape = self.shape.clone();
        shape.remove(slot);
        Self::new(shape, out)
    }

    /// Reorders axes so that axis `k` of the result is axis `σ(k)` of `self`.
    pub fn permute_axes(&self, sigma: &Perm) -> Result<Self> {
        if sigma.len() != self.order() {
            return Err(TensorError::Mismatch {
                what: "the permutation length",
                expected: self.order(),
                got: sigma.len(),
            });
        }
        if sigma.is_identity() {
            return Ok(self.clone());
        }
        let src_strides = self.strides();
        let shape: Vec<usize> = sigma.iter().map(|&i| self.shape[i]).collect();
        let moved: Vec<usize> = sigma.iter().map(|&i| src_strides[i]).collect();
        let mut data = Vec::with_capacity(self.len());
        for_each_index(&shape, |idx| {
            let flat: usize = idx.iter().zip(&moved).map(|(i, s)| i * s).sum();
            data.push(self.data[flat]);
        });
        Ok(NonNegTensor { shape, data })
    }

    /// Reads the `{"shape": [...], "data": [...]}` format.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: RawTensor = serde_json::from_str(s)?;
        Self::new(raw.shape, raw.data)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("tensor serialization is infallible")
    }
}

impl fmt::Display for NonNegTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tensor{:?}", self.shape)
    }
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * shape[k + 1];
    }
    s
}

pub(crate) fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = flat % shape[k];
        flat /= shape[k];
    }
    idx
}

/// Calls `f` on every multi-index of `shape` in row-major order.
pub(crate) fn for_each_index(shape: &[usize], mut f: impl FnMut(&[usize])) {
    if shape.contains(&0) {
        return;
    }
    let mut idx = vec![0; shape.len()];
    loop {
        f(&idx);
        let mut k = shape.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < shape[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Nesting order and exponents of a mixed norm: axis `σ(1)` outermost under
/// `q_1`, axis `σ(m)` innermost under `q_m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedNormSpec {
    pub sigma: Perm,
    pub q: Exponents,
}

impl MixedNormSpec {
    pub fn new(sigma: Perm, q: Exponents) -> Result<Self> {
        if sigma.len() != q.len() {
            return Err(TensorError::Mismatch {
                what: "the exponent tuple",
                expected: sigma.len(),
                got: q.len(),
            });
        }
        Ok(MixedNormSpec { sigma, q })
    }

    pub fn identity(q: Exponents) -> Self {
        MixedNormSpec {
            sigma: Perm::identity(q.len()),
            q,
        }
    }
}

/// `(Σ v^q)^{1/q}`, or `max v` for `q = ∞`.
///
/// The direct power sum is tried first; if it overflows or underflows the
/// sum is recomputed relative to the largest entry, which keeps every term
/// in `[0, 1]`.
pub fn lq_norm(values: &[f64], q: f64) -> f64 {
    let max = values.iter().copied().fold(0.0, f64::max);
    if q.is_infinite() || max == 0.0 {
        return max;
    }
    if q == 1.0 {
        let s: f64 = values.iter().sum();
        if s.is_finite() {
            return s;
        }
    }
    let direct: f64 = values.iter().map(|v| v.powf(q)).sum();
    if direct.is_finite() && direct >= f64::MIN_POSITIVE {
        return direct.powf(1.0 / q);
    }
    scaled_lq_norm(values, q, max)
}

fn scaled_lq_norm(values: &[f64], q: f64, max: f64) -> f64 {
    // every term lies in [0, 1] and the largest is exactly 1
    let rel: f64 = values.iter().map(|v| (v / max).powf(q)).sum();
    max * rel.powf(1.0 / q)
}

/// Collapses the last axis with exponent `q`.
fn reduce_last_axis(shape: &[usize], data: &[f64], q: f64) -> (Vec<usize>, Vec<f64>) {
    let (&n, rest) = shape.split_last().expect("order >= 1");
    let out = data.chunks_exact(n).map(|row| lq_norm(row, q)).collect();
    (rest.to_vec(), out)
}

/// Nested mixed norm: innermost level is axis `σ(m)` under `q_m`, outermost
/// is axis `σ(1)` under `q_1`; an infinite exponent takes the supremum.
pub fn mixed_norm(a: &NonNegTensor, spec: &MixedNormSpec) -> Result<f64> {
    if spec.q.len() != a.order() || spec.sigma.len() != a.order() {
        return Err(TensorError::Mismatch {
            what: "the mixed-norm spec",
            expected: a.order(),
            got: spec.q.len(),
        });
    }
    let b = a.permute_axes(&spec.sigma)?;
    let q = spec.q.to_f64();
    let mut shape = b.shape;
    let mut data = b.data;
    for &qk in q.iter().rev() {
        (shape, data) = reduce_last_axis(&shape, &data, qk);
    }
    debug_assert_eq!(data.len(), 1);
    Ok(data[0])
}
