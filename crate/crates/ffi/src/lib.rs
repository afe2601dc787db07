//! C ABI over `hlineq`.
//!
//! Exponents cross the boundary as `double`, with `INFINITY` standing for ∞;
//! they are handled in floating-point mode. Permutations are 1-based arrays,
//! and a null `sigma` means the identity. Every function returns an
//! [`HlStatus`]; on failure the message is available from
//! [`hl_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use hlineq::opnorm::{self, AscentOptions};
use hlineq::{
    extremal, Admissibility, Exponents, ExtReal, MixedNormSpec, NonNegTensor, Perm, Spaces,
};

/// Status codes returned by every `hl_*` function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Panic = 4,
}

/// Opaque non-negative tensor handle. Free with [`hl_tensor_free`].
pub struct HlTensor {
    inner: NonNegTensor,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(HlStatus, String);

impl Failure {
    fn invalid(e: impl std::fmt::Display) -> Self {
        Failure(HlStatus::InvalidArgument, e.to_string())
    }

    fn null(what: &str) -> Self {
        Failure(HlStatus::NullPointer, format!("{what} is null"))
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HlStatus {
    let (status, message) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (HlStatus::Ok, String::new()),
        Ok(Err(Failure(s, m))) => (s, m),
        Err(_) => (HlStatus::Panic, "panic inside hlineq".to_string()),
    };
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
    status
}

unsafe fn slice_in<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn tensor_ref<'a>(t: *const HlTensor) -> Result<&'a NonNegTensor, Failure> {
    t.as_ref()
        .map(|t| &t.inner)
        .ok_or_else(|| Failure::null("tensor"))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null(what));
    }
    out.write(value);
    Ok(())
}

fn ext_values(v: &[f64]) -> Result<Vec<ExtReal>, Failure> {
    v.iter()
        .map(|&x| ExtReal::float(x).map_err(Failure::invalid))
        .collect()
}

unsafe fn spaces_in(p: *const f64, m: usize) -> Result<Spaces, Failure> {
    Spaces::new(ext_values(slice_in(p, m, "p")?)?).map_err(Failure::invalid)
}

unsafe fn exponents_in(q: *const f64, m: usize) -> Result<Exponents, Failure> {
    Exponents::new(ext_values(slice_in(q, m, "q")?)?).map_err(Failure::invalid)
}

unsafe fn perm_in(sigma: *const usize, m: usize) -> Result<Perm, Failure> {
    if sigma.is_null() {
        return Ok(Perm::identity(m));
    }
    Perm::from_one_based(slice_in(sigma, m, "sigma")?).map_err(Failure::invalid)
}

fn boxed(t: NonNegTensor) -> *mut HlTensor {
    Box::into_raw(Box::new(HlTensor { inner: t }))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn hl_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a tensor from a row-major buffer of `len` entries.
///
/// # Safety
/// `shape` must hold `order` values and `data` `len` values; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn hl_tensor_new(
    shape: *const usize,
    order: usize,
    data: *const f64,
    len: usize,
    out: *mut *mut HlTensor,
) -> HlStatus {
    guard(|| {
        let shape = slice_in(shape, order, "shape")?.to_vec();
        let data = slice_in(data, len, "data")?.to_vec();
        let t = NonNegTensor::new(shape, data).map_err(Failure::invalid)?;
        write_out(out, boxed(t), "out")
    })
}

/// Parses `{"shape":[..],"data":[..]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hl_tensor_from_json(
    json: *const c_char,
    out: *mut *mut HlTensor,
) -> HlStatus {
    guard(|| {
        if json.is_null() {
            return Err(Failure::null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(Failure::invalid)?;
        let t = NonNegTensor::from_json_str(text).map_err(Failure::invalid)?;
        write_out(out, boxed(t), "out")
    })
}

/// # Safety
/// `t` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hl_tensor_free(t: *mut HlTensor) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of axes, or 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hl_tensor_order(t: *const HlTensor) -> usize {
    t.as_ref().map_or(0, |t| t.inner.order())
}

/// Copies the shape into `out` (capacity `cap`).
///
/// # Safety
/// `t` must be a live handle and `out` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn hl_tensor_shape(
    t: *const HlTensor,
    out: *mut usize,
    cap: usize,
) -> HlStatus {
    guard(|| copy_out(tensor_ref(t)?.shape(), out, cap))
}

/// Number of entries, or 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hl_tensor_len(t: *const HlTensor) -> usize {
    t.as_ref().map_or(0, |t| t.inner.len())
}

/// Copies the row-major entries into `out` (capacity `cap`).
///
/// # Safety
/// `t` must be a live handle and `out` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn hl_tensor_data(t: *const HlTensor, out: *mut f64, cap: usize) -> HlStatus {
    guard(|| copy_out(tensor_ref(t)?.data(), out, cap))
}

unsafe fn copy_out<T: Copy>(src: &[T], out: *mut T, cap: usize) -> Result<(), Failure> {
    if cap < src.len() {
        return Err(Failure(
            HlStatus::BufferTooSmall,
            format!("need {} slots, got {cap}", src.len()),
        ));
    }
    if src.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(Failure::null("out"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// δ of `p[0..m]`; `INFINITY` when Σ1/p ≥ 1.
///
/// # Safety
/// `p` must hold `m` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hl_delta(p: *const f64, m: usize, out: *mut f64) -> HlStatus {
    guard(|| {
        let p = ext_values(slice_in(p, m, "p")?)?;
        let d = hlineq::delta(&p).map_err(Failure::invalid)?;
        write_out(out, d.to_f64(), "out")
    })
}

/// Critical exponents for `(p, σ)` written to `out[0..m]`.
///
/// # Safety
/// `p` and `out` must hold `m` values; `sigma` must be null or hold `m`.
#[no_mangle]
pub unsafe extern "C" fn hl_critical_exponents(
    p: *const f64,
    sigma: *const usize,
    m: usize,
    out: *mut f64,
) -> HlStatus {
    guard(|| {
        let q = hlineq::critical_exponents(&spaces_in(p, m)?, &perm_in(sigma, m)?)
            .map_err(Failure::invalid)?;
        copy_out(&q.to_f64(), out, m)
    })
}

/// Writes 0 to `out_level` when `q` is admissible for `(p, σ)`, otherwise
/// the 1-based level `k` of the first violated condition.
///
/// # Safety
/// `p` and `q` must hold `m` values; `sigma` must be null or hold `m`;
/// `out_level` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hl_admissible(
    p: *const f64,
    sigma: *const usize,
    q: *const f64,
    m: usize,
    out_level: *mut usize,
) -> HlStatus {
    guard(|| {
        let verdict =
            hlineq::admissible(&spaces_in(p, m)?, &perm_in(sigma, m)?, &exponents_in(q, m)?)
                .map_err(Failure::invalid)?;
        let level = match verdict {
            Admissibility::Admissible => 0,
            Admissibility::Fails { level } => level + 1,
        };
        write_out(out_level, level, "out_level")
    })
}

/// Mixed norm with nesting `σ` (outermost first) and exponents `q`, one per
/// axis of `t`.
///
/// # Safety
/// `t` must be a live handle; `q` must hold `order(t)` values; `sigma` must
/// be null or hold `order(t)`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hl_mixed_norm(
    t: *const HlTensor,
    sigma: *const usize,
    q: *const f64,
    out: *mut f64,
) -> HlStatus {
    guard(|| {
        let a = tensor_ref(t)?;
        let m = a.order();
        let spec = MixedNormSpec::new(perm_in(sigma, m)?, exponents_in(q, m)?)
            .map_err(Failure::invalid)?;
        let v = hlineq::mixed_norm(a, &spec).map_err(Failure::invalid)?;
        write_out(out, v, "out")
    })
}

/// Lower estimate of the operator norm on `ℓ_{p_1} × ⋯ × ℓ_{p_m}` by
/// alternating ascent. `out_exact` is set when the value is exact.
///
/// # Safety
/// `t` must be a live handle; `p` must hold `order(t)` values; `out_value`
/// must be writable and `out_exact` null or writable.
#[no_mangle]
pub unsafe extern "C" fn hl_opnorm(
    t: *const HlTensor,
    p: *const f64,
    restarts: usize,
    seed: u64,
    out_value: *mut f64,
    out_exact: *mut bool,
) -> HlStatus {
    guard(|| {
        let a = tensor_ref(t)?;
        let p = spaces_in(p, a.order())?;
        let opts = AscentOptions {
            restarts,
            seed,
            ..AscentOptions::default()
        };
        let est = opnorm::alternating_ascent(a, &p, &opts).map_err(Failure::invalid)?;
        if !out_exact.is_null() {
            out_exact.write(est.kind == opnorm::EstimateKind::Exact);
        }
        write_out(out_value, est.value, "out_value")
    })
}

/// Collapses the last axis: `A = Σ_j D^{δ(p_m)}`. Writes the new handle to
/// `out` and the `m−1` reduced exponents to `out_spaces`.
///
/// # Safety
/// `t` must be a live handle of order `m ≥ 2`; `p` must hold `m` values;
/// `out_spaces` must hold `m−1`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hl_reduce(
    t: *const HlTensor,
    p: *const f64,
    out: *mut *mut HlTensor,
    out_spaces: *mut f64,
) -> HlStatus {
    guard(|| {
        let d = tensor_ref(t)?;
        let p = spaces_in(p, d.order())?;
        let red = extremal::reduce(d, &p).map_err(Failure::invalid)?;
        let r: Vec<f64> = red.spaces.iter().map(ExtReal::to_f64).collect();
        copy_out(&r, out_spaces, r.len())?;
        write_out(out, boxed(red.tensor), "out")
    })
}

/// The diagonal `B_n` of order `m`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hl_diagonal(m: usize, n: usize, out: *mut *mut HlTensor) -> HlStatus {
    guard(|| {
        let t = extremal::diagonal(m, n).map_err(Failure::invalid)?;
        write_out(out, boxed(t), "out")
    })
}

/// Diagonal with the first `pin_count` σ-levels fixed at index 1.
///
/// # Safety
/// `sigma` must be null or hold `m` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hl_pinned_diagonal(
    m: usize,
    n: usize,
    pin_count: usize,
    sigma: *const usize,
    out: *mut *mut HlTensor,
) -> HlStatus {
    guard(|| {
        let t = extremal::pinned_diagonal(m, n, pin_count, &perm_in(sigma, m)?)
            .map_err(Failure::invalid)?;
        write_out(out, boxed(t), "out")
    })
}

/// Closed-form norm of `B_n` on `ℓ_{p_1} × ⋯ × ℓ_{p_m}`.
///
/// # Safety
/// `p` must hold `m` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hl_diagonal_norm(
    n: usize,
    p: *const f64,
    m: usize,
    out: *mut f64,
) -> HlStatus {
    guard(|| {
        let p = spaces_in(p, m)?;
        let v = extremal::diagonal_norm_closed_form(n, p.as_slice()).map_err(Failure::invalid)?;
        write_out(out, v, "out")
    })
}
