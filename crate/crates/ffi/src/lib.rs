//! C ABI for `htrecover`.
//!
//! Objects are opaque heap handles created by `htr_*_new` style constructors
//! and released with the matching `htr_*_free`. Every fallible function returns
//! an [`HtrStatus`]; on failure [`htr_last_error_message`] describes the error
//! for the calling thread. Tensors cross the boundary as flat buffers in
//! column-major (first index fastest) order with 0-based multi-indices.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use htrecover::decomposition::{hosvd, truncate_hosvd, tt_svd, Format, RankTuple, TtTarget, TtTensor, TuckerTensor};
use htrecover::measurement::{DenseMap, LinearMap, MeasurementMap, SamplingMap};
use htrecover::recovery::{als, rgi, tiht, RecoveryConfig, StepRule, Termination};
use htrecover::{DenseTensor, Error, Shape};

/// Dense tensor.
pub struct HtrTensor(DenseTensor);
/// Tensor in TT format.
pub struct HtrTt(TtTensor);
/// Tensor in Tucker format.
pub struct HtrTucker(TuckerTensor);
/// Linear measurement map.
pub struct HtrMap(MeasurementMap);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    IndexOutOfRange = 4,
    InvalidRank = 5,
    SingularPoint = 6,
    Io = 7,
    /// A panic was caught at the boundary; the message has the details.
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtrFormat {
    Tucker = 0,
    Tt = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtrAlgorithm {
    Tiht = 0,
    Rgi = 1,
    Als = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HtrTermination {
    Converged = 0,
    MaxIterations = 1,
    Diverged = 2,
    Stalled = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HtrRecoveryOptions {
    pub max_iter: usize,
    /// Stop once `‖Aû − b‖ ≤ residual_tol·‖b‖`.
    pub residual_tol: f64,
    /// Fixed step size; `0` selects the steepest-descent rule.
    pub fixed_step: f64,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HtrRecoveryReport {
    pub iterations: usize,
    pub termination: HtrTermination,
    pub final_residual: f64,
    /// Geometric rate fitted to the residual tail, NaN if unavailable.
    pub rate_estimate: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: HtrStatus, message: impl Into<String>) -> HtrStatus {
    set_error(message.into());
    status
}

fn status_of(e: &Error) -> HtrStatus {
    match e {
        Error::IndexOutOfRange { .. } => HtrStatus::IndexOutOfRange,
        Error::ShapeMismatch { .. } => HtrStatus::ShapeMismatch,
        Error::InvalidArgument(_) => HtrStatus::InvalidArgument,
        Error::InvalidRank(_) => HtrStatus::InvalidRank,
        Error::SingularPoint { .. } => HtrStatus::SingularPoint,
        Error::Io { .. } | Error::Json(_) => HtrStatus::Io,
    }
}

type Outcome = std::result::Result<(), HtrStatus>;

fn lib<T>(r: htrecover::Result<T>) -> std::result::Result<T, HtrStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

/// Runs `f`, converting panics into [`HtrStatus::Internal`].
fn guard(f: impl FnOnce() -> Outcome) -> HtrStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HtrStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(HtrStatus::Internal, format!("panic: {msg}"))
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> std::result::Result<&'a T, HtrStatus> {
    p.as_ref().ok_or_else(|| fail(HtrStatus::NullPointer, format!("{what} is null")))
}

/// `len` elements at `p`; a null pointer is accepted only when `len == 0`.
unsafe fn view<'a, T>(p: *const T, len: usize, what: &str) -> std::result::Result<&'a [T], HtrStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(HtrStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn view_mut<'a, T>(p: *mut T, len: usize, what: &str) -> std::result::Result<&'a mut [T], HtrStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(HtrStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Outcome {
    if out.is_null() {
        return Err(fail(HtrStatus::NullPointer, "output handle is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copies `src` into a caller buffer of capacity `cap`, failing if it is short.
fn copy_out<T: Copy>(src: &[T], dst: &mut [T]) -> Outcome {
    if dst.len() < src.len() {
        return Err(fail(
            HtrStatus::InvalidArgument,
            format!("output buffer holds {} values, {} needed", dst.len(), src.len()),
        ));
    }
    dst[..src.len()].copy_from_slice(src);
    Ok(())
}

unsafe fn shape_from(dims: *const usize, order: usize) -> std::result::Result<Shape, HtrStatus> {
    lib(Shape::new(view(dims, order, "dims")?.to_vec()))
}

fn format_of(f: HtrFormat) -> Format {
    match f {
        HtrFormat::Tucker => Format::Tucker,
        HtrFormat::Tt => Format::Tt,
    }
}

/// Message for the last failed call on this thread, or null. The pointer stays
/// valid until the next `htr_*` call on the same thread.
#[no_mangle]
pub extern "C" fn htr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn htr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- dense tensors ----

/// New tensor of the given shape. `values` holds `∏ dims` entries in
/// column-major order, or is null for a zero tensor.
#[no_mangle]
pub unsafe extern "C" fn htr_tensor_new(
    dims: *const usize,
    order: usize,
    values: *const f64,
    out: *mut *mut HtrTensor,
) -> HtrStatus {
    guard(|| {
        let shape = shape_from(dims, order)?;
        let t = if values.is_null() {
            DenseTensor::zeros(shape)
        } else {
            let n = shape.len();
            lib(DenseTensor::from_vec(shape, view(values, n, "values")?.to_vec()))?
        };
        emit(out, HtrTensor(t))
    })
}

#[no_mangle]
pub unsafe extern "C" fn htr_tensor_free(t: *mut HtrTensor) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of modes, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn htr_tensor_order(t: *const HtrTensor) -> usize {
    t.as_ref().map_or(0, |t| t.0.order())
}

/// Number of entries, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn htr_tensor_len(t: *const HtrTensor) -> usize {
    t.as_ref().map_or(0, |t| t.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn htr_tensor_dims(t: *const HtrTensor, out: *mut usize, cap: usize) -> HtrStatus {
    guard(|| copy_out(deref(t, "tensor")?.0.dims(), view_mut(out, cap, "out")?))
}

/// Copies all entries (column-major) into `out`, which must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn htr_tensor_values(t: *const HtrTensor, out: *mut f64, cap: usize) -> HtrStatus {
    guard(|| copy_out(deref(t, "tensor")?.0.values(), view_mut(out, cap, "out")?))
}

#[no_mangle]
pub unsafe extern "C" fn htr_tensor_get(t: *const HtrTensor, index: *const usize, order: usize, out: *mut f64) -> HtrStatus {
    guard(|| {
        let v = lib(deref(t, "tensor")?.0.get(view(index, order, "index")?))?;
        *view_mut(out, 1, "out")?.first_mut().expect("one slot") = v;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn htr_tensor_norm(t: *const HtrTensor, out: *mut f64) -> HtrStatus {
    guard(|| {
        view_mut(out, 1, "out")?[0] = deref(t, "tensor")?.0.norm();
        Ok(())
    })
}

// ---- TT ----

/// TT-SVD of `t`. With `nranks == 0` the decomposition is exact; otherwise
/// `ranks` holds the `d − 1` target bond ranks.
#[no_mangle]
pub unsafe extern "C" fn htr_tt_svd(t: *const HtrTensor, ranks: *const usize, nranks: usize, out: *mut *mut HtrTt) -> HtrStatus {
    guard(|| {
        let u = &deref(t, "tensor")?.0;
        let target = match nranks {
            0 => TtTarget::Exact,
            _ => TtTarget::Ranks(lib(RankTuple::tt(view(ranks, nranks, "ranks")?.to_vec()))?),
        };
        emit(out, HtrTt(lib(tt_svd(u, &target))?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn htr_tt_free(t: *mut HtrTt) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Writes the `d + 1` ranks `1, r₁, …, r_{d−1}, 1`.
#[no_mangle]
pub unsafe extern "C" fn htr_tt_ranks(t: *const HtrTt, out: *mut usize, cap: usize) -> HtrStatus {
    guard(|| copy_out(&deref(t, "tt")?.0.full_ranks(), view_mut(out, cap, "out")?))
}

#[no_mangle]
pub unsafe extern "C" fn htr_tt_entry(t: *const HtrTt, index: *const usize, order: usize, out: *mut f64) -> HtrStatus {
    guard(|| {
        let v = lib(deref(t, "tt")?.0.entry(view(index, order, "index")?))?;
        view_mut(out, 1, "out")?[0] = v;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn htr_tt_to_dense(t: *const HtrTt, out: *mut *mut HtrTensor) -> HtrStatus {
    guard(|| emit(out, HtrTensor(deref(t, "tt")?.0.to_dense())))
}

// ---- Tucker ----

/// HOSVD of `t`, truncated to `ranks` (one per mode) unless `nranks == 0`.
#[no_mangle]
pub unsafe extern "C" fn htr_hosvd(t: *const HtrTensor, ranks: *const usize, nranks: usize, out: *mut *mut HtrTucker) -> HtrStatus {
    guard(|| {
        let u = &deref(t, "tensor")?.0;
        let h = match nranks {
            0 => hosvd(u),
            _ => lib(truncate_hosvd(u, &lib(RankTuple::tucker(view(ranks, nranks, "ranks")?.to_vec()))?))?,
        };
        emit(out, HtrTucker(h))
    })
}

#[no_mangle]
pub unsafe extern "C" fn htr_tucker_free(t: *mut HtrTucker) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Writes the `d` multilinear ranks.
#[no_mangle]
pub unsafe extern "C" fn htr_tucker_ranks(t: *const HtrTucker, out: *mut usize, cap: usize) -> HtrStatus {
    guard(|| copy_out(deref(t, "tucker")?.0.ranks().values(), view_mut(out, cap, "out")?))
}

#[no_mangle]
pub unsafe extern "C" fn htr_tucker_to_dense(t: *const HtrTucker, out: *mut *mut HtrTensor) -> HtrStatus {
    guard(|| emit(out, HtrTensor(deref(t, "tucker")?.0.to_dense())))
}

// ---- measurement maps ----

/// Gaussian map with i.i.d. `N(0, 1/m)` entries.
#[no_mangle]
pub unsafe extern "C" fn htr_map_gaussian(dims: *const usize, order: usize, m: usize, seed: u64, out: *mut *mut HtrMap) -> HtrStatus {
    guard(|| {
        let a = lib(DenseMap::gaussian(shape_from(dims, order)?, m, seed))?;
        emit(out, HtrMap(MeasurementMap::Dense(a)))
    })
}

/// Samples `m` distinct entries chosen uniformly at random.
#[no_mangle]
pub unsafe extern "C" fn htr_map_sampling(dims: *const usize, order: usize, m: usize, seed: u64, out: *mut *mut HtrMap) -> HtrStatus {
    guard(|| {
        let a = lib(SamplingMap::random(shape_from(dims, order)?, m, seed))?;
        emit(out, HtrMap(MeasurementMap::Sampling(a)))
    })
}

#[no_mangle]
pub unsafe extern "C" fn htr_map_free(a: *mut HtrMap) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Number of measurements, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn htr_map_measurements(a: *const HtrMap) -> usize {
    a.as_ref().map_or(0, |a| a.0.num_measurements())
}

/// `y = A u`; `y` must hold `m` values.
#[no_mangle]
pub unsafe extern "C" fn htr_map_apply(a: *const HtrMap, u: *const HtrTensor, y: *mut f64, m: usize) -> HtrStatus {
    guard(|| {
        let values = lib(deref(a, "map")?.0.apply(&deref(u, "tensor")?.0))?;
        copy_out(&values, view_mut(y, m, "y")?)
    })
}

/// `A* y` as a new tensor.
#[no_mangle]
pub unsafe extern "C" fn htr_map_adjoint(a: *const HtrMap, y: *const f64, m: usize, out: *mut *mut HtrTensor) -> HtrStatus {
    guard(|| {
        let t = lib(deref(a, "map")?.0.adjoint(view(y, m, "y")?))?;
        emit(out, HtrTensor(t))
    })
}

// ---- recovery ----

/// Defaults: 5000 iterations, tolerance 1e-6, steepest-descent steps, seed 0.
#[no_mangle]
pub extern "C" fn htr_recovery_options_default() -> HtrRecoveryOptions {
    HtrRecoveryOptions {
        max_iter: 5000,
        residual_tol: 1e-6,
        fixed_step: 0.0,
        seed: 0,
    }
}

/// Recovers a low-rank tensor from `b = A u`. `ranks` are bond ranks (`d − 1`)
/// for TT and mode ranks (`d`) for Tucker; RGI requires TT. `options` may be
/// null for the defaults. Failing to converge is not an error: inspect
/// `report.termination`.
#[no_mangle]
pub unsafe extern "C" fn htr_recover(
    algorithm: HtrAlgorithm,
    a: *const HtrMap,
    b: *const f64,
    m: usize,
    format: HtrFormat,
    ranks: *const usize,
    nranks: usize,
    options: *const HtrRecoveryOptions,
    out: *mut *mut HtrTensor,
    report: *mut HtrRecoveryReport,
) -> HtrStatus {
    guard(|| {
        let a = &deref(a, "map")?.0;
        let b = view(b, m, "b")?;
        let opts = options.as_ref().copied().unwrap_or_else(|| htr_recovery_options_default());
        let rank = lib(RankTuple::new(format_of(format), view(ranks, nranks, "ranks")?.to_vec()))?;
        let step = if opts.fixed_step == 0.0 {
            StepRule::Steepest
        } else {
            StepRule::Fixed(opts.fixed_step)
        };
        let config = RecoveryConfig::new(rank)
            .with_max_iter(opts.max_iter)
            .with_tol(opts.residual_tol)
            .with_step(step)
            .with_seed(opts.seed);
        let (dense, r) = match algorithm {
            HtrAlgorithm::Tiht => lib(tiht(a, b, &config)).map(|(v, r)| (v.to_dense(), r))?,
            HtrAlgorithm::Rgi => lib(rgi(a, b, &config)).map(|(v, r)| (v.to_dense(), r))?,
            HtrAlgorithm::Als => lib(als(a, b, &config, None)).map(|(v, r)| (v.to_dense(), r))?,
        };
        if !report.is_null() {
            *report = HtrRecoveryReport {
                iterations: r.iterations,
                termination: match r.termination {
                    Termination::Converged => HtrTermination::Converged,
                    Termination::MaxIterations => HtrTermination::MaxIterations,
                    Termination::Diverged => HtrTermination::Diverged,
                    Termination::Stalled => HtrTermination::Stalled,
                },
                final_residual: r.final_residual(),
                rate_estimate: r.rate_estimate.unwrap_or(f64::NAN),
            };
        }
        emit(out, HtrTensor(dense))
    })
}
