//! C ABI over the `ltlp` library.
//!
//! Signals and references are opaque heap handles released with their
//! matching `_free` function. Every fallible call returns an [`LtlpStatus`];
//! the message of the most recent failure on the calling thread is available
//! from [`ltlp_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use ndarray::{Array1, Array2};

use ltlp::embedding::{build_reference, embed, linear_distance, EmbedConfig, ReferenceKind, ReferenceSignal};
use ltlp::measures::{make_uniform, DiscreteMeasure, EmbeddingVector, TLpSignal};
use ltlp::metric::tlp_distance;
use ltlp::solvers::{SinkhornConfig, Solver, AUTO_EXACT_THRESHOLD};
use ltlp::Error;

/// Result codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LtlpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    DimensionMismatch = 3,
    MassMismatch = 4,
    SolverFailure = 5,
    NumericalOverflow = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LtlpSolverKind {
    Exact = 0,
    Sinkhorn = 1,
    /// Exact on small supports, Sinkhorn above the size threshold.
    Auto = 2,
}

/// Transport options shared by the distance and embedding calls.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LtlpOptions {
    pub p: f64,
    pub channel_scale: f64,
    pub solver: LtlpSolverKind,
    /// Entropic regularization, ignored by the exact solver.
    pub epsilon: f64,
    /// Nonzero selects log-domain Sinkhorn iterations.
    pub log_domain: u8,
}

/// Opaque signal: a weighted point cloud with values at each point.
pub struct LtlpSignal(TLpSignal);

/// Opaque embedding reference built from a set of signals.
pub struct LtlpReference(ReferenceSignal);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LtlpStatus {
    match e {
        Error::DimMismatch(..)
        | Error::ChannelMismatch(..)
        | Error::ShapeMismatch
        | Error::GridMismatch
        | Error::LengthMismatch(..)
        | Error::CostShape(..) => LtlpStatus::DimensionMismatch,
        Error::MassMismatch(..) => LtlpStatus::MassMismatch,
        Error::SolverFailure(_) | Error::DegenerateRow(_) => LtlpStatus::SolverFailure,
        Error::SuggestLogDomain => LtlpStatus::NumericalOverflow,
        _ => LtlpStatus::InvalidInput,
    }
}

fn guard<F>(f: F) -> LtlpStatus
where
    F: FnOnce() -> Result<(), LtlpFailure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LtlpStatus::Ok,
        Ok(Err(LtlpFailure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside ltlp".into());
            LtlpStatus::Panic
        }
    }
}

struct LtlpFailure(LtlpStatus, String);

impl From<Error> for LtlpFailure {
    fn from(e: Error) -> Self {
        LtlpFailure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> LtlpFailure {
    LtlpFailure(LtlpStatus::NullPointer, format!("{what} is null"))
}

fn config(opts: &LtlpOptions) -> EmbedConfig {
    let sk = SinkhornConfig {
        log_domain: opts.log_domain != 0,
        ..SinkhornConfig::with_epsilon(opts.epsilon)
    };
    let solver = match opts.solver {
        LtlpSolverKind::Exact => Solver::Exact,
        LtlpSolverKind::Sinkhorn => Solver::Sinkhorn(sk),
        LtlpSolverKind::Auto => Solver::Auto {
            threshold: AUTO_EXACT_THRESHOLD,
            sinkhorn: sk,
        },
    };
    EmbedConfig {
        p: opts.p,
        solver,
        channel_scale: opts.channel_scale,
    }
}

unsafe fn options<'a>(opts: *const LtlpOptions) -> Result<&'a LtlpOptions, LtlpFailure> {
    opts.as_ref().ok_or_else(|| null("options"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ltlp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Defaults: p = 2, channel scale 1, exact solver, epsilon 0.01.
#[no_mangle]
pub extern "C" fn ltlp_options_default() -> LtlpOptions {
    LtlpOptions {
        p: 2.0,
        channel_scale: 1.0,
        solver: LtlpSolverKind::Exact,
        epsilon: 1e-2,
        log_domain: 0,
    }
}

/// Copy the last error message of this thread into `buf`, truncating and
/// always NUL-terminating when `len > 0`. Returns the length the full
/// message needs including the terminator, or 0 if there is none.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ltlp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// Build a signal from `n` points in `d` dimensions (row-major), optional
/// weights (null means uniform) and `n` rows of `m` channel values.
///
/// # Safety
/// `points` must hold `n * d` doubles, `weights` `n` doubles or be null,
/// `values` `n * m` doubles (or be null when `m == 0`); `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ltlp_signal_new(
    points: *const f64,
    weights: *const f64,
    values: *const f64,
    n: usize,
    d: usize,
    m: usize,
    out: *mut *mut LtlpSignal,
) -> LtlpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if points.is_null() {
            return Err(null("points"));
        }
        if values.is_null() && m > 0 {
            return Err(null("values"));
        }
        let pts = Array2::from_shape_vec((n, d), slice::from_raw_parts(points, n * d).to_vec())
            .map_err(|e| LtlpFailure(LtlpStatus::DimensionMismatch, e.to_string()))?;
        let measure = if weights.is_null() {
            make_uniform(pts)?
        } else {
            DiscreteMeasure::new(pts, Array1::from(slice::from_raw_parts(weights, n).to_vec()))?
        };
        let vals = if m == 0 {
            Array2::zeros((n, 0))
        } else {
            Array2::from_shape_vec((n, m), slice::from_raw_parts(values, n * m).to_vec())
                .map_err(|e| LtlpFailure(LtlpStatus::DimensionMismatch, e.to_string()))?
        };
        let signal = TLpSignal::new(measure, vals)?;
        *out = Box::into_raw(Box::new(LtlpSignal(signal)));
        Ok(())
    })
}

/// Release a signal. Null is ignored.
///
/// # Safety
/// `signal` must come from [`ltlp_signal_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ltlp_signal_free(signal: *mut LtlpSignal) {
    if !signal.is_null() {
        drop(Box::from_raw(signal));
    }
}

/// TLp distance between two signals.
///
/// # Safety
/// All pointers must be valid handles or outputs.
#[no_mangle]
pub unsafe extern "C" fn ltlp_tlp_distance(
    a: *const LtlpSignal,
    b: *const LtlpSignal,
    opts: *const LtlpOptions,
    out: *mut f64,
) -> LtlpStatus {
    guard(|| {
        let a = a.as_ref().ok_or_else(|| null("a"))?;
        let b = b.as_ref().ok_or_else(|| null("b"))?;
        let cfg = config(options(opts)?);
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = tlp_distance(&a.0, &b.0, cfg.p, &cfg.solver, cfg.channel_scale)?;
        Ok(())
    })
}

/// Mean reference of `count` signals sharing one support.
///
/// # Safety
/// `signals` must point to `count` valid handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ltlp_reference_new(
    signals: *const *const LtlpSignal,
    count: usize,
    out: *mut *mut LtlpReference,
) -> LtlpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if signals.is_null() {
            return Err(null("signals"));
        }
        let handles = slice::from_raw_parts(signals, count);
        let owned = handles
            .iter()
            .map(|h| h.as_ref().map(|s| s.0.clone()).ok_or_else(|| null("signal")))
            .collect::<Result<Vec<_>, _>>()?;
        let reference = build_reference(&owned, ReferenceKind::Tlp)?;
        *out = Box::into_raw(Box::new(LtlpReference(reference)));
        Ok(())
    })
}

/// Release a reference. Null is ignored.
///
/// # Safety
/// `reference` must come from [`ltlp_reference_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ltlp_reference_free(reference: *mut LtlpReference) {
    if !reference.is_null() {
        drop(Box::from_raw(reference));
    }
}

/// Number of doubles in an embedding against `reference`.
///
/// # Safety
/// `reference` must be a valid handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ltlp_embedding_len(reference: *const LtlpReference, out: *mut usize) -> LtlpStatus {
    guard(|| {
        let r = reference.as_ref().ok_or_else(|| null("reference"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = r.0.signal();
        *out = s.len() * (s.measure().dim() + s.channels());
        Ok(())
    })
}

/// Write the linear embedding of `signal` into `buf`: spatial block then
/// channel block, each row-major over reference atoms.
///
/// # Safety
/// Handles must be valid and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ltlp_embed(
    reference: *const LtlpReference,
    signal: *const LtlpSignal,
    opts: *const LtlpOptions,
    buf: *mut f64,
    len: usize,
) -> LtlpStatus {
    guard(|| {
        let r = reference.as_ref().ok_or_else(|| null("reference"))?;
        let s = signal.as_ref().ok_or_else(|| null("signal"))?;
        let cfg = config(options(opts)?);
        if buf.is_null() {
            return Err(null("buf"));
        }
        let flat = embed(&s.0, &r.0, &cfg)?.to_flat();
        if flat.len() > len {
            return Err(LtlpFailure(
                LtlpStatus::BufferTooSmall,
                format!("embedding needs {} doubles, buffer holds {len}", flat.len()),
            ));
        }
        slice::from_raw_parts_mut(buf, flat.len()).copy_from_slice(&flat);
        Ok(())
    })
}

/// Linear distance between two embeddings produced against `reference`.
///
/// # Safety
/// `a` and `b` must hold `len` doubles; handles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ltlp_linear_distance(
    reference: *const LtlpReference,
    a: *const f64,
    b: *const f64,
    len: usize,
    p: f64,
    out: *mut f64,
) -> LtlpStatus {
    guard(|| {
        let r = reference.as_ref().ok_or_else(|| null("reference"))?;
        if a.is_null() || b.is_null() {
            return Err(null("embedding"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = r.0.signal();
        let (n, d, m) = (s.len(), s.measure().dim(), s.channels());
        let w = s.measure().weights().to_owned();
        let ea = EmbeddingVector::from_flat(slice::from_raw_parts(a, len), n, d, m, w.clone(), p)?;
        let eb = EmbeddingVector::from_flat(slice::from_raw_parts(b, len), n, d, m, w, p)?;
        *out = linear_distance(&ea, &eb)?;
        Ok(())
    })
}
