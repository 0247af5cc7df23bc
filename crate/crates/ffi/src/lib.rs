//! C ABI over the dynstrength library.
//!
//! Gates live behind the opaque `DsGate` handle. Every fallible call returns a `DsStatus`
//! and writes its result through an out pointer; on failure the message is available from
//! `ds_last_error` on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dynstrength::canonical::CanonicalReport;
use dynstrength::entangle::k_e;
use dynstrength::error::Error;
use dynstrength::matcore::linalg::{c, is_unitary};
use dynstrength::matcore::{ComplexMatrix, GateSpec, Partition};
use dynstrength::metric::k_hs_two_qubit;
use dynstrength::optim::OptimizerConfig;
use dynstrength::schmidt::{k_har, k_sch};

/// Deviation `‖U†U − I‖_HS` accepted for matrices passed in from C.
const UNITARY_TOL: f64 = 1e-8;

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    NotUnitary = 4,
    Parse = 5,
    Numerical = 6,
    Io = 7,
    Panic = 8,
}

/// Opaque bipartite gate: a unitary together with its cut.
pub struct DsGate {
    matrix: ComplexMatrix,
    partition: Partition,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> DsStatus {
    match e {
        Error::Dimension(_) => DsStatus::Dimension,
        Error::NotUnitary { .. } => DsStatus::NotUnitary,
        Error::InvalidArgument(_) | Error::SchmidtClass { .. } => DsStatus::InvalidArgument,
        Error::UnknownGate(_) | Error::Parse(_) | Error::Json(_) | Error::Csv(_) => DsStatus::Parse,
        Error::Numerical(_) => DsStatus::Numerical,
        Error::Io(_) => DsStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (DsStatus, String)>) -> DsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DsStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (DsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (DsStatus, String) {
    (DsStatus::NullPointer, format!("`{name}` is null"))
}

/// Reads a NUL-terminated UTF-8 string.
///
/// # Safety
/// `p` must be null or point to a NUL-terminated string.
unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, (DsStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (DsStatus::Parse, format!("`{name}` is not valid UTF-8")))
}

/// # Safety
/// `g` must be null or a live handle from this library.
unsafe fn gate_ref<'a>(g: *const DsGate) -> Result<&'a DsGate, (DsStatus, String)> {
    g.as_ref().ok_or_else(|| null("gate"))
}

/// Writes `v` through `out`.
///
/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn put<T>(out: *mut T, v: T) -> Result<(), (DsStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(v);
    Ok(())
}

/// Message of the last failure on this thread, or null. Owned by the library; valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ds_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ds_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a gate from a spec such as `cnot`, `up:0.3` or `haar:4,7`. `partition` is
/// `dA:dB` or null for the gate's natural cut.
///
/// # Safety
/// `spec` and a non-null `partition` must be NUL-terminated strings; `out` must be valid
/// for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ds_gate_from_spec(
    spec: *const c_char,
    partition: *const c_char,
    out: *mut *mut DsGate,
) -> DsStatus {
    guard(|| {
        let spec: GateSpec = read_str(spec, "spec")?.parse().map_err(lib_err)?;
        let matrix = spec.matrix().map_err(lib_err)?;
        let partition = if partition.is_null() {
            spec.default_partition()
                .ok_or_else(|| (DsStatus::InvalidArgument, "gate needs an explicit partition".to_string()))?
        } else {
            read_str(partition, "partition")?.parse().map_err(lib_err)?
        };
        partition.check_square(&matrix).map_err(lib_err)?;
        put(out, Box::into_raw(Box::new(DsGate { matrix, partition })))
    })
}

/// Builds a gate from a row-major matrix of side `d_a·d_b` given as separate real and
/// imaginary arrays. Fails unless the matrix is unitary.
///
/// # Safety
/// `re` and `im` must each hold `(d_a·d_b)²` doubles; `out` must be valid for a pointer
/// write.
#[no_mangle]
pub unsafe extern "C" fn ds_gate_from_matrix(
    re: *const f64,
    im: *const f64,
    d_a: usize,
    d_b: usize,
    out: *mut *mut DsGate,
) -> DsStatus {
    guard(|| {
        if re.is_null() {
            return Err(null("re"));
        }
        if im.is_null() {
            return Err(null("im"));
        }
        if d_a == 0 || d_b == 0 {
            return Err((DsStatus::Dimension, "dimensions must be positive".into()));
        }
        let d = d_a
            .checked_mul(d_b)
            .filter(|d| d.checked_mul(*d).is_some())
            .ok_or_else(|| (DsStatus::Dimension, "dimension overflow".to_string()))?;
        let re = std::slice::from_raw_parts(re, d * d);
        let im = std::slice::from_raw_parts(im, d * d);
        let matrix = ComplexMatrix::from_fn(d, d, |i, j| c(re[i * d + j], im[i * d + j]));
        if !is_unitary(&matrix, UNITARY_TOL) {
            return Err((DsStatus::NotUnitary, "matrix is not unitary".into()));
        }
        put(out, Box::into_raw(Box::new(DsGate { matrix, partition: Partition::new(d_a, d_b) })))
    })
}

/// Releases a gate. Null is ignored.
///
/// # Safety
/// `g` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ds_gate_free(g: *mut DsGate) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Writes the subsystem dimensions of a gate.
///
/// # Safety
/// `g` must be a live handle; `d_a` and `d_b` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ds_gate_dims(g: *const DsGate, d_a: *mut usize, d_b: *mut usize) -> DsStatus {
    guard(|| {
        let g = gate_ref(g)?;
        if d_b.is_null() {
            return Err(null("d_b"));
        }
        put(d_a, g.partition.d_a)?;
        put(d_b, g.partition.d_b)
    })
}

/// Exact K_Har, the log₂ Schmidt number.
///
/// # Safety
/// `g` must be a live handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ds_k_har(g: *const DsGate, out: *mut f64) -> DsStatus {
    guard(|| {
        let g = gate_ref(g)?;
        put(out, k_har(&g.matrix, g.partition).map_err(lib_err)?)
    })
}

/// Exact K_Sch, the Schmidt-coefficient entropy.
///
/// # Safety
/// `g` must be a live handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ds_k_sch(g: *const DsGate, out: *mut f64) -> DsStatus {
    guard(|| {
        let g = gate_ref(g)?;
        put(out, k_sch(&g.matrix, g.partition).map_err(lib_err)?)
    })
}

/// Numerical lower bound on K_E with equal-size ancillas. `restarts` of zero keeps the
/// library default.
///
/// # Safety
/// `g` must be a live handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ds_k_e(g: *const DsGate, seed: u64, restarts: usize, out: *mut f64) -> DsStatus {
    guard(|| {
        let g = gate_ref(g)?;
        let mut cfg = OptimizerConfig::with_seed(seed);
        if restarts > 0 {
            cfg.restarts = restarts;
        }
        put(out, k_e(&g.matrix, g.partition, &cfg).map_err(lib_err)?.value)
    })
}

/// Closed-form K_HS of a two-qubit gate.
///
/// # Safety
/// `g` must be a live handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ds_k_hs(g: *const DsGate, out: *mut f64) -> DsStatus {
    guard(|| {
        let g = gate_ref(g)?;
        if g.partition != Partition::qubits() {
            return Err((DsStatus::Dimension, "K_HS closed form needs a 2:2 gate".into()));
        }
        put(out, k_hs_two_qubit(&g.matrix).map_err(lib_err)?.value)
    })
}

/// Canonical angles (θx, θy, θz) and Schmidt class of a two-qubit gate.
///
/// # Safety
/// `g` must be a live handle; `theta` must be valid for three writes and `class` for one.
#[no_mangle]
pub unsafe extern "C" fn ds_canonical(g: *const DsGate, theta: *mut f64, class: *mut u32) -> DsStatus {
    guard(|| {
        let g = gate_ref(g)?;
        if theta.is_null() {
            return Err(null("theta"));
        }
        if g.partition != Partition::qubits() {
            return Err((DsStatus::Dimension, "canonical decomposition needs a 2:2 gate".into()));
        }
        let r = CanonicalReport::new(&g.matrix).map_err(lib_err)?;
        put(class, r.class as u32)?;
        std::slice::from_raw_parts_mut(theta, 3).copy_from_slice(&r.theta);
        Ok(())
    })
}
