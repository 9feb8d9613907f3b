//! C ABI over the implicit priority queues: opaque handles, status codes,
//! and plain-integer counters. The generated header lands in `include/ipq.h`.
//!
//! Every function is safe to call with a null handle (it reports
//! `IPQ_STATUS_INVALID_ARGUMENT` or returns a zero value); out-pointers must
//! be valid for a single write when non-null.

use ipq::harness::{PqFacade, PqImpl};
use ipq::PqError;

/// Which queue implementation a handle wraps.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum IpqImpl {
    /// Amortized O(1)-move structure (distinct keys).
    Amortized = 0,
    /// Worst-case O(1)-insert relaxed binomial forest (distinct keys).
    WorstCase = 1,
    /// Pair-item wrapper supporting duplicate keys.
    Identical = 2,
    /// Classic binary heap baseline.
    Binary = 3,
}

/// Call outcome.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum IpqStatus {
    Ok = 0,
    /// Extract or find-min on an empty queue.
    Underflow = 1,
    /// Duplicate key offered to a distinct-keys implementation.
    DuplicateKey = 2,
    /// Null handle or invalid argument.
    InvalidArgument = 3,
    /// A structural invariant failed validation.
    InvariantViolation = 4,
    /// Internal state corruption.
    Corrupt = 5,
}

/// Move/comparison totals and per-operation maxima.
#[repr(C)]
#[derive(Clone, Copy, Default)]
pub struct IpqCounters {
    pub moves: u64,
    pub comparisons: u64,
    pub max_moves_per_op: u64,
    pub max_cmps_per_op: u64,
    pub rebuilds: u64,
}

/// Opaque queue handle; create with `ipq_new`, release with `ipq_free`.
pub struct IpqHandle {
    inner: PqFacade,
}

fn status_of(e: &PqError) -> IpqStatus {
    match e {
        PqError::Underflow => IpqStatus::Underflow,
        PqError::DuplicateKey => IpqStatus::DuplicateKey,
        PqError::Invariant(_) => IpqStatus::InvariantViolation,
        PqError::Corruption(_) => IpqStatus::Corrupt,
        _ => IpqStatus::InvalidArgument,
    }
}

fn which_of(which: IpqImpl) -> PqImpl {
    match which {
        IpqImpl::Amortized => PqImpl::Amortized,
        IpqImpl::WorstCase => PqImpl::WorstCase,
        IpqImpl::Identical => PqImpl::Identical,
        IpqImpl::Binary => PqImpl::Binary,
    }
}

/// Create an empty queue. Returns null only on allocation failure.
#[no_mangle]
pub extern "C" fn ipq_new(which: IpqImpl) -> *mut IpqHandle {
    Box::into_raw(Box::new(IpqHandle { inner: PqFacade::new(which_of(which)) }))
}

/// Create a queue from raw state `(elements, len)` — the strict-implicitness
/// entry point: the array contents are adopted verbatim.
///
/// # Safety
/// `keys` must point to `len` readable `uint64_t` values (or be null with
/// `len == 0`).
#[no_mangle]
pub unsafe extern "C" fn ipq_from_elements(
    which: IpqImpl,
    keys: *const u64,
    len: usize,
) -> *mut IpqHandle {
    let elements = if keys.is_null() {
        if len != 0 {
            return std::ptr::null_mut();
        }
        Vec::new()
    } else {
        std::slice::from_raw_parts(keys, len).to_vec()
    };
    Box::into_raw(Box::new(IpqHandle { inner: PqFacade::from_raw(which_of(which), elements) }))
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `h` must have come from `ipq_new`/`ipq_from_elements` and not yet be freed.
#[no_mangle]
pub unsafe extern "C" fn ipq_free(h: *mut IpqHandle) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn ipq_insert(h: *mut IpqHandle, key: u64) -> IpqStatus {
    let Some(handle) = h.as_mut() else {
        return IpqStatus::InvalidArgument;
    };
    match handle.inner.insert(key) {
        Ok(()) => IpqStatus::Ok,
        Err(e) => status_of(&e),
    }
}

/// Extract the minimum into `*out` (when non-null).
///
/// # Safety
/// `h` must be a live handle or null; `out` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn ipq_extract_min(h: *mut IpqHandle, out: *mut u64) -> IpqStatus {
    let Some(handle) = h.as_mut() else {
        return IpqStatus::InvalidArgument;
    };
    match handle.inner.extract_min() {
        Ok(k) => {
            if let Some(out) = out.as_mut() {
                *out = k;
            }
            IpqStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Read the minimum without removing it.
///
/// # Safety
/// `h` must be a live handle or null; `out` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn ipq_find_min(h: *mut IpqHandle, out: *mut u64) -> IpqStatus {
    let Some(handle) = h.as_mut() else {
        return IpqStatus::InvalidArgument;
    };
    match handle.inner.find_min() {
        Some(k) => {
            if let Some(out) = out.as_mut() {
                *out = k;
            }
            IpqStatus::Ok
        }
        None => IpqStatus::Underflow,
    }
}

/// Number of stored elements; zero for null handles.
///
/// # Safety
/// `h` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ipq_len(h: *const IpqHandle) -> usize {
    h.as_ref().map_or(0, |handle| handle.inner.len())
}

/// Run the implementation's full structural checker.
///
/// # Safety
/// `h` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ipq_validate(h: *mut IpqHandle) -> IpqStatus {
    let Some(handle) = h.as_mut() else {
        return IpqStatus::InvalidArgument;
    };
    match handle.inner.validate() {
        Ok(()) => IpqStatus::Ok,
        Err(e) => status_of(&e),
    }
}

/// Snapshot the cost counters into `*out`.
///
/// # Safety
/// `h` must be a live handle or null; `out` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn ipq_counters(h: *const IpqHandle, out: *mut IpqCounters) -> IpqStatus {
    let Some(handle) = h.as_ref() else {
        return IpqStatus::InvalidArgument;
    };
    let Some(out) = out.as_mut() else {
        return IpqStatus::InvalidArgument;
    };
    let c = handle.inner.counters();
    *out = IpqCounters {
        moves: c.moves,
        comparisons: c.comparisons,
        max_moves_per_op: c.max_moves_per_op,
        max_cmps_per_op: c.max_cmps_per_op,
        rebuilds: c.rebuilds,
    };
    IpqStatus::Ok
}

/// Zero the cost counters.
///
/// # Safety
/// `h` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ipq_reset_counters(h: *mut IpqHandle) -> IpqStatus {
    let Some(handle) = h.as_mut() else {
        return IpqStatus::InvalidArgument;
    };
    handle.inner.counters_mut().reset();
    IpqStatus::Ok
}

/// Copy up to `cap` elements of the raw state into `buf`, returning the full
/// element count. Together with `ipq_from_elements` this supports
/// strict-implicitness round trips across the boundary.
///
/// # Safety
/// `h` must be a live handle or null; `buf` must have room for `cap` values
/// or be null with `cap == 0`.
#[no_mangle]
pub unsafe extern "C" fn ipq_elements(h: *const IpqHandle, buf: *mut u64, cap: usize) -> usize {
    let Some(handle) = h.as_ref() else {
        return 0;
    };
    let elems = handle.inner.elements();
    if !buf.is_null() {
        let n = cap.min(elems.len());
        std::ptr::copy_nonoverlapping(elems.as_ptr(), buf, n);
    }
    elems.len()
}
