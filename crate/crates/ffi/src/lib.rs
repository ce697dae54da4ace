//! C ABI for the `ambiguity-auction` core.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every fallible call returns an
//! [`AaStatus`]; on failure [`aa_last_error`] holds a message for the calling
//! thread. Structured inputs (structures, DGP and sampler settings) travel as
//! JSON strings with the same schema as the command-line configs.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ambiguity_auction::bidding::{bid_strategy, BidCurve, DEFAULT_GRID};
use ambiguity_auction::data::{sample_dataset, BidDataset, DgpSpec};
use ambiguity_auction::decision::{ambiguity_neutral_prob, bayes_action, revenue_curve};
use ambiguity_auction::identification::{exact_bid_law, recover_structure};
use ambiguity_auction::inference::{make_bins, run_sampler, Chain, SamplerConfig};
use ambiguity_auction::model::Structure;
use ambiguity_auction::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidStructure = 3,
    OutOfSupport = 4,
    Numerical = 5,
    Data = 6,
    EmptyChain = 7,
    NotConverged = 8,
    Io = 9,
    Parse = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

impl From<&Error> for AaStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Argument(_) | Error::Config(_) => AaStatus::InvalidArgument,
            Error::InvalidStructure(_) => AaStatus::InvalidStructure,
            Error::OutOfSupport { .. } => AaStatus::OutOfSupport,
            Error::Degenerate(_) | Error::Domain(_) | Error::Initialization { .. } => AaStatus::Numerical,
            Error::Data(_) => AaStatus::Data,
            Error::EmptyChain => AaStatus::EmptyChain,
            Error::NotConverged(_) => AaStatus::NotConverged,
            Error::Io(_) => AaStatus::Io,
            Error::Csv(_) | Error::Json(_) => AaStatus::Parse,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(AaStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail((&e).into(), e.to_string())
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Fail(AaStatus::Parse, e.to_string())
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail(AaStatus::Io, e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> AaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AaStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            AaStatus::Panic
        }
    }
}

fn null() -> Fail {
    Fail(AaStatus::NullPointer, "null pointer argument".into())
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(null)
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(null)
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|e| Fail(AaStatus::InvalidArgument, e.to_string()))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Copies `src` into a caller buffer of capacity `cap`; `len` receives the
/// needed length even when the buffer is too small.
unsafe fn fill(src: &[f64], dst: *mut f64, cap: usize, len: *mut usize) -> Result<(), Fail> {
    *out(len)? = src.len();
    if src.len() > cap {
        return Err(Fail(AaStatus::BufferTooSmall, format!("need {} values, buffer holds {cap}", src.len())));
    }
    if !src.is_empty() {
        if dst.is_null() {
            return Err(null());
        }
        ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    }
    Ok(())
}

/// Opaque model structure.
pub struct AaStructure(Structure);
/// Opaque equilibrium bid function.
pub struct AaBidCurve(BidCurve);
/// Opaque bid dataset.
pub struct AaDataset(BidDataset);
/// Opaque posterior chain.
pub struct AaChain(Chain);

/// Message of the last failure on this thread; empty if none. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn aa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn aa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn aa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a structure from JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aa_structure_from_json(json: *const c_char, out_handle: *mut *mut AaStructure) -> AaStatus {
    guard(|| {
        let slot = out(out_handle)?;
        let s: Structure = serde_json::from_str(text(json)?)?;
        s.validate()?;
        *slot = boxed(AaStructure(s));
        Ok(())
    })
}

/// The default data-generating structure.
///
/// # Safety
/// `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aa_structure_default(out_handle: *mut *mut AaStructure) -> AaStatus {
    guard(|| {
        *out(out_handle)? = boxed(AaStructure(Structure::baseline_dgp()));
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn aa_structure_free(s: *mut AaStructure) {
    free(s)
}

/// Pessimistic cdf `D(F0(v))`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aa_structure_fstar(s: *const AaStructure, v: f64, value: *mut f64) -> AaStatus {
    guard(|| {
        *out(value)? = deref(s)?.0.fstar(v);
        Ok(())
    })
}

/// Bid function for `n` bidders and reserve `reserve`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aa_bid_curve_new(
    s: *const AaStructure,
    n: usize,
    reserve: f64,
    out_handle: *mut *mut AaBidCurve,
) -> AaStatus {
    guard(|| {
        let slot = out(out_handle)?;
        *slot = boxed(AaBidCurve(bid_strategy(&deref(s)?.0, n, reserve, DEFAULT_GRID)?));
        Ok(())
    })
}

/// # Safety
/// `c` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn aa_bid_curve_free(c: *mut AaBidCurve) {
    free(c)
}

/// Bid of value `v`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aa_bid_curve_bid(c: *const AaBidCurve, v: f64, bid: *mut f64) -> AaStatus {
    guard(|| {
        if !(0.0..=1.0).contains(&v) {
            return Err(Fail(AaStatus::InvalidArgument, format!("value {v} outside [0, 1]")));
        }
        *out(bid)? = deref(c)?.0.bid_at(v);
        Ok(())
    })
}

/// Value whose bid is `b`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aa_bid_curve_inverse(c: *const AaBidCurve, b: f64, value: *mut f64) -> AaStatus {
    guard(|| {
        *out(value)? = deref(c)?.0.inverse(b)?;
        Ok(())
    })
}

/// Expected revenue on the reserve grid `0, step, ...` below 1.
///
/// # Safety
/// `values` must hold `cap` doubles; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aa_revenue_curve(
    s: *const AaStructure,
    n: usize,
    step: f64,
    values: *mut f64,
    cap: usize,
    len: *mut usize,
) -> AaStatus {
    guard(|| {
        let c = revenue_curve(&deref(s)?.0, n, step)?;
        fill(&c.values, values, cap, len)
    })
}

/// Simulates a dataset from a DGP JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aa_dataset_simulate(json: *const c_char, out_handle: *mut *mut AaDataset) -> AaStatus {
    guard(|| {
        let slot = out(out_handle)?;
        let spec: DgpSpec = serde_json::from_str(text(json)?)?;
        *slot = boxed(AaDataset(sample_dataset(&spec)?));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aa_dataset_read_csv(path: *const c_char, out_handle: *mut *mut AaDataset) -> AaStatus {
    guard(|| {
        let slot = out(out_handle)?;
        let d = BidDataset::read_csv(BufReader::new(File::open(text(path)?)?))?;
        *slot = boxed(AaDataset(d));
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aa_dataset_write_csv(d: *const AaDataset, path: *const c_char) -> AaStatus {
    guard(|| {
        let d = deref(d)?;
        d.0.write_csv(BufWriter::new(File::create(text(path)?)?))?;
        Ok(())
    })
}

/// Number of bids.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aa_dataset_len(d: *const AaDataset, len: *mut usize) -> AaStatus {
    guard(|| {
        *out(len)? = deref(d)?.0.len();
        Ok(())
    })
}

/// Bids in file order.
///
/// # Safety
/// `bids` must hold `cap` doubles; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aa_dataset_bids(d: *const AaDataset, bids: *mut f64, cap: usize, len: *mut usize) -> AaStatus {
    guard(|| {
        let b: Vec<f64> = deref(d)?.0.records().iter().map(|r| r.bid).collect();
        fill(&b, bids, cap, len)
    })
}

/// # Safety
/// `d` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn aa_dataset_free(d: *mut AaDataset) {
    free(d)
}

/// Runs the posterior sampler. `sampler_json` may be null for the desk
/// defaults. A chain that hits the iteration cap is still returned, together
/// with `NotConverged`.
///
/// # Safety
/// Pointers must be valid; `sampler_json` may be null.
#[no_mangle]
pub unsafe extern "C" fn aa_estimate(
    d: *const AaDataset,
    sampler_json: *const c_char,
    out_handle: *mut *mut AaChain,
) -> AaStatus {
    guard(|| {
        let slot = out(out_handle)?;
        let cfg: SamplerConfig = if sampler_json.is_null() {
            SamplerConfig::desk()
        } else {
            serde_json::from_str(text(sampler_json)?)?
        };
        let chain = run_sampler(&make_bins(&deref(d)?.0, cfg.bins_per_n)?, &cfg)?;
        let converged = chain.converged;
        *slot = boxed(AaChain(chain));
        if converged {
            Ok(())
        } else {
            Err(Fail(AaStatus::NotConverged, "iteration cap reached".into()))
        }
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out_handle` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aa_chain_read_csv(path: *const c_char, out_handle: *mut *mut AaChain) -> AaStatus {
    guard(|| {
        let slot = out(out_handle)?;
        *slot = boxed(AaChain(Chain::read_csv(BufReader::new(File::open(text(path)?)?))?));
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aa_chain_write_csv(c: *const AaChain, path: *const c_char) -> AaStatus {
    guard(|| {
        let c = deref(c)?;
        c.0.write_csv(BufWriter::new(File::create(text(path)?)?))?;
        Ok(())
    })
}

/// Retained draws.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aa_chain_len(c: *const AaChain, len: *mut usize) -> AaStatus {
    guard(|| {
        *out(len)? = deref(c)?.0.retained().len();
        Ok(())
    })
}

/// Posterior probability of ambiguity neutrality.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aa_chain_neutral_prob(c: *const AaChain, prob: *mut f64) -> AaStatus {
    guard(|| {
        *out(prob)? = ambiguity_neutral_prob(&deref(c)?.0)?;
        Ok(())
    })
}

/// Bayes-action reserve for `n` bidders with its predictive revenue and
/// 95% band.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aa_chain_bayes_action(
    c: *const AaChain,
    n: usize,
    step: f64,
    rho: *mut f64,
    revenue: *mut f64,
    lo: *mut f64,
    hi: *mut f64,
) -> AaStatus {
    guard(|| {
        let (rho, revenue, lo, hi) = (out(rho)?, out(revenue)?, out(lo)?, out(hi)?);
        let a = bayes_action(&deref(c)?.0, n, step)?;
        (*rho, *revenue, *lo, *hi) = (a.rho, a.revenue, a.lo, a.hi);
        Ok(())
    })
}

/// # Safety
/// `c` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn aa_chain_free(c: *mut AaChain) {
    free(c)
}

/// Recovers the primitives from the exact bid laws of `s` at `n1` and `n2`
/// bidders. `json_out` receives a string to release with [`aa_string_free`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aa_identify(
    s: *const AaStructure,
    n1: usize,
    n2: usize,
    levels: usize,
    json_out: *mut *mut c_char,
) -> AaStatus {
    guard(|| {
        let slot = out(json_out)?;
        let s = &deref(s)?.0;
        let rec = recover_structure(&exact_bid_law(s, n1, levels)?, &exact_bid_law(s, n2, levels)?)?;
        let j = serde_json::to_string(&rec)?;
        *slot = CString::new(j).map_err(|e| Fail(AaStatus::Parse, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Recovered CRRA coefficient alone.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn aa_identify_crra(
    s: *const AaStructure,
    n1: usize,
    n2: usize,
    levels: usize,
    crra: *mut f64,
) -> AaStatus {
    guard(|| {
        let slot = out(crra)?;
        let s = &deref(s)?.0;
        *slot = recover_structure(&exact_bid_law(s, n1, levels)?, &exact_bid_law(s, n2, levels)?)?.theta;
        Ok(())
    })
}
