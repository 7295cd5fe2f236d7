//! C ABI over `bgwlab`.
//!
//! Objects are opaque heap handles created by `*_new`/`*_sample` functions and
//! released by the matching `*_free`. Every fallible call returns a
//! `BgwStatus`; on failure the message is kept per thread and can be read
//! with `bgw_last_error`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bgwlab::harness::{run_experiment, ExperimentConfig};
use bgwlab::offspring::{build_critical_tail_law, build_head_only_law, toy_law, OffspringLaw};
use bgwlab::oracle::{run_oracle, OracleCheck};
use bgwlab::rng::{rng_from_seed, Rng};
use bgwlab::scaling::compute_constants;
use bgwlab::tree::{
    sample_tree_approx_zn, sample_tree_exact_n, sample_tree_tail, tree_stats, PlaneTree, TailStrategy,
};
use bgwlab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BgwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidLaw = 3,
    BudgetExceeded = 4,
    Inconsistent = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BgwTreeMode {
    /// Exactly `n` vertices, by rejection.
    ExactN = 0,
    /// `n` vertices via the Vervaat coupling, retried until an excursion.
    ApproxZn = 1,
    /// At least `n` vertices, by rejection.
    TailRejection = 2,
    /// At least `n` vertices via the big-jump coupling.
    TailVecz = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BgwOracleCheck {
    Kemperman = 0,
    Vervaat = 1,
    InPmf = 2,
    DtvLocal = 3,
    Duality = 4,
    WienerHopf = 5,
    Lukasiewicz = 6,
}

/// Offspring law.
pub struct BgwLaw(OffspringLaw);

/// Seeded random stream.
pub struct BgwRng(Rng);

/// Plane tree in depth-first order.
pub struct BgwTree(PlaneTree);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BgwConstants {
    pub n: u64,
    pub a_n: i64,
    pub b_n: f64,
    pub ell_star_a_n: f64,
    /// NaN for finite-support laws.
    pub lambda_n: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BgwTreeStats {
    pub size: u64,
    pub max_degree: u64,
    /// First vertex of maximal out-degree, depth-first index.
    pub u_star: u64,
    pub h_star: u64,
    pub height: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BgwOracleOutcome {
    pub nmax: u64,
    pub cases: u64,
    pub max_error: f64,
    pub pass: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> BgwStatus {
    match e {
        Error::InvalidLaw(_) | Error::InfeasibleParameters { .. } => BgwStatus::InvalidLaw,
        Error::BudgetExceeded { .. } => BgwStatus::BudgetExceeded,
        Error::Inconsistent(_) | Error::BandOverflow { .. } => BgwStatus::Inconsistent,
        Error::Io(_) => BgwStatus::Io,
        Error::Replicate { source, .. } => status_of(source),
        _ => BgwStatus::InvalidArgument,
    }
}

fn fail(status: BgwStatus, msg: &str) -> BgwStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Result<(), BgwStatus>) -> BgwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            BgwStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(BgwStatus::Panic, "panic inside bgwlab"),
    }
}

fn lift<T>(r: bgwlab::Result<T>) -> Result<T, BgwStatus> {
    r.map_err(|e| fail(status_of(&e), &e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, BgwStatus> {
    p.as_ref().ok_or_else(|| fail(BgwStatus::NullPointer, "null pointer argument"))
}

unsafe fn deref_mut<'a, T>(p: *mut T) -> Result<&'a mut T, BgwStatus> {
    p.as_mut().ok_or_else(|| fail(BgwStatus::NullPointer, "null pointer argument"))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, BgwStatus> {
    if p.is_null() {
        return Err(fail(BgwStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(BgwStatus::InvalidArgument, "string is not UTF-8"))
}

/// Copies `s` plus a terminating nul into `buf` when it fits. Returns the
/// number of bytes needed, nul included.
unsafe fn copy_out(s: &[u8], buf: *mut c_char, len: usize) -> usize {
    let need = s.len() + 1;
    if !buf.is_null() && len >= need {
        ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, s.len());
        *buf.add(s.len()) = 0;
    }
    need
}

/// Static nul-terminated version string.
#[no_mangle]
pub extern "C" fn bgw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failed call on this thread, empty after a success.
/// Returns the buffer size needed; nothing is written if `len` is too small.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bgw_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| copy_out(e.borrow().as_bytes(), buf, len))
}

/// Law with the log-squared tail `c / (k^2 ln^2 k)` from `kmin` on.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bgw_law_new_log2(c: f64, kmin: u64, out: *mut *mut BgwLaw) -> BgwStatus {
    guard(|| {
        let out = deref_mut(out)?;
        *out = Box::into_raw(Box::new(BgwLaw(lift(build_critical_tail_law(c, kmin))?)));
        Ok(())
    })
}

/// Finite-support law `mu(k) = probs[k]`.
///
/// # Safety
/// `probs` must point to `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bgw_law_new_head(probs: *const f64, len: usize, out: *mut *mut BgwLaw) -> BgwStatus {
    guard(|| {
        let out = deref_mut(out)?;
        if probs.is_null() {
            return Err(fail(BgwStatus::NullPointer, "null probabilities"));
        }
        let head = std::slice::from_raw_parts(probs, len);
        *out = Box::into_raw(Box::new(BgwLaw(lift(build_head_only_law(head))?)));
        Ok(())
    })
}

/// The four-point law `(0.5, 0.1, 0.3, 0.1)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bgw_law_new_toy(out: *mut *mut BgwLaw) -> BgwStatus {
    guard(|| {
        *deref_mut(out)? = Box::into_raw(Box::new(BgwLaw(toy_law())));
        Ok(())
    })
}

/// Law from its JSON file form.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bgw_law_from_json(json: *const c_char, out: *mut *mut BgwLaw) -> BgwStatus {
    guard(|| {
        let out = deref_mut(out)?;
        let law = lift(OffspringLaw::from_json(str_arg(json)?))?;
        *out = Box::into_raw(Box::new(BgwLaw(law)));
        Ok(())
    })
}

/// # Safety
/// `law` must be null or come from a `bgw_law_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn bgw_law_free(law: *mut BgwLaw) {
    if !law.is_null() {
        drop(Box::from_raw(law));
    }
}

/// `mu(k)`; NaN for a null law.
///
/// # Safety
/// `law` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bgw_law_pmf(law: *const BgwLaw, k: u64) -> f64 {
    law.as_ref().map_or(f64::NAN, |l| l.0.pmf(k))
}

/// `mu([k, inf))`; NaN for a null law.
///
/// # Safety
/// `law` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bgw_law_survival(law: *const BgwLaw, k: u64) -> f64 {
    law.as_ref().map_or(f64::NAN, |l| l.0.survival(k))
}

/// 16 hex digits identifying the law. Same size convention as
/// `bgw_last_error`; returns 0 for a null law.
///
/// # Safety
/// `law` must be null or a live handle; `buf` must be null or hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn bgw_law_hash(law: *const BgwLaw, buf: *mut c_char, len: usize) -> usize {
    match law.as_ref() {
        Some(l) => copy_out(l.0.hash().as_bytes(), buf, len),
        None => 0,
    }
}

/// JSON file form of the law, written like `bgw_law_hash`.
///
/// # Safety
/// As for `bgw_law_hash`.
#[no_mangle]
pub unsafe extern "C" fn bgw_law_to_json(law: *const BgwLaw, buf: *mut c_char, len: usize) -> usize {
    match law.as_ref() {
        Some(l) => copy_out(l.0.to_json().as_bytes(), buf, len),
        None => 0,
    }
}

/// One offspring count.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bgw_law_sample(law: *const BgwLaw, rng: *mut BgwRng, out: *mut u64) -> BgwStatus {
    guard(|| {
        let (law, rng, out) = (deref(law)?, deref_mut(rng)?, deref_mut(out)?);
        *out = law.0.sample(&mut rng.0);
        Ok(())
    })
}

/// Scaling constants at `n`.
///
/// # Safety
/// `law` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bgw_constants(law: *const BgwLaw, n: u64, out: *mut BgwConstants) -> BgwStatus {
    guard(|| {
        let (law, out) = (deref(law)?, deref_mut(out)?);
        let k = lift(compute_constants(&law.0.steps(), n))?;
        *out = BgwConstants {
            n: k.n,
            a_n: k.a_n,
            b_n: k.b_n,
            ell_star_a_n: k.ell_star_a_n,
            lambda_n: k.lambda_n.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Stream fully determined by `seed`. Returns null only on allocation failure.
#[no_mangle]
pub extern "C" fn bgw_rng_new(seed: u64) -> *mut BgwRng {
    Box::into_raw(Box::new(BgwRng(rng_from_seed(seed))))
}

/// # Safety
/// `rng` must be null or come from `bgw_rng_new`, freed once.
#[no_mangle]
pub unsafe extern "C" fn bgw_rng_free(rng: *mut BgwRng) {
    if !rng.is_null() {
        drop(Box::from_raw(rng));
    }
}

/// Draws a conditioned tree; `mode` is a `BgwTreeMode` value. `budget` caps the increments drawn, over all
/// attempts for the rejection modes and over retries for `ApproxZn`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bgw_tree_sample(
    law: *const BgwLaw,
    mode: u32,
    n: u64,
    budget: u64,
    rng: *mut BgwRng,
    out: *mut *mut BgwTree,
) -> BgwStatus {
    guard(|| {
        let (law, rng, out) = (deref(law)?, deref_mut(rng)?, deref_mut(out)?);
        let mode = match mode {
            0 => BgwTreeMode::ExactN,
            1 => BgwTreeMode::ApproxZn,
            2 => BgwTreeMode::TailRejection,
            3 => BgwTreeMode::TailVecz,
            _ => return Err(fail(BgwStatus::InvalidArgument, "unknown tree mode")),
        };
        if n == 0 {
            return Err(fail(BgwStatus::InvalidArgument, "n must be >= 1"));
        }
        let steps = law.0.steps();
        let rng = &mut rng.0;
        let draw = match mode {
            BgwTreeMode::ExactN => sample_tree_exact_n(&steps, n as usize, budget, rng),
            BgwTreeMode::ApproxZn => sample_tree_approx_zn(&steps, n as usize, budget / n.max(2), rng),
            BgwTreeMode::TailRejection | BgwTreeMode::TailVecz => {
                let k = lift(compute_constants(&steps, n))?;
                let s = if mode == BgwTreeMode::TailVecz { TailStrategy::VecZ } else { TailStrategy::Rejection };
                sample_tree_tail(&steps, &k, s, budget, rng)
            }
        };
        *out = Box::into_raw(Box::new(BgwTree(lift(draw)?.tree)));
        Ok(())
    })
}

/// Tree from out-degrees in depth-first order.
///
/// # Safety
/// `counts` must point to `len` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bgw_tree_from_child_counts(counts: *const u64, len: usize, out: *mut *mut BgwTree) -> BgwStatus {
    guard(|| {
        let out = deref_mut(out)?;
        if counts.is_null() {
            return Err(fail(BgwStatus::NullPointer, "null child counts"));
        }
        let v = std::slice::from_raw_parts(counts, len).to_vec();
        *out = Box::into_raw(Box::new(BgwTree(lift(PlaneTree::from_child_counts(v))?)));
        Ok(())
    })
}

/// # Safety
/// `tree` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn bgw_tree_free(tree: *mut BgwTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Vertex count; 0 for a null tree.
///
/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bgw_tree_size(tree: *const BgwTree) -> u64 {
    tree.as_ref().map_or(0, |t| t.0.size() as u64)
}

/// Copies the out-degrees into `buf` when `len >= size`; otherwise reports
/// `BufferTooSmall`. `needed` receives the tree size either way.
///
/// # Safety
/// `tree` and `needed` must be valid; `buf` must be null or hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn bgw_tree_child_counts(
    tree: *const BgwTree,
    buf: *mut u64,
    len: usize,
    needed: *mut usize,
) -> BgwStatus {
    guard(|| {
        let (tree, needed) = (deref(tree)?, deref_mut(needed)?);
        let cc = tree.0.child_counts();
        *needed = cc.len();
        if buf.is_null() || len < cc.len() {
            return Err(fail(BgwStatus::BufferTooSmall, "child count buffer too small"));
        }
        ptr::copy_nonoverlapping(cc.as_ptr(), buf, cc.len());
        Ok(())
    })
}

/// # Safety
/// `tree` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bgw_tree_stats(tree: *const BgwTree, out: *mut BgwTreeStats) -> BgwStatus {
    guard(|| {
        let (tree, out) = (deref(tree)?, deref_mut(out)?);
        let s = lift(tree_stats(&tree.0))?;
        *out = BgwTreeStats {
            size: s.size,
            max_degree: s.degrees_sorted[0],
            u_star: s.u_star,
            h_star: s.h_star,
            height: s.height,
        };
        Ok(())
    })
}

/// Exact identity check on a finite-support law; `check` is a
/// `BgwOracleCheck` value.
///
/// # Safety
/// `law` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bgw_oracle(
    law: *const BgwLaw,
    check: u32,
    nmax: u64,
    seed: u64,
    out: *mut BgwOracleOutcome,
) -> BgwStatus {
    guard(|| {
        let (law, out) = (deref(law)?, deref_mut(out)?);
        let c = *OracleCheck::ALL
            .get(check as usize)
            .ok_or_else(|| fail(BgwStatus::InvalidArgument, "unknown oracle check"))?;
        let o = lift(run_oracle(c, &law.0, nmax as usize, seed))?;
        *out = BgwOracleOutcome { nmax: o.nmax as u64, cases: o.cases, max_error: o.max_error, pass: o.pass };
        Ok(())
    })
}

/// Runs one experiment from its JSON config and hands back the report JSON,
/// to be released with `bgw_string_free`.
///
/// # Safety
/// `config_json` must be a nul-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bgw_verify_json(config_json: *const c_char, out: *mut *mut c_char) -> BgwStatus {
    guard(|| {
        let out = deref_mut(out)?;
        let cfg: ExperimentConfig = serde_json::from_str(str_arg(config_json)?)
            .map_err(|e| fail(BgwStatus::InvalidArgument, &e.to_string()))?;
        let report = lift(run_experiment(&cfg))?.report.to_json();
        *out = CString::new(report).expect("json has no nul").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn bgw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
