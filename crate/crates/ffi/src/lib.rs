//! C ABI over `treebalance`.
//!
//! Trees and plans are opaque heap handles created by `tb_*` constructors and
//! released with the matching `*_free`. Fallible calls return a
//! [`TbStatus`]; on failure a message is available from [`tb_last_error`] on
//! the same thread. No call unwinds into C: panics are caught and reported as
//! `TB_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use treebalance::estimator::{estimate_subtree_seeded, fast_node_count};
use treebalance::generate::{generate_biased_random, generate_fibonacci, generate_perfect};
use treebalance::text::parse_tree;
use treebalance::{
    partition, trivial_partition, BalanceConfig, Error, FitConstants, PartitionPlan, TreeStore,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidState = 3,
    InvalidHandle = 4,
    FlatDistribution = 5,
    ParseError = 6,
    IoError = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque tree handle.
pub struct TbTree {
    tree: TreeStore,
}

/// Opaque partition plan handle. Owns its own copy of the partitioned tree,
/// so it stays valid after the source tree is freed.
pub struct TbPlan {
    plan: PartitionPlan,
}

/// Balancing parameters; start from [`tb_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct TbConfig {
    pub p: u32,
    pub psc: f64,
    pub asc: f64,
    pub window: u32,
    pub granularity: u32,
    pub seed: u64,
    pub max_probes: u64,
    pub max_reprobes: u32,
    /// Probing thread cap; 0 means one thread per subtree.
    pub threads: u32,
}

impl From<&TbConfig> for BalanceConfig {
    fn from(c: &TbConfig) -> Self {
        BalanceConfig {
            p: c.p as usize,
            psc: c.psc,
            asc: c.asc,
            window: c.window as usize,
            granularity: c.granularity,
            seed: c.seed,
            max_probes: c.max_probes,
            max_reprobes: c.max_reprobes,
            fit: FitConstants::default(),
            threads: (c.threads > 0).then_some(c.threads as usize),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> TbStatus {
    match err {
        Error::InvalidArgument(_) => TbStatus::InvalidArgument,
        Error::InvalidState(_) => TbStatus::InvalidState,
        Error::InvalidHandle(_) => TbStatus::InvalidHandle,
        Error::FlatDistribution => TbStatus::FlatDistribution,
        Error::Parse { .. } => TbStatus::ParseError,
        Error::Io { .. } => TbStatus::IoError,
    }
}

/// Run `body`, converting errors and panics into a status.
fn guard(body: impl FnOnce() -> Result<(), (TbStatus, String)>) -> TbStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            TbStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            TbStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (TbStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (TbStatus, String) {
    (TbStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (TbStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), (TbStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn out_tree(
    out: *mut *mut TbTree,
    tree: Result<TreeStore, Error>,
) -> Result<(), (TbStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    let tree = tree.map_err(lib_err)?;
    out.write(Box::into_raw(Box::new(TbTree { tree })));
    Ok(())
}

unsafe fn out_plan(
    out: *mut *mut TbPlan,
    plan: Result<PartitionPlan, Error>,
) -> Result<(), (TbStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    let plan = plan.map_err(lib_err)?;
    out.write(Box::into_raw(Box::new(TbPlan { plan })));
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `tb_*` call on this thread.
#[no_mangle]
pub extern "C" fn tb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn tb_config_default() -> TbConfig {
    let d = BalanceConfig::default();
    TbConfig {
        p: d.p as u32,
        psc: d.psc,
        asc: d.asc,
        window: d.window as u32,
        granularity: d.granularity,
        seed: d.seed,
        max_probes: d.max_probes,
        max_reprobes: d.max_reprobes,
        threads: 0,
    }
}

/// # Safety
/// `out` must be a valid pointer to writable storage for a tree pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_tree_fibonacci(order: u32, out: *mut *mut TbTree) -> TbStatus {
    guard(|| out_tree(out, generate_fibonacci(order)))
}

/// # Safety
/// `out` must be a valid pointer to writable storage for a tree pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_tree_biased_random(
    n: u64,
    swap_fraction: f64,
    seed: u64,
    out: *mut *mut TbTree,
) -> TbStatus {
    guard(|| {
        let n = usize::try_from(n)
            .map_err(|_| (TbStatus::InvalidArgument, "n too large".to_string()))?;
        out_tree(out, generate_biased_random(n, swap_fraction, seed))
    })
}

/// # Safety
/// `out` must be a valid pointer to writable storage for a tree pointer.
#[no_mangle]
pub unsafe extern "C" fn tb_tree_perfect(depth: u32, out: *mut *mut TbTree) -> TbStatus {
    guard(|| out_tree(out, generate_perfect(depth)))
}

/// Parse the nested-parentheses form, e.g. `((. .) .)`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_tree_parse(text: *const c_char, out: *mut *mut TbTree) -> TbStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| (TbStatus::ParseError, "text is not UTF-8".to_string()))?;
        out_tree(out, parse_tree(s))
    })
}

/// # Safety
/// `tree` must be null or a handle from a `tb_tree_*` constructor that has not
/// been freed yet.
#[no_mangle]
pub unsafe extern "C" fn tb_tree_free(tree: *mut TbTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Exact node count by traversal.
///
/// # Safety
/// `tree` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_tree_node_count(tree: *const TbTree, out: *mut u64) -> TbStatus {
    guard(|| {
        let t = deref(tree, "tree")?;
        write_out(out, t.tree.node_count() as u64, "out")
    })
}

/// Estimate the tree's node count from its root by random probing.
/// `out_probes` may be null.
///
/// # Safety
/// `tree` and `config` must be valid; `out_estimate` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_estimate_node_count(
    tree: *const TbTree,
    config: *const TbConfig,
    out_estimate: *mut f64,
    out_probes: *mut u64,
) -> TbStatus {
    guard(|| {
        let t = deref(tree, "tree")?;
        let c = BalanceConfig::from(deref(config, "config")?);
        c.validate().map_err(lib_err)?;
        let root = t
            .tree
            .root()
            .ok_or_else(|| (TbStatus::InvalidArgument, "empty tree".to_string()))?;
        let est = estimate_subtree_seeded(&t.tree, root, &c).map_err(lib_err)?;
        write_out(out_estimate, est.node_count, "out_estimate")?;
        if !out_probes.is_null() {
            out_probes.write(est.probes_used);
        }
        Ok(())
    })
}

/// Node count predicted from an average probe depth by the default fit.
#[no_mangle]
pub extern "C" fn tb_fast_node_count(avg_depth: f64) -> f64 {
    fast_node_count(avg_depth, FitConstants::default())
}

/// # Safety
/// `tree` and `config` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_partition(
    tree: *const TbTree,
    config: *const TbConfig,
    out: *mut *mut TbPlan,
) -> TbStatus {
    guard(|| {
        let t = deref(tree, "tree")?;
        let c = BalanceConfig::from(deref(config, "config")?);
        let plan = partition(&t.tree, &c).map(|mut plan| {
            plan.fill_exact_counts();
            plan
        });
        out_plan(out, plan)
    })
}

/// # Safety
/// `tree` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_trivial_partition(
    tree: *const TbTree,
    p: u32,
    out: *mut *mut TbPlan,
) -> TbStatus {
    guard(|| {
        let t = deref(tree, "tree")?;
        let plan = trivial_partition(&t.tree, p as usize).map(|mut plan| {
            plan.fill_exact_counts();
            plan
        });
        out_plan(out, plan)
    })
}

/// # Safety
/// `plan` must be null or a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn tb_plan_free(plan: *mut TbPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// # Safety
/// `plan` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_plan_workers(plan: *const TbPlan, out: *mut u32) -> TbStatus {
    guard(|| {
        let p = deref(plan, "plan")?;
        write_out(out, p.plan.workers() as u32, "out")
    })
}

fn worker_index(plan: &PartitionPlan, worker: u32) -> Result<usize, (TbStatus, String)> {
    let w = worker as usize;
    if w >= plan.workers() {
        return Err((
            TbStatus::InvalidArgument,
            format!("worker {w} out of range (plan has {})", plan.workers()),
        ));
    }
    Ok(w)
}

/// Exact number of nodes assigned to `worker`.
///
/// # Safety
/// `plan` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_plan_worker_node_count(
    plan: *const TbPlan,
    worker: u32,
    out: *mut u64,
) -> TbStatus {
    guard(|| {
        let p = deref(plan, "plan")?;
        let w = worker_index(&p.plan, worker)?;
        write_out(out, p.plan.per_worker_exact_count[w] as u64, "out")
    })
}

/// Estimated work assigned to `worker` (0 for trivial plans).
///
/// # Safety
/// `plan` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_plan_worker_estimated_work(
    plan: *const TbPlan,
    worker: u32,
    out: *mut f64,
) -> TbStatus {
    guard(|| {
        let p = deref(plan, "plan")?;
        let w = worker_index(&p.plan, worker)?;
        write_out(out, p.plan.per_worker_estimated_work[w], "out")
    })
}

/// Number of subtree roots assigned to `worker`.
///
/// # Safety
/// `plan` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_plan_worker_root_count(
    plan: *const TbPlan,
    worker: u32,
    out: *mut u64,
) -> TbStatus {
    guard(|| {
        let p = deref(plan, "plan")?;
        let w = worker_index(&p.plan, worker)?;
        write_out(out, p.plan.assignments[w].len() as u64, "out")
    })
}

/// Write the plan's text form into `buf` (NUL-terminated). `*needed` is set to
/// the required size including the NUL. Pass `buf = NULL, len = 0` to query
/// the size; a short buffer yields `TB_STATUS_BUFFER_TOO_SMALL`.
///
/// # Safety
/// `plan` must be live; `buf` must hold `len` bytes or be null; `needed` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_plan_to_text(
    plan: *const TbPlan,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> TbStatus {
    guard(|| {
        let p = deref(plan, "plan")?;
        let text = p.plan.to_document().map_err(lib_err)?.to_text();
        let size = text.len() + 1;
        write_out(needed, size, "needed")?;
        if buf.is_null() || len < size {
            return Err((
                TbStatus::BufferTooSmall,
                format!("buffer of {len} bytes, need {size}"),
            ));
        }
        ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
        buf.add(text.len()).write(0);
        Ok(())
    })
}
