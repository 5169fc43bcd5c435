//! C ABI for `loopsoup`.
//!
//! Every fallible function returns an [`LsStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and can
//! be read with [`ls_last_error_message`]. Soups and cluster states are
//! opaque handles released with their `_free` function. Panics never cross
//! the boundary; they are reported as [`LsStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::panic::{catch_unwind, AssertUnwindSafe};

use loopsoup::coagulation::{analytic_rho, analytic_rho_fixed_j};
use loopsoup::exploration::explore;
use loopsoup::graph_process::{semigroup_prob, state_at, ClusterState};
use loopsoup::gw_analytics::{cramer_h, extinction_prob, progeny_pmf, tail_rate_i, CPGeo};
use loopsoup::loop_measure::sample_soup_stream;
use loopsoup::{Error, Loop, LoopSoup, ModelParams};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    /// A series or integrator failed to reach its tolerance.
    Numerical = 4,
    Io = 5,
    Parse = 6,
    /// The caller's buffer is too small; the required length was written.
    BufferTooSmall = 7,
    Panic = 8,
}

/// A sampled or loaded loop soup.
pub struct LsSoup(LoopSoup);

/// Connected components of the loops applied so far.
pub struct LsClusterState(ClusterState);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> LsStatus {
    match e {
        Error::InvalidParams(_) | Error::NotAPartition { .. } | Error::BadCheckpoints { .. } | Error::Config(_) => {
            LsStatus::InvalidArgument
        }
        Error::OutOfRange { .. } | Error::VertexOutOfRange { .. } => LsStatus::OutOfRange,
        Error::Truncation { .. } | Error::Unstable { .. } => LsStatus::Numerical,
        Error::Io(_) => LsStatus::Io,
        Error::Parse { .. } | Error::Json(_) => LsStatus::Parse,
    }
}

struct Fail(LsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail(LsStatus::Io, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(LsStatus::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> LsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            LsStatus::Ok
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {msg}"));
            LsStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn path_of(p: *const c_char) -> Result<String, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Fail(LsStatus::InvalidArgument, "path is not UTF-8".into()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message (NUL-terminated, truncated
/// to `cap`) into `buf` and returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn ls_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = e.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(e.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Samples a soup on `[0, horizon]` from stream `stream` of `seed`.
///
/// # Safety
/// `out_soup` must be valid for writes. The handle must be released with [`ls_soup_free`].
#[no_mangle]
pub unsafe extern "C" fn ls_soup_sample(
    n: u32,
    eps: f64,
    horizon: f64,
    seed: u64,
    stream: u64,
    out_soup: *mut *mut LsSoup,
) -> LsStatus {
    guard(|| {
        let o = out(out_soup, "out_soup")?;
        let params = ModelParams::new(n, eps)?;
        let soup = sample_soup_stream(&params, horizon, seed, stream)?;
        *o = Box::into_raw(Box::new(LsSoup(soup)));
        Ok(())
    })
}

/// Reads a soup file written by [`ls_soup_write`] or the command-line tool.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_soup` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_soup_read(path: *const c_char, out_soup: *mut *mut LsSoup) -> LsStatus {
    guard(|| {
        let o = out(out_soup, "out_soup")?;
        let p = path_of(path)?;
        let soup = LoopSoup::read_from(BufReader::new(File::open(p)?))?;
        *o = Box::into_raw(Box::new(LsSoup(soup)));
        Ok(())
    })
}

/// # Safety
/// `soup` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ls_soup_write(soup: *const LsSoup, path: *const c_char) -> LsStatus {
    guard(|| {
        let s = soup.as_ref().ok_or_else(|| null("soup"))?;
        let p = path_of(path)?;
        s.0.write_to(BufWriter::new(File::create(p)?))?;
        Ok(())
    })
}

/// Releases a soup; null is ignored.
///
/// # Safety
/// `soup` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ls_soup_free(soup: *mut LsSoup) {
    if !soup.is_null() {
        drop(Box::from_raw(soup));
    }
}

/// Number of loops in the soup.
///
/// # Safety
/// `soup` must be a live handle and `out_len` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_soup_len(soup: *const LsSoup, out_len: *mut usize) -> LsStatus {
    guard(|| {
        let s = soup.as_ref().ok_or_else(|| null("soup"))?;
        *out(out_len, "out_len")? = s.0.len();
        Ok(())
    })
}

/// Loop `index` (in time order): its arrival time and vertices.
///
/// Writes the loop length to `out_len`. When `cap` is smaller than the
/// length nothing is copied and [`LsStatus::BufferTooSmall`] is returned.
///
/// # Safety
/// `vertices` must be valid for `cap` writes; other pointers valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ls_soup_loop(
    soup: *const LsSoup,
    index: usize,
    out_time: *mut f64,
    vertices: *mut u32,
    cap: usize,
    out_len: *mut usize,
) -> LsStatus {
    guard(|| {
        let s = soup.as_ref().ok_or_else(|| null("soup"))?;
        let tl = s.0.loops().get(index).ok_or_else(|| {
            Fail(
                LsStatus::OutOfRange,
                format!("loop index {index} is not below {}", s.0.len()),
            )
        })?;
        let vs = tl.lp.vertices();
        *out(out_len, "out_len")? = vs.len();
        *out(out_time, "out_time")? = tl.time;
        if cap < vs.len() {
            return Err(Fail(LsStatus::BufferTooSmall, format!("loop has {} vertices", vs.len())));
        }
        if vertices.is_null() {
            return Err(null("vertices"));
        }
        std::ptr::copy_nonoverlapping(vs.as_ptr(), vertices, vs.len());
        Ok(())
    })
}

/// Size of the component of `x` at soup time `t`, found by exploration.
///
/// # Safety
/// `soup` must be a live handle and `out_size` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_soup_explore(soup: *const LsSoup, t: f64, x: u32, out_size: *mut u64) -> LsStatus {
    guard(|| {
        let s = soup.as_ref().ok_or_else(|| null("soup"))?;
        *out(out_size, "out_size")? = explore(&s.0, t, x)?.t_stop;
        Ok(())
    })
}

/// All singletons on `n` vertices.
///
/// # Safety
/// `out_state` must be valid for writes; release with [`ls_cluster_free`].
#[no_mangle]
pub unsafe extern "C" fn ls_cluster_new(n: u32, out_state: *mut *mut LsClusterState) -> LsStatus {
    guard(|| {
        let o = out(out_state, "out_state")?;
        *o = Box::into_raw(Box::new(LsClusterState(ClusterState::new(n)?)));
        Ok(())
    })
}

/// Components formed by the loops of `soup` arrived by time `t`.
///
/// # Safety
/// `soup` must be a live handle and `out_state` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_cluster_from_soup(
    soup: *const LsSoup,
    t: f64,
    out_state: *mut *mut LsClusterState,
) -> LsStatus {
    guard(|| {
        let s = soup.as_ref().ok_or_else(|| null("soup"))?;
        let o = out(out_state, "out_state")?;
        *o = Box::into_raw(Box::new(LsClusterState(state_at(&s.0, t)?)));
        Ok(())
    })
}

/// Merges the components of the `len` given vertices (1-based).
///
/// # Safety
/// `state` must be a live handle and `vertices` valid for `len` reads.
#[no_mangle]
pub unsafe extern "C" fn ls_cluster_apply_loop(
    state: *mut LsClusterState,
    vertices: *const u32,
    len: usize,
    time: f64,
) -> LsStatus {
    guard(|| {
        let st = state.as_mut().ok_or_else(|| null("state"))?;
        if vertices.is_null() {
            return Err(null("vertices"));
        }
        let lp = Loop::new(std::slice::from_raw_parts(vertices, len).to_vec())?;
        st.0.apply_loop(&lp, time)?;
        Ok(())
    })
}

/// # Safety
/// `state` must be a live handle and `out_size` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_cluster_component_size(
    state: *mut LsClusterState,
    v: u32,
    out_size: *mut u32,
) -> LsStatus {
    guard(|| {
        let st = state.as_mut().ok_or_else(|| null("state"))?;
        *out(out_size, "out_size")? = st.0.component_size(v)?;
        Ok(())
    })
}

/// The two largest component sizes and the number of components.
///
/// # Safety
/// `state` must be a live handle; out-pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_cluster_summary(
    state: *const LsClusterState,
    out_largest: *mut u32,
    out_second: *mut u32,
    out_components: *mut u32,
) -> LsStatus {
    guard(|| {
        let st = state.as_ref().ok_or_else(|| null("state"))?;
        let (a, b) = st.0.top2();
        *out(out_largest, "out_largest")? = a;
        *out(out_second, "out_second")? = b;
        *out(out_components, "out_components")? = st.0.n_components();
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ls_cluster_free(state: *mut LsClusterState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// `P(T = k)` for the total progeny with `u` ancestors of the limiting law at `(eps, t)`.
///
/// # Safety
/// `out_p` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_progeny_pmf(u: u32, eps: f64, t: f64, k: u64, out_p: *mut f64) -> LsStatus {
    guard(|| {
        *out(out_p, "out_p")? = progeny_pmf(u, eps, t, k)?;
        Ok(())
    })
}

/// Extinction probability of the limiting offspring law.
///
/// # Safety
/// `out_q` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_extinction_prob(eps: f64, t: f64, out_q: *mut f64) -> LsStatus {
    guard(|| {
        *out(out_q, "out_q")? = extinction_prob(&CPGeo::from_model(eps, t)?);
        Ok(())
    })
}

/// Cramér rate `h(t)` (subcritical scale of the largest component).
///
/// # Safety
/// `out_h` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_cramer_h(eps: f64, t: f64, out_h: *mut f64) -> LsStatus {
    guard(|| {
        *out(out_h, "out_h")? = cramer_h(eps, t)?;
        Ok(())
    })
}

/// Tail rate `I_t` (supercritical second-component scale).
///
/// # Safety
/// `out_i` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_tail_rate_i(eps: f64, t: f64, out_i: *mut f64) -> LsStatus {
    guard(|| {
        *out(out_i, "out_i")? = tail_rate_i(eps, t)?;
        Ok(())
    })
}

/// Probability that the soup partition at time `t` is finer than a
/// partition with the given block sizes.
///
/// # Safety
/// `blocks` must be valid for `nblocks` reads and `out_p` for a write.
#[no_mangle]
pub unsafe extern "C" fn ls_semigroup_prob(
    n: u32,
    eps: f64,
    t: f64,
    blocks: *const u32,
    nblocks: usize,
    out_p: *mut f64,
) -> LsStatus {
    guard(|| {
        if blocks.is_null() {
            return Err(null("blocks"));
        }
        let params = ModelParams::new(n, eps)?;
        let b = std::slice::from_raw_parts(blocks, nblocks);
        *out(out_p, "out_p")? = semigroup_prob(&params, t, b)?;
        Ok(())
    })
}

/// Analytic cluster density `ρ_{ε,t}(k)`.
///
/// # Safety
/// `out_rho` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_analytic_rho(eps: f64, t: f64, k: u64, out_rho: *mut f64) -> LsStatus {
    guard(|| {
        *out(out_rho, "out_rho")? = analytic_rho(eps, t, k)?;
        Ok(())
    })
}

/// Analytic cluster density of the fixed-length-`j` system.
///
/// # Safety
/// `out_rho` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ls_analytic_rho_fixed_j(j: u32, t: f64, k: u64, out_rho: *mut f64) -> LsStatus {
    guard(|| {
        *out(out_rho, "out_rho")? = analytic_rho_fixed_j(j, t, k)?;
        Ok(())
    })
}
