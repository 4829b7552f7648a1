//! C ABI for `tgraph-core`.
//!
//! Graphs are opaque handles created with [`tgraph_graph_new`] or
//! [`tgraph_graph_parse`] and released with [`tgraph_graph_free`]. Every
//! fallible call returns a [`TgraphStatus`]; on failure a message is
//! available from [`tgraph_last_error_message`] on the same thread.
//! Strings returned by the library are freed with [`tgraph_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tgraph::decompose::canonical_decomposition;
use tgraph::graph::GraphError;
use tgraph::{is_isomorphic_upto, Graph, Verdict};

/// Status codes of fallible calls.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TgraphStatus {
    Ok = 0,
    NullPointer = 1,
    Parse = 2,
    InvalidEdge = 3,
    InvalidArgument = 4,
    Decompose = 5,
    Internal = 6,
}

/// Outcome of an isomorphism test. Values match the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TgraphVerdict {
    Isomorphic = 0,
    NotIsomorphic = 1,
    NotTGraph = 2,
}

/// Opaque graph handle.
pub struct TgraphGraph {
    inner: Graph,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> TgraphStatus) -> TgraphStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal error");
            TgraphStatus::Internal
        }
    }
}

fn graph_status(e: &GraphError) -> TgraphStatus {
    set_error(e.to_string());
    match e {
        GraphError::Parse { .. } => TgraphStatus::Parse,
        GraphError::InvalidEdge(..) => TgraphStatus::InvalidEdge,
        _ => TgraphStatus::InvalidArgument,
    }
}

fn null() -> TgraphStatus {
    set_error("null pointer argument");
    TgraphStatus::NullPointer
}

/// New edgeless graph on `n` vertices. Never returns null.
#[no_mangle]
pub extern "C" fn tgraph_graph_new(n: usize) -> *mut TgraphGraph {
    Box::into_raw(Box::new(TgraphGraph { inner: Graph::new(n) }))
}

/// Parses the text format (`n m` header, then `u v` lines) into `*out`.
///
/// # Safety
/// `text` must be a valid nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tgraph_graph_parse(text: *const c_char, out: *mut *mut TgraphGraph) -> TgraphStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return null();
        }
        let Ok(s) = CStr::from_ptr(text).to_str() else {
            set_error("input is not UTF-8");
            return TgraphStatus::Parse;
        };
        match Graph::parse(s) {
            Ok(g) => {
                *out = Box::into_raw(Box::new(TgraphGraph { inner: g }));
                TgraphStatus::Ok
            }
            Err(e) => graph_status(&e),
        }
    })
}

/// Adds the edge `u v`. Adding an existing edge is a no-op.
///
/// # Safety
/// `g` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tgraph_graph_add_edge(g: *mut TgraphGraph, u: usize, v: usize) -> TgraphStatus {
    guard(|| {
        let Some(g) = g.as_mut() else { return null() };
        match g.inner.add_edge(u, v) {
            Ok(()) => TgraphStatus::Ok,
            Err(e) => graph_status(&e),
        }
    })
}

/// Vertex count, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tgraph_graph_vertex_count(g: *const TgraphGraph) -> usize {
    g.as_ref().map_or(0, |g| g.inner.n())
}

/// Edge count, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tgraph_graph_edge_count(g: *const TgraphGraph) -> usize {
    g.as_ref().map_or(0, |g| g.inner.m())
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tgraph_graph_free(g: *mut TgraphGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Decides isomorphism, trying leaf counts `2..=d_max`.
///
/// On success `*verdict` is set, `*d_used` (if non-null) receives the leaf
/// count that settled the question, and for an isomorphic pair `witness`
/// (if non-null, with room for `n` entries) receives the vertex map. For a
/// not-a-T-graph verdict the evidence is in [`tgraph_last_error_message`].
///
/// # Safety
/// `g1`, `g2` must be live handles, `verdict` valid, `witness` null or
/// writable for `tgraph_graph_vertex_count(g1)` entries.
#[no_mangle]
pub unsafe extern "C" fn tgraph_is_isomorphic(
    g1: *const TgraphGraph,
    g2: *const TgraphGraph,
    d_max: usize,
    verdict: *mut TgraphVerdict,
    witness: *mut usize,
    d_used: *mut usize,
) -> TgraphStatus {
    guard(|| {
        let (Some(a), Some(b)) = (g1.as_ref(), g2.as_ref()) else { return null() };
        if verdict.is_null() {
            return null();
        }
        if d_max < 2 {
            set_error("d_max must be at least 2");
            return TgraphStatus::InvalidArgument;
        }
        let (v, d) = is_isomorphic_upto(&a.inner, &b.inner, d_max);
        *verdict = match &v {
            Verdict::Isomorphic(w) => {
                if !witness.is_null() {
                    ptr::copy_nonoverlapping(w.as_ptr(), witness, w.len());
                }
                TgraphVerdict::Isomorphic
            }
            Verdict::NotIsomorphic => TgraphVerdict::NotIsomorphic,
            Verdict::NotTGraph(ev) => {
                set_error(ev.to_string());
                TgraphVerdict::NotTGraph
            }
        };
        if !d_used.is_null() {
            *d_used = d;
        }
        TgraphStatus::Ok
    })
}

/// Canonical decomposition as a JSON string in `*out`; free it with
/// [`tgraph_string_free`].
///
/// # Safety
/// `g` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tgraph_decompose_json(g: *const TgraphGraph, d: usize, out: *mut *mut c_char) -> TgraphStatus {
    guard(|| {
        let Some(g) = g.as_ref() else { return null() };
        if out.is_null() {
            return null();
        }
        if d < 2 {
            set_error("d must be at least 2");
            return TgraphStatus::InvalidArgument;
        }
        match canonical_decomposition(&g.inner, d) {
            Ok(dec) => {
                *out = CString::new(dec.to_json()).expect("json has no nul").into_raw();
                TgraphStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                TgraphStatus::Decompose
            }
        }
    })
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tgraph_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread; empty after success
/// other than a not-a-T-graph verdict.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn tgraph_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
