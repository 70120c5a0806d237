//! C ABI over `cpl-core`.
//!
//! Scenes and memory stores are opaque handles created by `cpl_*_parse` /
//! `cpl_memory_*` and released with the matching `_free`. Every fallible
//! call returns a [`CplStatus`]; on failure [`cpl_last_error`] describes it.
//! Strings handed out by the library are owned by the caller and must be
//! released with [`cpl_string_free`]. Structured results are JSON.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use cpl_core::{
    build_ensemble, build_forest, build_grid, build_hierarchy, check_scene, cluster,
    extract_cycles, format_scene, parse_scene_with_spans, Diagnostic, MemoryStore, Scene,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CplStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    Inconsistent = 4,
    Hierarchy = 5,
    Io = 6,
    Memory = 7,
    Panic = 8,
}

/// A parsed scene.
pub struct CplScene {
    scene: Scene,
}

/// A feature-vote memory store.
pub struct CplMemory {
    store: MemoryStore,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

type FfiResult<T> = Result<T, (CplStatus, String)>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> CplStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CplStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CplStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err((CplStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (CplStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn scene_ref<'a>(p: *const CplScene) -> FfiResult<&'a Scene> {
    p.as_ref()
        .map(|s| &s.scene)
        .ok_or((CplStatus::NullArgument, "scene is null".into()))
}

unsafe fn memory_ref<'a>(p: *const CplMemory) -> FfiResult<&'a CplMemory> {
    p.as_ref()
        .ok_or((CplStatus::NullArgument, "memory is null".into()))
}

unsafe fn emit(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    if out.is_null() {
        return Err((CplStatus::NullArgument, "output pointer is null".into()));
    }
    let s = CString::new(s).map_err(|_| (CplStatus::Panic, "output contains a nul byte".into()))?;
    *out = s.into_raw();
    Ok(())
}

fn json(v: &serde_json::Value) -> String {
    serde_json::to_string(v).expect("json value serializes")
}

fn list(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|f| !f.is_empty())
        .map(String::from)
        .collect()
}

fn error_lines(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.render("<scene>", false))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into the library.
#[no_mangle]
pub extern "C" fn cpl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn cpl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` is null or came from this library and has not been freed.
#[no_mangle]
pub unsafe extern "C" fn cpl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse scene source. On success `*out` owns a new scene.
///
/// # Safety
/// `source` is a nul-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cpl_scene_parse(
    source: *const c_char,
    out: *mut *mut CplScene,
) -> CplStatus {
    guard(|| {
        let src = text(source, "source")?;
        if out.is_null() {
            return Err((CplStatus::NullArgument, "output pointer is null".into()));
        }
        let (scene, _) =
            parse_scene_with_spans(src).map_err(|d| (CplStatus::ParseError, error_lines(&d)))?;
        *out = Box::into_raw(Box::new(CplScene { scene }));
        Ok(())
    })
}

/// # Safety
/// `scene` is null or a live handle from [`cpl_scene_parse`].
#[no_mangle]
pub unsafe extern "C" fn cpl_scene_free(scene: *mut CplScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Diagnostics as a JSON array. Returns `Inconsistent` when any is an
/// error; `*out_json` is filled either way.
///
/// # Safety
/// `scene` is a live handle; `out_json` is writable.
#[no_mangle]
pub unsafe extern "C" fn cpl_scene_check(
    scene: *const CplScene,
    out_json: *mut *mut c_char,
) -> CplStatus {
    let mut errors = 0;
    let status = guard(|| {
        let diags = check_scene(scene_ref(scene)?);
        errors = diags.iter().filter(|d| d.is_error()).count();
        emit(
            out_json,
            serde_json::to_string(&diags).expect("diagnostics serialize"),
        )
    });
    if status == CplStatus::Ok && errors > 0 {
        set_error(&format!("{errors} consistency errors"));
        return CplStatus::Inconsistent;
    }
    status
}

/// Canonical source text.
///
/// # Safety
/// `scene` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cpl_scene_format(
    scene: *const CplScene,
    out: *mut *mut c_char,
) -> CplStatus {
    guard(|| emit(out, format_scene(scene_ref(scene)?)))
}

/// Frequency grid as CSV.
///
/// # Safety
/// `scene` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cpl_scene_grid_csv(
    scene: *const CplScene,
    out: *mut *mut c_char,
) -> CplStatus {
    guard(|| emit(out, build_grid(scene_ref(scene)?).to_csv()))
}

/// Grid, clusters and secondary links as JSON.
///
/// # Safety
/// `scene` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cpl_scene_clusters_json(
    scene: *const CplScene,
    out: *mut *mut c_char,
) -> CplStatus {
    guard(|| {
        let grid = build_grid(scene_ref(scene)?);
        emit(out, json(&grid.to_json(&cluster(&grid))))
    })
}

/// Nested object set, children in placement order or by name.
///
/// # Safety
/// `scene` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cpl_scene_nested(
    scene: *const CplScene,
    sorted: bool,
    out: *mut *mut c_char,
) -> CplStatus {
    guard(|| emit(out, build_forest(scene_ref(scene)?).nested_notation(sorted)))
}

/// Uni-directional links and process cycles as JSON.
///
/// # Safety
/// `scene` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cpl_scene_cycles_json(
    scene: *const CplScene,
    out: *mut *mut c_char,
) -> CplStatus {
    guard(|| {
        let scene = scene_ref(scene)?;
        emit(
            out,
            json(&extract_cycles(scene, &build_forest(scene)).to_json()),
        )
    })
}

/// Hierarchy nodes, edges and construction trace as JSON.
///
/// # Safety
/// `scene` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cpl_scene_hierarchy_json(
    scene: *const CplScene,
    out: *mut *mut c_char,
) -> CplStatus {
    guard(|| {
        let scene = scene_ref(scene)?;
        let (h, trace) = build_hierarchy(scene, &build_ensemble(scene))
            .map_err(|e| (CplStatus::Hierarchy, e.to_string()))?;
        emit(out, json(&h.to_json(&trace)))
    })
}

/// An empty store.
#[no_mangle]
pub extern "C" fn cpl_memory_new() -> *mut CplMemory {
    Box::into_raw(Box::new(CplMemory {
        store: MemoryStore::new(),
    }))
}

/// Load every `*.json` entry in a directory.
///
/// # Safety
/// `dir` is a nul-terminated path; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cpl_memory_load(
    dir: *const c_char,
    out: *mut *mut CplMemory,
) -> CplStatus {
    guard(|| {
        let dir = text(dir, "directory")?;
        if out.is_null() {
            return Err((CplStatus::NullArgument, "output pointer is null".into()));
        }
        let store =
            MemoryStore::load_dir(Path::new(dir)).map_err(|e| (CplStatus::Io, e.to_string()))?;
        *out = Box::into_raw(Box::new(CplMemory { store }));
        Ok(())
    })
}

/// # Safety
/// `memory` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpl_memory_free(memory: *mut CplMemory) {
    if !memory.is_null() {
        drop(Box::from_raw(memory));
    }
}

/// Number of stored entries; zero for a null handle.
///
/// # Safety
/// `memory` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpl_memory_len(memory: *const CplMemory) -> usize {
    memory.as_ref().map_or(0, |m| m.store.len())
}

/// Store an entry; `features` is comma-separated.
///
/// # Safety
/// `memory` is a live handle; strings are nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn cpl_memory_store(
    memory: *mut CplMemory,
    id: *const c_char,
    features: *const c_char,
) -> CplStatus {
    guard(|| {
        let id = text(id, "id")?;
        let features = list(text(features, "features")?);
        let memory = memory
            .as_mut()
            .ok_or((CplStatus::NullArgument, "memory is null".to_string()))?;
        memory
            .store
            .store_scene(id, features)
            .map_err(|e| (CplStatus::Memory, e.to_string()))
    })
}

/// Store the concepts a scene's rules use under `id`.
///
/// # Safety
/// `memory` and `scene` are live handles; `id` is nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn cpl_memory_store_scene(
    memory: *mut CplMemory,
    id: *const c_char,
    scene: *const CplScene,
) -> CplStatus {
    guard(|| {
        let id = text(id, "id")?;
        let features = cpl_core::scene_features(scene_ref(scene)?);
        let memory = memory
            .as_mut()
            .ok_or((CplStatus::NullArgument, "memory is null".to_string()))?;
        memory
            .store
            .store_scene(id, features)
            .map_err(|e| (CplStatus::Memory, e.to_string()))
    })
}

/// Ranked predictions as JSON. `legal` may be null for no filter; lists
/// are comma-separated; `k` must be at least 1.
///
/// # Safety
/// `memory` is a live handle; non-null strings are nul-terminated; `out`
/// is writable.
#[no_mangle]
pub unsafe extern "C" fn cpl_memory_predict(
    memory: *const CplMemory,
    input: *const c_char,
    legal: *const c_char,
    k: usize,
    out: *mut *mut c_char,
) -> CplStatus {
    guard(|| {
        let memory = memory_ref(memory)?;
        let input = list(text(input, "input")?);
        let legal: Option<BTreeSet<String>> = if legal.is_null() {
            None
        } else {
            Some(list(text(legal, "legal")?).into_iter().collect())
        };
        if k == 0 {
            return Err((CplStatus::Memory, "k must be at least 1".into()));
        }
        let prediction = memory.store.predict(&input, legal.as_ref(), k);
        emit(out, json(&prediction.to_json()))
    })
}

#[cfg(test)]
mod tests {
    use std::ptr;

    use super::*;

    #[test]
    fn null_source_is_reported() {
        let mut out = ptr::null_mut();
        let status = unsafe { cpl_scene_parse(ptr::null(), &mut out) };
        assert_eq!(status, CplStatus::NullArgument);
        assert!(out.is_null());
        let msg = unsafe { CStr::from_ptr(cpl_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "source is null");
    }

    #[test]
    fn list_splits_and_trims() {
        assert_eq!(list("a, b,,c "), ["a", "b", "c"]);
    }

    #[test]
    fn free_accepts_null() {
        unsafe {
            cpl_string_free(ptr::null_mut());
            cpl_scene_free(ptr::null_mut());
            cpl_memory_free(ptr::null_mut());
        }
    }
}
