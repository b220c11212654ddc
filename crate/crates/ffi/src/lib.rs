//! C ABI over trained docsift archives.
//!
//! Open an archive into an opaque [`DocsiftArchive`] handle, then classify
//! text or rank indexed articles. Every call returns a [`DocsiftStatus`];
//! on failure [`docsift_last_error_message`] describes what went wrong on
//! the calling thread. Strings handed out through `out_json` belong to the
//! caller and must be released with [`docsift_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use docsift::app::{load_archive, ModelArchive, Query};
use docsift::recommender::Filters;
use docsift::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocsiftStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Bad parameter, malformed filter JSON, or a query with no usable terms.
    InvalidInput = 3,
    /// Unknown article id, or no history id is indexed.
    NotFound = 4,
    /// Truncated archive, checksum mismatch or inconsistent sections.
    ArchiveCorrupt = 5,
    /// Archive written by an unsupported schema version.
    UnsupportedVersion = 6,
    Io = 7,
    Runtime = 8,
    /// A Rust panic was caught at the boundary.
    Panic = 9,
}

/// Opaque handle to a loaded archive.
pub struct DocsiftArchive {
    inner: ModelArchive,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> DocsiftStatus {
    match err {
        Error::Io { .. } => DocsiftStatus::Io,
        Error::Archive(_) | Error::Checksum(_) | Error::Json(_) | Error::FingerprintMismatch { .. } => {
            DocsiftStatus::ArchiveCorrupt
        }
        Error::Version { .. } => DocsiftStatus::UnsupportedVersion,
        Error::UnknownId(_) | Error::EmptyHistory => DocsiftStatus::NotFound,
        e if e.is_validation() => DocsiftStatus::InvalidInput,
        Error::EmptyQuery | Error::ZeroVector(_) => DocsiftStatus::InvalidInput,
        _ => DocsiftStatus::Runtime,
    }
}

struct Fail(DocsiftStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DocsiftStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DocsiftStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            DocsiftStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(DocsiftStatus::NullArgument, format!("{name} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(DocsiftStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn archive_ref<'a>(h: *const DocsiftArchive) -> Result<&'a ModelArchive, Fail> {
    h.as_ref()
        .map(|a| &a.inner)
        .ok_or_else(|| Fail(DocsiftStatus::NullArgument, "archive handle is NULL".into()))
}

unsafe fn filters_arg(p: *const c_char) -> Result<Filters, Fail> {
    if p.is_null() {
        return Ok(Filters::default());
    }
    let s = str_arg(p, "filters_json")?;
    serde_json::from_str(s).map_err(|e| Fail(DocsiftStatus::InvalidInput, format!("filters_json: {e}")))
}

unsafe fn emit(out: *mut *mut c_char, value: &serde_json::Value) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(DocsiftStatus::NullArgument, "out_json is NULL".into()));
    }
    let c = CString::new(value.to_string()).map_err(|e| Fail(DocsiftStatus::Runtime, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn recommend(
    h: *const DocsiftArchive,
    query: Query,
    k: usize,
    filters_json: *const c_char,
    out_json: *mut *mut c_char,
) -> Result<(), Fail> {
    let a = archive_ref(h)?;
    let filters = filters_arg(filters_json)?;
    let list = a.recommend(&query, k, &filters)?;
    let v = serde_json::to_value(&list).map_err(Error::from)?;
    emit(out_json, &v)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn docsift_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL after a
/// success. Valid until the next docsift call on the same thread.
#[no_mangle]
pub extern "C" fn docsift_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads and verifies an archive. On success `*out` receives a handle to
/// release with [`docsift_archive_free`].
///
/// # Safety
/// `path` must be NULL or a NUL-terminated string; `out` must be NULL or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn docsift_archive_open(path: *const c_char, out: *mut *mut DocsiftArchive) -> DocsiftStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(Fail(DocsiftStatus::NullArgument, "out is NULL".into()));
        }
        let inner = load_archive(Path::new(path))?;
        *out = Box::into_raw(Box::new(DocsiftArchive { inner }));
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `handle` must come from [`docsift_archive_open`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn docsift_archive_free(handle: *mut DocsiftArchive) {
    if !handle.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(handle))));
    }
}

/// Number of indexed articles, or 0 for a NULL handle.
///
/// # Safety
/// `handle` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn docsift_archive_len(handle: *const DocsiftArchive) -> usize {
    handle.as_ref().map_or(0, |a| a.inner.index.len())
}

/// Classifies `text`. Writes `{"labels": [...], "scores": {label: score}}`.
///
/// # Safety
/// Pointers must be NULL or valid; `text` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn docsift_classify(
    handle: *const DocsiftArchive,
    text: *const c_char,
    out_json: *mut *mut c_char,
) -> DocsiftStatus {
    guard(|| {
        let a = archive_ref(handle)?;
        let text = str_arg(text, "text")?;
        let (pred, names) = a.classify_text(text)?;
        let scores: serde_json::Map<String, serde_json::Value> = a
            .model
            .labels
            .iter()
            .zip(&pred.scores)
            .map(|(l, s)| (l.clone(), serde_json::json!(s)))
            .collect();
        emit(out_json, &serde_json::json!({ "labels": names, "scores": scores }))
    })
}

/// Ranks indexed articles against free text. `filters_json` may be NULL or
/// an object with `date_from`, `date_to`, `labels`, `min_citations`.
///
/// # Safety
/// Pointers must be NULL or valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn docsift_recommend_text(
    handle: *const DocsiftArchive,
    text: *const c_char,
    k: usize,
    filters_json: *const c_char,
    out_json: *mut *mut c_char,
) -> DocsiftStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        recommend(handle, Query::Text(text.to_string()), k, filters_json, out_json)
    })
}

/// Ranks indexed articles against an indexed article, excluding itself.
///
/// # Safety
/// As [`docsift_recommend_text`].
#[no_mangle]
pub unsafe extern "C" fn docsift_recommend_id(
    handle: *const DocsiftArchive,
    id: *const c_char,
    k: usize,
    filters_json: *const c_char,
    out_json: *mut *mut c_char,
) -> DocsiftStatus {
    guard(|| {
        let id = str_arg(id, "id")?;
        recommend(handle, Query::Id(id.to_string()), k, filters_json, out_json)
    })
}

/// Ranks against the mean of a reading history of `n_ids` article ids.
///
/// # Safety
/// `ids` must point to `n_ids` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn docsift_recommend_profile(
    handle: *const DocsiftArchive,
    ids: *const *const c_char,
    n_ids: usize,
    k: usize,
    filters_json: *const c_char,
    out_json: *mut *mut c_char,
) -> DocsiftStatus {
    guard(|| {
        if ids.is_null() && n_ids > 0 {
            return Err(Fail(DocsiftStatus::NullArgument, "ids is NULL".into()));
        }
        let mut history = Vec::with_capacity(n_ids);
        for i in 0..n_ids {
            history.push(str_arg(*ids.add(i), "ids[i]")?.to_string());
        }
        recommend(handle, Query::Profile(history), k, filters_json, out_json)
    })
}

/// Frees a string returned through `out_json`. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn docsift_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
