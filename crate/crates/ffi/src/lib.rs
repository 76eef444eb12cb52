//! C ABI for the revertrisk scorer.
//!
//! Conventions: every fallible function returns an [`RrStatus`]; on failure a
//! message is available from [`rr_last_error_message`] on the same thread.
//! Handles are opaque and released with their matching `_free` function.
//! Strings returned through `char **` outputs are owned by the caller and
//! must be released with [`rr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use revertrisk::diff::{diff_entities, ContentDelta, DiffError};
use revertrisk::entity::{parse_entity, EntityDocument, LabelMap};
use revertrisk::evaluation::auc_of;
use revertrisk::graph2text::Graph2Text;
use revertrisk::pipeline::{ModelBundle, PipelineError, RevisionMetadata, RevisionScorer};

/// Result codes shared by every function in this library.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    /// Malformed JSON or entity document.
    Parse = 4,
    /// Model files unreadable or built for another template version.
    Model = 5,
    /// Parent and current documents describe different entities.
    EntityMismatch = 6,
    InvalidArgument = 7,
    /// A Rust panic was caught at the boundary.
    Panic = 8,
}

/// Loaded models and label map. Immutable; safe to share across threads.
pub struct RrScorer(RevisionScorer);

/// An id-to-label map used for textualization.
pub struct RrLabelMap(LabelMap);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(RrStatus, String);

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let status = match &e {
            PipelineError::Diff(DiffError::EntityMismatch { .. }) => RrStatus::EntityMismatch,
            PipelineError::Io(_) => RrStatus::Io,
            PipelineError::Json(_) | PipelineError::Classifier(_) => RrStatus::Model,
            _ => RrStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<DiffError> for Failure {
    fn from(e: DiffError) -> Self {
        let status = match e {
            DiffError::EntityMismatch { .. } => RrStatus::EntityMismatch,
            _ => RrStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn parse_err(e: impl std::fmt::Display) -> Failure {
    Failure(RrStatus::Parse, e.to_string())
}

/// Runs `body`, converting errors and panics into a status plus a message.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> RrStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RrStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RrStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(RrStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(RrStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(RrStatus::NullPointer, format!("`{name}` is null")))
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(RrStatus::InvalidArgument, "output contains a NUL byte".into()))
}

fn document(json: &str) -> Result<EntityDocument, Failure> {
    parse_entity(json.as_bytes()).map_err(parse_err)
}

/// Message for the last failed call on this thread, or NULL after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn rr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads the content model, final model and label map.
///
/// # Safety
/// Path arguments must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rr_scorer_open(
    content_model_path: *const c_char,
    final_model_path: *const c_char,
    labels_path: *const c_char,
    out: *mut *mut RrScorer,
) -> RrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let bundle = ModelBundle::load(
            str_arg(content_model_path, "content_model_path")?,
            str_arg(final_model_path, "final_model_path")?,
        )?;
        let labels = LabelMap::load_tsv(str_arg(labels_path, "labels_path")?).map_err(|e| Failure(RrStatus::Io, e.to_string()))?;
        *out = Box::into_raw(Box::new(RrScorer(RevisionScorer::new(bundle, labels)?)));
        Ok(())
    })
}

/// # Safety
/// `scorer` must come from [`rr_scorer_open`] and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn rr_scorer_free(scorer: *mut RrScorer) {
    if !scorer.is_null() {
        drop(Box::from_raw(scorer));
    }
}

fn score_breakdown(
    scorer: &RrScorer,
    parent: Option<&str>,
    current: &str,
    metadata: &str,
) -> Result<revertrisk::pipeline::ScoreBreakdown, Failure> {
    let parent = parent.map(document).transpose()?;
    let current = document(current)?;
    let metadata: RevisionMetadata = serde_json::from_str(metadata).map_err(parse_err)?;
    Ok(scorer.0.score_documents(parent.as_ref(), &current, &metadata)?)
}

/// Revert probability for the edit turning `parent_json` into `current_json`.
/// `parent_json` may be NULL for a page creation. `metadata_json` holds
/// `timestamp`, `editor` and optionally `revision_id` and `previous_timestamp`.
///
/// # Safety
/// `scorer` must be a live handle; strings must be NUL-terminated; `out_probability` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_score(
    scorer: *const RrScorer,
    parent_json: *const c_char,
    current_json: *const c_char,
    metadata_json: *const c_char,
    out_probability: *mut f64,
) -> RrStatus {
    guard(|| {
        let scorer = scorer
            .as_ref()
            .ok_or_else(|| Failure(RrStatus::NullPointer, "`scorer` is null".into()))?;
        let out = out_arg(out_probability, "out_probability")?;
        let parent = if parent_json.is_null() {
            None
        } else {
            Some(str_arg(parent_json, "parent_json")?)
        };
        let b = score_breakdown(
            scorer,
            parent,
            str_arg(current_json, "current_json")?,
            str_arg(metadata_json, "metadata_json")?,
        )?;
        *out = b.probability;
        Ok(())
    })
}

/// Like [`rr_score`] but writes the full breakdown (probability, pooled
/// content score, per-change texts and scores, metadata features) as JSON.
///
/// # Safety
/// As for [`rr_score`]; `out_json` must be writable and its result freed with [`rr_string_free`].
#[no_mangle]
pub unsafe extern "C" fn rr_score_json(
    scorer: *const RrScorer,
    parent_json: *const c_char,
    current_json: *const c_char,
    metadata_json: *const c_char,
    out_json: *mut *mut c_char,
) -> RrStatus {
    guard(|| {
        let scorer = scorer
            .as_ref()
            .ok_or_else(|| Failure(RrStatus::NullPointer, "`scorer` is null".into()))?;
        let out = out_arg(out_json, "out_json")?;
        *out = ptr::null_mut();
        let parent = if parent_json.is_null() {
            None
        } else {
            Some(str_arg(parent_json, "parent_json")?)
        };
        let b = score_breakdown(
            scorer,
            parent,
            str_arg(current_json, "current_json")?,
            str_arg(metadata_json, "metadata_json")?,
        )?;
        *out = to_c_string(serde_json::to_string(&b).map_err(parse_err)?)?;
        Ok(())
    })
}

/// Content deltas between two entity documents, as a JSON array.
///
/// # Safety
/// Strings must be NUL-terminated (`parent_json` may be NULL); `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_diff(
    parent_json: *const c_char,
    current_json: *const c_char,
    out_json: *mut *mut c_char,
) -> RrStatus {
    guard(|| {
        let out = out_arg(out_json, "out_json")?;
        *out = ptr::null_mut();
        let parent = if parent_json.is_null() {
            None
        } else {
            Some(document(str_arg(parent_json, "parent_json")?)?)
        };
        let current = document(str_arg(current_json, "current_json")?)?;
        let deltas = diff_entities(parent.as_ref(), &current)?;
        *out = to_c_string(serde_json::to_string(&deltas).map_err(parse_err)?)?;
        Ok(())
    })
}

/// Loads a tab-separated label map.
///
/// # Safety
/// `path` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_labels_load(path: *const c_char, out: *mut *mut RrLabelMap) -> RrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let labels = LabelMap::load_tsv(str_arg(path, "path")?).map_err(|e| Failure(RrStatus::Io, e.to_string()))?;
        *out = Box::into_raw(Box::new(RrLabelMap(labels)));
        Ok(())
    })
}

/// Number of labels, or 0 for NULL.
///
/// # Safety
/// `labels` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rr_labels_len(labels: *const RrLabelMap) -> usize {
    labels.as_ref().map_or(0, |l| l.0.len())
}

/// # Safety
/// `labels` must come from [`rr_labels_load`] and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn rr_labels_free(labels: *mut RrLabelMap) {
    if !labels.is_null() {
        drop(Box::from_raw(labels));
    }
}

/// Textualizes a JSON array of deltas into a JSON array of changes.
/// `labels` may be NULL, in which case every identifier renders as `unknown`.
///
/// # Safety
/// `deltas_json` must be NUL-terminated; `labels` NULL or live; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_textualize(
    deltas_json: *const c_char,
    labels: *const RrLabelMap,
    out_json: *mut *mut c_char,
) -> RrStatus {
    guard(|| {
        let out = out_arg(out_json, "out_json")?;
        *out = ptr::null_mut();
        let deltas: Vec<ContentDelta> = serde_json::from_str(str_arg(deltas_json, "deltas_json")?).map_err(parse_err)?;
        let empty = LabelMap::new();
        let labels = labels.as_ref().map_or(&empty, |l| &l.0);
        let changes = Graph2Text::default().textualize_revision(&deltas, labels, None);
        *out = to_c_string(serde_json::to_string(&changes).map_err(parse_err)?)?;
        Ok(())
    })
}

/// ROC AUC of `scores` against 0/1 `labels`, both of length `n`.
///
/// # Safety
/// `scores` and `labels` must point to `n` readable elements; `out_auc` writable.
#[no_mangle]
pub unsafe extern "C" fn rr_auc(scores: *const f64, labels: *const u8, n: usize, out_auc: *mut f64) -> RrStatus {
    guard(|| {
        let out = out_arg(out_auc, "out_auc")?;
        if n == 0 || scores.is_null() || labels.is_null() {
            return Err(Failure(RrStatus::InvalidArgument, "empty or null input".into()));
        }
        let scores = std::slice::from_raw_parts(scores, n);
        let labels: Vec<bool> = std::slice::from_raw_parts(labels, n).iter().map(|&l| l != 0).collect();
        *out = auc_of(scores, &labels).map_err(|e| Failure(RrStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
