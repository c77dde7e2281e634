//! C ABI over the linklogic explainer.
//!
//! Handles are opaque pointers created by `*_open` / `*_load` and released
//! with the matching `*_free`. Every fallible call returns an [`LlStatus`];
//! on failure [`ll_last_error`] describes the error of the calling thread.
//! Strings returned through `out` parameters are owned by the caller and
//! released with [`ll_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use linklogic::baseline::{heuristic_explain, heuristic_json};
use linklogic::cli::{exit_code, feature_spec, parse_query, EXIT_CONFIG, EXIT_INPUT};
use linklogic::config::{resolve_perturbation, ExplainOptions, Layers};
use linklogic::explain::{explain, explanation_json};
use linklogic::kg::Dataset;
use linklogic::kge::{load_embeddings_for, EmbeddingStore};
use linklogic::Error;

/// Status codes. Non-zero codes below 4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlStatus {
    LlOk = 0,
    LlErrRuntime = 1,
    /// Bad input data or an unknown entity or relation.
    LlErrInput = 2,
    LlErrConfig = 3,
    /// A required pointer argument was null.
    LlErrNull = 4,
    /// A string argument was not valid UTF-8.
    LlErrUtf8 = 5,
    /// The library panicked; the handle arguments should not be reused.
    LlErrPanic = 6,
}

/// A prepared dataset directory.
pub struct LlDataset {
    dataset: Dataset,
}

/// Embeddings checked against a dataset's vocabulary.
pub struct LlEmbeddings {
    store: EmbeddingStore,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(LlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match exit_code(&e) {
            EXIT_INPUT => LlStatus::LlErrInput,
            EXIT_CONFIG => LlStatus::LlErrConfig,
            _ => LlStatus::LlErrRuntime,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            LlStatus::LlOk
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("panic inside linklogic");
            LlStatus::LlErrPanic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(LlStatus::LlErrNull, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(LlStatus::LlErrUtf8, format!("{what} is not valid UTF-8")))
}

/// # Safety
/// `p` must be null or point to a live handle of type `T`.
unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn give_string(s: String, out: *mut *mut c_char) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure(LlStatus::LlErrRuntime, "output contains NUL".into()))?;
    // SAFETY: checked non-null by the caller before any work is done.
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Message for the last failed call on this thread, or "" after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ll_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Open a dataset directory written by `linklogic prepare` or `synth`.
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ll_dataset_open(dir: *const c_char, out: *mut *mut LlDataset) -> LlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let dir = text(dir, "dir")?;
        let dataset = Dataset::open(dir)?;
        *out = Box::into_raw(Box::new(LlDataset { dataset }));
        Ok(())
    })
}

/// Release a dataset. Null is ignored.
///
/// # Safety
/// `dataset` must be null or a handle from [`ll_dataset_open`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ll_dataset_free(dataset: *mut LlDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of entities in the dataset, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ll_entity_count(dataset: *const LlDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.dataset.vocab.num_entities())
}

/// Load an embedding file and check it against the dataset's names.
///
/// # Safety
/// `dataset` must be a live handle, `path` a NUL-terminated string and
/// `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ll_embeddings_load(
    dataset: *const LlDataset,
    path: *const c_char,
    out: *mut *mut LlEmbeddings,
) -> LlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let d = handle(dataset, "dataset")?;
        let path = text(path, "path")?;
        let store = load_embeddings_for(Path::new(path), &d.dataset.vocab)?;
        *out = Box::into_raw(Box::new(LlEmbeddings { store }));
        Ok(())
    })
}

/// Release embeddings. Null is ignored.
///
/// # Safety
/// `embeddings` must be null or a handle from [`ll_embeddings_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ll_embeddings_free(embeddings: *mut LlEmbeddings) {
    if !embeddings.is_null() {
        drop(Box::from_raw(embeddings));
    }
}

/// Plausibility in (0, 1) of the triple named by `head`, `relation`, `tail`.
///
/// # Safety
/// Handles must be live, names NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ll_score(
    dataset: *const LlDataset,
    embeddings: *const LlEmbeddings,
    head: *const c_char,
    relation: *const c_char,
    tail: *const c_char,
    out: *mut f64,
) -> LlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let d = handle(dataset, "dataset")?;
        let e = handle(embeddings, "embeddings")?;
        let t = d.dataset.vocab.triple(text(head, "head")?, text(relation, "relation")?, text(tail, "tail")?)?;
        *out = e.store.plausibility(t.head, t.relation, t.tail)?;
        Ok(())
    })
}

enum Which {
    LinkLogic,
    Heuristic,
}

unsafe fn explain_with(
    which: Which,
    dataset: *const LlDataset,
    embeddings: *const LlEmbeddings,
    query: *const c_char,
    config: *const c_char,
    out: *mut *mut c_char,
) -> LlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let d = handle(dataset, "dataset")?;
        let e = handle(embeddings, "embeddings")?;
        let query = parse_query(&d.dataset.vocab, text(query, "query")?)?;
        let file = if config.is_null() {
            toml::Table::new()
        } else {
            text(config, "config")?.parse::<toml::Table>().map_err(|err| Error::Config(err.to_string()))?
        };
        let mut layers = Layers::new(file, toml::Table::new(), None)?;
        let pcfg = resolve_perturbation(&mut layers)?;
        let opts = layers.take(&ExplainOptions::default())?;
        layers.finish()?;
        let spec = feature_spec(&d.dataset.vocab, opts.exclude_query_inverse)?;
        let graph = &d.dataset.split.train;
        let json = match which {
            Which::LinkLogic => {
                let x = explain(&e.store, graph, &query, &pcfg, &spec)?;
                explanation_json(&x, &d.dataset.vocab, &pcfg, &spec)
            }
            Which::Heuristic => {
                let h = opts.heuristic()?;
                let x = heuristic_explain(&e.store, graph, &query, &pcfg, &spec, &h)?;
                heuristic_json(&x, &d.dataset.vocab, &h)
            }
        };
        give_string(json.to_string(), out)
    })
}

/// Explain `query` ("head relation tail") with LinkLogic and return the
/// explanation as JSON. `config` is null or a flat TOML document with the
/// same keys as `linklogic explain`.
///
/// # Safety
/// Handles must be live, strings NUL-terminated or (for `config`) null,
/// and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ll_explain_json(
    dataset: *const LlDataset,
    embeddings: *const LlEmbeddings,
    query: *const c_char,
    config: *const c_char,
    out: *mut *mut c_char,
) -> LlStatus {
    explain_with(Which::LinkLogic, dataset, embeddings, query, config, out)
}

/// Same as [`ll_explain_json`] for the path score heuristic.
///
/// # Safety
/// As for [`ll_explain_json`].
#[no_mangle]
pub unsafe extern "C" fn ll_heuristic_json(
    dataset: *const LlDataset,
    embeddings: *const LlEmbeddings,
    query: *const c_char,
    config: *const c_char,
    out: *mut *mut c_char,
) -> LlStatus {
    explain_with(Which::Heuristic, dataset, embeddings, query, config, out)
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ll_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
