//! C ABI over the `symcere` library.
//!
//! Objects are opaque handles created by `symc_*_new`/`load` functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`SymcStatus`]; on failure the message is available from
//! [`symc_last_error`] on the same thread until the next failing call.
//! Configuration strings use the same TOML layout as the command-line
//! `--config` file; NULL means all defaults.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use ndarray::Array2;
use symcere::config::RunConfig;
use symcere::dataio::{load_prepared, InteractionSet};
use symcere::evaluator::evaluate_all;
use symcere::synth::generate_synthetic_dataset;
use symcere::trainer::{load_checkpoint, Trainer};
use symcere::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymcStatus {
    Ok = 0,
    /// Bad configuration or argument value.
    Config = 1,
    /// Unreadable, malformed or inconsistent input.
    Data = 2,
    /// Non-finite values or degenerate norms during computation.
    Numeric = 3,
    /// A required pointer was NULL or a string was not UTF-8.
    InvalidArgument = 4,
    /// The caller's buffer is smaller than the result.
    BufferTooSmall = 5,
    /// Internal failure; the handle involved should be freed.
    Panic = 6,
}

/// Per-epoch loss means, mirroring the training log.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SymcEpochLosses {
    pub epoch: u64,
    pub cross_modal: f64,
    pub intra_modal: f64,
    pub bpr: f64,
    pub param_sq_norm: f64,
    pub total: f64,
}

/// A split interaction set with its text embeddings.
pub struct SymcDataset {
    dataset: InteractionSet,
    text: Array2<f32>,
}

pub struct SymcTrainer {
    trainer: Trainer,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SymcStatus {
    match e.exit_code() {
        1 => SymcStatus::Config,
        2 => SymcStatus::Data,
        _ => SymcStatus::Numeric,
    }
}

enum Failure {
    Lib(Error),
    Arg(&'static str),
    Small,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SymcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SymcStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Arg(what))) => {
            set_error(format!("invalid argument: {what}"));
            SymcStatus::InvalidArgument
        }
        Ok(Err(Failure::Small)) => {
            set_error("output buffer too small".into());
            SymcStatus::BufferTooSmall
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            SymcStatus::Panic
        }
    }
}

unsafe fn opt_str<'a>(p: *const c_char, what: &'static str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p).to_str().map(Some).map_err(|_| Failure::Arg(what))
}

unsafe fn req_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    opt_str(p, what)?.ok_or(Failure::Arg(what))
}

unsafe fn req_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Arg(what))
}

fn run_config(toml: Option<&str>) -> Result<RunConfig, Failure> {
    let c = match toml {
        Some(t) => RunConfig::from_toml(t)?,
        None => RunConfig::default(),
    };
    c.validate()?;
    Ok(c)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn symc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn symc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Opens a prepared dataset directory. The directory must hold text
/// embeddings.
///
/// # Safety
/// `dir` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn symc_dataset_load(dir: *const c_char, out: *mut *mut SymcDataset) -> SymcStatus {
    guard(|| {
        let out = out.as_mut().ok_or(Failure::Arg("out"))?;
        let dir = PathBuf::from(req_str(dir, "dir")?);
        let p = load_prepared(&dir)?;
        let text = p
            .text
            .ok_or_else(|| Error::Data(format!("{} has no text embeddings", dir.display())))?;
        *out = Box::into_raw(Box::new(SymcDataset { dataset: p.dataset, text }));
        Ok(())
    })
}

/// Generates a planted-cluster synthetic dataset from the `[synth]` section
/// of `config_toml` (NULL for defaults).
///
/// # Safety
/// `config_toml` must be NULL or a valid NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn symc_dataset_synthesize(config_toml: *const c_char, out: *mut *mut SymcDataset) -> SymcStatus {
    guard(|| {
        let out = out.as_mut().ok_or(Failure::Arg("out"))?;
        let c = run_config(opt_str(config_toml, "config_toml")?)?;
        let s = generate_synthetic_dataset(&c.synth)?;
        *out = Box::into_raw(Box::new(SymcDataset {
            dataset: s.dataset,
            text: s.text,
        }));
        Ok(())
    })
}

/// # Safety
/// `ds` must be valid and every non-NULL output pointer writable.
#[no_mangle]
pub unsafe extern "C" fn symc_dataset_shape(
    ds: *const SymcDataset,
    num_users: *mut usize,
    num_items: *mut usize,
    num_train: *mut usize,
    num_test: *mut usize,
) -> SymcStatus {
    guard(|| {
        let ds = req_ref(ds, "ds")?;
        let d = &ds.dataset;
        for (p, v) in [
            (num_users, d.num_users()),
            (num_items, d.num_items()),
            (num_train, d.train().len()),
            (num_test, d.test().len()),
        ] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `ds` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn symc_dataset_free(ds: *mut SymcDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Fresh trainer on the dataset's train partition with the `[model]`,
/// `[loss]` and `[train]` sections of `config_toml` (NULL for defaults).
/// The dataset may be freed afterwards.
///
/// # Safety
/// `ds` must be valid; `config_toml` NULL or NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn symc_trainer_new(
    ds: *const SymcDataset,
    config_toml: *const c_char,
    out: *mut *mut SymcTrainer,
) -> SymcStatus {
    guard(|| {
        let out = out.as_mut().ok_or(Failure::Arg("out"))?;
        let ds = req_ref(ds, "ds")?;
        let c = run_config(opt_str(config_toml, "config_toml")?)?;
        let trainer = Trainer::new(c.train_config(), ds.dataset.train().clone(), ds.text.view())?;
        *out = Box::into_raw(Box::new(SymcTrainer { trainer }));
        Ok(())
    })
}

/// Restores a trainer from a checkpoint file using the config stored in it.
///
/// # Safety
/// `ds` must be valid; `path` NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn symc_trainer_load(
    ds: *const SymcDataset,
    path: *const c_char,
    out: *mut *mut SymcTrainer,
) -> SymcStatus {
    guard(|| {
        let out = out.as_mut().ok_or(Failure::Arg("out"))?;
        let ds = req_ref(ds, "ds")?;
        let ck = load_checkpoint(&PathBuf::from(req_str(path, "path")?))?;
        let config = ck.config.clone();
        let trainer = Trainer::from_checkpoint(ck, config, ds.dataset.train().clone(), ds.text.view(), false)?;
        *out = Box::into_raw(Box::new(SymcTrainer { trainer }));
        Ok(())
    })
}

/// Runs one epoch; `losses` may be NULL.
///
/// # Safety
/// `tr` must be valid; `losses` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn symc_trainer_train_epoch(tr: *mut SymcTrainer, losses: *mut SymcEpochLosses) -> SymcStatus {
    guard(|| {
        let tr = tr.as_mut().ok_or(Failure::Arg("tr"))?;
        let l = tr.trainer.train_epoch()?;
        if let Some(out) = losses.as_mut() {
            *out = SymcEpochLosses {
                epoch: l.epoch,
                cross_modal: l.cross_modal,
                intra_modal: l.intra_modal,
                bpr: l.bpr,
                param_sq_norm: l.param_sq_norm,
                total: l.total,
            };
        }
        Ok(())
    })
}

/// HR@k and NDCG@k on the dataset's held-out split, macro-averaged.
///
/// # Safety
/// `tr` and `ds` must be valid; `hr` and `ndcg` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn symc_trainer_evaluate(
    tr: *const SymcTrainer,
    ds: *const SymcDataset,
    k: usize,
    hr: *mut f64,
    ndcg: *mut f64,
) -> SymcStatus {
    guard(|| {
        let tr = req_ref(tr, "tr")?;
        let ds = req_ref(ds, "ds")?;
        if ds.dataset.train() != tr.trainer.train_partition() {
            return Err(Error::Data("dataset does not match the trainer's train partition".into()).into());
        }
        let nodes = tr.trainer.node_embeddings()?;
        let r = evaluate_all(nodes.view(), &ds.dataset, &[k], tr.trainer.score_mode(), false)?;
        if let Some(p) = hr.as_mut() {
            *p = r.hr[0];
        }
        if let Some(p) = ndcg.as_mut() {
            *p = r.ndcg[0];
        }
        Ok(())
    })
}

/// Copies the node embeddings (users, then items; row-major) into `buf`.
/// `rows` and `cols` are always written; pass `buf = NULL` to query the size.
///
/// # Safety
/// `tr` must be valid; `buf` NULL or writable for `len` doubles; `rows`/`cols` writable.
#[no_mangle]
pub unsafe extern "C" fn symc_trainer_embeddings(
    tr: *const SymcTrainer,
    buf: *mut f64,
    len: usize,
    rows: *mut usize,
    cols: *mut usize,
) -> SymcStatus {
    guard(|| {
        let tr = req_ref(tr, "tr")?;
        let nodes = tr.trainer.node_embeddings()?;
        *rows.as_mut().ok_or(Failure::Arg("rows"))? = nodes.nrows();
        *cols.as_mut().ok_or(Failure::Arg("cols"))? = nodes.ncols();
        if buf.is_null() {
            return Ok(());
        }
        if len < nodes.len() {
            return Err(Failure::Small);
        }
        let out = std::slice::from_raw_parts_mut(buf, nodes.len());
        for (o, v) in out.iter_mut().zip(nodes.iter()) {
            *o = *v;
        }
        Ok(())
    })
}

/// # Safety
/// `tr` must be valid; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn symc_trainer_save(tr: *const SymcTrainer, path: *const c_char) -> SymcStatus {
    guard(|| {
        let tr = req_ref(tr, "tr")?;
        tr.trainer.save_checkpoint(&PathBuf::from(req_str(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `tr` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn symc_trainer_free(tr: *mut SymcTrainer) {
    if !tr.is_null() {
        drop(Box::from_raw(tr));
    }
}
