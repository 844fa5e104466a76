//! C ABI over the `wilink` toolkit.
//!
//! Every function returns a [`WlStatus`]; results come back through out
//! pointers. Objects are opaque handles released with their `*_free`
//! function. After a non-`Ok` status, [`wl_last_error`] describes the failure
//! on the calling thread. Panics never cross the boundary; they surface as
//! [`WlStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use wilink::harness::{
    dataset_hash, evaluate, parse_gen_config, predict, train, write_dataset_dir, CaseSpec,
    DatasetDir, FeatureSet, FeatureSpec, GenConfig, Model, TrainOptions,
};
use wilink::sim::{build_environment, generate_dataset};
use wilink::{Error, NUM_CLASSES};

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WlStatus {
    Ok = 0,
    InvalidArgument = 1,
    Data = 2,
    Numeric = 3,
    NullPointer = 4,
    Panic = 5,
}

/// A dataset directory; features are computed on first use and cached.
pub struct WlDataset {
    dir: DatasetDir,
    features: Option<FeatureSet>,
}

/// Trained or freshly initialised networks of one case.
pub struct WlModel {
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(WlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.exit_code() {
            1 => WlStatus::InvalidArgument,
            3 => WlStatus::Numeric,
            _ => WlStatus::Data,
        };
        Failure(status, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn null(what: &str) -> Failure {
    Failure(WlStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(WlStatus::InvalidArgument, msg.into())
}

/// Runs `f`, records any failure and converts it to a status.
fn guard(f: impl FnOnce() -> Outcome) -> WlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WlStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
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
            WlStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    str_arg(p, what).map(PathBuf::from)
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn case_spec(case: u32, cnn: u32) -> Result<CaseSpec, Failure> {
    let case =
        u8::try_from(case).map_err(|_| invalid(format!("case must be 1..=5, got {case}")))?;
    Ok(CaseSpec::new(case, cnn as usize)?)
}

fn cached_features(ds: &mut WlDataset) -> Result<&FeatureSet, Failure> {
    if ds.features.is_none() {
        ds.features = Some(ds.dir.features(FeatureSpec::default(), true, true)?);
    }
    Ok(ds.features.as_ref().expect("just filled"))
}

fn to_c_string(s: String, out: *mut *mut c_char) -> Outcome {
    let c = CString::new(s).map_err(|_| invalid("string contains NUL"))?;
    unsafe { *out_arg(out, "out")? = c.into_raw() };
    Ok(())
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn wl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Number of activity classes, i.e. the length of probability outputs.
#[no_mangle]
pub extern "C" fn wl_num_classes() -> usize {
    NUM_CLASSES
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn wl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Synthesises a dataset into `out_dir`. `config` is the text of a flat
/// `key = value` configuration, or null for defaults.
///
/// # Safety
/// String arguments must be null or valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn wl_generate(
    config: *const c_char,
    out_dir: *const c_char,
    seed: u64,
) -> WlStatus {
    guard(|| {
        let cfg = if config.is_null() {
            GenConfig::default()
        } else {
            parse_gen_config(str_arg(config, "config")?)?
        };
        let out = path_arg(out_dir, "out_dir")?;
        let env = build_environment(cfg.env.clone()).map_err(Error::from)?;
        let dataset = generate_dataset(&env, &cfg.dataset_spec(seed)).map_err(Error::from)?;
        write_dataset_dir(&out, &env, &dataset, true)?;
        Ok(())
    })
}

/// Opens a dataset directory.
///
/// # Safety
/// `dir` must be a valid string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_dataset_open(dir: *const c_char, out: *mut *mut WlDataset) -> WlStatus {
    guard(|| {
        let slot = out_arg(out, "out")?;
        let dir = DatasetDir::open(&path_arg(dir, "dir")?)?;
        *slot = Box::into_raw(Box::new(WlDataset {
            dir,
            features: None,
        }));
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a handle from [`wl_dataset_open`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wl_dataset_free(ds: *mut WlDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Sample counts of both splits and the number of links.
///
/// # Safety
/// `ds` must be a live handle; out pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn wl_dataset_info(
    ds: *const WlDataset,
    train: *mut usize,
    test: *mut usize,
    links: *mut usize,
) -> WlStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        let m = &ds.dir.dataset.manifest;
        for (p, v) in [
            (train, m.train_count),
            (test, m.test_count),
            (links, ds.dir.env.num_links()),
        ] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// SHA-256 of the dataset directory as a hex string; free with
/// [`wl_string_free`].
///
/// # Safety
/// `ds` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_dataset_hash(ds: *const WlDataset, out: *mut *mut c_char) -> WlStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("dataset"))?;
        to_c_string(dataset_hash(&ds.dir.path)?, out)
    })
}

/// Untrained networks for `case_number` (1..=5) with classifier `cnn` (1..=4).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_model_new(
    case_number: u32,
    cnn: u32,
    num_links: usize,
    seed: u64,
    out: *mut *mut WlModel,
) -> WlStatus {
    guard(|| {
        let slot = out_arg(out, "out")?;
        if num_links == 0 {
            return Err(invalid("num_links must be positive"));
        }
        let model = Model::new(
            case_spec(case_number, cnn)?,
            FeatureSpec::default(),
            num_links,
            seed,
        )?;
        *slot = Box::into_raw(Box::new(WlModel { model }));
        Ok(())
    })
}

/// Loads a checkpoint directory.
///
/// # Safety
/// `dir` must be a valid string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_model_load(dir: *const c_char, out: *mut *mut WlModel) -> WlStatus {
    guard(|| {
        let slot = out_arg(out, "out")?;
        let model = Model::load(&path_arg(dir, "dir")?)?;
        *slot = Box::into_raw(Box::new(WlModel { model }));
        Ok(())
    })
}

/// Writes a checkpoint; `hash_out`, if not null, receives its SHA-256 (free
/// with [`wl_string_free`]).
///
/// # Safety
/// `model` must be a live handle and `dir` a valid string.
#[no_mangle]
pub unsafe extern "C" fn wl_model_save(
    model: *const WlModel,
    dir: *const c_char,
    hash_out: *mut *mut c_char,
) -> WlStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let hash = m.model.save(&path_arg(dir, "dir")?)?;
        if hash_out.is_null() {
            Ok(())
        } else {
            to_c_string(hash, hash_out)
        }
    })
}

/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wl_model_free(model: *mut WlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Case number (1..=5) of a model.
///
/// # Safety
/// `model` must be a live handle; `case_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_model_case(model: *const WlModel, case_out: *mut u32) -> WlStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        *out_arg(case_out, "case_out")? = u32::from(m.model.spec.case());
        Ok(())
    })
}

/// Trains case `case_number` on the train split. `epochs == 0` keeps the case default.
/// On a numeric failure the status is `Numeric` and `out` still receives
/// the last good weights.
///
/// # Safety
/// `ds` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_train(
    ds: *mut WlDataset,
    case_number: u32,
    cnn: u32,
    epochs: usize,
    seed: u64,
    out: *mut *mut WlModel,
) -> WlStatus {
    guard(|| {
        let slot = out_arg(out, "out")?;
        let ds = ds.as_mut().ok_or_else(|| null("dataset"))?;
        let spec = case_spec(case_number, cnn)?;
        let env = ds.dir.env.clone();
        let fs = cached_features(ds)?;
        let opts = TrainOptions {
            epochs: (epochs > 0).then_some(epochs),
            seed,
            ..Default::default()
        };
        let outcome = train(&fs.train, &env, spec, fs.spec, &opts)?;
        *slot = Box::into_raw(Box::new(WlModel {
            model: outcome.model,
        }));
        match outcome.failure {
            Some(msg) => Err(Failure(WlStatus::Numeric, msg)),
            None => Ok(()),
        }
    })
}

/// Evaluates on the test split and returns the JSON report (free with
/// [`wl_string_free`]).
///
/// # Safety
/// Handles must be live and `json_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_evaluate(
    model: *const WlModel,
    ds: *mut WlDataset,
    seed: u64,
    json_out: *mut *mut c_char,
) -> WlStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let ds = ds.as_mut().ok_or_else(|| null("dataset"))?;
        let env = ds.dir.env.clone();
        let fs = cached_features(ds)?;
        if fs.test.is_empty() {
            return Err(Failure(
                WlStatus::Data,
                "dataset has no test samples".into(),
            ));
        }
        let report = evaluate(&m.model, &env, &fs.test, seed)?;
        let json =
            serde_json::to_string(&report).map_err(|e| Failure(WlStatus::Data, e.to_string()))?;
        to_c_string(json, json_out)
    })
}

/// Prediction for test sample `index`: the class, its probability vector
/// (`probs` holds [`wl_num_classes`] doubles) and the selected links
/// (`links` holds one byte per link, 1 when selected). `probs` and `links`
/// may be null.
///
/// # Safety
/// Handles must be live; non-null buffers must have the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn wl_predict(
    model: *const WlModel,
    ds: *mut WlDataset,
    index: usize,
    seed: u64,
    class_out: *mut u32,
    probs: *mut f64,
    links: *mut u8,
) -> WlStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let ds = ds.as_mut().ok_or_else(|| null("dataset"))?;
        let class_out = out_arg(class_out, "class_out")?;
        let env = ds.dir.env.clone();
        let fs = cached_features(ds)?;
        let f = fs.test.get(index).ok_or_else(|| {
            invalid(format!(
                "test index {index} out of range ({})",
                fs.test.len()
            ))
        })?;
        if f.num_links() != m.model.num_links {
            return Err(invalid(format!(
                "model expects {} links, dataset has {}",
                m.model.num_links,
                f.num_links()
            )));
        }
        let p = predict(&m.model, &env, f, seed)?;
        *class_out = p.class as u32;
        if !probs.is_null() {
            std::slice::from_raw_parts_mut(probs, NUM_CLASSES).copy_from_slice(&p.distribution);
        }
        if !links.is_null() {
            let out = std::slice::from_raw_parts_mut(links, f.num_links());
            out.fill(0);
            for l in p.group.links() {
                out[l] = 1;
            }
        }
        Ok(())
    })
}
