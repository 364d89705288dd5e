//! C ABI for `hymmsbm`.
//!
//! Objects cross the boundary as opaque handles that the caller releases with the
//! matching `*_free` function. Every fallible call returns an [`HmStatus`]; on
//! failure [`hm_last_error_message`] describes the error for the calling thread.
//! Results are written through out-pointers only on success.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hymmsbm::evaluation::{
    auc_score, cosine_similarity_score, train_test_split, AucOptions, AucWeighting,
};
use hymmsbm::hypergraph::load_hyperedge_list;
use hymmsbm::inference::InferenceReport;
use hymmsbm::model::ParamsFile;
use hymmsbm::rng::{derive_seed, rng_from_seed};
use hymmsbm::sampler::sample_exact;
use hymmsbm::{infer, Error, Hypergraph, InferenceConfig, ModelParams, PriorRates};
use ndarray::Array2;

/// Status codes. Values 1 to 3 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HmStatus {
    Ok = 0,
    /// Null pointer, invalid UTF-8 or an argument outside its domain.
    InvalidArgument = 1,
    /// Unreadable or malformed input.
    DataError = 2,
    /// Inference produced non-finite values or every restart failed.
    NumericalError = 3,
    /// A Rust panic was caught at the boundary.
    Panic = 4,
}

/// Weight at which held-out and negative hyperedges are compared in AUC.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HmAucWeighting {
    Observed = 0,
    Unit = 1,
}

/// Inference settings. Obtain defaults from [`hm_infer_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HmInferConfig {
    pub num_communities: usize,
    pub num_restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub check_every: usize,
    pub prior_u: f64,
    pub prior_w: f64,
    pub assortative: bool,
    pub seed: u64,
}

/// Opaque hypergraph.
pub struct HmHypergraph(Hypergraph);

/// Opaque model parameters.
pub struct HmParams(ModelParams);

/// Opaque inference report.
pub struct HmReport(InferenceReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

struct Failure(HmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.exit_code() {
            3 => HmStatus::NumericalError,
            _ => match e {
                Error::Domain(_) | Error::InvalidParams(_) | Error::ShapeMismatch { .. } => {
                    HmStatus::InvalidArgument
                }
                _ => HmStatus::DataError,
            },
        };
        Failure(status, e.to_string())
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(HmStatus::InvalidArgument, message.into())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> HmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => HmStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(format!("panic: {message}"));
            HmStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| invalid(format!("{name} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| invalid(format!("{name} is null")))
}

unsafe fn path_arg(p: *const c_char, name: &str) -> Result<String, Failure> {
    if p.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn config_from(c: &HmInferConfig) -> Result<InferenceConfig, Failure> {
    let cfg = InferenceConfig {
        num_communities: c.num_communities,
        num_restarts: c.num_restarts,
        max_iter: c.max_iter,
        tol: c.tol,
        check_every: c.check_every,
        priors: PriorRates::new(c.prior_u, c.prior_w)?,
        assortative: c.assortative,
        seed: c.seed,
        ..InferenceConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn copy_out(src: &Array2<f64>, buf: *mut f64, len: usize) -> Result<(), Failure> {
    if len != src.len() {
        return Err(invalid(format!("buffer holds {len} values, need {}", src.len())));
    }
    if buf.is_null() {
        return Err(invalid("buffer is null"));
    }
    let out = unsafe { std::slice::from_raw_parts_mut(buf, len) };
    for (o, x) in out.iter_mut().zip(src.iter()) {
        *o = *x;
    }
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn hm_infer_config_default() -> HmInferConfig {
    let d = InferenceConfig::default();
    HmInferConfig {
        num_communities: d.num_communities,
        num_restarts: d.num_restarts,
        max_iter: d.max_iter,
        tol: d.tol,
        check_every: d.check_every,
        prior_u: d.priors.rate_u,
        prior_w: d.priors.rate_w,
        assortative: d.assortative,
        seed: d.seed,
    }
}

/// Loads a hyperedge list file (weight 1 for lines without one).
#[no_mangle]
pub unsafe extern "C" fn hm_hypergraph_load(path: *const c_char, out: *mut *mut HmHypergraph) -> HmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let h = load_hyperedge_list(path_arg(path, "path")?, 1)?;
        *out = Box::into_raw(Box::new(HmHypergraph(h)));
        Ok(())
    })
}

/// Builds a hypergraph from `num_edges` hyperedges: hyperedge `e` has
/// `sizes[e]` nodes, stored consecutively in `nodes`, and weight `weights[e]`
/// (all 1 when `weights` is NULL). `num_nodes` of 0 infers N from the largest index.
#[no_mangle]
pub unsafe extern "C" fn hm_hypergraph_from_edges(
    num_nodes: usize,
    nodes: *const usize,
    sizes: *const usize,
    weights: *const u64,
    num_edges: usize,
    out: *mut *mut HmHypergraph,
) -> HmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let sizes = slice_arg(sizes, num_edges, "sizes")?;
        let total: usize = sizes.iter().sum();
        let nodes = slice_arg(nodes, total, "nodes")?;
        let weights = if weights.is_null() {
            None
        } else {
            Some(slice_arg(weights, num_edges, "weights")?)
        };
        let mut offset = 0;
        let mut edges = Vec::with_capacity(num_edges);
        for (e, &size) in sizes.iter().enumerate() {
            edges.push((nodes[offset..offset + size].to_vec(), weights.map_or(1, |w| w[e])));
            offset += size;
        }
        let n = (num_nodes > 0).then_some(num_nodes);
        *out = Box::into_raw(Box::new(HmHypergraph(Hypergraph::from_edges(n, edges)?)));
        Ok(())
    })
}

/// New hypergraph keeping only hyperedges of size at most `max_size`, with `D = max_size`.
#[no_mangle]
pub unsafe extern "C" fn hm_hypergraph_truncate(
    h: *const HmHypergraph,
    max_size: usize,
    out: *mut *mut HmHypergraph,
) -> HmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let t = borrow(h, "hypergraph")?.0.truncate_to_size(max_size)?;
        *out = Box::into_raw(Box::new(HmHypergraph(t)));
        Ok(())
    })
}

/// Number of nodes, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn hm_hypergraph_num_nodes(h: *const HmHypergraph) -> usize {
    h.as_ref().map_or(0, |h| h.0.num_nodes())
}

/// Number of distinct hyperedges, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn hm_hypergraph_num_edges(h: *const HmHypergraph) -> usize {
    h.as_ref().map_or(0, |h| h.0.num_edges())
}

/// Maximum hyperedge size D, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn hm_hypergraph_max_size(h: *const HmHypergraph) -> usize {
    h.as_ref().map_or(0, |h| h.0.max_size())
}

/// Writes the hypergraph in hyperedge-list format.
#[no_mangle]
pub unsafe extern "C" fn hm_hypergraph_save(h: *const HmHypergraph, path: *const c_char) -> HmStatus {
    guard(|| {
        borrow(h, "hypergraph")?.0.save(path_arg(path, "path")?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn hm_hypergraph_free(h: *mut HmHypergraph) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Parameters from row-major `u` (`num_nodes × num_communities`) and `w`
/// (`num_communities × num_communities`, symmetric).
#[no_mangle]
pub unsafe extern "C" fn hm_params_new(
    u: *const f64,
    num_nodes: usize,
    num_communities: usize,
    w: *const f64,
    out: *mut *mut HmParams,
) -> HmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let k = num_communities;
        let u = slice_arg(u, num_nodes * k, "u")?.to_vec();
        let w = slice_arg(w, k * k, "w")?.to_vec();
        let u = Array2::from_shape_vec((num_nodes, k), u).map_err(|e| invalid(e.to_string()))?;
        let w = Array2::from_shape_vec((k, k), w).map_err(|e| invalid(e.to_string()))?;
        *out = Box::into_raw(Box::new(HmParams(ModelParams::new(u, w)?)));
        Ok(())
    })
}

/// Loads a parameters JSON file.
#[no_mangle]
pub unsafe extern "C" fn hm_params_load(path: *const c_char, out: *mut *mut HmParams) -> HmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let p = ParamsFile::load(path_arg(path, "path")?)?.to_params()?;
        *out = Box::into_raw(Box::new(HmParams(p)));
        Ok(())
    })
}

/// Writes a parameters JSON file.
#[no_mangle]
pub unsafe extern "C" fn hm_params_save(p: *const HmParams, path: *const c_char) -> HmStatus {
    guard(|| {
        borrow(p, "params")?.0.to_json(None, None).save(path_arg(path, "path")?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn hm_params_num_nodes(p: *const HmParams) -> usize {
    p.as_ref().map_or(0, |p| p.0.num_nodes())
}

#[no_mangle]
pub unsafe extern "C" fn hm_params_num_communities(p: *const HmParams) -> usize {
    p.as_ref().map_or(0, |p| p.0.num_communities())
}

/// Copies `u` row-major into `buf`, which must hold exactly N·K values.
#[no_mangle]
pub unsafe extern "C" fn hm_params_copy_u(p: *const HmParams, buf: *mut f64, len: usize) -> HmStatus {
    guard(|| copy_out(borrow(p, "params")?.0.u(), buf, len))
}

/// Copies `w` row-major into `buf`, which must hold exactly K·K values.
#[no_mangle]
pub unsafe extern "C" fn hm_params_copy_w(p: *const HmParams, buf: *mut f64, len: usize) -> HmStatus {
    guard(|| copy_out(borrow(p, "params")?.0.w(), buf, len))
}

#[no_mangle]
pub unsafe extern "C" fn hm_params_free(p: *mut HmParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Fits the model with random restarts.
#[no_mangle]
pub unsafe extern "C" fn hm_infer(
    h: *const HmHypergraph,
    config: *const HmInferConfig,
    out: *mut *mut HmReport,
) -> HmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let cfg = config_from(borrow(config, "config")?)?;
        let report = infer(&borrow(h, "hypergraph")?.0, &cfg)?;
        *out = Box::into_raw(Box::new(HmReport(report)));
        Ok(())
    })
}

/// Best log-posterior of the report, or NaN for NULL.
#[no_mangle]
pub unsafe extern "C" fn hm_report_best_objective(r: *const HmReport) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.best_objective)
}

/// Seed of the winning restart, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn hm_report_best_seed(r: *const HmReport) -> u64 {
    r.as_ref().map_or(0, |r| r.0.best_seed)
}

/// Copy of the best parameters; release with [`hm_params_free`].
#[no_mangle]
pub unsafe extern "C" fn hm_report_params(r: *const HmReport, out: *mut *mut HmParams) -> HmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let p = borrow(r, "report")?.0.best_params.clone();
        *out = Box::into_raw(Box::new(HmParams(p)));
        Ok(())
    })
}

/// Writes the best parameters as JSON, with the winning seed and objective.
#[no_mangle]
pub unsafe extern "C" fn hm_report_save_params(r: *const HmReport, path: *const c_char) -> HmStatus {
    guard(|| {
        let r = &borrow(r, "report")?.0;
        r.best_params
            .to_json(Some(r.best_seed), Some(r.best_objective))
            .save(path_arg(path, "path")?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn hm_report_free(r: *mut HmReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Draws a hypergraph with hyperedge sizes `2..=max_size` from the model.
#[no_mangle]
pub unsafe extern "C" fn hm_sample(
    p: *const HmParams,
    max_size: usize,
    seed: u64,
    out: *mut *mut HmHypergraph,
) -> HmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let mut rng = rng_from_seed(seed);
        let h = sample_exact(&borrow(p, "params")?.0, max_size, &mut rng)?;
        *out = Box::into_raw(Box::new(HmHypergraph(h)));
        Ok(())
    })
}

/// Splits `h` with `train_ratio` using the configuration seed, fits on the
/// training part and writes the held-out AUC and its standard error. Matches the
/// `auc` command of the CLI.
#[no_mangle]
pub unsafe extern "C" fn hm_auc(
    h: *const HmHypergraph,
    config: *const HmInferConfig,
    train_ratio: f64,
    comparisons_per_edge: usize,
    weighting: HmAucWeighting,
    auc: *mut f64,
    std_err: *mut f64,
) -> HmStatus {
    guard(|| {
        let auc = out_ptr(auc, "auc")?;
        let std_err = out_ptr(std_err, "std_err")?;
        let raw = borrow(config, "config")?;
        let cfg = config_from(raw)?;
        let split = train_test_split(&borrow(h, "hypergraph")?.0, train_ratio, raw.seed)?;
        let report = infer(&split.train, &cfg)?;
        let options = AucOptions {
            comparisons_per_edge,
            weighting: match weighting {
                HmAucWeighting::Observed => AucWeighting::Observed,
                HmAucWeighting::Unit => AucWeighting::Unit,
            },
        };
        let mut rng = rng_from_seed(derive_seed(raw.seed, 1));
        let result = auc_score(&report.best_params, &split, &mut rng, &options)?;
        *auc = result.auc;
        *std_err = result.std_err;
        Ok(())
    })
}

/// Cosine similarity between row-major ground-truth memberships
/// (`num_nodes × num_communities`) and the `u` of `inferred`, after the best
/// column alignment.
#[no_mangle]
pub unsafe extern "C" fn hm_cosine_similarity(
    u_true: *const f64,
    num_nodes: usize,
    num_communities: usize,
    inferred: *const HmParams,
    out: *mut f64,
) -> HmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let values = slice_arg(u_true, num_nodes * num_communities, "u_true")?.to_vec();
        let truth = Array2::from_shape_vec((num_nodes, num_communities), values)
            .map_err(|e| invalid(e.to_string()))?;
        *out = cosine_similarity_score(&truth, borrow(inferred, "inferred")?.0.u())?;
        Ok(())
    })
}
