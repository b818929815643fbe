//! C ABI over `laf-core`.
//!
//! Objects cross the boundary as opaque handles created by `laf_*_new` /
//! `laf_*_load` style functions and released with the matching `_free`.
//! Every fallible call returns a [`LafStatus`]; on failure the message is
//! available from [`laf_last_error_message`] on the same thread. Strings
//! returned as `char *` are owned by the caller and must be released with
//! [`laf_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use laf_core::diffusion::{img2img_init, make_schedule, sample, ScoreModelSpec, Trajectory};
use laf_core::guidance::{compose_laf, GuidanceParams, NoisePrediction};
use laf_core::locate::{EditPlan, LocateMode};
use laf_core::metrics::{self, Embedding};
use laf_core::pipeline::{load_lexicon, locate_texts};
use laf_core::text_parse::Lexicon;
use laf_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LafStatus {
    Ok = 0,
    /// I/O failure or invalid argument value.
    Invalid = 1,
    /// Text could not be parsed or located.
    Parse = 2,
    /// A concept phrase does not match any model component.
    Concept = 3,
    NullPointer = 4,
    InvalidUtf8 = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Locator direction; see the core crate's `LocateMode`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LafLocateMode {
    ImageResidual = 0,
    PaperLiteral = 1,
}

impl From<LafLocateMode> for LocateMode {
    fn from(m: LafLocateMode) -> Self {
        match m {
            LafLocateMode::ImageResidual => LocateMode::ImageResidual,
            LafLocateMode::PaperLiteral => LocateMode::PaperLiteral,
        }
    }
}

pub struct LafLexicon(Lexicon);
pub struct LafModel(ScoreModelSpec);
pub struct LafEditPlan(EditPlan);
pub struct LafTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: LafStatus, msg: impl Into<String>) -> LafStatus {
    set_error(msg.into());
    status
}

fn status_of(err: &Error) -> LafStatus {
    match err.exit_code() {
        2 => LafStatus::Parse,
        3 => LafStatus::Concept,
        _ => LafStatus::Invalid,
    }
}

/// Run `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), LafStatus>) -> LafStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LafStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(LafStatus::Panic, "panic inside laf"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, LafStatus>;
}

impl<T> OrStatus<T> for laf_core::Result<T> {
    fn or_status(self) -> Result<T, LafStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, LafStatus> {
    if p.is_null() {
        return Err(fail(LafStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(LafStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, LafStatus> {
    p.as_ref()
        .ok_or_else(|| fail(LafStatus::NullPointer, format!("{name} is null")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], LafStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(LafStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, LafStatus> {
    p.as_mut()
        .ok_or_else(|| fail(LafStatus::NullPointer, format!("{name} is null")))
}

fn into_c_string(s: String) -> Result<*mut c_char, LafStatus> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| fail(LafStatus::Invalid, "string contains a nul byte"))
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn laf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn laf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn laf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- lexicon ----

/// Shipped lexicon, optionally extended by a TSV file (`path` may be NULL).
///
/// # Safety
/// `path` is NULL or a valid C string; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn laf_lexicon_load(path: *const c_char, out: *mut *mut LafLexicon) -> LafStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = if path.is_null() {
            None
        } else {
            Some(str_arg(path, "path")?)
        };
        let lex = load_lexicon(path.map(std::path::Path::new)).or_status()?;
        *out = Box::into_raw(Box::new(LafLexicon(lex)));
        Ok(())
    })
}

/// # Safety
/// `lex` is NULL or a handle from [`laf_lexicon_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn laf_lexicon_free(lex: *mut LafLexicon) {
    if !lex.is_null() {
        drop(Box::from_raw(lex));
    }
}

// ---- edit plan ----

/// Parse caption and prompt and locate what to forget. `lexicon` may be NULL
/// for the shipped lexicon.
///
/// # Safety
/// String arguments are valid C strings, `lexicon` is NULL or a live handle,
/// `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn laf_locate(
    caption: *const c_char,
    prompt: *const c_char,
    mode: LafLocateMode,
    lexicon: *const LafLexicon,
    out: *mut *mut LafEditPlan,
) -> LafStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let caption = str_arg(caption, "caption")?;
        let prompt = str_arg(prompt, "prompt")?;
        let lex = match lexicon.as_ref() {
            Some(l) => &l.0,
            None => Lexicon::builtin(),
        };
        let plan = locate_texts(caption, prompt, mode.into(), lex).or_status()?;
        *out = Box::into_raw(Box::new(LafEditPlan(plan)));
        Ok(())
    })
}

/// # Safety
/// `plan` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn laf_edit_plan_free(plan: *mut LafEditPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// # Safety
/// `plan` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn laf_edit_plan_forgetting_count(plan: *const LafEditPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.0.forgetting_elements.len())
}

/// # Safety
/// `plan` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn laf_edit_plan_positive_count(plan: *const LafEditPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.0.positive_concepts.len())
}

/// Copy of forgetting element `index`; free with [`laf_string_free`].
///
/// # Safety
/// `plan` is a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn laf_edit_plan_forgetting_element(
    plan: *const LafEditPlan,
    index: usize,
    out: *mut *mut c_char,
) -> LafStatus {
    guard(|| {
        let plan = ref_arg(plan, "plan")?;
        let out = out_arg(out, "out")?;
        let s = plan
            .0
            .forgetting_elements
            .get(index)
            .ok_or_else(|| fail(LafStatus::Invalid, format!("index {index} out of range")))?;
        *out = into_c_string(s.clone())?;
        Ok(())
    })
}

/// Copy of positive concept `index`; free with [`laf_string_free`].
///
/// # Safety
/// `plan` is a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn laf_edit_plan_positive_concept(
    plan: *const LafEditPlan,
    index: usize,
    out: *mut *mut c_char,
) -> LafStatus {
    guard(|| {
        let plan = ref_arg(plan, "plan")?;
        let out = out_arg(out, "out")?;
        let s = plan
            .0
            .positive_concepts
            .get(index)
            .ok_or_else(|| fail(LafStatus::Invalid, format!("index {index} out of range")))?;
        *out = into_c_string(s.clone())?;
        Ok(())
    })
}

/// The plan as JSON; free with [`laf_string_free`].
///
/// # Safety
/// `plan` is a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn laf_edit_plan_to_json(plan: *const LafEditPlan, out: *mut *mut c_char) -> LafStatus {
    guard(|| {
        let plan = ref_arg(plan, "plan")?;
        let out = out_arg(out, "out")?;
        let json = serde_json::to_string(&plan.0).map_err(|e| fail(LafStatus::Invalid, e.to_string()))?;
        *out = into_c_string(json)?;
        Ok(())
    })
}

// ---- model ----

/// Load a Gaussian-mixture model spec from a JSON file.
///
/// # Safety
/// `path` is a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn laf_model_load(path: *const c_char, out: *mut *mut LafModel) -> LafStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let model = ScoreModelSpec::from_path(str_arg(path, "path")?).or_status()?;
        *out = Box::into_raw(Box::new(LafModel(model)));
        Ok(())
    })
}

/// Parse a model spec from a JSON string.
///
/// # Safety
/// `json` is a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn laf_model_from_json(json: *const c_char, out: *mut *mut LafModel) -> LafStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let model = ScoreModelSpec::from_json(str_arg(json, "json")?).or_status()?;
        *out = Box::into_raw(Box::new(LafModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn laf_model_free(model: *mut LafModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn laf_model_dimension(model: *const LafModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.dimension)
}

// ---- sampling ----

/// Settings for [`laf_sample`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LafSampleParams {
    pub w: f64,
    pub eta: f64,
    pub steps: usize,
    pub strength: f64,
    pub seed: u64,
    pub chain: u64,
}

/// Defaults: w = 10, eta = 2.5, 50 steps, strength 0.8, seed 0, chain 0.
#[no_mangle]
pub extern "C" fn laf_sample_params_default() -> LafSampleParams {
    let g = GuidanceParams::EDIT_DEFAULT;
    LafSampleParams {
        w: g.w,
        eta: g.eta,
        steps: 50,
        strength: 0.8,
        seed: 0,
        chain: 0,
    }
}

/// Noise `input` (length = model dimension) to the start timestep and run the
/// guided sampler to t = 0.
///
/// # Safety
/// Handles are live, `input` points to `input_len` doubles, `out` is valid.
#[no_mangle]
pub unsafe extern "C" fn laf_sample(
    model: *const LafModel,
    plan: *const LafEditPlan,
    params: LafSampleParams,
    input: *const f64,
    input_len: usize,
    out: *mut *mut LafTrajectory,
) -> LafStatus {
    guard(|| {
        let model = &ref_arg(model, "model")?.0;
        let plan = &ref_arg(plan, "plan")?.0;
        let input = slice_arg(input, input_len, "input")?;
        let out = out_arg(out, "out")?;
        let guidance = GuidanceParams::new(params.w, params.eta).or_status()?;
        let sched = make_schedule(1000, 1e-4, 0.02, params.steps).or_status()?;
        let init = img2img_init(input, params.strength, &sched, params.seed, params.chain).or_status()?;
        let traj = sample(model, plan, guidance, &sched, init, params.seed).or_status()?;
        *out = Box::into_raw(Box::new(LafTrajectory(traj)));
        Ok(())
    })
}

/// # Safety
/// `traj` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn laf_trajectory_free(traj: *mut LafTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of recorded states, start and end included.
///
/// # Safety
/// `traj` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn laf_trajectory_len(traj: *const LafTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.states.len())
}

/// Copy the final latent into `out` (capacity `out_len`, at least the model
/// dimension).
///
/// # Safety
/// `traj` is a live handle and `out` points to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn laf_trajectory_final(traj: *const LafTrajectory, out: *mut f64, out_len: usize) -> LafStatus {
    guard(|| {
        let z = &ref_arg(traj, "traj")?.0.final_state().z;
        if out_len < z.len() {
            return Err(fail(
                LafStatus::Invalid,
                format!("buffer holds {out_len}, need {}", z.len()),
            ));
        }
        if out.is_null() {
            return Err(fail(LafStatus::NullPointer, "out is null"));
        }
        std::slice::from_raw_parts_mut(out, z.len()).copy_from_slice(z);
        Ok(())
    })
}

/// The trajectory as CSV (`t,z0,...`); free with [`laf_string_free`].
///
/// # Safety
/// `traj` is a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn laf_trajectory_to_csv(traj: *const LafTrajectory, out: *mut *mut c_char) -> LafStatus {
    guard(|| {
        let traj = ref_arg(traj, "traj")?;
        let out = out_arg(out, "out")?;
        *out = into_c_string(traj.0.to_csv())?;
        Ok(())
    })
}

// ---- guidance ----

/// Composed guidance for `dim`-dimensional predictions:
/// `u + w (p - u) - eta * sum_k (n_k - u)`. `negatives` holds `n_negatives`
/// rows of `dim` values back to back; it may be NULL when `n_negatives` is 0.
///
/// # Safety
/// Every pointer addresses the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn laf_compose_laf(
    eps_uncond: *const f64,
    eps_pos: *const f64,
    negatives: *const f64,
    n_negatives: usize,
    dim: usize,
    w: f64,
    eta: f64,
    out: *mut f64,
) -> LafStatus {
    guard(|| {
        let pred = |p: &[f64]| NoisePrediction::new(p.to_vec(), 0).or_status();
        let u = pred(slice_arg(eps_uncond, dim, "eps_uncond")?)?;
        let p = pred(slice_arg(eps_pos, dim, "eps_pos")?)?;
        let negs = slice_arg(negatives, dim * n_negatives, "negatives")?;
        let negs = negs.chunks(dim.max(1)).map(pred).collect::<Result<Vec<_>, _>>()?;
        let params = GuidanceParams::new(w, eta).or_status()?;
        let r = compose_laf(&u, &p, &negs, params).or_status()?;
        if dim > 0 {
            if out.is_null() {
                return Err(fail(LafStatus::NullPointer, "out is null"));
            }
            std::slice::from_raw_parts_mut(out, dim).copy_from_slice(&r.values);
        }
        Ok(())
    })
}

// ---- metrics ----

unsafe fn embedding(p: *const f64, len: usize, name: &str) -> Result<Embedding, LafStatus> {
    Ok(Embedding::new(slice_arg(p, len, name)?.to_vec()))
}

/// Cosine similarity of two `dim`-vectors.
///
/// # Safety
/// Both pointers address `dim` doubles; `out` is valid.
#[no_mangle]
pub unsafe extern "C" fn laf_clip_t(text: *const f64, image: *const f64, dim: usize, out: *mut f64) -> LafStatus {
    guard(|| {
        let v = metrics::clip_t(&embedding(text, dim, "text")?, &embedding(image, dim, "image")?).or_status()?;
        *out_arg(out, "out")? = v;
        Ok(())
    })
}

/// Inception Score of `n` rows of `k` class probabilities.
///
/// # Safety
/// `probs` addresses `n * k` doubles; `out` is valid.
#[no_mangle]
pub unsafe extern "C" fn laf_inception_score(probs: *const f64, n: usize, k: usize, out: *mut f64) -> LafStatus {
    guard(|| {
        let flat = slice_arg(probs, n * k, "probs")?;
        let rows: Vec<Vec<f64>> = if k == 0 {
            Vec::new()
        } else {
            flat.chunks(k).map(<[f64]>::to_vec).collect()
        };
        let v = metrics::inception_score(&rows).or_status()?;
        *out_arg(out, "out")? = v;
        Ok(())
    })
}

/// Mean absolute difference of two `len`-vectors.
///
/// # Safety
/// Both pointers address `len` doubles; `out` is valid.
#[no_mangle]
pub unsafe extern "C" fn laf_l1(x_in: *const f64, x_out: *const f64, len: usize, out: *mut f64) -> LafStatus {
    guard(|| {
        let v = metrics::l1(slice_arg(x_in, len, "x_in")?, slice_arg(x_out, len, "x_out")?).or_status()?;
        *out_arg(out, "out")? = v;
        Ok(())
    })
}

/// Directional change toward the reference relative to the input.
///
/// # Safety
/// All three pointers address `dim` doubles; `out` is valid.
#[no_mangle]
pub unsafe extern "C" fn laf_clip_d(
    emb_out: *const f64,
    emb_in: *const f64,
    emb_ref: *const f64,
    dim: usize,
    out: *mut f64,
) -> LafStatus {
    guard(|| {
        let v = metrics::clip_d(
            &embedding(emb_out, dim, "emb_out")?,
            &embedding(emb_in, dim, "emb_in")?,
            &embedding(emb_ref, dim, "emb_ref")?,
        )
        .or_status()?;
        *out_arg(out, "out")? = v;
        Ok(())
    })
}
