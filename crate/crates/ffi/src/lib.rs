//! C interface to the `kgcp` engine.
//!
//! Every function returns a [`KgcpStatus`]. On failure a human-readable
//! message is stored per thread and can be read with
//! [`kgcp_last_error_message`]. Objects cross the boundary as opaque handles
//! that must be released with the matching `*_free` function.
//!
//! Arrays are caller-owned. Decisions are passed row-major as `n * d`
//! contiguous doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;
use std::sync::Arc;

use kgcp::benchmarks::Problem;
use kgcp::design::{maximin_lhs, DesignSpec};
use kgcp::hyperfit::{default_log10_bounds, mle_fit, model_policy_score, MleOptions};
use kgcp::kriging::{fit, BasisSet, Dataset, Hyperparameters, KrigingModel};
use kgcp::policies::{PolicyContext, PolicySpec};
use kgcp::{Domain, Error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgcpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InsufficientData = 3,
    DuplicateDecision = 4,
    IllConditioned = 5,
    NoValidStart = 6,
    SamplingStalled = 7,
    UndefinedGradient = 8,
    AcquisitionFailed = 9,
    EvaluationFailed = 10,
    Config = 11,
    Io = 12,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgcpPolicy {
    ExpectedImprovement = 0,
    Kgcp = 1,
    SoftKgcp = 2,
    Ucb = 3,
}

impl From<KgcpPolicy> for PolicySpec {
    fn from(p: KgcpPolicy) -> Self {
        match p {
            KgcpPolicy::ExpectedImprovement => PolicySpec::ExpectedImprovement,
            KgcpPolicy::Kgcp => PolicySpec::Kgcp,
            KgcpPolicy::SoftKgcp => PolicySpec::SoftKgcp,
            KgcpPolicy::Ucb => PolicySpec::Ucb,
        }
    }
}

/// Fitted Kriging surrogate.
pub struct KgcpModel(KrigingModel);

/// Built-in benchmark problem.
pub struct KgcpProblem(Problem);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> KgcpStatus {
    match err {
        Error::InvalidArgument(_) => KgcpStatus::InvalidArgument,
        Error::InsufficientData { .. } => KgcpStatus::InsufficientData,
        Error::DuplicateDecision { .. } => KgcpStatus::DuplicateDecision,
        Error::IllConditioned { .. } => KgcpStatus::IllConditioned,
        Error::NoValidStart { .. } => KgcpStatus::NoValidStart,
        Error::SamplingStalled { .. } => KgcpStatus::SamplingStalled,
        Error::UndefinedGradient => KgcpStatus::UndefinedGradient,
        Error::AcquisitionFailed => KgcpStatus::AcquisitionFailed,
        Error::EvaluationFailed(_) => KgcpStatus::EvaluationFailed,
        Error::Config(_) => KgcpStatus::Config,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => KgcpStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

type FfiResult = Result<(), Fail>;

fn guard(f: impl FnOnce() -> FfiResult) -> KgcpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            KgcpStatus::Ok
        }
        Ok(Err(Fail::Null(name))) => {
            set_last_error(format!("null pointer passed for `{name}`"));
            KgcpStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            KgcpStatus::Panic
        }
    }
}

unsafe fn input<'a>(p: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, name: &'static str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(name))
}

unsafe fn dataset(x: *const f64, y: *const f64, n: usize, d: usize, lower: *const f64, upper: *const f64) -> Result<Arc<Dataset>, Fail> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()).into());
    }
    let x = input(x, n * d, "x")?;
    let y = input(y, n, "y")?;
    let domain = Domain::new(input(lower, d, "lower")?.to_vec(), input(upper, d, "upper")?.to_vec())?;
    let rows = x.chunks(d).map(<[f64]>::to_vec).collect();
    Ok(Arc::new(Dataset::new(rows, y.to_vec(), domain)?))
}

/// Message for the most recent failure on this thread, or null after a
/// success. The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn kgcp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Fit an ordinary Kriging model with fixed correlation parameters `theta`
/// (length `d`).
///
/// # Safety
/// `x` must hold `n * d` doubles, `y` `n`, and `lower`, `upper`, `theta` `d`
/// each. `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kgcp_model_fit(
    x: *const f64,
    y: *const f64,
    n: usize,
    d: usize,
    lower: *const f64,
    upper: *const f64,
    theta: *const f64,
    out: *mut *mut KgcpModel,
) -> KgcpStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let data = dataset(x, y, n, d, lower, upper)?;
        let theta = Hyperparameters::new(input(theta, d, "theta")?.to_vec())?;
        let model = fit(data, &BasisSet::ordinary(), &theta)?;
        *out = Box::into_raw(Box::new(KgcpModel(model)));
        Ok(())
    })
}

/// Fit an ordinary Kriging model by multistart maximum likelihood with the
/// default settings. The starts are drawn from `seed`.
///
/// # Safety
/// As for [`kgcp_model_fit`], without `theta`.
#[no_mangle]
pub unsafe extern "C" fn kgcp_model_fit_mle(
    x: *const f64,
    y: *const f64,
    n: usize,
    d: usize,
    lower: *const f64,
    upper: *const f64,
    seed: u64,
    out: *mut *mut KgcpModel,
) -> KgcpStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let data = dataset(x, y, n, d, lower, upper)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = mle_fit(data, &BasisSet::ordinary(), &default_log10_bounds(d), &MleOptions::default(), &mut rng)?;
        *out = Box::into_raw(Box::new(KgcpModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from a `kgcp_model_fit*` call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kgcp_model_free(model: *mut KgcpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of input dimensions, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kgcp_model_dim(model: *const KgcpModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.data().dim())
}

/// Copy the fitted correlation parameters into `theta_out` (length `d`).
///
/// # Safety
/// `model` must be live; `theta_out` must hold `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn kgcp_model_theta(model: *const KgcpModel, theta_out: *mut f64) -> KgcpStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        output(theta_out, m.data().dim(), "theta_out")?.copy_from_slice(m.theta().values());
        Ok(())
    })
}

/// Prediction mean and variance at `x` (length `d`).
///
/// # Safety
/// `model` must be live; `x` must hold `d` doubles; both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn kgcp_model_predict(
    model: *const KgcpModel,
    x: *const f64,
    mean: *mut f64,
    variance: *mut f64,
) -> KgcpStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        let x = input(x, m.data().dim(), "x")?;
        let mean = output(mean, 1, "mean")?;
        let variance = output(variance, 1, "variance")?;
        let p = m.predict(x)?;
        mean[0] = p.mean;
        variance[0] = p.variance;
        Ok(())
    })
}

/// Gradients of the prediction mean and variance at `x`.
///
/// # Safety
/// `model` must be live; `x`, `dmean` and `dvariance` must hold `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn kgcp_model_predict_gradient(
    model: *const KgcpModel,
    x: *const f64,
    dmean: *mut f64,
    dvariance: *mut f64,
) -> KgcpStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        let d = m.data().dim();
        let x = input(x, d, "x")?;
        let dmean = output(dmean, d, "dmean")?;
        let dvariance = output(dvariance, d, "dvariance")?;
        let g = m.predict_gradient(x)?;
        dmean.copy_from_slice(&g.mean);
        dvariance.copy_from_slice(&g.variance);
        Ok(())
    })
}

/// Policy value at `x`. `ucb_beta` is read only by UCB and `soft_k` only by
/// the soft knowledge gradient. When `gradient` is non-null it receives `d`
/// partial derivatives.
///
/// # Safety
/// `model` must be live; `x` must hold `d` doubles; `value` writable;
/// `gradient` null or writable for `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn kgcp_model_policy(
    model: *const KgcpModel,
    policy: KgcpPolicy,
    x: *const f64,
    y_max: f64,
    ucb_beta: f64,
    soft_k: f64,
    value: *mut f64,
    gradient: *mut f64,
) -> KgcpStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        let d = m.data().dim();
        let x = input(x, d, "x")?;
        let value = output(value, 1, "value")?;
        let mut ctx = PolicyContext::new(y_max, m.data().len());
        ctx.ucb_beta = ucb_beta;
        ctx.soft_k = soft_k;
        let s = model_policy_score(m, policy.into(), x, &ctx, !gradient.is_null())?;
        value[0] = s.value;
        if let Some(g) = s.gradient {
            output(gradient, d, "gradient")?.copy_from_slice(&g);
        }
        Ok(())
    })
}

/// Expected improvement over `y_max` for a normal prediction `(mu, s)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kgcp_expected_improvement(mu: f64, s: f64, y_max: f64, out: *mut f64) -> KgcpStatus {
    guard(|| {
        output(out, 1, "out")?[0] = kgcp::policies::expected_improvement(mu, s, y_max)?;
        Ok(())
    })
}

/// Expected decrement below `y_max` for a normal prediction `(mu, s)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kgcp_expected_decrement(mu: f64, s: f64, y_max: f64, out: *mut f64) -> KgcpStatus {
    guard(|| {
        output(out, 1, "out")?[0] = kgcp::policies::expected_decrement(mu, s, y_max)?;
        Ok(())
    })
}

/// Hard knowledge gradient, `min(EI, ED)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kgcp_knowledge_gradient(mu: f64, s: f64, y_max: f64, out: *mut f64) -> KgcpStatus {
    guard(|| {
        output(out, 1, "out")?[0] = kgcp::policies::kgcp(mu, s, y_max)?;
        Ok(())
    })
}

/// GP-UCB exploration weight for `iteration` observations in `d` dimensions.
#[no_mangle]
pub extern "C" fn kgcp_ucb_beta(iteration: usize, d: usize, delta: f64) -> f64 {
    kgcp::policies::ucb_beta(iteration, d, delta)
}

/// Maximin Latin hypercube of `n` points in the box `[lower, upper]`,
/// written row-major to `out` (`n * d` doubles).
///
/// # Safety
/// `lower`, `upper` must hold `d` doubles; `out` must hold `n * d`.
#[no_mangle]
pub unsafe extern "C" fn kgcp_maximin_lhs(
    n: usize,
    d: usize,
    seed: u64,
    lower: *const f64,
    upper: *const f64,
    out: *mut f64,
) -> KgcpStatus {
    guard(|| {
        let domain = Domain::new(input(lower, d, "lower")?.to_vec(), input(upper, d, "upper")?.to_vec())?;
        let rows = maximin_lhs(&DesignSpec { n, d, seed }, &domain)?;
        let out = output(out, n * d, "out")?;
        for (dst, row) in out.chunks_mut(d).zip(&rows) {
            dst.copy_from_slice(row);
        }
        Ok(())
    })
}

/// Look up a built-in problem by name (`branin`, `hartmann6`, `schwefel`,
/// `eggholder`). Objectives are negated so that larger is better.
///
/// # Safety
/// `name` must be a nul-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kgcp_problem_new(name: *const c_char, out: *mut *mut KgcpProblem) -> KgcpStatus {
    guard(|| {
        if name.is_null() {
            return Err(Fail::Null("name"));
        }
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let name = CStr::from_ptr(name)
            .to_str()
            .map_err(|_| Error::InvalidArgument("problem name is not UTF-8".into()))?;
        let p = Problem::by_name(name).ok_or_else(|| Error::Config(format!("unknown problem `{name}`")))?;
        *out = Box::into_raw(Box::new(KgcpProblem(p)));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from [`kgcp_problem_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn kgcp_problem_free(problem: *mut KgcpProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kgcp_problem_dim(problem: *const KgcpProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.0.dim())
}

/// Bounds, global maximum and a maximizer of the problem. Any output pointer
/// may be null to skip it; the array outputs take `d` doubles.
///
/// # Safety
/// `problem` must be live; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn kgcp_problem_info(
    problem: *const KgcpProblem,
    lower: *mut f64,
    upper: *mut f64,
    optimum: *mut f64,
    optimizer: *mut f64,
) -> KgcpStatus {
    guard(|| {
        let p = &handle(problem, "problem")?.0;
        let d = p.dim();
        for (dst, src) in [(lower, &p.domain.lower), (upper, &p.domain.upper), (optimizer, &p.true_optimizer)] {
            if !dst.is_null() {
                output(dst, d, "bounds")?.copy_from_slice(src);
            }
        }
        if !optimum.is_null() {
            *optimum = p.true_optimum;
        }
        Ok(())
    })
}

/// Evaluate the (negated) objective at `x`.
///
/// # Safety
/// `problem` must be live; `x` must hold `d` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kgcp_problem_evaluate(problem: *const KgcpProblem, x: *const f64, out: *mut f64) -> KgcpStatus {
    guard(|| {
        let p = &handle(problem, "problem")?.0;
        let x = input(x, p.dim(), "x")?;
        if !p.domain.contains(x) {
            return Err(Error::InvalidArgument(format!("{x:?} lies outside the problem domain")).into());
        }
        output(out, 1, "out")?[0] = p.evaluate(x);
        Ok(())
    })
}
