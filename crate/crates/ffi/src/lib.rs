//! C ABI for poolplan.
//!
//! Every fallible function returns a [`PoolplanStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and can
//! be copied out with [`poolplan_last_error`]. Simulation configs and reports
//! are opaque handles that must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use poolplan::cost::{self, Multiplicity, Prevalence};
use poolplan::optimizer::{self, SearchBounds};
use poolplan::simulator::{self, InfectionModel, SimConfig, SimReport};
use poolplan::PoolError;

/// Result codes. Zero is success.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolplanStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidPrevalence = 2,
    InvalidPoolSize = 3,
    InvalidMultiplicity = 4,
    LambertDomain = 5,
    NoInteriorOptimum = 6,
    EmptyRange = 7,
    InvalidBounds = 8,
    OutOfRange = 9,
    NotAttained = 10,
    InvalidConfig = 11,
    Panic = 99,
}

impl From<&PoolError> for PoolplanStatus {
    fn from(e: &PoolError) -> Self {
        match e {
            PoolError::InvalidPrevalence(_) => Self::InvalidPrevalence,
            PoolError::InvalidPoolSize { .. } => Self::InvalidPoolSize,
            PoolError::InvalidMultiplicity(_) => Self::InvalidMultiplicity,
            PoolError::LambertDomain(_) => Self::LambertDomain,
            PoolError::NoInteriorOptimum { .. } => Self::NoInteriorOptimum,
            PoolError::EmptyRange { .. } => Self::EmptyRange,
            PoolError::InvalidBounds(_) => Self::InvalidBounds,
            PoolError::OutOfRange { .. } => Self::OutOfRange,
            PoolError::NotAttained(_) => Self::NotAttained,
            PoolError::InvalidConfig(_) => Self::InvalidConfig,
        }
    }
}

/// Optimal plan for one multiplicity. `s_continuous` is NaN when
/// `has_continuous` is false.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolplanPlan {
    pub k: u32,
    pub s_integer: u32,
    pub has_continuous: bool,
    pub s_continuous: f64,
    pub expected_cost: f64,
    pub baseline_cost: f64,
    pub beneficial: bool,
    pub cap_binding: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PoolplanTrialOutcome {
    pub trial_index: u64,
    pub pool_tests: u64,
    pub individual_retests: u64,
    pub total_tests: u64,
    pub positives: u64,
    pub detected_positives: u64,
    pub missed_positives: u64,
    pub suspect_negatives: u64,
}

/// Aggregated simulation statistics. Optional values are NaN when their
/// `has_` flag is false.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolplanSimSummary {
    pub trials: u64,
    pub mean_tests_per_patient: f64,
    pub has_std_error: bool,
    pub std_error: f64,
    pub mean_total_tests: f64,
    pub has_analytic_cost: bool,
    pub analytic_cost: f64,
    pub empirical_sensitivity: f64,
    pub total_positives: u64,
    pub total_detected: u64,
    pub total_missed: u64,
}

/// Opaque simulation configuration.
pub struct PoolplanSimConfig(SimConfig);

/// Opaque simulation result.
pub struct PoolplanSimReport(SimReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

enum Failure {
    Null(&'static str),
    Pool(PoolError),
}

impl From<PoolError> for Failure {
    fn from(e: PoolError) -> Self {
        Failure::Pool(e)
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F>(f: F) -> PoolplanStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PoolplanStatus::Ok,
        Ok(Err(Failure::Null(name))) => {
            set_last_error(format!("null pointer: {name}"));
            PoolplanStatus::NullPointer
        }
        Ok(Err(Failure::Pool(e))) => {
            set_last_error(e.to_string());
            PoolplanStatus::from(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            PoolplanStatus::Panic
        }
    }
}

fn write_out<T>(out: *mut T, name: &'static str, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(name));
    }
    // SAFETY: checked non-null; the caller guarantees it points to a writable T.
    unsafe { out.write(value) };
    Ok(())
}

fn config_ref<'a>(cfg: *const PoolplanSimConfig) -> Result<&'a PoolplanSimConfig, Failure> {
    // SAFETY: the caller passes NULL or a live handle from poolplan_sim_config_new_*.
    unsafe { cfg.as_ref() }.ok_or(Failure::Null("config"))
}

fn config_mut<'a>(cfg: *mut PoolplanSimConfig) -> Result<&'a mut PoolplanSimConfig, Failure> {
    // SAFETY: as above, and the handle is not shared across threads while mutated.
    unsafe { cfg.as_mut() }.ok_or(Failure::Null("config"))
}

fn bounds(s_max: u32, practical_cap: u32) -> SearchBounds {
    SearchBounds {
        s_max,
        practical_cap: (practical_cap != 0).then_some(practical_cap),
        ..SearchBounds::default()
    }
}

/// Library version as a static NUL-terminated string. Do not free.
#[no_mangle]
pub extern "C" fn poolplan_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length, 0 if none.
///
/// # Safety
/// `buf` must be NULL or point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn poolplan_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: caller guarantees `len` writable bytes at `buf`.
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Single-pooling expected tests per patient.
#[no_mangle]
pub extern "C" fn poolplan_single_pool_cost(p: f64, s: u32, out: *mut f64) -> PoolplanStatus {
    guard(|| write_out(out, "out", cost::single_pool_cost(Prevalence::new(p)?, s)?))
}

#[no_mangle]
pub extern "C" fn poolplan_double_pool_cost(p: f64, s: u32, out: *mut f64) -> PoolplanStatus {
    guard(|| write_out(out, "out", cost::double_pool_cost(Prevalence::new(p)?, s)?))
}

#[no_mangle]
pub extern "C" fn poolplan_k_pool_cost(p: f64, k: u32, s: u32, out: *mut f64) -> PoolplanStatus {
    guard(|| {
        let c = cost::k_pool_cost(Prevalence::new(p)?, Multiplicity::new(k)?, s)?;
        write_out(out, "out", c)
    })
}

/// Derivative of the expected cost with respect to a real-valued pool size.
#[no_mangle]
pub extern "C" fn poolplan_cost_derivative(p: f64, k: u32, s: f64, out: *mut f64) -> PoolplanStatus {
    guard(|| {
        let d = cost::cost_derivative(Prevalence::new(p)?, Multiplicity::new(k)?, s)?;
        write_out(out, "out", d)
    })
}

#[no_mangle]
pub extern "C" fn poolplan_lambert_w0(x: f64, out: *mut f64) -> PoolplanStatus {
    guard(|| write_out(out, "out", poolplan::lambert_w0(x)?))
}

#[no_mangle]
pub extern "C" fn poolplan_continuous_optimum(p: f64, k: u32, s_max: u32, out: *mut f64) -> PoolplanStatus {
    guard(|| {
        let s = optimizer::continuous_optimum(Prevalence::new(p)?, Multiplicity::new(k)?, &bounds(s_max, 0))?;
        write_out(out, "out", s)
    })
}

/// Integer optimum over `[2, cap]`; `practical_cap = 0` means no cap.
#[no_mangle]
pub extern "C" fn poolplan_integer_optimum(
    p: f64,
    k: u32,
    s_max: u32,
    practical_cap: u32,
    out: *mut PoolplanPlan,
) -> PoolplanStatus {
    guard(|| {
        let plan = optimizer::integer_optimum(Prevalence::new(p)?, Multiplicity::new(k)?, &bounds(s_max, practical_cap))?;
        write_out(
            out,
            "out",
            PoolplanPlan {
                k: plan.k,
                s_integer: plan.s_integer,
                has_continuous: plan.s_continuous.is_some(),
                s_continuous: plan.s_continuous.unwrap_or(f64::NAN),
                expected_cost: plan.expected_cost,
                baseline_cost: plan.baseline_cost,
                beneficial: plan.beneficial,
                cap_binding: plan.cap_binding,
            },
        )
    })
}

#[no_mangle]
pub extern "C" fn poolplan_savings_percent(p: f64, s_max: u32, out: *mut f64) -> PoolplanStatus {
    guard(|| write_out(out, "out", optimizer::savings_percent(Prevalence::new(p)?, &bounds(s_max, 0))?))
}

#[no_mangle]
pub extern "C" fn poolplan_find_p_for_continuous_s1(s_target: f64, out: *mut f64) -> PoolplanStatus {
    guard(|| write_out(out, "out", optimizer::find_p_for_continuous_s1(s_target)?.get()))
}

#[no_mangle]
pub extern "C" fn poolplan_find_savings_crossover(
    threshold_percent: f64,
    s_max: u32,
    grid_step: f64,
    out: *mut f64,
) -> PoolplanStatus {
    guard(|| {
        let p = optimizer::find_savings_crossover(threshold_percent, &bounds(s_max, 0), grid_step)?;
        write_out(out, "out", p.get())
    })
}

#[no_mangle]
pub extern "C" fn poolplan_pooling_breakeven(k: u32, s_max: u32, out: *mut f64) -> PoolplanStatus {
    guard(|| {
        let p = optimizer::pooling_breakeven(Multiplicity::new(k)?, &bounds(s_max, 0))?;
        write_out(out, "out", p.get())
    })
}

fn new_config(
    n: usize,
    infection: InfectionModel,
    k: u32,
    s: usize,
    out: *mut *mut PoolplanSimConfig,
) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    let cfg = SimConfig::new(n, infection, Multiplicity::new(k)?, s);
    write_out(out, "out", Box::into_raw(Box::new(PoolplanSimConfig(cfg))))
}

/// New config with Bernoulli(`p`) infections, one trial, seed 0, no pool
/// false negatives. Validation happens when it is run.
#[no_mangle]
pub extern "C" fn poolplan_sim_config_new_bernoulli(
    n: usize,
    p: f64,
    k: u32,
    s: usize,
    out: *mut *mut PoolplanSimConfig,
) -> PoolplanStatus {
    guard(|| new_config(n, InfectionModel::Bernoulli { p: Prevalence::new(p)? }, k, s, out))
}

/// New config with exactly `m` infected patients.
#[no_mangle]
pub extern "C" fn poolplan_sim_config_new_fixed(
    n: usize,
    m: usize,
    k: u32,
    s: usize,
    out: *mut *mut PoolplanSimConfig,
) -> PoolplanStatus {
    guard(|| new_config(n, InfectionModel::FixedCount { m }, k, s, out))
}

#[no_mangle]
pub extern "C" fn poolplan_sim_config_set_trials(cfg: *mut PoolplanSimConfig, trials: usize) -> PoolplanStatus {
    guard(|| {
        config_mut(cfg)?.0.trials = trials;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn poolplan_sim_config_set_seed(cfg: *mut PoolplanSimConfig, seed: u64) -> PoolplanStatus {
    guard(|| {
        config_mut(cfg)?.0.master_seed = seed;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn poolplan_sim_config_set_fn_rate(cfg: *mut PoolplanSimConfig, rate: f64) -> PoolplanStatus {
    guard(|| {
        config_mut(cfg)?.0.pool_fn_rate = rate;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be NULL or a handle from `poolplan_sim_config_new_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn poolplan_sim_config_free(cfg: *mut PoolplanSimConfig) {
    if !cfg.is_null() {
        // SAFETY: caller contract above.
        drop(unsafe { Box::from_raw(cfg) });
    }
}

#[no_mangle]
pub extern "C" fn poolplan_run_trial(
    cfg: *const PoolplanSimConfig,
    trial_index: u64,
    out: *mut PoolplanTrialOutcome,
) -> PoolplanStatus {
    guard(|| {
        let o = simulator::run_trial(&config_ref(cfg)?.0, trial_index)?;
        write_out(
            out,
            "out",
            PoolplanTrialOutcome {
                trial_index: o.trial_index,
                pool_tests: o.pool_tests,
                individual_retests: o.individual_retests,
                total_tests: o.total_tests,
                positives: o.positives,
                detected_positives: o.detected_positives,
                missed_positives: o.missed_positives,
                suspect_negatives: o.suspect_negatives,
            },
        )
    })
}

/// Runs every trial. The report handle must be freed with
/// `poolplan_sim_report_free`.
#[no_mangle]
pub extern "C" fn poolplan_sim_run(cfg: *const PoolplanSimConfig, out: *mut *mut PoolplanSimReport) -> PoolplanStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let report = simulator::run_simulation(&config_ref(cfg)?.0)?;
        write_out(out, "out", Box::into_raw(Box::new(PoolplanSimReport(report))))
    })
}

/// # Safety
/// `report` must be NULL or a live handle from `poolplan_sim_run`.
#[no_mangle]
pub unsafe extern "C" fn poolplan_sim_report_summary(
    report: *const PoolplanSimReport,
    out: *mut PoolplanSimSummary,
) -> PoolplanStatus {
    guard(|| {
        // SAFETY: caller contract above.
        let r = &unsafe { report.as_ref() }.ok_or(Failure::Null("report"))?.0;
        write_out(
            out,
            "out",
            PoolplanSimSummary {
                trials: r.trials as u64,
                mean_tests_per_patient: r.mean_tests_per_patient,
                has_std_error: r.std_error.is_some(),
                std_error: r.std_error.unwrap_or(f64::NAN),
                mean_total_tests: r.mean_total_tests,
                has_analytic_cost: r.analytic_cost.is_some(),
                analytic_cost: r.analytic_cost.unwrap_or(f64::NAN),
                empirical_sensitivity: r.empirical_sensitivity,
                total_positives: r.total_positives,
                total_detected: r.total_detected,
                total_missed: r.total_missed,
            },
        )
    })
}

/// # Safety
/// `report` must be NULL or a handle from `poolplan_sim_run` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn poolplan_sim_report_free(report: *mut PoolplanSimReport) {
    if !report.is_null() {
        // SAFETY: caller contract above.
        drop(unsafe { Box::from_raw(report) });
    }
}
