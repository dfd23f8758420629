//! C ABI over `dbandit`.
//!
//! Every function returns a [`DbanditStatus`] and writes its result through
//! an out-pointer. On failure a description is kept per thread and can be
//! read with [`dbandit_last_error_message`]. Objects crossing the boundary
//! are opaque handles created and destroyed by this library; strings
//! returned to the caller must be released with [`dbandit_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dbandit::analysis::{lower_bound_coefficient, upper_bound_coefficient, UpperBound};
use dbandit::config::{figure1_preset, parse_config, ExperimentConfig};
use dbandit::divergence::{d_inf_bernoulli, kl_bernoulli, kl_truncated};
use dbandit::exploration::{exploration_value, ExplorationFunction};
use dbandit::policy::{count_prediction, klucb_upper_bound, PlayerView};
use dbandit::sim::{run_monte_carlo, RunAggregate};
use dbandit::{CommunicationSchedule, Error};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DbanditStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DomainError = 3,
    ParseError = 4,
    NotApplicable = 5,
    InsufficientData = 6,
    OutOfRange = 7,
    IoError = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DbanditExploration {
    /// `ln t + 3 ln ln t`
    Standard = 0,
    /// `ln(2t)`
    Approximate = 1,
    /// `M (ln t + 3 ln ln t) / (1 + (M − 1) α)`
    Dklucb = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DbanditUpperBound {
    OverExploration = 0,
    DenseSchedule = 1,
    Dklucb = 2,
}

/// Opaque communication schedule.
pub struct DbanditSchedule {
    inner: CommunicationSchedule,
}

/// Opaque parsed experiment.
pub struct DbanditExperiment {
    inner: ExperimentConfig,
}

/// Opaque Monte Carlo aggregate.
pub struct DbanditAggregate {
    inner: RunAggregate,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> DbanditStatus {
    match err {
        Error::Domain { .. } | Error::NotSuboptimal { .. } => DbanditStatus::DomainError,
        Error::InvalidSchedule { .. } | Error::InvalidPolicy { .. } | Error::Config(_) => {
            DbanditStatus::ParseError
        }
        Error::NotApplicable(_) => DbanditStatus::NotApplicable,
        Error::InsufficientData(_) => DbanditStatus::InsufficientData,
        Error::UnknownCheckpoint(_) | Error::ShapeMismatch(_) => DbanditStatus::OutOfRange,
        Error::Io { .. } | Error::Csv { .. } => DbanditStatus::IoError,
        Error::InvalidRun(_) | Error::EmptyArmSet => DbanditStatus::InvalidArgument,
    }
}

struct Failure(DbanditStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail<T>(status: DbanditStatus, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, message.into()))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> DbanditStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => DbanditStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("panic inside dbandit".into());
            DbanditStatus::Panic
        }
    }
}

/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return fail(DbanditStatus::NullPointer, "output pointer is null");
    }
    out.write(value);
    Ok(())
}

/// # Safety
/// `handle` must be null or a live handle from this library.
unsafe fn borrow<'a, T>(handle: *const T, what: &str) -> Result<&'a T, Failure> {
    handle
        .as_ref()
        .ok_or_else(|| Failure(DbanditStatus::NullPointer, format!("{what} handle is null")))
}

/// # Safety
/// `s` must be null or a NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return fail(DbanditStatus::NullPointer, "string argument is null");
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        Failure(
            DbanditStatus::InvalidArgument,
            "string argument is not UTF-8".into(),
        )
    })
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dbandit_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dbandit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------------------
// Divergences and indices

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_kl_bernoulli(p: f64, q: f64, out: *mut f64) -> DbanditStatus {
    guard(|| write_out(out, kl_bernoulli(p, q)?))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_kl_truncated(p: f64, q: f64, out: *mut f64) -> DbanditStatus {
    guard(|| write_out(out, kl_truncated(p, q)?))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_d_inf_bernoulli(
    mu_a: f64,
    mu_star: f64,
    out: *mut f64,
) -> DbanditStatus {
    guard(|| write_out(out, d_inf_bernoulli(mu_a, mu_star)?))
}

/// KL-UCB upper confidence bound for an empirical mean and a budget `𝓕/N`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_klucb_upper_bound(
    mean: f64,
    budget: f64,
    out: *mut f64,
) -> DbanditStatus {
    guard(|| {
        if !(0.0..=1.0).contains(&mean) {
            return fail(
                DbanditStatus::DomainError,
                format!("mean {mean} is outside [0, 1]"),
            );
        }
        if budget.is_nan() || budget < 0.0 {
            return fail(
                DbanditStatus::InvalidArgument,
                format!("budget {budget} is negative"),
            );
        }
        write_out(out, klucb_upper_bound(mean, budget))
    })
}

/// `players` and `alpha` are only read for the DKLUCB variant.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_exploration_value(
    kind: DbanditExploration,
    players: u32,
    alpha: f64,
    t: u64,
    out: *mut f64,
) -> DbanditStatus {
    guard(|| {
        if t == 0 {
            return fail(DbanditStatus::InvalidArgument, "t must be at least 1");
        }
        let f = match kind {
            DbanditExploration::Standard => ExplorationFunction::Standard,
            DbanditExploration::Approximate => ExplorationFunction::Approximate,
            DbanditExploration::Dklucb => {
                if players == 0 || !(0.0..=1.0).contains(&alpha) {
                    return fail(
                        DbanditStatus::InvalidArgument,
                        "DKLUCB needs players >= 1 and alpha in [0, 1]",
                    );
                }
                ExplorationFunction::Dklucb { players, alpha }
            }
        };
        write_out(out, exploration_value(f, t))
    })
}

/// DKLUCB count prediction `N′` from a player's count and the snapshot.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_count_prediction(
    known_count: u64,
    snapshot_count: u64,
    players: u32,
    alpha: f64,
    out: *mut f64,
) -> DbanditStatus {
    guard(|| {
        if players == 0 || !(0.0..=1.0).contains(&alpha) {
            return fail(
                DbanditStatus::InvalidArgument,
                "need players >= 1 and alpha in [0, 1]",
            );
        }
        let view = PlayerView::from_parts(vec![known_count], vec![0], vec![snapshot_count])?;
        write_out(out, count_prediction(&view, 0, players, alpha))
    })
}

// ---------------------------------------------------------------------------
// Schedules

/// Parses `none | full | oneshot:<r> | linear:<d> | exp:<q> |
/// doubleexp:<q>,<eps> | explicit:<r1>,<r2>,...`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_schedule_parse(
    spec: *const c_char,
    out: *mut *mut DbanditSchedule,
) -> DbanditStatus {
    guard(|| {
        let inner: CommunicationSchedule = read_str(spec)?.parse()?;
        write_out(out, Box::into_raw(Box::new(DbanditSchedule { inner })))
    })
}

/// The one-shot schedule at `⌈T^{1/M}⌉`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_schedule_over_exploration(
    horizon: u64,
    players: u32,
    out: *mut *mut DbanditSchedule,
) -> DbanditStatus {
    guard(|| {
        let inner = CommunicationSchedule::over_exploration(horizon, players)?;
        write_out(out, Box::into_raw(Box::new(DbanditSchedule { inner })))
    })
}

/// # Safety
/// `schedule` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn dbandit_schedule_free(schedule: *mut DbanditSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// # Safety
/// `schedule` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_schedule_is_comm_round(
    schedule: *const DbanditSchedule,
    t: u64,
    out: *mut bool,
) -> DbanditStatus {
    guard(|| write_out(out, borrow(schedule, "schedule")?.inner.is_comm_round(t)))
}

/// `ℓ(t)`: the last communication round at or before `t`, 0 if none.
///
/// # Safety
/// `schedule` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_schedule_last_comm_leq(
    schedule: *const DbanditSchedule,
    t: u64,
    out: *mut u64,
) -> DbanditStatus {
    guard(|| write_out(out, borrow(schedule, "schedule")?.inner.last_comm_leq(t)))
}

/// # Safety
/// `schedule` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_schedule_counting_function(
    schedule: *const DbanditSchedule,
    n: u64,
    out: *mut u64,
) -> DbanditStatus {
    guard(|| {
        write_out(
            out,
            borrow(schedule, "schedule")?.inner.counting_function(n),
        )
    })
}

/// Writes the density and whether it was estimated from a finite list.
///
/// # Safety
/// `schedule` must be a live handle; both out-pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_schedule_density(
    schedule: *const DbanditSchedule,
    out_value: *mut f64,
    out_estimated: *mut bool,
) -> DbanditStatus {
    guard(|| {
        let d = borrow(schedule, "schedule")?.inner.density()?;
        write_out(out_value, d.value)?;
        write_out(out_estimated, d.estimated)
    })
}

/// Canonical text form; release with [`dbandit_string_free`].
///
/// # Safety
/// `schedule` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dbandit_schedule_to_string(
    schedule: *const DbanditSchedule,
) -> *mut c_char {
    match schedule.as_ref() {
        Some(s) => owned_string(s.inner.to_string()),
        None => ptr::null_mut(),
    }
}

// ---------------------------------------------------------------------------
// Bound constants

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_lower_bound_coefficient(
    players: u32,
    alpha: f64,
    mu_a: f64,
    mu_star: f64,
    out: *mut f64,
) -> DbanditStatus {
    guard(|| write_out(out, lower_bound_coefficient(players, alpha, mu_a, mu_star)?))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_upper_bound_coefficient(
    bound: DbanditUpperBound,
    players: u32,
    alpha: f64,
    mu_a: f64,
    mu_star: f64,
    out: *mut f64,
) -> DbanditStatus {
    guard(|| {
        let bound = match bound {
            DbanditUpperBound::OverExploration => UpperBound::OverExploration,
            DbanditUpperBound::DenseSchedule => UpperBound::DenseSchedule,
            DbanditUpperBound::Dklucb => UpperBound::Dklucb,
        };
        write_out(
            out,
            upper_bound_coefficient(bound, players, alpha, mu_a, mu_star)?,
        )
    })
}

// ---------------------------------------------------------------------------
// Experiments

/// Parses an experiment config document.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_experiment_parse(
    text: *const c_char,
    out: *mut *mut DbanditExperiment,
) -> DbanditStatus {
    guard(|| {
        let inner = parse_config(read_str(text)?)?;
        write_out(out, Box::into_raw(Box::new(DbanditExperiment { inner })))
    })
}

/// The built-in `figure1` preset.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_experiment_figure1(
    out: *mut *mut DbanditExperiment,
) -> DbanditStatus {
    guard(|| {
        write_out(
            out,
            Box::into_raw(Box::new(DbanditExperiment {
                inner: figure1_preset(),
            })),
        )
    })
}

/// # Safety
/// `experiment` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn dbandit_experiment_free(experiment: *mut DbanditExperiment) {
    if !experiment.is_null() {
        drop(Box::from_raw(experiment));
    }
}

/// # Safety
/// `experiment` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dbandit_experiment_set_replications(
    experiment: *mut DbanditExperiment,
    replications: u32,
) -> DbanditStatus {
    guard(|| {
        let e = experiment.as_mut().ok_or_else(|| {
            Failure(
                DbanditStatus::NullPointer,
                "experiment handle is null".into(),
            )
        })?;
        if replications == 0 {
            return fail(
                DbanditStatus::InvalidArgument,
                "at least one replication is required",
            );
        }
        e.inner.replications = replications;
        Ok(())
    })
}

/// # Safety
/// `experiment` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dbandit_experiment_set_seed(
    experiment: *mut DbanditExperiment,
    seed: u64,
) -> DbanditStatus {
    guard(|| {
        let e = experiment.as_mut().ok_or_else(|| {
            Failure(
                DbanditStatus::NullPointer,
                "experiment handle is null".into(),
            )
        })?;
        e.inner.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `experiment` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_experiment_num_strategies(
    experiment: *const DbanditExperiment,
    out: *mut usize,
) -> DbanditStatus {
    guard(|| {
        write_out(
            out,
            borrow(experiment, "experiment")?.inner.strategies.len(),
        )
    })
}

/// Name of strategy `index`; release with [`dbandit_string_free`]. NULL if
/// the handle is null or the index is out of range.
///
/// # Safety
/// `experiment` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dbandit_experiment_strategy_name(
    experiment: *const DbanditExperiment,
    index: usize,
) -> *mut c_char {
    experiment
        .as_ref()
        .and_then(|e| e.inner.strategies.get(index))
        .map_or(ptr::null_mut(), |s| owned_string(s.name.clone()))
}

/// Runs the Monte Carlo experiment for strategy `index`.
///
/// # Safety
/// `experiment` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_experiment_run(
    experiment: *const DbanditExperiment,
    index: usize,
    out: *mut *mut DbanditAggregate,
) -> DbanditStatus {
    guard(|| {
        let e = &borrow(experiment, "experiment")?.inner;
        let Some(strategy) = e.strategies.get(index) else {
            return fail(
                DbanditStatus::OutOfRange,
                format!(
                    "strategy index {index} out of range ({} strategies)",
                    e.strategies.len()
                ),
            );
        };
        let inner = run_monte_carlo(&e.run_config(strategy))?;
        write_out(out, Box::into_raw(Box::new(DbanditAggregate { inner })))
    })
}

/// # Safety
/// `aggregate` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn dbandit_aggregate_free(aggregate: *mut DbanditAggregate) {
    if !aggregate.is_null() {
        drop(Box::from_raw(aggregate));
    }
}

/// # Safety
/// `aggregate` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_aggregate_num_checkpoints(
    aggregate: *const DbanditAggregate,
    out: *mut usize,
) -> DbanditStatus {
    guard(|| write_out(out, borrow(aggregate, "aggregate")?.inner.checkpoints.len()))
}

/// # Safety
/// `aggregate` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_aggregate_num_arms(
    aggregate: *const DbanditAggregate,
    out: *mut usize,
) -> DbanditStatus {
    guard(|| write_out(out, borrow(aggregate, "aggregate")?.inner.num_arms()))
}

fn checkpoint_index(a: &RunAggregate, i: usize) -> Result<usize, Failure> {
    if i < a.checkpoints.len() {
        Ok(i)
    } else {
        fail(
            DbanditStatus::OutOfRange,
            format!(
                "checkpoint index {i} out of range ({} checkpoints)",
                a.checkpoints.len()
            ),
        )
    }
}

fn arm_index(a: &RunAggregate, arm: usize) -> Result<usize, Failure> {
    if arm < a.num_arms() {
        Ok(arm)
    } else {
        fail(DbanditStatus::OutOfRange, format!("arm {arm} out of range"))
    }
}

/// Round of checkpoint `index`.
///
/// # Safety
/// `aggregate` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_aggregate_checkpoint(
    aggregate: *const DbanditAggregate,
    index: usize,
    out: *mut u64,
) -> DbanditStatus {
    guard(|| {
        let a = &borrow(aggregate, "aggregate")?.inner;
        write_out(out, a.checkpoints[checkpoint_index(a, index)?])
    })
}

/// Mean of `N_t(arm)` at checkpoint `index` (arms from 0).
///
/// # Safety
/// `aggregate` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_aggregate_mean(
    aggregate: *const DbanditAggregate,
    index: usize,
    arm: usize,
    out: *mut f64,
) -> DbanditStatus {
    guard(|| {
        let a = &borrow(aggregate, "aggregate")?.inner;
        write_out(out, a.mean[checkpoint_index(a, index)?][arm_index(a, arm)?])
    })
}

/// # Safety
/// `aggregate` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_aggregate_stderr(
    aggregate: *const DbanditAggregate,
    index: usize,
    arm: usize,
    out: *mut f64,
) -> DbanditStatus {
    guard(|| {
        let a = &borrow(aggregate, "aggregate")?.inner;
        write_out(
            out,
            a.stderr[checkpoint_index(a, index)?][arm_index(a, arm)?],
        )
    })
}

/// # Safety
/// `aggregate` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dbandit_aggregate_regret(
    aggregate: *const DbanditAggregate,
    index: usize,
    out: *mut f64,
) -> DbanditStatus {
    guard(|| {
        let a = &borrow(aggregate, "aggregate")?.inner;
        write_out(out, a.regret[checkpoint_index(a, index)?])
    })
}
