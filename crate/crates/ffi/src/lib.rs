//! C ABI over `rrdps-core`.
//!
//! Every function returns an [`RrdpsStatus`] and writes results through out
//! pointers. On failure the message is kept per thread and read with
//! [`rrdps_last_error`]. Handles are created by `*_new`/`rrdps_scan` and
//! released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rrdps_core::keyrate;
use rrdps_core::model::{self, ChannelParams, DetectorParams};
use rrdps_core::optimizer::{self, KeyRatePoint, OptimizationSpec, Protocol};
use rrdps_core::photonstats::{self, LpProblem};
use rrdps_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrdpsStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Index = 3,
    Validation = 4,
    Degenerate = 5,
    Infeasible = 6,
    Solver = 7,
    Parse = 8,
    Io = 9,
    Panic = 10,
    /// Output buffer too small; the required length was written.
    BufferTooSmall = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrdpsProtocol {
    DdRrdps = 0,
    PassiveRrdps = 1,
    Bb84Decoy = 2,
}

impl From<RrdpsProtocol> for Protocol {
    fn from(p: RrdpsProtocol) -> Self {
        match p {
            RrdpsProtocol::DdRrdps => Protocol::DdRrdps,
            RrdpsProtocol::PassiveRrdps => Protocol::PassiveRrdps,
            RrdpsProtocol::Bb84Decoy => Protocol::Bb84Decoy,
        }
    }
}

/// One operating point. `g_min` is NaN for protocols without a photon bound.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrdpsPoint {
    pub distance: f64,
    pub mu_opt: f64,
    pub v_th_opt: u32,
    pub gain: f64,
    pub qber: f64,
    pub g_min: f64,
    pub e_src: f64,
    pub rate_raw: f64,
    pub rate_clamped: f64,
    pub no_positive_rate: bool,
}

impl From<&KeyRatePoint> for RrdpsPoint {
    fn from(p: &KeyRatePoint) -> Self {
        Self {
            distance: p.distance,
            mu_opt: p.mu_opt,
            v_th_opt: p.v_th_opt,
            gain: p.gain,
            qber: p.qber,
            g_min: p.g_min.unwrap_or(f64::NAN),
            e_src: p.e_src,
            rate_raw: p.rate_per_pulse,
            rate_clamped: p.clamped_rate(),
            no_positive_rate: p.no_positive_rate,
        }
    }
}

/// Protocol, channel, detector and optimizer settings.
pub struct Scenario {
    spec: OptimizationSpec,
}

/// Result of a distance scan.
pub struct Scan {
    points: Vec<RrdpsPoint>,
    cutoff: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RrdpsStatus {
    match e {
        Error::Domain(_) => RrdpsStatus::Domain,
        Error::DecoyIndex { .. } => RrdpsStatus::Index,
        Error::Validation(_) => RrdpsStatus::Validation,
        Error::Degenerate(_) => RrdpsStatus::Degenerate,
        Error::Infeasible(_) => RrdpsStatus::Infeasible,
        Error::Solver(_) => RrdpsStatus::Solver,
        Error::Parse { .. } => RrdpsStatus::Parse,
        Error::Io(_) => RrdpsStatus::Io,
    }
}

enum Failure {
    Core(Error),
    Null(&'static str),
    Buffer(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn guard(f: impl FnOnce() -> Outcome) -> RrdpsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RrdpsStatus::Ok
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(&format!("null pointer: {name}"));
            RrdpsStatus::NullPointer
        }
        Ok(Err(Failure::Buffer(msg))) => {
            set_error(&msg);
            RrdpsStatus::BufferTooSmall
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            RrdpsStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> std::result::Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn scenario_ref<'a>(p: *const Scenario) -> std::result::Result<&'a Scenario, Failure> {
    p.as_ref().ok_or(Failure::Null("scenario"))
}

unsafe fn scenario_mut<'a>(p: *mut Scenario) -> std::result::Result<&'a mut Scenario, Failure> {
    p.as_mut().ok_or(Failure::Null("scenario"))
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rrdps_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Scenario with the simulation defaults for `protocol` and `pulses`.
///
/// # Safety
/// `out_scenario` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rrdps_scenario_new_table1(
    protocol: RrdpsProtocol,
    pulses: u32,
    out_scenario: *mut *mut Scenario,
) -> RrdpsStatus {
    guard(|| {
        let slot = out(out_scenario, "out_scenario")?;
        let spec = OptimizationSpec::table1(protocol.into(), pulses);
        spec.validate()?;
        *slot = Box::into_raw(Box::new(Scenario { spec }));
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or come from [`rrdps_scenario_new_table1`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn rrdps_scenario_free(scenario: *mut Scenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

fn update(scenario: *mut Scenario, edit: impl FnOnce(&mut OptimizationSpec)) -> RrdpsStatus {
    guard(|| {
        let s = unsafe { scenario_mut(scenario)? };
        let mut spec = s.spec.clone();
        edit(&mut spec);
        spec.validate()?;
        s.spec = spec;
        Ok(())
    })
}

/// Misalignment error probability. Invalid values leave the scenario unchanged.
///
/// # Safety
/// `scenario` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rrdps_scenario_set_misalignment(scenario: *mut Scenario, e_d: f64) -> RrdpsStatus {
    update(scenario, |s| s.e_d = e_d)
}

/// # Safety
/// `scenario` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rrdps_scenario_set_fiber_loss(scenario: *mut Scenario, beta_db_per_km: f64) -> RrdpsStatus {
    update(scenario, |s| s.beta = beta_db_per_km)
}

/// # Safety
/// `scenario` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rrdps_scenario_set_detector(scenario: *mut Scenario, eta_d: f64, p_d: f64) -> RrdpsStatus {
    update(scenario, |s| {
        s.detector.eta_d = eta_d;
        s.detector.p_d = p_d;
    })
}

/// Attenuator settings, strictly decreasing in (0, 1].
///
/// # Safety
/// `scenario` must be a live handle or null; `settings` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rrdps_scenario_set_decoys(
    scenario: *mut Scenario,
    settings: *const f64,
    len: usize,
) -> RrdpsStatus {
    if settings.is_null() {
        return guard(|| Err(Failure::Null("settings")));
    }
    let values = std::slice::from_raw_parts(settings, len).to_vec();
    update(scenario, |s| s.detector.decoy_settings = values)
}

/// Constraint slack and photon-number truncation.
///
/// # Safety
/// `scenario` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rrdps_scenario_set_lp(scenario: *mut Scenario, slack: f64, n_max: usize) -> RrdpsStatus {
    update(scenario, |s| {
        s.slack = slack;
        s.n_max = n_max;
    })
}

/// # Safety
/// `out_value` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rrdps_transmittance(beta_db_per_km: f64, distance_km: f64, out_value: *mut f64) -> RrdpsStatus {
    guard(|| {
        *out(out_value, "out_value")? = model::transmittance(&ChannelParams::new(beta_db_per_km, distance_km)?)?;
        Ok(())
    })
}

fn channel(s: &Scenario, distance_km: f64) -> rrdps_core::Result<ChannelParams> {
    ChannelParams::new(s.spec.beta, distance_km)
}

fn detector(s: &Scenario) -> &DetectorParams {
    &s.spec.detector
}

/// Overall gain `Q` at mean photon number `mu`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn rrdps_overall_gain(
    scenario: *const Scenario,
    mu: f64,
    distance_km: f64,
    out_value: *mut f64,
) -> RrdpsStatus {
    guard(|| {
        let s = scenario_ref(scenario)?;
        *out(out_value, "out_value")? = model::overall_gain(mu, &channel(s, distance_km)?, detector(s))?;
        Ok(())
    })
}

/// Bit error rate `e_b`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn rrdps_qber(scenario: *const Scenario, mu: f64, distance_km: f64, out_value: *mut f64) -> RrdpsStatus {
    guard(|| {
        let s = scenario_ref(scenario)?;
        *out(out_value, "out_value")? = model::qber(mu, &channel(s, distance_km)?, detector(s), s.spec.e_d)?;
        Ok(())
    })
}

/// Worst-case single-photon detection probability `G_min`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn rrdps_min_single_photon_gain(
    scenario: *const Scenario,
    mu: f64,
    distance_km: f64,
    out_value: *mut f64,
) -> RrdpsStatus {
    guard(|| {
        let s = scenario_ref(scenario)?;
        let bound = photonstats::min_single_photon_gain(
            mu,
            &channel(s, distance_km)?,
            detector(s),
            s.spec.n_max,
            s.spec.slack,
        )?;
        *out(out_value, "out_value")? = bound.g_min;
        Ok(())
    })
}

/// Rate and intermediates at fixed `(mu, v_th)`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn rrdps_evaluate_point(
    scenario: *const Scenario,
    distance_km: f64,
    mu: f64,
    v_th: u32,
    out_point: *mut RrdpsPoint,
) -> RrdpsStatus {
    guard(|| {
        let s = scenario_ref(scenario)?;
        *out(out_point, "out_point")? = (&optimizer::evaluate_point(&s.spec, distance_km, mu, v_th)?).into();
        Ok(())
    })
}

/// Optimized `(mu, v_th)` at one distance.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn rrdps_optimize_point(
    scenario: *const Scenario,
    distance_km: f64,
    out_point: *mut RrdpsPoint,
) -> RrdpsStatus {
    guard(|| {
        let s = scenario_ref(scenario)?;
        *out(out_point, "out_point")? = (&optimizer::optimize_point(&s.spec, distance_km)?).into();
        Ok(())
    })
}

/// Warm-started scan over `d_min, d_min + d_step, ... <= d_max`.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn rrdps_scan(
    scenario: *const Scenario,
    d_min: f64,
    d_max: f64,
    d_step: f64,
    out_scan: *mut *mut Scan,
) -> RrdpsStatus {
    guard(|| {
        let s = scenario_ref(scenario)?;
        let slot = out(out_scan, "out_scan")?;
        let points = optimizer::scan_distances(&s.spec, d_min, d_max, d_step)?;
        let cutoff = optimizer::cutoff_distance(&points);
        *slot = Box::into_raw(Box::new(Scan { points: points.iter().map(Into::into).collect(), cutoff }));
        Ok(())
    })
}

/// Number of points in a scan; 0 for a null handle.
///
/// # Safety
/// `scan` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rrdps_scan_len(scan: *const Scan) -> usize {
    scan.as_ref().map_or(0, |s| s.points.len())
}

/// # Safety
/// `scan` must be a live handle or null; `out_point` null or valid.
#[no_mangle]
pub unsafe extern "C" fn rrdps_scan_get(scan: *const Scan, index: usize, out_point: *mut RrdpsPoint) -> RrdpsStatus {
    guard(|| {
        let s = scan.as_ref().ok_or(Failure::Null("scan"))?;
        let p = s.points.get(index).ok_or_else(|| {
            Failure::Core(Error::Validation(format!("point {index} out of range for {} points", s.points.len())))
        })?;
        *out(out_point, "out_point")? = *p;
        Ok(())
    })
}

/// Largest scanned distance with a positive rate, 0 if none.
///
/// # Safety
/// Pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn rrdps_scan_cutoff(scan: *const Scan, out_value: *mut f64) -> RrdpsStatus {
    guard(|| {
        let s = scan.as_ref().ok_or(Failure::Null("scan"))?;
        *out(out_value, "out_value")? = s.cutoff;
        Ok(())
    })
}

/// # Safety
/// `scan` must be null or come from [`rrdps_scan`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn rrdps_scan_free(scan: *mut Scan) {
    if !scan.is_null() {
        drop(Box::from_raw(scan));
    }
}

/// # Safety
/// `out_value` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rrdps_binary_entropy(x: f64, out_value: *mut f64) -> RrdpsStatus {
    guard(|| {
        *out(out_value, "out_value")? = keyrate::binary_entropy(x)?;
        Ok(())
    })
}

/// Probability that a Poisson(`mu`) source emits more than `v_th` photons.
///
/// # Safety
/// `out_value` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rrdps_source_tail(mu: f64, v_th: u32, out_value: *mut f64) -> RrdpsStatus {
    guard(|| {
        *out(out_value, "out_value")? = keyrate::source_tail(mu, v_th)?;
        Ok(())
    })
}

/// Solves an LP given in the text problem format.
///
/// On success writes the optimum and copies the witness into `witness`
/// (capacity `witness_cap`); `*out_len` always receives the witness length.
/// An infeasible problem returns `RRDPS_STATUS_INFEASIBLE`.
///
/// # Safety
/// `problem` must be a NUL-terminated string; `witness` must hold
/// `witness_cap` doubles (may be null when `witness_cap` is 0); other
/// pointers null or valid.
#[no_mangle]
pub unsafe extern "C" fn rrdps_solve_lp(
    problem: *const c_char,
    out_value: *mut f64,
    witness: *mut f64,
    witness_cap: usize,
    out_len: *mut usize,
) -> RrdpsStatus {
    guard(|| {
        if problem.is_null() {
            return Err(Failure::Null("problem"));
        }
        let text = CStr::from_ptr(problem)
            .to_str()
            .map_err(|e| Error::Parse { line: 0, message: format!("problem text is not UTF-8: {e}") })?;
        let value = out(out_value, "out_value")?;
        let len = out(out_len, "out_len")?;
        let solution = photonstats::solve_lp(&LpProblem::parse(text)?)?;
        let (v, w) = solution.optimum()?;
        *len = w.probs().len();
        if witness_cap < w.probs().len() {
            return Err(Failure::Buffer(format!("witness needs {} entries, buffer holds {witness_cap}", w.probs().len())));
        }
        if witness.is_null() {
            return Err(Failure::Null("witness"));
        }
        ptr::copy_nonoverlapping(w.probs().as_ptr(), witness, w.probs().len());
        *value = v;
        Ok(())
    })
}
