//! Per-distance optimization of the source intensity and threshold photon
//! number, and distance scans.
//!
//! The search alternates golden-section refinement of `ln mu` for fixed
//! `v_th` with an exhaustive scan of `v_th` for fixed `mu`. A coarse
//! logarithmic grid over the `mu` range seeds every search; a warm start from
//! the previous distance is searched as well and the better result kept.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::keyrate::{self, KeyRateInputs};
use crate::model::{self, ChannelParams, DetectorParams, ProtocolParams, DEFAULT_N_MAX};
use crate::photonstats::{self, DEFAULT_SLACK};

const SEED_GRID: usize = 48;
const GOLDEN_LOG_TOL: f64 = 1e-10;
const GOLDEN_MAX_EVALS: usize = 200;
/// Half-width of the golden-section bracket around the current `mu`, in `ln mu`.
const BRACKET: f64 = 1.386_294_361_119_890_6; // ln 4

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Detector-decoy round robin, rate `K2`.
    DdRrdps,
    /// Passive-delay round robin with threshold detectors, rate `K3`.
    PassiveRrdps,
    /// Decoy-state BB84 with infinitely many decoys.
    Bb84Decoy,
}

impl Protocol {
    pub fn tag(self) -> &'static str {
        match self {
            Protocol::DdRrdps => "dd-rrdps",
            Protocol::PassiveRrdps => "passive-rrdps",
            Protocol::Bb84Decoy => "bb84-decoy",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dd-rrdps" => Ok(Protocol::DdRrdps),
            "passive-rrdps" => Ok(Protocol::PassiveRrdps),
            "bb84-decoy" => Ok(Protocol::Bb84Decoy),
            other => Err(Error::Validation(format!(
                "unknown protocol '{other}' (expected dd-rrdps, passive-rrdps or bb84-decoy)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationSpec {
    pub protocol: Protocol,
    pub pulses: u32,
    /// Fiber loss in dB/km.
    pub beta: f64,
    /// For BB84, `p_d` is the per-pulse background yield.
    pub detector: DetectorParams,
    pub e_d: f64,
    pub f: f64,
    pub n_max: usize,
    pub slack: f64,
    pub mu_range: (f64, f64),
    pub v_th_range: (u32, u32),
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl OptimizationSpec {
    /// Simulation defaults: 0.2 dB/km fiber, 19% detectors with 1e-9 dark
    /// counts per pulse, 1.5% misalignment, f = 1.16.
    pub fn table1(protocol: Protocol, pulses: u32) -> Self {
        let mut detector = DetectorParams::table1(pulses);
        if protocol == Protocol::Bb84Decoy {
            detector.p_d = 1e-9;
        }
        Self {
            protocol,
            pulses,
            beta: 0.2,
            detector,
            e_d: 0.015,
            f: 1.16,
            n_max: DEFAULT_N_MAX,
            slack: DEFAULT_SLACK,
            mu_range: (1e-4, 50.0),
            v_th_range: (1, 100),
            rel_tol: 1e-9,
            max_iter: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.mu_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Validation(format!("mu range [{lo}, {hi}] must be non-empty with lower bound > 0")));
        }
        if self.v_th_range.0 > self.v_th_range.1 {
            return Err(Error::Validation(format!("empty v_th range {:?}", self.v_th_range)));
        }
        if !(self.rel_tol >= 0.0) || self.max_iter == 0 {
            return Err(Error::Validation("tolerance must be >= 0 and max_iter >= 1".into()));
        }
        let pulses = if self.protocol == Protocol::Bb84Decoy { 2 } else { self.pulses };
        ProtocolParams::new(pulses, lo, 0, self.f, self.e_d)?;
        self.detector.validate()?;
        ChannelParams::new(self.beta, 0.0)?;
        self.v_th_candidates().map(|_| ())
    }

    /// Admissible `v_th` values: the configured range cut to the branch
    /// where the privacy-amplification entropy argument is at most 1/2.
    pub fn v_th_candidates(&self) -> Result<std::ops::RangeInclusive<u32>> {
        let cap = match self.protocol {
            Protocol::DdRrdps => (self.pulses - 1) / 2,
            Protocol::PassiveRrdps => self.pulses / 4,
            Protocol::Bb84Decoy => return Ok(0..=0),
        };
        let (lo, hi) = (self.v_th_range.0, self.v_th_range.1.min(cap));
        if lo > hi {
            return Err(Error::Validation(format!(
                "no admissible v_th: range {:?} capped at {cap} for L = {}",
                self.v_th_range, self.pulses
            )));
        }
        Ok(lo..=hi)
    }
}

/// One optimized (or evaluated) operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyRatePoint {
    pub protocol: Protocol,
    pub distance: f64,
    pub mu_opt: f64,
    /// Zero for BB84, which has no threshold.
    pub v_th_opt: u32,
    pub gain: f64,
    pub qber: f64,
    /// Only for the detector-decoy protocol; `None` if the LP was infeasible.
    pub g_min: Option<f64>,
    pub e_src: f64,
    /// Signed rate per pulse.
    pub rate_per_pulse: f64,
    pub no_positive_rate: bool,
}

impl KeyRatePoint {
    pub fn clamped_rate(&self) -> f64 {
        self.rate_per_pulse.max(0.0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    mu: f64,
    v_th: u32,
    rate: f64,
}

impl Candidate {
    /// Higher rate wins; ties go to smaller mu, then smaller v_th.
    fn beats(&self, other: &Candidate) -> bool {
        if self.rate != other.rate {
            return self.rate > other.rate;
        }
        (self.mu, self.v_th) < (other.mu, other.v_th)
    }
}

struct Evaluator<'a> {
    spec: &'a OptimizationSpec,
    channel: ChannelParams,
    g_cache: RefCell<HashMap<u64, Option<f64>>>,
}

impl<'a> Evaluator<'a> {
    fn new(spec: &'a OptimizationSpec, distance: f64) -> Result<Self> {
        Ok(Self {
            spec,
            channel: ChannelParams::new(spec.beta, distance)?,
            g_cache: RefCell::new(HashMap::new()),
        })
    }

    /// `G_min(mu)`, `None` when the observations admit no truncated distribution.
    fn g_min(&self, mu: f64) -> Result<Option<f64>> {
        if let Some(&g) = self.g_cache.borrow().get(&mu.to_bits()) {
            return Ok(g);
        }
        let s = self.spec;
        let g = match photonstats::min_single_photon_gain(mu, &self.channel, &s.detector, s.n_max, s.slack) {
            Ok(bound) => Some(bound.g_min),
            Err(Error::Infeasible(_)) => None,
            Err(e) => return Err(e),
        };
        self.g_cache.borrow_mut().insert(mu.to_bits(), g);
        Ok(g)
    }

    fn point(&self, mu: f64, v_th: u32) -> Result<KeyRatePoint> {
        let s = self.spec;
        let (gain, qber) = if s.protocol == Protocol::Bb84Decoy {
            let eta = model::transmittance(&self.channel)? * s.detector.eta_d;
            let signal = -(-eta * mu).exp_m1();
            let gain = s.detector.p_d + signal;
            let qber = if gain > 0.0 { (0.5 * s.detector.p_d + s.e_d * signal) / gain } else { 0.5 };
            (gain, qber)
        } else {
            let gain = model::overall_gain(mu, &self.channel, &s.detector)?;
            let qber = match model::qber(mu, &self.channel, &s.detector, s.e_d) {
                Ok(e) => e,
                Err(Error::Degenerate(_)) => 0.5,
                Err(e) => return Err(e),
            };
            (gain, qber)
        };
        let e_src = if s.protocol == Protocol::Bb84Decoy { 0.0 } else { keyrate::source_tail(mu, v_th)? };
        let protocol = ProtocolParams { pulses: s.pulses, mu, v_th, f: s.f, e_d: s.e_d };
        let mut g_min = None;
        let rate = match s.protocol {
            Protocol::DdRrdps => {
                g_min = self.g_min(mu)?;
                match g_min {
                    Some(g) => keyrate::k2_rate(&KeyRateInputs { g_min: g, gain, qber, e_src, protocol })?,
                    None => f64::NEG_INFINITY,
                }
            }
            Protocol::PassiveRrdps => {
                keyrate::k3_rate(&KeyRateInputs { g_min: 0.0, gain, qber, e_src, protocol })?
            }
            Protocol::Bb84Decoy => match keyrate::bb84_decoy_rate(mu, &self.channel, &s.detector, s.e_d, s.f) {
                Ok(r) => r,
                Err(Error::Degenerate(_)) => f64::NEG_INFINITY,
                Err(e) => return Err(e),
            },
        };
        Ok(KeyRatePoint {
            protocol: s.protocol,
            distance: self.channel.distance,
            mu_opt: mu,
            v_th_opt: v_th,
            gain,
            qber,
            g_min,
            e_src,
            rate_per_pulse: rate,
            no_positive_rate: !(rate > 0.0),
        })
    }

    fn rate(&self, mu: f64, v_th: u32) -> Result<f64> {
        Ok(self.point(mu, v_th)?.rate_per_pulse)
    }

    fn best_v_th(&self, mu: f64) -> Result<Candidate> {
        let mut best: Option<Candidate> = None;
        for v_th in self.spec.v_th_candidates()? {
            let c = Candidate { mu, v_th, rate: self.rate(mu, v_th)? };
            if best.is_none_or(|b| c.beats(&b)) {
                best = Some(c);
            }
        }
        Ok(best.expect("candidate range is non-empty"))
    }

    fn cold_seed(&self) -> Result<Candidate> {
        let (lo, hi) = self.spec.mu_range;
        let (a, b) = (lo.ln(), hi.ln());
        let mut best: Option<Candidate> = None;
        for i in 0..SEED_GRID {
            let t = if SEED_GRID > 1 { i as f64 / (SEED_GRID - 1) as f64 } else { 0.0 };
            let mu = (a + (b - a) * t).exp().clamp(lo, hi);
            let c = self.best_v_th(mu)?;
            if best.is_none_or(|b| c.beats(&b)) {
                best = Some(c);
            }
        }
        Ok(best.expect("seed grid is non-empty"))
    }

    /// Golden-section maximization over `ln mu` around `start`, returning
    /// the best point evaluated (never worse than `start`).
    fn refine_mu(&self, start: Candidate) -> Result<Candidate> {
        let (lo, hi) = self.spec.mu_range;
        let center = start.mu.ln();
        let (mut a, mut b) = ((center - BRACKET).max(lo.ln()), (center + BRACKET).min(hi.ln()));
        let mut best = start;
        let eval = |x: f64, best: &mut Candidate| -> Result<f64> {
            let mu = x.exp().clamp(lo, hi);
            let c = Candidate { mu, v_th: start.v_th, rate: self.rate(mu, start.v_th)? };
            if c.beats(best) {
                *best = c;
            }
            Ok(c.rate)
        };
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = b - inv_phi * (b - a);
        let mut x2 = a + inv_phi * (b - a);
        let mut f1 = eval(x1, &mut best)?;
        let mut f2 = eval(x2, &mut best)?;
        let mut evals = 2;
        while b - a > GOLDEN_LOG_TOL && evals < GOLDEN_MAX_EVALS {
            if f1 >= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = eval(x1, &mut best)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = eval(x2, &mut best)?;
            }
            evals += 1;
        }
        Ok(best)
    }

    fn local_search(&self, start: Candidate) -> Result<Candidate> {
        let mut current = start;
        for _ in 0..self.spec.max_iter {
            let before = current;
            current = self.refine_mu(current)?;
            let by_v = self.best_v_th(current.mu)?;
            if by_v.beats(&current) {
                current = by_v;
            }
            // the optimal mu shifts with v_th; follow ridges diagonally
            let candidates = self.spec.v_th_candidates()?;
            let centre = current;
            for v_th in [centre.v_th.wrapping_sub(1), centre.v_th + 1] {
                if !candidates.contains(&v_th) {
                    continue;
                }
                let seed = Candidate { mu: centre.mu, v_th, rate: self.rate(centre.mu, v_th)? };
                let moved = self.refine_mu(seed)?;
                if moved.beats(&current) {
                    current = moved;
                }
            }
            let gained = current.rate - before.rate;
            let converged = if before.rate.is_finite() {
                !(gained > self.spec.rel_tol * before.rate.abs())
            } else {
                !current.rate.is_finite()
            };
            if converged {
                break;
            }
        }
        Ok(current)
    }
}

/// Rate and intermediates at fixed `(mu, v_th)`; no optimization.
pub fn evaluate_point(spec: &OptimizationSpec, distance: f64, mu: f64, v_th: u32) -> Result<KeyRatePoint> {
    spec.validate()?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Domain(format!("mean photon number {mu} must be > 0")));
    }
    Evaluator::new(spec, distance)?.point(mu, v_th)
}

/// Optimized point from a cold start.
pub fn optimize_point(spec: &OptimizationSpec, distance: f64) -> Result<KeyRatePoint> {
    optimize_point_from(spec, distance, None)
}

/// Optimized point; a `warm` `(mu, v_th)` start is searched in addition to the
/// cold start and the better result returned.
pub fn optimize_point_from(
    spec: &OptimizationSpec,
    distance: f64,
    warm: Option<(f64, u32)>,
) -> Result<KeyRatePoint> {
    spec.validate()?;
    let evaluator = Evaluator::new(spec, distance)?;
    let mut best = evaluator.local_search(evaluator.cold_seed()?)?;
    if let Some((mu, v_th)) = warm {
        let (lo, hi) = spec.mu_range;
        let candidates = spec.v_th_candidates()?;
        let mu = mu.clamp(lo, hi);
        let v_th = v_th.clamp(*candidates.start(), *candidates.end());
        let seed = Candidate { mu, v_th, rate: evaluator.rate(mu, v_th)? };
        let warm_best = evaluator.local_search(seed)?;
        if warm_best.beats(&best) {
            best = warm_best;
        }
    }
    let mut point = evaluator.point(best.mu, best.v_th)?;
    if !point.rate_per_pulse.is_finite() {
        point.rate_per_pulse = 0.0;
    }
    Ok(point)
}

/// Distance grid `d_min, d_min + step, ... <= d_max`.
pub fn distance_grid(d_min: f64, d_max: f64, d_step: f64) -> Result<Vec<f64>> {
    if !(d_min >= 0.0 && d_min <= d_max && d_max.is_finite()) || !(d_step > 0.0 && d_step.is_finite()) {
        return Err(Error::Validation(format!(
            "empty distance grid: d_min = {d_min}, d_max = {d_max}, d_step = {d_step}"
        )));
    }
    let count = ((d_max - d_min) / d_step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| d_min + i as f64 * d_step).collect())
}

/// Sequential scan; each point is warm-started from the previous optimum.
pub fn scan_distances(spec: &OptimizationSpec, d_min: f64, d_max: f64, d_step: f64) -> Result<Vec<KeyRatePoint>> {
    let grid = distance_grid(d_min, d_max, d_step)?;
    let mut points: Vec<KeyRatePoint> = Vec::with_capacity(grid.len());
    for d in grid {
        let warm = points.last().map(|p| (p.mu_opt, p.v_th_opt));
        points.push(optimize_point_from(spec, d, warm)?);
    }
    Ok(points)
}

/// Largest scanned distance with a positive rate, 0 if none.
pub fn cutoff_distance(points: &[KeyRatePoint]) -> f64 {
    points
        .iter()
        .filter(|p| p.clamped_rate() > 0.0)
        .map(|p| p.distance)
        .fold(0.0, f64::max)
}
