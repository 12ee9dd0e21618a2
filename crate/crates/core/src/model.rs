//! Analytic channel and detector model.
//!
//! Closed forms for fiber transmittance, source gains, decoy yields and gains,
//! threshold-detector click and vacuum probabilities, and the bit error rate.
//! Every probability is evaluated with `expm1`/`ln_1p` so that the tiny gains
//! met at long distance keep their relative precision.

use crate::error::{domain, probability, Error, Result};

/// Tolerance on the total mass of a normalized photon-number distribution.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Default truncation order of received photon-number distributions.
pub const DEFAULT_N_MAX: usize = 10;

/// Fiber channel: loss coefficient in dB/km and length in km.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub beta: f64,
    pub distance: f64,
}

impl ChannelParams {
    pub fn new(beta: f64, distance: f64) -> Result<Self> {
        let channel = Self { beta, distance };
        channel.check()?;
        Ok(channel)
    }

    /// Standard telecom fiber, 0.2 dB/km.
    pub fn fiber(distance: f64) -> Result<Self> {
        Self::new(0.2, distance)
    }

    fn check(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(domain(format!("fiber loss {} dB/km must be finite and >= 0", self.beta)));
        }
        if !(self.distance >= 0.0 && self.distance.is_finite()) {
            return Err(domain(format!("distance {} km must be finite and >= 0", self.distance)));
        }
        Ok(())
    }
}

/// Receiver-side detector and the detector-decoy attenuator settings.
///
/// `p_d` is the dark-count probability of one detection window; for the
/// round-robin protocols the window is a whole pulse train. The same number
/// plays the role of the detector's intrinsic false-click probability in the
/// vacuum-operator formulation.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorParams {
    pub eta_d: f64,
    pub p_d: f64,
    /// Attenuator transmittances, first entry is the unattenuated setting.
    pub decoy_settings: Vec<f64>,
}

impl DetectorParams {
    /// Validating constructor: efficiencies in range and strictly decreasing
    /// decoy settings in (0, 1].
    pub fn new(eta_d: f64, p_d: f64, decoy_settings: Vec<f64>) -> Result<Self> {
        let detector = Self { eta_d, p_d, decoy_settings };
        detector.validate()?;
        Ok(detector)
    }

    /// Full invariant check, including the ordering of the decoy settings.
    pub fn validate(&self) -> Result<()> {
        self.check()?;
        if self.decoy_settings.is_empty() {
            return Err(Error::Validation("at least one decoy setting is required".into()));
        }
        if self.decoy_settings.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Validation(format!(
                "decoy settings {:?} must be strictly decreasing",
                self.decoy_settings
            )));
        }
        Ok(())
    }

    /// Detector used in the simulations: 19% efficiency, 1e-9 dark counts per
    /// pulse accumulated over an `pulses`-pulse train, attenuations 1, 0.8, 0.6.
    pub fn table1(pulses: u32) -> Self {
        Self {
            eta_d: 0.19,
            p_d: 1e-9 * f64::from(pulses),
            decoy_settings: vec![1.0, 0.8, 0.6],
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        probability("detector efficiency", self.eta_d)?;
        if !(0.0..1.0).contains(&self.p_d) {
            return Err(domain(format!("dark-count probability {} must lie in [0, 1)", self.p_d)));
        }
        for &eta in &self.decoy_settings {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(domain(format!("decoy transmittance {eta} must lie in (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn decoy(&self, k: usize) -> Result<f64> {
        self.decoy_settings.get(k).copied().ok_or(Error::DecoyIndex {
            index: k,
            count: self.decoy_settings.len(),
        })
    }
}

/// Source and post-processing parameters of one protocol run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Pulses per train, `L`.
    pub pulses: u32,
    /// Mean photon number of a whole train.
    pub mu: f64,
    /// Source threshold photon number.
    pub v_th: u32,
    /// Error-correction inefficiency.
    pub f: f64,
    /// Misalignment error probability.
    pub e_d: f64,
}

impl ProtocolParams {
    pub fn new(pulses: u32, mu: f64, v_th: u32, f: f64, e_d: f64) -> Result<Self> {
        let params = Self { pulses, mu, v_th, f, e_d };
        params.check()?;
        Ok(params)
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.pulses < 2 {
            return Err(domain(format!("pulses per train L = {} must be >= 2", self.pulses)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(domain(format!("mean photon number {} must be finite and >= 0", self.mu)));
        }
        if !(self.f >= 1.0 && self.f.is_finite()) {
            return Err(domain(format!("error-correction efficiency {} must be >= 1", self.f)));
        }
        if !(0.0..=0.5).contains(&self.e_d) {
            return Err(domain(format!("misalignment error {} must lie in [0, 1/2]", self.e_d)));
        }
        Ok(())
    }
}

/// Photon-number probabilities `p_0 ..= p_{n_max}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
    normalized: bool,
}

impl PhotonDistribution {
    /// A normalized distribution; total mass must be within
    /// [`NORMALIZATION_TOL`] of one.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let dist = Self::sub_normalized(probs)?;
        if !dist.normalized {
            return Err(Error::Validation(format!(
                "photon distribution has total mass {}, expected 1",
                dist.total()
            )));
        }
        Ok(dist)
    }

    /// A possibly sub-normalized distribution (e.g. a truncated histogram).
    pub fn sub_normalized(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Validation("photon distribution needs at least p_0".into()));
        }
        for (n, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Validation(format!("p_{n} = {p} is not a probability")));
            }
        }
        let total: f64 = probs.iter().sum();
        if total > 1.0 + NORMALIZATION_TOL {
            return Err(Error::Validation(format!("photon distribution has total mass {total} > 1")));
        }
        let normalized = (total - 1.0).abs() <= NORMALIZATION_TOL;
        Ok(Self { probs, normalized })
    }

    /// All mass on `n` photons.
    pub fn fock(n: usize, n_max: usize) -> Self {
        let mut probs = vec![0.0; n_max.max(n) + 1];
        probs[n] = 1.0;
        Self { probs, normalized: true }
    }

    pub fn vacuum(n_max: usize) -> Self {
        Self::fock(0, n_max)
    }

    /// Poisson pmf truncated at `n_max`; normalized only if the discarded
    /// tail is below tolerance.
    pub fn poisson(mean: f64, n_max: usize) -> Result<Self> {
        if !(mean >= 0.0 && mean.is_finite()) {
            return Err(domain(format!("Poisson mean {mean} must be finite and >= 0")));
        }
        let mut probs = Vec::with_capacity(n_max + 1);
        let mut term = (-mean).exp();
        for n in 0..=n_max {
            if n > 0 {
                term *= mean / n as f64;
            }
            probs.push(term);
        }
        Self::sub_normalized(probs)
    }

    /// Rescales to unit mass; fails for an all-zero vector.
    pub fn renormalized(&self) -> Result<Self> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::Validation("cannot renormalize a zero distribution".into()));
        }
        Self::new(self.probs.iter().map(|p| p / total).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

/// `1 - (1 - p_d) e^{-x}` without cancellation for small `x`.
fn click_after_exposure(x: f64, p_d: f64) -> f64 {
    p_d + (1.0 - p_d) * -(-x).exp_m1()
}

/// `(1 - eta)^i`, with `0^0 = 1`.
fn survival_power(eta: f64, i: usize) -> f64 {
    if i == 0 {
        1.0
    } else if eta >= 1.0 {
        0.0
    } else {
        (i as f64 * (-eta).ln_1p()).exp()
    }
}

/// Channel transmittance `10^(-beta d / 10)`.
pub fn transmittance(channel: &ChannelParams) -> Result<f64> {
    channel.check()?;
    Ok(10f64.powf(-channel.beta * channel.distance / 10.0))
}

/// Overall gain `Q = 1 - (1 - p_d) e^{-mu eta_t eta_d}`.
pub fn overall_gain(mu: f64, channel: &ChannelParams, detector: &DetectorParams) -> Result<f64> {
    check_mu(mu)?;
    detector.check()?;
    let eta_t = transmittance(channel)?;
    Ok(click_after_exposure(mu * eta_t * detector.eta_d, detector.p_d))
}

/// Bit error rate `e_b = [e_d (1 - p_d)(1 - e^{-mu eta_t eta_d}) + p_d/2] / Q`.
pub fn qber(mu: f64, channel: &ChannelParams, detector: &DetectorParams, e_d: f64) -> Result<f64> {
    check_mu(mu)?;
    detector.check()?;
    probability("misalignment error", e_d)?;
    let eta_t = transmittance(channel)?;
    let signal = -(-mu * eta_t * detector.eta_d).exp_m1();
    let gain = detector.p_d + (1.0 - detector.p_d) * signal;
    if gain <= 0.0 {
        return Err(Error::Degenerate("bit error rate undefined: overall gain is zero".into()));
    }
    let erroneous = e_d * (1.0 - detector.p_d) * signal + 0.5 * detector.p_d;
    Ok(erroneous / gain)
}

/// Yield of an `i`-photon train under decoy setting `k` (0-based):
/// `Y_i^k = 1 - (1 - p_d)(1 - eta_t eta_k eta_d)^i`.
pub fn decoy_yield(
    photons: usize,
    channel: &ChannelParams,
    detector: &DetectorParams,
    k: usize,
) -> Result<f64> {
    detector.check()?;
    let eta = transmittance(channel)? * detector.decoy(k)? * detector.eta_d;
    let lost = survival_power(eta, photons);
    Ok(detector.p_d + (1.0 - detector.p_d) * (1.0 - lost))
}

/// Gain under decoy setting `k`: `Q_k = 1 - (1 - p_d) e^{-mu eta_t eta_k eta_d}`.
pub fn decoy_gain(
    mu: f64,
    channel: &ChannelParams,
    detector: &DetectorParams,
    k: usize,
) -> Result<f64> {
    check_mu(mu)?;
    detector.check()?;
    let eta = transmittance(channel)? * detector.decoy(k)? * detector.eta_d;
    Ok(click_after_exposure(mu * eta, detector.p_d))
}

/// Probability that no click occurs when `dist` arrives at setting `k`:
/// `(1 - p_d) sum_n (1 - eta_k eta_d)^n p_n`.
pub fn vacuum_probability(
    dist: &PhotonDistribution,
    detector: &DetectorParams,
    k: usize,
) -> Result<f64> {
    if !dist.is_normalized() {
        return Err(Error::Validation(format!(
            "click statistics need a normalized distribution (mass {})",
            dist.total()
        )));
    }
    detector.check()?;
    let eta = detector.decoy(k)? * detector.eta_d;
    let no_photon_click: f64 = dist
        .probs()
        .iter()
        .enumerate()
        .map(|(n, p)| survival_power(eta, n) * p)
        .sum();
    Ok((1.0 - detector.p_d) * no_photon_click)
}

/// Threshold-detector click probability `T_k = 1 - vacuum_probability`.
pub fn click_probability(
    dist: &PhotonDistribution,
    detector: &DetectorParams,
    k: usize,
) -> Result<f64> {
    Ok(1.0 - vacuum_probability(dist, detector, k)?)
}

fn check_mu(mu: f64) -> Result<()> {
    if mu >= 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("mean photon number {mu} must be finite and >= 0")))
    }
}
