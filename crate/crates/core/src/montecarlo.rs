//! Sampling oracle for the analytic gain, error-rate and arrival models.
//!
//! Each trial draws the source photon number, thins it through the channel
//! (and detector), and adds an independent dark count. The error model
//! follows the analytic bit-error formula term by term: clicks with a dark
//! count err with probability one half, the others with probability `e_d`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::error::{Error, Result};
use crate::model::{self, ChannelParams, DetectorParams, PhotonDistribution};

pub const GENERATOR: &str = "chacha8";

#[derive(Debug, Clone, PartialEq)]
pub struct McScenario {
    pub mu: f64,
    pub channel: ChannelParams,
    pub detector: DetectorParams,
    /// Attenuator setting; `None` means no attenuator (`eta_k = 1`).
    pub decoy: Option<usize>,
    pub e_d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    pub scenario: McScenario,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
    pub generator: &'static str,
}

impl McEstimate {
    fn bernoulli(successes: u64, trials: u64, seed: u64) -> Self {
        let mean = successes as f64 / trials as f64;
        Self {
            mean,
            std_error: (mean * (1.0 - mean) / trials as f64).sqrt(),
            trials,
            seed,
            generator: GENERATOR,
        }
    }

    /// Standardized deviation from `expected`; zero when both the deviation
    /// and the standard error vanish.
    pub fn z_score(&self, expected: f64) -> f64 {
        let diff = self.mean - expected;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

/// Empirical arrival histogram, with the mass above `n_max` kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalHistogram {
    pub distribution: PhotonDistribution,
    pub counts: Vec<u64>,
    pub tail_mass: f64,
    pub trials: u64,
}

struct Sampler {
    rng: ChaCha8Rng,
    source: Option<Poisson<f64>>,
}

impl Sampler {
    fn new(config: &McConfig) -> Result<Self> {
        if config.trials == 0 {
            return Err(Error::Validation("Monte-Carlo needs at least one trial".into()));
        }
        let s = &config.scenario;
        if !(s.mu >= 0.0 && s.mu.is_finite()) {
            return Err(Error::Domain(format!("mean photon number {} must be finite and >= 0", s.mu)));
        }
        s.detector.check()?;
        let source = if s.mu > 0.0 {
            Some(Poisson::new(s.mu).map_err(|e| Error::Domain(e.to_string()))?)
        } else {
            None
        };
        Ok(Self { rng: ChaCha8Rng::seed_from_u64(config.seed), source })
    }

    fn emitted(&mut self) -> u64 {
        match &self.source {
            Some(p) => p.sample(&mut self.rng) as u64,
            None => 0,
        }
    }

    fn thin(&mut self, n: u64, eta: f64) -> u64 {
        if n == 0 || eta <= 0.0 {
            0
        } else if eta >= 1.0 {
            n
        } else {
            Binomial::new(n, eta).expect("eta is a probability").sample(&mut self.rng)
        }
    }

    fn bernoulli(&mut self, p: f64) -> bool {
        p > 0.0 && self.rng.random_bool(p.min(1.0))
    }
}

fn detection_efficiency(s: &McScenario) -> Result<f64> {
    let eta_k = match s.decoy {
        Some(k) => s.detector.decoy(k)?,
        None => 1.0,
    };
    Ok(model::transmittance(&s.channel)? * eta_k * s.detector.eta_d)
}

/// Click rate per train.
pub fn estimate_gain(config: &McConfig) -> Result<McEstimate> {
    let mut sampler = Sampler::new(config)?;
    let s = &config.scenario;
    let eta = detection_efficiency(s)?;
    let mut clicks = 0u64;
    for _ in 0..config.trials {
        let n = sampler.emitted();
        let detected = sampler.thin(n, eta);
        let dark = sampler.bernoulli(s.detector.p_d);
        if detected > 0 || dark {
            clicks += 1;
        }
    }
    Ok(McEstimate::bernoulli(clicks, config.trials, config.seed))
}

/// Fraction of erroneous bits among clicks.
pub fn estimate_qber(config: &McConfig) -> Result<McEstimate> {
    let mut sampler = Sampler::new(config)?;
    let s = &config.scenario;
    crate::error::probability("misalignment error", s.e_d)?;
    let eta = detection_efficiency(s)?;
    let (mut clicks, mut errors) = (0u64, 0u64);
    for _ in 0..config.trials {
        let n = sampler.emitted();
        let detected = sampler.thin(n, eta);
        let dark = sampler.bernoulli(s.detector.p_d);
        if dark {
            clicks += 1;
            errors += u64::from(sampler.bernoulli(0.5));
        } else if detected > 0 {
            clicks += 1;
            errors += u64::from(sampler.bernoulli(s.e_d));
        }
    }
    if clicks == 0 {
        return Err(Error::Degenerate(format!("no clicks in {} trials, error rate undefined", config.trials)));
    }
    let mut est = McEstimate::bernoulli(errors, clicks, config.seed);
    est.trials = config.trials;
    Ok(est)
}

/// Histogram of photon numbers reaching the detector (after the channel,
/// before attenuator and detector).
pub fn estimate_arrival_distribution(config: &McConfig, n_max: usize) -> Result<ArrivalHistogram> {
    let mut sampler = Sampler::new(config)?;
    let eta_t = model::transmittance(&config.scenario.channel)?;
    let mut counts = vec![0u64; n_max + 1];
    let mut tail = 0u64;
    for _ in 0..config.trials {
        let n = sampler.emitted();
        let arrived = sampler.thin(n, eta_t) as usize;
        match counts.get_mut(arrived) {
            Some(c) => *c += 1,
            None => tail += 1,
        }
    }
    let trials = config.trials as f64;
    let distribution =
        PhotonDistribution::sub_normalized(counts.iter().map(|&c| c as f64 / trials).collect())?;
    Ok(ArrivalHistogram { distribution, counts, tail_mass: tail as f64 / trials, trials: config.trials })
}
