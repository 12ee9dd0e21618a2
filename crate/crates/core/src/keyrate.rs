//! Secure key-rate formulas.
//!
//! All rates are per pulse and signed; clamping to zero is left to reporting.

use crate::error::{domain, probability, Error, Result};
use crate::model::{self, ChannelParams, DetectorParams, ProtocolParams};

/// Binary Shannon entropy in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    probability("entropy argument", x)?;
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (-x).ln_1p() / std::f64::consts::LN_2)
}

/// Probability that a Poisson(`mu`) train carries more than `v_th` photons.
pub fn source_tail(mu: f64, v_th: u32) -> Result<f64> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(domain(format!("mean photon number {mu} must be finite and >= 0")));
    }
    if mu == 0.0 {
        return Ok(0.0);
    }
    let v = v_th as usize;
    let mut term = (-mu).exp();
    if (v as f64) + 1.0 > mu {
        // tail terms decrease from v + 1 on; sum them directly
        for i in 1..=v + 1 {
            term *= mu / i as f64;
        }
        let mut tail = 0.0;
        let mut i = v + 1;
        while term > tail * 1e-18 && term > 0.0 {
            tail += term;
            i += 1;
            term *= mu / i as f64;
        }
        Ok(tail.min(1.0))
    } else {
        let mut cdf = term;
        for i in 1..=v {
            term *= mu / i as f64;
            cdf += term;
        }
        Ok((1.0 - cdf).clamp(0.0, 1.0))
    }
}

/// Arguments shared by the round-robin rate formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateInputs {
    /// Worst-case single-photon detection probability (detector-decoy only).
    pub g_min: f64,
    pub gain: f64,
    pub qber: f64,
    pub e_src: f64,
    pub protocol: ProtocolParams,
}

impl KeyRateInputs {
    fn check(&self) -> Result<()> {
        probability("G_min", self.g_min)?;
        probability("gain", self.gain)?;
        probability("bit error rate", self.qber)?;
        probability("e_src", self.e_src)?;
        self.protocol.check()
    }
}

/// Detector-decoy round-robin rate:
/// `(1/L) (G - Q f h(e_b) - [e_src + (G - e_src) h(v_th / (L-1))])`.
pub fn k2_rate(inputs: &KeyRateInputs) -> Result<f64> {
    inputs.check()?;
    let p = &inputs.protocol;
    if p.v_th > p.pulses - 1 {
        return Err(domain(format!("v_th = {} exceeds L - 1 = {}", p.v_th, p.pulses - 1)));
    }
    let pa = binary_entropy(f64::from(p.v_th) / f64::from(p.pulses - 1))?;
    Ok(round_robin_rate(inputs.g_min, inputs, pa)? / f64::from(p.pulses))
}

/// Passive-delay round-robin rate:
/// `(1/L) (Q - Q f h(e_b) - [e_src + (Q - e_src) h(2 v_th / L)])`.
pub fn k3_rate(inputs: &KeyRateInputs) -> Result<f64> {
    inputs.check()?;
    let p = &inputs.protocol;
    if 2 * p.v_th > p.pulses {
        return Err(domain(format!("2 v_th = {} exceeds L = {}", 2 * p.v_th, p.pulses)));
    }
    let pa = binary_entropy(2.0 * f64::from(p.v_th) / f64::from(p.pulses))?;
    Ok(round_robin_rate(inputs.gain, inputs, pa)? / f64::from(p.pulses))
}

fn round_robin_rate(credited: f64, inputs: &KeyRateInputs, pa_entropy: f64) -> Result<f64> {
    let ec = inputs.gain * inputs.protocol.f * binary_entropy(inputs.qber)?;
    let pa = inputs.e_src + (credited - inputs.e_src) * pa_entropy;
    Ok(credited - ec - pa)
}

/// Secure key length `N [1 - f h(e_b) - h(e_ph)]` from `sifted` bits.
pub fn k1_length(sifted: f64, e_b: f64, e_ph: f64, f: f64) -> Result<f64> {
    if !(sifted >= 0.0 && sifted.is_finite()) {
        return Err(domain(format!("sifted key length {sifted} must be finite and >= 0")));
    }
    Ok(sifted * (1.0 - f * binary_entropy(e_b)? - binary_entropy(e_ph)?))
}

/// Asymptotic decoy-state BB84 rate with infinitely many decoys.
///
/// `detector.p_d` is the per-pulse background yield `Y_0`; dark counts err
/// with probability one half. Decoy settings are ignored.
pub fn bb84_decoy_rate(
    mu: f64,
    channel: &ChannelParams,
    detector: &DetectorParams,
    e_d: f64,
    f: f64,
) -> Result<f64> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(domain(format!("mean photon number {mu} must be finite and >= 0")));
    }
    probability("detector efficiency", detector.eta_d)?;
    probability("background yield", detector.p_d)?;
    probability("misalignment error", e_d)?;
    let eta = model::transmittance(channel)? * detector.eta_d;
    let y0 = detector.p_d;
    let signal = -(-eta * mu).exp_m1();
    let gain = y0 + signal;
    if gain <= 0.0 {
        return Err(Error::Degenerate("BB84 gain is zero".into()));
    }
    let error_gain = 0.5 * y0 + e_d * signal;
    let y1 = eta + y0;
    let e1 = (0.5 * y0 + e_d * eta) / y1;
    let q1 = mu * (-mu).exp() * y1;
    Ok(0.5 * (-gain * f * binary_entropy(error_gain / gain)? + q1 * (1.0 - binary_entropy(e1)?)))
}
