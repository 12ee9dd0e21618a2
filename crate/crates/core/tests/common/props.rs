//! Property checks shared by the proptest suite and the acceptance gate.

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use statrs::distribution::{DiscreteCDF, Poisson};

use rrdps_core::keyrate::{binary_entropy, k2_rate, k3_rate, source_tail, KeyRateInputs};
use rrdps_core::model::{self, ChannelParams, DetectorParams, PhotonDistribution, ProtocolParams};
use rrdps_core::optimizer::{self, OptimizationSpec, Protocol};
use rrdps_core::photonstats::min_single_photon_gain;

type Check = std::result::Result<(), TestCaseError>;

pub fn distribution() -> impl Strategy<Value = PhotonDistribution> {
    prop::collection::vec(0.0..1.0f64, 1..=11).prop_filter_map("all zero", |raw| {
        let total: f64 = raw.iter().sum();
        (total > 1e-6).then(|| PhotonDistribution::new(raw.iter().map(|v| v / total).collect()).ok()).flatten()
    })
}

pub fn detector() -> impl Strategy<Value = DetectorParams> {
    (0.01..1.0f64, 0.0..1e-3f64, 0.3..0.99f64, 0.05..0.95f64).prop_map(|(eta_d, p_d, a, b)| {
        DetectorParams::new(eta_d, p_d, vec![1.0, a, a * b]).unwrap()
    })
}

pub fn entropy_endpoints() -> Check {
    prop_assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
    prop_assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
    prop_assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
    Ok(())
}

pub fn entropy_symmetry(x: f64) -> Check {
    let a = binary_entropy(x).unwrap();
    let b = binary_entropy(1.0 - x).unwrap();
    prop_assert!((a - b).abs() <= 1e-12, "h({x}) = {a}, h(1 - x) = {b}");
    prop_assert!((0.0..=1.0).contains(&a));
    Ok(())
}

pub fn entropy_concavity(x: f64, y: f64, t: f64) -> Check {
    let mid = binary_entropy(t * x + (1.0 - t) * y).unwrap();
    let chord = t * binary_entropy(x).unwrap() + (1.0 - t) * binary_entropy(y).unwrap();
    prop_assert!(mid >= chord - 1e-12, "{mid} < {chord}");
    Ok(())
}

pub fn gain_monotone(mu: f64, dmu: f64, d: f64, dd: f64, det: &DetectorParams) -> Check {
    let ch = ChannelParams::fiber(d).unwrap();
    let far = ChannelParams::fiber(d + dd).unwrap();
    let q = model::overall_gain(mu, &ch, det).unwrap();
    prop_assert!(model::overall_gain(mu + dmu, &ch, det).unwrap() >= q);
    prop_assert!(model::overall_gain(mu, &far, det).unwrap() <= q);
    Ok(())
}

pub fn click_monotone_in_setting(dist: &PhotonDistribution, det: &DetectorParams) -> Check {
    let t: Vec<f64> = (0..3).map(|k| model::click_probability(dist, det, k).unwrap()).collect();
    prop_assert!(t[0] >= t[1] - 1e-15 && t[1] >= t[2] - 1e-15, "{t:?}");
    Ok(())
}

pub fn complement_identity(dist: &PhotonDistribution, det: &DetectorParams) -> Check {
    for k in 0..3 {
        let vac = model::vacuum_probability(dist, det, k).unwrap();
        let click = model::click_probability(dist, det, k).unwrap();
        prop_assert!((vac + click - 1.0).abs() <= 2e-16, "k = {k}: {vac} + {click}");
    }
    Ok(())
}

pub fn source_tail_monotone(mu: f64, dmu: f64, v_th: u32) -> Check {
    let e = source_tail(mu, v_th).unwrap();
    prop_assert!(source_tail(mu + dmu, v_th).unwrap() >= e);
    prop_assert!(source_tail(mu, v_th + 1).unwrap() <= e);
    Ok(())
}

pub fn source_tail_matches_reference(mu: f64, v_th: u32) -> Check {
    let ours = source_tail(mu, v_th).unwrap();
    let reference = Poisson::new(mu).unwrap().sf(u64::from(v_th));
    if reference > 1e-250 {
        prop_assert!((ours - reference).abs() <= 1e-12 * reference.max(1e-3), "{ours} vs {reference}");
    } else {
        prop_assert!(ours <= 1e-240);
    }
    Ok(())
}

pub fn decoy_gain_at_open_setting(mu: f64, d: f64, det: &DetectorParams) -> Check {
    let ch = ChannelParams::fiber(d).unwrap();
    let a = model::decoy_gain(mu, &ch, det, 0).unwrap();
    let b = model::overall_gain(mu, &ch, det).unwrap();
    prop_assert!((a - b).abs() <= 1e-16 + 4.0 * f64::EPSILON * b, "{a} vs {b}");
    Ok(())
}

/// Poisson mixture of the photon-number yields sums to the closed-form gain.
pub fn decoy_gain_series(mu: f64, d: f64, det: &DetectorParams) -> Check {
    let ch = ChannelParams::fiber(d).unwrap();
    for k in 0..3 {
        let mut weight = (-mu).exp();
        let mut sum = 0.0;
        for n in 0..400 {
            if n > 0 {
                weight *= mu / n as f64;
            }
            sum += weight * model::decoy_yield(n, &ch, det, k).unwrap();
        }
        let closed = model::decoy_gain(mu, &ch, det, k).unwrap();
        prop_assert!((sum - closed).abs() <= 1e-12 * closed.max(1e-6), "k = {k}: {sum} vs {closed}");
    }
    Ok(())
}

pub fn qber_between_misalignment_and_half(mu: f64, d: f64, e_d: f64, det: &DetectorParams) -> Check {
    let ch = ChannelParams::fiber(d).unwrap();
    let e = model::qber(mu, &ch, det, e_d).unwrap();
    prop_assert!(e >= e_d - 1e-12 && e <= 0.5 + 1e-12, "{e}");
    Ok(())
}

pub fn g_min_slack_monotone(mu: f64, d: f64, det: &DetectorParams) -> Check {
    let ch = ChannelParams::fiber(d).unwrap();
    let mut last = f64::INFINITY;
    for slack in [1e-10, 1e-9, 1e-8, 1e-6] {
        let g = match min_single_photon_gain(mu, &ch, det, 10, slack) {
            Ok(b) => b.g_min,
            // too tight to be feasible; any looser slack is still bounded above by +inf
            Err(rrdps_core::Error::Infeasible(_)) => f64::INFINITY,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!(g <= last + 1e-15, "slack {slack}: {g} > {last}");
        last = g;
    }
    Ok(())
}

pub fn rates_follow_their_inputs(g: f64, q_extra: f64, e1: f64, e2: f64, v_th: u32) -> Check {
    let protocol = ProtocolParams::new(64, 1.0, v_th, 1.16, 0.015).unwrap();
    let gain = (g + q_extra).min(1.0);
    let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
    let base = KeyRateInputs { g_min: g, gain, qber: lo, e_src: 1e-6, protocol };
    let worse = KeyRateInputs { qber: hi, ..base };
    prop_assert!(k2_rate(&worse).unwrap() <= k2_rate(&base).unwrap());
    prop_assert!(k3_rate(&worse).unwrap() <= k3_rate(&base).unwrap());
    let less = KeyRateInputs { g_min: g * 0.5, ..base };
    prop_assert!(k2_rate(&less).unwrap() <= k2_rate(&base).unwrap());
    let leaky = KeyRateInputs { e_src: 1e-3, ..base };
    prop_assert!(k2_rate(&leaky).unwrap() <= k2_rate(&base).unwrap());
    Ok(())
}

pub fn optimizer_is_deterministic(d: f64, pulses: u32) -> Check {
    let spec = OptimizationSpec::table1(Protocol::DdRrdps, pulses);
    let a = optimizer::optimize_point(&spec, d).unwrap();
    let b = optimizer::optimize_point(&spec, d).unwrap();
    prop_assert_eq!(a.mu_opt.to_bits(), b.mu_opt.to_bits());
    prop_assert_eq!(a.v_th_opt, b.v_th_opt);
    prop_assert_eq!(a.rate_per_pulse.to_bits(), b.rate_per_pulse.to_bits());
    Ok(())
}

/// Runs every property with `cases` random inputs each; returns the names
/// of the failing ones with their messages.
pub fn run_all(cases: u32) -> Vec<(&'static str, String)> {
    let config = || Config { cases, failure_persistence: None, ..Config::default() };
    let mut failures = Vec::new();
    let mut record = |name: &'static str, outcome: std::result::Result<(), String>| {
        if let Err(msg) = outcome {
            failures.push((name, msg));
        }
    };
    macro_rules! check {
        ($name:expr, $strategy:expr, $body:expr) => {
            record($name, TestRunner::new(config()).run(&$strategy, $body).map_err(|e| e.to_string()))
        };
    }
    record("entropy endpoints", entropy_endpoints().map_err(|e| e.to_string()));
    check!("entropy symmetry", 0.0..=1.0f64, entropy_symmetry);
    check!("entropy concavity", (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64), |(x, y, t)| entropy_concavity(x, y, t));
    check!("gain monotone in mu and distance", (0.0..20.0f64, 0.0..5.0f64, 0.0..300.0f64, 0.0..50.0f64, detector()),
        |(mu, dmu, d, dd, det)| gain_monotone(mu, dmu, d, dd, &det));
    check!("click probability monotone in attenuator", (distribution(), detector()),
        |(dist, det)| click_monotone_in_setting(&dist, &det));
    check!("complement identity", (distribution(), detector()), |(dist, det)| complement_identity(&dist, &det));
    check!("source tail monotone", (0.0..30.0f64, 0.0..5.0f64, 0u32..60), |(mu, dmu, v)| source_tail_monotone(mu, dmu, v));
    check!("source tail against reference", (1e-3..40.0f64, 0u32..80), |(mu, v)| source_tail_matches_reference(mu, v));
    check!("decoy gain at open setting", (0.0..20.0f64, 0.0..300.0f64, detector()),
        |(mu, d, det)| decoy_gain_at_open_setting(mu, d, &det));
    check!("decoy gain photon-number series", (0.0..20.0f64, 0.0..200.0f64, detector()),
        |(mu, d, det)| decoy_gain_series(mu, d, &det));
    check!("error rate between e_d and 1/2", (0.0..20.0f64, 0.0..300.0f64, 0.0..0.5f64, detector()),
        |(mu, d, e_d, det)| qber_between_misalignment_and_half(mu, d, e_d, &det));
    check!("G_min monotone in slack", (0.01..8.0f64, 0.0..250.0f64, detector()),
        |(mu, d, det)| g_min_slack_monotone(mu, d, &det));
    check!("rates follow their inputs", (1e-6..0.5f64, 0.0..0.5f64, 0.0..0.5f64, 0.0..0.5f64, 1u32..32),
        |(g, q, e1, e2, v)| rates_follow_their_inputs(g, q, e1, e2, v));
    let det_config = Config { cases: cases.min(8), failure_persistence: None, ..Config::default() };
    record(
        "optimizer determinism",
        TestRunner::new(det_config)
            .run(&(0.0..250.0f64, prop_oneof![Just(16u32), Just(128u32)]), |(d, l)| optimizer_is_deterministic(d, l))
            .map_err(|e| e.to_string()),
    );
    failures
}
