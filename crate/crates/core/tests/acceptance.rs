//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::time::Instant;

use rand::Rng;
use rrdps_core::model::{self, ChannelParams, DetectorParams};
use rrdps_core::montecarlo::{estimate_arrival_distribution, estimate_gain, estimate_qber, McConfig, McScenario};
use rrdps_core::optimizer::{cutoff_distance, evaluate_point, scan_distances, KeyRatePoint, OptimizationSpec, Protocol};
use rrdps_core::photonstats::{build_constraints, g_value, min_single_photon_gain, solve_lp, DEFAULT_SLACK};

use common::{observed_gains, random_detector, random_distribution, rng, vertex_enumeration};

struct Outcome {
    pass: bool,
    detail: String,
}

fn scan(protocol: Protocol, pulses: u32, d_max: f64) -> Vec<KeyRatePoint> {
    scan_distances(&OptimizationSpec::table1(protocol, pulses), 0.0, d_max, 5.0).unwrap()
}

fn k2_at(pulses: u32, d: f64, mu: f64, v_th: u32) -> f64 {
    evaluate_point(&OptimizationSpec::table1(Protocol::DdRrdps, pulses), d, mu, v_th).unwrap().rate_per_pulse
}

fn cutoff_curve(pulses: u32, d_max: f64, target: f64, mu: f64, v_th: u32, fixed_d: f64) -> Outcome {
    let start = Instant::now();
    let points = scan(Protocol::DdRrdps, pulses, d_max);
    let elapsed = start.elapsed().as_secs_f64();
    let cutoff = cutoff_distance(&points);
    let rate = k2_at(pulses, fixed_d, mu, v_th);
    let cutoff_ok = (cutoff - target).abs() <= 15.0;
    let fixed_ok = rate > 0.0;
    Outcome {
        pass: cutoff_ok && fixed_ok && elapsed < 300.0,
        detail: format!(
            "L = {pulses}: cutoff {cutoff} km (target {target} +- 15) {}; K2({fixed_d} km, mu = {mu}, v_th = {v_th}) = {rate:.4e} {}; scan {elapsed:.2} s",
            if cutoff_ok { "ok" } else { "OUT OF RANGE" },
            if fixed_ok { "> 0 ok" } else { "NOT > 0" },
        ),
    }
}

fn criterion_1() -> Outcome {
    cutoff_curve(128, 320.0, 290.0, 4.895, 20, 290.0)
}

fn criterion_2() -> Outcome {
    cutoff_curve(16, 240.0, 200.0, 0.0535, 3, 200.0)
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (pulses, d_max) in [(128, 320.0), (16, 240.0)] {
        let k2 = scan(Protocol::DdRrdps, pulses, d_max);
        let k3 = scan(Protocol::PassiveRrdps, pulses, d_max);
        let below: Vec<String> = k2
            .iter()
            .zip(&k3)
            .filter(|(a, b)| a.clamped_rate() < b.clamped_rate())
            .map(|(a, b)| format!("{} km ({:.4e} < {:.4e})", a.distance, a.clamped_rate(), b.clamped_rate()))
            .collect();
        let gap = cutoff_distance(&k2) - cutoff_distance(&k3);
        if below.is_empty() {
            detail.push(format!("L = {pulses}: K2 >= K3 everywhere, cutoff gap {gap} km"));
        } else {
            pass = false;
            detail.push(format!("L = {pulses}: K2 < K3 at {}; cutoff gap {gap} km", below.join(", ")));
        }
        if pulses == 16 {
            let at50 = |pts: &[KeyRatePoint]| pts.iter().find(|p| p.distance == 50.0).unwrap().clamped_rate();
            let ratio = at50(&k2) / at50(&k3);
            pass &= ratio >= 5.0 && gap >= 30.0;
            detail.push(format!("K2/K3 at 50 km = {ratio:.2} (>= 5), gap >= 30 km: {}", gap >= 30.0));
        }
    }
    Outcome { pass, detail: detail.join("; ") }
}

fn criterion_4() -> Outcome {
    let grid = |protocol: Protocol, e_d: f64| {
        let spec = OptimizationSpec { e_d, ..OptimizationSpec::table1(protocol, 128) };
        scan_distances(&spec, 0.0, 200.0, 5.0).unwrap()
    };
    let noisy_k2 = grid(Protocol::DdRrdps, 0.095);
    let noisy_bb84 = grid(Protocol::Bb84Decoy, 0.095);
    let wins: Vec<f64> = noisy_k2
        .iter()
        .zip(&noisy_bb84)
        .filter(|(a, b)| a.clamped_rate() > b.clamped_rate())
        .map(|(a, _)| a.distance)
        .collect();
    let clean_k2 = grid(Protocol::DdRrdps, 0.015);
    let clean_bb84 = grid(Protocol::Bb84Decoy, 0.015);
    let short: Vec<f64> = [0.0, 10.0, 20.0]
        .iter()
        .map(|&d| {
            let i = (d / 5.0) as usize;
            clean_bb84[i].clamped_rate() / clean_k2[i].clamped_rate()
        })
        .collect();
    let crossover = !wins.is_empty();
    let bb84_short = short.iter().all(|&r| r > 1.0);
    Outcome {
        pass: crossover && bb84_short,
        detail: format!(
            "e_d = 9.5%: K2 > BB84 on {} of {} distances ({}); e_d = 1.5%: BB84/K2 at 0, 10, 20 km = {:.2?}",
            wins.len(),
            noisy_k2.len(),
            match (wins.first(), wins.last()) {
                (Some(a), Some(b)) => format!("{a}-{b} km"),
                _ => "none".into(),
            },
            short
        ),
    }
}

fn criterion_5() -> Outcome {
    let mut r = rng(5);
    let (mut worst_gap, mut worst_residual, mut bad) = (0.0f64, 0.0f64, 0);
    for case in 0..100 {
        let det = random_detector(&mut r);
        let n_max = r.random_range(2..=10);
        let truth = random_distribution(&mut r, n_max);
        let slack = [0.0, DEFAULT_SLACK][case % 2];
        let problem = build_constraints(&observed_gains(&truth, &det), &det, n_max, slack).unwrap();
        match (solve_lp(&problem).unwrap().optimum(), vertex_enumeration(&problem)) {
            (Ok((value, witness)), Some((oracle, _))) => {
                worst_gap = worst_gap.max((value - oracle).abs());
                worst_residual = worst_residual.max(problem.max_violation(witness.probs()));
            }
            _ => bad += 1,
        }
    }
    Outcome {
        pass: bad == 0 && worst_gap <= 1e-9 && worst_residual <= 1e-9,
        detail: format!("100 instances: max |simplex - vertex enumeration| = {worst_gap:.2e}, max residual = {worst_residual:.2e}, unsolved = {bad}"),
    }
}

fn criterion_6() -> Outcome {
    let mut r = rng(6);
    let mut worst = f64::NEG_INFINITY;
    for case in 0..50 {
        let det = random_detector(&mut r);
        let mu = r.random_range(0.05..3.0);
        let d = r.random_range(0.0..30.0);
        let config = McConfig {
            trials: 20_000,
            seed: 600 + case,
            scenario: McScenario { mu, channel: ChannelParams::fiber(d).unwrap(), detector: det.clone(), decoy: None, e_d: 0.0 },
        };
        // sampled photon arrivals after Poisson emission and binomial loss
        let hist = estimate_arrival_distribution(&config, 10).unwrap();
        let truth = hist.distribution.renormalized().unwrap();
        let problem = build_constraints(&observed_gains(&truth, &det), &det, 10, DEFAULT_SLACK).unwrap();
        let g_min = solve_lp(&problem).unwrap().value;
        worst = worst.max(g_min - g_value(&truth, det.eta_d));
    }
    Outcome {
        pass: worst <= 1e-9,
        detail: format!("50 sampled truths: max G_min - G(truth) = {worst:.2e} (<= 1e-9)"),
    }
}

fn criterion_7() -> Outcome {
    let mut r = rng(7);
    let mut passed = 0;
    let mut worst = 0.0f64;
    for bundle in 0..10u64 {
        let pulses = [16, 32, 64, 128][r.random_range(0..4)];
        let det = DetectorParams::table1(pulses);
        let mu = r.random_range(0.2..8.0);
        let d = r.random_range(0.0..120.0);
        let e_d = r.random_range(0.005..0.1);
        let channel = ChannelParams::fiber(d).unwrap();
        let scenario = McScenario { mu, channel, detector: det.clone(), decoy: None, e_d };
        let cfg = |offset: u64, decoy: Option<usize>| McConfig {
            trials: 1_000_000,
            seed: 7000 + 10 * bundle + offset,
            scenario: McScenario { decoy, ..scenario.clone() },
        };
        let z = [
            estimate_gain(&cfg(0, None)).unwrap().z_score(model::overall_gain(mu, &channel, &det).unwrap()),
            estimate_gain(&cfg(1, Some(1))).unwrap().z_score(model::decoy_gain(mu, &channel, &det, 1).unwrap()),
            estimate_gain(&cfg(2, Some(2))).unwrap().z_score(model::decoy_gain(mu, &channel, &det, 2).unwrap()),
            estimate_qber(&cfg(3, None)).unwrap().z_score(model::qber(mu, &channel, &det, e_d).unwrap()),
        ];
        let max = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(max);
        if max <= 5.0 {
            passed += 1;
        }
    }
    Outcome {
        pass: passed >= 9,
        detail: format!("{passed}/10 bundles with Q, Q_2, Q_3, e_b all within 5 std errors (largest |z| = {worst:.2})"),
    }
}

fn criterion_8() -> Outcome {
    let failures = common::props::run_all(256);
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            "entropy, monotonicity, complement, decoy consistency, slack and determinism properties hold".into()
        } else {
            failures.iter().map(|(n, m)| format!("{n}: {m}")).collect::<Vec<_>>().join("; ")
        },
    }
}

fn main() {
    // spot-check the photon bound used in criterion 1 before the long scans
    let det = DetectorParams::table1(128);
    let far = min_single_photon_gain(4.895, &ChannelParams::fiber(290.0).unwrap(), &det, 10, 0.0).unwrap();
    println!("G_min(L = 128, mu = 4.895, 290 km, exact constraints) = {:.6e}", far.g_min);

    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("long-train curve and cutoff", criterion_1),
        ("short-train curve and cutoff", criterion_2),
        ("detector-decoy vs passive round robin", criterion_3),
        ("crossover against decoy BB84", criterion_4),
        ("LP matches vertex enumeration", criterion_5),
        ("photon bound is a lower bound", criterion_6),
        ("Monte-Carlo agreement", criterion_7),
        ("property suites", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        if !outcome.pass {
            failed += 1;
        }
        println!("{} criterion {} ({name}): {}", if outcome.pass { "PASS" } else { "FAIL" }, i + 1, outcome.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
