#![allow(dead_code)]
pub mod props;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rrdps_core::model::{self, DetectorParams, PhotonDistribution};
use rrdps_core::photonstats::{LpProblem, Relation};

/// Brute-force LP optimum over the vertices of the slack-augmented equality
/// system.
///
/// Only for problems over distributions (normalization row, bounds [0, 1]):
/// the upper bounds are then implied and dropped.
pub fn vertex_enumeration(problem: &LpProblem) -> Option<(f64, Vec<f64>)> {
    assert!(problem.bounds.iter().all(|&b| b == (0.0, 1.0)), "oracle handles [0, 1] bounds only");
    let n = problem.num_vars();
    let m = problem.rows.len();
    let slacks: Vec<usize> = (0..m).filter(|&i| problem.rows[i].relation != Relation::Eq).collect();
    let cols = n + slacks.len();
    let mut a = DMatrix::<f64>::zeros(m, cols);
    for (i, row) in problem.rows.iter().enumerate() {
        for j in 0..n {
            a[(i, j)] = row.coeffs[j];
        }
    }
    for (s, &i) in slacks.iter().enumerate() {
        a[(i, n + s)] = match problem.rows[i].relation {
            Relation::Le => 1.0,
            _ => -1.0,
        };
    }
    let b = DVector::from_iterator(m, problem.rows.iter().map(|r| r.rhs));

    // every vertex is the unique solution on a support of linearly
    // independent columns, so try all supports up to the row count
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 1..=m.min(cols) {
        let mut support: Vec<usize> = (0..k).collect();
        loop {
            let sub = a.select_columns(&support);
            let svd = sub.clone().svd(true, true);
            if svd.rank(1e-12) == k {
                let xs = svd.solve(&b, 1e-12).unwrap();
                let residual = (&sub * &xs - &b).amax();
                if residual < 1e-12 && xs.iter().all(|&v| v >= -1e-12) {
                    let mut x = vec![0.0; cols];
                    for (i, &j) in support.iter().enumerate() {
                        x[j] = xs[i].max(0.0);
                    }
                    x.truncate(n);
                    let value = problem.objective_value(&x);
                    if best.as_ref().is_none_or(|(v, _)| value < *v) {
                        best = Some((value, x));
                    }
                }
            }
            if !next_combination(&mut support, cols) {
                break;
            }
        }
    }
    best
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Detector with random efficiency, dark counts and three decreasing
/// attenuator settings starting at 1.
pub fn random_detector(rng: &mut impl Rng) -> DetectorParams {
    let eta_d = rng.random_range(0.05..0.95);
    let p_d = if rng.random_bool(0.3) { 0.0 } else { 10f64.powf(rng.random_range(-9.0..-3.0)) };
    let second = rng.random_range(0.4..0.95);
    let third = rng.random_range(0.1..second);
    DetectorParams::new(eta_d, p_d, vec![1.0, second, third]).unwrap()
}

/// Random normalized distribution on `0..=n_max` with a few empty entries.
pub fn random_distribution(rng: &mut impl Rng, n_max: usize) -> PhotonDistribution {
    let raw: Vec<f64> =
        (0..=n_max).map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random::<f64>() }).collect();
    let total: f64 = raw.iter().sum::<f64>() + 1e-300;
    let mut probs: Vec<f64> = raw.iter().map(|v| v / total).collect();
    if probs.iter().all(|&p| p == 0.0) {
        probs[0] = 1.0;
    }
    let sum: f64 = probs.iter().sum();
    let top = (0..probs.len()).max_by(|&i, &j| probs[i].total_cmp(&probs[j])).unwrap();
    probs[top] += 1.0 - sum;
    PhotonDistribution::new(probs).unwrap()
}

/// Click rates the given distribution produces at every setting.
pub fn observed_gains(dist: &PhotonDistribution, detector: &DetectorParams) -> Vec<f64> {
    (0..detector.decoy_settings.len()).map(|k| model::click_probability(dist, detector, k).unwrap()).collect()
}
