//! Run configuration: flat `section.key = value` text.
//!
//! Every key is optional on input; missing keys keep the simulation
//! defaults. Unknown or repeated keys are errors. Output always lists every
//! key, so a written file reads back to the same configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{DetectorParams, DEFAULT_N_MAX};
use crate::optimizer::{OptimizationSpec, Protocol};
use crate::photonstats::DEFAULT_SLACK;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub pulses: u32,
    pub e_d: f64,
    pub f: f64,
    pub beta: f64,
    pub eta_d: f64,
    /// Dark-count probability per pulse; a train of `L` pulses sees `L` times
    /// this. The BB84 comparator uses it directly as the background yield.
    pub p_d_base: f64,
    pub decoys: Vec<f64>,
    pub n_max: usize,
    pub slack: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub d_step: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    pub v_th_min: u32,
    pub v_th_max: u32,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub point_distance: f64,
    pub mc_trials: u64,
    pub mc_seed: u64,
    pub mc_mu: f64,
    pub mc_distance: f64,
    /// `None` writes to standard output.
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::DdRrdps,
            pulses: 128,
            e_d: 0.015,
            f: 1.16,
            beta: 0.2,
            eta_d: 0.19,
            p_d_base: 1e-9,
            decoys: vec![1.0, 0.8, 0.6],
            n_max: DEFAULT_N_MAX,
            slack: DEFAULT_SLACK,
            d_min: 0.0,
            d_max: 320.0,
            d_step: 5.0,
            mu_min: 1e-4,
            mu_max: 50.0,
            v_th_min: 1,
            v_th_max: 100,
            rel_tol: 1e-9,
            max_iter: 100,
            point_distance: 50.0,
            mc_trials: 1_000_000,
            mc_seed: 1,
            mc_mu: 1.0,
            mc_distance: 50.0,
            output: None,
        }
    }
}

const KEYS: &[&str] = &[
    "protocol.tag",
    "protocol.L",
    "protocol.e_d",
    "protocol.f",
    "channel.beta",
    "detector.eta_d",
    "detector.p_d_base",
    "detector.decoys",
    "lp.n_max",
    "lp.slack",
    "scan.d_min",
    "scan.d_max",
    "scan.d_step",
    "optimizer.mu_min",
    "optimizer.mu_max",
    "optimizer.v_th_min",
    "optimizer.v_th_max",
    "optimizer.rel_tol",
    "optimizer.max_iter",
    "point.distance",
    "mc.trials",
    "mc.seed",
    "mc.mu",
    "mc.distance",
    "output.path",
];

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("bad value {value:?} for {key}") })
}

impl RunConfig {
    /// Per-train dark-count probability used by the model.
    pub fn train_dark_count(&self) -> f64 {
        match self.protocol {
            Protocol::Bb84Decoy => self.p_d_base,
            _ => self.p_d_base * f64::from(self.pulses),
        }
    }

    pub fn detector(&self) -> Result<DetectorParams> {
        DetectorParams::new(self.eta_d, self.train_dark_count(), self.decoys.clone())
    }

    pub fn optimization_spec(&self) -> Result<OptimizationSpec> {
        let spec = OptimizationSpec {
            protocol: self.protocol,
            pulses: self.pulses,
            beta: self.beta,
            detector: self.detector()?,
            e_d: self.e_d,
            f: self.f,
            n_max: self.n_max,
            slack: self.slack,
            mu_range: (self.mu_min, self.mu_max),
            v_th_range: (self.v_th_min, self.v_th_max),
            rel_tol: self.rel_tol,
            max_iter: self.max_iter,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let decoys = self.decoys.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let output = self.output.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let values: [String; 25] = [
            self.protocol.to_string(),
            self.pulses.to_string(),
            self.e_d.to_string(),
            self.f.to_string(),
            self.beta.to_string(),
            self.eta_d.to_string(),
            self.p_d_base.to_string(),
            decoys,
            self.n_max.to_string(),
            self.slack.to_string(),
            self.d_min.to_string(),
            self.d_max.to_string(),
            self.d_step.to_string(),
            self.mu_min.to_string(),
            self.mu_max.to_string(),
            self.v_th_min.to_string(),
            self.v_th_max.to_string(),
            self.rel_tol.to_string(),
            self.max_iter.to_string(),
            self.point_distance.to_string(),
            self.mc_trials.to_string(),
            self.mc_seed.to_string(),
            self.mc_mu.to_string(),
            self.mc_distance.to_string(),
            output,
        ];
        let mut out = String::new();
        for (key, value) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Parse { line, message: format!("expected key = value, got {content:?}") })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key) {
                return Err(Error::Parse { line, message: format!("duplicate key {key}") });
            }
            seen.push(key);
            cfg.set(line, key, value)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let v = value;
        match key {
            "protocol.tag" => self.protocol = v.parse().map_err(|e: Error| Error::Parse { line, message: e.to_string() })?,
            "protocol.L" => self.pulses = parse_value(line, key, v)?,
            "protocol.e_d" => self.e_d = parse_value(line, key, v)?,
            "protocol.f" => self.f = parse_value(line, key, v)?,
            "channel.beta" => self.beta = parse_value(line, key, v)?,
            "detector.eta_d" => self.eta_d = parse_value(line, key, v)?,
            "detector.p_d_base" => self.p_d_base = parse_value(line, key, v)?,
            "detector.decoys" => {
                self.decoys = v
                    .split(',')
                    .map(|s| parse_value(line, key, s.trim()))
                    .collect::<Result<_>>()?
            }
            "lp.n_max" => self.n_max = parse_value(line, key, v)?,
            "lp.slack" => self.slack = parse_value(line, key, v)?,
            "scan.d_min" => self.d_min = parse_value(line, key, v)?,
            "scan.d_max" => self.d_max = parse_value(line, key, v)?,
            "scan.d_step" => self.d_step = parse_value(line, key, v)?,
            "optimizer.mu_min" => self.mu_min = parse_value(line, key, v)?,
            "optimizer.mu_max" => self.mu_max = parse_value(line, key, v)?,
            "optimizer.v_th_min" => self.v_th_min = parse_value(line, key, v)?,
            "optimizer.v_th_max" => self.v_th_max = parse_value(line, key, v)?,
            "optimizer.rel_tol" => self.rel_tol = parse_value(line, key, v)?,
            "optimizer.max_iter" => self.max_iter = parse_value(line, key, v)?,
            "point.distance" => self.point_distance = parse_value(line, key, v)?,
            "mc.trials" => self.mc_trials = parse_value(line, key, v)?,
            "mc.seed" => self.mc_seed = parse_value(line, key, v)?,
            "mc.mu" => self.mc_mu = parse_value(line, key, v)?,
            "mc.distance" => self.mc_distance = parse_value(line, key, v)?,
            "output.path" => self.output = (!v.is_empty()).then(|| PathBuf::from(v)),
            _ => return Err(Error::Parse { line, message: format!("unknown key {key}") }),
        }
        Ok(())
    }
}
