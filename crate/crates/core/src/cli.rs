//! Command-line front end: `scan`, `optimize`, `lp`, `mc`.
//!
//! Commands render their whole report as text. Data goes to `--out` (or
//! standard output); diagnostics go to standard error.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::model::{self, ChannelParams};
use crate::montecarlo::{self, McConfig, McEstimate, McScenario, GENERATOR};
use crate::optimizer::{self, KeyRatePoint, Protocol};
use crate::photonstats::{self, LpProblem};

#[derive(Debug, Parser)]
#[command(name = "rrdps", version, about = "Key-rate analysis for detector-decoy RRDPS QKD")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimized key rate over a distance grid, as CSV.
    Scan(ScanArgs),
    /// Optimized operating point at one distance.
    Optimize(PointArgs),
    /// Solve a photon-number LP from a problem file.
    Lp(LpArgs),
    /// Monte-Carlo estimates of the gains and error rate next to the closed forms.
    Mc(McArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Key=value configuration file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (standard output if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// dd-rrdps, passive-rrdps or bb84-decoy.
    #[arg(long)]
    pub protocol: Option<Protocol>,
    /// Pulses per train.
    #[arg(long = "L")]
    pub pulses: Option<u32>,
    /// Two-sided tolerance on the click-rate constraints.
    #[arg(long)]
    pub slack: Option<f64>,
    /// Photon-number truncation.
    #[arg(long)]
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub d_min: Option<f64>,
    #[arg(long)]
    pub d_max: Option<f64>,
    #[arg(long)]
    pub d_step: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Fiber length in km.
    #[arg(short = 'd', long)]
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct LpArgs {
    /// Problem file.
    pub problem: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(short = 'd', long)]
    pub distance: Option<f64>,
    /// Mean photon number per train.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
}

impl CommonArgs {
    pub fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::parse(&fs::read_to_string(path)?)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.protocol {
            cfg.protocol = v;
        }
        if let Some(v) = self.pulses {
            cfg.pulses = v;
        }
        if let Some(v) = self.slack {
            cfg.slack = v;
        }
        if let Some(v) = self.n_max {
            cfg.n_max = v;
        }
        if let Some(v) = &self.out {
            cfg.output = Some(v.clone());
        }
        Ok(cfg)
    }
}

fn sci(x: f64) -> String {
    format!("{x:.9e}")
}

fn header(out: &mut String, command: &str, cfg: &RunConfig) {
    let _ = writeln!(out, "# rrdps {command} {}", env!("CARGO_PKG_VERSION"));
    for line in cfg.to_text().lines() {
        let _ = writeln!(out, "# {line}");
    }
}

pub const SCAN_COLUMNS: &str = "distance_km,mu_opt,v_th_opt,Q,e_b,G_min,rate_raw,rate_clamped";

fn scan_row(p: &KeyRatePoint) -> String {
    let g_min = p.g_min.map(sci).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{}",
        sci(p.distance),
        sci(p.mu_opt),
        p.v_th_opt,
        sci(p.gain),
        sci(p.qber),
        g_min,
        sci(p.rate_per_pulse),
        sci(p.clamped_rate())
    )
}

/// Optimized rate curve as CSV with a `#` header echoing the configuration.
pub fn cmd_scan(cfg: &RunConfig) -> Result<String> {
    let spec = cfg.optimization_spec()?;
    let points = optimizer::scan_distances(&spec, cfg.d_min, cfg.d_max, cfg.d_step)?;
    let mut out = String::new();
    header(&mut out, "scan", cfg);
    let _ = writeln!(out, "# cutoff_km = {}", optimizer::cutoff_distance(&points));
    let _ = writeln!(out, "{SCAN_COLUMNS}");
    for p in &points {
        let _ = writeln!(out, "{}", scan_row(p));
    }
    Ok(out)
}

/// Optimized point at `cfg.point_distance` with all intermediates.
pub fn cmd_optimize(cfg: &RunConfig) -> Result<String> {
    let spec = cfg.optimization_spec()?;
    let d = cfg.point_distance;
    let p = optimizer::optimize_point(&spec, d)?;
    let channel = ChannelParams::new(spec.beta, d)?;
    let mut out = String::new();
    header(&mut out, "optimize", cfg);
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("protocol", p.protocol.to_string());
    kv("distance_km", sci(d));
    kv("transmittance", sci(model::transmittance(&channel)?));
    kv("mu_opt", sci(p.mu_opt));
    kv("v_th_opt", p.v_th_opt.to_string());
    kv("Q", sci(p.gain));
    kv("e_b", sci(p.qber));
    kv("e_src", sci(p.e_src));
    if p.protocol == Protocol::DdRrdps {
        let bound = photonstats::min_single_photon_gain(p.mu_opt, &channel, &spec.detector, spec.n_max, spec.slack)?;
        for (k, q) in bound.observed_gains.iter().enumerate() {
            kv(&format!("Q_{}", k + 1), sci(*q));
        }
        kv("G_min", sci(bound.g_min));
        let witness = bound.witness.probs().iter().map(|&x| sci(x)).collect::<Vec<_>>().join(" ");
        kv("witness", witness);
        let active = bound.active_basis.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
        kv("active", active);
    }
    kv("rate_raw", sci(p.rate_per_pulse));
    kv("rate_clamped", sci(p.clamped_rate()));
    kv("no_positive_rate", p.no_positive_rate.to_string());
    Ok(out)
}

/// Solution report for an LP in text form.
pub fn cmd_lp(problem_text: &str) -> Result<String> {
    let problem = LpProblem::parse(problem_text)?;
    Ok(photonstats::solve_lp(&problem)?.to_text())
}

pub const MC_COLUMNS: &str = "quantity,estimate,std_error,analytic,z_score,seed";

fn mc_row(name: &str, est: Result<McEstimate>, analytic: Result<f64>, seed: u64) -> Result<String> {
    match (est, analytic) {
        (Ok(e), Ok(a)) => Ok(format!("{name},{},{},{},{},{seed}", sci(e.mean), sci(e.std_error), sci(a), sci(e.z_score(a)))),
        (Err(Error::Degenerate(_)), _) | (_, Err(Error::Degenerate(_))) => Ok(format!("{name},n/a,n/a,n/a,n/a,{seed}")),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

/// Monte-Carlo estimates of `Q`, the decoy gains and `e_b` beside their
/// closed forms. Estimator `i` uses seed `mc.seed + i`.
pub fn cmd_mc(cfg: &RunConfig) -> Result<String> {
    let detector = cfg.detector()?;
    let channel = ChannelParams::new(cfg.beta, cfg.mc_distance)?;
    let scenario = McScenario { mu: cfg.mc_mu, channel, detector: detector.clone(), decoy: None, e_d: cfg.e_d };
    let config = |offset: u64, decoy: Option<usize>| McConfig {
        trials: cfg.mc_trials,
        seed: cfg.mc_seed.wrapping_add(offset),
        scenario: McScenario { decoy, ..scenario.clone() },
    };

    let mut out = String::new();
    header(&mut out, "mc", cfg);
    let _ = writeln!(out, "# generator = {GENERATOR}");
    let _ = writeln!(out, "{MC_COLUMNS}");
    let c = config(0, None);
    let q = mc_row("Q", montecarlo::estimate_gain(&c), model::overall_gain(cfg.mc_mu, &channel, &detector), c.seed)?;
    let _ = writeln!(out, "{q}");
    let mut offset = 1;
    for k in 1..detector.decoy_settings.len() {
        let c = config(offset, Some(k));
        let analytic = model::decoy_gain(cfg.mc_mu, &channel, &detector, k);
        let row = mc_row(&format!("Q_{}", k + 1), montecarlo::estimate_gain(&c), analytic, c.seed)?;
        let _ = writeln!(out, "{row}");
        offset += 1;
    }
    let c = config(offset, None);
    let analytic = model::qber(cfg.mc_mu, &channel, &detector, cfg.e_d);
    let _ = writeln!(out, "{}", mc_row("e_b", montecarlo::estimate_qber(&c), analytic, c.seed)?);
    Ok(out)
}

fn emit(text: &str, path: Option<&PathBuf>) -> Result<()> {
    match path {
        Some(p) => {
            fs::write(p, text)?;
            eprintln!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Scan(a) => {
            let mut cfg = a.common.load()?;
            cfg.d_min = a.d_min.unwrap_or(cfg.d_min);
            cfg.d_max = a.d_max.unwrap_or(cfg.d_max);
            cfg.d_step = a.d_step.unwrap_or(cfg.d_step);
            emit(&cmd_scan(&cfg)?, cfg.output.as_ref())
        }
        Command::Optimize(a) => {
            let mut cfg = a.common.load()?;
            cfg.point_distance = a.distance.unwrap_or(cfg.point_distance);
            emit(&cmd_optimize(&cfg)?, cfg.output.as_ref())
        }
        Command::Lp(a) => {
            let text = fs::read_to_string(&a.problem)?;
            emit(&cmd_lp(&text)?, a.out.as_ref())
        }
        Command::Mc(a) => {
            let mut cfg = a.common.load()?;
            cfg.mc_distance = a.distance.unwrap_or(cfg.mc_distance);
            cfg.mc_mu = a.mu.unwrap_or(cfg.mc_mu);
            cfg.mc_seed = a.seed.unwrap_or(cfg.mc_seed);
            cfg.mc_trials = a.trials.unwrap_or(cfg.mc_trials);
            emit(&cmd_mc(&cfg)?, cfg.output.as_ref())
        }
    }
}
