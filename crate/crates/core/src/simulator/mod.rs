//! Monte-Carlo frame engine.
//!
//! Each trial draws a channel, runs a policy through one of the feedback
//! models in [`link`], and accounts energy and delivered bits. Trials are
//! seeded from `(seed, trial index)` and run in parallel; results are
//! aggregated in trial order, so statistics are bit-identical across runs.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::angleset::PiecewisePrior;
use crate::error::{Error, Result};
use crate::outage::spectral_cost;
use crate::phy::{beamforming_factor, draw_channel};
use crate::planner::error_recursions;
use crate::policies::{run_policy, Design, Policy};

pub mod link;

pub use link::{InjectedLink, SignalLink};

/// How ACK/NACK feedback deviates from the truth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ErrorMode {
    /// Perfect feedback.
    None,
    /// Ground truth flipped with fixed probabilities.
    Injected { p_fa: f64, p_md: f64, p_cmp: f64 },
    /// Energy detector on the simulated matched-filter output.
    Signal,
}

impl ErrorMode {
    /// Injected errors with equal false-alarm and misdetection probability.
    pub fn injected(p: f64) -> Self {
        ErrorMode::Injected { p_fa: p, p_md: p, p_cmp: p }
    }
}

/// Result of one simulated frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameOutcome {
    pub energy_total: f64,
    pub energy_align: f64,
    pub energy_data: f64,
    pub bits_delivered: f64,
    /// Strongest cluster inside the data beam.
    pub aligned: bool,
    /// Strongest cluster left the support during alignment.
    pub error_event: bool,
    pub align_slots: usize,
}

/// One experiment: design, protocol, feedback model and angle priors.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub design: Design,
    pub policy: Policy,
    pub error_mode: ErrorMode,
    pub prior_t: PiecewisePrior,
    pub prior_r: PiecewisePrior,
}

impl SimConfig {
    /// Uniform priors on the configured supports.
    pub fn new(design: Design, policy: Policy, error_mode: ErrorMode) -> Result<Self> {
        let prior_t = PiecewisePrior::uniform(&design.params.support_t)?;
        let prior_r = PiecewisePrior::uniform(&design.params.support_r)?;
        Ok(SimConfig { design, policy, error_mode, prior_t, prior_r })
    }
}

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Simulates one frame.
pub fn run_frame(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Result<FrameOutcome> {
    let d = &cfg.design;
    let p = &d.params;
    let channel = draw_channel(p, &cfg.prior_t, &cfg.prior_r, rng);
    let trace = match cfg.error_mode {
        ErrorMode::None => run_policy(
            cfg.policy,
            d,
            &cfg.prior_t,
            &cfg.prior_r,
            &mut InjectedLink { channel: &channel, p_fa: 0.0, p_md: 0.0, p_cmp: 0.0, rng },
        )?,
        ErrorMode::Injected { p_fa, p_md, p_cmp } => run_policy(
            cfg.policy,
            d,
            &cfg.prior_t,
            &cfg.prior_r,
            &mut InjectedLink { channel: &channel, p_fa, p_md, p_cmp, rng },
        )?,
        ErrorMode::Signal => run_policy(
            cfg.policy,
            d,
            &cfg.prior_t,
            &cfg.prior_r,
            &mut SignalLink { channel: &channel, detection: &d.detection, rng },
        )?,
    };
    let strongest = channel.strongest();
    let error_event = trace
        .supports
        .iter()
        .any(|(t, r)| !t.contains(strongest.theta_t) || !r.contains(strongest.theta_r));
    let (aligned, bits) = match &trace.data {
        Some(data) if data.rate_bps > 0.0 => {
            let aligned = data.beam_t.contains(strongest.theta_t) && data.beam_r.contains(strongest.theta_r);
            let m = data.beam_t.measure() * data.beam_r.measure();
            let snr = beamforming_factor(data.power_w, m, p)
                * channel.gamma
                * channel.in_beam_fraction(&data.beam_t, &data.beam_r);
            let ok = snr >= spectral_cost(data.rate_bps, p.bandwidth_hz);
            (aligned, if ok { data.rate_bps * data.duration_s } else { 0.0 })
        }
        Some(data) => (
            data.beam_t.contains(strongest.theta_t) && data.beam_r.contains(strongest.theta_r),
            0.0,
        ),
        None => (false, 0.0),
    };
    let energy_align = trace.align_energy();
    let energy_data = trace.data_energy();
    Ok(FrameOutcome {
        energy_total: energy_align + energy_data,
        energy_align,
        energy_data,
        bits_delivered: bits,
        aligned,
        error_event,
        align_slots: trace.align_slots,
    })
}

/// Runs `trials` frames in parallel; outcomes are returned in trial order.
pub fn run_trials(cfg: &SimConfig, trials: usize, seed: u64) -> Result<Vec<FrameOutcome>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|i| run_frame(cfg, &mut trial_rng(seed, i)))
        .collect()
}

/// Sample mean and 95% normal-approximation half-width.
pub fn mean_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Aggregate statistics of a Monte-Carlo run.
#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloStats {
    pub trials: usize,
    pub mean_power_w: f64,
    pub power_ci_w: f64,
    pub mean_throughput_bps: f64,
    pub throughput_ci_bps: f64,
    /// Throughput over bandwidth (bit/s/Hz).
    pub mean_spectral_efficiency: f64,
    pub spectral_efficiency_ci: f64,
    pub alignment_success_rate: f64,
    /// Data failures among aligned frames.
    pub outage_rate: f64,
    pub error_event_rate: f64,
    pub mean_align_slots: f64,
}

impl MonteCarloStats {
    pub fn from_outcomes(outcomes: &[FrameOutcome], frame_s: f64, bandwidth_hz: f64) -> Self {
        let n = outcomes.len();
        let power: Vec<f64> = outcomes.iter().map(|o| o.energy_total / frame_s).collect();
        let thr: Vec<f64> = outcomes.iter().map(|o| o.bits_delivered / frame_s).collect();
        let (mean_power_w, power_ci_w) = mean_ci(&power);
        let (mean_throughput_bps, throughput_ci_bps) = mean_ci(&thr);
        let aligned = outcomes.iter().filter(|o| o.aligned).count();
        let aligned_failed = outcomes
            .iter()
            .filter(|o| o.aligned && o.bits_delivered == 0.0)
            .count();
        MonteCarloStats {
            trials: n,
            mean_power_w,
            power_ci_w,
            mean_throughput_bps,
            throughput_ci_bps,
            mean_spectral_efficiency: mean_throughput_bps / bandwidth_hz,
            spectral_efficiency_ci: throughput_ci_bps / bandwidth_hz,
            alignment_success_rate: aligned as f64 / n as f64,
            outage_rate: if aligned > 0 { aligned_failed as f64 / aligned as f64 } else { f64::NAN },
            error_event_rate: outcomes.iter().filter(|o| o.error_event).count() as f64 / n as f64,
            mean_align_slots: outcomes.iter().map(|o| o.align_slots as f64).sum::<f64>() / n as f64,
        }
    }
}

/// Runs and aggregates `trials` frames.
pub fn run_monte_carlo(cfg: &SimConfig, trials: usize, seed: u64) -> Result<MonteCarloStats> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let outcomes = run_trials(cfg, trials, seed)?;
    let p = &cfg.design.params;
    Ok(MonteCarloStats::from_outcomes(&outcomes, p.frame_s, p.bandwidth_hz))
}

/// Writes per-trial records as CSV.
pub fn write_trials_csv<W: Write>(out: W, policy: Policy, outcomes: &[FrameOutcome]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["trial", "policy", "energy_J", "bits", "aligned", "e_flag", "L_used"])?;
    for (i, o) in outcomes.iter().enumerate() {
        w.write_record([
            i.to_string(),
            policy.to_string(),
            format!("{:e}", o.energy_total),
            format!("{}", o.bits_delivered),
            (o.aligned as u8).to_string(),
            (o.error_event as u8).to_string(),
            o.align_slots.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Analytic error-propagation predictions against simulated frames.
#[derive(Clone, Debug, PartialEq)]
pub struct TheoryCheck {
    pub analytic_power_w: f64,
    pub empirical_power_w: f64,
    pub power_z: f64,
    pub analytic_throughput_bps: f64,
    pub empirical_throughput_bps: f64,
    pub throughput_z: f64,
    pub analytic_error_rate: f64,
    pub empirical_error_rate: f64,
    pub error_rate_z: f64,
    /// Any |z| above 3.
    pub flagged: bool,
}

fn z_score(empirical: f64, analytic: f64, xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let se = (var / n).sqrt();
    let diff = empirical - analytic;
    if se == 0.0 {
        if diff.abs() <= 1e-9 * analytic.abs().max(f64::MIN_POSITIVE) {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    } else {
        diff / se
    }
}

/// Simulates DFS with injected errors and compares with the analytic
/// throughput, power and error-event probability.
pub fn analytic_vs_empirical(design: &Design, p_fa: f64, p_md: f64, trials: usize, seed: u64) -> Result<TheoryCheck> {
    let cfg = SimConfig::new(
        design.clone(),
        Policy::Dfs,
        ErrorMode::Injected { p_fa, p_md, p_cmp: 0.0 },
    )?;
    let outcomes = run_trials(&cfg, trials, seed)?;
    let analysis = error_recursions(&design.schedule, p_fa, p_md)?;
    let p = &design.params;
    let power: Vec<f64> = outcomes.iter().map(|o| o.energy_total / p.frame_s).collect();
    let thr: Vec<f64> = outcomes.iter().map(|o| o.bits_delivered / p.frame_s).collect();
    let err: Vec<f64> = outcomes.iter().map(|o| o.error_event as u8 as f64).collect();
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let survive = analysis.throughput_bps / ((1.0 - p.outage) * p.rate_min_bps);
    let (ep, et, ee) = (mean(&power), mean(&thr), mean(&err));
    let power_z = z_score(ep, analysis.power_w, &power);
    let throughput_z = z_score(et, analysis.throughput_bps, &thr);
    let error_rate_z = z_score(ee, 1.0 - survive, &err);
    Ok(TheoryCheck {
        analytic_power_w: analysis.power_w,
        empirical_power_w: ep,
        power_z,
        analytic_throughput_bps: analysis.throughput_bps,
        empirical_throughput_bps: et,
        throughput_z,
        analytic_error_rate: 1.0 - survive,
        empirical_error_rate: ee,
        error_rate_z,
        flagged: power_z.abs() > 3.0 || throughput_z.abs() > 3.0 || error_rate_z.abs() > 3.0,
    })
}
