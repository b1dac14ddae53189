//! Command-line surface: one function per subcommand returning plain rows,
//! CSV writers for those rows, and [`run`] which wires them to [`Cli`].

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::angleset::PiecewisePrior;
use crate::detection::DetectionDesign;
use crate::error::{Error, Result};
use crate::outage::OutageDesign;
use crate::phy::SystemParams;
use crate::planner::{error_recursions, optimize_l, PlanInputs};
use crate::policies::{Design, Policy};
use crate::simulator::{run_trials, write_trials_csv, FrameOutcome, MonteCarloStats, SimConfig};
use crate::units::{dbm_to_watts, watts_to_dbm};

pub mod config;

pub use config::{grid, ExperimentConfig, SweepSpec, SweepVariable};

#[derive(Debug, Parser)]
#[command(name = "beamalign", version, about = "Energy-efficient beam alignment planner and simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed for Monte-Carlo runs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Frames per Monte-Carlo point.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Optimal alignment schedule and analytic power.
    Plan,
    /// Analytic power and throughput versus detection error probability.
    SweepPe,
    /// Simulated power of every policy over a spectral-efficiency grid.
    Compare,
    /// Power at fixed spectral efficiency versus weak-cluster energy.
    Multicluster,
    /// One Monte-Carlo run with per-trial records.
    Simulate,
}

/// Power in dBm with 1e-3 dB resolution; zero power prints as `0 W`.
pub fn format_power(w: f64) -> String {
    if w == 0.0 {
        "0 W".to_string()
    } else {
        format!("{:.3} dBm", watts_to_dbm(w))
    }
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Schedule summary for `plan`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanReport {
    pub design: Design,
    pub rho_check: bool,
}

/// Builds the optimal schedule for the configured link.
pub fn plan(cfg: &ExperimentConfig) -> Result<PlanReport> {
    let design = Design::new(cfg.params.clone(), cfg.protocol.clone())?;
    let rho = &design.schedule.rho;
    let rho_check = rho.iter().all(|&r| r > 0.0 && r < 0.5) && rho.windows(2).all(|w| w[0] < w[1]);
    Ok(PlanReport { design, rho_check })
}

impl PlanReport {
    pub fn render(&self) -> String {
        let d = &self.design;
        let s = &d.schedule;
        let mut t = String::new();
        let _ = writeln!(t, "alignment slots L*: {}", s.l_star);
        let _ = match s.l_min {
            Some(l) => writeln!(t, "smallest useful length L_min: {l}"),
            None => writeln!(t, "smallest useful length L_min: none"),
        };
        let _ = writeln!(t, "beacon energy phi_s: {:e} J/rad^2", d.phi_s());
        let _ = writeln!(t, "detector SNR nu*: {:e}", d.detection.nu_star);
        let _ = writeln!(t, "beam outage q*: {:.6}", d.outage.q_star);
        let _ = writeln!(t, "data beam fraction theta: {:.6}", s.theta);
        let _ = writeln!(t, "data rate R_dc: {:e} bit/s", s.data_rate_bps);
        let _ = writeln!(t, "value v_0: {:e} J/rad^2", s.v0());
        let _ = writeln!(t, "average power P_u: {}", format_power(s.power_w));
        let _ = writeln!(t, "power without alignment: {}", format_power(s.no_alignment_power()));
        let rho: Vec<String> = s.rho.iter().map(|r| format!("{r}")).collect();
        let _ = writeln!(t, "rho: [{}]", rho.join(", "));
        let gap: Vec<String> = s.rho_deficit.iter().map(|d| format!("{d:e}")).collect();
        let _ = writeln!(t, "1/2 - rho: [{}]", gap.join(", "));
        let _ = writeln!(t, "rho strictly increasing in (0, 1/2): {}", if self.rho_check { "PASS" } else { "FAIL" });
        t
    }
}

/// One point of the detection-error sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPeRow {
    pub pe: f64,
    /// Nominal rate chosen so that the analytic throughput hits the target.
    pub rmin_bps: f64,
    pub power_w: f64,
    pub thr_bps: f64,
}

/// Analytic (P̄_err, T̄_err) with the beacon energy derived from the detector
/// design at `pe` and false-alarm and misdetection probabilities both `pe`.
pub fn analytic_with_errors(params: &SystemParams, pe: f64, rmin_bps: f64) -> Result<(f64, f64)> {
    let mut p = params.clone();
    p.p_e = pe;
    p.rate_min_bps = rmin_bps;
    let det = DetectionDesign::from_formula(&p, pe)?;
    let out = OutageDesign::from_params(&p)?;
    let sched = optimize_l(&PlanInputs::new(&p, &det, &out))?;
    let a = error_recursions(&sched, pe, pe)?;
    Ok((a.power_w, a.throughput_bps))
}

/// Sweeps p_e at each configured spectral efficiency, holding the analytic
/// throughput at (1−ε)·SE·W.
pub fn sweep_pe(cfg: &ExperimentConfig) -> Result<Vec<SweepPeRow>> {
    let pes = cfg.sweep.resolve(SweepVariable::PE, 1e-8, 1e-1, 29, true)?;
    let p = &cfg.params;
    let keep = 1.0 - p.outage;
    let mut rows = Vec::new();
    for &se in &cfg.se_values {
        let target = keep * se * p.bandwidth_hz;
        for &pe in &pes {
            if !(pe > 0.0 && pe < 0.5) {
                return Err(Error::Domain(format!("p_e {pe} outside (0, 0.5)")));
            }
            let mut lo = target / keep;
            let mut hi = lo / (1.0 - pe).powi(p.l_max as i32);
            for _ in 0..200 {
                if hi - lo <= 1e-12 * hi {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if analytic_with_errors(p, pe, mid)?.1 < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (power_w, thr_bps) = analytic_with_errors(p, pe, hi)?;
            rows.push(SweepPeRow { pe, rmin_bps: hi, power_w, thr_bps });
        }
    }
    Ok(rows)
}

pub fn write_sweep_pe_csv<W: Write>(out: W, rows: &[SweepPeRow]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["pe", "rmin_bps", "power_dBm", "thr_bps"])?;
    for r in rows {
        w.write_record([
            format!("{:e}", r.pe),
            format!("{:e}", r.rmin_bps),
            format!("{:.3}", watts_to_dbm(r.power_w)),
            format!("{:e}", r.thr_bps),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Simulates `policy` on `params` with the configured error model and priors.
pub fn simulate_stats(
    cfg: &ExperimentConfig,
    params: SystemParams,
    policy: Policy,
) -> Result<(MonteCarloStats, Vec<FrameOutcome>)> {
    let design = Design::new(params, cfg.protocol.clone())?;
    let mut sim = SimConfig::new(design, policy, cfg.error_mode)?;
    if let Some(pt) = &cfg.prior_t {
        sim.prior_t = pt.clone();
    }
    if let Some(pr) = &cfg.prior_r {
        sim.prior_r = pr.clone();
    }
    check_prior(&sim.prior_t, &sim.design.params.support_t)?;
    check_prior(&sim.prior_r, &sim.design.params.support_r)?;
    if cfg.trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let outcomes = run_trials(&sim, cfg.trials, cfg.seed)?;
    let p = &sim.design.params;
    Ok((MonteCarloStats::from_outcomes(&outcomes, p.frame_s, p.bandwidth_hz), outcomes))
}

fn check_prior(prior: &PiecewisePrior, support: &crate::angleset::AngleSet) -> Result<()> {
    if !prior.support().is_subset_of(support) {
        return Err(Error::Domain("prior support must lie inside the angular support".into()));
    }
    Ok(())
}

/// One simulated policy at one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyPoint {
    pub se_nominal: f64,
    pub policy: Policy,
    pub power_w: f64,
    pub power_ci_w: f64,
    pub se_achieved: f64,
    pub se_ci: f64,
}

/// Simulates every configured policy at each nominal spectral efficiency.
pub fn compare(cfg: &ExperimentConfig) -> Result<Vec<PolicyPoint>> {
    let ses = cfg.sweep.resolve(SweepVariable::SpectralEfficiency, 1.0, 15.0, 8, false)?;
    let mut rows = Vec::new();
    for &se in &ses {
        for &policy in &cfg.policies {
            let mut p = cfg.params.clone();
            p.rate_min_bps = se * p.bandwidth_hz;
            let (s, _) = simulate_stats(cfg, p, policy)?;
            rows.push(PolicyPoint {
                se_nominal: se,
                policy,
                power_w: s.mean_power_w,
                power_ci_w: s.power_ci_w,
                se_achieved: s.mean_spectral_efficiency,
                se_ci: s.spectral_efficiency_ci,
            });
        }
    }
    Ok(rows)
}

/// Half-width of a power CI expressed in dB around the mean.
pub fn ci_db(mean_w: f64, ci_w: f64) -> f64 {
    if mean_w > 0.0 {
        10.0 * ((mean_w + ci_w) / mean_w).log10()
    } else {
        0.0
    }
}

pub fn write_compare_csv<W: Write>(out: W, rows: &[PolicyPoint]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["se_nominal", "policy", "power_W", "power_dBm", "power_ci_dB", "se_achieved", "se_ci"])?;
    for r in rows {
        w.write_record([
            format!("{}", r.se_nominal),
            r.policy.to_string(),
            format!("{:e}", r.power_w),
            format!("{:.3}", watts_to_dbm(r.power_w)),
            format!("{:.3}", ci_db(r.power_w, r.power_ci_w)),
            format!("{:.6}", r.se_achieved),
            format!("{:.6}", r.se_ci),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Power needed by one policy for a target achieved spectral efficiency.
#[derive(Clone, Debug, PartialEq)]
pub struct MulticlusterRow {
    pub rho: f64,
    pub policy: Policy,
    pub power_w: f64,
    /// Power CI half-width including spectral-efficiency noise.
    pub power_ci_w: f64,
    pub se_target: f64,
    /// Interpolated nominal rate.
    pub rmin_bps: f64,
    /// Power change against the first ϱ of the same policy.
    pub degradation_db: f64,
}

const SE_STEP: f64 = 0.25;
const MAX_STEPS: usize = 200;

/// Brackets the target achieved spectral efficiency on a nominal grid of
/// step 0.25 bit/s/Hz and interpolates the power linearly in dB.
///
/// Returns (power, CI half-width, nominal rate). The CI combines the power CI
/// with the spectral-efficiency CI mapped through the local slope.
pub fn power_at_se(cfg: &ExperimentConfig, params: &SystemParams, policy: Policy, target: f64) -> Result<(f64, f64, f64)> {
    let w = params.bandwidth_hz;
    let eval = |se: f64| -> Result<(f64, MonteCarloStats)> {
        let mut p = params.clone();
        p.rate_min_bps = se * w;
        Ok((se, simulate_stats(cfg, p, policy)?.0))
    };
    let mut a = eval(target / (1.0 - params.outage))?;
    let up = a.1.mean_spectral_efficiency < target;
    for _ in 0..MAX_STEPS {
        let next = if up { a.0 + SE_STEP } else { a.0 - SE_STEP };
        if next <= 0.0 {
            break;
        }
        let b = eval(next)?;
        let crossed = if up {
            b.1.mean_spectral_efficiency >= target
        } else {
            b.1.mean_spectral_efficiency < target
        };
        if crossed {
            let (lo, hi) = if up { (a, b) } else { (b, a) };
            let (s0, s1) = (lo.1.mean_spectral_efficiency, hi.1.mean_spectral_efficiency);
            let t = if s1 > s0 { ((target - s0) / (s1 - s0)).clamp(0.0, 1.0) } else { 0.5 };
            let (d0, d1) = (watts_to_dbm(lo.1.mean_power_w), watts_to_dbm(hi.1.mean_power_w));
            let dbm = d0 + t * (d1 - d0);
            let rmin = (lo.0 + t * (hi.0 - lo.0)) * w;
            let slope = if s1 > s0 { (d1 - d0) / (s1 - s0) } else { 0.0 };
            let se_ci = lo.1.spectral_efficiency_ci.max(hi.1.spectral_efficiency_ci);
            let power_db = ci_db(lo.1.mean_power_w, lo.1.power_ci_w).max(ci_db(hi.1.mean_power_w, hi.1.power_ci_w));
            let ci = power_db.hypot(slope * se_ci);
            let power = dbm_to_watts(dbm);
            return Ok((power, power * (10f64.powf(ci / 10.0) - 1.0), rmin));
        }
        a = b;
    }
    Err(Error::Infeasible(format!("{policy} cannot reach {target} bit/s/Hz")))
}

/// Two-cluster sweep over the weak-cluster energy fraction ϱ.
pub fn multicluster(cfg: &ExperimentConfig) -> Result<Vec<MulticlusterRow>> {
    let policies = if cfg.policies_set {
        cfg.policies.clone()
    } else {
        vec![Policy::Dfs, Policy::Bisection]
    };
    let mut rows: Vec<MulticlusterRow> = Vec::new();
    for &policy in &policies {
        let mut base = None;
        for &rho in &cfg.rho_values {
            let mut p = cfg.params.clone();
            p.clusters = 2;
            p.weak_cluster_fraction = rho;
            let (power_w, power_ci_w, rmin_bps) = power_at_se(cfg, &p, policy, cfg.target_se)?;
            let b = *base.get_or_insert(power_w);
            rows.push(MulticlusterRow {
                rho,
                policy,
                power_w,
                power_ci_w,
                se_target: cfg.target_se,
                rmin_bps,
                degradation_db: 10.0 * (power_w / b).log10(),
            });
        }
    }
    Ok(rows)
}

pub fn write_multicluster_csv<W: Write>(out: W, rows: &[MulticlusterRow]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["rho", "policy", "power_W", "power_dBm", "power_ci_dB", "se_target", "rmin_bps", "degradation_dB"])?;
    for r in rows {
        w.write_record([
            format!("{}", r.rho),
            r.policy.to_string(),
            format!("{:e}", r.power_w),
            format!("{:.3}", watts_to_dbm(r.power_w)),
            format!("{:.3}", ci_db(r.power_w, r.power_ci_w)),
            format!("{}", r.se_target),
            format!("{:e}", r.rmin_bps),
            format!("{:.3}", r.degradation_db),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Summary lines of a Monte-Carlo run.
pub fn render_stats(policy: Policy, s: &MonteCarloStats) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "policy: {policy}");
    let _ = writeln!(t, "trials: {}", s.trials);
    let _ = writeln!(
        t,
        "mean power: {} ({:e} W +/- {:e})",
        format_power(s.mean_power_w),
        s.mean_power_w,
        s.power_ci_w
    );
    let _ = writeln!(
        t,
        "spectral efficiency: {:.6} bit/s/Hz +/- {:.6}",
        s.mean_spectral_efficiency, s.spectral_efficiency_ci
    );
    let _ = writeln!(t, "alignment success rate: {:.6}", s.alignment_success_rate);
    let _ = writeln!(t, "outage rate when aligned: {:.6}", s.outage_rate);
    let _ = writeln!(t, "error event rate: {:.6}", s.error_event_rate);
    let _ = writeln!(t, "mean alignment slots: {:.4}", s.mean_align_slots);
    t
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Resolves configuration and flag overrides.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    let out = cfg.out.as_deref();
    match cli.command {
        Command::Plan => {
            let report = plan(&cfg)?;
            let mut w = open_out(out)?;
            w.write_all(report.render().as_bytes())?;
            w.flush()?;
        }
        Command::SweepPe => write_sweep_pe_csv(open_out(out)?, &sweep_pe(&cfg)?)?,
        Command::Compare => write_compare_csv(open_out(out)?, &compare(&cfg)?)?,
        Command::Multicluster => write_multicluster_csv(open_out(out)?, &multicluster(&cfg)?)?,
        Command::Simulate => {
            let (stats, outcomes) = simulate_stats(&cfg, cfg.params.clone(), cfg.policy)?;
            let summary = render_stats(cfg.policy, &stats);
            match out {
                Some(_) => {
                    write_trials_csv(open_out(out)?, cfg.policy, &outcomes)?;
                    print!("{summary}");
                }
                None => print!("{summary}"),
            }
        }
    }
    Ok(())
}
