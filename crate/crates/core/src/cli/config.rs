//! Experiment configuration files.
//!
//! One `key = value` pair per line, `#` starts a comment. Every key is
//! optional and defaults to the 30 GHz reference link; unknown or repeated
//! keys are rejected.
//!
//! | key | unit / format | default |
//! |-----|---------------|---------|
//! | `carrier_hz` | Hz | 30e9 |
//! | `distance_m` | m | 10 |
//! | `path_loss_exponent` | - | 2 |
//! | `noise_psd_dbm_hz` | dBm/Hz | -173 |
//! | `bandwidth_hz` | Hz | 500e6 |
//! | `frame_s`, `beacon_s`, `feedback_s` | s | 20e-3, 50e-6, 50e-6 |
//! | `slots` | count | 200 |
//! | `outage` | probability | 0.01 |
//! | `rate_min_bps` | bit/s | 7.5e9 |
//! | `spectral_efficiency` | bit/s/Hz, sets `rate_min_bps` = value·W | - |
//! | `p_e` | probability | 1e-5 |
//! | `sigma_e2` | linear, or `rayleigh` for 1/ℓ(d) | rayleigh |
//! | `gamma_hat` | linear | 0 |
//! | `phi_s_dbm` | dBm per rad² (J/rad² as dBm), or `formula` | -94 |
//! | `symbol_s` | s, or `auto` for 1/W | auto |
//! | `beacon_energy` | ‖s‖² | 1 |
//! | `l_max` | slots | 14 |
//! | `support_t`, `support_r` | rad, `lo:hi[, lo:hi ...]` | -π/2:π/2 |
//! | `clusters` | 1 or 2 | 1 |
//! | `weak_cluster_fraction` | ϱ ∈ [0, 0.5) | 0 |
//! | `antennas_t`, `antennas_r` | count | 128 |
//! | `prior_t`, `prior_r` | rad and weight, `lo:hi:w[, ...]` | uniform |
//! | `policy` | `dfs`, `dfs-nonuniform`, `bisection`, `ces`, `ies` | dfs |
//! | `policies` | comma list | all |
//! | `error_mode` | `none`, `injected`, `signal` | signal |
//! | `p_fa`, `p_md`, `p_cmp` | injected probabilities | p_e |
//! | `first_probe` | `bs` or `ue` | bs |
//! | `beams_bs`, `beams_ue` | exhaustive sector counts | 32 |
//! | `bisection_depth` | levels, or `auto` | auto |
//! | `sweep_variable` | `p_e` or `spectral_efficiency` | per command |
//! | `sweep_min`, `sweep_max` | axis units | per command |
//! | `sweep_points` | count | per command |
//! | `sweep_scale` | `log` or `linear` | per command |
//! | `se_values` | bit/s/Hz list for `sweep-pe` | 1, 8, 15 |
//! | `rho_values` | ϱ list for `multicluster` | 0, 0.05, 0.1 |
//! | `target_se` | achieved bit/s/Hz for `multicluster` | 14.85 |
//! | `trials` | frames | 10000 |
//! | `seed` | integer | 1 |
//! | `out` | path | stdout |

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::angleset::{AngleSet, Interval, PiecewisePrior};
use crate::error::{Error, Result};
use crate::phy::SystemParams;
use crate::policies::{Dimension, Policy, ProtocolConfig};
use crate::simulator::ErrorMode;
use crate::units::dbm_to_watts;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Axis variable of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepVariable {
    PE,
    SpectralEfficiency,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::PE => "p_e",
            SweepVariable::SpectralEfficiency => "spectral_efficiency",
        }
    }
}

/// A one-dimensional grid; unset fields fall back to command defaults.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepSpec {
    pub variable: Option<SweepVariable>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub points: Option<usize>,
    pub log: Option<bool>,
}

impl SweepSpec {
    /// Grid values for `variable`, using the given defaults for unset fields.
    pub fn resolve(&self, variable: SweepVariable, min: f64, max: f64, points: usize, log: bool) -> Result<Vec<f64>> {
        if let Some(v) = self.variable {
            if v != variable {
                return Err(Error::Domain(format!(
                    "this command sweeps {}, not {}",
                    variable.name(),
                    v.name()
                )));
            }
        }
        grid(
            self.min.unwrap_or(min),
            self.max.unwrap_or(max),
            self.points.unwrap_or(points),
            self.log.unwrap_or(log),
        )
    }
}

/// `points` values from `min` to `max` inclusive.
pub fn grid(min: f64, max: f64, points: usize, log: bool) -> Result<Vec<f64>> {
    if points == 0 || !(min <= max) || (log && !(min > 0.0)) {
        return Err(Error::Domain(format!("bad grid {min}..{max} with {points} points")));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    let step = |i: usize| i as f64 / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if log {
                10f64.powf(min.log10() + step(i) * (max.log10() - min.log10()))
            } else {
                min + step(i) * (max - min)
            }
        })
        .collect())
}

/// Everything needed to reproduce one command run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub params: SystemParams,
    pub protocol: ProtocolConfig,
    pub policy: Policy,
    pub policies: Vec<Policy>,
    /// Whether `policies` was given explicitly.
    pub policies_set: bool,
    pub error_mode: ErrorMode,
    pub sweep: SweepSpec,
    pub se_values: Vec<f64>,
    pub rho_values: Vec<f64>,
    pub target_se: f64,
    pub prior_t: Option<PiecewisePrior>,
    pub prior_r: Option<PiecewisePrior>,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            params: SystemParams::paper_defaults(),
            protocol: ProtocolConfig::default(),
            policy: Policy::Dfs,
            policies: Policy::ALL.to_vec(),
            policies_set: false,
            error_mode: ErrorMode::Signal,
            sweep: SweepSpec::default(),
            se_values: vec![1.0, 8.0, 15.0],
            rho_values: vec![0.0, 0.05, 0.1],
            target_se: 14.85,
            prior_t: None,
            prior_r: None,
            trials: 10_000,
            seed: 1,
            out: None,
        }
    }
}

fn num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config { line, msg: format!("`{key}`: cannot parse `{v}`") })
}

fn list<T: FromStr>(line: usize, key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(|s| num(line, key, s.trim())).collect()
}

fn support(line: usize, key: &str, v: &str) -> Result<AngleSet> {
    let mut ivs = Vec::new();
    for part in v.split(',') {
        let f: Vec<f64> = part.split(':').map(|s| num(line, key, s.trim())).collect::<Result<_>>()?;
        if f.len() != 2 {
            return Err(Error::Config { line, msg: format!("`{key}`: expected lo:hi, got `{part}`") });
        }
        ivs.push(Interval::new(f[0], f[1]));
    }
    AngleSet::from_intervals(ivs).map_err(|e| Error::Config { line, msg: format!("`{key}`: {e}") })
}

fn prior(line: usize, key: &str, v: &str) -> Result<PiecewisePrior> {
    let mut pieces = Vec::new();
    for part in v.split(',') {
        let f: Vec<f64> = part.split(':').map(|s| num(line, key, s.trim())).collect::<Result<_>>()?;
        if f.len() != 3 {
            return Err(Error::Config { line, msg: format!("`{key}`: expected lo:hi:w, got `{part}`") });
        }
        pieces.push((Interval::new(f[0], f[1]), f[2]));
    }
    PiecewisePrior::from_weights(pieces).map_err(|e| Error::Config { line, msg: format!("`{key}`: {e}") })
}

impl ExperimentConfig {
    /// Parses configuration text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        let mut seen = HashSet::new();
        let mut se: Option<(usize, f64)> = None;
        let mut rate_set = false;
        let (mut p_fa, mut p_md, mut p_cmp) = (None, None, None);
        let mut mode = "signal".to_string();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, v) = body
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config { line, msg: format!("expected `key = value`, got `{body}`") })?;
            if !seen.insert(key.to_string()) {
                return Err(Error::Config { line, msg: format!("duplicate key `{key}`") });
            }
            let p = &mut c.params;
            match key {
                "carrier_hz" => p.wavelength_m = SPEED_OF_LIGHT / num::<f64>(line, key, v)?,
                "distance_m" => p.distance_m = num(line, key, v)?,
                "path_loss_exponent" => p.path_loss_exponent = num(line, key, v)?,
                "noise_psd_dbm_hz" => p.noise_psd = dbm_to_watts(num(line, key, v)?),
                "bandwidth_hz" => p.bandwidth_hz = num(line, key, v)?,
                "frame_s" => p.frame_s = num(line, key, v)?,
                "slots" => p.slots = num(line, key, v)?,
                "beacon_s" => p.beacon_s = num(line, key, v)?,
                "feedback_s" => p.feedback_s = num(line, key, v)?,
                "outage" => p.outage = num(line, key, v)?,
                "rate_min_bps" => {
                    p.rate_min_bps = num(line, key, v)?;
                    rate_set = true;
                }
                "spectral_efficiency" => se = Some((line, num(line, key, v)?)),
                "p_e" => p.p_e = num(line, key, v)?,
                "sigma_e2" => p.sigma_e2 = if v == "rayleigh" { None } else { Some(num(line, key, v)?) },
                "gamma_hat" => p.gamma_hat = num(line, key, v)?,
                "phi_s_dbm" => {
                    p.phi_s_override = if v == "formula" { None } else { Some(dbm_to_watts(num(line, key, v)?)) }
                }
                "symbol_s" => p.symbol_s = if v == "auto" { None } else { Some(num(line, key, v)?) },
                "beacon_energy" => p.beacon_energy = num(line, key, v)?,
                "l_max" => p.l_max = num(line, key, v)?,
                "support_t" => p.support_t = support(line, key, v)?,
                "support_r" => p.support_r = support(line, key, v)?,
                "clusters" => p.clusters = num(line, key, v)?,
                "weak_cluster_fraction" => p.weak_cluster_fraction = num(line, key, v)?,
                "antennas_t" => p.antennas_t = num(line, key, v)?,
                "antennas_r" => p.antennas_r = num(line, key, v)?,
                "prior_t" => c.prior_t = Some(prior(line, key, v)?),
                "prior_r" => c.prior_r = Some(prior(line, key, v)?),
                "policy" => c.policy = num(line, key, v)?,
                "policies" => {
                    c.policies = list(line, key, v)?;
                    c.policies_set = true;
                }
                "error_mode" => {
                    if !["none", "injected", "signal"].contains(&v) {
                        return Err(Error::Config { line, msg: format!("unknown error mode `{v}`") });
                    }
                    mode = v.to_string();
                }
                "p_fa" => p_fa = Some(num(line, key, v)?),
                "p_md" => p_md = Some(num(line, key, v)?),
                "p_cmp" => p_cmp = Some(num(line, key, v)?),
                "first_probe" => {
                    c.protocol.first_probe = match v {
                        "bs" => Dimension::Bs,
                        "ue" => Dimension::Ue,
                        _ => return Err(Error::Config { line, msg: format!("first_probe must be bs or ue, got `{v}`") }),
                    }
                }
                "beams_bs" => c.protocol.beams_bs = num(line, key, v)?,
                "beams_ue" => c.protocol.beams_ue = num(line, key, v)?,
                "bisection_depth" => {
                    c.protocol.bisection_depth = if v == "auto" { None } else { Some(num(line, key, v)?) }
                }
                "sweep_variable" => {
                    c.sweep.variable = Some(match v {
                        "p_e" => SweepVariable::PE,
                        "spectral_efficiency" => SweepVariable::SpectralEfficiency,
                        _ => return Err(Error::Config { line, msg: format!("unknown sweep variable `{v}`") }),
                    })
                }
                "sweep_min" => c.sweep.min = Some(num(line, key, v)?),
                "sweep_max" => c.sweep.max = Some(num(line, key, v)?),
                "sweep_points" => c.sweep.points = Some(num(line, key, v)?),
                "sweep_scale" => {
                    c.sweep.log = Some(match v {
                        "log" => true,
                        "linear" => false,
                        _ => return Err(Error::Config { line, msg: format!("sweep_scale must be log or linear, got `{v}`") }),
                    })
                }
                "se_values" => c.se_values = list(line, key, v)?,
                "rho_values" => c.rho_values = list(line, key, v)?,
                "target_se" => c.target_se = num(line, key, v)?,
                "trials" => c.trials = num(line, key, v)?,
                "seed" => c.seed = num(line, key, v)?,
                "out" => c.out = Some(PathBuf::from(v)),
                _ => return Err(Error::Config { line, msg: format!("unknown key `{key}`") }),
            }
        }
        if let Some((line, s)) = se {
            if rate_set {
                return Err(Error::Config { line, msg: "set either spectral_efficiency or rate_min_bps".into() });
            }
            c.params.rate_min_bps = s * c.params.bandwidth_hz;
        }
        let pe = c.params.p_e;
        c.error_mode = match mode.as_str() {
            "none" => ErrorMode::None,
            "injected" => ErrorMode::Injected {
                p_fa: p_fa.unwrap_or(pe),
                p_md: p_md.unwrap_or(pe),
                p_cmp: p_cmp.unwrap_or(pe),
            },
            _ => ErrorMode::Signal,
        };
        if c.policies.is_empty() {
            return Err(Error::Config { line: 0, msg: "policies list is empty".into() });
        }
        c.params.validate()?;
        Ok(c)
    }

    /// Reads and parses a configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = ExperimentConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn parses_values_and_comments() {
        let text = "slots = 100  # fewer slots\nspectral_efficiency = 8\nphi_s_dbm = formula\n\
                    support_t = -1:0, 0.5:1\nerror_mode = injected\np_fa = 0.01\npolicies = dfs, ces\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.params.slots, 100);
        assert_eq!(c.params.rate_min_bps, 8.0 * 500e6);
        assert_eq!(c.params.phi_s_override, None);
        assert!((c.params.support_t.measure() - 1.5).abs() < 1e-12);
        assert_eq!(c.error_mode, ErrorMode::Injected { p_fa: 0.01, p_md: 1e-5, p_cmp: 1e-5 });
        assert_eq!(c.policies, vec![Policy::Dfs, Policy::Ces]);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        match ExperimentConfig::parse("slots = 10\nbogus = 1\n") {
            Err(Error::Config { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(ExperimentConfig::parse("seed = 1\nseed = 2\n").is_err());
        assert!(ExperimentConfig::parse("seed 1\n").is_err());
        assert!(ExperimentConfig::parse("slots = many\n").is_err());
        assert!(ExperimentConfig::parse("rate_min_bps = 1\nspectral_efficiency = 2\n").is_err());
    }

    #[test]
    fn grids() {
        let g = grid(1e-8, 1e-1, 8, true).unwrap();
        assert_eq!(g.len(), 8);
        assert!((g[0] - 1e-8).abs() < 1e-20 && (g[7] - 1e-1).abs() < 1e-12);
        assert!((g[1] / g[0] - 10.0).abs() < 1e-9);
        assert_eq!(grid(1.0, 3.0, 3, false).unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(grid(0.0, 1.0, 3, true).is_err());
    }
}
