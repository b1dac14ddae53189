//! Physical-layer primitives under the sectored antenna model.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::angleset::{AngleSet, PiecewisePrior};
use crate::error::{domain, Error, Result};
use crate::units::dbm_to_watts;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// All physical constants of a link and frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemParams {
    /// Carrier wavelength (m).
    pub wavelength_m: f64,
    /// BS-UE distance (m).
    pub distance_m: f64,
    pub path_loss_exponent: f64,
    /// Noise power spectral density N0 (W/Hz).
    pub noise_psd: f64,
    /// Total bandwidth W (Hz).
    pub bandwidth_hz: f64,
    /// Frame duration T_fr (s).
    pub frame_s: f64,
    /// Slots per frame N.
    pub slots: usize,
    /// Beacon duration T_B (s).
    pub beacon_s: f64,
    /// Feedback duration T_F (s).
    pub feedback_s: f64,
    /// Outage probability target ε.
    pub outage: f64,
    /// Minimum average rate R_min (bit/s).
    pub rate_min_bps: f64,
    /// Target false-alarm and misdetection probability.
    pub p_e: f64,
    /// Channel estimation error variance; `None` means Rayleigh with variance 1/ℓ(d).
    pub sigma_e2: Option<f64>,
    /// Estimated channel gain |ĥ|².
    pub gamma_hat: f64,
    /// Beacon energy density φ_s (J/rad²) used instead of the detector formula.
    pub phi_s_override: Option<f64>,
    /// Beacon symbol duration T_sy (s); `None` means 1/W.
    pub symbol_s: Option<f64>,
    /// Beacon sequence energy ‖s‖².
    pub beacon_energy: f64,
    /// Cap on the number of alignment slots.
    pub l_max: usize,
    /// BS angular support U_t0.
    pub support_t: AngleSet,
    /// UE angular support U_r0.
    pub support_r: AngleSet,
    /// Number of channel clusters (1 or 2).
    pub clusters: usize,
    /// Energy fraction ϱ of the weak cluster when `clusters == 2`.
    pub weak_cluster_fraction: f64,
    /// Antenna counts, recorded but unused by the sectored model.
    pub antennas_t: usize,
    pub antennas_r: usize,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::paper_defaults()
    }
}

impl SystemParams {
    /// 30 GHz link at 10 m, 500 MHz, 20 ms frames of 200 slots, Rayleigh fading.
    pub fn paper_defaults() -> Self {
        let half = AngleSet::interval(-PI / 2.0, PI / 2.0).expect("valid interval");
        SystemParams {
            wavelength_m: SPEED_OF_LIGHT / 30e9,
            distance_m: 10.0,
            path_loss_exponent: 2.0,
            noise_psd: dbm_to_watts(-173.0),
            bandwidth_hz: 500e6,
            frame_s: 20e-3,
            slots: 200,
            beacon_s: 50e-6,
            feedback_s: 50e-6,
            outage: 0.01,
            rate_min_bps: 15.0 * 500e6,
            p_e: 1e-5,
            sigma_e2: None,
            gamma_hat: 0.0,
            phi_s_override: Some(dbm_to_watts(-94.0)),
            symbol_s: None,
            beacon_energy: 1.0,
            l_max: 14,
            support_t: half.clone(),
            support_r: half,
            clusters: 1,
            weak_cluster_fraction: 0.0,
            antennas_t: 128,
            antennas_r: 128,
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn pos(name: &'static str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Param {
                    name,
                    msg: format!("must be positive and finite, got {v}"),
                })
            }
        }
        pos("wavelength_m", self.wavelength_m)?;
        pos("distance_m", self.distance_m)?;
        pos("path_loss_exponent", self.path_loss_exponent)?;
        pos("noise_psd", self.noise_psd)?;
        pos("bandwidth_hz", self.bandwidth_hz)?;
        pos("frame_s", self.frame_s)?;
        pos("beacon_s", self.beacon_s)?;
        pos("feedback_s", self.feedback_s)?;
        pos("beacon_energy", self.beacon_energy)?;
        if let Some(t) = self.symbol_s {
            pos("symbol_s", t)?;
        }
        if let Some(p) = self.phi_s_override {
            pos("phi_s_override", p)?;
        }
        if let Some(s) = self.sigma_e2 {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Param { name: "sigma_e2", msg: format!("must be >= 0, got {s}") });
            }
        }
        if !(self.gamma_hat >= 0.0 && self.gamma_hat.is_finite()) {
            return Err(Error::Param { name: "gamma_hat", msg: "must be >= 0".into() });
        }
        if self.sigma_e2() == 0.0 && self.gamma_hat == 0.0 {
            return Err(Error::Param { name: "gamma_hat", msg: "zero channel: gamma_hat and sigma_e2 both 0".into() });
        }
        if self.slots == 0 {
            return Err(Error::Param { name: "slots", msg: "must be at least 1".into() });
        }
        if !(self.outage > 0.0 && self.outage < 1.0) {
            return Err(Error::Param { name: "outage", msg: "must lie in (0, 1)".into() });
        }
        if !(self.p_e > 0.0 && self.p_e < 0.5) {
            return Err(Error::Param { name: "p_e", msg: "must lie in (0, 0.5)".into() });
        }
        if !(self.rate_min_bps >= 0.0 && self.rate_min_bps.is_finite()) {
            return Err(Error::Param { name: "rate_min_bps", msg: "must be >= 0".into() });
        }
        let slot = self.slot_s();
        if slot < (self.beacon_s + self.feedback_s) * (1.0 - 1e-12) {
            return Err(Error::Param {
                name: "slots",
                msg: format!("slot {slot} s shorter than beacon plus feedback"),
            });
        }
        if self.support_t.is_empty() || self.support_r.is_empty() {
            return Err(Error::Param { name: "support", msg: "supports must be non-empty".into() });
        }
        if !(self.clusters == 1 || self.clusters == 2) {
            return Err(Error::Param { name: "clusters", msg: "must be 1 or 2".into() });
        }
        if !(0.0..0.5).contains(&self.weak_cluster_fraction) {
            return Err(Error::Param { name: "weak_cluster_fraction", msg: "must lie in [0, 0.5)".into() });
        }
        Ok(())
    }

    /// Slot duration T = T_fr / N.
    pub fn slot_s(&self) -> f64 {
        self.frame_s / self.slots as f64
    }

    pub fn path_loss(&self) -> f64 {
        path_loss(self)
    }

    /// Estimation error variance, defaulting to the Rayleigh value 1/ℓ(d).
    pub fn sigma_e2(&self) -> f64 {
        self.sigma_e2.unwrap_or_else(|| 1.0 / self.path_loss())
    }

    pub fn symbol_s(&self) -> f64 {
        self.symbol_s.unwrap_or(1.0 / self.bandwidth_hz)
    }

    /// |U_t0|·|U_r0| in rad².
    pub fn support_measure(&self) -> f64 {
        self.support_t.measure() * self.support_r.measure()
    }

    /// Per-cluster energy fractions, strongest first.
    pub fn cluster_fractions(&self) -> Vec<f64> {
        if self.clusters == 2 {
            vec![1.0 - self.weak_cluster_fraction, self.weak_cluster_fraction]
        } else {
            vec![1.0]
        }
    }
}

/// Free-space path loss ℓ(d) = (4πd/λ)^α.
pub fn path_loss(params: &SystemParams) -> f64 {
    (4.0 * PI * params.distance_m / params.wavelength_m).powf(params.path_loss_exponent)
}

/// Sectored gain 2π/|B| inside the beam, zero outside.
pub fn sectored_gain(beam: &AngleSet, theta: f64) -> Result<f64> {
    let m = beam.measure();
    if m <= 0.0 {
        return Err(domain("sectored gain of an empty beam"));
    }
    Ok(if beam.contains(theta) { 2.0 * PI / m } else { 0.0 })
}

/// Beamforming SNR factor ν = (2π)² P / (N0 W |B_t||B_r|).
pub fn beamforming_factor(power_w: f64, beam_measure: f64, params: &SystemParams) -> f64 {
    (2.0 * PI).powi(2) * power_w / (params.noise_psd * params.bandwidth_hz * beam_measure)
}

/// Instantaneous SNR ν γ χ_{B_t}(θ_t) χ_{B_r}(θ_r).
pub fn snr(
    power_w: f64,
    beam_t: &AngleSet,
    beam_r: &AngleSet,
    theta_t: f64,
    theta_r: f64,
    gamma: f64,
    params: &SystemParams,
) -> f64 {
    if !beam_t.contains(theta_t) || !beam_r.contains(theta_r) {
        return 0.0;
    }
    beamforming_factor(power_w, beam_t.measure() * beam_r.measure(), params) * gamma
}

/// One channel cluster: AoD, AoA and its share of the channel energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cluster {
    pub theta_t: f64,
    pub theta_r: f64,
    pub fraction: f64,
}

/// A frame's channel realization. Cluster 0 is the strongest.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelDraw {
    pub clusters: Vec<Cluster>,
    /// Complex gain h as (re, im).
    pub h: (f64, f64),
    pub gamma: f64,
    pub gamma_hat: f64,
}

impl ChannelDraw {
    pub fn strongest(&self) -> &Cluster {
        &self.clusters[0]
    }

    /// Total energy fraction of the clusters inside the 2D beam.
    pub fn in_beam_fraction(&self, beam_t: &AngleSet, beam_r: &AngleSet) -> f64 {
        self.clusters
            .iter()
            .filter(|c| beam_t.contains(c.theta_t) && beam_r.contains(c.theta_r))
            .map(|c| c.fraction)
            .sum()
    }
}

/// Complex Gaussian sample with variance `var` as (re, im).
pub fn complex_normal<R: Rng + ?Sized>(var: f64, rng: &mut R) -> (f64, f64) {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    (s * re, s * im)
}

/// Draws angles from the priors and h = ĥ + CN(0, σ_e²) with ĥ = √γ̂.
pub fn draw_channel<R: Rng + ?Sized>(
    params: &SystemParams,
    prior_t: &PiecewisePrior,
    prior_r: &PiecewisePrior,
    rng: &mut R,
) -> ChannelDraw {
    let clusters = params
        .cluster_fractions()
        .into_iter()
        .map(|fraction| Cluster {
            theta_t: prior_t.sample(rng),
            theta_r: prior_r.sample(rng),
            fraction,
        })
        .collect();
    let (er, ei) = complex_normal(params.sigma_e2(), rng);
    let h = (params.gamma_hat.sqrt() + er, ei);
    ChannelDraw {
        clusters,
        h,
        gamma: h.0 * h.0 + h.1 * h.1,
        gamma_hat: params.gamma_hat,
    }
}
