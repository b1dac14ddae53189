//! Channel-gain CCDF, the data-beam fraction, and data-phase energy densities.

use std::f64::consts::PI;

use crate::detection::marcum_q1;
use crate::error::{domain, Error, Result};
use crate::phy::SystemParams;

/// Grid resolution of the data-beam fraction search.
const Q_GRID_STEP: f64 = 1e-4;

/// F̄(x) = P(γ > x | ĥ) = Q1(√(2γ̂/σ²), √(2x/σ²)); a step at γ̂ when σ² = 0.
pub fn ccdf_gamma(x: f64, gamma_hat: f64, sigma_e2: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if sigma_e2 == 0.0 {
        return if x <= gamma_hat { 1.0 } else { 0.0 };
    }
    if gamma_hat == 0.0 {
        return (-x / sigma_e2).exp();
    }
    marcum_q1((2.0 * gamma_hat / sigma_e2).sqrt(), (2.0 * x / sigma_e2).sqrt())
}

/// Largest x with F̄(x) ≥ q, by bracketing and bisection.
pub fn inv_ccdf_gamma(q: f64, gamma_hat: f64, sigma_e2: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(domain(format!("CCDF level {q} outside (0, 1]")));
    }
    if sigma_e2 == 0.0 {
        return Ok(gamma_hat);
    }
    if q == 1.0 {
        return Ok(0.0);
    }
    if gamma_hat == 0.0 {
        return Ok(-sigma_e2 * q.ln());
    }
    let f = |x: f64| ccdf_gamma(x, gamma_hat, sigma_e2) - q;
    let mut lo = 0.0;
    let mut hi = gamma_hat + sigma_e2;
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Infeasible("CCDF inverse bracket diverged".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// q·F̄⁻¹(q), the objective of the data-beam fraction search.
fn beam_objective(q: f64, gamma_hat: f64, sigma_e2: f64) -> f64 {
    q * inv_ccdf_gamma(q, gamma_hat, sigma_e2).unwrap_or(0.0)
}

/// (q*, ϑ): q* maximizes q·F̄⁻¹(q) over [1−ε, 1], ϑ = (1−ε)/q*.
///
/// Grid search at resolution 1e-4 then golden-section refinement around the
/// best grid point; ties go to the smaller q.
pub fn q_star_and_theta(eps: f64, gamma_hat: f64, sigma_e2: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(domain(format!("outage {eps} outside (0, 1)")));
    }
    let lo = 1.0 - eps;
    let n = ((eps / Q_GRID_STEP).ceil() as usize).max(1);
    let obj = |q: f64| beam_objective(q, gamma_hat, sigma_e2);
    let mut best_q = lo;
    let mut best = obj(lo);
    for i in 1..=n {
        let q = if i == n { 1.0 } else { lo + eps * i as f64 / n as f64 };
        let v = obj(q);
        if v > best {
            best = v;
            best_q = q;
        }
    }
    let step = eps / n as f64;
    let (mut a, mut b) = ((best_q - step).max(lo), (best_q + step).min(1.0));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (obj(c), obj(d));
    for _ in 0..100 {
        if b - a < 1e-13 {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = obj(d);
        }
    }
    let refined = 0.5 * (a + b);
    let fr = obj(refined);
    let q_star = if fr > best { refined } else { best_q };
    Ok((q_star, lo / q_star))
}

/// ψ_d for an arbitrary duration: (2π)⁻² N0 W τ (2^{R/W} − 1).
pub fn psi_d_over(rate_bps: f64, duration_s: f64, params: &SystemParams) -> f64 {
    params.noise_psd * params.bandwidth_hz * duration_s * spectral_cost(rate_bps, params.bandwidth_hz)
        / (2.0 * PI).powi(2)
}

/// ψ_d(R) over one slot.
pub fn psi_d(rate_bps: f64, params: &SystemParams) -> f64 {
    psi_d_over(rate_bps, params.slot_s(), params)
}

/// 2^{R/W} − 1, computed without cancellation.
pub fn spectral_cost(rate_bps: f64, bandwidth_hz: f64) -> f64 {
    (rate_bps / bandwidth_hz * std::f64::consts::LN_2).exp_m1()
}

/// Precomputed ε-outage data-beam design.
#[derive(Clone, Debug, PartialEq)]
pub struct OutageDesign {
    pub eps: f64,
    pub gamma_hat: f64,
    pub sigma_e2: f64,
    pub q_star: f64,
    pub theta: f64,
    /// q*·F̄⁻¹(q*).
    pub denom: f64,
}

impl OutageDesign {
    pub fn new(eps: f64, gamma_hat: f64, sigma_e2: f64) -> Result<Self> {
        let (q_star, theta) = q_star_and_theta(eps, gamma_hat, sigma_e2)?;
        let denom = q_star * inv_ccdf_gamma(q_star, gamma_hat, sigma_e2)?;
        if !(denom > 0.0) {
            return Err(Error::Infeasible("outage target unreachable: q*F^-1(q*) = 0".into()));
        }
        Ok(OutageDesign { eps, gamma_hat, sigma_e2, q_star, theta, denom })
    }

    pub fn from_params(params: &SystemParams) -> Result<Self> {
        Self::new(params.outage, params.gamma_hat, params.sigma_e2())
    }

    /// φ_d(R) = ψ_d(R)(1−ε)/(q* F̄⁻¹(q*)) per slot.
    pub fn phi_d(&self, rate_bps: f64, params: &SystemParams) -> f64 {
        psi_d(rate_bps, params) * (1.0 - self.eps) / self.denom
    }

    /// Energy to send at `rate_bps` for `duration_s` over a 2D beam of measure
    /// `beam_measure` whose alignment probability is `align_prob`.
    pub fn data_energy(
        &self,
        rate_bps: f64,
        duration_s: f64,
        beam_measure: f64,
        align_prob: f64,
        params: &SystemParams,
    ) -> Result<f64> {
        let q = (1.0 - self.eps) / align_prob;
        if !(q <= 1.0 + 1e-12) {
            return Err(Error::Infeasible(format!(
                "alignment probability {align_prob} below 1 - eps"
            )));
        }
        let x = if (align_prob - self.theta).abs() <= 1e-12 {
            self.denom / self.q_star
        } else {
            inv_ccdf_gamma(q.min(1.0), self.gamma_hat, self.sigma_e2)?
        };
        let psi = psi_d_over(rate_bps, duration_s, params);
        if psi == 0.0 {
            return Ok(0.0);
        }
        if !(x > 0.0) {
            return Err(Error::Infeasible("zero outage gain for the data beam".into()));
        }
        Ok(psi * beam_measure / x)
    }
}

/// ε-outage capacity W log2(1 + ν F̄⁻¹((1−ε)/P(θ∈B))).
pub fn outage_capacity(
    power_w: f64,
    beam_measure: f64,
    align_prob: f64,
    gamma_hat: f64,
    sigma_e2: f64,
    eps: f64,
    params: &SystemParams,
) -> Result<f64> {
    if align_prob < 1.0 - eps {
        return Err(Error::Infeasible(format!(
            "alignment probability {align_prob} below 1 - eps = {}",
            1.0 - eps
        )));
    }
    let x = inv_ccdf_gamma(((1.0 - eps) / align_prob).min(1.0), gamma_hat, sigma_e2)?;
    let nu = crate::phy::beamforming_factor(power_w, beam_measure, params);
    Ok(params.bandwidth_hz * (nu * x).ln_1p() / std::f64::consts::LN_2)
}
