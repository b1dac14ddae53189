//! Beacon detector design: threshold, Marcum Q, minimum SNR factor and beacon energy density.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::phy::SystemParams;

/// Relative truncation for the Poisson-mixture sums.
const SERIES_TOL: f64 = 1e-17;

/// Threshold τ_th = −ln p_e.
pub fn threshold(p_e: f64) -> Result<f64> {
    if !(p_e > 0.0 && p_e < 1.0) {
        return Err(domain(format!("p_e = {p_e} outside (0, 1)")));
    }
    Ok(-p_e.ln())
}

/// False-alarm probability exp(−τ).
pub fn false_alarm_probability(tau: f64) -> f64 {
    (-tau).exp()
}

/// First-order Marcum Q function Q1(a, b).
pub fn marcum_q1(a: f64, b: f64) -> f64 {
    marcum_pair(a, b).0
}

/// Complement 1 − Q1(a, b), accurate when it is small.
pub fn marcum_p1(a: f64, b: f64) -> f64 {
    marcum_pair(a, b).1
}

/// Returns `(Q1, 1 − Q1)`, computing the smaller one as a sum of positive terms.
///
/// With K ~ Poisson(a²/2) and J ~ Poisson(b²/2) independent, Q1 = P(J ≤ K).
fn marcum_pair(a: f64, b: f64) -> (f64, f64) {
    let lam = 0.5 * a * a;
    let x = 0.5 * b * b;
    if x >= lam + 0.5 {
        let q = mixture_sum(lam, x, 0).clamp(0.0, 1.0);
        (q, 1.0 - q)
    } else {
        let p = mixture_sum(x, lam, 1).clamp(0.0, 1.0);
        (1.0 - p, p)
    }
}

/// Lanczos approximation of ln Γ(z) for z > 0.
fn ln_gamma(z: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if z < 0.5 {
        return (PI / (PI * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut s = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        s += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + s.ln()
}

fn ln_poisson(k: u64, mu: f64) -> f64 {
    -mu + k as f64 * mu.ln() - ln_gamma(k as f64 + 1.0)
}

/// P(N ≤ n) for N ~ Poisson(mu), as a positive-term sum on the short side.
fn poisson_cdf(n: i64, mu: f64) -> f64 {
    if n < 0 {
        return 0.0;
    }
    if mu == 0.0 {
        return 1.0;
    }
    let n = n as u64;
    let lmu = mu.ln();
    if (n as f64) < mu {
        let mut lp = ln_poisson(n, mu);
        let mut acc = 0.0;
        let mut j = n;
        loop {
            let t = lp.exp();
            acc += t;
            if j == 0 || t < SERIES_TOL * acc {
                break;
            }
            lp += (j as f64).ln() - lmu;
            j -= 1;
        }
        acc
    } else {
        let mut j = n + 1;
        let mut lp = ln_poisson(j, mu);
        let mut tail = 0.0;
        loop {
            let t = lp.exp();
            tail += t;
            if t < SERIES_TOL * tail.max(f64::MIN_POSITIVE) || t == 0.0 {
                break;
            }
            j += 1;
            lp += lmu - (j as f64).ln();
        }
        1.0 - tail
    }
}

/// Σ_k Poisson(k; mu_o) · P(Poisson(mu_i) ≤ k − shift).
fn mixture_sum(mu_o: f64, mu_i: f64, shift: i64) -> f64 {
    if mu_o == 0.0 {
        return poisson_cdf(-shift, mu_i);
    }
    let lmo = mu_o.ln();
    let mode = mu_o.floor() as u64;
    let lp_mode = ln_poisson(mode, mu_o);

    let mut k_lo = mode;
    let mut lp_lo = lp_mode;
    while k_lo > 0 && lp_lo - lp_mode > SERIES_TOL.ln() - 2.0 {
        lp_lo += (k_lo as f64).ln() - lmo;
        k_lo -= 1;
    }

    let mut n = k_lo as i64 - shift;
    let mut cdf = poisson_cdf(n, mu_i);
    let lmi = if mu_i > 0.0 { mu_i.ln() } else { f64::NEG_INFINITY };
    let mut lpi = if n >= 0 && mu_i > 0.0 {
        ln_poisson(n as u64, mu_i)
    } else {
        f64::NEG_INFINITY
    };

    let mut k = k_lo;
    let mut lp = lp_lo;
    let mut sum = 0.0;
    let cap = mode + 100 + (60.0 * mu_o.sqrt()) as u64;
    loop {
        let po = lp.exp();
        sum += po * cdf;
        if k > mode && (po < SERIES_TOL * sum || po == 0.0) || k > cap {
            break;
        }
        k += 1;
        lp += lmo - (k as f64).ln();
        n += 1;
        if n >= 0 {
            if mu_i == 0.0 {
                cdf = 1.0;
            } else {
                lpi = if n == 0 { -mu_i } else { lpi + lmi - (n as f64).ln() };
                cdf += lpi.exp();
            }
        }
    }
    sum
}

/// Misdetection probability 1 − Q1(√(2γ̂νs/(1+νsσ²)), √(2τ/(1+νsσ²))).
pub fn misdetection_probability(nu: f64, tau: f64, gamma_hat: f64, sigma_e2: f64, s_energy: f64) -> f64 {
    let d = 1.0 + nu * s_energy * sigma_e2;
    let a = (2.0 * gamma_hat * nu * s_energy / d).sqrt();
    let b = (2.0 * tau / d).sqrt();
    marcum_p1(a, b)
}

/// Smallest SNR factor ν* with misdetection probability `p_e`.
pub fn solve_nu_star(p_e: f64, gamma_hat: f64, sigma_e2: f64, s_energy: f64) -> Result<f64> {
    if !(p_e > 0.0 && p_e < 0.5) {
        return Err(Error::Infeasible(format!(
            "p_e = {p_e}: misdetection target needs 0 < p_e < 0.5"
        )));
    }
    if gamma_hat * s_energy == 0.0 && sigma_e2 * s_energy == 0.0 {
        return Err(Error::Infeasible("zero channel gain cannot be detected".into()));
    }
    let tau = threshold(p_e)?;
    let f = |nu: f64| misdetection_probability(nu, tau, gamma_hat, sigma_e2, s_energy) - p_e;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Infeasible("misdetection target unreachable".into()));
        }
    }
    for _ in 0..400 {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    Ok(hi)
}

/// Beacon energy density φ_s = N0 W ν* T_sy ‖s‖² / (2π)², ignoring any override.
pub fn phi_s_formula(nu_star: f64, params: &SystemParams) -> f64 {
    params.noise_psd * params.bandwidth_hz * nu_star * params.symbol_s() * params.beacon_energy
        / (2.0 * PI).powi(2)
}

/// Beacon energy density, honoring `phi_s_override`.
pub fn phi_s(nu_star: f64, params: &SystemParams) -> f64 {
    params
        .phi_s_override
        .unwrap_or_else(|| phi_s_formula(nu_star, params))
}

/// A calibrated beacon detector.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionDesign {
    pub p_e: f64,
    pub tau_th: f64,
    pub nu_star: f64,
    /// Minimum beacon energy per rad² (J/rad²).
    pub phi_s: f64,
    pub s_energy: f64,
    pub symbol_s: f64,
    pub gamma_hat: f64,
    pub sigma_e2: f64,
}

impl DetectionDesign {
    /// Design for `params.p_e`, with `phi_s_override` applied when set.
    pub fn new(params: &SystemParams) -> Result<Self> {
        let mut d = Self::from_formula(params, params.p_e)?;
        d.phi_s = phi_s(d.nu_star, params);
        Ok(d)
    }

    /// Design for an arbitrary `p_e` with φ_s from the detector formula.
    pub fn from_formula(params: &SystemParams, p_e: f64) -> Result<Self> {
        let sigma_e2 = params.sigma_e2();
        let nu_star = solve_nu_star(p_e, params.gamma_hat, sigma_e2, params.beacon_energy)?;
        Ok(DetectionDesign {
            p_e,
            tau_th: threshold(p_e)?,
            nu_star,
            phi_s: phi_s_formula(nu_star, params),
            s_energy: params.beacon_energy,
            symbol_s: params.symbol_s(),
            gamma_hat: params.gamma_hat,
            sigma_e2,
        })
    }

    pub fn p_fa(&self) -> f64 {
        false_alarm_probability(self.tau_th)
    }

    /// Misdetection probability for an SNR factor ν.
    pub fn p_md(&self, nu: f64) -> f64 {
        misdetection_probability(nu, self.tau_th, self.gamma_hat, self.sigma_e2, self.s_energy)
    }

    /// Effective ν‖s‖² of a beacon with energy `energy` over a beam of measure `beam_measure`.
    pub fn beacon_snr(&self, energy: f64, beam_measure: f64) -> f64 {
        self.nu_star * self.s_energy * energy / (self.phi_s * beam_measure)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// I_k(z) by its power series.
    fn bessel_i(k: u32, z: f64) -> f64 {
        let h = z / 2.0;
        let mut term = h.powi(k as i32);
        for j in 1..=k {
            term /= j as f64;
        }
        let mut sum = term;
        for m in 1..2000 {
            term *= h * h / (m as f64 * (m + k) as f64);
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        sum
    }

    /// Q1 from the Neumann series in (a/b)^k I_k(ab).
    fn q1_bessel(a: f64, b: f64) -> f64 {
        let e = (-(a * a + b * b) / 2.0).exp();
        if a < b {
            let r = a / b;
            let mut s = 0.0;
            for k in 0..400 {
                let t = r.powi(k) * bessel_i(k as u32, a * b);
                s += t;
                if k > 5 && t < 1e-18 * s {
                    break;
                }
            }
            e * s
        } else {
            let r = b / a;
            let mut s = 0.0;
            for k in 1..400 {
                let t = r.powi(k) * bessel_i(k as u32, a * b);
                s += t;
                if k > 5 && t < 1e-18 * s.max(1e-300) {
                    break;
                }
            }
            1.0 - e * s
        }
    }

    /// Q1 by Simpson quadrature of the Rician density.
    fn q1_quadrature(a: f64, b: f64) -> f64 {
        let pdf = |x: f64| x * (-(x * x + a * a) / 2.0).exp() * bessel_i(0, a * x);
        let simpson = |lo: f64, hi: f64, n: usize| {
            let h = (hi - lo) / n as f64;
            let mut s = pdf(lo) + pdf(hi);
            for i in 1..n {
                s += pdf(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        if b > a {
            simpson(b, a + b + 40.0, 200_000)
        } else {
            1.0 - simpson(0.0, b, 200_000)
        }
    }

    #[test]
    fn threshold_values() {
        assert!((threshold((-1.0f64).exp()).unwrap() - 1.0).abs() < 1e-15);
        assert!((threshold(1e-5).unwrap() - 11.512_925_464_970_229).abs() < 1e-12);
        for p in [1e-8, 1e-5, 0.1, 0.4] {
            assert!((false_alarm_probability(threshold(p).unwrap()) - p).abs() < 1e-15 * p.max(1e-300) * 10.0);
        }
        assert!(threshold(0.0).is_err());
        assert!(threshold(1.0).is_err());
    }

    #[test]
    fn marcum_closed_forms() {
        assert!((marcum_q1(0.0, 2f64.sqrt()) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((marcum_q1(0.0, 2f64.sqrt()) - 0.367_879_4).abs() < 1e-7);
        for b in [0.0, 0.3, 1.0, 3.0, 7.0] {
            assert!((marcum_q1(0.0, b) - (-b * b / 2.0).exp()).abs() < 1e-15);
        }
        for a in [0.0, 0.5, 2.0, 10.0] {
            assert_eq!(marcum_q1(a, 0.0), 1.0);
        }
    }

    #[test]
    fn marcum_matches_two_oracles() {
        let pts = [
            (1.0, 1.0),
            (0.5, 2.0),
            (2.0, 0.5),
            (3.0, 3.5),
            (4.0, 2.0),
            (1.5, 5.0),
            (5.0, 4.0),
            (0.1, 0.2),
            (2.5, 2.5),
        ];
        for (a, b) in pts {
            let q = marcum_q1(a, b);
            let o1 = q1_bessel(a, b);
            let o2 = q1_quadrature(a, b);
            assert!((o1 - o2).abs() < 1e-10, "oracles disagree at ({a},{b}): {o1} vs {o2}");
            assert!((q - o1).abs() < 1e-10, "Q1({a},{b}) = {q}, oracle {o1}");
        }
    }

    #[test]
    fn marcum_large_arguments() {
        // Far tails: both sides stay in [0,1] and complement sums to one.
        for (a, b) in [(30.0, 31.0), (40.0, 20.0), (10.0, 60.0), (100.0, 99.0)] {
            let (q, p) = (marcum_q1(a, b), marcum_p1(a, b));
            assert!((0.0..=1.0).contains(&q));
            assert!((q + p - 1.0).abs() < 1e-12);
        }
        // Gaussian approximation when a, b are large and close.
        let q = marcum_q1(100.0, 100.0);
        assert!((q - 0.5).abs() < 0.01, "{q}");
    }

    #[test]
    fn marcum_monotone_on_grid() {
        let grid: Vec<f64> = (0..60).map(|i| i as f64 * 0.25).collect();
        for &a in &grid {
            for w in grid.windows(2) {
                assert!(marcum_q1(a, w[1]) <= marcum_q1(a, w[0]) + 1e-15);
                assert!(marcum_q1(w[1], a) >= marcum_q1(w[0], a) - 1e-15);
            }
        }
    }

    #[test]
    fn misdetection_cases() {
        let tau = threshold(1e-5).unwrap();
        let p0 = misdetection_probability(0.0, tau, 0.0, 1.0, 1.0);
        assert!((p0 - (1.0 - (-tau).exp())).abs() < 1e-15);
        for nu in [0.1, 10.0, 1e6] {
            let p = misdetection_probability(nu, tau, 0.0, 1.0, 1.0);
            let closed = -(-tau / (1.0 + nu)).exp_m1();
            assert!((p / closed - 1.0).abs() < 1e-12);
        }
        assert!(misdetection_probability(1e15, tau, 0.0, 1.0, 1.0) < 1e-8);
        let mut prev = 1.0;
        for i in 0..40 {
            let p = misdetection_probability(10f64.powf(i as f64 * 0.2), tau, 2.0, 1.0, 1.0);
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn nu_star_rayleigh_closed_form() {
        let p_e: f64 = 1e-5;
        let nu = solve_nu_star(p_e, 0.0, 1.0, 1.0).unwrap();
        let oracle = -p_e.ln() / (-(-p_e).ln_1p()) - 1.0;
        assert!((nu / oracle - 1.0).abs() < 1e-9, "{nu} vs {oracle}");
        assert!((nu / 1.1513e6 - 1.0).abs() < 1e-4);
        let back = misdetection_probability(nu, threshold(p_e).unwrap(), 0.0, 1.0, 1.0);
        assert!((back - p_e).abs() < 1e-9);
        assert!(solve_nu_star(1e-3, 0.0, 1.0, 1.0).unwrap() < nu);
        assert!(solve_nu_star(0.5, 0.0, 1.0, 1.0).is_err());
        assert!(solve_nu_star(1e-3, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn phi_s_scaling() {
        let mut p = SystemParams::paper_defaults();
        assert!((phi_s(1.0, &p) - crate::units::dbm_to_watts(-94.0)).abs() < 1e-25);
        p.phi_s_override = None;
        let base = phi_s(1e6, &p);
        assert!((phi_s(2e6, &p) / base - 2.0).abs() < 1e-12);
        p.beacon_energy = 3.0;
        assert!((phi_s(1e6, &p) / base - 3.0).abs() < 1e-12);
        p.symbol_s = Some(2.0 / p.bandwidth_hz);
        assert!((phi_s(1e6, &p) / base - 6.0).abs() < 1e-12);
    }

    #[test]
    fn design_invariants() {
        let p = SystemParams::paper_defaults();
        let d = DetectionDesign::new(&p).unwrap();
        assert_eq!(d.tau_th, -p.p_e.ln());
        assert!((d.p_md(d.nu_star) - p.p_e).abs() < 1e-9);
        assert!((d.p_fa() - p.p_e).abs() < 1e-18);
        assert!(d.phi_s > 0.0);
        assert!((d.beacon_snr(d.phi_s * 2.0, 2.0) - d.nu_star).abs() < 1e-6 * d.nu_star);
    }

    proptest! {
        #[test]
        fn rician_nu_star_round_trip(p_e in 1e-8..0.3f64, k_factor in 0.0..20.0f64) {
            let nu = solve_nu_star(p_e, k_factor, 1.0, 1.0).unwrap();
            let back = misdetection_probability(nu, threshold(p_e).unwrap(), k_factor, 1.0, 1.0);
            prop_assert!((back - p_e).abs() < 1e-9);
        }

        #[test]
        fn marcum_complement(a in 0.0..40.0f64, b in 0.0..40.0f64) {
            let (q, p) = (marcum_q1(a, b), marcum_p1(a, b));
            prop_assert!((0.0..=1.0).contains(&q));
            prop_assert!((q + p - 1.0).abs() < 1e-12);
        }
    }
}
