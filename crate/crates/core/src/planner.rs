//! Optimal fixed-length alignment schedule and its error analysis.
//!
//! All values are energy densities in J/rad²; multiplication by the support
//! measure |U_0| happens only when reporting power.

use crate::detection::DetectionDesign;
use crate::error::{domain, Error, Result};
use crate::outage::{spectral_cost, OutageDesign};
use crate::phy::SystemParams;

/// Everything the planner needs, snapshotted into the schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanInputs {
    /// Beacon energy density φ_s (J/rad²).
    pub phi_s: f64,
    /// φ_d(R) = `data_scale` · (2^{R/W} − 1) per slot (J/rad²).
    pub data_scale: f64,
    pub bandwidth_hz: f64,
    pub slots: usize,
    pub rate_min_bps: f64,
    pub outage: f64,
    /// Data-beam fraction ϑ.
    pub theta: f64,
    pub l_max: usize,
    pub frame_s: f64,
    /// |U_t0|·|U_r0| (rad²).
    pub support_measure: f64,
}

impl PlanInputs {
    pub fn new(params: &SystemParams, detection: &DetectionDesign, outage: &OutageDesign) -> Self {
        let unit = params.noise_psd * params.bandwidth_hz * params.slot_s()
            / (2.0 * std::f64::consts::PI).powi(2);
        PlanInputs {
            phi_s: detection.phi_s,
            data_scale: unit * (1.0 - outage.eps) / outage.denom,
            bandwidth_hz: params.bandwidth_hz,
            slots: params.slots,
            rate_min_bps: params.rate_min_bps,
            outage: outage.eps,
            theta: outage.theta,
            l_max: params.l_max,
            frame_s: params.frame_s,
            support_measure: params.support_measure(),
        }
    }

    pub fn from_params(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        let det = DetectionDesign::new(params)?;
        let out = OutageDesign::from_params(params)?;
        Ok(Self::new(params, &det, &out))
    }

    /// φ_d(R) per slot.
    pub fn phi_d(&self, rate_bps: f64) -> f64 {
        if rate_bps == 0.0 {
            return 0.0;
        }
        self.data_scale * spectral_cost(rate_bps, self.bandwidth_hz)
    }

    /// Data rate N·R_min/(N−L) after `l` alignment slots.
    pub fn data_rate(&self, l: usize) -> f64 {
        self.slots as f64 * self.rate_min_bps / (self.slots - l) as f64
    }
}

/// Terminal value v_L = (N−L)·φ_d(N R_min/(N−L)).
pub fn dc_value(inputs: &PlanInputs, l: usize) -> Result<f64> {
    if l >= inputs.slots {
        return Err(domain(format!("alignment length {l} >= slots {}", inputs.slots)));
    }
    Ok((inputs.slots - l) as f64 * inputs.phi_d(inputs.data_rate(l)))
}

/// One backward step of the clamped value recursion.
fn v_step(v: f64, phi_s: f64) -> f64 {
    if 2.0 * v <= phi_s {
        return v;
    }
    (0.5 * v + 0.5 * phi_s - phi_s * phi_s / (8.0 * v)).min(v)
}

/// v_0..v_L for a fixed alignment length `l`.
pub fn v_recursion(inputs: &PlanInputs, l: usize) -> Result<Vec<f64>> {
    let mut v = vec![0.0; l + 1];
    v[l] = dc_value(inputs, l)?;
    for k in (0..l).rev() {
        v[k] = v_step(v[k + 1], inputs.phi_s);
    }
    Ok(v)
}

/// Smallest L whose terminal value exceeds φ_s/2, or `None`.
pub fn l_min(inputs: &PlanInputs) -> Option<usize> {
    (0..inputs.slots).find(|&l| dc_value(inputs, l).is_ok_and(|v| v > inputs.phi_s / 2.0))
}

/// Deficits δ_k = ½ − ρ_k for a fixed alignment length.
///
/// Runs the closed-form ρ recursion in deficit form so that ρ stays strictly
/// below ½ even when φ_s/v is below machine precision.
pub fn rho_deficits(inputs: &PlanInputs, l: usize) -> Result<Vec<f64>> {
    if l == 0 {
        return Ok(Vec::new());
    }
    let v_l = dc_value(inputs, l)?;
    if 2.0 * v_l <= inputs.phi_s {
        return Ok(vec![0.5; l]);
    }
    let mut d = vec![0.0; l];
    d[l - 1] = inputs.phi_s / (4.0 * v_l);
    for k in (0..l - 1).rev() {
        let n = d[k + 1];
        d[k] = 2.0 * n / (1.0 + 4.0 * n * (1.0 - n));
    }
    Ok(d)
}

/// ρ_0..ρ_{L−1} from the closed-form recursion.
pub fn rho_schedule(inputs: &PlanInputs, l: usize) -> Result<Vec<f64>> {
    Ok(rho_deficits(inputs, l)?.into_iter().map(|d| 0.5 - d).collect())
}

/// ρ from a successor value: ½(1 − φ_s/(2v))⁺.
pub fn rho_from_value(v_next: f64, phi_s: f64) -> f64 {
    (0.5 * (1.0 - phi_s / (2.0 * v_next))).max(0.0)
}

/// Optimal schedule: alignment length, fractions, data rate and power.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub l_star: usize,
    pub l_min: Option<usize>,
    pub rho: Vec<f64>,
    /// ½ − ρ_k, kept separately for precision.
    pub rho_deficit: Vec<f64>,
    pub theta: f64,
    pub data_rate_bps: f64,
    pub v: Vec<f64>,
    /// Analytic average power P̄_u = v_0 |U_0| / T_fr (W).
    pub power_w: f64,
    pub inputs: PlanInputs,
}

impl Schedule {
    pub fn v0(&self) -> f64 {
        self.v[0]
    }

    /// Power without any alignment: dc_value(0)·|U_0|/T_fr.
    pub fn no_alignment_power(&self) -> f64 {
        dc_value(&self.inputs, 0).unwrap_or(f64::INFINITY) * self.inputs.support_measure
            / self.inputs.frame_s
    }

    /// Product of ρ along the all-ACK path.
    pub fn ack_path_fraction(&self) -> f64 {
        self.rho.iter().product()
    }
}

/// v_0 for each candidate length in the search set {0} ∪ {L_min..min(N−1, L_max)}.
pub fn candidate_values(inputs: &PlanInputs) -> Result<Vec<(usize, f64)>> {
    let mut out = vec![(0, dc_value(inputs, 0)?)];
    if let Some(lm) = l_min(inputs) {
        let top = (inputs.slots - 1).min(inputs.l_max);
        for l in lm.max(1)..=top {
            out.push((l, v_recursion(inputs, l)?[0]));
        }
    }
    Ok(out)
}

/// Minimizes v_0 over the alignment length; ties go to the smaller length.
pub fn optimize_l(inputs: &PlanInputs) -> Result<Schedule> {
    if !(inputs.phi_s > 0.0) {
        return Err(domain("phi_s must be positive"));
    }
    if inputs.slots == 0 {
        return Err(domain("no slots"));
    }
    let mut best: Option<(usize, f64)> = None;
    for (l, v0) in candidate_values(inputs)? {
        if v0.is_finite() && best.is_none_or(|(_, b)| v0 < b) {
            best = Some((l, v0));
        }
    }
    let (l_star, _) = best.ok_or_else(|| {
        Error::Infeasible(format!(
            "rate {} bit/s needs unrepresentable energy",
            inputs.rate_min_bps
        ))
    })?;
    let v = v_recursion(inputs, l_star)?;
    let rho_deficit = rho_deficits(inputs, l_star)?;
    Ok(Schedule {
        l_star,
        l_min: l_min(inputs),
        rho: rho_deficit.iter().map(|d| 0.5 - d).collect(),
        rho_deficit,
        theta: inputs.theta,
        data_rate_bps: inputs.data_rate(l_star),
        power_w: v[0] * inputs.support_measure / inputs.frame_s,
        v,
        inputs: inputs.clone(),
    })
}

/// Throughput and power under false alarms and misdetections.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorAnalysis {
    pub h: Vec<f64>,
    pub u: Vec<f64>,
    /// T̄_err (bit/s).
    pub throughput_bps: f64,
    /// P̄_err (W).
    pub power_w: f64,
    pub p_fa: f64,
    pub p_md: f64,
}

/// Per-slot probability of staying on the correct track:
/// (1−ρ)(1−p_fa) + ρ(1−p_md).
pub fn survival_factor(rho: f64, p_fa: f64, p_md: f64) -> f64 {
    1.0 - p_fa + rho * (p_fa - p_md)
}

/// Backward h/u recursions from h_{L*} = u_{L*} = 0.
pub fn error_recursions(schedule: &Schedule, p_fa: f64, p_md: f64) -> Result<ErrorAnalysis> {
    if !(0.0..1.0).contains(&p_fa) || !(0.0..1.0).contains(&p_md) {
        return Err(domain("error probabilities must lie in [0, 1)"));
    }
    let l = schedule.l_star;
    let phi_s = schedule.inputs.phi_s;
    let mut h = vec![0.0; l + 1];
    let mut u = vec![0.0; l + 1];
    for k in (0..l).rev() {
        let r = schedule.rho[k];
        let (hn, un) = (h[k + 1], u[k + 1]);
        h[k] = phi_s * (r - p_fa) / 2.0 + (r * p_fa + (1.0 - r) * (1.0 - p_fa)) * hn;
        u[k] = (r * r * (1.0 - p_md) + (1.0 - r) * (1.0 - r) * (1.0 - p_fa)) * un
            - (1.0 - p_fa - p_md) * r * (phi_s / 2.0 + hn * (1.0 - 2.0 * r));
    }
    let survive = schedule
        .rho
        .iter()
        .fold(1.0, |acc, &r| acc * survival_factor(r, p_fa, p_md));
    let inputs = &schedule.inputs;
    Ok(ErrorAnalysis {
        throughput_bps: (1.0 - inputs.outage) * inputs.rate_min_bps * survive,
        power_w: schedule.power_w + (h[0] + u[0]) * inputs.support_measure / inputs.frame_s,
        h,
        u,
        p_fa,
        p_md,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn toy(phi_s: f64, rate: f64, slots: usize) -> PlanInputs {
        PlanInputs {
            phi_s,
            data_scale: 1.0,
            bandwidth_hz: 1.0,
            slots,
            rate_min_bps: rate,
            outage: 0.01,
            theta: 1.0,
            l_max: slots - 1,
            frame_s: 1.0,
            support_measure: 1.0,
        }
    }

    fn paper() -> PlanInputs {
        PlanInputs::from_params(&SystemParams::paper_defaults()).unwrap()
    }

    #[test]
    fn dc_value_cases() {
        let t = toy(0.1, 0.0, 10);
        assert_eq!(dc_value(&t, 3).unwrap(), 0.0);
        let t = toy(0.1, 2.0, 10);
        assert!((dc_value(&t, 0).unwrap() - 10.0 * 3.0).abs() < 1e-12);
        assert!(dc_value(&t, 10).is_err());
        let p = paper();
        let mut prev = 0.0;
        for l in 0..p.slots {
            let v = dc_value(&p, l).unwrap();
            if v.is_infinite() {
                break;
            }
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn v_step_cases() {
        assert!((v_step(1.0, 1.0) - 7.0 / 8.0).abs() < 1e-15);
        assert_eq!(v_step(0.4, 1.0), 0.4);
        assert_eq!(v_step(0.5, 1.0), 0.5);
    }

    /// Brute-force minimization of φ_s ρ + (ρ² + (1−ρ)²) v over a fine ρ grid.
    fn grid_recursion(v_l: f64, phi_s: f64, l: usize) -> Vec<f64> {
        let mut v = vec![0.0; l + 1];
        v[l] = v_l;
        for k in (0..l).rev() {
            v[k] = (0..=10_000)
                .map(|i| {
                    let r = i as f64 * 1e-4;
                    phi_s * r + (r * r + (1.0 - r) * (1.0 - r)) * v[k + 1]
                })
                .fold(f64::INFINITY, f64::min);
        }
        v
    }

    #[test]
    fn v_recursion_matches_grid_minimization() {
        let mut p = paper();
        // Make the beacon cost comparable to the data cost so every stage matters.
        p.phi_s = dc_value(&p, 14).unwrap() / 40.0;
        let v = v_recursion(&p, 14).unwrap();
        let g = grid_recursion(v[14], p.phi_s, 14);
        for k in 0..=14 {
            assert!((v[k] / g[k] - 1.0).abs() < 1e-6, "k={k}: {} vs {}", v[k], g[k]);
        }
    }

    #[test]
    fn l_min_cases() {
        let t = toy(1e-300, 2.0, 10);
        assert_eq!(l_min(&t), Some(0));
        let p = paper();
        let scan = (0..p.slots).find(|&l| dc_value(&p, l).unwrap() > p.phi_s / 2.0);
        assert_eq!(l_min(&p), scan);
        assert_eq!(l_min(&toy(1.0, 0.0, 10)), None);
        assert_eq!(l_min(&toy(1e9, 1.0, 10)), None);
    }

    #[test]
    fn zero_rate_means_no_alignment() {
        let s = optimize_l(&toy(1.0, 0.0, 20)).unwrap();
        assert_eq!(s.l_star, 0);
        assert_eq!(s.power_w, 0.0);
        assert!(s.rho.is_empty());
    }

    #[test]
    fn huge_beacon_cost_means_no_alignment() {
        let t = toy(1e8, 1.0, 20);
        assert!((1..20).all(|l| 2.0 * dc_value(&t, l).unwrap() <= t.phi_s));
        let s = optimize_l(&t).unwrap();
        assert_eq!(s.l_star, 0);
        assert_eq!(s.v0(), dc_value(&t, 0).unwrap());
    }

    #[test]
    fn paper_schedule() {
        let s = optimize_l(&paper()).unwrap();
        assert!(s.l_star > 0);
        assert_eq!(s.l_star, 14);
        assert!(s.power_w < s.no_alignment_power());
        assert_eq!(s.theta, 1.0);
        assert!((s.data_rate_bps - 200.0 * 7.5e9 / 186.0).abs() < 1e-3);
        let dbm = crate::units::watts_to_dbm(s.power_w);
        assert!((10.0..25.0).contains(&dbm), "{dbm}");
    }

    #[test]
    fn rho_recursion_examples() {
        let n: f64 = 0.25;
        let d = 2.0 * n / (1.0 + 4.0 * n * (1.0 - n));
        assert!((0.5 - d - 3.0 / 14.0).abs() < 1e-15);
        let tiny: f64 = 1e-9;
        let d = 2.0 * (0.5 - tiny) / (1.0 + 4.0 * (0.5 - tiny) * (0.5 + tiny));
        assert!((0.5 - d - tiny).abs() < 1e-15);
        assert!(rho_schedule(&paper(), 0).unwrap().is_empty());
    }

    #[test]
    fn rho_formulas_agree() {
        let mut p = paper();
        p.phi_s = dc_value(&p, 14).unwrap() / 10.0;
        let s = optimize_l(&p).unwrap();
        for k in 0..s.l_star {
            let direct = rho_from_value(s.v[k + 1], p.phi_s);
            assert!((s.rho[k] - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn error_identity_examples() {
        let s = optimize_l(&paper()).unwrap();
        let e = error_recursions(&s, 0.0, 0.0).unwrap();
        assert!((e.h[0] + e.u[0]).abs() <= 1e-12 * s.v0());
        let e = error_recursions(&s, 0.01, 0.01).unwrap();
        let expected = 0.99 * 7.5e9 * (0..s.l_star).fold(1.0, |acc, _| acc * 0.99);
        assert_eq!(e.throughput_bps, expected);

        let mut t = toy(1.0, 1.0, 10);
        t.outage = 0.01;
        let mut sched = optimize_l(&t).unwrap();
        sched.l_star = 3;
        sched.rho = vec![0.2, 0.25, 0.3];
        let e = error_recursions(&sched, 0.01, 0.01).unwrap();
        assert!((e.throughput_bps / (0.960_596_01 * 1.0) - 1.0).abs() < 1e-12);

        // One step from zero terminal values.
        sched.rho = vec![0.1, 0.2, 0.3];
        let e = error_recursions(&sched, 0.0, 0.2).unwrap();
        assert!((e.h[2] - 0.15).abs() < 1e-15);
        assert!((e.u[2] + 0.8 * 0.3 * 0.5).abs() < 1e-15);
    }

    /// Expected alignment-plus-data energy per rad² by enumerating every
    /// feedback path, tracking the support measure and whether θ is inside.
    fn enumerate_energy(s: &Schedule, p_fa: f64, p_md: f64) -> f64 {
        fn go(s: &Schedule, k: usize, m: f64, inside: bool, p_fa: f64, p_md: f64) -> f64 {
            if k == s.l_star {
                return s.v[s.l_star] * m;
            }
            let r = s.rho[k];
            let beacon = s.inputs.phi_s * r * m;
            let (ack, nack) = (r * m, (1.0 - r) * m);
            let rest = if inside {
                r * ((1.0 - p_md) * go(s, k + 1, ack, true, p_fa, p_md)
                    + p_md * go(s, k + 1, nack, false, p_fa, p_md))
                    + (1.0 - r)
                        * (p_fa * go(s, k + 1, ack, false, p_fa, p_md)
                            + (1.0 - p_fa) * go(s, k + 1, nack, true, p_fa, p_md))
            } else {
                p_fa * go(s, k + 1, ack, false, p_fa, p_md)
                    + (1.0 - p_fa) * go(s, k + 1, nack, false, p_fa, p_md)
            };
            beacon + rest
        }
        go(s, 0, 1.0, true, p_fa, p_md)
    }

    #[test]
    fn error_recursions_match_path_enumeration() {
        let mut p = paper();
        p.l_max = 8;
        p.phi_s = dc_value(&p, 8).unwrap() / 30.0;
        let s = optimize_l(&p).unwrap();
        assert_eq!(s.l_star, 8);
        for (p_fa, p_md) in [(0.0, 0.0), (0.01, 0.01), (0.1, 0.0), (0.0, 0.1), (0.05, 0.2)] {
            let e = error_recursions(&s, p_fa, p_md).unwrap();
            let exact = enumerate_energy(&s, p_fa, p_md);
            let rel = (s.v0() + e.h[0] + e.u[0]) / exact - 1.0;
            assert!(rel.abs() < 1e-12, "p_fa={p_fa} p_md={p_md}: {rel}");
        }
        // False alarms shrink the support, so power can drop below the error-free value.
        let e = error_recursions(&s, 0.1, 0.0).unwrap();
        assert!(e.power_w < s.power_w);
    }

    fn random_inputs() -> impl Strategy<Value = PlanInputs> {
        (-120.0..-60.0f64, 6.0..10.0f64, 50usize..500).prop_map(|(phi_dbm, log_rate, n)| {
            let mut p = SystemParams::paper_defaults();
            p.phi_s_override = Some(crate::units::dbm_to_watts(phi_dbm));
            p.rate_min_bps = 10f64.powf(log_rate);
            p.slots = n;
            p.beacon_s = p.slot_s() / 2.0;
            p.feedback_s = p.slot_s() / 2.0;
            p.l_max = n - 1;
            PlanInputs::from_params(&p).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn schedule_invariants(inputs in random_inputs()) {
            let s = optimize_l(&inputs).unwrap();
            for w in s.rho_deficit.windows(2) {
                prop_assert!(w[0] > w[1]);
            }
            for &d in &s.rho_deficit {
                prop_assert!(d > 0.0 && d < 0.5);
            }
            for w in s.v.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
            for &v in &s.v {
                prop_assert!(v > inputs.phi_s / 2.0);
            }
            prop_assert_eq!(*s.v.last().unwrap(), dc_value(&inputs, s.l_star).unwrap());
        }

        #[test]
        fn errors_never_help(inputs in random_inputs(), p_fa in 0.0..0.2f64, p_md in 0.0..0.2f64) {
            let s = optimize_l(&inputs).unwrap();
            let e = error_recursions(&s, p_fa, p_md).unwrap();
            let miss_only = error_recursions(&s, 0.0, p_md).unwrap();
            prop_assert!(miss_only.power_w >= s.power_w * (1.0 - 1e-12));
            prop_assert!(e.throughput_bps <= (1.0 - inputs.outage) * inputs.rate_min_bps);
            prop_assert_eq!(e.h[s.l_star], 0.0);
            prop_assert_eq!(e.u[s.l_star], 0.0);
        }
    }
}
