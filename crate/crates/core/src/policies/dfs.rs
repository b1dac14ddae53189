//! Decoupled fractional search.
//!
//! For k < L* the BS and UE supports are probed alternately, each time with a
//! beam covering the fraction ρ_k of the probed support and the full support
//! on the other side. From slot L* on, data is sent at N·R_min/(N−L*) over
//! B_t = U_t and a UE beam covering ϑ of U_r.

use crate::angleset::{top_mass_subset, AngleSet, PiecewisePrior};
use crate::error::{Error, Result};

use super::{
    apply_feedback, check_data_beam, check_probe, Action, BeliefState, DataPhase, Design,
    Dimension, Feedback, FrameTrace, Link,
};

/// Dimension probed in alignment slot `k`.
pub fn probe_dimension(k: usize, first: Dimension) -> Dimension {
    if k % 2 == 0 {
        first
    } else {
        first.other()
    }
}

/// Uniform-prior decision for the current slot.
pub fn dfs_decide(state: &BeliefState, design: &Design) -> Result<Action> {
    decide(state, design, false)
}

/// Decision that places beams on the highest posterior mass.
pub fn nonuniform_dfs_decide(state: &BeliefState, design: &Design) -> Result<Action> {
    decide(state, design, true)
}

fn pick(set: &AngleSet, prior: &PiecewisePrior, fraction: f64, by_mass: bool) -> Result<AngleSet> {
    if by_mass {
        top_mass_subset(set, prior, fraction)
    } else {
        set.take_fraction(fraction)
    }
}

fn decide(state: &BeliefState, design: &Design, by_mass: bool) -> Result<Action> {
    let sched = &design.schedule;
    let k = state.slot;
    if k >= design.params.slots {
        return Err(Error::Protocol(format!("slot {k} beyond the frame")));
    }
    if k < sched.l_star {
        let dim = probe_dimension(k, design.protocol.first_probe);
        let rho = sched.rho[k];
        let (beam_t, beam_r) = match dim {
            Dimension::Bs => (
                pick(&state.support_t, &state.prior_t, rho, by_mass)?,
                state.support_r.clone(),
            ),
            Dimension::Ue => (
                state.support_t.clone(),
                pick(&state.support_r, &state.prior_r, rho, by_mass)?,
            ),
        };
        let probed = match dim {
            Dimension::Bs => (&beam_t, &state.support_t),
            Dimension::Ue => (&beam_r, &state.support_r),
        };
        check_probe(probed.0, probed.1)?;
        return Ok(design.beacon(dim, beam_t, beam_r));
    }
    let beam_t = state.support_t.clone();
    let theta = sched.theta;
    let beam_r = pick(&state.support_r, &state.prior_r, theta, by_mass)?;
    check_data_beam(&beam_r, &state.support_r)?;
    let align_prob = if by_mass {
        let pt = state.prior_t.mass(&beam_t) / state.prior_t.mass(&state.support_t);
        let pr = state.prior_r.mass(&beam_r) / state.prior_r.mass(&state.support_r);
        (pt * pr).clamp(theta, 1.0)
    } else {
        theta
    };
    design.data_action(
        beam_t,
        beam_r,
        sched.data_rate_bps,
        design.params.slot_s(),
        align_prob,
    )
}

/// One frame of decoupled fractional search against `link`.
pub fn run_dfs(
    design: &Design,
    prior_t: &PiecewisePrior,
    prior_r: &PiecewisePrior,
    by_mass: bool,
    link: &mut dyn Link,
) -> Result<FrameTrace> {
    let mut state = BeliefState::new(&design.params, prior_t.clone(), prior_r.clone());
    let mut trace = FrameTrace {
        supports: vec![(state.support_t.clone(), state.support_r.clone())],
        ..FrameTrace::default()
    };
    let slot = design.params.slot_s();
    for _ in 0..design.params.slots {
        let action = decide(&state, design, by_mass)?;
        let feedback = if action.is_align() {
            if link.detect(&action.beam_t, &action.beam_r, action.energy_j) {
                Feedback::Ack
            } else {
                Feedback::Nack
            }
        } else {
            Feedback::Null
        };
        state = apply_feedback(&state, &action, feedback)?;
        if action.is_align() {
            trace.align_slots += 1;
            trace.align_time_s += slot;
            trace
                .supports
                .push((state.support_t.clone(), state.support_r.clone()));
        } else if let Some(data) = trace.data.as_mut() {
            data.duration_s += action.duration_s;
        } else {
            trace.data = Some(DataPhase {
                beam_t: action.beam_t.clone(),
                beam_r: action.beam_r.clone(),
                rate_bps: action.rate_bps,
                power_w: action.power_w,
                duration_s: action.duration_s,
            });
        }
        trace.actions.push(action);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angleset::Interval;
    use crate::phy::SystemParams;
    use crate::policies::{ActionKind, ProtocolConfig};

    struct Scripted(Vec<bool>, usize);

    impl Link for Scripted {
        fn detect(&mut self, _: &AngleSet, _: &AngleSet, _: f64) -> bool {
            self.1 += 1;
            self.0[(self.1 - 1) % self.0.len()]
        }
        fn strongest(&mut self, _: &[(AngleSet, AngleSet, f64)]) -> usize {
            0
        }
    }

    fn design() -> Design {
        Design::new(SystemParams::paper_defaults(), ProtocolConfig::default()).unwrap()
    }

    #[test]
    fn first_slot_probes_bs() {
        let d = design();
        let s = BeliefState::uniform(&d.params).unwrap();
        let a = dfs_decide(&s, &d).unwrap();
        assert_eq!(a.kind, ActionKind::Align(Dimension::Bs));
        assert!((a.beam_t.measure() - d.schedule.rho[0] * s.support_t.measure()).abs() < 1e-12);
        assert_eq!(a.beam_r, s.support_r);
        let expected = d.phi_s() * d.schedule.rho[0] * d.params.support_measure();
        assert!((a.energy_j / expected - 1.0).abs() < 1e-12);
        assert!((a.power_w - a.energy_j / d.params.beacon_s).abs() < 1e-20);
    }

    #[test]
    fn data_slot_uses_full_support_when_theta_is_one() {
        let d = design();
        let mut s = BeliefState::uniform(&d.params).unwrap();
        s.slot = d.schedule.l_star;
        let a = dfs_decide(&s, &d).unwrap();
        assert_eq!(a.kind, ActionKind::Communicate);
        assert_eq!(a.beam_t, s.support_t);
        assert_eq!(a.beam_r, s.support_r);
        let n = d.params.slots as f64;
        let l = d.schedule.l_star as f64;
        assert!((a.rate_bps - n * d.params.rate_min_bps / (n - l)).abs() < 1e-3);
        let per_rad = d.outage.phi_d(a.rate_bps, &d.params);
        assert!((a.energy_j / (per_rad * s.support_measure()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn phases_never_interleave() {
        let d = design();
        let u = crate::angleset::PiecewisePrior::uniform(&d.params.support_t).unwrap();
        let mut link = Scripted(vec![true, false, false, true, true], 0);
        let t = run_dfs(&d, &u, &u, false, &mut link).unwrap();
        let l = d.schedule.l_star;
        assert_eq!(t.actions.len(), d.params.slots);
        for (k, a) in t.actions.iter().enumerate() {
            assert_eq!(a.is_align(), k < l);
            if let ActionKind::Align(dim) = a.kind {
                assert_eq!(dim, probe_dimension(k, Dimension::Bs));
            }
        }
        // Support measure is |U_0| times ρ or 1−ρ per feedback.
        let mut expected = d.params.support_measure();
        for k in 0..l {
            let ack = link.0[k % link.0.len()];
            expected *= if ack { d.schedule.rho[k] } else { 1.0 - d.schedule.rho[k] };
        }
        let (ft, fr) = t.final_support().unwrap();
        assert!((ft.measure() * fr.measure() / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_ack_path_shrinks_by_rho_product() {
        let d = design();
        let u = crate::angleset::PiecewisePrior::uniform(&d.params.support_t).unwrap();
        let t = run_dfs(&d, &u, &u, false, &mut Scripted(vec![true], 0)).unwrap();
        let (ft, fr) = t.final_support().unwrap();
        let expected = d.params.support_measure() * d.schedule.ack_path_fraction();
        assert!((ft.measure() * fr.measure() / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_prior_reproduces_uniform_policy() {
        let d = design();
        let u = crate::angleset::PiecewisePrior::uniform(&d.params.support_t).unwrap();
        let script = vec![true, false, true, true, false, false, true];
        let a = run_dfs(&d, &u, &u, false, &mut Scripted(script.clone(), 0)).unwrap();
        let b = run_dfs(&d, &u, &u, true, &mut Scripted(script, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nonuniform_first_probe_covers_dense_half() {
        let d = design();
        let h = std::f64::consts::FRAC_PI_2;
        let prior_t = PiecewisePrior::from_weights(vec![
            (Interval::new(-h, 0.0), 1.5),
            (Interval::new(0.0, h), 0.5),
        ])
        .unwrap();
        let prior_r = PiecewisePrior::uniform(&d.params.support_r).unwrap();
        let s = BeliefState::new(&d.params, prior_t.clone(), prior_r);
        let a = nonuniform_dfs_decide(&s, &d).unwrap();
        assert!(a.beam_t.is_subset_of(&AngleSet::interval(-h, 0.0).unwrap()));
        assert!(prior_t.mass(&a.beam_t) >= d.schedule.rho[0]);
    }
}
