//! Baseline search protocols: bisection and exhaustive sector sweeps.
//!
//! Beacons use the same minimum energy φ_s·|B| as fractional search. After
//! alignment the backlog R_min·T_fr is sent over the remaining frame time
//! with a ϑ-sized data beam.

use crate::angleset::AngleSet;
use crate::error::{Error, Result};

use super::dfs::probe_dimension;
use super::{check_probe, Action, DataPhase, Design, Dimension, FrameTrace, Link};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExhaustiveMode {
    /// Sweep every sector, then report the strongest.
    Conventional,
    /// Stop a sweep at the first ACK.
    Interactive,
}

/// Rate that delivers R_min·T_fr bits in the time left after alignment.
fn remaining_rate(design: &Design, align_time_s: f64) -> Result<(f64, f64)> {
    let p = &design.params;
    let rest = p.frame_s - align_time_s;
    if !(rest > 0.0) {
        return Err(Error::Infeasible(format!(
            "alignment takes {align_time_s} s of a {} s frame",
            p.frame_s
        )));
    }
    Ok((p.rate_min_bps * p.frame_s / rest, rest))
}

fn finish(design: &Design, trace: &mut FrameTrace, support_t: AngleSet, support_r: AngleSet) -> Result<()> {
    let (rate, rest) = remaining_rate(design, trace.align_time_s)?;
    let theta = design.outage.theta;
    let beam_r = support_r.take_fraction(theta)?;
    let action = design.data_action(support_t.clone(), beam_r, rate, rest, theta)?;
    trace.data = Some(DataPhase {
        beam_t: action.beam_t.clone(),
        beam_r: action.beam_r.clone(),
        rate_bps: action.rate_bps,
        power_w: action.power_w,
        duration_s: rest,
    });
    trace.actions.push(action);
    Ok(())
}

/// Per-level duration of bisection: two beacons and one feedback.
pub fn bisection_level_s(design: &Design) -> f64 {
    2.0 * design.params.beacon_s + design.params.feedback_s
}

/// Error-free expected energy of bisection with `depth` levels.
pub fn bisection_energy(design: &Design, depth: usize) -> Result<f64> {
    let p = &design.params;
    let u0 = p.support_measure();
    let align: f64 = (0..depth)
        .map(|j| design.phi_s() * u0 / 2f64.powi(j as i32))
        .sum();
    let (rate, rest) = remaining_rate(design, depth as f64 * bisection_level_s(design))?;
    let theta = design.outage.theta;
    let data_measure = theta * u0 / 2f64.powi(depth as i32);
    let data = if rate > 0.0 {
        design.outage.data_energy(rate, rest, data_measure, theta, p)?
    } else {
        0.0
    };
    Ok(align + data)
}

/// Depth in 0..=L_max with the least error-free expected energy; ties go shallower.
pub fn best_bisection_depth(design: &Design) -> Result<usize> {
    let mut best = (0, bisection_energy(design, 0)?);
    for depth in 1..=design.params.l_max {
        if depth as f64 * bisection_level_s(design) >= design.params.frame_s {
            break;
        }
        let e = bisection_energy(design, depth)?;
        if e < best.1 {
            best = (depth, e);
        }
    }
    Ok(best.0)
}

/// One frame of bisection search: each level splits the probed support into
/// two equal halves, beacons both and keeps the one reported strongest.
pub fn run_bisection(design: &Design, link: &mut dyn Link) -> Result<FrameTrace> {
    let depth = match design.protocol.bisection_depth {
        Some(d) => d,
        None => best_bisection_depth(design)?,
    };
    let mut support_t = design.params.support_t.clone();
    let mut support_r = design.params.support_r.clone();
    let mut trace = FrameTrace {
        supports: vec![(support_t.clone(), support_r.clone())],
        ..FrameTrace::default()
    };
    for level in 0..depth {
        let dim = probe_dimension(level, design.protocol.first_probe);
        let probed = match dim {
            Dimension::Bs => &support_t,
            Dimension::Ue => &support_r,
        };
        let lower = probed.take_fraction(0.5)?;
        let upper = probed.subtract(&lower);
        check_probe(&lower, probed)?;
        check_probe(&upper, probed)?;
        let beacons: Vec<Action> = [lower, upper]
            .into_iter()
            .map(|half| match dim {
                Dimension::Bs => design.beacon(dim, half, support_r.clone()),
                Dimension::Ue => design.beacon(dim, support_t.clone(), half),
            })
            .collect();
        let options: Vec<(AngleSet, AngleSet, f64)> = beacons
            .iter()
            .map(|a| (a.beam_t.clone(), a.beam_r.clone(), a.energy_j))
            .collect();
        let pick = link.strongest(&options);
        let chosen = &beacons[pick];
        match dim {
            Dimension::Bs => support_t = chosen.beam_t.clone(),
            Dimension::Ue => support_r = chosen.beam_r.clone(),
        }
        trace.actions.extend(beacons);
        trace.align_slots += 1;
        trace.align_time_s += bisection_level_s(design);
        trace.supports.push((support_t.clone(), support_r.clone()));
    }
    finish(design, &mut trace, support_t, support_r)?;
    Ok(trace)
}

/// One frame of exhaustive search: a BS sweep over equal sectors of U_t0
/// followed by a UE sweep over sectors of U_r0 with the chosen BS sector.
pub fn run_exhaustive(design: &Design, mode: ExhaustiveMode, link: &mut dyn Link) -> Result<FrameTrace> {
    let p = &design.params;
    let cfg = &design.protocol;
    if cfg.beams_bs == 0 || cfg.beams_ue == 0 {
        return Err(Error::Domain("exhaustive search needs at least one sector".into()));
    }
    let mut support_t = p.support_t.clone();
    let mut support_r = p.support_r.clone();
    let mut trace = FrameTrace {
        supports: vec![(support_t.clone(), support_r.clone())],
        ..FrameTrace::default()
    };
    for dim in [Dimension::Bs, Dimension::Ue] {
        let (n, probed) = match dim {
            Dimension::Bs => (cfg.beams_bs, &support_t),
            Dimension::Ue => (cfg.beams_ue, &support_r),
        };
        if n == 1 {
            continue;
        }
        let sectors = probed.split_equal(n)?;
        for s in &sectors {
            check_probe(s, probed)?;
        }
        let beacon = |s: &AngleSet| match dim {
            Dimension::Bs => design.beacon(dim, s.clone(), support_r.clone()),
            Dimension::Ue => design.beacon(dim, support_t.clone(), s.clone()),
        };
        let chosen = match mode {
            ExhaustiveMode::Conventional => {
                let beacons: Vec<Action> = sectors.iter().map(beacon).collect();
                let options: Vec<(AngleSet, AngleSet, f64)> = beacons
                    .iter()
                    .map(|a| (a.beam_t.clone(), a.beam_r.clone(), a.energy_j))
                    .collect();
                let pick = link.strongest(&options);
                trace.align_slots += beacons.len();
                trace.align_time_s += n as f64 * p.beacon_s + p.feedback_s;
                trace.actions.extend(beacons);
                Some(sectors[pick].clone())
            }
            ExhaustiveMode::Interactive => {
                let mut found = None;
                for s in &sectors {
                    let a = beacon(s);
                    let ack = link.detect(&a.beam_t, &a.beam_r, a.energy_j);
                    trace.actions.push(a);
                    trace.align_slots += 1;
                    trace.align_time_s += p.beacon_s + p.feedback_s;
                    if ack {
                        found = Some(s.clone());
                        break;
                    }
                }
                found
            }
        };
        if let Some(sector) = chosen {
            match dim {
                Dimension::Bs => support_t = sector,
                Dimension::Ue => support_r = sector,
            }
        }
        trace.supports.push((support_t.clone(), support_r.clone()));
    }
    finish(design, &mut trace, support_t, support_r)?;
    Ok(trace)
}
