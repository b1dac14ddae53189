//! Slot-by-slot protocol policies.
//!
//! [`dfs`] holds the optimal decoupled fractional search (uniform and
//! non-uniform priors); [`baselines`] holds bisection and exhaustive search.
//! Every protocol talks to the channel through the [`Link`] trait, so the same
//! policy code runs with perfect, injected-error or signal-level feedback.

use std::fmt;
use std::str::FromStr;

use crate::angleset::{AngleSet, PiecewisePrior};
use crate::detection::DetectionDesign;
use crate::error::{Error, Result};
use crate::outage::OutageDesign;
use crate::phy::SystemParams;
use crate::planner::{optimize_l, PlanInputs, Schedule};

pub mod baselines;
pub mod dfs;

pub use baselines::{best_bisection_depth, run_bisection, run_exhaustive, ExhaustiveMode};
pub use dfs::{dfs_decide, nonuniform_dfs_decide, run_dfs};

/// Which end of the link a beacon probes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dimension {
    Bs,
    Ue,
}

impl Dimension {
    pub fn other(self) -> Self {
        match self {
            Dimension::Bs => Dimension::Ue,
            Dimension::Ue => Dimension::Bs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Alignment,
    Data,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Feedback {
    Ack,
    Nack,
    Null,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionKind {
    Align(Dimension),
    Communicate,
}

/// One transmission decision.
#[derive(Clone, Debug, PartialEq)]
pub struct Action {
    pub kind: ActionKind,
    pub beam_t: AngleSet,
    pub beam_r: AngleSet,
    pub rate_bps: f64,
    pub energy_j: f64,
    pub duration_s: f64,
    pub power_w: f64,
}

impl Action {
    pub fn is_align(&self) -> bool {
        matches!(self.kind, ActionKind::Align(_))
    }

    pub fn beam_measure(&self) -> f64 {
        self.beam_t.measure() * self.beam_r.measure()
    }
}

/// The sufficient statistic of the protocol: rectangular support, backlog, phase.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefState {
    pub support_t: AngleSet,
    pub support_r: AngleSet,
    pub backlog_bits: f64,
    pub phase: Phase,
    pub slot: usize,
    pub prior_t: PiecewisePrior,
    pub prior_r: PiecewisePrior,
}

impl BeliefState {
    pub fn new(params: &SystemParams, prior_t: PiecewisePrior, prior_r: PiecewisePrior) -> Self {
        BeliefState {
            support_t: params.support_t.clone(),
            support_r: params.support_r.clone(),
            backlog_bits: params.rate_min_bps * params.frame_s,
            phase: Phase::Alignment,
            slot: 0,
            prior_t,
            prior_r,
        }
    }

    pub fn uniform(params: &SystemParams) -> Result<Self> {
        Ok(Self::new(
            params,
            PiecewisePrior::uniform(&params.support_t)?,
            PiecewisePrior::uniform(&params.support_r)?,
        ))
    }

    pub fn support(&self, dim: Dimension) -> &AngleSet {
        match dim {
            Dimension::Bs => &self.support_t,
            Dimension::Ue => &self.support_r,
        }
    }

    pub fn support_measure(&self) -> f64 {
        self.support_t.measure() * self.support_r.measure()
    }
}

/// Belief update: ACK keeps U ∩ B, NACK keeps U \ B in the probed dimension;
/// a data slot only drains the backlog.
pub fn apply_feedback(state: &BeliefState, action: &Action, feedback: Feedback) -> Result<BeliefState> {
    let mut next = state.clone();
    next.slot += 1;
    match (action.kind, feedback) {
        (ActionKind::Align(_), _) if state.phase == Phase::Data => {
            return Err(Error::Protocol("alignment after the data phase started".into()));
        }
        (ActionKind::Align(_), Feedback::Null) => {
            return Err(Error::Protocol("alignment beacon without ACK/NACK".into()));
        }
        (ActionKind::Communicate, Feedback::Ack | Feedback::Nack) => {
            return Err(Error::Protocol("ACK/NACK on a data slot".into()));
        }
        (ActionKind::Align(dim), fb) => {
            let (support, beam) = match dim {
                Dimension::Bs => (&mut next.support_t, &action.beam_t),
                Dimension::Ue => (&mut next.support_r, &action.beam_r),
            };
            *support = if fb == Feedback::Ack {
                support.intersect(beam)
            } else {
                support.subtract(beam)
            };
        }
        (ActionKind::Communicate, Feedback::Null) => {
            next.phase = Phase::Data;
            next.backlog_bits = (state.backlog_bits - action.rate_bps * action.duration_s).max(0.0);
        }
    }
    Ok(next)
}

/// Channel-side behaviour the protocols need.
pub trait Link {
    /// Whether the UE reports ACK for a beacon over `beam_t × beam_r` with `energy_j`.
    fn detect(&mut self, beam_t: &AngleSet, beam_r: &AngleSet, energy_j: f64) -> bool;
    /// Index of the beacon the UE reports as strongest.
    fn strongest(&mut self, beacons: &[(AngleSet, AngleSet, f64)]) -> usize;
}

/// Protocol knobs shared by all policies.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolConfig {
    /// Dimension probed in the first alignment slot.
    pub first_probe: Dimension,
    /// Exhaustive-search sector counts.
    pub beams_bs: usize,
    pub beams_ue: usize,
    /// Bisection depth; `None` picks the depth with least expected energy.
    pub bisection_depth: Option<usize>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            first_probe: Dimension::Bs,
            beams_bs: 32,
            beams_ue: 32,
            bisection_depth: None,
        }
    }
}

/// Parameters plus every precomputed design quantity a protocol needs.
#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    pub params: SystemParams,
    pub detection: DetectionDesign,
    pub outage: OutageDesign,
    pub schedule: Schedule,
    pub protocol: ProtocolConfig,
}

impl Design {
    pub fn new(params: SystemParams, protocol: ProtocolConfig) -> Result<Self> {
        params.validate()?;
        let detection = DetectionDesign::new(&params)?;
        let outage = OutageDesign::from_params(&params)?;
        let schedule = optimize_l(&PlanInputs::new(&params, &detection, &outage))?;
        Ok(Design { params, detection, outage, schedule, protocol })
    }

    pub fn phi_s(&self) -> f64 {
        self.detection.phi_s
    }

    /// Minimum-energy beacon over `beam_t × beam_r`.
    pub fn beacon(&self, dim: Dimension, beam_t: AngleSet, beam_r: AngleSet) -> Action {
        let energy_j = self.phi_s() * beam_t.measure() * beam_r.measure();
        Action {
            kind: ActionKind::Align(dim),
            beam_t,
            beam_r,
            rate_bps: 0.0,
            energy_j,
            duration_s: self.params.beacon_s,
            power_w: energy_j / self.params.beacon_s,
        }
    }

    /// Data transmission at `rate_bps` for `duration_s` with outage target ε.
    pub fn data_action(
        &self,
        beam_t: AngleSet,
        beam_r: AngleSet,
        rate_bps: f64,
        duration_s: f64,
        align_prob: f64,
    ) -> Result<Action> {
        let m = beam_t.measure() * beam_r.measure();
        let energy_j = if rate_bps > 0.0 {
            self.outage.data_energy(rate_bps, duration_s, m, align_prob, &self.params)?
        } else {
            0.0
        };
        Ok(Action {
            kind: ActionKind::Communicate,
            beam_t,
            beam_r,
            rate_bps,
            energy_j,
            duration_s,
            power_w: energy_j / duration_s,
        })
    }
}

/// Available protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    Dfs,
    DfsNonuniform,
    Bisection,
    Ces,
    Ies,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::Dfs,
        Policy::DfsNonuniform,
        Policy::Bisection,
        Policy::Ces,
        Policy::Ies,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Dfs => "dfs",
            Policy::DfsNonuniform => "dfs-nonuniform",
            Policy::Bisection => "bisection",
            Policy::Ces => "ces",
            Policy::Ies => "ies",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown policy `{s}`")))
    }
}

/// The data transmission of a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct DataPhase {
    pub beam_t: AngleSet,
    pub beam_r: AngleSet,
    pub rate_bps: f64,
    pub power_w: f64,
    /// Total data-phase duration (s).
    pub duration_s: f64,
}

/// Everything a protocol did in one frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrameTrace {
    pub actions: Vec<Action>,
    /// Support after each alignment step, starting with the initial support.
    pub supports: Vec<(AngleSet, AngleSet)>,
    pub data: Option<DataPhase>,
    /// Alignment slots (DFS), levels (bisection) or beacons (exhaustive).
    pub align_slots: usize,
    pub align_time_s: f64,
}

impl FrameTrace {
    pub fn align_energy(&self) -> f64 {
        self.actions.iter().filter(|a| a.is_align()).map(|a| a.energy_j).sum()
    }

    pub fn data_energy(&self) -> f64 {
        self.actions.iter().filter(|a| !a.is_align()).map(|a| a.energy_j).sum()
    }

    pub fn final_support(&self) -> Option<&(AngleSet, AngleSet)> {
        self.supports.last()
    }
}

/// Runs one frame of `policy` against `link`.
pub fn run_policy(
    policy: Policy,
    design: &Design,
    prior_t: &PiecewisePrior,
    prior_r: &PiecewisePrior,
    link: &mut dyn Link,
) -> Result<FrameTrace> {
    match policy {
        Policy::Dfs => run_dfs(design, prior_t, prior_r, false, link),
        Policy::DfsNonuniform => run_dfs(design, prior_t, prior_r, true, link),
        Policy::Bisection => run_bisection(design, link),
        Policy::Ces => run_exhaustive(design, ExhaustiveMode::Conventional, link),
        Policy::Ies => run_exhaustive(design, ExhaustiveMode::Interactive, link),
    }
}

/// Returns an error unless `beam ⊂ support` strictly.
pub(crate) fn check_probe(beam: &AngleSet, support: &AngleSet) -> Result<()> {
    if beam.is_empty() || !beam.is_strict_subset_of(support) {
        return Err(Error::Protocol("alignment beam is not a strict subset of the support".into()));
    }
    Ok(())
}

/// Returns an error unless `beam ⊆ support`.
pub(crate) fn check_data_beam(beam: &AngleSet, support: &AngleSet) -> Result<()> {
    if !beam.is_subset_of(support) {
        return Err(Error::Protocol("data beam leaves the support".into()));
    }
    Ok(())
}
