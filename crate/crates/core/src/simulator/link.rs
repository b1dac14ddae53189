//! Feedback models: error-free, injected flip probabilities, and signal-level detection.

use rand::Rng;

use crate::angleset::AngleSet;
use crate::detection::DetectionDesign;
use crate::phy::{complex_normal, ChannelDraw};
use crate::policies::Link;

fn flip<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    p > 0.0 && rng.random::<f64>() < p
}

/// Index of the beacon holding the most cluster energy; first wins ties.
fn true_strongest(channel: &ChannelDraw, beacons: &[(AngleSet, AngleSet, f64)]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, (bt, br, _)) in beacons.iter().enumerate() {
        let f = channel.in_beam_fraction(bt, br);
        if f > best.1 {
            best = (i, f);
        }
    }
    best.0
}

/// Ground-truth feedback flipped with fixed probabilities.
///
/// A beacon covering a cluster is missed with probability `p_md`; an empty
/// beacon raises a false ACK with probability `p_fa`. Comparisons pick a
/// uniformly random wrong candidate with probability `p_cmp`.
pub struct InjectedLink<'a, R: Rng + ?Sized> {
    pub channel: &'a ChannelDraw,
    pub p_fa: f64,
    pub p_md: f64,
    pub p_cmp: f64,
    pub rng: &'a mut R,
}

impl<R: Rng + ?Sized> Link for InjectedLink<'_, R> {
    fn detect(&mut self, beam_t: &AngleSet, beam_r: &AngleSet, _energy_j: f64) -> bool {
        if self.channel.in_beam_fraction(beam_t, beam_r) > 0.0 {
            !flip(self.p_md, self.rng)
        } else {
            flip(self.p_fa, self.rng)
        }
    }

    fn strongest(&mut self, beacons: &[(AngleSet, AngleSet, f64)]) -> usize {
        let truth = true_strongest(self.channel, beacons);
        if beacons.len() > 1 && flip(self.p_cmp, self.rng) {
            let j = self.rng.random_range(0..beacons.len() - 1);
            if j >= truth {
                j + 1
            } else {
                j
            }
        } else {
            truth
        }
    }
}

/// Matched-filter statistic z = √(ν‖s‖²·f)·h + CN(0, 1) compared with τ_th,
/// where f is the in-beam cluster energy fraction.
pub struct SignalLink<'a, R: Rng + ?Sized> {
    pub channel: &'a ChannelDraw,
    pub detection: &'a DetectionDesign,
    pub rng: &'a mut R,
}

impl<R: Rng + ?Sized> SignalLink<'_, R> {
    pub fn statistic(&mut self, beam_t: &AngleSet, beam_r: &AngleSet, energy_j: f64) -> f64 {
        let f = self.channel.in_beam_fraction(beam_t, beam_r);
        let (nr, ni) = complex_normal(1.0, self.rng);
        if f == 0.0 {
            return nr * nr + ni * ni;
        }
        let m = beam_t.measure() * beam_r.measure();
        let amp = (self.detection.beacon_snr(energy_j, m) * f).sqrt();
        let (hr, hi) = self.channel.h;
        let (zr, zi) = (amp * hr + nr, amp * hi + ni);
        zr * zr + zi * zi
    }
}

impl<R: Rng + ?Sized> Link for SignalLink<'_, R> {
    fn detect(&mut self, beam_t: &AngleSet, beam_r: &AngleSet, energy_j: f64) -> bool {
        self.statistic(beam_t, beam_r, energy_j) > self.detection.tau_th
    }

    fn strongest(&mut self, beacons: &[(AngleSet, AngleSet, f64)]) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, (bt, br, e)) in beacons.iter().enumerate() {
            let z = self.statistic(bt, br, *e);
            if z > best.1 {
                best = (i, z);
            }
        }
        best.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::Cluster;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn channel() -> ChannelDraw {
        ChannelDraw {
            clusters: vec![Cluster { theta_t: 0.1, theta_r: 0.2, fraction: 1.0 }],
            h: (1.0, 0.0),
            gamma: 1.0,
            gamma_hat: 0.0,
        }
    }

    #[test]
    fn zero_probabilities_give_truth() {
        let ch = channel();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut link = InjectedLink { channel: &ch, p_fa: 0.0, p_md: 0.0, p_cmp: 0.0, rng: &mut rng };
        let hit = AngleSet::interval(0.0, 0.5).unwrap();
        let miss = AngleSet::interval(-0.5, 0.0).unwrap();
        assert!(link.detect(&hit, &hit, 1.0));
        assert!(!link.detect(&miss, &hit, 1.0));
        let b = vec![(miss.clone(), hit.clone(), 1.0), (hit.clone(), hit.clone(), 1.0)];
        assert_eq!(link.strongest(&b), 1);
    }

    #[test]
    fn comparison_errors_pick_wrong_candidates() {
        let ch = channel();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut link = InjectedLink { channel: &ch, p_fa: 0.0, p_md: 0.0, p_cmp: 1.0, rng: &mut rng };
        let hit = AngleSet::interval(0.0, 0.5).unwrap();
        let miss = AngleSet::interval(-0.5, 0.0).unwrap();
        let b = vec![(miss.clone(), hit.clone(), 1.0), (hit.clone(), hit.clone(), 1.0), (miss, hit, 1.0)];
        for _ in 0..100 {
            assert_ne!(link.strongest(&b), 1);
        }
    }
}
