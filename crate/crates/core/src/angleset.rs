//! Unions of half-open angular intervals and piecewise-constant priors over them.
//!
//! Supports and beams never wrap across the ±π seam: every stored interval
//! lies inside `[-π, π]`, and the seam point `π` is identified with `-π`
//! for membership tests.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{domain, Result};

/// Tolerance for measure equalities.
pub const MEASURE_TOL: f64 = 1e-12;

/// Half-open interval `[lo, hi)` in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        !(self.hi > self.lo)
    }
}

/// Canonical union of disjoint, non-adjacent intervals sorted by `lo`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct AngleSet {
    intervals: Vec<Interval>,
}

impl AngleSet {
    pub fn empty() -> Self {
        AngleSet::default()
    }

    /// The full circle `[-π, π)`, measure `2π`.
    pub fn full() -> Self {
        AngleSet {
            intervals: vec![Interval::new(-PI, PI)],
        }
    }

    /// A single interval `[lo, hi)`; empty when `hi <= lo`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::from_intervals([Interval::new(lo, hi)])
    }

    /// Builds the canonical form from arbitrary (unsorted, overlapping) pieces.
    pub fn from_intervals<I: IntoIterator<Item = Interval>>(raw: I) -> Result<Self> {
        let mut ivs: Vec<Interval> = Vec::new();
        for iv in raw {
            if !iv.lo.is_finite() || !iv.hi.is_finite() {
                return Err(domain("interval bounds must be finite"));
            }
            if iv.is_empty() {
                continue;
            }
            if iv.lo < -PI || iv.hi > PI {
                return Err(domain(format!(
                    "interval [{}, {}) leaves [-pi, pi]",
                    iv.lo, iv.hi
                )));
            }
            ivs.push(iv);
        }
        Ok(Self::canonical(ivs))
    }

    fn canonical(mut ivs: Vec<Interval>) -> Self {
        ivs.retain(|iv| !iv.is_empty());
        ivs.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
        let mut out: Vec<Interval> = Vec::with_capacity(ivs.len());
        for iv in ivs {
            match out.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => out.push(iv),
            }
        }
        AngleSet { intervals: out }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(Interval::len).sum()
    }

    pub fn contains(&self, theta: f64) -> bool {
        let t = if theta == PI { -PI } else { theta };
        self.intervals.iter().any(|iv| iv.lo <= t && t < iv.hi)
    }

    pub fn intersect(&self, other: &AngleSet) -> AngleSet {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = a[i].lo.max(b[j].lo);
            let hi = a[i].hi.min(b[j].hi);
            if hi > lo {
                out.push(Interval::new(lo, hi));
            }
            if a[i].hi < b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::canonical(out)
    }

    pub fn subtract(&self, other: &AngleSet) -> AngleSet {
        let mut out = Vec::new();
        for a in &self.intervals {
            let mut cur = a.lo;
            for b in &other.intervals {
                if b.hi <= cur || b.lo >= a.hi {
                    continue;
                }
                if b.lo > cur {
                    out.push(Interval::new(cur, b.lo));
                }
                cur = cur.max(b.hi);
                if cur >= a.hi {
                    break;
                }
            }
            if cur < a.hi {
                out.push(Interval::new(cur, a.hi));
            }
        }
        Self::canonical(out)
    }

    pub fn union(&self, other: &AngleSet) -> AngleSet {
        Self::canonical(
            self.intervals
                .iter()
                .chain(other.intervals.iter())
                .copied()
                .collect(),
        )
    }

    pub fn is_subset_of(&self, other: &AngleSet) -> bool {
        self.subtract(other).is_empty()
    }

    /// True when `self ⊆ other` and `other` has strictly more measure.
    pub fn is_strict_subset_of(&self, other: &AngleSet) -> bool {
        self.is_subset_of(other) && other.measure() - self.measure() > 0.0
    }

    /// Sub-range between cumulative measure positions `a <= b`, counted from
    /// the lowest angle.
    pub fn slice_by_measure(&self, a: f64, b: f64) -> AngleSet {
        let mut out = Vec::new();
        let mut acc = 0.0;
        for iv in &self.intervals {
            let len = iv.len();
            let start = acc;
            let end = acc + len;
            acc = end;
            if end <= a {
                continue;
            }
            if start >= b {
                break;
            }
            let lo = if a > start { iv.lo + (a - start) } else { iv.lo };
            let hi = if b < end { iv.lo + (b - start) } else { iv.hi };
            if hi > lo {
                out.push(Interval::new(lo, hi.min(iv.hi)));
            }
        }
        Self::canonical(out)
    }

    /// Subset of measure `rho * measure(self)` taken from the lowest-angle end.
    pub fn take_fraction(&self, rho: f64) -> Result<AngleSet> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(domain(format!("fraction {rho} outside [0, 1]")));
        }
        if rho == 0.0 {
            return Ok(AngleSet::empty());
        }
        if self.is_empty() {
            return Err(domain("take_fraction of an empty set"));
        }
        if rho == 1.0 {
            return Ok(self.clone());
        }
        Ok(self.slice_by_measure(0.0, rho * self.measure()))
    }

    /// `n` consecutive sectors of equal measure covering `self`.
    pub fn split_equal(&self, n: usize) -> Result<Vec<AngleSet>> {
        if n == 0 {
            return Err(domain("cannot split into zero sectors"));
        }
        if self.is_empty() {
            return Err(domain("cannot split an empty set"));
        }
        let m = self.measure();
        Ok((0..n)
            .map(|j| {
                let b = if j + 1 == n {
                    f64::INFINITY
                } else {
                    m * (j + 1) as f64 / n as f64
                };
                self.slice_by_measure(m * j as f64 / n as f64, b)
            })
            .collect())
    }

    /// Angle at cumulative measure position `x` in `[0, measure)`.
    pub fn angle_at(&self, x: f64) -> Option<f64> {
        let mut acc = 0.0;
        for iv in &self.intervals {
            if x < acc + iv.len() {
                return Some((iv.lo + (x - acc)).min(iv.hi).max(iv.lo));
            }
            acc += iv.len();
        }
        self.intervals.last().map(|iv| iv.lo.max(iv.hi - f64::EPSILON))
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        let m = self.measure();
        if m <= 0.0 {
            return None;
        }
        let x = rng.random::<f64>() * m;
        self.angle_at(x)
    }
}

/// Piecewise-constant density over disjoint intervals, normalized to unit mass.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePrior {
    pieces: Vec<(Interval, f64)>,
}

impl PiecewisePrior {
    /// Uniform density on `support`.
    pub fn uniform(support: &AngleSet) -> Result<Self> {
        let m = support.measure();
        if m <= 0.0 {
            return Err(domain("uniform prior on an empty support"));
        }
        Ok(PiecewisePrior {
            pieces: support.intervals().iter().map(|&iv| (iv, 1.0 / m)).collect(),
        })
    }

    /// Normalizes relative densities; zero-weight pieces are dropped.
    pub fn from_weights(pieces: Vec<(Interval, f64)>) -> Result<Self> {
        let mut kept: Vec<(Interval, f64)> = Vec::new();
        for (iv, w) in pieces {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(domain(format!("invalid prior weight {w}")));
            }
            if w > 0.0 && !iv.is_empty() {
                AngleSet::from_intervals([iv])?;
                kept.push((iv, w));
            }
        }
        kept.sort_by(|a, b| a.0.lo.total_cmp(&b.0.lo));
        for w in kept.windows(2) {
            if w[1].0.lo < w[0].0.hi {
                return Err(domain("prior pieces overlap"));
            }
        }
        let total: f64 = kept.iter().map(|(iv, w)| iv.len() * w).sum();
        if !(total > 0.0) {
            return Err(domain("prior has zero mass"));
        }
        Ok(PiecewisePrior {
            pieces: kept.into_iter().map(|(iv, w)| (iv, w / total)).collect(),
        })
    }

    pub fn pieces(&self) -> &[(Interval, f64)] {
        &self.pieces
    }

    pub fn support(&self) -> AngleSet {
        AngleSet::canonical(self.pieces.iter().map(|p| p.0).collect())
    }

    pub fn density(&self, theta: f64) -> f64 {
        self.pieces
            .iter()
            .find(|(iv, _)| iv.lo <= theta && theta < iv.hi)
            .map_or(0.0, |p| p.1)
    }

    pub fn total_mass(&self) -> f64 {
        self.pieces.iter().map(|(iv, d)| iv.len() * d).sum()
    }

    pub fn mass(&self, set: &AngleSet) -> f64 {
        self.pieces
            .iter()
            .map(|(iv, d)| d * set.intersect(&AngleSet::canonical(vec![*iv])).measure())
            .sum()
    }

    /// True when every piece has the same density.
    pub fn is_uniform(&self) -> bool {
        self.pieces.windows(2).all(|w| w[0].1 == w[1].1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random::<f64>() * self.total_mass();
        let mut acc = 0.0;
        for (iv, d) in &self.pieces {
            let m = iv.len() * d;
            if u < acc + m {
                let x = iv.lo + (u - acc) / d;
                return x.clamp(iv.lo, iv.hi - f64::EPSILON * iv.hi.abs().max(1.0));
            }
            acc += m;
        }
        let (iv, _) = self.pieces.last().expect("prior has pieces");
        iv.lo + rng.random::<f64>() * iv.len()
    }
}

/// Subset of `a` with measure `rho * |a|` carrying the largest prior mass.
///
/// Built greedily by descending density with ties toward the lowest angle, so a
/// uniform prior reproduces [`AngleSet::take_fraction`].
pub fn top_mass_subset(a: &AngleSet, prior: &PiecewisePrior, rho: f64) -> Result<AngleSet> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(domain(format!("fraction {rho} outside [0, 1]")));
    }
    let covered = a.intersect(&prior.support()).measure();
    if (a.measure() - covered).abs() > MEASURE_TOL {
        return Err(domain("set is not inside the prior support"));
    }
    if rho == 0.0 {
        return Ok(AngleSet::empty());
    }
    if rho == 1.0 {
        return Ok(a.clone());
    }
    let mut atoms: Vec<(Interval, f64)> = Vec::new();
    for iv in a.intervals() {
        for (piv, d) in prior.pieces() {
            let lo = iv.lo.max(piv.lo);
            let hi = iv.hi.min(piv.hi);
            if hi > lo {
                atoms.push((Interval::new(lo, hi), *d));
            }
        }
    }
    atoms.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.lo.total_cmp(&y.0.lo)));
    let target = rho * a.measure();
    let mut acc = 0.0;
    let mut out = Vec::new();
    for (iv, _) in atoms {
        if acc >= target {
            break;
        }
        let len = iv.len();
        if acc + len <= target {
            out.push(iv);
            acc += len;
        } else {
            let hi = iv.lo + (target - acc);
            if hi > iv.lo {
                out.push(Interval::new(iv.lo, hi));
            }
            acc = target;
        }
    }
    Ok(AngleSet::canonical(out))
}
