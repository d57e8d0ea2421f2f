//! Look-down particle system on the circle.
//!
//! A Poisson(λ) number of particles carry i.i.d. uniform positions, distinct
//! uniform levels in `[0, λ]` and a type label. Positions perform independent
//! Brownian motions. When particles of different types meet, every
//! participant takes the type of the lowest-level participant and the levels
//! are shuffled within the group. Particles never die; the coalescing system
//! appears only through how types spread.
//!
//! The law of the particles with levels below `u` does not depend on the
//! particles above `u`, so questions about the `n` lowest levels can be
//! answered by simulating those `n` particles alone.

use std::collections::HashSet;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::continuum::collided;
use crate::error::{invalid, Error, Result};
use crate::model::{resort_cyclic, wrap, CirclePos, IntervalSet, SeedSpec, TAU};
use crate::stats::mean_se;

/// How initial types are assigned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TypeMode {
    /// Independent random 64-bit labels, standing in for a diffuse type law.
    Diffuse,
    /// Type 1 inside the set, type 0 outside.
    TwoType(IntervalSet),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: CirclePos,
    pub level: f64,
    pub label: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Slot {
    pos: f64,
    level: f64,
    label: u64,
}

/// Pairs further apart than this many gap standard deviations are not tested.
const WINDOW_SD: f64 = 8.0;

#[derive(Clone, Debug)]
pub struct LookdownState {
    lambda: f64,
    time: f64,
    two_type: bool,
    slots: Vec<Slot>,
    moved: Vec<f64>,
    spare: Vec<Slot>,
    next_diff: Vec<usize>,
    root: Vec<usize>,
}

impl PartialEq for LookdownState {
    fn eq(&self, other: &Self) -> bool {
        self.lambda == other.lambda
            && self.time == other.time
            && self.two_type == other.two_type
            && self.slots == other.slots
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        invalid(format!("lambda must be > 0, got {lambda}"))
    }
}

impl LookdownState {
    pub fn init<R: Rng + ?Sized>(lambda: f64, mode: &TypeMode, rng: &mut R) -> Result<Self> {
        check_lambda(lambda)?;
        let count = Poisson::new(lambda)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .sample(rng) as usize;
        let mut slots: Vec<Slot> = (0..count)
            .map(|_| {
                let pos = wrap(rng.random::<f64>() * TAU);
                let level = rng.random::<f64>() * lambda;
                let label = match mode {
                    TypeMode::Diffuse => rng.random::<u64>(),
                    TypeMode::TwoType(b) => u64::from(b.contains(CirclePos::from_wrapped(pos))),
                };
                Slot { pos, level, label }
            })
            .collect();
        slots.sort_by(|a, b| a.pos.total_cmp(&b.pos));
        Ok(Self {
            lambda,
            time: 0.0,
            two_type: matches!(mode, TypeMode::TwoType(_)),
            slots,
            moved: Vec::new(),
            spare: Vec::new(),
            next_diff: Vec::new(),
            root: Vec::new(),
        })
    }

    /// Build from explicit particles; levels must be distinct and in `[0, λ]`.
    pub fn from_particles(lambda: f64, particles: &[Particle], two_type: bool) -> Result<Self> {
        check_lambda(lambda)?;
        let mut slots: Vec<Slot> = particles
            .iter()
            .map(|p| Slot {
                pos: p.position.value(),
                level: p.level,
                label: p.label,
            })
            .collect();
        if slots.iter().any(|s| !(0.0..=lambda).contains(&s.level)) {
            return invalid("levels must lie in [0, lambda]");
        }
        if two_type && slots.iter().any(|s| s.label > 1) {
            return invalid("two-type labels must be 0 or 1");
        }
        let mut levels: Vec<f64> = slots.iter().map(|s| s.level).collect();
        levels.sort_by(f64::total_cmp);
        if levels.windows(2).any(|w| w[0] == w[1]) {
            return invalid("levels must be distinct");
        }
        slots.sort_by(|a, b| a.pos.total_cmp(&b.pos));
        Ok(Self {
            lambda,
            time: 0.0,
            two_type,
            slots,
            moved: Vec::new(),
            spare: Vec::new(),
            next_diff: Vec::new(),
            root: Vec::new(),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn is_two_type(&self) -> bool {
        self.two_type
    }

    pub fn particle_count(&self) -> usize {
        self.slots.len()
    }

    /// Particles in ascending position order.
    pub fn particles(&self) -> Vec<Particle> {
        self.slots
            .iter()
            .map(|s| Particle {
                position: CirclePos::from_wrapped(s.pos),
                level: s.level,
                label: s.label,
            })
            .collect()
    }

    /// The particle with the lowest level.
    pub fn lowest(&self) -> Option<Particle> {
        self.slots
            .iter()
            .min_by(|a, b| a.level.total_cmp(&b.level))
            .map(|s| Particle {
                position: CirclePos::from_wrapped(s.pos),
                level: s.level,
                label: s.label,
            })
    }

    pub fn type_count(&self) -> usize {
        self.slots.iter().map(|s| s.label).collect::<HashSet<_>>().len()
    }

    /// Fraction of particles of type 1.
    pub fn two_type_mass(&self) -> Result<f64> {
        if !self.two_type {
            return Err(Error::WrongMode);
        }
        if self.slots.is_empty() {
            return Err(Error::EmptySystem);
        }
        let ones = self.slots.iter().filter(|s| s.label == 1).count();
        Ok(ones as f64 / self.slots.len() as f64)
    }

    /// Maximal circular runs of type-1 particles.
    pub fn type_one_runs(&self) -> Result<usize> {
        if !self.two_type {
            return Err(Error::WrongMode);
        }
        let k = self.slots.len();
        let starts = (0..k)
            .filter(|&i| self.slots[i].label == 1 && self.slots[(i + k - 1) % k].label == 0)
            .count();
        if starts == 0 && self.slots.iter().any(|s| s.label == 1) {
            return Ok(1);
        }
        Ok(starts)
    }

    /// True when the `n` lowest-level particles carry `n` distinct labels.
    /// Fails when fewer than `n` particles exist.
    pub fn lowest_distinct(&self, n: usize) -> Result<bool> {
        let k = self.slots.len();
        if n > k {
            return invalid(format!("only {k} particles, asked for {n}"));
        }
        let pairwise = |labels: &[u64]| {
            labels
                .iter()
                .enumerate()
                .all(|(i, a)| labels[i + 1..].iter().all(|b| a != b))
        };
        if n == k && n <= 16 {
            let mut labels = [0u64; 16];
            for (l, s) in labels.iter_mut().zip(&self.slots) {
                *l = s.label;
            }
            return Ok(pairwise(&labels[..n]));
        }
        let mut by_level: Vec<&Slot> = self.slots.iter().collect();
        by_level.sort_by(|a, b| a.level.total_cmp(&b.level));
        let labels: Vec<u64> = by_level[..n].iter().map(|s| s.label).collect();
        if n <= 16 {
            return Ok(pairwise(&labels));
        }
        Ok(labels.iter().collect::<HashSet<_>>().len() == n)
    }

    /// Advance by `dt`. Non-positive `dt` leaves the state unchanged.
    pub fn advance<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) {
        if dt > 0.0 {
            self.step(dt, self.time + dt, rng);
        }
    }

    pub fn run_until<R: Rng + ?Sized>(&mut self, t_end: f64, dt: f64, rng: &mut R) -> Result<()> {
        self.run_while(t_end, dt, rng, |_| true)
    }

    /// Like [`Self::run_until`] but stops after any step where `keep_going` is false.
    pub(crate) fn run_while<R: Rng + ?Sized>(
        &mut self,
        t_end: f64,
        dt: f64,
        rng: &mut R,
        keep_going: impl Fn(&Self) -> bool,
    ) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return invalid(format!("dt must be > 0, got {dt}"));
        }
        if !(t_end >= self.time && t_end.is_finite()) {
            return invalid(format!("cannot run from {} back to {t_end}", self.time));
        }
        while self.time < t_end {
            let remaining = t_end - self.time;
            if remaining <= dt * (1.0 + 1e-9) {
                self.step(remaining, t_end, rng);
            } else {
                self.step(dt, self.time + dt, rng);
            }
            if !keep_going(self) {
                break;
            }
        }
        Ok(())
    }

    fn step<R: Rng + ?Sized>(&mut self, dt: f64, t_new: f64, rng: &mut R) {
        self.time = t_new;
        let k = self.slots.len();
        if k == 0 {
            return;
        }
        let sd = dt.sqrt();
        self.moved.clear();
        for s in &self.slots {
            let z: f64 = rng.sample(StandardNormal);
            self.moved.push(s.pos + sd * z);
        }
        if k > 1 {
            if let Some(groups) = self.collisions(dt, rng) {
                self.apply_lookdown(&groups, rng);
            }
        }
        for (s, &m) in self.slots.iter_mut().zip(&self.moved) {
            s.pos = m;
        }
        resort_cyclic(&mut self.slots, &mut self.spare, |s| s.pos, |s, p| s.pos = p);
    }

    /// Groups of particles joined by collisions between different types.
    fn collisions<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) -> Option<Vec<Vec<usize>>> {
        let mut next_diff = std::mem::take(&mut self.next_diff);
        let mut root = std::mem::take(&mut self.root);
        let groups = self.collision_groups(dt, rng, &mut next_diff, &mut root);
        self.next_diff = next_diff;
        self.root = root;
        groups
    }

    fn collision_groups<R: Rng + ?Sized>(
        &self,
        dt: f64,
        rng: &mut R,
        next_diff: &mut Vec<usize>,
        root: &mut Vec<usize>,
    ) -> Option<Vec<Vec<usize>>> {
        let k = self.slots.len();
        // offset from i to the next particle with another label, or k
        next_diff.clear();
        next_diff.resize(k, k);
        let mut run = k;
        for step in (0..2 * k).rev() {
            let i = step % k;
            let j = (i + 1) % k;
            run = if self.slots[i].label != self.slots[j].label {
                1
            } else {
                (run + 1).min(k)
            };
            next_diff[i] = run;
        }
        if next_diff.iter().all(|&d| d >= k) {
            return None;
        }

        let window = WINDOW_SD * (2.0 * dt).sqrt();
        root.clear();
        root.extend(0..k);
        fn find(root: &mut [usize], mut x: usize) -> usize {
            while root[x] != x {
                root[x] = root[root[x]];
                x = root[x];
            }
            x
        }
        let mut any = false;
        for i in 0..k {
            let mut m = next_diff[i];
            while m < k {
                let j = (i + m) % k;
                let wrap_shift = if i + m >= k { TAU } else { 0.0 };
                let old = self.slots[j].pos + wrap_shift - self.slots[i].pos;
                if old >= window {
                    break;
                }
                if self.slots[j].label != self.slots[i].label {
                    let new = self.moved[j] + wrap_shift - self.moved[i];
                    if collided(old, new, dt, rng) {
                        any = true;
                        // anything between the pair must have met one of them
                        for q in 1..=m {
                            let (a, b) = (find(root, i), find(root, (i + q) % k));
                            if a != b {
                                root[b.max(a)] = a.min(b);
                            }
                        }
                    }
                }
                m += 1;
            }
        }
        if !any {
            return None;
        }
        let mut slot_of = vec![usize::MAX; k];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in 0..k {
            let r = find(root, i);
            if slot_of[r] == usize::MAX {
                slot_of[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot_of[r]].push(i);
        }
        groups.retain(|g| g.len() > 1);
        Some(groups)
    }

    fn apply_lookdown<R: Rng + ?Sized>(&mut self, groups: &[Vec<usize>], rng: &mut R) {
        for g in groups {
            let lowest = *g
                .iter()
                .min_by(|&&a, &&b| self.slots[a].level.total_cmp(&self.slots[b].level))
                .expect("groups are non-empty");
            let label = self.slots[lowest].label;
            let mut levels: Vec<f64> = g.iter().map(|&i| self.slots[i].level).collect();
            levels.shuffle(rng);
            for (&i, lv) in g.iter().zip(levels) {
                self.slots[i].label = label;
                self.slots[i].level = lv;
            }
        }
    }
}

pub fn init_lookdown(lambda: f64, mode: &TypeMode, seed: SeedSpec) -> Result<LookdownState> {
    LookdownState::init(lambda, mode, &mut seed.rng())
}

pub fn advance_lookdown(state: &LookdownState, dt: f64, seed: SeedSpec) -> LookdownState {
    let mut next = state.clone();
    next.advance(dt, &mut seed.rng());
    next
}

pub fn type_count(state: &LookdownState) -> usize {
    state.type_count()
}

pub fn two_type_mass(state: &LookdownState) -> Result<f64> {
    state.two_type_mass()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissimilarityEstimate {
    pub n: usize,
    pub value: f64,
    pub se: f64,
    pub reps: u64,
    /// Initial configurations thrown away for having too few particles.
    pub redraws: u64,
}

/// `D̂_n` for every `n` in `2..=n_max` from one set of replications.
///
/// Each replication draws a Poisson(λ) configuration (redrawn while it has
/// fewer than `n_max` particles), keeps its `n_max` lowest levels and runs
/// those alone. Replication `r` uses `seed.stream(r)`. The estimates are
/// non-increasing in `n` because the events are nested.
pub fn dissimilarity_profile(
    lambda: f64,
    t: f64,
    n_max: usize,
    reps: u64,
    dt: f64,
    seed: SeedSpec,
) -> Result<Vec<DissimilarityEstimate>> {
    check_lambda(lambda)?;
    if n_max < 2 {
        return invalid("n must be >= 2");
    }
    if reps == 0 {
        return invalid("reps must be >= 1");
    }
    if !(t >= 0.0 && t.is_finite()) {
        return invalid(format!("t must be >= 0, got {t}"));
    }
    let poisson = Poisson::new(lambda).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut hits = vec![Vec::with_capacity(reps as usize); n_max + 1];
    let mut redraws = 0u64;
    for r in 0..reps {
        let mut rng = seed.stream(r).rng();
        let count = loop {
            let c = poisson.sample(&mut rng) as usize;
            if c >= n_max {
                break c;
            }
            redraws += 1;
        };
        let mut levels: Vec<f64> = (0..count).map(|_| rng.random::<f64>() * lambda).collect();
        levels.sort_by(f64::total_cmp);
        let particles: Vec<Particle> = levels[..n_max]
            .iter()
            .map(|&level| Particle {
                position: CirclePos::from_wrapped(wrap(rng.random::<f64>() * TAU)),
                level,
                label: rng.random::<u64>(),
            })
            .collect();
        let mut state = LookdownState::from_particles(lambda, &particles, false)?;
        // once the two lowest share a type no n can succeed
        state.run_while(t, dt, &mut rng, |s| s.lowest_distinct(2).unwrap_or(false))?;
        for (n, h) in hits.iter_mut().enumerate().skip(2) {
            h.push(f64::from(u8::from(state.lowest_distinct(n)?)));
        }
    }
    Ok((2..=n_max)
        .map(|n| {
            let (value, se) = mean_se(&hits[n]);
            DissimilarityEstimate {
                n,
                value,
                se,
                reps,
                redraws,
            }
        })
        .collect())
}

/// `D̂_n`: fraction of replications whose `n` lowest-level particles carry
/// distinct types at time `t`.
pub fn dissimilarity_estimate(
    lambda: f64,
    t: f64,
    n: usize,
    reps: u64,
    dt: f64,
    seed: SeedSpec,
) -> Result<DissimilarityEstimate> {
    Ok(*dissimilarity_profile(lambda, t, n, reps, dt, seed)?
        .last()
        .expect("profile has at least one entry"))
}

/// One replication's summary line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LookdownSummary {
    pub rep: u64,
    pub t: f64,
    pub particle_count: usize,
    pub type_count: usize,
    pub two_type_mass: Option<f64>,
}

impl LookdownSummary {
    pub fn of(rep: u64, state: &LookdownState) -> Self {
        Self {
            rep,
            t: state.time(),
            particle_count: state.particle_count(),
            type_count: state.type_count(),
            two_type_mass: state.two_type_mass().ok(),
        }
    }
}

/// CSV with columns `rep, t, particle_count, type_count, two_type_mass`.
pub fn write_summaries_csv<W: Write>(rows: &[LookdownSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rep", "t", "particle_count", "type_count", "two_type_mass"])?;
    for r in rows {
        w.write_record([
            r.rep.to_string(),
            r.t.to_string(),
            r.particle_count.to_string(),
            r.type_count.to_string(),
            r.two_type_mass.map(|m| m.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn particle(x: f64, level: f64, label: u64) -> Particle {
        Particle {
            position: CirclePos::new(x).unwrap(),
            level,
            label,
        }
    }

    #[test]
    fn rejects_bad_lambda() {
        assert!(init_lookdown(0.0, &TypeMode::Diffuse, SeedSpec::new(1, 0)).is_err());
        assert!(init_lookdown(f64::NAN, &TypeMode::Diffuse, SeedSpec::new(1, 0)).is_err());
    }

    #[test]
    fn two_type_init_follows_set() {
        let b = IntervalSet::single_arc(0.0, std::f64::consts::PI).unwrap();
        let s = init_lookdown(50.0, &TypeMode::TwoType(b.clone()), SeedSpec::new(2, 0)).unwrap();
        for p in s.particles() {
            assert_eq!(p.label, u64::from(b.contains(p.position)));
        }
        assert!(s.type_count() <= 2);
    }

    #[test]
    fn collision_copies_lower_type() {
        let ps = [particle(1.0, 0.5, 7), particle(1.0 + 1e-13, 3.0, 9)];
        let mut s = LookdownState::from_particles(5.0, &ps, false).unwrap();
        s.advance(1e-4, &mut SeedSpec::new(3, 0).rng());
        assert!(s.particles().iter().all(|p| p.label == 7));
        assert_eq!(s.lowest().unwrap().label, 7);
        assert_eq!(s.particle_count(), 2);
    }

    #[test]
    fn diffuse_types_are_distinct_at_start() {
        let s = init_lookdown(100.0, &TypeMode::Diffuse, SeedSpec::new(4, 0)).unwrap();
        assert_eq!(s.type_count(), s.particle_count());
        assert!(matches!(s.two_type_mass(), Err(Error::WrongMode)));
    }

    #[test]
    fn dissimilarity_at_time_zero() {
        let d = dissimilarity_estimate(20.0, 0.0, 3, 10, 1e-3, SeedSpec::new(5, 0)).unwrap();
        assert_eq!(d.value, 1.0);
        assert!(dissimilarity_estimate(20.0, 1.0, 1, 10, 1e-3, SeedSpec::new(5, 0)).is_err());
    }

    #[test]
    fn runs_counted_cyclically() {
        let ps = [particle(0.1, 0.1, 1), particle(1.0, 0.2, 0), particle(2.0, 0.3, 1), particle(6.0, 0.4, 1)];
        let s = LookdownState::from_particles(1.0, &ps, true).unwrap();
        assert_eq!(s.type_one_runs().unwrap(), 1);
        assert!((s.two_type_mass().unwrap() - 0.75).abs() < 1e-15);
    }
}
