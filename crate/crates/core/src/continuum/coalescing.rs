use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{collided, cyclic_runs};
use crate::error::{invalid, Result};
use crate::model::{resort_cyclic, wrap, CirclePos, Partition, SeedSpec, DELTA_MIN, TAU};

/// Two blocks joined at `time`; `survivor` and `absorbed` are the smallest
/// original indices of the blocks, and `survivor < absorbed`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub time: f64,
    pub survivor: usize,
    pub absorbed: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Survivor {
    pos: f64,
    rep: usize,
}

/// Coalescing Brownian motions on the circle, labelled by original index.
///
/// Each block is carried by its smallest index. Survivors are kept sorted by
/// position, so cyclic neighbours are adjacent in storage.
#[derive(Clone, Debug)]
pub struct CoalescingState {
    time: f64,
    survivors: Vec<Survivor>,
    partition: Partition,
    origin: Vec<CirclePos>,
    merges: Vec<MergeEvent>,
    moved: Vec<f64>,
    fired: Vec<bool>,
    spare: Vec<Survivor>,
}

impl PartialEq for CoalescingState {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time
            && self.survivors == other.survivors
            && self.partition == other.partition
            && self.origin == other.origin
            && self.merges == other.merges
    }
}

impl CoalescingState {
    /// Start one particle at each point; point `i` gets index `i`.
    pub fn new(points: &[CirclePos]) -> Result<Self> {
        if points.is_empty() {
            return invalid("need at least one particle");
        }
        let mut survivors: Vec<Survivor> = points
            .iter()
            .enumerate()
            .map(|(rep, p)| Survivor { pos: p.value(), rep })
            .collect();
        survivors.sort_by(|a, b| a.pos.total_cmp(&b.pos));
        let k = survivors.len();
        if k > 1 {
            for i in 0..k {
                let gap = if i + 1 == k {
                    survivors[0].pos + TAU - survivors[i].pos
                } else {
                    survivors[i + 1].pos - survivors[i].pos
                };
                if gap <= DELTA_MIN {
                    return invalid(format!("particles coincide near {}", survivors[i].pos));
                }
            }
        }
        Ok(Self {
            time: 0.0,
            survivors,
            partition: Partition::singletons(points.len()),
            origin: points.to_vec(),
            merges: Vec::new(),
            moved: Vec::new(),
            fired: Vec::new(),
            spare: Vec::new(),
        })
    }

    /// `n` independent uniform particles, indexed in draw order.
    pub fn uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return invalid("need at least one particle");
        }
        loop {
            let pts: Vec<CirclePos> = (0..n)
                .map(|_| CirclePos::from_wrapped(wrap(rng.random::<f64>() * TAU)))
                .collect();
            if let Ok(s) = Self::new(&pts) {
                return Ok(s);
            }
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Positions of the surviving representatives in ascending order.
    pub fn positions(&self) -> Vec<CirclePos> {
        self.survivors
            .iter()
            .map(|s| CirclePos::from_wrapped(s.pos))
            .collect()
    }

    /// Representative index of each survivor, in the order of [`Self::positions`].
    pub fn representatives(&self) -> Vec<usize> {
        self.survivors.iter().map(|s| s.rep).collect()
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn origin(&self) -> &[CirclePos] {
        &self.origin
    }

    pub fn merges(&self) -> &[MergeEvent] {
        &self.merges
    }

    pub fn block_count(&self) -> usize {
        self.survivors.len()
    }

    /// Advance by `dt`. Non-positive `dt` leaves the state unchanged.
    pub fn advance<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) {
        if dt > 0.0 {
            self.step(dt, self.time + dt, rng);
        }
    }

    /// Advance to exactly `t_end` in steps of at most `dt`.
    pub fn run_until<R: Rng + ?Sized>(&mut self, t_end: f64, dt: f64, rng: &mut R) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return invalid(format!("dt must be > 0, got {dt}"));
        }
        if !(t_end >= self.time && t_end.is_finite()) {
            return invalid(format!("cannot run from {} back to {t_end}", self.time));
        }
        while self.time < t_end {
            let remaining = t_end - self.time;
            if self.survivors.len() == 1 {
                let z: f64 = rng.sample(StandardNormal);
                let s = &mut self.survivors[0];
                s.pos = wrap(s.pos + remaining.sqrt() * z);
                self.time = t_end;
                break;
            }
            if remaining <= dt * (1.0 + 1e-9) {
                self.step(remaining, t_end, rng);
            } else {
                self.step(dt, self.time + dt, rng);
            }
        }
        Ok(())
    }

    fn step<R: Rng + ?Sized>(&mut self, dt: f64, t_new: f64, rng: &mut R) {
        let k = self.survivors.len();
        let sd = dt.sqrt();
        self.moved.clear();
        for s in &self.survivors {
            let z: f64 = rng.sample(StandardNormal);
            self.moved.push(s.pos + sd * z);
        }
        self.time = t_new;
        if k == 1 {
            self.survivors[0].pos = wrap(self.moved[0]);
            return;
        }

        self.fired.clear();
        let mut any = false;
        for i in 0..k {
            let (old, new) = if i + 1 == k {
                (
                    self.survivors[0].pos + TAU - self.survivors[i].pos,
                    self.moved[0] + TAU - self.moved[i],
                )
            } else {
                (
                    self.survivors[i + 1].pos - self.survivors[i].pos,
                    self.moved[i + 1] - self.moved[i],
                )
            };
            let hit = collided(old, new, dt, rng);
            any |= hit;
            self.fired.push(hit);
        }

        if !any {
            for (s, &m) in self.survivors.iter_mut().zip(&self.moved) {
                s.pos = m;
            }
        } else {
            self.resolve_collisions(t_new);
        }
        resort_cyclic(&mut self.survivors, &mut self.spare, |s| s.pos, |s, p| s.pos = p);
    }

    fn resolve_collisions(&mut self, t_new: f64) {
        let (runs, start) = cyclic_runs(&self.fired);
        let coord = |idx: usize, moved: &[f64]| moved[idx] + if idx < start { TAU } else { 0.0 };
        let mut next: Vec<Survivor> = Vec::with_capacity(runs.len());
        for run in &runs {
            let keep = *run
                .iter()
                .min_by_key(|&&m| self.survivors[m].rep)
                .expect("runs are non-empty");
            let rep = self.survivors[keep].rep;
            for &m in run {
                if m != keep {
                    self.join(rep, self.survivors[m].rep, t_new);
                }
            }
            next.push(Survivor {
                pos: coord(keep, &self.moved),
                rep,
            });
        }
        // fired runs are merged; any neighbours that still ended up crossed are joined too
        while next.len() > 1 {
            let m = next.len();
            let crossed = (0..m).find(|&i| {
                let gap = if i + 1 == m {
                    next[0].pos + TAU - next[i].pos
                } else {
                    next[i + 1].pos - next[i].pos
                };
                gap <= DELTA_MIN
            });
            let Some(i) = crossed else { break };
            let j = (i + 1) % m;
            let (keep, drop) = if next[i].rep < next[j].rep { (i, j) } else { (j, i) };
            self.join(next[keep].rep, next[drop].rep, t_new);
            next.remove(drop);
        }
        self.survivors = next;
    }

    fn join(&mut self, a: usize, b: usize, t: f64) {
        let (survivor, absorbed) = if a < b { (a, b) } else { (b, a) };
        if self.partition.merge_in_place(survivor, absorbed) {
            self.merges.push(MergeEvent {
                time: t,
                survivor,
                absorbed,
            });
        }
    }
}

/// Functional form of [`CoalescingState::advance`] driven by a seed.
pub fn advance_coalescing(state: &CoalescingState, dt: f64, seed: SeedSpec) -> CoalescingState {
    let mut next = state.clone();
    next.advance(dt, &mut seed.rng());
    next
}
