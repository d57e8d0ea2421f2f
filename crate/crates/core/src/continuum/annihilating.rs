use rand::Rng;
use rand_distr::StandardNormal;

use super::{collided, cyclic_runs};
use crate::error::{invalid, Result};
use crate::model::{resort_cyclic, Arc, CirclePos, IntervalSet, SeedSpec, DELTA_MIN, TAU};

#[derive(Clone, Copy, Debug, PartialEq)]
struct Endpoint {
    pos: f64,
    /// True when the arc to the counter-clockwise side of this point is occupied.
    opens: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Live,
    Empty,
    Full,
}

/// Annihilating Brownian endpoints of a finite union of arcs.
///
/// Endpoints alternate between arc starts and arc ends around the circle, and
/// the alternation survives every annihilation.
#[derive(Clone, Debug)]
pub struct AnnihilatingState {
    time: f64,
    endpoints: Vec<Endpoint>,
    status: Status,
    moved: Vec<f64>,
    fired: Vec<bool>,
    spare: Vec<Endpoint>,
}

impl AnnihilatingState {
    pub fn new(set: &IntervalSet) -> Self {
        let (endpoints, status) = match set {
            IntervalSet::Empty => (Vec::new(), Status::Empty),
            IntervalSet::FullCircle => (Vec::new(), Status::Full),
            IntervalSet::Arcs(arcs) => {
                let mut e: Vec<Endpoint> = arcs
                    .iter()
                    .flat_map(|a| {
                        [
                            Endpoint {
                                pos: a.start().value(),
                                opens: true,
                            },
                            Endpoint {
                                pos: a.end().value(),
                                opens: false,
                            },
                        ]
                    })
                    .collect();
                e.sort_by(|a, b| a.pos.total_cmp(&b.pos));
                (e, Status::Live)
            }
        };
        Self {
            time: 0.0,
            endpoints,
            status,
            moved: Vec::new(),
            fired: Vec::new(),
            spare: Vec::new(),
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn endpoint_count(&self) -> usize {
        self.endpoints.len()
    }

    pub fn is_absorbed(&self) -> bool {
        self.status != Status::Live
    }

    pub fn interval_set(&self) -> IntervalSet {
        match self.status {
            Status::Empty => IntervalSet::Empty,
            Status::Full => IntervalSet::FullCircle,
            Status::Live => {
                let k = self.endpoints.len();
                let arcs = (0..k)
                    .filter(|&i| self.endpoints[i].opens)
                    .map(|i| {
                        Arc::new(
                            CirclePos::from_wrapped(self.endpoints[i].pos),
                            CirclePos::from_wrapped(self.endpoints[(i + 1) % k].pos),
                        )
                    })
                    .collect();
                let mut set = IntervalSet::from_sorted_arcs_unchecked(arcs);
                if let IntervalSet::Arcs(a) = &mut set {
                    a.sort_by(|x, y| x.start().value().total_cmp(&y.start().value()));
                }
                set
            }
        }
    }

    /// Total occupied length.
    pub fn occupied_length(&self) -> f64 {
        match self.status {
            Status::Empty => 0.0,
            Status::Full => TAU,
            Status::Live => {
                let k = self.endpoints.len();
                (0..k)
                    .filter(|&i| self.endpoints[i].opens)
                    .map(|i| {
                        let d = self.endpoints[(i + 1) % k].pos - self.endpoints[i].pos;
                        if d > 0.0 {
                            d
                        } else {
                            d + TAU
                        }
                    })
                    .sum()
            }
        }
    }

    /// Advance by `dt`. Non-positive `dt` leaves the state unchanged.
    pub fn advance<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) {
        if dt > 0.0 {
            self.step(dt, self.time + dt, rng);
        }
    }

    /// Advance to exactly `t_end`; returns early in time once absorbed.
    pub fn run_until<R: Rng + ?Sized>(&mut self, t_end: f64, dt: f64, rng: &mut R) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return invalid(format!("dt must be > 0, got {dt}"));
        }
        if !(t_end >= self.time && t_end.is_finite()) {
            return invalid(format!("cannot run from {} back to {t_end}", self.time));
        }
        while self.time < t_end {
            if self.is_absorbed() {
                self.time = t_end;
                break;
            }
            let remaining = t_end - self.time;
            if remaining <= dt * (1.0 + 1e-9) {
                self.step(remaining, t_end, rng);
            } else {
                self.step(dt, self.time + dt, rng);
            }
        }
        Ok(())
    }

    fn step<R: Rng + ?Sized>(&mut self, dt: f64, t_new: f64, rng: &mut R) {
        self.time = t_new;
        if self.is_absorbed() {
            return;
        }
        let k = self.endpoints.len();
        let sd = dt.sqrt();
        self.moved.clear();
        for _ in 0..k {
            let z: f64 = rng.sample(StandardNormal);
            self.moved.push(sd * z);
        }
        for (m, e) in self.moved.iter_mut().zip(&self.endpoints) {
            *m += e.pos;
        }
        self.fired.clear();
        let mut any = false;
        for i in 0..k {
            let (old, new) = if i + 1 == k {
                (
                    self.endpoints[0].pos + TAU - self.endpoints[i].pos,
                    self.moved[0] + TAU - self.moved[i],
                )
            } else {
                (
                    self.endpoints[i + 1].pos - self.endpoints[i].pos,
                    self.moved[i + 1] - self.moved[i],
                )
            };
            let hit = collided(old, new, dt, rng);
            any |= hit;
            self.fired.push(hit);
        }
        if any {
            self.annihilate();
        } else {
            for (e, &m) in self.endpoints.iter_mut().zip(&self.moved) {
                e.pos = m;
            }
        }
        if self.status == Status::Live {
            resort_cyclic(&mut self.endpoints, &mut self.spare, |e| e.pos, |e, p| e.pos = p);
        } else {
            self.endpoints.clear();
        }
    }

    /// Remove colliding neighbours pairwise, walking the circle once.
    fn annihilate(&mut self) {
        let k = self.endpoints.len();
        let (_, start) = cyclic_runs(&self.fired);
        let walk: Vec<Endpoint> = (0..k)
            .map(|m| {
                let idx = (start + m) % k;
                Endpoint {
                    pos: self.moved[idx] + if idx < start { TAU } else { 0.0 },
                    opens: self.endpoints[idx].opens,
                }
            })
            .collect();
        let link: Vec<bool> = (0..k).map(|m| self.fired[(start + m) % k]).collect();

        let mut alive = vec![true; k];
        let mut left = k;
        let mut m = 0;
        while m + 1 < k {
            if link[m] && alive[m] && alive[m + 1] {
                if left == 2 {
                    self.close_last(walk[m].opens);
                    return;
                }
                alive[m] = false;
                alive[m + 1] = false;
                left -= 2;
                m += 2;
            } else {
                m += 1;
            }
        }
        if link[k - 1] && alive[k - 1] && alive[0] {
            if left == 2 {
                self.close_last(walk[k - 1].opens);
                return;
            }
            alive[k - 1] = false;
            alive[0] = false;
        }

        let mut next: Vec<Endpoint> = walk
            .into_iter()
            .zip(alive)
            .filter_map(|(e, a)| a.then_some(e))
            .collect();
        // anything that still ended up crossed annihilates as well
        while !next.is_empty() {
            let n = next.len();
            let crossed = (0..n).find(|&i| {
                let gap = if i + 1 == n {
                    next[0].pos + TAU - next[i].pos
                } else {
                    next[i + 1].pos - next[i].pos
                };
                gap <= DELTA_MIN
            });
            let Some(i) = crossed else { break };
            if n == 2 {
                self.close_last(next[i].opens);
                return;
            }
            let j = (i + 1) % n;
            let (hi, lo) = if i > j { (i, j) } else { (j, i) };
            next.remove(hi);
            next.remove(lo);
        }
        self.endpoints = next;
    }

    /// The final two endpoints met across the gap that follows an endpoint
    /// with the given orientation.
    fn close_last(&mut self, gap_was_occupied: bool) {
        self.status = if gap_was_occupied {
            Status::Empty
        } else {
            Status::Full
        };
        self.endpoints.clear();
    }
}

/// Run the annihilating process from `b` for time `t` with step `dt`.
pub fn simulate_annihilating(b: &IntervalSet, t: f64, dt: f64, seed: SeedSpec) -> Result<IntervalSet> {
    if !(t >= 0.0 && t.is_finite()) {
        return invalid(format!("t must be >= 0, got {t}"));
    }
    let mut s = AnnihilatingState::new(b);
    s.run_until(t, dt, &mut seed.rng())?;
    Ok(s.interval_set())
}
