//! Coalescing random walks and the voter model on the cycle `Z_N`.
//!
//! Both generators are small enough to exponentiate exactly for `N ≤ 12`,
//! which gives an oracle for the duality
//! `P{W^C(t) ⊆ D} = Q{C ⊆ V^D(t)}` free of Monte Carlo error.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::SeedSpec;

/// Largest cycle handled by the exact oracle.
pub const MAX_EXACT_SITES: usize = 12;
/// Largest cycle handled by the duality check.
pub const MAX_DUALITY_SITES: usize = 10;
/// Largest cycle a [`SiteSet`] can describe.
pub const MAX_SITES: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    n_sites: usize,
    jump_rate: f64,
}

impl LatticeConfig {
    pub fn new(n_sites: usize, jump_rate: f64) -> Result<Self> {
        if !(2..=MAX_SITES).contains(&n_sites) {
            return invalid(format!("need 2 <= N <= {MAX_SITES}, got {n_sites}"));
        }
        if !(jump_rate > 0.0 && jump_rate.is_finite()) {
            return invalid(format!("jump rate must be > 0, got {jump_rate}"));
        }
        Ok(Self { n_sites, jump_rate })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn jump_rate(&self) -> f64 {
        self.jump_rate
    }

    fn step(&self, x: usize, up: bool) -> usize {
        if up {
            (x + 1) % self.n_sites
        } else {
            (x + self.n_sites - 1) % self.n_sites
        }
    }
}

/// Subset of `Z_N` as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteSet(u128);

impl SiteSet {
    pub const EMPTY: Self = Self(0);

    pub fn from_bits(bits: u128) -> Self {
        Self(bits)
    }

    pub fn from_sites(sites: &[usize]) -> Result<Self> {
        let mut bits = 0u128;
        for &s in sites {
            if s >= MAX_SITES {
                return Err(Error::IndexOutOfRange { index: s, len: MAX_SITES });
            }
            bits |= 1 << s;
        }
        Ok(Self(bits))
    }

    pub fn full(n: usize) -> Self {
        if n >= MAX_SITES {
            Self(u128::MAX)
        } else {
            Self((1u128 << n) - 1)
        }
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    pub fn contains(self, site: usize) -> bool {
        site < MAX_SITES && self.0 >> site & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn sites(self) -> Vec<usize> {
        (0..MAX_SITES).filter(|&s| self.contains(s)).collect()
    }

    fn insert(&mut self, s: usize) {
        self.0 |= 1 << s;
    }

    fn remove(&mut self, s: usize) {
        self.0 &= !(1 << s);
    }

    fn fits(self, n: usize) -> bool {
        self.is_subset_of(Self::full(n))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainKind {
    Coalescing,
    Voter,
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        invalid(format!("t must be >= 0, got {t}"))
    }
}

/// Gillespie simulation of coalescing walkers started from `c`.
pub fn simulate_coalescing_rw<R: Rng + ?Sized>(
    c: SiteSet,
    cfg: &LatticeConfig,
    t: f64,
    rng: &mut R,
) -> Result<SiteSet> {
    if c.is_empty() {
        return invalid("the starting set must be non-empty");
    }
    if !c.fits(cfg.n_sites) {
        return invalid("starting set has sites outside the cycle");
    }
    check_time(t)?;
    let mut occ = c;
    let mut sites = c.sites();
    let mut now = 0.0;
    loop {
        let rate = 2.0 * cfg.jump_rate * sites.len() as f64;
        now += Exp::new(rate).expect("positive rate").sample(rng);
        if now > t {
            return Ok(occ);
        }
        let i = rng.random_range(0..sites.len());
        let from = sites[i];
        let to = cfg.step(from, rng.random::<bool>());
        occ.remove(from);
        if occ.contains(to) {
            sites.swap_remove(i);
        } else {
            occ.insert(to);
            sites[i] = to;
        }
    }
}

/// Gillespie simulation of the voter model: each ordered neighbour pair
/// `(x, y)` fires at rate λ and `x` copies the opinion of `y`.
pub fn simulate_voter<R: Rng + ?Sized>(d: SiteSet, cfg: &LatticeConfig, t: f64, rng: &mut R) -> Result<SiteSet> {
    if !d.fits(cfg.n_sites) {
        return invalid("opinion set has sites outside the cycle");
    }
    check_time(t)?;
    let n = cfg.n_sites;
    let mut ops = d;
    let mut now = 0.0;
    loop {
        let active: Vec<(usize, usize)> = (0..n)
            .flat_map(|x| [(x, cfg.step(x, true)), (x, cfg.step(x, false))])
            .filter(|&(x, y)| ops.contains(x) != ops.contains(y))
            .collect();
        if active.is_empty() {
            return Ok(ops);
        }
        now += Exp::new(cfg.jump_rate * active.len() as f64)
            .expect("positive rate")
            .sample(rng);
        if now > t {
            return Ok(ops);
        }
        let (x, y) = active[rng.random_range(0..active.len())];
        if ops.contains(y) {
            ops.insert(x);
        } else {
            ops.remove(x);
        }
    }
}

pub fn simulate_coalescing_rw_seeded(c: SiteSet, cfg: &LatticeConfig, t: f64, seed: SeedSpec) -> Result<SiteSet> {
    simulate_coalescing_rw(c, cfg, t, &mut seed.rng())
}

pub fn simulate_voter_seeded(d: SiteSet, cfg: &LatticeConfig, t: f64, seed: SeedSpec) -> Result<SiteSet> {
    simulate_voter(d, cfg, t, &mut seed.rng())
}

/// Dense `2^N × 2^N` transition matrix indexed by bitmask.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    size: usize,
    p: Vec<f64>,
}

impl TransitionMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.p[from * self.size + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.p[from * self.size..(from + 1) * self.size]
    }
}

/// Off-diagonal generator entries `(target, rate)` of one state.
fn transitions(kind: ChainKind, cfg: &LatticeConfig, state: usize) -> Vec<(usize, f64)> {
    let n = cfg.n_sites;
    let lam = cfg.jump_rate;
    let set = SiteSet(state as u128);
    let mut out = Vec::new();
    for x in 0..n {
        for up in [true, false] {
            let y = cfg.step(x, up);
            match kind {
                ChainKind::Coalescing => {
                    if set.contains(x) {
                        let mut next = set;
                        next.remove(x);
                        next.insert(y);
                        out.push((next.0 as usize, lam));
                    }
                }
                ChainKind::Voter => {
                    if set.contains(x) != set.contains(y) {
                        let mut next = set;
                        if set.contains(y) {
                            next.insert(x);
                        } else {
                            next.remove(x);
                        }
                        out.push((next.0 as usize, lam));
                    }
                }
            }
        }
    }
    out
}

/// `exp(tQ)` by uniformization, truncating the Poisson mixture once the
/// neglected weight is below `1e-12`.
pub fn exact_transition(kind: ChainKind, cfg: &LatticeConfig, t: f64) -> Result<TransitionMatrix> {
    if cfg.n_sites > MAX_EXACT_SITES {
        return Err(Error::StateSpaceTooLarge {
            n_sites: cfg.n_sites,
            max: MAX_EXACT_SITES,
        });
    }
    check_time(t)?;
    let size = 1usize << cfg.n_sites;
    let moves: Vec<Vec<(usize, f64)>> = (0..size).map(|s| transitions(kind, cfg, s)).collect();
    let exit: Vec<f64> = moves.iter().map(|m| m.iter().map(|e| e.1).sum()).collect();
    let big = exit.iter().cloned().fold(0.0, f64::max);
    let mut p = vec![0.0; size * size];
    for s in 0..size {
        p[s * size + s] = 1.0;
    }
    if t == 0.0 || big == 0.0 {
        return Ok(TransitionMatrix { size, p });
    }
    let mu = big * t;
    // power[k] = M^k with M = I + Q / big
    let mut power = p.clone();
    let mut result = vec![0.0; size * size];
    let mut log_w = -mu;
    let mut covered = 0.0;
    let mut k = 0u64;
    loop {
        let w = log_w.exp();
        if w > 0.0 {
            for (r, v) in result.iter_mut().zip(&power) {
                *r += w * v;
            }
        }
        covered += w;
        if (k as f64) > mu && 1.0 - covered < 1e-12 {
            break;
        }
        k += 1;
        log_w += mu.ln() - (k as f64).ln();
        let mut next = vec![0.0; size * size];
        for (row, out) in power.chunks_exact(size).zip(next.chunks_exact_mut(size)) {
            for (s, &v) in row.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                out[s] += v * (1.0 - exit[s] / big);
                for &(to, rate) in &moves[s] {
                    out[to] += v * rate / big;
                }
            }
        }
        power = next;
    }
    Ok(TransitionMatrix { size, p: result })
}

/// Largest discrepancy in the lattice duality and where it occurs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    #[serde(rename = "N")]
    pub n_sites: usize,
    pub lambda: f64,
    pub t: f64,
    pub max_error: f64,
    pub worst_c: Vec<usize>,
    pub worst_d: Vec<usize>,
}

/// Compare `P{W^C(t) ⊆ D}` with `Q{C ⊆ V^D(t)}` for every non-empty `C` and every `D`.
pub fn check_duality_exact(cfg: &LatticeConfig, t: f64) -> Result<DualityReport> {
    let n = cfg.n_sites;
    if n > MAX_DUALITY_SITES {
        return Err(Error::StateSpaceTooLarge {
            n_sites: n,
            max: MAX_DUALITY_SITES,
        });
    }
    let coal = exact_transition(ChainKind::Coalescing, cfg, t)?;
    let voter = exact_transition(ChainKind::Voter, cfg, t)?;
    let size = 1usize << n;
    let bits = n;
    let mut worst = (0.0f64, 1usize, 0usize);
    for c in 1..size {
        // subset sums: lhs[d] = Σ_{e ⊆ d} P(C → e)
        let mut lhs = coal.row(c).to_vec();
        for b in 0..bits {
            for d in 0..size {
                if d >> b & 1 == 1 {
                    lhs[d] += lhs[d ^ (1 << b)];
                }
            }
        }
        for d in 0..size {
            // superset sum of the voter row: Q{C ⊆ V^D(t)}
            let mut rhs = 0.0;
            let row = voter.row(d);
            let rest = (size - 1) & !c;
            let mut e = rest;
            loop {
                rhs += row[c | e];
                if e == 0 {
                    break;
                }
                e = (e - 1) & rest;
            }
            let err = (lhs[d] - rhs).abs();
            if err > worst.0 {
                worst = (err, c, d);
            }
        }
    }
    Ok(DualityReport {
        n_sites: n,
        lambda: cfg.jump_rate,
        t,
        max_error: worst.0,
        worst_c: SiteSet(worst.1 as u128).sites(),
        worst_d: SiteSet(worst.2 as u128).sites(),
    })
}

/// Monte Carlo duality gap on a larger cycle, for a given pair `(C, D)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakLimitRow {
    pub n_sites: usize,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub joint_se: f64,
}

/// Rescaled duality on `Z_N` with `λ = N² / (8π²)`, so that walkers on the
/// circle of circumference 2π (sites `2π/N` apart) diffuse at unit rate.
///
/// `c_frac` and `d_arc` are given on the circle and mapped to the nearest sites.
pub fn weak_limit_row(
    n_sites: usize,
    c_points: &[f64],
    d_arc: (f64, f64),
    t: f64,
    reps: u64,
    seed: SeedSpec,
) -> Result<WeakLimitRow> {
    let lambda = (n_sites * n_sites) as f64 / (8.0 * std::f64::consts::PI.powi(2));
    let cfg = LatticeConfig::new(n_sites, lambda)?;
    let to_site = |x: f64| ((x.rem_euclid(std::f64::consts::TAU) / std::f64::consts::TAU * n_sites as f64).round() as usize) % n_sites;
    let c = SiteSet::from_sites(&c_points.iter().map(|&x| to_site(x)).collect::<Vec<_>>())?;
    let (a, len) = d_arc;
    let d_sites: Vec<usize> = (0..n_sites)
        .filter(|&s| {
            let x = s as f64 * std::f64::consts::TAU / n_sites as f64;
            let off = (x - a).rem_euclid(std::f64::consts::TAU);
            off > 0.0 && off < len
        })
        .collect();
    let d = SiteSet::from_sites(&d_sites)?;
    if reps == 0 {
        return invalid("reps must be >= 1");
    }
    let mut l = Vec::with_capacity(reps as usize);
    let mut r = Vec::with_capacity(reps as usize);
    for i in 0..reps {
        let w = simulate_coalescing_rw(c, &cfg, t, &mut seed.derive(0).stream(i).rng())?;
        l.push(f64::from(u8::from(w.is_subset_of(d))));
        let v = simulate_voter(d, &cfg, t, &mut seed.derive(1).stream(i).rng())?;
        r.push(f64::from(u8::from(c.is_subset_of(v))));
    }
    let (lhs, lse) = crate::stats::mean_se(&l);
    let (rhs, rse) = crate::stats::mean_se(&r);
    Ok(WeakLimitRow {
        n_sites,
        lambda,
        lhs,
        rhs,
        joint_se: lse.hypot(rse),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(LatticeConfig::new(1, 1.0).is_err());
        assert!(LatticeConfig::new(3, 0.0).is_err());
        assert!(LatticeConfig::new(3, 1.0).is_ok());
    }

    #[test]
    fn identity_at_time_zero() {
        let cfg = LatticeConfig::new(3, 1.0).unwrap();
        let p = exact_transition(ChainKind::Voter, &cfg, 0.0).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(p.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn rows_are_stochastic() {
        let cfg = LatticeConfig::new(5, 1.0).unwrap();
        for kind in [ChainKind::Coalescing, ChainKind::Voter] {
            let p = exact_transition(kind, &cfg, 1.0).unwrap();
            for s in 0..32 {
                let sum: f64 = p.row(s).iter().sum();
                assert!((sum - 1.0).abs() < 1e-10, "{kind:?} row {s} sums to {sum}");
            }
        }
    }

    #[test]
    fn singletons_stay_singletons() {
        let cfg = LatticeConfig::new(3, 1.0).unwrap();
        let p = exact_transition(ChainKind::Coalescing, &cfg, 1.0).unwrap();
        let mass: f64 = [1usize, 2, 4].iter().map(|&s| p.get(1, s)).sum();
        assert!((mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn too_large_rejected() {
        let cfg = LatticeConfig::new(13, 1.0).unwrap();
        assert!(matches!(
            exact_transition(ChainKind::Voter, &cfg, 1.0),
            Err(Error::StateSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn voter_absorbing_states() {
        let cfg = LatticeConfig::new(6, 2.0).unwrap();
        let mut rng = SeedSpec::new(1, 0).rng();
        assert_eq!(simulate_voter(SiteSet::EMPTY, &cfg, 3.0, &mut rng).unwrap(), SiteSet::EMPTY);
        let full = SiteSet::full(6);
        assert_eq!(simulate_voter(full, &cfg, 3.0, &mut rng).unwrap(), full);
        assert!(simulate_coalescing_rw(SiteSet::EMPTY, &cfg, 1.0, &mut rng).is_err());
    }
}
