//! Statistical checks of the simulators against exact answers, at fixed seeds.

use rand::Rng;

use coalcircle::continuum::{
    bridge_hit_prob, estimate_duality_gap, simulate_annihilating, simulate_block_history, AnnihilatingState,
    CoalescingState,
};
use coalcircle::formulas::{exit_high_cdf, pair_meeting_cdf};
use coalcircle::lattice::{
    exact_transition, simulate_coalescing_rw_seeded, simulate_voter_seeded, weak_limit_row, ChainKind,
    LatticeConfig, SiteSet,
};
use coalcircle::lookdown::{dissimilarity_profile, LookdownState, TypeMode};
use coalcircle::stats::{chi_square_pvalue, mean_se};
use coalcircle::tree::{compare_to_cantor, synthetic_binary_tree};
use coalcircle::{CirclePos, IntervalSet, SeedSpec, TAU};

fn pts(xs: &[f64]) -> Vec<CirclePos> {
    xs.iter().map(|&x| CirclePos::new(x).unwrap()).collect()
}

fn chain_pvalue(kind: ChainKind, start: SiteSet, cfg: &LatticeConfig, t: f64, reps: u64, seed: u64) -> f64 {
    let exact = exact_transition(kind, cfg, t).unwrap();
    let row = exact.row(start.bits() as usize);
    let mut counts = vec![0u64; row.len()];
    for r in 0..reps {
        let s = SeedSpec::new(seed, r);
        let end = match kind {
            ChainKind::Coalescing => simulate_coalescing_rw_seeded(start, cfg, t, s).unwrap(),
            ChainKind::Voter => simulate_voter_seeded(start, cfg, t, s).unwrap(),
        };
        counts[end.bits() as usize] += 1;
    }
    let expected: Vec<f64> = row.iter().map(|p| p * reps as f64).collect();
    chi_square_pvalue(&counts, &expected).unwrap()
}

#[test]
fn lattice_simulators_follow_the_exact_chain() {
    let cfg = LatticeConfig::new(4, 1.0).unwrap();
    let start = SiteSet::from_sites(&[0, 2]).unwrap();
    let p = chain_pvalue(ChainKind::Coalescing, start, &cfg, 0.7, 20_000, 11);
    assert!(p > 1e-3, "coalescing p = {p}");
    let p = chain_pvalue(ChainKind::Voter, start, &cfg, 0.7, 20_000, 12);
    assert!(p > 1e-3, "voter p = {p}");
    let cfg = LatticeConfig::new(5, 2.0).unwrap();
    let start = SiteSet::from_sites(&[0, 1, 3]).unwrap();
    let p = chain_pvalue(ChainKind::Voter, start, &cfg, 0.3, 20_000, 13);
    assert!(p > 1e-3, "voter p = {p}");
}

#[test]
fn exact_rows_are_distributions() {
    for kind in [ChainKind::Coalescing, ChainKind::Voter] {
        let m = exact_transition(kind, &LatticeConfig::new(6, 1.5).unwrap(), 2.0).unwrap();
        for i in 0..m.size() {
            let s: f64 = m.row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-10);
            assert!(m.row(i).iter().all(|&p| p >= -1e-15));
        }
    }
}

#[test]
fn streams_are_uncorrelated() {
    let n = 100_000;
    let mut a = SeedSpec::new(5, 0).rng();
    let mut b = SeedSpec::new(5, 1).rng();
    let xs: Vec<f64> = (0..n).map(|_| a.random::<f64>() - 0.5).collect();
    let ys: Vec<f64> = (0..n).map(|_| b.random::<f64>() - 0.5).collect();
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / n as f64;
    let corr = cov / (1.0 / 12.0);
    assert!(corr.abs() < 0.01, "corr = {corr}");
    // derived families differ from their parent and from each other
    let s = SeedSpec::new(5, 0);
    assert_ne!(s.derive(0), s.derive(1));
    assert_ne!(s.derive(0).rng().random::<u64>(), s.rng().random::<u64>());
}

fn pair_fraction(t: f64, dt: f64, reps: u64, seed: u64) -> (f64, f64) {
    let hits: Vec<f64> = (0..reps)
        .map(|r| {
            let mut rng = SeedSpec::new(seed, r).rng();
            let mut c = CoalescingState::uniform(2, &mut rng).unwrap();
            c.run_until(t, dt, &mut rng).unwrap();
            f64::from(u8::from(c.block_count() == 1))
        })
        .collect();
    mean_se(&hits)
}

#[test]
fn pair_meeting_is_stable_under_step_halving() {
    let (coarse, se1) = pair_fraction(0.5, 2e-3, 20_000, 21);
    let (fine, se2) = pair_fraction(0.5, 1e-3, 20_000, 22);
    let want = pair_meeting_cdf(0.5).unwrap();
    assert!((coarse - fine).abs() <= 3.0 * se1.hypot(se2), "{coarse} vs {fine}");
    assert!((fine - want).abs() <= 3.0 * se2, "{fine} vs {want}");
}

#[test]
fn bridge_probability_examples() {
    assert!(bridge_hit_prob(0.0, 0.3, 1e-3).is_err());
    assert!((bridge_hit_prob(0.1, 0.1, 1e-2).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    assert!(bridge_hit_prob(0.1, 0.1, 0.0).is_err());
}

#[test]
fn block_partition_is_exchangeable() {
    // P(0 ~ 1) should not depend on which pair of labels is asked about
    let reps = 4000;
    let mut same01 = Vec::new();
    let mut same05 = Vec::new();
    for r in 0..reps {
        let tr = simulate_block_history(8, 0.3, &[0.3], 1e-3, SeedSpec::new(31, r)).unwrap();
        // unmerged pairs sit at the censor time
        let m = tr.ultrametric();
        same01.push(f64::from(u8::from(m.get(0, 1) < 0.3)));
        same05.push(f64::from(u8::from(m.get(0, 5) < 0.3)));
    }
    let (a, sa) = mean_se(&same01);
    let (b, sb) = mean_se(&same05);
    assert!((a - b).abs() <= 3.0 * sa.hypot(sb), "{a} vs {b}");
    // and both equal the two-particle meeting probability
    let want = pair_meeting_cdf(0.3).unwrap();
    assert!((a - want).abs() <= 3.0 * sa);
}

#[test]
fn duality_at_time_zero_is_exact() {
    let b = IntervalSet::single_arc(0.0, 2.0).unwrap();
    let e = estimate_duality_gap(&pts(&[0.5, 1.0]), &b, 0.0, 10, 1e-3, SeedSpec::new(1, 0)).unwrap();
    assert_eq!((e.lhs, e.rhs, e.joint_se), (1.0, 1.0, 0.0));
    let e = estimate_duality_gap(&pts(&[0.5, 3.0]), &b, 0.0, 10, 1e-3, SeedSpec::new(1, 0)).unwrap();
    assert_eq!((e.lhs, e.rhs), (0.0, 0.0));
}

#[test]
fn duality_holds_at_small_scale() {
    let b = IntervalSet::normalize(&[(0.0, 1.5), (2.5, 4.5)]).unwrap();
    let e = estimate_duality_gap(&pts(&[0.7, 3.0]), &b, 0.3, 20_000, 1e-3, SeedSpec::new(41, 0)).unwrap();
    assert!(e.gap() <= 3.0 * e.joint_se, "{e:?}");
}

#[test]
fn single_arc_exit_law_at_long_times() {
    // over a long horizon the arc is absorbed at full with probability L/2π
    let len = 2.0;
    let b = IntervalSet::single_arc(1.0, len).unwrap();
    let reps = 3000;
    let full: Vec<f64> = (0..reps)
        .map(|r| {
            let s = simulate_annihilating(&b, 40.0, 1e-2, SeedSpec::new(51, r)).unwrap();
            f64::from(u8::from(s == IntervalSet::FullCircle))
        })
        .collect();
    let (p, se) = mean_se(&full);
    let want = exit_high_cdf(len, 40.0).unwrap();
    assert!((want - len / TAU).abs() < 1e-4);
    assert!((p - want).abs() <= 3.0 * se, "{p} vs {want}");
}

#[test]
fn annihilating_from_absorbed_states_stays_put() {
    let mut rng = SeedSpec::new(1, 0).rng();
    for b in [IntervalSet::Empty, IntervalSet::FullCircle] {
        let mut v = AnnihilatingState::new(&b);
        v.run_until(1.0, 1e-2, &mut rng).unwrap();
        assert_eq!(v.interval_set(), b);
    }
}

#[test]
fn dissimilarity_is_nested_and_near_the_series() {
    let prof = dissimilarity_profile(100.0, 0.5, 4, 20_000, 1e-3, SeedSpec::new(61, 0)).unwrap();
    assert!(prof.windows(2).all(|w| w[1].value <= w[0].value));
    let want = 1.0 - pair_meeting_cdf(0.5).unwrap();
    assert!((prof[0].value - want).abs() <= 3.0 * prof[0].se, "{} vs {want}", prof[0].value);
}

/// Fraction of steps at which the type-1 particles form more circular runs
/// than `b` has arcs.
fn excess_run_fraction(dt: f64, seeds: u64) -> f64 {
    let b = IntervalSet::normalize(&[(0.0, 1.0), (2.0, 3.5), (4.0, 4.5)]).unwrap();
    let steps = (0.05 / dt).round() as u64;
    let mut over = 0u64;
    for s in 0..seeds {
        let mut rng = SeedSpec::new(91, s).rng();
        let mut st = LookdownState::init(120.0, &TypeMode::TwoType(b.clone()), &mut rng).unwrap();
        for _ in 0..steps {
            st.advance(dt, &mut rng);
            over += u64::from(st.type_one_runs().unwrap() > b.arcs().len());
        }
    }
    over as f64 / (seeds * steps) as f64
}

#[test]
fn type_one_runs_stay_within_the_arc_count() {
    // a relabelled particle can cross a neighbour within one step, so the
    // bound holds only up to a slack that vanishes with dt
    let coarse = excess_run_fraction(5e-4, 60);
    let fine = excess_run_fraction(1e-4, 60);
    assert!(fine < 0.02, "fine = {fine}");
    assert!(fine < coarse, "{fine} vs {coarse}");
}

#[test]
fn rescaled_lattice_duality_holds() {
    let row = weak_limit_row(48, &[0.5, 2.5], (0.0, 3.5), 0.2, 4000, SeedSpec::new(71, 0)).unwrap();
    assert!(row.lambda > 29.0 && row.lambda < 29.3);
    assert!((row.lhs - row.rhs).abs() <= 3.0 * row.joint_se, "{row:?}");
}

#[test]
fn synthetic_tree_matches_cantor() {
    for depth in [6, 8] {
        let d = synthetic_binary_tree(depth).unwrap();
        let cmp = compare_to_cantor(&d, &[0.3, 0.4, 0.45], Some(depth)).unwrap();
        assert!(cmp.within(0.5, 2.0), "{cmp:?}");
    }
    let d = synthetic_binary_tree(5).unwrap();
    let cmp = compare_to_cantor(&d, &[0.0], Some(5)).unwrap();
    assert!((cmp.rows[0].ratio - 1.0).abs() < 1e-9);
}

#[test]
fn coalescent_tree_capacity_spread() {
    let tr = simulate_block_history(256, 2.0, &[], 1e-4, SeedSpec::new(81, 0)).unwrap();
    let cmp = compare_to_cantor(&tr.dendrogram(), &[0.3, 0.4, 0.45], None).unwrap();
    for r in &cmp.rows {
        assert!(r.ratio.is_finite() && r.ratio > 0.0, "{cmp:?}");
    }
    assert!(cmp.spread() < 100.0, "{cmp:?}");
}
