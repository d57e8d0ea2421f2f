use proptest::prelude::*;

use coalcircle::continuum::{simulate_block_history, AnnihilatingState, CoalescingState, MergeEvent};
use coalcircle::formulas::theta;
use coalcircle::harness::run_replications;
use coalcircle::lookdown::{LookdownState, TypeMode};
use coalcircle::tree::{
    build_dendrogram, capacity_estimate, project_to_simplex, tree_energy, Dendrogram, Gauge, UltrametricMatrix,
};
use coalcircle::{CirclePos, IntervalSet, Partition, SeedSpec, TAU};

mod common;

/// A random complete tree: `n - 1` merges of random current blocks at
/// increasing heights in `(0, 1)`.
fn random_tree(n: usize, picks: &[(usize, usize)], gaps: &[f64]) -> Dendrogram {
    let mut reps: Vec<usize> = (0..n).collect();
    let mut t = 0.0;
    let mut merges = Vec::new();
    for (k, &(a, b)) in picks.iter().enumerate().take(n - 1) {
        let i = a % reps.len();
        let mut j = b % (reps.len() - 1);
        if j >= i {
            j += 1;
        }
        t += gaps[k];
        merges.push(MergeEvent {
            time: t,
            survivor: reps[i],
            absorbed: reps[j],
        });
        reps.remove(i.max(j));
    }
    let top = t;
    for m in &mut merges {
        m.time /= top * 1.01;
    }
    Dendrogram::from_merges(n, merges, 1.0).unwrap()
}

/// Disjoint arcs from sorted cut points, rotated so some may wrap past 0.
fn arcs_strategy(max_arcs: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    (1..=max_arcs).prop_flat_map(|k| {
        (proptest::collection::vec(0.05f64..1.0, 2 * k), 0.0f64..TAU).prop_map(|(gaps, rot)| {
            let total: f64 = gaps.iter().sum::<f64>() * 1.02;
            let mut cuts = Vec::with_capacity(gaps.len());
            let mut acc = 0.0;
            for g in gaps {
                acc += g;
                cuts.push(acc / total * TAU);
            }
            cuts.chunks(2).map(|c| (c[0] + rot, c[1] + rot)).collect()
        })
    })
}

fn tree_strategy(max_n: usize) -> impl Strategy<Value = Dendrogram> {
    (2..=max_n).prop_flat_map(|n| {
        (
            Just(n),
            proptest::collection::vec((0usize..1000, 0usize..1000), n - 1),
            proptest::collection::vec(0.01f64..1.0, n - 1),
        )
            .prop_map(|(n, p, g)| random_tree(n, &p, &g))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_labels_stay_canonical(n in 1usize..40, ops in proptest::collection::vec((0usize..40, 0usize..40), 0..60)) {
        let mut p = Partition::singletons(n);
        for (a, b) in ops {
            p = p.merge_blocks(a % n, b % n).unwrap();
            let g = p.gamma();
            for (i, &b) in g.iter().enumerate() {
                prop_assert!(b <= i);
                prop_assert_eq!(g[b], b);
            }
            prop_assert_eq!(p.block_sizes().iter().sum::<usize>(), n);
            let f: f64 = p.frequencies().iter().sum();
            prop_assert!((f - 1.0).abs() < 1e-12);
            prop_assert_eq!(Partition::from_blocks(n, &p.blocks()).unwrap(), p.clone());
        }
    }

    #[test]
    fn merge_is_symmetric(n in 2usize..20, a in 0usize..20, b in 0usize..20) {
        let p = Partition::singletons(n);
        prop_assert_eq!(p.merge_blocks(a % n, b % n).unwrap(), p.merge_blocks(b % n, a % n).unwrap());
    }

    #[test]
    fn normalized_arcs_are_canonical(arcs in arcs_strategy(5), probes in proptest::collection::vec(0.0f64..TAU, 20)) {
        let set = IntervalSet::normalize(&arcs).unwrap();
        prop_assert!(set.total_length() <= TAU + 1e-12);
        let sorted = set.arcs();
        prop_assert_eq!(sorted.len(), arcs.len());
        for w in sorted.windows(2) {
            prop_assert!(w[0].start().value() < w[1].start().value());
        }
        prop_assert_eq!(set.endpoint_count() % 2, 0);
        prop_assert_eq!(IntervalSet::normalize(&set.raw()).unwrap(), set.clone());
        // membership agrees with the raw arcs away from endpoints
        for x in probes {
            let d = |y: f64| { let r = (x - y).rem_euclid(TAU); r.min(TAU - r) };
            if arcs.iter().any(|&(a, b)| d(a) < 1e-9 || d(b) < 1e-9) { continue; }
            let inside = arcs.iter().any(|&(a, b)| (x - a).rem_euclid(TAU) < b - a);
            prop_assert_eq!(set.contains(CirclePos::new(x).unwrap()), inside);
        }
    }

    #[test]
    fn overlapping_arcs_are_rejected(a in 0.0f64..6.0, l in 0.2f64..2.0, f in 0.1f64..0.9) {
        let second = (a + f * l, a + f * l + l);
        prop_assert!(IntervalSet::normalize(&[(a, a + l), second]).is_err());
    }

    #[test]
    fn theta_functional_equation(u in 1e-3f64..1e3) {
        let lhs = theta(u).unwrap();
        let rhs = theta(1.0 / u).unwrap() / u.sqrt();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
    }

    #[test]
    fn simplex_projection(v in proptest::collection::vec(-3.0f64..3.0, 1..12)) {
        let p = project_to_simplex(&v);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let q = project_to_simplex(&p);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dendrogram_round_trip(d in tree_strategy(12)) {
        let m = d.ultrametric();
        prop_assert_eq!(m.max_violation(), 0.0);
        let back = build_dendrogram(&m).unwrap();
        prop_assert_eq!(back.ultrametric(), m);
        let mut prev = usize::MAX;
        for i in 0..=50 {
            let eps = 1e-3 + i as f64 / 50.0;
            let c = d.covering_number(eps).unwrap();
            prop_assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn lower_csv_round_trip(d in tree_strategy(8)) {
        let m = d.ultrametric();
        let mut buf = Vec::new();
        m.write_lower_csv(&mut buf).unwrap();
        let back = UltrametricMatrix::read_lower_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn capacity_matches_recursion(d in tree_strategy(24), beta in 0.05f64..0.95) {
        let g = Gauge::power(beta).unwrap();
        let cap = capacity_estimate(&d, &g).unwrap();
        let exact = 1.0 / common::recursive_min_energy(&d, &g);
        prop_assert!(((cap - exact) / exact).abs() <= 1e-6, "{cap} vs {exact}");
    }

    #[test]
    fn capacity_bounds_and_monotone_in_beta(d in tree_strategy(10), beta in 0.05f64..0.8) {
        let n = d.leaf_count();
        let uniform = vec![1.0 / n as f64; n];
        let g = Gauge::power(beta).unwrap();
        let cap = capacity_estimate(&d, &g).unwrap();
        // the uniform measure is one candidate
        prop_assert!(cap >= (1.0 - 1e-9) / common::completed_energy(&d, &g, &uniform));
        // all heights are below 1, so raising beta raises every gauge value
        let g2 = Gauge::power(beta + 0.1).unwrap();
        prop_assert!(capacity_estimate(&d, &g2).unwrap() <= cap * (1.0 + 1e-9));
        let e1 = tree_energy(&d, &uniform, &g).unwrap();
        let e2 = tree_energy(&d, &uniform, &g2).unwrap();
        prop_assert!(e2 >= e1 - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn capacity_matches_grid_oracle(d in tree_strategy(4), beta in 0.1f64..0.9) {
        let g = Gauge::power(beta).unwrap();
        let cap = capacity_estimate(&d, &g).unwrap();
        let grid = common::grid_capacity(&d, &g);
        prop_assert!(((cap - grid) / grid).abs() <= 1e-4, "{cap} vs {grid}");
    }

    #[test]
    fn traces_are_ultrametric_and_monotone(n in 2usize..40, seed in any::<u64>()) {
        let grid: Vec<f64> = (0..=8).map(|i| 0.05 * i as f64).collect();
        let tr = simulate_block_history(n, 0.4, &grid, 1e-3, SeedSpec::new(seed, 0)).unwrap();
        prop_assert!(tr.counts.windows(2).all(|w| w[1] <= w[0]));
        let m = tr.ultrametric();
        prop_assert_eq!(m.max_violation(), 0.0);
        let d = tr.dendrogram();
        for (&t, &c) in tr.grid.iter().zip(&tr.counts) {
            if t > 0.0 {
                prop_assert_eq!(d.covering_number(t).unwrap(), c);
            }
        }
        let back = build_dendrogram(&m).unwrap();
        prop_assert_eq!(back.ultrametric(), m);
    }

    #[test]
    fn coalescing_bookkeeping(n in 1usize..30, seed in any::<u64>()) {
        let mut rng = SeedSpec::new(seed, 3).rng();
        let mut s = CoalescingState::uniform(n, &mut rng).unwrap();
        let mut prev = n;
        for _ in 0..40 {
            s.advance(2e-3, &mut rng);
            let k = s.block_count();
            prop_assert!(k <= prev);
            prop_assert_eq!(k, s.partition().block_count());
            prop_assert_eq!(s.positions().len(), k);
            prop_assert_eq!(s.merges().len(), n - k);
            let reps = s.representatives();
            prop_assert!(reps.iter().all(|&r| s.partition().gamma()[r] == r));
            prev = k;
        }
    }

    #[test]
    fn annihilating_parity(arcs in arcs_strategy(4), seed in any::<u64>()) {
        let b = IntervalSet::normalize(&arcs).unwrap();
        let mut v = AnnihilatingState::new(&b);
        let mut rng = SeedSpec::new(seed, 0).rng();
        let mut prev = v.endpoint_count();
        for _ in 0..300 {
            v.advance(5e-3, &mut rng);
            let k = v.endpoint_count();
            prop_assert_eq!(k % 2, 0);
            prop_assert!(k <= prev);
            let len = v.occupied_length();
            prop_assert!((0.0..=TAU + 1e-12).contains(&len));
            prev = k;
        }
    }

    #[test]
    fn lowest_level_keeps_its_type(lambda in 20.0f64..150.0, seed in any::<u64>()) {
        let mut rng = SeedSpec::new(seed, 0).rng();
        let mut st = LookdownState::init(lambda, &TypeMode::Diffuse, &mut rng).unwrap();
        prop_assume!(st.particle_count() > 0);
        let first = st.lowest().unwrap();
        let mut types = st.type_count();
        for _ in 0..200 {
            st.advance(2e-4, &mut rng);
            let low = st.lowest().unwrap();
            prop_assert_eq!(low.label, first.label);
            prop_assert_eq!(low.level, first.level);
            // types are only ever lost
            prop_assert!(st.type_count() <= types);
            types = st.type_count();
        }
    }

    #[test]
    fn replications_ignore_worker_count(seed in any::<u64>(), workers in 2usize..5) {
        let f = |s: SeedSpec| {
            let tr = simulate_block_history(16, 0.2, &[0.1, 0.2], 1e-3, s)?;
            Ok((tr.counts.clone(), tr.merges.clone()))
        };
        let a = run_replications(12, seed, 1, f).unwrap();
        let b = run_replications(12, seed, workers, f).unwrap();
        prop_assert_eq!(a, b);
    }
}
