//! Independent oracles shared by integration tests.

#![allow(dead_code)]

use coalcircle::tree::{Dendrogram, Gauge};

/// Completed energy `Σ m_i m_j f(r_ij)` with `r_ii` half the first-merge
/// height of leaf `i`, written out directly from the coalescence times.
pub fn completed_energy(d: &Dendrogram, g: &Gauge, m: &[f64]) -> f64 {
    let n = d.leaf_count();
    let tau = d.ultrametric();
    let h: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| tau.get(i, j)).fold(f64::INFINITY, f64::min))
        .collect();
    let mut e = 0.0;
    for i in 0..n {
        for j in 0..n {
            let r = if i == j { h[i] / 2.0 } else { tau.get(i, j) };
            e += m[i] * m[j] * g.eval(r);
        }
    }
    e
}

/// Capacity by exhaustive search over simplex grids, zooming in around the
/// best point found. Meant for at most four leaves.
pub fn grid_capacity(d: &Dendrogram, g: &Gauge) -> f64 {
    let n = d.leaf_count();
    let energy = |m: &[f64]| completed_energy(d, g, m);
    let mut centre = vec![1.0 / n as f64; n];
    let mut radius = 1.0;
    let steps = 24;
    let mut best = energy(&centre);
    for _ in 0..12 {
        let h = 2.0 * radius / steps as f64;
        let mut best_m = centre.clone();
        let mut m = vec![0.0; n];
        // free coordinates 0..n-1 on the grid, last one closes the simplex
        let mut idx = vec![0usize; n - 1];
        loop {
            let mut ok = true;
            let mut sum = 0.0;
            for k in 0..n - 1 {
                m[k] = centre[k] - radius + h * idx[k] as f64;
                ok &= m[k] >= 0.0;
                sum += m[k];
            }
            m[n - 1] = 1.0 - sum;
            if ok && m[n - 1] >= 0.0 {
                let e = energy(&m);
                if e < best {
                    best = e;
                    best_m.copy_from_slice(&m);
                }
            }
            let mut k = 0;
            while k < n - 1 {
                idx[k] += 1;
                if idx[k] <= steps {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == n - 1 {
                break;
            }
        }
        centre = best_m;
        radius *= 0.25;
    }
    1.0 / best
}

/// Minimum completed energy of a complete tree by the series-parallel rule
/// `E_C = v_C + 1 / Σ_a 1/(E_a - v_C)`, replayed merge by merge. A merge of
/// several blocks at one height gives the same result in any order.
pub fn recursive_min_energy(d: &Dendrogram, g: &Gauge) -> f64 {
    let n = d.leaf_count();
    // first-merge height of every leaf, including leaves that join as part of a block
    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut [usize], mut x: usize) -> usize {
        while root[x] != x {
            x = root[x];
        }
        x
    }
    let mut first = vec![f64::INFINITY; n];
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for m in d.merges() {
        let (a, b) = (find(&mut root, m.survivor), find(&mut root, m.absorbed));
        for &i in members[a].iter().chain(&members[b]) {
            first[i] = first[i].min(m.time);
        }
        root[b] = a;
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
    }
    let mut energy: Vec<f64> = first.iter().map(|&f| g.eval(f / 2.0)).collect();
    let mut root: Vec<usize> = (0..n).collect();
    for m in d.merges() {
        let (a, b) = (find(&mut root, m.survivor), find(&mut root, m.absorbed));
        let v = g.eval(m.time);
        energy[a] = v + 1.0 / (1.0 / (energy[a] - v) + 1.0 / (energy[b] - v));
        root[b] = a;
    }
    energy[find(&mut root, 0)]
}
