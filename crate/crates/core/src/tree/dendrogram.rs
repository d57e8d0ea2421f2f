use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::ultrametric::UltrametricMatrix;
use crate::continuum::MergeEvent;
use crate::error::{invalid, Error, Result};
use crate::stats::linear_fit;

/// Tolerance for comparing a matrix entry with its single-linkage height.
const MATCH_TOL: f64 = 1e-9;

/// Merge history of `n` leaves, sorted by time.
///
/// Each event names the smallest leaf of both joined clusters. Leaves still
/// apart at `censor_time` are treated as farther apart than any radius below it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<MergeEvent>,
    censor_time: f64,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Binary tree behind a dendrogram: leaves `0..n`, then one node per merge.
///
/// Children always have smaller ids than their parent.
pub(crate) struct TreeShape {
    pub n: usize,
    pub parent: Vec<Option<usize>>,
    /// Merge time of internal nodes; unused for leaves.
    pub height: Vec<f64>,
    pub roots: usize,
}

/// Covering-number regression on log-log axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `slope ± 1.96 · slope_se`.
    pub band: (f64, f64),
    /// `(eps, covering number)` pairs used in the fit.
    pub points: Vec<(f64, usize)>,
}

impl Dendrogram {
    pub fn from_merges(n: usize, mut merges: Vec<MergeEvent>, censor_time: f64) -> Result<Self> {
        if !(censor_time >= 0.0 && censor_time.is_finite()) {
            return invalid(format!("censor time must be finite and >= 0, got {censor_time}"));
        }
        merges.sort_by(|a, b| a.time.total_cmp(&b.time));
        let mut uf = UnionFind::new(n);
        let mut min_leaf: Vec<usize> = (0..n).collect();
        for m in &mut merges {
            for idx in [m.survivor, m.absorbed] {
                if idx >= n {
                    return Err(Error::IndexOutOfRange { index: idx, len: n });
                }
            }
            if !(m.time >= 0.0 && m.time <= censor_time) {
                return invalid(format!("merge time {} outside [0, censor]", m.time));
            }
            let (a, b) = (uf.find(m.survivor), uf.find(m.absorbed));
            if a == b {
                return invalid(format!(
                    "leaves {} and {} are already joined at time {}",
                    m.survivor, m.absorbed, m.time
                ));
            }
            let (lo, hi) = (min_leaf[a].min(min_leaf[b]), min_leaf[a].max(min_leaf[b]));
            m.survivor = lo;
            m.absorbed = hi;
            uf.parent[b] = a;
            min_leaf[a] = lo;
        }
        Ok(Self {
            n,
            merges,
            censor_time,
        })
    }

    pub fn leaf_count(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[MergeEvent] {
        &self.merges
    }

    pub fn censor_time(&self) -> f64 {
        self.censor_time
    }

    pub fn is_complete(&self) -> bool {
        self.n == 0 || self.merges.len() == self.n - 1
    }

    /// Number of `eps`-balls needed to cover the leaves: the block count once
    /// every merge at time `<= eps` is applied.
    pub fn covering_number(&self, eps: f64) -> Result<usize> {
        if !(eps > 0.0) {
            return invalid(format!("eps must be > 0, got {eps}"));
        }
        Ok(self.n - self.merges.partition_point(|m| m.time <= eps))
    }

    /// Dense coalescence-time matrix; unmerged pairs get the censor time.
    pub fn ultrametric(&self) -> UltrametricMatrix {
        let n = self.n;
        let mut tau = vec![self.censor_time; n * n];
        let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        let mut uf = UnionFind::new(n);
        for m in &self.merges {
            let (a, b) = (uf.find(m.survivor), uf.find(m.absorbed));
            let moved = std::mem::take(&mut members[b]);
            for &x in &members[a] {
                for &y in &moved {
                    tau[x * n + y] = m.time;
                    tau[y * n + x] = m.time;
                }
            }
            members[a].extend(moved);
            uf.parent[b] = a;
        }
        for i in 0..n {
            tau[i * n + i] = 0.0;
        }
        UltrametricMatrix::from_parts_unchecked(n, tau, self.censor_time)
    }

    pub(crate) fn shape(&self) -> TreeShape {
        let n = self.n;
        let total = n + self.merges.len();
        let mut parent = vec![None; total];
        let mut height = vec![0.0; total];
        let mut node_of: Vec<usize> = (0..n).collect();
        let mut uf = UnionFind::new(n);
        for (k, m) in self.merges.iter().enumerate() {
            let id = n + k;
            let (a, b) = (uf.find(m.survivor), uf.find(m.absorbed));
            parent[node_of[a]] = Some(id);
            parent[node_of[b]] = Some(id);
            height[id] = m.time;
            uf.parent[b] = a;
            node_of[a] = id;
        }
        TreeShape {
            n,
            parent,
            height,
            roots: n - self.merges.len(),
        }
    }

    /// Slope of `ln N(eps)` against `ln(1/eps)`.
    ///
    /// Needs at least five distinct radii in `(0, censor_time)`.
    pub fn dimension_estimate(&self, eps_grid: &[f64]) -> Result<DimensionEstimate> {
        let mut eps = eps_grid.to_vec();
        if eps.iter().any(|&e| !(e > 0.0 && e < self.censor_time)) {
            return invalid("radii must lie strictly between 0 and the censor time");
        }
        eps.sort_by(f64::total_cmp);
        eps.dedup();
        if eps.len() < 5 {
            return invalid(format!("need at least 5 distinct radii, got {}", eps.len()));
        }
        let points = eps
            .iter()
            .map(|&e| Ok((e, self.covering_number(e)?)))
            .collect::<Result<Vec<_>>>()?;
        let xs: Vec<f64> = points.iter().map(|p| -p.0.ln()).collect();
        let ys: Vec<f64> = points.iter().map(|p| (p.1 as f64).ln()).collect();
        let f = linear_fit(&xs, &ys)?;
        Ok(DimensionEstimate {
            slope: f.slope,
            slope_se: f.slope_se,
            intercept: f.intercept,
            r_squared: f.r_squared,
            band: (f.slope - 1.96 * f.slope_se, f.slope + 1.96 * f.slope_se),
            points,
        })
    }
}

/// Single-linkage dendrogram of a coalescence-time matrix.
///
/// Fails with a witness triple `(i, j, k)`, `τ_ij > max(τ_ik, τ_kj)`, when the
/// matrix is not an ultrametric to within `1e-9`.
pub fn build_dendrogram(m: &UltrametricMatrix) -> Result<Dendrogram> {
    let n = m.n();
    let censor = m.censor_time();
    // Prim's algorithm on the dense matrix
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n.saturating_sub(1));
    if n > 1 {
        let mut in_tree = vec![false; n];
        let mut best = vec![f64::INFINITY; n];
        let mut from = vec![0usize; n];
        in_tree[0] = true;
        for j in 1..n {
            best[j] = m.get(0, j);
        }
        for _ in 1..n {
            let (v, _) = (0..n)
                .filter(|&j| !in_tree[j])
                .map(|j| (j, best[j]))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("a vertex remains");
            in_tree[v] = true;
            edges.push((best[v], from[v].min(v), from[v].max(v)));
            for j in 0..n {
                if !in_tree[j] && m.get(v, j) < best[j] {
                    best[j] = m.get(v, j);
                    from[j] = v;
                }
            }
        }
    }
    let mut sorted = edges.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut uf = UnionFind::new(n);
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut merges = Vec::new();
    for &(w, u, v) in &sorted {
        if w >= censor {
            continue;
        }
        let (a, b) = (uf.find(u), uf.find(v));
        for &x in &members[a] {
            for &y in &members[b] {
                if m.get(x, y) > w + MATCH_TOL {
                    return Err(witness(m, &edges, x, y));
                }
            }
        }
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        uf.parent[b] = a;
        merges.push(MergeEvent {
            time: w,
            survivor: u,
            absorbed: v,
        });
    }
    Dendrogram::from_merges(n, merges, censor)
}

/// Walk the spanning-tree path from `a` to `b`, whose edges are all shorter
/// than `τ_ab`, to the first vertex that is too far from `a`.
fn witness(m: &UltrametricMatrix, edges: &[(f64, usize, usize)], a: usize, b: usize) -> Error {
    let n = m.n();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(_, u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut prev = vec![usize::MAX; n];
    let mut queue = VecDeque::from([a]);
    prev[a] = a;
    while let Some(x) = queue.pop_front() {
        if x == b {
            break;
        }
        for &y in &adj[x] {
            if prev[y] == usize::MAX {
                prev[y] = x;
                queue.push_back(y);
            }
        }
    }
    let mut path = vec![b];
    while *path.last().unwrap() != a {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    let c = path
        .windows(2)
        .map(|w| m.get(w[0], w[1]))
        .fold(0.0f64, f64::max);
    let j = (1..path.len())
        .find(|&j| m.get(a, path[j]) > c + MATCH_TOL)
        .unwrap_or(path.len() - 1);
    let (far, mid) = (path[j], path[j - 1]);
    Error::UltrametricViolation {
        i: a,
        j: far,
        k: mid,
        excess: m.get(a, far) - m.get(a, mid).max(m.get(mid, far)),
    }
}

/// Balanced binary tree on `2^depth` leaves where leaves whose indices first
/// differ in bit `j` (counted from the top, starting at 0) merge at `4^{-j}`.
pub fn synthetic_binary_tree(depth: u32) -> Result<Dendrogram> {
    if !(1..=14).contains(&depth) {
        return invalid(format!("depth must be in 1..=14, got {depth}"));
    }
    let n = 1usize << depth;
    let mut merges = Vec::with_capacity(n - 1);
    for j in (0..depth).rev() {
        let time = 4f64.powi(-(j as i32));
        let span = 1usize << (depth - j);
        for block in 0..(n / span) {
            let left = block * span;
            merges.push(MergeEvent {
                time,
                survivor: left,
                absorbed: left + span / 2,
            });
        }
    }
    Dendrogram::from_merges(n, merges, 1.0)
}
