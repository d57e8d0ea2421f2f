use serde::{Deserialize, Serialize};

use super::dendrogram::Dendrogram;
use super::simplex::{minimize_quadratic, MinimizerOptions, QuadraticForm, SimplexMinimum};
use crate::error::{invalid, Error, Result};

/// Non-increasing gauge `f` with `f(0) = ∞` (except the constant gauge).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gauge {
    /// `r ↦ r^{-β}`, `β ≥ 0`.
    Power { beta: f64 },
    /// Linear interpolation through `(r, f(r))` knots with increasing `r`,
    /// held constant outside them.
    Tabulated { knots: Vec<(f64, f64)> },
}

impl Gauge {
    pub fn power(beta: f64) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return invalid(format!("beta must be >= 0, got {beta}"));
        }
        Ok(Self::Power { beta })
    }

    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return invalid("a tabulated gauge needs knots");
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) || w[1].1 > w[0].1 {
                return invalid("knots must have increasing r and non-increasing values");
            }
        }
        if knots.iter().any(|k| !(k.0 >= 0.0 && k.1.is_finite() && k.1 >= 0.0)) {
            return invalid("knots must be finite and non-negative");
        }
        Ok(Self::Tabulated { knots })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::Power { beta } => {
                if *beta == 0.0 {
                    1.0
                } else {
                    r.powf(-beta)
                }
            }
            Self::Tabulated { knots } => {
                let i = knots.partition_point(|k| k.0 <= r);
                if i == 0 {
                    knots[0].1
                } else if i == knots.len() {
                    knots[i - 1].1
                } else {
                    let (a, b) = (knots[i - 1], knots[i]);
                    a.1 + (b.1 - a.1) * (r - a.0) / (b.0 - a.0)
                }
            }
        }
    }
}

pub(crate) fn check_masses(masses: &[f64], n: usize) -> Result<()> {
    if masses.len() != n {
        return Err(Error::NotOnSimplex(format!("expected {n} masses, got {}", masses.len())));
    }
    if masses.iter().any(|&m| !(m >= 0.0 && m.is_finite())) {
        return Err(Error::NotOnSimplex("masses must be finite and non-negative".into()));
    }
    let total: f64 = masses.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotOnSimplex(format!("masses sum to {total}")));
    }
    Ok(())
}

/// `Σ_{i≠j} m_i m_j f(τ_ij)`, unmerged pairs at the censor time.
pub fn tree_energy(d: &Dendrogram, masses: &[f64], g: &Gauge) -> Result<f64> {
    let n = d.leaf_count();
    check_masses(masses, n)?;
    let mut mass = masses.to_vec();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut energy = 0.0;
    for m in d.merges() {
        let (a, b) = (find(&mut parent, m.survivor), find(&mut parent, m.absorbed));
        let cross = mass[a] * mass[b];
        if cross > 0.0 {
            energy += 2.0 * cross * g.eval(m.time);
        }
        mass[a] += mass[b];
        parent[b] = a;
    }
    if !d.is_complete() {
        let roots: Vec<usize> = (0..n).filter(|&i| find(&mut parent, i) == i).collect();
        let total: f64 = roots.iter().map(|&r| mass[r]).sum();
        let inner: f64 = roots.iter().map(|&r| mass[r] * mass[r]).sum();
        let cross = total * total - inner;
        if cross > 0.0 {
            energy += cross * g.eval(d.censor_time());
        }
    }
    Ok(energy)
}

/// `f(τ_ij)` off the diagonal and `f(h_i / 2)` on it, where `h_i` is the time
/// leaf `i` first merges.
///
/// Stored as a sum of non-negative multiples of the indicator matrices of the
/// tree's clusters, which makes it positive semidefinite and lets a product
/// run in linear time.
struct TreeKernel {
    n: usize,
    parent: Vec<Option<usize>>,
    weight: Vec<f64>,
    /// Value shared by pairs in different components.
    floor: f64,
}

impl TreeKernel {
    fn new(d: &Dendrogram, g: &Gauge) -> Result<Self> {
        let shape = d.shape();
        let n = shape.n;
        let total = shape.parent.len();
        let floor = if shape.roots > 1 { g.eval(d.censor_time()) } else { 0.0 };
        let mut value = vec![0.0; total];
        for (v, &h) in value.iter_mut().zip(&shape.height).skip(n) {
            *v = g.eval(h);
        }
        for i in 0..n {
            let h = shape.parent[i].map_or(d.censor_time(), |p| shape.height[p]);
            value[i] = g.eval(h / 2.0);
        }
        if value.iter().any(|v| !v.is_finite()) {
            return invalid("gauge is infinite at a merge time; leaves must merge at positive times");
        }
        let weight = (0..total)
            .map(|c| value[c] - shape.parent[c].map_or(floor, |p| value[p]))
            .collect();
        Ok(Self {
            n,
            parent: shape.parent,
            weight,
            floor,
        })
    }
}

impl QuadraticForm for TreeKernel {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let total = self.parent.len();
        let mut mass = vec![0.0; total];
        mass[..self.n].copy_from_slice(x);
        for c in 0..total {
            if let Some(p) = self.parent[c] {
                mass[p] += mass[c];
            }
        }
        let mut acc = vec![0.0; total];
        for c in (0..total).rev() {
            let above = self.parent[c].map_or(0.0, |p| acc[p]);
            acc[c] = above + self.weight[c] * mass[c];
        }
        let shared = self.floor * x.iter().sum::<f64>();
        for (o, a) in out.iter_mut().zip(&acc) {
            *o = a + shared;
        }
    }
}

/// Dense kernel on points of the line, with the same diagonal convention as
/// [`TreeKernel`] using nearest-neighbour distances.
pub(crate) struct LineKernel {
    n: usize,
    g: Vec<f64>,
}

impl LineKernel {
    pub(crate) fn new(points: &[f64], gauge: &Gauge) -> Result<Self> {
        let n = points.len();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            let mut nearest = f64::INFINITY;
            for j in 0..n {
                if i != j {
                    let d = (points[i] - points[j]).abs();
                    nearest = nearest.min(d);
                    g[i * n + j] = gauge.eval(d);
                }
            }
            g[i * n + i] = if n == 1 { f64::INFINITY } else { gauge.eval(nearest / 2.0) };
        }
        if n > 1 && g.iter().any(|v| !v.is_finite()) {
            return invalid("points must be distinct");
        }
        Ok(Self { n, g })
    }
}

impl QuadraticForm for LineKernel {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.g.chunks_exact(self.n)) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// Minimum of the completed energy over probability vectors on the leaves.
///
/// The completed energy adds `Σ m_i² f(h_i / 2)` to [`tree_energy`]: each leaf
/// stands for a small ball of radius about half its first-merge time. Without
/// that term the energy is not convex on the simplex and a point mass would
/// have zero energy.
pub fn capacity_with(d: &Dendrogram, g: &Gauge, opts: MinimizerOptions) -> Result<(f64, SimplexMinimum)> {
    if d.leaf_count() == 0 {
        return invalid("the tree has no leaves");
    }
    if d.leaf_count() == 1 {
        let m = SimplexMinimum {
            masses: vec![1.0],
            energy: f64::INFINITY,
            gap: 0.0,
            iterations: 0,
        };
        return Ok((0.0, m));
    }
    let k = TreeKernel::new(d, g)?;
    let min = minimize_quadratic(&k, opts)?;
    Ok((1.0 / min.energy, min))
}

/// `1 / min E`, with the convention that a single leaf has capacity 0.
pub fn capacity_estimate(d: &Dendrogram, g: &Gauge) -> Result<f64> {
    capacity_with(d, g, MinimizerOptions::default()).map(|r| r.0)
}

/// Capacity of a finite point set on the line under the same convention.
pub(crate) fn line_capacity(points: &[f64], g: &Gauge, opts: MinimizerOptions) -> Result<f64> {
    if points.len() <= 1 {
        return Ok(0.0);
    }
    let k = LineKernel::new(points, g)?;
    Ok(1.0 / minimize_quadratic(&k, opts)?.energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuum::MergeEvent;

    fn pair(r: f64) -> Dendrogram {
        Dendrogram::from_merges(
            2,
            vec![MergeEvent {
                time: r,
                survivor: 0,
                absorbed: 1,
            }],
            2.0 * r,
        )
        .unwrap()
    }

    #[test]
    fn two_leaf_energy_and_capacity() {
        let g = Gauge::power(0.5).unwrap();
        assert!((tree_energy(&pair(1.0), &[0.5, 0.5], &g).unwrap() - 0.5).abs() < 1e-15);
        let r: f64 = 0.3;
        let cap = capacity_estimate(&pair(r), &g).unwrap();
        let exact = 2.0 / (g.eval(r / 2.0) + g.eval(r));
        assert!((cap - exact).abs() < 1e-7 * exact);
    }

    #[test]
    fn constant_gauge() {
        let g = Gauge::power(0.0).unwrap();
        let d = pair(1.0);
        let m = [0.25, 0.75];
        let e = tree_energy(&d, &m, &g).unwrap();
        assert!((e - (1.0 - 0.25 * 0.25 - 0.75 * 0.75)).abs() < 1e-15);
        assert!((capacity_estimate(&d, &g).unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn kernel_product_matches_dense() {
        let d = crate::tree::synthetic_binary_tree(3).unwrap();
        let g = Gauge::power(0.4).unwrap();
        let k = TreeKernel::new(&d, &g).unwrap();
        let tau = d.ultrametric();
        let x: Vec<f64> = (0..8).map(|i| (i as f64 + 1.0) / 36.0).collect();
        let mut out = vec![0.0; 8];
        k.apply(&x, &mut out);
        for i in 0..8 {
            let mut want = 0.0;
            for j in 0..8 {
                want += x[j] * if i == j { g.eval(0.25f64.powi(2) / 2.0) } else { g.eval(tau.get(i, j)) };
            }
            assert!((out[i] - want).abs() < 1e-12, "{i}: {} vs {want}", out[i]);
        }
    }

    #[test]
    fn forest_uses_censor_for_unmerged_pairs() {
        let d = Dendrogram::from_merges(3, vec![MergeEvent { time: 0.5, survivor: 0, absorbed: 1 }], 1.0).unwrap();
        let g = Gauge::power(1.0).unwrap();
        let m = [0.2, 0.3, 0.5];
        let e = tree_energy(&d, &m, &g).unwrap();
        let want = 2.0 * 0.2 * 0.3 * 2.0 + 2.0 * (0.2 + 0.3) * 0.5 * 1.0;
        assert!((e - want).abs() < 1e-14);
        let k = TreeKernel::new(&d, &g).unwrap();
        let mut out = vec![0.0; 3];
        k.apply(&m, &mut out);
        let quad: f64 = out.iter().zip(&m).map(|(a, b)| a * b).sum();
        let diag = 0.04 * g.eval(0.25) + 0.09 * g.eval(0.25) + 0.25 * g.eval(0.5);
        assert!((quad - diag - e).abs() < 1e-12);
    }

    #[test]
    fn simplex_checked() {
        let g = Gauge::power(0.5).unwrap();
        assert!(matches!(tree_energy(&pair(1.0), &[0.5, 0.6], &g), Err(Error::NotOnSimplex(_))));
        assert!(matches!(tree_energy(&pair(1.0), &[1.0], &g), Err(Error::NotOnSimplex(_))));
    }

    #[test]
    fn tabulated_gauge_interpolates() {
        let g = Gauge::tabulated(vec![(0.0, 4.0), (1.0, 2.0), (2.0, 1.0)]).unwrap();
        assert_eq!(g.eval(0.5), 3.0);
        assert_eq!(g.eval(5.0), 1.0);
        assert!(Gauge::tabulated(vec![(0.0, 1.0), (1.0, 2.0)]).is_err());
    }
}
