use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric non-negative matrix available only through products.
pub(crate) trait QuadraticForm {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], out: &mut [f64]);
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizerOptions {
    /// Stop once the Frank-Wolfe gap, an upper bound on the excess energy,
    /// falls below this multiple of `max(1, energy)`.
    pub gap_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MinimizerOptions {
    fn default() -> Self {
        Self {
            gap_tolerance: 1e-8,
            max_iterations: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexMinimum {
    pub masses: Vec<f64>,
    pub energy: f64,
    pub gap: f64,
    pub iterations: usize,
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut shift = 0.0;
    for (j, &x) in u.iter().enumerate() {
        cum += x;
        let cand = (cum - 1.0) / (j as f64 + 1.0);
        if x - cand > 0.0 {
            shift = cand;
        }
    }
    v.iter().map(|&x| (x - shift).max(0.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest support for which the exact face solve is attempted.
const POLISH_MAX: usize = 512;

/// How often the face solve is retried while the support keeps changing.
const POLISH_EVERY: usize = 64;

/// Minimiser of `xᵀGx` on the face of the simplex spanned by `support`, if
/// it lies inside that face: solve `G_SS w = 1` and rescale.
fn solve_on_face<K: QuadraticForm>(k: &K, support: &[usize]) -> Option<Vec<f64>> {
    let n = k.dim();
    let s = support.len();
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    let mut g = nalgebra::DMatrix::<f64>::zeros(s, s);
    for (c, &j) in support.iter().enumerate() {
        e[j] = 1.0;
        k.apply(&e, &mut col);
        e[j] = 0.0;
        for (r, &i) in support.iter().enumerate() {
            g[(r, c)] = col[i];
        }
    }
    let w = g.lu().solve(&nalgebra::DVector::from_element(s, 1.0))?;
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || w.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let mut x = vec![0.0; n];
    for (&i, &v) in support.iter().zip(w.iter()) {
        x[i] = v / total;
    }
    Some(x)
}

/// Minimise `xᵀGx` over the simplex by accelerated projected gradient with
/// adaptive restart. The step is `1/L` with `L = 2 · max row sum ≥ 2 λ_max(G)`.
///
/// Once the iterates settle on a face, the minimiser on that face is solved
/// for directly and accepted if it passes the same gap test.
pub(crate) fn minimize_quadratic<K: QuadraticForm>(k: &K, opts: MinimizerOptions) -> Result<SimplexMinimum> {
    let n = k.dim();
    let mut gx = vec![0.0; n];
    let mut x = vec![1.0 / n as f64; n];
    if n == 1 {
        k.apply(&x, &mut gx);
        return Ok(SimplexMinimum {
            energy: gx[0],
            masses: x,
            gap: 0.0,
            iterations: 0,
        });
    }
    k.apply(&vec![1.0; n], &mut gx);
    let lipschitz = 2.0 * gx.iter().cloned().fold(0.0, f64::max);
    let mut y = x.clone();
    let mut gy = vec![0.0; n];
    k.apply(&x, &mut gx);
    let mut fx = dot(&x, &gx);
    let mut momentum = 1.0f64;
    let mut gap = f64::INFINITY;
    let mut tried: Vec<usize> = Vec::new();
    let mut polish = vec![0.0; n];
    for it in 1..=opts.max_iterations {
        k.apply(&y, &mut gy);
        let step: Vec<f64> = y.iter().zip(&gy).map(|(yi, gi)| yi - 2.0 * gi / lipschitz).collect();
        let x_new = project_to_simplex(&step);
        k.apply(&x_new, &mut gx);
        let f_new = dot(&x_new, &gx);
        let min_g = gx.iter().cloned().fold(f64::INFINITY, f64::min);
        gap = 2.0 * (f_new - min_g);
        if gap <= opts.gap_tolerance * f_new.max(1.0) {
            return Ok(SimplexMinimum {
                masses: x_new,
                energy: f_new,
                gap,
                iterations: it,
            });
        }
        if it % POLISH_EVERY == 0 {
            let support: Vec<usize> = (0..n).filter(|&i| x_new[i] > 0.0).collect();
            if support.len() <= POLISH_MAX && support != tried {
                if let Some(p) = solve_on_face(k, &support) {
                    k.apply(&p, &mut polish);
                    let f = dot(&p, &polish);
                    let pgap = 2.0 * (f - polish.iter().cloned().fold(f64::INFINITY, f64::min));
                    if pgap <= opts.gap_tolerance * f.max(1.0) {
                        return Ok(SimplexMinimum {
                            masses: p,
                            energy: f,
                            gap: pgap.max(0.0),
                            iterations: it,
                        });
                    }
                }
                tried = support;
            }
        }
        if f_new > fx {
            // restart: drop the momentum and retry from the last iterate
            momentum = 1.0;
            y.clone_from(&x);
            continue;
        }
        let next = (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0;
        let beta = (momentum - 1.0) / next;
        for i in 0..n {
            y[i] = x_new[i] + beta * (x_new[i] - x[i]);
        }
        x = x_new;
        fx = f_new;
        momentum = next;
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dense(Vec<Vec<f64>>);

    impl QuadraticForm for Dense {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[f64], out: &mut [f64]) {
            for (o, row) in out.iter_mut().zip(&self.0) {
                *o = dot(row, x);
            }
        }
    }

    #[test]
    fn projection_lands_on_simplex() {
        let p = project_to_simplex(&[0.5, 2.0, -1.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p, vec![0.0, 1.0, 0.0]);
        let q = project_to_simplex(&[0.2, 0.3, 0.5]);
        assert!(q.iter().zip([0.2, 0.3, 0.5]).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn diagonal_minimum_is_harmonic() {
        // min Σ d_i x_i² on the simplex is 1 / Σ (1/d_i)
        let d = [1.0, 2.0, 4.0];
        let g = Dense((0..3).map(|i| (0..3).map(|j| if i == j { d[i] } else { 0.0 }).collect()).collect());
        let r = minimize_quadratic(&g, MinimizerOptions::default()).unwrap();
        let exact = 1.0 / d.iter().map(|x| 1.0 / x).sum::<f64>();
        assert!((r.energy - exact).abs() < 1e-8);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let g = Dense(vec![vec![1.0, 0.0], vec![0.0, 3.0]]);
        let opts = MinimizerOptions {
            gap_tolerance: 0.0,
            max_iterations: 3,
        };
        assert!(matches!(
            minimize_quadratic(&g, opts),
            Err(Error::NonConvergence { iterations: 3, .. })
        ));
    }
}
