//! Max-affine under-approximation of convex Lipschitz targets by tangent planes on a grid.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::affine::{AffineFunctional, MaxAffineFn};
use crate::error::{Error, Result};
use crate::simplex::Evaluator;

pub type Subgradient = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Step for central finite differences when no analytic subgradient is given.
pub const FD_STEP: f64 = 1e-6;

#[derive(Clone)]
pub struct ConvexTarget {
    pub dim: usize,
    pub evaluator: Evaluator,
    /// Analytic subgradient; `None` falls back to central differences (smooth targets only).
    pub subgradient: Option<Subgradient>,
    pub lipschitz: f64,
}

impl std::fmt::Debug for ConvexTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvexTarget")
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .field("analytic_subgradient", &self.subgradient.is_some())
            .finish()
    }
}

impl ConvexTarget {
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.evaluator)(x)
    }

    pub fn subgradient_at(&self, x: &[f64]) -> Vec<f64> {
        match &self.subgradient {
            Some(g) => g(x),
            None => {
                let mut y = x.to_vec();
                (0..self.dim)
                    .map(|i| {
                        let xi = x[i];
                        y[i] = xi + FD_STEP;
                        let up = self.eval(&y);
                        y[i] = xi - FD_STEP;
                        let down = self.eval(&y);
                        y[i] = xi;
                        (up - down) / (2.0 * FD_STEP)
                    })
                    .collect()
            }
        }
    }

    /// Random midpoint-convexity test; returns the worst violation found (≤ 0 means none).
    pub fn spot_check_convexity(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..samples {
            let x: Vec<f64> = (0..self.dim).map(|_| rng.random()).collect();
            let y: Vec<f64> = (0..self.dim).map(|_| rng.random()).collect();
            let m: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
            let gap = self.eval(&m) - 0.5 * (self.eval(&x) + self.eval(&y));
            worst = worst.max(gap);
        }
        worst
    }
}

/// Largest `m` with `m^d ≤ k`.
pub fn grid_side(k: usize, d: usize) -> usize {
    let mut m = 1usize;
    while (m + 1).checked_pow(d as u32).is_some_and(|v| v <= k) {
        m += 1;
    }
    m
}

/// Cell-centre grid with `m` centres per axis, lattice order.
pub fn grid_centres(d: usize, m: usize) -> Vec<Vec<f64>> {
    let total = m.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            let mut x = vec![0.0; d];
            for k in (0..d).rev() {
                x[k] = ((idx % m) as f64 + 0.5) / m as f64;
                idx /= m;
            }
            x
        })
        .collect()
}

/// Tangent planes of `t` at the `⌊k^{1/d}⌋^d` grid centres, combined by max.
pub fn fit_max_affine(t: &ConvexTarget, k: usize) -> Result<MaxAffineFn> {
    if k < 1 {
        return Err(Error::InvalidArgument("need at least one piece (k ≥ 1)".into()));
    }
    let d = t.dim;
    let m = grid_side(k, d);
    let pieces: Vec<AffineFunctional> = grid_centres(d, m)
        .par_iter()
        .map(|c| {
            let fc = t.eval(c);
            let s = t.subgradient_at(c);
            let b = fc - s.iter().zip(c).map(|(si, ci)| si * ci).sum::<f64>();
            AffineFunctional::new(s, b)
        })
        .collect::<Result<_>>()?;
    MaxAffineFn::new(d, pieces)
}

/// `72 · L · d^{3/2} · k^{−2/d}`.
pub fn error_bound(lipschitz: f64, d: usize, k: usize) -> f64 {
    let d = d as f64;
    72.0 * lipschitz * d.powf(1.5) * (k as f64).powf(-2.0 / d)
}

/// Least-squares slope of `log(y)` against `log(x)`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
