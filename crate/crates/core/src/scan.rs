//! Point sets on `[0,1]^d` for measuring sup-norm errors.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scan {
    /// `per_axis^d` points on a uniform grid including the cube faces.
    Grid { per_axis: usize },
    /// `count` uniform points from a seeded ChaCha8 stream.
    Random { count: usize, seed: u64 },
}

impl Scan {
    /// Dense grid with roughly 10^4 points.
    pub fn default_for(dim: usize) -> Self {
        let per_axis = (10f64.powf(4.0 / dim as f64).floor() as usize + 1).max(2);
        Scan::Grid { per_axis }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            Scan::Random { count, .. } => Scan::Random { count, seed },
            grid => grid,
        }
    }

    pub fn point_count(&self, dim: usize) -> u128 {
        match *self {
            Scan::Grid { per_axis } => (per_axis as u128).pow(dim as u32),
            Scan::Random { count, .. } => count as u128,
        }
    }

    pub fn points(&self, dim: usize) -> Vec<Vec<f64>> {
        match *self {
            Scan::Grid { per_axis } => {
                let total = per_axis.pow(dim as u32);
                let step = if per_axis > 1 { 1.0 / (per_axis - 1) as f64 } else { 0.0 };
                (0..total)
                    .map(|mut idx| {
                        let mut x = vec![0.0; dim];
                        for k in (0..dim).rev() {
                            x[k] = (idx % per_axis) as f64 * step;
                            idx /= per_axis;
                        }
                        x
                    })
                    .collect()
            }
            Scan::Random { count, seed } => random_points(dim, count, seed),
        }
    }
}

pub fn random_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect()
}

impl fmt::Display for Scan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scan::Grid { per_axis } => write!(f, "grid:{per_axis}"),
            Scan::Random { count, seed } => write!(f, "random:{count},seed={seed}"),
        }
    }
}

impl FromStr for Scan {
    type Err = Error;

    /// Accepts `grid:N`, `random:COUNT` and `random:COUNT,seed=S`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("scan {s:?}: expected grid:N or random:COUNT[,seed=S]"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "grid" => {
                let per_axis: usize = rest.trim().parse().map_err(|_| bad())?;
                if per_axis < 1 {
                    return Err(bad());
                }
                Ok(Scan::Grid { per_axis })
            }
            "random" => {
                let mut parts = rest.split(',');
                let count = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
                let mut seed = 0;
                for p in parts {
                    let v = p.trim().strip_prefix("seed=").ok_or_else(bad)?;
                    seed = v.parse().map_err(|_| bad())?;
                }
                Ok(Scan::Random { count, seed })
            }
            _ => Err(bad()),
        }
    }
}

/// Largest `|a(x) − b(x)|` over the points, with the maximising point.
#[derive(Debug, Clone, PartialEq)]
pub struct SupError {
    pub value: f64,
    pub at: Vec<f64>,
}

pub fn sup_error<A, B>(points: &[Vec<f64>], a: A, b: B) -> SupError
where
    A: Fn(&[f64]) -> f64 + Sync,
    B: Fn(&[f64]) -> f64 + Sync,
{
    points
        .par_iter()
        .map(|x| ((a(x) - b(x)).abs(), x))
        .reduce_with(|p, q| if q.0 > p.0 || (q.0.is_nan() && !p.0.is_nan()) { q } else { p })
        .map(|(value, at)| SupError {
            value,
            at: at.clone(),
        })
        .unwrap_or(SupError {
            value: 0.0,
            at: Vec::new(),
        })
}
