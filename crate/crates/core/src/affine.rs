//! Affine maps, max-affine functions and differences of max-affine functions.
//!
//! Everything here is plain `f64` arithmetic. The max-affine evaluators are direct scans over
//! the pieces and serve as the reference oracle for every compiled network.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// An affine map `x ↦ Wx + b` from `ℝ^cols` to `ℝ^rows`, weights stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl AffineMap {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != rows * cols {
            return Err(Error::dim("affine map weights", rows * cols, weights.len()));
        }
        if bias.len() != rows {
            return Err(Error::dim("affine map bias", rows, bias.len()));
        }
        check_finite(&weights, "affine map weights")?;
        check_finite(&bias, "affine map bias")?;
        Ok(Self {
            rows,
            cols,
            weights,
            bias,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            weights[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            weights,
            bias: vec![0.0; n],
        }
    }

    /// Builds a map whose `i`-th output row is the `i`-th functional.
    pub fn from_functionals(cols: usize, rows: &[AffineFunctional]) -> Result<Self> {
        let mut weights = Vec::with_capacity(rows.len() * cols);
        let mut bias = Vec::with_capacity(rows.len());
        for (i, f) in rows.iter().enumerate() {
            if f.dim() != cols {
                return Err(Error::dim(format!("functional row {i}"), cols, f.dim()));
            }
            weights.extend_from_slice(&f.a);
            bias.push(f.b);
        }
        Self::new(rows.len(), cols, weights, bias)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.weights[row * self.cols..(row + 1) * self.cols]
    }

    pub fn parameter_count(&self) -> usize {
        self.rows * self.cols + self.rows
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::dim("affine map input", self.cols, x.len()));
        }
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| {
                let row = self.row(r);
                row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias[r]
            })
            .collect()
    }

    /// Returns `self ∘ inner`, i.e. the map `x ↦ self(inner(x))`.
    pub fn compose(&self, inner: &AffineMap) -> Result<AffineMap> {
        if self.cols != inner.rows {
            return Err(Error::dim("affine composition", self.cols, inner.rows));
        }
        let (m, k, n) = (self.rows, self.cols, inner.cols);
        let mut weights = vec![0.0; m * n];
        let mut bias = self.bias.clone();
        for i in 0..m {
            for l in 0..k {
                let w = self.weights[i * k + l];
                if w == 0.0 {
                    continue;
                }
                for j in 0..n {
                    weights[i * n + j] += w * inner.weights[l * n + j];
                }
                bias[i] += w * inner.bias[l];
            }
        }
        AffineMap::new(m, n, weights, bias)
    }
}

/// Free-function form of [`AffineMap::compose`]: `outer ∘ inner`.
pub fn compose_affine(outer: &AffineMap, inner: &AffineMap) -> Result<AffineMap> {
    outer.compose(inner)
}

/// A scalar affine functional `x ↦ ⟨a, x⟩ + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFunctional {
    pub a: Vec<f64>,
    pub b: f64,
}

impl AffineFunctional {
    pub fn new(a: Vec<f64>, b: f64) -> Result<Self> {
        check_finite(&a, "affine functional gradient")?;
        check_finite(&[b], "affine functional offset")?;
        Ok(Self { a, b })
    }

    pub fn constant(dim: usize, b: f64) -> Self {
        Self { a: vec![0.0; dim], b }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Evaluates without a dimension check; callers guarantee `x.len() == self.dim()`.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.a.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + self.b
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b + c,
        }
    }

    /// Exact `(min, max)` over `[0,1]^d`, attained at the sign-pattern vertices.
    pub fn cube_bounds(&self) -> (f64, f64) {
        let lo = self.b + self.a.iter().map(|&a| a.min(0.0)).sum::<f64>();
        let hi = self.b + self.a.iter().map(|&a| a.max(0.0)).sum::<f64>();
        (lo, hi)
    }

    /// Cube vertex where the minimum is attained (`x_i = 1` iff `a_i < 0`).
    pub fn argmin_vertex(&self) -> Vec<f64> {
        self.a.iter().map(|&a| if a < 0.0 { 1.0 } else { 0.0 }).collect()
    }

    pub fn argmax_vertex(&self) -> Vec<f64> {
        self.a.iter().map(|&a| if a > 0.0 { 1.0 } else { 0.0 }).collect()
    }
}

/// Exact `(min, max)` of `f` over `[0,1]^d`.
pub fn cube_bounds(f: &AffineFunctional) -> (f64, f64) {
    f.cube_bounds()
}

/// Pointwise maximum of finitely many affine functionals; convex by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MaxAffineDoc", into = "MaxAffineDoc")]
pub struct MaxAffineFn {
    dim: usize,
    pieces: Vec<AffineFunctional>,
}

#[derive(Serialize, Deserialize)]
struct MaxAffineDoc {
    dim: usize,
    pieces: Vec<AffineFunctional>,
}

impl TryFrom<MaxAffineDoc> for MaxAffineFn {
    type Error = Error;
    fn try_from(doc: MaxAffineDoc) -> Result<Self> {
        MaxAffineFn::new(doc.dim, doc.pieces)
    }
}

impl From<MaxAffineFn> for MaxAffineDoc {
    fn from(f: MaxAffineFn) -> Self {
        MaxAffineDoc {
            dim: f.dim,
            pieces: f.pieces,
        }
    }
}

impl MaxAffineFn {
    pub fn new(dim: usize, pieces: Vec<AffineFunctional>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("max-affine dimension must be ≥ 1".into()));
        }
        if pieces.is_empty() {
            return Err(Error::InvalidArgument("max-affine function needs at least one piece".into()));
        }
        for (i, p) in pieces.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::dim(format!("piece {i}"), dim, p.dim()));
            }
            check_finite(&p.a, "max-affine piece")?;
            check_finite(&[p.b], "max-affine piece")?;
        }
        Ok(Self { dim, pieces })
    }

    /// The identically-zero function on `ℝ^dim`.
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            pieces: vec![AffineFunctional::constant(dim, 0.0)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> &[AffineFunctional] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::dim("max-affine input", self.dim, x.len()));
        }
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.eval(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Adds `c` to every piece.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            pieces: self.pieces.iter().map(|p| p.shifted(c)).collect(),
        }
    }

    /// Smallest per-piece cube minimum.
    pub fn min_piece_lower_bound(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.cube_bounds().0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Certified lower bound on the cube minimum: every piece is below the max.
    pub fn cube_lower_bound(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.cube_bounds().0)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Removes exact duplicates, keeping first occurrences in order.
    pub fn dedup(&self) -> Self {
        let mut seen = HashSet::new();
        let pieces = self
            .pieces
            .iter()
            .filter(|p| {
                let key: Vec<u64> = p.a.iter().chain(std::iter::once(&p.b)).map(|v| v.to_bits()).collect();
                seen.insert(key)
            })
            .cloned()
            .collect();
        Self {
            dim: self.dim,
            pieces,
        }
    }
}

/// Difference `g − h` of two max-affine functions on the same space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcFn {
    pub g: MaxAffineFn,
    pub h: MaxAffineFn,
}

impl DcFn {
    pub fn new(g: MaxAffineFn, h: MaxAffineFn) -> Result<Self> {
        if g.dim() != h.dim() {
            return Err(Error::dim("DC pair", g.dim(), h.dim()));
        }
        Ok(Self { g, h })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.g.eval(x)? - self.h.eval(x)?)
    }

    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.g.eval_unchecked(x) - self.h.eval_unchecked(x)
    }
}

/// Outcome of searching for a negative value of a function on the cube.
#[derive(Debug, Clone, PartialEq)]
pub enum Sign {
    /// Proven nonnegative from exact bounds.
    Certified,
    /// Found a cube point where the function is negative.
    Negative { point: Vec<f64>, value: f64 },
    /// Neither proven nor refuted.
    Unknown,
}

/// Checks `f ≥ 0` on `[0,1]^d`, first from a certified lower bound and then by searching for a
/// negative witness among cube vertices (up to 2^12 of them), the supplied hint points and a
/// seeded random sample.
pub fn nonnegativity<F>(dim: usize, lower_bound: f64, hints: &[Vec<f64>], f: F) -> Sign
where
    F: Fn(&[f64]) -> f64,
{
    if lower_bound >= 0.0 {
        return Sign::Certified;
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut consider = |x: Vec<f64>| {
        let v = f(&x);
        if v < 0.0 && best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((x, v));
        }
    };
    if dim <= 12 {
        for mask in 0u32..(1 << dim) {
            consider((0..dim).map(|i| ((mask >> i) & 1) as f64).collect());
        }
    }
    for h in hints {
        consider(h.iter().map(|v| v.clamp(0.0, 1.0)).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..4096 {
        consider((0..dim).map(|_| rng.random::<f64>()).collect());
    }
    match best {
        Some((point, value)) => Sign::Negative { point, value },
        None => Sign::Unknown,
    }
}

impl MaxAffineFn {
    /// Sign check for the max-affine function on the cube; hints are the per-piece minimisers.
    pub fn nonnegativity(&self) -> Sign {
        let hints: Vec<Vec<f64>> = self.pieces.iter().map(|p| p.argmin_vertex()).collect();
        nonnegativity(self.dim, self.cube_lower_bound(), &hints, |x| self.eval_unchecked(x))
    }
}

impl DcFn {
    pub fn nonnegativity(&self) -> Sign {
        let lower = self.g.cube_lower_bound()
            - self
                .h
                .pieces()
                .iter()
                .map(|p| p.cube_bounds().1)
                .fold(f64::NEG_INFINITY, f64::max);
        let hints: Vec<Vec<f64>> = self
            .g
            .pieces()
            .iter()
            .map(|p| p.argmin_vertex())
            .chain(self.h.pieces().iter().map(|p| p.argmax_vertex()))
            .collect();
        nonnegativity(self.dim(), lower, &hints, |x| self.eval_unchecked(x))
    }
}
