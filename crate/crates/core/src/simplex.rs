//! Piecewise-linear interpolation on the Kuhn triangulation of a uniform grid on `[0,1]^d`.
//!
//! The cube is split into `n^d` cells of side `δ = 1/n`, and each cell into the `d!` simplices
//! `{c + δt : 1 ≥ t_{π(1)} ≥ ⋯ ≥ t_{π(d)} ≥ 0}`, one per permutation `π`. The interpolant agrees
//! with the sampled function on the `(n+1)^d` lattice vertices and is affine on every simplex.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::affine::AffineFunctional;
use crate::error::{Error, Result};

/// Default cap on the number of lattice vertices.
pub const DEFAULT_VERTEX_BUDGET: u128 = 1 << 24;

pub type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A black-box target on `[0,1]^d`, optionally with a (Euclidean) Lipschitz constant.
#[derive(Clone)]
pub struct TargetFn {
    pub dim: usize,
    pub evaluator: Evaluator,
    pub lipschitz: Option<f64>,
}

impl std::fmt::Debug for TargetFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TargetFn")
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

impl TargetFn {
    pub fn new(dim: usize, lipschitz: Option<f64>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            dim,
            evaluator: Arc::new(f),
            lipschitz,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.evaluator)(x)
    }
}

/// One simplex of the triangulation: a cell corner and a coordinate ordering.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simplex {
    pub cell: Vec<usize>,
    pub perm: Vec<usize>,
}

impl Simplex {
    /// Lattice coordinates of the `d+1` vertices along the path `c, c+e_{π(1)}, …`.
    pub fn vertices(&self) -> Vec<Vec<usize>> {
        let mut v = self.cell.clone();
        let mut out = Vec::with_capacity(self.perm.len() + 1);
        out.push(v.clone());
        for &k in &self.perm {
            v[k] += 1;
            out.push(v.clone());
        }
        out
    }
}

/// All permutations of `0..d` in lexicographic order.
pub fn permutations(d: usize) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..d).collect();
    let mut out = vec![perm.clone()];
    loop {
        let Some(i) = (1..d).rev().find(|&i| perm[i - 1] < perm[i]) else {
            return out;
        };
        let j = (i..d).rev().find(|&j| perm[j] > perm[i - 1]).expect("exists");
        perm.swap(i - 1, j);
        perm[i..].reverse();
        out.push(perm.clone());
    }
}

/// Smallest grid resolution with simplex diameter `√d / n ≤ eps / L`.
pub fn resolution_for(dim: usize, lipschitz: f64, eps: f64) -> Result<usize> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if lipschitz <= 0.0 || !lipschitz.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Lipschitz constant must be positive, got {lipschitz}"
        )));
    }
    let n = (lipschitz * (dim as f64).sqrt() / eps).ceil();
    if n > 1e15 {
        return Err(Error::Resource {
            what: "grid resolution".into(),
            needed: u128::MAX,
            budget: DEFAULT_VERTEX_BUDGET,
        });
    }
    Ok((n as usize).max(1))
}

/// `d! / (L·eps)^d`: the simplex count obtained by taking the grid scale to be `ω(eps) = L·eps`.
pub fn modulus_scaled_simplex_count(dim: usize, lipschitz: f64, eps: f64) -> f64 {
    let fact: f64 = (1..=dim).map(|k| k as f64).product();
    fact / (lipschitz * eps).powi(dim as i32)
}

fn checked_vertex_count(dim: usize, n: usize, budget: u128) -> Result<usize> {
    let mut count: u128 = 1;
    for _ in 0..dim {
        count = count.saturating_mul(n as u128 + 1);
    }
    if count > budget {
        return Err(Error::Resource {
            what: format!("{dim}-dimensional lattice at resolution {n}"),
            needed: count,
            budget,
        });
    }
    Ok(count as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialInterpolant {
    dim: usize,
    n: usize,
    values: Vec<f64>,
}

impl SimplicialInterpolant {
    pub fn from_values(dim: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || n == 0 {
            return Err(Error::InvalidArgument("dimension and resolution must be ≥ 1".into()));
        }
        let count = checked_vertex_count(dim, n, u128::MAX)?;
        if values.len() != count {
            return Err(Error::dim("vertex values", count, values.len()));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("vertex values".into()));
        }
        Ok(Self { dim, n, values })
    }

    /// Samples `f` on the `(n+1)^d` lattice.
    pub fn from_fn<F>(dim: usize, n: usize, budget: u128, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        if dim == 0 || n == 0 {
            return Err(Error::InvalidArgument("dimension and resolution must be ≥ 1".into()));
        }
        let count = checked_vertex_count(dim, n, budget)?;
        let scale = 1.0 / n as f64;
        let values: Vec<f64> = (0..count)
            .into_par_iter()
            .map(|idx| {
                let x: Vec<f64> = lattice_coords(dim, n, idx)
                    .into_iter()
                    .map(|v| v as f64 * scale)
                    .collect();
                f(&x)
            })
            .collect();
        Self::from_values(dim, n, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per axis.
    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn simplex_count(&self) -> u128 {
        let fact: u128 = (1..=self.dim as u128).product();
        fact * (self.n as u128).pow(self.dim as u32)
    }

    /// Flat index of a lattice vertex, first coordinate most significant.
    pub fn vertex_index(&self, v: &[usize]) -> usize {
        v.iter().fold(0, |acc, &k| acc * (self.n + 1) + k)
    }

    pub fn vertex_value(&self, v: &[usize]) -> f64 {
        self.values[self.vertex_index(v)]
    }

    pub fn vertex_point(&self, v: &[usize]) -> Vec<f64> {
        v.iter().map(|&k| k as f64 / self.n as f64).collect()
    }

    /// Evaluates at `x`, clamping coordinates into `[0,1]`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval_clamped(x)?.0)
    }

    /// Evaluates at `x`; the flag reports whether any coordinate had to be clamped.
    pub fn eval_clamped(&self, x: &[f64]) -> Result<(f64, bool)> {
        if x.len() != self.dim {
            return Err(Error::dim("interpolant input", self.dim, x.len()));
        }
        let clamped = x.iter().any(|&v| !(0.0..=1.0).contains(&v));
        let (cell, frac) = self.locate(x);
        let mut order: Vec<usize> = (0..self.dim).collect();
        order.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]));

        let mut v = cell;
        let mut prev = 1.0;
        let mut acc = 0.0;
        for &k in &order {
            acc += (prev - frac[k]) * self.vertex_value(&v);
            prev = frac[k];
            v[k] += 1;
        }
        acc += prev * self.vertex_value(&v);
        Ok((acc, clamped))
    }

    /// Cell corner and fractional coordinates of a (clamped) point.
    fn locate(&self, x: &[f64]) -> (Vec<usize>, Vec<f64>) {
        let n = self.n as f64;
        let mut cell = Vec::with_capacity(self.dim);
        let mut frac = Vec::with_capacity(self.dim);
        for &xi in x {
            let s = xi.clamp(0.0, 1.0) * n;
            // Snap rounding noise so that lattice points evaluate to their vertex values exactly.
            let r = s.round();
            let s = if (s - r).abs() <= 4.0 * f64::EPSILON * n { r } else { s };
            let c = (s.floor() as usize).min(self.n - 1);
            cell.push(c);
            frac.push((s - c as f64).clamp(0.0, 1.0));
        }
        (cell, frac)
    }

    /// The simplex containing `x` (ties broken towards lower coordinate index first).
    pub fn simplex_of(&self, x: &[f64]) -> Simplex {
        let (cell, frac) = self.locate(x);
        let mut perm: Vec<usize> = (0..self.dim).collect();
        perm.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]));
        Simplex { cell, perm }
    }

    /// Every simplex of the triangulation, cells in lattice order.
    pub fn simplices(&self) -> Vec<Simplex> {
        let perms = permutations(self.dim);
        let cells = self.n.pow(self.dim as u32);
        let mut out = Vec::with_capacity(cells * perms.len());
        for idx in 0..cells {
            let cell = lattice_coords(self.dim, self.n - 1, idx);
            for p in &perms {
                out.push(Simplex {
                    cell: cell.clone(),
                    perm: p.clone(),
                });
            }
        }
        out
    }

    /// The affine function agreeing with the interpolant on simplex `s`.
    pub fn affine_piece(&self, s: &Simplex) -> AffineFunctional {
        let n = self.n as f64;
        let verts = s.vertices();
        let mut a = vec![0.0; self.dim];
        for (j, &k) in s.perm.iter().enumerate() {
            a[k] = (self.vertex_value(&verts[j + 1]) - self.vertex_value(&verts[j])) * n;
        }
        let base = self.vertex_value(&verts[0]);
        let b = base - a.iter().zip(&s.cell).map(|(ai, &c)| ai * c as f64 / n).sum::<f64>();
        AffineFunctional { a, b }
    }

    /// Adds a function to the vertex values (useful when `f` is affine on every simplex).
    pub fn add_fn<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let values: Vec<f64> = self
            .values
            .par_iter()
            .enumerate()
            .map(|(idx, v)| {
                let p = self.vertex_point(&lattice_coords(self.dim, self.n, idx));
                v + f(&p)
            })
            .collect();
        Self::from_values(self.dim, self.n, values)
    }

    /// Text form: `d n` on the first line, then one value per line in lattice order.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.dim, self.n);
        for v in &self.values {
            writeln!(s, "{v}").expect("writing to a String");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut header = |name: &str| -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::Parse(format!("vertex file: missing header field {name}")))?
                .parse()
                .map_err(|e| Error::Parse(format!("vertex file: header field {name}: {e}")))
        };
        let dim = header("d")?;
        let n = header("n")?;
        let values = tokens
            .enumerate()
            .map(|(i, t)| {
                t.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("vertex file: value {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_values(dim, n, values)
    }
}

/// Lattice coordinates (each in `0..=n`) of flat index `idx`.
pub fn lattice_coords(dim: usize, n: usize, mut idx: usize) -> Vec<usize> {
    let mut v = vec![0; dim];
    for k in (0..dim).rev() {
        v[k] = idx % (n + 1);
        idx /= n + 1;
    }
    v
}

/// Samples `f` on the grid sized so that `‖f − f_ε‖ ≤ eps` for `L`-Lipschitz `f`.
pub fn build_interpolant(f: &TargetFn, eps: f64, budget: u128) -> Result<SimplicialInterpolant> {
    let l = f.lipschitz.ok_or_else(|| {
        Error::InvalidArgument("building an interpolant needs a Lipschitz constant".into())
    })?;
    let n = resolution_for(f.dim, l, eps)?;
    SimplicialInterpolant::from_fn(f.dim, n, budget, |x| f.eval(x))
}
