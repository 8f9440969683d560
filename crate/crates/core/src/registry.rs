//! Named builtin targets on `[0,1]^d`, each with its dimension range, Euclidean Lipschitz
//! constant, convexity flag and (for convex ones) an analytic subgradient.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::maxaffine_fit::{ConvexTarget, Subgradient};
use crate::simplex::{Evaluator, TargetFn};

pub const NAMES: &[&str] = &[
    "affine",
    "parabola",
    "norm2-sq",
    "hat",
    "hat-complement",
    "abs-diff",
    "sin2d-positive",
];

#[derive(Clone)]
pub struct BuiltinTarget {
    pub name: String,
    pub dim: usize,
    pub lipschitz: f64,
    pub convex: bool,
    evaluator: Evaluator,
    subgradient: Option<Subgradient>,
}

impl std::fmt::Debug for BuiltinTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BuiltinTarget")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .field("convex", &self.convex)
            .finish()
    }
}

fn sign(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

impl BuiltinTarget {
    /// Looks up `name` for dimension `dim`.
    ///
    /// Only `affine` takes parameters: `b` (offset, default 0.25) and `c` (coefficient on every
    /// coordinate, default `0.5/d`).
    pub fn lookup(name: &str, dim: usize, params: &BTreeMap<String, f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be ≥ 1".into()));
        }
        let allowed: &[&str] = if name == "affine" { &["b", "c"] } else { &[] };
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::InvalidArgument(format!("target {name} has no parameter {k}")));
        }
        let need = |ok: bool, range: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "target {name} is defined for {range}, not d={dim}"
                )))
            }
        };
        let d = dim as f64;
        let (lipschitz, convex, evaluator, subgradient): (f64, bool, Evaluator, Option<Subgradient>) = match name {
            "affine" => {
                let b = param(params, "b", 0.25);
                let c = param(params, "c", 0.5 / d);
                (
                    c.abs() * d.sqrt(),
                    true,
                    Arc::new(move |x: &[f64]| b + c * x.iter().sum::<f64>()),
                    Some(Arc::new(move |x: &[f64]| vec![c; x.len()])),
                )
            }
            "parabola" => {
                need(dim == 1, "d=1")?;
                (
                    2.0,
                    true,
                    Arc::new(|x: &[f64]| x[0] * x[0]),
                    Some(Arc::new(|x: &[f64]| vec![2.0 * x[0]])),
                )
            }
            "norm2-sq" => (
                2.0 * d.sqrt(),
                true,
                Arc::new(|x: &[f64]| x.iter().map(|v| v * v).sum()),
                Some(Arc::new(|x: &[f64]| x.iter().map(|v| 2.0 * v).collect())),
            ),
            "hat" => (1.0, false, Arc::new(|x: &[f64]| x[0].min(1.0 - x[0])), None),
            "hat-complement" => (
                1.0,
                true,
                Arc::new(|x: &[f64]| x[0].max(1.0 - x[0])),
                Some(Arc::new(|x: &[f64]| {
                    let mut g = vec![0.0; x.len()];
                    g[0] = if x[0] >= 0.5 { 1.0 } else { -1.0 };
                    g
                })),
            ),
            "abs-diff" => {
                need(dim >= 2, "d≥2")?;
                (
                    2f64.sqrt(),
                    true,
                    Arc::new(|x: &[f64]| (x[0] - x[1]).abs()),
                    Some(Arc::new(|x: &[f64]| {
                        let s = sign(x[0] - x[1]);
                        let mut g = vec![0.0; x.len()];
                        g[0] = s;
                        g[1] = -s;
                        g
                    })),
                )
            }
            "sin2d-positive" => {
                need(dim == 2, "d=2")?;
                (
                    PI / 2.0,
                    false,
                    Arc::new(|x: &[f64]| 0.5 + 0.5 * (PI * x[0]).sin() * (PI * x[1]).sin()),
                    None,
                )
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown target {other}; builtins are {}",
                    NAMES.join(", ")
                )))
            }
        };
        Ok(Self {
            name: name.to_string(),
            dim,
            lipschitz,
            convex,
            evaluator,
            subgradient,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.evaluator)(x)
    }

    pub fn target_fn(&self) -> TargetFn {
        TargetFn {
            dim: self.dim,
            evaluator: self.evaluator.clone(),
            lipschitz: Some(self.lipschitz),
        }
    }

    pub fn convex_target(&self) -> Result<ConvexTarget> {
        if !self.convex {
            return Err(Error::InvalidArgument(format!("target {} is not convex", self.name)));
        }
        Ok(ConvexTarget {
            dim: self.dim,
            evaluator: self.evaluator.clone(),
            subgradient: self.subgradient.clone(),
            lipschitz: self.lipschitz,
        })
    }
}
