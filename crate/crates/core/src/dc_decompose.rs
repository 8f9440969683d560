//! Difference-of-convex splitting of simplicial interpolants.
//!
//! Every crease of a piecewise-affine function on the Kuhn triangulation lies on one of the
//! hyperplanes `x_i = k/n` or `x_i − x_j = m/n`. Adding `λ·Σ |⟨a,x⟩ − b|` over all of them keeps
//! the function affine on each simplex and raises the slope jump across every facet by
//! `2λ‖a‖`, so for `λ` large enough `g = p + h_λ` is convex and `p = g − h_λ`.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::{AffineFunctional, DcFn, MaxAffineFn};
use crate::error::{Error, Result};
use crate::simplex::{Simplex, SimplicialInterpolant};

/// A hyperplane `⟨a, x⟩ = offset` with an integer normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub normal: Vec<i64>,
    pub offset: f64,
}

impl Hyperplane {
    pub fn signed_value(&self, x: &[f64]) -> f64 {
        self.normal
            .iter()
            .zip(x)
            .map(|(&a, &v)| a as f64 * v)
            .sum::<f64>()
            - self.offset
    }

    pub fn norm(&self) -> f64 {
        self.normal
            .iter()
            .map(|&a| (a * a) as f64)
            .sum::<f64>()
            .sqrt()
    }
}

/// Every hyperplane that can carry a crease of the triangulation at resolution `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CreaseSet {
    pub dim: usize,
    pub resolution: usize,
    pub hyperplanes: Vec<Hyperplane>,
}

impl CreaseSet {
    pub fn new(dim: usize, n: usize) -> Self {
        let nf = n as f64;
        let mut hyperplanes = Vec::new();
        for i in 0..dim {
            for k in 1..n {
                let mut normal = vec![0; dim];
                normal[i] = 1;
                hyperplanes.push(Hyperplane {
                    normal,
                    offset: k as f64 / nf,
                });
            }
        }
        let n = n as i64;
        for i in 0..dim {
            for j in i + 1..dim {
                for m in -(n - 1)..n {
                    let mut normal = vec![0; dim];
                    normal[i] = 1;
                    normal[j] = -1;
                    hyperplanes.push(Hyperplane {
                        normal,
                        offset: m as f64 / nf,
                    });
                }
            }
        }
        Self {
            dim,
            resolution: n as usize,
            hyperplanes,
        }
    }

    pub fn len(&self) -> usize {
        self.hyperplanes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hyperplanes.is_empty()
    }
}

/// `λ · Σ_H |⟨a_H, x⟩ − b_H|` over a crease set, kept in structured form.
#[derive(Debug, Clone, PartialEq)]
pub struct HingeSum {
    pub creases: CreaseSet,
    pub lambda: f64,
}

impl HingeSum {
    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        self.lambda
            * self
                .creases
                .hyperplanes
                .iter()
                .map(|h| h.signed_value(x).abs())
                .sum::<f64>()
    }

    /// The hinges as separate two-piece max-affine functions `max(ℓ, −ℓ)`, scaled by `λ`.
    pub fn hinge_terms(&self) -> Vec<MaxAffineFn> {
        let d = self.creases.dim;
        self.creases
            .hyperplanes
            .iter()
            .map(|h| {
                let a: Vec<f64> = h.normal.iter().map(|&v| self.lambda * v as f64).collect();
                let b = -self.lambda * h.offset;
                let neg = AffineFunctional {
                    a: a.iter().map(|v| -v).collect(),
                    b: -b,
                };
                MaxAffineFn::new(d, vec![AffineFunctional { a, b }, neg]).expect("finite")
            })
            .collect()
    }
}

/// Slope change of the interpolant across one interior facet.
#[derive(Debug, Clone, PartialEq)]
pub struct FacetJump {
    pub simplex: Simplex,
    pub neighbor: Simplex,
    /// Unit normal pointing from `simplex` into `neighbor`.
    pub normal: Vec<f64>,
    /// Directional slope of the neighbour's piece minus that of this simplex's piece.
    pub jump: f64,
    /// Barycentre of the shared facet.
    pub point: Vec<f64>,
}

/// Two adjacent simplices, the unit normal from the first into the second, and the shared
/// facet's lattice vertices.
pub type InteriorFacet = (Simplex, Simplex, Vec<f64>, Vec<Vec<usize>>);

/// Interior facets of the triangulation, each listed once, with the simplices on either side.
pub fn interior_facets(p: &SimplicialInterpolant) -> Vec<InteriorFacet> {
    let d = p.dim();
    let n = p.resolution();
    let mut out = Vec::new();
    for s in p.simplices() {
        let verts = s.vertices();
        let perm = &s.perm;
        // Upward facet: opposite the first path vertex.
        let k = perm[0];
        if s.cell[k] + 1 < n {
            let mut cell = s.cell.clone();
            cell[k] += 1;
            let mut nperm = perm[1..].to_vec();
            nperm.push(k);
            let mut normal = vec![0.0; d];
            normal[k] = 1.0;
            out.push((s.clone(), Simplex { cell, perm: nperm }, normal, verts[1..].to_vec()));
        }
        // Swap facets inside the cell.
        for j in 1..d {
            let (a, b) = (perm[j - 1], perm[j]);
            if a < b {
                let mut nperm = perm.clone();
                nperm.swap(j - 1, j);
                let mut normal = vec![0.0; d];
                normal[a] = -std::f64::consts::FRAC_1_SQRT_2;
                normal[b] = std::f64::consts::FRAC_1_SQRT_2;
                let facet: Vec<Vec<usize>> = verts
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(_, v)| v.clone())
                    .collect();
                out.push((
                    s.clone(),
                    Simplex {
                        cell: s.cell.clone(),
                        perm: nperm,
                    },
                    normal,
                    facet,
                ));
            }
        }
    }
    out
}

/// Slope jumps across all interior facets.
pub fn facet_jumps(p: &SimplicialInterpolant) -> Vec<FacetJump> {
    interior_facets(p)
        .into_par_iter()
        .map(|(s, nb, normal, facet)| {
            let a = p.affine_piece(&s).a;
            let b = p.affine_piece(&nb).a;
            let jump = a
                .iter()
                .zip(&b)
                .zip(&normal)
                .map(|((x, y), nu)| (y - x) * nu)
                .sum();
            let mut point = vec![0.0; p.dim()];
            for v in &facet {
                for (c, &k) in point.iter_mut().zip(v) {
                    *c += k as f64;
                }
            }
            let scale = 1.0 / (facet.len() as f64 * p.resolution() as f64);
            point.iter_mut().for_each(|c| *c *= scale);
            FacetJump {
                simplex: s,
                neighbor: nb,
                normal,
                jump,
                point,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Convexity {
    /// All facet jumps are at least `-tol`; `min_jump` is the smallest one (`+∞` if none).
    Convex { min_jump: f64 },
    /// The most negative facet jump.
    Violation(FacetJump),
}

impl Convexity {
    pub fn is_convex(&self) -> bool {
        matches!(self, Convexity::Convex { .. })
    }
}

/// Tolerance for facet jumps: `1e-12` scaled by the largest vertex-to-vertex slope.
pub fn default_jump_tolerance(p: &SimplicialInterpolant) -> f64 {
    let max_abs = p.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    1e-12 * (max_abs * p.resolution() as f64).max(1.0)
}

pub fn convexity_check(p: &SimplicialInterpolant) -> Convexity {
    convexity_check_with_tol(p, default_jump_tolerance(p))
}

pub fn convexity_check_with_tol(p: &SimplicialInterpolant, tol: f64) -> Convexity {
    let worst = facet_jumps(p)
        .into_iter()
        .min_by(|a, b| a.jump.total_cmp(&b.jump));
    match worst {
        None => Convexity::Convex {
            min_jump: f64::INFINITY,
        },
        Some(w) if w.jump >= -tol => Convexity::Convex { min_jump: w.jump },
        Some(w) => Convexity::Violation(w),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeOptions {
    /// Upper bound on affine pieces per part (before deduplication).
    pub piece_budget: u128,
    pub max_doublings: u32,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self {
            piece_budget: 1 << 22,
            max_doublings: 64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    /// `g − h`, both shifted so every piece is nonnegative on the cube.
    pub dc: DcFn,
    /// `p + h_λ` on the same triangulation (unshifted).
    pub convex_part: SimplicialInterpolant,
    pub hinges: HingeSum,
    /// Closed-form starting value of `λ`.
    pub lambda0: f64,
    pub lambda: f64,
    pub doublings: u32,
    /// Constant added to both parts.
    pub shift: f64,
}

impl Decomposition {
    pub fn g_pieces(&self) -> usize {
        self.dc.g.len()
    }

    pub fn h_pieces(&self) -> usize {
        self.dc.h.len()
    }
}

fn dedup_key(p: &AffineFunctional) -> Vec<u64> {
    p.a.iter()
        .chain(std::iter::once(&p.b))
        .map(|v| ((v * 1e12).round() + 0.0).to_bits())
        .collect()
}

/// One affine piece per simplex, deduplicated after rounding coefficients to `1e-12`.
pub fn extract_pieces(p: &SimplicialInterpolant) -> MaxAffineFn {
    let pieces: Vec<AffineFunctional> = p
        .simplices()
        .par_iter()
        .map(|s| p.affine_piece(s))
        .collect();
    let mut seen = HashSet::new();
    let unique = pieces
        .into_iter()
        .filter(|piece| seen.insert(dedup_key(piece)))
        .collect();
    MaxAffineFn::new(p.dim(), unique).expect("interpolant pieces are finite")
}

/// Splits `p` into `g − h` with both parts convex and nonnegative on the cube.
pub fn decompose(p: &SimplicialInterpolant, opts: &DecomposeOptions) -> Result<Decomposition> {
    let d = p.dim();
    let n = p.resolution();
    if p.simplex_count() > opts.piece_budget {
        return Err(Error::Resource {
            what: format!("affine pieces for d={d}, n={n}"),
            needed: p.simplex_count(),
            budget: opts.piece_budget,
        });
    }
    let creases = CreaseSet::new(d, n);
    let tol = default_jump_tolerance(p);
    let min_jump = facet_jumps(p)
        .iter()
        .map(|f| f.jump)
        .fold(f64::INFINITY, f64::min);
    let lambda0 = if min_jump >= -tol { 0.0 } else { -min_jump / 2.0 };

    let mut lambda = lambda0;
    let mut doublings = 0;
    let convex_part = loop {
        let hinges = HingeSum {
            creases: creases.clone(),
            lambda,
        };
        let g = p.add_fn(|x| hinges.eval(x))?;
        if convexity_check(&g).is_convex() {
            break g;
        }
        if doublings >= opts.max_doublings {
            return Err(Error::InvalidArgument(format!(
                "no convexifying weight found after {doublings} doublings (λ = {lambda})"
            )));
        }
        doublings += 1;
        lambda = if lambda == 0.0 { tol.max(f64::MIN_POSITIVE) } else { lambda * 2.0 };
    };
    let hinges = HingeSum { creases, lambda };

    let g = extract_pieces(&convex_part);
    let h = if lambda == 0.0 {
        MaxAffineFn::zero(d)
    } else {
        let h_interp = SimplicialInterpolant::from_fn(d, n, u128::MAX, |x| hinges.eval(x))?;
        extract_pieces(&h_interp)
    };
    let shift = (-g.min_piece_lower_bound())
        .max(-h.min_piece_lower_bound())
        .max(0.0);
    let dc = DcFn::new(g.shifted(shift), h.shifted(shift))?;
    Ok(Decomposition {
        dc,
        convex_part,
        hinges,
        lambda0,
        lambda,
        doublings,
        shift,
    })
}

pub const DC_FORMAT_VERSION: u32 = 1;

/// On-disk form of a [`DcFn`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcDocument {
    pub format_version: u32,
    pub dim: usize,
    pub g: Vec<AffineFunctional>,
    pub h: Vec<AffineFunctional>,
}

pub fn dc_to_json(f: &DcFn) -> String {
    let doc = DcDocument {
        format_version: DC_FORMAT_VERSION,
        dim: f.dim(),
        g: f.g.pieces().to_vec(),
        h: f.h.pieces().to_vec(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn dc_from_json(text: &str) -> Result<DcFn> {
    let doc: DcDocument =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("DC file: {e}")))?;
    if doc.format_version != DC_FORMAT_VERSION {
        return Err(Error::Validation(format!(
            "format_version: unsupported version {}",
            doc.format_version
        )));
    }
    let g = MaxAffineFn::new(doc.dim, doc.g).map_err(|e| Error::Validation(format!("g: {e}")))?;
    let h = MaxAffineFn::new(doc.dim, doc.h).map_err(|e| Error::Validation(format!("h: {e}")))?;
    DcFn::new(g, h)
}
