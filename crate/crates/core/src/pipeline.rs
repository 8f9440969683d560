//! End-to-end constructions combining the building blocks.
//!
//! - [`continuous`]: Lipschitz target → Kuhn interpolant → DC split → width `d+3` net, with
//!   sup-norm error at most `eps` on the cube.
//! - [`convex_fit`]: convex Lipschitz target → `k` tangent planes → width `d+1` net.

use crate::compile_convex::{compile_convex, ConvexCompileOptions};
use crate::compile_dc::{compile_dc, DcCompileOptions};
use crate::dc_decompose::{decompose, DecomposeOptions, Decomposition};
use crate::error::Result;
use crate::maxaffine_fit::{fit_max_affine, ConvexTarget};
use crate::net::{OutputMode, ReluNet};
use crate::simplex::{build_interpolant, SimplicialInterpolant, TargetFn};

#[derive(Debug, Clone)]
pub struct ContinuousBuild {
    pub interpolant: SimplicialInterpolant,
    pub decomposition: Decomposition,
    pub net: ReluNet,
}

pub fn continuous(
    target: &TargetFn,
    eps: f64,
    vertex_budget: u128,
    output_mode: OutputMode,
) -> Result<ContinuousBuild> {
    let interpolant = build_interpolant(target, eps, vertex_budget)?;
    let mut build = from_interpolant(interpolant, output_mode)?;
    build.net.set_provenance("eps", eps.to_string());
    Ok(build)
}

/// DC split and compile an existing interpolant.
pub fn from_interpolant(
    interpolant: SimplicialInterpolant,
    output_mode: OutputMode,
) -> Result<ContinuousBuild> {
    let decomposition = decompose(&interpolant, &DecomposeOptions::default())?;
    let mut net = compile_dc(&decomposition.dc, &DcCompileOptions { output_mode })?;
    net.set_provenance("grid_resolution", interpolant.resolution().to_string());
    net.set_provenance("lambda", decomposition.lambda.to_string());
    Ok(ContinuousBuild {
        interpolant,
        decomposition,
        net,
    })
}

#[derive(Debug, Clone)]
pub struct ConvexFitBuild {
    pub fit: crate::affine::MaxAffineFn,
    pub net: ReluNet,
}

pub fn convex_fit(target: &ConvexTarget, k: usize, opts: &ConvexCompileOptions) -> Result<ConvexFitBuild> {
    let fit = fit_max_affine(target, k)?;
    let mut net = compile_convex(&fit, opts)?;
    net.set_provenance("k", k.to_string());
    Ok(ConvexFitBuild { fit, net })
}
