//! Exact compilation of a max-affine function into a width `d+1` ReLU net.
//!
//! The net carries the input `x` in the first `d` coordinates and a running value in the last
//! one. Conjugating ReLU by the shear `A(x, y) = (x, g(x) + y)` turns the graph of a function
//! `T` into the graph of `max(T, g)` whenever `x ≥ 0`, so one hidden block per piece suffices.
//! The layout is
//!
//! ```text
//! H_out ∘ H_N ∘ ⋯ ∘ H_1 ∘ H_in,   H_α = A_α ∘ ReLU ∘ A_α⁻¹
//! ```
//!
//! with the adjacent shears `A_α⁻¹ ∘ A_{α−1}` fused into a single affine layer.

use crate::affine::{AffineFunctional, AffineMap, MaxAffineFn, Sign};
use crate::error::{Error, Result};
use crate::net::{Layer, OutputMode, ReluNet};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PositivityShift {
    /// Lift every piece to be nonnegative on the cube and undo the lift in the readout.
    #[default]
    Auto,
    /// Compile the pieces as given; the target must be nonnegative on the cube.
    None,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConvexCompileOptions {
    pub output_mode: OutputMode,
    pub positivity_shift: PositivityShift,
}

/// The shear `(x, y) ↦ (x, y + sign·g(x))` on `ℝ^{d+1}`.
pub(crate) fn shear(g: &AffineFunctional, sign: f64) -> AffineMap {
    let d = g.dim();
    let w = d + 1;
    let mut weights = vec![0.0; w * w];
    for i in 0..d {
        weights[i * w + i] = 1.0;
        weights[d * w + i] = sign * g.a[i];
    }
    weights[d * w + d] = 1.0;
    let mut bias = vec![0.0; w];
    bias[d] = sign * g.b;
    AffineMap::new(w, w, weights, bias).expect("shear of a finite functional is finite")
}

/// `x ↦ (x, 0)`, lifting the input onto the graph of the zero function.
fn embedding(d: usize) -> AffineMap {
    let w = d + 1;
    let mut weights = vec![0.0; w * d];
    for i in 0..d {
        weights[i * d + i] = 1.0;
    }
    AffineMap::new(w, d, weights, vec![0.0; w]).expect("finite")
}

/// Shift constant that makes every piece nonnegative on the cube.
pub fn positivity_constant(f: &MaxAffineFn) -> f64 {
    (-f.min_piece_lower_bound()).max(0.0)
}

/// Compiles `f` into a net with hidden width `d+1` and `N = |pieces|` hidden blocks.
///
/// The net reproduces `f` exactly on `[0,1]^d` when `f ≥ 0` there or when the readout is
/// linear. A ReLU readout of a target that dips below zero returns `max(f, 0)`.
pub fn compile_convex(f: &MaxAffineFn, opts: &ConvexCompileOptions) -> Result<ReluNet> {
    let d = f.dim();
    let w = d + 1;
    let shift = match opts.positivity_shift {
        PositivityShift::Auto => positivity_constant(f),
        PositivityShift::None => {
            // The embedded zero graph makes the running value max(0, g_1, …), so an unshifted
            // target has to be nonnegative regardless of the readout.
            if let Sign::Negative { point, value } = f.nonnegativity() {
                return Err(Error::ClampingHazard(format!(
                    "target takes value {value:e} at {point:?}; without a positivity shift the \
                     compiled net computes max(f, 0)"
                )));
            }
            0.0
        }
    };
    let pieces: Vec<AffineFunctional> = f.pieces().iter().map(|p| p.shifted(shift)).collect();

    let mut layers = Vec::with_capacity(pieces.len() + 2);
    layers.push(Layer::relu(embedding(d)));
    layers.push(Layer::relu(shear(&pieces[0], -1.0)));
    for pair in pieces.windows(2) {
        let fused = shear(&pair[1], -1.0).compose(&shear(&pair[0], 1.0))?;
        layers.push(Layer::relu(fused));
    }
    let mut select = vec![0.0; w];
    select[d] = 1.0;
    let readout = AffineMap::new(1, w, select, vec![-shift])?
        .compose(&shear(pieces.last().expect("nonempty"), 1.0))?;
    layers.push(Layer {
        map: readout,
        activation: opts.output_mode.activation(),
    });

    let mut net = ReluNet::new(d, layers)?.with_input_embedding()?;
    if opts.output_mode == OutputMode::ReluReadout {
        net = net.with_relu_readout()?;
    }
    Ok(net
        .with_provenance("compiler", "compile_convex")
        .with_provenance("pieces", pieces.len().to_string())
        .with_provenance("positivity_shift", shift.to_string()))
}

/// Running maxima carried in the last channel after each hidden block, recovered from an
/// instrumented evaluation of a net built by [`compile_convex`].
///
/// Entry `k` equals `max(0, max_{α≤k} g_α(x) + C)` where `C` is the positivity shift.
pub fn running_maxima(net: &ReluNet, f: &MaxAffineFn, shift: f64, x: &[f64]) -> Result<Vec<f64>> {
    let trace = net.trace(x)?;
    let d = f.dim();
    Ok(f.pieces()
        .iter()
        .enumerate()
        .map(|(k, g)| trace[k + 1].post[d] + g.eval(x) + shift)
        .collect())
}
