//! Exact compilation of `g − h` (both max-affine) into a width `d+3` ReLU net.
//!
//! Every hidden layer has the channel layout
//!
//! ```text
//! [ x_1 … x_d | c_1 c_2 | m ]
//! ```
//!
//! The input copy `x` stays nonnegative on the cube and passes every ReLU unchanged. The pair
//! `(c_1, c_2)` runs the two-layer max gadget `max(p, r) = ReLU(p − r) + r` (valid for `r ≥ 0`)
//! once per piece, and `m` stores the finished value of `g` while `h` is computed.
//!
//! Schedule, with `G_α = g_α + T_g` and `H_β = h_β + T_h` made nonnegative by exact cube bounds:
//!
//! - block `2α−1`: `(x, G_α − r, r, m)` where `r` is the running maximum (`r = G_1` for `α = 1`);
//! - block `2α`:   `(x, 0, c_1 + c_2, m)`;
//! - the first `h` block also moves `c_2` into `m` (fused, no extra layer);
//! - readout: `m − c_2 + T_h − T_g`.
//!
//! This gives exactly `2(M+N)` hidden blocks.

use crate::affine::{AffineFunctional, AffineMap, DcFn, Sign};
use crate::error::{Error, Result};
use crate::net::{Layer, OutputMode, ReluNet};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DcCompileOptions {
    pub output_mode: OutputMode,
}

/// The fixed 2 → 2 → 1 net computing `max(x, y)` for `y ≥ 0`.
pub fn max_gadget() -> ReluNet {
    let first = AffineMap::new(2, 2, vec![1.0, -1.0, 0.0, 1.0], vec![0.0, 0.0]).expect("finite");
    let second = AffineMap::new(1, 2, vec![1.0, 1.0], vec![0.0]).expect("finite");
    ReluNet::new(2, vec![Layer::relu(first), Layer::relu(second)])
        .expect("valid gadget")
        .with_provenance("compiler", "max_gadget")
}

/// Shift making every piece nonnegative on the cube.
fn piece_shift(pieces: &[AffineFunctional]) -> f64 {
    let lo = pieces
        .iter()
        .map(|p| p.cube_bounds().0)
        .fold(f64::INFINITY, f64::min);
    (-lo).max(0.0)
}

/// Where the running maximum comes from when a gadget starts.
#[derive(Clone, Copy)]
enum Running {
    /// Same phase: the previous gadget left it in `c_2`.
    Carried,
    /// First piece of a phase: the running value is the piece itself.
    Fresh,
}

/// Row builder over `d+3` inputs (or `d` inputs for the very first layer).
struct Rows {
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Rows {
    fn new(cols: usize) -> Self {
        Self {
            cols,
            weights: Vec::new(),
            bias: Vec::new(),
        }
    }

    fn push(&mut self, coeffs: &[(usize, f64)], piece: Option<(&AffineFunctional, f64)>, bias: f64) {
        let mut row = vec![0.0; self.cols];
        let mut b = bias;
        for &(j, c) in coeffs {
            row[j] += c;
        }
        if let Some((p, scale)) = piece {
            for (i, a) in p.a.iter().enumerate() {
                row[i] += scale * a;
            }
            b += scale * p.b;
        }
        self.weights.extend(row);
        self.bias.push(b);
    }

    fn finish(self) -> AffineMap {
        let rows = self.bias.len();
        AffineMap::new(rows, self.cols, self.weights, self.bias).expect("finite entries")
    }
}

/// First gadget layer for piece `p` (already shifted).
///
/// `from_input` means the layer reads the raw input `x` (the first layer of the net). `to_memory`
/// moves the current `c_2` into the memory channel.
fn gadget_open(d: usize, p: &AffineFunctional, running: Running, from_input: bool, to_memory: bool) -> AffineMap {
    let (c2, m) = (d + 1, d + 2);
    let mut rows = Rows::new(if from_input { d } else { d + 3 });
    for i in 0..d {
        rows.push(&[(i, 1.0)], None, 0.0);
    }
    match running {
        Running::Carried => {
            rows.push(&[(c2, -1.0)], Some((p, 1.0)), 0.0);
            rows.push(&[(c2, 1.0)], None, 0.0);
        }
        Running::Fresh => {
            rows.push(&[], None, 0.0);
            rows.push(&[], Some((p, 1.0)), 0.0);
        }
    }
    if from_input {
        rows.push(&[], None, 0.0);
    } else if to_memory {
        rows.push(&[(c2, 1.0)], None, 0.0);
    } else {
        rows.push(&[(m, 1.0)], None, 0.0);
    }
    rows.finish()
}

/// Second gadget layer: `c_2 ← c_1 + c_2`.
fn gadget_close(d: usize) -> AffineMap {
    let (c1, c2, m) = (d, d + 1, d + 2);
    let mut rows = Rows::new(d + 3);
    for i in 0..d {
        rows.push(&[(i, 1.0)], None, 0.0);
    }
    rows.push(&[], None, 0.0);
    rows.push(&[(c1, 1.0), (c2, 1.0)], None, 0.0);
    rows.push(&[(m, 1.0)], None, 0.0);
    rows.finish()
}

/// Shift constants `(T_g, T_h)` used by [`compile_dc`].
pub fn shift_constants(f: &DcFn) -> (f64, f64) {
    (piece_shift(f.g.pieces()), piece_shift(f.h.pieces()))
}

/// Compiles `g − h` into a net of hidden width `d+3` and `2(M+N)` hidden blocks.
pub fn compile_dc(f: &DcFn, opts: &DcCompileOptions) -> Result<ReluNet> {
    let d = f.dim();
    if f.g.dim() != f.h.dim() {
        return Err(Error::dim("DC pair", f.g.dim(), f.h.dim()));
    }
    if opts.output_mode == OutputMode::ReluReadout {
        if let Sign::Negative { point, value } = f.nonnegativity() {
            return Err(Error::ClampingHazard(format!(
                "g − h takes value {value:e} at {point:?}; a ReLU readout would clamp it \
                 (use the linear output mode)"
            )));
        }
    }
    let (tg, th) = shift_constants(f);
    let g: Vec<_> = f.g.pieces().iter().map(|p| p.shifted(tg)).collect();
    let h: Vec<_> = f.h.pieces().iter().map(|p| p.shifted(th)).collect();

    let mut layers = Vec::with_capacity(2 * (g.len() + h.len()) + 1);
    for (k, p) in g.iter().enumerate() {
        let running = if k == 0 { Running::Fresh } else { Running::Carried };
        layers.push(Layer::relu(gadget_open(d, p, running, k == 0, false)));
        layers.push(Layer::relu(gadget_close(d)));
    }
    for (k, p) in h.iter().enumerate() {
        let running = if k == 0 { Running::Fresh } else { Running::Carried };
        layers.push(Layer::relu(gadget_open(d, p, running, false, k == 0)));
        layers.push(Layer::relu(gadget_close(d)));
    }
    let mut readout = Rows::new(d + 3);
    readout.push(&[(d + 2, 1.0), (d + 1, -1.0)], None, th - tg);
    layers.push(Layer {
        map: readout.finish(),
        activation: opts.output_mode.activation(),
    });

    let mut net = ReluNet::new(d, layers)?;
    if opts.output_mode == OutputMode::ReluReadout {
        net = net.with_relu_readout()?;
    }
    Ok(net
        .with_provenance("compiler", "compile_dc")
        .with_provenance("g_pieces", g.len().to_string())
        .with_provenance("h_pieces", h.len().to_string())
        .with_provenance("shift_g", tg.to_string())
        .with_provenance("shift_h", th.to_string()))
}

/// Index of the layer whose output holds `g + T_g` in the memory channel (the first `h` block).
pub fn memory_layer_index(f: &DcFn) -> usize {
    2 * f.g.len()
}
