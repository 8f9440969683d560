//! Rewriting a one-hidden-layer net as a deep net of width `d+2`.
//!
//! A shallow net `ReLU(b + Σ_j c_j ReLU(A_j(x)))` with `n` hidden neurons becomes `n+2` layers
//! with channels `(x, y, z)`: `x` copies the input, `y` evaluates one neuron per layer, and `z`
//! accumulates the weighted sum on top of a constant `T` large enough to stay positive.

use serde::{Deserialize, Serialize};

use crate::affine::{AffineFunctional, AffineMap};
use crate::error::{Error, Result};
use crate::net::{Activation, Layer, ReluNet};

/// `x ↦ ReLU(b + Σ_j c_j ReLU(A_j(x)))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShallowNet {
    pub pieces: Vec<AffineFunctional>,
    pub coeffs: Vec<f64>,
    pub bias: f64,
}

impl ShallowNet {
    pub fn new(pieces: Vec<AffineFunctional>, coeffs: Vec<f64>, bias: f64) -> Result<Self> {
        let s = Self {
            pieces,
            coeffs,
            bias,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.pieces.is_empty() {
            return Err(Error::InvalidArgument("shallow net needs at least one neuron".into()));
        }
        if self.coeffs.len() != self.pieces.len() {
            return Err(Error::dim("shallow net coeffs", self.pieces.len(), self.coeffs.len()));
        }
        let d = self.pieces[0].dim();
        if d == 0 {
            return Err(Error::InvalidArgument("shallow net input dimension must be ≥ 1".into()));
        }
        for (j, p) in self.pieces.iter().enumerate() {
            if p.dim() != d {
                return Err(Error::dim(format!("shallow net neuron {j}"), d, p.dim()));
            }
            if !p.a.iter().all(|v| v.is_finite()) || !p.b.is_finite() {
                return Err(Error::NonFinite(format!("shallow net neuron {j}")));
            }
        }
        if !self.coeffs.iter().all(|c| c.is_finite()) || !self.bias.is_finite() {
            return Err(Error::NonFinite("shallow net coefficients".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    pub fn width(&self) -> usize {
        self.pieces.len()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::dim("shallow net input", self.dim(), x.len()));
        }
        let s: f64 = self
            .pieces
            .iter()
            .zip(&self.coeffs)
            .map(|(p, c)| c * p.eval(x).max(0.0))
            .sum();
        Ok((self.bias + s).max(0.0))
    }

    /// Reads a two-layer ReLU net `d → n → 1` (both layers ReLU).
    pub fn from_net(net: &ReluNet) -> Result<Self> {
        let layers = net.layers();
        if layers.len() != 2 {
            return Err(Error::Validation(format!(
                "layers: a shallow net has exactly 2 layers, got {}",
                layers.len()
            )));
        }
        if layers.iter().any(|l| l.activation != Activation::Relu) {
            return Err(Error::Validation("layers: a shallow net uses relu on both layers".into()));
        }
        let (hidden, out) = (&layers[0].map, &layers[1].map);
        if out.rows() != 1 {
            return Err(Error::Validation(format!(
                "layers[1].rows: a shallow net has one output, got {}",
                out.rows()
            )));
        }
        let pieces = (0..hidden.rows())
            .map(|r| AffineFunctional::new(hidden.row(r).to_vec(), hidden.bias()[r]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pieces, out.row(0).to_vec(), out.bias()[0])
    }

    /// The same function as a plain two-layer [`ReluNet`].
    pub fn to_net(&self) -> ReluNet {
        let d = self.dim();
        let hidden = AffineMap::from_functionals(d, &self.pieces).expect("validated");
        let out = AffineMap::new(1, self.width(), self.coeffs.clone(), vec![self.bias]).expect("validated");
        ReluNet::new(d, vec![Layer::relu(hidden), Layer::relu(out)])
            .expect("valid shallow net")
            .with_provenance("compiler", "shallow")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("shallow net file: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Offset `T` keeping every partial sum `T + Σ_{j≤k} c_j ReLU(A_j(x))` positive on the cube.
pub fn accumulator_offset(s: &ShallowNet) -> f64 {
    1.0 + s
        .pieces
        .iter()
        .zip(&s.coeffs)
        .map(|(p, c)| (-c).max(0.0) * p.cube_bounds().1.max(0.0))
        .sum::<f64>()
}

/// Builds the width `d+2`, `n+2`-layer equivalent of `s` on `[0,1]^d`.
///
/// Equivalence is only claimed on the unit cube: outside it the accumulator channel may turn
/// negative and be clipped.
pub fn deepen(s: &ShallowNet) -> Result<ReluNet> {
    s.validate()?;
    let d = s.dim();
    let n = s.width();
    let t = accumulator_offset(s);
    let w = d + 2;
    let (y, z) = (d, d + 1);

    // Copies x and evaluates neuron `j` (if any) into y.
    let head = |cols: usize, neuron: Option<&AffineFunctional>| -> (Vec<f64>, Vec<f64>) {
        let mut weights = vec![0.0; w * cols];
        let mut bias = vec![0.0; w];
        for i in 0..d {
            weights[i * cols + i] = 1.0;
        }
        if let Some(p) = neuron {
            weights[y * cols..y * cols + d].copy_from_slice(&p.a);
            bias[y] = p.b;
        }
        (weights, bias)
    };

    let mut layers = Vec::with_capacity(n + 2);
    let (weights, mut bias) = head(d, Some(&s.pieces[0]));
    bias[z] = t;
    layers.push(Layer::relu(AffineMap::new(w, d, weights, bias)?));
    for j in 1..=n {
        let (mut weights, bias) = head(w, s.pieces.get(j));
        weights[z * w + z] = 1.0;
        weights[z * w + y] = s.coeffs[j - 1];
        layers.push(Layer::relu(AffineMap::new(w, w, weights, bias)?));
    }
    let mut out = vec![0.0; w];
    out[z] = 1.0;
    layers.push(Layer::relu(AffineMap::new(1, w, out, vec![s.bias - t])?));

    Ok(ReluNet::new(d, layers)?
        .with_provenance("compiler", "deepen")
        .with_provenance("neurons", n.to_string())
        .with_provenance("offset", t.to_string())
        .with_provenance("domain", "equivalence holds on [0,1]^d only"))
}

/// Accumulator channel `z` after each of the first `n+1` layers, pre-activation.
pub fn accumulator_trace(net: &ReluNet, x: &[f64]) -> Result<Vec<f64>> {
    let d = net.input_dim();
    let trace = net.trace(x)?;
    Ok(trace[..trace.len() - 1].iter().map(|t| t.pre[d + 1]).collect())
}
