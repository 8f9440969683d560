//! Feed-forward ReLU networks `ReLU ∘ A_n ∘ ⋯ ∘ ReLU ∘ A_1` and their file format.
//!
//! Every layer is an affine map followed by a coordinatewise ReLU. Only the last layer may
//! opt out with a linear activation; compilers use that for readouts that subtract shift
//! constants.
//!
//! Two tags record construction roles so that depth can be reported the way the compilers
//! count it: `input_embedding` marks a first layer that only lifts the input onto a graph,
//! and `relu_readout` marks a final ReLU layer that only reads the result out. Neither counts
//! towards [`ReluNet::hidden_blocks`].

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::AffineMap;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

/// How a compiled net produces its scalar output.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputMode {
    /// Final layer is followed by ReLU, so the output is clamped at zero.
    #[default]
    #[serde(rename = "relu")]
    ReluReadout,
    /// Final layer is affine only.
    #[serde(rename = "linear")]
    LinearReadout,
}

impl OutputMode {
    pub fn activation(self) -> Activation {
        match self {
            OutputMode::ReluReadout => Activation::Relu,
            OutputMode::LinearReadout => Activation::Linear,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub map: AffineMap,
    pub activation: Activation,
}

impl Layer {
    pub fn relu(map: AffineMap) -> Self {
        Self {
            map,
            activation: Activation::Relu,
        }
    }

    pub fn linear(map: AffineMap) -> Self {
        Self {
            map,
            activation: Activation::Linear,
        }
    }
}

/// Pre- and post-activation values of one layer, from [`ReluNet::trace`].
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    pub pre: Vec<f64>,
    pub post: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetMetrics {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_width: usize,
    pub relu_depth: usize,
    pub hidden_blocks: usize,
    pub parameter_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReluNet {
    input_dim: usize,
    layers: Vec<Layer>,
    input_embedding: bool,
    relu_readout: bool,
    provenance: BTreeMap<String, String>,
}

impl ReluNet {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        let net = Self {
            input_dim,
            layers,
            input_embedding: false,
            relu_readout: false,
            provenance: BTreeMap::new(),
        };
        net.validate()?;
        Ok(net)
    }

    /// Marks the first layer as an input embedding (excluded from `hidden_blocks`).
    pub fn with_input_embedding(mut self) -> Result<Self> {
        self.input_embedding = true;
        self.validate()?;
        Ok(self)
    }

    /// Marks the final ReLU layer as a readout (excluded from `hidden_blocks`).
    pub fn with_relu_readout(mut self) -> Result<Self> {
        self.relu_readout = true;
        self.validate()?;
        Ok(self)
    }

    pub fn with_provenance(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.provenance.insert(key.into(), value.into());
        self
    }

    pub fn set_provenance(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.provenance.insert(key.into(), value.into());
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Validation("input_dim must be ≥ 1".into()));
        }
        if self.layers.is_empty() {
            return Err(Error::Validation("layers: net needs at least one layer".into()));
        }
        let mut width = self.input_dim;
        let last = self.layers.len() - 1;
        for (j, layer) in self.layers.iter().enumerate() {
            if layer.map.cols() != width {
                return Err(Error::Validation(format!(
                    "layers[{j}].cols: expected {width} (previous output dim), got {}",
                    layer.map.cols()
                )));
            }
            if layer.activation == Activation::Linear && j != last {
                return Err(Error::Validation(format!(
                    "layers[{j}].activation: \"linear\" is only allowed on the last layer"
                )));
            }
            width = layer.map.rows();
        }
        if self.input_embedding && self.layers[0].activation != Activation::Relu {
            return Err(Error::Validation("input_embedding: first layer must be relu".into()));
        }
        if self.relu_readout && self.layers[last].activation != Activation::Relu {
            return Err(Error::Validation("relu_readout: last layer must be relu".into()));
        }
        if self.input_embedding && self.relu_readout && self.layers.len() < 2 {
            return Err(Error::Validation(
                "input_embedding and relu_readout need distinct layers".into(),
            ));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.map.rows())
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn provenance(&self) -> &BTreeMap<String, String> {
        &self.provenance
    }

    pub fn has_input_embedding(&self) -> bool {
        self.input_embedding
    }

    pub fn has_relu_readout(&self) -> bool {
        self.relu_readout
    }

    /// Largest output dimension among all layers but the last.
    pub fn hidden_width(&self) -> usize {
        let n = self.layers.len();
        self.layers[..n - 1]
            .iter()
            .map(|l| l.map.rows())
            .max()
            .unwrap_or(0)
    }

    pub fn relu_depth(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| l.activation == Activation::Relu)
            .count()
    }

    pub fn hidden_blocks(&self) -> usize {
        self.relu_depth() - usize::from(self.input_embedding) - usize::from(self.relu_readout)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.map.parameter_count()).sum()
    }

    pub fn metrics(&self) -> NetMetrics {
        NetMetrics {
            input_dim: self.input_dim,
            output_dim: self.output_dim(),
            hidden_width: self.hidden_width(),
            relu_depth: self.relu_depth(),
            hidden_blocks: self.hidden_blocks(),
            parameter_count: self.parameter_count(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::dim("net input", self.input_dim, x.len()));
        }
        let mut v = x.to_vec();
        for layer in &self.layers {
            v = layer.map.apply_unchecked(&v);
            if layer.activation == Activation::Relu {
                v.iter_mut().for_each(|z| *z = z.max(0.0));
            }
        }
        Ok(v)
    }

    /// Scalar output of a single-output net.
    pub fn eval_scalar(&self, x: &[f64]) -> Result<f64> {
        if self.output_dim() != 1 {
            return Err(Error::dim("scalar net output", 1, self.output_dim()));
        }
        Ok(self.eval(x)?[0])
    }

    /// Evaluates many points in parallel; output order matches input order.
    pub fn eval_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        xs.par_iter().map(|x| self.eval(x)).collect()
    }

    /// Instrumented evaluation returning every layer's pre- and post-activation values.
    pub fn trace(&self, x: &[f64]) -> Result<Vec<LayerTrace>> {
        if x.len() != self.input_dim {
            return Err(Error::dim("net input", self.input_dim, x.len()));
        }
        let mut out = Vec::with_capacity(self.layers.len());
        let mut v = x.to_vec();
        for layer in &self.layers {
            let pre = layer.map.apply_unchecked(&v);
            let post = match layer.activation {
                Activation::Relu => pre.iter().map(|z| z.max(0.0)).collect(),
                Activation::Linear => pre.clone(),
            };
            v = post.clone();
            out.push(LayerTrace { pre, post });
        }
        Ok(out)
    }

    pub fn to_document(&self) -> NetDocument {
        NetDocument {
            format_version: FORMAT_VERSION,
            input_dim: self.input_dim,
            layers: self
                .layers
                .iter()
                .map(|l| LayerDocument {
                    rows: l.map.rows(),
                    cols: l.map.cols(),
                    weights: l.map.weights().to_vec(),
                    bias: l.map.bias().to_vec(),
                    activation: l.activation,
                })
                .collect(),
            input_embedding: self.input_embedding,
            relu_readout: self.relu_readout,
            provenance: self.provenance.clone(),
        }
    }

    pub fn from_document(doc: NetDocument) -> Result<Self> {
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "format_version: unsupported version {}",
                doc.format_version
            )));
        }
        let mut layers = Vec::with_capacity(doc.layers.len());
        for (j, l) in doc.layers.into_iter().enumerate() {
            if l.weights.len() != l.rows * l.cols {
                return Err(Error::Validation(format!(
                    "layers[{j}].weights: expected {} entries (rows × cols), got {}",
                    l.rows * l.cols,
                    l.weights.len()
                )));
            }
            if l.bias.len() != l.rows {
                return Err(Error::Validation(format!(
                    "layers[{j}].bias: expected {} entries (rows), got {}",
                    l.rows,
                    l.bias.len()
                )));
            }
            let map = AffineMap::new(l.rows, l.cols, l.weights, l.bias)
                .map_err(|e| Error::Validation(format!("layers[{j}]: {e}")))?;
            layers.push(Layer {
                map,
                activation: l.activation,
            });
        }
        let net = Self {
            input_dim: doc.input_dim,
            layers,
            input_embedding: doc.input_embedding,
            relu_readout: doc.relu_readout,
            provenance: doc.provenance,
        };
        net.validate()?;
        Ok(net)
    }

    /// Pretty-printed JSON; floats are written in shortest round-trip form.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("net document is serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetDocument =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("net file: {e}")))?;
        Self::from_document(doc)
    }
}

pub const FORMAT_VERSION: u32 = 1;

/// On-disk form of a [`ReluNet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetDocument {
    pub format_version: u32,
    pub input_dim: usize,
    pub layers: Vec<LayerDocument>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub input_embedding: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub relu_readout: bool,
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDocument {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}
