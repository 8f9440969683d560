//! Target specifications accepted by `--target`.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use narrownet::dc_decompose::dc_from_json;
use narrownet::deepen::ShallowNet;
use narrownet::registry::BuiltinTarget;
use narrownet::simplex::SimplicialInterpolant;
use narrownet::{DcFn, Error, Result};
use sha2::{Digest, Sha256};

/// What the user wrote after `--target`.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    Builtin {
        name: String,
        params: BTreeMap<String, f64>,
    },
    VertexFile(PathBuf),
    DcFile(PathBuf),
    ShallowFile(PathBuf),
}

impl TargetSpec {
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(p) = s.strip_prefix("vertex-file:") {
            return Ok(TargetSpec::VertexFile(p.into()));
        }
        if let Some(p) = s.strip_prefix("dc-file:") {
            return Ok(TargetSpec::DcFile(p.into()));
        }
        if let Some(p) = s.strip_prefix("shallow-file:") {
            return Ok(TargetSpec::ShallowFile(p.into()));
        }
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = BTreeMap::new();
        for kv in rest.split(',').filter(|kv| !kv.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("target parameter {kv:?}: expected key=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("target parameter {k}: {v:?} is not a number")))?;
            params.insert(k.trim().to_string(), v);
        }
        Ok(TargetSpec::Builtin {
            name: name.to_string(),
            params,
        })
    }
}

/// A target with everything loaded.
#[derive(Debug, Clone)]
pub enum Target {
    Builtin(BuiltinTarget),
    Vertex(SimplicialInterpolant),
    Dc(DcFn),
    Shallow(ShallowNet),
}

#[derive(Debug, Clone)]
pub struct LoadedTarget {
    pub spec: String,
    pub target: Target,
    /// SHA-256 over the target's defining data (name, dimension, parameters, or file bytes).
    pub digest: String,
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

impl LoadedTarget {
    /// `dim` applies to builtins; file targets carry their own dimension and reject a
    /// conflicting `--dim`.
    pub fn load(spec_text: &str, dim: Option<usize>) -> Result<Self> {
        let spec = TargetSpec::parse(spec_text)?;
        let mut hasher = Sha256::new();
        let target = match &spec {
            TargetSpec::Builtin { name, params } => {
                let d = dim.unwrap_or(1);
                hasher.update(format!("builtin:{name};dim={d};params={params:?}"));
                Target::Builtin(BuiltinTarget::lookup(name, d, params)?)
            }
            TargetSpec::VertexFile(p) => {
                let text = read(p)?;
                hasher.update(&text);
                Target::Vertex(SimplicialInterpolant::from_text(&text)?)
            }
            TargetSpec::DcFile(p) => {
                let text = read(p)?;
                hasher.update(&text);
                Target::Dc(dc_from_json(&text)?)
            }
            TargetSpec::ShallowFile(p) => {
                let text = read(p)?;
                hasher.update(&text);
                Target::Shallow(ShallowNet::from_json(&text)?)
            }
        };
        let loaded = Self {
            spec: spec_text.to_string(),
            target,
            digest: hex::encode(hasher.finalize()),
        };
        if let (Some(d), false) = (dim, matches!(spec, TargetSpec::Builtin { .. })) {
            if d != loaded.dim() {
                return Err(Error::InvalidArgument(format!(
                    "--dim {d} conflicts with the target file's dimension {}",
                    loaded.dim()
                )));
            }
        }
        Ok(loaded)
    }

    pub fn dim(&self) -> usize {
        match &self.target {
            Target::Builtin(b) => b.dim,
            Target::Vertex(p) => p.dim(),
            Target::Dc(f) => f.dim(),
            Target::Shallow(s) => s.dim(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.target {
            Target::Builtin(b) => b.eval(x),
            Target::Vertex(p) => p.eval(x).expect("dimension checked"),
            Target::Dc(f) => f.eval_unchecked(x),
            Target::Shallow(s) => s.eval(x).expect("dimension checked"),
        }
    }

    pub fn kind(&self) -> &'static str {
        match &self.target {
            Target::Builtin(_) => "builtin",
            Target::Vertex(_) => "vertex-file",
            Target::Dc(_) => "dc-file",
            Target::Shallow(_) => "shallow-file",
        }
    }
}
