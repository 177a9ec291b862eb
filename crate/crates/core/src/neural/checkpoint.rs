//! Text checkpoint format.
//!
//! ```text
//! nebl-checkpoint 1
//! layer_dims: 5 32 1
//! activation: relu
//! clip_bound: 1
//! input_transform: log
//! label: erm
//! seed: 42
//! config_hash: 0123456789abcdef
//! epochs: 100
//! best_epoch: 97
//! train_risk: 0.0123
//! validation_risk: none
//! train_trace: ...
//! validation_trace: ...
//! layer 0 weights: ...
//! layer 0 biases: ...
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a saved
//! checkpoint reloads bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::neural::network::{InputTransform, Layer, Network};

const MAGIC: &str = "nebl-checkpoint 1";

/// A trained network with its training metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: Network,
    pub label: String,
    pub seed: u64,
    pub config_hash: u64,
    pub train_risk: f64,
    pub validation_risk: Option<f64>,
    pub epochs: usize,
    pub best_epoch: usize,
    pub train_trace: Vec<f64>,
    pub validation_trace: Vec<f64>,
}

fn join<T: std::fmt::Debug>(xs: &[T]) -> String {
    let mut s = String::new();
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:?}");
    }
    s
}

fn parse_list<T: std::str::FromStr>(s: &str, key: &str) -> Result<Vec<T>> {
    s.split_whitespace()
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| Error::Format(format!("bad value {t:?} for {key}")))
        })
        .collect()
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let net = &self.network;
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(s, "layer_dims: {}", join(&net.layer_dims()));
        let _ = writeln!(s, "activation: relu");
        let _ = writeln!(
            s,
            "clip_bound: {}",
            net.clip.map_or("none".to_string(), |b| format!("{b:?}"))
        );
        let _ = writeln!(s, "input_transform: {}", net.input_transform.label());
        let _ = writeln!(s, "label: {}", self.label);
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "config_hash: {:016x}", self.config_hash);
        let _ = writeln!(s, "epochs: {}", self.epochs);
        let _ = writeln!(s, "best_epoch: {}", self.best_epoch);
        let _ = writeln!(s, "train_risk: {:?}", self.train_risk);
        let _ = writeln!(
            s,
            "validation_risk: {}",
            self.validation_risk.map_or("none".to_string(), |v| format!("{v:?}"))
        );
        let _ = writeln!(s, "train_trace: {}", join(&self.train_trace));
        let _ = writeln!(s, "validation_trace: {}", join(&self.validation_trace));
        for (l, layer) in net.layers.iter().enumerate() {
            let _ = writeln!(s, "layer {l} weights: {}", join(&layer.weights));
            let _ = writeln!(s, "layer {l} biases: {}", join(&layer.biases));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(MAGIC) {
            return Err(Error::Format("missing checkpoint header".into()));
        }
        let mut fields = std::collections::BTreeMap::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once(':')
                .ok_or_else(|| Error::Format(format!("malformed line {line:?}")))?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            fields
                .get(k)
                .map(String::as_str)
                .ok_or_else(|| Error::Format(format!("missing key {k}")))
        };
        let dims: Vec<usize> = parse_list(get("layer_dims")?, "layer_dims")?;
        if get("activation")? != "relu" {
            return Err(Error::Format("only relu activation is supported".into()));
        }
        let clip = match get("clip_bound")? {
            "none" => None,
            v => Some(v.parse::<f64>().map_err(|_| Error::Format("bad clip_bound".into()))?),
        };
        let mut net = Network::zeros(&dims, clip).map_err(|e| Error::Format(e.to_string()))?;
        net.input_transform = InputTransform::parse(get("input_transform")?)?;
        for (l, layer) in net.layers.iter_mut().enumerate() {
            let w: Vec<f64> = parse_list(get(&format!("layer {l} weights"))?, "weights")?;
            let b: Vec<f64> = parse_list(get(&format!("layer {l} biases"))?, "biases")?;
            if w.len() != layer.weights.len() {
                return Err(Error::DimensionMismatch {
                    expected: layer.weights.len(),
                    got: w.len(),
                });
            }
            if b.len() != layer.biases.len() {
                return Err(Error::DimensionMismatch {
                    expected: layer.biases.len(),
                    got: b.len(),
                });
            }
            *layer = Layer {
                inputs: layer.inputs,
                outputs: layer.outputs,
                weights: w,
                biases: b,
            };
        }
        if fields.contains_key(&format!("layer {} weights", net.layers.len())) {
            return Err(Error::Format("more weight layers than layer_dims declares".into()));
        }
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse::<f64>()
                .map_err(|_| Error::Format(format!("bad value for {k}")))
        };
        let int = |k: &str| -> Result<u64> {
            get(k)?
                .parse::<u64>()
                .map_err(|_| Error::Format(format!("bad value for {k}")))
        };
        Ok(Checkpoint {
            network: net,
            label: get("label")?.to_string(),
            seed: int("seed")?,
            config_hash: u64::from_str_radix(get("config_hash")?, 16)
                .map_err(|_| Error::Format("bad config_hash".into()))?,
            train_risk: num("train_risk")?,
            validation_risk: match get("validation_risk")? {
                "none" => None,
                _ => Some(num("validation_risk")?),
            },
            epochs: int("epochs")? as usize,
            best_epoch: int("best_epoch")? as usize,
            train_trace: parse_list(get("train_trace")?, "train_trace")?,
            validation_trace: parse_list(get("validation_trace")?, "validation_trace")?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Checkpoint::from_text(&std::fs::read_to_string(path)?)
    }

    /// Loads a checkpoint and checks its input/output dimensions.
    pub fn load_expecting(path: &Path, input: usize, output: usize) -> Result<Self> {
        let ck = Checkpoint::load(path)?;
        if ck.network.input_dim() != input {
            return Err(Error::DimensionMismatch {
                expected: input,
                got: ck.network.input_dim(),
            });
        }
        if ck.network.output_dim() != output {
            return Err(Error::DimensionMismatch {
                expected: output,
                got: ck.network.output_dim(),
            });
        }
        Ok(ck)
    }
}
