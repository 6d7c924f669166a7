use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Negative slope of the leaky ReLU.
pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    None,
    Relu,
    LeakyRelu,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    Dense { inputs: usize, outputs: usize, activation: Activation },
    Dropout { rate: f64 },
}

/// The five canonical shifter architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchName {
    A,
    B,
    C,
    D,
    E,
}

impl ArchName {
    pub const ALL: [ArchName; 5] = [ArchName::A, ArchName::B, ArchName::C, ArchName::D, ArchName::E];

    pub fn as_str(self) -> &'static str {
        match self {
            ArchName::A => "a",
            ArchName::B => "b",
            ArchName::C => "c",
            ArchName::D => "d",
            ArchName::E => "e",
        }
    }
}

impl fmt::Display for ArchName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArchName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(ArchName::A),
            "b" => Ok(ArchName::B),
            "c" => Ok(ArchName::C),
            "d" => Ok(ArchName::D),
            "e" => Ok(ArchName::E),
            _ => Err(Error::invalid(format!("unknown architecture '{s}' (expected one of a, b, c, d, e)"))),
        }
    }
}

/// Layer stack of a shifter: consumes `d + k` inputs, emits `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub name: String,
    pub d: usize,
    pub k: usize,
    pub layers: Vec<Layer>,
}

/// Canonical layer stack for `name`.
///
/// Hidden widths are fixed (1024, 256, 2048, 128); only the input and
/// output widths follow `d` and `k`.
pub fn build_arch(name: ArchName, d: usize, k: usize) -> Result<ArchSpec> {
    use Activation::{LeakyRelu as L, Relu as R};
    let hidden: &[(usize, Activation)] = match name {
        ArchName::A => &[(1024, R)],
        ArchName::B => &[(256, R)],
        ArchName::C => &[(1024, R), (2048, R), (1024, R)],
        ArchName::D => &[(256, L), (128, L), (256, L)],
        ArchName::E => &[(1024, L), (1024, L), (1024, L)],
    };
    let dropout = (name == ArchName::E).then_some(0.2);
    ArchSpec::mlp(name.as_str(), d, k, hidden, dropout)
}

/// [`ArchSpec::param_count`] as a free function.
pub fn param_count(spec: &ArchSpec) -> usize {
    spec.param_count()
}

impl ArchSpec {
    /// Dense stack `d + k → hidden… → d`, with an optional dropout after
    /// each hidden layer. The output layer has no activation.
    pub fn mlp(name: &str, d: usize, k: usize, hidden: &[(usize, Activation)], dropout: Option<f64>) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(Error::invalid(format!("architecture needs d, k ≥ 1 (got d = {d}, k = {k})")));
        }
        if let Some(rate) = dropout {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::invalid(format!("dropout rate {rate} outside [0, 1)")));
            }
        }
        let mut layers = Vec::new();
        let mut width = d + k;
        for &(outputs, activation) in hidden {
            if outputs == 0 {
                return Err(Error::invalid("hidden layers need at least one unit"));
            }
            layers.push(Layer::Dense { inputs: width, outputs, activation });
            if let Some(rate) = dropout {
                layers.push(Layer::Dropout { rate });
            }
            width = outputs;
        }
        layers.push(Layer::Dense { inputs: width, outputs: d, activation: Activation::None });
        Ok(Self { name: name.to_string(), d, k, layers })
    }

    /// Same stack with every hidden width passed through `f`.
    pub fn map_hidden(&self, f: impl Fn(usize) -> usize) -> Result<Self> {
        let hidden: Vec<(usize, Activation)> = self
            .dense_layers()
            .take(self.dense_count() - 1)
            .map(|(_, o, a)| (f(o), a))
            .collect();
        let dropout = self.layers.iter().find_map(|l| match l {
            Layer::Dropout { rate } => Some(*rate),
            _ => None,
        });
        Self::mlp(&self.name, self.d, self.k, &hidden, dropout)
    }

    /// Same stack with dropout layers removed.
    pub fn without_dropout(&self) -> Self {
        let mut out = self.clone();
        out.layers.retain(|l| matches!(l, Layer::Dense { .. }));
        out
    }

    pub fn dense_layers(&self) -> impl Iterator<Item = (usize, usize, Activation)> + '_ {
        self.layers.iter().filter_map(|l| match *l {
            Layer::Dense { inputs, outputs, activation } => Some((inputs, outputs, activation)),
            Layer::Dropout { .. } => None,
        })
    }

    pub fn dense_count(&self) -> usize {
        self.dense_layers().count()
    }

    /// Σ over dense layers of `inputs · outputs + outputs`.
    pub fn param_count(&self) -> usize {
        self.dense_layers().map(|(i, o, _)| i * o + o).sum()
    }

    /// Checks that widths chain from `d + k` to `d`.
    pub fn validate(&self) -> Result<()> {
        let mut width = self.d + self.k;
        let mut seen_dense = false;
        for layer in &self.layers {
            match *layer {
                Layer::Dense { inputs, outputs, .. } => {
                    if inputs != width || outputs == 0 {
                        return Err(Error::invalid(format!("dense layer expects {inputs} inputs but receives {width}")));
                    }
                    width = outputs;
                    seen_dense = true;
                }
                Layer::Dropout { rate } => {
                    if !(0.0..1.0).contains(&rate) {
                        return Err(Error::invalid(format!("dropout rate {rate} outside [0, 1)")));
                    }
                }
            }
        }
        if !seen_dense || width != self.d {
            return Err(Error::invalid(format!("architecture emits {width} values, expected d = {}", self.d)));
        }
        Ok(())
    }
}
