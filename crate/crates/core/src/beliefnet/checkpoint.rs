use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::layout::{Layout, NetDims};
use super::net::BeliefNet;
use crate::data::io::{read_json, write_json};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

/// Serialized network: dimensions, named row-major tensors and an optional
/// training-config snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub dims: NetDims,
    pub tensors: IndexMap<String, Tensor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl BeliefNet {
    pub fn to_checkpoint(&self, config: Option<serde_json::Value>) -> Checkpoint {
        let tensors = self
            .layout
            .named()
            .iter()
            .map(|(name, b)| {
                (
                    name.to_string(),
                    Tensor {
                        shape: [b.rows, b.cols],
                        data: self.params[b.range()].to_vec(),
                    },
                )
            })
            .collect();
        Checkpoint {
            dims: self.dims,
            tensors,
            config,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let mut net = BeliefNet::zeros(ck.dims)?;
        let layout = Layout::new(&ck.dims);
        for (name, b) in layout.named() {
            let t = ck.tensors.get(name).ok_or_else(|| Error::Parse {
                what: "checkpoint".into(),
                message: format!("missing tensor {name}"),
            })?;
            if t.shape != [b.rows, b.cols] || t.data.len() != b.len() {
                return Err(Error::Parse {
                    what: "checkpoint".into(),
                    message: format!(
                        "tensor {name} has shape {:?}, expected [{}, {}]",
                        t.shape, b.rows, b.cols
                    ),
                });
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("checkpoint tensor"));
            }
            net.params[b.range()].copy_from_slice(&t.data);
        }
        Ok(net)
    }
}

pub fn save_checkpoint(
    net: &BeliefNet,
    config: Option<serde_json::Value>,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_json(path.as_ref(), &net.to_checkpoint(config))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<BeliefNet> {
    let ck: Checkpoint = read_json(path.as_ref())?;
    BeliefNet::from_checkpoint(&ck)
}
