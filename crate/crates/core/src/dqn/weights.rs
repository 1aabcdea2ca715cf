//! Portable JSON weights file.
//!
//! ```json
//! {"version": "...", "layer_sizes": [24, 64, 64, 12],
//!  "weights": [[...], ...], "biases": [[...], ...], "normalize_age": false}
//! ```
//!
//! `weights[l]` is layer `l`'s `[out][in]` matrix flattened row-major, so
//! entry `o * in + i` connects input `i` to output `o`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::QNetwork;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const WEIGHTS_FORMAT_VERSION: &str = "uavedge-weights/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub version: String,
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    /// State encoding the network was trained with.
    #[serde(default)]
    pub normalize_age: bool,
}

impl WeightsFile {
    pub fn from_network<T: Scalar>(net: &QNetwork<T>, normalize_age: bool) -> Self {
        let widen = |v: &[Vec<T>]| -> Vec<Vec<f64>> {
            v.iter().map(|l| l.iter().map(|x| x.to_f64_lossy()).collect()).collect()
        };
        Self {
            version: WEIGHTS_FORMAT_VERSION.to_string(),
            layer_sizes: net.layer_sizes().to_vec(),
            weights: widen(&net.to_row_major()),
            biases: widen(net.biases()),
            normalize_age,
        }
    }

    pub fn to_network<T: Scalar>(&self) -> Result<QNetwork<T>> {
        if self.version != WEIGHTS_FORMAT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported weights version `{}`",
                self.version
            )));
        }
        let narrow = |v: &[Vec<f64>]| -> Vec<Vec<T>> {
            v.iter().map(|l| l.iter().map(|&x| T::lit(x)).collect()).collect()
        };
        QNetwork::from_row_major(&self.layer_sizes, narrow(&self.weights), narrow(&self.biases))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        std::fs::write(path, s).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}
