//! Plain-text (JSON) instance files.
//!
//! An instance is stored structurally: signal length, sparsifying transform,
//! and for each channel its Fourier rows, per-row spectrum and data. Complex
//! numbers are `[re, im]` pairs. The ground truth is optional.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "n": 4,
//!   "transform": "identity",
//!   "sigma": 0.0,
//!   "channels": [
//!     { "rows": [0, 1], "spectrum": [[1.0, 0.0], [1.0, 0.0]], "data": [[4.0, 0.0], [0.0, -1.0]] }
//!   ],
//!   "truth": null
//! }
//! ```

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{make_fourier_restriction, make_sparsifying_transform, Adjoint, Composition, OperatorRef, TransformKind};
use crate::synth::GroundTruth;
use crate::varpro::{ChannelOperator, Instance};

pub const INSTANCE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelRecord {
    pub rows: Vec<usize>,
    pub spectrum: Vec<Complex64>,
    pub data: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub n: usize,
    pub transform: TransformKind,
    pub sigma: f64,
    pub channels: Vec<ChannelRecord>,
    #[serde(default)]
    pub truth: Option<GroundTruth>,
}

/// `F ∘ C^T`: Fourier restriction of the synthesized signal.
pub fn channel_operator(
    n: usize,
    transform: TransformKind,
    rows: &[usize],
    spectrum: &[Complex64],
) -> Result<OperatorRef> {
    let f: OperatorRef = Arc::new(make_fourier_restriction(n, rows, spectrum)?);
    if transform == TransformKind::Identity {
        return Ok(f);
    }
    let analysis: OperatorRef = Arc::new(make_sparsifying_transform(transform, n)?);
    Ok(Arc::new(Composition::new(f, Arc::new(Adjoint(analysis)))?))
}

impl InstanceFile {
    pub fn build(&self) -> Result<Instance> {
        if self.schema_version != INSTANCE_SCHEMA_VERSION {
            return Err(Error::InvalidInstance(format!(
                "unsupported schema_version {}, expected {INSTANCE_SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        let channels = self
            .channels
            .iter()
            .enumerate()
            .map(|(index, c)| {
                Ok(ChannelOperator {
                    index,
                    op: channel_operator(self.n, self.transform, &c.rows, &c.spectrum)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let data = self.channels.iter().map(|c| c.data.clone()).collect();
        Instance::new(channels, data, self.sigma)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInstance(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInstance(e.to_string()))
    }

    pub fn read(path: &Path) -> std::io::Result<Result<Self>> {
        Ok(Self::from_json(&std::fs::read_to_string(path)?))
    }

    pub fn write(&self, path: &Path) -> std::io::Result<Result<()>> {
        match self.to_json() {
            Ok(text) => std::fs::write(path, text + "\n").map(Ok),
            Err(e) => Ok(Err(e)),
        }
    }
}
