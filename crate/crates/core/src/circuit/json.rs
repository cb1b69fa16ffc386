//! JSON form of a [`CircuitSpec`].
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "family": "integrated",
//!   "k": 2,
//!   "n_qubits": 4,
//!   "seed": 42,
//!   "gates": [
//!     {"kind": "pauli_exp_2q", "sigma1": "X", "sigma2": "Z",
//!      "angle": {"source": "feature", "index": 3,
//!                "map": {"kind": "rndmul", "beta": 0.25, "sigma": 0.0}},
//!      "targets": [0, 2]}
//!   ]
//! }
//! ```
//!
//! Other gate kinds: `fixed_1q` (`name`: S|T|H|X), `rot_1q` (`axis`: X|Y|Z,
//! `angle`), `fixed_2q` (`name`: CNOT|SWAP|SQRT_SWAP) and `threshold_x`
//! (`feature`). Angle sources: `constant` (`radians`), `feature` (`index`,
//! `map`) and `feature_product` (`first`, `second`).

use serde::{Deserialize, Serialize};

use super::{CircuitSpec, Family, GateOp};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Document {
    schema_version: u32,
    family: Family,
    k: usize,
    n_qubits: usize,
    seed: u64,
    gates: Vec<GateOp>,
}

impl CircuitSpec {
    pub fn to_json(&self) -> String {
        let doc = Document {
            schema_version: SCHEMA_VERSION,
            family: self.family,
            k: self.k,
            n_qubits: self.n_qubits,
            seed: self.seed,
            gates: self.gates.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("circuit documents always serialise")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Document = serde_json::from_str(text).map_err(|e| Error::Parse(format!("circuit document: {e}")))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "schema_version: unsupported version {} (expected {SCHEMA_VERSION})",
                doc.schema_version
            )));
        }
        let spec = CircuitSpec {
            family: doc.family,
            k: doc.k,
            n_qubits: doc.n_qubits,
            seed: doc.seed,
            gates: doc.gates,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}
