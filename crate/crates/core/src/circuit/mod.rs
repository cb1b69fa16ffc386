//! Circuit descriptions for quanvolutional filters.
//!
//! A [`CircuitSpec`] is an immutable, serialisable list of [`GateOp`]s whose
//! angles are either constants or functions of patch features. [`CircuitSpec::bind`]
//! resolves a spec against one patch into gates the simulator can run.

mod families;
mod json;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::sim::{self, BoundGate, Pauli};
use crate::{Error, Result};

pub use families::{
    henderson_processing, higher_order_encoder, integrated_circuit, rotational_encoder,
    rotational_henderson, threshold_encoder, HENDERSON_ANGLE_RANGE,
};
pub use json::SCHEMA_VERSION;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Rotational,
    Threshold,
    HigherOrder,
    HendersonProcessing,
    /// Rotational encoding followed by a Henderson processing circuit.
    RotationalHenderson,
    Integrated,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "rotational" => Ok(Family::Rotational),
            "threshold" => Ok(Family::Threshold),
            "higher-order" => Ok(Family::HigherOrder),
            "henderson" | "henderson-processing" => Ok(Family::HendersonProcessing),
            "rotational-henderson" | "qnn-rotational" => Ok(Family::RotationalHenderson),
            "integrated" => Ok(Family::Integrated),
            other => Err(Error::arg(format!("unknown circuit family `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingKind {
    #[default]
    Simple,
    #[serde(alias = "rndmul")]
    RndMul,
    #[serde(alias = "rndlin")]
    RndLin,
}

impl FromStr for MappingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "simple" => Ok(MappingKind::Simple),
            "rndmul" | "rnd_mul" => Ok(MappingKind::RndMul),
            "rndlin" | "rnd_lin" => Ok(MappingKind::RndLin),
            other => Err(Error::arg(format!("unknown mapping function `{other}`"))),
        }
    }
}

impl fmt::Display for MappingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MappingKind::Simple => "simple",
            MappingKind::RndMul => "rndmul",
            MappingKind::RndLin => "rndlin",
        })
    }
}

/// Pixel-to-angle mapping: `simple` x·π, `rndmul` 2βx·π, `rndlin` (βx+σ)·π.
/// Parameters the kind does not use are stored as 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappingFn {
    pub kind: MappingKind,
    pub beta: f64,
    pub sigma: f64,
}

impl MappingFn {
    pub const SIMPLE: MappingFn = MappingFn {
        kind: MappingKind::Simple,
        beta: 0.0,
        sigma: 0.0,
    };

    /// Builds a mapping, zeroing the parameters `kind` ignores.
    pub fn new(kind: MappingKind, beta: f64, sigma: f64) -> Self {
        match kind {
            MappingKind::Simple => Self::SIMPLE,
            MappingKind::RndMul => MappingFn { kind, beta, sigma: 0.0 },
            MappingKind::RndLin => MappingFn { kind, beta, sigma },
        }
    }

    pub fn apply(&self, x: f64) -> Result<f64> {
        map_alpha(self, x)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        match self.kind {
            MappingKind::Simple if self.beta != 0.0 || self.sigma != 0.0 => {
                Err("simple mapping must have beta = sigma = 0".into())
            }
            MappingKind::RndMul if !unit(self.beta) || self.sigma != 0.0 => {
                Err("rndmul mapping needs beta in [0,1] and sigma = 0".into())
            }
            MappingKind::RndLin if !unit(self.beta) || !unit(self.sigma) => {
                Err("rndlin mapping needs beta and sigma in [0,1]".into())
            }
            _ => Ok(()),
        }
    }
}

pub fn map_alpha(f: &MappingFn, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::arg(format!("pixel value {x} outside [0,1]")));
    }
    Ok(match f.kind {
        MappingKind::Simple => x * PI,
        MappingKind::RndMul => 2.0 * f.beta * x * PI,
        MappingKind::RndLin => (f.beta * x + f.sigma) * PI,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum AngleSource {
    Constant { radians: f64 },
    Feature { index: usize, map: MappingFn },
    /// π²·x_first·x_second, the pairwise angle of the higher-order encoder.
    FeatureProduct { first: usize, second: usize },
}

impl AngleSource {
    fn resolve(&self, patch: &[f64]) -> Result<f64> {
        match *self {
            AngleSource::Constant { radians } => Ok(radians),
            AngleSource::Feature { index, ref map } => map_alpha(map, patch[index]),
            AngleSource::FeatureProduct { first, second } => {
                Ok(map_alpha(&MappingFn::SIMPLE, patch[first])? * map_alpha(&MappingFn::SIMPLE, patch[second])?)
            }
        }
    }

    fn features(&self) -> impl Iterator<Item = usize> {
        let (a, b) = match *self {
            AngleSource::Constant { .. } => (None, None),
            AngleSource::Feature { index, .. } => (Some(index), None),
            AngleSource::FeatureProduct { first, second } => (Some(first), Some(second)),
        };
        a.into_iter().chain(b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Fixed1 {
    S,
    T,
    H,
    X,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Fixed2 {
    Cnot,
    Swap,
    SqrtSwap,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GateKind {
    #[serde(rename = "fixed_1q")]
    Fixed1Q { name: Fixed1 },
    #[serde(rename = "rot_1q")]
    Rot1Q { axis: Axis, angle: AngleSource },
    #[serde(rename = "fixed_2q")]
    Fixed2Q { name: Fixed2 },
    #[serde(rename = "pauli_exp_2q")]
    PauliExp2Q {
        sigma1: Pauli,
        sigma2: Pauli,
        angle: AngleSource,
    },
    /// X when the bound feature is 1, nothing when it is 0.
    ThresholdX { feature: usize },
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Fixed2Q { .. } | GateKind::PauliExp2Q { .. } => 2,
            _ => 1,
        }
    }

    fn features(&self) -> Box<dyn Iterator<Item = usize> + '_> {
        match self {
            GateKind::Rot1Q { angle, .. } | GateKind::PauliExp2Q { angle, .. } => Box::new(angle.features()),
            GateKind::ThresholdX { feature } => Box::new(std::iter::once(*feature)),
            _ => Box::new(std::iter::empty()),
        }
    }

    fn mapping(&self) -> Option<&MappingFn> {
        match self {
            GateKind::Rot1Q {
                angle: AngleSource::Feature { map, .. },
                ..
            }
            | GateKind::PauliExp2Q {
                angle: AngleSource::Feature { map, .. },
                ..
            } => Some(map),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    #[serde(flatten)]
    pub kind: GateKind,
    pub targets: Vec<usize>,
}

impl GateOp {
    pub fn one(kind: GateKind, q: usize) -> Self {
        GateOp { kind, targets: vec![q] }
    }

    pub fn two(kind: GateKind, a: usize, b: usize) -> Self {
        GateOp {
            kind,
            targets: vec![a, b],
        }
    }

    fn bind(&self, patch: &[f64]) -> Result<Option<BoundGate>> {
        let t = &self.targets;
        let one = |u| Ok(Some(BoundGate::One { u, target: t[0] }));
        let two = |u| {
            Ok(Some(BoundGate::Two {
                u,
                targets: [t[0], t[1]],
            }))
        };
        match &self.kind {
            GateKind::Fixed1Q { name } => one(match name {
                Fixed1::S => sim::s_gate(),
                Fixed1::T => sim::t_gate(),
                Fixed1::H => sim::h_gate(),
                Fixed1::X => sim::x_gate(),
            }),
            GateKind::Rot1Q { axis, angle } => {
                let theta = angle.resolve(patch)?;
                one(match axis {
                    Axis::X => sim::rx_gate(theta)?,
                    Axis::Y => sim::ry_gate(theta)?,
                    Axis::Z => sim::rz_gate(theta)?,
                })
            }
            GateKind::Fixed2Q { name } => two(match name {
                Fixed2::Cnot => sim::cnot_gate(),
                Fixed2::Swap => sim::swap_gate(),
                Fixed2::SqrtSwap => sim::sqrt_swap_gate(),
            }),
            GateKind::PauliExp2Q { sigma1, sigma2, angle } => {
                two(sim::pauli_exp_gate(angle.resolve(patch)?, *sigma1, *sigma2)?)
            }
            GateKind::ThresholdX { feature } => {
                let x = patch[*feature];
                if x == 1.0 {
                    one(sim::x_gate())
                } else if x == 0.0 {
                    Ok(None)
                } else {
                    Err(Error::arg(format!(
                        "threshold encoding needs binary features, feature {feature} is {x}"
                    )))
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitSpec {
    pub family: Family,
    pub k: usize,
    pub n_qubits: usize,
    pub seed: u64,
    pub gates: Vec<GateOp>,
}

impl CircuitSpec {
    pub fn n_features(&self) -> usize {
        self.k * self.k
    }

    /// Checks every structural invariant, naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        let fail = |field: String, msg: String| Err(Error::Parse(format!("{field}: {msg}")));
        if self.k == 0 {
            return fail("k".into(), "kernel size must be at least 1".into());
        }
        if !(1..=sim::MAX_QUBITS).contains(&self.n_qubits) {
            return fail("n_qubits".into(), format!("must be in 1..={}", sim::MAX_QUBITS));
        }
        let nf = self.n_features();
        for (i, g) in self.gates.iter().enumerate() {
            if g.targets.len() != g.kind.arity() {
                return fail(
                    format!("gates[{i}].targets"),
                    format!("expected {} targets, got {}", g.kind.arity(), g.targets.len()),
                );
            }
            if let Some(&q) = g.targets.iter().find(|&&q| q >= self.n_qubits) {
                return fail(format!("gates[{i}].targets"), format!("qubit {q} out of range"));
            }
            if g.targets.len() == 2 && g.targets[0] == g.targets[1] {
                return fail(format!("gates[{i}].targets"), "two-qubit gate on a single qubit".into());
            }
            if let Some(f) = g.kind.features().find(|&f| f >= nf) {
                return fail(format!("gates[{i}].angle"), format!("feature index {f} not below k² = {nf}"));
            }
            if let Some(m) = g.kind.mapping() {
                if let Err(msg) = m.validate() {
                    return fail(format!("gates[{i}].angle.map"), msg);
                }
            }
            if let GateKind::Rot1Q {
                angle: AngleSource::Constant { radians },
                ..
            }
            | GateKind::PauliExp2Q {
                angle: AngleSource::Constant { radians },
                ..
            } = g.kind
            {
                if !radians.is_finite() {
                    return fail(format!("gates[{i}].angle.radians"), "must be finite".into());
                }
            }
        }
        match self.family {
            Family::Integrated => {
                if self.gates.len() < nf {
                    return fail("gates".into(), format!("L = {} < k² = {nf}", self.gates.len()));
                }
                if !self.gates.iter().all(|g| matches!(g.kind, GateKind::PauliExp2Q { .. })) {
                    return fail("gates".into(), "integrated circuits hold only pauli_exp_2q gates".into());
                }
                let covered = self.feature_coverage();
                if let Some(missing) = covered.iter().position(|&c| c == 0) {
                    return fail("gates".into(), format!("feature {missing} is never encoded"));
                }
            }
            Family::Rotational => {
                if self.n_qubits != nf {
                    return fail("n_qubits".into(), format!("rotational encoding needs k² = {nf} qubits"));
                }
                let mut seen = vec![false; nf];
                for (i, g) in self.gates.iter().enumerate() {
                    match g.kind {
                        GateKind::Rot1Q { axis: Axis::X, .. } if !seen[g.targets[0]] => seen[g.targets[0]] = true,
                        _ => return fail(format!("gates[{i}]"), "expected one RX per qubit".into()),
                    }
                }
                if seen.iter().any(|s| !s) {
                    return fail("gates".into(), "expected one RX per qubit".into());
                }
            }
            Family::Threshold | Family::HigherOrder | Family::RotationalHenderson | Family::HendersonProcessing => {
                if self.n_qubits != nf {
                    return fail("n_qubits".into(), format!("this family needs k² = {nf} qubits"));
                }
            }
        }
        Ok(())
    }

    /// How many gates reference each feature index.
    pub fn feature_coverage(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_features()];
        for g in &self.gates {
            for f in g.kind.features() {
                if f < counts.len() {
                    counts[f] += 1;
                }
            }
        }
        counts
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.kind.arity() == 2).count()
    }

    /// Resolves every angle against `patch` (row-major, k² values in [0,1]).
    /// Pure: the same patch always yields the same gates.
    pub fn bind(&self, patch: &[f64]) -> Result<Vec<BoundGate>> {
        if patch.len() != self.n_features() {
            return Err(Error::arg(format!(
                "patch has {} values, circuit expects k² = {}",
                patch.len(),
                self.n_features()
            )));
        }
        if let Some(x) = patch.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::arg(format!("pixel value {x} outside [0,1]")));
        }
        let mut out = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            if let Some(b) = g.bind(patch)? {
                out.push(b);
            }
        }
        Ok(out)
    }

    /// Binds `patch` and simulates from `|0…0⟩`.
    pub fn simulate(&self, patch: &[f64]) -> Result<sim::StateVector> {
        sim::run(self.n_qubits, &self.bind(patch)?)
    }

    /// SHA-256 of the canonical JSON serialisation.
    pub fn hash(&self) -> String {
        crate::seed::sha256_hex(self.to_json().as_bytes())
    }

    /// Appends `other`'s gates after this circuit's.
    pub fn then(mut self, other: &CircuitSpec, family: Family) -> Result<CircuitSpec> {
        if self.n_qubits != other.n_qubits || self.k != other.k {
            return Err(Error::arg("cannot concatenate circuits of different shape"));
        }
        self.gates.extend(other.gates.iter().cloned());
        self.family = family;
        self.seed = other.seed;
        Ok(self)
    }
}
