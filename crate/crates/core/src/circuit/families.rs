use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{AngleSource, Axis, CircuitSpec, Family, Fixed1, Fixed2, GateKind, GateOp, MappingFn, MappingKind};
use crate::sim::{Pauli, MAX_QUBITS};
use crate::{seed, Error, Result};

/// Rotation angles in Henderson processing circuits are uniform in
/// `[0, HENDERSON_ANGLE_RANGE)`, one full period of the rotation gates.
pub const HENDERSON_ANGLE_RANGE: f64 = 2.0 * PI;

fn check_k(k: usize, qubits_per_feature: bool) -> Result<()> {
    if k == 0 {
        return Err(Error::arg("kernel size must be at least 1"));
    }
    if qubits_per_feature && k * k > MAX_QUBITS {
        return Err(Error::arg(format!(
            "kernel size {k} needs {} qubits, more than {MAX_QUBITS}",
            k * k
        )));
    }
    Ok(())
}

/// One RX(π·x_i) per qubit, `k²` qubits.
pub fn rotational_encoder(k: usize) -> Result<CircuitSpec> {
    check_k(k, true)?;
    let nf = k * k;
    let gates = (0..nf)
        .map(|i| {
            GateOp::one(
                GateKind::Rot1Q {
                    axis: Axis::X,
                    angle: AngleSource::Feature {
                        index: i,
                        map: MappingFn::SIMPLE,
                    },
                },
                i,
            )
        })
        .collect();
    Ok(CircuitSpec {
        family: Family::Rotational,
        k,
        n_qubits: nf,
        seed: 0,
        gates,
    })
}

/// X on every qubit whose binary feature is 1.
pub fn threshold_encoder(k: usize) -> Result<CircuitSpec> {
    check_k(k, true)?;
    let nf = k * k;
    Ok(CircuitSpec {
        family: Family::Threshold,
        k,
        n_qubits: nf,
        seed: 0,
        gates: (0..nf).map(|i| GateOp::one(GateKind::ThresholdX { feature: i }, i)).collect(),
    })
}

/// Rotational encoding followed by exp(-i π² x_i x_j Z⊗Z) on every pair i < j.
pub fn higher_order_encoder(k: usize) -> Result<CircuitSpec> {
    let mut spec = rotational_encoder(k)?;
    let nf = k * k;
    for i in 0..nf {
        for j in i + 1..nf {
            spec.gates.push(GateOp::two(
                GateKind::PauliExp2Q {
                    sigma1: Pauli::Z,
                    sigma2: Pauli::Z,
                    angle: AngleSource::FeatureProduct { first: i, second: j },
                },
                i,
                j,
            ));
        }
    }
    spec.family = Family::HigherOrder;
    Ok(spec)
}

/// Random processing circuit on `k²` qubits: up to `2k²` random single-qubit
/// gates, a random CNOT/SWAP/√SWAP on each qubit pair with probability `p`,
/// then a global shuffle.
pub fn henderson_processing(k: usize, p: f64, seed: u64) -> Result<CircuitSpec> {
    check_k(k, true)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::arg(format!("connection probability {p} outside [0,1]")));
    }
    let nf = k * k;
    let mut rng = seed::rng(seed);
    let mut gates = Vec::new();

    let singles = rng.gen_range(1..=2 * nf);
    for _ in 0..singles {
        let q = rng.gen_range(0..nf);
        let kind = match rng.gen_range(0..6) {
            axis @ 0..=2 => GateKind::Rot1Q {
                axis: [Axis::X, Axis::Y, Axis::Z][axis],
                angle: AngleSource::Constant {
                    radians: rng.gen_range(0.0..HENDERSON_ANGLE_RANGE),
                },
            },
            3 => GateKind::Fixed1Q { name: Fixed1::S },
            4 => GateKind::Fixed1Q { name: Fixed1::T },
            _ => GateKind::Fixed1Q { name: Fixed1::H },
        };
        gates.push(GateOp::one(kind, q));
    }

    for a in 0..nf {
        for b in a + 1..nf {
            if !rng.gen_bool(p) {
                continue;
            }
            let name = [Fixed2::Cnot, Fixed2::Swap, Fixed2::SqrtSwap][rng.gen_range(0..3)];
            let (first, second) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            gates.push(GateOp::two(GateKind::Fixed2Q { name }, first, second));
        }
    }

    gates.shuffle(&mut rng);
    Ok(CircuitSpec {
        family: Family::HendersonProcessing,
        k,
        n_qubits: nf,
        seed,
        gates,
    })
}

/// Rotational encoder followed by a Henderson processing circuit.
pub fn rotational_henderson(k: usize, p: f64, seed: u64) -> Result<CircuitSpec> {
    rotational_encoder(k)?.then(&henderson_processing(k, p, seed)?, Family::RotationalHenderson)
}

/// Integrated encoding: `gates` Pauli-exponential gates on `n_qubits`, each
/// rotating by a mapped feature. The first `k²` gates take the features in a
/// random order so every feature is encoded at least once.
pub fn integrated_circuit(
    k: usize,
    n_qubits: usize,
    gates: usize,
    alpha: MappingKind,
    seed: u64,
) -> Result<CircuitSpec> {
    check_k(k, false)?;
    if !(2..=MAX_QUBITS).contains(&n_qubits) {
        return Err(Error::arg(format!(
            "integrated encoding needs 2..={MAX_QUBITS} qubits, got {n_qubits}"
        )));
    }
    let nf = k * k;
    if gates < nf {
        return Err(Error::arg(format!(
            "L = {gates} gates cannot encode all k² = {nf} features (need L ≥ k²)"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut features: Vec<usize> = (0..nf).collect();
    features.shuffle(&mut rng);
    features.extend((nf..gates).map(|_| rng.gen_range(0..nf)));

    let ops = features
        .into_iter()
        .map(|index| {
            let sigma1 = Pauli::ALL[rng.gen_range(0..4)];
            let sigma2 = Pauli::ALL[rng.gen_range(0..4)];
            let a = rng.gen_range(0..n_qubits);
            let mut b = rng.gen_range(0..n_qubits - 1);
            if b >= a {
                b += 1;
            }
            let (lo, hi) = (a.min(b), a.max(b));
            let beta: f64 = rng.gen();
            let shift: f64 = rng.gen();
            GateOp::two(
                GateKind::PauliExp2Q {
                    sigma1,
                    sigma2,
                    angle: AngleSource::Feature {
                        index,
                        map: MappingFn::new(alpha, beta, shift),
                    },
                },
                lo,
                hi,
            )
        })
        .collect();
    Ok(CircuitSpec {
        family: Family::Integrated,
        k,
        n_qubits,
        seed,
        gates: ops,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{self, DecodeMode};
    use std::collections::HashMap;

    fn decode(spec: &CircuitSpec, patch: &[f64]) -> f64 {
        let state = spec.simulate(patch).unwrap();
        sim::decode_fraction_ones(&state, DecodeMode::Analytic, &mut seed::rng(0)).unwrap()
    }

    #[test]
    fn rotational_shape_and_extremes() {
        let spec = rotational_encoder(2).unwrap();
        assert_eq!(spec.n_qubits, 4);
        assert_eq!(spec.gates.len(), 4);
        spec.validate().unwrap();
        assert_eq!(decode(&spec, &[0.0; 4]), 0.0);
        assert!((decode(&spec, &[1.0; 4]) - 1.0).abs() < 1e-15);
        assert!(rotational_encoder(0).is_err());
        assert!(rotational_encoder(5).is_err());
    }

    #[test]
    fn threshold_binds_x_only_on_ones() {
        let spec = threshold_encoder(2).unwrap();
        let bound = spec.bind(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        let targets: Vec<usize> = bound
            .iter()
            .map(|g| match g {
                sim::BoundGate::One { target, u } => {
                    assert_eq!(*u, sim::x_gate());
                    *target
                }
                _ => panic!("unexpected two-qubit gate"),
            })
            .collect();
        assert_eq!(targets, vec![0, 3]);
        assert!(spec.bind(&[0.0; 4]).unwrap().is_empty());
        assert_eq!(spec.simulate(&[0.0; 4]).unwrap(), sim::StateVector::new(4).unwrap());
        assert!(spec.bind(&[0.5, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn higher_order_gate_counts() {
        let two = higher_order_encoder(2).unwrap();
        assert_eq!(two.gates.len(), 4 + 6);
        assert_eq!(two.two_qubit_count(), 6);
        let three = higher_order_encoder(3).unwrap();
        assert_eq!(three.gates.len(), 9 + 36);
        assert_eq!(decode(&three, &[0.0; 9]), 0.0);
        two.validate().unwrap();
    }

    #[test]
    fn henderson_p_zero_has_no_two_qubit_gates() {
        for s in 0..200 {
            let spec = henderson_processing(3, 0.0, s).unwrap();
            assert_eq!(spec.two_qubit_count(), 0);
            let singles = spec.gates.len();
            assert!((1..=18).contains(&singles));
        }
        assert!(henderson_processing(3, 1.5, 0).is_err());
        assert!(henderson_processing(3, -0.1, 0).is_err());
    }

    #[test]
    fn henderson_p_one_connects_every_pair() {
        let spec = henderson_processing(2, 1.0, 9).unwrap();
        assert_eq!(spec.two_qubit_count(), 6);
        spec.validate().unwrap();
    }

    #[test]
    fn henderson_single_qubit_gate_mix() {
        let mut counts: HashMap<&'static str, usize> = HashMap::new();
        for s in 0..500 {
            for g in henderson_processing(2, 0.15, s).unwrap().gates {
                let key = match g.kind {
                    GateKind::Rot1Q { axis: Axis::X, angle } => {
                        let AngleSource::Constant { radians } = angle else { panic!() };
                        assert!((0.0..HENDERSON_ANGLE_RANGE).contains(&radians));
                        "rx"
                    }
                    GateKind::Rot1Q { .. } => "ry/rz",
                    GateKind::Fixed1Q { .. } => "fixed",
                    GateKind::Fixed2Q { .. } => "two",
                    _ => panic!("unexpected gate"),
                };
                *counts.entry(key).or_default() += 1;
            }
        }
        let rx = counts["rx"] as f64;
        let ryrz = counts["ry/rz"] as f64;
        let fixed = counts["fixed"] as f64;
        // RX : (RY+RZ) : (S+T+H) ≈ 1 : 2 : 3
        assert!((ryrz / rx - 2.0).abs() < 0.2, "{ryrz} / {rx}");
        assert!((fixed / rx - 3.0).abs() < 0.3, "{fixed} / {rx}");
    }

    #[test]
    fn integrated_examples() {
        let spec = integrated_circuit(3, 4, 18, MappingKind::Simple, 42).unwrap();
        assert_eq!(spec.gates.len(), 18);
        assert_eq!(spec.two_qubit_count(), 18);
        assert!(spec.feature_coverage().iter().all(|&c| c >= 1));
        spec.validate().unwrap();

        let minimal = integrated_circuit(2, 4, 4, MappingKind::RndMul, 1).unwrap();
        assert_eq!(minimal.feature_coverage(), vec![1, 1, 1, 1]);
        for g in &minimal.gates {
            let GateKind::PauliExp2Q { angle: AngleSource::Feature { map, .. }, .. } = g.kind else {
                panic!()
            };
            assert_eq!(map.kind, MappingKind::RndMul);
            assert!((0.0..1.0).contains(&map.beta));
            assert_eq!(map.sigma, 0.0);
            assert!(g.targets[0] < g.targets[1]);
        }

        assert!(integrated_circuit(3, 4, 8, MappingKind::Simple, 0).is_err());
        assert!(integrated_circuit(2, 1, 8, MappingKind::Simple, 0).is_err());
    }

    #[test]
    fn integrated_target_pairs_cover_all_pairs() {
        let mut seen = std::collections::HashSet::new();
        for s in 0..50 {
            for g in integrated_circuit(2, 4, 8, MappingKind::Simple, s).unwrap().gates {
                seen.insert((g.targets[0], g.targets[1]));
            }
        }
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = integrated_circuit(3, 4, 18, MappingKind::RndLin, 5).unwrap();
        let b = integrated_circuit(3, 4, 18, MappingKind::RndLin, 5).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let a = henderson_processing(3, 0.15, 77).unwrap();
        let b = henderson_processing(3, 0.15, 77).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_ne!(a.to_json(), henderson_processing(3, 0.15, 78).unwrap().to_json());
    }

    #[test]
    fn rotational_henderson_concatenates() {
        let spec = rotational_henderson(2, 0.5, 3).unwrap();
        let proc_ = henderson_processing(2, 0.5, 3).unwrap();
        assert_eq!(spec.gates.len(), 4 + proc_.gates.len());
        assert_eq!(spec.family, Family::RotationalHenderson);
        spec.validate().unwrap();
    }
}
