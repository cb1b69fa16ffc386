//! Dense statevector simulation.
//!
//! Qubit `q` is bit `q` of the amplitude index (qubit 0 is the least
//! significant bit). For two-qubit gates the 4x4 matrix acts on the local
//! index `2 * bit(targets[0]) + bit(targets[1])`, so the first target carries
//! the left factor of a Kronecker product `A ⊗ B`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_QUBITS: usize = 16;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary2(pub [[Complex64; 2]; 2]);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary4(pub [[Complex64; 4]; 4]);

impl Unitary2 {
    pub fn identity() -> Self {
        Unitary2([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// Largest entrywise deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let m = &self.0;
        let mut worst = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                let mut acc = ZERO;
                for k in 0..2 {
                    acc += m[k][r].conj() * m[k][c];
                }
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }
}

impl Unitary4 {
    pub fn identity() -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        Unitary4(m)
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn unitarity_error(&self) -> f64 {
        let m = &self.0;
        let mut worst = 0.0f64;
        for r in 0..4 {
            for c in 0..4 {
                let mut acc = ZERO;
                for k in 0..4 {
                    acc += m[k][r].conj() * m[k][c];
                }
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }

    /// Kronecker product `a ⊗ b`.
    pub fn kron(a: &Unitary2, b: &Unitary2) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = a.0[r >> 1][c >> 1] * b.0[r & 1][c & 1];
            }
        }
        Unitary4(m)
    }
}

/// Single-qubit Pauli operator label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> Unitary2 {
        match self {
            Pauli::I => Unitary2::identity(),
            Pauli::X => Unitary2([[ZERO, ONE], [ONE, ZERO]]),
            Pauli::Y => Unitary2([[ZERO, -I], [I, ZERO]]),
            Pauli::Z => Unitary2([[ONE, ZERO], [ZERO, -ONE]]),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        };
        f.write_str(s)
    }
}

impl FromStr for Pauli {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" => Ok(Pauli::I),
            "X" | "x" => Ok(Pauli::X),
            "Y" | "y" => Ok(Pauli::Y),
            "Z" | "z" => Ok(Pauli::Z),
            other => Err(Error::arg(format!("invalid Pauli label `{other}`"))),
        }
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if theta.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("rotation angle must be finite, got {theta}")))
    }
}

pub fn rx_gate(theta: f64) -> Result<Unitary2> {
    check_angle(theta)?;
    let (s, c) = (theta / 2.0).sin_cos();
    let c = Complex64::new(c, 0.0);
    let ms = Complex64::new(0.0, -s);
    Ok(Unitary2([[c, ms], [ms, c]]))
}

pub fn ry_gate(theta: f64) -> Result<Unitary2> {
    check_angle(theta)?;
    let (s, c) = (theta / 2.0).sin_cos();
    Ok(Unitary2([
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]))
}

pub fn rz_gate(theta: f64) -> Result<Unitary2> {
    check_angle(theta)?;
    let half = theta / 2.0;
    Ok(Unitary2([
        [Complex64::from_polar(1.0, -half), ZERO],
        [ZERO, Complex64::from_polar(1.0, half)],
    ]))
}

pub fn s_gate() -> Unitary2 {
    Unitary2([[ONE, ZERO], [ZERO, I]])
}

pub fn t_gate() -> Unitary2 {
    Unitary2([
        [ONE, ZERO],
        [ZERO, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)],
    ])
}

pub fn h_gate() -> Unitary2 {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Unitary2([[h, h], [h, -h]])
}

pub fn x_gate() -> Unitary2 {
    Pauli::X.matrix()
}

/// CNOT with the first target as control.
pub fn cnot_gate() -> Unitary4 {
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = ONE;
    m[1][1] = ONE;
    m[2][3] = ONE;
    m[3][2] = ONE;
    Unitary4(m)
}

pub fn swap_gate() -> Unitary4 {
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = ONE;
    m[1][2] = ONE;
    m[2][1] = ONE;
    m[3][3] = ONE;
    Unitary4(m)
}

pub fn sqrt_swap_gate() -> Unitary4 {
    let p = Complex64::new(0.5, 0.5);
    let q = Complex64::new(0.5, -0.5);
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = ONE;
    m[1][1] = p;
    m[1][2] = q;
    m[2][1] = q;
    m[2][2] = p;
    m[3][3] = ONE;
    Unitary4(m)
}

/// `exp(-iθ σ₁⊗σ₂)`, evaluated as `cos θ · I − i sin θ · (σ₁⊗σ₂)`.
///
/// The closed form holds because every Pauli tensor product squares to the
/// identity.
pub fn pauli_exp_gate(theta: f64, sigma1: Pauli, sigma2: Pauli) -> Result<Unitary4> {
    check_angle(theta)?;
    let (s, c) = theta.sin_cos();
    let p = Unitary4::kron(&sigma1.matrix(), &sigma2.matrix());
    let mut m = [[ZERO; 4]; 4];
    for r in 0..4 {
        for col in 0..4 {
            let diag = if r == col { c } else { 0.0 };
            m[r][col] = Complex64::new(diag, 0.0) + Complex64::new(0.0, -s) * p.0[r][col];
        }
    }
    Ok(Unitary4(m))
}

/// A gate resolved to a concrete matrix and target qubits, ready to run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundGate {
    One { u: Unitary2, target: usize },
    Two { u: Unitary4, targets: [usize; 2] },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn new(n_qubits: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::Config(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        Ok(StateVector { n_qubits, amps })
    }

    /// Builds a state from raw amplitudes. The length must be a power of two
    /// in range; normalisation is the caller's responsibility.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() || len > (1 << MAX_QUBITS) {
            return Err(Error::arg(format!("amplitude count {len} is not 2^n for n in 1..=16")));
        }
        Ok(StateVector {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q < self.n_qubits {
            Ok(())
        } else {
            Err(Error::arg(format!(
                "qubit index {q} out of range for {} qubits",
                self.n_qubits
            )))
        }
    }

    pub fn apply_1q(&mut self, u: &Unitary2, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        if u.is_identity() {
            return Ok(());
        }
        let m = &u.0;
        let stride = 1usize << q;
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for i in base..base + stride {
                let a0 = self.amps[i];
                let a1 = self.amps[i + stride];
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i + stride] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += stride << 1;
        }
        Ok(())
    }

    pub fn apply_2q(&mut self, u: &Unitary4, targets: [usize; 2]) -> Result<()> {
        let [qa, qb] = targets;
        self.check_qubit(qa)?;
        self.check_qubit(qb)?;
        if qa == qb {
            return Err(Error::arg(format!("two-qubit gate needs distinct targets, got {qa} twice")));
        }
        if u.is_identity() {
            return Ok(());
        }
        let m = &u.0;
        let (ma, mb) = (1usize << qa, 1usize << qb);
        let both = ma | mb;
        for i in 0..self.amps.len() {
            if i & both != 0 {
                continue;
            }
            let idx = [i, i | mb, i | ma, i | both];
            let v = [self.amps[idx[0]], self.amps[idx[1]], self.amps[idx[2]], self.amps[idx[3]]];
            for r in 0..4 {
                self.amps[idx[r]] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, gate: &BoundGate) -> Result<()> {
        match gate {
            BoundGate::One { u, target } => self.apply_1q(u, *target),
            BoundGate::Two { u, targets } => self.apply_2q(u, *targets),
        }
    }

    /// Probability of measuring qubit `q` in `|1⟩`.
    pub fn prob_one(&self, q: usize) -> Result<f64> {
        self.check_qubit(q)?;
        let mask = 1usize << q;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Expected fraction of qubits measured in `|1⟩`, normalised by the
    /// state's squared norm so rounding drift cancels.
    pub fn fraction_ones(&self) -> f64 {
        let (weighted, total) = self.amps.iter().enumerate().fold((0.0, 0.0), |(w, t), (i, a)| {
            let p = a.norm_sqr();
            (w + p * i.count_ones() as f64, t + p)
        });
        if weighted == 0.0 {
            return 0.0;
        }
        weighted / (self.n_qubits as f64 * total)
    }

    /// `⟨Z^{⊗n}⟩`.
    pub fn z_expectation(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let p = a.norm_sqr();
                if i.count_ones() % 2 == 0 {
                    p
                } else {
                    -p
                }
            })
            .sum()
    }

    /// Draws `shots` full-register measurements and returns the basis indices.
    pub fn sample<R: Rng + ?Sized>(&self, shots: usize, rng: &mut R) -> Vec<usize> {
        let mut cumulative = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cumulative.push(acc);
        }
        let last = self.amps.len() - 1;
        (0..shots)
            .map(|_| {
                let u = rng.gen::<f64>() * acc;
                cumulative.partition_point(|&c| c <= u).min(last)
            })
            .collect()
    }

    /// Squared overlap `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::arg(format!(
                "fidelity between {} and {} qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        let overlap: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(overlap.norm_sqr())
    }
}

/// Runs `gates` on `|0…0⟩`.
pub fn run(n_qubits: usize, gates: &[BoundGate]) -> Result<StateVector> {
    let mut state = StateVector::new(n_qubits)?;
    for g in gates {
        state.apply(g)?;
    }
    Ok(state)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DecodeMode {
    #[default]
    Analytic,
    Sampled { shots: usize },
}

/// Fraction of qubits found in `|1⟩`: exact expectation in analytic mode,
/// shot average in sampled mode.
pub fn decode_fraction_ones<R: Rng + ?Sized>(
    state: &StateVector,
    mode: DecodeMode,
    rng: &mut R,
) -> Result<f64> {
    match mode {
        DecodeMode::Analytic => Ok(state.fraction_ones()),
        DecodeMode::Sampled { shots: 0 } => Err(Error::arg("sampled decoding needs at least one shot")),
        DecodeMode::Sampled { shots } => {
            let ones: u64 = state
                .sample(shots, rng)
                .into_iter()
                .map(|i| i.count_ones() as u64)
                .sum();
            Ok(ones as f64 / (shots * state.n_qubits) as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn bell() -> StateVector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        StateVector::from_amplitudes(vec![c(h, 0.0), ZERO, ZERO, c(h, 0.0)]).unwrap()
    }

    #[test]
    fn new_state_is_all_zero_ket() {
        assert_eq!(StateVector::new(1).unwrap().amplitudes(), &[ONE, ZERO]);
        assert_eq!(StateVector::new(2).unwrap().amplitudes(), &[ONE, ZERO, ZERO, ZERO]);
        let s = StateVector::new(4).unwrap();
        assert_eq!(s.amplitudes().len(), 16);
        assert_eq!(s.norm_sqr(), 1.0);
        assert!(s.amplitudes()[1..].iter().all(|a| *a == ZERO));
    }

    #[test]
    fn new_state_rejects_out_of_range() {
        assert!(matches!(StateVector::new(0), Err(Error::Config(_))));
        assert!(matches!(StateVector::new(17), Err(Error::Config(_))));
        assert!(StateVector::new(16).is_ok());
    }

    #[test]
    fn rx_matrix_values() {
        assert_eq!(rx_gate(0.0).unwrap(), Unitary2::identity());
        let x = rx_gate(PI).unwrap();
        assert!(close(x.0[0][0], ZERO, 1e-15));
        assert!(close(x.0[0][1], c(0.0, -1.0), 1e-15));
        assert!(close(x.0[1][0], c(0.0, -1.0), 1e-15));
        assert!(close(x.0[1][1], ZERO, 1e-15));
        let h = rx_gate(FRAC_PI_2).unwrap();
        let r = 2f64.sqrt() / 2.0;
        assert!(close(h.0[0][0], c(r, 0.0), 1e-15));
        assert!(close(h.0[0][1], c(0.0, -r), 1e-15));
        assert!(rx_gate(f64::NAN).is_err());
        assert!(rx_gate(f64::INFINITY).is_err());
    }

    #[test]
    fn pauli_exp_xx_matches_displayed_matrix() {
        for &theta in &[0.3, 1.1, -2.7] {
            let u = pauli_exp_gate(theta, Pauli::X, Pauli::X).unwrap();
            for r in 0..4 {
                for col in 0..4 {
                    let expected = if r == col {
                        c(theta.cos(), 0.0)
                    } else if r + col == 3 {
                        c(0.0, -theta.sin())
                    } else {
                        ZERO
                    };
                    assert!(close(u.0[r][col], expected, 1e-15), "({r},{col})");
                }
            }
        }
    }

    #[test]
    fn pauli_exp_special_cases() {
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                assert_eq!(pauli_exp_gate(0.0, a, b).unwrap(), Unitary4::identity());
            }
        }
        let u = pauli_exp_gate(FRAC_PI_2, Pauli::I, Pauli::I).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                let expected = if r == col { c(0.0, -1.0) } else { ZERO };
                assert!(close(u.0[r][col], expected, 1e-15));
            }
        }
        assert!("Q".parse::<Pauli>().is_err());
        assert!(pauli_exp_gate(f64::NAN, Pauli::X, Pauli::Z).is_err());
    }

    #[test]
    fn fixed_gates_are_unitary() {
        for u in [s_gate(), t_gate(), h_gate(), x_gate(), ry_gate(0.4).unwrap(), rz_gate(1.3).unwrap()] {
            assert!(u.unitarity_error() < 1e-12);
        }
        for u in [cnot_gate(), swap_gate(), sqrt_swap_gate()] {
            assert!(u.unitarity_error() < 1e-12);
        }
        // sqrt(SWAP)^2 = SWAP
        let s = sqrt_swap_gate().0;
        let mut sq = [[ZERO; 4]; 4];
        for r in 0..4 {
            for col in 0..4 {
                for k in 0..4 {
                    sq[r][col] += s[r][k] * s[k][col];
                }
            }
        }
        assert!(sq.iter().flatten().zip(swap_gate().0.iter().flatten()).all(|(a, b)| close(*a, *b, 1e-15)));
    }

    #[test]
    fn apply_rx_pi_flips_with_phase() {
        let mut s = StateVector::new(1).unwrap();
        s.apply_1q(&rx_gate(PI).unwrap(), 0).unwrap();
        assert!(close(s.amplitudes()[0], ZERO, 1e-15));
        assert!(close(s.amplitudes()[1], c(0.0, -1.0), 1e-15));
        assert!((s.prob_one(0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn apply_xx_half_pi_on_00() {
        let mut s = StateVector::new(2).unwrap();
        s.apply_2q(&pauli_exp_gate(FRAC_PI_2, Pauli::X, Pauli::X).unwrap(), [0, 1])
            .unwrap();
        let a = s.amplitudes();
        assert!(close(a[0], ZERO, 1e-15));
        assert!(close(a[1], ZERO, 1e-15));
        assert!(close(a[2], ZERO, 1e-15));
        assert!(close(a[3], c(0.0, -1.0), 1e-15));
    }

    #[test]
    fn identity_leaves_state_bit_identical() {
        let mut rng = seed::rng(3);
        let mut s = StateVector::new(3).unwrap();
        for q in 0..3 {
            s.apply_1q(&ry_gate(rng.gen::<f64>() * 6.0).unwrap(), q).unwrap();
        }
        s.apply_1q(&rz_gate(-0.0).unwrap(), 1).unwrap();
        let before = s.clone();
        s.apply_1q(&Unitary2::identity(), 2).unwrap();
        s.apply_2q(&Unitary4::identity(), [0, 2]).unwrap();
        assert_eq!(before, s);
    }

    #[test]
    fn apply_rejects_bad_targets() {
        let mut s = StateVector::new(2).unwrap();
        assert!(s.apply_1q(&x_gate(), 2).is_err());
        assert!(s.apply_2q(&cnot_gate(), [1, 1]).is_err());
        assert!(s.apply_2q(&cnot_gate(), [0, 5]).is_err());
        assert!(s.prob_one(3).is_err());
    }

    #[test]
    fn cnot_control_is_first_target() {
        // |q1 q0⟩ = |01⟩: qubit 0 set. CNOT(control 0, target 1) -> |11⟩.
        let mut s = StateVector::new(2).unwrap();
        s.apply_1q(&x_gate(), 0).unwrap();
        s.apply_2q(&cnot_gate(), [0, 1]).unwrap();
        assert_eq!(s.amplitudes()[3], ONE);
        let mut s = StateVector::new(2).unwrap();
        s.apply_1q(&x_gate(), 0).unwrap();
        s.apply_2q(&cnot_gate(), [1, 0]).unwrap();
        assert_eq!(s.amplitudes()[1], ONE);
    }

    #[test]
    fn prob_one_examples() {
        assert_eq!(StateVector::new(2).unwrap().prob_one(0).unwrap(), 0.0);
        assert!((bell().prob_one(0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn decode_examples() {
        let mut rng = seed::rng(0);
        let zero = StateVector::new(3).unwrap();
        assert_eq!(decode_fraction_ones(&zero, DecodeMode::Analytic, &mut rng).unwrap(), 0.0);
        assert_eq!(decode_fraction_ones(&bell(), DecodeMode::Analytic, &mut rng).unwrap(), 0.5);
        let mut half = StateVector::new(1).unwrap();
        half.apply_1q(&rx_gate(FRAC_PI_2).unwrap(), 0).unwrap();
        let v = decode_fraction_ones(&half, DecodeMode::Analytic, &mut rng).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert!(decode_fraction_ones(&half, DecodeMode::Sampled { shots: 0 }, &mut rng).is_err());
        let s = decode_fraction_ones(&zero, DecodeMode::Sampled { shots: 100 }, &mut rng).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn z_expectation_examples() {
        assert_eq!(StateVector::new(3).unwrap().z_expectation(), 1.0);
        let one = StateVector::from_amplitudes(vec![ZERO, ONE]).unwrap();
        assert_eq!(one.z_expectation(), -1.0);
        assert!((bell().z_expectation() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fidelity_examples() {
        let b = bell();
        assert!((b.fidelity(&b).unwrap() - 1.0).abs() < 1e-12);
        let zero = StateVector::new(1).unwrap();
        let one = StateVector::from_amplitudes(vec![ZERO, ONE]).unwrap();
        assert_eq!(zero.fidelity(&one).unwrap(), 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::from_amplitudes(vec![c(h, 0.0), c(h, 0.0)]).unwrap();
        assert!((zero.fidelity(&plus).unwrap() - 0.5).abs() < 1e-15);
        assert!(zero.fidelity(&b).is_err());
    }

    #[test]
    fn sampling_follows_distribution() {
        let mut rng = seed::rng(11);
        let counts = bell().sample(20_000, &mut rng);
        assert!(counts.iter().all(|&i| i == 0 || i == 3));
        let ones = counts.iter().filter(|&&i| i == 3).count() as f64 / 20_000.0;
        assert!((ones - 0.5).abs() < 0.02);
    }
}
