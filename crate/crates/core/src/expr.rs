//! Circuit expressibility: KL divergence between a circuit's fidelity
//! distribution over random input pairs and the Haar-random fidelity law.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{integrated_circuit, rotational_henderson, CircuitSpec, Family, MappingKind};
use crate::{par, seed, Error, Result};

pub const DEFAULT_BINS: usize = 50;
pub const DEFAULT_PAIRS: usize = 1024;
pub const DEFAULT_REPEATS: usize = 10;
pub const EPSILON: f64 = 1e-16;

fn check_dim(dim: u64) -> Result<()> {
    if dim < 2 {
        return Err(Error::arg(format!("Haar dimension must be at least 2, got {dim}")));
    }
    Ok(())
}

/// Density of the fidelity between two Haar-random states in dimension `dim`.
pub fn haar_pdf(f: f64, dim: u64) -> Result<f64> {
    check_dim(dim)?;
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::arg(format!("fidelity {f} outside [0, 1]")));
    }
    Ok((dim - 1) as f64 * (1.0 - f).powf((dim - 2) as f64))
}

/// Exact Haar probability of a fidelity in `[lo, hi]`.
pub fn haar_bin_mass(lo: f64, hi: f64, dim: u64) -> f64 {
    let e = (dim - 1) as f64;
    (1.0 - lo).powf(e) - (1.0 - hi).powf(e)
}

pub fn haar_bin_masses(bins: usize, dim: u64) -> Result<Vec<f64>> {
    check_dim(dim)?;
    if bins == 0 {
        return Err(Error::arg("need at least one bin"));
    }
    Ok((0..bins)
        .map(|i| haar_bin_mass(i as f64 / bins as f64, (i + 1) as f64 / bins as f64, dim))
        .collect())
}

/// Inverse-CDF sampler for the Haar fidelity law.
pub fn sample_haar_fidelity<R: Rng + ?Sized>(dim: u64, rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    1.0 - (1.0 - u).powf(1.0 / (dim - 1) as f64)
}

/// Fidelities `|⟨ψ(x)|ψ(y)⟩|²` for `n_pairs` independent uniform input pairs
/// bound to the same frozen circuit. Pair `i` uses its own derived stream.
pub fn sample_fidelities(template: &CircuitSpec, n_pairs: usize, seed: u64) -> Result<Vec<f64>> {
    if n_pairs == 0 {
        return Err(Error::arg("n_pairs must be positive"));
    }
    let nf = template.n_features();
    let fids = par::map_range(n_pairs, |i| {
        let mut rng = seed::rng(seed::mix(seed, i as u64));
        let x: Vec<f64> = (0..nf).map(|_| rng.gen()).collect();
        let y: Vec<f64> = (0..nf).map(|_| rng.gen()).collect();
        template.simulate(&x)?.fidelity(&template.simulate(&y)?)
    });
    fids.into_iter().collect()
}

pub fn histogram(fids: &[f64], bins: usize) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; bins];
    for &f in fids {
        if !f.is_finite() || !(-1e-9..=1.0 + 1e-9).contains(&f) {
            return Err(Error::Numeric(format!("fidelity {f} is not a probability")));
        }
        let i = ((f.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        counts[i] += 1;
    }
    Ok(counts)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub expr: f64,
    pub expr_prime: f64,
}

/// Discretised KL divergence of bin counts against the Haar bin masses.
pub fn expr_from_counts(counts: &[u64], dim: u64, eps: f64) -> Result<Divergence> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::arg("no fidelities to histogram"));
    }
    let q = haar_bin_masses(counts.len(), dim)?;
    let expr: f64 = counts
        .iter()
        .zip(&q)
        .filter(|(&c, _)| c > 0)
        .map(|(&c, &q)| {
            let p = c as f64 / total as f64;
            p * (p / (q + eps)).ln()
        })
        .sum();
    Ok(Divergence {
        expr,
        expr_prime: -expr.ln(),
    })
}

pub fn expr_from_fidelities(fids: &[f64], bins: usize, dim: u64, eps: f64) -> Result<Divergence> {
    if fids.is_empty() {
        return Err(Error::arg("no fidelities to histogram"));
    }
    if bins == 0 {
        return Err(Error::arg("need at least one bin"));
    }
    expr_from_counts(&histogram(fids, bins)?, dim, eps)
}

/// Expressibility of one frozen circuit.
pub fn circuit_expr(template: &CircuitSpec, n_pairs: usize, bins: usize, seed: u64) -> Result<Divergence> {
    let fids = sample_fidelities(template, n_pairs, seed)?;
    expr_from_fidelities(&fids, bins, 1u64 << template.n_qubits, EPSILON)
}

/// A sweep over circuit sizes. For the integrated family the grid holds gate
/// counts `L`; for rotational+Henderson it holds connection probabilities `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub family: Family,
    pub k: usize,
    /// Qubit count for the integrated family; ignored otherwise.
    pub n_qubits: usize,
    pub alpha: MappingKind,
    pub grid: Vec<f64>,
    pub repeats: usize,
    pub pairs: usize,
    pub bins: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExprReport {
    pub family: Family,
    pub k: usize,
    pub n_qubits: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<MappingKind>,
    pub grid_value: f64,
    pub n_pairs: usize,
    pub bins: usize,
    pub expr: Vec<f64>,
    pub expr_prime: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn build(spec: &SweepSpec, value: f64, seed: u64) -> Result<CircuitSpec> {
    match spec.family {
        Family::Integrated => {
            if value < 0.0 || value.fract() != 0.0 {
                return Err(Error::arg(format!("gate count {value} is not a whole number")));
            }
            integrated_circuit(spec.k, spec.n_qubits, value as usize, spec.alpha, seed)
        }
        Family::RotationalHenderson | Family::HendersonProcessing => rotational_henderson(spec.k, value, seed),
        other => Err(Error::arg(format!("no expressibility sweep for the {other:?} family"))),
    }
}

/// Mean and spread of `Expr′` over `repeats` independently generated circuits
/// per grid point. Circuit and pair streams are derived from the grid value,
/// so a point's result does not depend on the rest of the grid.
pub fn expr_sweep(spec: &SweepSpec) -> Result<Vec<ExprReport>> {
    if spec.repeats == 0 || spec.grid.is_empty() {
        return Err(Error::arg("sweep needs at least one grid value and one repeat"));
    }
    spec.grid
        .iter()
        .map(|&value| {
            let mut expr = Vec::with_capacity(spec.repeats);
            let mut n_qubits = spec.n_qubits;
            for r in 0..spec.repeats {
                let circuit = build(spec, value, seed::derive(spec.seed, &format!("expr/circuit/{value}/{r}")))?;
                n_qubits = circuit.n_qubits;
                let d = circuit_expr(
                    &circuit,
                    spec.pairs,
                    spec.bins,
                    seed::derive(spec.seed, &format!("expr/pairs/{value}/{r}")),
                )?;
                expr.push(d.expr);
            }
            let expr_prime: Vec<f64> = expr.iter().map(|e| -e.ln()).collect();
            let (mean, std) = mean_std(&expr_prime);
            Ok(ExprReport {
                family: spec.family,
                k: spec.k,
                n_qubits,
                alpha: (spec.family == Family::Integrated).then_some(spec.alpha),
                grid_value: value,
                n_pairs: spec.pairs,
                bins: spec.bins,
                expr,
                expr_prime,
                mean,
                std,
            })
        })
        .collect()
}
