//! Timing jitter on the rodeo peaks and stochastic two-qubit depolarizing faults.
//!
//! Jitter shifts the energy seen by the phase gate: cycle `i` of a shot
//! compares against `E_k + δ` with `δ ~ N(0, ε²)`. In per-cycle mode every
//! cycle draws its own `δ`; in per-shot mode one `δ` is shared by all cycles.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, GateOp};
use crate::pauli::{Level, Pauli};
use crate::statevec::{SimError, StateVector};

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("jitter scale must be finite and >= 0, got {0}")]
    BadEpsilon(f64),
    #[error("fault probability must lie in [0, 1], got {0}")]
    BadProbability(f64),
    #[error("need {expected} per-level jitter scales, got {got}")]
    LevelMismatch { expected: usize, got: usize },
    #[error("Gauss-Hermite quadrature did not settle by {nodes} nodes (last change {change:.3e})")]
    QuadratureNonConvergence { nodes: usize, change: f64 },
    #[error("at least one Monte Carlo draw is required")]
    NoDraws,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JitterMode {
    PerCycle,
    PerShot,
}

impl std::str::FromStr for JitterMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "per-cycle" => Ok(Self::PerCycle),
            "per-shot" => Ok(Self::PerShot),
            _ => Err(format!("unknown jitter mode '{s}' (per-cycle | per-shot)")),
        }
    }
}

/// One `ε` for every level, or one per level.
#[derive(Clone, Debug, PartialEq)]
pub enum JitterScale {
    Shared(f64),
    PerLevel(Vec<f64>),
}

impl JitterScale {
    pub fn validate(&self, n_levels: usize) -> Result<(), NoiseError> {
        let check = |e: f64| if e.is_finite() && e >= 0.0 { Ok(()) } else { Err(NoiseError::BadEpsilon(e)) };
        match self {
            Self::Shared(e) => check(*e),
            Self::PerLevel(v) => {
                if v.len() != n_levels {
                    return Err(NoiseError::LevelMismatch { expected: n_levels, got: v.len() });
                }
                v.iter().try_for_each(|&e| check(e))
            }
        }
    }

    pub fn for_level(&self, k: usize) -> f64 {
        match self {
            Self::Shared(e) => *e,
            Self::PerLevel(v) => v[k],
        }
    }
}

fn cycle_factor(d: f64, sigma: f64) -> f64 {
    0.5 * (1.0 + (-0.5 * d * d * sigma * sigma).exp())
}

/// Mean success probability with independent jitter on every cycle.
pub fn noisy_pn_per_cycle(
    energy: f64,
    levels: &[Level],
    sigma: f64,
    n_cycles: usize,
    eps: &JitterScale,
) -> Result<f64, NoiseError> {
    eps.validate(levels.len())?;
    Ok(levels
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let s2 = (eps.for_level(k) * sigma).powi(2);
            let d = l.energy - energy;
            let g = (-d * d * sigma * sigma / (2.0 * (1.0 + s2))).exp() / (1.0 + s2).sqrt();
            l.overlap * (0.5 * (1.0 + g)).powi(n_cycles as i32)
        })
        .sum())
}

const GH_START: usize = 64;
const GH_MAX: usize = 1024;
const GH_TOL: f64 = 1e-10;

/// Physicists' Gauss-Hermite rule (weight `e^{-x²}`) by Golub-Welsch.
fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let b = (i as f64 / 2.0).sqrt();
        j[(i, i - 1)] = b;
        j[(i - 1, i)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut rule: Vec<(f64, f64)> =
        (0..n).map(|i| (eig.eigenvalues[i], sqrt_pi * eig.eigenvectors[(0, i)].powi(2))).collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

fn cached_rule(level: usize) -> &'static [(f64, f64)] {
    static RULES: [OnceLock<Vec<(f64, f64)>>; 5] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    RULES[level].get_or_init(|| gauss_hermite(GH_START << level))
}

/// `E_δ[f(δ)]` for `δ ~ N(0, ε²)`, doubling the node count until two rules agree.
fn gaussian_expectation(eps: f64, f: impl Fn(f64) -> f64) -> Result<f64, NoiseError> {
    if eps == 0.0 {
        return Ok(f(0.0));
    }
    let integrate = |rule: &[(f64, f64)]| {
        let s: f64 = rule.iter().map(|&(x, w)| w * f(std::f64::consts::SQRT_2 * eps * x)).sum();
        s / std::f64::consts::PI.sqrt()
    };
    let mut prev = integrate(cached_rule(0));
    let mut change = f64::INFINITY;
    let mut level = 1;
    while (GH_START << level) <= GH_MAX {
        let next = integrate(cached_rule(level));
        change = (next - prev).abs();
        if change <= GH_TOL * next.abs().max(1.0) {
            return Ok(next);
        }
        prev = next;
        level += 1;
    }
    Err(NoiseError::QuadratureNonConvergence { nodes: GH_MAX, change })
}

/// Mean success probability with one jitter draw shared by all cycles of a shot.
pub fn noisy_pn_per_shot(
    energy: f64,
    levels: &[Level],
    sigma: f64,
    n_cycles: usize,
    eps: &JitterScale,
) -> Result<f64, NoiseError> {
    eps.validate(levels.len())?;
    let mut total = 0.0;
    for (k, l) in levels.iter().enumerate() {
        let d = l.energy - energy;
        let v = gaussian_expectation(eps.for_level(k), |delta| cycle_factor(d + delta, sigma).powi(n_cycles as i32))?;
        total += l.overlap * v;
    }
    Ok(total)
}

fn binomial(n: usize, m: usize) -> f64 {
    (0..m).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Per-shot mean from the binomial expansion of `(1 + e^{-x})^n`; exact, used
/// to check the quadrature.
pub fn per_shot_binomial(energy: f64, levels: &[Level], sigma: f64, n_cycles: usize, eps: &JitterScale) -> Result<f64, NoiseError> {
    eps.validate(levels.len())?;
    let n = n_cycles;
    Ok(levels
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let s2 = (eps.for_level(k) * sigma).powi(2);
            let d = l.energy - energy;
            let sum: f64 = (0..=n)
                .map(|m| {
                    let a = 1.0 + m as f64 * s2;
                    binomial(n, m) * (-(m as f64) * d * d * sigma * sigma / (2.0 * a)).exp() / a.sqrt()
                })
                .sum();
            l.overlap * sum / 2f64.powi(n as i32)
        })
        .sum())
}

/// Peak height relative to the jitter-free peak for a single level.
pub fn peak_suppression(n_cycles: usize, sigma: f64, eps: f64, mode: JitterMode) -> f64 {
    let s2 = (eps * sigma).powi(2);
    match mode {
        JitterMode::PerCycle => (0.5 * (1.0 + 1.0 / (1.0 + s2).sqrt())).powi(n_cycles as i32),
        JitterMode::PerShot => {
            let sum: f64 = (0..=n_cycles).map(|m| binomial(n_cycles, m) / (1.0 + m as f64 * s2).sqrt()).sum();
            sum / 2f64.powi(n_cycles as i32)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

/// Monte Carlo average of the jittered ideal kernel over `draws` realisations.
pub fn monte_carlo_jitter<R: Rng + ?Sized>(
    energy: f64,
    levels: &[Level],
    sigma: f64,
    n_cycles: usize,
    eps: &JitterScale,
    mode: JitterMode,
    draws: usize,
    rng: &mut R,
) -> Result<Estimate, NoiseError> {
    eps.validate(levels.len())?;
    if draws == 0 {
        return Err(NoiseError::NoDraws);
    }
    let normals: Vec<Normal<f64>> = (0..levels.len())
        .map(|k| Normal::new(0.0, eps.for_level(k)).map_err(|_| NoiseError::BadEpsilon(eps.for_level(k))))
        .collect::<Result<_, _>>()?;
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..draws {
        let mut v = 0.0;
        for (l, normal) in levels.iter().zip(&normals) {
            let d = l.energy - energy;
            let f = match mode {
                JitterMode::PerCycle => (0..n_cycles).map(|_| cycle_factor(d + normal.sample(rng), sigma)).product(),
                JitterMode::PerShot => cycle_factor(d + normal.sample(rng), sigma).powi(n_cycles as i32),
            };
            v += l.overlap * f;
        }
        sum += v;
        sum2 += v * v;
    }
    let m = draws as f64;
    let mean = sum / m;
    let var = if draws > 1 { ((sum2 - m * mean * mean) / (m - 1.0)).max(0.0) } else { 0.0 };
    Ok(Estimate { mean, std_err: (var / m).sqrt() })
}

/// A two-qubit Pauli inserted right after op `after`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fault {
    pub after: usize,
    pub qubits: [usize; 2],
    pub paulis: [Pauli; 2],
}

const PAULIS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

fn check_probability(p: f64) -> Result<(), NoiseError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(NoiseError::BadProbability(p))
    }
}

/// After every op touching exactly two qubits, with probability `p2q`, draws
/// one of the 15 non-identity two-qubit Paulis. One uniform per gate plus one
/// index per fault, so `p2q = 0` consumes draws but never faults.
pub fn sample_faults<R: Rng + ?Sized>(circuit: &Circuit, p2q: f64, rng: &mut R) -> Result<Vec<Fault>, NoiseError> {
    check_probability(p2q)?;
    let mut faults = Vec::new();
    for (i, op) in circuit.ops().iter().enumerate() {
        if op.gate().is_measure() {
            continue;
        }
        let qs: Vec<usize> = op.qubits().collect();
        if qs.len() != 2 {
            continue;
        }
        let u: f64 = rng.random();
        if u < p2q {
            let idx = rng.random_range(1..16usize);
            faults.push(Fault { after: i, qubits: [qs[0], qs[1]], paulis: [PAULIS[idx / 4], PAULIS[idx % 4]] });
        }
    }
    Ok(faults)
}

fn fault_ops(f: &Fault) -> Result<Vec<GateOp>, CircuitError> {
    let mut out = Vec::new();
    for (q, p) in f.qubits.iter().zip(f.paulis) {
        if let Some(g) = p.gate() {
            out.push(GateOp::new(g, [*q])?);
        }
    }
    Ok(out)
}

/// Copy of `circuit` with the faults spliced in.
pub fn with_faults(circuit: &Circuit, faults: &[Fault]) -> Result<Circuit, NoiseError> {
    let mut out = Circuit::new(circuit.n_qubits())?;
    let mut next = faults.iter().peekable();
    for (i, op) in circuit.ops().iter().enumerate() {
        out.push(op.clone())?;
        while let Some(f) = next.next_if(|f| f.after == i) {
            for g in fault_ops(f)? {
                out.push(g)?;
            }
        }
    }
    Ok(out)
}

/// Samples faults and returns the faulted circuit.
pub fn depolarizing_trajectory<R: Rng + ?Sized>(
    circuit: &Circuit,
    p2q: f64,
    rng: &mut R,
) -> Result<(Circuit, Vec<Fault>), NoiseError> {
    let faults = sample_faults(circuit, p2q, rng)?;
    Ok((with_faults(circuit, &faults)?, faults))
}

/// Applies every non-measurement op of `circuit` plus the faults.
pub fn apply_with_faults(state: &mut StateVector, circuit: &Circuit, faults: &[Fault]) -> Result<(), NoiseError> {
    let mut next = faults.iter().peekable();
    for (i, op) in circuit.ops().iter().enumerate() {
        if !op.gate().is_measure() {
            state.apply(op)?;
        }
        while let Some(f) = next.next_if(|f| f.after == i) {
            for g in fault_ops(f)? {
                state.apply(&g)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn levels() -> Vec<Level> {
        [(-4.0, 0.1), (-1.0, 0.4), (1.0, 0.4), (4.0, 0.1)]
            .iter()
            .map(|&(energy, overlap)| Level { energy, overlap, degeneracy: 1 })
            .collect()
    }

    #[test]
    fn zero_jitter_matches_ideal_kernel() {
        let ls = levels();
        for e in [-4.0, -2.3, 0.0, 1.1] {
            let ideal: f64 = ls.iter().map(|l| l.overlap * cycle_factor(l.energy - e, 14.0).powi(5)).sum();
            let a = noisy_pn_per_cycle(e, &ls, 14.0, 5, &JitterScale::Shared(0.0)).unwrap();
            let b = noisy_pn_per_shot(e, &ls, 14.0, 5, &JitterScale::Shared(0.0)).unwrap();
            assert!((a - ideal).abs() < 1e-15 && (b - ideal).abs() < 1e-15);
        }
    }

    #[test]
    fn quadrature_matches_binomial_expansion() {
        let ls = levels();
        for &(sigma, eps) in &[(4.0, 0.1), (14.0, 0.05), (24.0, 0.1), (24.0, 0.01)] {
            for e in [-4.0, -3.97, -1.05, 0.0, 0.93] {
                let s = JitterScale::Shared(eps);
                let q = noisy_pn_per_shot(e, &ls, sigma, 5, &s).unwrap();
                let b = per_shot_binomial(e, &ls, sigma, 5, &s).unwrap();
                assert!((q - b).abs() < 1e-10, "sigma {sigma} eps {eps} e {e}: {q} vs {b}");
            }
        }
    }

    #[test]
    fn gauss_hermite_integrates_moments() {
        let rule = gauss_hermite(64);
        let m0: f64 = rule.iter().map(|r| r.1).sum();
        let m2: f64 = rule.iter().map(|r| r.1 * r.0 * r.0).sum();
        assert!((m0 - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        assert!((m2 - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn suppression_at_peak() {
        let ls = [Level { energy: 0.5, overlap: 1.0, degeneracy: 1 }];
        for mode in [JitterMode::PerCycle, JitterMode::PerShot] {
            let s = JitterScale::Shared(0.05);
            let v = match mode {
                JitterMode::PerCycle => noisy_pn_per_cycle(0.5, &ls, 14.0, 3, &s).unwrap(),
                JitterMode::PerShot => noisy_pn_per_shot(0.5, &ls, 14.0, 3, &s).unwrap(),
            };
            assert!((v - peak_suppression(3, 14.0, 0.05, mode)).abs() < 1e-12);
        }
    }

    #[test]
    fn monte_carlo_agrees_with_closed_form() {
        let ls = levels();
        let s = JitterScale::Shared(0.05);
        let mut r = rng::stream(5, &[1]);
        for mode in [JitterMode::PerCycle, JitterMode::PerShot] {
            let est = monte_carlo_jitter(-1.0, &ls, 14.0, 3, &s, mode, 20_000, &mut r).unwrap();
            let exact = match mode {
                JitterMode::PerCycle => noisy_pn_per_cycle(-1.0, &ls, 14.0, 3, &s).unwrap(),
                JitterMode::PerShot => per_shot_binomial(-1.0, &ls, 14.0, 3, &s).unwrap(),
            };
            assert!((est.mean - exact).abs() < 4.0 * est.std_err, "{mode:?}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let ls = levels();
        assert!(matches!(
            noisy_pn_per_cycle(0.0, &ls, 4.0, 3, &JitterScale::Shared(-0.1)),
            Err(NoiseError::BadEpsilon(_))
        ));
        assert!(matches!(
            noisy_pn_per_cycle(0.0, &ls, 4.0, 3, &JitterScale::PerLevel(vec![0.1])),
            Err(NoiseError::LevelMismatch { .. })
        ));
        let c = Circuit::new(2).unwrap();
        assert!(sample_faults(&c, 1.5, &mut rng::stream(0, &[])).is_err());
    }

    #[test]
    fn faults_follow_two_qubit_gates() {
        let mut c = Circuit::new(3).unwrap();
        c.h(0).unwrap().cnot(0, 1).unwrap().cnot(1, 2).unwrap().measure(2).unwrap();
        let mut r = rng::stream(3, &[]);
        let faults = sample_faults(&c, 1.0, &mut r).unwrap();
        assert_eq!(faults.iter().map(|f| f.after).collect::<Vec<_>>(), vec![1, 2]);
        assert!(faults.iter().all(|f| f.paulis != [Pauli::I, Pauli::I]));
        assert_eq!(faults[0].qubits, [0, 1]);
        assert!(sample_faults(&c, 0.0, &mut r).unwrap().is_empty());

        let faulted = with_faults(&c, &faults).unwrap();
        let mut a = StateVector::zero(3).unwrap();
        apply_with_faults(&mut a, &c, &faults).unwrap();
        let mut b = StateVector::zero(3).unwrap();
        for op in faulted.ops().iter().filter(|o| !o.gate().is_measure()) {
            b.apply(op).unwrap();
        }
        assert!((a.inner_product(&b).unwrap().norm() - 1.0).abs() < 1e-12);
    }
}
