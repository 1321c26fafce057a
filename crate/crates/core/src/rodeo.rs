//! Rodeo energy scans: cycle circuits, ancilla-0 success statistics, and the
//! three-pass peak search.
//!
//! A cycle with Gaussian time `t` succeeds (ancilla reads 0) with probability
//! `Σ_k |c_k|² cos²((E - E_k) t / 2)`. Averaging over `t ~ N(0, σ²)` and
//! chaining `n` cycles gives peaks of height `|c_k|²` on a `2^-n` floor.
//!
//! Qubit 0 is the ancilla; system qubit `q` lives on wire `q + 1`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Control};
use crate::exec::map_indexed;
use crate::fit::{self, Bounds, FitError, Gaussian};
use crate::noise::{self, NoiseError};
use crate::pauli::{
    chain_bonds, exact_evolution_circuit, find_reversal_partition, h_obj_coefficients, push_bond_exponential,
    trotter2_schedule, Level, PauliError, PauliHamiltonian, PauliString, ReversalPartition,
};
use crate::rng::{self, Purpose};
use crate::statevec::{SimError, StateVector, ZERO_PROBABILITY};
use crate::transpile::{transpile, NativeGateSet, TranspileError};

#[derive(Debug, Error)]
pub enum RodeoError {
    #[error("initial state has {got} qubits, Hamiltonian has {want}")]
    StateMismatch { want: usize, got: usize },
    #[error("{0}")]
    Unsupported(String),
    #[error("sigma must be positive and finite, got {0}")]
    BadSigma(f64),
    #[error("need at least one cycle, circuit and shot")]
    EmptyRun,
    #[error("exact mode cannot model depolarizing noise (p2q = {0})")]
    ExactModeNoise(f64),
    #[error("energy grid is empty or not finite")]
    BadGrid,
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Transpile(#[from] TranspileError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// How the ancilla selects the direction of time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    /// Open-controlled reversal gates around an uncontrolled evolution for `t/2`.
    Reversal,
    /// Every evolution gate controlled on the ancilla, evolution for `t`.
    Controlled,
}

/// How `exp(-iHτ)` is compiled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Evolution {
    /// Two-CNOT exact circuit; only for `c1 XZ + c2 ZX`.
    Exact,
    /// Second-order Trotter for periodic `XZ + ZX` chains.
    Trotter { dt: f64 },
    /// One dense unitary gate.
    Dense,
}

#[derive(Clone, Debug)]
pub struct RodeoSystem {
    hamiltonian: PauliHamiltonian,
    psi: StateVector,
    construction: Construction,
    evolution: Evolution,
    partition: Option<ReversalPartition>,
}

fn gate_err(e: impl std::fmt::Display) -> RodeoError {
    RodeoError::Unsupported(e.to_string())
}

impl RodeoSystem {
    pub fn new(
        hamiltonian: PauliHamiltonian,
        psi: StateVector,
        construction: Construction,
        evolution: Evolution,
    ) -> Result<Self, RodeoError> {
        let n = hamiltonian.n_qubits();
        if psi.n_qubits() != n {
            return Err(RodeoError::StateMismatch { want: n, got: psi.n_qubits() });
        }
        match evolution {
            Evolution::Exact => {
                h_obj_coefficients(&hamiltonian)?;
            }
            Evolution::Trotter { dt } => {
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(PauliError::BadTimeStep(dt).into());
                }
                chain_bonds(&hamiltonian)?;
            }
            Evolution::Dense => {}
        }
        let partition = match construction {
            Construction::Controlled => None,
            Construction::Reversal => {
                let p = find_reversal_partition(&hamiltonian, n)?;
                if p.parts.len() > 1 {
                    match evolution {
                        Evolution::Trotter { .. } => {
                            for b in chain_bonds(&hamiltonian)? {
                                let parts: Vec<_> = b.terms.iter().flatten().map(|&k| p.part_of(k)).collect();
                                if parts.windows(2).any(|w| w[0] != w[1]) {
                                    return Err(gate_err(format!(
                                        "bond ({}, {}) spans two reversal parts",
                                        b.a, b.b
                                    )));
                                }
                            }
                        }
                        _ => {
                            return Err(gate_err(format!(
                                "no single reversal gate flips every term ({} parts needed); use trotter evolution or the controlled construction",
                                p.parts.len()
                            )))
                        }
                    }
                }
                Some(p)
            }
        };
        Ok(Self { hamiltonian, psi, construction, evolution, partition })
    }

    pub fn hamiltonian(&self) -> &PauliHamiltonian {
        &self.hamiltonian
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.psi
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn evolution(&self) -> Evolution {
        self.evolution
    }

    pub fn partition(&self) -> Option<&ReversalPartition> {
        self.partition.as_ref()
    }

    pub fn n_system(&self) -> usize {
        self.hamiltonian.n_qubits()
    }

    /// Bound on the spectrum: `Σ |c_i|`.
    pub fn energy_bound(&self) -> f64 {
        self.hamiltonian.coefficient_l1()
    }

    fn system_map(&self) -> Vec<usize> {
        (1..=self.n_system()).collect()
    }

    fn push_reversal(&self, c: &mut Circuit, r: &PauliString) -> Result<(), RodeoError> {
        for op in r.gate_ops(&self.system_map())? {
            c.push(op.with_control(Control::on_zero(0))?)?;
        }
        Ok(())
    }

    /// `exp(-iHτ)` on `n_system` wires.
    pub fn evolution_circuit(&self, tau: f64) -> Result<Circuit, RodeoError> {
        let h = &self.hamiltonian;
        Ok(match self.evolution {
            Evolution::Exact => exact_evolution_circuit(h, tau)?,
            Evolution::Trotter { dt } => {
                let mut c = Circuit::new(h.n_qubits())?;
                for s in trotter2_schedule(h, tau, dt)? {
                    push_bond_exponential(&mut c, s.bond.a, s.bond.b, s.bond.c_xz, s.bond.c_zx, s.tau)?;
                }
                c
            }
            Evolution::Dense => {
                let mut c = Circuit::new(h.n_qubits())?;
                let qs: Vec<usize> = (0..h.n_qubits()).collect();
                c.unitary(&qs, h.evolution(tau)?)?;
                c
            }
        })
    }

    fn lift(&self, seg: &Circuit) -> Result<Circuit, RodeoError> {
        let mut c = Circuit::new(self.n_system() + 1)?;
        c.append_mapped(seg, &self.system_map())?;
        Ok(c)
    }

    /// One cycle at target energy `energy` and time `t`, ending in a
    /// measurement of the ancilla.
    pub fn build_cycle_circuit(&self, energy: f64, t: f64) -> Result<Circuit, RodeoError> {
        if !(energy.is_finite() && t.is_finite()) {
            return Err(RodeoError::BadGrid);
        }
        let mut c = Circuit::new(self.n_system() + 1)?;
        c.h(0)?;
        match (self.construction, &self.partition) {
            (Construction::Controlled, _) => {
                let evo = self.lift(&self.evolution_circuit(t)?)?;
                c.append(&evo.controlled(Control::on_one(0))?)?;
            }
            (Construction::Reversal, Some(p)) if p.parts.len() == 1 => {
                let r = &p.parts[0].reversal;
                self.push_reversal(&mut c, r)?;
                c.append(&self.lift(&self.evolution_circuit(t / 2.0)?)?)?;
                self.push_reversal(&mut c, r)?;
            }
            (Construction::Reversal, Some(p)) => {
                // Trotter with several parts: wrap runs of bond steps that share a part.
                let Evolution::Trotter { dt } = self.evolution else { unreachable!("checked in new") };
                let mut open: Option<usize> = None;
                for s in trotter2_schedule(&self.hamiltonian, t / 2.0, dt)? {
                    let k = s.bond.terms.iter().flatten().next().copied().unwrap_or(0);
                    let part = p.part_of(k);
                    if part != open {
                        if let Some(prev) = open {
                            self.push_reversal(&mut c, &p.parts[prev].reversal)?;
                        }
                        if let Some(next) = part {
                            self.push_reversal(&mut c, &p.parts[next].reversal)?;
                        }
                        open = part;
                    }
                    push_bond_exponential(&mut c, s.bond.a + 1, s.bond.b + 1, s.bond.c_xz, s.bond.c_zx, s.tau)?;
                }
                if let Some(prev) = open {
                    self.push_reversal(&mut c, &p.parts[prev].reversal)?;
                }
            }
            (Construction::Reversal, None) => unreachable!("partition built in new"),
        }
        c.phase(0, energy * t)?;
        c.h(0)?;
        c.measure(0)?;
        Ok(c)
    }

    /// Ancilla-0 probability of each cycle given success on all earlier
    /// ones, plus the system state entering each cycle. Stops after the first
    /// cycle whose success probability is below [`ZERO_PROBABILITY`].
    pub fn noiseless_path(&self, energy: f64, times: &[f64]) -> Result<CyclePath, RodeoError> {
        let mut state = embed(&self.psi)?;
        let mut probs = Vec::with_capacity(times.len());
        let mut entering = Vec::with_capacity(times.len());
        for &t in times {
            entering.push(state.clone());
            let c = self.build_cycle_circuit(energy, t)?;
            for op in c.ops().iter().filter(|o| !o.gate().is_measure()) {
                state.apply(op)?;
            }
            let p = state.probability(0, 0)?.clamp(0.0, 1.0);
            probs.push(p);
            if p < ZERO_PROBABILITY {
                break;
            }
            state.collapse(0, 0)?;
        }
        Ok(CyclePath { probs, entering })
    }

    /// Probability that every cycle succeeds.
    pub fn run_exact(&self, energy: f64, times: &[f64]) -> Result<f64, RodeoError> {
        let path = self.noiseless_path(energy, times)?;
        Ok(if path.probs.len() < times.len() { 0.0 } else { path.probs.iter().product() })
    }
}

fn embed(psi: &StateVector) -> Result<StateVector, SimError> {
    let mut amps = psi.amplitudes().to_vec();
    amps.resize(2 * psi.dim(), num_complex::Complex64::new(0.0, 0.0));
    StateVector::from_amplitudes(amps)
}

#[derive(Clone, Debug)]
pub struct CyclePath {
    pub probs: Vec<f64>,
    /// Full register (ancilla in |0>) entering each cycle.
    pub entering: Vec<StateVector>,
}

/// `cos²((E - E_k) t / 2)`.
pub fn cycle_kernel(energy: f64, e_k: f64, t: f64) -> f64 {
    (0.5 * (energy - e_k) * t).cos().powi(2)
}

/// Single-cycle success averaged over `t ~ N(0, σ²)`.
pub fn analytic_single_cycle(energy: f64, e_k: f64, sigma: f64) -> f64 {
    let d = energy - e_k;
    0.5 * (1.0 + (-0.5 * d * d * sigma * sigma).exp())
}

/// Mean `n`-cycle success probability.
pub fn analytic_pn(energy: f64, levels: &[Level], sigma: f64, n_cycles: usize) -> f64 {
    levels.iter().map(|l| l.overlap * analytic_single_cycle(energy, l.energy, sigma).powi(n_cycles as i32)).sum()
}

/// Floor far from every eigenvalue.
pub fn background(n_cycles: usize) -> f64 {
    0.5f64.powi(n_cycles as i32)
}

/// Analytic peak standard deviation `√2 / (√n σ)`.
pub fn peak_width(n_cycles: usize, sigma: f64) -> f64 {
    std::f64::consts::SQRT_2 / ((n_cycles as f64).sqrt() * sigma)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    /// Averages the exact success probability over the drawn circuits.
    Exact,
    /// Samples shots.
    Sampled,
}

impl std::str::FromStr for RunMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(Self::Exact),
            "sampled" => Ok(Self::Sampled),
            _ => Err(format!("unknown mode '{s}' (exact | sampled)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PassSpec {
    pub sigma: f64,
    pub n_circuits: usize,
    pub n_shots: u64,
}

/// Settings shared by every pass of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanSettings {
    pub n_cycles: usize,
    pub mode: RunMode,
    pub p2q: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub energy: f64,
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanResult {
    pub sigma: f64,
    pub points: Vec<ScanPoint>,
}

impl ScanResult {
    pub fn energies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.energy).collect()
    }
}

fn draw_times(seed: u64, key: [u64; 4], sigma: f64, n: usize) -> Vec<f64> {
    let mut r = rng::stream(seed, &[key[0], key[1], key[2], key[3], Purpose::Times as u64]);
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    (0..n).map(|_| normal.sample(&mut r)).collect()
}

/// Successes out of `shots` with optional two-qubit depolarizing faults.
fn sample_shots(
    system: &RodeoSystem,
    energy: f64,
    times: &[f64],
    path: &CyclePath,
    shots: u64,
    p2q: f64,
    shot_rng: &mut rng::Stream,
    fault_rng: &mut rng::Stream,
) -> Result<u64, RodeoError> {
    let native = if p2q > 0.0 {
        times
            .iter()
            .map(|&t| Ok(transpile(&system.build_cycle_circuit(energy, t)?, NativeGateSet::IbmCnotU)?))
            .collect::<Result<Vec<_>, RodeoError>>()?
    } else {
        Vec::new()
    };
    let mut successes = 0;
    for _ in 0..shots {
        let mut off_path: Option<StateVector> = None;
        let mut ok = true;
        for i in 0..times.len() {
            let faults = if p2q > 0.0 { noise::sample_faults(&native[i], p2q, fault_rng)? } else { Vec::new() };
            if off_path.is_none() && faults.is_empty() {
                let u: f64 = shot_rng.random();
                if u >= path.probs.get(i).copied().unwrap_or(0.0) {
                    ok = false;
                    break;
                }
                continue;
            }
            let mut s = match off_path.take() {
                Some(s) => s,
                None => path.entering[i].clone(),
            };
            noise::apply_with_faults(&mut s, &native[i], &faults)?;
            if s.measure(0, shot_rng)? != 0 {
                ok = false;
                break;
            }
            off_path = Some(s);
        }
        if ok {
            successes += 1;
        }
    }
    Ok(successes)
}

fn scan_point(
    system: &RodeoSystem,
    energy: f64,
    index: usize,
    pass: &PassSpec,
    settings: &ScanSettings,
    key: [u64; 2],
) -> Result<ScanPoint, RodeoError> {
    let trials = pass.n_shots * pass.n_circuits as u64;
    let mut prob_sum = 0.0;
    let mut successes = 0;
    for c in 0..pass.n_circuits {
        let k = [key[0], key[1], index as u64, c as u64];
        let times = draw_times(settings.seed, k, pass.sigma, settings.n_cycles);
        let path = system.noiseless_path(energy, &times)?;
        match settings.mode {
            RunMode::Exact => {
                prob_sum += if path.probs.len() < times.len() { 0.0 } else { path.probs.iter().product::<f64>() };
            }
            RunMode::Sampled => {
                let mut shot_rng = rng::stream(settings.seed, &[k[0], k[1], k[2], k[3], Purpose::Shots as u64]);
                let mut fault_rng = rng::stream(settings.seed, &[k[0], k[1], k[2], k[3], Purpose::Faults as u64]);
                successes +=
                    sample_shots(system, energy, &times, &path, pass.n_shots, settings.p2q, &mut shot_rng, &mut fault_rng)?;
            }
        }
    }
    let p_hat = match settings.mode {
        RunMode::Exact => {
            let p = prob_sum / pass.n_circuits as f64;
            successes = (p * trials as f64).round() as u64;
            p
        }
        RunMode::Sampled => successes as f64 / trials as f64,
    };
    let epsilon = (p_hat * (1.0 - p_hat) / trials as f64).max(0.0).sqrt();
    Ok(ScanPoint { energy, successes, trials, p_hat, epsilon })
}

/// Runs one pass over `energies`. `key` is `(pass, window)` and separates
/// the RNG streams of different passes and windows.
pub fn run_scan(
    system: &RodeoSystem,
    energies: &[f64],
    pass: &PassSpec,
    settings: &ScanSettings,
    key: [u64; 2],
) -> Result<ScanResult, RodeoError> {
    if !(pass.sigma > 0.0 && pass.sigma.is_finite()) {
        return Err(RodeoError::BadSigma(pass.sigma));
    }
    if settings.n_cycles == 0 || pass.n_circuits == 0 || pass.n_shots == 0 {
        return Err(RodeoError::EmptyRun);
    }
    if energies.is_empty() || energies.iter().any(|e| !e.is_finite()) {
        return Err(RodeoError::BadGrid);
    }
    if !(0.0..=1.0).contains(&settings.p2q) {
        return Err(NoiseError::BadProbability(settings.p2q).into());
    }
    if settings.mode == RunMode::Exact && settings.p2q > 0.0 {
        return Err(RodeoError::ExactModeNoise(settings.p2q));
    }
    let points = map_indexed(energies.len(), |i| scan_point(system, energies[i], i, pass, settings, key));
    Ok(ScanResult { sigma: pass.sigma, points: points.into_iter().collect::<Result<_, _>>()? })
}

/// Symmetric grid `j h`, `h = 1/(2σ)`, covering `±(Σ|c| + 2/σ)`.
pub fn pass1_grid(system: &RodeoSystem, sigma: f64) -> Vec<f64> {
    let h = 0.5 / sigma;
    let range = system.energy_bound() + 2.0 / sigma;
    let m = (range / h - 1e-9).ceil() as i64;
    (-m..=m).map(|j| j as f64 * h).collect()
}

/// A run of consecutive points above `2^-n + k ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub first: usize,
    pub last: usize,
    pub peak_index: usize,
    pub peak_energy: f64,
    /// Largest matched-filter amplitude over the run, in units of its noise.
    pub significance: f64,
    pub confirmed: bool,
}

pub fn detect_candidates(points: &[ScanPoint], n_cycles: usize, k: f64) -> Vec<(usize, usize)> {
    let bg = background(n_cycles);
    let mut runs = Vec::new();
    let mut start: Option<usize> = None;
    for (i, p) in points.iter().enumerate() {
        let above = p.p_hat > bg + k * p.epsilon;
        match (above, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, points.len() - 1));
    }
    runs
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Noise scale of a pass: `1.4826 · MAD(P̂)`, floored at the median binomial error.
pub fn robust_scale(points: &[ScanPoint]) -> f64 {
    let mut p: Vec<f64> = points.iter().map(|q| q.p_hat).collect();
    let m = median(&mut p);
    let mut dev: Vec<f64> = p.iter().map(|v| (v - m).abs()).collect();
    let mut eps: Vec<f64> = points.iter().map(|q| q.epsilon).collect();
    (1.4826 * median(&mut dev)).max(median(&mut eps)).max(1e-12)
}

/// Matched-filter amplitude `F` at point `i` and its noise `σ_b / √Σg²`,
/// for a Gaussian template of standard deviation `w` cut at `±3w`.
pub fn matched_filter(points: &[ScanPoint], i: usize, w: f64, bg: f64, noise: f64) -> (f64, f64) {
    let e0 = points[i].energy;
    let (mut num, mut den) = (0.0, 0.0);
    for p in points {
        let d = p.energy - e0;
        if d.abs() <= 3.0 * w {
            let g = (-0.5 * d * d / (w * w)).exp();
            num += g * (p.p_hat - bg);
            den += g * g;
        }
    }
    (num / den, noise / den.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub n_cycles: usize,
    pub passes: [PassSpec; 3],
    /// Detection threshold in units of ε.
    pub detect_k: f64,
    /// Matched-filter confirmation threshold in units of its noise.
    pub confirm_k: f64,
    pub final_points: usize,
    /// Half-width of the final window in units of `1/σ₂`.
    pub final_half_width: f64,
    pub mode: RunMode,
    pub p2q: f64,
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            n_cycles: 5,
            passes: [
                PassSpec { sigma: 4.0, n_circuits: 5, n_shots: 1024 },
                PassSpec { sigma: 14.0, n_circuits: 2, n_shots: 1024 },
                PassSpec { sigma: 24.0, n_circuits: 1, n_shots: 1024 },
            ],
            detect_k: 5.0,
            confirm_k: 3.0,
            final_points: 20,
            final_half_width: 1.0,
            mode: RunMode::Sampled,
            p2q: 0.0,
            seed: 0,
        }
    }
}

impl ProtocolConfig {
    pub fn settings(&self) -> ScanSettings {
        ScanSettings { n_cycles: self.n_cycles, mode: self.mode, p2q: self.p2q, seed: self.seed }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeakFit {
    pub center: f64,
    pub center_err: f64,
    pub width: f64,
    pub width_err: f64,
    pub height: f64,
    pub height_err: f64,
    pub offset: f64,
    pub offset_err: f64,
    pub chi2: f64,
    pub chi2_red: f64,
    pub iterations: usize,
    pub window: [f64; 2],
    /// (center, width, height, offset) that ended on a fit bound.
    pub at_bound: [bool; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Location {
    pub energy: f64,
    pub significance: f64,
    /// Index of the pass-2 scan it came from.
    pub window: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProtocolResult {
    pub pass1: ScanResult,
    pub candidates: Vec<Candidate>,
    pub pass2: Vec<ScanResult>,
    pub locations: Vec<Location>,
    pub pass3: Vec<ScanResult>,
    pub peaks: Vec<PeakFit>,
    /// Windows whose fit failed, with the reason.
    pub failures: Vec<String>,
}

/// Pass 1 and candidate confirmation.
pub fn find_candidates(
    pass1: &ScanResult,
    n_cycles: usize,
    detect_k: f64,
    confirm_k: f64,
) -> Vec<Candidate> {
    let pts = &pass1.points;
    let bg = background(n_cycles);
    let noise = robust_scale(pts);
    let w = peak_width(n_cycles, pass1.sigma);
    detect_candidates(pts, n_cycles, detect_k)
        .into_iter()
        .map(|(first, last)| {
            let peak_index = (first..=last).max_by(|&a, &b| pts[a].p_hat.total_cmp(&pts[b].p_hat)).unwrap_or(first);
            let lo = first.saturating_sub(1);
            let hi = (last + 1).min(pts.len() - 1);
            let significance = (lo..=hi)
                .map(|i| {
                    let (f, s) = matched_filter(pts, i, w, bg, noise);
                    f / s
                })
                .fold(f64::NEG_INFINITY, f64::max);
            Candidate {
                first,
                last,
                peak_index,
                peak_energy: pts[peak_index].energy,
                significance,
                confirmed: significance > confirm_k,
            }
        })
        .collect()
}

/// Matched-filter maximum within `±reach` of `center`, refined by a parabola.
fn locate(scan: &ScanResult, center: f64, reach: f64, n_cycles: usize) -> Option<Location> {
    let pts = &scan.points;
    let bg = background(n_cycles);
    let noise = robust_scale(pts);
    let w = peak_width(n_cycles, scan.sigma);
    let f: Vec<(f64, f64)> = (0..pts.len()).map(|i| matched_filter(pts, i, w, bg, noise)).collect();
    let best = (0..pts.len())
        .filter(|&i| (pts[i].energy - center).abs() <= reach + 1e-12)
        .max_by(|&a, &b| f[a].0.total_cmp(&f[b].0))?;
    let mut energy = pts[best].energy;
    if best > 0 && best + 1 < pts.len() {
        let (l, m, r) = (f[best - 1].0, f[best].0, f[best + 1].0);
        let curv = l - 2.0 * m + r;
        if curv < 0.0 {
            let h = pts[best + 1].energy - pts[best].energy;
            energy += (0.5 * h * (l - r) / curv).clamp(-0.5 * h, 0.5 * h);
        }
    }
    Some(Location { energy, significance: f[best].0 / f[best].1, window: 0 })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Bounded weighted Gaussian fit of a final-pass window.
pub fn fit_peak(scan: &ScanResult, n_cycles: usize) -> Result<PeakFit, RodeoError> {
    let pts = &scan.points;
    let x: Vec<f64> = pts.iter().map(|p| p.energy).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.p_hat).collect();
    let s: Vec<f64> = pts
        .iter()
        .map(|p| {
            let t = p.trials as f64;
            let pc = p.p_hat.clamp(0.5 / t, 1.0 - 0.5 / t);
            (pc * (1.0 - pc) / t).sqrt()
        })
        .collect();
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let imax = (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b])).ok_or(RodeoError::BadGrid)?;
    let bg = background(n_cycles);
    let w0 = 1.0 / ((n_cycles as f64).sqrt() * scan.sigma);
    let bounds = Bounds { lower: [lo, 0.25 * w0, 0.0, 0.0], upper: [hi, 4.0 * w0, f64::INFINITY, 1.0] };
    // start at the highest point, and again at the window middle; keep the better fit
    let starts = [x[imax], 0.5 * (lo + hi)];
    let mut best: Option<fit::FitResult> = None;
    let mut last_err = None;
    for center in starts {
        let init = Gaussian { center, width: w0, height: (y[imax] - bg).max(0.0), offset: bg };
        match fit::fit_gaussian(&x, &y, &s, init, bounds) {
            Ok(r) if best.as_ref().is_none_or(|b| r.chi2 < b.chi2) => best = Some(r),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    let r = match (best, last_err) {
        (Some(r), _) => r,
        (None, Some(e)) => return Err(e.into()),
        (None, None) => unreachable!("two starts"),
    };
    Ok(PeakFit {
        center: r.model.center,
        center_err: r.errors[0],
        width: r.model.width,
        width_err: r.errors[1],
        height: r.model.height,
        height_err: r.errors[2],
        offset: r.model.offset,
        offset_err: r.errors[3],
        chi2: r.chi2,
        chi2_red: r.chi2_red,
        iterations: r.iterations,
        window: [lo, hi],
        at_bound: r.at_bound,
    })
}

/// Coarse scan, zoom on confirmed candidates, fine scan and fit per peak.
pub fn run_protocol(system: &RodeoSystem, cfg: &ProtocolConfig) -> Result<ProtocolResult, RodeoError> {
    if cfg.final_points < 5 {
        return Err(FitError::TooFewPoints { need: 5, got: cfg.final_points }.into());
    }
    let settings = cfg.settings();
    let [p1, p2, p3] = cfg.passes;
    let n = cfg.n_cycles;
    let pass1 = run_scan(system, &pass1_grid(system, p1.sigma), &p1, &settings, [1, 0])?;
    let candidates = find_candidates(&pass1, n, cfg.detect_k, cfg.confirm_k);

    let h2 = 0.5 / p2.sigma;
    let half = 4.0 / p1.sigma;
    let m = (half / h2 - 1e-9).ceil() as i64;
    let mut pass2 = Vec::new();
    let mut locations: Vec<Location> = Vec::new();
    for c in candidates.iter().filter(|c| c.confirmed) {
        let grid: Vec<f64> = (-m..=m).map(|j| c.peak_energy + j as f64 * h2).collect();
        let window = pass2.len();
        let scan = run_scan(system, &grid, &p2, &settings, [2, window as u64])?;
        if let Some(mut loc) = locate(&scan, c.peak_energy, 2.0 / p1.sigma, n) {
            loc.window = window;
            locations.push(loc);
        }
        pass2.push(scan);
    }
    locations.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let mut merged: Vec<Location> = Vec::new();
    for loc in locations {
        match merged.last_mut() {
            Some(prev) if loc.energy - prev.energy < 4.0 / p2.sigma => {
                if loc.significance > prev.significance {
                    *prev = loc;
                }
            }
            _ => merged.push(loc),
        }
    }

    let hw = cfg.final_half_width / p2.sigma;
    let mut pass3 = Vec::new();
    let mut peaks = Vec::new();
    let mut failures = Vec::new();
    for (i, loc) in merged.iter().enumerate() {
        let grid = linspace(loc.energy - hw, loc.energy + hw, cfg.final_points);
        let scan = run_scan(system, &grid, &p3, &settings, [3, i as u64])?;
        match fit_peak(&scan, n) {
            Ok(fit) => peaks.push(fit),
            Err(e) => failures.push(format!("window {i} near {:.4}: {e}", loc.energy)),
        }
        pass3.push(scan);
    }
    Ok(ProtocolResult { pass1, candidates, pass2, locations: merged, pass3, peaks, failures })
}

/// Built-in two-qubit system `2.5 XZ + 1.5 ZX` from `|00>`.
pub fn h_obj_system(construction: Construction) -> Result<RodeoSystem, RodeoError> {
    RodeoSystem::new(PauliHamiltonian::h_obj(2.5, 1.5), StateVector::zero(2)?, construction, Evolution::Exact)
}

/// One reversal-construction cycle of the built-in system.
pub fn rodeo_cycle_reversal(energy: f64, t: f64) -> Result<Circuit, RodeoError> {
    h_obj_system(Construction::Reversal)?.build_cycle_circuit(energy, t)
}

/// The same cycle with every evolution gate controlled on the ancilla.
pub fn rodeo_cycle_naive(energy: f64, t: f64) -> Result<Circuit, RodeoError> {
    h_obj_system(Construction::Controlled)?.build_cycle_circuit(energy, t)
}
