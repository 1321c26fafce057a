//! Overlaps and Hamiltonian matrix elements between two-qubit ansatz states,
//! measured on one ancilla, and the generalized eigenproblem they feed.
//!
//! The ansatz is `N(α, β, γ, δ) = e^{iδX₀} e^{iδX₁} e^{i(αXX + βYY + γZZ)}`
//! compiled to ten gates. Two ways to get `<A|U|B>` with `A = N(p)ψ`,
//! `B = N(q)ψ`:
//!
//! * network: `N(p)` with its parameter-shift gates controlled on the ancilla,
//!   so the ancilla-1 branch sees `N(q)`;
//! * Hadamard test: `C-N(p)` then `C-N(q)†`, both fully controlled.
//!
//! Ancilla readout `P0 - P1` maps to the real or imaginary part depending on
//! the rotation axis; the sign table lives in [`axis_sign`].

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Control, Gate, GateNetwork, GateOp, NetworkMode};
use crate::pauli::{PauliError, PauliHamiltonian, PauliString};
use crate::rng::{self, Purpose};
use crate::statevec::{SimError, StateVector};

#[derive(Debug, Error)]
pub enum VarsubError {
    #[error("ansatz parameters must be finite")]
    NonFinite,
    #[error("the ansatz acts on 2 qubits, got {0}")]
    WrongQubitCount(usize),
    #[error("sampled estimation needs at least one shot")]
    NoShots,
    #[error("need at least one ansatz point")]
    Empty,
    #[error("overlap matrix is numerically singular (no eigenvalue above {threshold:.1e} of the largest)")]
    SingularOverlap { threshold: f64 },
    #[error("matrix dimensions differ: S is {s}, H is {h}")]
    DimensionMismatch { s: usize, h: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

/// Parameter shift between two ansatz points.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamDelta {
    pub d_alpha: f64,
    pub d_beta: f64,
    pub d_gamma: f64,
    pub d_delta: f64,
}

impl AnsatzParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        Self { alpha, beta, gamma, delta }
    }

    pub fn delta_to(&self, other: &Self) -> ParamDelta {
        ParamDelta {
            d_alpha: other.alpha - self.alpha,
            d_beta: other.beta - self.beta,
            d_gamma: other.gamma - self.gamma,
            d_delta: other.delta - self.delta,
        }
    }

    pub fn shifted(&self, d: &ParamDelta) -> Self {
        Self::new(self.alpha + d.d_alpha, self.beta + d.d_beta, self.gamma + d.d_gamma, self.delta + d.d_delta)
    }

    fn check(&self) -> Result<(), VarsubError> {
        if [self.alpha, self.beta, self.gamma, self.delta].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(VarsubError::NonFinite)
        }
    }
}

/// Ancilla rotation before readout. `Y` gives real parts, `X` imaginary parts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverlapMethod {
    Network,
    HadamardTest,
}

impl FromStr for OverlapMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "network" => Ok(Self::Network),
            "hadamard" | "hadamard-test" => Ok(Self::HadamardTest),
            _ => Err(format!("unknown method '{s}' (network | hadamard)")),
        }
    }
}

impl fmt::Display for OverlapMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Network => "network",
            Self::HadamardTest => "hadamard",
        })
    }
}

/// `P0 - P1 = sign · Re<A|U|B>` (axis Y) or `sign · Im<A|U|B>` (axis X).
pub fn axis_sign(method: OverlapMethod, _axis: Axis) -> f64 {
    match method {
        OverlapMethod::Network => 1.0,
        OverlapMethod::HadamardTest => -1.0,
    }
}

const ANCILLA: usize = 0;
const J: usize = 1;
const K: usize = 2;

fn base_ops(p: &AnsatzParams, j: usize, k: usize) -> Vec<(Gate, Vec<usize>)> {
    vec![
        (Gate::Rz(-FRAC_PI_2), vec![k]),
        (Gate::Cnot, vec![k, j]),
        (Gate::Rz(FRAC_PI_2 - 2.0 * p.gamma), vec![j]),
        (Gate::Ry(2.0 * p.alpha - FRAC_PI_2), vec![k]),
        (Gate::Cnot, vec![j, k]),
        (Gate::Ry(FRAC_PI_2 - 2.0 * p.beta), vec![k]),
        (Gate::Cnot, vec![k, j]),
        (Gate::Rz(FRAC_PI_2), vec![j]),
        (Gate::Rx(-2.0 * p.delta), vec![k]),
        (Gate::Rx(-2.0 * p.delta), vec![j]),
    ]
}

fn push_base(c: &mut Circuit, p: &AnsatzParams, j: usize, k: usize, control: Option<Control>) -> Result<(), CircuitError> {
    for (g, t) in base_ops(p, j, k) {
        let op = GateOp::new(g, t)?;
        c.push(match control {
            Some(ctl) => op.with_control(ctl)?,
            None => op,
        })?;
    }
    Ok(())
}

/// `N(p)` on two qubits.
pub fn build_n_circuit(p: &AnsatzParams) -> Result<Circuit, VarsubError> {
    p.check()?;
    let mut c = Circuit::new(2)?;
    push_base(&mut c, p, 0, 1, None)?;
    Ok(c)
}

/// Ancilla 0, system qubits 1 and 2. Off gives `N(p)`, On gives `N(p + d)`.
pub fn build_network(p: &AnsatzParams, d: &ParamDelta) -> Result<GateNetwork, VarsubError> {
    p.check()?;
    p.shifted(d).check()?;
    let mut base = Circuit::new(3)?;
    push_base(&mut base, p, J, K, None)?;
    let transforms = vec![
        (4, GateOp::new(Gate::Rz(-2.0 * d.d_gamma), [J])?),
        (4, GateOp::new(Gate::Ry(2.0 * d.d_alpha), [K])?),
        (6, GateOp::new(Gate::Ry(-2.0 * d.d_beta), [K])?),
        (10, GateOp::new(Gate::Rx(-2.0 * d.d_delta), [K])?),
        (10, GateOp::new(Gate::Rx(-2.0 * d.d_delta), [J])?),
    ];
    Ok(GateNetwork::new(base, transforms, ANCILLA)?)
}

fn push_insert(c: &mut Circuit, insert: Option<&PauliString>) -> Result<(), VarsubError> {
    if let Some(u) = insert {
        if u.len() != 2 {
            return Err(VarsubError::WrongQubitCount(u.len()));
        }
        for op in u.gate_ops(&[J, K])? {
            c.push(op.with_control(Control::on_one(ANCILLA))?)?;
        }
    }
    Ok(())
}

fn axis_rotation(axis: Axis) -> Gate {
    match axis {
        Axis::X => Gate::Rx(FRAC_PI_2),
        Axis::Y => Gate::Ry(FRAC_PI_2),
    }
}

/// Ancilla prepared by `R_axis(π/2)`, the controlled network, optional
/// controlled `U`, then `H` and measurement of the ancilla.
pub fn build_network_circuit(
    p: &AnsatzParams,
    q: &AnsatzParams,
    axis: Axis,
    insert: Option<&PauliString>,
) -> Result<Circuit, VarsubError> {
    let net = build_network(p, &p.delta_to(q))?;
    let mut c = Circuit::new(3)?;
    c.push_gate(axis_rotation(axis), &[ANCILLA])?;
    c.append(&net.realize(NetworkMode::Controlled))?;
    push_insert(&mut c, insert)?;
    c.h(ANCILLA)?.measure(ANCILLA)?;
    Ok(c)
}

/// `H`, `C-N(p)`, optional controlled `U`, `C-N(q)†`, `R_axis(π/2)`, measure.
pub fn build_hadamard_test_circuit(
    p: &AnsatzParams,
    q: &AnsatzParams,
    axis: Axis,
    insert: Option<&PauliString>,
) -> Result<Circuit, VarsubError> {
    p.check()?;
    q.check()?;
    let ctl = Some(Control::on_one(ANCILLA));
    let mut c = Circuit::new(3)?;
    c.h(ANCILLA)?;
    push_base(&mut c, p, J, K, ctl)?;
    push_insert(&mut c, insert)?;
    let mut nq = Circuit::new(3)?;
    push_base(&mut nq, q, J, K, ctl)?;
    c.append(&nq.inverse()?)?;
    c.push_gate(axis_rotation(axis), &[ANCILLA])?;
    c.measure(ANCILLA)?;
    Ok(c)
}

pub fn build_overlap_circuit(
    method: OverlapMethod,
    p: &AnsatzParams,
    q: &AnsatzParams,
    axis: Axis,
    insert: Option<&PauliString>,
) -> Result<Circuit, VarsubError> {
    match method {
        OverlapMethod::Network => build_network_circuit(p, q, axis, insert),
        OverlapMethod::HadamardTest => build_hadamard_test_circuit(p, q, axis, insert),
    }
}

/// Statevector reference: `<N(p)ψ| U |N(q)ψ>`.
pub fn exact_element(p: &AnsatzParams, q: &AnsatzParams, insert: Option<&PauliString>, psi: &StateVector) -> Result<Complex64, VarsubError> {
    if psi.n_qubits() != 2 {
        return Err(VarsubError::WrongQubitCount(psi.n_qubits()));
    }
    let mut a = psi.clone();
    a.apply_circuit(&build_n_circuit(p)?)?;
    let mut b = psi.clone();
    b.apply_circuit(&build_n_circuit(q)?)?;
    if let Some(u) = insert {
        if u.len() != 2 {
            return Err(VarsubError::WrongQubitCount(u.len()));
        }
        for op in u.gate_ops(&[0, 1])? {
            b.apply(&op)?;
        }
    }
    Ok(a.inner_product(&b)?)
}

/// How `P0 - P1` is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimation {
    Exact,
    Sampled { shots: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComplexEstimate {
    pub value: Complex64,
    /// Standard errors of the real and imaginary parts.
    pub std_err: [f64; 2],
}

fn with_ancilla(psi: &StateVector) -> Result<StateVector, SimError> {
    let mut amps = psi.amplitudes().to_vec();
    amps.resize(2 * psi.dim(), Complex64::new(0.0, 0.0));
    StateVector::from_amplitudes(amps)
}

/// `(P0 - P1, standard error)` of the ancilla.
fn ancilla_signal<R: Rng + ?Sized>(
    circuit: &Circuit,
    init: &StateVector,
    est: Estimation,
    rng: &mut R,
) -> Result<(f64, f64), VarsubError> {
    let mut s = init.clone();
    for op in circuit.ops().iter().filter(|o| !o.gate().is_measure()) {
        s.apply(op)?;
    }
    let p0 = s.probability(ANCILLA, 0)?.clamp(0.0, 1.0);
    match est {
        Estimation::Exact => Ok((2.0 * p0 - 1.0, 0.0)),
        Estimation::Sampled { shots } => {
            if shots == 0 {
                return Err(VarsubError::NoShots);
            }
            let k = Binomial::new(shots, p0).map_err(|_| SimError::Measurement(ANCILLA))?.sample(rng);
            let ph = k as f64 / shots as f64;
            Ok((2.0 * ph - 1.0, 2.0 * (ph * (1.0 - ph) / shots as f64).sqrt()))
        }
    }
}

/// `<N(p)ψ| U |N(q)ψ>` from two ancilla experiments (real and imaginary part).
pub fn estimate_element<R: Rng + ?Sized>(
    method: OverlapMethod,
    p: &AnsatzParams,
    q: &AnsatzParams,
    insert: Option<&PauliString>,
    psi: &StateVector,
    est: Estimation,
    rng: &mut R,
) -> Result<ComplexEstimate, VarsubError> {
    if psi.n_qubits() != 2 {
        return Err(VarsubError::WrongQubitCount(psi.n_qubits()));
    }
    let init = with_ancilla(psi)?;
    let mut part = |axis| -> Result<(f64, f64), VarsubError> {
        let c = build_overlap_circuit(method, p, q, axis, insert)?;
        let (s, e) = ancilla_signal(&c, &init, est, rng)?;
        Ok((axis_sign(method, axis) * s, e))
    };
    let (re, re_err) = part(Axis::Y)?;
    let (im, im_err) = part(Axis::X)?;
    Ok(ComplexEstimate { value: Complex64::new(re, im), std_err: [re_err, im_err] })
}

pub fn estimate_overlap<R: Rng + ?Sized>(
    method: OverlapMethod,
    p: &AnsatzParams,
    q: &AnsatzParams,
    psi: &StateVector,
    est: Estimation,
    rng: &mut R,
) -> Result<ComplexEstimate, VarsubError> {
    estimate_element(method, p, q, None, psi, est, rng)
}

/// `<N(p)ψ| H |N(q)ψ>` term by term.
pub fn estimate_matrix_element<R: Rng + ?Sized>(
    method: OverlapMethod,
    p: &AnsatzParams,
    q: &AnsatzParams,
    h: &PauliHamiltonian,
    psi: &StateVector,
    est: Estimation,
    rng: &mut R,
) -> Result<ComplexEstimate, VarsubError> {
    if h.n_qubits() != 2 {
        return Err(VarsubError::WrongQubitCount(h.n_qubits()));
    }
    let mut value = Complex64::new(0.0, 0.0);
    let mut var = [0.0; 2];
    for (coef, s) in h.terms() {
        let insert = if s.weight() == 0 { None } else { Some(s) };
        let e = estimate_element(method, p, q, insert, psi, est, rng)?;
        value += e.value * coef;
        var[0] += (coef * e.std_err[0]).powi(2);
        var[1] += (coef * e.std_err[1]).powi(2);
    }
    Ok(ComplexEstimate { value, std_err: [var[0].sqrt(), var[1].sqrt()] })
}

/// `S_ij = <φ_i|φ_j>` and `H_ij = <φ_i|H|φ_j>` with complex entries written as `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceMatrices {
    pub method: OverlapMethod,
    pub params: Vec<AnsatzParams>,
    pub s: Vec<Vec<Complex64>>,
    pub h: Vec<Vec<Complex64>>,
    pub s_err: Vec<Vec<[f64; 2]>>,
    pub h_err: Vec<Vec<[f64; 2]>>,
}

impl SubspaceMatrices {
    pub fn dim(&self) -> usize {
        self.params.len()
    }

    fn matrix(rows: &[Vec<Complex64>]) -> DMatrix<Complex64> {
        let n = rows.len();
        DMatrix::from_fn(n, n, |i, j| rows[i][j])
    }

    pub fn s_matrix(&self) -> DMatrix<Complex64> {
        Self::matrix(&self.s)
    }

    pub fn h_matrix(&self) -> DMatrix<Complex64> {
        Self::matrix(&self.h)
    }
}

/// Fills the upper triangle by measurement and mirrors it. Entry `(i, j)` uses
/// its own RNG streams derived from `seed`.
pub fn build_subspace(
    params: &[AnsatzParams],
    h: &PauliHamiltonian,
    psi: &StateVector,
    method: OverlapMethod,
    est: Estimation,
    seed: u64,
) -> Result<SubspaceMatrices, VarsubError> {
    let n = params.len();
    if n == 0 {
        return Err(VarsubError::Empty);
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut s = vec![vec![zero; n]; n];
    let mut hm = vec![vec![zero; n]; n];
    let mut s_err = vec![vec![[0.0; 2]; n]; n];
    let mut h_err = vec![vec![[0.0; 2]; n]; n];
    for i in 0..n {
        for j in i..n {
            let key = |which: u64| [Purpose::Overlap as u64, i as u64, j as u64, which];
            let se = estimate_overlap(method, &params[i], &params[j], psi, est, &mut rng::stream(seed, &key(0)))?;
            let he =
                estimate_matrix_element(method, &params[i], &params[j], h, psi, est, &mut rng::stream(seed, &key(1)))?;
            let (sv, hv) = if i == j { (Complex64::new(se.value.re, 0.0), Complex64::new(he.value.re, 0.0)) } else { (se.value, he.value) };
            s[i][j] = sv;
            s[j][i] = sv.conj();
            hm[i][j] = hv;
            hm[j][i] = hv.conj();
            s_err[i][j] = se.std_err;
            s_err[j][i] = se.std_err;
            h_err[i][j] = he.std_err;
            h_err[j][i] = he.std_err;
        }
    }
    Ok(SubspaceMatrices { method, params: params.to_vec(), s, h: hm, s_err, h_err })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneralizedEigen {
    /// Ascending.
    pub energies: Vec<f64>,
    /// Eigenvalues of `S`, descending.
    pub overlap_spectrum: Vec<f64>,
    /// Number of `S` eigenvectors kept.
    pub rank: usize,
}

pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 1e-8;

/// Solves `H c = E S c` on the span of `S` eigenvectors whose eigenvalue
/// exceeds `threshold` times the largest.
pub fn solve_generalized_eig(
    s: &DMatrix<Complex64>,
    h: &DMatrix<Complex64>,
    threshold: f64,
) -> Result<GeneralizedEigen, VarsubError> {
    if s.shape() != h.shape() || s.nrows() != s.ncols() {
        return Err(VarsubError::DimensionMismatch { s: s.nrows(), h: h.nrows() });
    }
    if s.nrows() == 0 {
        return Err(VarsubError::Empty);
    }
    let hermitian = |m: &DMatrix<Complex64>| (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let se = SymmetricEigen::new(hermitian(s));
    let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
    let spectrum: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let top = spectrum[0];
    if !(top > 0.0) {
        return Err(VarsubError::SingularOverlap { threshold });
    }
    let kept: Vec<usize> = order.iter().copied().filter(|&i| se.eigenvalues[i] > threshold * top).collect();
    let r = kept.len();
    if r == 0 {
        return Err(VarsubError::SingularOverlap { threshold });
    }
    let x = DMatrix::from_fn(s.nrows(), r, |row, col| {
        let i = kept[col];
        se.eigenvectors[(row, i)] / se.eigenvalues[i].sqrt()
    });
    let reduced = x.adjoint() * hermitian(h) * &x;
    let he = SymmetricEigen::new(hermitian(&reduced));
    let mut energies: Vec<f64> = he.eigenvalues.iter().copied().collect();
    energies.sort_by(f64::total_cmp);
    Ok(GeneralizedEigen { energies, overlap_spectrum: spectrum, rank: r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::unitary_equiv_up_to_phase;
    use crate::statevec::{circuit_to_unitary, UnitaryMatrix};
    use rand::Rng;

    fn expm_i(m: &DMatrix<Complex64>) -> UnitaryMatrix {
        // exp(i M) for Hermitian M
        let e = SymmetricEigen::new(m.clone());
        let d = DMatrix::from_diagonal(&e.eigenvalues.map(|v| Complex64::from_polar(1.0, v)));
        UnitaryMatrix::new(&e.eigenvectors * d * e.eigenvectors.adjoint()).unwrap()
    }

    fn reference_n(p: &AnsatzParams) -> UnitaryMatrix {
        let ps = |s: &str| s.parse::<PauliString>().unwrap().to_matrix().unwrap();
        let c = |v: f64| Complex64::new(v, 0.0);
        let inner = expm_i(&(ps("XX") * c(p.alpha) + ps("YY") * c(p.beta) + ps("ZZ") * c(p.gamma)));
        let outer = expm_i(&((ps("XI") + ps("IX")) * c(p.delta)));
        outer.compose(&inner).unwrap()
    }

    fn random_params<R: Rng>(r: &mut R) -> AnsatzParams {
        AnsatzParams::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-2.0..2.0))
    }

    #[test]
    fn compiled_ansatz_matches_exponential() {
        let mut r = rng::stream(11, &[]);
        for _ in 0..20 {
            let p = random_params(&mut r);
            let u = circuit_to_unitary(&build_n_circuit(&p).unwrap()).unwrap();
            assert!(unitary_equiv_up_to_phase(&u, &reference_n(&p), 1e-10).unwrap());
        }
    }

    #[test]
    fn network_modes() {
        let mut r = rng::stream(12, &[]);
        let p = random_params(&mut r);
        let q = random_params(&mut r);
        let net = build_network(&p, &p.delta_to(&q)).unwrap();
        let lift = |u: UnitaryMatrix| {
            let id = DMatrix::<Complex64>::identity(2, 2);
            UnitaryMatrix::new(id.kronecker(u.matrix())).unwrap()
        };
        let off = circuit_to_unitary(&net.realize(NetworkMode::Off)).unwrap();
        let on = circuit_to_unitary(&net.realize(NetworkMode::On)).unwrap();
        assert!(unitary_equiv_up_to_phase(&off, &lift(reference_n(&p)), 1e-10).unwrap());
        assert!(unitary_equiv_up_to_phase(&on, &lift(reference_n(&q)), 1e-10).unwrap());
    }

    #[test]
    fn both_methods_match_oracle() {
        let mut r = rng::stream(13, &[]);
        let psi = StateVector::product("0+").unwrap();
        let h = PauliHamiltonian::heisenberg(0.7, -0.4, 1.1);
        for _ in 0..10 {
            let p = random_params(&mut r);
            let q = random_params(&mut r);
            for method in [OverlapMethod::Network, OverlapMethod::HadamardTest] {
                let est = estimate_overlap(method, &p, &q, &psi, Estimation::Exact, &mut r).unwrap();
                let want = exact_element(&p, &q, None, &psi).unwrap();
                assert!((est.value - want).norm() < 1e-10, "{method}");
                let est = estimate_matrix_element(method, &p, &q, &h, &psi, Estimation::Exact, &mut r).unwrap();
                let mut want = Complex64::new(0.0, 0.0);
                for (c, s) in h.terms() {
                    want += exact_element(&p, &q, Some(s), &psi).unwrap() * c;
                }
                assert!((est.value - want).norm() < 1e-10, "{method}");
            }
        }
    }

    #[test]
    fn sampled_estimates_are_unbiased_within_error() {
        let p = AnsatzParams::new(0.3, -0.2, 0.5, 0.1);
        let q = AnsatzParams::new(-0.1, 0.4, 0.2, -0.3);
        let psi = StateVector::product("01").unwrap();
        let want = exact_element(&p, &q, None, &psi).unwrap();
        let mut r = rng::stream(14, &[]);
        let est = estimate_overlap(OverlapMethod::Network, &p, &q, &psi, Estimation::Sampled { shots: 200_000 }, &mut r).unwrap();
        assert!((est.value.re - want.re).abs() < 5.0 * est.std_err[0]);
        assert!((est.value.im - want.im).abs() < 5.0 * est.std_err[1]);
        assert!(matches!(
            estimate_overlap(OverlapMethod::Network, &p, &q, &psi, Estimation::Sampled { shots: 0 }, &mut r),
            Err(VarsubError::NoShots)
        ));
    }

    #[test]
    fn heisenberg_ground_state_from_two_points() {
        let h = PauliHamiltonian::heisenberg(1.0, 1.0, 1.0);
        let psi = StateVector::product("01").unwrap();
        let params = [AnsatzParams::default(), AnsatzParams::new(0.3, 0.3, 0.0, 0.0)];
        for method in [OverlapMethod::Network, OverlapMethod::HadamardTest] {
            let m = build_subspace(&params, &h, &psi, method, Estimation::Exact, 1).unwrap();
            let sol = solve_generalized_eig(&m.s_matrix(), &m.h_matrix(), DEFAULT_OVERLAP_THRESHOLD).unwrap();
            assert_eq!(sol.rank, 2);
            assert!((sol.energies[0] + 3.0).abs() < 1e-9, "{:?}", sol.energies);
        }
    }

    #[test]
    fn singular_overlap_is_projected() {
        let h = PauliHamiltonian::heisenberg(1.0, 1.0, 1.0);
        let psi = StateVector::product("01").unwrap();
        let p = AnsatzParams::new(0.2, 0.1, 0.0, 0.0);
        let m = build_subspace(&[p, p], &h, &psi, OverlapMethod::Network, Estimation::Exact, 1).unwrap();
        let sol = solve_generalized_eig(&m.s_matrix(), &m.h_matrix(), DEFAULT_OVERLAP_THRESHOLD).unwrap();
        assert_eq!(sol.rank, 1);
        let zero = DMatrix::<Complex64>::zeros(2, 2);
        assert!(matches!(solve_generalized_eig(&zero, &zero, 1e-8), Err(VarsubError::SingularOverlap { .. })));
        let three = DMatrix::<Complex64>::identity(3, 3);
        assert!(matches!(solve_generalized_eig(&m.s_matrix(), &three, 1e-8), Err(VarsubError::DimensionMismatch { .. })));
    }
}
