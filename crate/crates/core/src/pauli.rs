//! Pauli-string Hamiltonians, dense diagonalization, reversal gates and
//! evolution circuits.
//!
//! Hamiltonian text format: one term per line, `coeff letters`, e.g.
//!
//! ```text
//! # H_obj
//! 2.5 XZ
//! 1.5 ZX
//! ```

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Gate, GateOp};
use crate::statevec::{SimError, StateVector, UnitaryMatrix, MAX_DENSE_QUBITS};

/// Eigenvalues closer than this are one level.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PauliError {
    #[error("unknown Pauli letter {0:?}")]
    BadLetter(char),
    #[error("Pauli string of length {got} in a {expected}-qubit Hamiltonian")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite coefficient for term {0}")]
    NonFinite(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("Hamiltonian has no terms")]
    Empty,
    #[error("{0} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}")]
    TooManyQubits(usize),
    #[error("no reversal gate up to weight {max_weight} anticommutes with: {uncovered:?}")]
    NoPartition { max_weight: usize, uncovered: Vec<String> },
    #[error("Hamiltonian is not of the two-qubit c1 XZ + c2 ZX form: {0}")]
    NotHobj(String),
    #[error("Hamiltonian is not a nearest-neighbour XZ/ZX chain: {0}")]
    NotChain(String),
    #[error("chain length must be even, got {0}")]
    OddChain(usize),
    #[error("time step must be positive and finite, got {0}")]
    BadTimeStep(f64),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(ch: char) -> Result<Self, PauliError> {
        match ch.to_ascii_uppercase() {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            _ => Err(PauliError::BadLetter(ch)),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// (x, z) symplectic bits.
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn gate(self) -> Option<Gate> {
        match self {
            Pauli::I => None,
            Pauli::X => Some(Gate::X),
            Pauli::Y => Some(Gate::Y),
            Pauli::Z => Some(Gate::Z),
        }
    }
}

/// One Pauli letter per qubit, qubit 0 first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self(letters)
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![Pauli::I; n])
    }

    /// Product of the given single-qubit letters on an `n`-qubit register.
    pub fn from_sparse(n: usize, letters: &[(usize, Pauli)]) -> Self {
        let mut v = vec![Pauli::I; n];
        for &(q, p) in letters {
            v[q] = p;
        }
        Self(v)
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&p| p != Pauli::I).count()
    }

    /// Non-identity positions and letters.
    pub fn support(&self) -> Vec<(usize, Pauli)> {
        self.0.iter().copied().enumerate().filter(|(_, p)| *p != Pauli::I).collect()
    }

    fn masks(&self) -> (u64, u64) {
        self.0.iter().enumerate().fold((0, 0), |(x, z), (q, p)| {
            let (bx, bz) = p.bits();
            (x | (bx as u64) << q, z | (bz as u64) << q)
        })
    }

    /// True iff `self · other = -other · self`.
    pub fn anticommutes(&self, other: &PauliString) -> Result<bool, PauliError> {
        if self.len() != other.len() {
            return Err(PauliError::LengthMismatch { expected: self.len(), got: other.len() });
        }
        let (x1, z1) = self.masks();
        let (x2, z2) = other.masks();
        Ok(anticommute_masks(x1, z1, x2, z2))
    }

    /// `P|index> = phase |image>`, qubit 0 most significant.
    fn action(&self, index: usize) -> (Complex64, usize) {
        let n = self.0.len();
        let mut phase = Complex64::new(1.0, 0.0);
        let mut image = index;
        for (q, p) in self.0.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            let set = index & bit != 0;
            match p {
                Pauli::I => {}
                Pauli::X => image ^= bit,
                Pauli::Y => {
                    image ^= bit;
                    phase *= if set { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 1.0) };
                }
                Pauli::Z => {
                    if set {
                        phase = -phase;
                    }
                }
            }
        }
        (phase, image)
    }

    pub fn to_matrix(&self) -> Result<DMatrix<Complex64>, PauliError> {
        let n = self.len();
        if n > MAX_DENSE_QUBITS {
            return Err(PauliError::TooManyQubits(n));
        }
        let d = 1usize << n;
        let mut m = DMatrix::zeros(d, d);
        for col in 0..d {
            let (ph, row) = self.action(col);
            m[(row, col)] = ph;
        }
        Ok(m)
    }

    /// Gates realising the string, with qubit `q` placed on `map[q]`.
    pub fn gate_ops(&self, map: &[usize]) -> Result<Vec<GateOp>, CircuitError> {
        self.support()
            .into_iter()
            .filter_map(|(q, p)| p.gate().map(|g| GateOp::new(g, [map[q]])))
            .collect()
    }
}

fn anticommute_masks(x1: u64, z1: u64, x2: u64, z2: u64) -> bool {
    ((x1 & z2) ^ (z1 & x2)).count_ones() % 2 == 1
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|p| write!(f, "{}", p.as_char()))
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim().chars().map(Pauli::from_char).collect::<Result<Vec<_>, _>>().map(PauliString)
    }
}

/// `Σ c_k P_k` with real coefficients. Duplicate strings are merged on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliHamiltonian {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliHamiltonian {
    pub fn new(n_qubits: usize, terms: Vec<(f64, PauliString)>) -> Result<Self, PauliError> {
        let mut merged: Vec<(f64, PauliString)> = Vec::with_capacity(terms.len());
        for (coef, s) in terms {
            if s.len() != n_qubits {
                return Err(PauliError::LengthMismatch { expected: n_qubits, got: s.len() });
            }
            if !coef.is_finite() {
                return Err(PauliError::NonFinite(s.to_string()));
            }
            match merged.iter_mut().find(|(_, t)| *t == s) {
                Some(slot) => slot.0 += coef,
                None => merged.push((coef, s)),
            }
        }
        Ok(Self { n_qubits, terms: merged })
    }

    /// A Hamiltonian with no terms.
    pub fn zero(n_qubits: usize) -> Self {
        Self { n_qubits, terms: Vec::new() }
    }

    /// `c1 X0 Z1 + c2 Z0 X1`; eigenvalues `±(c1 ± c2)`.
    pub fn h_obj(c1: f64, c2: f64) -> Self {
        Self {
            n_qubits: 2,
            terms: vec![
                (c1, PauliString(vec![Pauli::X, Pauli::Z])),
                (c2, PauliString(vec![Pauli::Z, Pauli::X])),
            ],
        }
    }

    /// `a XX + b YY + c ZZ` on two qubits.
    pub fn heisenberg(a: f64, b: f64, c: f64) -> Self {
        Self {
            n_qubits: 2,
            terms: vec![
                (a, PauliString(vec![Pauli::X, Pauli::X])),
                (b, PauliString(vec![Pauli::Y, Pauli::Y])),
                (c, PauliString(vec![Pauli::Z, Pauli::Z])),
            ],
        }
    }

    /// Periodic chain `Σ_n c1 X_n Z_{n+1} + c2 Z_n X_{n+1}` on an even number of qubits.
    pub fn chain(n: usize, c1: f64, c2: f64) -> Result<Self, PauliError> {
        if n < 2 || n % 2 == 1 {
            return Err(PauliError::OddChain(n));
        }
        let mut terms = Vec::with_capacity(2 * n);
        for a in 0..n {
            let b = (a + 1) % n;
            terms.push((c1, PauliString::from_sparse(n, &[(a, Pauli::X), (b, Pauli::Z)])));
            terms.push((c2, PauliString::from_sparse(n, &[(a, Pauli::Z), (b, Pauli::X)])));
        }
        Self::new(n, terms)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    /// `Σ |c_k|`, an upper bound on the spectral radius.
    pub fn coefficient_l1(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    pub fn coefficient_of(&self, s: &PauliString) -> f64 {
        self.terms.iter().filter(|(_, t)| t == s).map(|(c, _)| *c).sum()
    }

    pub fn to_matrix(&self) -> Result<DMatrix<Complex64>, PauliError> {
        let n = self.n_qubits;
        if n > MAX_DENSE_QUBITS {
            return Err(PauliError::TooManyQubits(n));
        }
        let d = 1usize << n;
        let mut m = DMatrix::zeros(d, d);
        for (coef, s) in &self.terms {
            for col in 0..d {
                let (ph, row) = s.action(col);
                m[(row, col)] += ph * *coef;
            }
        }
        Ok(m)
    }

    fn eigen(&self) -> Result<(Vec<f64>, DMatrix<Complex64>), PauliError> {
        let eig = SymmetricEigen::new(self.to_matrix()?);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
        Ok((values, vectors))
    }

    /// Dense `exp(-iHt)` from the eigendecomposition.
    pub fn evolution(&self, t: f64) -> Result<UnitaryMatrix, PauliError> {
        let (values, v) = self.eigen()?;
        let phases = DVector::from_iterator(values.len(), values.iter().map(|e| Complex64::from_polar(1.0, -e * t)));
        let m = &v * DMatrix::from_diagonal(&phases) * v.adjoint();
        Ok(UnitaryMatrix::new(m)?)
    }

    pub fn to_text(&self) -> String {
        self.terms.iter().map(|(c, s)| format!("{c:?} {s}\n")).collect()
    }
}

impl FromStr for PauliHamiltonian {
    type Err = PauliError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut terms = Vec::new();
        let mut n_qubits = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let err = |msg: String| PauliError::Parse { line, msg };
            let mut toks = body.split_whitespace();
            let (Some(c), Some(letters), None) = (toks.next(), toks.next(), toks.next()) else {
                return Err(err(format!("expected `coeff letters`, got {body:?}")));
            };
            let coef: f64 = c.parse().map_err(|_| err(format!("bad coefficient {c:?}")))?;
            if !coef.is_finite() {
                return Err(err(format!("non-finite coefficient {c:?}")));
            }
            let s: PauliString = letters.parse().map_err(|e: PauliError| err(e.to_string()))?;
            match n_qubits {
                None => n_qubits = Some(s.len()),
                Some(n) if n != s.len() => {
                    return Err(err(format!("term has {} letters, earlier terms have {n}", s.len())))
                }
                _ => {}
            }
            terms.push((coef, s));
        }
        let n = n_qubits.ok_or(PauliError::Empty)?;
        Self::new(n, terms)
    }
}

/// One distinct eigenvalue with the summed overlap of its eigenspace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Level {
    pub energy: f64,
    pub overlap: f64,
    pub degeneracy: usize,
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    /// Ascending, with multiplicity.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<StateVector>,
    /// `|<E_k|ψ_I>|²` per eigenvector.
    pub overlaps: Vec<f64>,
    /// Degenerate eigenvalues grouped within [`DEGENERACY_TOL`].
    pub levels: Vec<Level>,
}

pub fn diagonalize(h: &PauliHamiltonian, psi_i: &StateVector) -> Result<SpectrumResult, PauliError> {
    if psi_i.n_qubits() != h.n_qubits() {
        return Err(SimError::DimensionMismatch(h.n_qubits(), psi_i.n_qubits()).into());
    }
    let (values, vecs) = h.eigen()?;
    let mut eigenvectors = Vec::with_capacity(values.len());
    let mut overlaps = Vec::with_capacity(values.len());
    for col in vecs.column_iter() {
        let v = StateVector::from_amplitudes(col.iter().copied().collect())?;
        overlaps.push(v.inner_product(psi_i)?.norm_sqr());
        eigenvectors.push(v);
    }
    let mut levels: Vec<Level> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    let mut sum_e = 0.0;
    for (&e, &p) in values.iter().zip(&overlaps) {
        match levels.last_mut() {
            Some(l) if e - last <= DEGENERACY_TOL => {
                l.degeneracy += 1;
                l.overlap += p;
                sum_e += e;
                l.energy = sum_e / l.degeneracy as f64;
            }
            _ => {
                levels.push(Level { energy: e, overlap: p, degeneracy: 1 });
                sum_e = e;
            }
        }
        last = e;
    }
    Ok(SpectrumResult { eigenvalues: values, eigenvectors, overlaps, levels })
}

/// A reversal gate and the terms it flips.
#[derive(Clone, Debug, PartialEq)]
pub struct ReversalPart {
    pub reversal: PauliString,
    pub hamiltonian: PauliHamiltonian,
    /// Indices into the parent Hamiltonian's terms.
    pub term_indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReversalPartition {
    pub parts: Vec<ReversalPart>,
}

impl ReversalPartition {
    /// Part holding term `k`.
    pub fn part_of(&self, k: usize) -> Option<usize> {
        self.parts.iter().position(|p| p.term_indices.contains(&k))
    }
}

/// Letter order tried on each qubit.
const SEARCH_LETTERS: [Pauli; 3] = [Pauli::Z, Pauli::X, Pauli::Y];

fn for_each_candidate(n: usize, max_weight: usize, f: &mut impl FnMut(u64, u64) -> bool) {
    fn combos(n: usize, w: usize, start: usize, acc: &mut Vec<usize>, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if acc.len() == w {
            return f(acc);
        }
        for q in start..n {
            acc.push(q);
            let stop = combos(n, w, q + 1, acc, f);
            acc.pop();
            if stop {
                return true;
            }
        }
        false
    }
    for w in 1..=max_weight.min(n) {
        let stop = combos(n, w, 0, &mut Vec::with_capacity(w), &mut |qs| {
            for code in 0..3usize.pow(w as u32) {
                let (mut x, mut z) = (0u64, 0u64);
                let mut rest = code;
                // most significant digit on the first qubit keeps the order lexicographic
                for &q in qs.iter().rev() {
                    let (bx, bz) = SEARCH_LETTERS[rest % 3].bits();
                    rest /= 3;
                    x |= (bx as u64) << q;
                    z |= (bz as u64) << q;
                }
                if f(x, z) {
                    return true;
                }
            }
            false
        });
        if stop {
            return;
        }
    }
}

fn string_from_masks(n: usize, x: u64, z: u64) -> PauliString {
    PauliString(
        (0..n)
            .map(|q| match (x >> q & 1 == 1, z >> q & 1 == 1) {
                (false, false) => Pauli::I,
                (true, false) => Pauli::X,
                (true, true) => Pauli::Y,
                (false, true) => Pauli::Z,
            })
            .collect(),
    )
}

/// Greedy cover of the terms by single-qubit Pauli products.
///
/// Candidates are visited by weight, then qubit combination, then letters
/// in the order Z, X, Y. Each round keeps the first candidate that flips the
/// most uncovered terms.
pub fn find_reversal_partition(h: &PauliHamiltonian, max_weight: usize) -> Result<ReversalPartition, PauliError> {
    let n = h.n_qubits();
    if h.terms().is_empty() {
        return Err(PauliError::Empty);
    }
    if n > 64 {
        return Err(PauliError::TooManyQubits(n));
    }
    let masks: Vec<(u64, u64)> = h.terms().iter().map(|(_, s)| s.masks()).collect();
    let mut uncovered: Vec<usize> = (0..masks.len()).collect();
    let mut parts = Vec::new();
    while !uncovered.is_empty() {
        let mut best: Option<(u64, u64, usize)> = None;
        for_each_candidate(n, max_weight, &mut |x, z| {
            let flips = uncovered.iter().filter(|&&k| anticommute_masks(x, z, masks[k].0, masks[k].1)).count();
            if flips > best.map_or(0, |b| b.2) {
                best = Some((x, z, flips));
            }
            flips == uncovered.len()
        });
        let Some((x, z, _)) = best else {
            return Err(PauliError::NoPartition {
                max_weight,
                uncovered: uncovered.iter().map(|&k| h.terms()[k].1.to_string()).collect(),
            });
        };
        let (taken, rest): (Vec<usize>, Vec<usize>) =
            uncovered.iter().partition(|&&k| anticommute_masks(x, z, masks[k].0, masks[k].1));
        let sub = PauliHamiltonian { n_qubits: n, terms: taken.iter().map(|&k| h.terms()[k].clone()).collect() };
        parts.push(ReversalPart { reversal: string_from_masks(n, x, z), hamiltonian: sub, term_indices: taken });
        uncovered = rest;
    }
    Ok(ReversalPartition { parts })
}

/// `(c1, c2)` of a Hamiltonian of the form `c1 XZ + c2 ZX`.
pub fn h_obj_coefficients(h: &PauliHamiltonian) -> Result<(f64, f64), PauliError> {
    if h.n_qubits() != 2 {
        return Err(PauliError::NotHobj(format!("{} qubits", h.n_qubits())));
    }
    let xz = PauliString(vec![Pauli::X, Pauli::Z]);
    let zx = PauliString(vec![Pauli::Z, Pauli::X]);
    if let Some((_, s)) = h.terms().iter().find(|(c, s)| *c != 0.0 && *s != xz && *s != zx) {
        return Err(PauliError::NotHobj(format!("unexpected term {s}")));
    }
    Ok((h.coefficient_of(&xz), h.coefficient_of(&zx)))
}

/// Two-CNOT circuit for `exp(-iτ(c_xz X_a Z_b + c_zx Z_a X_b))` on `(a, b)`,
/// appended to `circ`.
pub fn push_bond_exponential(
    circ: &mut Circuit,
    a: usize,
    b: usize,
    c_xz: f64,
    c_zx: f64,
    tau: f64,
) -> Result<(), CircuitError> {
    circ.h(b)?.cnot(a, b)?.rx(a, 2.0 * c_xz * tau)?.rz(b, 2.0 * c_zx * tau)?.cnot(a, b)?.h(b)?;
    Ok(())
}

/// The two-qubit `exp(-i H_obj t)` circuit: `H, CNOT, Rx(2c1t) ⊗ Rz(2c2t), CNOT, H`.
pub fn exact_evolution_circuit(h: &PauliHamiltonian, t: f64) -> Result<Circuit, PauliError> {
    let (c1, c2) = h_obj_coefficients(h)?;
    let mut circ = Circuit::new(2)?;
    push_bond_exponential(&mut circ, 0, 1, c1, c2, t)?;
    Ok(circ)
}

/// Nearest-neighbour bond `(a, b)` with `b = a + 1 mod N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub c_xz: f64,
    pub c_zx: f64,
    /// Terms of the source Hamiltonian carried by this bond.
    pub terms: [Option<usize>; 2],
}

/// Splits a chain Hamiltonian into its bonds, ordered by `a`.
pub fn chain_bonds(h: &PauliHamiltonian) -> Result<Vec<Bond>, PauliError> {
    let n = h.n_qubits();
    if n < 2 || n % 2 == 1 {
        return Err(PauliError::OddChain(n));
    }
    let mut bonds: Vec<Option<Bond>> = vec![None; n];
    for (k, (coef, s)) in h.terms().iter().enumerate() {
        let sup = s.support();
        let bad = || PauliError::NotChain(format!("term {s}"));
        if sup.len() != 2 {
            return Err(bad());
        }
        let (p, q) = (sup[0].0, sup[1].0);
        let (a, b) = if q == p + 1 {
            (p, q)
        } else if p == 0 && q == n - 1 {
            (q, p)
        } else {
            return Err(bad());
        };
        let la = s.letters()[a];
        let lb = s.letters()[b];
        let bond = bonds[a].get_or_insert(Bond { a, b, c_xz: 0.0, c_zx: 0.0, terms: [None, None] });
        match (la, lb) {
            (Pauli::X, Pauli::Z) => {
                bond.c_xz += coef;
                bond.terms[0] = Some(k);
            }
            (Pauli::Z, Pauli::X) => {
                bond.c_zx += coef;
                bond.terms[1] = Some(k);
            }
            _ => return Err(bad()),
        }
    }
    Ok(bonds.into_iter().flatten().collect())
}

/// Step count for total time `t` at nominal step `dt`: nearest integer when
/// `|t|/dt` is within 1e-9 of one, otherwise rounded up.
pub fn trotter_steps(t: f64, dt: f64) -> Result<usize, PauliError> {
    if !(dt > 0.0 && dt.is_finite()) || !t.is_finite() {
        return Err(PauliError::BadTimeStep(dt));
    }
    let r = t.abs() / dt;
    Ok(if (r - r.round()).abs() < 1e-9 { r.round() } else { r.ceil() } as usize)
}

/// One bond exponential in a Trotter schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BondStep {
    pub bond: Bond,
    pub tau: f64,
}

/// Symmetric second-order schedule for `exp(-iHt)` over even (`a` even) and
/// odd bonds: `E(dt/2) O(dt) E(dt) ... O(dt) E(dt/2)`, adjacent even halves
/// merged, so `K` steps use `N K + N/2` exponentials. `dt` is rescaled to `t/K`.
pub fn trotter2_schedule(h: &PauliHamiltonian, t: f64, dt: f64) -> Result<Vec<BondStep>, PauliError> {
    let k = trotter_steps(t, dt)?;
    let bonds = chain_bonds(h)?;
    if k == 0 {
        return Ok(Vec::new());
    }
    let step = t / k as f64;
    let (even, odd): (Vec<Bond>, Vec<Bond>) = bonds.into_iter().partition(|b| b.a % 2 == 0);
    let layer = |group: &[Bond], tau: f64| group.iter().map(move |&bond| BondStep { bond, tau }).collect::<Vec<_>>();
    let mut out = layer(&even, step / 2.0);
    for i in 0..k {
        out.extend(layer(&odd, step));
        out.extend(layer(&even, if i + 1 == k { step / 2.0 } else { step }));
    }
    Ok(out)
}

pub fn trotter2_circuit(h: &PauliHamiltonian, t: f64, dt: f64) -> Result<Circuit, PauliError> {
    let mut circ = Circuit::new(h.n_qubits())?;
    for s in trotter2_schedule(h, t, dt)? {
        push_bond_exponential(&mut circ, s.bond.a, s.bond.b, s.bond.c_xz, s.bond.c_zx, s.tau)?;
    }
    Ok(circ)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{relative_phase, unitary_equiv_up_to_phase};
    use crate::statevec::circuit_to_unitary;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn h_obj_spectrum_and_overlaps() {
        let h = PauliHamiltonian::h_obj(2.5, 1.5);
        let spec = diagonalize(&h, &StateVector::zero(2).unwrap()).unwrap();
        let want = [-4.0, -1.0, 1.0, 4.0];
        for (l, w) in spec.levels.iter().zip(want) {
            assert!((l.energy - w).abs() < 1e-12);
            assert!((l.overlap - 0.25).abs() < 1e-12);
        }
        let second: f64 = spec.levels.iter().map(|l| l.overlap * l.energy * l.energy).sum();
        assert!((second - 8.5).abs() < 1e-10);
    }

    #[test]
    fn heisenberg_levels_group_degeneracy() {
        let h = PauliHamiltonian::heisenberg(1.0, 1.0, 1.0);
        let spec = diagonalize(&h, &StateVector::product("01").unwrap()).unwrap();
        assert_eq!(spec.eigenvalues.len(), 4);
        assert_eq!(spec.levels.len(), 2);
        assert!((spec.levels[0].energy + 3.0).abs() < 1e-12);
        assert_eq!(spec.levels[1].degeneracy, 3);
        assert!((spec.levels.iter().map(|l| l.overlap).sum::<f64>() - 1.0).abs() < 1e-10);
        assert!((spec.levels[0].overlap - 0.5).abs() < 1e-12);
    }

    #[test]
    fn eigenvector_input_has_unit_overlap() {
        let h = PauliHamiltonian::h_obj(2.5, 1.5);
        let spec = diagonalize(&h, &StateVector::zero(2).unwrap()).unwrap();
        let again = diagonalize(&h, &spec.eigenvectors[2]).unwrap();
        assert!((again.levels[2].overlap - 1.0).abs() < 1e-10);
        let hm = h.to_matrix().unwrap();
        for (v, e) in spec.eigenvectors.iter().zip(&spec.eigenvalues) {
            let x = nalgebra::DVector::from_column_slice(v.amplitudes());
            assert!((&hm * &x - &x * Complex64::new(*e, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_hamiltonian_is_zero_matrix() {
        let h = PauliHamiltonian::zero(2);
        assert!(h.to_matrix().unwrap().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn merges_duplicate_terms() {
        let h = PauliHamiltonian::new(2, vec![(1.0, ps("XZ")), (0.5, ps("XZ")), (2.0, ps("ZZ"))]).unwrap();
        assert_eq!(h.terms().len(), 2);
        assert_eq!(h.terms()[0].0, 1.5);
    }

    #[test]
    fn anticommutation_examples() {
        assert!(ps("YI").anticommutes(&ps("XZ")).unwrap());
        assert!(ps("YI").anticommutes(&ps("ZX")).unwrap());
        assert!(!ps("YI").anticommutes(&ps("YY")).unwrap());
        assert!(!ps("XZ").anticommutes(&ps("ZX")).unwrap());
        assert!(ps("Y").anticommutes(&ps("YY")).is_err());
    }

    #[test]
    fn reversal_search_examples() {
        let p = find_reversal_partition(&PauliHamiltonian::h_obj(2.5, 1.5), 2).unwrap();
        assert_eq!(p.parts.len(), 1);
        assert_eq!(p.parts[0].reversal, ps("YI"));

        let x1 = PauliHamiltonian::new(1, vec![(1.0, ps("X"))]).unwrap();
        assert_eq!(find_reversal_partition(&x1, 1).unwrap().parts[0].reversal, ps("Z"));

        let chain = PauliHamiltonian::chain(6, 1.0, 0.7).unwrap();
        let p = find_reversal_partition(&chain, 3).unwrap();
        assert_eq!(p.parts.len(), 1);
        assert_eq!(p.parts[0].reversal, ps("YIYIYI"));

        // weight 1 cannot flip the whole chain, so the greedy cover splits
        let p = find_reversal_partition(&chain, 1).unwrap();
        assert!(p.parts.len() > 1);
        let covered: usize = p.parts.iter().map(|x| x.term_indices.len()).sum();
        assert_eq!(covered, chain.terms().len());
    }

    #[test]
    fn reversal_flips_sub_hamiltonian() {
        for h in [PauliHamiltonian::h_obj(2.5, 1.5), PauliHamiltonian::chain(4, 1.0, 0.3).unwrap()] {
            for part in find_reversal_partition(&h, 4).unwrap().parts {
                let r = part.reversal.to_matrix().unwrap();
                let hr = part.hamiltonian.to_matrix().unwrap();
                assert!((&r * &hr * r.adjoint() + &hr).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn no_partition_reports_terms() {
        let h = PauliHamiltonian::new(2, vec![(1.0, ps("XX"))]).unwrap();
        assert!(find_reversal_partition(&h, 1).is_ok());
        let err = find_reversal_partition(&PauliHamiltonian::new(1, vec![(1.0, ps("I"))]).unwrap(), 1).unwrap_err();
        assert!(matches!(err, PauliError::NoPartition { .. }));
    }

    #[test]
    fn fig7_circuit_matches_dense_exponential() {
        let h = PauliHamiltonian::h_obj(2.5, 1.5);
        for t in [0.0, 0.37, -1.9, 6.2] {
            let u = circuit_to_unitary(&exact_evolution_circuit(&h, t).unwrap()).unwrap();
            let (_, resid) = relative_phase(&u, &h.evolution(t).unwrap()).unwrap();
            assert!(resid < 1e-9, "t={t} resid={resid}");
        }
        let fwd = circuit_to_unitary(&exact_evolution_circuit(&h, 0.8).unwrap()).unwrap();
        let back = circuit_to_unitary(&exact_evolution_circuit(&h, -0.8).unwrap()).unwrap();
        assert!(unitary_equiv_up_to_phase(&back, &fwd.adjoint(), 1e-12).unwrap());
        assert!(exact_evolution_circuit(&PauliHamiltonian::heisenberg(1.0, 1.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn trotter_counts_and_reversibility() {
        let h = PauliHamiltonian::chain(4, 1.0, 0.6).unwrap();
        assert_eq!(trotter2_schedule(&h, 6.0, 0.2).unwrap().len(), 4 * 30 + 2);
        let h6 = PauliHamiltonian::chain(6, 1.0, 0.6).unwrap();
        assert_eq!(trotter2_schedule(&h6, 6.0, 0.2).unwrap().len(), 6 * 30 + 3);
        let f = circuit_to_unitary(&trotter2_circuit(&h, 0.3, 0.3).unwrap()).unwrap();
        let b = circuit_to_unitary(&trotter2_circuit(&h, -0.3, 0.3).unwrap()).unwrap();
        let prod = b.compose(&f).unwrap();
        assert!(unitary_equiv_up_to_phase(&prod, &UnitaryMatrix::identity(4), 1e-10).unwrap());
        assert!(trotter2_circuit(&h, 1.0, 0.0).is_err());
        assert_eq!(trotter_steps(1.0, 0.3).unwrap(), 4);
        assert_eq!(trotter_steps(6.0, 0.2).unwrap(), 30);
    }

    #[test]
    fn trotter_local_error_is_third_order() {
        let h = PauliHamiltonian::chain(4, 1.0, 0.6).unwrap();
        let err = |dt: f64| {
            let u = circuit_to_unitary(&trotter2_circuit(&h, dt, dt).unwrap()).unwrap();
            relative_phase(&u, &h.evolution(dt).unwrap()).unwrap().1
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 8.0).abs() < 0.8, "ratio {ratio}");
    }

    #[test]
    fn text_format() {
        let h: PauliHamiltonian = "# obj\n2.5 XZ\n\n1.5 ZX # second\n".parse().unwrap();
        assert_eq!(h, PauliHamiltonian::h_obj(2.5, 1.5));
        assert_eq!(h.to_text().parse::<PauliHamiltonian>().unwrap(), h);
        assert!(matches!("".parse::<PauliHamiltonian>(), Err(PauliError::Empty)));
        assert!(matches!("1 XZ\n2 XZZ".parse::<PauliHamiltonian>(), Err(PauliError::Parse { line: 2, .. })));
        assert!(matches!("1 XQ".parse::<PauliHamiltonian>(), Err(PauliError::Parse { line: 1, .. })));
    }
}
