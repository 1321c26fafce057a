//! Circuit IR, controlled gate networks and a line-oriented text format.
//!
//! Text format (one op per line, `#` starts a comment):
//!
//! ```text
//! qubits 3
//! h 0
//! cx 2 1
//! rz 1 ctrl 0:1 param -0.5
//! unitary 1 2 matrix <re im pairs, row-major>
//! measure 0
//! ```
//!
//! A line is `kind targets... [ctrl q:p ...] [param x ...] [matrix x ...]`.
//! For `cx` the first target is the control and the second the target;
//! extra `ctrl` entries turn it into a multi-controlled X.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::statevec::{SimError, UnitaryMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("{gate} takes {expected} target(s), got {got}")]
    Arity { gate: &'static str, expected: usize, got: usize },
    #[error("qubit {0} appears more than once in one op")]
    DuplicateQubit(usize),
    #[error("non-finite parameter in {0}")]
    NonFinite(&'static str),
    #[error("qubit {qubit} out of range for a {n_qubits}-qubit circuit")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("a circuit needs at least one qubit")]
    Empty,
    #[error("measurements cannot be controlled or inverted")]
    Measurement,
    #[error("ancilla {0} is used by a system operation")]
    AncillaCollision(usize),
    #[error("insertion index {index} beyond base length {len}")]
    InsertionOutOfRange { index: usize, len: usize },
    #[error("qubit map has {got} entries, circuit has {expected} qubits")]
    BadQubitMap { expected: usize, got: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Which control value actuates a gate: filled dot (`One`) or open dot (`Zero`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Zero,
    One,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Control {
    pub qubit: usize,
    pub polarity: Polarity,
}

impl Control {
    pub fn on_one(qubit: usize) -> Self {
        Self { qubit, polarity: Polarity::One }
    }

    pub fn on_zero(qubit: usize) -> Self {
        Self { qubit, polarity: Polarity::Zero }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    H,
    X,
    Y,
    Z,
    Rx(f64),
    Ry(f64),
    Rz(f64),
    U1(f64),
    U2(f64, f64),
    U3(f64, f64, f64),
    Phase(f64),
    /// Targets are `[control, target]`.
    Cnot,
    Rzz(f64),
    Unitary(Arc<UnitaryMatrix>),
    Measure,
}

pub(crate) enum Kernel<'a> {
    One([[Complex64; 2]; 2]),
    /// 2x2 block on `targets[1]`, actuated by `targets[0]`.
    Controlled1([[Complex64; 2]; 2]),
    Two([[Complex64; 4]; 4]),
    Dense(&'a UnitaryMatrix),
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cis(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, x)
}

pub(crate) fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> [[Complex64; 2]; 2] {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co, 0.0), -cis(lambda) * s], [cis(phi) * s, cis(phi + lambda) * co]]
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::H => "h",
            Gate::X => "x",
            Gate::Y => "y",
            Gate::Z => "z",
            Gate::Rx(_) => "rx",
            Gate::Ry(_) => "ry",
            Gate::Rz(_) => "rz",
            Gate::U1(_) => "u1",
            Gate::U2(..) => "u2",
            Gate::U3(..) => "u3",
            Gate::Phase(_) => "p",
            Gate::Cnot => "cx",
            Gate::Rzz(_) => "rzz",
            Gate::Unitary(_) => "unitary",
            Gate::Measure => "measure",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Gate::Cnot | Gate::Rzz(_) => 2,
            Gate::Unitary(u) => u.n_qubits(),
            _ => 1,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            Gate::Rx(a) | Gate::Ry(a) | Gate::Rz(a) | Gate::U1(a) | Gate::Phase(a) | Gate::Rzz(a) => {
                vec![a]
            }
            Gate::U2(a, b) => vec![a, b],
            Gate::U3(a, b, d) => vec![a, b, d],
            _ => vec![],
        }
    }

    fn from_parts(name: &str, p: &[f64]) -> Option<Gate> {
        let g = match (name, p) {
            ("h", []) => Gate::H,
            ("x", []) => Gate::X,
            ("y", []) => Gate::Y,
            ("z", []) => Gate::Z,
            ("rx", [a]) => Gate::Rx(*a),
            ("ry", [a]) => Gate::Ry(*a),
            ("rz", [a]) => Gate::Rz(*a),
            ("u1", [a]) => Gate::U1(*a),
            ("u2", [a, b]) => Gate::U2(*a, *b),
            ("u3", [a, b, d]) => Gate::U3(*a, *b, *d),
            ("p", [a]) => Gate::Phase(*a),
            ("cx", []) => Gate::Cnot,
            ("rzz", [a]) => Gate::Rzz(*a),
            ("measure", []) => Gate::Measure,
            _ => return None,
        };
        Some(g)
    }

    pub fn is_measure(&self) -> bool {
        matches!(self, Gate::Measure)
    }

    /// Inverse gate. Measurements have none.
    pub fn adjoint(&self) -> Result<Gate, CircuitError> {
        Ok(match *self {
            Gate::H | Gate::X | Gate::Y | Gate::Z | Gate::Cnot => self.clone(),
            Gate::Rx(a) => Gate::Rx(-a),
            Gate::Ry(a) => Gate::Ry(-a),
            Gate::Rz(a) => Gate::Rz(-a),
            Gate::U1(a) => Gate::U1(-a),
            Gate::Phase(a) => Gate::Phase(-a),
            Gate::Rzz(a) => Gate::Rzz(-a),
            Gate::U2(phi, lambda) => Gate::U3(-PI / 2.0, -lambda, -phi),
            Gate::U3(t, phi, lambda) => Gate::U3(-t, -lambda, -phi),
            Gate::Unitary(ref u) => Gate::Unitary(Arc::new(u.adjoint())),
            Gate::Measure => return Err(CircuitError::Measurement),
        })
    }

    /// 2x2 matrix of a single-qubit gate.
    pub fn matrix2(&self) -> Option<[[Complex64; 2]; 2]> {
        let r = FRAC_1_SQRT_2;
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        Some(match *self {
            Gate::H => [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]],
            Gate::X => [[z, one], [one, z]],
            Gate::Y => [[z, c(0.0, -1.0)], [c(0.0, 1.0), z]],
            Gate::Z => [[one, z], [z, -one]],
            Gate::Rx(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
            }
            Gate::Ry(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
            }
            Gate::Rz(t) => [[cis(-t / 2.0), z], [z, cis(t / 2.0)]],
            Gate::U1(l) | Gate::Phase(l) => [[one, z], [z, cis(l)]],
            Gate::U2(phi, lambda) => u3_matrix(PI / 2.0, phi, lambda),
            Gate::U3(t, phi, lambda) => u3_matrix(t, phi, lambda),
            Gate::Unitary(ref u) if u.n_qubits() == 1 => {
                let m = u.matrix();
                [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
            }
            _ => return None,
        })
    }

    pub(crate) fn kernel(&self) -> Option<Kernel<'_>> {
        match self {
            Gate::Measure => None,
            Gate::Cnot => Some(Kernel::Controlled1(Gate::X.matrix2()?)),
            Gate::Rzz(t) => {
                let z = c(0.0, 0.0);
                let (a, b) = (cis(-t / 2.0), cis(t / 2.0));
                Some(Kernel::Two([[a, z, z, z], [z, b, z, z], [z, z, b, z], [z, z, z, a]]))
            }
            Gate::Unitary(u) if u.n_qubits() > 1 => Some(Kernel::Dense(u)),
            g => g.matrix2().map(Kernel::One),
        }
    }

    /// Full matrix on the gate's own targets.
    pub fn matrix(&self) -> Option<UnitaryMatrix> {
        if let Gate::Unitary(u) = self {
            return Some((**u).clone());
        }
        let mut circ = Circuit::new(self.arity()).ok()?;
        let targets: Vec<usize> = (0..self.arity()).collect();
        circ.push(GateOp::new(self.clone(), targets).ok()?).ok()?;
        crate::statevec::circuit_to_unitary(&circ).ok()
    }
}

/// One gate application: a gate, the qubits it acts on, and optional controls.
#[derive(Clone, Debug, PartialEq)]
pub struct GateOp {
    gate: Gate,
    targets: Vec<usize>,
    controls: Vec<Control>,
}

impl GateOp {
    pub fn new(gate: Gate, targets: impl Into<Vec<usize>>) -> Result<Self, CircuitError> {
        let targets = targets.into();
        if targets.len() != gate.arity() {
            return Err(CircuitError::Arity {
                gate: gate.name(),
                expected: gate.arity(),
                got: targets.len(),
            });
        }
        if gate.params().iter().any(|p| !p.is_finite()) {
            return Err(CircuitError::NonFinite(gate.name()));
        }
        let op = Self { gate, targets, controls: Vec::new() };
        op.check_distinct()?;
        Ok(op)
    }

    pub fn with_control(mut self, control: Control) -> Result<Self, CircuitError> {
        if self.gate.is_measure() {
            return Err(CircuitError::Measurement);
        }
        self.controls.push(control);
        self.check_distinct()?;
        Ok(self)
    }

    pub fn with_controls(self, controls: &[Control]) -> Result<Self, CircuitError> {
        controls.iter().try_fold(self, |op, &c| op.with_control(c))
    }

    fn check_distinct(&self) -> Result<(), CircuitError> {
        let qs: Vec<usize> = self.qubits().collect();
        for (i, q) in qs.iter().enumerate() {
            if qs[..i].contains(q) {
                return Err(CircuitError::DuplicateQubit(*q));
            }
        }
        Ok(())
    }

    pub fn gate(&self) -> &Gate {
        &self.gate
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn controls(&self) -> &[Control] {
        &self.controls
    }

    /// Targets then controls.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets.iter().copied().chain(self.controls.iter().map(|c| c.qubit))
    }

    pub fn adjoint(&self) -> Result<Self, CircuitError> {
        Ok(Self { gate: self.gate.adjoint()?, ..self.clone() })
    }

    fn remapped(&self, map: &[usize]) -> Self {
        Self {
            gate: self.gate.clone(),
            targets: self.targets.iter().map(|&q| map[q]).collect(),
            controls: self
                .controls
                .iter()
                .map(|c| Control { qubit: map[c.qubit], polarity: c.polarity })
                .collect(),
        }
    }
}

/// An ordered gate program on `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self, CircuitError> {
        if n_qubits == 0 {
            return Err(CircuitError::Empty);
        }
        Ok(Self { n_qubits, ops: Vec::new() })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, op: GateOp) -> Result<&mut Self, CircuitError> {
        if let Some(q) = op.qubits().find(|&q| q >= self.n_qubits) {
            return Err(CircuitError::QubitOutOfRange { qubit: q, n_qubits: self.n_qubits });
        }
        self.ops.push(op);
        Ok(self)
    }

    pub fn push_gate(&mut self, gate: Gate, targets: &[usize]) -> Result<&mut Self, CircuitError> {
        self.push(GateOp::new(gate, targets)?)
    }

    pub fn push_controlled(
        &mut self,
        gate: Gate,
        targets: &[usize],
        controls: &[Control],
    ) -> Result<&mut Self, CircuitError> {
        self.push(GateOp::new(gate, targets)?.with_controls(controls)?)
    }

    pub fn h(&mut self, q: usize) -> Result<&mut Self, CircuitError> {
        self.push_gate(Gate::H, &[q])
    }
    pub fn x(&mut self, q: usize) -> Result<&mut Self, CircuitError> {
        self.push_gate(Gate::X, &[q])
    }
    pub fn y(&mut self, q: usize) -> Result<&mut Self, CircuitError> {
        self.push_gate(Gate::Y, &[q])
    }
    pub fn z(&mut self, q: usize) -> Result<&mut Self, CircuitError> {
        self.push_gate(Gate::Z, &[q])
    }
    pub fn rx(&mut self, q: usize, theta: f64) -> Result<&mut Self, CircuitError> {
        self.push_gate(Gate::Rx(theta), &[q])
    }
    pub fn ry(&mut self, q: usize, theta: f64) -> Result<&mut Self, CircuitError> {
        self.push_gate(Gate::Ry(theta), &[q])
    }
    pub fn rz(&mut self, q: usize, theta: f64) -> Result<&mut Self, CircuitError> {
        self.push_gate(Gate::Rz(theta), &[q])
    }
    pub fn phase(&mut self, q: usize, phi: f64) -> Result<&mut Self, CircuitError> {
        self.push_gate(Gate::Phase(phi), &[q])
    }
    pub fn cnot(&mut self, control: usize, target: usize) -> Result<&mut Self, CircuitError> {
        self.push_gate(Gate::Cnot, &[control, target])
    }
    pub fn rzz(&mut self, a: usize, b: usize, theta: f64) -> Result<&mut Self, CircuitError> {
        self.push_gate(Gate::Rzz(theta), &[a, b])
    }
    pub fn unitary(&mut self, targets: &[usize], u: UnitaryMatrix) -> Result<&mut Self, CircuitError> {
        self.push_gate(Gate::Unitary(Arc::new(u)), targets)
    }
    pub fn measure(&mut self, q: usize) -> Result<&mut Self, CircuitError> {
        self.push_gate(Gate::Measure, &[q])
    }

    /// Appends `other` with its qubit `i` placed on `map[i]`.
    pub fn append_mapped(&mut self, other: &Circuit, map: &[usize]) -> Result<&mut Self, CircuitError> {
        if map.len() != other.n_qubits {
            return Err(CircuitError::BadQubitMap { expected: other.n_qubits, got: map.len() });
        }
        for op in &other.ops {
            let op = op.remapped(map);
            op.check_distinct()?;
            self.push(op)?;
        }
        Ok(self)
    }

    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self, CircuitError> {
        let map: Vec<usize> = (0..other.n_qubits).collect();
        self.append_mapped(other, &map)
    }

    /// Reversed order, each op inverted.
    pub fn inverse(&self) -> Result<Circuit, CircuitError> {
        let ops = self.ops.iter().rev().map(GateOp::adjoint).collect::<Result<_, _>>()?;
        Ok(Circuit { n_qubits: self.n_qubits, ops })
    }

    /// Every op gains `control`.
    pub fn controlled(&self, control: Control) -> Result<Circuit, CircuitError> {
        if control.qubit >= self.n_qubits {
            return Err(CircuitError::QubitOutOfRange { qubit: control.qubit, n_qubits: self.n_qubits });
        }
        let ops = self.ops.iter().map(|op| op.clone().with_control(control)).collect::<Result<_, _>>()?;
        Ok(Circuit { n_qubits: self.n_qubits, ops })
    }

    /// Removes the ops at the given (sorted or unsorted) indices.
    pub fn without_ops(&self, indices: &[usize]) -> Circuit {
        let ops = self
            .ops
            .iter()
            .enumerate()
            .filter(|(i, _)| !indices.contains(i))
            .map(|(_, op)| op.clone())
            .collect();
        Circuit { n_qubits: self.n_qubits, ops }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("qubits {}\n", self.n_qubits);
        for op in &self.ops {
            out.push_str(op.gate.name());
            for t in &op.targets {
                let _ = write!(out, " {t}");
            }
            if !op.controls.is_empty() {
                out.push_str(" ctrl");
                for c in &op.controls {
                    let p = if c.polarity == Polarity::One { 1 } else { 0 };
                    let _ = write!(out, " {}:{}", c.qubit, p);
                }
            }
            let params = op.gate.params();
            if !params.is_empty() {
                out.push_str(" param");
                for p in params {
                    let _ = write!(out, " {p:?}");
                }
            }
            if let Gate::Unitary(u) = &op.gate {
                out.push_str(" matrix");
                let m = u.matrix();
                for r in 0..m.nrows() {
                    for col in 0..m.ncols() {
                        let z = m[(r, col)];
                        let _ = write!(out, " {:?} {:?}", z.re, z.im);
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for Circuit {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut circuit: Option<Circuit> = None;
        for (idx, raw) in s.lines().enumerate() {
            let line = idx + 1;
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let err = |msg: String| CircuitError::Parse { line, msg };
            let mut toks = text.split_whitespace();
            let kind = toks.next().unwrap_or_default().to_ascii_lowercase();
            let Some(circ) = circuit.as_mut() else {
                let n = match (kind.as_str(), toks.next(), toks.next()) {
                    ("qubits", Some(n), None) => n.parse::<usize>().map_err(|e| err(e.to_string()))?,
                    _ => return Err(err("expected `qubits <n>` header".into())),
                };
                circuit = Some(Circuit::new(n).map_err(|e| err(e.to_string()))?);
                continue;
            };
            let mut targets = Vec::new();
            let mut controls = Vec::new();
            let mut params = Vec::new();
            let mut matrix = Vec::new();
            let mut section = "targets";
            for tok in toks {
                match tok {
                    "ctrl" | "param" | "matrix" => {
                        section = tok;
                        continue;
                    }
                    _ => {}
                }
                match section {
                    "targets" => targets.push(tok.parse::<usize>().map_err(|_| err(format!("bad qubit {tok:?}")))?),
                    "ctrl" => {
                        let (q, p) = tok.split_once(':').ok_or_else(|| err(format!("bad control {tok:?}")))?;
                        let qubit = q.parse::<usize>().map_err(|_| err(format!("bad control {tok:?}")))?;
                        let polarity = match p {
                            "0" => Polarity::Zero,
                            "1" => Polarity::One,
                            _ => return Err(err(format!("bad polarity {p:?}"))),
                        };
                        controls.push(Control { qubit, polarity });
                    }
                    "param" => params.push(tok.parse::<f64>().map_err(|_| err(format!("bad number {tok:?}")))?),
                    _ => matrix.push(tok.parse::<f64>().map_err(|_| err(format!("bad number {tok:?}")))?),
                }
            }
            let gate = if kind == "unitary" {
                let dim = 1usize << targets.len().min(16);
                if matrix.len() != 2 * dim * dim || !params.is_empty() {
                    return Err(err(format!("unitary on {} qubits needs {} matrix numbers", targets.len(), 2 * dim * dim)));
                }
                let m = DMatrix::from_fn(dim, dim, |r, col| {
                    let k = 2 * (r * dim + col);
                    c(matrix[k], matrix[k + 1])
                });
                Gate::Unitary(Arc::new(UnitaryMatrix::new(m).map_err(|e| err(e.to_string()))?))
            } else {
                if !matrix.is_empty() {
                    return Err(err("matrix given for a non-unitary op".into()));
                }
                Gate::from_parts(&kind, &params)
                    .ok_or_else(|| err(format!("unknown op {kind:?} with {} param(s)", params.len())))?
            };
            let op = GateOp::new(gate, targets)
                .and_then(|op| op.with_controls(&controls))
                .map_err(|e| err(e.to_string()))?;
            circ.push(op).map_err(|e| err(e.to_string()))?;
        }
        circuit.ok_or(CircuitError::Parse { line: 0, msg: "empty circuit text".into() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetworkMode {
    /// Base circuit only.
    Off,
    /// Transformation gates inserted without control.
    On,
    /// Transformation gates inserted with the ancilla as a closed control.
    Controlled,
}

/// A base circuit plus transformation gates toggled by an ancilla.
#[derive(Clone, Debug, PartialEq)]
pub struct GateNetwork {
    base: Circuit,
    transforms: Vec<(usize, GateOp)>,
    ancilla: usize,
}

impl GateNetwork {
    /// `transforms` are `(index into base, op)`; an op at index `i` runs before
    /// `base[i]`. Equal indices keep their given order.
    pub fn new(base: Circuit, mut transforms: Vec<(usize, GateOp)>, ancilla: usize) -> Result<Self, CircuitError> {
        let n = base.n_qubits();
        if ancilla >= n {
            return Err(CircuitError::QubitOutOfRange { qubit: ancilla, n_qubits: n });
        }
        if base.ops().iter().any(|op| op.qubits().any(|q| q == ancilla)) {
            return Err(CircuitError::AncillaCollision(ancilla));
        }
        for (pos, op) in &transforms {
            if *pos > base.len() {
                return Err(CircuitError::InsertionOutOfRange { index: *pos, len: base.len() });
            }
            if op.gate().is_measure() {
                return Err(CircuitError::Measurement);
            }
            if op.qubits().any(|q| q == ancilla) {
                return Err(CircuitError::AncillaCollision(ancilla));
            }
            if let Some(q) = op.qubits().find(|&q| q >= n) {
                return Err(CircuitError::QubitOutOfRange { qubit: q, n_qubits: n });
            }
        }
        transforms.sort_by_key(|(p, _)| *p);
        Ok(Self { base, transforms, ancilla })
    }

    pub fn base(&self) -> &Circuit {
        &self.base
    }

    pub fn ancilla(&self) -> usize {
        self.ancilla
    }

    pub fn transforms(&self) -> &[(usize, GateOp)] {
        &self.transforms
    }

    pub fn realize(&self, mode: NetworkMode) -> Circuit {
        self.realize_tracked(mode).0
    }

    /// Also returns the indices of the inserted ops in the output.
    pub fn realize_tracked(&self, mode: NetworkMode) -> (Circuit, Vec<usize>) {
        let mut out = Circuit { n_qubits: self.base.n_qubits, ops: Vec::new() };
        let mut inserted = Vec::new();
        let mut pending = self.transforms.iter().peekable();
        for i in 0..=self.base.len() {
            while let Some((_, op)) = pending.next_if(|(p, _)| *p == i) {
                let op = match mode {
                    NetworkMode::Off => continue,
                    NetworkMode::On => op.clone(),
                    NetworkMode::Controlled => {
                        let mut op = op.clone();
                        op.controls.push(Control::on_one(self.ancilla));
                        op
                    }
                };
                inserted.push(out.ops.len());
                out.ops.push(op);
            }
            if let Some(op) = self.base.ops.get(i) {
                out.ops.push(op.clone());
            }
        }
        (out, inserted)
    }
}

/// Global phase `e^{iφ}` aligning `v` to `u`, taken from the largest entry of `v`,
/// and the residual `max |u - e^{iφ} v|`.
pub fn relative_phase(u: &UnitaryMatrix, v: &UnitaryMatrix) -> Result<(Complex64, f64), SimError> {
    if u.dim() != v.dim() {
        return Err(SimError::DimensionMismatch(u.n_qubits(), v.n_qubits()));
    }
    let (um, vm) = (u.matrix(), v.matrix());
    let k = vm.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).map(|(k, _)| k).unwrap_or(0);
    let ratio = um.as_slice()[k] / vm.as_slice()[k];
    let phase = if ratio.norm() > 0.0 { ratio / ratio.norm() } else { c(1.0, 0.0) };
    let resid = um.iter().zip(vm.iter()).fold(0.0f64, |acc, (a, b)| acc.max((a - phase * b).norm()));
    Ok((phase, resid))
}

pub fn unitary_equiv_up_to_phase(u: &UnitaryMatrix, v: &UnitaryMatrix, tol: f64) -> Result<bool, SimError> {
    Ok(relative_phase(u, v)?.1 < tol)
}

/// Default tolerance for phase-insensitive equality.
pub const PHASE_TOL: f64 = 1e-8;
