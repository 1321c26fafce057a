//! Lowering to native gate sets and gate counting.
//!
//! Every gate is rewritten on its own with a fixed recipe (no merging across
//! gates). IBM basis, per input gate:
//!
//! | gate              | recipe                                             | CNOT | 1q  |
//! |-------------------|----------------------------------------------------|------|-----|
//! | Rz, U1, P         | U1                                                 | 0    | 1   |
//! | Rx, Ry, H, X, Y, Z| one U2/U3/U1                                       | 0    | 1   |
//! | RZZ(θ)            | CX, U1(θ), CX                                      | 2    | 1   |
//! | C-X               | CX                                                 | 1    | 0   |
//! | C-Y, C-Z          | phase or H conjugation of CX                       | 1    | 2   |
//! | C-Rz, C-Ry        | half-angle pair around two CX                      | 2    | 2   |
//! | C-Rx              | U1(π/2), CX, U3(-θ/2,0,0), CX, U3(θ/2,-π/2,0)      | 2    | 3   |
//! | C-U1, C-P         | U1(λ/2) on control plus C-Rz pattern               | 2    | 3   |
//! | C-(other 1q)      | A·X·B·X·C from a ZYZ split, control phase if any   | 2    | 3-4 |
//! | C-CX (Toffoli)    | six-CX form, trailing T·H merged into one U2       | 6    | 8   |
//! | C-RZZ             | CX, C-Rz, CX                                       | 4    | 2   |
//!
//! Open controls are wrapped in X on the control. More than one control,
//! controlled measurements and unitaries on two or more qubits are rejected.
//!
//! QTM basis: the IBM output with `U1/U2/U3` rewritten as Rz/Ry chains and
//! `CX(c,t) ≅ H_t · RZZ(π/2) Rz_c(-π/2) Rz_t(-π/2) · H_t`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Gate, GateOp, Polarity};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TranspileError {
    #[error("{gate} has {controls} controls; at most one is supported")]
    MultiControl { gate: &'static str, controls: usize },
    #[error("a measurement cannot be controlled")]
    ControlledMeasure,
    #[error("custom unitaries on {0} qubits cannot be decomposed")]
    UnsupportedUnitary(usize),
    #[error("{0} is not in a native gate set")]
    NonNative(String),
    #[error("unknown basis {0:?} (expected ibm or qtm)")]
    UnknownBasis(String),
    #[error("chain length must be even and positive, got {0}")]
    OddChain(usize),
    #[error("sigma and dt must be positive and finite (sigma={sigma}, dt={dt})")]
    BadTimes { sigma: f64, dt: f64 },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NativeGateSet {
    /// CNOT, U1, U2, U3.
    #[serde(rename = "ibm")]
    IbmCnotU,
    /// RZZ(π/2) plus Rx, Ry, Rz.
    #[serde(rename = "qtm")]
    QtmRzz,
}

impl FromStr for NativeGateSet {
    type Err = TranspileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ibm" | "ibm_cnot_u" => Ok(Self::IbmCnotU),
            "qtm" | "qtm_rzz" => Ok(Self::QtmRzz),
            _ => Err(TranspileError::UnknownBasis(s.to_string())),
        }
    }
}

impl fmt::Display for NativeGateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::IbmCnotU => "ibm",
            Self::QtmRzz => "qtm",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GateCount {
    pub two_qubit: usize,
    pub one_qubit: usize,
}

struct Emitter {
    out: Circuit,
}

impl Emitter {
    fn g(&mut self, gate: Gate, targets: &[usize]) -> Result<(), TranspileError> {
        self.out.push_gate(gate, targets)?;
        Ok(())
    }
    fn u1(&mut self, q: usize, l: f64) -> Result<(), TranspileError> {
        self.g(Gate::U1(l), &[q])
    }
    fn u2(&mut self, q: usize, phi: f64, l: f64) -> Result<(), TranspileError> {
        self.g(Gate::U2(phi, l), &[q])
    }
    fn u3(&mut self, q: usize, t: f64, phi: f64, l: f64) -> Result<(), TranspileError> {
        self.g(Gate::U3(t, phi, l), &[q])
    }
    fn cx(&mut self, c: usize, t: usize) -> Result<(), TranspileError> {
        self.g(Gate::Cnot, &[c, t])
    }

    fn plain(&mut self, gate: &Gate, t: &[usize]) -> Result<(), TranspileError> {
        let q = t[0];
        match *gate {
            Gate::H => self.u2(q, 0.0, PI),
            Gate::X => self.u3(q, PI, 0.0, PI),
            Gate::Y => self.u3(q, PI, FRAC_PI_2, FRAC_PI_2),
            Gate::Z => self.u1(q, PI),
            Gate::Rx(a) => self.u3(q, a, -FRAC_PI_2, FRAC_PI_2),
            Gate::Ry(a) => self.u3(q, a, 0.0, 0.0),
            Gate::Rz(a) | Gate::U1(a) | Gate::Phase(a) => self.u1(q, a),
            Gate::U2(p, l) => self.u2(q, p, l),
            Gate::U3(a, p, l) => self.u3(q, a, p, l),
            Gate::Cnot => self.cx(t[0], t[1]),
            Gate::Rzz(a) => {
                self.cx(t[0], t[1])?;
                self.u1(t[1], a)?;
                self.cx(t[0], t[1])
            }
            Gate::Unitary(ref u) => {
                let m = gate.matrix2().ok_or(TranspileError::UnsupportedUnitary(u.n_qubits()))?;
                let (_, beta, gamma, delta) = zyz(&m);
                self.u3(q, gamma, beta, delta)
            }
            Gate::Measure => self.g(Gate::Measure, &[q]),
        }
    }

    fn controlled(&mut self, gate: &Gate, t: &[usize], c: usize) -> Result<(), TranspileError> {
        let q = t[0];
        match *gate {
            Gate::X => self.cx(c, q),
            Gate::Y => {
                self.u1(q, -FRAC_PI_2)?;
                self.cx(c, q)?;
                self.u1(q, FRAC_PI_2)
            }
            Gate::Z => {
                self.u2(q, 0.0, PI)?;
                self.cx(c, q)?;
                self.u2(q, 0.0, PI)
            }
            Gate::Rz(a) => {
                self.u1(q, a / 2.0)?;
                self.cx(c, q)?;
                self.u1(q, -a / 2.0)?;
                self.cx(c, q)
            }
            Gate::Ry(a) => {
                self.u3(q, a / 2.0, 0.0, 0.0)?;
                self.cx(c, q)?;
                self.u3(q, -a / 2.0, 0.0, 0.0)?;
                self.cx(c, q)
            }
            Gate::Rx(a) => {
                self.u1(q, FRAC_PI_2)?;
                self.cx(c, q)?;
                self.u3(q, -a / 2.0, 0.0, 0.0)?;
                self.cx(c, q)?;
                self.u3(q, a / 2.0, -FRAC_PI_2, 0.0)
            }
            Gate::U1(l) | Gate::Phase(l) => {
                self.u1(c, l / 2.0)?;
                self.u1(q, l / 2.0)?;
                self.cx(c, q)?;
                self.u1(q, -l / 2.0)?;
                self.cx(c, q)
            }
            Gate::H | Gate::U2(..) | Gate::U3(..) => {
                let m = gate.matrix2().expect("single-qubit gate");
                self.abc(&m, q, c)
            }
            Gate::Unitary(ref u) => match gate.matrix2() {
                Some(m) => self.abc(&m, q, c),
                None => Err(TranspileError::UnsupportedUnitary(u.n_qubits())),
            },
            Gate::Cnot => self.toffoli(c, t[0], t[1]),
            Gate::Rzz(a) => {
                self.cx(t[0], t[1])?;
                self.controlled(&Gate::Rz(a), &[t[1]], c)?;
                self.cx(t[0], t[1])
            }
            Gate::Measure => Err(TranspileError::ControlledMeasure),
        }
    }

    /// Controlled `e^{iα} Rz(β) Ry(γ) Rz(δ)` as `C, CX, B, CX, A` plus `U1(α)` on the control.
    fn abc(&mut self, m: &[[Complex64; 2]; 2], q: usize, c: usize) -> Result<(), TranspileError> {
        let (alpha, beta, gamma, delta) = zyz(m);
        self.u1(q, (delta - beta) / 2.0)?;
        self.cx(c, q)?;
        self.u3(q, -gamma / 2.0, 0.0, -(delta + beta) / 2.0)?;
        self.cx(c, q)?;
        self.u3(q, gamma / 2.0, beta, 0.0)?;
        let wrapped = alpha.rem_euclid(2.0 * PI);
        if wrapped.abs() > 1e-12 && (wrapped - 2.0 * PI).abs() > 1e-12 {
            self.u1(c, alpha)?;
        }
        Ok(())
    }

    fn toffoli(&mut self, a: usize, b: usize, t: usize) -> Result<(), TranspileError> {
        self.u2(t, 0.0, PI)?;
        self.cx(b, t)?;
        self.u1(t, -FRAC_PI_4)?;
        self.cx(a, t)?;
        self.u1(t, FRAC_PI_4)?;
        self.cx(b, t)?;
        self.u1(t, -FRAC_PI_4)?;
        self.cx(a, t)?;
        self.u1(b, FRAC_PI_4)?;
        self.u2(t, 0.0, -3.0 * FRAC_PI_4)?;
        self.cx(a, b)?;
        self.u1(a, FRAC_PI_4)?;
        self.u1(b, -FRAC_PI_4)?;
        self.cx(a, b)
    }

    fn op(&mut self, op: &GateOp) -> Result<(), TranspileError> {
        match op.controls() {
            [] => self.plain(op.gate(), op.targets()),
            [ctl] => {
                if op.gate().is_measure() {
                    return Err(TranspileError::ControlledMeasure);
                }
                let open = ctl.polarity == Polarity::Zero;
                if open {
                    self.plain(&Gate::X, &[ctl.qubit])?;
                }
                self.controlled(op.gate(), op.targets(), ctl.qubit)?;
                if open {
                    self.plain(&Gate::X, &[ctl.qubit])?;
                }
                Ok(())
            }
            many => Err(TranspileError::MultiControl { gate: op.gate().name(), controls: many.len() }),
        }
    }
}

/// `m = e^{iα} Rz(β) Ry(γ) Rz(δ)`; returns `(α, β, γ, δ)`.
pub fn zyz(m: &[[Complex64; 2]; 2]) -> (f64, f64, f64, f64) {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let alpha = det.arg() / 2.0;
    // m e^{-iα} = [[a, -b*], [b, a*]] with a = e^{-i(β+δ)/2} cos(γ/2), b = e^{i(β-δ)/2} sin(γ/2)
    let ph = Complex64::from_polar(1.0, -alpha);
    let a = m[0][0] * ph;
    let b = m[1][0] * ph;
    let gamma = 2.0 * b.norm().atan2(a.norm());
    let sum = if a.norm() > 1e-12 { -2.0 * a.arg() } else { 0.0 };
    let diff = if b.norm() > 1e-12 { 2.0 * b.arg() } else { 0.0 };
    (alpha, (sum + diff) / 2.0, gamma, (sum - diff) / 2.0)
}

fn lower_to_ibm(circuit: &Circuit) -> Result<Circuit, TranspileError> {
    let mut e = Emitter { out: Circuit::new(circuit.n_qubits())? };
    for op in circuit.ops() {
        e.op(op)?;
    }
    Ok(e.out)
}

fn ibm_to_qtm(circuit: &Circuit) -> Result<Circuit, TranspileError> {
    let mut out = Circuit::new(circuit.n_qubits())?;
    for op in circuit.ops() {
        let t = op.targets();
        match *op.gate() {
            Gate::U1(l) => {
                out.rz(t[0], l)?;
            }
            Gate::U2(p, l) => {
                out.rz(t[0], l)?.ry(t[0], FRAC_PI_2)?.rz(t[0], p)?;
            }
            Gate::U3(a, p, l) => {
                out.rz(t[0], l)?.ry(t[0], a)?.rz(t[0], p)?;
            }
            Gate::Cnot => {
                let (c, q) = (t[0], t[1]);
                out.rz(q, PI)?.ry(q, FRAC_PI_2)?;
                out.rz(c, -FRAC_PI_2)?.rz(q, -FRAC_PI_2)?.rzz(c, q, FRAC_PI_2)?;
                out.rz(q, PI)?.ry(q, FRAC_PI_2)?;
            }
            Gate::Measure => {
                out.measure(t[0])?;
            }
            ref g => return Err(TranspileError::NonNative(g.name().to_string())),
        }
    }
    Ok(out)
}

/// Rewrites `circuit` into `basis`. The result equals the input up to a global phase.
/// Gates already native to `basis` pass through untouched.
pub fn transpile(circuit: &Circuit, basis: NativeGateSet) -> Result<Circuit, TranspileError> {
    match basis {
        NativeGateSet::IbmCnotU => lower_to_ibm(circuit),
        NativeGateSet::QtmRzz => {
            let mut out = Circuit::new(circuit.n_qubits())?;
            for op in circuit.ops() {
                let native = op.controls().is_empty()
                    && match *op.gate() {
                        Gate::Rx(_) | Gate::Ry(_) | Gate::Rz(_) | Gate::Measure => true,
                        Gate::Rzz(a) => is_native_rzz(a),
                        _ => false,
                    };
                if native {
                    out.push(op.clone())?;
                } else {
                    let mut e = Emitter { out: Circuit::new(circuit.n_qubits())? };
                    e.op(op)?;
                    out.append(&ibm_to_qtm(&e.out)?)?;
                }
            }
            Ok(out)
        }
    }
}

fn is_native_rzz(theta: f64) -> bool {
    (theta - FRAC_PI_2).abs() < 1e-12
}

/// Tallies a circuit made only of CNOT, RZZ(π/2), U1/U2/U3 and Rx/Ry/Rz.
/// Measurements are skipped.
pub fn count_gates(circuit: &Circuit) -> Result<GateCount, TranspileError> {
    let mut n = GateCount::default();
    for op in circuit.ops() {
        if !op.controls().is_empty() {
            return Err(TranspileError::NonNative(format!("controlled {}", op.gate().name())));
        }
        match *op.gate() {
            Gate::Measure => {}
            Gate::Cnot => n.two_qubit += 1,
            Gate::Rzz(a) if is_native_rzz(a) => n.two_qubit += 1,
            Gate::U1(_) | Gate::U2(..) | Gate::U3(..) | Gate::Rx(_) | Gate::Ry(_) | Gate::Rz(_) => n.one_qubit += 1,
            ref g => return Err(TranspileError::NonNative(format!("{} {:?}", g.name(), g.params()))),
        }
    }
    Ok(n)
}

/// Shorthand for `count_gates(transpile(c, basis))`.
pub fn transpiled_count(circuit: &Circuit, basis: NativeGateSet) -> Result<GateCount, TranspileError> {
    count_gates(&transpile(circuit, basis)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainMethod {
    NaiveControlled,
    Reversal,
}

/// `σ/dt` as a step count: nearest integer within 1e-9, otherwise rounded up.
pub fn chain_steps(sigma: f64, dt: f64) -> Result<u64, TranspileError> {
    if !(sigma > 0.0 && dt > 0.0 && sigma.is_finite() && dt.is_finite()) {
        return Err(TranspileError::BadTimes { sigma, dt });
    }
    let r = sigma / dt;
    Ok(if (r - r.round()).abs() < 1e-9 { r.round() } else { r.ceil() } as u64)
}

/// Two-qubit gates per rodeo cycle on the `n`-qubit chain:
/// `20 n K + 10 n` with plain controlled evolution, `n K + 2 n` with reversal gates.
pub fn predict_chain_counts(n: usize, sigma: f64, dt: f64, method: ChainMethod) -> Result<u64, TranspileError> {
    if n == 0 || n % 2 == 1 {
        return Err(TranspileError::OddChain(n));
    }
    let k = chain_steps(sigma, dt)?;
    let n = n as u64;
    Ok(match method {
        ChainMethod::NaiveControlled => 20 * n * k + 10 * n,
        ChainMethod::Reversal => n * k + 2 * n,
    })
}

/// Per-gate error rate at which one reversal-gate cycle keeps peaks above
/// background: `1 / (2 · two-qubit count)`.
pub fn error_budget(n: usize, sigma: f64, dt: f64) -> Result<f64, TranspileError> {
    Ok(1.0 / (2 * predict_chain_counts(n, sigma, dt, ChainMethod::Reversal)?) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Control;
    use crate::circuit::unitary_equiv_up_to_phase;
    use crate::statevec::circuit_to_unitary;

    fn equiv(a: &Circuit, b: &Circuit) -> bool {
        let ua = circuit_to_unitary(a).unwrap();
        let ub = circuit_to_unitary(b).unwrap();
        unitary_equiv_up_to_phase(&ua, &ub, 1e-9).unwrap()
    }

    fn single_gates() -> Vec<Gate> {
        vec![
            Gate::H,
            Gate::X,
            Gate::Y,
            Gate::Z,
            Gate::Rx(0.71),
            Gate::Ry(-1.3),
            Gate::Rz(2.2),
            Gate::U1(0.4),
            Gate::U2(0.3, -0.8),
            Gate::U3(1.1, 0.5, -2.0),
            Gate::Phase(-0.9),
        ]
    }

    #[test]
    fn every_recipe_is_equivalent() {
        for g in single_gates() {
            for basis in [NativeGateSet::IbmCnotU, NativeGateSet::QtmRzz] {
                let mut c = Circuit::new(3).unwrap();
                c.push_gate(g.clone(), &[1]).unwrap();
                c.push_controlled(g.clone(), &[2], &[Control::on_one(0)]).unwrap();
                c.push_controlled(g.clone(), &[0], &[Control::on_zero(2)]).unwrap();
                let t = transpile(&c, basis).unwrap();
                assert!(equiv(&c, &t), "{g:?} {basis}");
                count_gates(&t).unwrap();
            }
        }
        let mut c = Circuit::new(3).unwrap();
        c.h(0).unwrap().h(1).unwrap();
        c.push_controlled(Gate::Cnot, &[1, 2], &[Control::on_one(0)]).unwrap();
        c.push_controlled(Gate::Rzz(0.9), &[1, 2], &[Control::on_zero(0)]).unwrap();
        c.rzz(0, 2, -0.3).unwrap();
        c.cnot(2, 0).unwrap();
        for basis in [NativeGateSet::IbmCnotU, NativeGateSet::QtmRzz] {
            assert!(equiv(&c, &transpile(&c, basis).unwrap()));
        }
    }

    #[test]
    fn recipe_costs() {
        let cost = |g: Gate, targets: &[usize], ctl: Option<Control>| {
            let mut c = Circuit::new(3).unwrap();
            match ctl {
                Some(k) => c.push_controlled(g, targets, &[k]).unwrap(),
                None => c.push_gate(g, targets).unwrap(),
            };
            transpiled_count(&c, NativeGateSet::IbmCnotU).unwrap()
        };
        let on = Some(Control::on_one(0));
        let gc = |two_qubit, one_qubit| GateCount { two_qubit, one_qubit };
        assert_eq!(cost(Gate::Rz(0.3), &[1], None), gc(0, 1));
        assert_eq!(cost(Gate::Rz(0.3), &[1], on), gc(2, 2));
        assert_eq!(cost(Gate::Ry(0.3), &[1], on), gc(2, 2));
        assert_eq!(cost(Gate::Rx(0.3), &[1], on), gc(2, 3));
        assert_eq!(cost(Gate::Y, &[1], on), gc(1, 2));
        assert_eq!(cost(Gate::Y, &[1], Some(Control::on_zero(0))), gc(1, 4));
        assert_eq!(cost(Gate::H, &[1], on).two_qubit, 2);
        assert_eq!(cost(Gate::Cnot, &[1, 2], on), gc(6, 8));
        assert_eq!(cost(Gate::Rzz(0.3), &[1, 2], None), gc(2, 1));
        assert_eq!(cost(Gate::Rzz(0.3), &[1, 2], on).two_qubit, 4);
    }

    #[test]
    fn zyz_reconstructs() {
        for g in single_gates() {
            let m = g.matrix2().unwrap();
            let (a, b, c, d) = zyz(&m);
            let mut circ = Circuit::new(1).unwrap();
            circ.rz(0, d).unwrap().ry(0, c).unwrap().rz(0, b).unwrap();
            let u = circuit_to_unitary(&circ).unwrap();
            let ph = Complex64::from_polar(1.0, a);
            for r in 0..2 {
                for col in 0..2 {
                    assert!((u.matrix()[(r, col)] * ph - m[r][col]).norm() < 1e-12, "{g:?}");
                }
            }
        }
    }

    #[test]
    fn rejections() {
        let mut c = Circuit::new(3).unwrap();
        c.push_controlled(Gate::X, &[2], &[Control::on_one(0), Control::on_one(1)]).unwrap();
        assert!(matches!(transpile(&c, NativeGateSet::IbmCnotU), Err(TranspileError::MultiControl { .. })));
        let mut c = Circuit::new(3).unwrap();
        c.unitary(&[0, 1], UnitaryMatrixExt::rzz(0.2)).unwrap();
        assert!(matches!(transpile(&c, NativeGateSet::IbmCnotU), Err(TranspileError::UnsupportedUnitary(2))));
        let mut h = Circuit::new(1).unwrap();
        h.h(0).unwrap();
        assert!(matches!(count_gates(&h), Err(TranspileError::NonNative(_))));
        let mut r = Circuit::new(2).unwrap();
        r.rzz(0, 1, 0.3).unwrap();
        assert!(count_gates(&r).is_err());
    }

    struct UnitaryMatrixExt;
    impl UnitaryMatrixExt {
        fn rzz(t: f64) -> crate::statevec::UnitaryMatrix {
            Gate::Rzz(t).matrix().unwrap()
        }
    }

    #[test]
    fn measurements_pass_through_uncounted() {
        let mut c = Circuit::new(1).unwrap();
        c.rz(0, 0.1).unwrap().measure(0).unwrap();
        let t = transpile(&c, NativeGateSet::IbmCnotU).unwrap();
        assert_eq!(count_gates(&t).unwrap(), GateCount { two_qubit: 0, one_qubit: 1 });
        assert_eq!(count_gates(&Circuit::new(2).unwrap()).unwrap(), GateCount::default());
    }

    #[test]
    fn transpile_is_count_fixed_point() {
        let mut c = Circuit::new(3).unwrap();
        c.h(0).unwrap();
        c.push_controlled(Gate::Rx(0.3), &[1], &[Control::on_one(0)]).unwrap();
        c.push_controlled(Gate::Cnot, &[1, 2], &[Control::on_one(0)]).unwrap();
        for basis in [NativeGateSet::IbmCnotU, NativeGateSet::QtmRzz] {
            let once = transpile(&c, basis).unwrap();
            let twice = transpile(&once, basis).unwrap();
            assert_eq!(count_gates(&once).unwrap(), count_gates(&twice).unwrap());
        }
    }

    #[test]
    fn chain_predictors() {
        for n in [2, 4, 6, 10] {
            assert_eq!(predict_chain_counts(n, 6.0, 0.2, ChainMethod::Reversal).unwrap(), 32 * n as u64);
            assert!((error_budget(n, 6.0, 0.2).unwrap() - 1.0 / (64.0 * n as f64)).abs() < 1e-15);
        }
        assert_eq!(predict_chain_counts(2, 6.0, 0.2, ChainMethod::NaiveControlled).unwrap(), 1220);
        assert!(predict_chain_counts(3, 6.0, 0.2, ChainMethod::Reversal).is_err());
        assert_eq!(chain_steps(1.0, 0.3).unwrap(), 4);
        let ratio = |k: f64| {
            predict_chain_counts(4, k, 1.0, ChainMethod::Reversal).unwrap() as f64
                / predict_chain_counts(4, k, 1.0, ChainMethod::NaiveControlled).unwrap() as f64
        };
        assert!((ratio(1e6) - 0.05).abs() < 1e-5);
        assert!(ratio(10.0) > ratio(1000.0));
    }
}
