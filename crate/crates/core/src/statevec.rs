//! Dense statevector simulation.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateOp, Kernel, Polarity};

/// Largest register [`circuit_to_unitary`] and the dense Hamiltonian helpers will build.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Branch probabilities below this are treated as exact zeros.
pub const ZERO_PROBABILITY: f64 = 1e-14;

const NORM_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("amplitude vector of length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("state norm² is {0}, expected 1")]
    NotNormalized(f64),
    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("matrix is {rows}x{cols}, expected a square power-of-two dimension")]
    BadMatrixShape { rows: usize, cols: usize },
    #[error("qubit {qubit} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("register size mismatch: {0} vs {1} qubits")]
    DimensionMismatch(usize, usize),
    #[error("outcome {outcome} on qubit {qubit} has probability {probability:e}")]
    ZeroProbability { qubit: usize, outcome: u8, probability: f64 },
    #[error("measurement at op {0} cannot be applied as a unitary")]
    Measurement(usize),
    #[error("a measurement cannot be applied as a unitary")]
    MeasureOp,
    #[error("{0} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}")]
    TooManyQubits(usize),
    #[error("unknown product-state letter {0:?} (expected 0, 1, + or -)")]
    BadProductSpec(char),
    #[error("a register needs at least one qubit")]
    Empty,
}

/// A `2^k x 2^k` unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    n_qubits: usize,
    m: DMatrix<Complex64>,
}

impl UnitaryMatrix {
    /// Checks shape and `U U† = I` within 1e-10.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self, SimError> {
        let (rows, cols) = m.shape();
        if rows != cols || rows == 0 || !rows.is_power_of_two() {
            return Err(SimError::BadMatrixShape { rows, cols });
        }
        let dev = (&m * m.adjoint() - DMatrix::<Complex64>::identity(rows, rows))
            .iter()
            .fold(0.0f64, |acc, z| acc.max(z.norm()));
        if !(dev <= UNITARY_TOL) {
            return Err(SimError::NotUnitary(dev));
        }
        Ok(Self { n_qubits: rows.trailing_zeros() as usize, m })
    }

    pub(crate) fn new_unchecked(m: DMatrix<Complex64>) -> Self {
        let n_qubits = m.nrows().trailing_zeros() as usize;
        Self { n_qubits, m }
    }

    pub fn identity(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        Self { n_qubits, m: DMatrix::identity(d, d) }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.m
    }

    pub fn adjoint(&self) -> Self {
        Self { n_qubits: self.n_qubits, m: self.m.adjoint() }
    }

    /// Matrix product `self · rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &Self) -> Result<Self, SimError> {
        if self.n_qubits != rhs.n_qubits {
            return Err(SimError::DimensionMismatch(self.n_qubits, rhs.n_qubits));
        }
        Ok(Self { n_qubits: self.n_qubits, m: &self.m * &rhs.m })
    }

    /// Largest entry of `|U U† - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim();
        (&self.m * self.m.adjoint() - DMatrix::<Complex64>::identity(d, d))
            .iter()
            .fold(0.0, |acc, z| acc.max(z.norm()))
    }
}

/// Amplitudes over `2^n` basis states, qubit 0 most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(n_qubits: usize) -> Result<Self, SimError> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self, SimError> {
        if n_qubits == 0 {
            return Err(SimError::Empty);
        }
        if n_qubits > usize::BITS as usize - 2 {
            return Err(SimError::TooManyQubits(n_qubits));
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(SimError::QubitOutOfRange { qubit: index, n_qubits });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Takes ownership of amplitudes that must already be normalized.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, SimError> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(SimError::NotPowerOfTwo(len));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(SimError::NotNormalized(norm));
        }
        Ok(Self { n_qubits: len.trailing_zeros() as usize, amps })
    }

    /// Product state from one letter per qubit: `0`, `1`, `+`, `-`.
    ///
    /// ```
    /// use cgnet::StateVector;
    /// let s = StateVector::product("0+").unwrap();
    /// assert!((s.amplitudes()[1].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    /// ```
    pub fn product(spec: &str) -> Result<Self, SimError> {
        let letters: Vec<char> = spec.trim().chars().collect();
        if letters.is_empty() {
            return Err(SimError::Empty);
        }
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for ch in letters {
            let (a0, a1) = match ch {
                '0' => (1.0, 0.0),
                '1' => (0.0, 1.0),
                '+' => (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
                '-' => (FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
                other => return Err(SimError::BadProductSpec(other)),
            };
            amps = amps.iter().flat_map(|&a| [a * a0, a * a1]).collect();
        }
        Self::from_amplitudes(amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn bit(&self, qubit: usize) -> Result<usize, SimError> {
        if qubit >= self.n_qubits {
            return Err(SimError::QubitOutOfRange { qubit, n_qubits: self.n_qubits });
        }
        Ok(1 << (self.n_qubits - 1 - qubit))
    }

    /// Applies one gate in place. Measurements are rejected; see [`StateVector::measure`].
    pub fn apply(&mut self, op: &GateOp) -> Result<(), SimError> {
        for q in op.qubits() {
            self.bit(q)?;
        }
        let mut cmask = 0usize;
        let mut cval = 0usize;
        for c in op.controls() {
            let b = self.bit(c.qubit)?;
            cmask |= b;
            if c.polarity == Polarity::One {
                cval |= b;
            }
        }
        let t = op.targets();
        match op.gate().kernel() {
            None => Err(SimError::MeasureOp),
            Some(Kernel::One(m)) => {
                let b = self.bit(t[0])?;
                self.apply_1q(&m, b, cmask, cval);
                Ok(())
            }
            Some(Kernel::Controlled1(m)) => {
                // CNOT-like: targets[0] is an extra closed control
                let c = self.bit(t[0])?;
                let b = self.bit(t[1])?;
                self.apply_1q(&m, b, cmask | c, cval | c);
                Ok(())
            }
            Some(Kernel::Two(m)) => {
                let ba = self.bit(t[0])?;
                let bb = self.bit(t[1])?;
                self.apply_2q(&m, ba, bb, cmask, cval);
                Ok(())
            }
            Some(Kernel::Dense(u)) => {
                let bits = t.iter().map(|&q| self.bit(q)).collect::<Result<Vec<_>, _>>()?;
                self.apply_kq(u.matrix(), &bits, cmask, cval);
                Ok(())
            }
        }
    }

    /// Applies every op; fails on the first measurement.
    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<(), SimError> {
        if circuit.n_qubits() != self.n_qubits {
            return Err(SimError::DimensionMismatch(circuit.n_qubits(), self.n_qubits));
        }
        for (i, op) in circuit.ops().iter().enumerate() {
            if matches!(op.gate(), Gate::Measure) {
                return Err(SimError::Measurement(i));
            }
            self.apply(op)?;
        }
        Ok(())
    }

    fn apply_1q(&mut self, m: &[[Complex64; 2]; 2], bit: usize, cmask: usize, cval: usize) {
        for i in 0..self.amps.len() {
            if i & bit != 0 || i & cmask != cval {
                continue;
            }
            let j = i | bit;
            let (a, b) = (self.amps[i], self.amps[j]);
            self.amps[i] = m[0][0] * a + m[0][1] * b;
            self.amps[j] = m[1][0] * a + m[1][1] * b;
        }
    }

    fn apply_2q(&mut self, m: &[[Complex64; 4]; 4], ba: usize, bb: usize, cmask: usize, cval: usize) {
        for i in 0..self.amps.len() {
            if i & (ba | bb) != 0 || i & cmask != cval {
                continue;
            }
            let idx = [i, i | bb, i | ba, i | ba | bb];
            let v = idx.map(|k| self.amps[k]);
            for (r, &k) in idx.iter().enumerate() {
                self.amps[k] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
            }
        }
    }

    fn apply_kq(&mut self, m: &DMatrix<Complex64>, bits: &[usize], cmask: usize, cval: usize) {
        let k = bits.len();
        let tmask: usize = bits.iter().fold(0, |a, b| a | b);
        let offsets: Vec<usize> = (0..1usize << k)
            .map(|l| {
                (0..k).filter(|&p| l >> (k - 1 - p) & 1 == 1).fold(0, |acc, p| acc | bits[p])
            })
            .collect();
        let mut buf = vec![Complex64::new(0.0, 0.0); offsets.len()];
        for i in 0..self.amps.len() {
            if i & tmask != 0 || i & cmask != cval {
                continue;
            }
            for (slot, &o) in buf.iter_mut().zip(&offsets) {
                *slot = self.amps[i | o];
            }
            for (r, &o) in offsets.iter().enumerate() {
                self.amps[i | o] = (0..buf.len()).map(|c| m[(r, c)] * buf[c]).sum();
            }
        }
    }

    /// Born probability of reading `outcome` on `qubit`.
    pub fn probability(&self, qubit: usize, outcome: u8) -> Result<f64, SimError> {
        let bit = self.bit(qubit)?;
        let want = if outcome == 0 { 0 } else { bit };
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit == want)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// In-place projection onto `outcome`, renormalized. Returns the branch probability.
    /// Fails without touching the state when the branch is below [`ZERO_PROBABILITY`].
    pub fn collapse(&mut self, qubit: usize, outcome: u8) -> Result<f64, SimError> {
        let p = self.probability(qubit, outcome)?;
        if p < ZERO_PROBABILITY {
            return Err(SimError::ZeroProbability { qubit, outcome, probability: p });
        }
        let bit = self.bit(qubit)?;
        let want = if outcome == 0 { 0 } else { bit };
        let scale = 1.0 / p.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit == want {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(p)
    }

    pub fn project_qubit(&self, qubit: usize, outcome: u8) -> Result<(f64, StateVector), SimError> {
        let mut s = self.clone();
        let p = s.collapse(qubit, outcome)?;
        Ok((p, s))
    }

    /// Samples and collapses in place. One uniform draw per call: outcome 0 iff `u < P(0)`.
    pub fn measure<R: Rng + ?Sized>(&mut self, qubit: usize, rng: &mut R) -> Result<u8, SimError> {
        let p0 = self.probability(qubit, 0)?;
        let u: f64 = rng.random();
        let mut outcome = if u < p0 { 0 } else { 1 };
        let p_out = if outcome == 0 { p0 } else { 1.0 - p0 };
        if p_out < ZERO_PROBABILITY {
            outcome = 1 - outcome;
        }
        self.collapse(qubit, outcome)?;
        Ok(outcome)
    }

    pub fn sample_measurement<R: Rng + ?Sized>(
        &self,
        qubit: usize,
        rng: &mut R,
    ) -> Result<(u8, StateVector), SimError> {
        let mut s = self.clone();
        let o = s.measure(qubit, rng)?;
        Ok((o, s))
    }

    /// `<self|other>`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64, SimError> {
        if self.n_qubits != other.n_qubits {
            return Err(SimError::DimensionMismatch(self.n_qubits, other.n_qubits));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }
}

/// Functional form of [`StateVector::apply`].
pub fn apply_gate(state: &StateVector, op: &GateOp) -> Result<StateVector, SimError> {
    let mut s = state.clone();
    s.apply(op)?;
    Ok(s)
}

/// Column `j` is the circuit applied to basis state `j`.
pub fn circuit_to_unitary(circuit: &Circuit) -> Result<UnitaryMatrix, SimError> {
    let n = circuit.n_qubits();
    if n > MAX_DENSE_QUBITS {
        return Err(SimError::TooManyQubits(n));
    }
    if let Some(i) = circuit.ops().iter().position(|op| matches!(op.gate(), Gate::Measure)) {
        return Err(SimError::Measurement(i));
    }
    let d = 1usize << n;
    let mut m = DMatrix::<Complex64>::zeros(d, d);
    for j in 0..d {
        let mut s = StateVector::basis(n, j)?;
        s.apply_circuit(circuit)?;
        m.set_column(j, &nalgebra::DVector::from_vec(s.amps));
    }
    Ok(UnitaryMatrix::new_unchecked(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Control, Gate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply(&GateOp::new(Gate::H, [0]).unwrap()).unwrap();
        assert!(close(s.amps[0], c(FRAC_1_SQRT_2, 0.0)));
        assert!(close(s.amps[1], c(FRAC_1_SQRT_2, 0.0)));
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        let mut s = StateVector::basis(2, 0b10).unwrap();
        s.apply(&GateOp::new(Gate::Cnot, [0, 1]).unwrap()).unwrap();
        assert_eq!(s, StateVector::basis(2, 0b11).unwrap());
    }

    #[test]
    fn rz_pi_on_one() {
        let mut s = StateVector::basis(1, 1).unwrap();
        s.apply(&GateOp::new(Gate::Rz(PI), [0]).unwrap()).unwrap();
        assert!(close(s.amps[1], c(0.0, 1.0)));
    }

    #[test]
    fn open_control_acts_on_zero() {
        let op = GateOp::new(Gate::X, [1]).unwrap().with_control(Control::on_zero(0)).unwrap();
        let mut s = StateVector::basis(2, 0b00).unwrap();
        s.apply(&op).unwrap();
        assert_eq!(s, StateVector::basis(2, 0b01).unwrap());
        let mut s = StateVector::basis(2, 0b10).unwrap();
        s.apply(&op).unwrap();
        assert_eq!(s, StateVector::basis(2, 0b10).unwrap());
    }

    #[test]
    fn projection_of_bell_state() {
        let mut s = StateVector::zero(2).unwrap();
        s.apply(&GateOp::new(Gate::H, [0]).unwrap()).unwrap();
        s.apply(&GateOp::new(Gate::Cnot, [0, 1]).unwrap()).unwrap();
        let (p, post) = s.project_qubit(0, 0).unwrap();
        assert!((p - 0.5).abs() < 1e-14);
        assert_eq!(post.amplitudes()[0], c(1.0, 0.0));
        assert!(s.project_qubit(0, 1).unwrap().1.amplitudes()[3].re > 0.999_999);
    }

    #[test]
    fn projection_of_plus_zero_onto_one() {
        let s = StateVector::product("+0").unwrap();
        let (p, post) = s.project_qubit(0, 1).unwrap();
        assert!((p - 0.5).abs() < 1e-14);
        assert!(close(post.amplitudes()[0b10], c(1.0, 0.0)));
    }

    #[test]
    fn zero_probability_branch_is_an_error() {
        let s = StateVector::zero(2).unwrap();
        assert!(matches!(s.project_qubit(1, 1), Err(SimError::ZeroProbability { .. })));
        let (p, same) = s.project_qubit(1, 0).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(same, s);
    }

    #[test]
    fn sampling_frequency_and_replay() {
        let plus = StateVector::product("+").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ones: usize =
            (0..10_000).map(|_| plus.sample_measurement(0, &mut rng).unwrap().0 as usize).sum();
        assert!((ones as f64 / 1e4 - 0.5).abs() < 0.015);

        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64).map(|_| plus.sample_measurement(0, &mut rng).unwrap().0).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));

        let one = StateVector::basis(1, 1).unwrap();
        assert!((0..100).all(|_| one.sample_measurement(0, &mut rng).unwrap().0 == 1));
    }

    #[test]
    fn inner_products() {
        let zero = StateVector::zero(1).unwrap();
        let one = StateVector::basis(1, 1).unwrap();
        let plus = StateVector::product("+").unwrap();
        assert!(close(plus.inner_product(&plus).unwrap(), c(1.0, 0.0)));
        assert!(close(zero.inner_product(&one).unwrap(), c(0.0, 0.0)));
        assert!(close(zero.inner_product(&plus).unwrap(), c(FRAC_1_SQRT_2, 0.0)));
        assert!(zero.inner_product(&StateVector::zero(2).unwrap()).is_err());
    }

    #[test]
    fn unitary_of_cnot_and_empty() {
        let empty = Circuit::new(2).unwrap();
        assert_eq!(circuit_to_unitary(&empty).unwrap(), UnitaryMatrix::identity(2));
        let mut cx = Circuit::new(2).unwrap();
        cx.cnot(0, 1).unwrap();
        let u = circuit_to_unitary(&cx).unwrap();
        let one = c(1.0, 0.0);
        for (r, col) in [(0, 0), (1, 1), (3, 2), (2, 3)] {
            assert_eq!(u.matrix()[(r, col)], one);
        }
    }

    #[test]
    fn dense_kernel_matches_two_qubit_kernel() {
        let mut a = Circuit::new(3).unwrap();
        a.h(0).unwrap().rzz(2, 0, 0.7).unwrap();
        let rzz = circuit_to_unitary(&{
            let mut c = Circuit::new(2).unwrap();
            c.rzz(0, 1, 0.7).unwrap();
            c
        })
        .unwrap();
        let mut b = Circuit::new(3).unwrap();
        b.h(0).unwrap().unitary(&[2, 0], rzz).unwrap();
        let ua = circuit_to_unitary(&a).unwrap();
        let ub = circuit_to_unitary(&b).unwrap();
        assert!((ua.matrix() - ub.matrix()).norm() < 1e-12);
    }

    #[test]
    fn unitary_checks() {
        let bad = DMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!(matches!(UnitaryMatrix::new(bad), Err(SimError::NotUnitary(_))));
        let odd = DMatrix::<Complex64>::identity(3, 3);
        assert!(matches!(UnitaryMatrix::new(odd), Err(SimError::BadMatrixShape { .. })));
    }

    #[test]
    fn guards() {
        let mut s = StateVector::zero(2).unwrap();
        assert!(s.apply(&GateOp::new(Gate::H, [2]).unwrap()).is_err());
        let mut m = Circuit::new(1).unwrap();
        m.measure(0).unwrap();
        assert!(matches!(circuit_to_unitary(&m), Err(SimError::Measurement(0))));
        assert!(matches!(
            circuit_to_unitary(&Circuit::new(13).unwrap()),
            Err(SimError::TooManyQubits(13))
        ));
        assert!(StateVector::from_amplitudes(vec![c(1.0, 0.0); 2]).is_err());
        assert!(StateVector::product("0x").is_err());
    }
}
