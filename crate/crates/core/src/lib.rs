//! Controlled gate networks on a dense statevector simulator.
//!
//! Conventions used everywhere in the crate:
//!
//! * `Rx(θ) = exp(-iθX/2)`, `Ry(θ) = exp(-iθY/2)`, `Rz(θ) = exp(-iθZ/2)`
//! * `P(φ) = U1(φ) = diag(1, e^{iφ})`
//! * `U2(φ, λ) = U3(π/2, φ, λ)`, `U3(θ, φ, λ) = [[c, -e^{iλ}s], [e^{iφ}s, e^{i(φ+λ)}c]]`
//!   with `c = cos(θ/2)`, `s = sin(θ/2)`
//! * `RZZ(θ) = exp(-iθ Z⊗Z / 2)`
//! * qubit 0 is the most significant bit of a basis index, so `|q0 q1 ... >`
//!   reads left to right like a circuit diagram read top to bottom.

pub mod circuit;
pub mod fit;
mod exec;
pub mod noise;
pub mod pauli;
pub mod rng;
pub mod rodeo;
pub mod statevec;
pub mod transpile;
pub mod varsub;

pub use num_complex::Complex64;

pub use circuit::{Circuit, Control, Gate, GateNetwork, GateOp, NetworkMode, Polarity};

pub use pauli::{Pauli, PauliHamiltonian, PauliString, SpectrumResult};
pub use statevec::{StateVector, UnitaryMatrix};
pub use transpile::{GateCount, NativeGateSet};

