//! Unitary operations on [`StateVector`]s: single-qubit Hadamard and NOT,
//! controlled phase and controlled NOT, the Hadamard/controlled-phase
//! product realizing the q-point Fourier transform on a register, the
//! modular-exponentiation transform, a value-dependent phase ramp, and the
//! classical NOT/OR readout circuit used by the oracle pipeline.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numtheory;
use crate::statevector::StateVector;

/// A finite phase in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseAngle(pub f64);

impl PhaseAngle {
    pub fn radians(self) -> f64 {
        self.0
    }
}

/// Elementary gate on named qubit indices (global, LSB = 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateOp {
    Hadamard { target: usize },
    ControlledPhase { control: usize, target: usize, angle: PhaseAngle },
    Not { target: usize },
    Cnot { control: usize, target: usize },
}

fn check_qubit(state: &StateVector, q: usize) -> Result<()> {
    if q >= state.layout().total_qubits() {
        return Err(Error::QubitOutOfRange(q));
    }
    Ok(())
}

/// Apply one elementary gate in place. Norm is preserved.
pub fn apply_gate(state: &mut StateVector, gate: &GateOp) -> Result<()> {
    match *gate {
        GateOp::Hadamard { target } => {
            check_qubit(state, target)?;
            let mask = 1usize << target;
            let h = 1.0 / 2f64.sqrt();
            let amps = state.amplitudes_mut();
            for i in 0..amps.len() {
                if i & mask == 0 {
                    let a0 = amps[i];
                    let a1 = amps[i | mask];
                    amps[i] = (a0 + a1) * h;
                    amps[i | mask] = (a0 - a1) * h;
                }
            }
        }
        GateOp::ControlledPhase { control, target, angle } => {
            check_qubit(state, control)?;
            check_qubit(state, target)?;
            if control == target {
                return Err(Error::DuplicateQubit(control));
            }
            if !angle.0.is_finite() {
                return Err(Error::NonFinitePhase);
            }
            let both = (1usize << control) | (1usize << target);
            let phase = Complex64::from_polar(1.0, angle.0);
            let amps = state.amplitudes_mut();
            for i in 0..amps.len() {
                if i & both == both {
                    amps[i] *= phase;
                }
            }
        }
        GateOp::Not { target } => {
            check_qubit(state, target)?;
            let mask = 1usize << target;
            let amps = state.amplitudes_mut();
            for i in 0..amps.len() {
                if i & mask == 0 {
                    amps.swap(i, i | mask);
                }
            }
        }
        GateOp::Cnot { control, target } => {
            check_qubit(state, control)?;
            check_qubit(state, target)?;
            if control == target {
                return Err(Error::DuplicateQubit(control));
            }
            let c = 1usize << control;
            let t = 1usize << target;
            let amps = state.amplitudes_mut();
            for i in 0..amps.len() {
                if i & c == c && i & t == 0 {
                    amps.swap(i, i | t);
                }
            }
        }
    }
    Ok(())
}

/// Swap amplitudes so the register's qubit significance is mirrored.
///
/// The reversal is an involution on indices, so it runs in place.
fn mirror_register_bits(state: &mut StateVector, register: &str) -> Result<()> {
    let offset = state.layout().qubit_offset(register)?;
    let width = state.layout().width(register)?;
    if width == 1 {
        return Ok(());
    }
    let mask = ((1usize << width) - 1) << offset;
    let amps = state.amplitudes_mut();
    for i in 0..amps.len() {
        let v = (i & mask) >> offset;
        let mut rev = 0usize;
        for b in 0..width {
            rev |= ((v >> b) & 1) << (width - 1 - b);
        }
        let j = (i & !mask) | (rev << offset);
        if i < j {
            amps.swap(i, j);
        }
    }
    Ok(())
}

/// The q-point Fourier transform on one register, built from the
/// Hadamard/controlled-phase ladder applied top qubit down with angles
/// `pi / 2^m`, followed by a mirror of the register's qubit significance.
///
/// The mirror replaces a terminal swap network and makes the operation act
/// on register values directly: on input `|x>` the amplitude at `|t>` is
/// `exp(2*pi*i*t*x/q) / sqrt(q)`, and on `|0>` the register becomes the
/// uniform superposition.
pub fn apply_qft(state: &mut StateVector, register: &str) -> Result<()> {
    let offset = state.layout().qubit_offset(register)?;
    let width = state.layout().width(register)?;
    for j in (0..width).rev() {
        apply_gate(state, &GateOp::Hadamard { target: offset + j })?;
        for k in (0..j).rev() {
            apply_gate(
                state,
                &GateOp::ControlledPhase {
                    control: offset + k,
                    target: offset + j,
                    angle: PhaseAngle(PI / (1u64 << (j - k)) as f64),
                },
            )?;
        }
    }
    mirror_register_bits(state, register)
}

/// Inverse of [`apply_qft`]: mirror first, then the reversed ladder with
/// negated angles.
pub fn apply_qft_inverse(state: &mut StateVector, register: &str) -> Result<()> {
    mirror_register_bits(state, register)?;
    let offset = state.layout().qubit_offset(register)?;
    let width = state.layout().width(register)?;
    for j in 0..width {
        for k in 0..j {
            apply_gate(
                state,
                &GateOp::ControlledPhase {
                    control: offset + k,
                    target: offset + j,
                    angle: PhaseAngle(-PI / (1u64 << (j - k)) as f64),
                },
            )?;
        }
        apply_gate(state, &GateOp::Hadamard { target: offset + j })?;
    }
    Ok(())
}

/// The reversible embedding of `f(x) = base^x mod modulus`:
/// `|x>|y> -> |x>|y XOR f(x)>`. With the target at `|0>` this leaves
/// `|x>|f(x)>`; applying it twice is the identity.
pub fn apply_mod_exp(
    state: &mut StateVector,
    source: &str,
    target: &str,
    base: u64,
    modulus: u64,
) -> Result<()> {
    apply_mod_exp_multi(state, source, &[target], &[base], modulus)
}

/// [`apply_mod_exp`] over several target registers at once, one base per
/// register, all controlled on the same source value.
pub fn apply_mod_exp_multi(
    state: &mut StateVector,
    source: &str,
    targets: &[&str],
    bases: &[u64],
    modulus: u64,
) -> Result<()> {
    if modulus < 2 {
        return Err(Error::BadModulus(modulus));
    }
    if targets.is_empty() || targets.len() != bases.len() {
        return Err(Error::TargetBaseMismatch {
            targets: targets.len(),
            bases: bases.len(),
        });
    }
    let src_offset = state.layout().qubit_offset(source)?;
    let src_width = state.layout().width(source)?;
    let src_mask = (1usize << src_width) - 1;
    let needed = numtheory::qubits_to_hold(modulus);
    for (&target, &base) in targets.iter().zip(bases) {
        if numtheory::gcd_value(base, modulus) != 1 {
            return Err(Error::NotCoprime { a: base, n: modulus });
        }
        let tgt_offset = state.layout().qubit_offset(target)?;
        let tgt_width = state.layout().width(target)?;
        if tgt_width < needed {
            return Err(Error::TargetTooNarrow {
                target: target.to_string(),
                n: modulus,
            });
        }
        // residues for every source value
        let mut table = Vec::with_capacity(1 << src_width);
        let mut acc: u128 = 1;
        for _ in 0..(1usize << src_width) {
            table.push(acc as u64);
            acc = acc * base as u128 % modulus as u128;
        }
        let tgt_mask = (1usize << tgt_width) - 1;
        let amps = state.amplitudes_mut();
        for i in 0..amps.len() {
            let x = (i >> src_offset) & src_mask;
            let y = (i >> tgt_offset) & tgt_mask;
            let y2 = y ^ table[x] as usize;
            if y2 > y {
                let j = (i & !(tgt_mask << tgt_offset)) | (y2 << tgt_offset);
                amps.swap(i, j);
            }
        }
    }
    Ok(())
}

/// Multiply each basis amplitude by `exp(-i * omega * r)` where `r` is the
/// register's value. `omega = 0` is the identity; every phase is unimodular
/// so the norm never changes.
pub fn apply_phase_ramp(state: &mut StateVector, register: &str, omega: f64) -> Result<()> {
    if !omega.is_finite() {
        return Err(Error::NonFinitePhase);
    }
    let offset = state.layout().qubit_offset(register)?;
    let width = state.layout().width(register)?;
    let mask = (1usize << width) - 1;
    let amps = state.amplitudes_mut();
    for i in 0..amps.len() {
        let r = ((i >> offset) & mask) as f64;
        amps[i] *= Complex64::from_polar(1.0, -omega * r);
    }
    Ok(())
}

/// One step of the classical readout circuit.
///
/// `Not(i)` inverts bit `i`; `Or(i, j)` folds bit `j` into bit `i`. A pure
/// NOT/XOR network computes only affine functions of the input bits and so
/// cannot decide "value equals 1" for widths above one; the OR fold is the
/// minimal zero-test completing the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutGate {
    Not(usize),
    Or(usize, usize),
}

impl fmt::Display for ReadoutGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReadoutGate::Not(i) => write!(f, "NOT b{i}"),
            ReadoutGate::Or(i, j) => write!(f, "OR b{i} b{j}"),
        }
    }
}

/// Gate list deciding "the register encodes the integer 1": invert bit 0,
/// then fold every remaining bit into bit 0.
pub fn readout_gates(width: usize) -> Vec<ReadoutGate> {
    let mut gates = vec![ReadoutGate::Not(0)];
    for b in 1..width {
        gates.push(ReadoutGate::Or(0, b));
    }
    gates
}

/// Run the readout circuit on a register value. Returns the answer bit:
/// 0 (affirmative) exactly when `value == 1`.
pub fn readout_is_one(value: u64, width: usize) -> u8 {
    debug_assert!(width >= 1 && value >> width == 0);
    let mut bits: Vec<u8> = (0..width).map(|b| ((value >> b) & 1) as u8).collect();
    for gate in readout_gates(width) {
        match gate {
            ReadoutGate::Not(i) => bits[i] ^= 1,
            ReadoutGate::Or(i, j) => bits[i] |= bits[j],
        }
    }
    bits[0]
}

/// The readout gate list in its dump format, one gate per line.
pub fn readout_dump(width: usize) -> String {
    readout_gates(width)
        .iter()
        .map(|g| format!("{g}\n"))
        .collect()
}
