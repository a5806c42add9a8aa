//! Measurement machinery: computational-basis register measurement, Bell
//! measurement on a qubit pair, general POVMs with square-root Kraus
//! post-states, and quantum state selection realized two ways — idealized
//! single-shot post-selection ([`select_state`]) and the explicit
//! EPR-mediated accept/retry protocol ([`telepovm_select`]). The two are
//! pinned to the same semantics by an equivalence test.
//!
//! Every operation draws randomness from an explicit `Rng`, so results are
//! deterministic given `(state, seed)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{apply_gate, GateOp};
use crate::statevector::{RegisterLayout, StateVector};

/// Below this weight a selection target counts as absent.
pub const MIN_SELECTION_WEIGHT: f64 = 1e-12;

/// Maximum accept/retry rounds before [`telepovm_select`] gives up.
pub const DEFAULT_RETRY_BUDGET: u64 = 1_000_000;

/// POVM completeness: the effect sum may deviate from identity by at most
/// this much in max-norm.
pub const POVM_COMPLETENESS_TOLERANCE: f64 = 1e-8;

const HERMITICITY_TOLERANCE: f64 = 1e-10;
const EIGENVALUE_FLOOR: f64 = -1e-12;

/// Outcome of a single measurement: the sampled label, its Born probability,
/// and the renormalized post-measurement state.
#[derive(Debug, Clone)]
pub struct MeasurementRecord {
    pub outcome: u64,
    pub probability: f64,
    pub post_state: StateVector,
}

fn sample_outcome<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let draw: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_nonzero = i;
        }
        acc += p;
        if draw < acc {
            return i;
        }
    }
    // rounding left a sliver at the top; land on the last live outcome
    last_nonzero
}

/// Computational-basis measurement of one register, Born-rule sampled.
pub fn measure_register<R: Rng>(
    state: &StateVector,
    register: &str,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    let dist = state.register_distribution(register)?;
    let outcome = sample_outcome(&dist, rng) as u64;
    let (post_state, probability) = state.collapse_register(register, outcome)?;
    Ok(MeasurementRecord {
        outcome,
        probability,
        post_state,
    })
}

/// Measure one qubit in place. Returns the outcome bit and its probability.
pub(crate) fn measure_qubit<R: Rng>(
    state: &mut StateVector,
    qubit: usize,
    rng: &mut R,
) -> Result<(u8, f64)> {
    if qubit >= state.layout().total_qubits() {
        return Err(Error::QubitOutOfRange(qubit));
    }
    let mask = 1usize << qubit;
    let mut branch = [0.0f64; 2];
    for (i, c) in state.amplitudes().iter().enumerate() {
        branch[usize::from(i & mask != 0)] += c.norm_sqr();
    }
    let outcome = sample_outcome(&branch, rng) as u8;
    let prob = branch[outcome as usize];
    let keep = if outcome == 0 { 0 } else { mask };
    let scale = 1.0 / prob.sqrt();
    let amps = state.amplitudes_mut();
    for i in 0..amps.len() {
        if i & mask == keep {
            amps[i] *= scale;
        } else {
            amps[i] = Complex64::new(0.0, 0.0);
        }
    }
    Ok((outcome, prob))
}

/// Bell outcome labels: 0 = Phi+, 1 = Phi-, 2 = Psi+, 3 = Psi-.
pub const BELL_PHI_PLUS: u64 = 0;
pub const BELL_PHI_MINUS: u64 = 1;
pub const BELL_PSI_PLUS: u64 = 2;
pub const BELL_PSI_MINUS: u64 = 3;

/// Joint measurement of two qubits in the Bell basis.
pub fn bell_measure<R: Rng>(
    state: &StateVector,
    qubit_a: usize,
    qubit_b: usize,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    let total = state.layout().total_qubits();
    if qubit_a >= total {
        return Err(Error::QubitOutOfRange(qubit_a));
    }
    if qubit_b >= total {
        return Err(Error::QubitOutOfRange(qubit_b));
    }
    if qubit_a == qubit_b {
        return Err(Error::DuplicateQubit(qubit_a));
    }
    let ma = 1usize << qubit_a;
    let mb = 1usize << qubit_b;
    let half = 0.5f64;

    let amps = state.amplitudes();
    let mut probs = [0.0f64; 4];
    for i in 0..amps.len() {
        if i & (ma | mb) != 0 {
            continue;
        }
        let c00 = amps[i];
        let c01 = amps[i | mb];
        let c10 = amps[i | ma];
        let c11 = amps[i | ma | mb];
        probs[0] += (c00 + c11).norm_sqr() * half;
        probs[1] += (c00 - c11).norm_sqr() * half;
        probs[2] += (c01 + c10).norm_sqr() * half;
        probs[3] += (c01 - c10).norm_sqr() * half;
    }
    let outcome = sample_outcome(&probs, rng);
    let probability = probs[outcome];

    let mut post = state.clone();
    let new = post.amplitudes_mut();
    let inv_sqrt2 = 1.0 / 2f64.sqrt();
    for i in 0..new.len() {
        if i & (ma | mb) != 0 {
            continue;
        }
        let c00 = new[i];
        let c01 = new[i | mb];
        let c10 = new[i | ma];
        let c11 = new[i | ma | mb];
        let zero = Complex64::new(0.0, 0.0);
        let (n00, n01, n10, n11) = match outcome {
            0 => {
                let beta = (c00 + c11) * inv_sqrt2;
                (beta * inv_sqrt2, zero, zero, beta * inv_sqrt2)
            }
            1 => {
                let beta = (c00 - c11) * inv_sqrt2;
                (beta * inv_sqrt2, zero, zero, -beta * inv_sqrt2)
            }
            2 => {
                let beta = (c01 + c10) * inv_sqrt2;
                (zero, beta * inv_sqrt2, beta * inv_sqrt2, zero)
            }
            _ => {
                let beta = (c01 - c10) * inv_sqrt2;
                (zero, beta * inv_sqrt2, -beta * inv_sqrt2, zero)
            }
        };
        new[i] = n00;
        new[i | mb] = n01;
        new[i | ma] = n10;
        new[i | ma | mb] = n11;
    }
    let norm = post.norm_sqr().sqrt();
    for c in post.amplitudes_mut() {
        *c /= norm;
    }
    Ok(MeasurementRecord {
        outcome: outcome as u64,
        probability,
        post_state: post,
    })
}

/// A positive operator-valued measure: Hermitian positive semidefinite
/// effects summing to identity. The effect count may exceed the dimension.
#[derive(Debug, Clone)]
pub struct Povm {
    effects: Vec<DMatrix<Complex64>>,
    dim: usize,
}

impl Povm {
    /// Validate and wrap an effect set.
    pub fn new(effects: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::NoEffects);
        }
        let dim = effects[0].nrows();
        for (index, e) in effects.iter().enumerate() {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::EffectShape);
            }
            for i in 0..dim {
                for j in 0..dim {
                    if (e[(i, j)] - e[(j, i)].conj()).norm() > HERMITICITY_TOLERANCE {
                        return Err(Error::EffectNotHermitian { index });
                    }
                }
            }
            let eig = e.clone().symmetric_eigen();
            if let Some(min) = eig
                .eigenvalues
                .iter()
                .cloned()
                .min_by(|a, b| a.partial_cmp(b).unwrap())
            {
                if min < EIGENVALUE_FLOOR {
                    return Err(Error::EffectNotPositive { index, value: min });
                }
            }
        }
        let mut sum = DMatrix::<Complex64>::zeros(dim, dim);
        for e in &effects {
            sum += e;
        }
        let mut deviation = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let target = if i == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                deviation = deviation.max((sum[(i, j)] - target).norm());
            }
        }
        if deviation > POVM_COMPLETENESS_TOLERANCE {
            return Err(Error::EffectsIncomplete { deviation });
        }
        Ok(Povm { effects, dim })
    }

    /// Computational-basis projectors: the PVM special case.
    pub fn computational(dim: usize) -> Self {
        let effects = (0..dim)
            .map(|k| {
                let mut m = DMatrix::<Complex64>::zeros(dim, dim);
                m[(k, k)] = Complex64::new(1.0, 0.0);
                m
            })
            .collect();
        Povm { effects, dim }
    }

    pub fn effects(&self) -> &[DMatrix<Complex64>] {
        &self.effects
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }
}

/// Hermitian square root via eigendecomposition; tiny negative eigenvalues
/// from rounding are clamped to zero.
fn sqrt_effect(e: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = e.clone().symmetric_eigen();
    let dim = e.nrows();
    let mut d = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        d[(i, i)] = Complex64::new(eig.eigenvalues[i].max(0.0).sqrt(), 0.0);
    }
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Measure one register with a POVM: outcome `i` with probability
/// `<psi|E_i|psi>` marginalized over the other registers; the post-state
/// applies the Kraus operator `sqrt(E_i)` and renormalizes.
pub fn povm_measure<R: Rng>(
    state: &StateVector,
    register: &str,
    povm: &Povm,
    rng: &mut R,
) -> Result<MeasurementRecord> {
    let offset = state.layout().qubit_offset(register)?;
    let width = state.layout().width(register)?;
    let d = 1usize << width;
    if povm.dim != d {
        return Err(Error::PovmDimension {
            effect: povm.dim,
            register: d,
        });
    }
    let dim = state.layout().dimension();
    let amps = state.amplitudes();
    let high_count = dim >> (offset + width);
    let low_count = 1usize << offset;

    let mut probs = vec![0.0f64; povm.len()];
    for high in 0..high_count {
        for low in 0..low_count {
            let base = (high << (offset + width)) | low;
            for (pi, e) in povm.effects.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..d {
                    let vj = amps[base | (j << offset)];
                    if vj.norm_sqr() == 0.0 {
                        continue;
                    }
                    for k in 0..d {
                        acc += vj.conj() * e[(j, k)] * amps[base | (k << offset)];
                    }
                }
                probs[pi] += acc.re;
            }
        }
    }
    for p in &mut probs {
        *p = p.max(0.0);
    }
    let outcome = sample_outcome(&probs, rng);
    let probability = probs[outcome];

    let kraus = sqrt_effect(&povm.effects[outcome]);
    let mut post = state.clone();
    let new = post.amplitudes_mut();
    let mut block = vec![Complex64::new(0.0, 0.0); d];
    for high in 0..high_count {
        for low in 0..low_count {
            let base = (high << (offset + width)) | low;
            for (j, b) in block.iter_mut().enumerate() {
                *b = new[base | (j << offset)];
            }
            for j in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    acc += kraus[(j, k)] * block[k];
                }
                new[base | (j << offset)] = acc;
            }
        }
    }
    let norm = post.norm_sqr().sqrt();
    for c in post.amplitudes_mut() {
        *c /= norm;
    }
    Ok(MeasurementRecord {
        outcome: outcome as u64,
        probability,
        post_state: post,
    })
}

/// Idealized quantum state selection: project `register` onto `r0` and
/// renormalize. Returns the post-state and the pre-projection weight.
/// Selecting a value carrying (essentially) no amplitude is an error.
pub fn select_state(state: &StateVector, register: &str, r0: u64) -> Result<(StateVector, f64)> {
    state.collapse_register(register, r0)
}

/// One per-qubit record of the selection protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub qubit: usize,
    pub bell: u8,
    pub pvm: u8,
    pub accepted: bool,
}

/// Protocol trace of a successful selection: one accepted record per
/// register qubit. Serializes as a JSON array.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SelectionProtocolTrace {
    pub records: Vec<SelectionRecord>,
}

const ANCILLA: &str = "telepovm_ancilla";

/// Quantum state selection through the explicit protocol, with the default
/// retry budget. See [`telepovm_select_with_budget`].
pub fn telepovm_select<R: Rng>(
    state: &StateVector,
    register: &str,
    r0: u64,
    rng: &mut R,
) -> Result<(StateVector, SelectionProtocolTrace, u64)> {
    telepovm_select_with_budget(state, register, r0, rng, DEFAULT_RETRY_BUDGET)
}

/// Drive `register` to the basis value `r0` by the explicit EPR protocol.
///
/// Per register qubit `i`, on a fresh copy of the input state:
/// an EPR pair (A, B) is adjoined and a classical selector bit is set to
/// bit `i` of `r0`; A interacts with the register qubit through a
/// controlled NOT; the A side is Bell-measured (controlled NOT, Hadamard,
/// then reading both qubits); the selector is folded onto B, and the B side
/// is read as a two-outcome PVM. The pair of outcomes is consistent with
/// the selector exactly when the PVM bit matches the Bell parity bit; any
/// inconsistency discards the state and retries the whole selection.
///
/// On acceptance of every qubit the register holds `|r0>` and the returned
/// state equals [`select_state`]'s output up to global phase. `attempts`
/// counts protocol rounds including the successful one, and the trace holds
/// the accepted per-qubit records.
pub fn telepovm_select_with_budget<R: Rng>(
    state: &StateVector,
    register: &str,
    r0: u64,
    rng: &mut R,
    retry_budget: u64,
) -> Result<(StateVector, SelectionProtocolTrace, u64)> {
    let width = state.layout().width(register)?;
    let weight = state.probability_of(register, r0)?;
    if weight < MIN_SELECTION_WEIGHT {
        return Err(Error::SelectionImpossible { r0 });
    }

    // original spans plus a two-qubit ancilla pair in the lowest bits
    let mut spans: Vec<(String, usize)> = state
        .layout()
        .register_names()
        .map(|n| (n.to_string(), state.layout().width(n).unwrap()))
        .collect();
    spans.push((ANCILLA.to_string(), 2));
    let span_refs: Vec<(&str, usize)> = spans.iter().map(|(n, w)| (n.as_str(), *w)).collect();
    let ext_layout = RegisterLayout::with_budget(&span_refs, state.layout().budget() + 2)?;

    let qubit_base = ext_layout.qubit_offset(register)?;
    let anc_b = 0usize; // B side of the pair
    let anc_a = 1usize; // A side of the pair

    let mut work = StateVector::zero_state(ext_layout);
    let dim = state.layout().dimension();

    for attempt in 1..=retry_budget {
        // fresh copy of the input, ancillas at |00>
        {
            let amps = work.amplitudes_mut();
            amps.fill(Complex64::new(0.0, 0.0));
            for (i, c) in state.amplitudes().iter().enumerate() {
                amps[i << 2] = *c;
            }
        }
        let mut records = Vec::with_capacity(width);
        let mut rejected = false;
        for i in 0..width {
            let selector = ((r0 >> i) & 1) as u8;
            let reg_qubit = qubit_base + i;

            // fresh EPR pair on the ancillas
            apply_gate(&mut work, &GateOp::Hadamard { target: anc_a })?;
            apply_gate(&mut work, &GateOp::Cnot { control: anc_a, target: anc_b })?;

            // A-side interaction, then the Bell measurement circuit
            apply_gate(&mut work, &GateOp::Cnot { control: reg_qubit, target: anc_a })?;
            apply_gate(&mut work, &GateOp::Hadamard { target: reg_qubit })?;
            let (u, _) = measure_qubit(&mut work, reg_qubit, rng)?;
            let (v, _) = measure_qubit(&mut work, anc_a, rng)?;
            let bell = (v << 1) | u;

            // B side: fold the classical selector onto B, then read it
            if selector == 1 {
                apply_gate(&mut work, &GateOp::Not { target: anc_b })?;
            }
            let (m, _) = measure_qubit(&mut work, anc_b, rng)?;

            let accepted = m == v;
            records.push(SelectionRecord {
                qubit: i,
                bell,
                pvm: m,
                accepted,
            });
            if !accepted {
                rejected = true;
                break;
            }
            // restore the register qubit to the selected bit and the
            // ancillas to |00> for the next round
            if u != selector {
                apply_gate(&mut work, &GateOp::Not { target: reg_qubit })?;
            }
            if v == 1 {
                apply_gate(&mut work, &GateOp::Not { target: anc_a })?;
            }
            if m == 1 {
                apply_gate(&mut work, &GateOp::Not { target: anc_b })?;
            }
        }
        if rejected {
            continue;
        }
        // ancillas are |00>; strip them
        let mut post = StateVector::zero_state(state.layout().clone());
        {
            let out = post.amplitudes_mut();
            let ext = work.amplitudes();
            for (i, slot) in out.iter_mut().enumerate().take(dim) {
                *slot = ext[i << 2];
            }
        }
        debug_assert!((post.norm_sqr() - 1.0).abs() < 1e-9);
        return Ok((post, SelectionProtocolTrace { records }, attempt));
    }
    Err(Error::RetryBudgetExhausted(retry_budget))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use crate::statevector::{BasisIndex, RegisterLayout};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn shor_state(a: u64, l: usize) -> StateVector {
        let layout = RegisterLayout::new(&[("first", l), ("second", 4)]).unwrap();
        let mut s = StateVector::zero_state(layout);
        gates::apply_qft(&mut s, "first").unwrap();
        gates::apply_mod_exp(&mut s, "first", "second", a, 15).unwrap();
        gates::apply_qft(&mut s, "first").unwrap();
        s
    }

    fn random_register_state(width: usize, seed: u64) -> StateVector {
        let layout = RegisterLayout::new(&[("r", width)]).unwrap();
        let mut r = rng(seed);
        loop {
            let mut amps: Vec<Complex64> = (0..(1usize << width))
                .map(|_| Complex64::new(r.gen::<f64>() - 0.5, r.gen::<f64>() - 0.5))
                .collect();
            let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            for a in &mut amps {
                *a /= norm;
            }
            if amps.iter().all(|c| c.norm_sqr() > 1e-4) {
                return StateVector::from_amplitudes(layout, amps).unwrap();
            }
        }
    }

    #[test]
    fn measuring_the_zero_state_is_deterministic() {
        let layout = RegisterLayout::new(&[("a", 2), ("b", 3)]).unwrap();
        let s = StateVector::zero_state(layout);
        for reg in ["a", "b"] {
            let rec = measure_register(&s, reg, &mut rng(1)).unwrap();
            assert_eq!(rec.outcome, 0);
            assert!((rec.probability - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn shor_state_first_register_distributions() {
        // base 7: equal quarters on 0, 2, 4, 6
        let s = shor_state(7, 3);
        for _ in 0..4 {
            let rec = measure_register(&s, "first", &mut rng(9)).unwrap();
            assert!([0, 2, 4, 6].contains(&rec.outcome));
            assert!((rec.probability - 0.25).abs() < 1e-9);
        }
        // base 11: equal halves on 0 and 4
        let s = shor_state(11, 3);
        let mut r = rng(3);
        for _ in 0..8 {
            let rec = measure_register(&s, "first", &mut r).unwrap();
            assert!([0, 4].contains(&rec.outcome));
            assert!((rec.probability - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn measurement_post_state_is_normalized_and_consistent() {
        let s = shor_state(7, 3);
        let rec = measure_register(&s, "first", &mut rng(5)).unwrap();
        assert!((rec.post_state.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(
            (rec.post_state.probability_of("first", rec.outcome).unwrap() - 1.0).abs() < 1e-12
        );
    }

    fn bell_pair_state() -> StateVector {
        let layout = RegisterLayout::new(&[("pair", 2)]).unwrap();
        let mut s = StateVector::zero_state(layout);
        apply_gate(&mut s, &GateOp::Hadamard { target: 1 }).unwrap();
        apply_gate(&mut s, &GateOp::Cnot { control: 1, target: 0 }).unwrap();
        s
    }

    #[test]
    fn bell_measure_on_a_bell_state_is_certain() {
        let s = bell_pair_state();
        for seed in 0..10 {
            let rec = bell_measure(&s, 1, 0, &mut rng(seed)).unwrap();
            assert_eq!(rec.outcome, BELL_PHI_PLUS);
            assert!((rec.probability - 1.0).abs() < 1e-12);
            assert!((rec.post_state.fidelity(&s).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bell_measure_on_00_splits_between_the_phi_states() {
        // |00> = (Phi+ + Phi-) / sqrt(2)
        let layout = RegisterLayout::new(&[("pair", 2)]).unwrap();
        let s = StateVector::zero_state(layout);
        let mut counts = [0u32; 4];
        let mut r = rng(17);
        for _ in 0..200 {
            let rec = bell_measure(&s, 1, 0, &mut r).unwrap();
            assert!((rec.probability - 0.5).abs() < 1e-12);
            counts[rec.outcome as usize] += 1;
        }
        assert_eq!(counts[2], 0);
        assert_eq!(counts[3], 0);
        assert!(counts[0] > 0 && counts[1] > 0);
    }

    #[test]
    fn bell_measure_marginals_match_born_within_three_sigma() {
        // |0>(|0>+|1>)/sqrt(2) in pair basis: c00 = c01 = 1/sqrt(2), so the
        // bell expansion puts weight 1/4 on every outcome
        let layout = RegisterLayout::new(&[("pair", 2)]).unwrap();
        let mut s = StateVector::zero_state(layout);
        apply_gate(&mut s, &GateOp::Hadamard { target: 0 }).unwrap();
        let expected = [0.25f64; 4];
        let shots = 10_000usize;
        let mut counts = [0usize; 4];
        let mut r = rng(23);
        for _ in 0..shots {
            let rec = bell_measure(&s, 1, 0, &mut r).unwrap();
            assert!((rec.probability - 0.25).abs() < 1e-12);
            counts[rec.outcome as usize] += 1;
        }
        for k in 0..4 {
            let p = expected[k];
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            let freq = counts[k] as f64 / shots as f64;
            assert!(
                (freq - p).abs() <= 3.0 * sigma,
                "outcome {k}: freq {freq}, p {p}"
            );
        }
    }

    #[test]
    fn bell_measure_rejects_a_repeated_qubit() {
        let s = bell_pair_state();
        assert!(matches!(
            bell_measure(&s, 1, 1, &mut rng(0)),
            Err(Error::DuplicateQubit(1))
        ));
    }

    fn trine_povm() -> Povm {
        let effects = (0..3)
            .map(|k| {
                let angle = k as f64 * std::f64::consts::PI / 3.0;
                let v = [angle.cos(), angle.sin()];
                let mut m = DMatrix::<Complex64>::zeros(2, 2);
                for i in 0..2 {
                    for j in 0..2 {
                        m[(i, j)] = Complex64::new(2.0 / 3.0 * v[i] * v[j], 0.0);
                    }
                }
                m
            })
            .collect();
        Povm::new(effects).unwrap()
    }

    #[test]
    fn computational_povm_matches_projective_measurement() {
        let s = shor_state(7, 3);
        let povm = Povm::computational(8);
        let dist = s.register_distribution("first").unwrap();
        let mut counts_a = vec![0usize; 8];
        let mut counts_b = vec![0usize; 8];
        let mut ra = rng(40);
        let mut rb = rng(40);
        for _ in 0..400 {
            let pa = povm_measure(&s, "first", &povm, &mut ra).unwrap();
            let pb = measure_register(&s, "first", &mut rb).unwrap();
            counts_a[pa.outcome as usize] += 1;
            counts_b[pb.outcome as usize] += 1;
            assert!((pa.probability - dist[pa.outcome as usize]).abs() < 1e-9);
        }
        assert_eq!(counts_a, counts_b);
    }

    #[test]
    fn trine_probabilities_on_zero() {
        // direct inner products: <0|E_k|0> = 2/3 * cos^2(k*pi/3)
        let povm = trine_povm();
        let layout = RegisterLayout::new(&[("q", 1)]).unwrap();
        let s = StateVector::zero_state(layout);
        let expect = [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];
        let mut seen = [false; 3];
        let mut r = rng(77);
        for _ in 0..200 {
            let rec = povm_measure(&s, "q", &povm, &mut r).unwrap();
            let k = rec.outcome as usize;
            assert!((rec.probability - expect[k]).abs() < 1e-12);
            seen[k] = true;
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn trine_frequencies_match_born_within_three_sigma() {
        let povm = trine_povm();
        let layout = RegisterLayout::new(&[("q", 1)]).unwrap();
        let s = StateVector::zero_state(layout);
        let expect = [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];
        let shots = 10_000usize;
        let mut counts = [0usize; 3];
        let mut r = rng(78);
        for _ in 0..shots {
            counts[povm_measure(&s, "q", &povm, &mut r).unwrap().outcome as usize] += 1;
        }
        for k in 0..3 {
            let sigma = (expect[k] * (1.0 - expect[k]) / shots as f64).sqrt();
            let freq = counts[k] as f64 / shots as f64;
            assert!((freq - expect[k]).abs() <= 3.0 * sigma, "outcome {k}");
        }
    }

    #[test]
    fn single_effect_identity_povm_is_a_no_op() {
        let mut ident = DMatrix::<Complex64>::zeros(2, 2);
        ident[(0, 0)] = Complex64::new(1.0, 0.0);
        ident[(1, 1)] = Complex64::new(1.0, 0.0);
        let povm = Povm::new(vec![ident]).unwrap();
        let s = random_register_state(1, 5);
        let rec = povm_measure(&s, "r", &povm, &mut rng(0)).unwrap();
        assert_eq!(rec.outcome, 0);
        assert!((rec.probability - 1.0).abs() < 1e-12);
        assert!((rec.post_state.fidelity(&s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn povm_validation_rejects_bad_sets() {
        // perturbed completeness
        let mut e0 = DMatrix::<Complex64>::zeros(2, 2);
        e0[(0, 0)] = Complex64::new(1.0 + 1e-6, 0.0);
        let mut e1 = DMatrix::<Complex64>::zeros(2, 2);
        e1[(1, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            Povm::new(vec![e0, e1]),
            Err(Error::EffectsIncomplete { .. })
        ));

        // deviations inside the tolerance are accepted
        let mut e0 = DMatrix::<Complex64>::zeros(2, 2);
        e0[(0, 0)] = Complex64::new(1.0 + 1e-9, 0.0);
        let mut e1 = DMatrix::<Complex64>::zeros(2, 2);
        e1[(1, 1)] = Complex64::new(1.0, 0.0);
        assert!(Povm::new(vec![e0, e1]).is_ok());

        // negative effect
        let mut neg = DMatrix::<Complex64>::zeros(2, 2);
        neg[(0, 0)] = Complex64::new(-0.5, 0.0);
        neg[(1, 1)] = Complex64::new(0.5, 0.0);
        let mut rest = DMatrix::<Complex64>::zeros(2, 2);
        rest[(0, 0)] = Complex64::new(1.5, 0.0);
        rest[(1, 1)] = Complex64::new(0.5, 0.0);
        assert!(matches!(
            Povm::new(vec![neg, rest]),
            Err(Error::EffectNotPositive { index: 0, .. })
        ));

        // non-hermitian
        let mut nh = DMatrix::<Complex64>::zeros(2, 2);
        nh[(0, 1)] = Complex64::new(0.5, 0.0);
        nh[(0, 0)] = Complex64::new(1.0, 0.0);
        nh[(1, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            Povm::new(vec![nh]),
            Err(Error::EffectNotHermitian { index: 0 })
        ));

        // dimension mismatch at measurement time
        let povm = Povm::computational(4);
        let s = random_register_state(1, 6);
        assert!(matches!(
            povm_measure(&s, "r", &povm, &mut rng(0)),
            Err(Error::PovmDimension { .. })
        ));

        assert!(matches!(Povm::new(vec![]), Err(Error::NoEffects)));
    }

    fn uniform_mod_exp_state() -> StateVector {
        // sum_r |r>|7^r mod 15> over r in 0..8
        let layout = RegisterLayout::new(&[("first", 3), ("second", 4)]).unwrap();
        let mut s = StateVector::zero_state(layout);
        gates::apply_qft(&mut s, "first").unwrap();
        gates::apply_mod_exp(&mut s, "first", "second", 7, 15).unwrap();
        s
    }

    #[test]
    fn select_state_on_the_uniform_mod_exp_state() {
        let s = uniform_mod_exp_state();
        let (post, weight) = select_state(&s, "first", 1).unwrap();
        assert!((weight - 0.125).abs() < 1e-12);
        let idx = post
            .layout()
            .pack(&BasisIndex::from_pairs(&[("first", 1), ("second", 7)]))
            .unwrap();
        assert!((post.amplitudes()[idx].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn select_state_is_idempotent() {
        let s = uniform_mod_exp_state();
        let (post, _) = select_state(&s, "first", 3).unwrap();
        let (again, weight) = select_state(&post, "first", 3).unwrap();
        assert!((weight - 1.0).abs() < 1e-12);
        assert!((again.fidelity(&post).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn select_state_rejects_absent_values() {
        let layout = RegisterLayout::new(&[("r", 2)]).unwrap();
        let s = StateVector::zero_state(layout);
        assert!(matches!(
            select_state(&s, "r", 3),
            Err(Error::SelectionImpossible { r0: 3 })
        ));
    }

    #[test]
    fn entangled_registers_collapse_with_the_selection() {
        // after selecting r0, each function register is exactly the residue
        let layout =
            RegisterLayout::new(&[("first", 3), ("second0", 4), ("second1", 4)]).unwrap();
        let mut s = StateVector::zero_state(layout);
        gates::apply_qft(&mut s, "first").unwrap();
        gates::apply_mod_exp_multi(&mut s, "first", &["second0", "second1"], &[7, 11], 15)
            .unwrap();
        let (post, _) = select_state(&s, "first", 3).unwrap();
        let f0 = crate::numtheory::mod_pow(7, 3, 15).unwrap();
        let f1 = crate::numtheory::mod_pow(11, 3, 15).unwrap();
        assert!((post.probability_of("second0", f0).unwrap() - 1.0).abs() < 1e-12);
        assert!((post.probability_of("second1", f1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn telepovm_matches_select_state_on_random_states() {
        for seed in 0..20u64 {
            let s = random_register_state(3, 1000 + seed);
            for r0 in 0..8u64 {
                let (ideal, weight) = select_state(&s, "r", r0).unwrap();
                let (got, trace, attempts) =
                    telepovm_select(&s, "r", r0, &mut rng(seed * 8 + r0)).unwrap();
                assert!(
                    got.fidelity(&ideal).unwrap() >= 1.0 - 1e-9,
                    "seed {seed} r0 {r0}"
                );
                assert!(attempts >= 1);
                assert!((0.0..=1.0).contains(&weight));
                assert_eq!(trace.records.len(), 3);
                assert!(trace.records.iter().all(|r| r.accepted));
                assert!(trace
                    .records
                    .iter()
                    .enumerate()
                    .all(|(i, r)| r.qubit == i && r.bell < 4 && r.pvm < 2));
            }
        }
    }

    #[test]
    fn telepovm_accepts_a_product_state_first_try_under_any_seed() {
        let layout = RegisterLayout::new(&[("r", 3), ("rest", 2)]).unwrap();
        let s = StateVector::basis_state(
            layout,
            &BasisIndex::from_pairs(&[("r", 5), ("rest", 2)]),
        )
        .unwrap();
        for seed in 0..50 {
            let (post, trace, attempts) =
                telepovm_select(&s, "r", 5, &mut rng(seed)).unwrap();
            assert_eq!(attempts, 1, "seed {seed}");
            assert!(trace.records.iter().all(|r| r.accepted));
            assert!((post.fidelity(&s).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn telepovm_attempts_follow_the_selection_weight() {
        // uniform three-qubit register: weight 1/8, attempts ~ geometric
        let layout = RegisterLayout::new(&[("r", 3)]).unwrap();
        let mut s = StateVector::zero_state(layout);
        gates::apply_qft(&mut s, "r").unwrap();
        let runs = 2000u64;
        let weight: f64 = 0.125;
        let mut total = 0u64;
        let mut r = rng(4242);
        for _ in 0..runs {
            let (_, _, attempts) = telepovm_select(&s, "r", 5, &mut r).unwrap();
            total += attempts;
        }
        let mean = total as f64 / runs as f64;
        let sigma = ((1.0 - weight) / (weight * weight)).sqrt();
        let bound = 3.0 * sigma / (runs as f64).sqrt();
        assert!(
            (mean - 1.0 / weight).abs() <= bound,
            "mean {mean}, expect {}, bound {bound}",
            1.0 / weight
        );
    }

    #[test]
    fn telepovm_fails_fast_on_absent_values_and_exhausts_budgets() {
        let layout = RegisterLayout::new(&[("r", 2)]).unwrap();
        let s = StateVector::zero_state(layout.clone());
        assert!(matches!(
            telepovm_select(&s, "r", 2, &mut rng(0)),
            Err(Error::SelectionImpossible { r0: 2 })
        ));

        // a sliver of amplitude big enough to pass the weight gate but far
        // too small to get accepted in three rounds
        let eps = 2e-6;
        let mut amps = vec![Complex64::new(0.0, 0.0); 4];
        amps[0] = Complex64::new((1.0f64 - eps * eps).sqrt(), 0.0);
        amps[2] = Complex64::new(eps, 0.0);
        let s = StateVector::from_amplitudes(layout, amps).unwrap();
        assert!(matches!(
            telepovm_select_with_budget(&s, "r", 2, &mut rng(1), 3),
            Err(Error::RetryBudgetExhausted(3))
        ));
    }

    #[test]
    fn selection_trace_serializes_as_an_array() {
        let trace = SelectionProtocolTrace {
            records: vec![SelectionRecord {
                qubit: 0,
                bell: 2,
                pvm: 1,
                accepted: true,
            }],
        };
        let json = serde_json::to_string(&trace).unwrap();
        assert_eq!(json, r#"[{"qubit":0,"bell":2,"pvm":1,"accepted":true}]"#);
        let back: SelectionProtocolTrace = serde_json::from_str(&json).unwrap();
        assert_eq!(back, trace);
    }
}
