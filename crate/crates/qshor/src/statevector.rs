//! Dense complex statevector over a named multi-register qubit layout.
//!
//! Bit convention, fixed for every golden value in the test suite: registers
//! are declared most-significant-first, so the first span occupies the top
//! bits of the flat amplitude index. Within a register the value is stored
//! in ordinary binary, most significant bit at the span's highest qubit.
//! Global qubit `i` is bit `1 << i` of the flat index.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default ceiling on total qubits (2^24 amplitudes, about 256 MiB).
pub const DEFAULT_QUBIT_BUDGET: usize = 24;

/// Tolerance on the unit-norm invariant at public operation boundaries.
pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Span {
    name: String,
    width: usize,
    /// Number of qubits below this span in the flat index.
    offset: usize,
}

/// Named, contiguous, disjoint qubit spans covering the whole system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    spans: Vec<Span>,
    total: usize,
    budget: usize,
}

impl RegisterLayout {
    /// Layout under the default qubit budget.
    pub fn new(spans: &[(&str, usize)]) -> Result<Self> {
        Self::with_budget(spans, DEFAULT_QUBIT_BUDGET)
    }

    /// Layout under an explicit qubit budget.
    pub fn with_budget(spans: &[(&str, usize)], budget: usize) -> Result<Self> {
        let total: usize = spans.iter().map(|(_, w)| w).sum();
        if total > budget {
            return Err(Error::QubitBudget {
                requested: total,
                budget,
            });
        }
        let mut built = Vec::with_capacity(spans.len());
        let mut below = total;
        for (name, width) in spans {
            if *width == 0 {
                return Err(Error::EmptyRegister);
            }
            if built.iter().any(|s: &Span| s.name == *name) {
                return Err(Error::DuplicateRegister((*name).to_string()));
            }
            below -= width;
            built.push(Span {
                name: (*name).to_string(),
                width: *width,
                offset: below,
            });
        }
        Ok(RegisterLayout {
            spans: built,
            total,
            budget,
        })
    }

    pub fn total_qubits(&self) -> usize {
        self.total
    }

    pub fn dimension(&self) -> usize {
        1usize << self.total
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn register_names(&self) -> impl Iterator<Item = &str> {
        self.spans.iter().map(|s| s.name.as_str())
    }

    fn span(&self, name: &str) -> Result<&Span> {
        self.spans
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn width(&self, name: &str) -> Result<usize> {
        Ok(self.span(name)?.width)
    }

    /// Global index of the register's least significant qubit.
    pub fn qubit_offset(&self, name: &str) -> Result<usize> {
        Ok(self.span(name)?.offset)
    }

    /// Value the register holds in flat basis index `index`.
    pub fn value_of(&self, index: usize, name: &str) -> Result<u64> {
        let s = self.span(name)?;
        Ok(((index >> s.offset) as u64) & ((1u64 << s.width) - 1))
    }

    /// `index` with the register's bits replaced by `value`.
    pub fn index_with_value(&self, index: usize, name: &str, value: u64) -> Result<usize> {
        let s = self.span(name)?;
        if value >> s.width != 0 {
            return Err(Error::ValueOutOfRange {
                register: s.name.clone(),
                width: s.width,
                value,
            });
        }
        let mask = (((1u64 << s.width) - 1) as usize) << s.offset;
        Ok((index & !mask) | ((value as usize) << s.offset))
    }

    /// Flat index of a full basis assignment.
    pub fn pack(&self, basis: &BasisIndex) -> Result<usize> {
        let mut index = 0usize;
        for (name, value) in &basis.values {
            index = self.index_with_value(index, name, *value)?;
        }
        Ok(index)
    }

    /// Per-register values of a flat index, in declaration order.
    pub fn unpack(&self, index: usize) -> BasisIndex {
        BasisIndex {
            values: self
                .spans
                .iter()
                .map(|s| {
                    (
                        s.name.clone(),
                        ((index >> s.offset) as u64) & ((1u64 << s.width) - 1),
                    )
                })
                .collect(),
        }
    }
}

/// A computational basis label: one value per register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisIndex {
    pub values: Vec<(String, u64)>,
}

impl BasisIndex {
    pub fn from_pairs(pairs: &[(&str, u64)]) -> Self {
        BasisIndex {
            values: pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<u64> {
        self.values
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
}

/// Normalized amplitude vector over a [`RegisterLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: RegisterLayout,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// All-zeros basis state.
    pub fn zero_state(layout: RegisterLayout) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); layout.dimension()];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector { layout, amps }
    }

    /// Basis state with the given register values.
    pub fn basis_state(layout: RegisterLayout, basis: &BasisIndex) -> Result<Self> {
        let index = layout.pack(basis)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); layout.dimension()];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector { layout, amps })
    }

    /// Wrap an amplitude vector, enforcing length and unit norm.
    pub fn from_amplitudes(layout: RegisterLayout, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != layout.dimension() {
            return Err(Error::AmplitudeLength {
                got: amps.len(),
                expected: layout.dimension(),
            });
        }
        let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(StateVector { layout, amps })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Probability of finding `register` at `value` (marginal over the rest).
    pub fn probability_of(&self, register: &str, value: u64) -> Result<f64> {
        let span_offset = self.layout.qubit_offset(register)?;
        let width = self.layout.width(register)?;
        if value >> width != 0 {
            return Err(Error::ValueOutOfRange {
                register: register.to_string(),
                width,
                value,
            });
        }
        let mask = (((1u64 << width) - 1) as usize) << span_offset;
        let target = (value as usize) << span_offset;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == target)
            .map(|(_, c)| c.norm_sqr())
            .sum())
    }

    /// Full marginal distribution of one register.
    pub fn register_distribution(&self, register: &str) -> Result<Vec<f64>> {
        let span_offset = self.layout.qubit_offset(register)?;
        let width = self.layout.width(register)?;
        let mut dist = vec![0.0f64; 1 << width];
        let mask = (1usize << width) - 1;
        for (i, c) in self.amps.iter().enumerate() {
            dist[(i >> span_offset) & mask] += c.norm_sqr();
        }
        Ok(dist)
    }

    /// `|<self|other>|^2`; both states must share a layout.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        let inner: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(inner.norm_sqr())
    }

    /// Project onto `register = value` and renormalize. Returns the new
    /// state and the pre-projection probability. An (essentially) zero
    /// probability is reported as `SelectionImpossible`.
    pub(crate) fn collapse_register(&self, register: &str, value: u64) -> Result<(StateVector, f64)> {
        let span_offset = self.layout.qubit_offset(register)?;
        let width = self.layout.width(register)?;
        if value >> width != 0 {
            return Err(Error::ValueOutOfRange {
                register: register.to_string(),
                width,
                value,
            });
        }
        let mask = (((1u64 << width) - 1) as usize) << span_offset;
        let target = (value as usize) << span_offset;
        let weight: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == target)
            .map(|(_, c)| c.norm_sqr())
            .sum();
        if weight < crate::measurement::MIN_SELECTION_WEIGHT {
            return Err(Error::SelectionImpossible { r0: value });
        }
        let scale = 1.0 / weight.sqrt();
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i & mask == target {
                    c * scale
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Ok((
            StateVector {
                layout: self.layout.clone(),
                amps,
            },
            weight,
        ))
    }

    /// Debug dump: one line per amplitude, `index re im`, sorted by index,
    /// 12 significant digits.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.amps.iter().enumerate() {
            out.push_str(&format!("{} {:.11e} {:.11e}\n", i, c.re, c.im));
        }
        out
    }
}
