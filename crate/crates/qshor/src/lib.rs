//! Statevector simulation of order-finding based factoring.
//!
//! The crate pairs a dense multi-register statevector simulator (layouts,
//! gates, measurements, POVMs, state selection) with exact integer
//! arithmetic (gcd traces, modular exponentiation, continued fractions) and
//! two end-to-end factoring pipelines: the usual measure-and-reduce flow
//! and a quantum-oracle flow in which a superposed period register is
//! driven to a questioned value by an EPR-mediated selection protocol and a
//! NOT/OR circuit reads off whether the residue registers collapsed to 1.
//!
//! ```
//! use qshor::pipelines::{shor_factor, ShorConfig};
//!
//! let cfg = ShorConfig { rng_seed: 7, ..ShorConfig::default() };
//! let result = shor_factor(15, &cfg).unwrap();
//! assert_eq!(result.factors, Some((3, 5)));
//! ```

pub mod cli;
pub mod error;
pub mod gates;
pub mod measurement;
pub mod numtheory;
pub mod pipelines;
pub mod statevector;

pub use error::{Error, Result};
pub use measurement::{MeasurementRecord, Povm, SelectionProtocolTrace};
pub use numtheory::{GcdTrace, PeriodCandidate};
pub use pipelines::{FactoringResult, QoConfig, ShorConfig};
pub use statevector::{BasisIndex, RegisterLayout, StateVector};
