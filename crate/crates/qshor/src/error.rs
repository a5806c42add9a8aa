//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    // integer arithmetic
    #[error("gcd(0, 0) is undefined")]
    GcdUndefined,
    #[error("modulus must be at least 2, got {0}")]
    BadModulus(u64),
    #[error("{a} and {n} are not coprime")]
    NotCoprime { a: u64, n: u64 },
    #[error("base {a} must satisfy 1 <= a < {n}")]
    BaseOutOfRange { a: u64, n: u64 },
    #[error("measured value {t} must be below the register size {q}")]
    MeasurementOutOfRange { t: u64, q: u64 },
    #[error("{0} is not a power of two")]
    NotPowerOfTwo(u64),

    // register layout / statevector
    #[error("layout needs {requested} qubits, budget is {budget}")]
    QubitBudget { requested: usize, budget: usize },
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("duplicate register name `{0}`")]
    DuplicateRegister(String),
    #[error("register width must be at least 1")]
    EmptyRegister,
    #[error("register `{register}` of width {width} cannot hold value {value}")]
    ValueOutOfRange {
        register: String,
        width: usize,
        value: u64,
    },
    #[error("amplitude vector has length {got}, layout needs {expected}")]
    AmplitudeLength { got: usize, expected: usize },
    #[error("state norm {0} is not 1")]
    NotNormalized(f64),
    #[error("layout mismatch between states")]
    LayoutMismatch,

    // gates
    #[error("qubit index {0} out of range")]
    QubitOutOfRange(usize),
    #[error("gate needs distinct qubits, got {0} twice")]
    DuplicateQubit(usize),
    #[error("phase angle must be finite")]
    NonFinitePhase,
    #[error("target register `{target}` is too narrow for residues mod {n}")]
    TargetTooNarrow { target: String, n: u64 },
    #[error("got {targets} target registers and {bases} bases")]
    TargetBaseMismatch { targets: usize, bases: usize },

    // measurement
    #[error("povm needs at least one effect")]
    NoEffects,
    #[error("povm effects must be square matrices of one common dimension")]
    EffectShape,
    #[error("povm effect {index} is not hermitian")]
    EffectNotHermitian { index: usize },
    #[error("povm effect {index} has negative eigenvalue {value}")]
    EffectNotPositive { index: usize, value: f64 },
    #[error("povm effects sum deviates from identity by {deviation}")]
    EffectsIncomplete { deviation: f64 },
    #[error("povm dimension {effect} does not match register dimension {register}")]
    PovmDimension { effect: usize, register: usize },
    #[error("selection impossible: register value {r0} has no amplitude")]
    SelectionImpossible { r0: u64 },
    #[error("selection retry budget of {0} exhausted")]
    RetryBudgetExhausted(u64),

    // factoring input classification
    #[error("{n} is even; the pipelines need an odd modulus")]
    EvenInput { n: u64 },
    #[error("{n} is prime")]
    PrimeInput { n: u64 },
    #[error("{n} = {base}^{exponent} is a prime power")]
    PrimePowerInput { n: u64, base: u64, exponent: u32 },
    #[error("n must be at least {min}, got {n}")]
    InputTooSmall { n: u64, min: u64 },
    #[error("n must be below 2^31, got {0}")]
    InputTooLarge(u64),
    #[error("first register override {l} is below the floor {min} for n = {n}")]
    RegisterTooNarrow { l: usize, min: usize, n: u64 },
    #[error("base list is empty")]
    NoBases,

    // cli
    #[error("config file: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
