//! End-to-end factoring drivers sharing one result schema: the simulated
//! measurement pipeline ([`shor_factor`]), the oracle-style state-selection
//! pipeline ([`qo_factor`]), and a trial-division baseline
//! ([`classical_factor`]).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates;
use crate::measurement::{self, SelectionProtocolTrace};
use crate::numtheory::{self, qubits_to_hold, PeriodCandidate, PeriodSource, MAX_MODULUS};
use crate::statevector::{RegisterLayout, StateVector, DEFAULT_QUBIT_BUDGET};

/// Which pipeline produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Shor,
    Qo,
    Classical,
}

/// Terminal outcome of one attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptOutcome {
    Success,
    OddPeriod,
    TrivialGcds,
    NoInformation,
}

/// One attempt of a factoring pipeline. Serializes to the stable schema
/// `{a, gcd_shortcut, t, r, outcome}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptTrace {
    pub a: u64,
    pub gcd_shortcut: Option<u64>,
    #[serde(rename = "t")]
    pub measured_t: Option<u64>,
    #[serde(rename = "r")]
    pub candidate_r: Option<u64>,
    pub outcome: AttemptOutcome,
}

impl AttemptTrace {
    /// Whether the candidate period is even, when one exists.
    pub fn r_even(&self) -> Option<bool> {
        self.candidate_r.map(|r| r % 2 == 0)
    }
}

/// Uniform result of every pipeline. Serializes to the stable schema
/// `{n, method, factors, seed, attempts}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactoringResult {
    pub n: u64,
    pub method: Method,
    pub factors: Option<(u64, u64)>,
    pub seed: u64,
    pub attempts: Vec<AttemptTrace>,
}

/// Settings for [`shor_factor`].
#[derive(Debug, Clone, PartialEq)]
pub struct ShorConfig {
    /// First-register width override. The default picks the least `l` with
    /// `2^l >= n^2`; overrides may go down to `floor(log2 n)`.
    pub first_register_bits: Option<usize>,
    /// Measure the function register before the final transform.
    pub measure_second_first: bool,
    pub max_attempts: u32,
    pub rng_seed: u64,
    /// Total-qubit ceiling; `None` means the default budget.
    pub qubit_budget: Option<usize>,
}

impl Default for ShorConfig {
    fn default() -> Self {
        ShorConfig {
            first_register_bits: None,
            measure_second_first: true,
            max_attempts: 64,
            rng_seed: 0,
            qubit_budget: None,
        }
    }
}

/// How [`qo_factor`] walks candidate periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum R0Strategy {
    Ascending,
    Random,
}

/// How [`qo_factor`] drives the period register to the questioned value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// The explicit EPR accept/retry protocol.
    TelePovm,
    /// Single-shot post-selection.
    Idealized,
}

/// Settings for [`qo_factor`].
#[derive(Debug, Clone, PartialEq)]
pub struct QoConfig {
    /// How many coprime bases to load into function registers.
    pub h_cap: usize,
    /// Phase-ramp parameter; a value-linear phase that cannot change any
    /// selection outcome. Kept configurable to exercise the ramp.
    pub omega: f64,
    pub r0_strategy: R0Strategy,
    /// Question ceiling; `None` means `n - 1`.
    pub max_questions: Option<u64>,
    pub rng_seed: u64,
    /// Explicit bases instead of the leading coprimes.
    pub bases: Option<Vec<u64>>,
    pub selection: SelectionMode,
    /// Total-qubit ceiling; `None` means the default budget.
    pub qubit_budget: Option<usize>,
}

impl Default for QoConfig {
    fn default() -> Self {
        QoConfig {
            h_cap: 2,
            omega: 0.0,
            r0_strategy: R0Strategy::Ascending,
            max_questions: None,
            rng_seed: 0,
            bases: None,
            selection: SelectionMode::TelePovm,
            qubit_budget: None,
        }
    }
}

/// One function-register readout in a QO question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QoAnswer {
    pub base: u64,
    pub register_value: u64,
    pub affirmative: bool,
}

/// Everything that happened while one `r0` was in question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub r0: u64,
    pub selection_attempts: u64,
    pub trace: SelectionProtocolTrace,
    pub answers: Vec<QoAnswer>,
}

/// A [`qo_factor`] run: the uniform result plus per-question detail.
#[derive(Debug, Clone, PartialEq)]
pub struct QoRun {
    pub result: FactoringResult,
    pub questions: Vec<QuestionRecord>,
}

/// Reject inputs the pipelines cannot factor: even numbers, primes, prime
/// powers, and out-of-range values.
pub fn classify_input(n: u64) -> Result<()> {
    if n < 3 {
        return Err(Error::InputTooSmall { n, min: 3 });
    }
    if n >= MAX_MODULUS {
        return Err(Error::InputTooLarge(n));
    }
    if n % 2 == 0 {
        return Err(Error::EvenInput { n });
    }
    if numtheory::is_prime(n) {
        return Err(Error::PrimeInput { n });
    }
    if let Some((base, exponent)) = numtheory::perfect_power(n) {
        if numtheory::is_prime(base) {
            return Err(Error::PrimePowerInput { n, base, exponent });
        }
    }
    Ok(())
}

fn ordered(p: u64, q: u64) -> (u64, u64) {
    if p <= q {
        (p, q)
    } else {
        (q, p)
    }
}

/// Factor an odd composite by simulated order finding: uniform first
/// register, modular exponentiation, optional function-register measurement,
/// transform, measurement, continued fractions, factor extraction. Draws of
/// the base and all measurements come from the seeded generator, so equal
/// seeds give equal results.
pub fn shor_factor(n: u64, cfg: &ShorConfig) -> Result<FactoringResult> {
    classify_input(n)?;
    let second_width = qubits_to_hold(n);
    let l = cfg.first_register_bits.unwrap_or(qubits_to_hold(n * n));
    let l_min = (63 - n.leading_zeros()) as usize; // floor(log2 n)
    if l < l_min {
        return Err(Error::RegisterTooNarrow { l, min: l_min, n });
    }
    let budget = cfg.qubit_budget.unwrap_or(DEFAULT_QUBIT_BUDGET);
    let layout = RegisterLayout::with_budget(&[("first", l), ("second", second_width)], budget)?;
    let q = 1u64 << l;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut attempts = Vec::new();
    for _ in 0..cfg.max_attempts {
        let a = rng.gen_range(2..n);
        let shortcut = numtheory::gcd_value(a, n);
        if shortcut != 1 {
            attempts.push(AttemptTrace {
                a,
                gcd_shortcut: Some(shortcut),
                measured_t: None,
                candidate_r: None,
                outcome: AttemptOutcome::Success,
            });
            return Ok(FactoringResult {
                n,
                method: Method::Shor,
                factors: Some(ordered(shortcut, n / shortcut)),
                seed: cfg.rng_seed,
                attempts,
            });
        }

        let mut state = StateVector::zero_state(layout.clone());
        gates::apply_qft(&mut state, "first")?;
        gates::apply_mod_exp(&mut state, "first", "second", a, n)?;
        if cfg.measure_second_first {
            state = measurement::measure_register(&state, "second", &mut rng)?.post_state;
        }
        gates::apply_qft(&mut state, "first")?;
        let t = measurement::measure_register(&state, "first", &mut rng)?.outcome;

        let candidate = numtheory::continued_fraction_period(t, q, n)?;
        let Some(candidate) = candidate else {
            attempts.push(AttemptTrace {
                a,
                gcd_shortcut: None,
                measured_t: Some(t),
                candidate_r: None,
                outcome: AttemptOutcome::NoInformation,
            });
            continue;
        };
        // continued fractions can land on a proper divisor of the period;
        // one doubling retry keeps the attempt bounded
        let mut r = candidate.r;
        if numtheory::mod_pow(a, r, n)? != 1 {
            r *= 2;
            if numtheory::mod_pow(a, r, n)? != 1 {
                attempts.push(AttemptTrace {
                    a,
                    gcd_shortcut: None,
                    measured_t: Some(t),
                    candidate_r: Some(r),
                    outcome: AttemptOutcome::NoInformation,
                });
                continue;
            }
        }
        if r % 2 == 1 {
            attempts.push(AttemptTrace {
                a,
                gcd_shortcut: None,
                measured_t: Some(t),
                candidate_r: Some(r),
                outcome: AttemptOutcome::OddPeriod,
            });
            continue;
        }
        match numtheory::factors_from_period(a, r, n) {
            Some(pair) => {
                attempts.push(AttemptTrace {
                    a,
                    gcd_shortcut: None,
                    measured_t: Some(t),
                    candidate_r: Some(r),
                    outcome: AttemptOutcome::Success,
                });
                return Ok(FactoringResult {
                    n,
                    method: Method::Shor,
                    factors: Some(pair),
                    seed: cfg.rng_seed,
                    attempts,
                });
            }
            None => {
                attempts.push(AttemptTrace {
                    a,
                    gcd_shortcut: None,
                    measured_t: Some(t),
                    candidate_r: Some(r),
                    outcome: AttemptOutcome::TrivialGcds,
                });
            }
        }
    }
    Ok(FactoringResult {
        n,
        method: Method::Shor,
        factors: None,
        seed: cfg.rng_seed,
        attempts,
    })
}

fn second_register_name(j: usize) -> String {
    format!("second{j}")
}

/// Factor an odd composite through the state-selection oracle: load coprime
/// bases into entangled function registers, drive the period register to a
/// questioned `r0`, read each function register through the NOT/OR circuit,
/// and extract factors from affirmative answers at even `r0`.
pub fn qo_factor(n: u64, cfg: &QoConfig) -> Result<QoRun> {
    classify_input(n)?;
    let bases = match &cfg.bases {
        Some(list) => {
            if list.is_empty() {
                return Err(Error::NoBases);
            }
            for &a in list {
                if a < 2 || a >= n {
                    return Err(Error::BaseOutOfRange { a, n });
                }
                if numtheory::gcd_value(a, n) != 1 {
                    return Err(Error::NotCoprime { a, n });
                }
            }
            list.clone()
        }
        None => numtheory::coprime_list(n, cfg.h_cap)?,
    };
    if bases.is_empty() {
        return Err(Error::NoBases);
    }
    let width = qubits_to_hold(n);
    let budget = cfg.qubit_budget.unwrap_or(DEFAULT_QUBIT_BUDGET);
    let mut spans: Vec<(String, usize)> = vec![("first".to_string(), width)];
    for j in 0..bases.len() {
        spans.push((second_register_name(j), width));
    }
    let span_refs: Vec<(&str, usize)> = spans.iter().map(|(s, w)| (s.as_str(), *w)).collect();
    let layout = RegisterLayout::with_budget(&span_refs, budget)?;
    let second_names: Vec<String> = (0..bases.len()).map(second_register_name).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let question_cap = cfg.max_questions.unwrap_or(n - 1);
    let mut questions: Vec<QuestionRecord> = Vec::new();
    let mut attempts: Vec<AttemptTrace> = Vec::new();
    let mut next_ascending = 1u64;
    let mut factors: Option<(u64, u64)> = None;

    while (questions.len() as u64) < question_cap {
        let r0 = match cfg.r0_strategy {
            R0Strategy::Ascending => {
                if next_ascending >= n {
                    break;
                }
                let v = next_ascending;
                next_ascending += 1;
                v
            }
            R0Strategy::Random => rng.gen_range(1..n),
        };

        // fresh superposition of periods against every base
        let mut state = StateVector::zero_state(layout.clone());
        gates::apply_qft(&mut state, "first")?;
        {
            let name_refs: Vec<&str> = second_names.iter().map(|s| s.as_str()).collect();
            gates::apply_mod_exp_multi(&mut state, "first", &name_refs, &bases, n)?;
        }
        gates::apply_phase_ramp(&mut state, "first", cfg.omega)?;

        // put r0 into question
        let (selected, trace, selection_attempts) = match cfg.selection {
            SelectionMode::TelePovm => {
                measurement::telepovm_select(&state, "first", r0, &mut rng)?
            }
            SelectionMode::Idealized => {
                let (post, _) = measurement::select_state(&state, "first", r0)?;
                (post, SelectionProtocolTrace::default(), 1)
            }
        };

        // each function register now holds its residue; ask the circuit
        let mut answers = Vec::with_capacity(bases.len());
        let mut current = selected;
        for (j, &base) in bases.iter().enumerate() {
            let rec = measurement::measure_register(&current, &second_names[j], &mut rng)?;
            current = rec.post_state;
            let affirmative = gates::readout_is_one(rec.outcome, width) == 0;
            answers.push(QoAnswer {
                base,
                register_value: rec.outcome,
                affirmative,
            });
        }
        questions.push(QuestionRecord {
            r0,
            selection_attempts,
            trace,
            answers: answers.clone(),
        });

        // an affirmative answer certifies r0 as a multiple of that base's
        // order; the selection itself is the period's provenance
        let period = PeriodCandidate {
            r: r0,
            source: PeriodSource::OracleSelection,
        };
        let affirmatives: Vec<&QoAnswer> = answers.iter().filter(|a| a.affirmative).collect();
        let (outcome, trace_base) = if affirmatives.is_empty() {
            (AttemptOutcome::NoInformation, bases[0])
        } else if period.r % 2 == 1 {
            (AttemptOutcome::OddPeriod, affirmatives[0].base)
        } else {
            let mut hit = None;
            for ans in &affirmatives {
                if let Some(pair) = numtheory::factors_from_period(ans.base, period.r, n) {
                    hit = Some((pair, ans.base));
                    break;
                }
            }
            match hit {
                Some((pair, base)) => {
                    factors = Some(pair);
                    (AttemptOutcome::Success, base)
                }
                None => (AttemptOutcome::TrivialGcds, affirmatives[0].base),
            }
        };
        attempts.push(AttemptTrace {
            a: trace_base,
            gcd_shortcut: None,
            measured_t: None,
            candidate_r: Some(period.r),
            outcome,
        });
        if factors.is_some() {
            break;
        }
    }

    Ok(QoRun {
        result: FactoringResult {
            n,
            method: Method::Qo,
            factors,
            seed: cfg.rng_seed,
            attempts,
        },
        questions,
    })
}

/// Trial-division baseline. Primes report no factors.
pub fn classical_factor(n: u64) -> Result<FactoringResult> {
    if n < 2 {
        return Err(Error::InputTooSmall { n, min: 2 });
    }
    let mut factors = None;
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            factors = Some((d, n / d));
            break;
        }
        d += 1;
    }
    Ok(FactoringResult {
        n,
        method: Method::Classical,
        factors,
        seed: 0,
        attempts: Vec::new(),
    })
}
