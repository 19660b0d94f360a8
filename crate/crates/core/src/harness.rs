//! Test execution, outcome classification and mutation analysis records.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::BugBundle;
use crate::circuit::Circuit;
use crate::mutation::{enumerate_mutants, MutationError, OperatorTag};
use crate::sim::{evolve, sample, tvd, Distribution};
use crate::Statevector64;

pub const DEFAULT_TVD_THRESHOLD: f64 = 0.05;
pub const DEFAULT_SHOTS: u64 = 4096;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_TIME_LIMIT_MS: u64 = 10_000;
/// Max-norm tolerance for statevector oracles, after phase alignment.
pub const STATEVECTOR_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Oracle {
    /// Pre-measurement state must match up to global phase.
    Statevector { expected: Vec<Complex64> },
    /// Sampled distribution must be within `tvd_threshold` of `expected`.
    Distribution {
        expected: Distribution<f64>,
        tvd_threshold: f64,
        shots: u64,
        seed: u64,
    },
    /// Simulation must fail.
    ExpectError,
}

impl Oracle {
    pub fn kind(&self) -> &'static str {
        match self {
            Oracle::Statevector { .. } => "statevector",
            Oracle::Distribution { .. } => "distribution",
            Oracle::ExpectError => "expect_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub name: String,
    pub oracle: Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Error,
    Timeout,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Error => "ERROR",
            Verdict::Timeout => "TIMEOUT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub name: String,
    pub verdict: Verdict,
    /// Empty for passing tests.
    pub detail: String,
}

impl TestOutcome {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

pub fn all_pass(outcomes: &[TestOutcome]) -> bool {
    outcomes.iter().all(TestOutcome::passed)
}

/// Time source for test timeouts; injectable so timeouts can be tested
/// without wall-clock dependence.
pub trait Clock: Sync {
    fn now(&self) -> Duration;
}

#[derive(Debug, Clone, Copy)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }
}

/// Runs every test against `circuit` using the wall clock.
pub fn run_tests(circuit: &Circuit, tests: &[TestCase], time_limit_ms: u64) -> Vec<TestOutcome> {
    run_tests_with_clock(circuit, tests, time_limit_ms, &SystemClock::default())
}

/// Runs every test; failures of any kind are encoded as verdicts.
///
/// Simulation is not preempted: a test whose run exceeded the limit is
/// reported as timed out once it returns.
pub fn run_tests_with_clock(
    circuit: &Circuit,
    tests: &[TestCase],
    time_limit_ms: u64,
    clock: &dyn Clock,
) -> Vec<TestOutcome> {
    tests
        .iter()
        .map(|test| {
            let start = clock.now();
            let (verdict, detail) = run_one(circuit, &test.oracle);
            let elapsed = clock.now().saturating_sub(start);
            if elapsed > Duration::from_millis(time_limit_ms) {
                return TestOutcome {
                    name: test.name.clone(),
                    verdict: Verdict::Timeout,
                    detail: format!(
                        "exceeded time limit of {time_limit_ms} ms (took {} ms)",
                        elapsed.as_millis()
                    ),
                };
            }
            TestOutcome {
                name: test.name.clone(),
                verdict,
                detail,
            }
        })
        .collect()
}

fn run_one(circuit: &Circuit, oracle: &Oracle) -> (Verdict, String) {
    match oracle {
        Oracle::Statevector { expected } => match evolve::<f64>(circuit) {
            Err(e) => (Verdict::Error, e.to_string()),
            Ok(state) => {
                let Some(want) = Statevector64::from_amplitudes(expected.clone()) else {
                    return (Verdict::Fail, "expected state length is not a power of two".into());
                };
                match state.distance_up_to_phase(&want) {
                    None => (
                        Verdict::Fail,
                        format!(
                            "expected {} amplitudes, got {}",
                            want.amplitudes().len(),
                            state.amplitudes().len()
                        ),
                    ),
                    Some(d) if d <= STATEVECTOR_TOLERANCE => (Verdict::Pass, String::new()),
                    Some(d) => (
                        Verdict::Fail,
                        format!(
                            "statevector differs from expected by {d:.6} (max-norm, up to global phase); got {}",
                            format_state(&state)
                        ),
                    ),
                }
            }
        },
        Oracle::Distribution {
            expected,
            tvd_threshold,
            shots,
            seed,
        } => match sample::<f64>(circuit, *shots, *seed) {
            Err(e) => (Verdict::Error, e.to_string()),
            Ok(counts) => {
                let observed = counts.probabilities::<f64>();
                let distance = tvd(&observed, expected);
                if distance <= *tvd_threshold {
                    (Verdict::Pass, String::new())
                } else {
                    (
                        Verdict::Fail,
                        format!(
                            "tvd {distance:.4} exceeds threshold {tvd_threshold}; observed {}, expected {}",
                            format_distribution(&observed),
                            format_distribution(expected)
                        ),
                    )
                }
            }
        },
        Oracle::ExpectError => match evolve::<f64>(circuit) {
            Err(_) => (Verdict::Pass, String::new()),
            Ok(_) => (Verdict::Fail, "expected a simulation error but the circuit ran".into()),
        },
    }
}

fn format_distribution(d: &Distribution<f64>) -> String {
    let body: Vec<String> = d.iter().map(|(k, v)| format!("\"{k}\": {v:.4}")).collect();
    format!("{{{}}}", body.join(", "))
}

fn format_state(s: &Statevector64) -> String {
    let body: Vec<String> = s
        .amplitudes()
        .iter()
        .map(|a| format!("{:.4}{:+.4}i", a.re, a.im))
        .collect();
    format!("[{}]", body.join(", "))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationStatus {
    Killed,
    Survived,
    Incompetent,
    TimeOut,
}

impl MutationStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            MutationStatus::Killed => "killed",
            MutationStatus::Survived => "survived",
            MutationStatus::Incompetent => "incompetent",
            MutationStatus::TimeOut => "time_out",
        }
    }
}

impl fmt::Display for MutationStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("baseline and mutant were run against different tests")]
    MismatchedTestSets,
}

/// Mutation status relative to the buggy program's own outcomes.
///
/// Any erroring test makes the mutant incompetent; otherwise any timeout
/// makes it time_out; otherwise it is killed when some test's verdict
/// differs from the baseline (a fail→pass flip counts), else survived.
pub fn classify_status(baseline: &[TestOutcome], mutant: &[TestOutcome]) -> Result<MutationStatus, HarnessError> {
    let base: BTreeMap<&str, Verdict> = baseline.iter().map(|o| (o.name.as_str(), o.verdict)).collect();
    let muts: BTreeMap<&str, Verdict> = mutant.iter().map(|o| (o.name.as_str(), o.verdict)).collect();
    if baseline.len() != mutant.len() || base.len() != baseline.len() || !base.keys().eq(muts.keys()) {
        return Err(HarnessError::MismatchedTestSets);
    }
    if muts.values().any(|&v| v == Verdict::Error) {
        return Ok(MutationStatus::Incompetent);
    }
    if muts.values().any(|&v| v == Verdict::Timeout) {
        return Ok(MutationStatus::TimeOut);
    }
    if base.iter().any(|(name, v)| muts[name] != *v) {
        return Ok(MutationStatus::Killed);
    }
    Ok(MutationStatus::Survived)
}

/// One mutant's mutation-analysis result.
///
/// Serialises to exactly `line_number`, `mutation_operator`,
/// `exception_traceback` and `status`; the mutant id is kept in memory only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationRecord {
    #[serde(skip)]
    pub mutant_id: String,
    pub line_number: usize,
    pub mutation_operator: OperatorTag,
    pub exception_traceback: String,
    pub status: MutationStatus,
}

impl MutationRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serialises")
    }
}

/// One JSON object per line, each terminated by `\n`.
pub fn records_to_jsonl(records: &[MutationRecord]) -> String {
    records.iter().map(|r| r.to_json_line() + "\n").collect()
}

pub fn records_from_jsonl(text: &str) -> Result<Vec<MutationRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// Runs the bundle's tests on every mutant of its buggy circuit.
pub fn analyze(bundle: &BugBundle, time_limit_ms: u64) -> Result<Vec<MutationRecord>, MutationError> {
    analyze_with_clock(bundle, time_limit_ms, &SystemClock::default())
}

pub fn analyze_with_clock(
    bundle: &BugBundle,
    time_limit_ms: u64,
    clock: &dyn Clock,
) -> Result<Vec<MutationRecord>, MutationError> {
    let baseline = run_tests_with_clock(&bundle.buggy_circuit, &bundle.tests, time_limit_ms, clock);
    analyze_against(&bundle.buggy_circuit, &bundle.tests, &baseline, time_limit_ms, clock)
}

/// [`analyze`] with a precomputed baseline.
pub fn analyze_against(
    circuit: &Circuit,
    tests: &[TestCase],
    baseline: &[TestOutcome],
    time_limit_ms: u64,
    clock: &dyn Clock,
) -> Result<Vec<MutationRecord>, MutationError> {
    let mutants = enumerate_mutants(circuit)?;
    // par_iter + collect keeps enumeration order
    Ok(mutants
        .par_iter()
        .map(|m| {
            let outcomes = run_tests_with_clock(&m.circuit, tests, time_limit_ms, clock);
            let status = classify_status(baseline, &outcomes).expect("baseline and mutant share one test list");
            let exception_traceback = outcomes
                .iter()
                .find(|o| !o.passed())
                .map(|o| format!("{}: {}", o.name, o.detail))
                .unwrap_or_default();
            MutationRecord {
                mutant_id: m.id.clone(),
                line_number: m.line_number,
                mutation_operator: m.operator,
                exception_traceback,
                status,
            }
        })
        .collect())
}
