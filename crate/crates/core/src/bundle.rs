//! Benchmark subjects on disk.
//!
//! A bundle is a directory holding `buggy.qasm`, `fixed.qasm`, `tests.toml`
//! and `meta.toml`; the directory name is the bundle id.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{parse_qasm, parse_qasm_unchecked, Circuit, QasmError};
use crate::harness::{
    run_tests, Oracle, TestCase, TestOutcome, Verdict, DEFAULT_SEED, DEFAULT_SHOTS, DEFAULT_TVD_THRESHOLD,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symptom {
    /// Wrong output.
    WO,
    /// Throws an exception.
    TE,
}

impl fmt::Display for Symptom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symptom::WO => "WO",
            Symptom::TE => "TE",
        })
    }
}

impl FromStr for Symptom {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "WO" => Ok(Symptom::WO),
            "TE" => Ok(Symptom::TE),
            _ => Err(format!("unknown symptom `{s}` (expected WO or TE)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BugBundle {
    pub id: String,
    pub buggy_circuit: Circuit,
    pub reference_fix: Circuit,
    pub tests: Vec<TestCase>,
    pub bug_description: String,
    pub expected_behavior: String,
    pub symptom: Symptom,
    pub source_url: String,
}

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Qasm {
        path: PathBuf,
        #[source]
        source: QasmError,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("bundle `{bundle}`: {message}")]
    Invariant { bundle: String, message: String },
}

/// Defaults applied to tests that leave `shots` or `seed` unset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    pub default_shots: u64,
    pub default_seed: u64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            default_shots: DEFAULT_SHOTS,
            default_seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaFile {
    #[serde(default)]
    description: String,
    #[serde(default)]
    expected_behavior: String,
    symptom: String,
    #[serde(default)]
    source_url: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TestsFile {
    tests: Vec<RawTest>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTest {
    name: String,
    oracle: String,
    expected_state: Option<Vec<[f64; 2]>>,
    expected_distribution: Option<std::collections::BTreeMap<String, f64>>,
    tvd_threshold: Option<f64>,
    shots: Option<u64>,
    seed: Option<u64>,
}

impl RawTest {
    fn into_case(self, options: LoadOptions) -> Result<TestCase, String> {
        let name = self.name;
        let stray = |what: &str| format!("test `{name}`: `{what}` does not apply to a {} oracle", self.oracle);
        let oracle = match self.oracle.as_str() {
            "statevector" => {
                if self.expected_distribution.is_some() {
                    return Err(stray("expected_distribution"));
                }
                for (field, set) in [
                    ("tvd_threshold", self.tvd_threshold.is_some()),
                    ("shots", self.shots.is_some()),
                    ("seed", self.seed.is_some()),
                ] {
                    if set {
                        return Err(stray(field));
                    }
                }
                let amps = self
                    .expected_state
                    .ok_or_else(|| format!("test `{name}`: statevector oracle needs expected_state"))?;
                Oracle::Statevector {
                    expected: amps.into_iter().map(|[re, im]| Complex64::new(re, im)).collect(),
                }
            }
            "distribution" => {
                if self.expected_state.is_some() {
                    return Err(stray("expected_state"));
                }
                let expected = self
                    .expected_distribution
                    .ok_or_else(|| format!("test `{name}`: distribution oracle needs expected_distribution"))?;
                let total: f64 = expected.values().sum();
                if (total - 1.0).abs() > 1e-9 || expected.values().any(|&p| p < 0.0) {
                    return Err(format!("test `{name}`: expected_distribution must be normalised"));
                }
                let tvd_threshold = self.tvd_threshold.unwrap_or(DEFAULT_TVD_THRESHOLD);
                if !(tvd_threshold > 0.0 && tvd_threshold <= 1.0) {
                    return Err(format!("test `{name}`: tvd_threshold must lie in (0, 1]"));
                }
                let shots = self.shots.unwrap_or(options.default_shots);
                if shots == 0 {
                    return Err(format!("test `{name}`: shots must be positive"));
                }
                Oracle::Distribution {
                    expected,
                    tvd_threshold,
                    shots,
                    seed: self.seed.unwrap_or(options.default_seed),
                }
            }
            "expect_error" => {
                for (field, set) in [
                    ("expected_state", self.expected_state.is_some()),
                    ("expected_distribution", self.expected_distribution.is_some()),
                    ("tvd_threshold", self.tvd_threshold.is_some()),
                    ("shots", self.shots.is_some()),
                    ("seed", self.seed.is_some()),
                ] {
                    if set {
                        return Err(stray(field));
                    }
                }
                Oracle::ExpectError
            }
            other => return Err(format!("test `{name}`: unknown oracle `{other}`")),
        };
        Ok(TestCase { name, oracle })
    }
}

/// Parses the `[[tests]]` array of a tests file.
pub fn parse_tests(text: &str, options: LoadOptions) -> Result<Vec<TestCase>, String> {
    let file: TestsFile = toml::from_str(text).map_err(|e| e.to_string())?;
    if file.tests.is_empty() {
        return Err("a bundle needs at least one test".into());
    }
    let tests = file
        .tests
        .into_iter()
        .map(|t| t.into_case(options))
        .collect::<Result<Vec<_>, _>>()?;
    let mut names: Vec<&str> = tests.iter().map(|t| t.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(format!("duplicate test name `{}`", w[0]));
    }
    Ok(tests)
}

fn read(path: &Path) -> Result<String, BundleError> {
    fs::read_to_string(path).map_err(|source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_bundle(dir: &Path) -> Result<BugBundle, BundleError> {
    load_bundle_with(dir, LoadOptions::default())
}

/// Loads a bundle directory without checking its invariants.
///
/// `buggy.qasm` is parsed leniently (unknown gates and bad arities are left
/// for the simulator to reject) so exception-type bugs can be expressed.
pub fn load_bundle_with(dir: &Path, options: LoadOptions) -> Result<BugBundle, BundleError> {
    let id = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| BundleError::Format {
            path: dir.to_path_buf(),
            message: "bundle directory has no usable name".into(),
        })?
        .to_string();
    let qasm = |file: &str, strict: bool| -> Result<Circuit, BundleError> {
        let path = dir.join(file);
        let text = read(&path)?;
        let parsed = if strict {
            parse_qasm(&text)
        } else {
            parse_qasm_unchecked(&text)
        };
        parsed.map_err(|source| BundleError::Qasm { path, source })
    };
    let buggy_circuit = qasm("buggy.qasm", false)?;
    let reference_fix = qasm("fixed.qasm", true)?;

    let tests_path = dir.join("tests.toml");
    let tests = parse_tests(&read(&tests_path)?, options).map_err(|message| BundleError::Format {
        path: tests_path,
        message,
    })?;

    let meta_path = dir.join("meta.toml");
    let meta: MetaFile = toml::from_str(&read(&meta_path)?).map_err(|e| BundleError::Format {
        path: meta_path.clone(),
        message: e.to_string(),
    })?;
    let symptom = meta.symptom.parse().map_err(|message| BundleError::Format {
        path: meta_path,
        message,
    })?;

    Ok(BugBundle {
        id,
        buggy_circuit,
        reference_fix,
        tests,
        bug_description: meta.description.trim().to_string(),
        expected_behavior: meta.expected_behavior.trim().to_string(),
        symptom,
        source_url: meta.source_url,
    })
}

/// Loads every bundle directory under `root`, sorted by id.
pub fn load_benchmark(root: &Path, options: LoadOptions) -> Result<Vec<BugBundle>, BundleError> {
    let entries = fs::read_dir(root).map_err(|source| BundleError::Io {
        path: root.to_path_buf(),
        source,
    })?;
    let mut dirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| BundleError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if path.is_dir() && path.join("meta.toml").is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    dirs.iter().map(|d| load_bundle_with(d, options)).collect()
}

impl BugBundle {
    /// Checks the reference fix passes, the buggy program fails, and the
    /// symptom agrees with the buggy baseline. Returns that baseline.
    pub fn validate(&self, time_limit_ms: u64) -> Result<Vec<TestOutcome>, BundleError> {
        let invariant = |message: String| BundleError::Invariant {
            bundle: self.id.clone(),
            message,
        };
        let fixed = run_tests(&self.reference_fix, &self.tests, time_limit_ms);
        if let Some(bad) = fixed.iter().find(|o| !o.passed()) {
            return Err(invariant(format!(
                "reference fix does not pass `{}`: {}",
                bad.name, bad.detail
            )));
        }
        let baseline = run_tests(&self.buggy_circuit, &self.tests, time_limit_ms);
        if baseline.iter().all(TestOutcome::passed) {
            return Err(invariant("buggy circuit passes every test".into()));
        }
        let errors = baseline.iter().any(|o| o.verdict == Verdict::Error);
        let implied = if errors { Symptom::TE } else { Symptom::WO };
        if implied != self.symptom {
            return Err(invariant(format!(
                "symptom is {} but the buggy baseline implies {implied}",
                self.symptom
            )));
        }
        Ok(baseline)
    }
}
