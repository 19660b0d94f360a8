//! Experiment orchestration and metrics.
//!
//! For each bundle and configuration: baseline tests, mutation analysis,
//! prompt, `n` generations, validation of every response.

pub mod metrics;
pub mod report;
pub mod rubric;
pub mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{BugBundle, BundleError, Symptom};
use crate::circuit::Circuit;
use crate::gateway::{generate, record_replay, GatewayError, GenerationBatch, Provider};
use crate::harness::{analyze_against, run_tests, MutationRecord, SystemClock};
use crate::mutation::MutationError;
use crate::prompt::{build_prompt, parse_model_response, Explanation, PromptConfig, PromptError};

pub use metrics::{fixed_set_breakdown, success_rate, venn_regions, FixedSetBreakdown, Region};
pub use rubric::{aggregate_rubrics, reconcile, Criterion, Element, RubricCounts, RubricSheet};
pub use stats::{cohen_kappa, percent_agreement, StatsError};

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("success rate over an empty set of bundles")]
    EmptySubset,
    #[error("more than one sheet for bundle `{bundle_id}`, config {config}")]
    DuplicateSheet { bundle_id: String, config: PromptConfig },
    #[error("{0}")]
    SheetMismatch(String),
    #[error("no bundle produced any mutant; nothing to evaluate")]
    NoEligibleBundles,
    #[error("invalid experiment options: {0}")]
    InvalidOptions(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairVerdict {
    Success,
    TestFailure,
    Malformed,
    ParseError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairAttempt {
    pub bundle_id: String,
    pub config: PromptConfig,
    pub sample_index: usize,
    /// Stored as canonical QASM text.
    #[serde(with = "qasm_text")]
    pub patched_circuit: Option<Circuit>,
    pub explanation: Option<Explanation>,
    pub verdict: RepairVerdict,
    pub detail: String,
}

mod qasm_text {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::circuit::{parse_qasm, print_qasm, Circuit};

    pub fn serialize<S: Serializer>(c: &Option<Circuit>, s: S) -> Result<S::Ok, S::Error> {
        c.as_ref().map(print_qasm).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Circuit>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|t| parse_qasm(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Validates one raw model response against the bundle's tests.
pub fn validate_response(
    bundle: &BugBundle,
    config: PromptConfig,
    sample_index: usize,
    raw: &str,
    time_limit_ms: u64,
) -> RepairAttempt {
    let mut attempt = RepairAttempt {
        bundle_id: bundle.id.clone(),
        config,
        sample_index,
        patched_circuit: None,
        explanation: None,
        verdict: RepairVerdict::Malformed,
        detail: String::new(),
    };
    match parse_model_response(raw) {
        Err(PromptError::Qasm(e)) => {
            attempt.verdict = RepairVerdict::ParseError;
            attempt.detail = e.to_string();
        }
        Err(e) => attempt.detail = e.to_string(),
        Ok(parsed) => {
            let outcomes = run_tests(&parsed.circuit, &bundle.tests, time_limit_ms);
            match outcomes.iter().find(|o| !o.passed()) {
                None => attempt.verdict = RepairVerdict::Success,
                Some(o) => {
                    attempt.verdict = RepairVerdict::TestFailure;
                    attempt.detail = format!("{}: {}", o.name, o.detail);
                }
            }
            attempt.patched_circuit = Some(parsed.circuit);
            attempt.explanation = Some(parsed.explanation);
        }
    }
    attempt
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentOptions {
    pub configs: Vec<PromptConfig>,
    pub n_samples: usize,
    pub time_limit_ms: u64,
    /// Append every generated batch to this replay store.
    pub record: Option<PathBuf>,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            configs: PromptConfig::ALL.to_vec(),
            n_samples: 5,
            time_limit_ms: crate::harness::DEFAULT_TIME_LIMIT_MS,
            record: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub provider: String,
    pub configs: Vec<PromptConfig>,
    pub n_samples: usize,
    /// Evaluated bundles.
    pub symptoms: BTreeMap<String, Symptom>,
    /// Bundles dropped because they produced no mutant.
    pub excluded: Vec<String>,
    pub per_config_total_rate: BTreeMap<PromptConfig, f64>,
    /// `None` when the benchmark has no bundle of that symptom.
    pub per_config_wo_rate: BTreeMap<PromptConfig, Option<f64>>,
    pub per_config_te_rate: BTreeMap<PromptConfig, Option<f64>>,
    pub fixed_sets: BTreeMap<PromptConfig, BTreeSet<String>>,
    pub mutation_records: BTreeMap<String, Vec<MutationRecord>>,
    pub attempts: Vec<RepairAttempt>,
}

impl ExperimentReport {
    /// Pretty JSON with a trailing newline; byte-stable for equal reports.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn bundles_with(&self, symptom: Symptom) -> BTreeSet<String> {
        self.symptoms
            .iter()
            .filter(|(_, s)| **s == symptom)
            .map(|(id, _)| id.clone())
            .collect()
    }
}

enum BundleRun {
    Excluded(String),
    Done {
        id: String,
        symptom: Symptom,
        records: Vec<MutationRecord>,
        batches: Vec<GenerationBatch>,
        attempts: Vec<RepairAttempt>,
    },
}

fn run_bundle(bundle: &BugBundle, options: &ExperimentOptions, provider: &dyn Provider) -> Result<BundleRun, LabError> {
    let baseline = bundle.validate(options.time_limit_ms)?;
    let clock = SystemClock::default();
    let records = match analyze_against(
        &bundle.buggy_circuit,
        &bundle.tests,
        &baseline,
        options.time_limit_ms,
        &clock,
    ) {
        Ok(r) => r,
        Err(MutationError::NoMutantsGenerated) => return Ok(BundleRun::Excluded(bundle.id.clone())),
    };
    let mut batches = Vec::new();
    let mut attempts = Vec::new();
    for &config in &options.configs {
        let prompt = build_prompt(bundle, config, Some(&baseline), Some(&records))?;
        let batch = generate(&prompt, bundle, options.n_samples, provider)?;
        for (i, raw) in batch.samples.iter().enumerate() {
            attempts.push(validate_response(bundle, config, i, raw, options.time_limit_ms));
        }
        batches.push(batch);
    }
    Ok(BundleRun::Done {
        id: bundle.id.clone(),
        symptom: bundle.symptom,
        records,
        batches,
        attempts,
    })
}

pub fn run_experiment(
    bundles: &[BugBundle],
    options: &ExperimentOptions,
    provider: &dyn Provider,
) -> Result<ExperimentReport, LabError> {
    if bundles.is_empty() {
        return Err(LabError::InvalidOptions("no bundles given".into()));
    }
    if options.configs.is_empty() || options.n_samples == 0 {
        return Err(LabError::InvalidOptions(
            "need at least one configuration and one sample".into(),
        ));
    }
    let mut ids = BTreeSet::new();
    if let Some(b) = bundles.iter().find(|b| !ids.insert(b.id.as_str())) {
        return Err(LabError::InvalidOptions(format!("duplicate bundle id `{}`", b.id)));
    }
    let mut configs = options.configs.clone();
    configs.sort();
    configs.dedup();
    let options = &ExperimentOptions {
        configs: configs.clone(),
        ..options.clone()
    };

    let mut runs = bundles
        .par_iter()
        .map(|b| run_bundle(b, options, provider))
        .collect::<Result<Vec<_>, _>>()?;
    runs.sort_by(|a, b| run_id(a).cmp(run_id(b)));

    let mut report = ExperimentReport {
        provider: provider.fingerprint(),
        configs: configs.clone(),
        n_samples: options.n_samples,
        symptoms: BTreeMap::new(),
        excluded: Vec::new(),
        per_config_total_rate: BTreeMap::new(),
        per_config_wo_rate: BTreeMap::new(),
        per_config_te_rate: BTreeMap::new(),
        fixed_sets: BTreeMap::new(),
        mutation_records: BTreeMap::new(),
        attempts: Vec::new(),
    };
    for run in runs {
        match run {
            BundleRun::Excluded(id) => report.excluded.push(id),
            BundleRun::Done {
                id,
                symptom,
                records,
                batches,
                attempts,
            } => {
                if let Some(path) = &options.record {
                    for batch in &batches {
                        record_replay(batch, path)?;
                    }
                }
                report.symptoms.insert(id.clone(), symptom);
                report.mutation_records.insert(id, records);
                report.attempts.extend(attempts);
            }
        }
    }
    if report.symptoms.is_empty() {
        return Err(LabError::NoEligibleBundles);
    }
    report
        .attempts
        .sort_by(|a, b| (&a.bundle_id, a.config, a.sample_index).cmp(&(&b.bundle_id, b.config, b.sample_index)));

    let all: BTreeSet<String> = report.symptoms.keys().cloned().collect();
    let wo = report.bundles_with(Symptom::WO);
    let te = report.bundles_with(Symptom::TE);
    for config in configs {
        let attempts: Vec<RepairAttempt> = report.attempts.iter().filter(|a| a.config == config).cloned().collect();
        report
            .per_config_total_rate
            .insert(config, success_rate(&attempts, &all)?);
        report
            .per_config_wo_rate
            .insert(config, success_rate(&attempts, &wo).ok());
        report
            .per_config_te_rate
            .insert(config, success_rate(&attempts, &te).ok());
        report.fixed_sets.insert(config, metrics::fixed_bundles(&attempts));
    }
    Ok(report)
}

fn run_id(run: &BundleRun) -> &str {
    match run {
        BundleRun::Excluded(id) => id,
        BundleRun::Done { id, .. } => id,
    }
}
