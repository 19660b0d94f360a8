//! Model providers that turn a prompt into candidate repair responses.

mod live;
mod replay;

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::BugBundle;
use crate::circuit::print_qasm;
use crate::prompt::{render_response, Explanation, PromptBundle, PromptConfig};

pub use live::{LiveHttpProvider, RetryPolicy, API_KEY_ENV};
pub use replay::{record_replay, ReplayEntry, ReplayStore, REPLAY_FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderSpec {
    LiveHttp { endpoint: String, model: String },
    Replay { path: PathBuf },
    PerfectOracle,
    Noop,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("no recorded response for bundle `{bundle_id}`, config {config}, sample {sample_index}")]
    ReplayMiss {
        bundle_id: String,
        config: PromptConfig,
        sample_index: usize,
    },
    #[error("environment variable {API_KEY_ENV} is not set")]
    AuthMissing,
    #[error("replay store already holds bundle `{bundle_id}`, config {config}, sample {sample_index}")]
    DuplicateKey {
        bundle_id: String,
        config: PromptConfig,
        sample_index: usize,
    },
    #[error("{path}: {message}")]
    IOFailure { path: PathBuf, message: String },
}

pub trait Provider: Send + Sync {
    /// Stable description of the provider, recorded in reports.
    fn fingerprint(&self) -> String;

    fn complete(&self, prompt: &PromptBundle, bundle: &BugBundle, sample_index: usize) -> Result<String, GatewayError>;
}

/// Answers with the bundle's reference fix.
#[derive(Debug, Clone, Copy, Default)]
pub struct PerfectOracle;

impl Provider for PerfectOracle {
    fn fingerprint(&self) -> String {
        "perfect_oracle".into()
    }

    fn complete(&self, _prompt: &PromptBundle, bundle: &BugBundle, _i: usize) -> Result<String, GatewayError> {
        Ok(render_response(
            &print_qasm(&bundle.reference_fix),
            &Explanation {
                position: "The program differs from its reference fix.".into(),
                cause: "The reference fix encodes the intended behaviour.".into(),
                change: "Replaced the program with the reference fix.".into(),
            },
        ))
    }
}

/// Answers with the buggy program unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct Noop;

impl Provider for Noop {
    fn fingerprint(&self) -> String {
        "noop".into()
    }

    fn complete(&self, _prompt: &PromptBundle, bundle: &BugBundle, _i: usize) -> Result<String, GatewayError> {
        Ok(render_response(
            &print_qasm(&bundle.buggy_circuit),
            &Explanation {
                position: "None.".into(),
                cause: "None identified.".into(),
                change: "No change.".into(),
            },
        ))
    }
}

impl ProviderSpec {
    pub fn build(&self) -> Result<Box<dyn Provider>, GatewayError> {
        Ok(match self {
            ProviderSpec::LiveHttp { endpoint, model } => Box::new(LiveHttpProvider::from_env(endpoint, model)?),
            ProviderSpec::Replay { path } => Box::new(ReplayStore::open(path)?),
            ProviderSpec::PerfectOracle => Box::new(PerfectOracle),
            ProviderSpec::Noop => Box::new(Noop),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationBatch {
    pub prompt: PromptBundle,
    pub samples: Vec<String>,
    pub provider_fingerprint: String,
    /// Milliseconds since the Unix epoch at which each sample arrived.
    pub timestamps: Vec<u128>,
}

/// Asks `provider` for `n_samples` independent responses, in order.
pub fn generate(
    prompt: &PromptBundle,
    bundle: &BugBundle,
    n_samples: usize,
    provider: &dyn Provider,
) -> Result<GenerationBatch, GatewayError> {
    let mut samples = Vec::with_capacity(n_samples);
    let mut timestamps = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        samples.push(provider.complete(prompt, bundle, i)?);
        timestamps.push(
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or_default(),
        );
    }
    Ok(GenerationBatch {
        prompt: prompt.clone(),
        samples,
        provider_fingerprint: provider.fingerprint(),
        timestamps,
    })
}
