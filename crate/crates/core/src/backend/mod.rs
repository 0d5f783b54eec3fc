//! Reference decisions from a language-model backend: prompting, parsing,
//! sampling with retries, caching and aggregation.

mod cache;
mod http;
mod parse;
mod prompt;
mod reference;
mod stub;

use serde::{Deserialize, Serialize};

pub use cache::{CachedBackend, JournalEntry, ResponseCache};
pub use http::HttpBackend;
pub use parse::parse_decision;
pub use prompt::{render_prompt, PromptBundle, Strategy};
pub use reference::{
    estimate_backend_variance, generate_reference, generate_references, sample_decisions,
    sample_seed, ReferenceConfig, MAX_RETRIES,
};
pub use stub::{OracleAdjustment, OracleRule, StubBackend, StubMode};

use crate::error::{Error, Result};

/// A text-completion model. Implementations must be usable from several
/// threads at once.
pub trait LlmBackend: Send + Sync {
    fn complete(&self, prompt: &str, temperature: f64, seed: u64) -> Result<String>;

    /// Model and endpoint identity; part of every cache key.
    fn descriptor(&self) -> String;
}

impl<B: LlmBackend + ?Sized> LlmBackend for &B {
    fn complete(&self, prompt: &str, temperature: f64, seed: u64) -> Result<String> {
        (**self).complete(prompt, temperature, seed)
    }

    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
}

impl<B: LlmBackend + ?Sized> LlmBackend for Box<B> {
    fn complete(&self, prompt: &str, temperature: f64, seed: u64) -> Result<String> {
        (**self).complete(prompt, temperature, seed)
    }

    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Stub,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub url: Option<String>,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub parallelism: usize,
    /// Journal file, relative to the output directory's `cache/` folder unless absolute.
    pub cache_path: Option<String>,
    pub timeout_secs: u64,
    pub max_attempts: usize,
    pub stub: StubMode,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Stub,
            url: None,
            model: "stub".into(),
            api_key_env: "DIGIPOP_API_KEY".into(),
            parallelism: 1,
            cache_path: Some("responses.jsonl".into()),
            timeout_secs: 60,
            max_attempts: 4,
            stub: StubMode::Cycle {
                outputs: vec!["3".into()],
            },
        }
    }
}

impl BackendConfig {
    pub fn build(&self) -> Result<Box<dyn LlmBackend>> {
        if self.parallelism == 0 {
            return Err(Error::InvalidArgument(
                "backend parallelism must be >= 1".into(),
            ));
        }
        match self.kind {
            BackendKind::Stub => Ok(Box::new(StubBackend::new(self.stub.clone())?)),
            BackendKind::Http => {
                let url = self.url.as_deref().ok_or_else(|| {
                    Error::InvalidArgument("backend.url is required for the http backend".into())
                })?;
                let key = std::env::var(&self.api_key_env).ok();
                Ok(Box::new(HttpBackend::new(
                    url,
                    &self.model,
                    key,
                    std::time::Duration::from_secs(self.timeout_secs),
                    self.max_attempts,
                )))
            }
        }
    }
}
