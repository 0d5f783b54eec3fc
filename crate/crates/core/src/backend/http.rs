use std::time::Duration;

use serde_json::{json, Value};

use super::LlmBackend;
use crate::error::{Error, Result};

const BASE_BACKOFF: Duration = Duration::from_millis(500);

/// Chat-completions client: POST `{url}/chat/completions` with a single user
/// message, read `choices[0].message.content`.
pub struct HttpBackend {
    agent: ureq::Agent,
    url: String,
    model: String,
    api_key: Option<String>,
    max_attempts: usize,
    backoff: Duration,
}

impl HttpBackend {
    pub fn new(
        url: &str,
        model: &str,
        api_key: Option<String>,
        timeout: Duration,
        max_attempts: usize,
    ) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpBackend {
            agent,
            url: url.trim_end_matches('/').to_string(),
            model: model.to_string(),
            api_key,
            max_attempts: max_attempts.max(1),
            backoff: BASE_BACKOFF,
        }
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    fn attempt(&self, body: &Value) -> std::result::Result<String, (bool, String)> {
        let mut req = self.agent.post(format!("{}/chat/completions", self.url));
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| (true, e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err((true, format!("HTTP {status}")));
        }
        if status >= 400 {
            let text = resp.body_mut().read_to_string().unwrap_or_default();
            return Err((false, format!("HTTP {status}: {text}")));
        }
        let v: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| (false, e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| {
                (
                    false,
                    "response lacks choices[0].message.content".to_string(),
                )
            })
    }
}

impl LlmBackend for HttpBackend {
    fn complete(&self, prompt: &str, temperature: f64, seed: u64) -> Result<String> {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
            "seed": seed,
        });
        let mut last = String::new();
        for attempt in 0..self.max_attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.pow(attempt as u32 - 1));
            }
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err((retryable, msg)) => {
                    last = msg;
                    if !retryable {
                        break;
                    }
                }
            }
        }
        Err(Error::Backend(last))
    }

    fn descriptor(&self) -> String {
        format!("http:{}@{}", self.model, self.url)
    }
}
