use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{LlmError, LlmRequest, LlmResponse};

/// An OpenAI-style `/chat/completions` endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token; no header is sent when unset.
    pub api_key_env: String,
    pub timeout_s: u64,
    /// Total attempts for transport failures and 5xx responses.
    pub retries: u32,
    pub backoff_ms: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o-mini".into(),
            api_key_env: "DS2SC_API_KEY".into(),
            timeout_s: 300,
            retries: 3,
            backoff_ms: 1000,
        }
    }
}

enum Attempt {
    Done(LlmResponse),
    Retry(LlmError),
    Fatal(LlmError),
}

impl ProviderConfig {
    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }

    pub(super) fn complete(&self, req: &LlmRequest) -> Result<LlmResponse, LlmError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(self.timeout_s.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        let body = json!({
            "model": self.model,
            "temperature": req.temperature,
            "messages": [
                {"role": "system", "content": req.system_prompt},
                {"role": "user", "content": req.user_payload},
            ],
        });
        let key = std::env::var(&self.api_key_env).ok().filter(|k| !k.is_empty());
        let attempts = self.retries.max(1);
        let mut last = None;
        for attempt in 1..=attempts {
            if attempt > 1 {
                let wait = self.backoff_ms.saturating_mul(1 << (attempt - 2).min(16));
                log::warn!("provider attempt {attempt}/{attempts} after {wait} ms");
                std::thread::sleep(Duration::from_millis(wait));
            }
            match self.attempt(&agent, &body, key.as_deref(), req) {
                Attempt::Done(r) => return Ok(r),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(e) => last = Some(e),
            }
        }
        Err(match last {
            Some(LlmError::Transport { message, .. }) => LlmError::Transport { attempts, message },
            Some(e) => e,
            None => unreachable!("at least one attempt runs"),
        })
    }

    fn attempt(&self, agent: &ureq::Agent, body: &Value, key: Option<&str>, req: &LlmRequest) -> Attempt {
        let started = Instant::now();
        let mut call = agent.post(&self.endpoint()).header("Content-Type", "application/json");
        if let Some(k) = key {
            call = call.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = match call.send_json(body) {
            Ok(r) => r,
            Err(e) => {
                return Attempt::Retry(LlmError::Transport {
                    attempts: 1,
                    message: e.to_string(),
                })
            }
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => {
                return Attempt::Retry(LlmError::Transport {
                    attempts: 1,
                    message: e.to_string(),
                })
            }
        };
        match status {
            200..=299 => {}
            401 | 403 => return Attempt::Fatal(LlmError::Auth { status }),
            500..=599 => return Attempt::Retry(LlmError::Http { status, body: text }),
            _ => return Attempt::Fatal(LlmError::Http { status, body: text }),
        }
        let parsed: Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => return Attempt::Fatal(LlmError::Protocol(e.to_string())),
        };
        let choice = &parsed["choices"][0];
        let Some(content) = choice["message"]["content"].as_str() else {
            return Attempt::Fatal(LlmError::Protocol("missing choices[0].message.content".into()));
        };
        let mut truncated = choice["finish_reason"].as_str() == Some("length");
        let mut content = content.to_string();
        if content.chars().count() > req.max_output_chars {
            content = content.chars().take(req.max_output_chars).collect();
            truncated = true;
        }
        Attempt::Done(LlmResponse {
            text: content,
            provider_id: format!("live:{}", self.model),
            elapsed_ms: started.elapsed().as_millis() as u64,
            truncated,
        })
    }
}
