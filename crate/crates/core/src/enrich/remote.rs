use super::{BackendError, Directive, RefineContext, RefinementBackend};
use serde_json::{json, Value};
use std::time::Duration;

pub const ENV_URL: &str = "STRATEX_LLM_URL";
pub const ENV_API_KEY: &str = "STRATEX_LLM_API_KEY";
pub const ENV_MODEL: &str = "STRATEX_LLM_MODEL";
pub const ENV_TIMEOUT: &str = "STRATEX_LLM_TIMEOUT_SECS";

const SYSTEM_PROMPT: &str = "Rewrite the user's text for clarity. Preserve all numbers verbatim. \
Keep every mathematical symbol that appears in the text. Reply with the rewritten text only.";

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    /// Chat-completion endpoint.
    pub url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout: Duration,
    pub retries: u32,
    pub backoff: Duration,
}

impl RemoteConfig {
    pub fn new(url: impl Into<String>) -> Self {
        RemoteConfig {
            url: url.into(),
            api_key: None,
            model: "gpt-4o".to_string(),
            timeout: Duration::from_secs(30),
            retries: 2,
            backoff: Duration::from_millis(500),
        }
    }

    /// Read the endpoint, credential, model and timeout from the environment.
    pub fn from_env() -> Result<Self, BackendError> {
        let url = std::env::var(ENV_URL)
            .map_err(|_| BackendError::Config(format!("{ENV_URL} is not set")))?;
        let mut config = RemoteConfig::new(url);
        config.api_key = std::env::var(ENV_API_KEY).ok();
        if let Ok(model) = std::env::var(ENV_MODEL) {
            config.model = model;
        }
        if let Ok(secs) = std::env::var(ENV_TIMEOUT) {
            let secs: f64 = secs
                .parse()
                .map_err(|_| BackendError::Config(format!("{ENV_TIMEOUT} must be a number")))?;
            config.timeout = Duration::from_secs_f64(secs);
        }
        Ok(config)
    }
}

/// HTTP JSON chat-completion backend.
#[derive(Debug)]
pub struct RemoteBackend {
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        RemoteBackend { config, agent }
    }

    pub fn from_env() -> Result<Self, BackendError> {
        RemoteConfig::from_env().map(RemoteBackend::new)
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn request_body(&self, text: &str, directive: Directive, context: &RefineContext<'_>) -> Value {
        let instruction = match directive {
            Directive::Elaborate => "Elaborate this explanation for a reader with a mathematical background.",
            Directive::Simplify => "Simplify this explanation for a reader without a mathematical background.",
        };
        let roles: Vec<&str> = context.roles.iter().map(|r| r.kind.name()).collect();
        json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [
                { "role": "system", "content": SYSTEM_PROMPT },
                {
                    "role": "user",
                    "content": format!("{instruction}\nConcepts: {}\n\n{text}", roles.join(", ")),
                },
            ],
        })
    }

    fn call_once(&self, body: &Value) -> Result<String, BackendError> {
        let mut request = self.agent.post(&self.config.url);
        if let Some(key) = &self.config.api_key {
            request = request.header("Authorization", format!("Bearer {key}"));
        }
        let response = request.send_json(body).map_err(map_error)?;
        let value: Value = response.into_body().read_json().map_err(map_error)?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(|s| s.trim().to_string())
            .ok_or_else(|| BackendError::BadResponse("missing choices[0].message.content".into()))
    }
}

fn map_error(e: ureq::Error) -> BackendError {
    match e {
        ureq::Error::Timeout(_) => BackendError::Timeout,
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => BackendError::Timeout,
        ureq::Error::Json(e) => BackendError::BadResponse(e.to_string()),
        other => BackendError::Transport(other.to_string()),
    }
}

impl RefinementBackend for RemoteBackend {
    fn label(&self) -> &str {
        "remote"
    }

    fn is_deterministic(&self) -> bool {
        false
    }

    fn refine(
        &self,
        text: &str,
        directive: Directive,
        context: &RefineContext<'_>,
    ) -> Result<String, BackendError> {
        let body = self.request_body(text, directive, context);
        let mut attempt = 0;
        loop {
            match self.call_once(&body) {
                Ok(out) if out.is_empty() => return Err(BackendError::Empty),
                Ok(out) => return Ok(out),
                Err(e) if attempt >= self.config.retries => return Err(e),
                Err(_) => {
                    std::thread::sleep(self.config.backoff * 2u32.pow(attempt));
                    attempt += 1;
                }
            }
        }
    }
}
