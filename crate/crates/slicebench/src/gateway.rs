//! Chat-completion client with retries, a pre-flight context check, and a
//! fixture-backed mock provider.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;
use slicebench_core::prompt::{estimate_tokens, ModelConfig};
use tokio::sync::Semaphore;

pub const DEFAULT_CONCURRENCY: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("prompt needs about {estimated} tokens but the context window is {window}")]
    ContextOverflow { estimated: usize, window: usize },
    #[error("still rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("transport error after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint answered {status}: {body}")]
    Api { status: u16, body: String },
    #[error("completion payload has no message content: {0}")]
    Payload(String),
    #[error("no mock fixture for task {task} (looked in {looked})")]
    MissingFixture { task: String, looked: String },
}

impl GatewayError {
    pub fn kind(&self) -> &'static str {
        match self {
            GatewayError::ContextOverflow { .. } => "context_overflow",
            GatewayError::RateLimited { .. } => "rate_limited",
            GatewayError::Transport { .. } => "transport",
            GatewayError::Api { .. } => "api",
            GatewayError::Payload(_) => "payload",
            GatewayError::MissingFixture { .. } => "missing_fixture",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallMeta {
    pub latency_ms: u64,
    pub prompt_tokens: usize,
    pub completion_tokens: usize,
    pub retry_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub meta: CallMeta,
}

/// Which fixture a mock call should answer with.
#[derive(Debug, Clone, Copy)]
pub struct CallContext<'a> {
    pub experiment: &'a str,
    pub task_id: &'a str,
}

#[derive(Debug, Clone)]
pub struct GatewayOptions {
    /// Root of `fixtures/<experiment>/<task>.txt` for mock models.
    pub fixtures: Option<PathBuf>,
    pub concurrency: usize,
    /// First retry delay; doubles per attempt.
    pub backoff: Duration,
    pub max_backoff: Duration,
}

impl Default for GatewayOptions {
    fn default() -> Self {
        GatewayOptions {
            fixtures: None,
            concurrency: DEFAULT_CONCURRENCY,
            backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(30),
        }
    }
}

#[derive(Clone)]
pub struct Gateway {
    client: reqwest::Client,
    opts: GatewayOptions,
    in_flight: Arc<Semaphore>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct Usage {
    #[serde(default)]
    prompt_tokens: Option<usize>,
    #[serde(default)]
    completion_tokens: Option<usize>,
}

enum Attempt {
    Done(String, Option<Usage>),
    Retry(Option<Duration>, GatewayError),
    Fail(GatewayError),
}

impl Gateway {
    pub fn new(opts: GatewayOptions) -> Self {
        let in_flight = Arc::new(Semaphore::new(opts.concurrency.max(1)));
        Gateway { client: reqwest::Client::new(), opts, in_flight }
    }

    pub fn options(&self) -> &GatewayOptions {
        &self.opts
    }

    /// Sends one prompt. Oversized prompts are rejected before any I/O.
    pub async fn complete(&self, prompt: &str, config: &ModelConfig, ctx: CallContext<'_>) -> Result<Completion, GatewayError> {
        let estimated = estimate_tokens(prompt);
        if estimated > config.context_window {
            return Err(GatewayError::ContextOverflow { estimated, window: config.context_window });
        }
        let _permit = self.in_flight.acquire().await.expect("semaphore never closed");
        let start = Instant::now();
        let (text, usage, retry_count) = if config.is_mock() {
            (self.mock_answer(config, ctx).await?, None, 0)
        } else {
            self.http_answer(prompt, config).await?
        };
        let meta = CallMeta {
            latency_ms: start.elapsed().as_millis() as u64,
            prompt_tokens: usage.as_ref().and_then(|u| u.prompt_tokens).unwrap_or(estimated),
            completion_tokens: usage.as_ref().and_then(|u| u.completion_tokens).unwrap_or_else(|| estimate_tokens(&text)),
            retry_count,
        };
        Ok(Completion { text, meta })
    }

    fn fixture_candidates(root: &Path, config: &ModelConfig, ctx: CallContext<'_>) -> Vec<PathBuf> {
        let dir = root.join(ctx.experiment);
        let file = format!("{}.txt", ctx.task_id);
        vec![dir.join(&config.name).join(&file), dir.join(file)]
    }

    async fn mock_answer(&self, config: &ModelConfig, ctx: CallContext<'_>) -> Result<String, GatewayError> {
        let root = self.opts.fixtures.clone().unwrap_or_else(|| PathBuf::from("fixtures"));
        let candidates = Self::fixture_candidates(&root, config, ctx);
        for p in &candidates {
            if let Ok(text) = tokio::fs::read_to_string(p).await {
                return Ok(text);
            }
        }
        let looked = candidates.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ");
        Err(GatewayError::MissingFixture { task: ctx.task_id.to_string(), looked })
    }

    async fn http_answer(&self, prompt: &str, config: &ModelConfig) -> Result<(String, Option<Usage>, u32), GatewayError> {
        let url = format!("{}/chat/completions", config.endpoint.trim_end_matches('/'));
        let body = json!({
            "model": config.name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": config.temperature,
        });
        let key = std::env::var(&config.api_key_ref).ok();
        let mut attempt = 0u32;
        loop {
            let outcome = self.attempt(&url, &body, key.as_deref(), config).await;
            match outcome {
                Attempt::Done(text, usage) => return Ok((text, usage, attempt)),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(after, e) => {
                    if attempt >= config.max_retries {
                        return Err(match e {
                            GatewayError::RateLimited { .. } => GatewayError::RateLimited { attempts: attempt + 1 },
                            GatewayError::Transport { message, .. } => GatewayError::Transport { attempts: attempt + 1, message },
                            other => other,
                        });
                    }
                    let exp = self.opts.backoff.saturating_mul(1 << attempt.min(16));
                    let wait = after.unwrap_or(exp).min(self.opts.max_backoff);
                    tracing::warn!(%url, attempt, ?wait, error = %e, "retrying");
                    tokio::time::sleep(wait).await;
                    attempt += 1;
                }
            }
        }
    }

    async fn attempt(&self, url: &str, body: &serde_json::Value, key: Option<&str>, config: &ModelConfig) -> Attempt {
        let mut req = self.client.post(url).json(body).timeout(Duration::from_secs(config.timeout_secs));
        if let Some(k) = key {
            req = req.bearer_auth(k);
        }
        let resp = match req.send().await {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(None, GatewayError::Transport { attempts: 0, message: e.to_string() }),
        };
        let status = resp.status();
        if status.as_u16() == 429 {
            let after = resp
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            return Attempt::Retry(after, GatewayError::RateLimited { attempts: 0 });
        }
        let text = match resp.text().await {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(None, GatewayError::Transport { attempts: 0, message: e.to_string() }),
        };
        if status.is_server_error() {
            return Attempt::Retry(None, GatewayError::Api { status: status.as_u16(), body: text });
        }
        if !status.is_success() {
            return Attempt::Fail(GatewayError::Api { status: status.as_u16(), body: text });
        }
        match serde_json::from_str::<ChatResponse>(&text) {
            Ok(mut r) if !r.choices.is_empty() => match r.choices.swap_remove(0).message.content {
                Some(c) => Attempt::Done(c, r.usage),
                None => Attempt::Fail(GatewayError::Payload("null content".into())),
            },
            Ok(_) => Attempt::Fail(GatewayError::Payload("no choices".into())),
            Err(e) => Attempt::Fail(GatewayError::Payload(e.to_string())),
        }
    }
}
