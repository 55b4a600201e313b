use serde::{Deserialize, Serialize};

/// Connection and sampling settings for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    /// Base URL of an OpenAI-compatible API, or `mock`.
    pub endpoint: String,
    /// Name of the environment variable holding the API key.
    pub api_key_ref: String,
    pub temperature: f64,
    /// In tokens.
    pub context_window: usize,
    pub max_retries: u32,
    pub timeout_secs: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("temperature {0} outside [0, 2]")]
    Temperature(f64),
    #[error("context window must be positive")]
    ContextWindow,
}

impl ModelConfig {
    /// Defaults for the known models. Unknown names get temperature 0.7 and
    /// a 4K window.
    pub fn for_model(name: &str) -> Self {
        let lower = name.to_ascii_lowercase();
        let (temperature, context_window) = if lower.contains("llama") {
            (0.8, 4096)
        } else if lower.contains("gemma") || lower.contains("gpt-4o") {
            (0.7, 8192)
        } else {
            (0.7, 4096)
        };
        ModelConfig {
            name: name.to_string(),
            endpoint: "https://api.openai.com/v1".to_string(),
            api_key_ref: "SLICEBENCH_API_KEY".to_string(),
            temperature,
            context_window,
            max_retries: 3,
            timeout_secs: 120,
        }
    }

    pub fn mock(name: &str) -> Self {
        ModelConfig { endpoint: "mock".to_string(), ..Self::for_model(name) }
    }

    pub fn is_mock(&self) -> bool {
        self.endpoint == "mock"
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ConfigError::Temperature(self.temperature));
        }
        if self.context_window == 0 {
            return Err(ConfigError::ContextWindow);
        }
        Ok(())
    }
}

/// Provider-independent token estimate: characters / 4 plus a 10% margin.
pub fn estimate_tokens(text: &str) -> usize {
    let chars = text.chars().count();
    (chars * 11).div_ceil(40)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_has_margin() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens(&"a".repeat(400)), 110);
        assert_eq!(estimate_tokens("abcd"), 2);
    }

    #[test]
    fn defaults() {
        assert_eq!(ModelConfig::for_model("Llama-2-7B-Chat").temperature, 0.8);
        assert_eq!(ModelConfig::for_model("gpt-4o").temperature, 0.7);
        assert_eq!(ModelConfig::for_model("gemma-7b").context_window, 8192);
        let mut c = ModelConfig::mock("x");
        assert!(c.validate().is_ok());
        c.temperature = 2.5;
        assert_eq!(c.validate(), Err(ConfigError::Temperature(2.5)));
    }
}
