//! A model client for any OpenAI-compatible chat-completions endpoint.

use std::time::Duration;

use adscribe_core::agent::{Capability, ClientError, ModelClient, ModelRequest};
use serde::Deserialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct HttpModelConfig {
    /// Base URL, e.g. `https://host/v1`; `/chat/completions` is appended.
    pub base_url: String,
    pub api_key: Option<String>,
    pub conversation_model: String,
    pub generation_model: String,
    /// Send the video reference as a `video_url` content part.
    pub attach_media: bool,
    pub timeout: Duration,
}

pub struct HttpModelClient {
    config: HttpModelConfig,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

impl HttpModelClient {
    pub fn new(config: HttpModelConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        HttpModelClient { config, agent }
    }

    pub fn request_body(&self, request: &ModelRequest) -> Value {
        let model = match request.capability {
            Capability::Generation => &self.config.generation_model,
            Capability::Conversation => &self.config.conversation_model,
        };
        let mut content = vec![json!({"type": "text", "text": request.prompt})];
        if let (true, Some(media)) = (self.config.attach_media, &request.media_ref) {
            content.push(json!({"type": "video_url", "video_url": {"url": media}}));
        }
        json!({
            "model": model,
            "temperature": request.temperature,
            "messages": [{"role": "user", "content": content}],
        })
    }
}

impl ModelClient for HttpModelClient {
    fn send(&self, request: &ModelRequest) -> Result<String, ClientError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let mut call = self.agent.post(&url).header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            call = call.header("Authorization", format!("Bearer {key}"));
        }
        let mut response =
            call.send_json(self.request_body(request)).map_err(|e| ClientError::Unavailable(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            let detail = response.body_mut().read_to_string().unwrap_or_default();
            return Err(ClientError::Unavailable(format!("endpoint returned {status}: {detail}")));
        }
        let completion: Completion =
            response.body_mut().read_json().map_err(|e| ClientError::Unavailable(format!("unreadable reply: {e}")))?;
        completion
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ClientError::Unavailable("reply had no message content".into()))
    }
}
