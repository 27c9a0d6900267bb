use std::time::Duration;

use serde::Deserialize;

use super::prompts::ChatRequest;
use crate::embedding::remote::transport_error;
use crate::error::{Error, Result};

/// Environment variable holding the chat-completions URL.
pub const CHAT_URL_VAR: &str = "USAGE_EVAL_CHAT_URL";
/// Environment variable holding the bearer token, if the endpoint needs one.
pub const CHAT_TOKEN_VAR: &str = "USAGE_EVAL_CHAT_TOKEN";

/// Something that answers chat requests with the assistant's text.
pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String>;
}

impl<F> ChatClient for F
where
    F: Fn(&ChatRequest) -> Result<String> + Send + Sync,
{
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        self(request)
    }
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

/// Client for an HTTP endpoint speaking the common chat-completions schema.
pub struct HttpChatClient {
    url: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl HttpChatClient {
    pub fn new(url: impl Into<String>, token: Option<String>, timeout: Duration) -> Result<Self> {
        let url = url.into();
        if url.is_empty() {
            return Err(Error::contract("chat endpoint URL is empty"));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpChatClient { url, token, agent })
    }

    /// Reads the URL and optional token from the environment.
    pub fn from_env(timeout: Duration) -> Result<Self> {
        let url = std::env::var(CHAT_URL_VAR)
            .map_err(|_| Error::contract(format!("{CHAT_URL_VAR} is not set")))?;
        let token = std::env::var(CHAT_TOKEN_VAR).ok().filter(|t| !t.is_empty());
        Self::new(url, token, timeout)
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        let mut req = self.agent.post(&self.url);
        if let Some(token) = &self.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req.send_json(request).map_err(|e| transport_error(&self.url, e))?;
        let status = resp.status().as_u16();
        if status != 200 {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(Error::transport(
                format!("{} answered {status}: {}", self.url, body.trim()),
                status == 408 || status == 429 || status >= 500,
            ));
        }
        let parsed: CompletionResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| Error::format(Some(&self.url), 1, format!("bad chat response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content.unwrap_or_default())
            .ok_or_else(|| Error::format(Some(&self.url), 1, "chat response has no choices"))
    }
}
