use std::collections::VecDeque;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which model tier a request goes to: a heavier one for drafting whole
/// scripts, a faster one for everything conversational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Capability {
    Conversation,
    Generation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelRequest {
    pub prompt: String,
    /// Passed through untouched; clients decide how to attach the video.
    pub media_ref: Option<String>,
    pub capability: Capability,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClientError {
    #[error("model unavailable: {0}")]
    Unavailable(String),
}

pub trait ModelClient: Send + Sync {
    fn send(&self, request: &ModelRequest) -> Result<String, ClientError>;
}

impl<C: ModelClient + ?Sized> ModelClient for &C {
    fn send(&self, request: &ModelRequest) -> Result<String, ClientError> {
        (**self).send(request)
    }
}

impl<C: ModelClient + ?Sized> ModelClient for Box<C> {
    fn send(&self, request: &ModelRequest) -> Result<String, ClientError> {
        (**self).send(request)
    }
}

impl<C: ModelClient + ?Sized> ModelClient for std::sync::Arc<C> {
    fn send(&self, request: &ModelRequest) -> Result<String, ClientError> {
        (**self).send(request)
    }
}

/// Replies from a fixed queue and records every request. Runs dry with
/// [`ClientError::Unavailable`].
#[derive(Debug, Default)]
pub struct ScriptedClient {
    replies: Mutex<VecDeque<Result<String, ClientError>>>,
    requests: Mutex<Vec<ModelRequest>>,
}

impl ScriptedClient {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedClient {
            replies: Mutex::new(replies.into_iter().map(|s| Ok(s.into())).collect()),
            requests: Mutex::new(Vec::new()),
        }
    }

    pub fn push(&self, reply: impl Into<String>) {
        self.replies.lock().unwrap().push_back(Ok(reply.into()));
    }

    pub fn push_failure(&self, message: impl Into<String>) {
        self.replies.lock().unwrap().push_back(Err(ClientError::Unavailable(message.into())));
    }

    pub fn remaining(&self) -> usize {
        self.replies.lock().unwrap().len()
    }

    pub fn requests(&self) -> Vec<ModelRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl ModelClient for ScriptedClient {
    fn send(&self, request: &ModelRequest) -> Result<String, ClientError> {
        self.requests.lock().unwrap().push(request.clone());
        self.replies
            .lock()
            .unwrap()
            .pop_front()
            .unwrap_or_else(|| Err(ClientError::Unavailable("no scripted reply left".into())))
    }
}
