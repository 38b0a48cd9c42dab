use adscribe_core::narration::{ExportError, NarrationError};
use adscribe_core::script::{EditError, ParseError, Violation};
use serde::Serialize;
use thiserror::Error;

use crate::store::StoreError;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no project with id {0}")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("script does not parse")]
    Parse(Vec<ParseError>),
    #[error("script breaks {} rule(s)", .0.len())]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Edit(#[from] EditError),
    #[error("there is no pending suggestion")]
    NoSuggestion,
    #[error("{message}")]
    Agent { code: &'static str, message: String, text_response: String },
    #[error(transparent)]
    Narration(#[from] NarrationError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("missing or wrong bearer token")]
    Unauthorized,
    #[error("{0}")]
    Internal(String),
}

/// Body of every error reply.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub parse_errors: Vec<ParseError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text_response: Option<String>,
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::NotFound(_) => "NOT_FOUND",
            ServiceError::BadRequest(_) => "BAD_REQUEST",
            ServiceError::Parse(_) => "SCRIPT_PARSE_ERROR",
            ServiceError::Invalid(_) => "SCRIPT_INVALID",
            ServiceError::Edit(_) => "EDIT_REJECTED",
            ServiceError::NoSuggestion => "NO_SUGGESTION",
            ServiceError::Agent { code, .. } => code,
            ServiceError::Narration(NarrationError::EmptyNarration(_)) => "EMPTY_NARRATION",
            ServiceError::Narration(NarrationError::CueNotFound(_)) => "CUE_NOT_FOUND",
            ServiceError::Narration(_) => "NARRATION_FAILED",
            ServiceError::Export(ExportError::InvalidScript(_)) => "SCRIPT_INVALID",
            ServiceError::Export(ExportError::ToolMissing(_)) => "MEDIA_TOOL_MISSING",
            ServiceError::Export(ExportError::DurationMismatch { .. }) => "DURATION_MISMATCH",
            ServiceError::Export(_) => "EXPORT_FAILED",
            ServiceError::Store(_) => "STORAGE_FAILURE",
            ServiceError::Unauthorized => "UNAUTHORIZED",
            ServiceError::Internal(_) => "INTERNAL",
        }
    }

    /// HTTP status for this error.
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::NotFound(_) => 404,
            ServiceError::BadRequest(_) => 400,
            ServiceError::Parse(_) | ServiceError::Invalid(_) | ServiceError::Edit(_) => 422,
            ServiceError::NoSuggestion => 409,
            ServiceError::Agent { code: "MODEL_UNAVAILABLE", .. } => 503,
            ServiceError::Agent { .. } => 502,
            ServiceError::Narration(NarrationError::CueNotFound(_)) => 404,
            ServiceError::Narration(NarrationError::EmptyNarration(_)) => 422,
            ServiceError::Narration(_) => 500,
            ServiceError::Export(ExportError::InvalidScript(_)) => 422,
            ServiceError::Export(_) => 500,
            ServiceError::Store(_) | ServiceError::Internal(_) => 500,
            ServiceError::Unauthorized => 401,
        }
    }

    pub fn body(&self) -> ErrorBody {
        let violations = match self {
            ServiceError::Invalid(v) | ServiceError::Export(ExportError::InvalidScript(v)) => v.clone(),
            _ => Vec::new(),
        };
        let parse_errors = match self {
            ServiceError::Parse(p) => p.clone(),
            _ => Vec::new(),
        };
        let text_response = match self {
            ServiceError::Agent { text_response, .. } => Some(text_response.clone()),
            _ => None,
        };
        ErrorBody { code: self.code(), message: self.to_string(), violations, parse_errors, text_response }
    }
}
