//! Generation, check and extraction agents behind one interface, and the
//! feedback loop that regenerates a sentence until the checker accepts it.

mod chat;
mod live;
mod mock;
mod prompt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semantic_space::{OntologyTree, SemType};

pub use chat::{ChatClient, ChatMessage, EndpointConfig, Transport, TransportError, TransportResponse, UreqTransport};
pub use live::LiveAgent;
pub use mock::{check_sentence, FaultKind, FaultPlan, MockAgent};
pub use prompt::{check_prompt, extract_prompt, format_type_reply, generate_prompt, parse_type_reply};

/// Reply that marks a sentence as compliant.
pub const APPROVAL: &str = "Good. No errors.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Generate,
    Check,
    Extract,
}

/// Sampling settings forwarded untouched to live models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams {
            temperature: 0.8,
            top_p: 0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentRequest {
    pub role: Role,
    pub target: Option<SemType>,
    pub sentence: Option<String>,
    /// Checker feedback on the previous attempt.
    pub hint: Option<String>,
    pub attempt: u32,
    /// Position of the sentence in its message; lets mocks vary per sentence.
    pub sequence: u64,
    pub sampling: SamplingParams,
}

impl AgentRequest {
    pub fn generate(target: &SemType, attempt: u32, previous: Option<(&str, &str)>, sequence: u64, sampling: SamplingParams) -> Self {
        AgentRequest {
            role: Role::Generate,
            target: Some(target.clone()),
            sentence: previous.map(|(s, _)| s.to_string()),
            hint: previous.map(|(_, h)| h.to_string()),
            attempt,
            sequence,
            sampling,
        }
    }

    pub fn check(sentence: &str, target: &SemType, attempt: u32, sequence: u64, sampling: SamplingParams) -> Self {
        AgentRequest {
            role: Role::Check,
            target: Some(target.clone()),
            sentence: Some(sentence.to_string()),
            hint: None,
            attempt,
            sequence,
            sampling,
        }
    }

    pub fn extract(sentence: &str, attempt: u32, sampling: SamplingParams) -> Self {
        AgentRequest {
            role: Role::Extract,
            target: None,
            sentence: Some(sentence.to_string()),
            hint: None,
            attempt,
            sequence: 0,
            sampling,
        }
    }

    /// Checks the fields each role needs.
    pub fn validate(&self) -> Result<(), AgentError> {
        let ok = match self.role {
            Role::Generate => self.target.is_some(),
            Role::Check => self.target.is_some() && self.sentence.is_some(),
            Role::Extract => self.sentence.is_some(),
        };
        if ok {
            Ok(())
        } else {
            Err(AgentError::InvalidRequest(self.role))
        }
    }

    pub(crate) fn target(&self) -> &SemType {
        self.target.as_ref().expect("validated")
    }

    pub(crate) fn sentence(&self) -> &str {
        self.sentence.as_deref().expect("validated")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("request is missing fields required for {0:?}")]
    InvalidRequest(Role),
    #[error("generation failed after {attempts} attempts; last hint: {last_hint}")]
    GenerationFailed { attempts: u32, last_hint: String },
    #[error("extraction failed: unparseable reply {reply:?}")]
    ExtractionFailed { reply: String },
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("request timed out after {after_ms} ms")]
    Timeout { after_ms: u64 },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl AgentError {
    /// Short machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            AgentError::InvalidRequest(_) => "invalid_request",
            AgentError::GenerationFailed { .. } => "generation_failed",
            AgentError::ExtractionFailed { .. } => "extraction_failed",
            AgentError::Auth { .. } => "auth",
            AgentError::Http { .. } => "http",
            AgentError::Timeout { .. } => "timeout",
            AgentError::Transport(_) => "transport",
            AgentError::Malformed(_) => "malformed",
            AgentError::Config(_) => "config",
        }
    }
}

/// One model, in one role or all three.
pub trait Agent: Send + Sync {
    fn respond(&self, request: &AgentRequest) -> Result<String, AgentError>;
}

impl<A: Agent + ?Sized> Agent for std::sync::Arc<A> {
    fn respond(&self, request: &AgentRequest) -> Result<String, AgentError> {
        (**self).respond(request)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckVerdict {
    pub approved: bool,
    /// Empty exactly when approved.
    pub hint: String,
}

impl CheckVerdict {
    pub fn approve() -> Self {
        CheckVerdict {
            approved: true,
            hint: String::new(),
        }
    }

    pub fn reject(hint: impl Into<String>) -> Self {
        let hint = hint.into();
        let hint = if hint.trim().is_empty() {
            "The sentence does not match the keywords.".to_string()
        } else {
            hint
        };
        CheckVerdict { approved: false, hint }
    }

    /// Reads a checker reply: approval starts with "Good" and says there are
    /// no errors; anything else is the hint.
    pub fn parse(reply: &str) -> Self {
        let text = reply.trim();
        let lower = text.to_lowercase();
        if lower.starts_with("good") && (lower.contains("no errors") || lower.contains("no error")) {
            Self::approve()
        } else {
            Self::reject(text)
        }
    }

    pub fn to_reply(&self) -> String {
        if self.approved {
            APPROVAL.to_string()
        } else {
            self.hint.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeedbackConfig {
    pub max_iterations: u32,
    #[serde(flatten)]
    pub sampling: SamplingParams,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        FeedbackConfig {
            max_iterations: 5,
            sampling: SamplingParams::default(),
        }
    }
}

/// One generate/check exchange.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub attempt: u32,
    pub sentence: String,
    pub feedback: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generation {
    pub sentence: String,
    /// Regenerations needed; 0 when the first sentence passed.
    pub iterations: u32,
    pub transcript: Vec<TranscriptEntry>,
}

/// Generate, check, and regenerate with the checker's hint until a sentence
/// is approved or `max_iterations` regenerations have been spent.
pub fn generate_stego(
    target: &SemType,
    cfg: &FeedbackConfig,
    generator: &dyn Agent,
    checker: &dyn Agent,
    sequence: u64,
) -> Result<Generation, AgentError> {
    let mut transcript: Vec<TranscriptEntry> = Vec::new();
    for attempt in 0..=cfg.max_iterations {
        let previous = transcript.last().map(|e| (e.sentence.as_str(), e.feedback.as_str()));
        let request = AgentRequest::generate(target, attempt, previous, sequence, cfg.sampling);
        let sentence = first_line(&generator.respond(&request)?);
        let verdict = CheckVerdict::parse(&checker.respond(&AgentRequest::check(
            &sentence,
            target,
            attempt,
            sequence,
            cfg.sampling,
        ))?);
        transcript.push(TranscriptEntry {
            attempt,
            sentence: sentence.clone(),
            feedback: verdict.to_reply(),
        });
        if verdict.approved {
            return Ok(Generation {
                sentence,
                iterations: attempt,
                transcript,
            });
        }
    }
    Err(AgentError::GenerationFailed {
        attempts: cfg.max_iterations + 1,
        last_hint: transcript.pop().map(|e| e.feedback).unwrap_or_default(),
    })
}

/// Sentences travel one per line, so only the first non-empty line counts.
fn first_line(reply: &str) -> String {
    reply
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("")
        .trim_matches('"')
        .to_string()
}

/// Asks the extraction agent for the sentence's type, retrying once on an
/// unparseable reply.
pub fn extract_sentence_type(
    sentence: &str,
    tree: &OntologyTree,
    extractor: &dyn Agent,
    sampling: SamplingParams,
) -> Result<SemType, AgentError> {
    let mut last = String::new();
    for attempt in 0..2 {
        let reply = extractor.respond(&AgentRequest::extract(sentence, attempt, sampling))?;
        match parse_type_reply(&reply, tree) {
            Some(t) => return Ok(t),
            None => last = reply,
        }
    }
    Err(AgentError::ExtractionFailed { reply: last })
}
