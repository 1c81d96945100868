use std::sync::Arc;

use super::{check_prompt, extract_prompt, generate_prompt, Agent, AgentError, AgentRequest, ChatClient, ChatMessage, Role};
use crate::semantic_space::OntologyTree;

/// Agent backed by a chat-completions model.
#[derive(Clone, Debug)]
pub struct LiveAgent {
    client: Arc<ChatClient>,
    tree: Arc<OntologyTree>,
}

impl LiveAgent {
    pub fn new(client: Arc<ChatClient>, tree: Arc<OntologyTree>) -> Self {
        LiveAgent { client, tree }
    }

    pub fn messages(&self, request: &AgentRequest) -> Result<Vec<ChatMessage>, AgentError> {
        request.validate()?;
        let (system, user) = match request.role {
            Role::Generate => (
                "You write single natural English sentences.",
                generate_prompt(
                    request.target(),
                    &self.tree,
                    request.sentence.as_deref().zip(request.hint.as_deref()),
                ),
            ),
            Role::Check => (
                "You check sentences against keyword lists and answer tersely.",
                check_prompt(request.sentence(), request.target(), &self.tree),
            ),
            Role::Extract => (
                "You extract listed elements from sentences and answer in the exact format requested.",
                extract_prompt(request.sentence(), &self.tree),
            ),
        };
        Ok(vec![ChatMessage::system(system), ChatMessage::user(user)])
    }
}

impl Agent for LiveAgent {
    fn respond(&self, request: &AgentRequest) -> Result<String, AgentError> {
        let messages = self.messages(request)?;
        self.client.call(&messages, request.sampling)
    }
}
