//! LLM labeling: prompt templates, response parsing, and a resumable
//! labeling run against a chat-completions endpoint.

mod client;
mod parse;
mod pipeline;
mod prompts;

pub use client::{ChatClient, HttpChatClient, CHAT_TOKEN_VAR, CHAT_URL_VAR};
pub use parse::{parse_response, render_options, ParseConfig, ParseStatus, NO_USAGE_OPTIONS};
pub use pipeline::{annotate_corpus, read_label_records, AnnotateConfig, AnnotateSummary, LabelRecord};
pub use prompts::{
    build_prompt, ChatMessage, ChatRequest, PromptStyle, PromptTemplate, Role, DEFAULT_TEMPERATURE,
    REVIEW_PLACEHOLDER,
};
