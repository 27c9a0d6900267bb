use serde::{Deserialize, Serialize};

use super::parse::render_options;
use crate::error::{Error, Result};
use crate::set_metrics::UsageOptionSet;

pub const DEFAULT_TEMPERATURE: f64 = 0.2;

/// Stands in for the review body in rendered golden prompts.
pub const REVIEW_PLACEHOLDER: &str = "[review_body]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptStyle {
    /// The answer is the option list itself.
    Plain,
    /// Reasoning first, then a `Result:` line with the option list.
    ChainOfThought,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        ChatMessage {
            role,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

/// A system message followed by worked examples as user/assistant turns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: String,
    pub style: PromptStyle,
    pub system_text: String,
    pub example_turns: Vec<(String, String)>,
}

const SYSTEM_INTRO: &str = "You are a data labeler, tasked with extracting usage options from product reviews. \
I will give you a customer review for an e-commerce product. You should answer the question \
“What can this product be used for?” by only using information from the review author. ";

const SYSTEM_PLAIN: &str = "Reply only and strictly with the list of usage options separated by a semicolon. \
If the review author does not mention any usage option, output “No usage options”. ";

const SYSTEM_COT: &str = "You should first explain your thought process step-by-step, followed by the actual \
result (“Result:”). Your result may only be a list of usage options separated by a semicolon. \
If the review author does not mention any usage option, your result should be “No usage options”. ";

const SYSTEM_OUTRO: &str = "Do not output negative usage options or further product information like product \
quality, attributes, target audiences, etc.";

struct Example {
    review: &'static str,
    reasoning: &'static str,
    options: &'static [&'static str],
}

const EXAMPLES: [Example; 6] = [
    Example {
        review: "This grill is perfect for home BBQs and was suprisingly also able to smoke vegetables. \
                 Apparently it can also be used for camping trips but I found it to be too big.",
        reasoning: "The review author first mentions that the grill is perfect for home BBQs. Then, the author \
                    mentions that they used it to smoke vegetables. Finally, the author mentions that the product \
                    can not be used for camping trips because it is too big.",
        options: &["home BBQs", "smoke vegetables"],
    },
    Example {
        review: "This was a perfect gift for my 10 year old daughter.",
        reasoning: "The review author mentions that the product can be used as a gift for their daughter, but \
                    gifting does not count as an usage option.",
        options: &[],
    },
    Example {
        review: "Love love love them they offer such storage for lip sticks and concealers. And they make your \
                 make up counter look very well kept",
        reasoning: "The review author first mentions that the product can be used for storing lipsticks and \
                    concealers. Then, the author mentions that they also use it to make their make up counter \
                    look well kept.",
        options: &["storage for lip sticks", "storage for concealers", "organize make up counter"],
    },
    Example {
        review: "Very pretty and feminine.  This blouse is made of sort of voile, so a camisole under it will be \
                 needed, but it is lovely by design and everything else.  Very nice!",
        reasoning: "The review author mentions that the product is pretty and voile which is a personal opinion \
                    of the product and not a usage option.",
        options: &[],
    },
    Example {
        review: "helps alleviate pressure from pregnancy.  I like its squishyness! :)",
        reasoning: "The review author mentions that the product was helpful in alleviating pressure from \
                    pregnancy.",
        options: &["alleviate pressure from pregnancy"],
    },
    Example {
        review: "The printer arrived on time and was easy to set up. It prints very fast and the quality is great. \
                 It is perfect for printing pictures. I am very happy with this purchase. \n\nUpdate: After two \
                 weeks the quality has dedeteriorated enormously. Don't buy this",
        reasoning: "Initially, the review author was happy with his printer and used it for printing pictures. \
                    However, after two weeks the quality deteriorated and therfore “printing pictures” is not a \
                    valid usage options.",
        options: &[],
    },
];

impl PromptTemplate {
    /// One of the four built-in templates: `shots` is 2 or 6.
    pub fn builtin(style: PromptStyle, shots: usize) -> Result<Self> {
        if shots != 2 && shots != 6 {
            return Err(Error::contract(format!("built-in prompts have 2 or 6 examples, not {shots}")));
        }
        let middle = match style {
            PromptStyle::Plain => SYSTEM_PLAIN,
            PromptStyle::ChainOfThought => SYSTEM_COT,
        };
        let example_turns = EXAMPLES[..shots]
            .iter()
            .map(|ex| {
                let answer = render_options(&UsageOptionSet::new(ex.options.iter().copied()));
                let assistant = match style {
                    PromptStyle::Plain => answer,
                    PromptStyle::ChainOfThought => format!("{}\n\nResult: {answer}", ex.reasoning),
                };
                (ex.review.to_owned(), assistant)
            })
            .collect();
        let prefix = match style {
            PromptStyle::Plain => "plain",
            PromptStyle::ChainOfThought => "cot",
        };
        Ok(PromptTemplate {
            name: format!("{prefix}-{shots}"),
            style,
            system_text: format!("{SYSTEM_INTRO}{middle}{SYSTEM_OUTRO}"),
            example_turns,
        })
    }

    /// Looks a built-in up by name: `plain-2`, `plain-6`, `cot-2` or `cot-6`.
    pub fn by_name(name: &str) -> Result<Self> {
        let (style, shots) = match name {
            "plain-2" => (PromptStyle::Plain, 2),
            "plain-6" => (PromptStyle::Plain, 6),
            "cot-2" => (PromptStyle::ChainOfThought, 2),
            "cot-6" => (PromptStyle::ChainOfThought, 6),
            other => {
                return Err(Error::contract(format!(
                    "unknown prompt {other:?}; expected plain-2, plain-6, cot-2 or cot-6"
                )))
            }
        };
        Self::builtin(style, shots)
    }

    pub fn builtins() -> Vec<PromptTemplate> {
        ["plain-2", "plain-6", "cot-2", "cot-6"]
            .iter()
            .map(|n| Self::by_name(n).expect("built-in names are valid"))
            .collect()
    }

    pub fn messages(&self, review_body: &str) -> Vec<ChatMessage> {
        let mut messages = Vec::with_capacity(2 + 2 * self.example_turns.len());
        messages.push(ChatMessage::new(Role::System, self.system_text.clone()));
        for (user, assistant) in &self.example_turns {
            messages.push(ChatMessage::new(Role::User, user.clone()));
            messages.push(ChatMessage::new(Role::Assistant, assistant.clone()));
        }
        messages.push(ChatMessage::new(Role::User, review_body));
        messages
    }

    /// Pretty-printed JSON of the messages with the review placeholder, as
    /// stored in the golden prompt files.
    pub fn render_golden(&self) -> String {
        #[derive(Serialize)]
        struct Golden {
            messages: Vec<ChatMessage>,
        }
        let golden = Golden {
            messages: self.messages(REVIEW_PLACEHOLDER),
        };
        let mut s = serde_json::to_string_pretty(&golden).expect("messages serialize");
        s.push('\n');
        s
    }
}

pub fn build_prompt(
    template: &PromptTemplate,
    review_body: &str,
    model: &str,
    temperature: Option<f64>,
) -> Result<ChatRequest> {
    if review_body.trim().is_empty() {
        return Err(Error::contract("cannot build a prompt for an empty review body"));
    }
    Ok(ChatRequest {
        model: model.to_owned(),
        messages: template.messages(review_body),
        temperature: temperature.unwrap_or(DEFAULT_TEMPERATURE),
    })
}
