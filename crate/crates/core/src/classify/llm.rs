//! Chat-completions backed classifier.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use async_trait::async_trait;
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde_json::{json, Value};
use tokio::sync::Semaphore;

use super::{
    render_classification_prompt, render_lookup_prompt, ClassifyError, Classifier,
    ElementClassification,
};
use crate::capture::CaptureEvent;
use crate::model::{word_count, ElementType};

pub const DEFAULT_MAX_INFLIGHT: usize = 4;
pub const DEFAULT_MODEL: &str = "gpt-4o";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageAttachment {
    pub mime: String,
    pub bytes: Vec<u8>,
}

impl ImageAttachment {
    pub fn data_url(&self) -> String {
        format!("data:{};base64,{}", self.mime, BASE64.encode(&self.bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatRequest {
    pub prompt: String,
    pub image: Option<ImageAttachment>,
}

/// Transport to a chat model. Errors are reported as
/// [`ClassifyError::LlmUnavailable`].
#[async_trait]
pub trait ChatBackend: Send + Sync {
    async fn complete(&self, request: ChatRequest) -> Result<String, ClassifyError>;
}

/// OpenAI-style `/chat/completions` client.
#[derive(Debug, Clone)]
pub struct HttpChatBackend {
    client: reqwest::Client,
    endpoint: String,
    api_key: String,
    model: String,
}

impl HttpChatBackend {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>) -> Self {
        HttpChatBackend {
            client: reqwest::Client::new(),
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            model: DEFAULT_MODEL.to_string(),
        }
    }

    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model = model.into();
        self
    }

    fn body(&self, request: &ChatRequest) -> Value {
        let mut content = vec![json!({"type": "text", "text": request.prompt})];
        if let Some(image) = &request.image {
            content.push(json!({"type": "image_url", "image_url": {"url": image.data_url()}}));
        }
        json!({
            "model": self.model,
            "messages": [{"role": "user", "content": content}],
        })
    }
}

#[async_trait]
impl ChatBackend for HttpChatBackend {
    async fn complete(&self, request: ChatRequest) -> Result<String, ClassifyError> {
        let unavailable = |e: reqwest::Error| ClassifyError::LlmUnavailable(e.to_string());
        let resp = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&self.body(&request))
            .send()
            .await
            .map_err(unavailable)?;
        let status = resp.status();
        if !status.is_success() {
            let text = resp.text().await.unwrap_or_default();
            return Err(ClassifyError::LlmUnavailable(format!("HTTP {status}: {text}")));
        }
        let body: Value = resp.json().await.map_err(unavailable)?;
        body["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ClassifyError::LlmUnavailable("response lacks message content".into()))
    }
}

/// Backend that replays canned replies in order and records every request.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    replies: Mutex<VecDeque<Result<String, String>>>,
    requests: Mutex<Vec<ChatRequest>>,
}

impl ScriptedBackend {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedBackend {
            replies: Mutex::new(replies.into_iter().map(|r| Ok(r.into())).collect()),
            requests: Mutex::new(Vec::new()),
        }
    }

    /// Queues a transport failure.
    pub fn push_failure(&self, message: impl Into<String>) {
        self.replies.lock().unwrap().push_back(Err(message.into()));
    }

    pub fn push_reply(&self, reply: impl Into<String>) {
        self.replies.lock().unwrap().push_back(Ok(reply.into()));
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.requests.lock().unwrap().clone()
    }
}

#[async_trait]
impl ChatBackend for ScriptedBackend {
    async fn complete(&self, request: ChatRequest) -> Result<String, ClassifyError> {
        self.requests.lock().unwrap().push(request);
        match self.replies.lock().unwrap().pop_front() {
            Some(Ok(reply)) => Ok(reply),
            Some(Err(msg)) => Err(ClassifyError::LlmUnavailable(msg)),
            None => Err(ClassifyError::LlmUnavailable("no scripted reply left".into())),
        }
    }
}

const LABELS: [&str; 3] = ["element", "description", "keywords"];

/// Byte offsets of `label` followed by optional blanks and a colon, where
/// the label is not the tail of a longer word.
fn find_label(lower: &str, label: &str) -> Option<(usize, usize)> {
    let bytes = lower.as_bytes();
    let mut from = 0;
    while let Some(rel) = lower[from..].find(label) {
        let start = from + rel;
        let mut end = start + label.len();
        let boundary = start == 0 || !bytes[start - 1].is_ascii_alphanumeric();
        while end < bytes.len() && (bytes[end] == b' ' || bytes[end] == b'\t') {
            end += 1;
        }
        if boundary && end < bytes.len() && bytes[end] == b':' {
            return Some((start, end + 1));
        }
        from = start + label.len();
    }
    None
}

fn clean_value(v: &str) -> &str {
    v.trim_matches(|c: char| c.is_whitespace() || matches!(c, '-' | '/' | '|' | '*' | '`'))
}

fn parse_element(value: &str) -> Option<ElementType> {
    let v = value
        .lines()
        .next()
        .unwrap_or("")
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    let v = v.as_str();
    if v.starts_with("text") {
        Some(ElementType::Text)
    } else if v.starts_with("dialogue") || v.starts_with("npc dialogue") || v.starts_with("dialog") {
        Some(ElementType::Dialogue)
    } else if v.starts_with("artifact") || v.starts_with("inventory") {
        Some(ElementType::Artifact)
    } else if v.starts_with("environment") {
        Some(ElementType::Environment)
    } else {
        None
    }
}

fn parse_keywords(value: &str) -> Vec<String> {
    if value.trim().eq_ignore_ascii_case("none") {
        return Vec::new();
    }
    value
        .split([',', ';', '\n'])
        .map(|k| k.trim_matches(|c: char| c.is_whitespace() || matches!(c, '-' | '"' | '\'' | '`' | '.' | '*')))
        .filter(|k| !k.is_empty())
        .map(str::to_string)
        .collect()
}

/// Parses an `Element / Description / Keywords` reply, tolerating markdown
/// bullets and bold markers. The result is not yet capped.
pub fn parse_reply(reply: &str) -> Result<ElementClassification, String> {
    let text = reply.replace("**", "");
    let lower = text.to_ascii_lowercase();
    let mut found: Vec<(usize, usize, usize)> = Vec::new();
    for (li, label) in LABELS.iter().enumerate() {
        match find_label(&lower, label) {
            Some((start, value_start)) => found.push((start, value_start, li)),
            None => return Err(format!("reply has no `{label}:` field")),
        }
    }
    found.sort_unstable();
    let mut values = [""; 3];
    for (i, &(_, value_start, li)) in found.iter().enumerate() {
        let end = found.get(i + 1).map(|f| f.0).unwrap_or(text.len());
        values[li] = clean_value(&text[value_start..end]);
    }
    let element =
        parse_element(values[0]).ok_or_else(|| format!("unknown element `{}`", values[0]))?;
    let description = values[1]
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    Ok(ElementClassification {
        element,
        description,
        keywords: parse_keywords(values[2]),
    })
}

fn mime_for(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("jpg") | Some("jpeg") => "image/jpeg",
        Some("webp") => "image/webp",
        Some("gif") => "image/gif",
        Some("mp4") => "video/mp4",
        _ => "image/png",
    }
}

/// Sends the classification prompt with the event's media, parses the
/// reply (one retry on a malformed reply) and enforces the output caps.
pub async fn llm_classify(
    event: &CaptureEvent,
    backend: &dyn ChatBackend,
    data_dir: &Path,
) -> Result<ElementClassification, ClassifyError> {
    let path = data_dir.join(&event.media.path);
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|source| ClassifyError::MediaUnreadable {
            path: event.media.path.clone(),
            source,
        })?;
    let request = ChatRequest {
        prompt: render_classification_prompt().to_string(),
        image: Some(ImageAttachment {
            mime: mime_for(&path).to_string(),
            bytes,
        }),
    };

    let mut last_err = String::new();
    for attempt in 0..2 {
        let reply = backend.complete(request.clone()).await?;
        match parse_reply(&reply) {
            Ok(raw) => {
                let (cls, warnings) = raw.enforce();
                for w in warnings {
                    tracing::warn!(event = %event.id, attempt, "{w}");
                }
                return Ok(cls);
            }
            Err(e) => {
                tracing::warn!(event = %event.id, attempt, "unparseable reply: {e}");
                last_err = e;
            }
        }
    }
    Err(ClassifyError::UnparseableReply(last_err))
}

/// [`Classifier`] over a [`ChatBackend`] with a cap on in-flight requests.
pub struct LlmClassifier {
    backend: Arc<dyn ChatBackend>,
    data_dir: PathBuf,
    inflight: Semaphore,
}

impl LlmClassifier {
    pub fn new(backend: Arc<dyn ChatBackend>, data_dir: impl Into<PathBuf>, max_inflight: usize) -> Self {
        LlmClassifier {
            backend,
            data_dir: data_dir.into(),
            inflight: Semaphore::new(max_inflight.max(1)),
        }
    }
}

#[async_trait]
impl Classifier for LlmClassifier {
    async fn classify(&self, event: &CaptureEvent) -> Result<ElementClassification, ClassifyError> {
        let _permit = self.inflight.acquire().await.expect("semaphore never closed");
        llm_classify(event, self.backend.as_ref(), &self.data_dir).await
    }

    async fn lookup(&self, keyword: &str, game: &str) -> Result<String, ClassifyError> {
        let prompt = render_lookup_prompt(keyword, game)?;
        let _permit = self.inflight.acquire().await.expect("semaphore never closed");
        let reply = self
            .backend
            .complete(ChatRequest {
                prompt,
                image: None,
            })
            .await?;
        let text = reply.trim().to_string();
        let words = word_count(&text);
        if words > 20 {
            tracing::warn!(keyword, words, "lookup reply exceeds 20 words");
        }
        Ok(text)
    }
}
