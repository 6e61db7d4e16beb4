use super::{ChatBackend, ChatMessage, GatewayError, SamplingConfig};
use serde::{Deserialize, Serialize};
use std::time::Duration;

pub const ENV_URL: &str = "FLEXLOC_LLM_URL";
pub const ENV_MODEL: &str = "FLEXLOC_LLM_MODEL";
pub const ENV_KEY: &str = "FLEXLOC_LLM_KEY";

/// Connection settings for a chat-completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpSettings {
    /// Base URL (`http://host:8000/v1`) or the full `/chat/completions` URL.
    pub url: String,
    pub model: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub timeout_secs: u64,
}

impl Default for HttpSettings {
    fn default() -> Self {
        HttpSettings {
            url: String::new(),
            model: String::new(),
            api_key: None,
            max_attempts: 3,
            initial_backoff_ms: 500,
            timeout_secs: 300,
        }
    }
}

impl HttpSettings {
    /// Fill unset fields from `FLEXLOC_LLM_URL`, `FLEXLOC_LLM_MODEL` and
    /// `FLEXLOC_LLM_KEY`.
    pub fn with_env(mut self) -> Self {
        if self.url.is_empty() {
            self.url = std::env::var(ENV_URL).unwrap_or_default();
        }
        if self.model.is_empty() {
            self.model = std::env::var(ENV_MODEL).unwrap_or_default();
        }
        if self.api_key.is_none() {
            self.api_key = std::env::var(ENV_KEY).ok().filter(|k| !k.is_empty());
        }
        self
    }

    fn endpoint(&self) -> String {
        let base = self.url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

#[derive(Serialize)]
struct Request<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    top_p: f64,
    max_tokens: usize,
}

#[derive(Deserialize)]
struct Response {
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

const OVERFLOW_MARKERS: [&str; 6] = [
    "context_length_exceeded",
    "maximum context length",
    "context length",
    "context window",
    "too many tokens",
    "prompt is too long",
];

fn is_overflow(body: &str) -> bool {
    let lower = body.to_ascii_lowercase();
    OVERFLOW_MARKERS.iter().any(|m| lower.contains(m))
}

/// Blocking client for chat-completions endpoints.
pub struct HttpBackend {
    settings: HttpSettings,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(settings: HttpSettings) -> Result<Self, GatewayError> {
        if settings.url.is_empty() {
            return Err(GatewayError::Precondition(format!(
                "no endpoint configured (set {ENV_URL} or gateway.url)"
            )));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(settings.timeout_secs))
            .build()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        Ok(HttpBackend { settings, client })
    }

    fn attempt(&self, body: &Request<'_>) -> Result<String, Attempt> {
        let mut req = self.client.post(self.settings.endpoint()).json(body);
        if let Some(key) = &self.settings.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| Attempt::Retry(e.to_string()))?;
        if status.is_success() {
            let parsed: Response = serde_json::from_str(&text)
                .map_err(|e| Attempt::Fatal(GatewayError::Backend(format!("unreadable response: {e}"))))?;
            return parsed
                .choices
                .into_iter()
                .next()
                .map(|c| c.message.content.unwrap_or_default())
                .ok_or_else(|| Attempt::Fatal(GatewayError::Backend("response has no choices".into())));
        }
        if is_overflow(&text) {
            return Err(Attempt::Fatal(GatewayError::ContextOverflow(text)));
        }
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(Attempt::Retry(format!("HTTP {status}: {text}")));
        }
        Err(Attempt::Fatal(GatewayError::Backend(format!("HTTP {status}: {text}"))))
    }
}

enum Attempt {
    Retry(String),
    Fatal(GatewayError),
}

impl ChatBackend for HttpBackend {
    fn respond(&self, history: &[ChatMessage], sampling: &SamplingConfig) -> Result<String, GatewayError> {
        let body = Request {
            model: &self.settings.model,
            messages: history,
            temperature: sampling.temperature,
            top_p: sampling.top_p,
            max_tokens: sampling.max_response_tokens,
        };
        let attempts = self.settings.max_attempts.max(1);
        let mut delay = Duration::from_millis(self.settings.initial_backoff_ms);
        let mut last = String::new();
        for n in 1..=attempts {
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(msg)) => {
                    log::warn!("chat request attempt {n}/{attempts} failed: {msg}");
                    last = msg;
                    if n < attempts {
                        std::thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        Err(GatewayError::Transport(format!(
            "{attempts} attempts failed; last error: {last}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;

    /// Serve canned `(status, body)` responses, one per connection, and
    /// report each request body.
    fn serve(responses: Vec<(u16, String)>) -> (String, mpsc::Receiver<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut req = vec![0u8; len];
                reader.read_exact(&mut req).unwrap();
                tx.send(String::from_utf8(req).unwrap()).unwrap();
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (format!("http://{addr}/v1"), rx)
    }

    fn backend(url: String) -> HttpBackend {
        HttpBackend::new(HttpSettings {
            url,
            model: "m".into(),
            api_key: Some("k".into()),
            initial_backoff_ms: 1,
            ..HttpSettings::default()
        })
        .unwrap()
    }

    const OK: &str = r#"{"choices":[{"message":{"role":"assistant","content":"find_class(\"X\")"}}]}"#;

    #[test]
    fn sends_chat_completions_payload() {
        let (url, rx) = serve(vec![(200, OK.into())]);
        let b = backend(url);
        let out = b
            .respond(
                &[ChatMessage::system("s"), ChatMessage::user("u")],
                &SamplingConfig::default(),
            )
            .unwrap();
        assert_eq!(out, "find_class(\"X\")");
        let req: serde_json::Value = serde_json::from_str(&rx.recv().unwrap()).unwrap();
        assert_eq!(req["model"], "m");
        assert_eq!(req["messages"][1]["role"], "user");
        assert_eq!(req["temperature"], 0.0);
        assert_eq!(req["top_p"], 1.0);
    }

    #[test]
    fn retries_transient_failures() {
        let (url, _rx) = serve(vec![(503, "{}".into()), (429, "{}".into()), (200, OK.into())]);
        assert!(backend(url)
            .respond(&[ChatMessage::system("s")], &SamplingConfig::default())
            .is_ok());
    }

    #[test]
    fn gives_up_after_three_attempts() {
        let (url, _rx) = serve(vec![(500, "a".into()), (500, "b".into()), (500, "c".into())]);
        let err = backend(url)
            .respond(&[ChatMessage::system("s")], &SamplingConfig::default())
            .unwrap_err();
        assert!(
            matches!(err, GatewayError::Transport(ref m) if m.contains("3 attempts")),
            "{err}"
        );
    }

    #[test]
    fn overflow_errors_are_recognized() {
        let body = r#"{"error":{"message":"This model's maximum context length is 8192 tokens","code":"context_length_exceeded"}}"#;
        let (url, _rx) = serve(vec![(400, body.into())]);
        let err = backend(url)
            .respond(&[ChatMessage::system("s")], &SamplingConfig::default())
            .unwrap_err();
        assert!(matches!(err, GatewayError::ContextOverflow(_)));
    }

    #[test]
    fn endpoint_and_missing_url() {
        let s = HttpSettings {
            url: "http://h/v1/chat/completions/".into(),
            ..HttpSettings::default()
        };
        assert_eq!(s.endpoint(), "http://h/v1/chat/completions");
        assert!(HttpBackend::new(HttpSettings::default()).is_err());
    }
}
