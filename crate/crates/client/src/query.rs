//! One request per (image, prompt), with retries and bounded concurrency.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use base64::Engine as _;
use futures::stream::{self, StreamExt};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::endpoint::{EndpointSpec, Flavor};
use crate::ClientError;

/// What the oracle mock needs to answer correctly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleHint {
    /// Declarative stub, e.g. "The number of pieces in the image is:".
    pub stub: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryRequest {
    pub id: u64,
    pub key: String,
    pub prompt: String,
    pub image: Arc<Vec<u8>>,
    pub media_type: String,
    pub cot: bool,
    pub oracle: Option<OracleHint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeError {
    pub status: Option<u16>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub id: u64,
    pub key: String,
    pub prompt: String,
    pub media_type: String,
    pub image_bytes: usize,
    pub response: Option<String>,
    pub input_tokens: u64,
    pub output_tokens: u64,
    /// Token counts are chars/4 estimates.
    pub usage_estimated: bool,
    pub latency_s: f64,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ExchangeError>,
}

impl ChatExchange {
    pub fn ok(&self) -> bool {
        self.error.is_none() && self.response.is_some()
    }
}

fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

const EXCERPT: usize = 300;

fn excerpt(s: &str) -> String {
    s.chars().take(EXCERPT).collect()
}

enum Attempt {
    Done { text: String, usage: Option<(u64, u64)> },
    Transient(ExchangeError, Option<Duration>),
    Permanent(ExchangeError),
}

/// A configured endpoint with a shared HTTP connection pool.
pub struct Querier {
    spec: EndpointSpec,
    http: reqwest::Client,
    token: Option<String>,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
}

impl Querier {
    pub fn new(spec: EndpointSpec) -> Result<Self, ClientError> {
        spec.validate()?;
        let token = if spec.flavor.is_mock() { None } else { spec.token()? };
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs_f64(spec.timeout_secs))
            .build()
            .map_err(|e| ClientError::Http(e.to_string()))?;
        Ok(Self { spec, http, token, in_flight: AtomicUsize::new(0), peak: AtomicUsize::new(0) })
    }

    pub fn spec(&self) -> &EndpointSpec {
        &self.spec
    }

    /// Highest number of simultaneous requests seen so far.
    pub fn peak_in_flight(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let base = self.spec.backoff_base_ms as f64;
        let exp = base * 2f64.powi(attempt.saturating_sub(1).min(30) as i32);
        let capped = exp.min(self.spec.backoff_max_ms.max(self.spec.backoff_base_ms) as f64);
        let jitter = if capped > 0.0 { rand::rng().random_range(0.0..=capped * 0.25) } else { 0.0 };
        Duration::from_secs_f64((capped + jitter) / 1000.0)
    }

    fn mock_response(&self, req: &QueryRequest) -> String {
        match self.spec.flavor {
            Flavor::MockOracle => match &req.oracle {
                Some(h) => {
                    let mut s = format!("{} {}", h.stub, h.answer);
                    if req.cot {
                        s.push_str(&format!(" {{answer : {}}}", h.answer));
                    }
                    s
                }
                None => String::new(),
            },
            Flavor::MockConstant => self.spec.constant.clone().unwrap_or_default(),
            Flavor::MockScripted => self
                .spec
                .responses
                .get(&req.key)
                .or_else(|| self.spec.responses.get("*"))
                .cloned()
                .unwrap_or_default(),
            Flavor::OpenaiChat | Flavor::OllamaGenerate => unreachable!("http flavors are not mocked"),
        }
    }

    fn body(&self, req: &QueryRequest) -> (String, Value) {
        let b64 = base64::engine::general_purpose::STANDARD.encode(req.image.as_slice());
        let base = self.spec.base_url.trim_end_matches('/');
        match self.spec.flavor {
            Flavor::OpenaiChat => (
                format!("{base}/chat/completions"),
                json!({
                    "model": self.spec.model,
                    "temperature": 0,
                    "messages": [{
                        "role": "user",
                        "content": [
                            {"type": "text", "text": req.prompt},
                            {"type": "image_url", "image_url": {"url": format!("data:{};base64,{b64}", req.media_type)}},
                        ],
                    }],
                }),
            ),
            _ => (
                format!("{base}/api/generate"),
                json!({
                    "model": self.spec.model,
                    "prompt": req.prompt,
                    "images": [b64],
                    "stream": false,
                    "options": {"temperature": 0},
                }),
            ),
        }
    }

    fn read_reply(&self, v: &Value) -> Option<(String, Option<(u64, u64)>)> {
        match self.spec.flavor {
            Flavor::OpenaiChat => {
                let content = &v["choices"][0]["message"]["content"];
                let text = match content {
                    Value::String(s) => s.clone(),
                    Value::Array(parts) => parts.iter().filter_map(|p| p["text"].as_str()).collect::<Vec<_>>().join(""),
                    _ => return None,
                };
                let u = &v["usage"];
                let usage = u["prompt_tokens"].as_u64().zip(u["completion_tokens"].as_u64());
                Some((text, usage))
            }
            _ => {
                let text = v["response"].as_str()?.to_string();
                let usage = v["prompt_eval_count"].as_u64().zip(v["eval_count"].as_u64());
                Some((text, usage))
            }
        }
    }

    async fn attempt(&self, req: &QueryRequest) -> Attempt {
        let (url, body) = self.body(req);
        let mut rb = self.http.post(&url).json(&body);
        if let Some(t) = &self.token {
            rb = rb.bearer_auth(t);
        }
        let resp = match rb.send().await {
            Ok(r) => r,
            Err(e) => {
                let err = ExchangeError { status: None, message: excerpt(&e.to_string()) };
                return if e.is_timeout() || e.is_connect() || e.is_request() {
                    Attempt::Transient(err, None)
                } else {
                    Attempt::Permanent(err)
                };
            }
        };
        let status = resp.status();
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|h| h.to_str().ok())
            .and_then(|s| s.trim().parse::<f64>().ok())
            .map(Duration::from_secs_f64);
        let text = match resp.text().await {
            Ok(t) => t,
            Err(e) => {
                return Attempt::Transient(
                    ExchangeError { status: Some(status.as_u16()), message: excerpt(&e.to_string()) },
                    None,
                )
            }
        };
        let err = ExchangeError { status: Some(status.as_u16()), message: excerpt(&text) };
        if status.as_u16() == 429 || status.is_server_error() {
            return Attempt::Transient(err, retry_after);
        }
        if !status.is_success() {
            return Attempt::Permanent(err);
        }
        match serde_json::from_str::<Value>(&text).ok().and_then(|v| self.read_reply(&v)) {
            Some((text, usage)) => Attempt::Done { text, usage },
            None => Attempt::Permanent(ExchangeError {
                status: Some(status.as_u16()),
                message: format!("unexpected response body: {}", excerpt(&text)),
            }),
        }
    }

    pub async fn query(&self, req: &QueryRequest) -> ChatExchange {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        let start = Instant::now();
        let mut ex = ChatExchange {
            id: req.id,
            key: req.key.clone(),
            prompt: req.prompt.clone(),
            media_type: req.media_type.clone(),
            image_bytes: req.image.len(),
            response: None,
            input_tokens: 0,
            output_tokens: 0,
            usage_estimated: true,
            latency_s: 0.0,
            attempts: 0,
            error: None,
        };
        if self.spec.flavor.is_mock() {
            let text = self.mock_response(req);
            ex.attempts = 1;
            ex.input_tokens = estimate_tokens(&req.prompt);
            ex.output_tokens = estimate_tokens(&text);
            ex.response = Some(text);
        } else {
            let max_attempts = self.spec.max_retries + 1;
            loop {
                ex.attempts += 1;
                match self.attempt(req).await {
                    Attempt::Done { text, usage } => {
                        match usage {
                            Some((i, o)) => {
                                ex.input_tokens = i;
                                ex.output_tokens = o;
                                ex.usage_estimated = false;
                            }
                            None => {
                                ex.input_tokens = estimate_tokens(&req.prompt);
                                ex.output_tokens = estimate_tokens(&text);
                            }
                        }
                        ex.response = Some(text);
                        ex.error = None;
                        break;
                    }
                    Attempt::Permanent(e) => {
                        ex.error = Some(e);
                        break;
                    }
                    Attempt::Transient(e, retry_after) => {
                        log::debug!("request {} attempt {} failed: {:?}", req.id, ex.attempts, e.status);
                        ex.error = Some(e);
                        if ex.attempts >= max_attempts {
                            break;
                        }
                        let wait = self.backoff(ex.attempts);
                        let wait = retry_after.map_or(wait, |r| {
                            r.max(wait).min(Duration::from_millis(self.spec.backoff_max_ms.max(1)))
                        });
                        tokio::time::sleep(wait).await;
                    }
                }
            }
        }
        ex.latency_s = start.elapsed().as_secs_f64();
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        ex
    }
}

/// One-off query; builds a fresh client.
pub async fn query_model(spec: &EndpointSpec, req: &QueryRequest) -> Result<ChatExchange, ClientError> {
    let q = Querier::new(spec.clone())?;
    Ok(q.query(req).await)
}

/// Runs every request with at most `max_concurrency` in flight; results are
/// sorted by request id.
pub async fn query_batch(q: &Querier, reqs: Vec<QueryRequest>) -> Vec<ChatExchange> {
    let limit = q.spec().max_concurrency.max(1);
    let mut out: Vec<ChatExchange> =
        stream::iter(reqs.iter()).map(|r| q.query(r)).buffer_unordered(limit).collect().await;
    out.sort_by_key(|e| e.id);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(cot: bool) -> QueryRequest {
        QueryRequest {
            id: 0,
            key: "count_pieces".into(),
            prompt: "How many pieces are there in the image?".into(),
            image: Arc::new(vec![0u8; 8]),
            media_type: "image/png".into(),
            cot,
            oracle: Some(OracleHint { stub: "The number of pieces in the image is:".into(), answer: "7".into() }),
        }
    }

    #[tokio::test]
    async fn oracle_echo() {
        let ex = query_model(&EndpointSpec::mock(Flavor::MockOracle), &req(false)).await.unwrap();
        assert_eq!(ex.response.as_deref(), Some("The number of pieces in the image is: 7"));
        let ex = query_model(&EndpointSpec::mock(Flavor::MockOracle), &req(true)).await.unwrap();
        assert!(ex.response.unwrap().ends_with("{answer : 7}"));
    }

    #[tokio::test]
    async fn constant_mock() {
        let ex = query_model(&EndpointSpec::constant("3"), &req(false)).await.unwrap();
        assert_eq!(ex.response.as_deref(), Some("3"));
        assert!(ex.usage_estimated && ex.input_tokens > 0);
    }

    #[test]
    fn backoff_grows_and_is_capped() {
        let mut s = EndpointSpec::constant("3");
        s.backoff_base_ms = 100;
        s.backoff_max_ms = 1000;
        let q = Querier::new(s).unwrap();
        for a in 1..10 {
            let d = q.backoff(a).as_secs_f64() * 1000.0;
            let nominal = (100.0 * 2f64.powi(a as i32 - 1)).min(1000.0);
            assert!(d >= nominal && d <= nominal * 1.25 + 1e-9, "attempt {a}: {d}");
        }
    }
}
