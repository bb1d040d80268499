//! Remote generator over HTTP.
//!
//! `POST {endpoint}` with `{"instruction": .., "image_url": ..}`; the
//! response body is plain UTF-8 text delivered with chunked transfer.
//! Configuration comes from `IPL_LLM_ENDPOINT` (or `IPL_LLM_BASE_URL`,
//! to which `/v1/generate` is appended) and optional `IPL_LLM_API_KEY`.

use futures::StreamExt;
use serde::Serialize;

use super::stream::{BackendError, ChunkStream, GenerationRequest, GeneratorBackend};

pub const ENV_ENDPOINT: &str = "IPL_LLM_ENDPOINT";
pub const ENV_BASE_URL: &str = "IPL_LLM_BASE_URL";
pub const ENV_API_KEY: &str = "IPL_LLM_API_KEY";

#[derive(Debug, Clone)]
pub struct HttpBackend {
    client: reqwest::Client,
    endpoint: String,
    api_key: Option<String>,
    concurrency: Option<usize>,
}

#[derive(Serialize)]
struct RequestBody<'a> {
    instruction: &'a str,
    image_url: &'a str,
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Self {
        Self {
            client: reqwest::Client::new(),
            endpoint: endpoint.into(),
            api_key,
            concurrency: None,
        }
    }

    pub fn with_concurrency(mut self, limit: usize) -> Self {
        self.concurrency = Some(limit);
        self
    }

    /// None when neither endpoint variable is set.
    pub fn from_env() -> Option<Self> {
        let endpoint = std::env::var(ENV_ENDPOINT).ok().or_else(|| {
            std::env::var(ENV_BASE_URL)
                .ok()
                .map(|base| format!("{}/v1/generate", base.trim_end_matches('/')))
        })?;
        Some(Self::new(endpoint, std::env::var(ENV_API_KEY).ok()))
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl GeneratorBackend for HttpBackend {
    fn generate(&self, request: &GenerationRequest) -> ChunkStream {
        let mut builder = self.client.post(&self.endpoint).json(&RequestBody {
            instruction: &request.instruction,
            image_url: &request.image_ref,
        });
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send();
        futures::stream::once(response)
            .map(|res| match res {
                Ok(resp) if resp.status().is_success() => decode_utf8(resp.bytes_stream().map(|r| r.map(|b| b.to_vec()).map_err(|e| e.to_string()))),
                Ok(resp) => futures::stream::once(futures::future::ready(Err(BackendError(format!(
                    "HTTP {}",
                    resp.status()
                )))))
                .boxed(),
                Err(e) => futures::stream::once(futures::future::ready(Err(BackendError(e.to_string())))).boxed(),
            })
            .flatten()
            .boxed()
    }

    fn max_concurrency(&self) -> Option<usize> {
        self.concurrency
    }
}

/// Re-chunks a byte stream into UTF-8 text, carrying split code points.
pub fn decode_utf8<S>(bytes: S) -> ChunkStream
where
    S: futures::Stream<Item = Result<Vec<u8>, String>> + Send + 'static,
{
    bytes
        .scan(Vec::<u8>::new(), |pending, item| {
            let out = match item {
                Err(e) => Err(BackendError(e)),
                Ok(chunk) => {
                    pending.extend_from_slice(&chunk);
                    match std::str::from_utf8(pending) {
                        Ok(s) => {
                            let s = s.to_string();
                            pending.clear();
                            Ok(s)
                        }
                        Err(e) if e.error_len().is_none() => {
                            let valid = e.valid_up_to();
                            let s = String::from_utf8(pending[..valid].to_vec()).expect("valid prefix");
                            pending.drain(..valid);
                            Ok(s)
                        }
                        Err(_) => Err(BackendError("response is not valid UTF-8".into())),
                    }
                }
            };
            futures::future::ready(Some(out))
        })
        .boxed()
}
