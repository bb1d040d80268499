use std::pin::Pin;
use std::sync::Arc;
use std::time::{Duration, Instant};

use futures::{Stream, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use super::safety::SafetyPredicate;
use crate::prompt::GenerationContext;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[error("backend error: {0}")]
pub struct BackendError(pub String);

/// Ordered text chunks; a stream end is `Complete`, an `Err` item is the
/// terminal `BackendError`.
pub type ChunkStream = Pin<Box<dyn Stream<Item = Result<String, BackendError>> + Send>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub instruction: String,
    pub image_ref: String,
    /// Structured context, for backends that can use it. Remote backends ignore it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<GenerationContext>,
}

pub trait GeneratorBackend: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> ChunkStream;

    /// Maximum simultaneous generations this backend accepts.
    fn max_concurrency(&self) -> Option<usize> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamStatus {
    Complete,
    Truncated,
    SafetyHalted,
    TimedOut,
    BackendError,
    /// The consumer went away.
    Cancelled,
}

impl StreamStatus {
    /// Statuses after which the user should finish the text by hand.
    pub fn needs_manual_edit(self) -> bool {
        !matches!(self, StreamStatus::Complete | StreamStatus::Truncated)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamOutcome {
    pub text: String,
    pub status: StreamStatus,
    pub chunk_count: usize,
    #[serde(with = "duration_ms")]
    pub elapsed: Duration,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

pub(crate) mod duration_ms {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64() * 1000.0)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let ms = f64::deserialize(d)?;
        Ok(Duration::from_secs_f64(ms.max(0.0) / 1000.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamLimits {
    pub max_chars: usize,
    #[serde(with = "duration_ms")]
    pub timeout: Duration,
}

impl Default for StreamLimits {
    fn default() -> Self {
        Self {
            max_chars: 500,
            timeout: Duration::from_secs(3),
        }
    }
}

/// Streams one generation to `on_chunk`, enforcing safety, length and time.
///
/// Safety is evaluated on the accumulated text after each chunk; a chunk
/// that makes it unsafe is withheld and generation stops. Text beyond
/// `max_chars` characters is cut and generation stops. `on_chunk`
/// returning false cancels. The deadline is `started + limits.timeout`.
pub async fn generate_stream(
    request: &GenerationRequest,
    backend: &dyn GeneratorBackend,
    safety: &dyn SafetyPredicate,
    limits: StreamLimits,
    started: Instant,
    permits: Option<&Semaphore>,
    on_chunk: &mut (dyn FnMut(&str) -> bool + Send),
) -> StreamOutcome {
    assert!(limits.max_chars >= 1, "max_chars must be at least 1");
    let deadline = tokio::time::Instant::from_std(started + limits.timeout);
    let mut text = String::new();
    let mut text_chars = 0usize;
    let mut chunk_count = 0usize;
    let finish = |text: String, status, chunk_count, detail: Option<String>| StreamOutcome {
        text,
        status,
        chunk_count,
        elapsed: started.elapsed(),
        detail,
    };

    let _permit = match permits {
        Some(sem) => match tokio::time::timeout_at(deadline, sem.acquire()).await {
            Ok(Ok(p)) => Some(p),
            Ok(Err(_)) => return finish(text, StreamStatus::BackendError, 0, Some("backend closed".into())),
            Err(_) => return finish(text, StreamStatus::TimedOut, 0, None),
        },
        None => None,
    };

    let mut stream = backend.generate(request);
    loop {
        let next = match tokio::time::timeout_at(deadline, stream.next()).await {
            Err(_) => return finish(text, StreamStatus::TimedOut, chunk_count, None),
            Ok(next) => next,
        };
        let chunk = match next {
            None => return finish(text, StreamStatus::Complete, chunk_count, None),
            Some(Err(e)) => return finish(text, StreamStatus::BackendError, chunk_count, Some(e.0)),
            Some(Ok(chunk)) => chunk,
        };
        if chunk.is_empty() {
            continue;
        }
        let room = limits.max_chars - text_chars;
        let chunk_chars = chunk.chars().count();
        let (piece, truncated) = if chunk_chars > room {
            let cut = chunk.char_indices().nth(room).map_or(chunk.len(), |(i, _)| i);
            (&chunk[..cut], true)
        } else {
            (chunk.as_str(), false)
        };
        let candidate = format!("{text}{piece}");
        let verdict = safety.check(&candidate);
        if !verdict.allowed {
            return finish(text, StreamStatus::SafetyHalted, chunk_count, verdict.reason);
        }
        if !piece.is_empty() {
            chunk_count += 1;
            if !on_chunk(piece) {
                text = candidate;
                return finish(text, StreamStatus::Cancelled, chunk_count, None);
            }
        }
        text = candidate;
        text_chars += piece.chars().count();
        if truncated {
            return finish(text, StreamStatus::Truncated, chunk_count, None);
        }
    }
}

/// Backend plus the safety predicate, limits and concurrency cap it runs under.
#[derive(Clone)]
pub struct GenerationGateway {
    backend: Arc<dyn GeneratorBackend>,
    safety: Arc<dyn SafetyPredicate>,
    limits: StreamLimits,
    permits: Option<Arc<Semaphore>>,
}

impl GenerationGateway {
    pub fn new(backend: Arc<dyn GeneratorBackend>, safety: Arc<dyn SafetyPredicate>, limits: StreamLimits) -> Self {
        let permits = backend.max_concurrency().map(|n| Arc::new(Semaphore::new(n.max(1))));
        Self {
            backend,
            safety,
            limits,
            permits,
        }
    }

    pub fn limits(&self) -> StreamLimits {
        self.limits
    }

    pub async fn generate(
        &self,
        request: &GenerationRequest,
        limits: Option<StreamLimits>,
        started: Instant,
        on_chunk: &mut (dyn FnMut(&str) -> bool + Send),
    ) -> StreamOutcome {
        generate_stream(
            request,
            self.backend.as_ref(),
            self.safety.as_ref(),
            limits.unwrap_or(self.limits),
            started,
            self.permits.as_deref(),
            on_chunk,
        )
        .await
    }
}
