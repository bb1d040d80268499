//! Streaming description generation behind a pluggable backend, with
//! on-the-fly safety monitoring, length truncation and timeouts.

mod http;
mod mock;
mod safety;
mod stream;

pub use http::{decode_utf8, HttpBackend, ENV_API_KEY, ENV_BASE_URL, ENV_ENDPOINT};
pub use mock::{mock_generate, word_chunks, ScriptedBackend, TemplateFillBackend};
pub use safety::{default_safety, AllowAll, BlocklistSafety, ImageSafety, SafetyPredicate, SafetyVerdict};
pub use stream::{
    generate_stream, BackendError, ChunkStream, GenerationGateway, GenerationRequest, GeneratorBackend,
    StreamLimits, StreamOutcome, StreamStatus,
};
