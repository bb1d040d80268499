use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::pipeline::{ListingPipeline, PipelineSettings};
use super::ServiceError;
use crate::attributes::{AttributeExtractor, ExtractionLexicon, RuleExtractor};
use crate::catalog::{CatalogStore, DraftStore, HashingEmbedder, IngestConfig, DEFAULT_DIMENSION};
use crate::eval::QualityWeights;
use crate::gateway::{
    AllowAll, BlocklistSafety, GenerationGateway, GeneratorBackend, HttpBackend, ImageSafety, SafetyPredicate,
    StreamLimits, TemplateFillBackend,
};
use crate::prompt::PromptTemplate;
use crate::retrieval::{load_index, SharedIndex, VectorIndex};
use crate::synthetic::SyntheticWorld;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub backend: BackendKind,
    /// Endpoint for the HTTP backend; environment variables are used when unset.
    pub endpoint: Option<String>,
    pub max_chars: usize,
    pub timeout_ms: u64,
    /// Delay between mock chunks.
    pub chunk_delay_ms: u64,
    pub max_concurrency: Option<usize>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        let limits = StreamLimits::default();
        Self {
            backend: BackendKind::Mock,
            endpoint: None,
            max_chars: limits.max_chars,
            timeout_ms: limits.timeout.as_millis() as u64,
            chunk_delay_ms: 0,
            max_concurrency: None,
        }
    }
}

impl GenerationConfig {
    pub fn limits(&self) -> StreamLimits {
        StreamLimits {
            max_chars: self.max_chars,
            timeout: Duration::from_millis(self.timeout_ms),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SafetyConfig {
    /// Regexes that halt generation when the text matches.
    pub text_blocklist: Vec<String>,
    /// Regexes that reject an upload by its image reference.
    pub image_blocklist: Vec<String>,
}

/// Service configuration file (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub bind: String,
    /// Directory for the product and draft logs; in memory when unset.
    pub data_dir: Option<PathBuf>,
    /// Product JSONL ingested at startup.
    pub catalog: Option<PathBuf>,
    pub taxonomy: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub prompt_template: Option<PathBuf>,
    /// Prebuilt index sidecar; built from the catalog when unset.
    pub index: Option<PathBuf>,
    /// Static files served under `/ui/`.
    pub ui_dir: Option<PathBuf>,
    pub dimension: usize,
    pub retrieval: PipelineSettings,
    pub generation: GenerationConfig,
    pub safety: SafetyConfig,
    /// Budget for the non-generation stages.
    pub latency_budget_ms: u64,
    pub quality_weights: QualityWeights,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            data_dir: None,
            catalog: None,
            taxonomy: None,
            lexicon: None,
            prompt_template: None,
            index: None,
            ui_dir: None,
            dimension: DEFAULT_DIMENSION,
            retrieval: PipelineSettings::default(),
            generation: GenerationConfig::default(),
            safety: SafetyConfig::default(),
            latency_budget_ms: 50,
            quality_weights: QualityWeights::uniform(),
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn backend(&self) -> Result<Arc<dyn GeneratorBackend>, ServiceError> {
        let g = &self.generation;
        Ok(match g.backend {
            BackendKind::Mock => Arc::new(TemplateFillBackend {
                chunk_delay: Duration::from_millis(g.chunk_delay_ms),
            }),
            BackendKind::Http => {
                let backend = match &g.endpoint {
                    Some(url) => HttpBackend::new(url.clone(), std::env::var(crate::gateway::ENV_API_KEY).ok()),
                    None => HttpBackend::from_env()
                        .ok_or_else(|| ServiceError::Config("http backend needs an endpoint".into()))?,
                };
                match g.max_concurrency {
                    Some(n) => Arc::new(backend.with_concurrency(n)),
                    None => Arc::new(backend),
                }
            }
        })
    }

    fn safety(&self) -> Result<(Arc<dyn SafetyPredicate>, Arc<dyn ImageSafety>), ServiceError> {
        let compile = |patterns: &[String]| {
            BlocklistSafety::new(patterns.iter().cloned()).map_err(|e| ServiceError::Config(format!("blocklist: {e}")))
        };
        let text: Arc<dyn SafetyPredicate> = if self.safety.text_blocklist.is_empty() {
            Arc::new(AllowAll)
        } else {
            Arc::new(compile(&self.safety.text_blocklist)?)
        };
        let image: Arc<dyn ImageSafety> = if self.safety.image_blocklist.is_empty() {
            Arc::new(AllowAll)
        } else {
            Arc::new(compile(&self.safety.image_blocklist)?)
        };
        Ok((text, image))
    }

    /// Assembles a pipeline from the files named in the config.
    pub fn build_pipeline(&self) -> Result<ListingPipeline, ServiceError> {
        let (catalog, drafts) = match &self.data_dir {
            Some(dir) => (CatalogStore::open(dir)?, DraftStore::open(dir)?),
            None => (CatalogStore::in_memory(), DraftStore::in_memory()),
        };
        if let Some(path) = &self.taxonomy {
            catalog.load_taxonomy(path)?;
        }
        if let Some(path) = &self.catalog {
            let cfg = IngestConfig {
                dimension: self.dimension,
                ..IngestConfig::default()
            };
            catalog.ingest_catalog(path, &cfg)?;
        }
        let index = match &self.index {
            Some(path) => load_index(path)?,
            None => {
                let products = catalog.products();
                VectorIndex::build(self.dimension, &products)?
            }
        };
        let lexicon = match &self.lexicon {
            Some(path) => ExtractionLexicon::load(path)?,
            None => ExtractionLexicon::compile(Default::default())?,
        };
        let wording = match &self.prompt_template {
            Some(path) => PromptTemplate::load(path)?,
            None => PromptTemplate::online(),
        };
        let (text_safety, image_safety) = self.safety()?;
        Ok(ListingPipeline {
            catalog: Arc::new(catalog),
            index: SharedIndex::new(index),
            extractor: Arc::new(RuleExtractor::new(lexicon)),
            embedder: Arc::new(HashingEmbedder::new(self.dimension)),
            image_safety,
            gateway: GenerationGateway::new(self.backend()?, text_safety, self.generation.limits()),
            wording,
            drafts: Arc::new(drafts),
            weights: self.quality_weights.clone(),
            settings: self.retrieval.clone(),
        })
    }
}

impl ListingPipeline {
    /// In-memory pipeline over a synthetic world with the given generator.
    pub fn from_world(world: &SyntheticWorld, backend: Arc<dyn GeneratorBackend>, limits: StreamLimits) -> Self {
        let catalog = CatalogStore::in_memory();
        catalog.set_taxonomy(world.taxonomy.clone());
        let dimension = world
            .products
            .first()
            .map(|p| p.image_embeddings[0].len())
            .unwrap_or(DEFAULT_DIMENSION);
        let cfg = IngestConfig {
            dimension,
            ..IngestConfig::default()
        };
        for p in &world.products {
            catalog.upsert(p.clone(), &cfg).expect("synthetic products are valid");
        }
        let index = VectorIndex::build(dimension, &world.products).expect("synthetic products are valid");
        let extractor: Arc<dyn AttributeExtractor> = Arc::new(RuleExtractor::new(world.lexicon.clone()));
        Self {
            catalog: Arc::new(catalog),
            index: SharedIndex::new(index),
            extractor,
            embedder: Arc::new(HashingEmbedder::new(dimension)),
            image_safety: Arc::new(AllowAll),
            gateway: GenerationGateway::new(backend, Arc::new(AllowAll), limits),
            wording: PromptTemplate::online(),
            drafts: Arc::new(DraftStore::in_memory()),
            weights: QualityWeights::uniform(),
            settings: PipelineSettings::default(),
        }
    }
}
