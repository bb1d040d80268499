use std::sync::Arc;
use std::time::{Duration, Instant};

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::ServiceError;
use crate::attributes::{AttributeExtractor, ExtractedAttributes};
use crate::catalog::{
    now_ms, AttributeTemplate, CatalogStore, CategoryNode, DraftError, DraftState, DraftStore, Embedder, ListingDraft,
};
use crate::eval::{quality_score, FeatureSources, QualityFeatureVector, QualityWeights};
use crate::gateway::{GenerationGateway, GenerationRequest, ImageSafety, StreamStatus};
use crate::prompt::{build_generation_instruction, GenerationContext, InstructionVariant, PromptTemplate};
use crate::retrieval::{predict_category, MatchLevel, MatchThresholds, RetrievalResult, SharedIndex};
use crate::text::retained_ratio;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Safety,
    Category,
    Retrieval,
    Extraction,
    Prompt,
    Generation,
}

impl Stage {
    pub const ORDER: [Stage; 6] = [
        Stage::Safety,
        Stage::Category,
        Stage::Retrieval,
        Stage::Extraction,
        Stage::Prompt,
        Stage::Generation,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub duration_ms: f64,
    pub outcome: String,
    pub fallback_taken: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub stages: Vec<StageRecord>,
    pub variant: Option<InstructionVariant>,
    pub instruction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_id: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub neighbors: Vec<RetrievalResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_product: Option<String>,
}

impl PipelineTrace {
    pub fn stage(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == stage)
    }

    /// Time spent outside the generator.
    pub fn overhead(&self) -> Duration {
        let ms: f64 = self
            .stages
            .iter()
            .filter(|s| s.stage != Stage::Generation)
            .map(|s| s.duration_ms)
            .sum();
        Duration::from_secs_f64(ms / 1000.0)
    }

    fn push(&mut self, stage: Stage, since: Instant, outcome: impl Into<String>, fallback_taken: bool) {
        self.stages.push(StageRecord {
            stage,
            duration_ms: since.elapsed().as_secs_f64() * 1000.0,
            outcome: outcome.into(),
            fallback_taken,
        });
    }
}

fn yes() -> bool {
    true
}

/// Per-request switches and overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<MatchThresholds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_chars: Option<usize>,
    /// Replaces the category attribute template.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<Vec<String>>,
    #[serde(default = "yes")]
    pub use_category: bool,
    #[serde(default = "yes")]
    pub use_reference: bool,
    /// Take the template from the reference product's category when no
    /// category is available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_from_reference: Option<bool>,
}

impl Default for RequestOptions {
    fn default() -> Self {
        Self {
            k: None,
            thresholds: None,
            max_chars: None,
            template: None,
            use_category: true,
            use_reference: true,
            template_from_reference: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListingRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_id: Option<String>,
    #[serde(default = "anonymous")]
    pub user_id: String,
    pub image_ref: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_embedding: Option<Vec<f32>>,
    /// Base64 image bytes, embedded with the pipeline's embedder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_bytes: Option<String>,
    #[serde(default)]
    pub options: RequestOptions,
}

fn anonymous() -> String {
    "anonymous".into()
}

impl ListingRequest {
    pub fn with_embedding(image_ref: impl Into<String>, embedding: Vec<f32>) -> Self {
        Self {
            request_id: None,
            user_id: anonymous(),
            image_ref: image_ref.into(),
            image_embedding: Some(embedding),
            image_bytes: None,
            options: RequestOptions::default(),
        }
    }

    pub fn options(mut self, options: RequestOptions) -> Self {
        self.options = options;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListingResponse {
    pub request_id: Option<String>,
    pub draft_id: String,
    pub text: String,
    pub status: StreamStatus,
    pub manual_edit: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub trace: PipelineTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdoptionMetrics {
    pub draft_id: String,
    pub published: bool,
    pub retained_ratio: Option<f64>,
    pub quality_score: Option<f64>,
}

/// Output of the stages before generation.
#[derive(Debug, Clone)]
pub struct PreparedListing {
    pub request_id: Option<String>,
    pub draft_id: String,
    pub request: GenerationRequest,
    pub max_chars: Option<usize>,
    pub trace: PipelineTrace,
    pub started: Instant,
}

/// Tunables of the pipeline stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineSettings {
    pub k: usize,
    pub thresholds: MatchThresholds,
    /// Restrict the search to the predicted category.
    pub category_filter: bool,
    pub classifier_k: usize,
    pub min_category_confidence: f64,
    pub template_from_reference: bool,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self {
            k: 5,
            thresholds: MatchThresholds::default(),
            category_filter: false,
            classifier_k: 10,
            min_category_confidence: 0.0,
            template_from_reference: false,
        }
    }
}

/// The online listing pipeline.
#[derive(Clone)]
pub struct ListingPipeline {
    pub catalog: Arc<CatalogStore>,
    pub index: SharedIndex,
    pub extractor: Arc<dyn AttributeExtractor>,
    pub embedder: Arc<dyn Embedder>,
    pub image_safety: Arc<dyn ImageSafety>,
    pub gateway: GenerationGateway,
    pub wording: PromptTemplate,
    pub drafts: Arc<DraftStore>,
    pub weights: QualityWeights,
    pub settings: PipelineSettings,
}

fn category_with_template(catalog: &CatalogStore, id: &str) -> Option<CategoryNode> {
    catalog.get_category(id).ok().filter(|c| !c.attribute_template.is_empty())
}

impl ListingPipeline {
    fn embedding(&self, req: &ListingRequest) -> Result<Vec<f32>, ServiceError> {
        match (&req.image_embedding, &req.image_bytes) {
            (Some(e), None) => Ok(e.clone()),
            (None, Some(b64)) => {
                let bytes = base64::engine::general_purpose::STANDARD
                    .decode(b64)
                    .map_err(|e| ServiceError::InvalidRequest(format!("image_bytes: {e}")))?;
                Ok(self.embedder.embed_bytes(&bytes))
            }
            _ => Err(ServiceError::InvalidRequest(
                "exactly one of image_embedding and image_bytes is required".into(),
            )),
        }
    }

    /// Runs every stage up to generation and creates the draft.
    pub fn prepare(&self, req: &ListingRequest) -> Result<PreparedListing, ServiceError> {
        let started = Instant::now();
        let opts = &req.options;
        let mut trace = PipelineTrace::default();

        let t = Instant::now();
        let query = self.embedding(req)?;
        let index = self.index.load();
        if query.len() != index.dimension() {
            return Err(ServiceError::InvalidRequest(format!(
                "embedding has dimension {}, index expects {}",
                query.len(),
                index.dimension()
            )));
        }
        let verdict = self.image_safety.check_image(&req.image_ref, Some(&query));
        if !verdict.allowed {
            return Err(ServiceError::UnsafeImage(verdict.reason.unwrap_or_default()));
        }
        trace.push(Stage::Safety, t, "allowed", false);

        let t = Instant::now();
        let category = if !opts.use_category {
            trace.push(Stage::Category, t, "disabled", false);
            None
        } else {
            match predict_category(&index, &query, self.settings.classifier_k) {
                Ok(p) if p.confidence < self.settings.min_category_confidence => {
                    trace.push(Stage::Category, t, format!("low confidence {:.3}", p.confidence), true);
                    None
                }
                Ok(p) => match category_with_template(&self.catalog, &p.category_id) {
                    Some(node) => {
                        trace.push(Stage::Category, t, format!("{} ({:.3})", p.category_id, p.confidence), false);
                        Some(node)
                    }
                    None => {
                        trace.push(Stage::Category, t, format!("{} has no template", p.category_id), true);
                        None
                    }
                },
                Err(e) => {
                    trace.push(Stage::Category, t, format!("no prediction: {e}"), true);
                    None
                }
            }
        };
        trace.category_id = category.as_ref().map(|c| c.id.clone());

        let t = Instant::now();
        let thresholds = opts.thresholds.unwrap_or(self.settings.thresholds);
        let k = opts.k.unwrap_or(self.settings.k);
        let neighbors: Vec<RetrievalResult> = if !opts.use_reference {
            trace.push(Stage::Retrieval, t, "disabled", false);
            Vec::new()
        } else {
            let filter = category.as_ref().filter(|_| self.settings.category_filter).map(|c| c.id.as_str());
            match index.search_in(&query, k.max(1), &thresholds, filter) {
                Ok(hits) => {
                    let usable: Vec<RetrievalResult> =
                        hits.into_iter().filter(|h| h.match_level >= MatchLevel::Similar).collect();
                    match usable.first() {
                        Some(best) => {
                            trace.push(Stage::Retrieval, t, format!("{} {:?} ({:.3})", best.product_id, best.match_level, best.score), false);
                        }
                        None => trace.push(Stage::Retrieval, t, "no result at or above tau_similar", true),
                    }
                    usable
                }
                Err(e) => {
                    trace.push(Stage::Retrieval, t, format!("search failed: {e}"), true);
                    Vec::new()
                }
            }
        };
        trace.neighbors = neighbors.clone();

        let t = Instant::now();
        let user_template = match &opts.template {
            Some(names) => Some(
                AttributeTemplate::new(names.iter().cloned())
                    .map_err(|e| ServiceError::InvalidRequest(format!("template: {e}")))?,
            ),
            None => None,
        };
        let from_reference = opts.template_from_reference.unwrap_or(self.settings.template_from_reference);
        let mut template = user_template.or_else(|| category.as_ref().map(|c| c.attribute_template.clone()));
        let mut reference: Option<ExtractedAttributes> = None;
        if neighbors.is_empty() {
            trace.push(Stage::Extraction, t, "no reference product", opts.use_reference);
        } else {
            for hit in &neighbors {
                let Some(product) = self.catalog.get(&hit.product_id) else {
                    continue;
                };
                let t_here = match &template {
                    Some(t) => t.clone(),
                    None if from_reference => match category_with_template(&self.catalog, &product.category_id) {
                        Some(c) => c.attribute_template,
                        None => continue,
                    },
                    None => break,
                };
                let lexicon_category = category.as_ref().map(|c| c.id.as_str()).unwrap_or(&product.category_id);
                let attrs = self.extractor.extract(&product.description, lexicon_category, &t_here);
                if !attrs.is_empty() {
                    template = Some(t_here);
                    trace.reference_product = Some(product.id.clone());
                    reference = Some(attrs);
                    break;
                }
            }
            match (&reference, &template) {
                (Some(r), _) => trace.push(Stage::Extraction, t, format!("{} attributes", r.len()), false),
                (None, None) => trace.push(Stage::Extraction, t, "no template to extract", true),
                (None, Some(_)) => trace.push(Stage::Extraction, t, "nothing extracted", true),
            }
        }

        let t = Instant::now();
        let ctx = GenerationContext::richest(req.image_ref.clone(), category, template, reference);
        let instruction = build_generation_instruction(&ctx, &self.wording)?;
        let variant = ctx.variant;
        let mut draft = ListingDraft::new(req.user_id.clone(), ctx.clone());
        draft.instruction = instruction.clone();
        let draft_id = self.drafts.save_draft(draft)?;
        trace.variant = Some(variant);
        trace.instruction = instruction.clone();
        trace.push(Stage::Prompt, t, variant.as_str(), variant != InstructionVariant::ImageTemplateReference);

        Ok(PreparedListing {
            request_id: req.request_id.clone(),
            draft_id,
            request: GenerationRequest {
                instruction,
                image_ref: req.image_ref.clone(),
                context: Some(ctx),
            },
            max_chars: opts.max_chars,
            trace,
            started,
        })
    }

    /// Streams the generation for a prepared request and stores the draft.
    pub async fn generate(
        &self,
        prepared: PreparedListing,
        on_chunk: &mut (dyn FnMut(&str) -> bool + Send),
    ) -> Result<ListingResponse, ServiceError> {
        let PreparedListing {
            request_id,
            draft_id,
            request,
            max_chars,
            mut trace,
            started,
        } = prepared;
        let t = Instant::now();
        let mut limits = self.gateway.limits();
        if let Some(m) = max_chars {
            limits.max_chars = m;
        }
        let outcome = self.gateway.generate(&request, Some(limits), started, on_chunk).await;
        let mut draft = self.drafts.get(&draft_id).ok_or_else(|| ServiceError::DraftNotFound(draft_id.clone()))?;
        draft.generated_text = outcome.text.clone();
        draft.generation_status = Some(outcome.status);
        draft.state = DraftState::Draft;
        self.drafts.save_draft(draft)?;
        let manual_edit = outcome.status.needs_manual_edit();
        trace.push(Stage::Generation, t, format!("{:?}", outcome.status), manual_edit);
        Ok(ListingResponse {
            request_id,
            draft_id,
            text: outcome.text,
            status: outcome.status,
            manual_edit,
            detail: outcome.detail,
            trace,
        })
    }

    pub async fn handle_listing_request(
        &self,
        req: &ListingRequest,
        on_chunk: &mut (dyn FnMut(&str) -> bool + Send),
    ) -> Result<ListingResponse, ServiceError> {
        let prepared = self.prepare(req)?;
        self.generate(prepared, on_chunk).await
    }

    pub fn get_draft(&self, draft_id: &str) -> Result<ListingDraft, ServiceError> {
        self.drafts.get(draft_id).ok_or_else(|| ServiceError::DraftNotFound(draft_id.to_string()))
    }

    pub fn publish_draft(&self, draft_id: &str, final_text: &str) -> Result<AdoptionMetrics, ServiceError> {
        let mut draft = self.get_draft(draft_id)?;
        if draft.state != DraftState::Draft {
            return Err(ServiceError::Draft(DraftError::IllegalTransition {
                from: Some(draft.state),
                to: DraftState::Published,
            }));
        }
        let ratio = retained_ratio(&draft.generated_text, final_text);
        let score = quality_score(&self.listing_features(&draft.context, final_text), &self.weights);
        draft.state = DraftState::Published;
        draft.final_text = Some(final_text.to_string());
        draft.retained_ratio = Some(ratio);
        draft.quality_score = Some(score);
        draft.published_at_ms = Some(now_ms());
        self.drafts.save_draft(draft)?;
        Ok(AdoptionMetrics {
            draft_id: draft_id.to_string(),
            published: true,
            retained_ratio: Some(ratio),
            quality_score: Some(score),
        })
    }

    /// Quality features of a published listing: attributes are read back
    /// from the final text with the draft's template.
    fn listing_features(&self, ctx: &GenerationContext, final_text: &str) -> QualityFeatureVector {
        let category_id = ctx.category.as_ref().map(|c| c.id.as_str()).unwrap_or("");
        let (template_size, found) = match &ctx.template {
            Some(t) => (t.len(), self.extractor.extract(final_text, category_id, t)),
            None => (0, ExtractedAttributes::empty(category_id)),
        };
        let lowered = final_text.to_lowercase();
        let sources = FeatureSources {
            category_correct: ctx.category.is_some(),
            template_size,
            filled_attributes: found.len(),
            description: final_text.to_string(),
            title: None,
            image_count: 1,
            image_aesthetic: 0.5,
            video_count: 0,
            price: None,
            brand_specified: found.get("Brand").is_some(),
            condition_specified: found.names().any(|n| n.to_lowercase().contains("condition"))
                || ["condition", "new", "used", "scratch"].iter().any(|w| lowered.contains(w)),
        };
        QualityFeatureVector::from_sources(&sources)
    }
}
