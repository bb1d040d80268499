use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{attribute_accuracy, bleu, rouge_value, stable_mean, EvalError, MetricScore, RougeVariant, SimScorer, Tokenizer};
use crate::attributes::ExtractedAttributes;
use crate::catalog::{Embedder, HashingEmbedder};
use crate::gateway::{StreamLimits, TemplateFillBackend};
use crate::prompt::InstructionVariant;
use crate::service::{ListingPipeline, ListingRequest, RequestOptions};
use crate::synthetic::{generate_world, SyntheticConfig};

/// Context sources enabled for one ablation row. The image is always used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub category: bool,
    pub reference: bool,
}

impl AblationConfig {
    pub const IMAGE_ONLY: Self = Self {
        category: false,
        reference: false,
    };
    /// The four rows: image; +category; +reference; +both.
    pub const ALL: [Self; 4] = [
        Self::IMAGE_ONLY,
        Self {
            category: true,
            reference: false,
        },
        Self {
            category: false,
            reference: true,
        },
        Self {
            category: true,
            reference: true,
        },
    ];

    pub fn label(&self) -> String {
        let mut s = String::from("image");
        if self.category {
            s.push_str("+category");
        }
        if self.reference {
            s.push_str("+reference");
        }
        s
    }

    fn options(&self) -> RequestOptions {
        RequestOptions {
            use_category: self.category,
            use_reference: self.reference,
            template_from_reference: Some(self.reference && !self.category),
            ..RequestOptions::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct AblationQuery {
    pub id: String,
    pub image_ref: String,
    pub embedding: Vec<f32>,
    pub gold_description: String,
    pub gold_attributes: ExtractedAttributes,
}

pub struct AblationFixture {
    pub pipeline: ListingPipeline,
    pub queries: Vec<AblationQuery>,
}

/// Synthetic catalog plus held-out queries, served by the template-fill
/// mock generator.
pub fn ablation_fixture(config: &SyntheticConfig) -> AblationFixture {
    let world = generate_world(config);
    let pipeline = ListingPipeline::from_world(&world, Arc::new(TemplateFillBackend::default()), StreamLimits::default());
    let queries = world
        .queries
        .into_iter()
        .map(|q| AblationQuery {
            id: q.id,
            image_ref: q.image_ref,
            embedding: q.embedding,
            gold_description: q.gold_description,
            gold_attributes: q.gold_attributes,
        })
        .collect();
    AblationFixture { pipeline, queries }
}

pub const COLUMNS: [&str; 9] = ["ACC", "SIM", "BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "ROUGE-1", "ROUGE-2", "ROUGE-L"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub config: AblationConfig,
    pub label: String,
    /// One score per entry of [`COLUMNS`], averaged over queries.
    pub metrics: Vec<MetricScore>,
    pub variants: BTreeMap<InstructionVariant, usize>,
}

impl AblationRow {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
    pub query_count: usize,
}

impl AblationTable {
    pub fn row(&self, config: AblationConfig) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.config == config)
    }

    pub fn to_text(&self) -> String {
        let mark = |b: bool| if b { "x" } else { "" };
        let mut out = format!("{:<7}{:<10}{:<11}", "Image", "Category", "Reference");
        for c in COLUMNS {
            out.push_str(&format!("{c:>9}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{:<7}{:<10}{:<11}", "x", mark(row.config.category), mark(row.config.reference)));
            for m in &row.metrics {
                out.push_str(&format!("{:>9.3}", m.value));
            }
            out.push('\n');
        }
        out
    }
}

/// Runs every query through the full pipeline once per config and scores
/// the generated text against the query's own description.
pub async fn run_ablation(fixture: &AblationFixture, configs: &[AblationConfig]) -> Result<AblationTable, EvalError> {
    let dim = fixture.pipeline.index.load().dimension();
    let sim_embedder = HashingEmbedder::new(dim);
    let tokenizer = Tokenizer {
        lowercase: true,
        ..Tokenizer::default()
    };
    let mut rows = Vec::with_capacity(configs.len());
    for &config in configs {
        let mut per_metric: Vec<Vec<f64>> = vec![Vec::new(); COLUMNS.len()];
        let mut variants = BTreeMap::new();
        for q in &fixture.queries {
            let req = ListingRequest::with_embedding(q.image_ref.clone(), q.embedding.clone()).options(config.options());
            let response = fixture
                .pipeline
                .handle_listing_request(&req, &mut |_| true)
                .await
                .map_err(|e| EvalError::Ablation(format!("{}: {e}", q.id)))?;
            if let Some(v) = response.trace.variant {
                *variants.entry(v).or_insert(0) += 1;
            }
            let values = score_one(&response.text, q, &tokenizer, &sim_embedder)?;
            for (slot, v) in per_metric.iter_mut().zip(values) {
                slot.push(v);
            }
        }
        let n = fixture.queries.len();
        rows.push(AblationRow {
            config,
            label: config.label(),
            metrics: COLUMNS
                .iter()
                .zip(per_metric)
                .map(|(name, values)| MetricScore::new(*name, stable_mean(values), n))
                .collect(),
            variants,
        });
    }
    Ok(AblationTable {
        rows,
        query_count: fixture.queries.len(),
    })
}

fn score_one(text: &str, q: &AblationQuery, tokenizer: &Tokenizer, embedder: &dyn Embedder) -> Result<[f64; 9], EvalError> {
    let cand = tokenizer.tokenize(text);
    let reference = tokenizer.tokenize(&q.gold_description);
    let b = bleu(&cand, std::slice::from_ref(&reference), 4);
    Ok([
        attribute_accuracy(text, &q.gold_attributes)?.value,
        SimScorer::new(embedder).with_tokenizer(*tokenizer).score_value(text, &q.gold_description),
        b[0].value,
        b[1].value,
        b[2].value,
        b[3].value,
        rouge_value(&cand, &reference, RougeVariant::R1),
        rouge_value(&cand, &reference, RougeVariant::R2),
        rouge_value(&cand, &reference, RougeVariant::RL),
    ])
}
