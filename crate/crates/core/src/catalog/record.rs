use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

/// Current catalog line format version.
pub const SCHEMA_VERSION: u32 = 1;

/// Tolerance on the unit-norm invariant after normalization.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// A catalog item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductRecord {
    pub id: String,
    pub category_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub description: String,
    #[serde(default)]
    pub attributes: IndexMap<String, String>,
    #[serde(default)]
    pub image_embeddings: Vec<Vec<f32>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub image_urls: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price: Option<f64>,
    #[serde(default)]
    pub image_count: u32,
    #[serde(default)]
    pub video_count: u32,
    /// Ground-truth identical-product group. Fixture-only; serving never reads it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sku_group: Option<String>,
    /// Ground-truth same-key-attributes group. Fixture-only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spu_group: Option<String>,
    /// Externally supplied platform risk tags.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub risk_tags: Vec<String>,
}

impl ProductRecord {
    pub fn new(id: impl Into<String>, category_id: impl Into<String>, description: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            category_id: category_id.into(),
            title: None,
            description: description.into(),
            attributes: IndexMap::new(),
            image_embeddings: Vec::new(),
            image_urls: Vec::new(),
            price: None,
            image_count: 0,
            video_count: 0,
            sku_group: None,
            spu_group: None,
            risk_tags: Vec::new(),
        }
    }

    pub fn with_embedding(mut self, embedding: Vec<f32>) -> Self {
        self.image_embeddings.push(embedding);
        self
    }

    pub fn with_attribute(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.insert(name.into(), value.into());
        self
    }

    /// Reference handed to the generator for this product's primary photo.
    pub fn image_ref(&self) -> String {
        self.image_urls
            .first()
            .cloned()
            .unwrap_or_else(|| format!("images/{}.jpg", self.id))
    }

    pub fn primary_embedding(&self) -> Option<&[f32]> {
        self.image_embeddings.first().map(Vec::as_slice)
    }

    /// Checks field invariants and L2-normalizes every embedding in place.
    pub fn normalize_and_validate(&mut self, dimension: usize) -> Result<(), RecordError> {
        if self.id.trim().is_empty() {
            return Err(RecordError::EmptyId);
        }
        if self.category_id.trim().is_empty() {
            return Err(RecordError::EmptyCategory);
        }
        if self.attributes.keys().any(|k| k.is_empty()) {
            return Err(RecordError::EmptyAttributeKey);
        }
        if let Some(price) = self.price {
            if !price.is_finite() || price < 0.0 {
                return Err(RecordError::InvalidPrice(price));
            }
        }
        if self.image_embeddings.is_empty() {
            return Err(RecordError::MissingEmbedding);
        }
        for (idx, embedding) in self.image_embeddings.iter_mut().enumerate() {
            if embedding.len() != dimension {
                return Err(RecordError::Dimension {
                    index: idx,
                    expected: dimension,
                    actual: embedding.len(),
                });
            }
            if !normalize(embedding) {
                return Err(RecordError::DegenerateEmbedding(idx));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RecordError {
    #[error("record id is empty")]
    EmptyId,
    #[error("category_id is empty")]
    EmptyCategory,
    #[error("attribute key is empty")]
    EmptyAttributeKey,
    #[error("price {0} is not a nonnegative number")]
    InvalidPrice(f64),
    #[error("record has no image embedding")]
    MissingEmbedding,
    #[error("embedding {index} has dimension {actual}, expected {expected}")]
    Dimension {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("embedding {0} has zero or non-finite norm")]
    DegenerateEmbedding(usize),
    #[error("unsupported schema_version {0}")]
    SchemaVersion(u32),
    #[error("malformed record: {0}")]
    Parse(String),
}

/// L2-normalizes `v` in place. Returns false for zero or non-finite vectors.
pub fn normalize(v: &mut [f32]) -> bool {
    let norm = l2_norm(v);
    if !norm.is_finite() || norm == 0.0 {
        return false;
    }
    for x in v.iter_mut() {
        *x = (*x as f64 / norm) as f32;
    }
    true
}

pub fn l2_norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    schema_version: u32,
    #[serde(flatten)]
    record: ProductRecord,
}

/// Parses one catalog JSONL line.
pub fn parse_record_line(line: &str) -> Result<ProductRecord, RecordError> {
    let parsed: RecordLine =
        serde_json::from_str(line).map_err(|e| RecordError::Parse(e.to_string()))?;
    if parsed.schema_version != SCHEMA_VERSION {
        return Err(RecordError::SchemaVersion(parsed.schema_version));
    }
    Ok(parsed.record)
}

/// Renders one catalog JSONL line (no trailing newline).
pub fn record_line(record: &ProductRecord) -> String {
    serde_json::to_string(&RecordLine {
        schema_version: SCHEMA_VERSION,
        record: record.clone(),
    })
    .expect("product records always serialize")
}
