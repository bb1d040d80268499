use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use super::kv::{KvLog, StoreError};
use super::record::{parse_record_line, ProductRecord, RecordError};
use super::taxonomy::{CategoryNode, Taxonomy, TaxonomyError};

/// Default embedding dimension for fixtures.
pub const DEFAULT_DIMENSION: usize = 64;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    pub dimension: usize,
    /// Reject records whose category is absent from the loaded taxonomy.
    pub require_known_category: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            dimension: DEFAULT_DIMENSION,
            require_known_category: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineRejection {
    /// 1-based line number in the source file.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CatalogStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rejections: Vec<LineRejection>,
    pub per_category: BTreeMap<String, usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("cannot read catalog {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Storage(#[from] StoreError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error("product {0} not found")]
    ProductNotFound(String),
}

/// Product records plus the category taxonomy. Shareable across handlers;
/// reads are lock-free of each other, writes are serialized.
pub struct CatalogStore {
    products: KvLog<ProductRecord>,
    taxonomy: RwLock<Taxonomy>,
}

impl CatalogStore {
    pub fn in_memory() -> Self {
        Self {
            products: KvLog::in_memory(),
            taxonomy: RwLock::new(Taxonomy::default()),
        }
    }

    /// Opens (or creates) a store persisted under `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let products = KvLog::open(dir.as_ref().join("products.kv.jsonl"))?;
        Ok(Self {
            products,
            taxonomy: RwLock::new(Taxonomy::default()),
        })
    }

    pub fn set_taxonomy(&self, taxonomy: Taxonomy) {
        *self.taxonomy.write() = taxonomy;
    }

    pub fn load_taxonomy(&self, path: impl AsRef<Path>) -> Result<(), CatalogError> {
        self.set_taxonomy(Taxonomy::load(path)?);
        Ok(())
    }

    pub fn taxonomy(&self) -> Taxonomy {
        self.taxonomy.read().clone()
    }

    pub fn get_category(&self, category_id: &str) -> Result<CategoryNode, TaxonomyError> {
        self.taxonomy.read().get_category(category_id).cloned()
    }

    pub fn get(&self, id: &str) -> Option<ProductRecord> {
        self.products.get(id)
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    /// All products in id order.
    pub fn products(&self) -> Vec<ProductRecord> {
        self.products.values()
    }

    /// Validates, normalizes and upserts one record.
    pub fn upsert(&self, mut record: ProductRecord, config: &IngestConfig) -> Result<(), IngestRejection> {
        record
            .normalize_and_validate(config.dimension)
            .map_err(IngestRejection::Record)?;
        if config.require_known_category && self.get_category(&record.category_id).is_err() {
            return Err(IngestRejection::UnknownCategory(record.category_id));
        }
        let id = record.id.clone();
        self.products
            .put(&id, record)
            .map_err(|e| IngestRejection::Storage(e.to_string()))
    }

    pub fn ingest_catalog(&self, source: impl AsRef<Path>, config: &IngestConfig) -> Result<CatalogStats, CatalogError> {
        let path = source.as_ref();
        let file = File::open(path).map_err(|source| CatalogError::Unreadable {
            path: path.to_path_buf(),
            source,
        })?;
        self.ingest_reader(BufReader::new(file), config)
            .map_err(|source| CatalogError::Unreadable {
                path: path.to_path_buf(),
                source,
            })
    }

    /// Ingests JSONL from any reader. Only I/O failure is fatal.
    pub fn ingest_reader<R: BufRead>(&self, reader: R, config: &IngestConfig) -> std::io::Result<CatalogStats> {
        let mut stats = CatalogStats::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let outcome = parse_record_line(&line)
                .map_err(IngestRejection::Record)
                .and_then(|record| {
                    let category = record.category_id.clone();
                    self.upsert(record, config).map(|_| category)
                });
            match outcome {
                Ok(category) => {
                    stats.accepted += 1;
                    *stats.per_category.entry(category).or_default() += 1;
                }
                Err(reason) => {
                    stats.rejected += 1;
                    stats.rejections.push(LineRejection {
                        line: idx + 1,
                        reason: reason.to_string(),
                    });
                }
            }
        }
        Ok(stats)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IngestRejection {
    #[error(transparent)]
    Record(RecordError),
    #[error("unknown category {0}")]
    UnknownCategory(String),
    #[error("storage failure: {0}")]
    Storage(String),
}
