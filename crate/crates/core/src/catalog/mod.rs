//! Product records, category taxonomy, listing drafts and their storage.

mod draft;
mod embed;
pub mod kv;
mod record;
mod store;
mod taxonomy;

pub use draft::{now_ms, DraftError, DraftState, DraftStore, ListingDraft};
pub use embed::{fnv1a, Embedder, HashingEmbedder};
pub use record::{
    l2_norm, normalize, parse_record_line, record_line, ProductRecord, RecordError, NORM_TOLERANCE,
    SCHEMA_VERSION,
};
pub use store::{
    CatalogError, CatalogStats, CatalogStore, IngestConfig, IngestRejection, LineRejection,
    DEFAULT_DIMENSION,
};
pub use taxonomy::{AttributeTemplate, CategoryNode, Taxonomy, TaxonomyEntry, TaxonomyError, TaxonomyFile};
