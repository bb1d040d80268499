//! Training-corpus cleaning and instruction dataset construction.

mod build;
mod clean;
mod qa;

pub use build::{
    build_instruction_dataset, description_task_tag, mix_task_families, BuildOptions, BuildStats, DatasetBuild,
    DatasetMix, FamilyMix, VariantMix,
};
pub use clean::{
    clean_corpus, stratified_sample, stratified_split, CleaningConfig, CleaningScorers, CleaningStep, ImageTextScorer,
    QualityScorer, RecordRejection, RejectionReport, RiskTagger, DEFAULT_PRIVACY_PATTERNS,
};
pub use qa::{parse_general_qa, scaffold_general_qa, QaParse, QaPromptConfig, GENERAL_QA_TASKS};

use crate::catalog::TaxonomyError;
use crate::prompt::PromptError;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("invalid cleaning config: {0}")]
    InvalidConfig(String),
    #[error("invalid dataset mix: {0}")]
    InvalidMix(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Template(#[from] TaxonomyError),
}
