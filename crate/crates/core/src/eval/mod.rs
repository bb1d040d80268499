//! Metrics, benchmark runners, quality scoring and the ablation driver.

mod ablation;
mod benchmark;
mod bleu;
mod quality;
mod rouge;
mod sim;
mod tokenize;

pub use ablation::{
    ablation_fixture, run_ablation, AblationConfig, AblationFixture, AblationQuery, AblationRow, AblationTable,
    COLUMNS as ABLATION_COLUMNS,
};
pub use benchmark::{
    parse_benchmark_jsonl, run_benchmark, AnsweringModel, BenchmarkSample, EvalReport, TaskKind, TaskReport,
};
pub use bleu::{bleu, bleu_stats, bleu_with_epsilon, corpus_bleu, BleuStats, DEFAULT_EPSILON};
pub use quality::{
    quality_score, FeatureSources, QualityError, QualityFeatureVector, QualityWeights, FEATURE_COUNT, FEATURE_NAMES,
};
pub use rouge::{rouge, rouge_recall, rouge_value, RougeVariant};
pub use sim::{sim, SimScorer};
pub use tokenize::{is_cjk, Tokenizer, TokenizerMode};

use serde::{Deserialize, Serialize};

use crate::attributes::ExtractedAttributes;
use crate::text::normalize_for_match;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("gold attribute set is empty")]
    EmptyGold,
    #[error("benchmark line {line}: {reason}")]
    InvalidSample { line: usize, reason: String },
    #[error(transparent)]
    Quality(#[from] QualityError),
    #[error("ablation failed: {0}")]
    Ablation(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub name: String,
    pub value: f64,
    pub sample_count: usize,
}

impl MetricScore {
    pub fn new(name: impl Into<String>, value: f64, sample_count: usize) -> Self {
        Self {
            name: name.into(),
            value: value.clamp(0.0, 1.0),
            sample_count: sample_count.max(1),
        }
    }
}

/// Fraction of gold attribute values that occur in `generated` after
/// case folding and whitespace collapsing.
pub fn attribute_accuracy(generated: &str, gold: &ExtractedAttributes) -> Result<MetricScore, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let text = normalize_for_match(generated);
    let hits = gold
        .iter()
        .filter(|(_, v)| {
            let v = normalize_for_match(v);
            !v.is_empty() && text.contains(&v)
        })
        .count();
    Ok(MetricScore::new("ACC", hits as f64 / gold.len() as f64, 1))
}

/// Mean of per-sample values, summed in sorted order so the result does
/// not depend on how the samples were scheduled.
pub(crate) fn stable_mean(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}
