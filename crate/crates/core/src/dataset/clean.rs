use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::catalog::ProductRecord;
use crate::eval::{quality_score, FeatureSources, QualityFeatureVector, QualityWeights};
use crate::text::special_char_ratio;

pub const DEFAULT_PRIVACY_PATTERNS: [&str; 4] = [
    r"\b1\d{10}\b",
    r"\b\d{3,4}[- ]\d{3,4}[- ]\d{4}\b",
    r"(?i)\b(?:https?://|www\.)\S+",
    r"\b\d{17}[\dXx]\b",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleaningConfig {
    pub min_quality_score: f64,
    pub risk_tags_blocklist: BTreeSet<String>,
    pub min_image_text_sim: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub privacy_patterns: Vec<String>,
    pub special_char_ratio_max: f64,
    /// Records kept per category by the final sampling step; `None` keeps all.
    pub per_category_cap: Option<usize>,
    pub seed: u64,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        Self {
            min_quality_score: 0.3,
            risk_tags_blocklist: ["low_price_bait", "off_platform_traffic", "suspected_fraud"]
                .into_iter()
                .map(String::from)
                .collect(),
            min_image_text_sim: 0.0,
            min_len: 10,
            max_len: 500,
            privacy_patterns: DEFAULT_PRIVACY_PATTERNS.iter().map(|s| s.to_string()).collect(),
            special_char_ratio_max: 0.3,
            per_category_cap: None,
            seed: 0,
        }
    }
}

impl CleaningConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::InvalidConfig(m));
        if self.min_len >= self.max_len {
            return bad(format!("min_len {} must be below max_len {}", self.min_len, self.max_len));
        }
        for (name, v) in [
            ("min_quality_score", self.min_quality_score),
            ("min_image_text_sim", self.min_image_text_sim),
            ("special_char_ratio_max", self.special_char_ratio_max),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} is outside [0, 1]"));
            }
        }
        if self.per_category_cap == Some(0) {
            return bad("per_category_cap must be at least 1".into());
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, DatasetError> {
        let cfg: Self = toml::from_str(text).map_err(|e| DatasetError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

pub type QualityScorer = Arc<dyn Fn(&ProductRecord) -> f64 + Send + Sync>;
pub type RiskTagger = Arc<dyn Fn(&ProductRecord) -> Vec<String> + Send + Sync>;
pub type ImageTextScorer = Arc<dyn Fn(&ProductRecord) -> f64 + Send + Sync>;

/// Pluggable scoring functions for the first three cleaning steps.
#[derive(Clone)]
pub struct CleaningScorers {
    pub quality: QualityScorer,
    pub risk: RiskTagger,
    pub img_text: ImageTextScorer,
}

impl Default for CleaningScorers {
    fn default() -> Self {
        let weights = QualityWeights::uniform();
        Self {
            quality: Arc::new(move |r: &ProductRecord| {
                let features = QualityFeatureVector::from_sources(&FeatureSources::from_listing(r, None, &r.description));
                quality_score(&features, &weights)
            }),
            risk: Arc::new(|r: &ProductRecord| r.risk_tags.clone()),
            img_text: Arc::new(|_: &ProductRecord| 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CleaningStep {
    Quality,
    Risk,
    ImageText,
    Heuristic,
    Sampling,
}

impl CleaningStep {
    pub const ORDER: [CleaningStep; 5] = [
        CleaningStep::Quality,
        CleaningStep::Risk,
        CleaningStep::ImageText,
        CleaningStep::Heuristic,
        CleaningStep::Sampling,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRejection {
    pub source_id: String,
    pub step: CleaningStep,
    pub reason: String,
    /// Steps run on this record, in order; the last one rejected it.
    pub evaluated: Vec<CleaningStep>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RejectionReport {
    pub input: usize,
    pub accepted: usize,
    pub low_quality: usize,
    pub risk: usize,
    pub low_img_text_sim: usize,
    pub heuristic: usize,
    pub sampled_out: usize,
    pub trail: Vec<RecordRejection>,
}

impl RejectionReport {
    pub fn rejected(&self) -> usize {
        self.low_quality + self.risk + self.low_img_text_sim + self.heuristic + self.sampled_out
    }

    pub fn is_conserved(&self) -> bool {
        self.accepted + self.rejected() == self.input && self.trail.len() == self.rejected()
    }

    fn record(&mut self, rejection: RecordRejection) {
        match rejection.step {
            CleaningStep::Quality => self.low_quality += 1,
            CleaningStep::Risk => self.risk += 1,
            CleaningStep::ImageText => self.low_img_text_sim += 1,
            CleaningStep::Heuristic => self.heuristic += 1,
            CleaningStep::Sampling => self.sampled_out += 1,
        }
        self.trail.push(rejection);
    }
}

struct Heuristics {
    privacy: Vec<Regex>,
}

fn filter_one(
    record: &ProductRecord,
    config: &CleaningConfig,
    scorers: &CleaningScorers,
    heuristics: &Heuristics,
) -> Option<RecordRejection> {
    let mut evaluated = Vec::with_capacity(4);
    let reject = |evaluated: Vec<CleaningStep>, reason: String| {
        Some(RecordRejection {
            source_id: record.id.clone(),
            step: *evaluated.last().expect("at least one step ran"),
            reason,
            evaluated,
        })
    };

    evaluated.push(CleaningStep::Quality);
    let q = (scorers.quality)(record);
    if !(q >= config.min_quality_score) {
        return reject(evaluated, format!("quality {q:.4} below {}", config.min_quality_score));
    }

    evaluated.push(CleaningStep::Risk);
    if let Some(tag) = (scorers.risk)(record)
        .into_iter()
        .find(|t| config.risk_tags_blocklist.contains(t))
    {
        return reject(evaluated, format!("risk:{tag}"));
    }

    evaluated.push(CleaningStep::ImageText);
    let s = (scorers.img_text)(record);
    if !(s >= config.min_image_text_sim) {
        return reject(evaluated, format!("img_text {s:.4} below {}", config.min_image_text_sim));
    }

    evaluated.push(CleaningStep::Heuristic);
    let text = record.description.trim();
    let len = text.chars().count();
    if len < config.min_len || len > config.max_len {
        return reject(evaluated, "length".into());
    }
    if heuristics.privacy.iter().any(|re| re.is_match(text)) {
        return reject(evaluated, "privacy".into());
    }
    if special_char_ratio(text) > config.special_char_ratio_max {
        return reject(evaluated, "special_chars".into());
    }
    None
}

/// Draws `min(count, cap)` records per category with a seeded generator.
/// Input order does not matter: records are ordered by id before drawing.
/// Returns the kept records and the ones left out, both sorted by id.
pub fn stratified_split(products: Vec<ProductRecord>, per_category_cap: usize, seed: u64) -> (Vec<ProductRecord>, Vec<ProductRecord>) {
    assert!(per_category_cap >= 1, "cap must be at least 1");
    let mut by_category: BTreeMap<String, Vec<ProductRecord>> = BTreeMap::new();
    for p in products {
        by_category.entry(p.category_id.clone()).or_default().push(p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut kept, mut dropped) = (Vec::new(), Vec::new());
    for (_, mut group) in by_category {
        group.sort_by(|a, b| a.id.cmp(&b.id));
        if group.len() <= per_category_cap {
            kept.extend(group);
            continue;
        }
        let chosen: BTreeSet<usize> = sample_indices(&mut rng, group.len(), per_category_cap).into_iter().collect();
        for (i, p) in group.into_iter().enumerate() {
            if chosen.contains(&i) {
                kept.push(p);
            } else {
                dropped.push(p);
            }
        }
    }
    kept.sort_by(|a, b| a.id.cmp(&b.id));
    dropped.sort_by(|a, b| a.id.cmp(&b.id));
    (kept, dropped)
}

pub fn stratified_sample(products: Vec<ProductRecord>, per_category_cap: usize, seed: u64) -> Vec<ProductRecord> {
    stratified_split(products, per_category_cap, seed).0
}

/// Runs the five cleaning steps in order. Each record stops at the first
/// step it fails. The accepted list and the trail are sorted by id.
pub fn clean_corpus(
    products: Vec<ProductRecord>,
    config: &CleaningConfig,
    scorers: &CleaningScorers,
) -> Result<(Vec<ProductRecord>, RejectionReport), DatasetError> {
    config.validate()?;
    let privacy = config
        .privacy_patterns
        .iter()
        .map(|p| Regex::new(p).map_err(|e| DatasetError::InvalidConfig(format!("privacy pattern {p:?}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let heuristics = Heuristics { privacy };

    let mut report = RejectionReport {
        input: products.len(),
        ..RejectionReport::default()
    };
    let outcomes: Vec<(ProductRecord, Option<RecordRejection>)> = products
        .into_par_iter()
        .map(|p| {
            let verdict = filter_one(&p, config, scorers, &heuristics);
            (p, verdict)
        })
        .collect();
    let mut passing = Vec::new();
    for (p, verdict) in outcomes {
        match verdict {
            Some(r) => report.record(r),
            None => passing.push(p),
        }
    }
    let accepted = match config.per_category_cap {
        Some(cap) => {
            let (kept, dropped) = stratified_split(passing, cap, config.seed);
            for p in dropped {
                report.record(RecordRejection {
                    source_id: p.id,
                    step: CleaningStep::Sampling,
                    reason: "sampled_out".into(),
                    evaluated: CleaningStep::ORDER.to_vec(),
                });
            }
            kept
        }
        None => {
            passing.sort_by(|a, b| a.id.cmp(&b.id));
            passing
        }
    };
    report.accepted = accepted.len();
    report.trail.sort_by(|a, b| a.source_id.cmp(&b.source_id));
    Ok((accepted, report))
}
