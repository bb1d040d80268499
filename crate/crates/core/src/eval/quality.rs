use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::catalog::{AttributeTemplate, ProductRecord};
use crate::text::special_char_ratio;

pub const FEATURE_COUNT: usize = 11;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "category_accuracy",
    "attribute_fill_rate",
    "description_length_score",
    "description_fluency",
    "title_present",
    "image_count_score",
    "image_aesthetic",
    "video_present",
    "price_filled",
    "brand_specified",
    "condition_specified",
];

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QualityError {
    #[error("weights do not cover the feature set (missing: {missing:?}, unknown: {unknown:?})")]
    WeightMismatch { missing: Vec<String>, unknown: Vec<String> },
    #[error("weight {name} is negative or not finite: {value}")]
    NegativeWeight { name: String, value: f64 },
    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("feature {name} = {value} is outside [0, 1]")]
    FeatureOutOfRange { name: String, value: f64 },
    #[error("weights file: {0}")]
    Parse(String),
}

/// The eleven listing-quality features, in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityFeatureVector([f64; FEATURE_COUNT]);

impl QualityFeatureVector {
    pub fn new(values: [f64; FEATURE_COUNT]) -> Result<Self, QualityError> {
        for (name, &value) in FEATURE_NAMES.iter().zip(&values) {
            if !(0.0..=1.0).contains(&value) {
                return Err(QualityError::FeatureOutOfRange {
                    name: name.to_string(),
                    value,
                });
            }
        }
        Ok(Self(values))
    }

    pub fn zeros() -> Self {
        Self([0.0; FEATURE_COUNT])
    }

    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.0
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|n| *n == name).map(|i| self.0[i])
    }

    pub fn to_map(&self) -> IndexMap<String, f64> {
        FEATURE_NAMES
            .iter()
            .zip(self.0)
            .map(|(n, v)| (n.to_string(), v))
            .collect()
    }

    pub fn from_sources(src: &FeatureSources) -> Self {
        let unit = |b: bool| if b { 1.0 } else { 0.0 };
        let fill = if src.template_size == 0 {
            0.0
        } else {
            (src.filled_attributes as f64 / src.template_size as f64).min(1.0)
        };
        let desc = src.description.trim();
        Self([
            unit(src.category_correct),
            fill,
            length_score(desc.chars().count()),
            fluency(desc),
            unit(src.title.as_deref().is_some_and(|t| !t.trim().is_empty())),
            (src.image_count.min(5) as f64) / 5.0,
            src.image_aesthetic.clamp(0.0, 1.0),
            unit(src.video_count > 0),
            unit(src.price.is_some_and(|p| p.is_finite() && p > 0.0)),
            unit(src.brand_specified),
            unit(src.condition_specified),
        ])
    }
}

impl Serialize for QualityFeatureVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_map().serialize(s)
    }
}

/// Full marks for 30..=300 characters, linear ramp below, linear decay to
/// zero at 1000 characters.
fn length_score(chars: usize) -> f64 {
    match chars {
        0 => 0.0,
        n if n < 30 => n as f64 / 30.0,
        n if n <= 300 => 1.0,
        n if n >= 1000 => 0.0,
        n => (1000 - n) as f64 / 700.0,
    }
}

fn fluency(text: &str) -> f64 {
    if text.is_empty() {
        return 0.0;
    }
    (1.0 - special_char_ratio(text) / 0.3).clamp(0.0, 1.0)
}

/// Raw observations a feature vector is computed from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureSources {
    pub category_correct: bool,
    pub template_size: usize,
    pub filled_attributes: usize,
    pub description: String,
    pub title: Option<String>,
    pub image_count: u32,
    pub image_aesthetic: f64,
    pub video_count: u32,
    pub price: Option<f64>,
    pub brand_specified: bool,
    pub condition_specified: bool,
}

impl FeatureSources {
    /// Observations for a listing made of `record` plus a new description.
    /// Attribute fill is counted against `template` when given.
    pub fn from_listing(record: &ProductRecord, template: Option<&AttributeTemplate>, description: &str) -> Self {
        let filled = |name: &str| record.attributes.get(name).is_some_and(|v| !v.trim().is_empty());
        let (template_size, filled_attributes) = match template {
            Some(t) => (t.len(), t.iter().filter(|n| filled(n)).count()),
            None => (record.attributes.len(), record.attributes.values().filter(|v| !v.trim().is_empty()).count()),
        };
        let lowered = description.to_lowercase();
        let condition_specified = record
            .attributes
            .iter()
            .any(|(k, v)| k.to_lowercase().contains("condition") && !v.trim().is_empty())
            || ["condition", "new", "used", "scratch"].iter().any(|w| lowered.contains(w));
        Self {
            category_correct: !record.category_id.is_empty(),
            template_size,
            filled_attributes,
            description: description.to_string(),
            title: record.title.clone(),
            image_count: record.image_count.max(record.image_urls.len() as u32),
            image_aesthetic: 0.5,
            video_count: record.video_count,
            price: record.price,
            brand_specified: filled("Brand"),
            condition_specified,
        }
    }
}

/// Nonnegative per-feature weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityWeights([f64; FEATURE_COUNT]);

impl Default for QualityWeights {
    fn default() -> Self {
        Self::uniform()
    }
}

impl QualityWeights {
    pub fn uniform() -> Self {
        Self([1.0 / FEATURE_COUNT as f64; FEATURE_COUNT])
    }

    pub fn from_map(map: &IndexMap<String, f64>) -> Result<Self, QualityError> {
        let missing: Vec<String> = FEATURE_NAMES
            .iter()
            .filter(|n| !map.contains_key(**n))
            .map(|n| n.to_string())
            .collect();
        let unknown: Vec<String> = map
            .keys()
            .filter(|k| !FEATURE_NAMES.contains(&k.as_str()))
            .cloned()
            .collect();
        if !missing.is_empty() || !unknown.is_empty() {
            return Err(QualityError::WeightMismatch { missing, unknown });
        }
        let mut values = [0.0; FEATURE_COUNT];
        for (i, name) in FEATURE_NAMES.iter().enumerate() {
            values[i] = map[*name];
        }
        Self::from_array(values)
    }

    pub fn from_array(values: [f64; FEATURE_COUNT]) -> Result<Self, QualityError> {
        for (name, &value) in FEATURE_NAMES.iter().zip(&values) {
            if !value.is_finite() || value < 0.0 {
                return Err(QualityError::NegativeWeight {
                    name: name.to_string(),
                    value,
                });
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(QualityError::WeightSum(sum));
        }
        Ok(Self(values))
    }

    pub fn from_json(text: &str) -> Result<Self, QualityError> {
        let map: IndexMap<String, f64> = serde_json::from_str(text).map_err(|e| QualityError::Parse(e.to_string()))?;
        Self::from_map(&map)
    }

    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.0
    }

    pub fn to_map(&self) -> IndexMap<String, f64> {
        FEATURE_NAMES
            .iter()
            .zip(self.0)
            .map(|(n, v)| (n.to_string(), v))
            .collect()
    }
}

impl Serialize for QualityWeights {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_map().serialize(s)
    }
}

impl<'de> Deserialize<'de> for QualityWeights {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let map = IndexMap::<String, f64>::deserialize(d)?;
        Self::from_map(&map).map_err(serde::de::Error::custom)
    }
}

/// Weighted sum of the features. Both inputs are validated on
/// construction, so the result already lies in [0, 1].
pub fn quality_score(features: &QualityFeatureVector, weights: &QualityWeights) -> f64 {
    features
        .0
        .iter()
        .zip(weights.0.iter())
        .map(|(f, w)| f * w)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}
