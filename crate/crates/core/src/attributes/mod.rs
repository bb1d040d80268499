//! Key-attribute extraction against a category's attribute template.
//!
//! The reference extractor is a gazetteer + regex lexicon. A model-backed
//! extractor shares the [`AttributeExtractor`] contract and talks to its
//! model through the prompt from [`build_extraction_prompt`].

mod lexicon;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::catalog::AttributeTemplate;

pub use lexicon::{AttributeRules, ExtractionLexicon, LexiconFile, ANY_CATEGORY};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AttributeError {
    #[error("lexicon: {0}")]
    Lexicon(String),
    #[error("attribute template is empty")]
    EmptyTemplate,
    #[error("attribute {0} is not in the template")]
    NotInTemplate(String),
    #[error("attribute {0} has an empty value")]
    EmptyValue(String),
    #[error("malformed attribute JSON: {0}")]
    Json(String),
}

/// Extracted values keyed by template attribute, in template order.
/// Attributes that were not found are absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractedAttributes {
    pub category_id: String,
    values: IndexMap<String, String>,
}

impl ExtractedAttributes {
    pub fn empty(category_id: impl Into<String>) -> Self {
        Self {
            category_id: category_id.into(),
            values: IndexMap::new(),
        }
    }

    /// Builds a validated value set; pairs may come in any order.
    pub fn from_pairs<I, K, V>(category_id: impl Into<String>, template: &AttributeTemplate, pairs: I) -> Result<Self, AttributeError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let mut found: Vec<(usize, String, String)> = Vec::new();
        for (k, v) in pairs {
            let (k, v) = (k.into(), v.into());
            let pos = template
                .position(&k)
                .ok_or_else(|| AttributeError::NotInTemplate(k.clone()))?;
            if v.is_empty() {
                return Err(AttributeError::EmptyValue(k));
            }
            found.retain(|(p, _, _)| *p != pos);
            found.push((pos, k, v));
        }
        found.sort_by_key(|(p, _, _)| *p);
        Ok(Self {
            category_id: category_id.into(),
            values: found.into_iter().map(|(_, k, v)| (k, v)).collect(),
        })
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    /// Keeps only attributes accepted by `keep`.
    pub fn retain(&mut self, mut keep: impl FnMut(&str) -> bool) {
        self.values.retain(|k, _| keep(k));
    }

    /// Lenient reading of a model response: takes the first JSON object in
    /// `text`, keeps string values for template keys, drops the rest.
    pub fn from_model_output(category_id: &str, template: &AttributeTemplate, text: &str) -> Self {
        let object = text
            .find('{')
            .zip(text.rfind('}'))
            .filter(|(s, e)| s < e)
            .and_then(|(s, e)| serde_json::from_str::<serde_json::Map<String, serde_json::Value>>(&text[s..=e]).ok());
        let Some(object) = object else {
            return Self::empty(category_id);
        };
        let pairs = object.into_iter().filter_map(|(k, v)| match v {
            serde_json::Value::String(s) if template.contains(&k) && !s.trim().is_empty() => {
                Some((k, s.trim().to_string()))
            }
            _ => None,
        });
        Self::from_pairs(category_id, template, pairs).unwrap_or_else(|_| Self::empty(category_id))
    }
}

/// JSON object with keys in template order, two-space indented, no
/// trailing whitespace. Empty input gives `{}`.
pub fn serialize_attributes(attrs: &ExtractedAttributes) -> String {
    serde_json::to_string_pretty(&attrs.values).expect("string map always serializes")
}

/// Strict inverse of [`serialize_attributes`].
pub fn parse_attributes(text: &str, category_id: &str, template: &AttributeTemplate) -> Result<ExtractedAttributes, AttributeError> {
    let map: IndexMap<String, String> =
        serde_json::from_str(text).map_err(|e| AttributeError::Json(e.to_string()))?;
    ExtractedAttributes::from_pairs(category_id, template, map)
}

/// Instruction asking a model to extract `template` attributes from
/// `description` as JSON.
pub fn build_extraction_prompt(description: &str, template: &AttributeTemplate) -> Result<String, AttributeError> {
    build_extraction_prompt_for(description, template, None)
}

/// As [`build_extraction_prompt`], naming the product kind (e.g. "smartphone").
pub fn build_extraction_prompt_for(
    description: &str,
    template: &AttributeTemplate,
    product_kind: Option<&str>,
) -> Result<String, AttributeError> {
    if template.is_empty() {
        return Err(AttributeError::EmptyTemplate);
    }
    let names = template.names().join(", ");
    let subject = match product_kind {
        Some(kind) => format!("the following {kind} product"),
        None => "the following product".to_string(),
    };
    Ok(format!(
        "Extract the {names} for {subject}. Output the result in JSON format. Product description: {description}"
    ))
}

pub trait AttributeExtractor: Send + Sync {
    fn extract(&self, description: &str, category_id: &str, template: &AttributeTemplate) -> ExtractedAttributes;
}

/// Gazetteer/regex reference extractor.
///
/// Per attribute, the earliest match in the description wins; among
/// matches starting at the same byte the longest wins. Values are always
/// substrings of the description.
#[derive(Debug, Clone)]
pub struct RuleExtractor {
    lexicon: std::sync::Arc<ExtractionLexicon>,
}

impl RuleExtractor {
    pub fn new(lexicon: impl Into<std::sync::Arc<ExtractionLexicon>>) -> Self {
        Self {
            lexicon: lexicon.into(),
        }
    }

    pub fn lexicon(&self) -> &ExtractionLexicon {
        &self.lexicon
    }
}

pub fn extract_attributes(
    description: &str,
    category_id: &str,
    template: &AttributeTemplate,
    lexicon: &ExtractionLexicon,
) -> ExtractedAttributes {
    let mut values = IndexMap::new();
    for attr in template.iter() {
        let best = lexicon
            .matchers(category_id, attr)
            .filter_map(|m| m.find(description))
            .min_by(|a, b| a.0.cmp(&b.0).then((b.1 - b.0).cmp(&(a.1 - a.0))));
        if let Some((start, end)) = best {
            let value = description[start..end].trim();
            if !value.is_empty() {
                values.insert(attr.to_string(), value.to_string());
            }
        }
    }
    ExtractedAttributes {
        category_id: category_id.to_string(),
        values,
    }
}

impl AttributeExtractor for RuleExtractor {
    fn extract(&self, description: &str, category_id: &str, template: &AttributeTemplate) -> ExtractedAttributes {
        extract_attributes(description, category_id, template, &self.lexicon)
    }
}

/// Model-backed extractor: sends the extraction prompt to `complete` and
/// reads its JSON answer. Any failure yields an empty result.
pub struct PromptExtractor<F> {
    complete: F,
}

impl<F> PromptExtractor<F>
where
    F: Fn(&str) -> Result<String, String> + Send + Sync,
{
    pub fn new(complete: F) -> Self {
        Self { complete }
    }
}

impl<F> AttributeExtractor for PromptExtractor<F>
where
    F: Fn(&str) -> Result<String, String> + Send + Sync,
{
    fn extract(&self, description: &str, category_id: &str, template: &AttributeTemplate) -> ExtractedAttributes {
        let Ok(prompt) = build_extraction_prompt(description, template) else {
            return ExtractedAttributes::empty(category_id);
        };
        match (self.complete)(&prompt) {
            Ok(text) => ExtractedAttributes::from_model_output(category_id, template, &text),
            Err(_) => ExtractedAttributes::empty(category_id),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn phone_template() -> AttributeTemplate {
        AttributeTemplate::new(["Brand", "Model", "Storage Capacity", "Color", "Version", "Screen Condition"]).unwrap()
    }

    pub(crate) fn phone_lexicon() -> ExtractionLexicon {
        ExtractionLexicon::from_json(include_str!("../../data/lexicon.json")).unwrap()
    }

    const TABLE3: &str = "Huawei mate10Pro 6+64G completely original unrefurbished smartphone Mainland China version light scratches";

    #[test]
    fn phone_listing_extraction() {
        let got = extract_attributes(TABLE3, "cellphone", &phone_template(), &phone_lexicon());
        let pairs: Vec<_> = got.iter().collect();
        assert_eq!(
            pairs,
            [
                ("Brand", "Huawei"),
                ("Model", "mate10Pro"),
                ("Storage Capacity", "6+64G"),
                ("Version", "Mainland China"),
            ]
        );
        assert!(got.get("Color").is_none());
        assert!(got.get("Screen Condition").is_none());
    }

    #[test]
    fn phone_listing_json() {
        let got = extract_attributes(TABLE3, "cellphone", &phone_template(), &phone_lexicon());
        assert_eq!(
            serialize_attributes(&got),
            "{\n  \"Brand\": \"Huawei\",\n  \"Model\": \"mate10Pro\",\n  \"Storage Capacity\": \"6+64G\",\n  \"Version\": \"Mainland China\"\n}"
        );
    }

    #[test]
    fn empty_description_and_empty_json() {
        let got = extract_attributes("", "cellphone", &phone_template(), &phone_lexicon());
        assert!(got.is_empty());
        assert_eq!(serialize_attributes(&got), "{}");
    }

    #[test]
    fn first_brand_mention_wins() {
        let got = extract_attributes(
            "Apple case fits Huawei too",
            "cellphone",
            &phone_template(),
            &phone_lexicon(),
        );
        assert_eq!(got.get("Brand"), Some("Apple"));
    }

    #[test]
    fn longest_match_at_same_position() {
        let doc = LexiconFile {
            categories: [(
                "c".to_string(),
                [(
                    "Version".to_string(),
                    AttributeRules {
                        values: vec!["China".into(), "China Mainland".into()],
                        patterns: vec![],
                    },
                )]
                .into(),
            )]
            .into(),
        };
        let lex = ExtractionLexicon::compile(doc).unwrap();
        let t = AttributeTemplate::new(["Version"]).unwrap();
        let got = extract_attributes("China Mainland edition", "c", &t, &lex);
        assert_eq!(got.get("Version"), Some("China Mainland"));
    }

    #[test]
    fn quoted_values_round_trip() {
        let t = AttributeTemplate::new(["Model"]).unwrap();
        let a = ExtractedAttributes::from_pairs("c", &t, [("Model", "the \"pro\" one")]).unwrap();
        let json = serialize_attributes(&a);
        assert!(json.contains(r#"\"pro\""#));
        assert_eq!(parse_attributes(&json, "c", &t).unwrap(), a);
    }

    #[test]
    fn from_pairs_orders_and_validates() {
        let t = phone_template();
        let a = ExtractedAttributes::from_pairs("c", &t, [("Version", "HK"), ("Brand", "Apple")]).unwrap();
        assert_eq!(a.names().collect::<Vec<_>>(), ["Brand", "Version"]);
        assert_eq!(
            ExtractedAttributes::from_pairs("c", &t, [("Weight", "1kg")]),
            Err(AttributeError::NotInTemplate("Weight".into()))
        );
        assert_eq!(
            ExtractedAttributes::from_pairs("c", &t, [("Brand", "")]),
            Err(AttributeError::EmptyValue("Brand".into()))
        );
    }

    #[test]
    fn extraction_prompt_contents() {
        let p = build_extraction_prompt_for(TABLE3, &phone_template(), Some("smartphone")).unwrap();
        assert_eq!(
            p,
            "Extract the Brand, Model, Storage Capacity, Color, Version, Screen Condition for the following smartphone product. Output the result in JSON format. Product description: Huawei mate10Pro 6+64G completely original unrefurbished smartphone Mainland China version light scratches"
        );
        let single = build_extraction_prompt("x", &AttributeTemplate::new(["Brand"]).unwrap()).unwrap();
        assert!(single.starts_with("Extract the Brand for"));
        let multi = build_extraction_prompt("line one\nline two", &phone_template()).unwrap();
        assert!(multi.ends_with("line one\nline two"));
        assert_eq!(
            build_extraction_prompt("x", &AttributeTemplate::default()),
            Err(AttributeError::EmptyTemplate)
        );
    }

    #[test]
    fn prompt_extractor_reads_model_json() {
        let ex = PromptExtractor::new(|prompt: &str| {
            assert!(prompt.contains("Output the result in JSON format"));
            Ok("Sure! {\"Brand\": \"Huawei\", \"Weight\": \"1kg\", \"Color\": \"\"}".to_string())
        });
        let got = ex.extract("whatever", "cellphone", &phone_template());
        assert_eq!(got.iter().collect::<Vec<_>>(), [("Brand", "Huawei")]);
        let failing = PromptExtractor::new(|_: &str| Err("down".to_string()));
        assert!(failing.extract("x", "cellphone", &phone_template()).is_empty());
    }
}
