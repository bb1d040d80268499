use std::collections::BTreeMap;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::AttributeError;

/// Category key whose rules apply to every category.
pub const ANY_CATEGORY: &str = "*";

/// Surface values and regex patterns for one attribute. A pattern with a
/// `value` capture group yields that group instead of the whole match.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttributeRules {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub patterns: Vec<String>,
}

/// Lexicon config document: category id -> attribute name -> rules.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LexiconFile {
    pub categories: BTreeMap<String, BTreeMap<String, AttributeRules>>,
}

#[derive(Debug, Clone)]
pub(crate) struct Matcher {
    pub(crate) regex: Regex,
    pub(crate) has_value_group: bool,
}

impl Matcher {
    /// Leftmost span of this matcher in `text`.
    pub(crate) fn find(&self, text: &str) -> Option<(usize, usize)> {
        if self.has_value_group {
            self.regex
                .captures_iter(text)
                .filter_map(|c| c.name("value"))
                .find(|m| !m.as_str().trim().is_empty())
                .map(|m| (m.start(), m.end()))
        } else {
            self.regex
                .find_iter(text)
                .find(|m| !m.as_str().trim().is_empty())
                .map(|m| (m.start(), m.end()))
        }
    }
}

/// Compiled per-(category, attribute) matchers.
#[derive(Debug, Clone, Default)]
pub struct ExtractionLexicon {
    rules: BTreeMap<String, BTreeMap<String, Vec<Matcher>>>,
    source: LexiconFile,
}

impl ExtractionLexicon {
    pub fn compile(source: LexiconFile) -> Result<Self, AttributeError> {
        let mut rules = BTreeMap::new();
        for (category, attrs) in &source.categories {
            let mut compiled = BTreeMap::new();
            for (attr, attr_rules) in attrs {
                compiled.insert(attr.clone(), compile_rules(category, attr, attr_rules)?);
            }
            rules.insert(category.clone(), compiled);
        }
        Ok(Self { rules, source })
    }

    pub fn from_json(text: &str) -> Result<Self, AttributeError> {
        let doc: LexiconFile =
            serde_json::from_str(text).map_err(|e| AttributeError::Lexicon(e.to_string()))?;
        Self::compile(doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AttributeError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| AttributeError::Lexicon(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn source(&self) -> &LexiconFile {
        &self.source
    }

    /// Category-specific matchers first, then the wildcard ones.
    pub(crate) fn matchers<'a>(&'a self, category: &str, attribute: &str) -> impl Iterator<Item = &'a Matcher> + 'a {
        let specific = self.rules.get(category).and_then(|m| m.get(attribute));
        let wildcard = if category == ANY_CATEGORY {
            None
        } else {
            self.rules.get(ANY_CATEGORY).and_then(|m| m.get(attribute))
        };
        specific.into_iter().chain(wildcard).flatten()
    }
}

fn compile_rules(category: &str, attr: &str, rules: &AttributeRules) -> Result<Vec<Matcher>, AttributeError> {
    let mut out = Vec::new();
    if !rules.values.is_empty() {
        if rules.values.iter().any(|v| v.trim().is_empty()) {
            return Err(AttributeError::Lexicon(format!(
                "empty gazetteer entry for {category}/{attr}"
            )));
        }
        let mut values: Vec<&String> = rules.values.iter().collect();
        // Longest first so alternation prefers the longest value at a position.
        values.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        let alternation = values
            .iter()
            .map(|v| bounded(v))
            .collect::<Vec<_>>()
            .join("|");
        let regex = Regex::new(&format!("(?i)(?:{alternation})"))
            .map_err(|e| AttributeError::Lexicon(e.to_string()))?;
        out.push(Matcher {
            regex,
            has_value_group: false,
        });
    }
    for pattern in &rules.patterns {
        let regex = Regex::new(pattern).map_err(|e| {
            AttributeError::Lexicon(format!("pattern for {category}/{attr} does not compile: {e}"))
        })?;
        let has_value_group = regex.capture_names().any(|n| n == Some("value"));
        out.push(Matcher {
            regex,
            has_value_group,
        });
    }
    Ok(out)
}

/// Escaped literal with word boundaries on ASCII-alphanumeric edges.
fn bounded(value: &str) -> String {
    let escaped = regex::escape(value);
    let first = value.chars().next().is_some_and(|c| c.is_ascii_alphanumeric());
    let last = value.chars().last().is_some_and(|c| c.is_ascii_alphanumeric());
    format!(
        "{}{}{}",
        if first { r"\b" } else { "" },
        escaped,
        if last { r"\b" } else { "" }
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_pattern_and_empty_value_rejected() {
        let mut doc = LexiconFile::default();
        doc.categories.entry("c".into()).or_default().insert(
            "Brand".into(),
            AttributeRules {
                values: vec![],
                patterns: vec!["(unclosed".into()],
            },
        );
        assert!(ExtractionLexicon::compile(doc.clone()).is_err());
        doc.categories.get_mut("c").unwrap().insert(
            "Brand".into(),
            AttributeRules {
                values: vec!["  ".into()],
                patterns: vec![],
            },
        );
        assert!(ExtractionLexicon::compile(doc).is_err());
    }

    #[test]
    fn gazetteer_respects_word_boundaries() {
        let m = &compile_rules("c", "Brand", &AttributeRules {
            values: vec!["LG".into()],
            patterns: vec![],
        })
        .unwrap()[0];
        assert_eq!(m.find("BULGE lg phone"), Some((6, 8)));
    }
}
