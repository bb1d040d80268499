use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SafetyVerdict {
    pub allowed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl SafetyVerdict {
    pub fn allow() -> Self {
        Self {
            allowed: true,
            reason: None,
        }
    }

    pub fn deny(reason: impl Into<String>) -> Self {
        Self {
            allowed: false,
            reason: Some(reason.into()),
        }
    }
}

/// Content check on generated text.
pub trait SafetyPredicate: Send + Sync {
    fn check(&self, text: &str) -> SafetyVerdict;
}

/// Pre-generation check on the uploaded image.
pub trait ImageSafety: Send + Sync {
    fn check_image(&self, image_ref: &str, embedding: Option<&[f32]>) -> SafetyVerdict;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AllowAll;

impl SafetyPredicate for AllowAll {
    fn check(&self, _text: &str) -> SafetyVerdict {
        SafetyVerdict::allow()
    }
}

impl ImageSafety for AllowAll {
    fn check_image(&self, _image_ref: &str, _embedding: Option<&[f32]>) -> SafetyVerdict {
        SafetyVerdict::allow()
    }
}

/// Denies text matching any of a list of regex patterns.
#[derive(Debug, Clone, Default)]
pub struct BlocklistSafety {
    patterns: Vec<Regex>,
}

impl BlocklistSafety {
    pub fn new<I, S>(patterns: I) -> Result<Self, regex::Error>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Ok(Self {
            patterns: patterns
                .into_iter()
                .map(|p| Regex::new(p.as_ref()))
                .collect::<Result<_, _>>()?,
        })
    }

    pub fn patterns(&self) -> impl Iterator<Item = &str> {
        self.patterns.iter().map(Regex::as_str)
    }

    /// Superset blocklist with `extra` appended.
    pub fn extended(&self, extra: &BlocklistSafety) -> Self {
        Self {
            patterns: self.patterns.iter().chain(&extra.patterns).cloned().collect(),
        }
    }
}

impl SafetyPredicate for BlocklistSafety {
    fn check(&self, text: &str) -> SafetyVerdict {
        default_safety(text, self)
    }
}

/// Blocklist applied to the image reference; stands in for image risk models.
impl ImageSafety for BlocklistSafety {
    fn check_image(&self, image_ref: &str, _embedding: Option<&[f32]>) -> SafetyVerdict {
        default_safety(image_ref, self)
    }
}

/// First matching pattern denies, with the pattern as the reason.
pub fn default_safety(text: &str, blocklist: &BlocklistSafety) -> SafetyVerdict {
    match blocklist.patterns.iter().find(|p| p.is_match(text)) {
        Some(p) => SafetyVerdict::deny(format!("matched blocklist pattern {}", p.as_str())),
        None => SafetyVerdict::allow(),
    }
}
