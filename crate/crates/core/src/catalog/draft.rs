use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::kv::{KvLog, StoreError};
use crate::gateway::StreamStatus;
use crate::prompt::GenerationContext;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DraftState {
    Generating,
    Draft,
    Published,
    Abandoned,
}

impl DraftState {
    pub const ALL: [DraftState; 4] = [
        DraftState::Generating,
        DraftState::Draft,
        DraftState::Published,
        DraftState::Abandoned,
    ];

    /// The forward-only transition relation.
    pub fn can_become(self, next: DraftState) -> bool {
        use DraftState::*;
        matches!(
            (self, next),
            (Generating, Draft) | (Draft, Published) | (Draft, Abandoned)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListingDraft {
    pub draft_id: String,
    pub user_id: String,
    pub context: GenerationContext,
    #[serde(default)]
    pub instruction: String,
    pub generated_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_text: Option<String>,
    pub state: DraftState,
    /// How generation ended; degraded statuses keep the draft editable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation_status: Option<StreamStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retained_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_score: Option<f64>,
    pub created_at_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_at_ms: Option<u64>,
}

impl ListingDraft {
    pub fn new(user_id: impl Into<String>, context: GenerationContext) -> Self {
        Self {
            draft_id: String::new(),
            user_id: user_id.into(),
            context,
            instruction: String::new(),
            generated_text: String::new(),
            final_text: None,
            state: DraftState::Generating,
            generation_status: None,
            retained_ratio: None,
            quality_score: None,
            created_at_ms: now_ms(),
            published_at_ms: None,
        }
    }
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[derive(Debug, thiserror::Error)]
pub enum DraftError {
    #[error("illegal draft transition {from:?} -> {to:?}")]
    IllegalTransition {
        from: Option<DraftState>,
        to: DraftState,
    },
    #[error("draft invariant violated: {0}")]
    InvariantViolation(&'static str),
    #[error("draft {0} not found")]
    NotFound(String),
    #[error("storage failure: {0}")]
    StorageFailure(#[from] StoreError),
}

pub struct DraftStore {
    drafts: KvLog<ListingDraft>,
}

impl DraftStore {
    pub fn in_memory() -> Self {
        Self {
            drafts: KvLog::in_memory(),
        }
    }

    pub fn open(dir: impl AsRef<Path>) -> Result<Self, DraftError> {
        Ok(Self {
            drafts: KvLog::open(dir.as_ref().join("drafts.kv.jsonl"))?,
        })
    }

    pub fn get(&self, draft_id: &str) -> Option<ListingDraft> {
        self.drafts.get(draft_id)
    }

    pub fn len(&self) -> usize {
        self.drafts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drafts.is_empty()
    }

    /// Persists `draft`. A draft without an id is new: it must be in
    /// `Generating` and gets a fresh id. An existing draft may only move
    /// along the forward transition relation.
    pub fn save_draft(&self, mut draft: ListingDraft) -> Result<String, DraftError> {
        let published = draft.state == DraftState::Published;
        if draft.final_text.is_some() != published {
            return Err(DraftError::InvariantViolation(
                "final_text must be present exactly when published",
            ));
        }
        if draft.draft_id.is_empty() {
            draft.draft_id = uuid::Uuid::new_v4().to_string();
        }
        let id = draft.draft_id.clone();
        self.drafts
            .update(&id, |current| match current {
                None if draft.state == DraftState::Generating => Ok(draft),
                None => Err(DraftError::IllegalTransition {
                    from: None,
                    to: draft.state,
                }),
                Some(prev) if prev.state.can_become(draft.state) => Ok(draft),
                Some(prev) => Err(DraftError::IllegalTransition {
                    from: Some(prev.state),
                    to: draft.state,
                }),
            })??;
        Ok(id)
    }
}
