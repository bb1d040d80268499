//! Description-generation instructions and ChatML training records.

mod chatml;
mod instruction;

pub use chatml::{
    from_chatml, loss_mask_spans, to_chatml, to_chatml_jsonl, ChatmlFormat, ChatmlLine, InstructionRecord,
    RecordMetadata, Role, Segment, Turn,
};
pub use instruction::{build_generation_instruction, GenerationContext, InstructionVariant, PromptTemplate};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PromptError {
    #[error("inconsistent generation context: {0}")]
    InconsistentContext(String),
    #[error("invalid prompt template: {0}")]
    Template(String),
    #[error("invalid instruction record: {0}")]
    InvalidRecord(String),
    #[error("malformed ChatML: {0}")]
    Parse(String),
    #[error("serialized text is not this record's serialization")]
    Mismatch,
}
