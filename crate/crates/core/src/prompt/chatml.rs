//! ChatML serialization of instruction records with loss-mask byte spans.
//!
//! Each turn is `<im_start>{role}\n{content}<im_end>\n`. Image segments
//! render as `Picture N: <img>{ref}</img>`, N counting images within the
//! record from 1. Consecutive records are separated by one blank line.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::PromptError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    Text(String),
    Image(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub segments: Vec<Segment>,
    /// True when the turn is excluded from the training loss.
    pub loss_masked: bool,
}

impl Turn {
    pub fn user(segments: Vec<Segment>) -> Self {
        Self {
            role: Role::User,
            segments,
            loss_masked: true,
        }
    }

    pub fn user_text(text: impl Into<String>) -> Self {
        Self::user(vec![Segment::Text(text.into())])
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        let text = text.into();
        Self {
            role: Role::Assistant,
            segments: if text.is_empty() {
                Vec::new()
            } else {
                vec![Segment::Text(text)]
            },
            loss_masked: false,
        }
    }

    pub fn text(&self) -> String {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Text(t) => Some(t.as_str()),
                Segment::Image(_) => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordMetadata {
    pub task_tag: String,
    pub source_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub turns: Vec<Turn>,
    pub metadata: RecordMetadata,
}

impl InstructionRecord {
    pub fn new(turns: Vec<Turn>, task_tag: impl Into<String>, source_id: impl Into<String>) -> Self {
        Self {
            turns,
            metadata: RecordMetadata {
                task_tag: task_tag.into(),
                source_id: source_id.into(),
            },
        }
    }

    /// Single exchange: image + instruction from the user, `answer` back.
    pub fn single_turn(
        image_ref: Option<&str>,
        instruction: &str,
        answer: &str,
        task_tag: impl Into<String>,
        source_id: impl Into<String>,
    ) -> Self {
        let mut segments = Vec::new();
        if let Some(img) = image_ref {
            segments.push(Segment::Image(img.to_string()));
        }
        if !instruction.is_empty() {
            segments.push(Segment::Text(instruction.to_string()));
        }
        Self::new(
            vec![Turn::user(segments), Turn::assistant(answer)],
            task_tag,
            source_id,
        )
    }
}

/// Turn markers. Defaults are `<im_start>` / `<im_end>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatmlFormat {
    pub start: String,
    pub end: String,
}

impl Default for ChatmlFormat {
    fn default() -> Self {
        Self {
            start: "<im_start>".into(),
            end: "<im_end>".into(),
        }
    }
}

const IMG_OPEN: &str = "<img>";
const IMG_CLOSE: &str = "</img>";

impl ChatmlFormat {
    /// Checks alternation, loss masks and that no segment contains framing
    /// tokens or is in a non-canonical shape that would not parse back.
    pub fn validate(&self, record: &InstructionRecord) -> Result<(), PromptError> {
        let invalid = |msg: String| Err(PromptError::InvalidRecord(msg));
        if record.turns.is_empty() {
            return invalid("record has no turns".into());
        }
        for (i, turn) in record.turns.iter().enumerate() {
            let expected = if i % 2 == 0 { Role::User } else { Role::Assistant };
            if turn.role != expected {
                return invalid(format!("turn {i} should be {}", expected.as_str()));
            }
            if turn.loss_masked != (turn.role == Role::User) {
                return invalid(format!("turn {i} has the wrong loss mask"));
            }
            let mut prev_text = false;
            for seg in &turn.segments {
                let (body, is_text) = match seg {
                    Segment::Text(t) => (t, true),
                    Segment::Image(r) => (r, false),
                };
                if is_text && body.is_empty() {
                    return invalid(format!("turn {i} has an empty text segment"));
                }
                if is_text && prev_text {
                    return invalid(format!("turn {i} has adjacent text segments"));
                }
                for token in [self.start.as_str(), self.end.as_str(), IMG_OPEN, IMG_CLOSE] {
                    if body.contains(token) {
                        return invalid(format!("turn {i} contains reserved token {token}"));
                    }
                }
                prev_text = is_text;
            }
        }
        Ok(())
    }

    /// Serializes one record, returning the loss spans alongside.
    pub fn render_record(&self, record: &InstructionRecord) -> Result<(String, Vec<Range<usize>>), PromptError> {
        self.validate(record)?;
        let mut out = String::new();
        let mut spans = Vec::new();
        let mut picture = 0usize;
        for turn in &record.turns {
            out.push_str(&self.start);
            out.push_str(turn.role.as_str());
            out.push('\n');
            let content_start = out.len();
            for seg in &turn.segments {
                match seg {
                    Segment::Text(t) => out.push_str(t),
                    Segment::Image(r) => {
                        picture += 1;
                        out.push_str(&format!("Picture {picture}: {IMG_OPEN}{r}{IMG_CLOSE}"));
                    }
                }
            }
            out.push_str(&self.end);
            if !turn.loss_masked {
                spans.push(content_start..out.len());
            }
            out.push('\n');
        }
        Ok((out, spans))
    }

    pub fn to_chatml(&self, records: &[InstructionRecord]) -> Result<String, PromptError> {
        let mut parts = Vec::with_capacity(records.len());
        for r in records {
            parts.push(self.render_record(r)?.0);
        }
        Ok(parts.join("\n"))
    }

    pub fn from_chatml(&self, text: &str) -> Result<Vec<InstructionRecord>, PromptError> {
        let err = |at: usize, msg: &str| PromptError::Parse(format!("byte {at}: {msg}"));
        let mut records = Vec::new();
        let mut turns = Vec::new();
        let mut picture = 0usize;
        let mut pos = 0usize;
        while pos < text.len() {
            if !text[pos..].starts_with(&self.start) {
                return Err(err(pos, "expected turn start marker"));
            }
            pos += self.start.len();
            let nl = text[pos..].find('\n').ok_or_else(|| err(pos, "missing role line"))?;
            let role = match &text[pos..pos + nl] {
                "user" => Role::User,
                "assistant" => Role::Assistant,
                other => return Err(err(pos, &format!("unknown role {other:?}"))),
            };
            pos += nl + 1;
            let end = text[pos..].find(&self.end).ok_or_else(|| err(pos, "missing end marker"))?;
            let segments = parse_content(&text[pos..pos + end], &mut picture).map_err(|m| err(pos, &m))?;
            pos += end + self.end.len();
            if !text[pos..].starts_with('\n') {
                return Err(err(pos, "expected newline after end marker"));
            }
            pos += 1;
            turns.push(Turn {
                role,
                segments,
                loss_masked: role == Role::User,
            });
            if text[pos..].starts_with('\n') {
                pos += 1;
                records.push(InstructionRecord::new(std::mem::take(&mut turns), "", ""));
                picture = 0;
            }
        }
        if !turns.is_empty() {
            records.push(InstructionRecord::new(turns, "", ""));
        }
        for r in &records {
            self.validate(r)?;
        }
        Ok(records)
    }

    pub fn loss_mask_spans(&self, record: &InstructionRecord, serialized: &str) -> Result<Vec<Range<usize>>, PromptError> {
        let (expected, spans) = self.render_record(record)?;
        if expected != serialized {
            return Err(PromptError::Mismatch);
        }
        Ok(spans)
    }
}

fn parse_content(content: &str, picture: &mut usize) -> Result<Vec<Segment>, String> {
    let mut segments = Vec::new();
    let mut rest = content;
    while let Some(open) = rest.find(IMG_OPEN) {
        let prefix = format!("Picture {}: ", *picture + 1);
        let before = rest[..open]
            .strip_suffix(&prefix)
            .ok_or_else(|| format!("image tag without {prefix:?} label"))?;
        if !before.is_empty() {
            segments.push(Segment::Text(before.to_string()));
        }
        let after_open = &rest[open + IMG_OPEN.len()..];
        let close = after_open.find(IMG_CLOSE).ok_or("unterminated image tag")?;
        segments.push(Segment::Image(after_open[..close].to_string()));
        *picture += 1;
        rest = &after_open[close + IMG_CLOSE.len()..];
    }
    if rest.contains(IMG_CLOSE) {
        return Err("stray image close tag".into());
    }
    if !rest.is_empty() {
        segments.push(Segment::Text(rest.to_string()));
    }
    Ok(segments)
}

pub fn to_chatml(records: &[InstructionRecord]) -> Result<String, PromptError> {
    ChatmlFormat::default().to_chatml(records)
}

pub fn from_chatml(text: &str) -> Result<Vec<InstructionRecord>, PromptError> {
    ChatmlFormat::default().from_chatml(text)
}

pub fn loss_mask_spans(record: &InstructionRecord, serialized: &str) -> Result<Vec<Range<usize>>, PromptError> {
    ChatmlFormat::default().loss_mask_spans(record, serialized)
}

/// One line of a `.chatml.jsonl` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatmlLine {
    pub text: String,
    /// Half-open `[start, end)` byte ranges that carry training loss.
    pub loss_spans: Vec<[usize; 2]>,
    pub task_tag: String,
    pub source_id: String,
}

impl ChatmlLine {
    pub fn from_record(record: &InstructionRecord) -> Result<Self, PromptError> {
        let (text, spans) = ChatmlFormat::default().render_record(record)?;
        Ok(Self {
            text,
            loss_spans: spans.into_iter().map(|r| [r.start, r.end]).collect(),
            task_tag: record.metadata.task_tag.clone(),
            source_id: record.metadata.source_id.clone(),
        })
    }

    /// Parses the line's text back into a record, restoring metadata.
    pub fn to_record(&self) -> Result<InstructionRecord, PromptError> {
        let mut records = from_chatml(&self.text)?;
        if records.len() != 1 {
            return Err(PromptError::Parse(format!("expected one record, found {}", records.len())));
        }
        let mut record = records.remove(0);
        record.metadata = RecordMetadata {
            task_tag: self.task_tag.clone(),
            source_id: self.source_id.clone(),
        };
        Ok(record)
    }
}

/// Renders records as `.chatml.jsonl` content, one line per record.
pub fn to_chatml_jsonl(records: &[InstructionRecord]) -> Result<String, PromptError> {
    let mut out = String::new();
    for r in records {
        let line = ChatmlLine::from_record(r)?;
        out.push_str(&serde_json::to_string(&line).expect("chatml line serializes"));
        out.push('\n');
    }
    Ok(out)
}
