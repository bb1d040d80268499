use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerMode {
    /// Unicode whitespace split.
    #[default]
    Whitespace,
    /// As `Whitespace`, but every CJK character is its own token.
    Cjk,
}

/// Tokenizer for BLEU/ROUGE/SIM. Punctuation at word edges is split off
/// into separate tokens when `detach_punctuation` is set; inner punctuation
/// (as in `6+64GB`) stays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tokenizer {
    pub mode: TokenizerMode,
    pub lowercase: bool,
    pub detach_punctuation: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self {
            mode: TokenizerMode::Whitespace,
            lowercase: false,
            detach_punctuation: true,
        }
    }
}

pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF | 0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xF900..=0xFAFF | 0xAC00..=0xD7AF)
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || matches!(c, '，' | '。' | '！' | '？' | '；' | '：' | '、' | '“' | '”' | '‘' | '’' | '（' | '）' | '《' | '》')
}

impl Tokenizer {
    pub fn cjk() -> Self {
        Self {
            mode: TokenizerMode::Cjk,
            ..Self::default()
        }
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let text = if self.lowercase {
            text.to_lowercase()
        } else {
            text.to_string()
        };
        let mut out = Vec::new();
        for word in text.split_whitespace() {
            let pieces: Vec<String> = match self.mode {
                TokenizerMode::Whitespace => vec![word.to_string()],
                TokenizerMode::Cjk => split_cjk(word),
            };
            for piece in pieces {
                if self.detach_punctuation {
                    detach(&piece, &mut out);
                } else {
                    out.push(piece);
                }
            }
        }
        out
    }
}

fn split_cjk(word: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut run = String::new();
    for c in word.chars() {
        if is_cjk(c) {
            if !run.is_empty() {
                out.push(std::mem::take(&mut run));
            }
            out.push(c.to_string());
        } else {
            run.push(c);
        }
    }
    if !run.is_empty() {
        out.push(run);
    }
    out
}

fn detach(word: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = word.chars().collect();
    let start = chars.iter().position(|&c| !is_punct(c));
    let Some(start) = start else {
        out.extend(chars.iter().map(|c| c.to_string()));
        return;
    };
    let end = chars.iter().rposition(|&c| !is_punct(c)).expect("has a non-punct char") + 1;
    out.extend(chars[..start].iter().map(|c| c.to_string()));
    out.push(chars[start..end].iter().collect());
    out.extend(chars[end..].iter().map(|c| c.to_string()));
}
