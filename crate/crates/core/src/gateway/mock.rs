use std::time::Duration;

use futures::StreamExt;

use super::stream::{BackendError, ChunkStream, GenerationRequest, GeneratorBackend};
use crate::catalog::fnv1a;
use crate::prompt::{GenerationContext, InstructionVariant};

const GENERIC: [&str; 4] = [
    "Selling this item in good condition, as shown in the pictures, no longer needed, for those interested, please contact me privately.",
    "Personal item for sale, condition as shown in the pictures, works well, for those interested, please contact me privately.",
    "Used item in good condition as shown in the pictures, selling because I no longer use it, please contact me privately if interested.",
    "Well kept item for sale, see the pictures for condition, all functions normal, for those interested, please contact me privately.",
];

/// Deterministic stand-in for a fine-tuned generator.
///
/// Reference values are spliced in template order; contexts without
/// reference values get one of a few fixed sentences chosen by the image
/// reference hash.
pub fn mock_generate(ctx: &GenerationContext) -> String {
    let values: Vec<&str> = match (ctx.variant, &ctx.template, &ctx.reference_attrs) {
        (InstructionVariant::ImageTemplateReference, Some(template), Some(refs)) => {
            template.iter().filter_map(|name| refs.get(name)).collect()
        }
        _ => Vec::new(),
    };
    if values.is_empty() {
        return generic_sentence(&ctx.image_ref).to_string();
    }
    format!(
        "Personal used {}, condition as shown in the pictures, all original, for those interested, please contact me privately.",
        values.join(" ")
    )
}

fn generic_sentence(image_ref: &str) -> &'static str {
    GENERIC[(fnv1a(image_ref.as_bytes()) % GENERIC.len() as u64) as usize]
}

/// Splits text into word chunks, each keeping its trailing whitespace.
pub fn word_chunks(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if !c.is_whitespace() && current.ends_with(char::is_whitespace) {
            out.push(std::mem::take(&mut current));
        }
        current.push(c);
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Streams [`mock_generate`] output word by word.
#[derive(Debug, Clone, Default)]
pub struct TemplateFillBackend {
    pub chunk_delay: Duration,
}

impl GeneratorBackend for TemplateFillBackend {
    fn generate(&self, request: &GenerationRequest) -> ChunkStream {
        let text = match &request.context {
            Some(ctx) => mock_generate(ctx),
            None => generic_sentence(&request.image_ref).to_string(),
        };
        scripted(word_chunks(&text), self.chunk_delay, None)
    }
}

/// Emits a fixed chunk list, optionally failing after `fail_after` chunks.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    pub chunks: Vec<String>,
    pub chunk_delay: Duration,
    pub fail_after: Option<usize>,
    pub concurrency: Option<usize>,
}

impl ScriptedBackend {
    pub fn new<I, S>(chunks: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            chunks: chunks.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.chunk_delay = delay;
        self
    }

    pub fn failing_after(mut self, n: usize) -> Self {
        self.fail_after = Some(n);
        self
    }
}

impl GeneratorBackend for ScriptedBackend {
    fn generate(&self, _request: &GenerationRequest) -> ChunkStream {
        scripted(self.chunks.clone(), self.chunk_delay, self.fail_after)
    }

    fn max_concurrency(&self) -> Option<usize> {
        self.concurrency
    }
}

fn scripted(chunks: Vec<String>, delay: Duration, fail_after: Option<usize>) -> ChunkStream {
    let n = chunks.len();
    let items = chunks.into_iter().enumerate().map(move |(i, c)| {
        if fail_after == Some(i) {
            Err(BackendError("scripted failure".into()))
        } else {
            Ok(c)
        }
    });
    let tail = (fail_after == Some(n)).then(|| Err(BackendError("scripted failure".into())));
    let all: Vec<_> = items.chain(tail).collect();
    // Stop after the first error, like a real backend would.
    let cut = all.iter().position(Result::is_err).map_or(all.len(), |p| p + 1);
    let all: Vec<_> = all.into_iter().take(cut).collect();
    futures::stream::iter(all)
        .then(move |item| async move {
            if !delay.is_zero() {
                tokio::time::sleep(delay).await;
            }
            item
        })
        .boxed()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attributes::ExtractedAttributes;
    use crate::catalog::AttributeTemplate;

    fn ctx() -> GenerationContext {
        let t = AttributeTemplate::new(["Brand", "Model", "Storage Capacity", "Color"]).unwrap();
        let r = ExtractedAttributes::from_pairs(
            "cellphone",
            &t,
            [("Brand", "Huawei"), ("Model", "Mate10pro"), ("Storage Capacity", "6+64GB")],
        )
        .unwrap();
        GenerationContext::richest("img://7", None, Some(t), Some(r))
    }

    #[test]
    fn values_in_template_order() {
        let out = mock_generate(&ctx());
        let pos = |s: &str| out.find(s).unwrap();
        assert!(pos("Huawei") < pos("Mate10pro"));
        assert!(pos("Mate10pro") < pos("6+64GB"));
        assert_eq!(out, mock_generate(&ctx()));
    }

    #[test]
    fn image_only_has_no_values() {
        let mut c = ctx();
        c.variant = InstructionVariant::ImageOnly;
        let out = mock_generate(&c);
        for v in ["Huawei", "Mate10pro", "6+64GB"] {
            assert!(!out.contains(v));
        }
        assert!(GENERIC.contains(&out.as_str()));
    }

    #[test]
    fn word_chunks_concatenate_back() {
        let text = "Personal used  Huawei, ok.\nbye ";
        assert_eq!(word_chunks(text).concat(), text);
        assert_eq!(word_chunks("A B C"), ["A ", "B ", "C"]);
        assert!(word_chunks("").is_empty());
    }
}
