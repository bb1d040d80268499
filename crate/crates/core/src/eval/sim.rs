use super::tokenize::Tokenizer;
use super::MetricScore;
use crate::catalog::Embedder;

/// Greedy token-matching similarity. Each token is embedded on its own
/// and matched to its most similar counterpart on the other side.
pub struct SimScorer<'a> {
    embedder: &'a dyn Embedder,
    tokenizer: Tokenizer,
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum()
}

impl<'a> SimScorer<'a> {
    pub fn new(embedder: &'a dyn Embedder) -> Self {
        Self {
            embedder,
            tokenizer: Tokenizer {
                lowercase: true,
                ..Tokenizer::default()
            },
        }
    }

    pub fn with_tokenizer(mut self, tokenizer: Tokenizer) -> Self {
        self.tokenizer = tokenizer;
        self
    }

    pub fn score_value(&self, candidate: &str, reference: &str) -> f64 {
        let cand = self.tokenizer.tokenize(candidate);
        let refs = self.tokenizer.tokenize(reference);
        match (cand.is_empty(), refs.is_empty()) {
            (true, true) => return 1.0,
            (true, false) | (false, true) => return 0.0,
            _ => {}
        }
        let ce: Vec<Vec<f32>> = cand.iter().map(|t| self.embedder.embed_text(t)).collect();
        let re: Vec<Vec<f32>> = refs.iter().map(|t| self.embedder.embed_text(t)).collect();
        let best = |from: &[Vec<f32>], to: &[Vec<f32>]| -> f64 {
            from.iter()
                .map(|a| {
                    to.iter()
                        .map(|b| dot(a, b))
                        .fold(f64::NEG_INFINITY, f64::max)
                        .clamp(0.0, 1.0)
                })
                .sum::<f64>()
                / from.len() as f64
        };
        let p = best(&ce, &re);
        let r = best(&re, &ce);
        if p + r == 0.0 {
            0.0
        } else {
            (2.0 * p * r / (p + r)).clamp(0.0, 1.0)
        }
    }

    pub fn score(&self, candidate: &str, reference: &str) -> MetricScore {
        MetricScore::new("SIM", self.score_value(candidate, reference), 1)
    }
}

pub fn sim(candidate: &str, reference: &str, embedder: &dyn Embedder) -> MetricScore {
    SimScorer::new(embedder).score(candidate, reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::HashingEmbedder;

    #[test]
    fn identical_and_shuffled() {
        let e = HashingEmbedder::new(64);
        let s = SimScorer::new(&e);
        let a = "huawei mate10pro blue 6+64GB";
        assert!((s.score_value(a, a) - 1.0).abs() < 1e-6);
        assert!((s.score_value(a, "blue 6+64GB mate10pro huawei") - 1.0).abs() < 1e-6);
    }

    #[test]
    fn empty_sides() {
        let e = HashingEmbedder::new(64);
        let s = SimScorer::new(&e);
        assert_eq!(s.score_value("", ""), 1.0);
        assert_eq!(s.score_value("a", ""), 0.0);
        let v = s.score_value("apple phone", "huawei phone");
        assert!(v > 0.0 && v < 1.0, "{v}");
    }
}
