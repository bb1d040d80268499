//! Text/image to vector embedding interface and a deterministic
//! feature-hashing implementation used by tests and fixtures.

use super::record::normalize;

pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;

    /// Unit vector for `text`.
    fn embed_text(&self, text: &str) -> Vec<f32>;

    /// Unit vector for raw image bytes.
    fn embed_bytes(&self, bytes: &[u8]) -> Vec<f32>;
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

/// Signed feature hashing over lowercased words and their boundary-padded
/// character trigrams. Identical inputs map to identical unit vectors;
/// words sharing trigrams get positive similarity.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dimension: usize,
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self { dimension }
    }

    fn add_feature(&self, acc: &mut [f32], feature: &[u8], weight: f32) {
        let h = fnv1a(feature);
        let bucket = (h % self.dimension as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        acc[bucket] += sign * weight;
    }

    fn finish(&self, mut acc: Vec<f32>) -> Vec<f32> {
        if !normalize(&mut acc) {
            acc.iter_mut().for_each(|x| *x = 0.0);
            acc[0] = 1.0;
        }
        acc
    }
}

impl Embedder for HashingEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_text(&self, text: &str) -> Vec<f32> {
        let mut acc = vec![0.0f32; self.dimension];
        for word in text.split_whitespace() {
            let word = word.to_lowercase();
            let mut key = Vec::with_capacity(word.len() + 2);
            key.extend_from_slice(b"w:");
            key.extend_from_slice(word.as_bytes());
            self.add_feature(&mut acc, &key, 1.0);
            let padded: Vec<char> = std::iter::once('<')
                .chain(word.chars())
                .chain(std::iter::once('>'))
                .collect();
            for tri in padded.windows(3) {
                let s: String = tri.iter().collect();
                self.add_feature(&mut acc, s.as_bytes(), 0.5);
            }
        }
        self.finish(acc)
    }

    fn embed_bytes(&self, bytes: &[u8]) -> Vec<f32> {
        let mut acc = vec![0.0f32; self.dimension];
        for window in bytes.windows(4.min(bytes.len().max(1))) {
            self.add_feature(&mut acc, window, 1.0);
        }
        self.finish(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::record::l2_norm;

    #[test]
    fn deterministic_unit_vectors() {
        let e = HashingEmbedder::new(64);
        let a = e.embed_text("Huawei Mate10pro");
        assert_eq!(a, e.embed_text("Huawei Mate10pro"));
        assert!((l2_norm(&a) - 1.0).abs() < 1e-6);
        assert!((l2_norm(&e.embed_text("")) - 1.0).abs() < 1e-6);
        assert!((l2_norm(&e.embed_bytes(&[1, 2, 3, 4, 5])) - 1.0).abs() < 1e-6);
        assert!((l2_norm(&e.embed_bytes(&[])) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn case_is_folded() {
        let e = HashingEmbedder::new(32);
        assert_eq!(e.embed_text("Apple"), e.embed_text("apple"));
    }
}
