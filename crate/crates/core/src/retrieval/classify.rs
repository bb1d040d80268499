use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{RetrievalError, VectorIndex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryPrediction {
    pub category_id: String,
    pub confidence: f64,
}

/// Predicts a category from an image embedding.
pub trait CategoryClassifier: Send + Sync {
    fn predict(&self, query: &[f32]) -> Result<CategoryPrediction, RetrievalError>;
}

/// Majority vote over the `k` nearest labeled neighbors.
///
/// Confidence is the winner's vote share. Vote ties go to the larger summed
/// similarity, then to the lexicographically smaller category id.
#[derive(Debug, Clone)]
pub struct KnnClassifier {
    index: Arc<VectorIndex>,
    k: usize,
}

impl KnnClassifier {
    pub fn new(index: Arc<VectorIndex>, k: usize) -> Self {
        Self { index, k: k.max(1) }
    }
}

impl CategoryClassifier for KnnClassifier {
    fn predict(&self, query: &[f32]) -> Result<CategoryPrediction, RetrievalError> {
        predict_category(&self.index, query, self.k)
    }
}

pub fn predict_category(index: &VectorIndex, query: &[f32], k: usize) -> Result<CategoryPrediction, RetrievalError> {
    if index.is_empty() {
        return Err(RetrievalError::EmptyIndex);
    }
    let neighbors = index.top_k(query, k, None)?;
    let mut tally: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for &(row, score) in &neighbors {
        let entry = tally.entry(index.category(row)).or_default();
        entry.0 += 1;
        entry.1 += score;
    }
    // BTreeMap iterates ids ascending, so a strict comparison keeps the
    // smaller id on a full tie.
    let mut best: Option<(&str, usize, f64)> = None;
    for (&cat, &(votes, sum)) in &tally {
        let better = match best {
            None => true,
            Some((_, bv, bs)) => votes > bv || (votes == bv && sum > bs),
        };
        if better {
            best = Some((cat, votes, sum));
        }
    }
    let (category, votes, _) = best.expect("nonempty index yields neighbors");
    Ok(CategoryPrediction {
        category_id: category.to_string(),
        confidence: votes as f64 / neighbors.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_label_with_k1() {
        let mut idx = VectorIndex::empty(2);
        idx.push("a", "phone", &[1.0, 0.0]).unwrap();
        idx.push("b", "shoe", &[0.0, 1.0]).unwrap();
        let p = predict_category(&idx, &[0.0, 1.0], 1).unwrap();
        assert_eq!(p.category_id, "shoe");
        assert_eq!(p.confidence, 1.0);
    }

    #[test]
    fn empty_index_errors() {
        let idx = VectorIndex::empty(2);
        assert!(matches!(predict_category(&idx, &[1.0, 0.0], 3), Err(RetrievalError::EmptyIndex)));
    }

    #[test]
    fn vote_tie_uses_similarity_then_id() {
        let mut idx = VectorIndex::empty(2);
        idx.push("a", "x", &[1.0, 0.0]).unwrap();
        idx.push("b", "y", &[0.9, 0.1]).unwrap();
        // One vote each; "x" is closer.
        let p = predict_category(&idx, &[1.0, 0.0], 2).unwrap();
        assert_eq!(p.category_id, "x");
        assert_eq!(p.confidence, 0.5);

        let mut idx = VectorIndex::empty(2);
        idx.push("a", "y", &[1.0, 0.0]).unwrap();
        idx.push("b", "x", &[1.0, 0.0]).unwrap();
        let p = predict_category(&idx, &[1.0, 0.0], 2).unwrap();
        assert_eq!(p.category_id, "x");
    }
}
