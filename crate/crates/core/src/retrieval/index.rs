use std::sync::Arc;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::catalog::ProductRecord;

use super::RetrievalError;

/// Similarity cutoffs for identical (same SKU) and similar (same SPU) matches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawThresholds")]
pub struct MatchThresholds {
    tau_identical: f64,
    tau_similar: f64,
}

#[derive(Deserialize)]
struct RawThresholds {
    tau_identical: f64,
    tau_similar: f64,
}

impl TryFrom<RawThresholds> for MatchThresholds {
    type Error = RetrievalError;

    fn try_from(raw: RawThresholds) -> Result<Self, Self::Error> {
        MatchThresholds::new(raw.tau_identical, raw.tau_similar)
    }
}

impl Default for MatchThresholds {
    fn default() -> Self {
        Self {
            tau_identical: 0.85,
            tau_similar: 0.70,
        }
    }
}

impl MatchThresholds {
    pub fn new(tau_identical: f64, tau_similar: f64) -> Result<Self, RetrievalError> {
        let in_range = |t: f64| t > 0.0 && t <= 1.0;
        if !in_range(tau_identical) || !in_range(tau_similar) || tau_identical < tau_similar {
            return Err(RetrievalError::InvalidThresholds {
                tau_identical,
                tau_similar,
            });
        }
        Ok(Self {
            tau_identical,
            tau_similar,
        })
    }

    pub fn tau_identical(&self) -> f64 {
        self.tau_identical
    }

    pub fn tau_similar(&self) -> f64 {
        self.tau_similar
    }

    pub fn classify(&self, score: f64) -> MatchLevel {
        if score >= self.tau_identical {
            MatchLevel::Identical
        } else if score >= self.tau_similar {
            MatchLevel::Similar
        } else {
            MatchLevel::None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchLevel {
    None,
    Similar,
    Identical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub product_id: String,
    pub score: f64,
    pub match_level: MatchLevel,
}

/// Exact cosine index. Vectors live in one contiguous row-major buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dimension: usize,
    ids: Vec<String>,
    categories: Vec<String>,
    data: Vec<f32>,
    /// Reciprocal norm of each stored row, which is 1 only up to f32 rounding.
    inv_norms: Vec<f64>,
}

impl VectorIndex {
    pub fn empty(dimension: usize) -> Self {
        Self {
            dimension,
            ids: Vec::new(),
            categories: Vec::new(),
            data: Vec::new(),
            inv_norms: Vec::new(),
        }
    }

    /// Indexes the first embedding of each product, in input order.
    pub fn build<'a, I>(dimension: usize, products: I) -> Result<Self, RetrievalError>
    where
        I: IntoIterator<Item = &'a ProductRecord>,
    {
        let mut index = Self::empty(dimension);
        for product in products {
            let embedding = product
                .primary_embedding()
                .ok_or_else(|| RetrievalError::MissingEmbedding(product.id.clone()))?;
            index.push(&product.id, &product.category_id, embedding)?;
        }
        Ok(index)
    }

    pub fn push(&mut self, id: &str, category: &str, vector: &[f32]) -> Result<(), RetrievalError> {
        if vector.len() != self.dimension {
            return Err(RetrievalError::DimensionMismatch {
                id: id.to_string(),
                expected: self.dimension,
                actual: vector.len(),
            });
        }
        let norm = crate::catalog::l2_norm(vector);
        if norm == 0.0 || !norm.is_finite() {
            return Err(RetrievalError::MissingEmbedding(id.to_string()));
        }
        self.ids.push(id.to_string());
        self.categories.push(category.to_string());
        let start = self.data.len();
        self.data
            .extend(vector.iter().map(|&x| (x as f64 / norm) as f32));
        self.inv_norms.push(1.0 / crate::catalog::l2_norm(&self.data[start..]));
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, row: usize) -> &str {
        &self.ids[row]
    }

    pub fn category(&self, row: usize) -> &str {
        &self.categories[row]
    }

    pub fn vector(&self, row: usize) -> &[f32] {
        &self.data[row * self.dimension..(row + 1) * self.dimension]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &str, &[f32])> {
        self.ids
            .iter()
            .zip(&self.categories)
            .zip(self.data.chunks_exact(self.dimension.max(1)))
            .map(|((id, cat), v)| (id.as_str(), cat.as_str(), v))
    }

    fn normalized_query(&self, query: &[f32]) -> Result<Vec<f64>, RetrievalError> {
        if query.len() != self.dimension {
            return Err(RetrievalError::DimensionMismatch {
                id: "<query>".into(),
                expected: self.dimension,
                actual: query.len(),
            });
        }
        let norm = crate::catalog::l2_norm(query);
        if norm == 0.0 || !norm.is_finite() {
            return Err(RetrievalError::DegenerateQuery);
        }
        Ok(query.iter().map(|&x| x as f64 / norm).collect())
    }

    /// Row indices and cosine scores of the `k` best rows, optionally
    /// restricted to one category. Sorted by score descending, then id.
    pub fn top_k(&self, query: &[f32], k: usize, category: Option<&str>) -> Result<Vec<(usize, f64)>, RetrievalError> {
        if k == 0 {
            return Err(RetrievalError::InvalidK);
        }
        if self.is_empty() {
            return Ok(Vec::new());
        }
        let q = self.normalized_query(query)?;
        let mut best: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
        for (row, v) in self.data.chunks_exact(self.dimension).enumerate() {
            if let Some(cat) = category {
                if self.categories[row] != cat {
                    continue;
                }
            }
            let score = (dot(v, &q) * self.inv_norms[row]).clamp(-1.0, 1.0);
            if best.len() == k {
                let &(worst_row, worst) = best.last().expect("k >= 1");
                if !self.ranks_before(row, score, worst_row, worst) {
                    continue;
                }
                best.pop();
            }
            let at = best.partition_point(|&(r, s)| self.ranks_before(r, s, row, score));
            best.insert(at, (row, score));
        }
        Ok(best)
    }

    fn ranks_before(&self, a: usize, a_score: f64, b: usize, b_score: f64) -> bool {
        a_score > b_score || (a_score == b_score && self.ids[a] < self.ids[b])
    }

    pub fn search(&self, query: &[f32], k: usize, thresholds: &MatchThresholds) -> Result<Vec<RetrievalResult>, RetrievalError> {
        self.search_in(query, k, thresholds, None)
    }

    pub fn search_in(
        &self,
        query: &[f32],
        k: usize,
        thresholds: &MatchThresholds,
        category: Option<&str>,
    ) -> Result<Vec<RetrievalResult>, RetrievalError> {
        Ok(self
            .top_k(query, k, category)?
            .into_iter()
            .map(|(row, score)| RetrievalResult {
                product_id: self.ids[row].clone(),
                score,
                match_level: thresholds.classify(score),
            })
            .collect())
    }
}

/// f32 storage, f64 accumulation over four independent lanes.
#[inline]
fn dot(v: &[f32], q: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let vc = v.chunks_exact(4);
    let qc = q.chunks_exact(4);
    let tail: f64 = vc
        .remainder()
        .iter()
        .zip(qc.remainder())
        .map(|(&a, &b)| a as f64 * b)
        .sum();
    for (a, b) in vc.zip(qc) {
        acc[0] += a[0] as f64 * b[0];
        acc[1] += a[1] as f64 * b[1];
        acc[2] += a[2] as f64 * b[2];
        acc[3] += a[3] as f64 * b[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Index handle shared by request handlers; rebuilds replace it atomically.
#[derive(Debug, Clone)]
pub struct SharedIndex(Arc<RwLock<Arc<VectorIndex>>>);

impl SharedIndex {
    pub fn new(index: VectorIndex) -> Self {
        Self(Arc::new(RwLock::new(Arc::new(index))))
    }

    pub fn load(&self) -> Arc<VectorIndex> {
        self.0.read().clone()
    }

    pub fn swap(&self, index: VectorIndex) -> Arc<VectorIndex> {
        std::mem::replace(&mut *self.0.write(), Arc::new(index))
    }
}
