use std::collections::HashMap;
use std::hash::Hash;

use super::MetricScore;

/// Smoothing value substituted for a zero n-gram match count.
pub const DEFAULT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BleuStats {
    /// Clipped matches per order, 1-based order at index `n - 1`.
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub candidate_len: u64,
    pub reference_len: u64,
}

impl BleuStats {
    fn new(max_n: usize) -> Self {
        Self {
            matches: vec![0; max_n],
            totals: vec![0; max_n],
            candidate_len: 0,
            reference_len: 0,
        }
    }

    fn add(&mut self, other: &BleuStats) {
        for n in 0..self.matches.len() {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.candidate_len += other.candidate_len;
        self.reference_len += other.reference_len;
    }

    /// BLEU-1..=max_n: brevity penalty times the geometric mean of the
    /// modified precisions up to each order.
    pub fn scores(&self, epsilon: f64) -> Vec<f64> {
        let max_n = self.matches.len();
        if self.candidate_len == 0 {
            return vec![0.0; max_n];
        }
        let (c, r) = (self.candidate_len as f64, self.reference_len as f64);
        let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
        let mut log_sum = 0.0;
        (0..max_n)
            .map(|n| {
                let numerator = if self.matches[n] == 0 {
                    epsilon
                } else {
                    self.matches[n] as f64
                };
                let p = numerator / self.totals[n].max(1) as f64;
                log_sum += p.ln();
                bp * (log_sum / (n + 1) as f64).exp()
            })
            .collect()
    }
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Sufficient statistics for one candidate against its references.
/// The effective reference length is the closest one, shorter on ties.
pub fn bleu_stats<T: Eq + Hash>(candidate: &[T], references: &[Vec<T>], max_n: usize) -> BleuStats {
    assert!(max_n >= 1, "max_n must be at least 1");
    let mut stats = BleuStats::new(max_n);
    stats.candidate_len = candidate.len() as u64;
    stats.reference_len = references
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| ((len as i64 - candidate.len() as i64).abs(), len))
        .unwrap_or(0) as u64;
    for n in 1..=max_n {
        let cand = ngram_counts(candidate, n);
        let mut max_ref: HashMap<&[T], u64> = HashMap::new();
        for reference in references {
            for (gram, count) in ngram_counts(reference, n) {
                let slot = max_ref.entry(gram).or_insert(0);
                *slot = (*slot).max(count);
            }
        }
        stats.totals[n - 1] = candidate.len().saturating_sub(n - 1) as u64;
        stats.matches[n - 1] = cand
            .iter()
            .map(|(gram, &count)| count.min(max_ref.get(gram).copied().unwrap_or(0)))
            .sum();
    }
    stats
}

fn to_scores(values: Vec<f64>, sample_count: usize) -> Vec<MetricScore> {
    values
        .into_iter()
        .enumerate()
        .map(|(i, value)| MetricScore::new(format!("BLEU-{}", i + 1), value, sample_count))
        .collect()
}

/// Sentence-level BLEU-1..=max_n.
pub fn bleu<T: Eq + Hash>(candidate: &[T], references: &[Vec<T>], max_n: usize) -> Vec<MetricScore> {
    bleu_with_epsilon(candidate, references, max_n, DEFAULT_EPSILON)
}

pub fn bleu_with_epsilon<T: Eq + Hash>(candidate: &[T], references: &[Vec<T>], max_n: usize, epsilon: f64) -> Vec<MetricScore> {
    to_scores(bleu_stats(candidate, references, max_n).scores(epsilon), 1)
}

/// Corpus-level BLEU: statistics summed over all pairs before scoring.
pub fn corpus_bleu<T: Eq + Hash>(pairs: &[(Vec<T>, Vec<Vec<T>>)], max_n: usize, epsilon: f64) -> Vec<MetricScore> {
    let mut total = BleuStats::new(max_n);
    for (candidate, references) in pairs {
        total.add(&bleu_stats(candidate, references, max_n));
    }
    to_scores(total.scores(epsilon), pairs.len().max(1))
}
