use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::MetricScore;
use crate::text::lcs_len;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RougeVariant {
    R1,
    R2,
    RL,
}

impl RougeVariant {
    pub const ALL: [RougeVariant; 3] = [RougeVariant::R1, RougeVariant::R2, RougeVariant::RL];

    pub fn label(self) -> &'static str {
        match self {
            RougeVariant::R1 => "ROUGE-1",
            RougeVariant::R2 => "ROUGE-2",
            RougeVariant::RL => "ROUGE-L",
        }
    }
}

fn f1(overlap: usize, cand_total: usize, ref_total: usize) -> f64 {
    if overlap == 0 || cand_total == 0 || ref_total == 0 {
        return 0.0;
    }
    let p = overlap as f64 / cand_total as f64;
    let r = overlap as f64 / ref_total as f64;
    2.0 * p * r / (p + r)
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for g in tokens.windows(n) {
            *m.entry(g).or_insert(0) += 1;
        }
    }
    m
}

fn ngram_overlap<T: Eq + Hash>(cand: &[T], reference: &[T], n: usize) -> (usize, usize, usize) {
    let (c, r) = (ngram_counts(cand, n), ngram_counts(reference, n));
    let overlap = c
        .iter()
        .map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    (
        overlap,
        cand.len().saturating_sub(n - 1),
        reference.len().saturating_sub(n - 1),
    )
}

/// Raw F1 value for one variant.
pub fn rouge_value<T: Eq + Hash>(candidate: &[T], reference: &[T], variant: RougeVariant) -> f64 {
    match variant {
        RougeVariant::R1 => {
            let (o, c, r) = ngram_overlap(candidate, reference, 1);
            f1(o, c, r)
        }
        RougeVariant::R2 => {
            let (o, c, r) = ngram_overlap(candidate, reference, 2);
            f1(o, c, r)
        }
        RougeVariant::RL => f1(lcs_len(candidate, reference), candidate.len(), reference.len()),
    }
}

/// Recall component, used by degradation checks.
pub fn rouge_recall<T: Eq + Hash>(candidate: &[T], reference: &[T], variant: RougeVariant) -> f64 {
    let (o, total) = match variant {
        RougeVariant::R1 => {
            let (o, _, r) = ngram_overlap(candidate, reference, 1);
            (o, r)
        }
        RougeVariant::R2 => {
            let (o, _, r) = ngram_overlap(candidate, reference, 2);
            (o, r)
        }
        RougeVariant::RL => (lcs_len(candidate, reference), reference.len()),
    };
    if total == 0 {
        0.0
    } else {
        o as f64 / total as f64
    }
}

pub fn rouge<T: Eq + Hash>(candidate: &[T], reference: &[T], variant: RougeVariant) -> MetricScore {
    MetricScore::new(variant.label(), rouge_value(candidate, reference, variant), 1)
}
