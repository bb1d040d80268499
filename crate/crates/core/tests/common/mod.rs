//! Reference implementations used as test oracles. Written for clarity
//! with plain loops and no shared code with the library.

#![allow(dead_code)]

use std::time::Duration;

use ipl::catalog::ProductRecord;
use ipl::retrieval::VectorIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// How often `gram` occurs in `tokens` as a contiguous run.
fn occurrences(tokens: &[String], gram: &[String]) -> usize {
    if gram.len() > tokens.len() {
        return 0;
    }
    (0..=tokens.len() - gram.len())
        .filter(|&i| tokens[i..i + gram.len()] == *gram)
        .count()
}

/// Cumulative BLEU-1..max_n. Zero clip counts are replaced by `eps`; the
/// reference length is the closest one, preferring the shorter.
pub fn oracle_bleu(cand: &[String], refs: &[Vec<String>], max_n: usize, eps: f64) -> Vec<f64> {
    if cand.is_empty() {
        return vec![0.0; max_n];
    }
    let c = cand.len();
    let mut r = usize::MAX;
    for reference in refs {
        let d = reference.len().abs_diff(c);
        if r == usize::MAX || d < r.abs_diff(c) || (d == r.abs_diff(c) && reference.len() < r) {
            r = reference.len();
        }
    }
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    let mut precisions = Vec::new();
    for n in 1..=max_n {
        let total = c.saturating_sub(n - 1);
        let mut clipped = 0usize;
        let mut seen: Vec<Vec<String>> = Vec::new();
        if total > 0 {
            for i in 0..total {
                let gram = cand[i..i + n].to_vec();
                if seen.contains(&gram) {
                    continue;
                }
                let in_cand = occurrences(cand, &gram);
                let in_ref = refs.iter().map(|rf| occurrences(rf, &gram)).max().unwrap_or(0);
                clipped += in_cand.min(in_ref);
                seen.push(gram);
            }
        }
        let num = if clipped == 0 { eps } else { clipped as f64 };
        precisions.push(num / total.max(1) as f64);
    }
    (1..=max_n)
        .map(|n| {
            let product: f64 = precisions[..n].iter().product();
            bp * product.powf(1.0 / n as f64)
        })
        .collect()
}

fn f_measure(overlap: usize, c: usize, r: usize) -> f64 {
    if overlap == 0 {
        return 0.0;
    }
    // Harmonic mean of precision and recall, written as 2o / (c + r).
    2.0 * overlap as f64 / (c + r) as f64
}

pub fn oracle_rouge_n(cand: &[String], reference: &[String], n: usize) -> f64 {
    let c = cand.len().saturating_sub(n - 1);
    let r = reference.len().saturating_sub(n - 1);
    if c == 0 || r == 0 {
        return 0.0;
    }
    let mut seen: Vec<&[String]> = Vec::new();
    let mut overlap = 0;
    for i in 0..c {
        let gram = &cand[i..i + n];
        if seen.contains(&gram) {
            continue;
        }
        overlap += occurrences(cand, gram).min(occurrences(reference, gram));
        seen.push(gram);
    }
    f_measure(overlap, c, r)
}

/// LCS by memoized recursion from the front.
pub fn oracle_lcs(a: &[String], b: &[String]) -> usize {
    fn go(a: &[String], b: &[String], i: usize, j: usize, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + go(a, b, i + 1, j + 1, memo)
        } else {
            go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len()]; a.len()];
    go(a, b, 0, 0, &mut memo)
}

pub fn oracle_rouge_l(cand: &[String], reference: &[String]) -> f64 {
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    f_measure(oracle_lcs(cand, reference), cand.len(), reference.len())
}

/// Random sentence over a small vocabulary so n-gram overlaps are common.
pub fn random_sentence(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<String> {
    const VOCAB: [&str; 12] = ["the", "a", "phone", "is", "new", "red", "case", "with", "box", "used", "good", "and"];
    let len = rng.random_range(1..=max_len);
    (0..len).map(|_| VOCAB[rng.random_range(0..VOCAB.len())].to_string()).collect()
}

pub fn sentence_pairs(seed: u64, count: usize) -> Vec<(Vec<String>, Vec<String>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (random_sentence(&mut rng, 18), random_sentence(&mut rng, 18)))
        .collect()
}

/// Exhaustive cosine scan in f64 over the stored rows.
pub fn oracle_scan(index: &VectorIndex, query: &[f32], k: usize) -> Vec<(String, f64)> {
    let qn: f64 = query.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
    let mut all: Vec<(String, f64)> = index
        .rows()
        .map(|(id, _, v)| {
            let vn: f64 = v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
            let dot: f64 = v.iter().zip(query).map(|(&a, &b)| a as f64 * b as f64).sum();
            (id.to_string(), dot / (vn * qn))
        })
        .collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Compares a search hit list to the oracle. Ids may differ only where
/// the oracle itself has scores within `tie` of each other.
pub fn hits_agree(got: &[(String, f64)], want: &[(String, f64)], tol: f64, tie: f64) -> Result<(), String> {
    if got.len() != want.len() {
        return Err(format!("length {} vs {}", got.len(), want.len()));
    }
    for (i, ((gid, gs), (wid, ws))) in got.iter().zip(want).enumerate() {
        if (gs - ws).abs() > tol {
            return Err(format!("rank {i}: score {gs} vs {ws}"));
        }
        if gid != wid {
            let tied = want.iter().any(|(id, s)| id == gid && (s - ws).abs() <= tie);
            if !tied {
                return Err(format!("rank {i}: id {gid} vs {wid}"));
            }
        }
    }
    Ok(())
}

/// Unit-norm random products spread over `categories`.
pub fn random_products(seed: u64, count: usize, dim: usize, categories: usize) -> Vec<ProductRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let v: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
            ProductRecord::new(format!("p{i:06}"), format!("c{}", i % categories), "synthetic product").with_embedding(v)
        })
        .collect()
}

pub fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect()
}

/// Nearest-rank percentile of `samples` (0 < p <= 100).
pub fn percentile(samples: &mut [Duration], p: f64) -> Duration {
    samples.sort();
    let rank = ((p / 100.0) * samples.len() as f64).ceil() as usize;
    samples[rank.clamp(1, samples.len()) - 1]
}

pub mod service {
    use std::sync::Arc;

    use ipl::attributes::{AttributeExtractor, ExtractedAttributes};
    use ipl::catalog::{AttributeTemplate, Taxonomy};
    use ipl::gateway::{StreamLimits, TemplateFillBackend};
    use ipl::prompt::InstructionVariant;
    use ipl::retrieval::VectorIndex;
    use ipl::service::{router, ListingPipeline, Stage};
    use ipl::synthetic::{generate_world, SyntheticConfig, SyntheticWorld};

    pub struct NothingExtractor;

    impl AttributeExtractor for NothingExtractor {
        fn extract(&self, _: &str, category_id: &str, _: &AttributeTemplate) -> ExtractedAttributes {
            ExtractedAttributes::empty(category_id)
        }
    }

    pub fn small_world() -> SyntheticWorld {
        generate_world(&SyntheticConfig {
            spu_count: 40,
            query_count: 10,
            ..SyntheticConfig::default()
        })
    }

    pub fn pipeline(world: &SyntheticWorld) -> ListingPipeline {
        ListingPipeline::from_world(world, Arc::new(TemplateFillBackend::default()), StreamLimits::default())
    }

    /// A degraded pipeline, the variant it must fall back to, and the stages
    /// that must report a fallback.
    pub struct Scenario {
        pub name: &'static str,
        pub pipeline: ListingPipeline,
        pub variant: InstructionVariant,
        pub fallback_stages: Vec<Stage>,
    }

    pub fn fallback_scenarios(world: &SyntheticWorld) -> Vec<Scenario> {
        let empty_index = pipeline(world);
        empty_index.index.swap(VectorIndex::empty(empty_index.index.load().dimension()));

        let empty_category = pipeline(world);
        empty_category.catalog.set_taxonomy(Taxonomy::from_nodes([]).unwrap());

        let mut no_extraction = pipeline(world);
        no_extraction.extractor = Arc::new(NothingExtractor);

        vec![
            Scenario {
                name: "empty index",
                pipeline: empty_index,
                variant: InstructionVariant::ImageOnly,
                fallback_stages: vec![Stage::Category, Stage::Retrieval, Stage::Extraction, Stage::Prompt],
            },
            Scenario {
                name: "empty category",
                pipeline: empty_category,
                variant: InstructionVariant::ImageOnly,
                fallback_stages: vec![Stage::Category, Stage::Extraction, Stage::Prompt],
            },
            Scenario {
                name: "extractor returns nothing",
                pipeline: no_extraction,
                variant: InstructionVariant::ImageTemplate,
                fallback_stages: vec![Stage::Extraction, Stage::Prompt],
            },
        ]
    }

    /// Serves `pipeline` on an ephemeral local port and returns its base URL.
    pub async fn spawn(pipeline: ListingPipeline) -> String {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let app = router(Arc::new(pipeline));
        tokio::spawn(async move { axum::serve(listener, app).await });
        base
    }
}

pub mod chatml {
    use ipl::prompt::{InstructionRecord, Segment, Turn};
    use proptest::prelude::*;

    pub fn text() -> impl Strategy<Value = String> {
        prop_oneof![
            "[a-zA-Z0-9 ,.?!:\n]{1,40}",
            Just("Picture 1: ".to_string()),
            Just("Picture 2: <im".to_string()),
            "[\u{4e00}-\u{4e20}]{1,8}",
        ]
    }

    pub fn image() -> impl Strategy<Value = String> {
        "[a-z0-9_/]{1,12}\\.jpg"
    }

    pub fn user_segments() -> impl Strategy<Value = Vec<Segment>> {
        prop::collection::vec(prop_oneof![text().prop_map(Segment::Text), image().prop_map(Segment::Image)], 0..5).prop_map(|segs| {
            // Merge adjacent text segments, the canonical form.
            let mut out: Vec<Segment> = Vec::new();
            for s in segs {
                match (out.last_mut(), s) {
                    (Some(Segment::Text(prev)), Segment::Text(t)) => prev.push_str(&t),
                    (_, s) => out.push(s),
                }
            }
            out
        })
    }

    pub fn record() -> impl Strategy<Value = InstructionRecord> {
        (1usize..4, prop::collection::vec((user_segments(), prop::option::of(text())), 3), "[a-z_.]{0,10}", "[a-z0-9-]{0,8}")
            .prop_map(|(exchanges, turns, tag, source)| {
                let mut out = Vec::new();
                for (user, answer) in turns.into_iter().take(exchanges) {
                    out.push(Turn::user(user));
                    out.push(Turn::assistant(answer.unwrap_or_default()));
                }
                InstructionRecord::new(out, tag, source)
            })
    }

    /// Byte ranges of user turns, found by scanning the markers directly.
    pub fn user_turn_ranges(text: &str) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut pos = 0;
        while let Some(off) = text[pos..].find("<im_start>") {
            let start = pos + off;
            let end = start + text[start..].find("<im_end>").expect("closed turn") + "<im_end>".len();
            if text[start..].starts_with("<im_start>user\n") {
                out.push(start..end);
            }
            pos = end;
        }
        out
    }
}

pub mod cleaning {
    use std::sync::{Arc, Mutex};

    use ipl::catalog::ProductRecord;
    use ipl::dataset::{CleaningConfig, CleaningScorers, CleaningStep};
    use proptest::prelude::*;

    /// Which step a generated record is scripted to fail first, if any.
    #[derive(Debug, Clone, Copy)]
    pub struct Script {
        pub quality_ok: bool,
        pub risky: bool,
        pub img_ok: bool,
        pub text: u8,
    }

    pub const TEXTS: [&str; 4] = [
        "a clean ordinary description of a used phone",
        "tiny",
        "reach me at 13912345678 for the best price",
        "@@@ ### %%% &&& *** !!! ???",
    ];

    pub fn script() -> impl Strategy<Value = Script> {
        (prop::bool::weighted(0.85), prop::bool::weighted(0.1), prop::bool::weighted(0.9), prop::sample::select(vec![0u8, 0, 0, 0, 1, 2, 3]))
            .prop_map(|(quality_ok, risky, img_ok, text)| Script { quality_ok, risky, img_ok, text })
    }

    pub fn corpus(scripts: &[Script]) -> Vec<ProductRecord> {
        scripts
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut r = ProductRecord::new(format!("r{i:04}"), format!("c{}", i % 3), TEXTS[s.text as usize])
                    .with_embedding(vec![1.0, 0.0])
                    .with_attribute("q", if s.quality_ok { "0.9" } else { "0.1" })
                    .with_attribute("s", if s.img_ok { "0.8" } else { "0.05" });
                if s.risky {
                    r.risk_tags = vec!["suspected_fraud".into()];
                }
                r
            })
            .collect()
    }

    pub fn expected_step(s: &Script) -> Option<CleaningStep> {
        if !s.quality_ok {
            Some(CleaningStep::Quality)
        } else if s.risky {
            Some(CleaningStep::Risk)
        } else if !s.img_ok {
            Some(CleaningStep::ImageText)
        } else if s.text != 0 {
            Some(CleaningStep::Heuristic)
        } else {
            None
        }
    }

    pub fn scorers(img_calls: Arc<Mutex<Vec<String>>>) -> CleaningScorers {
        let attr = |r: &ProductRecord, k: &str| r.attributes.get(k).and_then(|v| v.parse::<f64>().ok()).unwrap_or(0.0);
        CleaningScorers {
            quality: Arc::new(move |r| attr(r, "q")),
            img_text: Arc::new(move |r| {
                img_calls.lock().unwrap().push(r.id.clone());
                attr(r, "s")
            }),
            ..CleaningScorers::default()
        }
    }

    pub fn config(cap: Option<usize>, seed: u64) -> CleaningConfig {
        CleaningConfig {
            min_image_text_sim: 0.2,
            per_category_cap: cap,
            seed,
            ..CleaningConfig::default()
        }
    }
}
