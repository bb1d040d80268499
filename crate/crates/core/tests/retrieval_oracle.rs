mod common;

use common::{hits_agree, oracle_scan, random_products, random_vector};
use ipl::retrieval::{predict_category, read_index, write_index, MatchLevel, MatchThresholds, RetrievalError, VectorIndex};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn search_equals_exhaustive_scan() {
    let products = random_products(3, 2000, 32, 5);
    let index = VectorIndex::build(32, &products).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let q = random_vector(&mut rng, 32);
        let got: Vec<(String, f64)> = index
            .search(&q, 10, &MatchThresholds::default())
            .unwrap()
            .into_iter()
            .map(|h| (h.product_id, h.score))
            .collect();
        hits_agree(&got, &oracle_scan(&index, &q, 10), 1e-9, 1e-12).unwrap();
    }
}

#[test]
fn self_query_scores_one() {
    let products = random_products(8, 300, 16, 3);
    let index = VectorIndex::build(16, &products).unwrap();
    for p in products.iter().take(50) {
        let hit = &index.search(&p.image_embeddings[0], 1, &MatchThresholds::default()).unwrap()[0];
        assert_eq!(hit.product_id, p.id);
        assert!((hit.score - 1.0).abs() <= 1e-6);
        assert_eq!(hit.match_level, MatchLevel::Identical);
    }
}

#[test]
fn category_filter_restricts_hits() {
    let products = random_products(9, 400, 8, 4);
    let index = VectorIndex::build(8, &products).unwrap();
    let q = random_vector(&mut ChaCha8Rng::seed_from_u64(1), 8);
    let hits = index.search_in(&q, 20, &MatchThresholds::default(), Some("c2")).unwrap();
    assert_eq!(hits.len(), 20);
    assert!(hits.iter().all(|h| index.category(index.rows().position(|r| r.0 == h.product_id).unwrap()) == "c2"));
}

#[test]
fn errors_and_edges() {
    let index = VectorIndex::build(4, &random_products(1, 3, 4, 1)).unwrap();
    let t = MatchThresholds::default();
    assert!(matches!(index.search(&[1.0, 0.0, 0.0, 0.0], 0, &t), Err(RetrievalError::InvalidK)));
    assert!(matches!(index.search(&[0.0; 4], 1, &t), Err(RetrievalError::DegenerateQuery)));
    assert!(index.search(&[1.0, 0.0], 1, &t).is_err());
    assert_eq!(index.search(&[1.0, 0.0, 0.0, 0.0], 10, &t).unwrap().len(), 3);
    assert!(VectorIndex::empty(4).search(&[1.0, 0.0, 0.0, 0.0], 5, &t).unwrap().is_empty());
    assert!(MatchThresholds::new(0.5, 0.7).is_err());
}

#[test]
fn sidecar_round_trip_and_corruption() {
    let index = VectorIndex::build(8, &random_products(2, 50, 8, 3)).unwrap();
    let mut bytes = Vec::new();
    write_index(&index, &mut bytes).unwrap();
    assert_eq!(read_index(&bytes[..]).unwrap(), index);
    assert!(read_index(&bytes[..bytes.len() - 3]).is_err());
    let mut bad = bytes.clone();
    bad[0] ^= 0xff;
    assert!(read_index(&bad[..]).is_err());
}

#[test]
fn knn_category_prediction_is_majority() {
    let index = VectorIndex::build(8, &random_products(6, 200, 8, 4)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let q = random_vector(&mut rng, 8);
        let p = predict_category(&index, &q, 7).unwrap();
        let mut votes = std::collections::BTreeMap::<String, usize>::new();
        for (id, _) in oracle_scan(&index, &q, 7) {
            let row = index.rows().position(|r| r.0 == id).unwrap();
            *votes.entry(index.category(row).to_string()).or_default() += 1;
        }
        let max = *votes.values().max().unwrap();
        assert_eq!(votes[&p.category_id], max);
        assert!((p.confidence - max as f64 / 7.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn scores_sorted_and_bounded(seed in 0u64..1000, k in 1usize..30) {
        let index = VectorIndex::build(6, &random_products(seed, 60, 6, 3)).unwrap();
        let q = random_vector(&mut ChaCha8Rng::seed_from_u64(seed + 1), 6);
        let hits = index.search(&q, k, &MatchThresholds::default()).unwrap();
        prop_assert_eq!(hits.len(), k.min(60));
        for w in hits.windows(2) {
            prop_assert!(w[0].score >= w[1].score);
        }
        for h in &hits {
            prop_assert!((-1.0..=1.0).contains(&h.score));
        }
    }
}
