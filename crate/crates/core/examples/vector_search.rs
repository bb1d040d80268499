//! Exact cosine search with identical/similar match levels, k-NN category
//! prediction, and the binary index sidecar.
//!
//! cargo run --example vector_search

use ipl::retrieval::{load_index, predict_category, save_index, MatchThresholds, VectorIndex};
use ipl::synthetic::{generate_world, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = generate_world(&SyntheticConfig {
        spu_count: 300,
        query_count: 3,
        ..SyntheticConfig::default()
    });
    let index = VectorIndex::build(64, &world.products)?;
    println!("indexed {} products", index.len());

    let thresholds = MatchThresholds::default();
    for q in &world.queries {
        let prediction = predict_category(&index, &q.embedding, 10)?;
        println!(
            "{} (true category {}): predicted {} at {:.2}",
            q.id, q.category_id, prediction.category_id, prediction.confidence
        );
        for hit in index.search(&q.embedding, 5, &thresholds)? {
            println!("    {:<14} {:.4} {:?}", hit.product_id, hit.score, hit.match_level);
        }
    }

    let path = std::env::temp_dir().join(format!("ipl-index-{}.bin", std::process::id()));
    save_index(&index, &path)?;
    let loaded = load_index(&path)?;
    println!("sidecar round trip equal: {}", loaded == index);
    std::fs::remove_file(path)?;
    Ok(())
}
