//! Writes a small synthetic catalog to disk, ingests it into a persistent
//! store, and looks up a category template.
//!
//! cargo run --example ingest_catalog

use ipl::catalog::{record_line, CatalogStore, IngestConfig};
use ipl::synthetic::{generate_world, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("ipl-ingest-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let world = generate_world(&SyntheticConfig {
        spu_count: 6,
        query_count: 0,
        ..SyntheticConfig::default()
    });

    let mut lines: String = world.products.iter().map(|p| record_line(p) + "\n").collect();
    lines.push_str("{\"id\": \"broken\"\n");
    let catalog_path = dir.join("catalog.jsonl");
    std::fs::write(&catalog_path, lines)?;
    let taxonomy_path = dir.join("taxonomy.json");
    std::fs::write(&taxonomy_path, serde_json::to_string_pretty(&world.taxonomy.to_file_doc())?)?;

    let store = CatalogStore::open(dir.join("store"))?;
    store.load_taxonomy(&taxonomy_path)?;
    let stats = store.ingest_catalog(&catalog_path, &IngestConfig::default())?;
    println!("accepted {}, rejected {}", stats.accepted, stats.rejected);
    for r in &stats.rejections {
        println!("  line {}: {}", r.line, r.reason);
    }
    println!("per category: {:?}", stats.per_category);

    let phone = store.get_category("cellphone")?;
    println!("{} template: {}", phone.name, phone.attribute_template.names().join(" + "));

    // Reopening replays the log.
    drop(store);
    let reopened = CatalogStore::open(dir.join("store"))?;
    println!("reopened store holds {} products", reopened.len());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
