//! Context ablation over a synthetic catalog: image only, plus category,
//! plus reference, plus both.
//!
//! cargo run --release --example ablation

use ipl::eval::{ablation_fixture, run_ablation, AblationConfig};
use ipl::synthetic::SyntheticConfig;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixture = ablation_fixture(&SyntheticConfig::default());
    let table = run_ablation(&fixture, &AblationConfig::ALL).await?;
    println!("{} queries", table.query_count);
    print!("{}", table.to_text());
    for row in &table.rows {
        println!("{:<26} variants {:?}", row.label, row.variants);
    }
    Ok(())
}
