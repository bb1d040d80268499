//! Corpus cleaning with its rejection report, instruction dataset
//! construction in ChatML, and the general QA scaffold.
//!
//! cargo run --example dataset_cleaning

use ipl::attributes::RuleExtractor;
use ipl::catalog::ProductRecord;
use ipl::dataset::{
    build_instruction_dataset, clean_corpus, parse_general_qa, scaffold_general_qa, BuildOptions, CleaningConfig,
    CleaningScorers, DatasetMix, QaPromptConfig,
};
use ipl::prompt::to_chatml_jsonl;
use ipl::synthetic::{generate_world, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = generate_world(&SyntheticConfig {
        spu_count: 30,
        query_count: 0,
        ..SyntheticConfig::default()
    });
    let mut corpus = world.products.clone();
    corpus.push(ProductRecord::new("zz-short", "cellphone", "mint!").with_embedding(vec![1.0; 64]));
    corpus.push(
        ProductRecord::new("zz-phone", "cellphone", "Apple iPhone 11 for sale, call 13812345678 today").with_embedding(vec![1.0; 64]),
    );
    let mut risky = ProductRecord::new("zz-risk", "laptop", "Brand new laptop for 1 yuan, contact me elsewhere").with_embedding(vec![1.0; 64]);
    risky.risk_tags = vec!["low_price_bait".into()];
    corpus.push(risky);

    let config = CleaningConfig {
        per_category_cap: Some(30),
        seed: 11,
        ..CleaningConfig::default()
    };
    let (accepted, report) = clean_corpus(corpus, &config, &CleaningScorers::default())?;
    println!(
        "input {} accepted {} | quality {} risk {} img_text {} heuristic {} sampled_out {}",
        report.input, report.accepted, report.low_quality, report.risk, report.low_img_text_sim, report.heuristic, report.sampled_out
    );
    for r in report.trail.iter().filter(|r| r.source_id.starts_with("zz")) {
        println!("  {} rejected at {:?}: {}", r.source_id, r.step, r.reason);
    }

    let extractor = RuleExtractor::new(world.lexicon.clone());
    let built = build_instruction_dataset(&accepted, &DatasetMix::default(), &extractor, &world.taxonomy, &BuildOptions::default())?;
    println!("realized variants: {:?}, demoted {}", built.stats.realized, built.stats.demoted);
    let jsonl = to_chatml_jsonl(&built.records[..1])?;
    println!("first record: {jsonl}");

    println!("{}\n", scaffold_general_qa(&QaPromptConfig::default()));
    let reply = "Instruction1: What color are the shoes?\nAnswer1: Purple with white laces.\nTask1: Object Attribute Recognition\n\nInstruction2: Describe the picture.\nTask2: Image Information Description\n";
    let parsed = parse_general_qa(reply, "img/shoes.jpg", "shoes");
    println!("parsed {} QA records, skipped {}", parsed.records.len(), parsed.skipped);
    Ok(())
}
