//! Text metrics, attribute accuracy, the listing quality score, and a
//! benchmark run with string-matched answers.
//!
//! cargo run --example evaluation_metrics

use ipl::catalog::{AttributeTemplate, HashingEmbedder};
use ipl::attributes::ExtractedAttributes;
use ipl::eval::{
    attribute_accuracy, bleu, quality_score, rouge_value, run_benchmark, sim, BenchmarkSample, FeatureSources,
    QualityFeatureVector, QualityWeights, RougeVariant, TaskKind, Tokenizer,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tok = Tokenizer::default();
    let candidate = tok.tokenize("the cat sat");
    let reference = tok.tokenize("the cat sat on the mat");
    for s in bleu(&candidate, std::slice::from_ref(&reference), 2) {
        println!("{:<8} {:.4}", s.name, s.value);
    }
    let (a, b) = (tok.tokenize("a b c d"), tok.tokenize("a c b d"));
    println!("ROUGE-L  {:.4}", rouge_value(&a, &b, RougeVariant::RL));

    let embedder = HashingEmbedder::new(64);
    let generated = "Personal used Apple iPhone 11 256GB, condition as shown in the pictures.";
    let written = "Apple iPhone 11, China version, 256GB, Silver, 90% new.";
    println!("SIM      {:.4}", sim(generated, written, &embedder).value);

    let template = AttributeTemplate::new(["Brand", "Model", "Color"])?;
    let gold = ExtractedAttributes::from_pairs("cellphone", &template, [("Brand", "Apple"), ("Model", "iPhone 11"), ("Color", "Silver")])?;
    println!("ACC      {:.4}", attribute_accuracy(generated, &gold)?.value);

    let features = QualityFeatureVector::from_sources(&FeatureSources {
        category_correct: true,
        template_size: 3,
        filled_attributes: 2,
        description: written.into(),
        title: Some("iPhone 11".into()),
        image_count: 3,
        image_aesthetic: 0.7,
        price: Some(2100.0),
        brand_specified: true,
        condition_specified: true,
        ..FeatureSources::default()
    });
    println!("quality  {:.1} / 100", 100.0 * quality_score(&features, &QualityWeights::uniform()));
    println!("features {}", serde_json::to_string(&features)?);

    let samples = vec![
        BenchmarkSample {
            id: None,
            task: TaskKind::SA,
            prompt: "Is this review positive or negative? 'Arrived quickly, works great.'".into(),
            image_ref: None,
            options: vec!["positive".into(), "negative".into()],
            gold: vec!["positive".into()],
        },
        BenchmarkSample {
            id: None,
            task: TaskKind::PDG,
            prompt: "Describe the product in the photo.".into(),
            image_ref: Some("img/1.jpg".into()),
            options: vec![],
            gold: vec![written.into()],
        },
    ];
    let model = |s: &BenchmarkSample| -> Result<String, String> {
        Ok(match s.task {
            TaskKind::PDG => generated.to_string(),
            _ => "Positive".to_string(),
        })
    };
    print!("{}", run_benchmark(&samples, &model, &embedder).to_text());
    Ok(())
}
