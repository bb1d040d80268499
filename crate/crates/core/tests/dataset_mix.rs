use ipl::attributes::RuleExtractor;
use ipl::dataset::{build_instruction_dataset, description_task_tag, BuildOptions, DatasetError, DatasetMix, VariantMix};
use ipl::prompt::{from_chatml, InstructionVariant, Segment};
use ipl::synthetic::{generate_world, SyntheticConfig};

fn world() -> ipl::synthetic::SyntheticWorld {
    generate_world(&SyntheticConfig {
        spu_count: 750,
        query_count: 0,
        omission_rate: 0.0,
        ..SyntheticConfig::default()
    })
}

#[test]
fn variant_draws_converge_to_mix() {
    let world = world();
    let n = world.products.len();
    let mix = DatasetMix {
        variants: VariantMix { image_only: 0.2, image_template: 0.3, image_template_reference: 0.5 },
        ..DatasetMix::default()
    };
    let built = build_instruction_dataset(&world.products, &mix, &RuleExtractor::new(world.lexicon.clone()), &world.taxonomy, &BuildOptions::default()).unwrap();
    assert_eq!(built.records.len(), n);
    for (v, p) in [
        (InstructionVariant::ImageOnly, 0.2),
        (InstructionVariant::ImageTemplate, 0.3),
        (InstructionVariant::ImageTemplateReference, 0.5),
    ] {
        let drawn = built.stats.drawn.get(&v).copied().unwrap_or(0) as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((drawn - n as f64 * p).abs() <= 3.0 * sigma, "{v:?}: {drawn} of {n}, expected {}", n as f64 * p);
        let tagged = built.records.iter().filter(|r| r.metadata.task_tag == description_task_tag(v)).count();
        assert_eq!(tagged, built.stats.realized.get(&v).copied().unwrap_or(0));
    }
}

#[test]
fn records_answer_with_the_description() {
    let world = world();
    let products = &world.products[..200];
    let built = build_instruction_dataset(products, &DatasetMix::default(), &RuleExtractor::new(world.lexicon.clone()), &world.taxonomy, &BuildOptions::default()).unwrap();
    let text = ipl::prompt::to_chatml(&built.records).unwrap();
    let back = from_chatml(&text).unwrap();
    for (record, product) in back.iter().zip(products) {
        assert_eq!(record.turns[1].text(), product.description);
        assert_eq!(record.turns[0].segments[0], Segment::Image(product.image_ref()));
    }
}

#[test]
fn malformed_mix_rejected() {
    let bad = DatasetMix {
        variants: VariantMix { image_only: 0.5, image_template: 0.5, image_template_reference: 0.5 },
        ..DatasetMix::default()
    };
    assert!(matches!(bad.validate(), Err(DatasetError::InvalidMix(_))));
    assert!(DatasetMix::from_json("{\"variants\": {\"image_only\": -1, \"image_template\": 1, \"image_template_reference\": 1}}").is_err());
}
