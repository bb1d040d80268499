//! Rule-based key attribute extraction from a listing description, plus
//! the model prompt used when extraction is delegated to a language model.
//!
//! cargo run --example attribute_extraction

use ipl::attributes::{build_extraction_prompt_for, serialize_attributes, AttributeExtractor, ExtractionLexicon, RuleExtractor};
use ipl::catalog::AttributeTemplate;

const LEXICON: &str = include_str!("../data/lexicon.json");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let template = AttributeTemplate::new(["Brand", "Model", "Storage Capacity", "Color", "Version", "Screen Condition"])?;
    let description = "Huawei mate10Pro 6+64G completely original unrefurbished smartphone Mainland China version light scratches";

    println!("{}\n", build_extraction_prompt_for(description, &template, Some("smartphone"))?);

    let extractor = RuleExtractor::new(ExtractionLexicon::from_json(LEXICON)?);
    let found = extractor.extract(description, "cellphone", &template);
    println!("{}", serialize_attributes(&found));

    let other = "selling my apple iphone 11 pro 256GB in midnight green, screen has no scratches";
    println!("{}", serialize_attributes(&extractor.extract(other, "cellphone", &template)));
    Ok(())
}
