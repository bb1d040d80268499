//! The three generation instruction variants in both wordings, and a
//! training record rendered as ChatML with its loss spans.
//!
//! cargo run --example instruction_prompts

use ipl::attributes::ExtractedAttributes;
use ipl::catalog::{AttributeTemplate, CategoryNode};
use ipl::prompt::{build_generation_instruction, loss_mask_spans, to_chatml, GenerationContext, InstructionRecord, PromptTemplate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let template = AttributeTemplate::new(["Brand", "Model", "Storage Capacity", "Color", "Version", "Screen Condition"])?;
    let category = CategoryNode {
        id: "cellphone".into(),
        name: "cell phone".into(),
        parent_id: None,
        attribute_template: template.clone(),
    };
    let refs = ExtractedAttributes::from_pairs(
        "cellphone",
        &template,
        [("Brand", "Huawei"), ("Model", "Mate10pro"), ("Storage Capacity", "6+64GB")],
    )?;

    let contexts = [
        GenerationContext::richest("img/1.jpg", Some(category.clone()), None, None),
        GenerationContext::richest("img/1.jpg", Some(category.clone()), Some(template.clone()), None),
        GenerationContext::richest("img/1.jpg", Some(category), Some(template), Some(refs)),
    ];
    for (label, wording) in [("online", PromptTemplate::online()), ("dataset", PromptTemplate::dataset())] {
        println!("== {label} wording");
        for ctx in &contexts {
            println!("[{}] {}\n", ctx.variant.as_str(), build_generation_instruction(ctx, &wording)?);
        }
    }

    let instruction = build_generation_instruction(&contexts[2], &PromptTemplate::online())?;
    let record = InstructionRecord::single_turn(
        Some("img/1.jpg"),
        &instruction,
        "Personal used Huawei Mate10pro 6+64GB, condition as shown in the pictures.",
        "description_generation",
        "p1",
    );
    let text = to_chatml(std::slice::from_ref(&record))?;
    print!("{text}");
    for span in loss_mask_spans(&record, &text)? {
        println!("loss span {:?}: {:?}", span, &text[span.clone()]);
    }
    Ok(())
}
