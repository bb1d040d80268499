use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attributes::ExtractedAttributes;
use crate::catalog::{AttributeTemplate, CategoryNode};

use super::PromptError;

/// The three description-generation instruction variants, poorest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstructionVariant {
    ImageOnly,
    ImageTemplate,
    ImageTemplateReference,
}

impl InstructionVariant {
    pub const ALL: [InstructionVariant; 3] = [
        InstructionVariant::ImageOnly,
        InstructionVariant::ImageTemplate,
        InstructionVariant::ImageTemplateReference,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ImageOnly => "image_only",
            Self::ImageTemplate => "image_template",
            Self::ImageTemplateReference => "image_template_reference",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationContext {
    pub image_ref: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<CategoryNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<AttributeTemplate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_attrs: Option<ExtractedAttributes>,
    pub variant: InstructionVariant,
}

impl GenerationContext {
    pub fn image_only(image_ref: impl Into<String>) -> Self {
        Self {
            image_ref: image_ref.into(),
            category: None,
            template: None,
            reference_attrs: None,
            variant: InstructionVariant::ImageOnly,
        }
    }

    /// Context with the richest variant the available fields support.
    pub fn richest(
        image_ref: impl Into<String>,
        category: Option<CategoryNode>,
        template: Option<AttributeTemplate>,
        reference_attrs: Option<ExtractedAttributes>,
    ) -> Self {
        let template = template.filter(|t| !t.is_empty());
        let reference_attrs = reference_attrs.filter(|r| !r.is_empty());
        let variant = match (&template, &reference_attrs) {
            (Some(_), Some(_)) => InstructionVariant::ImageTemplateReference,
            (Some(_), None) => InstructionVariant::ImageTemplate,
            _ => InstructionVariant::ImageOnly,
        };
        Self {
            image_ref: image_ref.into(),
            category,
            template,
            reference_attrs,
            variant,
        }
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        let has_template = self.template.as_ref().is_some_and(|t| !t.is_empty());
        let has_refs = self.reference_attrs.as_ref().is_some_and(|r| !r.is_empty());
        match self.variant {
            InstructionVariant::ImageOnly => Ok(()),
            InstructionVariant::ImageTemplate if has_template => Ok(()),
            InstructionVariant::ImageTemplateReference if has_template && has_refs => {
                let template = self.template.as_ref().expect("checked");
                let refs = self.reference_attrs.as_ref().expect("checked");
                match refs.names().find(|n| !template.contains(n)) {
                    Some(stray) => Err(PromptError::InconsistentContext(format!(
                        "reference attribute {stray} is not in the template"
                    ))),
                    None => Ok(()),
                }
            }
            InstructionVariant::ImageTemplate => Err(PromptError::InconsistentContext(
                "image_template variant needs a nonempty template".into(),
            )),
            InstructionVariant::ImageTemplateReference => Err(PromptError::InconsistentContext(
                "image_template_reference variant needs a template and nonempty reference attributes".into(),
            )),
        }
    }

    pub fn category_name(&self) -> Option<&str> {
        self.category.as_ref().map(|c| c.name.as_str())
    }
}

/// Instruction wording with named slots `{category}`, `{template}` and
/// `{references}`. One full sentence template per variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub image_only: String,
    pub image_template: String,
    pub image_template_reference: String,
    /// Rendering of `{category}` when a category is known; `{name}` slot.
    pub category_format: String,
    /// Rendering of `{category}` when no category is known.
    pub no_category: String,
    pub attribute_separator: String,
    /// One reference clause; `{name}` and `{value}` slots.
    pub reference_item: String,
    pub reference_separator: String,
    pub reference_last_separator: String,
    #[serde(default)]
    pub lowercase_reference_names: bool,
}

impl PromptTemplate {
    /// Wording used for training-set construction.
    pub fn dataset() -> Self {
        let persona = "You are an experienced seller on a second-hand trading platform and need to post a listing for {category}. The product images are as shown.";
        Self {
            image_only: format!(
                "{persona} Please write a product description for this item, enhancing and expanding it reasonably."
            ),
            image_template: format!(
                "{persona} The copywriting template is {{template}}. Please write a product description for this item, enhancing and expanding it reasonably according to the template."
            ),
            image_template_reference: format!(
                "{persona} The copywriting template is {{template}}, where {{references}}. Please write a product description for this item, enhancing and expanding it reasonably according to the template."
            ),
            category_format: "a {name} product".into(),
            no_category: "a product".into(),
            attribute_separator: "+".into(),
            reference_item: "{name} is {value}".into(),
            reference_separator: ", ".into(),
            reference_last_separator: ", and ".into(),
            lowercase_reference_names: false,
        }
    }

    /// Wording used by the online listing pipeline.
    pub fn online() -> Self {
        let persona = "You are an experienced seller on a second-hand trading platform and need to post {category} with the product image as shown in the picture";
        Self {
            image_only: format!("{persona}, please write a paragraph description for this product."),
            image_template: format!(
                "{persona}, and the copy template is {{template}}. Please write a paragraph description for this product."
            ),
            image_template_reference: format!(
                "{persona}, and the copy template is {{template}}. In which, {{references}}, please write a paragraph description for this product."
            ),
            category_format: "a {name} category".into(),
            no_category: "a product".into(),
            attribute_separator: " + ".into(),
            reference_item: "the {name} is {value}".into(),
            reference_separator: ", ".into(),
            reference_last_separator: ", ".into(),
            lowercase_reference_names: true,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, PromptError> {
        let t: Self = serde_json::from_str(text).map_err(|e| PromptError::Template(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| PromptError::Template(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        let require = |field: &str, text: &str, slot: &str, present: bool| {
            if text.contains(slot) != present {
                Err(PromptError::Template(format!(
                    "{field} must {}contain {slot}",
                    if present { "" } else { "not " }
                )))
            } else {
                Ok(())
            }
        };
        require("image_only", &self.image_only, "{template}", false)?;
        require("image_only", &self.image_only, "{references}", false)?;
        require("image_template", &self.image_template, "{template}", true)?;
        require("image_template", &self.image_template, "{references}", false)?;
        require("image_template_reference", &self.image_template_reference, "{template}", true)?;
        require("image_template_reference", &self.image_template_reference, "{references}", true)?;
        require("reference_item", &self.reference_item, "{value}", true)?;
        Ok(())
    }

    fn render_template(&self, template: &AttributeTemplate) -> String {
        template.names().join(&self.attribute_separator)
    }

    fn render_references(&self, template: &AttributeTemplate, refs: &ExtractedAttributes) -> String {
        let items: Vec<String> = template
            .iter()
            .filter_map(|name| refs.get(name).map(|value| (name, value)))
            .map(|(name, value)| {
                let name = if self.lowercase_reference_names {
                    name.to_lowercase()
                } else {
                    name.to_string()
                };
                self.reference_item.replace("{name}", &name).replace("{value}", value)
            })
            .collect();
        match items.len() {
            0 => String::new(),
            1 => items[0].clone(),
            n => format!(
                "{}{}{}",
                items[..n - 1].join(&self.reference_separator),
                self.reference_last_separator,
                items[n - 1]
            ),
        }
    }

    fn render_category(&self, ctx: &GenerationContext) -> String {
        match ctx.category_name() {
            Some(name) => self.category_format.replace("{name}", name),
            None => self.no_category.clone(),
        }
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self::online()
    }
}

/// Renders the description-generation instruction for `ctx`.
pub fn build_generation_instruction(ctx: &GenerationContext, wording: &PromptTemplate) -> Result<String, PromptError> {
    ctx.validate()?;
    let category = wording.render_category(ctx);
    let text = match ctx.variant {
        InstructionVariant::ImageOnly => wording.image_only.replace("{category}", &category),
        InstructionVariant::ImageTemplate => {
            let template = ctx.template.as_ref().expect("validated");
            wording
                .image_template
                .replace("{category}", &category)
                .replace("{template}", &wording.render_template(template))
        }
        InstructionVariant::ImageTemplateReference => {
            let template = ctx.template.as_ref().expect("validated");
            let refs = ctx.reference_attrs.as_ref().expect("validated");
            wording
                .image_template_reference
                .replace("{category}", &category)
                .replace("{template}", &wording.render_template(template))
                .replace("{references}", &wording.render_references(template, refs))
        }
    };
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phone() -> CategoryNode {
        CategoryNode {
            id: "cellphone".into(),
            name: "cell phone".into(),
            parent_id: None,
            attribute_template: template(),
        }
    }

    fn template() -> AttributeTemplate {
        AttributeTemplate::new(["Brand", "Model", "Storage Capacity", "Color", "Version", "Screen Condition"]).unwrap()
    }

    fn refs() -> ExtractedAttributes {
        ExtractedAttributes::from_pairs(
            "cellphone",
            &template(),
            [("Brand", "Huawei"), ("Model", "Mate10pro"), ("Storage Capacity", "6+64GB")],
        )
        .unwrap()
    }

    #[test]
    fn online_reference_instruction() {
        let ctx = GenerationContext::richest("img", Some(phone()), Some(template()), Some(refs()));
        assert_eq!(ctx.variant, InstructionVariant::ImageTemplateReference);
        let text = build_generation_instruction(&ctx, &PromptTemplate::online()).unwrap();
        assert_eq!(
            text,
            "You are an experienced seller on a second-hand trading platform and need to post a cell phone category with the product image as shown in the picture, and the copy template is Brand + Model + Storage Capacity + Color + Version + Screen Condition. In which, the brand is Huawei, the model is Mate10pro, the storage capacity is 6+64GB, please write a paragraph description for this product."
        );
        assert!(text.contains("Brand + Model + Storage Capacity + Color + Version + Screen Condition"));
        assert!(text.contains("the brand is Huawei, the model is Mate10pro"));
    }

    #[test]
    fn image_only_has_no_template_or_reference() {
        let mut ctx = GenerationContext::richest("img", Some(phone()), Some(template()), Some(refs()));
        ctx.variant = InstructionVariant::ImageOnly;
        for wording in [PromptTemplate::online(), PromptTemplate::dataset()] {
            let text = build_generation_instruction(&ctx, &wording).unwrap();
            assert!(!text.contains("template"));
            assert!(!text.contains("Huawei"));
            assert!(!text.contains("Brand"));
        }
    }

    #[test]
    fn empty_references_are_inconsistent() {
        let ctx = GenerationContext {
            image_ref: "img".into(),
            category: Some(phone()),
            template: Some(template()),
            reference_attrs: Some(ExtractedAttributes::empty("cellphone")),
            variant: InstructionVariant::ImageTemplateReference,
        };
        assert!(matches!(
            build_generation_instruction(&ctx, &PromptTemplate::online()),
            Err(PromptError::InconsistentContext(_))
        ));
        let ctx = GenerationContext {
            template: None,
            reference_attrs: None,
            variant: InstructionVariant::ImageTemplate,
            ..ctx
        };
        assert!(ctx.validate().is_err());
    }

    #[test]
    fn dataset_wording_clauses() {
        let t = AttributeTemplate::new(["Brand", "Model", "Version Type", "Memory Capacity", "Color", "Condition", "Purchase Channel"]).unwrap();
        let r = ExtractedAttributes::from_pairs(
            "cellphone",
            &t,
            [("Brand", "Apple"), ("Model", "iPhone 11"), ("Memory Capacity", "256GB")],
        )
        .unwrap();
        let cat = CategoryNode {
            name: "mobile phone".into(),
            ..phone()
        };
        let ctx = GenerationContext::richest("img", Some(cat), Some(t), Some(r));
        let text = build_generation_instruction(&ctx, &PromptTemplate::dataset()).unwrap();
        assert_eq!(
            text,
            "You are an experienced seller on a second-hand trading platform and need to post a listing for a mobile phone product. The product images are as shown. The copywriting template is Brand+Model+Version Type+Memory Capacity+Color+Condition+Purchase Channel, where Brand is Apple, Model is iPhone 11, and Memory Capacity is 256GB. Please write a product description for this item, enhancing and expanding it reasonably according to the template."
        );
    }

    #[test]
    fn template_file_validation() {
        let json = serde_json::to_string(&PromptTemplate::dataset()).unwrap();
        assert_eq!(PromptTemplate::from_json(&json).unwrap(), PromptTemplate::dataset());
        let mut broken = PromptTemplate::online();
        broken.image_only.push_str(" {template}");
        let json = serde_json::to_string(&broken).unwrap();
        assert!(PromptTemplate::from_json(&json).is_err());
    }

    #[test]
    fn uncategorized_context() {
        let ctx = GenerationContext::image_only("img");
        let text = build_generation_instruction(&ctx, &PromptTemplate::dataset()).unwrap();
        assert!(text.contains("post a listing for a product."));
    }
}
