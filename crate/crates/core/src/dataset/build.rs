use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::attributes::AttributeExtractor;
use crate::catalog::{fnv1a, AttributeTemplate, ProductRecord, Taxonomy};
use crate::prompt::{build_generation_instruction, GenerationContext, InstructionRecord, InstructionVariant, PromptTemplate};

const MIX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantMix {
    pub image_only: f64,
    pub image_template: f64,
    pub image_template_reference: f64,
}

impl Default for VariantMix {
    fn default() -> Self {
        Self {
            image_only: 1.0 / 3.0,
            image_template: 1.0 / 3.0,
            image_template_reference: 1.0 / 3.0,
        }
    }
}

impl VariantMix {
    pub fn only(variant: InstructionVariant) -> Self {
        let mut m = Self {
            image_only: 0.0,
            image_template: 0.0,
            image_template_reference: 0.0,
        };
        *m.slot(variant) = 1.0;
        m
    }

    fn slot(&mut self, v: InstructionVariant) -> &mut f64 {
        match v {
            InstructionVariant::ImageOnly => &mut self.image_only,
            InstructionVariant::ImageTemplate => &mut self.image_template,
            InstructionVariant::ImageTemplateReference => &mut self.image_template_reference,
        }
    }

    pub fn fraction(&self, v: InstructionVariant) -> f64 {
        match v {
            InstructionVariant::ImageOnly => self.image_only,
            InstructionVariant::ImageTemplate => self.image_template,
            InstructionVariant::ImageTemplateReference => self.image_template_reference,
        }
    }

    fn draw(&self, u: f64) -> InstructionVariant {
        let mut acc = 0.0;
        for v in InstructionVariant::ALL {
            acc += self.fraction(v);
            if u < acc {
                return v;
            }
        }
        InstructionVariant::ALL
            .into_iter()
            .rev()
            .find(|v| self.fraction(*v) > 0.0)
            .unwrap_or(InstructionVariant::ImageOnly)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyMix {
    pub description_generation: f64,
    pub domain_understanding: f64,
    pub general_qa: f64,
}

impl Default for FamilyMix {
    fn default() -> Self {
        Self {
            description_generation: 1.0 / 3.0,
            domain_understanding: 1.0 / 3.0,
            general_qa: 1.0 / 3.0,
        }
    }
}

impl FamilyMix {
    fn fractions(&self) -> [f64; 3] {
        [self.description_generation, self.domain_understanding, self.general_qa]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetMix {
    pub variants: VariantMix,
    pub families: FamilyMix,
}

fn check_axis(name: &str, values: &[f64]) -> Result<(), DatasetError> {
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(DatasetError::InvalidMix(format!("{name} has a negative fraction")));
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > MIX_TOLERANCE {
        return Err(DatasetError::InvalidMix(format!("{name} fractions sum to {sum}")));
    }
    Ok(())
}

impl DatasetMix {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let v = &self.variants;
        check_axis("variants", &[v.image_only, v.image_template, v.image_template_reference])?;
        check_axis("families", &self.families.fractions())
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let mix: Self = serde_json::from_str(text).map_err(|e| DatasetError::InvalidMix(e.to_string()))?;
        mix.validate()?;
        Ok(mix)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildOptions {
    pub wording: PromptTemplate,
    /// When set, only these extracted attributes are stated as reference
    /// values; the template clause still lists every extracted name.
    pub reference_allowlist: Option<Vec<String>>,
    pub seed: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            wording: PromptTemplate::dataset(),
            reference_allowlist: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub drawn: BTreeMap<InstructionVariant, usize>,
    pub realized: BTreeMap<InstructionVariant, usize>,
    /// Records built with a poorer variant than drawn.
    pub demoted: usize,
    /// Records whose category has no usable template.
    pub without_template: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBuild {
    pub records: Vec<InstructionRecord>,
    pub stats: BuildStats,
}

pub fn description_task_tag(variant: InstructionVariant) -> String {
    format!("description_generation.{}", variant.as_str())
}

/// Per-record generator so the draw does not depend on scheduling.
fn record_rng(seed: u64, id: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ fnv1a(id.as_bytes()))
}

struct Built {
    id: String,
    record: InstructionRecord,
    drawn: InstructionVariant,
    realized: InstructionVariant,
    without_template: bool,
}

fn build_one(
    product: &ProductRecord,
    mix: &DatasetMix,
    extractor: &dyn AttributeExtractor,
    taxonomy: &Taxonomy,
    options: &BuildOptions,
) -> Result<Built, DatasetError> {
    let drawn = mix.variants.draw(record_rng(options.seed, &product.id).random::<f64>());
    let image = product.image_ref();
    let category = taxonomy.get_category(&product.category_id).ok().cloned();
    let category_template = category.as_ref().map(|c| c.attribute_template.clone()).filter(|t| !t.is_empty());
    let without_template = category_template.is_none();

    let ctx = match (drawn, &category_template) {
        (InstructionVariant::ImageOnly, _) | (_, None) => GenerationContext {
            category: category.clone(),
            ..GenerationContext::image_only(image.clone())
        },
        (_, Some(template)) => {
            let extracted = extractor.extract(&product.description, &product.category_id, template);
            let clause = if extracted.is_empty() {
                template.clone()
            } else {
                AttributeTemplate::new(extracted.names().map(str::to_string))?
            };
            let mut refs = extracted;
            if let Some(allow) = &options.reference_allowlist {
                refs.retain(|n| allow.iter().any(|a| a == n));
            }
            let refs = (drawn == InstructionVariant::ImageTemplateReference).then_some(refs);
            GenerationContext::richest(image.clone(), category.clone(), Some(clause), refs)
        }
    };
    let instruction = build_generation_instruction(&ctx, &options.wording)?;
    let record = InstructionRecord::single_turn(
        Some(&image),
        &instruction,
        &product.description,
        description_task_tag(ctx.variant),
        product.id.clone(),
    );
    Ok(Built {
        id: product.id.clone(),
        record,
        drawn,
        realized: ctx.variant,
        without_template,
    })
}

/// One description-generation record per product, with the variant drawn
/// from `mix.variants`. Drawn variants whose inputs are missing are demoted
/// to the richest one that can be built. Output is sorted by product id.
pub fn build_instruction_dataset(
    products: &[ProductRecord],
    mix: &DatasetMix,
    extractor: &dyn AttributeExtractor,
    taxonomy: &Taxonomy,
    options: &BuildOptions,
) -> Result<DatasetBuild, DatasetError> {
    mix.validate()?;
    let mut built = products
        .par_iter()
        .map(|p| build_one(p, mix, extractor, taxonomy, options))
        .collect::<Result<Vec<_>, _>>()?;
    built.sort_by(|a, b| a.id.cmp(&b.id));
    let mut stats = BuildStats::default();
    let mut records = Vec::with_capacity(built.len());
    for b in built {
        *stats.drawn.entry(b.drawn).or_default() += 1;
        *stats.realized.entry(b.realized).or_default() += 1;
        stats.demoted += (b.realized < b.drawn) as usize;
        stats.without_template += b.without_template as usize;
        records.push(b.record);
    }
    Ok(DatasetBuild { records, stats })
}

/// Combines the three task families in the proportions of `mix.families`,
/// taking as many records as the scarcest nonzero family allows.
pub fn mix_task_families(
    description_generation: Vec<InstructionRecord>,
    domain_understanding: Vec<InstructionRecord>,
    general_qa: Vec<InstructionRecord>,
    mix: &DatasetMix,
    seed: u64,
) -> Result<Vec<InstructionRecord>, DatasetError> {
    mix.validate()?;
    let pools = [description_generation, domain_understanding, general_qa];
    let fractions = mix.families.fractions();
    let total = pools
        .iter()
        .zip(fractions)
        .filter(|(_, f)| *f > 0.0)
        .map(|(pool, f)| (pool.len() as f64 / f).floor() as usize)
        .min()
        .unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (mut pool, f) in pools.into_iter().zip(fractions) {
        let take = ((total as f64 * f).round() as usize).min(pool.len());
        pool.shuffle(&mut rng);
        out.extend(pool.into_iter().take(take));
    }
    out.sort_by(|a, b| {
        (&a.metadata.source_id, &a.metadata.task_tag).cmp(&(&b.metadata.source_id, &b.metadata.task_tag))
    });
    Ok(out)
}
