//! Seeded synthetic marketplace used by examples, tests and benchmarks.
//!
//! Products are grouped into SPU clusters: every member of a cluster
//! shares key attribute values and has an image embedding close to the
//! cluster center. Queries are fresh draws from existing clusters, so
//! their nearest catalog neighbors carry the right attributes.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::attributes::{AttributeRules, ExtractedAttributes, ExtractionLexicon, LexiconFile};
use crate::catalog::{normalize, AttributeTemplate, CategoryNode, ProductRecord, Taxonomy};

struct CategorySpec {
    id: &'static str,
    name: &'static str,
    attributes: &'static [(&'static str, &'static [&'static str])],
}

const CATEGORIES: [CategorySpec; 3] = [
    CategorySpec {
        id: "cellphone",
        name: "cell phone",
        attributes: &[
            ("Brand", &["Huawei", "Apple", "Xiaomi", "Samsung", "Oppo", "Vivo"]),
            ("Model", &["Mate10pro", "P40", "iPhone 11", "iPhone 13", "Redmi K40", "Galaxy S21", "Reno 6", "X60"]),
            ("Storage Capacity", &["6+64GB", "8+128GB", "8+256GB", "12+256GB", "4+64GB"]),
            ("Color", &["Blue", "Black", "White", "Silver", "Purple", "Green"]),
            ("Version", &["China version", "Hong Kong version", "international version"]),
            ("Screen Condition", &["no scratches", "minor scratches", "cracked screen", "replaced screen"]),
        ],
    },
    CategorySpec {
        id: "laptop",
        name: "laptop",
        attributes: &[
            ("Brand", &["Lenovo", "Dell", "Asus", "HP", "Acer"]),
            ("Model", &["ThinkPad X1", "XPS 13", "ZenBook 14", "Pavilion 15", "Swift 3", "Legion Y7000"]),
            ("Memory", &["8GB RAM", "16GB RAM", "32GB RAM"]),
            ("Storage", &["256GB SSD", "512GB SSD", "1TB SSD"]),
            ("Color", &["Grey", "Black", "Silver"]),
        ],
    },
    CategorySpec {
        id: "sneakers",
        name: "sneakers",
        attributes: &[
            ("Brand", &["Nike", "Adidas", "Li Ning", "Anta", "New Balance"]),
            ("Model", &["Air Force 1", "Ultraboost", "Way of Wade", "KT7", "990v5"]),
            ("Size", &["EU 40", "EU 41", "EU 42", "EU 43", "EU 44"]),
            ("Color", &["White", "Black", "Red", "Grey"]),
            ("Condition", &["brand new", "worn twice", "lightly worn"]),
        ],
    },
];

const OPENERS: [&str; 4] = ["Selling my", "For sale:", "Personal used", "Up for grabs,"];
const CLOSERS: [&str; 4] = [
    "All original, for those interested, please contact me privately.",
    "Works perfectly, condition as shown in the pictures.",
    "No longer needed, price is negotiable, message me.",
    "Well kept, comes with the original box.",
];

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub dimension: usize,
    pub spu_count: usize,
    pub products_per_spu: usize,
    pub query_count: usize,
    /// Per-component standard deviation of member noise around the center.
    pub noise_sigma: f64,
    /// Chance that a catalog description leaves out one attribute.
    pub omission_rate: f64,
    /// Expected cosine between centers of two SPUs in the same category.
    pub category_affinity: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            dimension: 64,
            spu_count: 60,
            products_per_spu: 4,
            query_count: 200,
            noise_sigma: 0.041,
            omission_rate: 0.1,
            category_affinity: 0.3,
        }
    }
}

impl SyntheticConfig {
    /// 10k products and 1k queries.
    pub fn large() -> Self {
        Self {
            spu_count: 2_000,
            products_per_spu: 5,
            query_count: 1_000,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticQuery {
    pub id: String,
    pub spu: usize,
    pub category_id: String,
    pub image_ref: String,
    pub embedding: Vec<f32>,
    pub gold_description: String,
    pub gold_attributes: ExtractedAttributes,
}

#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub taxonomy: Taxonomy,
    pub lexicon: ExtractionLexicon,
    pub products: Vec<ProductRecord>,
    pub queries: Vec<SyntheticQuery>,
}

struct Spu {
    category: &'static CategorySpec,
    values: IndexMap<String, String>,
    center: Vec<f64>,
}

fn gaussian_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn member_embedding(rng: &mut ChaCha8Rng, center: &[f64], sigma: f64) -> Vec<f32> {
    let mut v: Vec<f32> = center
        .iter()
        .map(|c| {
            let noise: f64 = StandardNormal.sample(rng);
            (c + sigma * noise) as f32
        })
        .collect();
    normalize(&mut v);
    v
}

fn describe(rng: &mut ChaCha8Rng, values: &IndexMap<String, String>, omit: Option<usize>) -> String {
    let kept: Vec<&str> = values
        .values()
        .enumerate()
        .filter(|(i, _)| Some(*i) != omit)
        .map(|(_, v)| v.as_str())
        .collect();
    let opener = OPENERS.choose(rng).expect("nonempty");
    let closer = CLOSERS.choose(rng).expect("nonempty");
    format!("{opener} {}. {closer}", kept.join(", "))
}

pub fn category_templates() -> Vec<CategoryNode> {
    CATEGORIES
        .iter()
        .map(|c| CategoryNode {
            id: c.id.into(),
            name: c.name.into(),
            parent_id: None,
            attribute_template: AttributeTemplate::new(c.attributes.iter().map(|(n, _)| *n)).expect("static template"),
        })
        .collect()
}

pub fn synthetic_taxonomy() -> Taxonomy {
    Taxonomy::from_nodes(category_templates()).expect("static taxonomy")
}

/// Gazetteer covering every value the generator can emit.
pub fn synthetic_lexicon_file() -> LexiconFile {
    let mut categories = BTreeMap::new();
    for c in &CATEGORIES {
        let attrs = c
            .attributes
            .iter()
            .map(|(name, pool)| {
                (
                    name.to_string(),
                    AttributeRules {
                        values: pool.iter().map(|s| s.to_string()).collect(),
                        patterns: Vec::new(),
                    },
                )
            })
            .collect();
        categories.insert(c.id.to_string(), attrs);
    }
    LexiconFile { categories }
}

pub fn generate_world(config: &SyntheticConfig) -> SyntheticWorld {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let category_axes: Vec<Vec<f64>> = CATEGORIES.iter().map(|_| gaussian_unit(&mut rng, config.dimension)).collect();
    let (a, b) = (config.category_affinity.sqrt(), (1.0 - config.category_affinity).sqrt());
    let spus: Vec<Spu> = (0..config.spu_count)
        .map(|i| {
            let c = i % CATEGORIES.len();
            let category = &CATEGORIES[c];
            let values = category
                .attributes
                .iter()
                .map(|(name, pool)| (name.to_string(), pool.choose(&mut rng).expect("nonempty").to_string()))
                .collect();
            let own = gaussian_unit(&mut rng, config.dimension);
            let mut center: Vec<f64> = category_axes[c].iter().zip(&own).map(|(x, y)| a * x + b * y).collect();
            let n = center.iter().map(|x| x * x).sum::<f64>().sqrt();
            center.iter_mut().for_each(|x| *x /= n);
            Spu {
                category,
                values,
                center,
            }
        })
        .collect();

    let mut products = Vec::with_capacity(config.spu_count * config.products_per_spu);
    for (s, spu) in spus.iter().enumerate() {
        for m in 0..config.products_per_spu {
            let omit = rng
                .random_bool(config.omission_rate)
                .then(|| rng.random_range(0..spu.values.len()));
            let mut record = ProductRecord::new(
                format!("spu{s:05}-{m:02}"),
                spu.category.id,
                describe(&mut rng, &spu.values, omit),
            )
            .with_embedding(member_embedding(&mut rng, &spu.center, config.noise_sigma));
            record.title = Some(format!("{} {}", spu.values[0], spu.values[1]));
            record.attributes = spu
                .values
                .iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != omit)
                .map(|(_, (k, v))| (k.clone(), v.clone()))
                .collect();
            record.image_count = rng.random_range(1..=6);
            record.price = Some(rng.random_range(50..5000) as f64);
            record.spu_group = Some(format!("spu{s:05}"));
            products.push(record);
        }
    }

    let template_of = |c: &CategorySpec| AttributeTemplate::new(c.attributes.iter().map(|(n, _)| *n)).expect("static");
    let queries = (0..config.query_count)
        .map(|q| {
            let s = rng.random_range(0..spus.len().max(1));
            let spu = &spus[s];
            let gold_attributes = ExtractedAttributes::from_pairs(
                spu.category.id,
                &template_of(spu.category),
                spu.values.iter().map(|(k, v)| (k.as_str(), v.as_str())),
            )
            .expect("values follow the template");
            SyntheticQuery {
                id: format!("q{q:05}"),
                spu: s,
                category_id: spu.category.id.to_string(),
                image_ref: format!("queries/q{q:05}.jpg"),
                embedding: member_embedding(&mut rng, &spu.center, config.noise_sigma),
                gold_description: describe(&mut rng, &spu.values, None),
                gold_attributes,
            }
        })
        .collect();

    SyntheticWorld {
        taxonomy: synthetic_taxonomy(),
        lexicon: ExtractionLexicon::compile(synthetic_lexicon_file()).expect("static lexicon"),
        products,
        queries,
    }
}
