//! Retrieval-augmented product listing generation.
//!
//! A seller's product photo (as an embedding) goes through category
//! prediction, identical/similar product search, key-attribute extraction
//! from the retrieved listing, and instruction assembly before a generator
//! streams a marketplace-style description. The crate also carries the
//! offline machinery around that pipeline: training-corpus cleaning and
//! instruction dataset construction in ChatML, plus evaluation metrics,
//! benchmark runners and an ablation runner.
//!
//! Modules map onto the pipeline:
//!
//! - [`catalog`]: product records, taxonomy with attribute templates, drafts
//! - [`retrieval`]: exact cosine index and k-NN category prediction
//! - [`attributes`]: lexicon-based attribute extraction, JSON output
//! - [`prompt`]: generation instructions, ChatML and loss spans
//! - [`gateway`]: streaming generation with safety, truncation, timeout
//! - [`dataset`]: corpus cleaning, stratified sampling, instruction datasets
//! - [`eval`]: BLEU, ROUGE, SIM, attribute accuracy, quality score, benchmarks
//! - [`service`]: the online pipeline and its HTTP API
//! - [`synthetic`]: seeded synthetic catalogs for tests, demos and ablations

pub mod attributes;
pub mod catalog;
pub mod dataset;
pub mod eval;
pub mod gateway;
pub mod prompt;
pub mod retrieval;
pub mod service;
pub mod synthetic;
pub mod text;
