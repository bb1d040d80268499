use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ipl::attributes::{ExtractionLexicon, RuleExtractor};
use ipl::catalog::{record_line, CatalogStore, HashingEmbedder, IngestConfig, Taxonomy, DEFAULT_DIMENSION};
use ipl::dataset::{build_instruction_dataset, clean_corpus, BuildOptions, CleaningConfig, CleaningScorers, DatasetMix};
use ipl::eval::{
    ablation_fixture, bleu, parse_benchmark_jsonl, rouge_value, run_ablation, run_benchmark, AblationConfig,
    BenchmarkSample, MetricScore, RougeVariant, SimScorer, Tokenizer,
};
use ipl::prompt::to_chatml_jsonl;
use ipl::retrieval::{load_index, save_index, MatchThresholds, VectorIndex};
use ipl::service::{serve, ServiceConfig};
use ipl::synthetic::{generate_world, synthetic_lexicon_file, SyntheticConfig};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "ipl", version, about = "Product listing generation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a product JSONL into a catalog directory.
    Ingest {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DIMENSION)]
        dimension: usize,
    },
    /// Build or query a vector index.
    #[command(subcommand)]
    Index(IndexCommand),
    /// Clean corpora and build instruction datasets.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Compute text metrics and run ablations.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write a synthetic catalog, taxonomy, lexicon and query set.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        world: WorldArgs,
    },
}

#[derive(Args)]
struct WorldArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 60)]
    spus: usize,
    #[arg(long, default_value_t = 4)]
    per_spu: usize,
    #[arg(long, default_value_t = 200)]
    queries: usize,
}

impl WorldArgs {
    fn config(&self) -> SyntheticConfig {
        SyntheticConfig {
            seed: self.seed,
            spu_count: self.spus,
            products_per_spu: self.per_spu,
            query_count: self.queries,
            ..SyntheticConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum IndexCommand {
    /// Build an index sidecar from a product JSONL.
    Build {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DIMENSION)]
        dimension: usize,
    },
    /// Search with query embeddings, one JSON object per line.
    Search {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query_file: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long)]
        tau_identical: Option<f64>,
        #[arg(long)]
        tau_similar: Option<f64>,
    },
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Filter a product corpus; writes accepted.jsonl and report.json.
    Clean {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build instruction records; writes dataset.chatml.jsonl and report.json.
    Build {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        taxonomy: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        /// Mix as a JSON file or inline JSON.
        #[arg(long)]
        mix: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Score line-aligned candidate and reference files.
    Metrics {
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        references: PathBuf,
        #[arg(long)]
        cjk: bool,
    },
    /// Score answers (one JSON string or {"answer": ...} per line) against benchmark samples.
    Benchmark {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        answers: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run the context ablation on a synthetic fixture.
    Ablation {
        #[command(flatten)]
        world: WorldArgs,
        #[arg(long)]
        json: bool,
    },
}

fn load_catalog(path: &Path, dimension: usize) -> Result<CatalogStore> {
    let store = CatalogStore::in_memory();
    let cfg = IngestConfig {
        dimension,
        ..IngestConfig::default()
    };
    let stats = store.ingest_catalog(path, &cfg)?;
    if stats.rejected > 0 {
        eprintln!("{} of {} lines rejected", stats.rejected, stats.accepted + stats.rejected);
    }
    Ok(store)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| path.display().to_string())
}

#[derive(Deserialize)]
struct QueryLine {
    #[serde(default)]
    id: Option<String>,
    embedding: Vec<f32>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnswerLine {
    Bare(String),
    Object { answer: String },
}

fn mean_scores(name: &str, values: &[f64]) -> MetricScore {
    MetricScore::new(name, values.iter().sum::<f64>() / values.len().max(1) as f64, values.len())
}

#[tokio::main]
async fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest {
            catalog,
            taxonomy,
            data_dir,
            dimension,
        } => {
            let store = CatalogStore::open(&data_dir)?;
            if let Some(t) = taxonomy {
                store.load_taxonomy(t)?;
            }
            let cfg = IngestConfig {
                dimension,
                require_known_category: store.taxonomy().len() > 0,
            };
            let stats = store.ingest_catalog(&catalog, &cfg)?;
            println!("{}", serde_json::to_string_pretty(&stats)?);
        }
        Command::Index(IndexCommand::Build { catalog, out, dimension }) => {
            let store = load_catalog(&catalog, dimension)?;
            let index = VectorIndex::build(dimension, &store.products())?;
            save_index(&index, &out)?;
            println!("indexed {} products into {}", index.len(), out.display());
        }
        Command::Index(IndexCommand::Search {
            index,
            query_file,
            k,
            tau_identical,
            tau_similar,
        }) => {
            let index = load_index(&index)?;
            let d = MatchThresholds::default();
            let thresholds = MatchThresholds::new(
                tau_identical.unwrap_or(d.tau_identical()),
                tau_similar.unwrap_or(d.tau_similar()),
            )?;
            let stdout = std::io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            for (i, line) in fs::read_to_string(&query_file)?.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let q: QueryLine = serde_json::from_str(line).with_context(|| format!("query line {}", i + 1))?;
                let hits = index.search(&q.embedding, k, &thresholds)?;
                let id = q.id.unwrap_or_else(|| (i + 1).to_string());
                writeln!(out, "{}", serde_json::json!({"query": id, "results": hits}))?;
            }
        }
        Command::Dataset(DatasetCommand::Clean { catalog, config, out }) => {
            let cfg = match config {
                Some(p) => CleaningConfig::from_toml(&fs::read_to_string(p)?)?,
                None => CleaningConfig::default(),
            };
            let products = load_catalog(&catalog, DEFAULT_DIMENSION)?.products();
            let (accepted, report) = clean_corpus(products, &cfg, &CleaningScorers::default())?;
            fs::create_dir_all(&out)?;
            let lines: String = accepted.iter().map(|p| record_line(p) + "\n").collect();
            fs::write(out.join("accepted.jsonl"), lines)?;
            write_json(&out.join("report.json"), &report)?;
            println!("accepted {} of {}", report.accepted, report.input);
        }
        Command::Dataset(DatasetCommand::Build {
            catalog,
            taxonomy,
            lexicon,
            mix,
            seed,
            out,
        }) => {
            let mix = match mix {
                None => DatasetMix::default(),
                Some(m) if m.trim_start().starts_with('{') => DatasetMix::from_json(&m)?,
                Some(path) => DatasetMix::from_json(&fs::read_to_string(path)?)?,
            };
            let taxonomy = Taxonomy::load(taxonomy)?;
            let extractor = RuleExtractor::new(ExtractionLexicon::load(lexicon)?);
            let products = load_catalog(&catalog, DEFAULT_DIMENSION)?.products();
            let options = BuildOptions {
                seed,
                ..BuildOptions::default()
            };
            let built = build_instruction_dataset(&products, &mix, &extractor, &taxonomy, &options)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("dataset.chatml.jsonl"), to_chatml_jsonl(&built.records)?)?;
            write_json(&out.join("report.json"), &built.stats)?;
            println!("wrote {} records", built.records.len());
        }
        Command::Eval(EvalCommand::Metrics {
            candidates,
            references,
            cjk,
        }) => {
            let cands = fs::read_to_string(candidates)?;
            let refs = fs::read_to_string(references)?;
            let (cands, refs): (Vec<&str>, Vec<&str>) = (cands.lines().collect(), refs.lines().collect());
            if cands.len() != refs.len() {
                bail!("{} candidates but {} references", cands.len(), refs.len());
            }
            let tokenizer = if cjk { Tokenizer::cjk() } else { Tokenizer::default() };
            let embedder = HashingEmbedder::new(DEFAULT_DIMENSION);
            let sim = SimScorer::new(&embedder).with_tokenizer(tokenizer);
            let mut columns: Vec<Vec<f64>> = vec![Vec::new(); 8];
            for (c, r) in cands.iter().zip(&refs) {
                let (ct, rt) = (tokenizer.tokenize(c), tokenizer.tokenize(r));
                let b = bleu(&ct, std::slice::from_ref(&rt), 4);
                let row = [
                    sim.score_value(c, r),
                    b[0].value,
                    b[1].value,
                    b[2].value,
                    b[3].value,
                    rouge_value(&ct, &rt, RougeVariant::R1),
                    rouge_value(&ct, &rt, RougeVariant::R2),
                    rouge_value(&ct, &rt, RougeVariant::RL),
                ];
                for (col, v) in columns.iter_mut().zip(row) {
                    col.push(v);
                }
            }
            let names = ["SIM", "BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4", "ROUGE-1", "ROUGE-2", "ROUGE-L"];
            let scores: Vec<MetricScore> = names.iter().zip(&columns).map(|(n, v)| mean_scores(n, v)).collect();
            println!("{}", serde_json::to_string_pretty(&scores)?);
        }
        Command::Eval(EvalCommand::Benchmark { samples, answers, json }) => {
            let samples = parse_benchmark_jsonl(&fs::read_to_string(samples)?)?;
            let answers: Vec<String> = fs::read_to_string(answers)?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| match serde_json::from_str::<AnswerLine>(l) {
                    Ok(AnswerLine::Bare(s)) | Ok(AnswerLine::Object { answer: s }) => s,
                    Err(_) => l.to_string(),
                })
                .collect();
            if answers.len() != samples.len() {
                bail!("{} samples but {} answers", samples.len(), answers.len());
            }
            // Answers are matched to samples by position through a line-number id.
            let samples: Vec<BenchmarkSample> = samples
                .into_iter()
                .enumerate()
                .map(|(i, s)| BenchmarkSample {
                    id: Some(format!("{i}")),
                    ..s
                })
                .collect();
            let model = |s: &BenchmarkSample| {
                s.id.as_deref()
                    .and_then(|id| id.parse::<usize>().ok())
                    .and_then(|i| answers.get(i).cloned())
                    .ok_or_else(|| "no answer".to_string())
            };
            let report = run_benchmark(&samples, &model, &HashingEmbedder::new(DEFAULT_DIMENSION));
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.to_text());
            }
        }
        Command::Eval(EvalCommand::Ablation { world, json }) => {
            let fixture = ablation_fixture(&world.config());
            let table = run_ablation(&fixture, &AblationConfig::ALL).await?;
            if json {
                println!("{}", serde_json::to_string_pretty(&table)?);
            } else {
                print!("{}", table.to_text());
            }
        }
        Command::Serve { config } => {
            let config = match config {
                Some(p) => ServiceConfig::load(p)?,
                None => ServiceConfig::default(),
            };
            eprintln!("listening on {}", config.bind);
            serve(&config).await?;
        }
        Command::Fixture { out, world } => {
            let world = generate_world(&world.config());
            fs::create_dir_all(&out)?;
            let catalog: String = world.products.iter().map(|p| record_line(p) + "\n").collect();
            fs::write(out.join("catalog.jsonl"), catalog)?;
            write_json(&out.join("taxonomy.json"), &world.taxonomy.to_file_doc())?;
            write_json(&out.join("lexicon.json"), &synthetic_lexicon_file())?;
            let queries: String = world
                .queries
                .iter()
                .map(|q| {
                    serde_json::json!({
                        "id": q.id,
                        "image_ref": q.image_ref,
                        "embedding": q.embedding,
                        "gold_description": q.gold_description,
                        "gold_attributes": q.gold_attributes,
                    })
                    .to_string()
                        + "\n"
                })
                .collect();
            fs::write(out.join("queries.jsonl"), queries)?;
            println!("wrote {} products and {} queries to {}", world.products.len(), world.queries.len(), out.display());
        }
    }
    Ok(())
}
