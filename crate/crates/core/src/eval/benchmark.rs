use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sim::SimScorer;
use super::{stable_mean, EvalError};
use crate::catalog::Embedder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    /// Topic selection.
    TS,
    /// Content tagging.
    CT,
    /// Category recognition.
    CR,
    /// Vision-based attribute extraction.
    VAE,
    /// Product description generation.
    PDG,
    /// Sentiment analysis.
    SA,
    /// Text-based attribute extraction.
    TAE,
}

impl TaskKind {
    pub const ALL: [TaskKind; 7] = [
        TaskKind::TS,
        TaskKind::CT,
        TaskKind::CR,
        TaskKind::VAE,
        TaskKind::PDG,
        TaskKind::SA,
        TaskKind::TAE,
    ];

    pub fn metric_name(self) -> &'static str {
        match self {
            TaskKind::PDG => "SIM",
            _ => "Accuracy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSample {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub task: TaskKind,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<String>,
    pub gold: Vec<String>,
}

impl BenchmarkSample {
    pub fn validate(&self) -> Result<(), String> {
        if self.gold.is_empty() {
            return Err("no gold answer".into());
        }
        if !self.options.is_empty() {
            if let Some(g) = self.gold.iter().find(|g| !self.options.contains(g)) {
                return Err(format!("gold answer {g:?} is not among the options"));
            }
        }
        Ok(())
    }
}

pub fn parse_benchmark_jsonl(text: &str) -> Result<Vec<BenchmarkSample>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let invalid = |reason: String| EvalError::InvalidSample { line: i + 1, reason };
        let sample: BenchmarkSample = serde_json::from_str(line).map_err(|e| invalid(e.to_string()))?;
        sample.validate().map_err(invalid)?;
        out.push(sample);
    }
    Ok(out)
}

/// Anything that can answer a benchmark prompt.
pub trait AnsweringModel: Sync {
    fn answer(&self, sample: &BenchmarkSample) -> Result<String, String>;
}

impl<F> AnsweringModel for F
where
    F: Fn(&BenchmarkSample) -> Result<String, String> + Sync,
{
    fn answer(&self, sample: &BenchmarkSample) -> Result<String, String> {
        self(sample)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: TaskKind,
    pub metric: String,
    pub value: f64,
    pub sample_count: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tasks: Vec<TaskReport>,
    pub total_samples: usize,
    pub total_errors: usize,
}

impl EvalReport {
    pub fn task(&self, task: TaskKind) -> Option<&TaskReport> {
        self.tasks.iter().find(|t| t.task == task)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:<6}{:<10}{:>8}{:>9}{:>8}\n", "task", "metric", "value", "samples", "errors");
        for t in &self.tasks {
            out.push_str(&format!(
                "{:<6}{:<10}{:>8.4}{:>9}{:>8}\n",
                format!("{:?}", t.task),
                t.metric,
                t.value,
                t.sample_count,
                t.errors
            ));
        }
        out
    }
}

fn normalize_answer(s: &str) -> String {
    s.trim().to_lowercase()
}

/// Scores every sample in parallel. Choice and extraction tasks use exact
/// match after trimming and case folding; description generation uses SIM
/// against the best gold. A failing model call scores zero and is tallied.
pub fn run_benchmark(samples: &[BenchmarkSample], model: &dyn AnsweringModel, embedder: &dyn Embedder) -> EvalReport {
    let scorer = SimScorer::new(embedder);
    let scored: Vec<(TaskKind, f64, bool)> = samples
        .par_iter()
        .map(|sample| match model.answer(sample) {
            Err(_) => (sample.task, 0.0, true),
            Ok(answer) => {
                let value = if sample.task == TaskKind::PDG {
                    sample
                        .gold
                        .iter()
                        .map(|g| scorer.score_value(&answer, g))
                        .fold(0.0, f64::max)
                } else {
                    let a = normalize_answer(&answer);
                    if sample.gold.iter().any(|g| normalize_answer(g) == a) {
                        1.0
                    } else {
                        0.0
                    }
                };
                (sample.task, value, false)
            }
        })
        .collect();
    let mut grouped: BTreeMap<TaskKind, (Vec<f64>, usize)> = BTreeMap::new();
    for (task, value, failed) in scored {
        let slot = grouped.entry(task).or_default();
        slot.0.push(value);
        slot.1 += failed as usize;
    }
    let tasks: Vec<TaskReport> = grouped
        .into_iter()
        .map(|(task, (values, errors))| TaskReport {
            task,
            metric: task.metric_name().into(),
            sample_count: values.len(),
            value: stable_mean(values),
            errors,
        })
        .collect();
    EvalReport {
        total_samples: samples.len(),
        total_errors: tasks.iter().map(|t| t.errors).sum(),
        tasks,
    }
}
