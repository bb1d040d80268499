use serde::{Deserialize, Serialize};

use crate::prompt::InstructionRecord;

pub const GENERAL_QA_TASKS: [&str; 13] = [
    "image information description",
    "image emotion analysis",
    "image action recognition",
    "existence check of elements in the image",
    "image text extraction",
    "analysis of object interactions in the image",
    "object attribute recognition in the image",
    "image multiple-choice question answering",
    "visual reasoning",
    "visual common sense reasoning",
    "image style appreciation",
    "content creation based on the image",
    "writing product descriptions based on the image",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QaPromptConfig {
    pub task_types: Vec<String>,
    pub max_instructions: usize,
    pub max_answer_words: usize,
    pub max_per_task: usize,
}

impl Default for QaPromptConfig {
    fn default() -> Self {
        Self {
            task_types: GENERAL_QA_TASKS.iter().map(|s| s.to_string()).collect(),
            max_instructions: 20,
            max_answer_words: 100,
            max_per_task: 3,
        }
    }
}

fn join_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    }
}

/// Prompt asking an external model to write question/answer pairs about
/// the image. Its answer is read back with [`parse_general_qa`].
pub fn scaffold_general_qa(config: &QaPromptConfig) -> String {
    format!(
        "Based on the given image, design multiple types of task questions and answers. The task types include: {}. \
Below, provide up to {} diverse instructions for all the above tasks, including different language styles and precise answers. \
The instructions should include both questions and statements. Answers should be less than {} words. \
Each task should have fewer than {} instructions. Output format:\n\n\
Instruction1: Example Instruction1\n\nAnswer1: Example Answer1\n\nTask1: Example Task1\n\n\
Instruction2: Example Instruction2\n\nAnswer2: Example Answer2\n\nTask2: Example Task2\n\n...",
        join_list(&config.task_types),
        config.max_instructions,
        config.max_answer_words,
        config.max_per_task
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct QaParse {
    pub records: Vec<InstructionRecord>,
    pub skipped: usize,
}

#[derive(Default)]
struct Block {
    instruction: Option<String>,
    answer: Option<String>,
    task: Option<String>,
    broken: bool,
}

impl Block {
    fn field(&mut self, label: &str) -> &mut Option<String> {
        match label {
            "Instruction" => &mut self.instruction,
            "Answer" => &mut self.answer,
            _ => &mut self.task,
        }
    }
}

fn split_label(line: &str) -> Option<(&'static str, usize, &str)> {
    let (head, rest) = line.split_once(':')?;
    let head = head.trim();
    let label_end = head.find(|c: char| c.is_ascii_digit())?;
    let (label, num) = head.split_at(label_end);
    let num: usize = num.parse().ok()?;
    let label = match label {
        "Instruction" => "Instruction",
        "Answer" => "Answer",
        "Task" => "Task",
        _ => return None,
    };
    Some((label, num, rest.trim()))
}

/// Splits an `InstructionN / AnswerN / TaskN` response into records.
/// A block missing a field, or with fields out of order or numbered
/// inconsistently, is skipped and counted.
pub fn parse_general_qa(response: &str, image_ref: &str, source_id: &str) -> QaParse {
    let mut blocks: Vec<(usize, Block)> = Vec::new();
    let mut current: Option<&'static str> = None;
    for line in response.lines() {
        if let Some((label, num, text)) = split_label(line) {
            if label == "Instruction" || blocks.is_empty() {
                blocks.push((num, Block::default()));
            }
            let (block_num, block) = blocks.last_mut().expect("pushed above");
            if *block_num != num
                || block.field(label).is_some()
                || (label == "Answer" && block.instruction.is_none())
                || (label == "Task" && block.answer.is_none())
            {
                block.broken = true;
            }
            *block.field(label) = Some(text.to_string());
            current = Some(label);
        } else if let (Some(label), Some((_, block))) = (current, blocks.last_mut()) {
            let text = line.trim();
            if let (false, Some(s)) = (text.is_empty(), block.field(label).as_mut()) {
                if !s.is_empty() {
                    s.push(' ');
                }
                s.push_str(text);
            }
        }
    }
    let mut out = QaParse {
        records: Vec::new(),
        skipped: 0,
    };
    for (num, block) in blocks {
        match block {
            Block {
                instruction: Some(i),
                answer: Some(a),
                task: Some(t),
                broken: false,
            } if !i.is_empty() && !a.is_empty() && !t.is_empty() => {
                let tag = format!("general_qa.{}", t.to_lowercase().replace(' ', "_"));
                out.records.push(InstructionRecord::single_turn(
                    Some(image_ref),
                    &i,
                    &a,
                    tag,
                    format!("{source_id}#{num}"),
                ));
            }
            _ => out.skipped += 1,
        }
    }
    out
}
