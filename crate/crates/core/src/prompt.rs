//! Prompt configurations, prompt assembly and the model response contract.
//!
//! Header strings and the response grammar are normative; `PROMPTS.md` at
//! the repository root documents both.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::BugBundle;
use crate::circuit::{parse_qasm, print_qasm, Circuit, QasmError};
use crate::harness::{records_to_jsonl, MutationRecord, TestOutcome};

pub const SYSTEM_PROMPT: &str = include_str!("../prompts/system.txt");

pub const HEADER_BUGGY_CODE: &str = "## Buggy Code";
pub const HEADER_BUG_DESCRIPTION: &str = "## Bug Description";
pub const HEADER_EXPECTED_BEHAVIOR: &str = "## Expected Behavior";
pub const HEADER_CURRENT_RESULT: &str = "## Current Result";
pub const HEADER_MUTATION_ANALYSIS: &str = "## Mutation Analysis Result";

pub const ALL_HEADERS: [&str; 5] = [
    HEADER_BUGGY_CODE,
    HEADER_BUG_DESCRIPTION,
    HEADER_EXPECTED_BEHAVIOR,
    HEADER_CURRENT_RESULT,
    HEADER_MUTATION_ANALYSIS,
];

pub const NOT_PROVIDED: &str = "(not provided)";

pub const FIXED_CODE_HEADING: &str = "FIXED_CODE";
pub const EXPLANATION_HEADING: &str = "EXPLANATION";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PromptConfig {
    #[serde(rename = "S")]
    S,
    #[serde(rename = "S+D")]
    SD,
    #[serde(rename = "S+M")]
    SM,
    #[serde(rename = "S+D+M")]
    SDM,
}

impl PromptConfig {
    pub const ALL: [PromptConfig; 4] = [PromptConfig::S, PromptConfig::SD, PromptConfig::SM, PromptConfig::SDM];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptConfig::S => "S",
            PromptConfig::SD => "S+D",
            PromptConfig::SM => "S+M",
            PromptConfig::SDM => "S+D+M",
        }
    }

    pub fn includes_dynamic(self) -> bool {
        matches!(self, PromptConfig::SD | PromptConfig::SDM)
    }

    pub fn includes_mutation(self) -> bool {
        matches!(self, PromptConfig::SM | PromptConfig::SDM)
    }

    /// Section headers of the user prompt, in order.
    pub fn headers(self) -> Vec<&'static str> {
        let mut out = vec![HEADER_BUGGY_CODE, HEADER_BUG_DESCRIPTION, HEADER_EXPECTED_BEHAVIOR];
        if self.includes_dynamic() {
            out.push(HEADER_CURRENT_RESULT);
        }
        if self.includes_mutation() {
            out.push(HEADER_MUTATION_ANALYSIS);
        }
        out
    }
}

impl fmt::Display for PromptConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptConfig::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown prompt configuration `{s}` (expected S, S+D, S+M or S+D+M)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_prompt: String,
    pub user_prompt: String,
    pub config: PromptConfig,
    pub bundle_id: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PromptError {
    #[error("configuration {config} needs {ingredient}")]
    MissingIngredient {
        config: PromptConfig,
        ingredient: &'static str,
    },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error(transparent)]
    Qasm(#[from] QasmError),
}

pub fn render_system_prompt() -> &'static str {
    SYSTEM_PROMPT
}

pub fn build_prompt(
    bundle: &BugBundle,
    config: PromptConfig,
    baseline: Option<&[TestOutcome]>,
    records: Option<&[MutationRecord]>,
) -> Result<PromptBundle, PromptError> {
    let missing = |ingredient| PromptError::MissingIngredient { config, ingredient };
    let mut sections = vec![
        (
            HEADER_BUGGY_CODE,
            format!("```qasm\n{}```", print_qasm(&bundle.buggy_circuit)),
        ),
        (HEADER_BUG_DESCRIPTION, or_not_provided(&bundle.bug_description)),
        (HEADER_EXPECTED_BEHAVIOR, or_not_provided(&bundle.expected_behavior)),
    ];
    if config.includes_dynamic() {
        let baseline = baseline.ok_or_else(|| missing("the buggy program's test outcomes"))?;
        sections.push((HEADER_CURRENT_RESULT, current_result(baseline)));
    }
    if config.includes_mutation() {
        if baseline.is_none() {
            return Err(missing("the buggy program's test outcomes"));
        }
        let records = records.ok_or_else(|| missing("mutation analysis records"))?;
        sections.push((HEADER_MUTATION_ANALYSIS, mutation_section(records)));
    }
    let user_prompt = sections
        .into_iter()
        .map(|(header, body)| format!("{header}\n{body}\n"))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(PromptBundle {
        system_prompt: SYSTEM_PROMPT.to_string(),
        user_prompt,
        config,
        bundle_id: bundle.id.clone(),
    })
}

fn or_not_provided(text: &str) -> String {
    if text.trim().is_empty() {
        NOT_PROVIDED.to_string()
    } else {
        text.trim().to_string()
    }
}

fn current_result(baseline: &[TestOutcome]) -> String {
    let failing: Vec<String> = baseline
        .iter()
        .filter(|o| !o.passed())
        .map(|o| format!("Test `{}`: {}\n{}", o.name, o.verdict, o.detail))
        .collect();
    let passed = baseline.len() - failing.len();
    let mut out = format!("{passed} of {} tests passed.", baseline.len());
    for f in failing {
        out.push_str("\n\n");
        out.push_str(&f);
    }
    out
}

fn mutation_section(records: &[MutationRecord]) -> String {
    if records.is_empty() {
        return "(no mutants)".to_string();
    }
    format!("```jsonl\n{}```", records_to_jsonl(records))
}

/// The three labelled paragraphs of a repair explanation.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Explanation {
    pub position: String,
    pub cause: String,
    pub change: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedResponse {
    pub circuit: Circuit,
    pub code: String,
    pub explanation: Explanation,
}

/// Builds a response in the contract format.
pub fn render_response(code: &str, explanation: &Explanation) -> String {
    let code = code.trim_end();
    format!(
        "{FIXED_CODE_HEADING}\n```qasm\n{code}\n```\n{EXPLANATION_HEADING}\nPosition: {}\nCause: {}\nChange: {}\n",
        explanation.position, explanation.cause, explanation.change
    )
}

fn heading(line: &str) -> &str {
    line.trim()
        .trim_start_matches(['#', '*'])
        .trim_end_matches(['*', ':'])
        .trim()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Label {
    Position,
    Cause,
    Change,
}

fn label_of(line: &str) -> Option<(Label, &str)> {
    let stripped = line.trim_start().trim_start_matches(['-', '*', '#', ' ']);
    for (label, word) in [
        (Label::Position, "Position"),
        (Label::Cause, "Cause"),
        (Label::Change, "Change"),
    ] {
        if let Some(rest) = stripped.strip_prefix(word) {
            if let Some(rest) = rest.trim_start_matches('*').strip_prefix(':') {
                return Some((label, rest.trim_start_matches('*').trim()));
            }
        }
    }
    None
}

pub fn parse_model_response(raw: &str) -> Result<ParsedResponse, PromptError> {
    let malformed = |m: &str| PromptError::MalformedResponse(m.to_string());
    let lines: Vec<&str> = raw.lines().collect();
    let start = lines
        .iter()
        .position(|l| heading(l) == FIXED_CODE_HEADING)
        .ok_or_else(|| malformed("no FIXED_CODE heading"))?;
    let mut i = start + 1;
    while i < lines.len() && lines[i].trim().is_empty() {
        i += 1;
    }
    if i >= lines.len() || !lines[i].trim_start().starts_with("```") {
        return Err(malformed("FIXED_CODE is not followed by a fenced code block"));
    }
    let open = i;
    let close = (open + 1..lines.len())
        .find(|&j| lines[j].trim_start().starts_with("```"))
        .ok_or_else(|| malformed("unterminated code block"))?;
    let code = lines[open + 1..close].join("\n") + "\n";

    let expl = (close + 1..lines.len())
        .find(|&j| heading(lines[j]) == EXPLANATION_HEADING)
        .ok_or_else(|| malformed("no EXPLANATION section"))?;

    let mut parts: Vec<(Label, Vec<&str>)> = Vec::new();
    for line in &lines[expl + 1..] {
        if let Some((label, rest)) = label_of(line) {
            parts.push((label, vec![rest]));
        } else if let Some((_, body)) = parts.last_mut() {
            body.push(line.trim());
        } else if !line.trim().is_empty() {
            return Err(malformed("text before the Position paragraph"));
        }
    }
    let order: Vec<Label> = parts.iter().map(|(l, _)| *l).collect();
    if order != [Label::Position, Label::Cause, Label::Change] {
        return Err(malformed(
            "EXPLANATION must hold exactly the Position, Cause and Change paragraphs in that order",
        ));
    }
    let mut texts = parts.into_iter().map(|(_, body)| body.join("\n").trim().to_string());
    let explanation = Explanation {
        position: texts.next().unwrap_or_default(),
        cause: texts.next().unwrap_or_default(),
        change: texts.next().unwrap_or_default(),
    };
    for (name, text) in [
        ("Position", &explanation.position),
        ("Cause", &explanation.cause),
        ("Change", &explanation.change),
    ] {
        if text.is_empty() {
            return Err(PromptError::MalformedResponse(format!("empty {name} paragraph")));
        }
    }

    let circuit = parse_qasm(&code)?;
    Ok(ParsedResponse {
        circuit,
        code,
        explanation,
    })
}
