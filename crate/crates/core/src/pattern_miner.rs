//! Regex-based task mining.
//!
//! A [`MiningPattern`] is a template such as `{SENT1} {VERBAL}, {SENT2}`
//! plus the verbalizers that license its label. Compilation expands the
//! placeholders into fixed regular expressions; mining runs every compiled
//! pattern over a unit body and records the captured slots with their byte
//! spans. Title, keyword and text-completion tasks need no pattern and are
//! produced by [`mine_intrinsic_tasks`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus_io::{segment_sentences, DocumentUnit, Sentence};
use crate::error::{Error, Result};

/// `{WORD}`: a single word of ten or more characters.
pub const WORD_REGEX: &str = r#"([^.!?\n,;\"\s]{10,})"#;
/// `{SENT}`: a single sentence of fifty or more characters.
pub const SENT_REGEX: &str = r#"([^.!?\n]{50,}[.!?]+)"#;

const BUILTIN_PATTERNS: &str = include_str!("../data/patterns.jsonl");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    Summarization,
    WordToText,
    Nli,
    Commonsense,
    Paraphrase,
    TextCompletion,
}

impl TaskType {
    pub const ALL: [TaskType; 6] = [
        TaskType::Summarization,
        TaskType::WordToText,
        TaskType::Nli,
        TaskType::Commonsense,
        TaskType::Paraphrase,
        TaskType::TextCompletion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskType::Summarization => "summarization",
            TaskType::WordToText => "word_to_text",
            TaskType::Nli => "nli",
            TaskType::Commonsense => "commonsense",
            TaskType::Paraphrase => "paraphrase",
            TaskType::TextCompletion => "text_completion",
        }
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubCategory {
    Title,
    Topic,
    Word2text,
    Definition,
    Entail,
    Neutral,
    Contradict,
    CauseEffect,
    EffectCause,
    Similar,
    Different,
    Completion,
}

impl SubCategory {
    pub const ALL: [SubCategory; 12] = [
        SubCategory::Title,
        SubCategory::Topic,
        SubCategory::Word2text,
        SubCategory::Definition,
        SubCategory::Entail,
        SubCategory::Neutral,
        SubCategory::Contradict,
        SubCategory::CauseEffect,
        SubCategory::EffectCause,
        SubCategory::Similar,
        SubCategory::Different,
        SubCategory::Completion,
    ];

    pub fn task_type(self) -> TaskType {
        use SubCategory::*;
        match self {
            Title | Topic => TaskType::Summarization,
            Word2text | Definition => TaskType::WordToText,
            Entail | Neutral | Contradict => TaskType::Nli,
            CauseEffect | EffectCause => TaskType::Commonsense,
            Similar | Different => TaskType::Paraphrase,
            Completion => TaskType::TextCompletion,
        }
    }

    pub fn as_str(self) -> &'static str {
        use SubCategory::*;
        match self {
            Title => "title",
            Topic => "topic",
            Word2text => "word2text",
            Definition => "definition",
            Entail => "entail",
            Neutral => "neutral",
            Contradict => "contradict",
            CauseEffect => "cause_effect",
            EffectCause => "effect_cause",
            Similar => "similar",
            Different => "different",
            Completion => "completion",
        }
    }

    /// Surface label for the three NLI classes.
    pub fn nli_label(self) -> Option<&'static str> {
        match self {
            SubCategory::Entail => Some("Entailment"),
            SubCategory::Neutral => Some("Neutral"),
            SubCategory::Contradict => Some("Contradiction"),
            _ => None,
        }
    }
}

impl fmt::Display for SubCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SubCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::MissingPool(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningPattern {
    pub task_type: TaskType,
    pub sub_category: SubCategory,
    pub template: String,
    pub verbalizers: Vec<String>,
}

impl MiningPattern {
    /// Parses the pattern data file: one JSON record per line.
    pub fn parse_records(text: &str) -> Result<Vec<MiningPattern>> {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let p: MiningPattern = serde_json::from_str(line).map_err(|e| Error::Malformed {
                location: format!("pattern record {}", i + 1),
                reason: e.to_string(),
            })?;
            if p.sub_category.task_type() != p.task_type {
                return Err(Error::InvalidPattern {
                    sub_category: p.sub_category.to_string(),
                    reason: format!("belongs to {}, not {}", p.sub_category.task_type(), p.task_type),
                });
            }
            out.push(p);
        }
        Ok(out)
    }

    pub fn builtin() -> Vec<MiningPattern> {
        Self::parse_records(BUILTIN_PATTERNS).expect("built-in pattern file is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Placeholder {
    #[serde(rename = "VERBAL")]
    Verbal,
    #[serde(rename = "WORD")]
    Word,
    #[serde(rename = "SENT")]
    Sent,
    #[serde(rename = "SENT1")]
    Sent1,
    #[serde(rename = "SENT2")]
    Sent2,
}

impl Placeholder {
    pub fn name(self) -> &'static str {
        match self {
            Placeholder::Verbal => "VERBAL",
            Placeholder::Word => "WORD",
            Placeholder::Sent => "SENT",
            Placeholder::Sent1 => "SENT1",
            Placeholder::Sent2 => "SENT2",
        }
    }

    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "VERBAL" => Placeholder::Verbal,
            "WORD" => Placeholder::Word,
            "SENT" => Placeholder::Sent,
            "SENT1" => Placeholder::Sent1,
            "SENT2" => Placeholder::Sent2,
            _ => return None,
        })
    }
}

/// A piece of a template: literal text or a `{NAME}` placeholder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplatePart<'a> {
    Literal(&'a str),
    Slot(&'a str),
}

/// Splits `{NAME}` tokens (uppercase letters and digits) out of a template.
/// Any other brace is literal text.
pub fn template_parts(template: &str) -> Vec<TemplatePart<'_>> {
    let mut parts = Vec::new();
    let bytes = template.as_bytes();
    let mut literal_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let name_len = bytes[i + 1..]
                .iter()
                .take_while(|b| b.is_ascii_uppercase() || b.is_ascii_digit() || **b == b'_')
                .count();
            let close = i + 1 + name_len;
            if name_len > 0 && bytes.get(close) == Some(&b'}') {
                if literal_start < i {
                    parts.push(TemplatePart::Literal(&template[literal_start..i]));
                }
                parts.push(TemplatePart::Slot(&template[i + 1..close]));
                i = close + 1;
                literal_start = i;
                continue;
            }
        }
        i += 1;
    }
    if literal_start < template.len() {
        parts.push(TemplatePart::Literal(&template[literal_start..]));
    }
    parts
}

#[derive(Debug, Clone)]
pub struct CompiledPattern {
    pattern: MiningPattern,
    source: String,
    regex: Regex,
    /// Placeholder bound to capture group `i + 1`.
    groups: Vec<Placeholder>,
}

impl CompiledPattern {
    pub fn pattern(&self) -> &MiningPattern {
        &self.pattern
    }

    /// The expanded regular expression source.
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn regex(&self) -> &Regex {
        &self.regex
    }

    /// Names of the capture groups in group order.
    pub fn group_names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.groups.iter().map(|p| p.name())
    }

    /// Index of the capture group bound to `name`.
    pub fn group_index(&self, name: &str) -> Option<usize> {
        self.groups.iter().position(|p| p.name() == name).map(|i| i + 1)
    }

    /// Captures of the first match in `haystack`, keyed by placeholder name.
    pub fn captures<'h>(&self, haystack: &'h str) -> Option<BTreeMap<&'static str, &'h str>> {
        let caps = self.regex.captures(haystack)?;
        Some(
            self.groups
                .iter()
                .enumerate()
                .filter_map(|(i, p)| caps.get(i + 1).map(|m| (p.name(), m.as_str())))
                .collect(),
        )
    }
}

pub fn compile_pattern(p: &MiningPattern) -> Result<CompiledPattern> {
    let mut source = String::new();
    let mut groups = Vec::new();
    for part in template_parts(&p.template) {
        match part {
            TemplatePart::Literal(text) => source.push_str(&regex::escape(text)),
            TemplatePart::Slot(name) => {
                let placeholder =
                    Placeholder::parse(name).ok_or_else(|| Error::UnknownPlaceholder(name.into()))?;
                match placeholder {
                    Placeholder::Verbal => {
                        if p.verbalizers.is_empty() {
                            return Err(Error::InvalidPattern {
                                sub_category: p.sub_category.to_string(),
                                reason: "{VERBAL} used without verbalizers".into(),
                            });
                        }
                        let alternation: Vec<String> =
                            p.verbalizers.iter().map(|v| regex::escape(v)).collect();
                        source.push('(');
                        source.push_str(&alternation.join("|"));
                        source.push(')');
                    }
                    Placeholder::Word => source.push_str(WORD_REGEX),
                    Placeholder::Sent | Placeholder::Sent1 | Placeholder::Sent2 => {
                        source.push_str(SENT_REGEX)
                    }
                }
                groups.push(placeholder);
            }
        }
    }
    let mut seen = groups.clone();
    seen.sort();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidPattern {
            sub_category: p.sub_category.to_string(),
            reason: "a placeholder appears more than once".into(),
        });
    }
    let regex = Regex::new(&source).map_err(|e| Error::InvalidPattern {
        sub_category: p.sub_category.to_string(),
        reason: e.to_string(),
    })?;
    Ok(CompiledPattern {
        pattern: p.clone(),
        source,
        regex,
        groups,
    })
}

pub fn compile_all(patterns: &[MiningPattern]) -> Result<Vec<CompiledPattern>> {
    patterns.iter().map(compile_pattern).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UnitRef {
    pub source_id: String,
    pub unit_index: usize,
}

impl UnitRef {
    pub fn of(unit: &DocumentUnit) -> Self {
        UnitRef {
            source_id: unit.source_id.clone(),
            unit_index: unit.unit_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub text: String,
    /// Byte span in the unit body; `None` for slots not drawn from the body.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<(usize, usize)>,
}

impl Slot {
    fn from_body(body: &str, start: usize, end: usize) -> Self {
        Slot {
            text: body[start..end].to_string(),
            span: Some((start, end)),
        }
    }

    fn synthetic(text: impl Into<String>) -> Self {
        Slot {
            text: text.into(),
            span: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinedExample {
    pub task_type: TaskType,
    pub sub_category: SubCategory,
    pub slots: BTreeMap<String, Slot>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verbalizer_used: Option<String>,
    pub unit_ref: UnitRef,
}

impl MinedExample {
    pub fn slot(&self, name: &str) -> Option<&str> {
        self.slots.get(name).map(|s| s.text.as_str())
    }

    fn start(&self) -> usize {
        self.slots
            .values()
            .filter_map(|s| s.span.map(|(a, _)| a))
            .min()
            .unwrap_or(usize::MAX)
    }
}

/// Shrinks `start..end` so the span excludes surrounding whitespace.
pub fn trim_span(text: &str, start: usize, end: usize) -> (usize, usize) {
    let slice = &text[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trail = slice.len() - slice.trim_end().len();
    if lead == slice.len() {
        return (start, start);
    }
    (start + lead, end - trail)
}

/// Runs every pattern over the unit body. Matches of one pattern never
/// overlap; different patterns may share a site. Output is ordered by the
/// start offset of the match, ties broken by pattern order.
pub fn mine_regex_tasks(unit: &DocumentUnit, patterns: &[CompiledPattern]) -> Vec<MinedExample> {
    let body = unit.body.as_str();
    let unit_ref = UnitRef::of(unit);
    let mut found: Vec<(usize, usize, MinedExample)> = Vec::new();
    for (pi, cp) in patterns.iter().enumerate() {
        for caps in cp.regex.captures_iter(body) {
            let whole = caps.get(0).expect("group 0 always present");
            let mut slots = BTreeMap::new();
            let mut verbalizer = None;
            for (gi, placeholder) in cp.groups.iter().enumerate() {
                let Some(m) = caps.get(gi + 1) else { continue };
                let (s, e) = trim_span(body, m.start(), m.end());
                if *placeholder == Placeholder::Verbal {
                    verbalizer = Some(body[s..e].to_string());
                }
                slots.insert(placeholder.name().to_string(), Slot::from_body(body, s, e));
            }
            found.push((
                whole.start(),
                pi,
                MinedExample {
                    task_type: cp.pattern.task_type,
                    sub_category: cp.pattern.sub_category,
                    slots,
                    verbalizer_used: verbalizer,
                    unit_ref: unit_ref.clone(),
                },
            ));
        }
    }
    found.sort_by_key(|(start, pi, _)| (*start, *pi));
    found.into_iter().map(|(_, _, ex)| ex).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletionConfig {
    /// Jitter window for the split point, as fractions of the sentence count.
    pub min_fraction: f64,
    pub max_fraction: f64,
}

impl Default for CompletionConfig {
    fn default() -> Self {
        CompletionConfig {
            min_fraction: 0.4,
            max_fraction: 0.7,
        }
    }
}

/// Picks the sentence index where the ending starts; `None` when the body
/// has fewer than two sentences.
pub fn completion_split<R: Rng + ?Sized>(
    sentences: &[Sentence],
    cfg: &CompletionConfig,
    rng: &mut R,
) -> Option<usize> {
    let n = sentences.len();
    if n < 2 {
        return None;
    }
    let fraction = if cfg.max_fraction > cfg.min_fraction {
        rng.random_range(cfg.min_fraction..=cfg.max_fraction)
    } else {
        cfg.min_fraction
    };
    let k = (n as f64 * fraction).round() as usize;
    Some(k.clamp(1, n - 1))
}

/// Keywords listed in a word-to-text question.
pub const WORD2TEXT_KEYWORDS: usize = 3;

/// First `limit` distinct keywords in sentence order; repeats are compared
/// case-insensitively and the first surface form wins.
pub fn keyword_list(matched: &[String], limit: usize) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    matched
        .iter()
        .filter(|w| seen.insert(w.to_lowercase()))
        .take(limit)
        .cloned()
        .collect()
}

/// Title-as-summary, keyword-to-sentence and text-completion examples.
pub fn mine_intrinsic_tasks<R: Rng + ?Sized>(
    unit: &DocumentUnit,
    w2t: &[(Sentence, Vec<String>)],
    completion: &CompletionConfig,
    rng: &mut R,
) -> Vec<MinedExample> {
    let unit_ref = UnitRef::of(unit);
    let example = |sub: SubCategory, slots: BTreeMap<String, Slot>| MinedExample {
        task_type: sub.task_type(),
        sub_category: sub,
        slots,
        verbalizer_used: None,
        unit_ref: unit_ref.clone(),
    };
    let mut out = Vec::new();

    if let Some(title) = unit.title.as_deref().filter(|t| !t.trim().is_empty()) {
        let slots = BTreeMap::from([("TITLE".to_string(), Slot::synthetic(title.trim()))]);
        out.push(example(SubCategory::Title, slots));
    }

    for (sentence, matched) in w2t {
        let mut slots = BTreeMap::new();
        slots.insert(
            "SENT".to_string(),
            Slot::from_body(&unit.body, sentence.start, sentence.end),
        );
        slots.insert(
            "WORDS".to_string(),
            Slot::synthetic(keyword_list(matched, WORD2TEXT_KEYWORDS).join(", ")),
        );
        out.push(example(SubCategory::Word2text, slots));
    }

    let sentences = segment_sentences(&unit.body);
    if let Some(k) = completion_split(&sentences, completion, rng) {
        let start = sentences[k].start;
        let end = unit.body.trim_end().len();
        let slots = BTreeMap::from([(
            "ENDING".to_string(),
            Slot::from_body(&unit.body, start, end),
        )]);
        out.push(example(SubCategory::Completion, slots));
    }
    out
}

/// Orders a mixed list of mined examples by body position.
pub fn sort_by_position(examples: &mut [MinedExample]) {
    examples.sort_by_key(|e| e.start());
}
