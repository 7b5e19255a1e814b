//! Turns mined examples into question/answer pairs.
//!
//! Templates live in a JSONL library, one pool per sub-category and
//! direction. A forward template asks for what follows the verbalizer (or
//! for the label); a reverse template swaps input and output. The library
//! also holds the connective, preamble and bridge phrases used by the
//! assembler.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus_io::DocumentUnit;
use crate::error::{Error, Result};
use crate::pattern_miner::{template_parts, MinedExample, SubCategory, TaskType, TemplatePart, UnitRef};

const BUILTIN_TEMPLATES: &str = include_str!("../data/templates.jsonl");

/// Minimum number of forward templates each sub-category must have.
pub const MIN_FORWARD_TEMPLATES: usize = 3;
pub const DEFAULT_SUBCATEGORY_CAP: usize = 2;
pub const DEFAULT_REVERSE_PROBABILITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Reverse,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Reverse => "reverse",
        })
    }
}

/// Whether a sub-category can be asked in the reverse direction.
pub fn reverse_eligible(sub: SubCategory) -> bool {
    !matches!(
        sub,
        SubCategory::Similar | SubCategory::Different | SubCategory::Completion
    )
}

/// Placeholders a template of the given sub-category may use, besides `DOMAIN`.
pub fn allowed_placeholders(sub: SubCategory) -> &'static [&'static str] {
    use SubCategory::*;
    match sub {
        Title => &["TITLE", "TEXT"],
        Topic | CauseEffect | EffectCause | Similar | Different => &["SENT1", "SENT2", "VERBAL"],
        Word2text => &["WORDS", "SENT"],
        Definition => &["WORD", "SENT", "VERBAL"],
        Entail | Neutral | Contradict => &["SENT1", "SENT2", "VERBAL", "LABEL", "CONNECTIVE"],
        Completion => &["ENDING"],
    }
}

/// Canonical connective for each NLI class.
pub fn nli_connective(sub: SubCategory) -> Option<&'static str> {
    match sub {
        SubCategory::Entail => Some("Therefore"),
        SubCategory::Neutral => Some("Maybe"),
        SubCategory::Contradict => Some("However"),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskTemplate {
    /// Position within its (sub-category, direction) pool.
    pub index: usize,
    pub sub_category: SubCategory,
    pub direction: Direction,
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateRecord {
    pool: String,
    direction: Option<Direction>,
    question: Option<String>,
    answer: Option<String>,
    text: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct TemplateLibrary {
    pools: BTreeMap<(SubCategory, Direction), Vec<TaskTemplate>>,
    connectives: Vec<String>,
    preambles: Vec<String>,
    bridges: Vec<String>,
}

fn check_placeholders(text: &str, allowed: &[&str], line: usize) -> Result<()> {
    for part in template_parts(text) {
        if let TemplatePart::Slot(name) = part {
            if name != "DOMAIN" && !allowed.contains(&name) {
                return Err(Error::InvalidTemplate {
                    line,
                    reason: format!("unknown placeholder {name}"),
                });
            }
        }
    }
    Ok(())
}

impl TemplateLibrary {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lib = TemplateLibrary::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let invalid = |reason: String| Error::InvalidTemplate { line, reason };
            let rec: TemplateRecord =
                serde_json::from_str(raw).map_err(|e| invalid(e.to_string()))?;
            match rec.pool.as_str() {
                "connective" | "preamble" | "bridge" => {
                    let text = rec
                        .text
                        .ok_or_else(|| invalid(format!("{} record needs \"text\"", rec.pool)))?;
                    check_placeholders(&text, &[], line)?;
                    match rec.pool.as_str() {
                        "connective" => lib.connectives.push(text),
                        "preamble" => lib.preambles.push(text),
                        _ => lib.bridges.push(text),
                    }
                }
                pool => {
                    let sub: SubCategory = pool
                        .parse()
                        .map_err(|_| invalid(format!("unknown pool {pool:?}")))?;
                    let direction = rec.direction.ok_or_else(|| invalid("missing direction".into()))?;
                    if direction == Direction::Reverse && !reverse_eligible(sub) {
                        return Err(invalid(format!("{sub} has no reverse direction")));
                    }
                    let question = rec.question.ok_or_else(|| invalid("missing question".into()))?;
                    let answer = rec.answer.ok_or_else(|| invalid("missing answer".into()))?;
                    let allowed = allowed_placeholders(sub);
                    check_placeholders(&question, allowed, line)?;
                    check_placeholders(&answer, allowed, line)?;
                    let pool = lib.pools.entry((sub, direction)).or_default();
                    pool.push(TaskTemplate {
                        index: pool.len(),
                        sub_category: sub,
                        direction,
                        question,
                        answer,
                    });
                }
            }
        }
        Ok(lib)
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_TEMPLATES).expect("built-in template file is valid")
    }

    /// Checks that every sub-category has enough forward templates and that
    /// the assembler pools are non-empty.
    pub fn validate_coverage(&self, min_forward: usize) -> Result<()> {
        for sub in SubCategory::ALL {
            let n = self.templates(sub, Direction::Forward).len();
            if n < min_forward {
                return Err(Error::MissingPool(format!(
                    "{sub} (has {n} forward templates, needs {min_forward})"
                )));
            }
        }
        for (name, pool) in [
            ("connective", &self.connectives),
            ("preamble", &self.preambles),
            ("bridge", &self.bridges),
        ] {
            if pool.is_empty() {
                return Err(Error::MissingPool(name.into()));
            }
        }
        Ok(())
    }

    pub fn templates(&self, sub: SubCategory, direction: Direction) -> &[TaskTemplate] {
        self.pools.get(&(sub, direction)).map_or(&[], Vec::as_slice)
    }

    pub fn connectives(&self) -> &[String] {
        &self.connectives
    }

    pub fn preambles(&self) -> &[String] {
        &self.preambles
    }

    pub fn bridges(&self) -> &[String] {
        &self.bridges
    }
}

/// Substitutes `{NAME}` placeholders. Missing values are an error.
pub fn fill(template: &str, values: &BTreeMap<&str, &str>) -> Result<String> {
    let mut out = String::with_capacity(template.len() + 64);
    for part in template_parts(template) {
        match part {
            TemplatePart::Literal(text) => out.push_str(text),
            TemplatePart::Slot(name) => out.push_str(
                values
                    .get(name)
                    .ok_or_else(|| Error::UnknownPlaceholder(name.to_string()))?,
            ),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub task_type: TaskType,
    pub sub_category: SubCategory,
    pub question: String,
    pub answer: String,
    pub reversed: bool,
    /// Index of the template within the pool selected by `reversed`.
    pub template_id: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verbalizer_used: Option<String>,
    /// Slot values of the mined example this task was rendered from.
    #[serde(default)]
    pub slots: BTreeMap<String, String>,
    pub unit_ref: UnitRef,
}

impl TaskInstance {
    /// Question and answer as they appear in the assembled text.
    pub fn render(&self) -> String {
        format!("{} {}", self.question, self.answer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub reverse_probability: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            reverse_probability: DEFAULT_REVERSE_PROBABILITY,
        }
    }
}

/// Renders one mined example with a randomly chosen template. The direction
/// is drawn first (only for reverse-eligible sub-categories with reverse
/// templates), then the template uniformly from the chosen pool.
pub fn render_task<R: Rng + ?Sized>(
    example: &MinedExample,
    unit: &DocumentUnit,
    library: &TemplateLibrary,
    config: &RenderConfig,
    rng: &mut R,
) -> Result<TaskInstance> {
    let sub = example.sub_category;
    let reverse_pool = library.templates(sub, Direction::Reverse);
    let reversed = reverse_eligible(sub)
        && !reverse_pool.is_empty()
        && rng.random_bool(config.reverse_probability.clamp(0.0, 1.0));
    let pool = if reversed {
        reverse_pool
    } else {
        library.templates(sub, Direction::Forward)
    };
    if pool.is_empty() {
        return Err(Error::MissingPool(sub.to_string()));
    }
    let template = &pool[rng.random_range(0..pool.len())];

    let mut values: BTreeMap<&str, &str> = example
        .slots
        .iter()
        .map(|(k, v)| (k.as_str(), v.text.as_str()))
        .collect();
    values.insert("DOMAIN", unit.domain.name());
    if sub == SubCategory::Title {
        values.insert("TEXT", &unit.body);
    }
    if let Some(label) = sub.nli_label() {
        values.insert("LABEL", label);
    }
    if let Some(connective) = nli_connective(sub) {
        values.insert("CONNECTIVE", connective);
    }

    Ok(TaskInstance {
        task_type: example.task_type,
        sub_category: sub,
        question: fill(&template.question, &values)?,
        answer: fill(&template.answer, &values)?,
        reversed,
        template_id: template.index,
        verbalizer_used: example.verbalizer_used.clone(),
        slots: example
            .slots
            .iter()
            .map(|(k, v)| (k.clone(), v.text.clone()))
            .collect(),
        unit_ref: example.unit_ref.clone(),
    })
}

/// Keeps at most `cap` tasks per sub-category, choosing survivors uniformly
/// at random and preserving their relative order. Returns the kept tasks
/// and how many were dropped per sub-category.
pub fn cap_subcategories<R: Rng + ?Sized>(
    tasks: Vec<TaskInstance>,
    cap: usize,
    rng: &mut R,
) -> (Vec<TaskInstance>, BTreeMap<SubCategory, usize>) {
    let mut by_sub: BTreeMap<SubCategory, Vec<usize>> = BTreeMap::new();
    for (i, t) in tasks.iter().enumerate() {
        by_sub.entry(t.sub_category).or_default().push(i);
    }
    let mut keep = vec![true; tasks.len()];
    let mut dropped = BTreeMap::new();
    for (sub, positions) in &by_sub {
        if positions.len() <= cap {
            continue;
        }
        let mut chosen = vec![false; positions.len()];
        for j in index::sample(rng, positions.len(), cap) {
            chosen[j] = true;
        }
        for (j, &pos) in positions.iter().enumerate() {
            keep[pos] = chosen[j];
        }
        dropped.insert(*sub, positions.len() - cap);
    }
    let kept = tasks
        .into_iter()
        .zip(keep)
        .filter_map(|(t, k)| k.then_some(t))
        .collect();
    (kept, dropped)
}
