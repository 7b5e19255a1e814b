//! Body truncation, layout of the final reading-comprehension text, and the
//! output record wrapper.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus_io::DocumentUnit;
use crate::domain_vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::pattern_miner::{SubCategory, TaskType};
use crate::task_factory::{fill, TaskInstance, TemplateLibrary};

pub const DEFAULT_MAX_BODY_TOKENS: usize = 1800;
pub const DEFAULT_TOKEN_BUDGET: usize = 2048;
pub const DEFAULT_EOS: &str = "</s>";
pub const TASK_SEPARATOR: &str = "\n\n";

/// Counts tokens word by word; a text's count is the sum over its
/// whitespace-delimited words.
pub trait TokenCounter: Send + Sync {
    fn count_word(&self, word: &str) -> usize;

    fn count(&self, text: &str) -> usize {
        text.split_whitespace().map(|w| self.count_word(w)).sum()
    }
}

/// One token per whitespace-delimited word.
#[derive(Debug, Clone, Copy, Default)]
pub struct WordCounter;

impl TokenCounter for WordCounter {
    fn count_word(&self, _word: &str) -> usize {
        1
    }
}

/// Greedy longest-match segmentation against a subword vocabulary.
/// Characters not covered by any piece count as one token each.
#[derive(Debug, Clone)]
pub struct VocabCounter {
    pieces: HashSet<String>,
    max_piece_chars: usize,
}

impl VocabCounter {
    pub fn new(vocab: &Vocabulary) -> Self {
        let pieces: HashSet<String> = vocab.pieces().iter().cloned().collect();
        let max_piece_chars = pieces.iter().map(|p| p.chars().count()).max().unwrap_or(1);
        VocabCounter {
            pieces,
            max_piece_chars,
        }
    }
}

impl TokenCounter for VocabCounter {
    fn count_word(&self, word: &str) -> usize {
        let bounds: Vec<usize> = word
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(word.len()))
            .collect();
        let n = bounds.len() - 1;
        let mut i = 0;
        let mut tokens = 0;
        while i < n {
            let mut step = 1;
            for len in (2..=self.max_piece_chars.min(n - i)).rev() {
                if self.pieces.contains(&word[bounds[i]..bounds[i + len]]) {
                    step = len;
                    break;
                }
            }
            i += step;
            tokens += 1;
        }
        tokens
    }
}

/// Longest prefix of `body` that ends at a word boundary and counts at most
/// `max_tokens`. A body already within the limit is returned unchanged.
pub fn truncate_body<'a>(body: &'a str, max_tokens: usize, counter: &dyn TokenCounter) -> &'a str {
    let mut total = 0;
    let mut end = 0;
    let mut pos = 0;
    for word in body.split_whitespace() {
        // split_whitespace yields subslices in order; recover their offsets
        let start = pos + body[pos..].find(word).expect("word comes from body");
        let word_end = start + word.len();
        total += counter.count_word(word);
        if total > max_tokens {
            return &body[..end];
        }
        end = word_end;
        pos = word_end;
    }
    body
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComposeConfig {
    /// Shuffle task order with the unit generator.
    pub shuffle: bool,
}

impl Default for ComposeConfig {
    fn default() -> Self {
        ComposeConfig { shuffle: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadingComprehensionText {
    pub text: String,
    pub n_tasks: usize,
    pub task_breakdown: BTreeMap<TaskType, usize>,
    pub source_id: String,
    pub unit_index: usize,
    /// Set when no task could be attached and only the body was emitted.
    pub no_tasks: bool,
}

fn pick<'a, R: Rng + ?Sized>(pool: &'a [String], name: &str, rng: &mut R) -> Result<&'a str> {
    if pool.is_empty() {
        return Err(Error::MissingPool(name.into()));
    }
    Ok(&pool[rng.random_range(0..pool.len())])
}

/// Lays out the unit body and its tasks.
///
/// With a text-completion task the body is split where its ending starts:
/// preamble, beginning, the completion question and ending, then a bridge
/// phrase and the remaining tasks. Otherwise the full body is followed by a
/// connective phrase and the tasks. A reversed title task, whose answer is
/// the body itself, is placed in front of the body instead of after it.
pub fn compose<R: Rng + ?Sized>(
    unit: &DocumentUnit,
    tasks: Vec<TaskInstance>,
    library: &TemplateLibrary,
    config: &ComposeConfig,
    rng: &mut R,
) -> Result<ReadingComprehensionText> {
    let mut task_breakdown = BTreeMap::new();
    for t in &tasks {
        *task_breakdown.entry(t.task_type).or_insert(0) += 1;
    }
    let n_tasks = tasks.len();
    let source_id = unit.source_id.clone();
    let unit_index = unit.unit_index;
    let body = unit.body.as_str();
    let domain = BTreeMap::from([("DOMAIN", unit.domain.name())]);

    if tasks.is_empty() {
        return Ok(ReadingComprehensionText {
            text: body.to_string(),
            n_tasks,
            task_breakdown,
            source_id,
            unit_index,
            no_tasks: true,
        });
    }

    let mut hoisted = None;
    let mut completion = None;
    let mut rest = Vec::with_capacity(tasks.len());
    for t in tasks {
        if t.sub_category == SubCategory::Title && t.reversed && t.answer == body && hoisted.is_none() {
            hoisted = Some(t);
        } else if t.sub_category == SubCategory::Completion && completion.is_none() {
            completion = Some(t);
        } else {
            rest.push(t);
        }
    }
    // the ending must be a suffix of the body for the split layout
    let split = completion.as_ref().and_then(|c| {
        body.trim_end()
            .strip_suffix(c.answer.as_str())
            .map(|beginning| beginning.trim_end())
            .filter(|beginning| !beginning.is_empty())
    });
    if split.is_none() {
        if let Some(c) = completion.take() {
            rest.push(c);
        }
    }

    let mut text = String::with_capacity(body.len() * 2);
    match (&completion, split) {
        (Some(c), Some(beginning)) => {
            let preamble = fill(pick(library.preambles(), "preamble", rng)?, &domain)?;
            let bridge = if rest.is_empty() {
                None
            } else {
                Some(fill(pick(library.bridges(), "bridge", rng)?, &domain)?)
            };
            if let Some(h) = &hoisted {
                text.push_str(&h.question);
                text.push_str(TASK_SEPARATOR);
            }
            text.push_str(&preamble);
            text.push(' ');
            text.push_str(beginning);
            text.push_str(TASK_SEPARATOR);
            text.push_str(&c.render());
            if let Some(bridge) = bridge {
                text.push_str(TASK_SEPARATOR);
                text.push_str(&bridge);
            }
        }
        _ => {
            let connective = if rest.is_empty() {
                None
            } else {
                Some(fill(pick(library.connectives(), "connective", rng)?, &domain)?)
            };
            if let Some(h) = &hoisted {
                text.push_str(&h.question);
                text.push(' ');
            }
            text.push_str(body);
            if let Some(connective) = connective {
                text.push_str(TASK_SEPARATOR);
                text.push_str(&connective);
            }
        }
    }

    if config.shuffle {
        rest.shuffle(rng);
    }
    for t in &rest {
        text.push_str(TASK_SEPARATOR);
        text.push_str(&t.render());
    }

    Ok(ReadingComprehensionText {
        text,
        n_tasks,
        task_breakdown,
        source_id,
        unit_index,
        no_tasks: false,
    })
}

#[derive(Serialize, Deserialize)]
struct TextRecord<'a> {
    #[serde(borrow)]
    text: std::borrow::Cow<'a, str>,
}

/// One output line: `{"text": ...}` without a trailing newline.
pub fn wrap_record(text: &str) -> String {
    serde_json::to_string(&TextRecord { text: text.into() }).expect("string serialization is infallible")
}

/// Inverse of [`wrap_record`].
pub fn unwrap_record(line: &str) -> Result<String> {
    let rec: TextRecord<'_> = serde_json::from_str(line)?;
    Ok(rec.text.into_owned())
}

/// Concatenates texts into a single training stream separated by `eos`.
pub fn pack_stream<I, S>(texts: I, eos: &str) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = String::new();
    for (i, t) in texts.into_iter().enumerate() {
        if i > 0 {
            out.push_str(eos);
        }
        out.push_str(t.as_ref());
    }
    out
}
