//! Knowledge-probe datasets: filtering multiple-choice items down to
//! declarative stems, and turning many-class labels into four-choice items.

use std::collections::{BTreeMap, HashSet};

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::task_factory::fill;

pub const DEFAULT_QUESTION_WORDS: [&str; 8] =
    ["What", "Who", "When", "Where", "Why", "Which", "Whose", "How"];
pub const REJECTED_SUFFIXES: [&str; 3] = [":", "?", "-"];
pub const BLANK_MARKER: &str = "__";
pub const DEFAULT_STEM_TEMPLATE: &str = "{CONTRACT} The topic is";
pub const CHOICES: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeItem {
    #[serde(alias = "question")]
    pub stem: String,
    pub options: Vec<String>,
    pub gold_index: usize,
    #[serde(default)]
    pub subject: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeFilter {
    question_words: Vec<String>,
}

impl Default for ProbeFilter {
    fn default() -> Self {
        ProbeFilter::new(DEFAULT_QUESTION_WORDS)
    }
}

impl ProbeFilter {
    pub fn new<I, S>(question_words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        ProbeFilter {
            question_words: question_words
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
        }
    }

    /// Whether a stem reads as a statement a causal model can continue.
    pub fn keeps(&self, stem: &str) -> bool {
        let stem = stem.trim();
        let first = stem
            .split(|c: char| !c.is_alphanumeric())
            .next()
            .unwrap_or("")
            .to_lowercase();
        if self.question_words.contains(&first) {
            return false;
        }
        if REJECTED_SUFFIXES.iter().any(|s| stem.ends_with(s)) {
            return false;
        }
        !stem.contains(BLANK_MARKER)
    }

    pub fn apply(&self, items: Vec<ProbeItem>) -> Vec<ProbeItem> {
        items.into_iter().filter(|it| self.keeps(&it.stem)).collect()
    }
}

/// Builds a four-choice item: the gold label plus three distinct
/// distractors drawn uniformly from the rest of the pool, in shuffled order.
/// Duplicate labels in the pool are ignored.
pub fn make_four_choice<R: Rng + ?Sized>(
    context: &str,
    gold: &str,
    label_pool: &[String],
    stem_template: &str,
    rng: &mut R,
) -> Result<ProbeItem> {
    let mut seen = HashSet::new();
    let distinct: Vec<&String> = label_pool.iter().filter(|l| seen.insert(l.as_str())).collect();
    if !seen.contains(gold) {
        return Err(Error::GoldNotInPool(gold.to_string()));
    }
    if distinct.len() < CHOICES {
        return Err(Error::LabelPoolTooSmall(distinct.len()));
    }
    let others: Vec<&String> = distinct.into_iter().filter(|l| *l != gold).collect();
    let mut options: Vec<String> = index::sample(rng, others.len(), CHOICES - 1)
        .into_iter()
        .map(|i| others[i].clone())
        .collect();
    options.push(gold.to_string());
    options.shuffle(rng);
    let gold_index = options.iter().position(|o| o == gold).expect("gold was pushed");
    let stem = fill(stem_template, &BTreeMap::from([("CONTRACT", context)]))?;
    Ok(ProbeItem {
        stem,
        options,
        gold_index,
        subject: gold.to_string(),
    })
}

/// Partitions items by subject, keeping input order within each group.
pub fn group_by_subject(items: &[ProbeItem]) -> BTreeMap<String, Vec<ProbeItem>> {
    let mut groups: BTreeMap<String, Vec<ProbeItem>> = BTreeMap::new();
    for it in items {
        groups.entry(it.subject.clone()).or_default().push(it.clone());
    }
    groups
}
