//! Domain vocabulary induction and domain-keyword extraction.
//!
//! The domain vocabulary is learned with iterative pair merging over
//! whitespace-pretokenized text. Keywords are the domain pieces that the
//! general model's vocabulary lacks, restricted to long alphabetic terms.
//! Sentences dense in such keywords feed the word-to-text tasks.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus_io::{Domain, Sentence};
use crate::error::{Error, Result};

pub const MIN_VOCAB_SIZE: usize = 1000;
pub const DEFAULT_VOCAB_SIZE: usize = 32_000;
pub const DEFAULT_MIN_KEYWORD_CHARS: usize = 10;
pub const DEFAULT_KEYWORD_THRESHOLD: usize = 3;

/// Subword continuation markers stripped when loading an exported vocabulary.
const CONTINUATION_MARKERS: [&str; 2] = ["\u{2581}", "##"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Trained,
    Loaded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    pieces: BTreeSet<String>,
    provenance: Provenance,
}

impl Vocabulary {
    pub fn from_pieces<I, S>(pieces: I, provenance: Provenance) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Vocabulary {
            pieces: pieces.into_iter().map(Into::into).collect(),
            provenance,
        }
    }

    pub fn size(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn contains(&self, piece: &str) -> bool {
        self.pieces.contains(piece)
    }

    pub fn pieces(&self) -> &BTreeSet<String> {
        &self.pieces
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// One piece per line; continuation markers are stripped and blank
    /// lines ignored.
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut pieces = BTreeSet::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let mut piece = line.trim_end_matches(['\r', '\n']);
            for marker in CONTINUATION_MARKERS {
                if let Some(rest) = piece.strip_prefix(marker) {
                    piece = rest;
                    break;
                }
            }
            if !piece.trim().is_empty() {
                pieces.insert(piece.to_string());
            }
        }
        Ok(Vocabulary {
            pieces,
            provenance: Provenance::Loaded,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for piece in &self.pieces {
            writeln!(out, "{piece}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

type Sym = u32;
type Pair = (Sym, Sym);

struct Word {
    symbols: Vec<Sym>,
    count: i64,
}

/// Priority entry: higher count first, then lexicographically smaller
/// `(left, right)` strings.
#[derive(PartialEq, Eq)]
struct Candidate {
    count: i64,
    key: Reverse<(String, String)>,
    pair: Pair,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| self.key.cmp(&other.key))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Trainer {
    symbols: Vec<String>,
    ids: HashMap<String, Sym>,
    words: Vec<Word>,
    pair_counts: HashMap<Pair, i64>,
    occurrences: HashMap<Pair, HashSet<usize>>,
    heap: BinaryHeap<Candidate>,
}

impl Trainer {
    fn intern(&mut self, s: &str) -> Sym {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.symbols.len() as Sym;
        self.symbols.push(s.to_string());
        self.ids.insert(s.to_string(), id);
        id
    }

    fn candidate(&self, pair: Pair, count: i64) -> Candidate {
        Candidate {
            count,
            key: Reverse((
                self.symbols[pair.0 as usize].clone(),
                self.symbols[pair.1 as usize].clone(),
            )),
            pair,
        }
    }

    fn add_pairs(&mut self, word_idx: usize, sign: i64, changed: &mut HashSet<Pair>) {
        let word = &self.words[word_idx];
        let count = word.count * sign;
        for w in word.symbols.windows(2) {
            let pair = (w[0], w[1]);
            *self.pair_counts.entry(pair).or_insert(0) += count;
            if sign > 0 {
                self.occurrences.entry(pair).or_default().insert(word_idx);
            }
            changed.insert(pair);
        }
    }

    fn pop_best(&mut self) -> Option<Pair> {
        while let Some(top) = self.heap.pop() {
            let current = self.pair_counts.get(&top.pair).copied().unwrap_or(0);
            if current > 0 && current == top.count {
                return Some(top.pair);
            }
        }
        None
    }

    fn merge(&mut self, pair: Pair) -> Sym {
        let merged = format!(
            "{}{}",
            self.symbols[pair.0 as usize], self.symbols[pair.1 as usize]
        );
        let new_sym = self.intern(&merged);
        let mut affected: Vec<usize> = self
            .occurrences
            .remove(&pair)
            .map(|s| s.into_iter().collect())
            .unwrap_or_default();
        affected.sort_unstable();
        let mut changed = HashSet::new();
        for idx in affected {
            if !self.words[idx]
                .symbols
                .windows(2)
                .any(|w| (w[0], w[1]) == pair)
            {
                continue;
            }
            self.add_pairs(idx, -1, &mut changed);
            let symbols = std::mem::take(&mut self.words[idx].symbols);
            self.words[idx].symbols = merge_symbols(&symbols, pair, new_sym);
            self.add_pairs(idx, 1, &mut changed);
        }
        let mut changed: Vec<Pair> = changed.into_iter().collect();
        changed.sort_unstable();
        for p in changed {
            let count = self.pair_counts.get(&p).copied().unwrap_or(0);
            if count > 0 {
                let c = self.candidate(p, count);
                self.heap.push(c);
            } else {
                self.pair_counts.remove(&p);
            }
        }
        new_sym
    }
}

/// Replaces non-overlapping occurrences of `pair`, scanning left to right.
fn merge_symbols(symbols: &[Sym], pair: Pair, new_sym: Sym) -> Vec<Sym> {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && (symbols[i], symbols[i + 1]) == pair {
            out.push(new_sym);
            i += 2;
        } else {
            out.push(symbols[i]);
            i += 1;
        }
    }
    out
}

/// Counts whitespace-separated words across a document stream.
pub fn count_words<I, S>(corpus: I) -> HashMap<String, u64>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts = HashMap::new();
    for text in corpus {
        for word in text.as_ref().split_whitespace() {
            if let Some(c) = counts.get_mut(word) {
                *c += 1;
            } else {
                counts.insert(word.to_string(), 1);
            }
        }
    }
    counts
}

pub fn build_domain_vocabulary<I, S>(corpus: I, vocab_size: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if vocab_size < MIN_VOCAB_SIZE {
        return Err(Error::VocabSize {
            min: MIN_VOCAB_SIZE,
            got: vocab_size,
        });
    }
    train_from_counts(&count_words(corpus), vocab_size)
}

/// Pair-merge training from precomputed word counts. Stops when the piece
/// set reaches `vocab_size` or no adjacent pair is left to merge.
pub fn train_from_counts(word_counts: &HashMap<String, u64>, vocab_size: usize) -> Result<Vocabulary> {
    if word_counts.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut sorted: Vec<(&String, &u64)> = word_counts.iter().collect();
    sorted.sort();

    let mut trainer = Trainer {
        symbols: Vec::new(),
        ids: HashMap::new(),
        words: Vec::with_capacity(sorted.len()),
        pair_counts: HashMap::new(),
        occurrences: HashMap::new(),
        heap: BinaryHeap::new(),
    };
    let mut pieces = BTreeSet::new();
    for (word, &count) in sorted {
        let mut buf = [0u8; 4];
        let symbols = word
            .chars()
            .map(|c| {
                let s = c.encode_utf8(&mut buf);
                pieces.insert(s.to_string());
                trainer.intern(s)
            })
            .collect();
        trainer.words.push(Word {
            symbols,
            count: count as i64,
        });
    }

    let mut changed = HashSet::new();
    for idx in 0..trainer.words.len() {
        trainer.add_pairs(idx, 1, &mut changed);
    }
    let mut initial: Vec<Candidate> = trainer
        .pair_counts
        .iter()
        .map(|(&p, &c)| trainer.candidate(p, c))
        .collect();
    initial.sort_by(|a, b| b.cmp(a));
    trainer.heap = initial.into();

    while pieces.len() < vocab_size {
        let Some(pair) = trainer.pop_best() else {
            break;
        };
        let sym = trainer.merge(pair);
        pieces.insert(trainer.symbols[sym as usize].clone());
    }

    Ok(Vocabulary {
        pieces,
        provenance: Provenance::Trained,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordSet {
    keywords: BTreeSet<String>,
    folded: HashSet<String>,
    min_chars: usize,
    domain: Domain,
}

impl KeywordSet {
    pub fn new<I, S>(keywords: I, min_chars: usize, domain: Domain) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let keywords: BTreeSet<String> = keywords
            .into_iter()
            .map(Into::into)
            .filter(|k: &String| is_keyword_shaped(k, min_chars))
            .collect();
        let folded = keywords.iter().map(|k| k.to_lowercase()).collect();
        KeywordSet {
            keywords,
            folded,
            min_chars,
            domain,
        }
    }

    pub fn keywords(&self) -> &BTreeSet<String> {
        &self.keywords
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    pub fn min_chars(&self) -> usize {
        self.min_chars
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Case-insensitive membership.
    pub fn contains_word(&self, word: &str) -> bool {
        self.folded.contains(&word.to_lowercase())
    }
}

fn is_keyword_shaped(piece: &str, min_chars: usize) -> bool {
    piece.chars().count() >= min_chars
        && piece.chars().any(char::is_alphabetic)
        && !piece.chars().any(char::is_whitespace)
}

fn strip_markers(piece: &str) -> &str {
    CONTINUATION_MARKERS
        .iter()
        .find_map(|m| piece.strip_prefix(m))
        .unwrap_or(piece)
}

pub fn derive_keywords(
    domain_vocab: &Vocabulary,
    general_vocab: &Vocabulary,
    min_chars: usize,
    domain: Domain,
) -> KeywordSet {
    let general: HashSet<&str> = general_vocab
        .pieces()
        .iter()
        .map(|p| strip_markers(p))
        .collect();
    let keywords = domain_vocab
        .pieces()
        .iter()
        .map(|p| strip_markers(p))
        .filter(|p| !general.contains(p))
        .map(str::to_string);
    KeywordSet::new(keywords, min_chars, domain)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KeywordCount {
    pub count: usize,
    /// Surface forms in sentence order, first occurrence of each keyword.
    pub matched: Vec<String>,
}

/// Whitespace-delimited words with surrounding punctuation removed.
pub fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
}

pub fn count_keywords(sentence: &str, keywords: &KeywordSet) -> KeywordCount {
    let mut seen = HashSet::new();
    let mut matched = Vec::new();
    for word in words(sentence) {
        if word.chars().count() < keywords.min_chars {
            continue;
        }
        let folded = word.to_lowercase();
        if keywords.folded.contains(&folded) && seen.insert(folded) {
            matched.push(word.to_string());
        }
    }
    KeywordCount {
        count: matched.len(),
        matched,
    }
}

/// Sentences carrying strictly more than `threshold` distinct keywords.
pub fn select_word2text_sentences(
    sentences: &[Sentence],
    keywords: &KeywordSet,
    threshold: usize,
) -> Vec<(Sentence, Vec<String>)> {
    if keywords.is_empty() {
        return Vec::new();
    }
    sentences
        .iter()
        .filter_map(|s| {
            let kc = count_keywords(&s.text, keywords);
            (kc.count > threshold).then(|| (s.clone(), kc.matched))
        })
        .collect()
}
