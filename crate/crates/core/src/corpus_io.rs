//! Corpus ingestion: streaming readers, title/section extraction and the
//! sentence segmenter that everything downstream shares.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Domain {
    Biomedicine,
    Finance,
    Law,
    Custom(String),
}

impl Domain {
    pub fn name(&self) -> &str {
        match self {
            Domain::Biomedicine => "biomedicine",
            Domain::Finance => "finance",
            Domain::Law => "law",
            Domain::Custom(name) => name,
        }
    }

    /// Where each built-in domain keeps its titles.
    pub fn default_title_strategy(&self) -> TitleStrategy {
        match self {
            Domain::Biomedicine => TitleStrategy::FirstLine,
            Domain::Finance => TitleStrategy::TitleField,
            Domain::Law => TitleStrategy::SectionSplit,
            Domain::Custom(_) => TitleStrategy::None,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let name = s.trim();
        if name.is_empty() {
            return Err(Error::InvalidConfig(vec!["domain name is empty".into()]));
        }
        Ok(match name {
            "biomedicine" => Domain::Biomedicine,
            "finance" => Domain::Finance,
            "law" => Domain::Law,
            other => Domain::Custom(other.to_string()),
        })
    }
}

impl From<Domain> for String {
    fn from(d: Domain) -> String {
        d.name().to_string()
    }
}

impl TryFrom<String> for Domain {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    /// One JSON object per line carrying the document in a text field.
    #[serde(alias = "jsonl")]
    JsonlTextField,
    /// A directory of UTF-8 files, one document each; the file name is the id.
    PlainDir,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" | "jsonl-text-field" => Ok(CorpusFormat::JsonlTextField),
            "plain-dir" => Ok(CorpusFormat::PlainDir),
            other => Err(Error::InvalidConfig(vec![format!(
                "unknown corpus format {other:?} (expected jsonl-text-field or plain-dir)"
            )])),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TitleStrategy {
    FirstLine,
    TitleField,
    SectionSplit,
    None,
}

impl FromStr for TitleStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first-line" => Ok(TitleStrategy::FirstLine),
            "title-field" => Ok(TitleStrategy::TitleField),
            "section-split" => Ok(TitleStrategy::SectionSplit),
            "none" => Ok(TitleStrategy::None),
            other => Err(Error::InvalidConfig(vec![format!(
                "unknown title strategy {other:?}"
            )])),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    pub title: Option<String>,
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, Value>,
}

/// A sentence span. `start..end` are byte offsets into the parent text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentUnit {
    pub title: Option<String>,
    pub body: String,
    pub source_id: String,
    pub unit_index: usize,
    pub domain: Domain,
}

#[derive(Debug, Clone)]
pub struct ReaderOptions {
    pub format: CorpusFormat,
    pub text_field: String,
    pub title_field: String,
    pub domain: Domain,
}

impl ReaderOptions {
    pub fn new(format: CorpusFormat, domain: Domain) -> Self {
        ReaderOptions {
            format,
            text_field: "text".into(),
            title_field: "title".into(),
            domain,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadCounters {
    /// Records seen, including malformed and empty ones.
    pub records: u64,
    pub malformed: u64,
    /// Well-formed records whose text is empty after trimming.
    pub empty: u64,
}

/// Lazily yields documents from disk in on-disk order.
pub struct DocumentStream {
    source: Source,
    options: ReaderOptions,
    counters: ReadCounters,
    done: bool,
}

enum Source {
    Jsonl {
        path: PathBuf,
        reader: BufReader<File>,
        buf: Vec<u8>,
        line_no: u64,
    },
    Dir {
        files: std::vec::IntoIter<PathBuf>,
    },
}

pub fn stream_documents(source: &Path, options: ReaderOptions) -> Result<DocumentStream> {
    let source = match options.format {
        CorpusFormat::JsonlTextField => {
            let file = File::open(source).map_err(|e| Error::io(source, e))?;
            Source::Jsonl {
                path: source.to_path_buf(),
                reader: BufReader::with_capacity(1 << 20, file),
                buf: Vec::new(),
                line_no: 0,
            }
        }
        CorpusFormat::PlainDir => {
            let mut files = Vec::new();
            for entry in std::fs::read_dir(source).map_err(|e| Error::io(source, e))? {
                let entry = entry.map_err(|e| Error::io(source, e))?;
                let file_type = entry.file_type().map_err(|e| Error::io(entry.path(), e))?;
                if file_type.is_file() {
                    files.push(entry.path());
                }
            }
            files.sort();
            Source::Dir {
                files: files.into_iter(),
            }
        }
    };
    Ok(DocumentStream {
        source,
        options,
        counters: ReadCounters::default(),
        done: false,
    })
}

impl DocumentStream {
    pub fn counters(&self) -> ReadCounters {
        self.counters
    }

    fn next_jsonl(&mut self) -> Option<Result<RawDocument>> {
        let Source::Jsonl {
            path,
            reader,
            buf,
            line_no,
        } = &mut self.source
        else {
            unreachable!()
        };
        loop {
            buf.clear();
            match reader.read_until(b'\n', buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(Error::io(path.clone(), e)));
                }
            }
            *line_no += 1;
            self.counters.records += 1;
            let Ok(line) = std::str::from_utf8(buf) else {
                self.counters.malformed += 1;
                continue;
            };
            let line = line.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                self.counters.malformed += 1;
                continue;
            }
            let Ok(Value::Object(mut record)) = serde_json::from_str::<Value>(line) else {
                self.counters.malformed += 1;
                continue;
            };
            let text = match record.remove(&self.options.text_field) {
                Some(Value::String(text)) => text,
                _ => {
                    self.counters.malformed += 1;
                    continue;
                }
            };
            if text.trim().is_empty() {
                self.counters.empty += 1;
                continue;
            }
            let title = match record.remove(&self.options.title_field) {
                Some(Value::String(t)) if !t.trim().is_empty() => Some(t.trim().to_string()),
                _ => None,
            };
            return Some(Ok(RawDocument {
                id: line_no.to_string(),
                text,
                title,
                domain: self.options.domain.clone(),
                meta: record.into_iter().collect(),
            }));
        }
    }

    fn next_file(&mut self) -> Option<Result<RawDocument>> {
        let Source::Dir { files } = &mut self.source else {
            unreachable!()
        };
        loop {
            let path = files.next()?;
            let bytes = match std::fs::read(&path) {
                Ok(b) => b,
                Err(e) => {
                    self.done = true;
                    return Some(Err(Error::io(path, e)));
                }
            };
            self.counters.records += 1;
            let Ok(text) = String::from_utf8(bytes) else {
                self.counters.malformed += 1;
                continue;
            };
            if text.trim().is_empty() {
                self.counters.empty += 1;
                continue;
            }
            let id = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            return Some(Ok(RawDocument {
                id,
                text,
                title: None,
                domain: self.options.domain.clone(),
                meta: BTreeMap::new(),
            }));
        }
    }
}

impl Iterator for DocumentStream {
    type Item = Result<RawDocument>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.source {
            Source::Jsonl { .. } => self.next_jsonl(),
            Source::Dir { .. } => self.next_file(),
        }
    }
}

/// Splits a document into the units that each become one output text.
pub fn extract_units(doc: &RawDocument, strategy: TitleStrategy) -> Vec<DocumentUnit> {
    let unit = |title: Option<String>, body: &str, unit_index: usize| DocumentUnit {
        title,
        body: body.to_string(),
        source_id: doc.id.clone(),
        unit_index,
        domain: doc.domain.clone(),
    };
    match strategy {
        TitleStrategy::FirstLine => match doc.text.split_once('\n') {
            Some((first, rest)) if !rest.trim().is_empty() => {
                let title = Some(first.trim()).filter(|t| !t.is_empty()).map(str::to_string);
                vec![unit(title, rest.trim(), 0)]
            }
            _ => vec![unit(None, doc.text.trim(), 0)],
        },
        TitleStrategy::TitleField => vec![unit(doc.title.clone(), doc.text.trim(), 0)],
        TitleStrategy::None => vec![unit(None, doc.text.trim(), 0)],
        TitleStrategy::SectionSplit => {
            let sections = split_sections(&doc.text);
            if sections.is_empty() {
                // headings only: keep the text rather than dropping the document
                return vec![unit(None, doc.text.trim(), 0)];
            }
            sections
                .into_iter()
                .enumerate()
                .map(|(i, (title, body))| unit(title, body, i))
                .collect()
        }
    }
}

const MAX_HEADING_CHARS: usize = 120;

/// A heading is a short line without terminal punctuation that is followed
/// by a blank line. Returns `(title, body)` pairs; text before the first
/// heading becomes an untitled section.
pub fn split_sections(text: &str) -> Vec<(Option<String>, &str)> {
    let lines: Vec<(usize, &str)> = text
        .split_inclusive('\n')
        .scan(0usize, |offset, line| {
            let start = *offset;
            *offset += line.len();
            Some((start, line))
        })
        .collect();

    let mut headings = Vec::new();
    for (i, (_, line)) in lines.iter().enumerate() {
        let next_blank = lines
            .get(i + 1)
            .is_some_and(|(_, next)| next.trim().is_empty());
        if next_blank && is_heading_line(line) {
            headings.push(i);
        }
    }

    let mut sections = Vec::new();
    let body_between = |from: usize, to: usize| text[from..to].trim();
    let first_heading_start = headings.first().map_or(text.len(), |&h| lines[h].0);
    let preamble = body_between(0, first_heading_start);
    if !preamble.is_empty() {
        sections.push((None, preamble));
    }
    for (k, &h) in headings.iter().enumerate() {
        let (start, line) = lines[h];
        let body_start = start + line.len();
        let body_end = headings.get(k + 1).map_or(text.len(), |&n| lines[n].0);
        let body = body_between(body_start, body_end);
        if body.is_empty() {
            continue;
        }
        let title = line.trim().trim_start_matches('#').trim().to_string();
        sections.push((Some(title), body));
    }
    sections
}

fn is_heading_line(line: &str) -> bool {
    let line = line.trim();
    if line.is_empty() || line.chars().count() > MAX_HEADING_CHARS {
        return false;
    }
    let last = line.chars().next_back().unwrap_or(' ');
    if matches!(last, '.' | '!' | '?' | ':' | ';' | ',') {
        return false;
    }
    line.chars().any(char::is_alphabetic)
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Rule-based sentence splitter: a sentence ends at `.`, `!` or `?` followed
/// by whitespace or end of text, or at a newline. Leading and trailing
/// whitespace is excluded from each span.
pub fn segment_sentences(text: &str) -> Vec<Sentence> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let push = |out: &mut Vec<Sentence>, s: usize, e: usize| {
        let slice = text[s..e].trim_end();
        if !slice.is_empty() {
            out.push(Sentence {
                text: slice.to_string(),
                start: s,
                end: s + slice.len(),
            });
        }
    };
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c == '\n' {
            if let Some(s) = start.take() {
                push(&mut out, s, i);
            }
            continue;
        }
        let s = match start {
            Some(s) => s,
            None if c.is_whitespace() => continue,
            None => {
                start = Some(i);
                i
            }
        };
        if is_terminator(c) {
            let boundary = match chars.peek() {
                None => true,
                Some(&(_, next)) => next.is_whitespace(),
            };
            if boundary {
                push(&mut out, s, i + c.len_utf8());
                start = None;
            }
        }
    }
    if let Some(s) = start {
        push(&mut out, s, text.len());
    }
    out
}
