//! TOML run configuration for `transform`, with validation that reports
//! every problem at once.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assembler::{DEFAULT_EOS, DEFAULT_MAX_BODY_TOKENS, DEFAULT_TOKEN_BUDGET};
use crate::corpus_io::{CorpusFormat, Domain, TitleStrategy};
use crate::domain_vocab::{DEFAULT_KEYWORD_THRESHOLD, DEFAULT_MIN_KEYWORD_CHARS};
use crate::error::{Error, Result};
use crate::task_factory::{DEFAULT_REVERSE_PROBABILITY, DEFAULT_SUBCATEGORY_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CounterKind {
    /// Whitespace-delimited words.
    #[default]
    Word,
    /// Greedy subword segmentation with `vocab.counter_vocab` (or the
    /// domain vocabulary when unset).
    Vocab,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub path: Option<PathBuf>,
    pub format: CorpusFormat,
    pub text_field: String,
    pub title_field: String,
    /// Defaults to the domain's own strategy.
    pub title_strategy: Option<TitleStrategy>,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig {
            path: None,
            format: CorpusFormat::JsonlTextField,
            text_field: "text".into(),
            title_field: "title".into(),
            title_strategy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabConfig {
    pub domain: Option<PathBuf>,
    pub general: Option<PathBuf>,
    pub min_keyword_chars: usize,
    pub keyword_threshold: usize,
    pub counter: CounterKind,
    pub counter_vocab: Option<PathBuf>,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            domain: None,
            general: None,
            min_keyword_chars: DEFAULT_MIN_KEYWORD_CHARS,
            keyword_threshold: DEFAULT_KEYWORD_THRESHOLD,
            counter: CounterKind::Word,
            counter_vocab: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub cap: usize,
    pub reverse_probability: f64,
    pub completion_min_fraction: f64,
    pub completion_max_fraction: f64,
    pub shuffle: bool,
    /// Replaces the built-in template library.
    pub templates: Option<PathBuf>,
    /// Replaces the built-in mining patterns.
    pub patterns: Option<PathBuf>,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            cap: DEFAULT_SUBCATEGORY_CAP,
            reverse_probability: DEFAULT_REVERSE_PROBABILITY,
            completion_min_fraction: 0.4,
            completion_max_fraction: 0.7,
            shuffle: true,
            templates: None,
            patterns: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssemblyConfig {
    pub max_body_tokens: usize,
    pub token_budget: usize,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig {
            max_body_tokens: DEFAULT_MAX_BODY_TOKENS,
            token_budget: DEFAULT_TOKEN_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    /// Sidecar with every shipped task instance, one unit per line.
    pub tasks: Option<PathBuf>,
    pub stats: Option<PathBuf>,
    /// Packed text stream with `eos` between records.
    pub pack: Option<PathBuf>,
    pub eos: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            path: None,
            tasks: None,
            stats: None,
            pack: None,
            eos: DEFAULT_EOS.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub domain: Option<String>,
    pub input: InputConfig,
    pub vocab: VocabConfig,
    pub tasks: TaskConfig,
    pub assembly: AssemblyConfig,
    pub output: OutputConfig,
}

/// A configuration that passed validation; required fields are resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidConfig {
    pub raw: PipelineConfig,
    pub seed: u64,
    pub domain: Domain,
    pub input: PathBuf,
    pub title_strategy: TitleStrategy,
    pub domain_vocab: PathBuf,
    pub general_vocab: PathBuf,
    pub output: PathBuf,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidConfig(mut problems) => {
                problems.insert(0, format!("in {}", path.display()));
                Error::InvalidConfig(problems)
            }
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(vec![e.to_string()]))
    }

    /// Checks required fields, ranges and file existence; all problems are
    /// collected into one error.
    pub fn validate(&self) -> Result<ValidConfig> {
        let mut problems = Vec::new();
        let mut require = |field: &str, value: Option<&PathBuf>, must_exist: bool| -> Option<PathBuf> {
            match value {
                None => {
                    problems.push(format!("{field} is required"));
                    None
                }
                Some(p) if must_exist && !p.exists() => {
                    problems.push(format!("{field}: {} does not exist", p.display()));
                    None
                }
                Some(p) => Some(p.clone()),
            }
        };
        let input = require("input.path", self.input.path.as_ref(), true);
        let domain_vocab = require("vocab.domain", self.vocab.domain.as_ref(), true);
        let general_vocab = require("vocab.general", self.vocab.general.as_ref(), true);
        let output = require("output.path", self.output.path.as_ref(), false);
        for (field, path) in [
            ("tasks.templates", &self.tasks.templates),
            ("tasks.patterns", &self.tasks.patterns),
            ("vocab.counter_vocab", &self.vocab.counter_vocab),
        ] {
            if let Some(p) = path {
                if !p.exists() {
                    problems.push(format!("{field}: {} does not exist", p.display()));
                }
            }
        }

        if self.seed.is_none() {
            problems.push("seed is required".into());
        }
        let domain = match self.domain.as_deref().map(str::parse::<Domain>) {
            None => {
                problems.push("domain is required".into());
                None
            }
            Some(Err(_)) => {
                problems.push("domain must not be empty".into());
                None
            }
            Some(Ok(d)) => Some(d),
        };

        if self.tasks.cap == 0 {
            problems.push("tasks.cap must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.tasks.reverse_probability) {
            problems.push("tasks.reverse_probability must lie in [0, 1]".into());
        }
        let (lo, hi) = (self.tasks.completion_min_fraction, self.tasks.completion_max_fraction);
        if !(0.0 < lo && lo <= hi && hi < 1.0) {
            problems.push("tasks.completion_*_fraction must satisfy 0 < min <= max < 1".into());
        }
        if self.assembly.max_body_tokens == 0 {
            problems.push("assembly.max_body_tokens must be positive".into());
        }
        if self.vocab.min_keyword_chars == 0 {
            problems.push("vocab.min_keyword_chars must be positive".into());
        }
        if self.output.eos.is_empty() && self.output.pack.is_some() {
            problems.push("output.eos must not be empty when output.pack is set".into());
        }
        if let (Some(out), Some(inp)) = (&output, &input) {
            if out == inp {
                problems.push("output.path must differ from input.path".into());
            }
        }

        if !problems.is_empty() {
            return Err(Error::InvalidConfig(problems));
        }
        let domain = domain.expect("checked above");
        let title_strategy = self
            .input
            .title_strategy
            .unwrap_or_else(|| domain.default_title_strategy());
        Ok(ValidConfig {
            raw: self.clone(),
            seed: self.seed.expect("checked above"),
            domain,
            input: input.expect("checked above"),
            title_strategy,
            domain_vocab: domain_vocab.expect("checked above"),
            general_vocab: general_vocab.expect("checked above"),
            output: output.expect("checked above"),
        })
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
