#![allow(dead_code)]

pub mod oracle;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use readcomp::assembler::unwrap_record;
use readcomp::domain_vocab::build_domain_vocabulary;

pub const BIO_SENTENCES: &str = include_str!("../fixtures/bio_sentences.txt");
pub const GENERAL_SENTENCES: &str = include_str!("../fixtures/general_sentences.txt");
pub const BIO_TITLES: &str = include_str!("../fixtures/bio_titles.txt");
/// Everyday and academic English that a broad-coverage vocabulary would hold.
pub const GENERAL_WORDS: &str = include_str!("../fixtures/general_words.txt");

/// Sentence-initial connectives in the proportions they are sampled with.
pub const CONNECTIVES: [&str; 11] = [
    "However",
    "Thus",
    "Therefore",
    "Moreover",
    "In addition",
    "Furthermore",
    "In contrast",
    "Hence",
    "Similarly",
    "In other words",
    "Additionally",
];

pub fn lines(bank: &str) -> Vec<&str> {
    bank.lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct GenOptions {
    pub min_sentences: usize,
    pub max_sentences: usize,
    /// Probability that a sentence opens with a connective.
    pub connective_rate: f64,
    /// Every n-th document is long enough to need truncation.
    pub long_every: Option<usize>,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            min_sentences: 6,
            max_sentences: 12,
            connective_rate: 0.03,
            long_every: None,
        }
    }
}

fn with_connective(sentence: &str, connective: &str) -> String {
    let mut chars = sentence.chars();
    let first = chars.next().unwrap();
    let rest = chars.as_str();
    // keep acronyms and proper nouns such as "PST" or "Klebsiella" capitalised
    let keep = rest.chars().next().is_some_and(char::is_uppercase)
        || sentence.starts_with("Klebsiella")
        || sentence.starts_with("Parkinson");
    let first = if keep { first.to_string() } else { first.to_lowercase().to_string() };
    format!("{connective}, {first}{rest}")
}

fn paragraph(rng: &mut ChaCha8Rng, bank: &[&str], n: usize, connective_rate: f64) -> String {
    let mut out: Vec<String> = Vec::with_capacity(n);
    for i in 0..n {
        let s = *bank.choose(rng).unwrap();
        if i > 0 && rng.random_bool(connective_rate) {
            out.push(with_connective(s, CONNECTIVES.choose(rng).unwrap()));
        } else {
            out.push(s.to_string());
        }
    }
    out.join(" ")
}

/// Biomedical abstracts as `title\nbody`, reproducible from `seed`.
pub fn bio_documents(seed: u64, n: usize, opts: GenOptions) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bank = lines(BIO_SENTENCES);
    let titles = lines(BIO_TITLES);
    (0..n)
        .map(|i| {
            let long = opts.long_every.is_some_and(|k| i % k == k - 1);
            let count = if long {
                rng.random_range(140..200)
            } else {
                rng.random_range(opts.min_sentences..=opts.max_sentences)
            };
            let title = titles.choose(&mut rng).unwrap();
            format!("{title}\n{}", paragraph(&mut rng, &bank, count, opts.connective_rate))
        })
        .collect()
}

/// News-like documents used to train the general vocabulary.
pub fn general_documents(seed: u64, n: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bank = lines(GENERAL_SENTENCES);
    (0..n)
        .map(|_| {
            let count = rng.random_range(4..10);
            paragraph(&mut rng, &bank, count, 0.0)
        })
        .collect()
}

pub fn write_jsonl(path: &Path, texts: &[String]) {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).unwrap());
    for t in texts {
        serde_json::to_writer(&mut f, &serde_json::json!({ "text": t })).unwrap();
        f.write_all(b"\n").unwrap();
    }
    f.flush().unwrap();
}

pub fn read_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}

/// A temporary directory holding a biomedical corpus and both vocabularies.
pub struct Workspace {
    pub dir: tempfile::TempDir,
    pub corpus: PathBuf,
    pub domain_vocab: PathBuf,
    pub general_vocab: PathBuf,
}

impl Workspace {
    pub fn new(seed: u64, n_docs: usize, opts: GenOptions) -> Self {
        let docs = bio_documents(seed, n_docs, opts);
        Self::from_docs(&docs)
    }

    pub fn from_docs(docs: &[String]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("corpus.jsonl");
        write_jsonl(&corpus, docs);
        let domain_vocab = dir.path().join("domain.vocab");
        let general_vocab = dir.path().join("general.vocab");
        // the domain vocabulary is trained on the full bank so it does not
        // depend on which sentences a small sample happens to draw
        let mut domain_corpus: Vec<String> = docs.to_vec();
        domain_corpus.push(BIO_SENTENCES.to_string());
        build_domain_vocabulary(&domain_corpus, 32_000)
            .unwrap()
            .save(&domain_vocab)
            .unwrap();
        let mut general_corpus = general_documents(7, 400);
        general_corpus.push(GENERAL_WORDS.to_string());
        build_domain_vocabulary(&general_corpus, 32_000)
            .unwrap()
            .save(&general_vocab)
            .unwrap();
        Workspace {
            dir,
            corpus,
            domain_vocab,
            general_vocab,
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// `transform` arguments for this workspace writing to `out`.
    pub fn transform_args(&self, out: &Path, seed: u64) -> Vec<String> {
        self.transform_args_on(&self.corpus, out, seed)
    }

    /// Like [`Workspace::transform_args`] but reading another corpus.
    pub fn transform_args_on(&self, input: &Path, out: &Path, seed: u64) -> Vec<String> {
        [
            "transform",
            "--input",
            input.to_str().unwrap(),
            "--domain",
            "biomedicine",
            "--domain-vocab",
            self.domain_vocab.to_str().unwrap(),
            "--general-vocab",
            self.general_vocab.to_str().unwrap(),
            "--seed",
            &seed.to_string(),
            "--out",
            out.to_str().unwrap(),
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }
}

pub fn readcomp<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    readcomp_with_env(args, &[])
}

pub fn readcomp_with_env<I, S>(args: I, env: &[(&str, &str)]) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_readcomp"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("run readcomp")
}

pub fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "readcomp failed with {:?}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

const UNIT_SEPARATOR: &str = "\n<<<unit>>>\n";

pub fn golden_fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden").join(name)
}

/// Runs the pinned configuration over one domain fixture and returns the
/// produced texts alongside the expected ones.
pub fn run_golden(domain: &str) -> (Vec<String>, Vec<String>) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.jsonl");
    let input = golden_fixture(&format!("{domain}.jsonl"));
    let args: [PathBuf; 15] = [
        "transform".into(),
        "--config".into(),
        golden_fixture("run.toml"),
        "--input".into(),
        input,
        "--domain".into(),
        domain.into(),
        "--domain-vocab".into(),
        golden_fixture("domain.vocab"),
        "--general-vocab".into(),
        golden_fixture("general.vocab"),
        "--templates".into(),
        golden_fixture("templates.jsonl"),
        "--out".into(),
        out.clone(),
    ];
    assert_success(&readcomp(&args));
    let mut got = Vec::new();
    for line in read_lines(&out) {
        let text = unwrap_record(&line).unwrap();
        // one compact JSON object with a single "text" field
        assert_eq!(line, format!("{{\"text\":{}}}", serde_json::to_string(&text).unwrap()));
        got.push(text);
    }
    let expected = std::fs::read_to_string(golden_fixture(&format!("{domain}.expected.txt"))).unwrap();
    let expected = expected.split(UNIT_SEPARATOR).map(str::to_string).collect();
    (got, expected)
}
