use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use readcomp::assembler::{wrap_record, ComposeConfig, TokenCounter, VocabCounter, WordCounter};
use readcomp::config::{CounterKind, PipelineConfig, ValidConfig};
use readcomp::corpus_io::{stream_documents, CorpusFormat, ReaderOptions, TitleStrategy};
use readcomp::domain_vocab::{build_domain_vocabulary, derive_keywords, Vocabulary, DEFAULT_VOCAB_SIZE};
use readcomp::instruction_mixer::{mix_files, MixRatio, Sampling};
use readcomp::pattern_miner::{compile_all, CompletionConfig, MiningPattern};
use readcomp::pipeline::{recount, run_transform, TransformSettings, Transformer, UnitRecord};
use readcomp::probe_builder::{make_four_choice, ProbeFilter, ProbeItem, DEFAULT_STEM_TEMPLATE};
use readcomp::seed::item_rng;
use readcomp::stats_report::{render_report, RunStats, StatsReport};
use readcomp::task_factory::{RenderConfig, TemplateLibrary, MIN_FORWARD_TEMPLATES};

/// Environment variable holding the worker count for `transform`.
pub const WORKERS_ENV: &str = "READCOMP_WORKERS";

#[derive(Parser)]
#[command(name = "readcomp", version, about = "Turn domain corpora into reading-comprehension training text")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Train a subword vocabulary on a corpus.
    BuildVocab(BuildVocabArgs),
    /// Mine tasks from a corpus and write reading-comprehension records.
    Transform(Box<TransformArgs>),
    /// Interleave reading-comprehension records with general instructions.
    Mix(MixArgs),
    /// Build knowledge-probe datasets.
    Probe(ProbeArgs),
    /// Print a stats report, or recount one from a task sidecar.
    Stats(StatsArgs),
}

#[derive(Args)]
pub struct BuildVocabArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "jsonl")]
    pub format: CorpusFormat,
    #[arg(long, default_value = "text")]
    pub text_field: String,
    #[arg(long, default_value_t = DEFAULT_VOCAB_SIZE)]
    pub vocab_size: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Default)]
pub struct TransformArgs {
    /// TOML config; flags below override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<CorpusFormat>,
    #[arg(long)]
    pub text_field: Option<String>,
    #[arg(long)]
    pub title_field: Option<String>,
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub title_strategy: Option<TitleStrategy>,
    #[arg(long)]
    pub domain_vocab: Option<PathBuf>,
    #[arg(long)]
    pub general_vocab: Option<PathBuf>,
    #[arg(long)]
    pub counter: Option<CounterArg>,
    #[arg(long)]
    pub counter_vocab: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_tokens: Option<usize>,
    #[arg(long)]
    pub cap: Option<usize>,
    #[arg(long)]
    pub reverse_prob: Option<f64>,
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long)]
    pub patterns: Option<PathBuf>,
    /// Keep tasks in mining order instead of shuffling them.
    #[arg(long)]
    pub no_shuffle: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub tasks_out: Option<PathBuf>,
    #[arg(long)]
    pub stats_out: Option<PathBuf>,
    #[arg(long)]
    pub pack_out: Option<PathBuf>,
    #[arg(long)]
    pub eos: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum CounterArg {
    Word,
    Vocab,
}

#[derive(Args)]
pub struct MixArgs {
    #[arg(long)]
    pub rc: PathBuf,
    #[arg(long)]
    pub gi: PathBuf,
    /// Records of reading comprehension to general instructions, e.g. 1:2.
    #[arg(long)]
    pub ratio: MixRatio,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "truncate")]
    pub sampling: Sampling,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ProbeMode {
    Filter,
    Fourchoice,
}

#[derive(Args)]
pub struct ProbeArgs {
    #[arg(long, value_enum)]
    pub mode: ProbeMode,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated question words that disqualify a stem.
    #[arg(long, value_delimiter = ',')]
    pub question_words: Option<Vec<String>>,
    #[arg(long, default_value = DEFAULT_STEM_TEMPLATE)]
    pub stem_template: String,
    /// One label per line; defaults to the labels present in the input.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Args)]
pub struct StatsArgs {
    /// A stats JSON file written by `transform --stats-out`.
    #[arg(long, conflicts_with = "tasks", required_unless_present = "tasks")]
    pub input: Option<PathBuf>,
    /// A task sidecar written by `transform --tasks-out`.
    #[arg(long)]
    pub tasks: Option<PathBuf>,
    /// Print the structured report instead of the table.
    #[arg(long)]
    pub json: bool,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildVocab(args) => build_vocab(args),
        Command::Transform(args) => transform(*args).map(|_| ()),
        Command::Mix(args) => mix(args),
        Command::Probe(args) => probe(args),
        Command::Stats(args) => stats(args),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

/// Writer that hashes everything passing through it.
struct HashingWriter<W: Write> {
    inner: W,
    hasher: Sha256,
}

impl<W: Write> HashingWriter<W> {
    fn new(inner: W) -> Self {
        HashingWriter {
            inner,
            hasher: Sha256::new(),
        }
    }

    fn finish(mut self) -> std::io::Result<String> {
        self.inner.flush()?;
        Ok(hex::encode(self.hasher.finalize()))
    }
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn write_manifest<T: Serialize>(out: &Path, body: &T) -> Result<()> {
    let path = manifest_path(out);
    let mut value = serde_json::to_value(body)?;
    let created_at = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    value["created_at"] = json!(created_at);
    value["tool_version"] = json!(env!("CARGO_PKG_VERSION"));
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn build_vocab(args: BuildVocabArgs) -> Result<()> {
    let mut options = ReaderOptions::new(args.format, "custom".parse()?);
    options.text_field = args.text_field;
    let docs = stream_documents(&args.corpus, options)?;
    let texts = docs.filter_map(|d| d.ok()).map(|d| d.text);
    let vocab = build_domain_vocabulary(texts, args.vocab_size)?;
    vocab.save(&args.out)?;
    eprintln!("wrote {} pieces to {}", vocab.size(), args.out.display());
    Ok(())
}

fn merged_config(args: &TransformArgs) -> Result<PipelineConfig> {
    let mut c = match &args.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    macro_rules! set {
        ($flag:expr, $field:expr) => {
            if let Some(v) = $flag.clone() {
                $field = v;
            }
        };
    }
    set!(args.input.clone().map(Some), c.input.path);
    set!(args.format, c.input.format);
    set!(args.text_field, c.input.text_field);
    set!(args.title_field, c.input.title_field);
    set!(args.domain.clone().map(Some), c.domain);
    set!(args.title_strategy.map(Some), c.input.title_strategy);
    set!(args.domain_vocab.clone().map(Some), c.vocab.domain);
    set!(args.general_vocab.clone().map(Some), c.vocab.general);
    set!(
        args.counter.map(|k| match k {
            CounterArg::Word => CounterKind::Word,
            CounterArg::Vocab => CounterKind::Vocab,
        }),
        c.vocab.counter
    );
    set!(args.counter_vocab.clone().map(Some), c.vocab.counter_vocab);
    set!(args.seed.map(Some), c.seed);
    set!(args.max_tokens, c.assembly.max_body_tokens);
    set!(args.cap, c.tasks.cap);
    set!(args.reverse_prob, c.tasks.reverse_probability);
    set!(args.templates.clone().map(Some), c.tasks.templates);
    set!(args.patterns.clone().map(Some), c.tasks.patterns);
    if args.no_shuffle {
        c.tasks.shuffle = false;
    }
    set!(args.out.clone().map(Some), c.output.path);
    set!(args.tasks_out.clone().map(Some), c.output.tasks);
    set!(args.stats_out.clone().map(Some), c.output.stats);
    set!(args.pack_out.clone().map(Some), c.output.pack);
    set!(args.eos, c.output.eos);
    Ok(c)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn build_transformer(cfg: &ValidConfig) -> Result<Transformer> {
    let raw = &cfg.raw;
    let library = match &raw.tasks.templates {
        Some(p) => TemplateLibrary::parse(&read_text(p)?)?,
        None => TemplateLibrary::builtin(),
    };
    library.validate_coverage(MIN_FORWARD_TEMPLATES)?;
    let patterns = match &raw.tasks.patterns {
        Some(p) => MiningPattern::parse_records(&read_text(p)?)?,
        None => MiningPattern::builtin(),
    };
    let patterns = compile_all(&patterns)?;

    let domain_vocab = Vocabulary::load(&cfg.domain_vocab)?;
    let general_vocab = Vocabulary::load(&cfg.general_vocab)?;
    let keywords = derive_keywords(
        &domain_vocab,
        &general_vocab,
        raw.vocab.min_keyword_chars,
        cfg.domain.clone(),
    );
    let counter: Arc<dyn TokenCounter> = match raw.vocab.counter {
        CounterKind::Word => Arc::new(WordCounter),
        CounterKind::Vocab => match &raw.vocab.counter_vocab {
            Some(p) => Arc::new(VocabCounter::new(&Vocabulary::load(p)?)),
            None => Arc::new(VocabCounter::new(&domain_vocab)),
        },
    };

    let mut settings = TransformSettings::new(cfg.seed, cfg.title_strategy);
    settings.max_body_tokens = raw.assembly.max_body_tokens;
    settings.token_budget = raw.assembly.token_budget;
    settings.keyword_threshold = raw.vocab.keyword_threshold;
    settings.cap = raw.tasks.cap;
    settings.render = RenderConfig {
        reverse_probability: raw.tasks.reverse_probability,
    };
    settings.completion = CompletionConfig {
        min_fraction: raw.tasks.completion_min_fraction,
        max_fraction: raw.tasks.completion_max_fraction,
    };
    settings.compose = ComposeConfig {
        shuffle: raw.tasks.shuffle,
    };
    Ok(Transformer {
        settings,
        patterns,
        library,
        keywords,
        counter,
    })
}

fn workers() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .with_context(|| format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))?;
            if n == 0 {
                bail!("{WORKERS_ENV} must be a positive integer, got 0");
            }
            Ok(n)
        }
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub fn transform(args: TransformArgs) -> Result<RunStats> {
    let raw = merged_config(&args)?;
    let cfg = raw.validate()?;
    let transformer = build_transformer(&cfg)?;

    let mut options = ReaderOptions::new(raw.input.format, cfg.domain.clone());
    options.text_field = raw.input.text_field.clone();
    options.title_field = raw.input.title_field.clone();
    let docs = stream_documents(&cfg.input, options)?;

    let mut out = HashingWriter::new(create(&cfg.output)?);
    let mut tasks_out = raw.output.tasks.as_deref().map(create).transpose()?;
    let mut pack_out = raw.output.pack.as_deref().map(create).transpose()?;
    let eos = raw.output.eos.clone();
    let mut first = true;

    let stats = run_transform(&transformer, docs, workers()?, |unit| {
        let io = |e| readcomp::Error::io(&cfg.output, e);
        out.write_all(wrap_record(&unit.rc.text).as_bytes()).map_err(io)?;
        out.write_all(b"\n").map_err(io)?;
        if let Some(w) = tasks_out.as_mut() {
            serde_json::to_writer(&mut *w, &UnitRecord::from(unit))?;
            w.write_all(b"\n").map_err(io)?;
        }
        if let Some(w) = pack_out.as_mut() {
            if !first {
                w.write_all(eos.as_bytes()).map_err(io)?;
            }
            w.write_all(unit.rc.text.as_bytes()).map_err(io)?;
        }
        first = false;
        Ok(())
    })?;

    let output_sha256 = out.finish()?;
    for w in [tasks_out.as_mut(), pack_out.as_mut()].into_iter().flatten() {
        w.flush()?;
    }

    let report = render_report(&stats);
    if let Some(path) = &raw.output.stats {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &report)?;
        w.write_all(b"\n")?;
        w.flush()?;
    }
    eprint!("{}", report.table());

    write_manifest(
        &cfg.output,
        &json!({
            "command": "transform",
            "config_sha256": raw.fingerprint(),
            "config": raw,
            "seed": cfg.seed,
            "counts": {
                "docs_in": stats.docs_in,
                "docs_out": stats.docs_out,
                "malformed": stats.malformed_lines,
                "empty": stats.empty_docs,
                "task_instances": stats.total_instances(),
            },
            "output_sha256": output_sha256,
        }),
    )?;
    Ok(stats)
}

fn mix(args: MixArgs) -> Result<()> {
    let mut out = HashingWriter::new(create(&args.out)?);
    let summary = mix_files(&args.rc, &args.gi, args.ratio, args.seed, args.sampling, &mut out)?;
    let output_sha256 = out.finish()?;
    eprintln!(
        "mixed {} reading-comprehension and {} instruction records ({} available) into {}",
        summary.plan.n_rc,
        summary.plan.n_gi_target,
        summary.n_gi_available,
        args.out.display()
    );
    write_manifest(
        &args.out,
        &json!({
            "command": "mix",
            "seed": args.seed,
            "ratio": args.ratio.to_string(),
            "plan": summary.plan,
            "counts": {
                "rc": summary.plan.n_rc,
                "gi": summary.plan.n_gi_target,
                "gi_available": summary.n_gi_available,
                "records_out": summary.records_out,
            },
            "output_sha256": output_sha256,
        }),
    )
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .with_context(|| format!("{} line {}", path.display(), i + 1))?;
        out.push(rec);
    }
    Ok(out)
}

#[derive(serde::Deserialize)]
struct LabeledText {
    #[serde(alias = "stem", alias = "contract")]
    text: String,
    label: String,
}

fn probe(args: ProbeArgs) -> Result<()> {
    let mut w = create(&args.out)?;
    let written = match args.mode {
        ProbeMode::Filter => {
            let filter = match &args.question_words {
                Some(words) => ProbeFilter::new(words),
                None => ProbeFilter::default(),
            };
            let items: Vec<ProbeItem> = read_jsonl(&args.input)?;
            let total = items.len();
            let kept = filter.apply(items);
            for it in &kept {
                serde_json::to_writer(&mut w, it)?;
                w.write_all(b"\n")?;
            }
            eprintln!("kept {} of {total} items", kept.len());
            kept.len()
        }
        ProbeMode::Fourchoice => {
            let records: Vec<LabeledText> = read_jsonl(&args.input)?;
            let pool: Vec<String> = match &args.labels {
                Some(p) => read_text(p)?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(str::to_string)
                    .collect(),
                None => {
                    let mut seen = HashSet::new();
                    records
                        .iter()
                        .filter(|r| seen.insert(r.label.clone()))
                        .map(|r| r.label.clone())
                        .collect()
                }
            };
            for (i, r) in records.iter().enumerate() {
                let mut rng = item_rng(args.seed, i as u64);
                let item = make_four_choice(&r.text, &r.label, &pool, &args.stem_template, &mut rng)?;
                serde_json::to_writer(&mut w, &item)?;
                w.write_all(b"\n")?;
            }
            records.len()
        }
    };
    w.flush()?;
    eprintln!("wrote {written} items to {}", args.out.display());
    Ok(())
}

fn stats(args: StatsArgs) -> Result<()> {
    let report: StatsReport = match (&args.input, &args.tasks) {
        (Some(p), _) => serde_json::from_str(&read_text(p)?)
            .with_context(|| format!("parsing {}", p.display()))?,
        (None, Some(p)) => {
            let records: Vec<UnitRecord> = read_jsonl(p)?;
            render_report(&recount(&records))
        }
        (None, None) => bail!("one of --input or --tasks is required"),
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report.table());
    }
    Ok(())
}
