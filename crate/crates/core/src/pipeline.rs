//! The per-unit transform and the streaming driver that runs it over a
//! corpus with a worker pool while keeping output in input order.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembler::{
    compose, truncate_body, ComposeConfig, ReadingComprehensionText, TokenCounter,
    DEFAULT_MAX_BODY_TOKENS, DEFAULT_TOKEN_BUDGET,
};
use crate::corpus_io::{extract_units, segment_sentences, DocumentStream, DocumentUnit, RawDocument, TitleStrategy};
use crate::domain_vocab::{select_word2text_sentences, KeywordSet, DEFAULT_KEYWORD_THRESHOLD};
use crate::error::Result;
use crate::pattern_miner::{
    mine_intrinsic_tasks, mine_regex_tasks, CompiledPattern, CompletionConfig, SubCategory, TaskType,
};
use crate::seed::unit_rng;
use crate::stats_report::RunStats;
use crate::task_factory::{
    cap_subcategories, render_task, RenderConfig, TaskInstance, TemplateLibrary, DEFAULT_SUBCATEGORY_CAP,
};

/// Documents handed to the worker pool at a time.
pub const CHUNK_DOCS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSettings {
    pub seed: u64,
    pub title_strategy: TitleStrategy,
    pub max_body_tokens: usize,
    pub token_budget: usize,
    pub keyword_threshold: usize,
    pub cap: usize,
    pub render: RenderConfig,
    pub completion: CompletionConfig,
    pub compose: ComposeConfig,
}

impl TransformSettings {
    pub fn new(seed: u64, title_strategy: TitleStrategy) -> Self {
        TransformSettings {
            seed,
            title_strategy,
            max_body_tokens: DEFAULT_MAX_BODY_TOKENS,
            token_budget: DEFAULT_TOKEN_BUDGET,
            keyword_threshold: DEFAULT_KEYWORD_THRESHOLD,
            cap: DEFAULT_SUBCATEGORY_CAP,
            render: RenderConfig::default(),
            completion: CompletionConfig::default(),
            compose: ComposeConfig::default(),
        }
    }
}

pub struct Transformer {
    pub settings: TransformSettings,
    pub patterns: Vec<CompiledPattern>,
    pub library: TemplateLibrary,
    pub keywords: KeywordSet,
    pub counter: Arc<dyn TokenCounter>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitOutput {
    pub rc: ReadingComprehensionText,
    /// Tasks that shipped, in the order they were rendered.
    pub tasks: Vec<TaskInstance>,
    pub precap: BTreeMap<TaskType, usize>,
    pub dropped: BTreeMap<SubCategory, usize>,
    /// The truncated body the tasks were mined from.
    pub body: String,
    pub truncated: bool,
    pub over_budget: bool,
}

impl Transformer {
    pub fn transform_unit(&self, unit: &DocumentUnit) -> Result<UnitOutput> {
        let s = &self.settings;
        let mut rng = unit_rng(s.seed, &unit.source_id, unit.unit_index);

        let body = truncate_body(&unit.body, s.max_body_tokens, self.counter.as_ref());
        let truncated = body.len() < unit.body.len();
        let unit = DocumentUnit {
            body: body.to_string(),
            ..unit.clone()
        };

        let sentences = segment_sentences(&unit.body);
        let w2t = select_word2text_sentences(&sentences, &self.keywords, s.keyword_threshold);
        let mut mined = mine_regex_tasks(&unit, &self.patterns);
        mined.extend(mine_intrinsic_tasks(&unit, &w2t, &s.completion, &mut rng));

        let rendered = mined
            .iter()
            .map(|ex| render_task(ex, &unit, &self.library, &s.render, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let mut precap = BTreeMap::new();
        for t in &rendered {
            *precap.entry(t.task_type).or_insert(0) += 1;
        }
        let (tasks, dropped) = cap_subcategories(rendered, s.cap, &mut rng);
        let rc = compose(&unit, tasks.clone(), &self.library, &s.compose, &mut rng)?;
        let over_budget = self.counter.count(&rc.text) > s.token_budget;
        Ok(UnitOutput {
            rc,
            tasks,
            precap,
            dropped,
            body: unit.body,
            truncated,
            over_budget,
        })
    }

    pub fn transform_document(&self, doc: &RawDocument) -> Result<Vec<UnitOutput>> {
        extract_units(doc, self.settings.title_strategy)
            .iter()
            .map(|u| self.transform_unit(u))
            .collect()
    }
}

/// Streams documents through the transformer on a pool of `workers`
/// threads. `sink` sees unit outputs in input order regardless of the
/// number of workers.
pub fn run_transform<F>(
    transformer: &Transformer,
    mut docs: DocumentStream,
    workers: usize,
    mut sink: F,
) -> Result<RunStats>
where
    F: FnMut(&UnitOutput) -> Result<()>,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool construction");
    let mut stats = RunStats::default();
    let mut chunk: Vec<RawDocument> = Vec::with_capacity(CHUNK_DOCS);
    loop {
        chunk.clear();
        for doc in docs.by_ref() {
            chunk.push(doc?);
            if chunk.len() == CHUNK_DOCS {
                break;
            }
        }
        if chunk.is_empty() {
            break;
        }
        let outputs: Vec<Result<Vec<UnitOutput>>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|d| transformer.transform_document(d))
                .collect()
        });
        for doc_outputs in outputs {
            for out in doc_outputs? {
                stats.accumulate(&out.rc);
                stats.record_mining(&out.precap, &out.dropped);
                stats.truncated_bodies += out.truncated as u64;
                stats.over_budget_docs += out.over_budget as u64;
                sink(&out)?;
            }
        }
    }
    let counters = docs.counters();
    stats.docs_in = counters.records;
    stats.malformed_lines = counters.malformed;
    stats.empty_docs = counters.empty;
    Ok(stats)
}

/// One line of the task sidecar: what a unit shipped and how it got there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRecord {
    pub source_id: String,
    pub unit_index: usize,
    pub body: String,
    pub tasks: Vec<TaskInstance>,
    pub precap: BTreeMap<TaskType, usize>,
    pub dropped: BTreeMap<SubCategory, usize>,
    pub truncated: bool,
    pub over_budget: bool,
}

impl From<&UnitOutput> for UnitRecord {
    fn from(out: &UnitOutput) -> Self {
        UnitRecord {
            source_id: out.rc.source_id.clone(),
            unit_index: out.rc.unit_index,
            body: out.body.clone(),
            tasks: out.tasks.clone(),
            precap: out.precap.clone(),
            dropped: out.dropped.clone(),
            truncated: out.truncated,
            over_budget: out.over_budget,
        }
    }
}

/// Rebuilds output-side statistics from sidecar records. Input-side
/// counters (records read, malformed, empty) are not recoverable and stay 0.
pub fn recount<'a, I>(records: I) -> RunStats
where
    I: IntoIterator<Item = &'a UnitRecord>,
{
    let mut stats = RunStats::default();
    for r in records {
        stats.docs_out += 1;
        for t in &r.tasks {
            *stats.instances_by_type.entry(t.task_type).or_default() += 1;
        }
        if r.tasks.is_empty() {
            stats.no_task_docs += 1;
        }
        stats.record_mining(&r.precap, &r.dropped);
        stats.truncated_bodies += r.truncated as u64;
        stats.over_budget_docs += r.over_budget as u64;
    }
    stats
}
