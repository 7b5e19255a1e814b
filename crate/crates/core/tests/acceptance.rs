//! Acceptance checks, one line per criterion. Runs as a plain binary so the
//! lines appear in order under `cargo test`.

mod common;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use readcomp::corpus_io::{DocumentUnit, Domain};
use readcomp::pattern_miner::{compile_all, mine_regex_tasks, MiningPattern, SubCategory, TaskType};
use readcomp::pipeline::UnitRecord;
use readcomp::probe_builder::ProbeItem;
use readcomp::stats_report::StatsReport;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use common::oracle::{self, OracleMatch};
use common::{assert_success, bio_documents, read_lines, readcomp, readcomp_with_env, run_golden, GenOptions, Workspace};

const SEED: u64 = 20240917;
const CAP: usize = 2;
const MIN_KEYWORD_CHARS: usize = 10;
const KEYWORD_THRESHOLD: usize = 3;
const MAX_BODY_TOKENS: usize = 1800;
const AVG_TASKS_RANGE: (f64, f64) = (1.0, 3.5);
const CHI_SQUARED_MIN_P: f64 = 0.01;
const PROBE_DRAWS: usize = 10_000;
const PROBE_LABELS: usize = 100;
const STREAM_BYTES: u64 = 1 << 30;
const STREAM_MAX_RSS_MIB: u64 = 512;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn regex_expansions() -> Outcome {
    let expected: BTreeMap<&str, &str> = BTreeMap::from([
        ("topic", r#"([^.!?\n]{50,}[.!?]+) (talks about|is about|'s topic is) ([^.!?\n]{50,}[.!?]+)"#),
        ("definition", r#"([^.!?\n,;\"\s]{10,}) (is defined as|'s definition is) ([^.!?\n]{50,}[.!?]+)"#),
        ("entail", r#"([^.!?\n]{50,}[.!?]+) (Yes|Therefore|Thus|Accordingly|Hence|For this reason), ([^.!?\n]{50,}[.!?]+)"#),
        ("neutral", r#"([^.!?\n]{50,}[.!?]+) (Maybe|Furthermore|Additionally|Moreover|In addition), ([^.!?\n]{50,}[.!?]+)"#),
        ("contradict", r#"([^.!?\n]{50,}[.!?]+) (No|However|But|On the contrary|In contrast|Whereas), ([^.!?\n]{50,}[.!?]+)"#),
        ("cause_effect", r#"([^.!?\n]{50,}[.!?]+) (Therefore|Thus|Accordingly|Hence|For this reason), ([^.!?\n]{50,}[.!?]+)"#),
        ("effect_cause", r#"([^.!?\n]{50,}[.!?]+) (due to|on account of|owing to) ([^.!?\n]{50,}[.!?]+)"#),
        ("similar", r#"([^.!?\n]{50,}[.!?]+) (In other words|Namely|That is to say|Similarly|Equally), ([^.!?\n]{50,}[.!?]+)"#),
        ("different", r#"([^.!?\n]{50,}[.!?]+) (No|However|But|On the contrary|In contrast|Whereas), ([^.!?\n]{50,}[.!?]+)"#),
    ]);
    let compiled = compile_all(&MiningPattern::builtin()).map_err(|e| e.to_string())?;
    let mut wrong = Vec::new();
    for cp in &compiled {
        let sub = cp.pattern().sub_category.to_string();
        if expected.get(sub.as_str()) != Some(&cp.source()) {
            wrong.push(format!("{sub}: {}", cp.source()));
        }
    }
    check(
        wrong.is_empty() && compiled.len() == expected.len(),
        format!("{}/{} patterns expand to the exact expected strings", compiled.len(), expected.len()),
        format!("mismatched expansions: {wrong:?}"),
    )
}

fn goldens() -> Outcome {
    let mut failed = Vec::new();
    for domain in ["biomedicine", "finance", "law"] {
        let (got, expected) = run_golden(domain);
        if got != expected {
            failed.push(domain);
        }
    }
    check(
        failed.is_empty(),
        "biomedicine, finance and law outputs equal the hand-written fixtures byte for byte".into(),
        format!("golden mismatch for {failed:?}"),
    )
}

/// Keywords as an outside reader would compute them from the two vocab files.
fn keyword_oracle(domain: &Path, general: &Path) -> HashSet<String> {
    let general: HashSet<String> = read_lines(general).into_iter().collect();
    read_lines(domain)
        .into_iter()
        .filter(|p| !general.contains(p))
        .filter(|p| p.chars().count() >= MIN_KEYWORD_CHARS && p.chars().any(char::is_alphabetic))
        .map(|p| p.to_lowercase())
        .collect()
}

fn distinct_keywords(sentence: &str, keywords: &HashSet<String>) -> usize {
    sentence
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|w| w.chars().count() >= MIN_KEYWORD_CHARS && keywords.contains(w))
        .collect::<HashSet<_>>()
        .len()
}

struct SampleRun {
    ws: Workspace,
    sidecar: Vec<UnitRecord>,
    report: StatsReport,
}

fn sample_run(seed: u64, n_docs: usize, opts: GenOptions) -> SampleRun {
    let ws = Workspace::new(seed, n_docs, opts);
    let out = ws.path("out.jsonl");
    let tasks = ws.path("tasks.jsonl");
    let stats = ws.path("stats.json");
    let mut args = ws.transform_args(&out, SEED);
    args.extend(["--tasks-out".into(), tasks.display().to_string()]);
    args.extend(["--stats-out".into(), stats.display().to_string()]);
    assert_success(&readcomp(&args));
    let sidecar = read_lines(&tasks).iter().map(|l| serde_json::from_str(l).unwrap()).collect();
    let report = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    SampleRun { ws, sidecar, report }
}

fn caps_and_keywords(run: &SampleRun) -> Outcome {
    let keywords = keyword_oracle(&run.ws.domain_vocab, &run.ws.general_vocab);
    let mut over_cap = 0;
    let mut w2t = 0;
    let mut bad_sentences = 0;
    let mut bad_words = 0;
    for unit in &run.sidecar {
        let mut per_sub: HashMap<SubCategory, usize> = HashMap::new();
        for t in &unit.tasks {
            *per_sub.entry(t.sub_category).or_default() += 1;
            if t.sub_category != SubCategory::Word2text {
                continue;
            }
            w2t += 1;
            if distinct_keywords(&t.slots["SENT"], &keywords) <= KEYWORD_THRESHOLD {
                bad_sentences += 1;
            }
            for w in t.slots["WORDS"].split(", ") {
                if w.chars().count() < MIN_KEYWORD_CHARS || !keywords.contains(&w.to_lowercase()) {
                    bad_words += 1;
                }
            }
        }
        over_cap += per_sub.values().filter(|&&n| n > CAP).count();
    }
    check(
        run.sidecar.len() == 1000 && over_cap == 0 && w2t > 0 && bad_sentences == 0 && bad_words == 0,
        format!(
            "1000 units, no sub-category above {CAP}; {w2t} word-to-text sentences all carry >{KEYWORD_THRESHOLD} distinct keywords of >={MIN_KEYWORD_CHARS} chars from domain minus general"
        ),
        format!(
            "units {}, over cap {over_cap}, word-to-text {w2t}, weak sentences {bad_sentences}, bad keywords {bad_words}",
            run.sidecar.len()
        ),
    )
}

fn truncation() -> Outcome {
    let opts = GenOptions {
        long_every: Some(10),
        ..GenOptions::default()
    };
    let run = sample_run(SEED + 1, 1000, opts);
    let originals: Vec<String> = bio_documents(SEED + 1, 1000, opts)
        .into_iter()
        .map(|d| d.split_once('\n').unwrap().1.trim().to_string())
        .collect();
    let longest = run.sidecar.iter().map(|u| u.body.split_whitespace().count()).max().unwrap_or(0);
    let not_prefix = run
        .sidecar
        .iter()
        .zip(&originals)
        .filter(|(u, orig)| !orig.starts_with(&u.body))
        .count();
    let truncated = run.sidecar.iter().filter(|u| u.truncated).count();
    check(
        longest <= MAX_BODY_TOKENS && not_prefix == 0 && truncated == 100,
        format!("{truncated} of 1000 bodies truncated; longest kept body {longest} <= {MAX_BODY_TOKENS} tokens; all bodies are prefixes of their source"),
        format!("longest {longest}, non-prefix bodies {not_prefix}, truncated {truncated} (expected 100)"),
    )
}

fn write_lines(path: &Path, lines: &[String]) {
    let mut w = BufWriter::new(File::create(path).unwrap());
    for l in lines {
        writeln!(w, "{l}").unwrap();
    }
    w.flush().unwrap();
}

fn mix_ratios() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let gi: Vec<String> = (0..3000).map(|i| format!("{{\"text\":\"instruction {i}\"}}")).collect();
    let gi_path = dir.path().join("gi.jsonl");
    write_lines(&gi_path, &gi);
    let mut failures = Vec::new();
    let mut cases = 0;
    for (a, b) in [(1usize, 1usize), (1, 2), (2, 1)] {
        for n_rc in [1usize, 7, 1000] {
            cases += 1;
            let rc: Vec<String> = (0..n_rc).map(|i| format!("{{\"text\":\"reading {i}\"}}")).collect();
            let rc_path = dir.path().join("rc.jsonl");
            write_lines(&rc_path, &rc);
            let out = dir.path().join("mixed.jsonl");
            let run = readcomp([
                "mix", "--rc", rc_path.to_str().unwrap(), "--gi", gi_path.to_str().unwrap(),
                "--ratio", &format!("{a}:{b}"), "--seed", "3", "--out", out.to_str().unwrap(),
            ]);
            if !run.status.success() {
                failures.push(format!("{a}:{b} n_rc={n_rc}: exit {:?}", run.status.code()));
                continue;
            }
            // round half up of n_rc * b / a, computed in floating point
            let n_gi = (n_rc as f64 * b as f64 / a as f64 + 0.5).floor() as usize;
            let mut want: Vec<String> = rc.iter().chain(&gi[..n_gi]).cloned().collect();
            let mut got = read_lines(&out);
            want.sort();
            got.sort();
            if got != want {
                failures.push(format!("{a}:{b} n_rc={n_rc}: multiset differs ({} lines, expected {})", got.len(), want.len()));
            }
        }
    }
    check(
        failures.is_empty(),
        format!("{cases}/9 ratio x size cases emit exactly the input records plus round-half-up(n*gi/rc) instructions"),
        failures.join("; "),
    )
}

fn manifest_without_timestamp(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("created_at");
    v
}

fn determinism() -> Outcome {
    let ws = Workspace::new(SEED + 2, 600, GenOptions::default());
    let out = ws.path("out.jsonl");
    let tasks = ws.path("tasks.jsonl");
    let mixed = ws.path("mixed.jsonl");
    let gi = ws.path("gi.jsonl");
    let gi_lines: Vec<String> = (0..700).map(|i| format!("{{\"text\":\"instruction {i}\"}}")).collect();
    write_lines(&gi, &gi_lines);
    let mut snapshots = Vec::new();
    for workers in ["1", "1", "4"] {
        let mut args = ws.transform_args(&out, SEED);
        args.extend(["--tasks-out".into(), tasks.display().to_string()]);
        assert_success(&readcomp_with_env(&args, &[("READCOMP_WORKERS", workers)]));
        assert_success(&readcomp([
            "mix", "--rc", out.to_str().unwrap(), "--gi", gi.to_str().unwrap(),
            "--ratio", "1:1", "--seed", "11", "--out", mixed.to_str().unwrap(),
        ]));
        snapshots.push((
            std::fs::read(&out).unwrap(),
            std::fs::read(&tasks).unwrap(),
            manifest_without_timestamp(&ws.path("out.jsonl.manifest.json")),
            std::fs::read(&mixed).unwrap(),
            manifest_without_timestamp(&ws.path("mixed.jsonl.manifest.json")),
        ));
    }
    let same = snapshots.windows(2).all(|w| w[0] == w[1]);
    check(
        same,
        "transform+mix twice with 1 worker and once with 4 workers: identical output, sidecar, mix output and manifests (minus created_at)".into(),
        "outputs differ between runs or worker counts".into(),
    )
}

fn avg_tasks(run: &SampleRun) -> Outcome {
    let avg = run.report.avg_tasks_per_doc.unwrap_or(0.0);
    let (lo, hi) = AVG_TASKS_RANGE;
    check(
        (lo..=hi).contains(&avg),
        format!("avg tasks per text {avg:.3} within [{lo}, {hi}] on the 1000-document sample"),
        format!("avg tasks per text {avg:.3} outside [{lo}, {hi}]"),
    )
}

fn top_types(run: &SampleRun) -> Outcome {
    let mut by_share: Vec<(TaskType, f64)> = run.report.percent_by_type.iter().map(|(t, p)| (*t, *p)).collect();
    by_share.sort_by(|a, b| b.1.total_cmp(&a.1));
    let top: HashSet<TaskType> = by_share.iter().take(3).map(|(t, _)| *t).collect();
    let want = HashSet::from([TaskType::WordToText, TaskType::Summarization, TaskType::TextCompletion]);
    let shown: Vec<String> = by_share.iter().map(|(t, p)| format!("{t} {p:.1}%")).collect();
    check(
        top == want,
        format!("top three types are word_to_text, summarization, text_completion ({})", shown.join(", ")),
        format!("top three differ: {}", shown.join(", ")),
    )
}

fn chi_squared_p(observed: &[u64]) -> f64 {
    let total: u64 = observed.iter().sum();
    let expected = total as f64 / observed.len() as f64;
    let stat: f64 = observed.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

fn probes() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let violations = index::sample(&mut rng, 500, 100);
    let bad: HashSet<usize> = violations.iter().collect();
    let violating = |i: usize| match i % 6 {
        0 => format!("What is the main function of item {i}"),
        1 => format!("which organ produces item {i}"),
        2 => format!("Item {i} drug of choice is:"),
        3 => format!("Item {i} first symptom is?"),
        4 => format!("Item {i} value is -"),
        _ => format!("A __ B is item {i}"),
    };
    let items: Vec<ProbeItem> = (0..500)
        .map(|i| ProbeItem {
            stem: if bad.contains(&i) { violating(i) } else { format!("The enzyme responsible for reaction {i} is") },
            options: vec!["a".into(), "b".into(), "c".into(), "d".into()],
            gold_index: 0,
            subject: "s".into(),
        })
        .collect();
    let input = dir.path().join("probe.jsonl");
    write_lines(&input, &items.iter().map(|it| serde_json::to_string(it).unwrap()).collect::<Vec<_>>());
    let once = dir.path().join("once.jsonl");
    let twice = dir.path().join("twice.jsonl");
    assert_success(&readcomp(["probe", "--mode", "filter", "--input", input.to_str().unwrap(), "--out", once.to_str().unwrap()]));
    assert_success(&readcomp(["probe", "--mode", "filter", "--input", once.to_str().unwrap(), "--out", twice.to_str().unwrap()]));
    let kept: Vec<ProbeItem> = read_lines(&once).iter().map(|l| serde_json::from_str(l).unwrap()).collect();
    let want: Vec<ProbeItem> = items.iter().enumerate().filter(|(i, _)| !bad.contains(i)).map(|(_, it)| it.clone()).collect();
    let fixpoint = std::fs::read(&once).unwrap() == std::fs::read(&twice).unwrap();

    let labels: Vec<String> = (0..PROBE_LABELS).map(|i| format!("subject {i:02}")).collect();
    let labels_path = dir.path().join("labels.txt");
    write_lines(&labels_path, &labels);
    let gold = &labels[0];
    let records: Vec<String> = (0..PROBE_DRAWS)
        .map(|i| serde_json::json!({ "text": format!("Contract clause {i}."), "label": gold }).to_string())
        .collect();
    let fc_in = dir.path().join("contracts.jsonl");
    let fc_out = dir.path().join("fourchoice.jsonl");
    write_lines(&fc_in, &records);
    assert_success(&readcomp([
        "probe", "--mode", "fourchoice", "--input", fc_in.to_str().unwrap(), "--out", fc_out.to_str().unwrap(),
        "--labels", labels_path.to_str().unwrap(), "--seed", "5",
    ]));
    let drawn: Vec<ProbeItem> = read_lines(&fc_out).iter().map(|l| serde_json::from_str(l).unwrap()).collect();
    let mut distractors: BTreeMap<&str, u64> = labels[1..].iter().map(|l| (l.as_str(), 0)).collect();
    let mut positions = [0u64; 4];
    let mut malformed = 0;
    for it in &drawn {
        let distinct: HashSet<&String> = it.options.iter().collect();
        if it.options.len() != 4 || distinct.len() != 4 || &it.options[it.gold_index] != gold {
            malformed += 1;
            continue;
        }
        positions[it.gold_index] += 1;
        for (k, o) in it.options.iter().enumerate() {
            if k != it.gold_index {
                *distractors.get_mut(o.as_str()).unwrap() += 1;
            }
        }
    }
    let p_distractor = chi_squared_p(&distractors.values().copied().collect::<Vec<_>>());
    let p_position = chi_squared_p(&positions);
    check(
        kept == want && fixpoint && drawn.len() == PROBE_DRAWS && malformed == 0
            && p_distractor > CHI_SQUARED_MIN_P && p_position > CHI_SQUARED_MIN_P,
        format!(
            "filter kept {}/500 (all 100 seeded violations removed, fixpoint holds); {PROBE_DRAWS} four-choice draws over {PROBE_LABELS} labels: distractor p={p_distractor:.3}, gold position p={p_position:.3} (> {CHI_SQUARED_MIN_P})",
            kept.len()
        ),
        format!(
            "kept {} (expected {}), fixpoint {fixpoint}, draws {}, malformed {malformed}, distractor p={p_distractor:.4}, position p={p_position:.4}",
            kept.len(), want.len(), drawn.len()
        ),
    )
}

fn oracle_agreement() -> Outcome {
    let opts = GenOptions {
        connective_rate: 0.3,
        ..GenOptions::default()
    };
    let docs = bio_documents(SEED + 3, 500, opts);
    let bodies: Vec<&str> = docs
        .iter()
        .map(|d| d.split_once('\n').unwrap().1)
        .filter(|b| b.len() <= 5 * 1024)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let picks = index::sample(&mut rng, bodies.len(), 50);
    let patterns = compile_all(&MiningPattern::builtin()).unwrap();
    let mut mismatched = 0;
    let mut matches = 0;
    for i in picks.iter() {
        let unit = DocumentUnit {
            title: None,
            body: bodies[i].to_string(),
            source_id: format!("{i}"),
            unit_index: 0,
            domain: Domain::Biomedicine,
        };
        let got: Vec<OracleMatch> = mine_regex_tasks(&unit, &patterns)
            .into_iter()
            .map(|ex| OracleMatch {
                sub_category: ex.sub_category.to_string(),
                slots: ex.slots.into_iter().map(|(k, v)| (k, v.text)).collect(),
            })
            .collect();
        let want = oracle::mine(bodies[i], &MiningPattern::builtin());
        matches += want.len();
        if got != want {
            mismatched += 1;
        }
    }
    check(
        mismatched == 0 && matches > 0,
        format!("50 random units of <=5 KiB: regex mining equals the scanning oracle ({matches} matches)"),
        format!("{mismatched} of 50 units disagree with the oracle"),
    )
}

fn count_lines(path: &Path) -> u64 {
    let mut reader = BufReader::with_capacity(1 << 20, File::open(path).unwrap());
    let mut n = 0;
    loop {
        let buf = reader.fill_buf().unwrap();
        if buf.is_empty() {
            return n;
        }
        n += buf.iter().filter(|&&b| b == b'\n').count() as u64;
        let len = buf.len();
        reader.consume(len);
    }
}

/// Peak resident set of a finished child in KiB, via wait4.
fn wait_max_rss(child: std::process::Child) -> (bool, u64) {
    let pid = child.id() as libc::pid_t;
    let mut status = 0;
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    let rc = unsafe { libc::wait4(pid, &mut status, 0, &mut usage) };
    assert_eq!(rc, pid, "wait4 failed");
    std::mem::forget(child);
    (libc::WIFEXITED(status) && libc::WEXITSTATUS(status) == 0, usage.ru_maxrss as u64)
}

fn streaming() -> Outcome {
    let ws = Workspace::new(SEED + 4, 50, GenOptions::default());
    let big = ws.path("big.jsonl");
    let mut written = 0u64;
    let mut docs_in = 0u64;
    {
        let mut w = BufWriter::with_capacity(1 << 20, File::create(&big).unwrap());
        let mut batch = 0;
        while written < STREAM_BYTES {
            for d in bio_documents(SEED + 100 + batch, 10_000, GenOptions::default()) {
                let line = serde_json::json!({ "text": d }).to_string();
                w.write_all(line.as_bytes()).unwrap();
                w.write_all(b"\n").unwrap();
                written += line.len() as u64 + 1;
                docs_in += 1;
            }
            batch += 1;
        }
        w.flush().unwrap();
    }
    let out = ws.path("big.out.jsonl");
    let stats = ws.path("big.stats.json");
    let mut args = ws.transform_args_on(&big, &out, SEED);
    args.extend(["--stats-out".into(), stats.display().to_string()]);
    let started = Instant::now();
    let child = Command::new(env!("CARGO_BIN_EXE_readcomp"))
        .args(&args)
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let (ok, rss_kib) = wait_max_rss(child);
    let elapsed = started.elapsed().as_secs_f64();
    if !ok {
        return Err("transform failed on the streaming corpus".into());
    }
    let lines_out = count_lines(&out);
    let report: StatsReport = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    let rss_mib = rss_kib / 1024;
    let conserved = lines_out == docs_in && report.stats.docs_in == docs_in && report.stats.docs_out == docs_in;
    check(
        rss_mib < STREAM_MAX_RSS_MIB && conserved,
        format!(
            "{:.2} GiB corpus in {elapsed:.0}s, {docs_in} lines in and {lines_out} out; peak RSS {rss_mib} MiB < {STREAM_MAX_RSS_MIB} MiB",
            written as f64 / (1u64 << 30) as f64
        ),
        format!(
            "peak RSS {rss_mib} MiB (limit {STREAM_MAX_RSS_MIB}), lines in {docs_in}, out {lines_out}, stats in {} out {}",
            report.stats.docs_in, report.stats.docs_out
        ),
    )
}

fn run(name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let started = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|panic| {
        let msg = panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into());
        Err(msg)
    });
    let elapsed = started.elapsed();
    let outcome = match (outcome, budget) {
        (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.1?}, budget {limit:?}")),
        (other, _) => other,
    };
    let timing = match budget {
        Some(limit) => format!("[{elapsed:.1?} of {limit:.1?}]"),
        None => format!("[{elapsed:.1?}]"),
    };
    match outcome {
        Ok(detail) => {
            println!("PASS {name}: {detail} {timing}");
            true
        }
        Err(detail) => {
            println!("FAIL {name}: {detail} {timing}");
            false
        }
    }
}

fn secs(n: u64) -> Option<Duration> {
    Some(Duration::from_secs(n))
}

fn main() {
    let started = Instant::now();
    let sample = catch_unwind(|| sample_run(SEED, 1000, GenOptions::default()));
    let sample_time = started.elapsed();
    let sample = sample.as_ref().ok();
    let need_sample = |f: fn(&SampleRun) -> Outcome| move || sample.map_or_else(|| Err("sample run failed".into()), f);
    // the shared 1000-document run counts against the cap criterion's budget
    let cap_budget = Duration::from_secs(60).checked_sub(sample_time).unwrap_or_default();

    let results = [
        run("01 regex expansions", secs(1), regex_expansions),
        run("02 domain scaffolds", secs(5), goldens),
        run("03 cap and keyword selection", Some(cap_budget), need_sample(caps_and_keywords)),
        run("04 body truncation", secs(60), truncation),
        run("05 mix ratios", secs(10), mix_ratios),
        run("06 determinism", secs(120), determinism),
        run("07 tasks per text", None, need_sample(avg_tasks)),
        run("08 task type ranking", None, need_sample(top_types)),
        run("09 probe datasets", secs(30), probes),
        run("10 mining oracle", secs(60), oracle_agreement),
        run("11 bounded-memory streaming", None, streaming),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
