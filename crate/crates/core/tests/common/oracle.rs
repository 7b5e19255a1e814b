//! A scanner that finds the same matches as the compiled mining patterns
//! without using regular expressions. Only the three template shapes used
//! by the built-in pattern file are supported.

use std::collections::BTreeMap;

use readcomp::pattern_miner::MiningPattern;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleMatch {
    pub sub_category: String,
    pub slots: BTreeMap<String, String>,
}

const MIN_SENT_CHARS: usize = 50;
const MIN_WORD_CHARS: usize = 10;

fn is_term(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_word_char(c: char) -> bool {
    !(is_term(c) || matches!(c, '\n' | ',' | ';' | '"') || c.is_whitespace())
}

fn chars(s: &str) -> usize {
    s.chars().count()
}

/// A maximal run of non-terminator, non-newline text and the terminator run
/// that follows it (empty when the run ends at a newline or end of text).
#[derive(Debug, Clone, Copy)]
struct Segment {
    start: usize,
    end: usize,
    term_end: usize,
}

fn segments(text: &str) -> Vec<Segment> {
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let at = |k: usize| bytes.get(k).map_or(text.len(), |(b, _)| *b);
    let mut out = Vec::new();
    let mut k = 0;
    while k < bytes.len() {
        let start = at(k);
        while k < bytes.len() && !is_term(bytes[k].1) && bytes[k].1 != '\n' {
            k += 1;
        }
        let end = at(k);
        while k < bytes.len() && is_term(bytes[k].1) {
            k += 1;
        }
        let term_end = at(k);
        if k < bytes.len() && bytes[k].1 == '\n' && term_end == end {
            k += 1;
        }
        out.push(Segment { start, end, term_end });
    }
    out
}

fn trimmed(s: &str) -> String {
    s.trim().to_string()
}

/// Sentence pairs joined by a verbalizer at the start of the second one.
fn pair_matches(text: &str, verbalizers: &[String], sep: &str) -> Vec<(usize, BTreeMap<String, String>)> {
    let segs = segments(text);
    let mut out = Vec::new();
    let mut i = 0;
    while i + 1 < segs.len() {
        let (a, b) = (segs[i], segs[i + 1]);
        let a_ok = a.term_end > a.end && chars(&text[a.start..a.end]) >= MIN_SENT_CHARS && b.start == a.term_end;
        let found = a_ok.then(|| {
            verbalizers.iter().find_map(|v| {
                let prefix = format!(" {v}{sep}");
                let seg_b = &text[b.start..b.end];
                let rest = seg_b.strip_prefix(prefix.as_str())?;
                (b.term_end > b.end && chars(rest) >= MIN_SENT_CHARS).then(|| {
                    let slots = BTreeMap::from([
                        ("SENT1".to_string(), trimmed(&text[a.start..a.term_end])),
                        ("VERBAL".to_string(), v.clone()),
                        ("SENT2".to_string(), trimmed(&text[b.start + prefix.len()..b.term_end])),
                    ]);
                    (a.start, slots)
                })
            })
        });
        match found.flatten() {
            Some(m) => {
                out.push(m);
                i += 2;
            }
            None => i += 1,
        }
    }
    out
}

/// A long token, a verbalizer, then a sentence.
fn definition_matches(text: &str, verbalizers: &[String]) -> Vec<(usize, BTreeMap<String, String>)> {
    let mut sites: Vec<(usize, usize)> = Vec::new();
    for (vi, v) in verbalizers.iter().enumerate() {
        let needle = format!(" {v} ");
        let mut from = 0;
        while let Some(off) = text[from..].find(&needle) {
            sites.push((from + off, vi));
            from += off + 1;
        }
    }
    sites.sort();

    let mut out = Vec::new();
    let mut pos = 0;
    for (q, vi) in sites {
        if q < pos {
            continue;
        }
        let v = &verbalizers[vi];
        let word_start = text[pos..q]
            .char_indices()
            .rev()
            .find(|(_, c)| !is_word_char(*c))
            .map_or(pos, |(i, c)| pos + i + c.len_utf8());
        let word = &text[word_start..q];
        if chars(word) < MIN_WORD_CHARS {
            continue;
        }
        let sent_start = q + v.len() + 2;
        let rest = &text[sent_start..];
        let body_len = rest.find(|c: char| is_term(c) || c == '\n').unwrap_or(rest.len());
        let after = &rest[body_len..];
        let term_len = after.len() - after.trim_start_matches(is_term).len();
        if term_len == 0 || chars(&rest[..body_len]) < MIN_SENT_CHARS {
            continue;
        }
        let end = sent_start + body_len + term_len;
        let slots = BTreeMap::from([
            ("WORD".to_string(), word.to_string()),
            ("VERBAL".to_string(), v.clone()),
            ("SENT".to_string(), trimmed(&text[sent_start..end])),
        ]);
        out.push((word_start, slots));
        pos = end;
    }
    out
}

/// All matches of all patterns, ordered by where the whole match starts
/// (before slot trimming), ties broken by pattern order.
pub fn mine(text: &str, patterns: &[MiningPattern]) -> Vec<OracleMatch> {
    let mut found: Vec<(usize, usize, OracleMatch)> = Vec::new();
    for (pi, p) in patterns.iter().enumerate() {
        let matches = match p.template.as_str() {
            "{SENT1} {VERBAL}, {SENT2}" => pair_matches(text, &p.verbalizers, ", "),
            "{SENT1} {VERBAL} {SENT2}" => pair_matches(text, &p.verbalizers, " "),
            "{WORD} {VERBAL} {SENT}" => definition_matches(text, &p.verbalizers),
            other => panic!("oracle does not support template {other}"),
        };
        for (start, slots) in matches {
            let sub_category = p.sub_category.to_string();
            found.push((start, pi, OracleMatch { sub_category, slots }));
        }
    }
    found.sort_by_key(|(start, pi, _)| (*start, *pi));
    found.into_iter().map(|(_, _, m)| m).collect()
}
