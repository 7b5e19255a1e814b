//! Run statistics: task-type mix, tasks per text, cap rejections and input
//! problems.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::assembler::ReadingComprehensionText;
use crate::pattern_miner::{SubCategory, TaskType};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    /// Input records seen, including malformed and empty ones.
    pub docs_in: u64,
    pub malformed_lines: u64,
    pub empty_docs: u64,
    /// Output records written.
    pub docs_out: u64,
    /// Task instances that shipped, after capping.
    pub instances_by_type: BTreeMap<TaskType, u64>,
    /// Task instances rendered before capping.
    pub precap_by_type: BTreeMap<TaskType, u64>,
    pub capped_rejections: BTreeMap<SubCategory, u64>,
    /// Records emitted with no task attached.
    pub no_task_docs: u64,
    /// Records whose body was cut to the token limit.
    pub truncated_bodies: u64,
    /// Records whose full text exceeds the token budget.
    pub over_budget_docs: u64,
}

impl RunStats {
    pub fn accumulate(&mut self, rc: &ReadingComprehensionText) {
        self.docs_out += 1;
        for (t, n) in &rc.task_breakdown {
            *self.instances_by_type.entry(*t).or_default() += *n as u64;
        }
        if rc.no_tasks {
            self.no_task_docs += 1;
        }
    }

    pub fn record_mining(
        &mut self,
        precap: &BTreeMap<TaskType, usize>,
        dropped: &BTreeMap<SubCategory, usize>,
    ) {
        for (t, n) in precap {
            *self.precap_by_type.entry(*t).or_default() += *n as u64;
        }
        for (s, n) in dropped {
            *self.capped_rejections.entry(*s).or_default() += *n as u64;
        }
    }

    pub fn merge(&mut self, other: &RunStats) {
        self.docs_in += other.docs_in;
        self.malformed_lines += other.malformed_lines;
        self.empty_docs += other.empty_docs;
        self.docs_out += other.docs_out;
        for (t, n) in &other.instances_by_type {
            *self.instances_by_type.entry(*t).or_default() += n;
        }
        for (t, n) in &other.precap_by_type {
            *self.precap_by_type.entry(*t).or_default() += n;
        }
        for (s, n) in &other.capped_rejections {
            *self.capped_rejections.entry(*s).or_default() += n;
        }
        self.no_task_docs += other.no_task_docs;
        self.truncated_bodies += other.truncated_bodies;
        self.over_budget_docs += other.over_budget_docs;
    }

    pub fn total_instances(&self) -> u64 {
        self.instances_by_type.values().sum()
    }

    pub fn avg_tasks_per_doc(&self) -> Option<f64> {
        (self.docs_out > 0).then(|| self.total_instances() as f64 / self.docs_out as f64)
    }
}

/// Shares of each task type to one decimal place, rounded by largest
/// remainder so they sum to exactly 100.0. Empty when there are no counts.
pub fn percentages(counts: &BTreeMap<TaskType, u64>) -> BTreeMap<TaskType, f64> {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return BTreeMap::new();
    }
    let total = total as u128;
    let mut tenths: Vec<(TaskType, u128, u128)> = TaskType::ALL
        .iter()
        .map(|t| {
            let scaled = *counts.get(t).unwrap_or(&0) as u128 * 1000;
            (*t, scaled / total, scaled % total)
        })
        .collect();
    let assigned: u128 = tenths.iter().map(|(_, q, _)| q).sum();
    let mut by_remainder: Vec<usize> = (0..tenths.len()).collect();
    by_remainder.sort_by(|&a, &b| tenths[b].2.cmp(&tenths[a].2).then(a.cmp(&b)));
    for &i in by_remainder.iter().take((1000 - assigned) as usize) {
        tenths[i].1 += 1;
    }
    tenths
        .into_iter()
        .map(|(t, q, _)| (t, q as f64 / 10.0))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub stats: RunStats,
    pub total_instances: u64,
    pub percent_by_type: BTreeMap<TaskType, f64>,
    pub precap_percent_by_type: BTreeMap<TaskType, f64>,
    pub avg_tasks_per_doc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub fn render_report(stats: &RunStats) -> StatsReport {
    StatsReport {
        stats: stats.clone(),
        total_instances: stats.total_instances(),
        percent_by_type: percentages(&stats.instances_by_type),
        precap_percent_by_type: percentages(&stats.precap_by_type),
        avg_tasks_per_doc: stats.avg_tasks_per_doc(),
        note: (stats.docs_out == 0).then(|| "no output records; averages are undefined".to_string()),
    }
}

impl StatsReport {
    /// Plain-text table for the console.
    pub fn table(&self) -> String {
        let s = &self.stats;
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} {:>10} {:>8} {:>10} {:>8}", "task type", "shipped", "%", "pre-cap", "%");
        for t in TaskType::ALL {
            let pct = |m: &BTreeMap<TaskType, f64>| {
                m.get(&t).map_or_else(|| "n/a".to_string(), |p| format!("{p:.1}"))
            };
            let _ = writeln!(
                out,
                "{:<16} {:>10} {:>8} {:>10} {:>8}",
                t.as_str(),
                s.instances_by_type.get(&t).copied().unwrap_or(0),
                pct(&self.percent_by_type),
                s.precap_by_type.get(&t).copied().unwrap_or(0),
                pct(&self.precap_percent_by_type),
            );
        }
        let avg = self
            .avg_tasks_per_doc
            .map_or_else(|| "n/a".to_string(), |a| format!("{a:.3}"));
        let _ = writeln!(out, "records in {}, out {}, malformed {}, empty {}", s.docs_in, s.docs_out, s.malformed_lines, s.empty_docs);
        let _ = writeln!(out, "tasks per record {avg}; records without tasks {}", s.no_task_docs);
        let _ = writeln!(out, "truncated bodies {}; over token budget {}", s.truncated_bodies, s.over_budget_docs);
        if !s.capped_rejections.is_empty() {
            let dropped: Vec<String> = s
                .capped_rejections
                .iter()
                .map(|(k, v)| format!("{k} {v}"))
                .collect();
            let _ = writeln!(out, "dropped by cap: {}", dropped.join(", "));
        }
        if let Some(note) = &self.note {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }
}
