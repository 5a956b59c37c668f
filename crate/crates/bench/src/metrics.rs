use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use shapegpt_agent::{count_repeated_calls, CallRecord, Event};

use crate::task::{Category, GroundTruthTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub task_id: String,
    pub category: Category,
    pub produced_outputs: Vec<String>,
    pub success: bool,
    pub had_exception: bool,
    pub calls: Vec<CallRecord>,
    /// Why grading failed, when it did.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    /// Session log, when the runner produced one.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub tasks: usize,
    pub successes: usize,
    pub exception_free_successes: usize,
    pub success_rate: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tasks: usize,
    pub successes: usize,
    pub exception_free_successes: usize,
    pub total_calls: usize,
    pub valid_calls: usize,
    pub repeated_calls: usize,
    pub ground_truth_calls: usize,
    /// Exception-free successes over tasks.
    pub accuracy: f64,
    pub success_rate: f64,
    /// Valid calls over all calls; 1 when no calls were made.
    pub parameter_accuracy: f64,
    /// Repeated calls over ground-truth calls.
    pub repetition_rate: f64,
    pub per_category: BTreeMap<String, CategoryMetrics>,
}

fn ratio(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

pub fn compute_metrics(outcomes: &[TaskOutcome], traces: &[GroundTruthTrace]) -> MetricsReport {
    let tasks = outcomes.len();
    let successes = outcomes.iter().filter(|o| o.success).count();
    let clean = outcomes.iter().filter(|o| o.success && !o.had_exception).count();
    let total_calls: usize = outcomes.iter().map(|o| o.calls.len()).sum();
    let valid_calls: usize = outcomes.iter().flat_map(|o| &o.calls).filter(|c| c.verdict.is_valid()).count();
    let repeated_calls: usize = outcomes
        .iter()
        .map(|o| count_repeated_calls(&o.calls.iter().map(|c| c.call.clone()).collect::<Vec<_>>()))
        .sum();
    let ground_truth_calls: usize = traces.iter().map(|t| t.calls.len()).sum();
    let mut per_category = BTreeMap::new();
    for cat in Category::ALL {
        let of: Vec<&TaskOutcome> = outcomes.iter().filter(|o| o.category == cat).collect();
        let s = of.iter().filter(|o| o.success).count();
        let c = of.iter().filter(|o| o.success && !o.had_exception).count();
        per_category.insert(
            cat.name().to_string(),
            CategoryMetrics {
                tasks: of.len(),
                successes: s,
                exception_free_successes: c,
                success_rate: ratio(s, of.len()),
                accuracy: ratio(c, of.len()),
            },
        );
    }
    MetricsReport {
        tasks,
        successes,
        exception_free_successes: clean,
        total_calls,
        valid_calls,
        repeated_calls,
        ground_truth_calls,
        accuracy: ratio(clean, tasks),
        success_rate: ratio(successes, tasks),
        parameter_accuracy: if total_calls == 0 { 1.0 } else { ratio(valid_calls, total_calls) },
        repetition_rate: ratio(repeated_calls, ground_truth_calls),
        per_category,
    }
}

impl MetricsReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<26} {:>6} {:>10} {:>10}", "category", "tasks", "accuracy", "success");
        for (name, m) in &self.per_category {
            let _ = writeln!(
                s,
                "{:<26} {:>6} {:>9.2}% {:>9.2}%",
                name,
                m.tasks,
                100.0 * m.accuracy,
                100.0 * m.success_rate
            );
        }
        let _ = writeln!(
            s,
            "{:<26} {:>6} {:>9.2}% {:>9.2}%",
            "all",
            self.tasks,
            100.0 * self.accuracy,
            100.0 * self.success_rate
        );
        let _ = writeln!(s, "parameter accuracy  {:.2}% ({}/{})", 100.0 * self.parameter_accuracy, self.valid_calls, self.total_calls);
        let _ = writeln!(
            s,
            "repetition rate     {:.4} ({}/{})",
            self.repetition_rate, self.repeated_calls, self.ground_truth_calls
        );
        s
    }
}
