use proptest::prelude::*;
use serde_json::json;

use shapegpt_agent::CallRecord;
use shapegpt_bench::{compute_metrics, Category, GroundTruthTrace, TaskOutcome};
use shapegpt_tools::{Status, ToolCall, Verdict};

fn rec(name: &str, n: u64, verdict: Verdict, status: Status) -> CallRecord {
    CallRecord { call: ToolCall::new(name, json!({"layer": "a", "distance": n})), verdict, status }
}

fn outcome(i: usize, success: bool, exception: bool) -> TaskOutcome {
    let mut calls = vec![rec("buffer", i as u64, Verdict::Valid, Status::Ok)];
    if exception {
        calls.push(rec("buffer", 0, Verdict::MissingParam("layer".into()), Status::Error));
    }
    TaskOutcome {
        task_id: format!("t{i:02}"),
        category: Category::ALL[i % 4],
        produced_outputs: vec![],
        success,
        had_exception: exception,
        calls,
        failure: None,
        events: vec![],
    }
}

fn traces(n: usize) -> Vec<GroundTruthTrace> {
    (0..n)
        .map(|i| GroundTruthTrace { task_id: format!("t{i:02}"), calls: vec![ToolCall::new("buffer", json!({}))] })
        .collect()
}

#[test]
fn forty_of_forty_two_with_one_exception() {
    let outs: Vec<_> = (0..42).map(|i| outcome(i, i < 40, i == 0)).collect();
    let m = compute_metrics(&outs, &traces(42));
    assert!((100.0 * m.success_rate - 95.24).abs() < 0.01, "{}", m.success_rate);
    assert!((100.0 * m.accuracy - 92.86).abs() < 0.01, "{}", m.accuracy);
    // oracle: plain fractions
    assert_eq!(m.success_rate, 40.0 / 42.0);
    assert_eq!(m.accuracy, 39.0 / 42.0);
}

#[test]
fn low_accuracy_pattern_keeps_accuracy_below_success() {
    // 10 successes, of which 3 ran without an exception.
    let outs: Vec<_> = (0..42).map(|i| outcome(i, i < 10, i >= 3)).collect();
    let m = compute_metrics(&outs, &traces(42));
    assert!((100.0 * m.accuracy - 7.14).abs() < 0.01);
    assert!((100.0 * m.success_rate - 23.81).abs() < 0.01);
    assert!(m.accuracy <= m.success_rate);
}

#[test]
fn parameter_accuracy_and_repetition() {
    let mut o = outcome(0, true, false);
    o.calls = vec![
        rec("buffer", 1, Verdict::Valid, Status::Ok),
        rec("buffer", 1, Verdict::Valid, Status::Ok),
        rec("buffer", 1, Verdict::Valid, Status::Ok),
        rec("clip", 1, Verdict::MissingParam("boundary".into()), Status::Error),
    ];
    let m = compute_metrics(&[o], &traces(4));
    assert_eq!((m.valid_calls, m.total_calls), (3, 4));
    assert_eq!(m.parameter_accuracy, 0.75);
    assert_eq!(m.repeated_calls, 2);
    assert_eq!(m.repetition_rate, 0.5);
}

#[test]
fn one_repeat_over_three_ground_truth_calls() {
    let mut o = outcome(0, true, false);
    o.calls = vec![
        rec("buffer", 1, Verdict::Valid, Status::Ok),
        rec("buffer", 2, Verdict::Valid, Status::Ok),
        rec("buffer", 1, Verdict::Valid, Status::Ok),
    ];
    let tr = vec![GroundTruthTrace {
        task_id: "t00".into(),
        calls: vec![ToolCall::new("a", json!({})), ToolCall::new("b", json!({})), ToolCall::new("c", json!({}))],
    }];
    let m = compute_metrics(&[o], &tr);
    assert_eq!(m.repeated_calls, 1);
    assert!((m.repetition_rate - 0.3333).abs() < 1e-4);
}

#[test]
fn no_calls_means_full_parameter_accuracy() {
    let mut o = outcome(0, false, false);
    o.calls.clear();
    let m = compute_metrics(&[o], &traces(1));
    assert_eq!(m.parameter_accuracy, 1.0);
    assert_eq!(m.repetition_rate, 0.0);
}

#[test]
fn table_lists_every_category() {
    let outs: Vec<_> = (0..8).map(|i| outcome(i, true, false)).collect();
    let t = compute_metrics(&outs, &traces(8)).to_table();
    for c in Category::ALL {
        assert!(t.contains(c.name()));
    }
    assert!(t.contains("100.00%"));
}

proptest! {
    #[test]
    fn metrics_ignore_task_order(flags in prop::collection::vec((any::<bool>(), any::<bool>()), 1..60), seed in any::<u64>()) {
        let outs: Vec<_> = flags.iter().enumerate().map(|(i, &(s, e))| outcome(i, s, e)).collect();
        let mut shuffled = outs.clone();
        let n = shuffled.len();
        let mut x = seed | 1;
        for i in (1..n).rev() {
            x ^= x << 13; x ^= x >> 7; x ^= x << 17;
            shuffled.swap(i, (x % (i as u64 + 1)) as usize);
        }
        let a = compute_metrics(&outs, &traces(n));
        let b = compute_metrics(&shuffled, &traces(n));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn accuracy_never_exceeds_success(flags in prop::collection::vec((any::<bool>(), any::<bool>()), 1..60)) {
        let outs: Vec<_> = flags.iter().enumerate().map(|(i, &(s, e))| outcome(i, s, e)).collect();
        let m = compute_metrics(&outs, &traces(outs.len()));
        prop_assert!(m.accuracy <= m.success_rate);
        prop_assert!((0.0..=1.0).contains(&m.parameter_accuracy));
        for c in m.per_category.values() {
            prop_assert!(c.accuracy <= c.success_rate);
        }
    }
}
