//! Runner for named pass/fail checks with timing; used by the acceptance
//! test target.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {} ({:.2}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

/// Runs `f`; an `Err` or a panic is a failure. A time limit, when given,
/// is part of the check.
pub fn run_check(name: &str, limit: Option<Duration>, f: impl FnOnce() -> Result<String, String>) -> CheckResult {
    let t0 = Instant::now();
    let r = catch_unwind(AssertUnwindSafe(f));
    let elapsed = t0.elapsed();
    let (mut passed, mut detail) = match r {
        Ok(Ok(d)) => (true, d),
        Ok(Err(d)) => (false, d),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            (false, format!("panic: {msg}"))
        }
    };
    if let Some(l) = limit {
        if elapsed > l {
            passed = false;
            detail = format!("{detail}; took longer than {:.0}s", l.as_secs_f64());
        }
    }
    CheckResult { name: name.to_string(), passed, detail, elapsed }
}

/// `Err(msg)` unless `cond`.
pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
