//! Acceptance run: one line per criterion with its time budget.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use mefkit::selftest::{self, DEFAULT_SEED};

/// Criterion budgets in seconds; `None` where no time limit applies.
const BUDGETS: &[(&str, Option<u64>)] = &[
    ("betti", Some(1)),
    ("decomposition", Some(5)),
    ("monotone-equivalence", Some(30)),
    ("hull", Some(10)),
    ("irr-equicontinuity", Some(60)),
    ("mef", Some(60)),
    ("bound", None),
    ("snf", Some(30)),
    ("determinism", None),
];

fn main() -> ExitCode {
    let mut all = true;
    for &(name, budget) in BUDGETS {
        let suite = selftest::suite(name).expect("known suite");
        let start = Instant::now();
        let report = suite.run(DEFAULT_SEED);
        let elapsed = start.elapsed();
        let in_time = budget.map_or(true, |s| elapsed < Duration::from_secs(s));
        let pass = report.passed && in_time;
        all &= pass;
        let limit = budget.map_or("no limit".to_string(), |s| format!("< {s} s"));
        println!(
            "criterion {} {:<22} {}  ({:.2} s, {limit})",
            report.criterion,
            name,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        for c in report.checks.iter().filter(|c| !c.passed || !pass) {
            println!("    {} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
