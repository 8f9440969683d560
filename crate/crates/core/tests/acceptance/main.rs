//! End-to-end acceptance checks. Prints one `[PASS]`/`[FAIL]` line per criterion and exits
//! nonzero if any fails.

mod common;
mod criteria;
mod properties;

use std::process::ExitCode;
use std::time::Instant;

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

type Criterion = (&'static str, f64, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1 exact convex compilation", 60.0, criteria::convex_compilation),
        ("2 exact dc compilation", 60.0, criteria::dc_compilation),
        ("3 wide-to-deep rewrite", 60.0, criteria::wide_to_deep),
        ("4 continuous pipeline", 300.0, criteria::continuous_pipeline),
        ("5 convex rate", 120.0, criteria::convex_rate),
        ("6 dc decomposition soundness", 300.0, criteria::decomposition_soundness),
        ("7 property suites", 600.0, properties::run_all),
    ];
    let mut failed = 0;
    for (name, budget_s, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let in_time = secs <= budget_s;
        let pass = outcome.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] criterion {name}: {} ({secs:.1}s, limit {budget_s:.0}s{})",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            if in_time { "" } else { ", over time" },
        );
    }
    println!("acceptance: {} of 7 criteria passed", 7 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
