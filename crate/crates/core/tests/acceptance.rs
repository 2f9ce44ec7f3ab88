//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! Pinned limits: zero failures everywhere (values are exact rationals,
//! tolerance 0); lemma2 under 60 s, fact14 under 5 s, thm10mdp under 120 s;
//! minimum instance counts as listed in `CRITERIA`.

use std::process::ExitCode;
use std::time::Duration;

use onecounter::suites::{self, SuiteReport};

struct Criterion {
    id: u32,
    suite: &'static str,
    min_cases: usize,
    time_limit: Option<Duration>,
}

const CRITERIA: [Criterion; 12] = [
    Criterion { id: 1, suite: "lemma2", min_cases: 1806, time_limit: Some(Duration::from_secs(60)) },
    Criterion { id: 2, suite: "lemma4", min_cases: 1806, time_limit: None },
    Criterion { id: 3, suite: "fact14", min_cases: 12 * 10_001 + 56, time_limit: Some(Duration::from_secs(5)) },
    Criterion { id: 4, suite: "periodicity", min_cases: 200, time_limit: None },
    Criterion { id: 5, suite: "qbf", min_cases: 100, time_limit: None },
    Criterion { id: 6, suite: "prop1", min_cases: 1, time_limit: None },
    Criterion { id: 7, suite: "thm8", min_cases: 2 * 20, time_limit: None },
    Criterion { id: 8, suite: "prop2", min_cases: 6, time_limit: None },
    Criterion { id: 9, suite: "wagner", min_cases: 100, time_limit: None },
    Criterion { id: 10, suite: "lemma5mdp", min_cases: 1, time_limit: None },
    Criterion { id: 11, suite: "thm10mdp", min_cases: 10, time_limit: Some(Duration::from_secs(120)) },
    Criterion { id: 12, suite: "honesty", min_cases: 1, time_limit: None },
];

fn judge(c: &Criterion, r: &SuiteReport) -> Vec<String> {
    let mut problems = Vec::new();
    if !r.ok() {
        problems.push("suite failed".to_string());
    }
    if r.total < c.min_cases {
        problems.push(format!("only {} cases, need {}", r.total, c.min_cases));
    }
    if let Some(limit) = c.time_limit {
        if r.elapsed > limit {
            problems.push(format!("took longer than {} s", limit.as_secs()));
        }
    }
    problems
}

fn main() -> ExitCode {
    let mut failed = 0;
    for c in &CRITERIA {
        let report = suites::run(c.suite, None).expect("known suite");
        let problems = judge(c, &report);
        let verdict = if problems.is_empty() { "pass" } else { "FAIL" };
        println!("criterion {:>2} [{verdict}] {report}", c.id);
        for p in &problems {
            println!("             {p}");
        }
        failed += usize::from(!problems.is_empty());
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
