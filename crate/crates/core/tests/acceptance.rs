//! Acceptance suite. Prints one line per criterion and exits non-zero on an
//! unexpected failure.
//!
//! `ADJBAI_ACCEPT_TRIALS` overrides the Monte Carlo trial count.

use std::process::ExitCode;

use adjbai::design::RoundingRule;
use adjbai::harness::acceptance::{acceptance_suite, run_criterion, AcceptanceConfig, CriterionResult};

/// Known to fail: on the circle benchmark the G-optimal and adjacent-optimal
/// designs coincide, so the two methods cannot separate.
const EXPECTED_FAILURES: [u32; 1] = [11];

fn config() -> AcceptanceConfig {
    let mut cfg = AcceptanceConfig::default();
    if let Some(t) = std::env::var("ADJBAI_ACCEPT_TRIALS").ok().and_then(|v| v.parse().ok()) {
        cfg.trials = t;
    }
    cfg
}

fn line(c: &CriterionResult) -> String {
    format!("criterion {:>2} {:<26} {}  {}", c.id, c.name, if c.passed { "PASS" } else { "FAIL" }, c.summary)
}

fn main() -> ExitCode {
    let cfg = config();
    let dir = tempfile::tempdir().expect("tempdir");
    let manifest = acceptance_suite(dir.path(), &cfg).expect("suite runs");
    assert!(dir.path().join("acceptance.json").exists());
    println!("\nacceptance suite: {} trials, seed {}", cfg.trials, cfg.seed);
    for c in &manifest.criteria {
        println!("{}", line(c));
    }
    let mut ok = true;
    for c in manifest.criteria.iter().filter(|c| !c.passed) {
        if EXPECTED_FAILURES.contains(&c.id) {
            println!("criterion {} failed as expected", c.id);
        } else {
            println!("criterion {} failed unexpectedly", c.id);
            ok = false;
        }
    }

    let degenerate = run_criterion(6, &AcceptanceConfig { rounding: RoundingRule::Degenerate, ..cfg });
    println!("fault injection (degenerate rounding): {}", line(&degenerate));
    if degenerate.passed {
        println!("degenerate rounding was not caught");
        ok = false;
    }

    println!("acceptance: {}", if ok { "ok" } else { "FAILED" });
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
