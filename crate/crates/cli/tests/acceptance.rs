//! All fifteen acceptance criteria at their default tolerances.
//!
//! Run with `cargo test -p hllk-cli --test acceptance -- --nocapture` to see
//! the per-criterion lines.

use hllk_cli::config::RunConfig;
use hllk_cli::report::Check;
use hllk_cli::suites::{criterion_def, run_criterion, CHECKS, CRITERIA};

fn describe(c: &Check) -> String {
    let op = match c.bound {
        hllk_cli::report::Bound::Upper => "<=",
        hllk_cli::report::Bound::Lower => ">=",
    };
    match (&c.value, &c.error) {
        (Some(v), _) => format!("{}={v:.3e} {op} {:e}", c.name, c.tolerance),
        (None, Some(e)) => format!("{}: error: {e}", c.name),
        (None, None) => format!("{}: no value", c.name),
    }
}

#[test]
fn acceptance_criteria() {
    let config = RunConfig::default();
    let mut failed = Vec::new();
    for def in &CRITERIA {
        let outcome = run_criterion(def.id, &config);
        let expected = CHECKS.iter().filter(|c| c.criterion == def.id).count();
        assert_eq!(outcome.checks.len(), expected, "criterion {} produced an incomplete record set", def.id);
        let pass = outcome.passed();
        let details: Vec<String> = outcome.checks.iter().map(describe).collect();
        println!(
            "[{}] criterion {:>2} {}: {}",
            if pass { "PASS" } else { "FAIL" },
            def.id,
            criterion_def(def.id).name,
            details.join("; ")
        );
        for info in &outcome.informational {
            println!("       info {}: {}", info.name, info.data);
        }
        if !pass {
            failed.push(def.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
