//! Runs every acceptance criterion at full strength and prints one line each.

use mpir::suite::{run_criterion, SuiteOptions, CRITERIA};

#[test]
fn acceptance() {
    let opts = SuiteOptions::default();
    let mut failed = Vec::new();
    for c in CRITERIA {
        let start = std::time::Instant::now();
        let r = run_criterion(c, &opts);
        println!("{} [{:.1}s]", r.line(), start.elapsed().as_secs_f64());
        if !r.passed {
            failed.push(c.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
