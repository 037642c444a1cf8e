//! Full acceptance battery. Each criterion prints one pass/fail line; the
//! test fails if any criterion does.

use sympb_core::verify::run_all;

#[test]
fn acceptance() {
    let results = run_all(None);
    let mut failed = Vec::new();
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2} {:<28} {}", r.id, r.name, r.detail);
        if !r.passed {
            failed.push(r.id);
        }
    }
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
