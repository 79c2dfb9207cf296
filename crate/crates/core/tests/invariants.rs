use bpre::verify::{corrupted_shape, run_suite, run_suite_with, Level};

#[test]
fn fast_suite_passes() {
    let checks = run_suite(Level::Fast);
    for c in &checks {
        println!(
            "{:<5} {:<40} {:>7.2}s  {}",
            if c.passed { "pass" } else { "FAIL" },
            c.name,
            c.seconds,
            c.detail
        );
    }
    assert!(checks.iter().all(|c| c.passed));
}

#[test]
fn corrupted_shape_is_caught() {
    let checks = run_suite_with(Level::Fast, corrupted_shape);
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    assert_eq!(failed, ["survival series identity"]);
}
