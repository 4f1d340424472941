//! The quick self-check battery, printed as a summary per stage.

use std::collections::BTreeMap;

use cloud_exponents::{run_validation, Level};

fn main() {
    let report = run_validation(Level::Quick, &[]);
    let mut stages: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for c in &report.checks {
        let e = stages.entry(&c.stage).or_default();
        e.0 += c.passed as usize;
        e.1 += 1;
    }
    for (stage, (ok, total)) in stages {
        println!("{stage:<16} {ok}/{total}");
    }
    for f in report.failures() {
        println!(
            "FAIL {} {}: {} vs {} (tol {})",
            f.stage, f.name, f.observed, f.expected, f.tolerance
        );
    }
}
