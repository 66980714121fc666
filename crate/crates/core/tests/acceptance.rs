//! One PASS/FAIL line per acceptance criterion. Failing check lines and notes
//! follow each criterion. Exits nonzero if any criterion fails.

use cfx::validation::{run_suite, SuiteOptions};

fn main() {
    let suite = run_suite(SuiteOptions::default());
    println!();
    for c in &suite {
        println!("{}", c.summary_line());
    }
    println!();
    for c in &suite {
        let failures = c.failures();
        if failures.is_empty() && c.notes.is_empty() {
            continue;
        }
        println!("[{}] {}", c.id, c.title);
        for f in failures {
            let tol = f.tolerance.map(|t| format!(" (tol {t:e})")).unwrap_or_default();
            println!("  FAIL {}: expected {} got {}{tol}", f.check, f.expected, f.got);
        }
        for n in &c.notes {
            println!("  note {n}");
        }
    }
    let failed = suite.iter().filter(|c| !c.pass()).count();
    println!("\nacceptance: {} passed, {failed} failed", suite.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
