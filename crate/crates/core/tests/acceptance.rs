//! Runs the eight acceptance criteria and prints one line per criterion.

use std::process::ExitCode;

fn main() -> ExitCode {
    let seed = std::env::var("DSER_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(42);
    let results = dser::checks::run_all(seed);
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<_> = results.iter().filter(|r| !r.passed).collect();
    for r in &failed {
        println!("criterion {} detail: {}", r.id, r.detail);
    }
    println!("acceptance: {}/{} criteria passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
