//! Runs without the libtest harness so the per-criterion lines are always shown.

use std::process::ExitCode;

use shadowtrace::acceptance::{run_all, CRITERIA};

fn main() -> ExitCode {
    let outcomes = run_all();
    assert_eq!(outcomes.len(), CRITERIA.len());
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    println!("{}/{} criteria passed", outcomes.len() - failed.len(), outcomes.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
