//! Acceptance criteria, one line each. Runs without the libtest harness so the
//! lines are always printed, and the criteria run back to back so their
//! timings do not compete with each other.

use std::process::ExitCode;

use orlicz_core::acceptance::{run_criterion, Suite};
use orlicz_core::Exec;

const SEED: u64 = 7;

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for id in Suite::All.ids() {
        let outcome = run_criterion(id, SEED, Exec::default());
        println!("{}", outcome.line());
        if !outcome.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
