//! Runs every acceptance criterion of the verification battery and prints
//! one PASS/FAIL line per criterion. Built without the libtest harness so the
//! lines always show up in `cargo test` output.

use std::process::ExitCode;

use iapd::battery::{run_criterion, BatteryOptions, CRITERIA};

fn main() -> ExitCode {
    let opts = BatteryOptions::default();
    let mut failed = Vec::new();
    for c in CRITERIA {
        match run_criterion(c, &opts) {
            Ok(report) => {
                println!("{} ({:.2}s)", report.line(), report.seconds);
                if !report.passed {
                    failed.push(c.name);
                }
            }
            Err(e) => {
                println!("FAIL [{:>2}] {:<20} error: {e}", c.id, c.name);
                failed.push(c.name);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: {} of {} criteria passed", CRITERIA.len(), CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed {failed:?}");
        ExitCode::FAILURE
    }
}
