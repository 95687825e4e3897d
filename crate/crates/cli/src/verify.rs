use std::process::ExitCode;

use anyhow::Result;
use iapd::battery::{criterion_names, run_battery, BatteryOptions, CriterionReport, Fault};
use serde::Serialize;

use crate::output::write_json;
use crate::VerifyArgs;

#[derive(Serialize)]
struct Verdict<'a> {
    passed: bool,
    seed: u64,
    fault: Option<Fault>,
    failed: Vec<&'static str>,
    criteria: &'a [CriterionReport],
}

pub fn run(args: &VerifyArgs) -> Result<ExitCode> {
    if args.list {
        for name in criterion_names() {
            println!("{name}");
        }
        return Ok(ExitCode::SUCCESS);
    }
    let opts = BatteryOptions {
        seed: args.seed,
        fault: args.inject_fault.as_deref().map(|_| Fault::Decrease),
    };
    let reports = run_battery(&opts, &args.only)?;
    for r in &reports {
        println!("{} ({:.2}s)", r.line(), r.seconds);
    }
    let failed: Vec<&'static str> = reports.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    let verdict = Verdict {
        passed: failed.is_empty(),
        seed: opts.seed,
        fault: opts.fault,
        failed: failed.clone(),
        criteria: &reports,
    };
    write_json(&args.out.dir().join("verify.json"), &verdict)?;
    if let Some(path) = &args.out.json_report {
        write_json(path, &verdict)?;
    }
    if failed.is_empty() {
        println!("all {} criteria passed", reports.len());
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("failed: {}", failed.join(", "));
        Ok(ExitCode::FAILURE)
    }
}
