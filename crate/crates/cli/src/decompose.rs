use std::process::ExitCode;

use anyhow::{Context, Result};
use iapd::solver::run as solve;

use crate::output::{exit_code, write_json, write_solution, Summary};
use crate::DecomposeArgs;

pub fn run(args: &DecomposeArgs) -> Result<ExitCode> {
    let a = iapd::io::read_tensor(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let min_dim = *a.dims().iter().min().expect("tensor has a mode");
    if args.rank == 0 || args.rank > min_dim {
        anyhow::bail!("rank {} outside 1..={min_dim} for dims {:?}", args.rank, a.dims());
    }
    let sol = solve(&a, args.rank, &args.solver.config())?;
    let summary = Summary::new(&sol);
    let dir = &args.out.dir();
    write_solution(dir, &sol)?;
    write_json(&dir.join("summary.json"), &summary)?;
    if let Some(path) = &args.out.json_report {
        write_json(path, &summary)?;
    }
    println!(
        "rank {} -> {}  f={:.12e}  residual={:.6e}  sweeps={}  {:?}",
        summary.initial_rank, summary.rank, summary.f, summary.residual, summary.sweeps, summary.termination
    );
    println!("lambda: {:?}", summary.lambda);
    println!("wrote {}", dir.display());
    Ok(exit_code(sol.termination))
}
