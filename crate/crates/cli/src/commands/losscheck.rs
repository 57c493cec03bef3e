use palletmap_core::losses::gradcheck::{builtin_checks, run_check, GradCheckReport, FD_STEP, MAX_REL_ERR};
use serde::Serialize;

use crate::config::RunConfig;
use crate::errors::usage;
use crate::inputs::print_json;
use crate::Outcome;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Random samples per loss.
    #[arg(long)]
    samples: Option<usize>,

    /// Loss to check; repeat for several. Defaults to all registered.
    #[arg(long = "loss")]
    losses: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Report {
    seed: u64,
    step: f64,
    tolerance: f64,
    checks: Vec<GradCheckReport>,
    pass: bool,
}

pub fn run(args: Args, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let samples = args.samples.unwrap_or(cfg.losscheck_samples);
    if samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    let registry = builtin_checks();
    let names: Vec<String> = if args.losses.is_empty() {
        registry.names().into_iter().map(String::from).collect()
    } else {
        args.losses
    };
    let mut checks = Vec::with_capacity(names.len());
    for name in &names {
        let make = registry.get(name).map_err(|e| usage(e.to_string()))?;
        checks.push(run_check(make().as_ref(), samples, cfg.seed));
    }
    let pass = checks.iter().all(|c| c.pass);
    print_json(&Report { seed: cfg.seed, step: FD_STEP, tolerance: MAX_REL_ERR, checks, pass })?;
    Ok(if pass { Outcome::Clean } else { Outcome::Findings })
}
