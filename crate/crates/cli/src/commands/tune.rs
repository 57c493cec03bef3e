use std::path::PathBuf;

use palletmap_core::tuner::{builtin_objectives, run_study, ParamSpace};

use crate::config::RunConfig;
use crate::errors::{read_text, usage, write_bytes};
use crate::Outcome;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Parameter space JSON; defaults to the objective's own space.
    #[arg(long)]
    space: Option<PathBuf>,

    /// Built-in objective: `quadratic`, `constant` or `association`.
    #[arg(long, default_value = "quadratic", env = "PALLETMAP_OBJECTIVE")]
    objective: String,

    #[arg(long)]
    trials: Option<usize>,

    /// Write the JSON-lines history here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: Args, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let mut study_cfg = cfg.study.clone();
    if let Some(n) = args.trials {
        study_cfg.n_trials = n;
        study_cfg.n_startup_trials = study_cfg.n_startup_trials.min(n);
    }
    study_cfg.validate().map_err(|e| usage(e.to_string()))?;
    let registry = builtin_objectives();
    let make = registry.get(&args.objective).map_err(|e| usage(e.to_string()))?;
    let objective = make(study_cfg.seed);
    let space = match &args.space {
        Some(path) => serde_json::from_str::<ParamSpace>(&read_text(path)?)
            .map_err(|e| usage(format!("space {}: {e}", path.display())))?,
        None => objective.default_space(),
    };
    space.validate().map_err(|e| usage(e.to_string()))?;
    let study = run_study(&space, &study_cfg, objective.as_ref())?;
    let history = study.to_jsonl();
    match &args.out {
        Some(path) => write_bytes(path, history.as_bytes())?,
        None => print!("{history}"),
    }
    let best = study.best();
    eprintln!(
        "best trial {} value {} params {}",
        best.id,
        best.value.unwrap_or(f64::NAN),
        serde_json::to_string(&best.params).expect("params serialize")
    );
    Ok(Outcome::Clean)
}
