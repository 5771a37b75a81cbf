use std::path::PathBuf;
use std::time::Instant;

use debayes::draws::PriorTag;
use debayes::sim::{emit_report, format_summary, run_study, Method, ReportFormat, ScenarioId, SimulationScenario, StudyConfig};
use serde_json::json;

use crate::config::Resolver;
use crate::{CliError, SimulateArgs};

const KEYS: &[&str] = &[
    "scenario", "n", "p", "reps", "draws", "level", "seed", "methods", "prior", "formats", "burn_in", "output",
];

fn list<T: std::str::FromStr<Err = debayes::Error>>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    let items: Vec<T> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(crate::parse)
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(CliError::Config(format!("{what} list is empty")));
    }
    Ok(items)
}

pub fn run(args: SimulateArgs) -> Result<(), CliError> {
    let mut r = Resolver::load(args.common.config.as_deref(), "simulate", KEYS)?;
    let scenario: String = crate::required(r.get_opt("scenario", args.scenario)?, "scenario")?;
    let id: ScenarioId = crate::parse(&scenario)?;
    r.record("scenario", &id.to_string());
    let n = r.get("n", args.n, 100usize)?;
    let p = r.get("p", args.p, 50usize)?;
    let reps = r.get("reps", args.reps, 200usize)?;
    let draws = r.get("draws", args.draws, 8_000usize)?;
    let level = r.get("level", args.level, 0.95)?;
    let seed = r.get("seed", args.seed, 0u64)?;
    let methods: String = r.get("methods", args.methods, "bayes,debiased_bayes,debiased_lasso".to_string())?;
    let prior: String = r.get("prior", args.prior, "spike_slab_vb".to_string())?;
    let formats: String = r.get("formats", args.formats, "csv,json,plotdata".to_string())?;
    let burn_in = r.get("burn_in", args.burn_in, 8_000usize)?;
    let output: PathBuf = crate::required(r.get_opt("output", args.common.output)?, "output")?;
    let threads = r.threads(args.common.threads)?;

    crate::check_level(level)?;
    if reps == 0 {
        return Err(CliError::Config("reps must be >= 1".into()));
    }
    if draws < crate::analyze::MIN_DRAWS {
        return Err(CliError::Config(format!(
            "interval output needs at least {} draws, got {draws}",
            crate::analyze::MIN_DRAWS
        )));
    }
    let methods: Vec<Method> = list(&methods, "methods")?;
    let formats: Vec<ReportFormat> = list(&formats, "formats")?;
    let prior: PriorTag = crate::parse(&prior)?;

    let mut cfg = StudyConfig {
        replications: reps,
        n_draws: draws,
        level,
        seed,
        methods,
        prior,
        parallelism: Some(threads),
        ..StudyConfig::default()
    };
    cfg.horseshoe.burn_in = burn_in;

    let started = Instant::now();
    let tables = run_study(&SimulationScenario::new(id, n, p), &cfg)?;
    let elapsed = started.elapsed().as_secs_f64();

    crate::prepare_output(&output)?;
    for f in &formats {
        emit_report(&tables, *f, output.join(format!("report.{}", f.extension())))?;
    }
    crate::write_json(
        &output.join("timings.json"),
        &json!({ "total_seconds": elapsed, "threads": threads }),
    )?;
    crate::write_manifest(&output, r.manifest("simulate"))?;
    if !args.quiet {
        print!("{}", format_summary(&tables));
    }
    Ok(())
}
