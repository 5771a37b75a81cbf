use std::path::PathBuf;
use std::time::Instant;

use debayes::data::{load_csv, Dataset};
use debayes::debias::{run_algorithm1, DebiasedDrawSet};
use debayes::draws::{PosteriorDrawSet, PriorTag};
use debayes::horseshoe::{sample_horseshoe, HorseshoeConfig};
use debayes::precision::{self, PrecisionMethod};
use debayes::rng::{derive_seed, tag};
use debayes::vb::{fit_vb, NoiseVariance, SpikeSlabPrior, VbConfig};
use serde::Serialize;
use serde_json::json;

use crate::config::Resolver;
use crate::{AnalyzeArgs, CliError};

const KEYS: &[&str] = &[
    "input",
    "response",
    "prior",
    "precision",
    "draws",
    "level",
    "seed",
    "standardize",
    "output",
    "write_draws",
    "precision_scale",
    "symmetrize",
    "slab_lambda",
    "u",
    "noise_variance",
    "burn_in",
    "sigma_scale",
];

/// Fewer draws than this cannot support tail quantiles.
pub const MIN_DRAWS: usize = 100;

#[derive(Debug, Clone, Serialize)]
pub struct IntervalRecord {
    pub index: usize,
    pub name: String,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub raw_mean: f64,
    pub raw_lower: f64,
    pub raw_upper: f64,
}

struct Settings {
    input: PathBuf,
    response: String,
    prior: PriorTag,
    precision: PrecisionMethod,
    draws: usize,
    level: f64,
    seed: u64,
    standardize: bool,
    output: PathBuf,
    write_draws: bool,
    precision_scale: f64,
    symmetrize: bool,
    spike_slab: SpikeSlabPrior,
    horseshoe: HorseshoeConfig,
}

fn resolve(args: AnalyzeArgs, r: &mut Resolver) -> Result<Settings, CliError> {
    let input: PathBuf = crate::required(r.get_opt("input", args.input)?, "input")?;
    let response: String = r.get("response", args.response, "y".to_string())?;
    let prior: String = r.get("prior", args.prior, "spike_slab_vb".to_string())?;
    let precision: String = r.get("precision", args.precision, "nodewise".to_string())?;
    let draws = r.get("draws", args.draws, 8_000usize)?;
    let level = r.get("level", args.level, 0.95)?;
    let seed = r.get("seed", args.seed, 0u64)?;
    let standardize = r.switch("standardize", args.standardize)?;
    let output: PathBuf = crate::required(r.get_opt("output", args.common.output)?, "output")?;
    let write_draws = r.switch("write_draws", args.write_draws)?;
    let precision_scale = r.get("precision_scale", args.precision_scale, 1.0)?;
    let symmetrize = r.switch("symmetrize", args.symmetrize)?;
    let slab_lambda = r.get("slab_lambda", args.slab_lambda, 1.0)?;
    let u = r.get("u", args.u, 1.0)?;
    let noise: String = r.get("noise_variance", args.noise_variance, "lasso".to_string())?;
    let burn_in = r.get("burn_in", args.burn_in, 8_000usize)?;
    let sigma_scale = r.get("sigma_scale", args.sigma_scale, 10.0)?;

    if draws < MIN_DRAWS {
        return Err(CliError::Config(format!(
            "interval output needs at least {MIN_DRAWS} draws, got {draws}"
        )));
    }
    crate::check_level(level)?;
    let noise_variance = match noise.as_str() {
        "lasso" => NoiseVariance::LassoPlugIn,
        s => NoiseVariance::Fixed(
            s.parse()
                .map_err(|_| CliError::Config(format!("noise_variance must be a number or \"lasso\", got {s:?}")))?,
        ),
    };
    Ok(Settings {
        input,
        response,
        prior: crate::parse(&prior)?,
        precision: crate::parse(&precision)?,
        draws,
        level,
        seed,
        standardize,
        output,
        write_draws,
        precision_scale,
        symmetrize,
        spike_slab: SpikeSlabPrior {
            slab_lambda,
            u,
            noise_variance,
        },
        horseshoe: HorseshoeConfig {
            n_draws: draws,
            burn_in,
            seed,
            sigma_scale,
            fixed_sigma: None,
        },
    })
}

struct Results {
    data: Dataset,
    raw: PosteriorDrawSet,
    debiased: DebiasedDrawSet,
    precision: precision::PrecisionEstimate,
    vb_state: Option<debayes::vb::VariationalState>,
    timings: serde_json::Map<String, serde_json::Value>,
}

fn compute(s: &Settings) -> Result<Results, CliError> {
    let mut timings = serde_json::Map::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut serde_json::Map<String, serde_json::Value>| {
        timings.insert(name.to_string(), json!(clock.elapsed().as_secs_f64()));
        clock = Instant::now();
    };

    let data = load_csv(&s.input, s.response.as_str(), s.standardize)?;
    lap("load_seconds", &mut timings);

    let (raw, vb_state) = match s.prior {
        PriorTag::SpikeSlabVb => {
            let state = fit_vb(&data, &s.spike_slab, &VbConfig::default())?;
            if !state.converged {
                log::warn!("variational fit stopped after {} sweeps without converging", state.sweeps);
            }
            (state.sample(s.draws, s.seed), Some(state))
        }
        PriorTag::HorseshoeMcmc => (sample_horseshoe(&data, &s.horseshoe)?, None),
    };
    lap("posterior_seconds", &mut timings);

    let theta = precision::estimate(&data, s.precision, s.precision_scale, s.symmetrize)?;
    lap("precision_seconds", &mut timings);

    let debiased = run_algorithm1(&data, &raw, &theta, derive_seed(s.seed, &[tag::WEIGHTS]))?;
    lap("debias_seconds", &mut timings);

    Ok(Results {
        data,
        raw,
        debiased,
        precision: theta,
        vb_state,
        timings,
    })
}

fn interval_table(s: &Settings, res: &Results) -> Result<Vec<IntervalRecord>, CliError> {
    let alpha = 1.0 - s.level;
    let raw_means = res.raw.column_means();
    let means = res.debiased.column_means();
    let scale = |j: usize, v: f64| match res.data.standardization() {
        Some(st) => st.to_original_scale(j, v),
        None => v,
    };
    (0..res.data.p())
        .map(|j| {
            let ci = res.debiased.credible_interval(j, alpha)?;
            let raw = res.raw.credible_interval(j, alpha)?;
            Ok(IntervalRecord {
                index: j,
                name: res.data.column_name(j),
                mean: scale(j, means[j]),
                lower: scale(j, ci.lower),
                upper: scale(j, ci.upper),
                level: s.level,
                raw_mean: scale(j, raw_means[j]),
                raw_lower: scale(j, raw.lower),
                raw_upper: scale(j, raw.upper),
            })
        })
        .collect()
}

pub fn run(args: AnalyzeArgs) -> Result<(), CliError> {
    let mut r = Resolver::load(args.common.config.as_deref(), "analyze", KEYS)?;
    let threads_flag = args.common.threads;
    let s = resolve(args, &mut r)?;
    let threads = r.threads(threads_flag)?;
    if !s.input.exists() {
        return Err(CliError::Data(format!("input file {} does not exist", s.input.display())));
    }
    r.record("input", &crate::absolute(&s.input));

    let started = Instant::now();
    let res = crate::pool(threads)?.install(|| compute(&s))?;
    let table = interval_table(&s, &res)?;

    crate::prepare_output(&s.output)?;
    let out = |name: &str| s.output.join(name);
    let names: Vec<String> = (0..res.data.p()).map(|j| res.data.column_name(j)).collect();

    let mut w = csv_writer(&out("intervals.csv"))?;
    for row in &table {
        w.serialize(row).map_err(|e| CliError::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    crate::write_json(&out("intervals.json"), &table)?;
    crate::write_json(&out("precision.json"), &res.precision.summary())?;
    if let Some(state) = &res.vb_state {
        state.write_json(out("vb_state.json"))?;
    }
    if let Some(st) = res.data.standardization() {
        st.write_json(out("standardization.json"))?;
    }
    if s.write_draws {
        res.raw.write_csv(out("draws_raw.csv"), &names)?;
        res.debiased.write_csv(out("draws_debiased.csv"), &names)?;
    }

    let mut timings = res.timings;
    timings.insert("total_seconds".into(), json!(started.elapsed().as_secs_f64()));
    timings.insert("threads".into(), json!(threads));
    crate::write_json(&out("timings.json"), &timings)?;
    crate::write_manifest(&s.output, r.manifest("analyze"))?;
    Ok(())
}

pub(crate) fn csv_writer(path: &std::path::Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}
