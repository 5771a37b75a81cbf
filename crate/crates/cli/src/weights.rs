use std::path::PathBuf;

use debayes::debias::draw_weights;
use debayes::stats::{ks_p_value, ks_statistic};
use serde::Serialize;

use crate::config::Resolver;
use crate::{CliError, WeightsArgs};

const KEYS: &[&str] = &["n", "draws", "seed", "write_weights", "output"];

/// Diagnostics for a batch of Dirichlet(1, ..., 1) weight vectors.
#[derive(Debug, Clone, Serialize)]
pub struct WeightReport {
    pub n: usize,
    pub draws: usize,
    pub seed: u64,
    /// KS distance of the first coordinate against its Beta(1, n - 1) marginal.
    pub ks_statistic: Option<f64>,
    pub ks_p_value: Option<f64>,
    pub min_weight: f64,
    /// Largest `|Σ w_i - 1|` over all vectors.
    pub max_abs_sum_error: f64,
}

pub fn run(args: WeightsArgs) -> Result<(), CliError> {
    let mut r = Resolver::load(args.common.config.as_deref(), "weights", KEYS)?;
    let n = crate::required(r.get_opt("n", args.n)?, "n")?;
    let draws = r.get("draws", args.draws, 10_000usize)?;
    let seed = r.get("seed", args.seed, 0u64)?;
    let write_weights = r.switch("write_weights", args.write_weights)?;
    let output: PathBuf = crate::required(r.get_opt("output", args.common.output)?, "output")?;
    if n == 0 || draws == 0 {
        return Err(CliError::Config("n and draws must be >= 1".into()));
    }

    let weights = draw_weights(n, draws, seed)?;
    let first: Vec<f64> = weights.iter().map(|w| w.as_slice()[0]).collect();
    let (ks, pv) = if n > 1 {
        let shape = (n - 1) as f64;
        let d = ks_statistic(&first, |x| 1.0 - (1.0 - x.clamp(0.0, 1.0)).powf(shape));
        (Some(d), Some(ks_p_value(d, draws)))
    } else {
        (None, None)
    };
    let report = WeightReport {
        n,
        draws,
        seed,
        ks_statistic: ks,
        ks_p_value: pv,
        min_weight: weights
            .iter()
            .flat_map(|w| w.as_slice().iter().copied())
            .fold(f64::INFINITY, f64::min),
        max_abs_sum_error: weights
            .iter()
            .map(|w| (w.as_slice().iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max),
    };

    crate::prepare_output(&output)?;
    crate::write_json(&output.join("weights.json"), &report)?;
    if write_weights {
        let mut w = crate::analyze::csv_writer(&output.join("weights.csv"))?;
        let err = |e: csv::Error| CliError::Data(e.to_string());
        w.write_record((0..n).map(|i| format!("w{i}"))).map_err(err)?;
        for v in &weights {
            w.write_record(v.as_slice().iter().map(|x| format!("{x:e}"))).map_err(err)?;
        }
        w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    }
    crate::write_manifest(&output, r.manifest("weights"))?;
    Ok(())
}
