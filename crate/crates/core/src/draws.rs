//! Matrices of posterior draws.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::CredibleInterval;
use crate::error::{Error, Result};
use crate::stats;

/// Which initial posterior produced a draw set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorTag {
    SpikeSlabVb,
    HorseshoeMcmc,
}

impl std::str::FromStr for PriorTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spike_slab_vb" | "spike_slab" | "vb" => Ok(Self::SpikeSlabVb),
            "horseshoe" | "horseshoe_mcmc" => Ok(Self::HorseshoeMcmc),
            other => Err(Error::invalid(format!(
                "unknown prior {other:?} (expected spike_slab_vb or horseshoe)"
            ))),
        }
    }
}

/// `B × p` draws from an initial (not yet debiased) posterior.
#[derive(Debug, Clone)]
pub struct PosteriorDrawSet {
    pub draws: DMatrix<f64>,
    pub prior_tag: PriorTag,
    pub debiased: bool,
    pub seed: u64,
}

impl PosteriorDrawSet {
    pub fn new(draws: DMatrix<f64>, prior_tag: PriorTag, seed: u64) -> Result<Self> {
        if draws.nrows() == 0 {
            return Err(Error::invalid("a draw set needs at least one draw"));
        }
        if draws.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("draw set contains non-finite entries"));
        }
        Ok(Self {
            draws,
            prior_tag,
            debiased: false,
            seed,
        })
    }

    pub fn n_draws(&self) -> usize {
        self.draws.nrows()
    }

    pub fn p(&self) -> usize {
        self.draws.ncols()
    }

    pub fn column_means(&self) -> DVector<f64> {
        column_means(&self.draws)
    }

    pub fn credible_interval(&self, j: usize, alpha: f64) -> Result<CredibleInterval> {
        equal_tailed_interval(&self.draws, j, alpha)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, names: &[String]) -> Result<()> {
        write_draws_csv(&self.draws, path, names)
    }
}

pub(crate) fn column_means(draws: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(draws.ncols(), draws.column_iter().map(|c| c.mean()))
}

/// `[ĉ(α/2), ĉ(1 − α/2)]` of column `j`.
pub(crate) fn equal_tailed_interval(draws: &DMatrix<f64>, j: usize, alpha: f64) -> Result<CredibleInterval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if j >= draws.ncols() {
        return Err(Error::invalid(format!("coefficient index {j} out of range (p = {})", draws.ncols())));
    }
    if draws.nrows() < 2 {
        return Err(Error::invalid("credible intervals need at least 2 draws"));
    }
    let mut col: Vec<f64> = draws.column(j).iter().copied().collect();
    col.sort_by(f64::total_cmp);
    Ok(CredibleInterval {
        lower: stats::quantile_sorted(&col, alpha / 2.0),
        upper: stats::quantile_sorted(&col, 1.0 - alpha / 2.0),
        level: 1.0 - alpha,
        coefficient_index: j,
    })
}

pub(crate) fn write_draws_csv(draws: &DMatrix<f64>, path: impl AsRef<Path>, names: &[String]) -> Result<()> {
    if names.len() != draws.ncols() {
        return Err(Error::DimensionMismatch {
            what: "column names for draw export",
            expected: draws.ncols(),
            got: names.len(),
        });
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(names)?;
    for row in draws.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
